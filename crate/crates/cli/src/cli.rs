use std::io::{BufRead, Write};
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::artifacts::{to_json, write_atomic, write_jsonl, Provenance, SampleRecord};
use crate::commands::{self as cmd, inputs, writeln_out};
use crate::config::ConfigArgs;
use crate::error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "g2t", version, about = "Graph-to-tree molecule encoding, constrained generation and evaluation")]
pub struct Cli {
    #[command(flatten)]
    pub config: ConfigArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a SMILES corpus, parse it and write canonical tree encodings.
    Ingest {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Where to write the accept/reject report.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// SMILES → tree text (one per input line).
    Encode {
        #[arg(long)]
        smiles: Option<String>,
        /// Use a seeded random root and child order instead of the canonical one.
        #[arg(long)]
        root_seed: Option<u64>,
    },
    /// Tree text → SMILES (one tree per input line).
    Decode {
        #[arg(long)]
        tree: Option<String>,
    },
    /// Check encode/decode fidelity over a SMILES corpus in both formats.
    Roundtrip {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        limit: Option<usize>,
    },
    /// Fit the n-gram proposer on an encoded corpus.
    Train {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Sample molecules from a model, prompted with corpus fragments.
    Generate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Score a samples file.
    Evaluate {
        #[arg(long)]
        samples: PathBuf,
        /// Encoded training corpus (novelty).
        #[arg(long)]
        train: PathBuf,
        /// Encoded reference corpus (scaffold and Tanimoto); defaults to --train.
        #[arg(long)]
        reference: Option<PathBuf>,
        #[arg(long)]
        output: PathBuf,
    },
    /// Constrained vs schema-only vs unconstrained, trained vs uniform proposer.
    Ablate {
        #[arg(long)]
        corpus: PathBuf,
        /// Trained model; fitted from --corpus when omitted.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Print the allowed next tokens after a tree-text prefix.
    Mask {
        #[arg(long)]
        prefix: Option<String>,
    },
    /// ingest → train → generate → evaluate into one directory.
    Run {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

fn dataset_of(command: &Command) -> Option<&std::path::Path> {
    match command {
        Command::Ingest { input, .. } | Command::Roundtrip { input, .. } | Command::Run { input, .. } => Some(input),
        _ => None,
    }
}

pub fn run(cli: &Cli, stdin: &mut dyn BufRead, stdout: &mut dyn Write) -> Result<()> {
    let cfg = cli.config.resolve(dataset_of(&cli.command))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.config.jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::config(format!("--jobs: {e}")))?;
    let input = if needs_stdin(&cli.command) {
        let mut s = String::new();
        stdin.read_to_string(&mut s).map_err(|e| CliError::io("<stdin>", e))?;
        s
    } else {
        String::new()
    };
    let mut buffer = Vec::new();
    let result = pool.install(|| dispatch(&cli.command, &cfg, &input, &mut buffer));
    stdout.write_all(&buffer).map_err(|e| CliError::io("<stdout>", e))?;
    result
}

fn needs_stdin(command: &Command) -> bool {
    matches!(
        command,
        Command::Encode { smiles: None, .. } | Command::Decode { tree: None } | Command::Mask { prefix: None }
    )
}

fn dispatch(command: &Command, cfg: &crate::config::RunConfig, stdin: &str, stdout: &mut Vec<u8>) -> Result<()> {
    match command {
        Command::Ingest { input, output, report } => {
            let (records, summary) = cmd::ingest(input, cfg)?;
            let prov = Provenance::new("ingest", cfg);
            write_jsonl(output, &prov, &records)?;
            if let Some(path) = report {
                cmd::write_document(path, &prov, "ingest", &summary)?;
            }
            writeln_out(stdout, &to_json(&summary)?)
        }
        Command::Encode { smiles, root_seed } => {
            for s in inputs(smiles.as_deref(), stdin) {
                writeln_out(stdout, &cmd::encode_smiles(&s, *root_seed, cfg.format)?)?;
            }
            Ok(())
        }
        Command::Decode { tree } => {
            for t in inputs(tree.as_deref(), stdin) {
                writeln_out(stdout, &cmd::decode_tree(&t, cfg.format)?)?;
            }
            Ok(())
        }
        Command::Roundtrip { input, limit } => {
            let summary = cmd::roundtrip(input, *limit)?;
            writeln_out(stdout, &to_json(&summary)?)?;
            if summary.failures.is_empty() {
                Ok(())
            } else {
                Err(CliError::Internal(format!("{} molecules failed the roundtrip", summary.failures.len())))
            }
        }
        Command::Train { corpus, output } => {
            let records = cmd::read_corpus(corpus)?;
            let model = cmd::train(&records, cfg)?;
            write_atomic(output, cmd::model_json(&model, &Provenance::new("train", cfg))?.as_bytes())?;
            writeln_out(
                stdout,
                &format!(
                    "trained order-{} model on {} sequences ({} contexts)",
                    cfg.order,
                    records.len(),
                    model.context_count()
                ),
            )
        }
        Command::Generate { model, corpus, output } => {
            let model = cmd::load_model(model)?;
            let graphs = cmd::corpus_graphs(&cmd::read_corpus(corpus)?)?;
            let items = cmd::generate(&model, &graphs, cfg)?;
            let records: Vec<SampleRecord> = cmd::sample_records(&items);
            write_jsonl(output, &Provenance::new("generate", cfg), &records)?;
            writeln_out(stdout, &to_json(&cmd::status_counts(items.iter().map(|i| i.status)))?)
        }
        Command::Evaluate { samples, train, reference, output } => {
            let (_, samples): (_, Vec<SampleRecord>) = crate::artifacts::read_jsonl(samples)?;
            let train_graphs = cmd::corpus_graphs(&cmd::read_corpus(train)?)?;
            let reference_graphs = match reference {
                Some(path) => cmd::corpus_graphs(&cmd::read_corpus(path)?)?,
                None => train_graphs.clone(),
            };
            let report = cmd::evaluate(&samples, &train_graphs, &reference_graphs)?;
            cmd::write_document(output, &Provenance::new("evaluate", cfg), "metrics", &report)?;
            writeln_out(stdout, &report.to_json())
        }
        Command::Ablate { corpus, model, out_dir } => {
            let records = cmd::read_corpus(corpus)?;
            let model = match model {
                Some(path) => cmd::load_model(path)?,
                None => cmd::train(&records, cfg)?,
            };
            let graphs = cmd::corpus_graphs(&records)?;
            let summary = cmd::ablate(&model, &graphs, cfg, out_dir)?;
            for arm in &summary.arms {
                writeln_out(
                    stdout,
                    &format!(
                        "{:<22} validity {}",
                        arm.arm,
                        arm.metrics.validity.map_or("-".into(), |v| format!("{v:.4}"))
                    ),
                )?;
            }
            writeln_out(stdout, &format!("validity gap (constrained - unconstrained): {:.4}", summary.validity_gap))
        }
        Command::Mask { prefix } => {
            let prefix = match prefix {
                Some(p) => p.clone(),
                None => stdin.trim_end_matches(['\n', '\r']).to_string(),
            };
            writeln_out(stdout, &cmd::mask(&prefix, cfg)?)
        }
        Command::Run { input, out_dir } => {
            let (out, report) = cmd::run_pipeline(input, out_dir, cfg)?;
            writeln_out(stdout, &report.to_json())?;
            writeln_out(stdout, &format!("artifacts written to {}", out.report.parent().unwrap_or(out_dir).display()))
        }
    }
}
