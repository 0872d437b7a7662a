use std::collections::{BTreeMap, HashSet};
use std::io::Write;
use std::path::{Path, PathBuf};

use g2t_core::constrain::{mask_for_prefix, tokenize, ConstraintMode, Constraints};
use g2t_core::genmodel::{
    generate_item, train_ngram, GeneratedItem, GenerationConfig, NGramModel, Proposer, SampleStatus, UniformProposer,
};
use g2t_core::metrics::{evaluate_report, round4, MetricsReport, StatusCounts};
use g2t_core::{
    canonical_key, graph_to_tree, parse_smiles, parse_tree, serialize_tree, tree_to_graph, write_smiles, MolGraph,
    RootPolicy, TreeFormat, TreeNode, TreeText, ValenceTable,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::artifacts::{read_jsonl, to_json, write_atomic, write_jsonl, CorpusRecord, Provenance, SampleRecord};
use crate::config::RunConfig;
use crate::error::{CliError, Result};

/// One corpus line: SMILES plus an optional identifier column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusLine {
    pub line_no: usize,
    pub smiles: String,
    pub id: String,
}

pub fn read_smiles_corpus(path: &Path) -> Result<Vec<CorpusLine>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    Ok(text
        .lines()
        .enumerate()
        .filter_map(|(i, line)| {
            let mut cols = line.split_whitespace();
            let smiles = cols.next()?.to_string();
            let id = cols.next().map_or_else(|| format!("line_{}", i + 1), str::to_string);
            Some(CorpusLine { line_no: i + 1, smiles, id })
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    pub total_lines: usize,
    pub sampled: usize,
    pub accepted: usize,
    pub rejected: usize,
    pub acceptance_rate: f64,
    pub rejects_by_kind: BTreeMap<String, usize>,
    pub preprocessing: Preprocessing,
}

/// How SMILES are normalized before encoding, so corpora prepared by
/// other tools can be compared.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Preprocessing {
    pub aromaticity: String,
    pub hydrogens: String,
    pub charges: String,
    pub valence: String,
    pub rejected_features: String,
}

impl Default for Preprocessing {
    fn default() -> Self {
        Preprocessing {
            aromaticity: "kekulized by perfect matching, ties broken by canonical rank".into(),
            hydrogens: "implicit; bracket H counts and explicit [H] atoms folded into the heavy neighbour".into(),
            charges: "formal charges in [-2, 2] kept on the atom".into(),
            valence: "molecules exceeding the charge-adjusted valence table are rejected".into(),
            rejected_features: "stereo, isotopes, atom classes, multi-fragment inputs, elements outside the alphabet"
                .into(),
        }
    }
}

fn sample_lines(lines: Vec<CorpusLine>, cfg: &RunConfig) -> Result<Vec<CorpusLine>> {
    if cfg.sample_size >= lines.len() {
        return Ok(lines);
    }
    let seed =
        cfg.seed.ok_or_else(|| CliError::config("--seed is required when --sample-size is smaller than the corpus"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = rand::seq::index::sample(&mut rng, lines.len(), cfg.sample_size).into_vec();
    picked.sort_unstable();
    Ok(picked.into_iter().map(|i| lines[i].clone()).collect())
}

/// Samples, parses and canonically encodes a SMILES corpus.
pub fn ingest(input: &Path, cfg: &RunConfig) -> Result<(Vec<CorpusRecord>, IngestReport)> {
    let lines = read_smiles_corpus(input)?;
    let total_lines = lines.len();
    let sampled = sample_lines(lines, cfg)?;
    let table = ValenceTable::default();
    let parsed: Vec<_> = sampled.par_iter().map(|l| parse_smiles(&l.smiles, &table)).collect();

    let mut records = Vec::new();
    let mut rejects_by_kind = BTreeMap::new();
    for (line, result) in sampled.iter().zip(parsed) {
        match result {
            Ok(g) => records.push(CorpusRecord { id: line.id.clone(), tree: graph_to_tree(&g, RootPolicy::Canonical) }),
            Err(e) => *rejects_by_kind.entry(e.kind().to_string()).or_insert(0) += 1,
        }
    }
    if records.is_empty() {
        return Err(CliError::parse(format!(
            "all {} sampled lines of {} were rejected: {rejects_by_kind:?}",
            sampled.len(),
            input.display()
        )));
    }
    let report = IngestReport {
        total_lines,
        sampled: sampled.len(),
        accepted: records.len(),
        rejected: sampled.len() - records.len(),
        acceptance_rate: round4(records.len() as f64 / sampled.len() as f64),
        rejects_by_kind,
        preprocessing: Preprocessing::default(),
    };
    Ok((records, report))
}

/// `{"provenance":…,"<key>":…}` on one line.
pub fn write_document<T: Serialize>(path: &Path, provenance: &Provenance, key: &str, body: &T) -> Result<()> {
    let text = format!("{{\"provenance\":{},\"{key}\":{}}}\n", to_json(provenance)?, to_json(body)?);
    write_atomic(path, text.as_bytes())
}

pub fn constraints(cfg: &RunConfig) -> Constraints {
    let mode = if cfg.schema_only { ConstraintMode::SchemaOnly } else { ConstraintMode::Full };
    Constraints::new(ValenceTable::default(), cfg.atom_budget, mode)
}

pub fn encode_smiles(smiles: &str, root_seed: Option<u64>, format: TreeFormat) -> Result<String> {
    let g = parse_smiles(smiles, &ValenceTable::default()).map_err(|e| CliError::parse(format!("{smiles}: {e}")))?;
    let policy = root_seed.map_or(RootPolicy::Canonical, RootPolicy::SeededRandom);
    Ok(serialize_tree(&graph_to_tree(&g, policy), format).text)
}

pub fn decode_tree(text: &str, format: TreeFormat) -> Result<String> {
    let tree = parse_tree(&TreeText { format, text: text.to_string() }).map_err(CliError::parse)?;
    let g = tree_to_graph(&tree).map_err(CliError::parse)?;
    Ok(write_smiles(&g))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundtripSummary {
    pub lines: usize,
    pub accepted: usize,
    pub json_ok: usize,
    pub xml_ok: usize,
    pub failures: Vec<String>,
}

/// Encodes and decodes every accepted molecule in both formats.
pub fn roundtrip(input: &Path, limit: Option<usize>) -> Result<RoundtripSummary> {
    let mut lines = read_smiles_corpus(input)?;
    if let Some(n) = limit {
        lines.truncate(n);
    }
    let table = ValenceTable::default();
    let results: Vec<Option<(bool, bool)>> = lines
        .par_iter()
        .map(|l| {
            let g = parse_smiles(&l.smiles, &table).ok()?;
            let key = canonical_key(&g);
            let tree = graph_to_tree(&g, RootPolicy::Canonical);
            let check = |format| {
                parse_tree(&serialize_tree(&tree, format)).ok().is_some_and(|back| {
                    back == tree && tree_to_graph(&back).ok().is_some_and(|h| canonical_key(&h) == key)
                })
            };
            Some((check(TreeFormat::Json), check(TreeFormat::Xml)))
        })
        .collect();
    let mut summary = RoundtripSummary { lines: lines.len(), accepted: 0, json_ok: 0, xml_ok: 0, failures: Vec::new() };
    for (line, r) in lines.iter().zip(results) {
        if let Some((j, x)) = r {
            summary.accepted += 1;
            summary.json_ok += usize::from(j);
            summary.xml_ok += usize::from(x);
            if !(j && x) {
                summary.failures.push(line.id.clone());
            }
        }
    }
    Ok(summary)
}

pub fn corpus_graphs(records: &[CorpusRecord]) -> Result<Vec<MolGraph>> {
    records
        .par_iter()
        .map(|r| tree_to_graph(&r.tree).map_err(|e| CliError::parse(format!("corpus record {}: {e}", r.id))))
        .collect()
}

fn tree_tokens(tree: &TreeNode) -> Vec<g2t_core::constrain::Token> {
    tokenize(&serialize_tree(tree, TreeFormat::Json).text).expect("serialized trees tokenize")
}

pub fn train(records: &[CorpusRecord], cfg: &RunConfig) -> Result<NGramModel<f64>> {
    if records.is_empty() {
        return Err(CliError::parse("training corpus is empty"));
    }
    let sequences: Vec<_> = records.par_iter().map(|r| tree_tokens(&r.tree)).collect();
    let shard = sequences.len().div_ceil(rayon::current_num_threads().max(1)).max(1);
    sequences
        .par_chunks(shard)
        .map(|chunk| train_ngram(chunk, cfg.order, cfg.alpha))
        .try_reduce_with(|mut a, b| {
            a.merge(b);
            Ok(a)
        })
        .expect("at least one shard")
        .map_err(CliError::config)
}

pub fn model_json(model: &NGramModel<f64>, provenance: &Provenance) -> Result<String> {
    let mut doc = model.to_document();
    doc.provenance = Some(serde_json::to_value(provenance).map_err(|e| CliError::Internal(e.to_string()))?);
    let mut text = to_json(&doc)?;
    text.push('\n');
    Ok(text)
}

pub fn load_model(path: &Path) -> Result<NGramModel<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    NGramModel::from_json(&text).map_err(|e| CliError::parse(format!("{}: {e}", path.display())))
}

pub fn generation_config(cfg: &RunConfig) -> Result<GenerationConfig<f64>> {
    Ok(GenerationConfig {
        fraction_range: (cfg.fraction_min, cfg.fraction_max),
        temperature: cfg.temperature,
        seed: cfg.require_seed()?,
        constrained: cfg.constrained,
        max_len: cfg.max_len,
        constraints: constraints(cfg),
    })
}

pub fn generate<P: Proposer<f64> + Sync + ?Sized>(
    model: &P,
    prompts: &[MolGraph],
    cfg: &RunConfig,
) -> Result<Vec<GeneratedItem>> {
    let gen_cfg = generation_config(cfg)?;
    if prompts.is_empty() {
        return Err(CliError::parse("no prompt molecules in the corpus"));
    }
    (0..cfg.gen_count)
        .into_par_iter()
        .map(|i| generate_item(model, prompts, &gen_cfg, i).map_err(CliError::parse))
        .collect()
}

pub fn sample_records(items: &[GeneratedItem]) -> Vec<SampleRecord> {
    items
        .iter()
        .map(|item| SampleRecord {
            tokens: item.tokens.iter().map(|t| t.name().to_string()).collect(),
            tree: item.tree.clone(),
            status: item.status,
        })
        .collect()
}

pub fn status_counts(statuses: impl IntoIterator<Item = SampleStatus>) -> StatusCounts {
    let mut c = StatusCounts::default();
    for s in statuses {
        c.add(s);
    }
    c
}

/// Scores samples against the training corpus (novelty) and a reference set.
pub fn evaluate(samples: &[SampleRecord], train: &[MolGraph], reference: &[MolGraph]) -> Result<MetricsReport> {
    let graphs: Vec<Option<MolGraph>> = samples
        .par_iter()
        .map(|s| match (&s.status, &s.tree) {
            (SampleStatus::Ok, Some(t)) => tree_to_graph(t).map(Some).map_err(CliError::parse),
            (SampleStatus::Ok, None) => Err(CliError::parse("sample marked ok has no tree")),
            _ => Ok(None),
        })
        .collect::<Result<_>>()?;
    let train_keys: HashSet<String> = train.par_iter().map(canonical_key).collect();
    evaluate_report(samples.iter().zip(&graphs).map(|(s, g)| (s.status, g.as_ref())), &train_keys, reference)
        .map_err(CliError::parse)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArmSummary {
    pub arm: String,
    pub proposer: String,
    pub mode: String,
    pub metrics: MetricsReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationSummary {
    pub arms: Vec<ArmSummary>,
    /// Constrained minus unconstrained validity for the trained model.
    pub validity_gap: f64,
}

pub const ABLATION_ARMS: [(&str, bool, bool, bool); 5] = [
    // (name, trained proposer, constrained, schema only)
    ("constrained", true, true, false),
    ("schema_only", true, true, true),
    ("unconstrained", true, false, false),
    ("uniform_constrained", false, true, false),
    ("uniform_unconstrained", false, false, false),
];

/// Runs every ablation arm with the same seed and prompt draws and writes
/// `samples_<arm>.jsonl`, `report_<arm>.json` and `ablation.json`.
pub fn ablate(
    model: &NGramModel<f64>,
    corpus: &[MolGraph],
    base: &RunConfig,
    out_dir: &Path,
) -> Result<AblationSummary> {
    let mut arms = Vec::new();
    for (name, trained, constrained, schema_only) in ABLATION_ARMS {
        let cfg = RunConfig { constrained, schema_only, ..base.clone() };
        let items = if trained { generate(model, corpus, &cfg)? } else { generate(&UniformProposer, corpus, &cfg)? };
        let records = sample_records(&items);
        let prov = Provenance::new(&format!("ablate:{name}"), &cfg);
        write_jsonl(&out_dir.join(format!("samples_{name}.jsonl")), &prov, &records)?;
        let metrics = evaluate(&records, corpus, corpus)?;
        write_document(&out_dir.join(format!("report_{name}.json")), &prov, "metrics", &metrics)?;
        arms.push(ArmSummary {
            arm: name.to_string(),
            proposer: if trained { "ngram" } else { "uniform" }.to_string(),
            mode: match (constrained, schema_only) {
                (false, _) => "unconstrained",
                (true, false) => "constrained",
                (true, true) => "schema_only",
            }
            .to_string(),
            metrics,
        });
    }
    let validity = |arm: &str| arms.iter().find(|a| a.arm == arm).and_then(|a| a.metrics.validity).unwrap_or(0.0);
    let summary = AblationSummary { validity_gap: round4(validity("constrained") - validity("unconstrained")), arms };
    write_document(&out_dir.join("ablation.json"), &Provenance::new("ablate", base), "ablation", &summary)?;
    Ok(summary)
}

pub fn mask(prefix: &str, cfg: &RunConfig) -> Result<String> {
    let dump = mask_for_prefix(&constraints(cfg), prefix).map_err(CliError::parse)?;
    to_json(&dump)
}

/// Paths produced by [`run_pipeline`].
#[derive(Debug, Clone)]
pub struct PipelineOutputs {
    pub corpus: PathBuf,
    pub ingest_report: PathBuf,
    pub model: PathBuf,
    pub samples: PathBuf,
    pub report: PathBuf,
}

/// ingest → train → generate → evaluate, every artifact under `out_dir`.
pub fn run_pipeline(input: &Path, out_dir: &Path, cfg: &RunConfig) -> Result<(PipelineOutputs, MetricsReport)> {
    cfg.require_seed()?;
    let out = PipelineOutputs {
        corpus: out_dir.join("corpus.jsonl"),
        ingest_report: out_dir.join("ingest_report.json"),
        model: out_dir.join("model.json"),
        samples: out_dir.join("samples.jsonl"),
        report: out_dir.join("report.json"),
    };
    let (records, ingest_report) = ingest(input, cfg)?;
    write_jsonl(&out.corpus, &Provenance::new("ingest", cfg), &records)?;
    write_document(&out.ingest_report, &Provenance::new("ingest", cfg), "ingest", &ingest_report)?;

    let model = train(&records, cfg)?;
    write_atomic(&out.model, model_json(&model, &Provenance::new("train", cfg))?.as_bytes())?;

    let graphs = corpus_graphs(&records)?;
    let items = generate(&model, &graphs, cfg)?;
    let samples = sample_records(&items);
    write_jsonl(&out.samples, &Provenance::new("generate", cfg), &samples)?;

    let report = evaluate(&samples, &graphs, &graphs)?;
    write_document(&out.report, &Provenance::new("evaluate", cfg), "metrics", &report)?;
    Ok((out, report))
}

/// Non-empty trimmed lines of `input`, or the single `inline` value.
pub fn inputs(inline: Option<&str>, input: &str) -> Vec<String> {
    match inline {
        Some(s) => vec![s.to_string()],
        None => input.lines().map(str::trim).filter(|l| !l.is_empty()).map(str::to_string).collect(),
    }
}

pub fn read_corpus(path: &Path) -> Result<Vec<CorpusRecord>> {
    Ok(read_jsonl(path)?.1)
}

pub fn writeln_out(out: &mut dyn Write, text: &str) -> Result<()> {
    writeln!(out, "{text}").map_err(|e| CliError::io("<stdout>", e))
}
