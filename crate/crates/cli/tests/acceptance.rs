//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Runs as a plain binary so the lines are always shown.

#[path = "../../core/tests/support/iso.rs"]
mod iso;

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use g2t_cli::artifacts::CorpusRecord;
use g2t_cli::commands::{self as cmd, CorpusLine};
use g2t_cli::RunConfig;
use g2t_core::constrain::{detokenize, tokenize, Constraints};
use g2t_core::genmodel::{GeneratedItem, NGramModel, UniformProposer};
use g2t_core::metrics::{
    cosine, morgan_fingerprint, murcko_scaffold, scaf_similarity, tanimoto, Fingerprint, Scaffold,
};
use g2t_core::{
    canonical_key, graph_to_tree, parse_smiles, parse_tree, serialize_tree, tree_to_graph, validate_valence, MolGraph,
    RootPolicy, TreeFormat, TreeText, ValenceTable,
};
use rand::seq::{IteratorRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20240601;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(format!("{name}.smi"))
}

fn config() -> RunConfig {
    RunConfig { seed: Some(SEED), ..RunConfig::default() }
}

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome { pass, detail: detail.into() }
    }
}

/// Sampled corpus lines, parsed; unparseable lines are dropped.
fn sampled_graphs(name: &str, n: usize) -> Vec<(CorpusLine, MolGraph)> {
    let lines = cmd::read_smiles_corpus(&data(name)).expect("corpus readable");
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut picked = rand::seq::index::sample(&mut rng, lines.len(), n.min(lines.len())).into_vec();
    picked.sort_unstable();
    let table = ValenceTable::default();
    picked
        .into_iter()
        .filter_map(|i| parse_smiles(&lines[i].smiles, &table).ok().map(|g| (lines[i].clone(), g)))
        .collect()
}

fn roundtrip_fidelity() -> Outcome {
    let start = Instant::now();
    let mut accepted = 0;
    let mut failures = Vec::new();
    for name in ["qm9_like", "zinc_like"] {
        for (line, g) in sampled_graphs(name, 5000) {
            accepted += 1;
            let key = canonical_key(&g);
            let tree = graph_to_tree(&g, RootPolicy::Canonical);
            for format in [TreeFormat::Json, TreeFormat::Xml] {
                let ok = parse_tree(&serialize_tree(&tree, format))
                    .ok()
                    .filter(|back| *back == tree)
                    .and_then(|back| tree_to_graph(&back).ok())
                    .is_some_and(|h| canonical_key(&h) == key);
                if !ok {
                    failures.push(format!("{name}:{}:{format:?}", line.id));
                }
            }
        }
    }
    let elapsed = start.elapsed();
    Outcome::new(
        failures.is_empty() && accepted > 0 && elapsed < Duration::from_secs(120),
        format!("{accepted} molecules x 2 formats, {} failures, {:.1}s", failures.len(), elapsed.as_secs_f64()),
    )
}

struct Trained {
    records: Vec<CorpusRecord>,
    graphs: Vec<MolGraph>,
    model: NGramModel<f64>,
}

fn train_qm9() -> Trained {
    let cfg = RunConfig { dataset: Some(data("qm9_like").display().to_string()), ..config() };
    let (records, _) = cmd::ingest(&data("qm9_like"), &cfg).expect("ingest");
    let model = cmd::train(&records, &cfg).expect("train");
    let graphs = cmd::corpus_graphs(&records).expect("corpus decodes");
    Trained { records, graphs, model }
}

fn valid_graphs(items: &[GeneratedItem]) -> Vec<MolGraph> {
    items.iter().filter_map(|i| i.graph.clone()).collect()
}

fn fraction(n: usize, d: usize) -> f64 {
    n as f64 / d as f64
}

fn uniqueness_of(graphs: &[MolGraph]) -> Option<f64> {
    if graphs.is_empty() {
        return None;
    }
    let keys: HashSet<String> = graphs.iter().map(canonical_key).collect();
    Some(fraction(keys.len(), graphs.len()))
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "undefined".to_string(), |v| format!("{v:.4}"))
}

/// `Some` beats `None`; two `None`s are a tie, never a strict win.
fn strictly_higher(a: Option<f64>, b: Option<f64>) -> bool {
    match (a, b) {
        (Some(a), Some(b)) => a > b,
        (Some(_), None) => true,
        _ => false,
    }
}

struct Generation {
    constrained: Vec<GeneratedItem>,
    unconstrained: Vec<GeneratedItem>,
    uniform_unconstrained: Vec<GeneratedItem>,
    uniform_constrained: Vec<GeneratedItem>,
}

fn generate_all(t: &Trained) -> Generation {
    let constrained = config();
    let unconstrained = RunConfig { constrained: false, ..config() };
    Generation {
        constrained: cmd::generate(&t.model, &t.graphs, &constrained).expect("generate"),
        unconstrained: cmd::generate(&t.model, &t.graphs, &unconstrained).expect("generate"),
        uniform_unconstrained: cmd::generate(&UniformProposer, &t.graphs, &unconstrained).expect("generate"),
        uniform_constrained: cmd::generate(&UniformProposer, &t.graphs, &constrained).expect("generate"),
    }
}

fn valence_valid(items: &[GeneratedItem]) -> usize {
    let table = ValenceTable::default();
    items
        .iter()
        .filter(|i| {
            let Ok(tree) = parse_tree(&TreeText::json(detokenize(&i.tokens))) else { return false };
            tree_to_graph(&tree).is_ok_and(|g| validate_valence(&g, &table).is_ok())
        })
        .count()
}

fn constraining_soundness(t: &Trained, g: &Generation) -> Outcome {
    let n = g.constrained.len();
    let valid = valence_valid(&g.constrained);
    Outcome::new(
        n == 1000 && valid == n && t.records.len() == 5000 && t.model.order() == 4,
        format!("{valid}/{n} valence-valid from a {}-gram on {} encodings", t.model.order(), t.records.len()),
    )
}

fn ablation_direction(g: &Generation) -> Outcome {
    let on = fraction(valence_valid(&g.constrained), g.constrained.len());
    let off = fraction(valence_valid(&g.unconstrained), g.unconstrained.len());
    Outcome::new(
        g.unconstrained.len() == 1000 && off < on && off < 0.8,
        format!("constrained {on:.4}, unconstrained {off:.4}, gap {:.4}", on - off),
    )
}

fn trained_vs_uniform(g: &Generation) -> Outcome {
    let validity = |items: &[GeneratedItem]| fraction(valence_valid(items), items.len());
    let (tv, uv) = (validity(&g.unconstrained), validity(&g.uniform_unconstrained));
    let tu = uniqueness_of(&valid_graphs(&g.unconstrained));
    let uu = uniqueness_of(&valid_graphs(&g.uniform_unconstrained));
    let cu = uniqueness_of(&valid_graphs(&g.constrained));
    let ucu = uniqueness_of(&valid_graphs(&g.uniform_constrained));
    Outcome::new(
        tv > uv && strictly_higher(tu, uu),
        format!(
            "unconstrained validity {tv:.4} vs {uv:.4}, uniqueness {} vs {}; constrained uniqueness {} vs {} (informational)",
            fmt_opt(tu),
            fmt_opt(uu),
            fmt_opt(cu),
            fmt_opt(ucu)
        ),
    )
}

fn no_dead_end() -> Outcome {
    let c = Constraints::default();
    let table = ValenceTable::default();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (mut dead_ends, mut invalid, mut tokens_total) = (0, 0, 0);
    for _ in 0..10_000 {
        let mut s = c.initial();
        let mut tokens = Vec::new();
        while !s.is_complete() {
            let Some(t) = c.allowed_next(&s).iter().choose(&mut rng) else {
                dead_ends += 1;
                break;
            };
            c.advance_mut(&mut s, t).expect("allowed token advances");
            tokens.push(t);
        }
        tokens_total += tokens.len();
        if s.is_complete() {
            let ok = parse_tree(&TreeText::json(detokenize(&tokens)))
                .ok()
                .and_then(|tree| tree_to_graph(&tree).ok())
                .is_some_and(|g| validate_valence(&g, &table).is_ok());
            invalid += usize::from(!ok);
        }
    }
    Outcome::new(
        dead_ends == 0 && invalid == 0,
        format!("10000 walks ({tokens_total} tokens), {dead_ends} dead ends, {invalid} undecodable"),
    )
}

fn shuffled(g: &MolGraph, rng: &mut ChaCha8Rng) -> MolGraph {
    let mut perm: Vec<usize> = (0..g.atom_count()).collect();
    perm.shuffle(rng);
    g.permuted(&perm)
}

fn canonicalization() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let base: Vec<MolGraph> = sampled_graphs("zinc_like", 200).into_iter().map(|(_, g)| g).collect();
    let mut oracle_classes: Vec<&MolGraph> = Vec::new();
    for g in &base {
        if !oracle_classes.iter().any(|c| iso::isomorphic(c, g)) {
            oracle_classes.push(g);
        }
    }
    let mut keys = HashSet::new();
    for g in &base {
        keys.insert(canonical_key(g));
        for _ in 0..20 {
            keys.insert(canonical_key(&shuffled(g, &mut rng)));
        }
    }

    // Small fragments plus permuted duplicates, so both answers occur.
    let mut subsample: Vec<MolGraph> = sampled_graphs("qm9_like", 40).into_iter().map(|(_, g)| g).collect();
    for i in 0..10 {
        let copy = shuffled(&subsample[i * 3], &mut rng);
        subsample.push(copy);
    }
    subsample.shuffle(&mut rng);
    let sub_keys: Vec<String> = subsample.iter().map(canonical_key).collect();
    let mut disagreements = 0;
    let mut iso_pairs = 0;
    for i in 0..subsample.len() {
        for j in i + 1..subsample.len() {
            let iso = iso::isomorphic(&subsample[i], &subsample[j]);
            iso_pairs += usize::from(iso);
            disagreements += usize::from((sub_keys[i] == sub_keys[j]) != iso);
        }
    }
    Outcome::new(
        base.len() == 200 && oracle_classes.len() == 200 && keys.len() == 200 && disagreements == 0,
        format!(
            "{} molecules x 21 labelings -> {} keys ({} oracle classes); {}-molecule subsample: {iso_pairs} isomorphic pairs, {disagreements} disagreements",
            base.len(),
            keys.len(),
            oracle_classes.len(),
            subsample.len()
        ),
    )
}

fn metric_sanity(corpus: &[MolGraph]) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut problems = Vec::new();
    let random_fp = |rng: &mut ChaCha8Rng| {
        let density: f64 = rng.gen_range(0.0..0.3);
        Fingerprint::from_bits(2048, (0..2048).filter(|_| rng.gen_bool(density)).collect::<Vec<_>>())
    };
    for _ in 0..1000 {
        let (a, b) = (random_fp(&mut rng), random_fp(&mut rng));
        let ab: f64 = tanimoto(&a, &b).unwrap();
        let ba: f64 = tanimoto(&b, &a).unwrap();
        let aa: f64 = tanimoto(&a, &a).unwrap();
        if !(0.0..=1.0).contains(&ab) || ab != ba || aa != 1.0 {
            problems.push(format!("tanimoto {ab} {ba} {aa}"));
        }
    }

    let s: f64 = scaf_similarity(corpus, corpus).unwrap();
    if (s - 1.0).abs() > 1e-12 {
        problems.push(format!("scaf_similarity(X, X) = {s}"));
    }

    let mut not_idempotent = 0;
    for g in corpus {
        if let Scaffold::Rings(core) = murcko_scaffold(g) {
            if murcko_scaffold(&core).key() != canonical_key(&core) {
                not_idempotent += 1;
            }
        }
    }
    if not_idempotent > 0 {
        problems.push(format!("{not_idempotent} scaffolds not idempotent"));
    }

    let t: f64 = tanimoto(&Fingerprint::from_bits(8, [1, 2]), &Fingerprint::from_bits(8, [2, 3])).unwrap();
    let a = BTreeMap::from([("A".to_string(), 1)]);
    let b = BTreeMap::from([("A".to_string(), 1), ("B".to_string(), 1)]);
    let c: f64 = cosine(&a, &b);
    if (t - 1.0 / 3.0).abs() > 1e-12 || (c - std::f64::consts::FRAC_1_SQRT_2).abs() > 1e-12 {
        problems.push(format!("fixtures: tanimoto {t}, cosine {c}"));
    }
    let fp_self: f64 = tanimoto(&morgan_fingerprint(&corpus[0]), &morgan_fingerprint(&corpus[0])).unwrap();
    if fp_self != 1.0 {
        problems.push("molecule fingerprint self-similarity".into());
    }
    Outcome::new(
        problems.is_empty(),
        if problems.is_empty() {
            format!("1000 fingerprint pairs, {} corpus scaffolds, fixtures 1/3 and 0.7071", corpus.len())
        } else {
            problems.join("; ")
        },
    )
}

fn corpus_replay() -> Outcome {
    let c = Constraints::default();
    let (mut total, mut rejected) = (0, 0);
    for name in ["qm9_like", "zinc_like"] {
        let cfg = RunConfig { sample_size: usize::MAX, ..config() };
        let (records, _) = cmd::ingest(&data(name), &cfg).expect("ingest");
        for r in &records {
            total += 1;
            let tokens = tokenize(&serialize_tree(&r.tree, TreeFormat::Json).text).expect("tokenizes");
            if !c.replay(&tokens).is_ok_and(|s| s.is_complete()) {
                rejected += 1;
            }
        }
    }
    Outcome::new(total > 0 && rejected == 0, format!("{total} encoded molecules, {rejected} rejected"))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().expect("temp dir");
    let run = |out: &Path| {
        Command::new(env!("CARGO_BIN_EXE_g2t"))
            .args(["run", "--seed", &SEED.to_string(), "--input"])
            .arg(data("qm9_like"))
            .arg("--out-dir")
            .arg(out)
            .output()
            .expect("binary runs")
    };
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let (ra, rb) = (run(&a), run(&b));
    if !ra.status.success() || !rb.status.success() {
        return Outcome::new(false, format!("run failed: {}", String::from_utf8_lossy(&ra.stderr)));
    }
    let same = |f: &str| std::fs::read(a.join(f)).ok().is_some_and(|x| Some(x) == std::fs::read(b.join(f)).ok());
    let files = ["samples.jsonl", "report.json", "model.json", "corpus.jsonl"];
    let differing: Vec<&str> = files.into_iter().filter(|f| !same(f)).collect();
    Outcome::new(differing.is_empty(), format!("two runs, differing files: {differing:?}"))
}

fn main() {
    let start = Instant::now();
    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();
    let mut record = |n, name, o: Outcome| {
        println!("criterion {n} {name:<24} {} {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push((n, name, o));
    };
    record(1, "roundtrip fidelity", roundtrip_fidelity());
    let trained = train_qm9();
    let generated = generate_all(&trained);
    record(2, "constraining soundness", constraining_soundness(&trained, &generated));
    record(3, "ablation direction", ablation_direction(&generated));
    record(4, "trained vs uniform", trained_vs_uniform(&generated));
    record(5, "no dead end", no_dead_end());
    record(6, "canonicalization", canonicalization());
    let every_corpus: Vec<MolGraph> = ["qm9_like", "zinc_like", "chembl_sample"]
        .into_iter()
        .flat_map(|name| sampled_graphs(name, usize::MAX).into_iter().map(|(_, g)| g))
        .collect();
    record(7, "metric sanity", metric_sanity(&every_corpus));
    record(8, "corpus replay", corpus_replay());
    record(9, "determinism", determinism());

    let failed: Vec<usize> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    println!(
        "acceptance: {}/{} passed in {:.1}s",
        results.len() - failed.len(),
        results.len(),
        start.elapsed().as_secs_f64()
    );
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
