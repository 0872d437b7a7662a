use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::ngram::Proposer;
use crate::constrain::{detokenize, tokenize, Constraints, ReplayError, Token, VOCAB_SIZE};
use crate::molgraph::{validate_valence, MolGraph};
use crate::tree::{
    graph_to_tree, parse_tree, serialize_tree, tree_to_graph, RootPolicy, TreeFormat, TreeNode, TreeText,
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompletionPair {
    pub prompt: Vec<Token>,
    pub target: Vec<Token>,
}

/// Encodes `g` from a seeded-random root and cuts the token stream after
/// `max(1, round(fraction * len))` tokens.
pub fn make_completion_pair(g: &MolGraph, fraction: f64, seed: u64) -> CompletionPair {
    let text = serialize_tree(&graph_to_tree(g, RootPolicy::SeededRandom(seed)), TreeFormat::Json).text;
    let mut prompt = tokenize(&text).expect("serialized trees always tokenize");
    let split = ((fraction.clamp(0.0, 1.0) * prompt.len() as f64).round() as usize).clamp(1, prompt.len());
    let target = prompt.split_off(split);
    CompletionPair { prompt, target }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum SampleError {
    #[error("prompt rejected: {0}")]
    PromptRejected(ReplayError),
    #[error("temperature must be positive and finite")]
    InvalidTemperature,
}

fn check_temperature<F: Float>(temperature: F) -> Result<(), SampleError> {
    if temperature > F::zero() && temperature.is_finite() {
        Ok(())
    } else {
        Err(SampleError::InvalidTemperature)
    }
}

/// Draws one index from unnormalized weights; `None` if all are zero.
fn draw<F: Float>(weights: &[F; VOCAB_SIZE], rng: &mut ChaCha8Rng) -> Option<usize> {
    let total = weights.iter().fold(F::zero(), |a, &w| a + w);
    if total.is_nan() || total <= F::zero() {
        return None;
    }
    let u = F::from(rng.gen::<f64>()).expect("unit interval") * total;
    let mut acc = F::zero();
    let mut last = None;
    for (i, &w) in weights.iter().enumerate() {
        if w > F::zero() {
            acc = acc + w;
            last = Some(i);
            if u < acc {
                return Some(i);
            }
        }
    }
    last
}

fn tempered<F: Float>(p: F, temperature: F) -> F {
    if temperature == F::one() {
        p
    } else {
        p.powf(F::one() / temperature)
    }
}

/// Extends `prompt` token by token, drawing only from the automaton's
/// allowed set, until the tree is complete. The returned sequence starts
/// with the prompt and does not contain END.
pub fn sample_constrained<F: Float, P: Proposer<F> + ?Sized>(
    model: &P,
    prompt: &[Token],
    temperature: F,
    seed: u64,
    constraints: &Constraints,
) -> Result<Vec<Token>, SampleError> {
    check_temperature(temperature)?;
    let mut state = constraints.replay(prompt).map_err(SampleError::PromptRejected)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tokens = prompt.to_vec();
    while !state.is_complete() {
        let allowed = constraints.allowed_next(&state);
        let t = if allowed.len() == 1 {
            allowed.iter().next().expect("one token")
        } else {
            let dist = model.distribution(&tokens);
            let mut weights = [F::zero(); VOCAB_SIZE];
            for t in allowed.iter() {
                weights[t.index()] = tempered(dist[t.index()], temperature);
            }
            match draw(&weights, &mut rng) {
                Some(i) => Token::from_index(i).expect("index"),
                // Model mass underflowed on every allowed token.
                None => allowed.iter().next().expect("mask is never empty before completion"),
            }
        };
        constraints.advance_mut(&mut state, t).expect("sampled from the mask");
        tokens.push(t);
    }
    Ok(tokens)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnconstrainedSample {
    pub tokens: Vec<Token>,
    /// `max_len` was reached before the model emitted END.
    pub truncated: bool,
}

/// Samples from the model alone until END or `max_len` total tokens.
pub fn sample_unconstrained<F: Float, P: Proposer<F> + ?Sized>(
    model: &P,
    prompt: &[Token],
    temperature: F,
    seed: u64,
    max_len: usize,
) -> Result<UnconstrainedSample, SampleError> {
    check_temperature(temperature)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tokens = prompt.to_vec();
    while tokens.len() < max_len {
        let dist = model.distribution(&tokens);
        let weights = dist.map(|p| tempered(p, temperature));
        let t = Token::from_index(draw(&weights, &mut rng).unwrap_or(Token::End.index())).expect("index");
        if t == Token::End {
            return Ok(UnconstrainedSample { tokens, truncated: false });
        }
        tokens.push(t);
    }
    Ok(UnconstrainedSample { tokens, truncated: true })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleStatus {
    Ok,
    ParseFail,
    DecodeFail,
    ValenceFail,
    Truncated,
}

impl SampleStatus {
    pub const ALL: [SampleStatus; 5] = [
        SampleStatus::Ok,
        SampleStatus::ParseFail,
        SampleStatus::DecodeFail,
        SampleStatus::ValenceFail,
        SampleStatus::Truncated,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SampleStatus::Ok => "ok",
            SampleStatus::ParseFail => "parse_fail",
            SampleStatus::DecodeFail => "decode_fail",
            SampleStatus::ValenceFail => "valence_fail",
            SampleStatus::Truncated => "truncated",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationConfig<F> {
    /// Prompt fraction is drawn uniformly from this closed range.
    pub fraction_range: (f64, f64),
    pub temperature: F,
    pub seed: u64,
    pub constrained: bool,
    /// Token cap for unconstrained sampling.
    pub max_len: usize,
    pub constraints: Constraints,
}

impl<F: Float> Default for GenerationConfig<F> {
    fn default() -> Self {
        GenerationConfig {
            fraction_range: (0.05, 0.5),
            temperature: F::one(),
            seed: 0,
            constrained: true,
            max_len: 4096,
            constraints: Constraints::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedItem {
    pub tokens: Vec<Token>,
    pub prompt_len: usize,
    pub status: SampleStatus,
    pub tree: Option<TreeNode>,
    pub graph: Option<MolGraph>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenerateError {
    #[error("requested zero samples")]
    ZeroCount,
    #[error("no prompt molecules supplied")]
    EmptyCorpus,
    #[error("item {item}: {source}")]
    Sample { item: usize, source: SampleError },
}

/// Classifies a finished token sequence.
pub fn assess(
    tokens: &[Token],
    truncated: bool,
    constraints: &Constraints,
) -> (SampleStatus, Option<TreeNode>, Option<MolGraph>) {
    if truncated {
        return (SampleStatus::Truncated, None, None);
    }
    let Ok(tree) = parse_tree(&TreeText::json(detokenize(tokens))) else {
        return (SampleStatus::ParseFail, None, None);
    };
    let Ok(graph) = tree_to_graph(&tree) else {
        return (SampleStatus::DecodeFail, Some(tree), None);
    };
    if !validate_valence(&graph, &constraints.table).is_ok() {
        return (SampleStatus::ValenceFail, Some(tree), Some(graph));
    }
    (SampleStatus::Ok, Some(tree), Some(graph))
}

/// Item `index` of a batch. Each item draws from its own ChaCha stream of
/// `cfg.seed`, so items can be produced in any order or in parallel.
pub fn generate_item<F: Float, P: Proposer<F> + ?Sized>(
    model: &P,
    prompts: &[MolGraph],
    cfg: &GenerationConfig<F>,
    index: usize,
) -> Result<GeneratedItem, GenerateError> {
    if prompts.is_empty() {
        return Err(GenerateError::EmptyCorpus);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index as u64);
    let molecule = rng.gen_range(0..prompts.len());
    let (lo, hi) = cfg.fraction_range;
    let fraction = if hi > lo { rng.gen_range(lo..=hi) } else { lo };
    let pair = make_completion_pair(&prompts[molecule], fraction, rng.gen());
    let sample_seed: u64 = rng.gen();
    let wrap = |source| GenerateError::Sample { item: index, source };

    let (tokens, truncated) = if cfg.constrained {
        (sample_constrained(model, &pair.prompt, cfg.temperature, sample_seed, &cfg.constraints).map_err(wrap)?, false)
    } else {
        let s = sample_unconstrained(model, &pair.prompt, cfg.temperature, sample_seed, cfg.max_len).map_err(wrap)?;
        (s.tokens, s.truncated)
    };
    let (status, tree, graph) = assess(&tokens, truncated, &cfg.constraints);
    Ok(GeneratedItem { tokens, prompt_len: pair.prompt.len(), status, tree, graph })
}

pub fn generate_batch<F: Float, P: Proposer<F> + ?Sized>(
    model: &P,
    prompts: &[MolGraph],
    n: usize,
    cfg: &GenerationConfig<F>,
) -> Result<Vec<GeneratedItem>, GenerateError> {
    if n == 0 {
        return Err(GenerateError::ZeroCount);
    }
    (0..n).map(|i| generate_item(model, prompts, cfg, i)).collect()
}
