use std::collections::{BTreeMap, HashMap};

use num_traits::Float;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constrain::{Token, VOCAB_SIZE};

/// Start-of-sequence padding symbol used in contexts.
pub const BOS: &str = "<s>";
const BOS_SYM: u8 = VOCAB_SIZE as u8;

pub const MODEL_FORMAT_VERSION: u32 = 1;
/// Largest supported order.
pub const MAX_ORDER: usize = 16;

/// Next-token distribution given everything emitted so far.
pub trait Proposer<F: Float> {
    fn distribution(&self, history: &[Token]) -> [F; VOCAB_SIZE];
}

/// Equal mass on every token.
#[derive(Debug, Clone, Copy, Default)]
pub struct UniformProposer;

impl<F: Float> Proposer<F> for UniformProposer {
    fn distribution(&self, _history: &[Token]) -> [F; VOCAB_SIZE] {
        [F::one() / F::from(VOCAB_SIZE).expect("small integer"); VOCAB_SIZE]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TrainError {
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("order must be in 2..={MAX_ORDER}, got {0}")]
    InvalidOrder(usize),
    #[error("smoothing alpha must be positive and finite")]
    InvalidAlpha,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct ContextCounts {
    next: [u32; VOCAB_SIZE],
    total: u64,
}

impl Default for ContextCounts {
    fn default() -> Self {
        ContextCounts { next: [0; VOCAB_SIZE], total: 0 }
    }
}

/// Order-k token model with add-alpha smoothing. Contexts shorter than
/// k − 1 tokens are left-padded with [`BOS`]; every training sequence is
/// terminated by END.
#[derive(Debug, Clone, PartialEq)]
pub struct NGramModel<F: Float> {
    order: usize,
    alpha: F,
    counts: HashMap<Box<[u8]>, ContextCounts>,
}

impl<F: Float> NGramModel<F> {
    pub fn new(order: usize, alpha: F) -> Result<Self, TrainError> {
        if !(2..=MAX_ORDER).contains(&order) {
            return Err(TrainError::InvalidOrder(order));
        }
        if !(alpha > F::zero() && alpha.is_finite()) {
            return Err(TrainError::InvalidAlpha);
        }
        Ok(NGramModel { order, alpha, counts: HashMap::new() })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn alpha(&self) -> F {
        self.alpha
    }

    pub fn context_count(&self) -> usize {
        self.counts.len()
    }

    fn context_of(&self, history: &[Token]) -> Vec<u8> {
        let width = self.order - 1;
        let tail = &history[history.len().saturating_sub(width)..];
        let mut ctx = vec![BOS_SYM; width - tail.len()];
        ctx.extend(tail.iter().map(|t| t.index() as u8));
        ctx
    }

    /// Adds one sequence (END is appended here).
    pub fn observe(&mut self, sequence: &[Token]) {
        let mut history: Vec<Token> = Vec::with_capacity(sequence.len() + 1);
        for &t in sequence.iter().chain(std::iter::once(&Token::End)) {
            let ctx = self.context_of(&history);
            let entry = self.counts.entry(ctx.into_boxed_slice()).or_default();
            entry.next[t.index()] += 1;
            entry.total += 1;
            history.push(t);
        }
    }

    /// Folds another model's counts into this one. Both must share order.
    pub fn merge(&mut self, other: NGramModel<F>) {
        assert_eq!(self.order, other.order, "cannot merge models of different order");
        for (ctx, c) in other.counts {
            let entry = self.counts.entry(ctx).or_default();
            for (a, b) in entry.next.iter_mut().zip(c.next) {
                *a += b;
            }
            entry.total += c.total;
        }
    }

    pub fn probability(&self, history: &[Token], next: Token) -> F {
        self.distribution(history)[next.index()]
    }

    /// Mean negative log-likelihood per token (END included), exponentiated.
    pub fn perplexity(&self, sequences: &[Vec<Token>]) -> F {
        let mut nll = F::zero();
        let mut n = 0usize;
        for seq in sequences {
            for (i, &t) in seq.iter().chain(std::iter::once(&Token::End)).enumerate() {
                nll = nll - self.probability(&seq[..i.min(seq.len())], t).ln();
                n += 1;
            }
        }
        if n == 0 {
            return F::one();
        }
        (nll / F::from(n).expect("count fits")).exp()
    }

    pub fn to_document(&self) -> ModelDocument {
        let mut entries: Vec<(&Box<[u8]>, &ContextCounts)> = self.counts.iter().collect();
        entries.sort_by(|a, b| a.0.cmp(b.0));
        let counts = entries
            .into_iter()
            .map(|(ctx, c)| ContextEntry {
                context: ctx.iter().map(|&s| symbol_name(s).to_string()).collect(),
                next: c
                    .next
                    .iter()
                    .enumerate()
                    .filter(|(_, &n)| n > 0)
                    .map(|(i, &n)| (Token::from_index(i).expect("index").name().to_string(), n))
                    .collect(),
            })
            .collect();
        ModelDocument {
            version: MODEL_FORMAT_VERSION,
            order: self.order,
            alpha: self.alpha.to_f64().expect("finite alpha"),
            counts,
            provenance: None,
        }
    }

    pub fn from_document(doc: &ModelDocument) -> Result<Self, ModelFormatError> {
        if doc.version != MODEL_FORMAT_VERSION {
            return Err(ModelFormatError::Version(doc.version));
        }
        let alpha = F::from(doc.alpha).ok_or(ModelFormatError::Train(TrainError::InvalidAlpha))?;
        let mut model = NGramModel::new(doc.order, alpha)?;
        for entry in &doc.counts {
            if entry.context.len() != doc.order - 1 {
                return Err(ModelFormatError::ContextWidth(entry.context.len()));
            }
            let ctx = entry
                .context
                .iter()
                .map(|name| symbol_from_name(name).ok_or_else(|| ModelFormatError::UnknownToken(name.clone())))
                .collect::<Result<Vec<u8>, _>>()?;
            let mut c = ContextCounts::default();
            for (name, &n) in &entry.next {
                let t = Token::from_name(name).ok_or_else(|| ModelFormatError::UnknownToken(name.clone()))?;
                c.next[t.index()] = n;
                c.total += u64::from(n);
            }
            model.counts.insert(ctx.into_boxed_slice(), c);
        }
        Ok(model)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_document()).expect("model document serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ModelFormatError> {
        let doc: ModelDocument = serde_json::from_str(text).map_err(|e| ModelFormatError::Json(e.to_string()))?;
        Self::from_document(&doc)
    }
}

impl<F: Float> Proposer<F> for NGramModel<F> {
    fn distribution(&self, history: &[Token]) -> [F; VOCAB_SIZE] {
        let v = F::from(VOCAB_SIZE).expect("small integer");
        let ctx = self.context_of(history);
        let mut out = [F::one() / v; VOCAB_SIZE];
        if let Some(c) = self.counts.get(ctx.as_slice()) {
            let denom = F::from(c.total).expect("count fits") + self.alpha * v;
            for (p, &n) in out.iter_mut().zip(&c.next) {
                *p = (F::from(n).expect("count fits") + self.alpha) / denom;
            }
        }
        out
    }
}

fn symbol_name(s: u8) -> &'static str {
    if s == BOS_SYM {
        BOS
    } else {
        Token::from_index(usize::from(s)).expect("symbol in range").name()
    }
}

fn symbol_from_name(name: &str) -> Option<u8> {
    if name == BOS {
        Some(BOS_SYM)
    } else {
        Token::from_name(name).map(|t| t.index() as u8)
    }
}

/// Fits an order-k model on token sequences.
pub fn train_ngram<F: Float>(corpus: &[Vec<Token>], order: usize, alpha: F) -> Result<NGramModel<F>, TrainError> {
    if corpus.is_empty() {
        return Err(TrainError::EmptyCorpus);
    }
    let mut model = NGramModel::new(order, alpha)?;
    for seq in corpus {
        model.observe(seq);
    }
    Ok(model)
}

/// On-disk model: contexts are token-name tuples, counts map token names
/// to counts. Contexts are sorted so the serialization is byte-stable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDocument {
    pub version: u32,
    pub order: usize,
    pub alpha: f64,
    pub counts: Vec<ContextEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContextEntry {
    pub context: Vec<String>,
    pub next: BTreeMap<String, u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelFormatError {
    #[error("invalid model JSON: {0}")]
    Json(String),
    #[error("unsupported model format version {0}")]
    Version(u32),
    #[error("context of width {0} does not match the model order")]
    ContextWidth(usize),
    #[error("unknown token name {0:?}")]
    UnknownToken(String),
    #[error(transparent)]
    Train(#[from] TrainError),
}
