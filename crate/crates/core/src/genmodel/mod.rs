//! Completion-pair construction, an n-gram token model, and constrained
//! and unconstrained sampling loops over the tree token alphabet.

mod ngram;
mod sample;

pub use ngram::{
    train_ngram, ContextEntry, ModelDocument, ModelFormatError, NGramModel, Proposer, TrainError, UniformProposer, BOS,
    MAX_ORDER, MODEL_FORMAT_VERSION,
};
pub use sample::{
    assess, generate_batch, generate_item, make_completion_pair, sample_constrained, sample_unconstrained,
    CompletionPair, GenerateError, GeneratedItem, GenerationConfig, SampleError, SampleStatus, UnconstrainedSample,
};
