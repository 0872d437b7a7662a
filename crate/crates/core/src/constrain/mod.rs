//! Token alphabet for tree JSON and the incremental automaton that masks
//! every token which could not lead to a complete, decodable,
//! valence-respecting tree.

mod automaton;
mod token;

pub use automaton::{ConstraintMode, Constraints, DecoderState, IllegalToken, ReplayError, DEFAULT_ATOM_BUDGET};
pub use token::{detokenize, tokenize, tokenize_prefix, Key, LexError, Token, TokenSet, VOCAB_SIZE};

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MaskError {
    #[error(transparent)]
    Lex(#[from] LexError),
    #[error(transparent)]
    Replay(#[from] ReplayError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MaskDump {
    pub prefix_tokens: usize,
    pub complete: bool,
    pub allowed: Vec<&'static str>,
}

/// Allowed next tokens after a (possibly partial) tree text.
pub fn mask_for_prefix(constraints: &Constraints, prefix: &str) -> Result<MaskDump, MaskError> {
    let tokens = tokenize_prefix(prefix)?;
    let state = constraints.replay(&tokens)?;
    Ok(MaskDump {
        prefix_tokens: tokens.len(),
        complete: state.is_complete(),
        allowed: constraints.allowed_next(&state).iter().map(Token::name).collect(),
    })
}
