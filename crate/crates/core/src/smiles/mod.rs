//! SMILES subset reader and writer.
//!
//! Accepted: organic-subset atoms, bracket atoms with hydrogen count and
//! charge, bonds `- = # :`, ring closures (`1`-`9`, `%nn`), branches and
//! lowercase aromatic atoms (kekulized on input). Stereo, isotopes, atom
//! classes, multi-fragment input and elements outside the closed alphabet
//! are rejected with a typed error.

mod kekulize;
mod parser;

pub use kekulize::{kekulize, AromaticAtom, KekulizeError};
pub use parser::parse_smiles;

use thiserror::Error;

use crate::molgraph::{canonical_ranks, write_dfs_smiles, GraphError, MolGraph, ValenceTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Unsupported {
    Stereo,
    Isotope,
    Fragment,
    AtomClass,
    QuadrupleBond,
    ExplicitHydrogen,
    Charge,
}

impl Unsupported {
    pub fn name(self) -> &'static str {
        match self {
            Unsupported::Stereo => "stereo",
            Unsupported::Isotope => "isotope",
            Unsupported::Fragment => "fragment",
            Unsupported::AtomClass => "atom class",
            Unsupported::QuadrupleBond => "quadruple bond",
            Unsupported::ExplicitHydrogen => "explicit hydrogen",
            Unsupported::Charge => "charge outside [-2, 2]",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SmilesError {
    #[error("empty input")]
    EmptyInput,
    #[error("unknown element {symbol:?} at byte {position}")]
    UnknownElement { symbol: String, position: usize },
    #[error("ring bond {label} never closed")]
    UnclosedRing { label: u32 },
    #[error("unsupported feature ({}) at byte {position}", .feature.name())]
    UnsupportedFeature { feature: Unsupported, position: usize },
    #[error("ring bond {label} has conflicting bond orders")]
    RingBondConflict { label: u32 },
    #[error("syntax error at byte {position}: {message}")]
    Syntax { position: usize, message: &'static str },
    #[error(transparent)]
    Kekulization(#[from] KekulizeError),
    #[error("valence exceeded on atoms {0:?}")]
    Valence(Vec<usize>),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

impl SmilesError {
    /// Stable category name used in ingest reports.
    pub fn kind(&self) -> &'static str {
        match self {
            SmilesError::EmptyInput => "EmptyInput",
            SmilesError::UnknownElement { .. } => "UnknownElement",
            SmilesError::UnclosedRing { .. } => "UnclosedRing",
            SmilesError::UnsupportedFeature { .. } => "UnsupportedFeature",
            SmilesError::RingBondConflict { .. } => "RingBondConflict",
            SmilesError::Syntax { .. } => "SyntaxError",
            SmilesError::Kekulization(_) => "KekulizationFailure",
            SmilesError::Valence(_) => "ValenceViolation",
            SmilesError::Graph(_) => "GraphError",
        }
    }
}

/// Writes `graph` as Kekulé SMILES in canonical DFS order. Charged atoms are
/// bracketed with their implicit hydrogen count under the default table.
pub fn write_smiles(graph: &MolGraph) -> String {
    write_dfs_smiles(graph, &canonical_ranks(graph), Some(&ValenceTable::default()))
}
