//! Molecular graphs, a lossless tree-text encoding for them, and the
//! grammar- and valence-constrained token decoder built on top.

pub mod constrain;
pub mod genmodel;
pub mod metrics;
pub mod molgraph;
pub mod smiles;
pub mod tree;

pub use molgraph::{
    canonical_key, canonical_ranks, validate_valence, BondOrder, Element, GraphError, MolGraph, ValenceTable,
    ValenceVerdict,
};
pub use smiles::{parse_smiles, write_smiles, SmilesError};
pub use tree::{
    graph_to_tree, parse_tree, serialize_tree, tree_to_graph, BondEntry, DecodeError, RootPolicy, TreeFormat, TreeNode,
    TreeParseError, TreeText,
};

pub type NGramModelF64 = genmodel::NGramModel<f64>;
pub type NGramModelF32 = genmodel::NGramModel<f32>;
pub type GenerationConfigF64 = genmodel::GenerationConfig<f64>;
