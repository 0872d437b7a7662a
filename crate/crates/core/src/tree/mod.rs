//! Graph-to-tree text encoding.
//!
//! A molecule becomes a nested atom/bond tree by depth-first traversal. Each
//! atom is defined once with a fresh `atom_id`; a ring-closing edge points
//! back to an earlier atom through a node that repeats its id and name and
//! has no bonds of its own.

mod decode;
mod encode;
mod json;
mod xml;

pub use decode::{tree_to_graph, DecodeError};
pub use encode::{graph_to_tree, RootPolicy};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::molgraph::{BondOrder, Element};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeNode {
    pub atom_name: Element,
    pub atom_id: usize,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub charge: i8,
    pub bonds: Vec<BondEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BondEntry {
    pub bond_type: BondOrder,
    pub atom: TreeNode,
}

fn is_zero(q: &i8) -> bool {
    *q == 0
}

impl TreeNode {
    pub fn leaf(atom_name: Element, atom_id: usize) -> TreeNode {
        TreeNode { atom_name, atom_id, charge: 0, bonds: Vec::new() }
    }

    /// Visits every node in pre-order together with its parent's id.
    pub fn walk<'a>(&'a self, mut visit: impl FnMut(&'a TreeNode, Option<usize>)) {
        let mut stack: Vec<(&TreeNode, Option<usize>)> = vec![(self, None)];
        while let Some((node, parent)) = stack.pop() {
            visit(node, parent);
            for entry in node.bonds.iter().rev() {
                stack.push((&entry.atom, Some(node.atom_id)));
            }
        }
    }

    /// Number of [`BondEntry`] records in the whole tree.
    pub fn bond_entry_count(&self) -> usize {
        let mut n = 0;
        self.walk(|node, _| n += node.bonds.len());
        n
    }

    /// Nodes that repeat an id defined earlier in pre-order.
    pub fn back_reference_count(&self) -> usize {
        let mut seen = std::collections::HashSet::new();
        let mut n = 0;
        self.walk(|node, _| {
            if !seen.insert(node.atom_id) {
                n += 1;
            }
        });
        n
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TreeFormat {
    Json,
    Xml,
}

impl std::str::FromStr for TreeFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(TreeFormat::Json),
            "xml" => Ok(TreeFormat::Xml),
            other => Err(format!("unknown tree format {other:?} (expected json or xml)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeText {
    pub format: TreeFormat,
    pub text: String,
}

impl TreeText {
    pub fn json(text: impl Into<String>) -> Self {
        TreeText { format: TreeFormat::Json, text: text.into() }
    }

    pub fn xml(text: impl Into<String>) -> Self {
        TreeText { format: TreeFormat::Xml, text: text.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeParseError {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("invalid bond type {0:?}")]
    InvalidBondType(String),
    #[error("invariant violation: {0}")]
    Invariant(String),
}

/// Canonical compact text for `tree`.
pub fn serialize_tree(tree: &TreeNode, format: TreeFormat) -> TreeText {
    match format {
        TreeFormat::Json => TreeText::json(json::to_json(tree)),
        TreeFormat::Xml => TreeText::xml(xml::to_xml(tree)),
    }
}

/// Parses JSON or XML tree text (whitespace between tokens is accepted) and
/// checks the definition/back-reference invariants.
pub fn parse_tree(text: &TreeText) -> Result<TreeNode, TreeParseError> {
    let tree = match text.format {
        TreeFormat::Json => json::from_json(&text.text)?,
        TreeFormat::Xml => xml::from_xml(&text.text)?,
    };
    check_invariants(&tree)?;
    Ok(tree)
}

/// First occurrence of an id defines the atom; every later occurrence must
/// be a bond-less back-reference with the same name (and charge, if given).
fn check_invariants(tree: &TreeNode) -> Result<(), TreeParseError> {
    let mut defined: std::collections::HashMap<usize, (Element, i8)> = Default::default();
    let mut result = Ok(());
    tree.walk(|node, _| {
        if result.is_err() {
            return;
        }
        match defined.get(&node.atom_id) {
            None => {
                defined.insert(node.atom_id, (node.atom_name, node.charge));
            }
            Some(&(name, charge)) => {
                if !node.bonds.is_empty() {
                    result = Err(TreeParseError::Invariant(format!(
                        "atom_id {} is defined twice (back-reference with non-empty bonds)",
                        node.atom_id
                    )));
                } else if name != node.atom_name {
                    result = Err(TreeParseError::Invariant(format!(
                        "back-reference to atom_id {} names {} but the atom is {}",
                        node.atom_id, node.atom_name, name
                    )));
                } else if node.charge != 0 && node.charge != charge {
                    result = Err(TreeParseError::Invariant(format!(
                        "back-reference to atom_id {} carries charge {} but the atom has {}",
                        node.atom_id, node.charge, charge
                    )));
                }
            }
        }
    });
    result
}
