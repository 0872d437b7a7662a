use thiserror::Error;

use super::TreeNode;
use crate::molgraph::{BondOrder, Element, GraphError, MolGraph};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("back-reference to atom_id {0}, which is not defined before it")]
    DanglingReference(usize),
    #[error("atom_id {0} is defined more than once")]
    DuplicateDefinition(usize),
    #[error("definition uses atom_id {found}, expected {expected}")]
    NonSequentialId { expected: usize, found: usize },
    #[error("back-reference to atom_id {id} names {found}, defined as {expected}")]
    NameMismatch { id: usize, expected: Element, found: Element },
    #[error("back-reference to atom_id {id} carries charge {found}, defined with {expected}")]
    ChargeMismatch { id: usize, expected: i8, found: i8 },
    #[error("bond between atom_id {0} and {1} duplicates an existing bond or is a self-loop")]
    ParallelEdge(usize, usize),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Rebuilds the molecular graph. Graph atom `i` is the node defined with
/// `atom_id == i`.
pub fn tree_to_graph(t: &TreeNode) -> Result<MolGraph, DecodeError> {
    let mut atoms: Vec<(Element, i8)> = Vec::new();
    let mut bonds: Vec<(usize, usize, BondOrder)> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    // (node, parent id, order of the bond from the parent)
    let mut stack: Vec<(&TreeNode, Option<(usize, BondOrder)>)> = vec![(t, None)];

    while let Some((node, link)) = stack.pop() {
        let id = node.atom_id;
        let next = atoms.len();
        if id == next {
            atoms.push((node.atom_name, node.charge));
            for entry in node.bonds.iter().rev() {
                stack.push((&entry.atom, Some((id, entry.bond_type))));
            }
        } else if id < next {
            if !node.bonds.is_empty() {
                return Err(DecodeError::DuplicateDefinition(id));
            }
            let (name, charge) = atoms[id];
            if name != node.atom_name {
                return Err(DecodeError::NameMismatch { id, expected: name, found: node.atom_name });
            }
            if node.charge != 0 && node.charge != charge {
                return Err(DecodeError::ChargeMismatch { id, expected: charge, found: node.charge });
            }
        } else if node.bonds.is_empty() {
            return Err(DecodeError::DanglingReference(id));
        } else {
            return Err(DecodeError::NonSequentialId { expected: next, found: id });
        }

        if let Some((parent, order)) = link {
            let key = (parent.min(id), parent.max(id));
            if parent == id || !seen.insert(key) {
                return Err(DecodeError::ParallelEdge(parent, id));
            }
            bonds.push((parent, id, order));
        }
    }
    Ok(MolGraph::new(atoms, bonds)?)
}
