//! Molecular graph model: atoms with element and formal charge, typed
//! single/double/triple bonds, valence rules and canonical labeling.
//!
//! Hydrogens are implicit. A [`MolGraph`] is always a simple, connected
//! graph; construction rejects anything else.

mod canon;
mod valence;

pub use canon::{canonical_key, canonical_ranks, LabeledGraph};
pub(crate) use canon::{canonical_labeling, write_dfs_smiles};
pub use valence::{validate_valence, ValenceTable, ValenceVerdict};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Closed element alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Element {
    B,
    C,
    N,
    O,
    F,
    P,
    S,
    Cl,
    Br,
    I,
    H,
}

impl Element {
    pub const ALL: [Element; 11] = [
        Element::B,
        Element::C,
        Element::N,
        Element::O,
        Element::F,
        Element::P,
        Element::S,
        Element::Cl,
        Element::Br,
        Element::I,
        Element::H,
    ];

    /// Every element except hydrogen, in alphabet order.
    pub const HEAVY: [Element; 10] = [
        Element::B,
        Element::C,
        Element::N,
        Element::O,
        Element::F,
        Element::P,
        Element::S,
        Element::Cl,
        Element::Br,
        Element::I,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            Element::B => "B",
            Element::C => "C",
            Element::N => "N",
            Element::O => "O",
            Element::F => "F",
            Element::P => "P",
            Element::S => "S",
            Element::Cl => "Cl",
            Element::Br => "Br",
            Element::I => "I",
            Element::H => "H",
        }
    }

    pub fn from_symbol(symbol: &str) -> Option<Element> {
        Element::ALL.into_iter().find(|e| e.symbol() == symbol)
    }

    /// Position in [`Element::ALL`].
    pub fn ordinal(self) -> usize {
        self as usize
    }

    pub fn is_heavy(self) -> bool {
        self != Element::H
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl FromStr for Element {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Element::from_symbol(s).ok_or_else(|| GraphError::UnknownElement(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BondOrder {
    Single = 1,
    Double = 2,
    Triple = 3,
}

impl BondOrder {
    pub const ALL: [BondOrder; 3] = [BondOrder::Single, BondOrder::Double, BondOrder::Triple];

    pub fn value(self) -> u8 {
        self as u8
    }

    pub fn from_value(v: u8) -> Option<BondOrder> {
        match v {
            1 => Some(BondOrder::Single),
            2 => Some(BondOrder::Double),
            3 => Some(BondOrder::Triple),
            _ => None,
        }
    }

    /// Name used in tree text ("single" | "double" | "triple").
    pub fn name(self) -> &'static str {
        match self {
            BondOrder::Single => "single",
            BondOrder::Double => "double",
            BondOrder::Triple => "triple",
        }
    }

    pub fn from_name(name: &str) -> Option<BondOrder> {
        BondOrder::ALL.into_iter().find(|b| b.name() == name)
    }
}

impl fmt::Display for BondOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub const MIN_CHARGE: i8 = -2;
pub const MAX_CHARGE: i8 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Atom {
    pub element: Element,
    pub charge: i8,
    pub index: usize,
}

/// Bond between atoms `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub order: BondOrder,
}

impl Bond {
    pub fn other(&self, atom: usize) -> usize {
        if atom == self.a {
            self.b
        } else {
            self.a
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("graph has no atoms")]
    Empty,
    #[error("unknown element symbol {0:?}")]
    UnknownElement(String),
    #[error("formal charge {charge} on atom {atom} outside [-2, 2]")]
    ChargeOutOfRange { atom: usize, charge: i32 },
    #[error("bond ({0}, {1}) references a missing atom")]
    MissingAtom(usize, usize),
    #[error("self-loop on atom {0}")]
    SelfLoop(usize),
    #[error("duplicate bond ({0}, {1})")]
    DuplicateBond(usize, usize),
    #[error("graph is disconnected ({components} components)")]
    Disconnected { components: usize },
}

/// Undirected, simple, connected molecular graph with implicit hydrogens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MolGraph {
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
    adjacency: Vec<Vec<(usize, BondOrder)>>,
}

impl MolGraph {
    /// Builds a graph from `(element, charge)` pairs and bond triples.
    /// Bond endpoints may be given in either order.
    pub fn new<I>(atoms: Vec<(Element, i8)>, bonds: I) -> Result<MolGraph, GraphError>
    where
        I: IntoIterator<Item = (usize, usize, BondOrder)>,
    {
        if atoms.is_empty() {
            return Err(GraphError::Empty);
        }
        let n = atoms.len();
        let atoms: Vec<Atom> = atoms
            .into_iter()
            .enumerate()
            .map(|(index, (element, charge))| {
                if !(MIN_CHARGE..=MAX_CHARGE).contains(&charge) {
                    return Err(GraphError::ChargeOutOfRange { atom: index, charge: charge.into() });
                }
                Ok(Atom { element, charge, index })
            })
            .collect::<Result<_, _>>()?;

        let mut adjacency: Vec<Vec<(usize, BondOrder)>> = vec![Vec::new(); n];
        let mut out = Vec::new();
        for (i, j, order) in bonds {
            if i >= n || j >= n {
                return Err(GraphError::MissingAtom(i, j));
            }
            if i == j {
                return Err(GraphError::SelfLoop(i));
            }
            let (a, b) = if i < j { (i, j) } else { (j, i) };
            if adjacency[a].iter().any(|&(x, _)| x == b) {
                return Err(GraphError::DuplicateBond(a, b));
            }
            adjacency[a].push((b, order));
            adjacency[b].push((a, order));
            out.push(Bond { a, b, order });
        }
        out.sort();
        for list in &mut adjacency {
            list.sort();
        }

        let graph = MolGraph { atoms, bonds: out, adjacency };
        let components = graph.component_count();
        if components != 1 {
            return Err(GraphError::Disconnected { components });
        }
        Ok(graph)
    }

    fn component_count(&self) -> usize {
        let n = self.atoms.len();
        let mut seen = vec![false; n];
        let mut count = 0;
        for start in 0..n {
            if seen[start] {
                continue;
            }
            count += 1;
            seen[start] = true;
            let mut stack = vec![start];
            while let Some(u) = stack.pop() {
                for &(v, _) in &self.adjacency[u] {
                    if !seen[v] {
                        seen[v] = true;
                        stack.push(v);
                    }
                }
            }
        }
        count
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn bond_count(&self) -> usize {
        self.bonds.len()
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn atom(&self, index: usize) -> &Atom {
        &self.atoms[index]
    }

    /// Bonds sorted by `(a, b)`.
    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    /// Neighbors of `atom` with the connecting bond order, sorted by index.
    pub fn neighbors(&self, atom: usize) -> &[(usize, BondOrder)] {
        &self.adjacency[atom]
    }

    pub fn degree(&self, atom: usize) -> usize {
        self.adjacency[atom].len()
    }

    pub fn bond_order(&self, i: usize, j: usize) -> Option<BondOrder> {
        self.adjacency.get(i)?.iter().find(|&&(x, _)| x == j).map(|&(_, order)| order)
    }

    /// Sum of incident bond orders (explicit valence).
    pub fn bond_order_sum(&self, atom: usize) -> u32 {
        self.adjacency[atom].iter().map(|&(_, o)| u32::from(o.value())).sum()
    }

    /// Number of independent cycles, `|E| - |V| + 1`.
    pub fn cyclomatic_number(&self) -> usize {
        self.bonds.len() + 1 - self.atoms.len()
    }

    /// Relabels atoms so that old atom `i` becomes atom `perm[i]`.
    ///
    /// Panics if `perm` is not a permutation of `0..atom_count()`.
    pub fn permuted(&self, perm: &[usize]) -> MolGraph {
        let n = self.atoms.len();
        assert_eq!(perm.len(), n, "permutation length mismatch");
        let mut atoms = vec![(Element::C, 0i8); n];
        let mut placed = vec![false; n];
        for (old, &new) in perm.iter().enumerate() {
            assert!(new < n && !placed[new], "not a permutation");
            placed[new] = true;
            atoms[new] = (self.atoms[old].element, self.atoms[old].charge);
        }
        let bonds = self.bonds.iter().map(|b| (perm[b.a], perm[b.b], b.order));
        MolGraph::new(atoms, bonds).expect("relabeling preserves validity")
    }

    /// `true` for every bond that lies on a cycle (i.e. is not a bridge),
    /// indexed like [`MolGraph::bonds`].
    pub fn ring_bonds(&self) -> Vec<bool> {
        let bridges = bridges(&self.adjacency);
        self.bonds.iter().map(|b| !bridges.contains(&(b.a, b.b))).collect()
    }

    /// `true` for every atom with at least one ring bond.
    pub fn ring_atoms(&self) -> Vec<bool> {
        let mut in_ring = vec![false; self.atoms.len()];
        for (bond, ring) in self.bonds.iter().zip(self.ring_bonds()) {
            if ring {
                in_ring[bond.a] = true;
                in_ring[bond.b] = true;
            }
        }
        in_ring
    }

    /// Induced subgraph on `keep` (sorted by old index). Returns `None` when
    /// the selection is empty or disconnected.
    pub fn induced_subgraph(&self, keep: &[bool]) -> Option<MolGraph> {
        let mut map = vec![usize::MAX; self.atoms.len()];
        let mut atoms = Vec::new();
        for (i, atom) in self.atoms.iter().enumerate() {
            if keep[i] {
                map[i] = atoms.len();
                atoms.push((atom.element, atom.charge));
            }
        }
        let bonds = self.bonds.iter().filter(|b| keep[b.a] && keep[b.b]).map(|b| (map[b.a], map[b.b], b.order));
        MolGraph::new(atoms, bonds).ok()
    }
}

/// Bridges of an undirected simple graph as `(min, max)` pairs.
pub(crate) fn bridges<T>(adjacency: &[Vec<(usize, T)>]) -> std::collections::HashSet<(usize, usize)> {
    let n = adjacency.len();
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut out = std::collections::HashSet::new();
    let mut timer = 0;
    for root in 0..n {
        if disc[root] != usize::MAX {
            continue;
        }
        // (node, parent, next neighbor position)
        let mut stack: Vec<(usize, usize, usize)> = vec![(root, usize::MAX, 0)];
        disc[root] = timer;
        low[root] = timer;
        timer += 1;
        while let Some(top) = stack.last_mut() {
            let (u, parent) = (top.0, top.1);
            if top.2 < adjacency[u].len() {
                let v = adjacency[u][top.2].0;
                top.2 += 1;
                if v == parent {
                    continue;
                }
                if disc[v] == usize::MAX {
                    disc[v] = timer;
                    low[v] = timer;
                    timer += 1;
                    stack.push((v, u, 0));
                } else {
                    low[u] = low[u].min(disc[v]);
                }
            } else {
                stack.pop();
                if let Some(&(p, _, _)) = stack.last() {
                    low[p] = low[p].min(low[u]);
                    if low[u] > disc[p] {
                        out.insert((p.min(u), p.max(u)));
                    }
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn carbons(n: usize) -> Vec<(Element, i8)> {
        vec![(Element::C, 0); n]
    }

    #[test]
    fn element_symbols_roundtrip() {
        for e in Element::ALL {
            assert_eq!(Element::from_symbol(e.symbol()), Some(e));
        }
        assert!("Si".parse::<Element>().is_err());
        assert_eq!(Element::HEAVY.len(), 10);
    }

    #[test]
    fn rejects_malformed_graphs() {
        assert_eq!(MolGraph::new(vec![], []), Err(GraphError::Empty));
        assert_eq!(MolGraph::new(carbons(2), [(0, 0, BondOrder::Single)]), Err(GraphError::SelfLoop(0)));
        assert_eq!(
            MolGraph::new(carbons(2), [(0, 1, BondOrder::Single), (1, 0, BondOrder::Double)]),
            Err(GraphError::DuplicateBond(0, 1))
        );
        assert_eq!(MolGraph::new(carbons(2), [(0, 2, BondOrder::Single)]), Err(GraphError::MissingAtom(0, 2)));
        assert_eq!(
            MolGraph::new(carbons(3), [(0, 1, BondOrder::Single)]),
            Err(GraphError::Disconnected { components: 2 })
        );
        assert!(matches!(MolGraph::new(vec![(Element::N, 3)], []), Err(GraphError::ChargeOutOfRange { .. })));
    }

    #[test]
    fn ring_detection_on_methylcyclopropane() {
        let g = MolGraph::new(
            carbons(4),
            [
                (0, 1, BondOrder::Single),
                (1, 2, BondOrder::Single),
                (2, 0, BondOrder::Single),
                (2, 3, BondOrder::Single),
            ],
        )
        .unwrap();
        assert_eq!(g.ring_atoms(), vec![true, true, true, false]);
        assert_eq!(g.cyclomatic_number(), 1);
        let p = g.permuted(&[3, 2, 1, 0]);
        assert_eq!(p.ring_atoms(), vec![false, true, true, true]);
    }
}
