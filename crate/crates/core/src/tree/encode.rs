use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{BondEntry, TreeNode};
use crate::molgraph::{canonical_ranks, BondOrder, MolGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RootPolicy {
    /// Root at canonical rank 0, children in canonical-rank order.
    Canonical,
    /// Uniform root and shuffled child order from the given seed.
    SeededRandom(u64),
}

/// Depth-first encoding of `g`. Definition ids follow visit order; a ring
/// bond is emitted once, as a back-reference from the later endpoint.
pub fn graph_to_tree(g: &MolGraph, root_policy: RootPolicy) -> TreeNode {
    let ranks = canonical_ranks(g);
    let mut rng = match root_policy {
        RootPolicy::Canonical => None,
        RootPolicy::SeededRandom(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
    };
    let root = match rng.as_mut() {
        None => ranks.iter().position(|&r| r == 0).unwrap_or(0),
        Some(rng) => rng.gen_range(0..g.atom_count()),
    };

    let mut enc = Encoder {
        g,
        ranks: &ranks,
        rng,
        ids: vec![None; g.atom_count()],
        next_id: 0,
        emitted: vec![Vec::new(); g.atom_count()],
    };
    enc.visit(root)
}

struct Encoder<'a> {
    g: &'a MolGraph,
    ranks: &'a [usize],
    rng: Option<ChaCha8Rng>,
    ids: Vec<Option<usize>>,
    next_id: usize,
    /// Neighbors whose shared edge has already been written, per atom.
    emitted: Vec<Vec<usize>>,
}

impl Encoder<'_> {
    fn visit(&mut self, atom: usize) -> TreeNode {
        let id = self.next_id;
        self.next_id += 1;
        self.ids[atom] = Some(id);
        let a = self.g.atom(atom);
        let mut node = TreeNode { atom_name: a.element, atom_id: id, charge: a.charge, bonds: Vec::new() };

        let mut children: Vec<(usize, BondOrder)> = self.g.neighbors(atom).to_vec();
        match self.rng.as_mut() {
            None => children.sort_by_key(|&(v, order)| (self.ranks[v], order)),
            Some(rng) => children.shuffle(rng),
        }
        for (v, order) in children {
            if self.emitted[atom].contains(&v) {
                continue;
            }
            self.emitted[atom].push(v);
            self.emitted[v].push(atom);
            let child = match self.ids[v] {
                Some(target) => TreeNode::leaf(self.g.atom(v).element, target),
                None => self.visit(v),
            };
            node.bonds.push(BondEntry { bond_type: order, atom: child });
        }
        node
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::molgraph::Element;
    use crate::smiles::parse_smiles;
    use crate::ValenceTable;

    fn mol(s: &str) -> MolGraph {
        parse_smiles(s, &ValenceTable::default()).unwrap()
    }

    #[test]
    fn methane_is_a_single_node() {
        assert_eq!(graph_to_tree(&mol("C"), RootPolicy::Canonical), TreeNode::leaf(Element::C, 0));
    }

    #[test]
    fn cyclopropene_closes_back_to_root() {
        let t = graph_to_tree(&mol("C1=CC1"), RootPolicy::Canonical);
        assert_eq!(t.atom_id, 0);
        assert_eq!(t.bonds.len(), 1);
        assert_eq!(t.bonds[0].bond_type, BondOrder::Double);
        let c1 = &t.bonds[0].atom;
        assert_eq!((c1.atom_id, c1.bonds.len()), (1, 1));
        assert_eq!(c1.bonds[0].bond_type, BondOrder::Single);
        let c2 = &c1.bonds[0].atom;
        assert_eq!((c2.atom_id, c2.bonds.len()), (2, 1));
        assert_eq!(c2.bonds[0].bond_type, BondOrder::Single);
        assert_eq!(c2.bonds[0].atom, TreeNode::leaf(Element::C, 0));
    }

    #[test]
    fn edge_and_back_reference_counts() {
        for s in ["CCO", "c1ccccc1", "C1CC2CCC1C2", "C12C3C4C1C5C2C3C45", "O=C(O)c1ccc(N)cc1"] {
            let g = mol(s);
            for policy in [RootPolicy::Canonical, RootPolicy::SeededRandom(3), RootPolicy::SeededRandom(77)] {
                let t = graph_to_tree(&g, policy);
                assert_eq!(t.bond_entry_count(), g.bond_count(), "{s}");
                assert_eq!(t.back_reference_count(), g.cyclomatic_number(), "{s}");
            }
        }
    }

    #[test]
    fn acyclic_has_no_back_references() {
        let t = graph_to_tree(&mol("CC(C)(C)C(=O)N"), RootPolicy::Canonical);
        assert_eq!(t.back_reference_count(), 0);
    }
}
