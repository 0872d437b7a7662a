//! Canonical atom ranking by iterative neighborhood refinement with
//! individualization, and the rank-ordered DFS writer behind
//! [`canonical_key`].
//!
//! Residual ties are broken by individualizing each member of the first
//! non-singleton cell in turn, re-refining, and keeping the labeling with the
//! smallest certificate (atom labels plus relabeled edge list). The branch
//! count is capped by [`LEAF_BUDGET`]; beyond it only the lowest-indexed
//! member of a cell is tried.

use std::cmp::Reverse;
use std::fmt::Write as _;

use super::{BondOrder, Element, MolGraph, ValenceTable};

/// Maximum number of discrete labelings compared in one search.
pub const LEAF_BUDGET: usize = 4096;

/// Vertex- and edge-labeled graph used as input to the ranking search.
#[derive(Debug, Clone)]
pub struct LabeledGraph {
    labels: Vec<u64>,
    adjacency: Vec<Vec<(usize, u8)>>,
}

impl LabeledGraph {
    /// `edges` are `(i, j, label)`; each undirected edge listed once.
    pub fn new(labels: Vec<u64>, edges: impl IntoIterator<Item = (usize, usize, u8)>) -> Self {
        let mut adjacency = vec![Vec::new(); labels.len()];
        for (i, j, l) in edges {
            adjacency[i].push((j, l));
            adjacency[j].push((i, l));
        }
        LabeledGraph { labels, adjacency }
    }

    fn from_mol(g: &MolGraph) -> Self {
        let labels =
            g.atoms().iter().map(|a| (a.element.ordinal() as u64) * 8 + (i64::from(a.charge) + 4) as u64).collect();
        LabeledGraph::new(labels, g.bonds().iter().map(|b| (b.a, b.b, b.order.value())))
    }

    fn len(&self) -> usize {
        self.labels.len()
    }

    fn seed_ranks(&self) -> Vec<usize> {
        let keys: Vec<(u64, usize, Reverse<Vec<u8>>)> = (0..self.len())
            .map(|i| {
                let mut orders: Vec<u8> = self.adjacency[i].iter().map(|&(_, l)| l).collect();
                orders.sort_unstable_by(|a, b| b.cmp(a));
                (self.labels[i], self.adjacency[i].len(), Reverse(orders))
            })
            .collect();
        ranks_from_keys(&keys)
    }

    fn certificate(&self, ranks: &[usize]) -> Vec<u64> {
        let n = self.len();
        let mut cert = vec![0u64; n];
        for (i, &r) in ranks.iter().enumerate() {
            cert[r] = self.labels[i];
        }
        let mut edges: Vec<u64> = Vec::new();
        for (i, list) in self.adjacency.iter().enumerate() {
            for &(j, l) in list {
                let (a, b) = (ranks[i], ranks[j]);
                if a < b {
                    edges.push(((a as u64) << 40) | ((b as u64) << 8) | u64::from(l));
                }
            }
        }
        edges.sort_unstable();
        cert.push(u64::MAX);
        cert.extend(edges);
        cert
    }
}

/// Rank of each key = number of keys strictly smaller than it.
fn ranks_from_keys<K: Ord>(keys: &[K]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..keys.len()).collect();
    order.sort_by(|&a, &b| keys[a].cmp(&keys[b]));
    let mut ranks = vec![0; keys.len()];
    for (pos, &i) in order.iter().enumerate() {
        ranks[i] = if pos > 0 && keys[order[pos - 1]] == keys[i] { ranks[order[pos - 1]] } else { pos };
    }
    ranks
}

fn class_count(ranks: &[usize]) -> usize {
    let mut seen = vec![false; ranks.len()];
    ranks.iter().filter(|&&r| !std::mem::replace(&mut seen[r], true)).count()
}

/// Refines `ranks` until the partition is equitable.
fn refine(g: &LabeledGraph, ranks: &mut Vec<usize>) {
    let mut classes = class_count(ranks);
    loop {
        if classes == ranks.len() {
            return;
        }
        let keys: Vec<(usize, Vec<(usize, u8)>)> = (0..g.len())
            .map(|i| {
                let mut nb: Vec<(usize, u8)> = g.adjacency[i].iter().map(|&(j, l)| (ranks[j], l)).collect();
                nb.sort_unstable();
                (ranks[i], nb)
            })
            .collect();
        let next = ranks_from_keys(&keys);
        let next_classes = class_count(&next);
        *ranks = next;
        if next_classes == classes {
            return;
        }
        classes = next_classes;
    }
}

struct Search<'a> {
    graph: &'a LabeledGraph,
    best: Option<(Vec<u64>, Vec<usize>)>,
    leaves: usize,
}

impl Search<'_> {
    fn run(&mut self, mut ranks: Vec<usize>) {
        refine(self.graph, &mut ranks);
        let n = ranks.len();
        let mut sizes = vec![0usize; n];
        for &r in &ranks {
            sizes[r] += 1;
        }
        let Some(cell) = (0..n).find(|&r| sizes[r] > 1) else {
            self.leaves += 1;
            let cert = self.graph.certificate(&ranks);
            if self.best.as_ref().is_none_or(|(b, _)| cert < *b) {
                self.best = Some((cert, ranks));
            }
            return;
        };
        let members: Vec<usize> = (0..n).filter(|&i| ranks[i] == cell).collect();
        for (k, &pick) in members.iter().enumerate() {
            if k > 0 && self.leaves >= LEAF_BUDGET {
                break;
            }
            let mut next = ranks.clone();
            for &m in &members {
                if m != pick {
                    next[m] = cell + 1;
                }
            }
            self.run(next);
        }
    }
}

/// Canonical ranks (a permutation of `0..n`) of a labeled graph.
pub(crate) fn canonical_labeling(graph: &LabeledGraph) -> Vec<usize> {
    if graph.len() == 0 {
        return Vec::new();
    }
    let mut search = Search { graph, best: None, leaves: 0 };
    search.run(graph.seed_ranks());
    search.best.expect("search reaches at least one leaf").1
}

/// One distinct rank per atom, invariant under relabeling of the input.
pub fn canonical_ranks(graph: &MolGraph) -> Vec<usize> {
    canonical_labeling(&LabeledGraph::from_mol(graph))
}

/// Relabeling-invariant identity text: a Kekulé SMILES written by DFS in
/// canonical-rank order, with charges in brackets and no hydrogen counts.
pub fn canonical_key(graph: &MolGraph) -> String {
    write_dfs_smiles(graph, &canonical_ranks(graph), None)
}

fn bond_symbol(order: BondOrder) -> &'static str {
    match order {
        BondOrder::Single => "",
        BondOrder::Double => "=",
        BondOrder::Triple => "#",
    }
}

fn ring_label(out: &mut String, digit: usize) {
    if digit < 10 {
        let _ = write!(out, "{digit}");
    } else {
        let _ = write!(out, "%{digit:02}");
    }
}

fn atom_text(out: &mut String, g: &MolGraph, i: usize, hydrogens: Option<&ValenceTable>) {
    let atom = g.atom(i);
    if atom.charge == 0 && atom.element != Element::H {
        out.push_str(atom.element.symbol());
        return;
    }
    out.push('[');
    out.push_str(atom.element.symbol());
    if let Some(table) = hydrogens {
        let used = g.bond_order_sum(i);
        let h = table.target_valence(atom.element, atom.charge, used).map_or(0, |t| t - used);
        match h {
            0 => {}
            1 => out.push('H'),
            h => {
                let _ = write!(out, "H{h}");
            }
        }
    }
    match atom.charge {
        0 => {}
        1 => out.push('+'),
        -1 => out.push('-'),
        q if q > 0 => {
            let _ = write!(out, "+{q}");
        }
        q => {
            let _ = write!(out, "-{}", -q);
        }
    }
    out.push(']');
}

struct DfsLayout {
    children: Vec<Vec<(usize, BondOrder)>>,
    /// Ring bonds opened at this atom: (partner, order).
    opens: Vec<Vec<(usize, BondOrder)>>,
    /// Ring bonds closed at this atom: partner.
    closes: Vec<Vec<usize>>,
}

fn layout(g: &MolGraph, ranks: &[usize], root: usize) -> DfsLayout {
    let n = g.atom_count();
    let mut lay = DfsLayout { children: vec![Vec::new(); n], opens: vec![Vec::new(); n], closes: vec![Vec::new(); n] };
    let mut visited = vec![false; n];
    let sorted_nbrs: Vec<Vec<(usize, BondOrder)>> = (0..n)
        .map(|i| {
            let mut v = g.neighbors(i).to_vec();
            v.sort_by_key(|&(j, o)| (ranks[j], o));
            v
        })
        .collect();
    let mut done_ring = std::collections::HashSet::new();
    // (atom, parent, next neighbor position)
    let mut stack = vec![(root, usize::MAX, 0usize)];
    visited[root] = true;
    while let Some(top) = stack.last_mut() {
        let (u, parent) = (top.0, top.1);
        if top.2 >= sorted_nbrs[u].len() {
            stack.pop();
            continue;
        }
        let (v, order) = sorted_nbrs[u][top.2];
        top.2 += 1;
        if v == parent {
            continue;
        }
        if !visited[v] {
            visited[v] = true;
            lay.children[u].push((v, order));
            stack.push((v, u, 0));
        } else if done_ring.insert((u.min(v), u.max(v))) {
            lay.opens[v].push((u, order));
            lay.closes[u].push(v);
        }
    }
    lay
}

/// SMILES text from a DFS rooted at the rank-0 atom visiting neighbors in
/// rank order. With `hydrogens`, bracket atoms carry explicit H counts so
/// the output follows ordinary SMILES semantics.
pub(crate) fn write_dfs_smiles(g: &MolGraph, ranks: &[usize], hydrogens: Option<&ValenceTable>) -> String {
    let n = g.atom_count();
    let root = (0..n).min_by_key(|&i| ranks[i]).expect("non-empty graph");
    let lay = layout(g, ranks, root);

    let mut out = String::new();
    let mut digit_of = std::collections::HashMap::new();
    let mut free: Vec<bool> = vec![true; 100];
    // Explicit stack of pending work to avoid recursion on long chains.
    enum Step {
        Atom(usize),
        Text(&'static str),
    }
    let mut work = vec![Step::Atom(root)];
    while let Some(step) = work.pop() {
        let u = match step {
            Step::Text(t) => {
                out.push_str(t);
                continue;
            }
            Step::Atom(u) => u,
        };
        atom_text(&mut out, g, u, hydrogens);

        let mut closes = lay.closes[u].clone();
        closes.sort_by_key(|&p| ranks[p]);
        for p in closes {
            let d: usize = digit_of.remove(&(p.min(u), p.max(u))).expect("ring opened before close");
            ring_label(&mut out, d);
            free[d] = true;
        }
        let mut opens = lay.opens[u].clone();
        opens.sort_by_key(|&(p, _)| ranks[p]);
        for (p, order) in opens {
            let d = (1..100).find(|&d| free[d]).expect("fewer than 100 open rings");
            free[d] = false;
            digit_of.insert((p.min(u), p.max(u)), d);
            out.push_str(bond_symbol(order));
            ring_label(&mut out, d);
        }

        let children = &lay.children[u];
        // Pushed in reverse so the first child is written first.
        for (k, &(child, order)) in children.iter().enumerate().rev() {
            let branch = k + 1 < children.len();
            if branch {
                work.push(Step::Text(")"));
            }
            work.push(Step::Atom(child));
            work.push(Step::Text(bond_symbol(order)));
            if branch {
                work.push(Step::Text("("));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::molgraph::BondOrder::*;

    fn cyclopropene() -> MolGraph {
        MolGraph::new(vec![(Element::C, 0); 3], [(0, 1, Double), (1, 2, Single), (0, 2, Single)]).unwrap()
    }

    #[test]
    fn methane_rank() {
        let g = MolGraph::new(vec![(Element::C, 0)], []).unwrap();
        assert_eq!(canonical_ranks(&g), vec![0]);
        assert_eq!(canonical_key(&g), "C");
    }

    #[test]
    fn ethane_tie_is_broken() {
        let g = MolGraph::new(vec![(Element::C, 0); 2], [(0, 1, Single)]).unwrap();
        let mut r = canonical_ranks(&g);
        r.sort();
        assert_eq!(r, vec![0, 1]);
        assert_eq!(canonical_key(&g), "CC");
    }

    #[test]
    fn cyclopropene_ranks_put_alkene_first() {
        let g = cyclopropene();
        let r = canonical_ranks(&g);
        assert_eq!(r[2], 2);
        assert_eq!(canonical_key(&g), "C1=CC1");
    }

    #[test]
    fn permutation_invariant_key() {
        let g = cyclopropene();
        let key = canonical_key(&g);
        for perm in [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]] {
            assert_eq!(canonical_key(&g.permuted(&perm)), key);
        }
    }

    #[test]
    fn ethanol_and_dimethyl_ether_differ() {
        let ethanol =
            MolGraph::new(vec![(Element::C, 0), (Element::C, 0), (Element::O, 0)], [(0, 1, Single), (1, 2, Single)])
                .unwrap();
        let ether =
            MolGraph::new(vec![(Element::C, 0), (Element::O, 0), (Element::C, 0)], [(0, 1, Single), (1, 2, Single)])
                .unwrap();
        assert_ne!(canonical_key(&ethanol), canonical_key(&ether));
    }

    #[test]
    fn charged_atoms_are_bracketed() {
        let g =
            MolGraph::new(vec![(Element::N, 1), (Element::O, -1), (Element::O, 0)], [(0, 1, Single), (0, 2, Double)])
                .unwrap();
        let key = canonical_key(&g);
        assert!(key.contains("[N+]") && key.contains("[O-]"), "{key}");
        let ranks = canonical_ranks(&g);
        let with_h = write_dfs_smiles(&g, &ranks, Some(&ValenceTable::default()));
        assert_eq!(with_h, "[NH+]([O-])=O");
    }

    #[test]
    fn ring_digits_are_reused_after_close() {
        // spiro[2.2]pentane: two rings sharing atom 0
        let g = MolGraph::new(
            vec![(Element::C, 0); 5],
            [(0, 1, Single), (1, 2, Single), (2, 0, Single), (0, 3, Single), (3, 4, Single), (4, 0, Single)],
        )
        .unwrap();
        let key = canonical_key(&g);
        assert!(!key.contains('3'), "{key}");
    }
}
