//! Kekulé assignment for aromatic input.
//!
//! Aromatic atoms that still have room for one more bond order must receive
//! exactly one double bond drawn from their aromatic ring bonds. The pairing
//! is a perfect matching over those atoms, found by backtracking with a
//! fewest-options-first rule and ties broken by canonical rank, so the
//! result depends only on the molecule and not on input atom order.

use thiserror::Error;

use crate::molgraph::{bridges, canonical_labeling, BondOrder, Element, LabeledGraph, ValenceTable};

/// Search nodes explored before giving up on a matching.
const STEP_LIMIT: usize = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AromaticAtom {
    pub element: Element,
    pub charge: i8,
    pub aromatic: bool,
    /// Hydrogens written explicitly in a bracket atom.
    pub hydrogens: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KekulizeError {
    #[error("aromatic atom {0} is not in a ring")]
    NotInRing(usize),
    #[error("cannot kekulize aromatic system: unmatched atoms {0:?}")]
    Unmatched(Vec<usize>),
}

/// Assigns a concrete order to every bond. `bonds[k].2 == None` marks an
/// aromatic bond; fixed orders are passed through unchanged.
pub fn kekulize(
    atoms: &[AromaticAtom],
    bonds: &[(usize, usize, Option<BondOrder>)],
    table: &ValenceTable,
) -> Result<Vec<BondOrder>, KekulizeError> {
    let n = atoms.len();
    let mut adjacency: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (k, &(a, b, _)) in bonds.iter().enumerate() {
        adjacency[a].push((b, k));
        adjacency[b].push((a, k));
    }
    let bridge_set = bridges(&adjacency);
    let is_ring_bond = |k: usize| {
        let (a, b, _) = bonds[k];
        !bridge_set.contains(&(a.min(b), a.max(b)))
    };

    let mut orders: Vec<BondOrder> = bonds.iter().map(|&(_, _, o)| o.unwrap_or(BondOrder::Single)).collect();
    if !atoms.iter().any(|a| a.aromatic) && bonds.iter().all(|b| b.2.is_some()) {
        return Ok(orders);
    }

    for (i, atom) in atoms.iter().enumerate() {
        if atom.aromatic && !adjacency[i].iter().any(|&(_, k)| is_ring_bond(k)) {
            return Err(KekulizeError::NotInRing(i));
        }
    }

    // Explicit valence with every aromatic bond counted as single.
    let needs: Vec<bool> = (0..n)
        .map(|i| {
            let atom = &atoms[i];
            if !atom.aromatic {
                return false;
            }
            let used: u32 = adjacency[i].iter().map(|&(_, k)| u32::from(orders[k].value())).sum::<u32>()
                + u32::from(atom.hydrogens);
            table.target_valence(atom.element, atom.charge, used).is_some_and(|t| t > used)
        })
        .collect();

    // Candidate double bonds: aromatic ring bonds joining two needy atoms.
    let mut candidates: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (k, &(a, b, o)) in bonds.iter().enumerate() {
        if o.is_none() && is_ring_bond(k) && needs[a] && needs[b] {
            candidates[a].push((b, k));
            candidates[b].push((a, k));
        }
    }

    let labels = atoms
        .iter()
        .map(|a| {
            ((a.element.ordinal() as u64) << 16)
                | (((i64::from(a.charge) + 4) as u64) << 8)
                | (u64::from(a.aromatic) << 7)
                | u64::from(a.hydrogens)
        })
        .collect();
    let ranks = canonical_labeling(&LabeledGraph::new(
        labels,
        bonds.iter().map(|&(a, b, o)| (a, b, o.map_or(4, BondOrder::value))),
    ));
    for list in &mut candidates {
        list.sort_by_key(|&(j, _)| ranks[j]);
    }

    // Odd components can never be perfectly matched.
    let mut component = vec![usize::MAX; n];
    for start in 0..n {
        if !needs[start] || component[start] != usize::MAX {
            continue;
        }
        component[start] = start;
        let mut members = vec![start];
        let mut stack = vec![start];
        while let Some(u) = stack.pop() {
            for &(v, _) in &candidates[u] {
                if component[v] == usize::MAX {
                    component[v] = start;
                    members.push(v);
                    stack.push(v);
                }
            }
        }
        if members.len() % 2 == 1 {
            members.sort_unstable();
            return Err(KekulizeError::Unmatched(members));
        }
    }

    let mut matcher = Matcher { candidates: &candidates, ranks: &ranks, mate: vec![None; n], steps: 0 };
    let open: Vec<usize> = (0..n).filter(|&i| needs[i]).collect();
    if !matcher.solve(&open) {
        let unmatched = open.into_iter().filter(|&i| matcher.mate[i].is_none()).collect::<Vec<_>>();
        return Err(KekulizeError::Unmatched(if unmatched.is_empty() {
            (0..n).filter(|&i| needs[i]).collect()
        } else {
            unmatched
        }));
    }
    for (k, &(a, b, o)) in bonds.iter().enumerate() {
        if o.is_none() && matcher.mate[a].is_some_and(|(m, bond)| m == b && bond == k) {
            orders[k] = BondOrder::Double;
        }
    }
    Ok(orders)
}

struct Matcher<'a> {
    candidates: &'a [Vec<(usize, usize)>],
    ranks: &'a [usize],
    /// Partner atom and bond index.
    mate: Vec<Option<(usize, usize)>>,
    steps: usize,
}

impl Matcher<'_> {
    fn free_options(&self, atom: usize) -> usize {
        self.candidates[atom].iter().filter(|&&(j, _)| self.mate[j].is_none()).count()
    }

    fn solve(&mut self, atoms: &[usize]) -> bool {
        self.steps += 1;
        if self.steps > STEP_LIMIT {
            return false;
        }
        let pick = atoms
            .iter()
            .copied()
            .filter(|&a| self.mate[a].is_none())
            .min_by_key(|&a| (self.free_options(a), self.ranks[a]));
        let Some(atom) = pick else {
            return true;
        };
        let options: Vec<(usize, usize)> =
            self.candidates[atom].iter().copied().filter(|&(j, _)| self.mate[j].is_none()).collect();
        for (partner, bond) in options {
            self.mate[atom] = Some((partner, bond));
            self.mate[partner] = Some((atom, bond));
            if self.solve(atoms) {
                return true;
            }
            self.mate[atom] = None;
            self.mate[partner] = None;
        }
        false
    }
}
