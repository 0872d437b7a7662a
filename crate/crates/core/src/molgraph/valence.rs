use std::collections::BTreeMap;

use super::{Element, MolGraph};

/// Allowed total bond-order sums per element for neutral atoms. A formal
/// charge `q` shifts every entry by `q`; non-positive results are dropped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValenceTable {
    base: BTreeMap<Element, Vec<u8>>,
}

impl Default for ValenceTable {
    fn default() -> Self {
        use Element::*;
        let base = [
            (B, vec![3]),
            (C, vec![4]),
            (N, vec![3]),
            (O, vec![2]),
            (F, vec![1]),
            (P, vec![3, 5]),
            (S, vec![2, 4, 6]),
            (Cl, vec![1]),
            (Br, vec![1]),
            (I, vec![1]),
            (H, vec![1]),
        ];
        ValenceTable { base: base.into_iter().collect() }
    }
}

impl ValenceTable {
    /// Custom table. Elements missing from `base` get no allowed valence.
    pub fn new(base: BTreeMap<Element, Vec<u8>>) -> Self {
        let base = base
            .into_iter()
            .map(|(e, mut v)| {
                v.sort_unstable();
                v.dedup();
                (e, v)
            })
            .collect();
        ValenceTable { base }
    }

    pub fn base(&self, element: Element) -> &[u8] {
        self.base.get(&element).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Allowed bond-order sums for `element` carrying formal charge `charge`,
    /// ascending.
    pub fn allowed(&self, element: Element, charge: i8) -> Vec<u32> {
        self.base(element)
            .iter()
            .map(|&v| i32::from(v) + i32::from(charge))
            .filter(|&v| v > 0)
            .map(|v| v as u32)
            .collect()
    }

    /// Largest allowed bond-order sum; 0 when nothing is allowed.
    pub fn max_valence(&self, element: Element, charge: i8) -> u32 {
        self.allowed(element, charge).last().copied().unwrap_or(0)
    }

    /// Smallest allowed sum that is at least `used`.
    pub fn target_valence(&self, element: Element, charge: i8, used: u32) -> Option<u32> {
        self.allowed(element, charge).into_iter().find(|&v| v >= used)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ValenceVerdict {
    Ok,
    /// Indices of atoms whose bond-order sum exceeds every allowed value.
    Violations(Vec<usize>),
}

impl ValenceVerdict {
    pub fn is_ok(&self) -> bool {
        matches!(self, ValenceVerdict::Ok)
    }
}

/// Flags atoms whose explicit valence exceeds the table's maximum. Any
/// shortfall is taken up by implicit hydrogens and is never a violation.
pub fn validate_valence(graph: &MolGraph, table: &ValenceTable) -> ValenceVerdict {
    let bad: Vec<usize> = graph
        .atoms()
        .iter()
        .filter(|a| graph.bond_order_sum(a.index) > table.max_valence(a.element, a.charge))
        .map(|a| a.index)
        .collect();
    if bad.is_empty() {
        ValenceVerdict::Ok
    } else {
        ValenceVerdict::Violations(bad)
    }
}
