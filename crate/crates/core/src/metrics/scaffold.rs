use std::collections::BTreeMap;

use num_traits::Float;

use super::MetricsError;
use crate::molgraph::{canonical_key, MolGraph};

/// Key shared by every molecule without rings.
pub const ACYCLIC: &str = "ACYCLIC";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Scaffold {
    Acyclic,
    Rings(MolGraph),
}

impl Scaffold {
    pub fn key(&self) -> String {
        match self {
            Scaffold::Acyclic => ACYCLIC.to_string(),
            Scaffold::Rings(g) => canonical_key(g),
        }
    }
}

/// Rings plus the linkers joining them: side chains are peeled off one
/// terminal atom at a time until none remain.
pub fn murcko_scaffold(g: &MolGraph) -> Scaffold {
    let n = g.atom_count();
    let mut degree: Vec<usize> = (0..n).map(|i| g.degree(i)).collect();
    let mut keep = vec![true; n];
    let mut queue: Vec<usize> = (0..n).filter(|&i| degree[i] <= 1).collect();
    while let Some(u) = queue.pop() {
        if !keep[u] {
            continue;
        }
        keep[u] = false;
        for &(v, _) in g.neighbors(u) {
            if keep[v] {
                degree[v] -= 1;
                if degree[v] == 1 {
                    queue.push(v);
                }
            }
        }
    }
    match keep.iter().any(|&k| k) {
        false => Scaffold::Acyclic,
        true => Scaffold::Rings(g.induced_subgraph(&keep).expect("the 2-core of a connected graph is connected")),
    }
}

/// Cosine similarity of two frequency tables.
pub fn cosine<F: Float>(a: &BTreeMap<String, usize>, b: &BTreeMap<String, usize>) -> F {
    let f = |x: usize| F::from(x).expect("count");
    let dot = a.iter().filter_map(|(k, &x)| b.get(k).map(|&y| f(x) * f(y))).fold(F::zero(), |s, v| s + v);
    let norm = |m: &BTreeMap<String, usize>| m.values().fold(F::zero(), |s, &x| s + f(x) * f(x)).sqrt();
    let denom = norm(a) * norm(b);
    if denom == F::zero() {
        F::zero()
    } else {
        (dot / denom).min(F::one())
    }
}

pub fn scaffold_counts(mols: &[MolGraph]) -> BTreeMap<String, usize> {
    let mut counts = BTreeMap::new();
    for g in mols {
        *counts.entry(murcko_scaffold(g).key()).or_insert(0) += 1;
    }
    counts
}

/// Cosine similarity between the scaffold-key frequency vectors.
pub fn scaf_similarity<F: Float>(gen: &[MolGraph], reference: &[MolGraph]) -> Result<F, MetricsError> {
    if gen.is_empty() || reference.is_empty() {
        return Err(MetricsError::EmptySet);
    }
    Ok(cosine(&scaffold_counts(gen), &scaffold_counts(reference)))
}
