use num_traits::Float;

use super::MetricsError;
use crate::molgraph::MolGraph;

pub const FINGERPRINT_BITS: usize = 2048;
pub const FINGERPRINT_RADIUS: usize = 2;

/// Fixed-length bit vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Fingerprint {
    words: Vec<u64>,
    len: usize,
}

impl Fingerprint {
    pub fn zeros(len: usize) -> Self {
        Fingerprint { words: vec![0; len.div_ceil(64)], len }
    }

    pub fn from_bits(len: usize, bits: impl IntoIterator<Item = usize>) -> Self {
        let mut fp = Fingerprint::zeros(len);
        for b in bits {
            fp.set(b);
        }
        fp
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn set(&mut self, bit: usize) {
        assert!(bit < self.len, "bit {bit} out of range");
        self.words[bit / 64] |= 1 << (bit % 64);
    }

    pub fn get(&self, bit: usize) -> bool {
        self.words[bit / 64] & (1 << (bit % 64)) != 0
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(|&b| self.get(b))
    }
}

/// splitmix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Order-sensitive hash of a word sequence: `h = mix64(h ^ x)` per word,
/// starting from the sequence length.
pub fn hash_words(words: &[u64]) -> u64 {
    words.iter().fold(mix64(words.len() as u64), |h, &x| mix64(h ^ x))
}

/// Morgan/ECFP-style fingerprint. Atom identifiers start from
/// (element, charge, degree, bond-order sum, ring membership) and are
/// refined `radius` times from the sorted (bond order, neighbor id) list.
/// An environment whose bond set repeats one already seen is skipped, so
/// each distinct environment sets one bit (`id mod len`).
pub fn morgan_fingerprint_with(g: &MolGraph, radius: usize, len: usize) -> Fingerprint {
    let n = g.atom_count();
    let ring = g.ring_atoms();
    let bond_index =
        |i: usize, j: usize| g.bonds().iter().position(|b| (b.a, b.b) == (i.min(j), i.max(j))).expect("bond exists");

    let mut ids: Vec<u64> = (0..n)
        .map(|i| {
            let a = g.atom(i);
            hash_words(&[
                0,
                a.element.ordinal() as u64,
                (i64::from(a.charge) + 8) as u64,
                g.degree(i) as u64,
                u64::from(g.bond_order_sum(i)),
                u64::from(ring[i]),
            ])
        })
        .collect();
    let mut fp = Fingerprint::zeros(len);
    for &id in &ids {
        fp.set((id % len as u64) as usize);
    }

    // Bond set covered by each atom's current environment.
    let mut cover: Vec<Vec<bool>> = vec![vec![false; g.bond_count()]; n];
    let mut seen_covers: Vec<Vec<bool>> = Vec::new();
    for r in 1..=radius {
        let mut next_ids = Vec::with_capacity(n);
        let mut next_cover = cover.clone();
        for i in 0..n {
            let mut words = vec![r as u64, ids[i]];
            let mut nbrs: Vec<(u64, u64)> =
                g.neighbors(i).iter().map(|&(j, o)| (u64::from(o.value()), ids[j])).collect();
            nbrs.sort_unstable();
            for (o, id) in nbrs {
                words.push(o);
                words.push(id);
            }
            next_ids.push(hash_words(&words));
            for &(j, _) in g.neighbors(i) {
                next_cover[i][bond_index(i, j)] = true;
                for (k, &c) in cover[j].iter().enumerate() {
                    next_cover[i][k] |= c;
                }
            }
        }
        // Deterministic order so that duplicate environments keep the smaller id.
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&i| next_ids[i]);
        for i in order {
            let grew = next_cover[i] != cover[i];
            if grew && !seen_covers.contains(&next_cover[i]) {
                seen_covers.push(next_cover[i].clone());
                fp.set((next_ids[i] % len as u64) as usize);
            }
        }
        ids = next_ids;
        cover = next_cover;
    }
    fp
}

pub fn morgan_fingerprint(g: &MolGraph) -> Fingerprint {
    morgan_fingerprint_with(g, FINGERPRINT_RADIUS, FINGERPRINT_BITS)
}

/// |a ∧ b| / |a ∨ b|, with two empty fingerprints scoring 1.
pub fn tanimoto<F: Float>(a: &Fingerprint, b: &Fingerprint) -> Result<F, MetricsError> {
    if a.len != b.len {
        return Err(MetricsError::LengthMismatch(a.len, b.len));
    }
    let (mut both, mut either) = (0u32, 0u32);
    for (x, y) in a.words.iter().zip(&b.words) {
        both += (x & y).count_ones();
        either += (x | y).count_ones();
    }
    if either == 0 {
        return Ok(F::one());
    }
    Ok(F::from(both).expect("count") / F::from(either).expect("count"))
}
