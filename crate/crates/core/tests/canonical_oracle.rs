mod support;

use g2t_core::metrics::uniqueness;
use g2t_core::{canonical_key, parse_smiles, MolGraph, ValenceTable};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use support::iso::isomorphic;

fn corpus(name: &str, take: usize) -> Vec<MolGraph> {
    let path = format!("{}/../../data/{name}.smi", env!("CARGO_MANIFEST_DIR"));
    let table = ValenceTable::default();
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter_map(|l| parse_smiles(l.split('\t').next()?, &table).ok())
        .take(take)
        .collect()
}

fn shuffled(g: &MolGraph, rng: &mut ChaCha8Rng) -> MolGraph {
    let mut perm: Vec<usize> = (0..g.atom_count()).collect();
    perm.shuffle(rng);
    g.permuted(&perm)
}

#[test]
fn keys_agree_with_brute_force_isomorphism() {
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    // Small fragments collide often, which exercises both answers.
    let mut mols = corpus("qm9_like", 30);
    for i in 0..20 {
        let copy = shuffled(&mols[i % 7], &mut rng);
        mols.push(copy);
    }
    mols.shuffle(&mut rng);
    let keys: Vec<String> = mols.iter().map(canonical_key).collect();
    let mut equal_pairs = 0;
    for i in 0..mols.len() {
        for j in i + 1..mols.len() {
            let iso = isomorphic(&mols[i], &mols[j]);
            assert_eq!(keys[i] == keys[j], iso, "{} vs {}", keys[i], keys[j]);
            equal_pairs += usize::from(iso);
        }
    }
    assert!(equal_pairs >= 20);

    let mut classes: Vec<&MolGraph> = Vec::new();
    for g in &mols {
        if !classes.iter().any(|c| isomorphic(c, g)) {
            classes.push(g);
        }
    }
    let u: f64 = uniqueness(&mols).unwrap();
    assert!((u - classes.len() as f64 / mols.len() as f64).abs() < 1e-12);
}

#[test]
fn keys_survive_relabeling_on_drug_like_molecules() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for g in corpus("zinc_like", 150) {
        let key = canonical_key(&g);
        for _ in 0..5 {
            let h = shuffled(&g, &mut rng);
            assert_eq!(canonical_key(&h), key);
        }
    }
}

#[test]
fn symmetric_cages_and_regular_graphs() {
    let table = ValenceTable::default();
    // Highly symmetric inputs where refinement alone leaves large ties.
    let cases = ["C12C3C4C1C5C2C3C45", "C1CC2CCC1CC2", "C1CCCCCCCCCCC1", "C12C3C1C23", "C1CC11CC1"];
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for s in cases {
        let g = parse_smiles(s, &table).unwrap();
        for _ in 0..10 {
            let h = shuffled(&g, &mut rng);
            assert!(isomorphic(&g, &h));
            assert_eq!(canonical_key(&h), canonical_key(&g), "{s}");
        }
    }
}
