use g2t_core::constrain::{detokenize, tokenize, ConstraintMode, Constraints};
use g2t_core::metrics::{morgan_fingerprint, murcko_scaffold, tanimoto, Scaffold};
use g2t_core::{
    canonical_key, graph_to_tree, parse_smiles, parse_tree, serialize_tree, tree_to_graph, write_smiles, MolGraph,
    RootPolicy, TreeFormat, ValenceTable,
};
use proptest::prelude::*;
use rand::seq::{IteratorRandom, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// A valid molecule from a seeded walk over the constrained decoder.
fn random_molecule(seed: u64, budget: usize) -> MolGraph {
    let c = Constraints::new(ValenceTable::default(), budget, ConstraintMode::Full);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = c.initial();
    let mut tokens = Vec::new();
    while !s.is_complete() {
        let t = c.allowed_next(&s).iter().choose(&mut rng).unwrap();
        c.advance_mut(&mut s, t).unwrap();
        tokens.push(t);
    }
    let tree = parse_tree(&g2t_core::TreeText::json(detokenize(&tokens))).unwrap();
    tree_to_graph(&tree).unwrap()
}

fn permuted(g: &MolGraph, seed: u64) -> MolGraph {
    let mut perm: Vec<usize> = (0..g.atom_count()).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    g.permuted(&perm)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn tree_roundtrip_any_root(seed in any::<u64>(), budget in 1usize..25, root in any::<u64>()) {
        let g = random_molecule(seed, budget);
        let key = canonical_key(&g);
        for policy in [RootPolicy::Canonical, RootPolicy::SeededRandom(root)] {
            let t = graph_to_tree(&g, policy);
            prop_assert_eq!(t.bond_entry_count(), g.bond_count());
            prop_assert_eq!(t.back_reference_count(), g.cyclomatic_number());
            for fmt in [TreeFormat::Json, TreeFormat::Xml] {
                let back = parse_tree(&serialize_tree(&t, fmt)).unwrap();
                prop_assert_eq!(&back, &t);
                prop_assert_eq!(canonical_key(&tree_to_graph(&back).unwrap()), key.clone());
            }
        }
    }

    #[test]
    fn token_stream_is_lossless(seed in any::<u64>(), budget in 1usize..25) {
        let g = random_molecule(seed, budget);
        let text = serialize_tree(&graph_to_tree(&g, RootPolicy::Canonical), TreeFormat::Json).text;
        let tokens = tokenize(&text).unwrap();
        prop_assert_eq!(detokenize(&tokens), text.clone());
        prop_assert_eq!(tokenize(&detokenize(&tokens)).unwrap(), tokens);
    }

    #[test]
    fn canonical_key_is_relabeling_invariant(seed in any::<u64>(), budget in 1usize..25, p in any::<u64>()) {
        let g = random_molecule(seed, budget);
        let h = permuted(&g, p);
        prop_assert_eq!(canonical_key(&g), canonical_key(&h));
        prop_assert_eq!(morgan_fingerprint(&g), morgan_fingerprint(&h));
        prop_assert_eq!(murcko_scaffold(&g).key(), murcko_scaffold(&h).key());
    }

    #[test]
    fn smiles_writer_roundtrips(seed in any::<u64>(), budget in 1usize..25) {
        let g = random_molecule(seed, budget);
        let text = write_smiles(&g);
        let back = parse_smiles(&text, &ValenceTable::default()).unwrap();
        prop_assert_eq!(canonical_key(&back), canonical_key(&g));
    }

    #[test]
    fn tanimoto_is_a_similarity(a in any::<u64>(), b in any::<u64>()) {
        let fa = morgan_fingerprint(&random_molecule(a, 15));
        let fb = morgan_fingerprint(&random_molecule(b, 15));
        let ab: f64 = tanimoto(&fa, &fb).unwrap();
        let ba: f64 = tanimoto(&fb, &fa).unwrap();
        prop_assert_eq!(ab, ba);
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert_eq!(tanimoto::<f64>(&fa, &fa).unwrap(), 1.0);
    }

    #[test]
    fn scaffold_is_idempotent(seed in any::<u64>(), budget in 1usize..25) {
        let g = random_molecule(seed, budget);
        match murcko_scaffold(&g) {
            Scaffold::Acyclic => prop_assert_eq!(g.cyclomatic_number(), 0),
            Scaffold::Rings(s) => {
                prop_assert!(g.cyclomatic_number() > 0);
                prop_assert_eq!(murcko_scaffold(&s), Scaffold::Rings(s.clone()));
            }
        }
    }
}
