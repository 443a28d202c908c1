use itertools::Itertools;
use proptest::prelude::*;

use permclass::decomposition::{
    canonical_tree, class_membership, eval_tree, forest_decode, forest_encode, pack, read_pattern_forest, unpack,
};
use permclass::{ClassSpec, Permutation};

fn s4() -> ClassSpec {
    ClassSpec::load(concat!(env!("CARGO_MANIFEST_DIR"), "/classes/s2413_3142.json")).unwrap()
}

fn permutation(max: usize) -> impl Strategy<Value = Permutation> {
    (1..=max)
        .prop_flat_map(|n| Just((1..=n as u32).collect::<Vec<_>>()).prop_shuffle())
        .prop_map(|v| Permutation::new(v).unwrap())
}

/// Separable permutation built from a random binary ⊕/⊖ expression.
fn separable(max_leaves: usize) -> impl Strategy<Value = Permutation> {
    let leaf = Just(Permutation::identity(1)).boxed();
    leaf.prop_recursive(6, max_leaves as u32, 2, |inner| {
        (inner.clone(), inner, any::<bool>()).prop_map(|(a, b, plus)| {
            if plus {
                Permutation::plus_sum(&[a, b])
            } else {
                Permutation::minus_sum(&[a, b])
            }
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn canonical_tree_evaluates_back(nu in permutation(40)) {
        let t = canonical_tree(&nu);
        prop_assert_eq!(&eval_tree(&t.clone().into_inner()).unwrap(), &nu);
        if nu.plus_components().len() == 1 {
            prop_assert_eq!(unpack(&pack(&t).unwrap()), t);
        } else {
            prop_assert!(pack(&t).is_err());
        }
    }

    #[test]
    fn separable_forest_round_trip(nu in separable(40)) {
        let spec = ClassSpec::separable();
        prop_assert!(class_membership(&nu, &spec));
        let f = forest_encode(&nu, &spec).unwrap();
        prop_assert_eq!(f.size(), nu.len());
        prop_assert_eq!(forest_decode(&f), nu);
    }

    #[test]
    fn forest_reads_patterns(nu in separable(30), picks in proptest::collection::vec(any::<prop::sample::Index>(), 1..6)) {
        let f = forest_encode(&nu, &ClassSpec::separable()).unwrap();
        let mut idx: Vec<usize> = picks.iter().map(|i| i.index(nu.len()) + 1).collect();
        idx.sort_unstable();
        idx.dedup();
        prop_assert_eq!(read_pattern_forest(&f, &idx).unwrap(), nu.pattern_at(&idx).unwrap());
    }

    #[test]
    fn membership_is_closed_under_patterns(nu in permutation(9), pick in any::<prop::sample::Index>()) {
        let spec = s4();
        if class_membership(&nu, &spec) && nu.len() > 1 {
            let drop = pick.index(nu.len()) + 1;
            let idx: Vec<usize> = (1..=nu.len()).filter(|&i| i != drop).collect();
            prop_assert!(class_membership(&nu.pattern_at(&idx).unwrap(), &spec));
        }
    }
}

#[test]
fn every_pattern_of_every_small_member_reads_correctly() {
    let spec = s4();
    for nu in Permutation::all(7).filter(|nu| class_membership(nu, &spec)).step_by(13) {
        let f = forest_encode(&nu, &spec).unwrap();
        for k in 1..=4 {
            for idx in (1..=7).combinations(k) {
                assert_eq!(read_pattern_forest(&f, &idx).unwrap(), nu.pattern_at(&idx).unwrap(), "{nu} {idx:?}");
            }
        }
    }
}

#[test]
fn non_members_are_rejected() {
    let spec = ClassSpec::separable();
    let nu: Permutation = "2413".parse().unwrap();
    assert!(!class_membership(&nu, &spec));
    assert!(forest_encode(&nu, &spec).is_err());
    assert!(forest_encode(&nu, &s4()).is_ok());
}
