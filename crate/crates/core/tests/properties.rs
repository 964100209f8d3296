use std::collections::BTreeSet;

use polarize_core::hierarchy::{check_pi_soundness, PolarizationMap};
use polarize_core::lp::{verify_certificate, FarkasRay, LinearProgram, Relation, SparseRow};
use polarize_core::moments::{canonical_index, count_indices, enumerate_indices, multichoose, Letter};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

const DIMS: [usize; 2] = [9, 8];
const LEVEL: usize = 3;

fn word() -> impl Strategy<Value = Vec<Letter>> {
    let space = |s: usize| {
        (
            prop::collection::vec(0..DIMS[s], 0..=LEVEL),
            0..=LEVEL,
        )
            .prop_map(move |(coords, units)| {
                let mut letters: Vec<Letter> = coords.into_iter().map(|c| Letter::coord(s, c)).collect();
                letters.extend((0..units).map(|_| Letter::unit(s)));
                letters
            })
    };
    (space(0), space(1)).prop_map(|(mut a, b)| {
        a.extend(b);
        a
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn canonical_index_ignores_letter_order(letters in word(), seed in any::<u64>()) {
        let base = canonical_index(LEVEL, &letters, &DIMS).unwrap();
        let mut shuffled = letters.clone();
        shuffled.shuffle(&mut StdRng::seed_from_u64(seed));
        prop_assert_eq!(canonical_index(LEVEL, &shuffled, &DIMS).unwrap(), base.clone());
        for s in 0..2 {
            let mut expected: Vec<u32> = letters
                .iter()
                .filter(|l| l.space == s)
                .filter_map(|l| match l.kind {
                    polarize_core::moments::LetterKind::Coordinate(c) => Some(c as u32),
                    polarize_core::moments::LetterKind::Unit => None,
                })
                .collect();
            expected.sort_unstable();
            prop_assert_eq!(&base.per_space()[s], &expected);
        }
    }
}

/// Multisets of size `n` over `alphabet` letters, counted by sorting every
/// ordered word.
fn brute_multisets(alphabet: usize, n: usize) -> usize {
    let mut seen = BTreeSet::new();
    let total = alphabet.pow(n as u32);
    for mut code in 0..total {
        let mut w = Vec::with_capacity(n);
        for _ in 0..n {
            w.push(code % alphabet);
            code /= alphabet;
        }
        w.sort_unstable();
        seen.insert(w);
    }
    seen.len()
}

#[test]
fn count_matches_enumeration_for_small_alphabets() {
    for n in 0..=3usize {
        for a in 1..=10usize {
            let expected = brute_multisets(a, n);
            assert_eq!(multichoose(a as u128, n as u128), expected as u128, "alphabet {a}, n {n}");
            let one = enumerate_indices(n, &[a - 1]);
            assert_eq!(one.len(), expected);
            assert_eq!(count_indices(n, &[a - 1]), expected as u128);
            let distinct: BTreeSet<_> = one.iter().cloned().collect();
            assert_eq!(distinct.len(), one.len());
            for b in 1..=10usize {
                let dims = [a - 1, b - 1];
                let listed = enumerate_indices(n, &dims).len() as u128;
                assert_eq!(listed, count_indices(n, &dims), "alphabets {a},{b}, n {n}");
                assert_eq!(listed, (expected * brute_multisets(b, n)) as u128);
            }
        }
    }
}

#[test]
fn nested_rectangle_counts() {
    assert_eq!(count_indices(1, &[9, 8]), 90);
    assert_eq!(count_indices(2, &[9, 8]), 2475);
    assert_eq!(count_indices(3, &[9, 8]), 36300);
}

#[test]
fn polarization_maps_pass_soundness_sampling() {
    for seed in 0..5 {
        assert!(check_pi_soundness(&PolarizationMap::Identity, 16, Some((4, 4)), 100, seed));
        assert!(check_pi_soundness(&PolarizationMap::HilbertSchmidt, 16, Some((4, 4)), 100, seed));
        assert!(check_pi_soundness(&PolarizationMap::MatrixProduct, 16, Some((4, 4)), 100, seed));
        assert!(check_pi_soundness(&PolarizationMap::MatrixProduct, 6, Some((2, 3)), 100, seed));
    }
}

/// `x + y ≥ 2 + 1e-6` over the unit box: infeasible by a hair.
fn tight_instance() -> (LinearProgram, FarkasRay) {
    let mut lp = LinearProgram::new("tight");
    lp.add_variable("x", 0.0, 1.0);
    lp.add_variable("y", 0.0, 1.0);
    lp.add_constraint(SparseRow::from_pairs([(0, 1.0), (1, 1.0)]), Relation::GreaterEq, 2.0 + 1e-6);
    let ray = FarkasRay { rows: vec![1.0], lower: vec![0.0, 0.0], upper: vec![1.0, 1.0] };
    (lp, ray)
}

#[test]
fn tight_ray_is_accepted() {
    let (lp, ray) = tight_instance();
    assert!(verify_certificate(&lp, &ray, 1e-7).unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn perturbed_rays_are_rejected(seed in any::<u64>()) {
        let (lp, mut ray) = tight_instance();
        let mut rng = StdRng::seed_from_u64(seed);
        let size = rng.gen_range(1e-3..2e-3);
        ray.rows[0] += if rng.gen_bool(0.5) { size } else { -size };
        prop_assert!(!verify_certificate(&lp, &ray, 1e-7).unwrap());
    }

    #[test]
    fn scaled_rays_stay_valid(scale in 1e-3f64..1e3) {
        let (lp, ray) = tight_instance();
        let scaled = FarkasRay {
            rows: ray.rows.iter().map(|v| v * scale).collect(),
            lower: ray.lower.iter().map(|v| v * scale).collect(),
            upper: ray.upper.iter().map(|v| v * scale).collect(),
        };
        prop_assert!(verify_certificate(&lp, &scaled, 1e-7).unwrap());
    }
}
