//! Cross-module properties on random inputs.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use xsense_core::boolean::jointly_pivotal;
use xsense_core::couplings::triple_sample;
use xsense_core::dynamics::Edge;
use xsense_core::kernel::{
    exact_absolute_correlation, exact_exclusion_correlation, kernel_at, level_generator,
};
use xsense_core::spectral::{transform, walsh_hadamard};
use xsense_core::{BooleanFunction, Configuration, DynamicsGraph, LatticePatch, SubsetMask};

fn table(n: usize) -> impl Strategy<Value = (usize, Vec<i8>)> {
    prop::collection::vec(prop::bool::ANY, 1 << n)
        .prop_map(move |bits| (n, bits.into_iter().map(|b| if b { 1 } else { -1 }).collect()))
}

fn small_function() -> impl Strategy<Value = BooleanFunction> {
    (1usize..=8)
        .prop_flat_map(table)
        .prop_map(|(n, t)| BooleanFunction::from_table(n, t).unwrap())
}

fn weighted_graph(n: usize) -> impl Strategy<Value = DynamicsGraph> {
    prop::collection::vec((0..n, 0..n, 0.05f64..0.5), 1..2 * n).prop_map(move |raw| {
        let mut unique = std::collections::BTreeMap::new();
        for (u, v, rate) in raw.into_iter().filter(|(u, v, _)| u != v) {
            unique.insert((u.min(v), u.max(v)), rate);
        }
        let edges: Vec<Edge> = unique.into_iter().map(|((u, v), rate)| Edge { u, v, rate }).collect();
        let edges = if edges.is_empty() {
            vec![Edge { u: 0, v: 1, rate: 0.3 }]
        } else {
            edges
        };
        DynamicsGraph::from_edges(n, edges).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn parseval_and_round_trip(f in small_function()) {
        let sp = transform(&f).unwrap();
        prop_assert!((sp.total_mass() - 1.0).abs() <= 1e-12);
        let back = sp.inverse();
        for (x, &y) in back.iter().zip(f.table().unwrap()) {
            prop_assert_eq!(*x, y as f64);
        }
    }

    #[test]
    fn butterfly_is_an_involution_up_to_scale(v in prop::collection::vec(-4i32..5, 64)) {
        let mut data: Vec<f64> = v.iter().map(|&x| x as f64).collect();
        walsh_hadamard(&mut data);
        walsh_hadamard(&mut data);
        for (a, &b) in data.iter().zip(&v) {
            prop_assert_eq!(*a, 64.0 * b as f64);
        }
    }

    #[test]
    fn flip_conjugation_signs(f in small_function(), b in any::<u64>()) {
        let n = f.n();
        let b = SubsetMask::from_mask(n, b & ((1 << n) - 1)).unwrap();
        let sp = transform(&f).unwrap();
        let direct = transform(&f.compose_flip(&b).unwrap()).unwrap();
        let conj = sp.flip_conjugate(&b).unwrap();
        prop_assert_eq!(direct.coefficients(), conj.coefficients());
    }

    #[test]
    fn noise_correlation_decreases(f in small_function(), a in 0.0f64..1.0, d in 0.0f64..0.5) {
        let sp = transform(&f).unwrap();
        let b = (a + d).min(1.0);
        prop_assert!(sp.noise_correlation(b).unwrap() <= sp.noise_correlation(a).unwrap() + 1e-12);
    }

    #[test]
    fn pivotal_bound_on_random_tables((n, t) in (2usize..=7).prop_flat_map(table), p in 1u64..128) {
        let f = BooleanFunction::from_table(n, t).unwrap();
        let pm = p & ((1 << n) - 1);
        prop_assume!(pm != 0 && pm.count_ones() <= 3);
        let p = SubsetMask::from_mask(n, pm).unwrap();
        let lhs = transform(&f).unwrap().superset_mass_scaled(&p).unwrap();
        let jp = jointly_pivotal(&f, &p).unwrap();
        prop_assert!(lhs * jp.total as i128 <= jp.count as i128 * (1i128 << (2 * n)));
    }

    #[test]
    fn kernels_on_random_graphs(g in (3usize..=6).prop_flat_map(weighted_graph), t in 0.0f64..3.0) {
        let n = g.vertices();
        for k in 1..n {
            let p = kernel_at(&level_generator(&g, k).unwrap(), t).unwrap();
            prop_assert!(p.symmetry_error() <= 1e-10);
            prop_assert!(p.row_sum_error() <= 1e-12);
            prop_assert!(p.min_eigenvalue() >= -1e-10);
        }
    }

    #[test]
    fn exclusion_correlation_bounds(
        g in (3usize..=6).prop_flat_map(weighted_graph),
        seed in any::<u64>(),
        t in 0.0f64..3.0,
    ) {
        let n = g.vertices();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let table: Vec<i8> = (0..1 << n).map(|_| if rand::Rng::random::<bool>(&mut rng) { 1 } else { -1 }).collect();
        let sp = transform(&BooleanFunction::from_table(n, table).unwrap()).unwrap();
        let var = 1.0 - sp.coefficient(0).powi(2);
        let x = exact_exclusion_correlation(&sp, &g, t).unwrap();
        let a = exact_absolute_correlation(&sp, &g, t).unwrap();
        prop_assert!((exact_exclusion_correlation(&sp, &g, 0.0).unwrap() - var).abs() <= 1e-12);
        prop_assert!(x >= -1e-12 && x <= var + 1e-12);
        prop_assert!(x <= a + 1e-12);
    }

    #[test]
    fn triple_hamming_identity(n in 2usize..40, t in 0.0f64..3.0, seed in any::<u64>()) {
        let g = DynamicsGraph::complete(n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = triple_sample(n, t, &g, &mut rng).unwrap();
        prop_assert!(s.hamming_identity_holds());
        prop_assert_eq!(s.omega.count(), s.eta_t.count());
    }

    #[test]
    fn rhombus_self_duality(side in 2usize..9, seed in any::<u64>()) {
        let patch = LatticePatch::rhombus(side).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = Configuration::uniform(side * side, &mut rng).unwrap();
        let mut dual = Configuration::zeros(side * side).unwrap();
        for j in 0..side {
            for i in 0..side {
                dual.set(i * side + j, !w.get(j * side + i));
            }
        }
        prop_assert!(patch.crossing(&w).unwrap() != patch.crossing(&dual).unwrap());
    }

    #[test]
    fn crossing_is_monotone(side in 2usize..9, seed in any::<u64>(), extra in 0usize..81) {
        let patch = LatticePatch::rhombus(side).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = Configuration::uniform(side * side, &mut rng).unwrap();
        let mut more = w.clone();
        more.set(extra % (side * side), true);
        prop_assert!(!patch.crossing(&w).unwrap() || patch.crossing(&more).unwrap());
    }
}
