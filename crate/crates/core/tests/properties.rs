use proptest::prelude::*;

use moqa::annealer::{anneal, local_energy_delta, AnnealSchedule};
use moqa::expansion::{
    expand_dense, expand_power_series, expand_product, expand_sparse, normalize_for_expansion,
    symmetry_reduced_expand,
};
use moqa::generators::{partition_problem, random_multiobjective, spp_problem, PartitionGraph};
use moqa::oracle::{guarantee_holds, landscape_max};
use moqa::{BitVector, QuboMatrix, ShiftMode, SpinVector};

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * b.abs().max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn qubo_and_ising_agree(n in 1usize..7, seed in any::<u64>()) {
        let mut rng = moqa::rng::prng(seed);
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = moqa::rng::standard_normal(&mut rng);
                m[i * n + j] = v;
                m[j * n + i] = v;
            }
        }
        let q = QuboMatrix::new(n, m).unwrap();
        let ising = q.to_ising();
        for index in 0..1u64 << n {
            let b = BitVector::from_index(index, n);
            let lhs = q.evaluate(&b).unwrap();
            let rhs = ising.evaluate(&b.to_spins()).unwrap();
            prop_assert!(close(lhs, rhs, 1e-12), "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn spectral_shift_is_nonnegative(n in 1usize..9, m in 1usize..5, seed in any::<u64>()) {
        let p = random_multiobjective(n, m, seed).unwrap().shifted(ShiftMode::Spectral).unwrap();
        for l in p.landscapes().unwrap() {
            prop_assert!(l.iter().all(|v| *v >= -1e-9));
        }
        let exact = random_multiobjective(n, m, seed).unwrap().shifted(ShiftMode::Exact).unwrap();
        let low = landscape_max(&exact).unwrap().into_iter().fold(f64::INFINITY, f64::min);
        let per_min = exact.landscapes().unwrap().iter().flatten().copied().fold(f64::INFINITY, f64::min);
        prop_assert!(per_min.abs() <= 1e-9 && low >= -1e-9);
    }

    #[test]
    fn all_routes_agree(n in 1usize..8, m in 1usize..4, level in 1u32..5, seed in any::<u64>()) {
        let p = random_multiobjective(n, m, seed).unwrap().shifted(ShiftMode::Spectral).unwrap();
        let dense = expand_dense(&p, level).unwrap();
        let sparse = expand_sparse(&p, level).unwrap();
        let product = expand_product(&p, level).unwrap();
        prop_assert_eq!(dense.terms().collect::<Vec<_>>(), sparse.terms().collect::<Vec<_>>());
        let scale = dense.max_abs_coefficient();
        for (mask, c) in dense.terms() {
            prop_assert!((product.coefficient(mask) - c).abs() <= 1e-10 * scale);
        }
        for (mask, c) in product.terms() {
            prop_assert!((dense.coefficient(mask) - c).abs() <= 1e-10 * scale);
        }
        prop_assert!(dense.max_weight() <= 2 * level);
    }

    #[test]
    fn power_series_matches_single_levels(n in 1usize..7, seed in any::<u64>()) {
        let p = random_multiobjective(n, 2, seed).unwrap().shifted(ShiftMode::Spectral).unwrap();
        let series = expand_power_series(&p, 4).unwrap();
        for (k, h) in series.iter().enumerate() {
            prop_assert_eq!(h.level(), k as u32 + 1);
            prop_assert_eq!(h, &expand_product(&p, k as u32 + 1).unwrap());
        }
    }

    #[test]
    fn symmetry_reduction_matches_full_expansion(n in 1usize..8, level in 1u32..5, seed in any::<u64>()) {
        let graph = PartitionGraph::random(n, seed).unwrap();
        let p = partition_problem(&graph).unwrap().shifted(ShiftMode::Spectral).unwrap();
        let reduced = symmetry_reduced_expand(&p, level).unwrap();
        let full = expand_dense(&p, level).unwrap();
        let scale = full.max_abs_coefficient();
        for (mask, c) in full.terms() {
            prop_assert!((reduced.coefficient(mask) - c).abs() <= 1e-10 * scale, "mask {mask}");
        }
        prop_assert!(reduced.len() <= full.len());
    }

    #[test]
    fn set_partitioning_keeps_even_weights(n in 1usize..8, level in 1u32..5, seed in any::<u64>()) {
        let mut rng = moqa::rng::prng(seed);
        let v: Vec<f64> = (0..n).map(|_| moqa::rng::standard_normal(&mut rng).abs() + 0.1).collect();
        let p = spp_problem(&v).unwrap().shifted(ShiftMode::Spectral).unwrap();
        let h = symmetry_reduced_expand(&p, level).unwrap();
        prop_assert!(h.terms().all(|(m, _)| m.weight() % 2 == 0));
    }

    #[test]
    fn partition_pair_is_flip_symmetric(n in 1usize..8, seed in any::<u64>()) {
        let p = partition_problem(&PartitionGraph::random(n, seed).unwrap()).unwrap();
        let all = (1u64 << n) - 1;
        for b in 0..=all {
            let plus = p.objectives()[0].evaluate_index(b);
            let minus = p.objectives()[1].evaluate_index(b ^ all);
            prop_assert!(close(plus, minus, 1e-12));
        }
    }

    #[test]
    fn normalization_round_trips(n in 1usize..7, m in 1usize..4, seed in any::<u64>()) {
        let p = random_multiobjective(n, m, seed).unwrap();
        let norm = normalize_for_expansion(&p);
        for (o, e) in p.objectives().iter().zip(&norm.objectives) {
            for b in 0..1u64 << n {
                prop_assert!(close(e.evaluate_index(n, b), o.evaluate_index(b), 1e-12));
            }
        }
        prop_assert_eq!(normalize_for_expansion(&norm.to_problem().unwrap()), norm);
    }

    #[test]
    fn guarantee_is_never_broken(n in 2usize..8, m in 1usize..5, level in 1u32..9, seed in any::<u64>()) {
        let p = random_multiobjective(n, m, seed).unwrap().shifted(ShiftMode::Spectral).unwrap();
        let out = guarantee_holds(&p, level).unwrap();
        prop_assert!(out.holds());
    }

    #[test]
    fn local_delta_matches_flip(n in 1usize..7, seed in any::<u64>(), index in any::<u64>(), q in 0usize..7) {
        let p = random_multiobjective(n, 2, seed).unwrap().shifted(ShiftMode::Spectral).unwrap();
        let h = expand_product(&p, 2).unwrap();
        let index = index & ((1 << n) - 1);
        let q = q % n;
        let d = local_energy_delta(&h, &SpinVector::from_index(index, n), q).unwrap();
        let full = h.evaluate_index(index ^ (1 << q)) - h.evaluate_index(index);
        prop_assert!((d - full).abs() <= 1e-10 * h.max_abs_coefficient().max(1.0));
    }
}

#[test]
fn annealing_is_reproducible_per_seed() {
    let p = random_multiobjective(10, 3, 21).unwrap().shifted(ShiftMode::Spectral).unwrap();
    let h = expand_product(&p, 2).unwrap();
    let sched = AnnealSchedule {
        sweeps: 400,
        ..AnnealSchedule::default_for(&h, 5)
    };
    let a = anneal(&h, &sched).unwrap();
    assert_eq!(a, anneal(&h, &sched).unwrap());
    assert_eq!(a.delta_mismatches, 0);
    assert!(a.checked_moves > 0);
}
