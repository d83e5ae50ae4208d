use bordertn::boundary::{
    contract_sandwich, cost_kagome, cost_square, dense_sandwich, random_square_network, ContractOptions, CostModel,
    KagomeDims,
};
use bordertn::interpolation::{lagrange_weights, roots_of_unity, InterpolationPlan, SampleMode};
use bordertn::tensor::{contract, group_legs, split_leg, svd_truncate, DenseTensor, Leg, MatrixPoly};
use bordertn::zoo::smith::{mat_mul, smith_normal_form};
use bordertn::zoo::{check_cycle_vectors, cycle_orthogonal_vectors};
use bordertn::C64;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

fn tensor(ids: &[&str], dims: &[usize], seed: u64) -> DenseTensor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let legs = ids.iter().zip(dims).map(|(i, &d)| Leg::new(*i, d)).collect();
    DenseTensor::from_fn(legs, |_| C64::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5))).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn contraction_is_symmetric(da in 1usize..4, db in 1usize..4, dk in 1usize..4, seed in any::<u64>()) {
        let a = tensor(&["a", "k"], &[da, dk], seed);
        let b = tensor(&["k", "b"], &[dk, db], seed ^ 1);
        let ab = contract(&a, &b, &[("k", "k")]).unwrap();
        let ba = contract(&b, &a, &[("k", "k")]).unwrap().permuted(&ab.leg_ids()).unwrap();
        prop_assert!(ab.max_abs_diff(&ba).unwrap() < 1e-12);
    }

    #[test]
    fn group_then_split_round_trips(d0 in 1usize..4, d1 in 1usize..4, d2 in 1usize..4, seed in any::<u64>()) {
        let t = tensor(&["x", "y", "z"], &[d0, d1, d2], seed);
        let g = group_legs(&t, &[("xy", &["x", "y"][..]), ("z", &["z"][..])]).unwrap();
        let back = split_leg(&g, "xy", &[Leg::new("x", d0), Leg::new("y", d1)]).unwrap().permuted(&["x", "y", "z"]).unwrap();
        prop_assert_eq!(back.max_abs_diff(&t).unwrap(), 0.0);
    }

    #[test]
    fn svd_split_accounts_for_the_norm(m in 1usize..5, n in 1usize..5, chi in 1usize..5, seed in any::<u64>()) {
        let t = tensor(&["r", "c"], &[m, n], seed);
        let s = svd_truncate(&t, &["r"], chi, "b").unwrap();
        let back = contract(&s.u, &s.sv, &[("b", "b")]).unwrap().permuted(&["r", "c"]).unwrap();
        let lost = t.sub(&back).unwrap().norm_sqr();
        prop_assert!((lost - s.discarded_weight).abs() < 1e-10 * t.norm_sqr().max(1.0));
        prop_assert!(s.kept <= chi);
    }

    #[test]
    fn lagrange_weights_reproduce_polynomials(n in 1usize..9, r in 0.2f64..2.0, phase in 0.0f64..1.0) {
        let pts: Vec<C64> = roots_of_unity(n, r).into_iter().map(|p| p * C64::from_polar(1.0, phase)).collect();
        let w = lagrange_weights(&pts).unwrap();
        let sum: C64 = w.iter().sum();
        prop_assert!((sum - 1.0).norm() < 1e-12);
        let coeffs: Vec<C64> = (0..n).map(|k| C64::new(k as f64 + 1.0, -(k as f64))).collect();
        let p = |x: C64| coeffs.iter().rev().fold(C64::new(0.0, 0.0), |acc, c| acc * x + c);
        let at_zero: C64 = w.iter().zip(&pts).map(|(g, x)| g * p(*x)).sum();
        prop_assert!((at_zero - coeffs[0]).norm() < 1e-9);
    }

    #[test]
    fn oversampling_keeps_the_value(deg in 0usize..6, extra in 1usize..6) {
        let f = |x: C64| (0..=deg).map(|k| x.powu(k as u32) * (k as f64 - 1.5)).sum::<C64>();
        let exact = InterpolationPlan::new(SampleMode::Complex, deg, 0.7).unwrap();
        let over = InterpolationPlan::with_count(SampleMode::Complex, deg, deg + 1 + extra, 0.7).unwrap();
        let v = |p: &InterpolationPlan| p.weights.iter().zip(&p.points).map(|(w, x)| w * f(*x)).sum::<C64>();
        prop_assert!((v(&exact) - v(&over)).norm() < 1e-8);
    }

    #[test]
    fn smith_form_is_a_unimodular_diagonalization(entries in proptest::collection::vec(-6i64..7, 9), cols in 1usize..4) {
        let rows = 9 / cols.max(1);
        let a: Vec<Vec<i64>> = entries.chunks(cols).take(rows).map(<[i64]>::to_vec).collect();
        prop_assume!(a.iter().all(|r| r.len() == cols));
        let f = smith_normal_form(&a).unwrap();
        prop_assert_eq!(mat_mul(&mat_mul(&f.u, &a), &f.v), f.s.clone());
        let d = f.diagonal();
        for w in d.windows(2) {
            prop_assert_eq!(w[1] % w[0], 0);
        }
        prop_assert!(d.iter().all(|&x| x > 0));
    }

    #[test]
    fn matrix_poly_kron_commutes_with_evaluation(re in -1.0f64..1.0, im in -1.0f64..1.0) {
        let a = MatrixPoly::from_terms(2, 2, [
            (0, DMatrix::from_fn(2, 2, |i, j| C64::new((i + 2 * j) as f64, 0.0))),
            (2, DMatrix::from_fn(2, 2, |i, j| C64::new(0.0, i as f64 - j as f64))),
        ]).unwrap();
        let b = MatrixPoly::monomial(1, DMatrix::from_fn(1, 2, |_, j| C64::new(1.0 + j as f64, 0.0))).unwrap();
        let x = C64::new(re, im);
        let lhs = a.kron(&b).unwrap().evaluate(x);
        let rhs = a.evaluate(x).kronecker(&b.evaluate(x));
        prop_assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn kagome_cost_is_monotone_in_every_bond(k in proptest::collection::vec(1.0f64..5.0, 12), bump in 0usize..12) {
        let m = CostModel::new(4.0, 2.0);
        let arr = |s: &[f64]| [s[0], s[1], s[2]];
        let dims = |v: &[f64]| KagomeDims { k_up: arr(&v[0..3]), k_down: arr(&v[3..6]), d_up: arr(&v[6..9]), d_down: arr(&v[9..12]) };
        let mut bigger = k.clone();
        bigger[bump] *= 2.0;
        prop_assert!(cost_kagome(&m, &dims(&bigger)) >= cost_kagome(&m, &dims(&k)));
        prop_assert!(cost_square(&m, k[0], k[1]) > 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn boundary_contraction_matches_dense(lx in 2usize..4, ly in 1usize..4, d1 in 1usize..3, d2 in 1usize..3, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ket = random_square_network(lx, ly, d1, d2, 2, &mut rng).unwrap();
        let bra = random_square_network(lx, ly, d1, d2, 2, &mut rng).unwrap();
        let want = dense_sandwich(&ket, &bra, &BTreeMap::new()).unwrap();
        for opts in [ContractOptions::exact(), ContractOptions::truncated(64), ContractOptions { two_sided: false, ..ContractOptions::exact() }] {
            let got = contract_sandwich(&ket, &bra, &opts).unwrap().value;
            prop_assert!((got - want).norm() <= 1e-10 * want.norm());
        }
    }

    #[test]
    fn cycle_vectors_hold_for_small_cycles(m in 4usize..8) {
        let v = cycle_orthogonal_vectors(m).unwrap();
        prop_assert!(check_cycle_vectors(&v).is_ok());
    }
}
