use mimo_decay::cplx_linalg::{gram_det, real_embed, ComplexMat};
use mimo_decay::lattice_codes::random_ensemble;
use mimo_decay::{brute_force_decay, construct_witness, Complex64, LatticeSpec};
use proptest::prelude::*;

const BUDGET: u64 = 10_000_000;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// det(M M^H) by forming the complex Gram matrix and expanding along rows;
/// only usable for a handful of rows.
fn gram_det_by_cofactors(m: &ComplexMat) -> f64 {
    fn det(a: &[Vec<Complex64>]) -> Complex64 {
        if a.is_empty() {
            return Complex64::new(1.0, 0.0);
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, x) in a[0].iter().enumerate() {
            let minor: Vec<Vec<Complex64>> =
                a[1..].iter().map(|row| row.iter().enumerate().filter(|(c, _)| *c != j).map(|(_, v)| *v).collect()).collect();
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            acc += x * det(&minor) * sign;
        }
        acc
    }
    let rows = m.rows();
    let g: Vec<Vec<Complex64>> = (0..rows)
        .map(|i| (0..rows).map(|j| (0..m.cols()).map(|c| m[(i, c)] * m[(j, c)].conj()).sum()).collect())
        .collect();
    det(&g).re
}

fn small_matrix() -> impl Strategy<Value = ComplexMat> {
    (1usize..=4, 1usize..=5).prop_flat_map(|(r, c)| {
        prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0), r * c)
            .prop_map(move |v| ComplexMat::new(r, c, v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect()).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gram_det_agrees_with_cofactor_expansion(m in small_matrix()) {
        let fast = gram_det(&m).unwrap();
        let slow = gram_det_by_cofactors(&m);
        let scale = (0..m.rows()).map(|i| (0..m.cols()).map(|c| m[(i, c)].norm_sqr()).sum::<f64>()).product::<f64>();
        prop_assert!(fast >= 0.0);
        prop_assert!((fast - slow.max(0.0)).abs() <= 1e-9 * scale.max(1.0), "{fast} vs {slow}");
    }

    #[test]
    fn real_embedding_preserves_frobenius_norm(m in small_matrix()) {
        let v = real_embed(&m);
        prop_assert!((v.norm() - m.frobenius_norm()).abs() <= 1e-12 * m.frobenius_norm().max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn oracle_is_monotone_in_each_window(seed in 0u64..1000) {
        let e = random_ensemble(2, 1, 2, seed).unwrap();
        let base = brute_force_decay(&e.with_bounds(&[1, 1]).unwrap(), BUDGET).unwrap().value;
        let wider0 = brute_force_decay(&e.with_bounds(&[2, 1]).unwrap(), BUDGET).unwrap().value;
        let wider1 = brute_force_decay(&e.with_bounds(&[1, 2]).unwrap(), BUDGET).unwrap().value;
        prop_assert!(wider0 <= base && wider1 <= base);
    }

    #[test]
    fn oracle_is_symmetric_under_user_relabeling(seed in 0u64..1000) {
        let e = random_ensemble(2, 1, 2, seed).unwrap().with_bounds(&[1, 2]).unwrap();
        let d = brute_force_decay(&e, BUDGET).unwrap();
        let p = brute_force_decay(&e.permuted(&[1, 0]).unwrap(), BUDGET).unwrap();
        prop_assert!(rel(d.value, p.value) <= 1e-9);
        prop_assert_eq!(d.evaluations, p.evaluations);
    }

    #[test]
    fn oracle_scales_with_power_2un(seed in 0u64..1000, s in 0.25f64..4.0) {
        let e = random_ensemble(2, 1, 2, seed).unwrap().with_uniform_bound(1).unwrap();
        let d = brute_force_decay(&e, BUDGET).unwrap();
        let scaled = brute_force_decay(&e.scaled(s).unwrap(), BUDGET).unwrap();
        prop_assert!(rel(scaled.value, s.powi(4) * d.value) <= 1e-9);
        prop_assert_eq!(scaled.argmin, d.argmin);
    }

    #[test]
    fn witness_is_feasible_on_its_windows(seed in 0u64..1000, bound in 1u64..=2) {
        let e = random_ensemble(2, 1, 2, seed).unwrap();
        let w = construct_witness(&e.with_uniform_bound(bound).unwrap(), 20_000, seed).unwrap();
        prop_assert!(w.identity_pass);
        let oracle = brute_force_decay(&e.with_bounds(&w.coeff_windows).unwrap(), 1_000_000).unwrap();
        prop_assert!(oracle.value <= w.det_value, "{} > {}", oracle.value, w.det_value);
    }

    #[test]
    fn spec_files_round_trip(seed in 0u64..1000, users in 1usize..=3, n in 1usize..=2) {
        let e = random_ensemble(users, n, users * n, seed).unwrap().with_uniform_bound(1 + seed % 5).unwrap();
        let text = LatticeSpec::from_ensemble(&e).to_json().unwrap();
        let back = LatticeSpec::from_json(&text).unwrap().to_ensemble().unwrap();
        prop_assert_eq!(&back, &e);
        prop_assert_eq!(LatticeSpec::from_ensemble(&back).to_json().unwrap(), text);
    }
}

#[test]
fn scaling_by_two_on_the_fixture() {
    let e = random_ensemble(2, 1, 2, 1).unwrap().with_uniform_bound(1).unwrap();
    let d = brute_force_decay(&e, BUDGET).unwrap().value;
    let d2 = brute_force_decay(&e.scaled(2.0).unwrap(), BUDGET).unwrap().value;
    assert!(rel(d2, 16.0 * d) <= 1e-9);
}

#[test]
fn argmin_reproduces_value() {
    for seed in 0..5 {
        let e = random_ensemble(2, 1, 2, seed).unwrap().with_uniform_bound(1).unwrap();
        let s = brute_force_decay(&e, BUDGET).unwrap();
        let v = mimo_decay::decay_oracle::argmin_value(&e, &s).unwrap();
        assert!(rel(v, s.value) <= 1e-9);
    }
}
