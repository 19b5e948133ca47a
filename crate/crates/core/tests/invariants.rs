use num_complex::Complex64;
use proptest::prelude::*;

use goldbach_core::arith::{euler_phi, gcd, sieve_von_mangoldt};
use goldbach_core::characters::CharacterGroup;
use goldbach_core::goldbach::{
    goldbach_average, goldbach_average_multiples, psi2_direct, psi2_fast, residue_class_sums,
};
use goldbach_core::moments::imprimitivity_profile;
use goldbach_core::zeros::{explicit_formula_sum, explicit_formula_residual, ZeroTable};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn fast_matches_direct_and_partitions(n in 4usize..3000, q in 1usize..40) {
        let table = sieve_von_mangoldt(n).unwrap();
        let fast = psi2_fast(&table, n).unwrap();
        let direct = psi2_direct(&table, n).unwrap();
        for m in 0..=n {
            prop_assert!((fast.psi2(m) - direct.psi2(m)).abs() <= 1e-6);
        }
        prop_assert_eq!(fast.psi2(0) + fast.psi2(1) + fast.psi2(2) + fast.psi2(3), 0.0);
        let g = goldbach_average(&fast, n).unwrap();
        let classes = residue_class_sums(&fast, q, n).unwrap();
        let total: f64 = classes.iter().sum();
        prop_assert!((total - g).abs() <= 1e-9 * g.max(1.0));
        let gq = goldbach_average_multiples(&fast, q, n).unwrap();
        prop_assert!((classes[0] - gq).abs() <= 1e-9 * gq.max(1.0));
    }

    #[test]
    fn averages_are_monotone(n in 5usize..2000, q in 1usize..20) {
        let table = sieve_von_mangoldt(n).unwrap();
        let s = psi2_fast(&table, n).unwrap();
        prop_assert!(goldbach_average(&s, n - 1).unwrap() <= goldbach_average(&s, n).unwrap());
        prop_assert!(
            goldbach_average_multiples(&s, q, n - 1).unwrap() <= goldbach_average_multiples(&s, q, n).unwrap()
        );
    }

    #[test]
    fn character_orthogonality(q in 1u64..=50) {
        let g = CharacterGroup::new(q).unwrap();
        let phi = euler_phi(q) as f64;
        prop_assert_eq!(g.len() as u64, euler_phi(q));
        // sum over n
        for i in 0..g.len() {
            for j in 0..g.len() {
                let mut s = Complex64::new(0.0, 0.0);
                for n in 0..q as i64 {
                    s += g.evaluate(i, n).unwrap() * g.evaluate(j, n).unwrap().conj();
                }
                let want = if i == j { phi } else { 0.0 };
                prop_assert!((s - want).norm() <= 1e-9);
            }
        }
        // sum over characters
        for a in 0..q as i64 {
            for b in 0..q as i64 {
                let mut s = Complex64::new(0.0, 0.0);
                for j in 0..g.len() {
                    s += g.evaluate(j, a).unwrap() * g.evaluate(j, b).unwrap().conj();
                }
                let want = if a == b && gcd(a as u64, q) == 1 { phi } else { 0.0 };
                prop_assert!((s - want).norm() <= 1e-9);
            }
        }
    }

    #[test]
    fn characters_are_multiplicative_periodic_and_parity_consistent(
        q in 2u64..=50, a in -500i64..500, b in -500i64..500,
    ) {
        let g = CharacterGroup::new(q).unwrap();
        for (j, chi) in g.characters().iter().enumerate() {
            let prod = g.evaluate(j, a).unwrap() * g.evaluate(j, b).unwrap();
            prop_assert!((g.evaluate(j, a * b).unwrap() - prod).norm() <= 1e-12);
            prop_assert!((g.evaluate(j, a + q as i64).unwrap() - g.evaluate(j, a).unwrap()).norm() <= 1e-12);
            let minus_one = g.evaluate(j, q as i64 - 1).unwrap();
            prop_assert!((minus_one - Complex64::new(chi.parity() as f64, 0.0)).norm() <= 1e-12);
        }
    }

    #[test]
    fn imprimitivity_holds_on_breakpoints(q in 2u64..=50) {
        let table = sieve_von_mangoldt(10_000).unwrap();
        let g = CharacterGroup::new(q).unwrap();
        for j in 0..g.len() {
            for d in imprimitivity_profile(&table, &g, j, table.breakpoints()).unwrap() {
                prop_assert!(d.holds(), "q={} j={} x={} {} > {}", q, j, d.x, d.defect, d.bound);
            }
        }
    }

    #[test]
    fn zero_sum_matches_complex_reference(
        gammas in proptest::collection::btree_set(15u32..5000, 1..30),
        n in 4.0f64..1e6,
    ) {
        let ords: Vec<f64> = gammas.iter().map(|&g| g as f64 + 0.125).collect();
        let table = ZeroTable::from_ordinates(ords.clone(), "prop").unwrap();
        let got = explicit_formula_sum(&table, n, table.height()).unwrap();
        let mut want = Complex64::new(0.0, 0.0);
        for &g in &ords {
            for rho in [Complex64::new(0.5, g), Complex64::new(0.5, -g)] {
                let rho1 = rho + 1.0;
                want += (rho1 * n.ln()).exp() / (rho * rho1);
            }
        }
        let want = 2.0 * want;
        prop_assert!(want.im.abs() <= 1e-9 * n.powf(1.5));
        prop_assert!((got - want.re).abs() <= 1e-9 * n.powf(1.5), "{} vs {}", got, want.re);
    }
}

#[test]
fn residual_differences_equal_zero_sum_differences() {
    let table = sieve_von_mangoldt(20_000).unwrap();
    let series = psi2_fast(&table, 20_000).unwrap();
    let zeros = ZeroTable::from_ordinates(
        vec![14.134725141734694, 21.022039638771555, 25.01085758014569, 30.424876125859513],
        "first four",
    )
    .unwrap();
    for n in [100usize, 5_000, 20_000] {
        let (t1, t2) = (22.0, zeros.height());
        let dr = explicit_formula_residual(&series, &zeros, n, t2).unwrap() - explicit_formula_residual(&series, &zeros, n, t1).unwrap();
        let ds = explicit_formula_sum(&zeros, n as f64, t2).unwrap()
            - explicit_formula_sum(&zeros, n as f64, t1).unwrap();
        assert!((dr - ds).abs() <= 1e-6 * (n as f64).powf(1.5), "N={n}: {dr} vs {ds}");
    }
    // below the first ordinate the residual is the raw difference
    let below = explicit_formula_residual(&series, &zeros, 5_000, 10.0).unwrap();
    let g = goldbach_average(&series, 5_000).unwrap();
    assert_eq!(below, g - 0.5 * 5_000f64 * 5_000.0);
}
