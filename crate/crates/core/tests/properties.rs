use proptest::prelude::*;

use otsplit::diagnostics::{lojasiewicz_theta, rate_psi, tracking_error};
use otsplit::linalg::{dist2, norm2};
use otsplit::models::{build_dc_motor_nlp, toy_qp, DcMotorSpec};
use otsplit::{project_box, BoxSet, Nlp};

fn box_and_points() -> impl Strategy<Value = (Vec<(f64, f64)>, Vec<f64>, Vec<f64>)> {
    (1usize..8).prop_flat_map(|n| {
        (
            prop::collection::vec((-5.0..5.0f64, 0.01..5.0f64).prop_map(|(l, w)| (l, l + w)), n),
            prop::collection::vec(-20.0..20.0f64, n),
            prop::collection::vec(-20.0..20.0f64, n),
        )
    })
}

fn motor() -> Nlp {
    build_dc_motor_nlp(&DcMotorSpec::new(0.018)).unwrap()
}

fn point_in(nlp: &Nlp, unit: &[f64]) -> Vec<f64> {
    let (lo, hi) = (nlp.bounds().lower(), nlp.bounds().upper());
    (0..nlp.n_z()).map(|j| lo[j] + (hi[j] - lo[j]) * unit[j % unit.len()]).collect()
}

proptest! {
    #[test]
    fn projection_is_idempotent_and_nonexpansive((bounds, x, y) in box_and_points()) {
        let (lo, hi): (Vec<f64>, Vec<f64>) = bounds.into_iter().unzip();
        let b = BoxSet::new(lo, hi).unwrap();
        let px = project_box(&x, &b).unwrap();
        let py = project_box(&y, &b).unwrap();
        prop_assert!(b.contains(&px));
        prop_assert_eq!(project_box(&px, &b).unwrap(), px.clone());
        prop_assert!(dist2(&px, &py) <= dist2(&x, &y) * (1.0 + 1e-15));
    }

    #[test]
    fn motor_constraints_are_affine_in_the_parameter(
        unit in prop::collection::vec(0.0..1.0f64, 7),
        s1 in prop::collection::vec(-3.0..3.0f64, 3),
        ds in prop::collection::vec(-3.0..3.0f64, 3),
    ) {
        let nlp = motor();
        let z = point_in(&nlp, &unit);
        let s2: Vec<f64> = s1.iter().zip(&ds).map(|(a, d)| a + d).collect();
        let g1 = nlp.constraints(&z, &s1).unwrap();
        let g2 = nlp.constraints(&z, &s2).unwrap();
        // Expected shift: T_i Δs for each block, stacked.
        let mut shift = vec![0.0; nlp.n_constraints()];
        for (i, spec) in nlp.blocks().iter().enumerate() {
            if let Some(t) = nlp.t_matrix(i) {
                let rows = spec.rows.clone();
                t.mul_vec_add(&ds, &mut shift[rows]);
            }
        }
        for ((a, b), d) in g1.iter().zip(&g2).zip(&shift) {
            prop_assert!((b - a - d).abs() <= 1e-12 * (1.0 + a.abs() + b.abs()), "{} vs {}", b - a, d);
        }
    }

    #[test]
    fn rho_difference_identity(
        unit in prop::collection::vec(0.0..1.0f64, 5),
        mu_scale in -3.0..3.0f64,
        s in prop::collection::vec(-3.0..3.0f64, 3),
        rho1 in 0.1..500.0f64,
        rho2 in 0.1..500.0f64,
    ) {
        let nlp = motor();
        let z = point_in(&nlp, &unit);
        let mu: Vec<f64> = (0..nlp.n_constraints()).map(|r| mu_scale * ((r % 5) as f64 - 2.0)).collect();
        let g = norm2(&nlp.constraints(&z, &s).unwrap());
        let l1 = nlp.aug_lagrangian(&z, &mu, &s, rho1).unwrap();
        let l2 = nlp.aug_lagrangian(&z, &mu, &s, rho2).unwrap();
        let expected = 0.5 * (rho1 - rho2) * g * g;
        let scale = l1.abs() + l2.abs() + 1.0;
        prop_assert!((l1 - l2 - expected).abs() <= 1e-12 * scale);
    }

    #[test]
    fn multiplier_sign_flip_identity(
        z in prop::collection::vec(-10.0..10.0f64, 2),
        mu in -5.0..5.0f64,
        s in -5.0..5.0f64,
        rho in 0.1..100.0f64,
    ) {
        let nlp = toy_qp::<f64>().unwrap();
        let g = nlp.constraints(&z, &[s]).unwrap()[0];
        let plus = nlp.aug_lagrangian(&z, &[mu], &[s], rho).unwrap();
        let minus = nlp.aug_lagrangian(&z, &[-mu], &[s], rho).unwrap();
        prop_assert!((plus - minus - 2.0 * mu * g).abs() <= 1e-11 * (1.0 + plus.abs() + minus.abs()));
    }

    #[test]
    fn feasible_points_give_the_cost(a in -320i32..320, b in -320i32..320, mu in -5.0..5.0f64) {
        // Dyadic entries keep z₁ + z₂ = s exact.
        let nlp = toy_qp::<f64>().unwrap();
        let z = [f64::from(a) / 64.0, f64::from(b) / 64.0];
        let s = z[0] + z[1];
        prop_assert_eq!(nlp.constraints(&z, &[s]).unwrap()[0], 0.0);
        prop_assert_eq!(nlp.aug_lagrangian(&z, &[mu], &[s], 7.0).unwrap(), nlp.cost(&z).unwrap());
    }

    #[test]
    fn tracking_error_is_metric_like(
        pairs in prop::collection::vec((-10.0..10.0f64, -10.0..10.0f64), 1..40),
        scale in -4.0..4.0f64,
    ) {
        let (a, b): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let e = tracking_error(&a, &b).unwrap();
        prop_assert_eq!(e, tracking_error(&b, &a).unwrap());
        prop_assert_eq!(tracking_error(&a, &a).unwrap(), 0.0);
        prop_assert_eq!(e == 0.0, a == b);
        // Scale the difference about a.
        let b_scaled: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + scale * (y - x)).collect();
        let e_scaled = tracking_error(&a, &b_scaled).unwrap();
        prop_assert!((e_scaled - scale.abs() * e).abs() <= 1e-12 * (1.0 + e_scaled));
    }

    #[test]
    fn exponent_ranges(d in 2u32..=10, n in 2u32..=10) {
        let theta = lojasiewicz_theta(d, n).unwrap();
        let psi = rate_psi(d, n).unwrap();
        prop_assert!(theta > 0.5 && theta < 1.0);
        prop_assert!(psi > 0.0 && psi <= 0.25);
    }
}
