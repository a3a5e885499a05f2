//! Property-based invariants for the Gaussian engine and the analytic model.

use std::f64::consts::FRAC_PI_2;

use proptest::prelude::*;

use tnli::gaussian::GaussianState;
use tnli::model::{
    db_to_variance_ratio, phase_sum_variance, gain_to_r, r_to_gain, squeezing_db,
};

fn squeezed_pair(r: f64, psi: f64) -> GaussianState {
    GaussianState::vacuum(2)
        .unwrap()
        .two_mode_squeeze(0, 1, r, psi)
        .unwrap()
}

proptest! {
    #[test]
    fn loss_interpolates_toward_vacuum(r in 0.0..1.5f64, eta1 in 0.0..=1.0f64, eta2 in 0.0..=1.0f64) {
        let (lo, hi) = if eta1 <= eta2 { (eta1, eta2) } else { (eta2, eta1) };
        let base = squeezed_pair(r, 0.0);
        let v_lo = base.clone().loss_channel(0, lo).unwrap().homodyne_variance(0, 0.0).unwrap();
        let v_hi = base.loss_channel(0, hi).unwrap().homodyne_variance(0, 0.0).unwrap();
        // Single-mode variance of a squeezed pair is cosh(2r) >= 1, so more
        // loss pulls it down toward the vacuum value of 1.
        prop_assert!(v_lo <= v_hi + 1e-12);
        prop_assert!(v_lo >= 1.0 - 1e-12);
    }

    #[test]
    fn phase_sum_variance_is_affine_in_eta(r in 0.0..2.0f64, eta in 0.0..=1.0f64,
                            theta_p in 0.0..std::f64::consts::TAU, theta_c in 0.0..std::f64::consts::TAU,
                            phi in 0.0..std::f64::consts::TAU) {
        let v0 = phase_sum_variance(r, 0.0, theta_p, theta_c, phi).unwrap();
        let v1 = phase_sum_variance(r, 1.0, theta_p, theta_c, phi).unwrap();
        let v = phase_sum_variance(r, eta, theta_p, theta_c, phi).unwrap();
        prop_assert!((v - (v0 + eta * (v1 - v0))).abs() < 1e-10 * v.abs().max(1.0));
    }

    #[test]
    fn worst_phase_antisqueezes(r in 0.01..2.0f64, eta in 0.01..=1.0f64) {
        // cos(theta_p + theta_c - phi) = +1 is the noisy quadrature.
        let v = phase_sum_variance(r, eta, FRAC_PI_2, FRAC_PI_2, std::f64::consts::PI).unwrap();
        prop_assert!(v > 1.0);
    }

    #[test]
    fn rotation_shifts_homodyne_angle(r in 0.0..1.5f64, phi in -6.3..6.3f64, theta in -6.3..6.3f64) {
        let base = squeezed_pair(r, 0.7);
        let rotated = base.clone().phase_rotate(0, phi).unwrap();
        let direct = base.homodyne_variance(0, theta - phi).unwrap();
        let via_rotation = rotated.homodyne_variance(0, theta).unwrap();
        prop_assert!((direct - via_rotation).abs() < 1e-10 * direct.max(1.0));
    }

    #[test]
    fn squeezing_db_round_trip(db in -30.0..30.0f64) {
        let ratio = db_to_variance_ratio(db);
        prop_assert!((squeezing_db(ratio).unwrap() - db).abs() < 1e-9);
    }

    #[test]
    fn gain_round_trip(g in 1.0..50.0f64) {
        let r = gain_to_r(g).unwrap();
        prop_assert!((r_to_gain(r) - g).abs() < 1e-9 * g);
    }

    #[test]
    fn beamsplitter_conserves_photon_number(r in 0.0..1.5f64, t in 0.0..=1.0f64,
                                            alpha in -3.0..3.0f64) {
        let state = GaussianState::vacuum(2)
            .unwrap()
            .displace(0, num_complex::Complex64::new(alpha, 0.5 * alpha))
            .unwrap()
            .two_mode_squeeze(0, 1, r, 0.0)
            .unwrap();
        let energy = |s: &GaussianState| {
            let mut total = 0.0;
            for mode in 0..2 {
                let vx = s.cov[(2 * mode, 2 * mode)];
                let vp = s.cov[(2 * mode + 1, 2 * mode + 1)];
                let mx = s.mean[2 * mode];
                let mp = s.mean[2 * mode + 1];
                total += (vx + vp - 2.0 + mx * mx + mp * mp) / 4.0;
            }
            total
        };
        let before = energy(&state);
        let after = energy(&state.beamsplitter(0, 1, t).unwrap());
        prop_assert!((before - after).abs() < 1e-9 * before.max(1.0));
    }

    #[test]
    fn tmsv_moments_match_closed_form(r in 0.0..1.8f64, eta in 0.0..=1.0f64,
                                      theta_a in 0.0..std::f64::consts::TAU, theta_b in 0.0..std::f64::consts::TAU) {
        let state = squeezed_pair(r, 0.0)
            .loss_channel(0, eta)
            .unwrap()
            .loss_channel(1, eta)
            .unwrap();
        let var_a = state.homodyne_variance(0, theta_a).unwrap();
        let expected_var = eta * (2.0 * r).cosh() + (1.0 - eta);
        prop_assert!((var_a - expected_var).abs() < 1e-10 * expected_var);

        let joint = tnli::gaussian::MeasurementCombination::new(
            vec![theta_a, theta_b],
            vec![1.0, 1.0],
        ).unwrap();
        let (_, var_sum) = state.measure_stats(&joint).unwrap();
        let cross = eta * (2.0 * r).sinh() * (theta_a + theta_b).cos();
        let expected_sum = 2.0 * expected_var + 2.0 * cross;
        prop_assert!((var_sum - expected_sum).abs() < 1e-9 * expected_sum.abs().max(1.0));
    }
}
