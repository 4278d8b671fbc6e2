//! Property tests for the arc-construction constants and the bump kernel.

use invar_core::euler::{build_arc, mollifier, step_constants, EulerConfig};
use invar_core::sample::sup_norm;
use invar_core::{FeedbackRealization, ScalarField};
use proptest::prelude::*;

proptest! {
    #[test]
    fn step_constant_identities_are_exact(
        gamma in 0.01f64..0.99,
        k in 1usize..64,
        delta in 1.0f64..20.0,
        horizon in 0.001f64..5.0,
    ) {
        let (t_prime, h_k) = step_constants(gamma, horizon, k, delta);
        prop_assert_eq!(h_k, gamma / (32.0 * k as f64 * delta));
        prop_assert_eq!(t_prime, horizon.min(gamma / (32.0 * delta)));
        prop_assert!(t_prime <= horizon);
        // one step never overshoots the horizon by construction
        prop_assert!(h_k * 1.0 <= gamma / (32.0 * delta) + 1e-18);
    }

    #[test]
    fn bump_kernel_is_even_nonnegative_and_supported(
        t in -3.0f64..3.0,
        eps in 0.05f64..2.0,
    ) {
        let v = mollifier(t, eps);
        prop_assert!(v >= 0.0);
        prop_assert_eq!(v.to_bits(), mollifier(-t, eps).to_bits());
        if t.abs() >= eps {
            prop_assert_eq!(v, 0.0);
        } else if t.abs() <= 0.999 * eps {
            // inside the support the kernel is positive wherever exp can
            // still represent it; within ~0.07% of the edge the exponent
            // passes -745 and the value underflows to an honest 0.0
            prop_assert!(v > 0.0);
        }
    }

    #[test]
    fn scaling_preserves_the_kernel_shape(
        t in -0.99f64..0.99,
        eps in 0.05f64..2.0,
    ) {
        // eta_eps(t) = eta(t/eps)/eps exactly
        let unit = mollifier(t, 1.0);
        let scaled = mollifier(t * eps, eps);
        prop_assert!((scaled - unit / eps).abs() <= 1e-12 * (1.0 + unit / eps));
    }

    #[test]
    fn arcs_obey_the_recurrence_and_stay_local(
        value in -1.0f64..1.0,
        gamma in 0.1f64..0.4,
        anchor in -0.2f64..0.2,
    ) {
        let f = FeedbackRealization::constant(&[value], 1.0, gamma, vec![anchor], "random")
            .unwrap();
        let psi = ScalarField::parse("x1^2", 1, 0).unwrap();
        // k = 1 keeps the per-step allowance generous enough that any
        // bounded constant feedback admits the descent selection here
        let cfg = EulerConfig::derive(&f, 1, 0.05, 64, 8, 9).unwrap();
        let (arc, cert) = build_arc(&f, &psi, &[anchor], &cfg, 9).unwrap();
        prop_assert_eq!(arc.velocities.len(), cfg.c_k());
        for i in 0..arc.velocities.len() {
            let dt = arc.times[i + 1] - arc.times[i];
            for j in 0..arc.dim() {
                prop_assert_eq!(
                    arc.nodes[i + 1][j].to_bits(),
                    (arc.nodes[i][j] + dt * arc.velocities[i][j]).to_bits()
                );
            }
            let drift: Vec<f64> =
                arc.nodes[i + 1].iter().map(|a| a - anchor).collect();
            prop_assert!(sup_norm(&drift) <= gamma / 2.0 + 1e-12);
        }
        prop_assert!(cert.holds());
        prop_assert!(cert.sup_psi <= cert.bound + 1e-9);
    }
}
