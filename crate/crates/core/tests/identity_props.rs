//! Property tests of the q-series identities over the default sampling
//! region re in [-1, 1], im in [0.4, 3].

use num_complex::Complex64;
use proptest::prelude::*;
use theta_flows::jets::Jet;
use theta_flows::qseries::{theta_quad, Tau, I, PI};

fn region() -> impl Strategy<Value = (f64, f64)> {
    (-1.0..1.0f64, 0.4..3.0f64)
}

fn rel(lhs: Complex64, rhs: Complex64) -> f64 {
    (lhs - rhs).norm() / lhs.norm().max(rhs.norm()).max(1e-30)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]
    #[test]
    fn jacobi_identity_everywhere((re, im) in region()) {
        let tq = theta_quad(Tau::new(re, im).unwrap(), 0).unwrap();
        prop_assert!(tq.jacobi_identity_residual() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]
    #[test]
    fn log_derivative_identities((re, im) in region()) {
        let tq = theta_quad(Tau::new(re, im).unwrap(), 1).unwrap();
        let (t2, t3, t4) = (tq.t2(), tq.t3(), tq.t4());
        let (d2, d3, d4) = (tq.theta2[1], tq.theta3[1], tq.theta4[1]);
        prop_assert!(rel(d2 / t2 - d3 / t3, PI / 4.0 * I * t4.powu(4)) < 1e-11);
        prop_assert!(rel(d3 / t3 - d4 / t4, PI / 4.0 * I * t2.powu(4)) < 1e-11);
        prop_assert!(rel(d2 / t2 - d4 / t4, PI / 4.0 * I * t3.powu(4)) < 1e-11);
        prop_assert!(rel(d2 / t2 + d3 / t3 + d4 / t4, 3.0 * I / PI * tq.eta0()) < 1e-11);
    }

    #[test]
    fn closed_differential_identities((re, im) in region()) {
        // the four right-hand sides against the termwise derivatives
        let tq = theta_quad(Tau::new(re, im).unwrap(), 1).unwrap();
        let (t2, t3, t4, e) = (tq.t2(), tq.t3(), tq.t4(), tq.eta0());
        let (p2, p3, p4) = (t2.powu(4), t3.powu(4), t4.powu(4));
        let f = PI * PI / 12.0;
        prop_assert!(rel(tq.theta2[1], I / PI * (e + f * (p3 + p4)) * t2) < 1e-11);
        prop_assert!(rel(tq.theta3[1], I / PI * (e + f * (p2 - p4)) * t3) < 1e-11);
        prop_assert!(rel(tq.theta4[1], I / PI * (e - f * (p2 + p3)) * t4) < 1e-11);
        // near the cusp the eta row subtracts two near-equal quartic
        // terms; the identity scale is the size of those terms
        let rhs = I / PI * (2.0 * e * e - PI.powi(4) / 144.0 * (p2 * p2 + p3 * p3 + p4 * p4));
        let scale = (2.0 * e * e).norm().max(tq.eta[1].norm());
        prop_assert!((tq.eta[1] - rhs).norm() / scale < 1e-11);
    }

    #[test]
    fn schwarzian_for_the_modulus((re, im) in region()) {
        let tq = theta_quad(Tau::new(re, im).unwrap(), 3).unwrap();
        let j2 = Jet::from_derivatives(&tq.theta2[..]);
        let j3 = Jet::from_derivatives(&tq.theta3[..]);
        let lam = j2.powi(4).div(&j3.powi(4));
        let (l0, l1, l2, l3) = (
            lam.c[0],
            lam.derivative(1),
            lam.derivative(2),
            lam.derivative(3),
        );
        let one = Complex64::new(1.0, 0.0);
        let lhs = l3 / (l1 * l1 * l1) - 1.5 * l2 * l2 / (l1 * l1 * l1 * l1);
        let rhs = -0.5 * (l0 * l0 - l0 + one) / (l0 * l0 * (l0 - one) * (l0 - one));
        prop_assert!(rel(lhs, rhs) < 1e-8);
    }

    #[test]
    fn identity_report_passes_in_region((re, im) in region()) {
        for row in theta_flows::conserved::identity_report(re, im) {
            prop_assert!(row.pass, "{} residual {}", row.check, row.residual);
        }
    }
}
