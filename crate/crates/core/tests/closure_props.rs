//! The closed derivative system of the Legendre quadruple: grid consistency
//! with finite differences, the second-order linear consequence for 4K, and
//! the printed level surface of the general solution.

use num_complex::Complex64;
use proptest::prelude::*;
use theta_flows::elliptic::{general_solution, legendre_quad, legendre_quad_deriv, Modulus};
use theta_flows::qseries::PI;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[test]
fn derivative_system_on_grid() {
    let h = 1e-6;
    for i in 1..=9 {
        let k0 = i as f64 / 10.0;
        let m = Modulus::new(c(k0, 0.0)).unwrap();
        let lq = legendre_quad(m).unwrap();
        let d = legendre_quad_deriv(m, &lq);
        let p = legendre_quad(Modulus::new(c(k0 + h, 0.0)).unwrap()).unwrap();
        let q = legendre_quad(Modulus::new(c(k0 - h, 0.0)).unwrap()).unwrap();
        for (an, fp, fm) in [
            (d.d_big_k, p.big_k, q.big_k),
            (d.d_big_k_prime, p.big_k_prime, q.big_k_prime),
            (d.d_big_e, p.big_e, q.big_e),
            (d.d_big_e_prime, p.big_e_prime, q.big_e_prime),
        ] {
            let fd = (fp - fm) / (2.0 * h);
            assert!(
                (an - fd).norm() / an.norm().max(1.0) < 1e-8,
                "k = {k0}: {an} vs {fd}"
            );
        }
    }
}

#[test]
fn second_order_consequence_for_4k() {
    // k(k^2-1) A'' + (3k^2-1) A' + k A = 0 for A = 4K
    for &k0 in &[0.2, 0.45, 0.7, 0.85] {
        let k = c(k0, 0.0);
        let m = Modulus::new(k).unwrap();
        let lq = legendre_quad(m).unwrap();
        let d = legendre_quad_deriv(m, &lq);
        let one = c(1.0, 0.0);
        let km1 = k * k - one;
        // K'' from differentiating the closed system once more
        let kpp = -d.d_big_k / k + lq.big_k / (k * k) - d.d_big_e / (km1 * k)
            + lq.big_e * (3.0 * k * k - one) / (km1 * km1 * k * k);
        let a = 4.0 * lq.big_k;
        let ak = 4.0 * d.d_big_k;
        let akk = 4.0 * kpp;
        let resid = k * km1 * akk + (3.0 * k * k - one) * ak + k * a;
        let scale = (k * km1 * akk).norm().max((k * a).norm());
        assert!(resid.norm() / scale < 1e-9, "k = {k0}: {}", resid.norm());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn level_surface_of_general_solution(
        ar in -1.5..1.5f64, ai in -0.5..0.5f64,
        br in -1.5..1.5f64, bi in -0.5..0.5f64,
        gr in -1.5..1.5f64, gi in -0.5..0.5f64,
        dr in -1.5..1.5f64, di in -0.5..0.5f64,
        k0 in 0.15..0.85f64,
    ) {
        let m = Modulus::new(c(k0, 0.0)).unwrap();
        let lq = legendre_quad(m).unwrap();
        let (al, be, ga, de) = (c(ar, ai), c(br, bi), c(gr, gi), c(dr, di));
        let g = general_solution(&lq, al, be, ga, de);
        let lhs = g.big_k * g.big_e_prime + g.big_k_prime * g.big_e - g.big_k * g.big_k_prime;
        let rhs = PI / 2.0 * (al * de + be * ga);
        prop_assert!((lhs - rhs).norm() / rhs.norm().max(1.0) < 1e-11);
    }
}
