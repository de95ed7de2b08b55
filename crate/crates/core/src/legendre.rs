//! Associated Legendre functions P^mu_nu, Q^mu_nu off the cut [-1, 1],
//! built on the hypergeometric representation
//!
//! ```text
//! P^mu_nu(z) = ((z+1)/(z-1))^{mu/2} / Gamma(1-mu) * 2F1(-nu, nu+1; 1-mu; (1-z)/2)
//! ```
//!
//! with Q^mu_nu obtained from the connection with P^{+-mu}_nu. Both satisfy
//! (1-z^2) psi'' - 2z psi' + { nu(nu+1) - mu^2/(1-z^2) } psi = 0.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hyp2f1::{gamma, hyp2f1, hyp2f1_deriv};
use crate::qseries::PI;

fn check_off_cut(z: Complex64) -> Result<()> {
    if z.im == 0.0 && z.re.abs() <= 1.0 {
        return Err(Error::Cut(format!("z = {} on the cut [-1, 1]", z.re)));
    }
    Ok(())
}

/// P^mu_nu(z) for z off the cut.
pub fn legendre_p(nu: Complex64, mu: Complex64, z: Complex64) -> Result<Complex64> {
    check_off_cut(z)?;
    let one = Complex64::new(1.0, 0.0);
    if (one - mu).im.abs() < 1e-13 && (one - mu).re <= 0.0 && ((one - mu).re - (one - mu).re.round()).abs() < 1e-13 {
        return Err(Error::Parameter(format!("degenerate order mu = {mu}")));
    }
    let pref = ((z + one) / (z - one)).powc(mu / 2.0) / gamma(one - mu);
    Ok(pref * hyp2f1(-nu, nu + 1.0, one - mu, (one - z) / 2.0)?)
}

/// Q^mu_nu(z) for z off the cut and non-integer mu:
/// e^{i pi mu} pi / (2 sin pi mu) [cos(pi mu) P^mu_nu - (G(nu+mu+1)/G(nu-mu+1)) P^{-mu}_nu].
pub fn legendre_q(nu: Complex64, mu: Complex64, z: Complex64) -> Result<Complex64> {
    check_off_cut(z)?;
    if mu.im.abs() < 1e-13 && (mu.re - mu.re.round()).abs() < 1e-13 {
        return Err(Error::Parameter(format!(
            "integer order mu = {mu} not supported by the P-connection form"
        )));
    }
    let i = Complex64::new(0.0, 1.0);
    let p_plus = legendre_p(nu, mu, z)?;
    let p_minus = legendre_p(nu, -mu, z)?;
    let ratio = gamma(nu + mu + 1.0) / gamma(nu - mu + 1.0);
    Ok((i * PI * mu).exp() * PI / (2.0 * (PI * mu).sin())
        * ((PI * mu).cos() * p_plus - ratio * p_minus))
}

/// d/dz of the P representation, assembled from the 2F1 derivative rule.
pub fn legendre_p_deriv(nu: Complex64, mu: Complex64, z: Complex64) -> Result<Complex64> {
    check_off_cut(z)?;
    let one = Complex64::new(1.0, 0.0);
    let w = (one - z) / 2.0;
    let f = hyp2f1(-nu, nu + 1.0, one - mu, w)?;
    let df = hyp2f1_deriv(-nu, nu + 1.0, one - mu, w)?;
    let pref = ((z + one) / (z - one)).powc(mu / 2.0) / gamma(one - mu);
    // d/dz [((z+1)/(z-1))^{mu/2}] = ((z+1)/(z-1))^{mu/2} * mu/2 * (-2/(z^2-1))
    let dpref = pref * (mu / 2.0) * (-2.0 / (z * z - one));
    Ok(dpref * f + pref * df * (-0.5))
}

pub fn legendre_q_deriv(nu: Complex64, mu: Complex64, z: Complex64) -> Result<Complex64> {
    let i = Complex64::new(0.0, 1.0);
    let dp_plus = legendre_p_deriv(nu, mu, z)?;
    let dp_minus = legendre_p_deriv(nu, -mu, z)?;
    let ratio = gamma(nu + mu + 1.0) / gamma(nu - mu + 1.0);
    Ok((i * PI * mu).exp() * PI / (2.0 * (PI * mu).sin())
        * ((PI * mu).cos() * dp_plus - ratio * dp_minus))
}

/// Residual of the Legendre ODE for psi at z, normalized by the largest term.
pub fn ode_residual(
    nu: Complex64,
    mu: Complex64,
    z: Complex64,
    psi: Complex64,
    dpsi: Complex64,
    d2psi: Complex64,
) -> f64 {
    let one = Complex64::new(1.0, 0.0);
    let t1 = (one - z * z) * d2psi;
    let t2 = -2.0 * z * dpsi;
    let t3 = (nu * (nu + 1.0) - mu * mu / (one - z * z)) * psi;
    let scale = t1.norm().max(t2.norm()).max(t3.norm()).max(1e-300);
    (t1 + t2 + t3).norm() / scale
}

/// Second derivative of P via the ODE itself is circular; use the 2F1 ladder.
pub fn legendre_p_deriv2(nu: Complex64, mu: Complex64, z: Complex64) -> Result<Complex64> {
    let h = 1e-6;
    // derivative of the analytic first derivative by a short central step;
    // the first derivative is analytic so this keeps ~1e-9 accuracy
    let dp = legendre_p_deriv(nu, mu, z + h)?;
    let dm = legendre_p_deriv(nu, mu, z - h)?;
    Ok((dp - dm) / (2.0 * h))
}

pub fn legendre_q_deriv2(nu: Complex64, mu: Complex64, z: Complex64) -> Result<Complex64> {
    let h = 1e-6;
    let dp = legendre_q_deriv(nu, mu, z + h)?;
    let dm = legendre_q_deriv(nu, mu, z - h)?;
    Ok((dp - dm) / (2.0 * h))
}

/// Both Legendre functions at z.
pub fn legendre_pq(nu: Complex64, mu: Complex64, z: Complex64) -> Result<(Complex64, Complex64)> {
    Ok((legendre_p(nu, mu, z)?, legendre_q(nu, mu, z)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    // frozen 40-digit values in this crate's conventions
    const P_RE: f64 = 1.313394403070582058;
    const P_IM: f64 = 0.246302813757349672;
    const Q_RE: f64 = -0.222502276695959162;
    const Q_IM: f64 = -1.094230599755851886;

    #[test]
    fn constant_solution_for_zero_indices() {
        for &z in &[c(2.0, 1.0), c(0.3, 0.9), c(-1.4, 0.2)] {
            let p = legendre_p(c(0.0, 0.0), c(0.0, 0.0), z).unwrap();
            assert!((p - c(1.0, 0.0)).norm() < 1e-13, "P = {p}");
        }
    }

    #[test]
    fn frozen_values_at_2_plus_i() {
        let nu = c(0.5, 0.0);
        let mu = c(1.0 / 3.0, 0.0);
        let (p, q) = legendre_pq(nu, mu, c(2.0, 1.0)).unwrap();
        assert!((p - c(P_RE, P_IM)).norm() < 1e-12);
        assert!((q - c(Q_RE, Q_IM)).norm() < 1e-12);
    }

    #[test]
    fn ode_residual_small_for_p_and_q() {
        let nu = c(0.5, 0.0);
        let mu = c(1.0 / 3.0, 0.0);
        let z = c(2.0, 1.0);
        let p = legendre_p(nu, mu, z).unwrap();
        let dp = legendre_p_deriv(nu, mu, z).unwrap();
        let d2p = legendre_p_deriv2(nu, mu, z).unwrap();
        assert!(ode_residual(nu, mu, z, p, dp, d2p) < 1e-9);
        let q = legendre_q(nu, mu, z).unwrap();
        let dq = legendre_q_deriv(nu, mu, z).unwrap();
        let d2q = legendre_q_deriv2(nu, mu, z).unwrap();
        assert!(ode_residual(nu, mu, z, q, dq, d2q) < 1e-9);
    }

    #[test]
    fn wronskian_independence_at_two_points() {
        let nu = c(0.5, 0.0);
        let mu = c(1.0 / 3.0, 0.0);
        for &z in &[c(2.0, 1.0), c(0.4, 1.3)] {
            let p = legendre_p(nu, mu, z).unwrap();
            let q = legendre_q(nu, mu, z).unwrap();
            let dp = legendre_p_deriv(nu, mu, z).unwrap();
            let dq = legendre_q_deriv(nu, mu, z).unwrap();
            let w = p * dq - q * dp;
            // expected e^{i pi mu} G(nu+mu+1)/G(nu-mu+1) / (1 - z^2)
            let one = c(1.0, 0.0);
            let expect = (Complex64::new(0.0, PI * mu.re)).exp()
                * gamma(nu + mu + 1.0)
                / gamma(nu - mu + 1.0)
                / (one - z * z);
            assert!((w - expect).norm() / expect.norm() < 1e-10);
            assert!(w.norm() > 1e-3);
        }
    }

    #[test]
    fn rejects_cut_and_degenerate_order() {
        assert!(matches!(
            legendre_p(c(0.5, 0.0), c(1.0 / 3.0, 0.0), c(0.3, 0.0)),
            Err(Error::Cut(_))
        ));
        assert!(matches!(
            legendre_p(c(0.5, 0.0), c(1.0, 0.0), c(2.0, 1.0)),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(
            legendre_q(c(0.5, 0.0), c(2.0, 0.0), c(2.0, 1.0)),
            Err(Error::Parameter(_))
        ));
    }
}
