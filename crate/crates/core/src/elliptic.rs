//! Complete elliptic integrals K, K', E, E' for complex modulus via the
//! arithmetic-geometric mean, their k-derivatives from the closed
//! differential system, and the four-parameter general solution of that
//! system.
//!
//! K(k) = pi / (2 M(1, k')) with k' = sqrt(1 - k^2); E comes from the AGM
//! side sums E = K (1 - sum 2^{n-1} c_n^2), sharing convergence control with
//! K so the Legendre identity stays tight.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::qseries::PI;

const AGM_MAX_ITER: usize = 64;
const AGM_EPS: f64 = 4e-16;
/// Singular-set guard: |k|, |1 - k^2| must stay above this.
const MODULUS_GUARD: f64 = 1e-10;

/// Complex Legendre modulus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Modulus(pub Complex64);

impl Modulus {
    pub fn new(k: Complex64) -> Result<Self> {
        if k.norm() < MODULUS_GUARD {
            return Err(Error::SingularModulus("k = 0 (K' diverges)".into()));
        }
        let one = Complex64::new(1.0, 0.0);
        if (one - k * k).norm() < MODULUS_GUARD {
            return Err(Error::SingularModulus("k = +-1 (K diverges)".into()));
        }
        Ok(Modulus(k))
    }

    /// Complementary modulus on the principal branch of sqrt(1 - k^2).
    pub fn complementary(&self) -> Complex64 {
        (Complex64::new(1.0, 0.0) - self.0 * self.0).sqrt()
    }
}

/// K, K', E, E' at a common modulus.
#[derive(Debug, Clone, Copy)]
pub struct LegendreQuad {
    pub k: Complex64,
    pub big_k: Complex64,
    pub big_k_prime: Complex64,
    pub big_e: Complex64,
    pub big_e_prime: Complex64,
}

impl LegendreQuad {
    /// K E' + K' E - K K' - pi/2, the Legendre identity residual.
    pub fn legendre_identity_residual(&self) -> Complex64 {
        self.big_k * self.big_e_prime + self.big_k_prime * self.big_e
            - self.big_k * self.big_k_prime
            - Complex64::new(PI / 2.0, 0.0)
    }
}

/// One AGM pass returning (K, E) for the given modulus. The square-root
/// branch at each step takes the root with non-negative real part, ties
/// broken toward positive imaginary part.
fn agm_ke(k: Complex64) -> Result<(Complex64, Complex64)> {
    let one = Complex64::new(1.0, 0.0);
    let kp = (one - k * k).sqrt();
    let mut a = one;
    let mut b = kp;
    let mut csum = k * k * 0.5; // 2^{-1} c_0^2 with c_0 = k
    let mut pw = 1.0f64;
    let mut prev_c = f64::INFINITY;
    for n in 0..AGM_MAX_ITER {
        let c = (a - b) * 0.5;
        csum += pw * c * c;
        pw *= 2.0;
        let an = (a + b) * 0.5;
        if an.norm() < 1e-300 {
            return Err(Error::Branch("AGM midpoint collapsed to zero".into()));
        }
        let mut bn = (a * b).sqrt();
        let ratio = bn / an;
        if ratio.re < 0.0 || (ratio.re == 0.0 && ratio.im < 0.0) {
            bn = -bn;
        }
        if (bn / an).re.abs() < 1e-12 {
            return Err(Error::Branch(
                "ambiguous AGM square-root branch (right half-plane rule violated)".into(),
            ));
        }
        a = an;
        b = bn;
        // quadratic convergence stalls at the rounding floor; stop there too
        let done = c.norm() <= AGM_EPS * a.norm() || (n > 3 && c.norm() >= prev_c);
        prev_c = c.norm();
        if n > 3 && done {
            let big_k = PI / (2.0 * a);
            return Ok((big_k, big_k * (one - csum)));
        }
    }
    Err(Error::NoConvergence("AGM did not converge".into()))
}

/// AGM pass generic over the scalar type, so dual-number runs yield the
/// analytic k-derivatives of (K, E); agrees with the closed derivative
/// system to machine precision.
pub fn ke_generic<T: crate::scalar::Scalar>(k: T) -> Result<(T, T)> {
    let one = T::from_c(Complex64::new(1.0, 0.0));
    let kp = one.sub(k.mul(k)).sqrt();
    let mut a = one;
    let mut b = kp;
    let mut csum = k.mul(k).cscale(Complex64::new(0.5, 0.0));
    let mut pw = 1.0f64;
    let mut prev_c = f64::INFINITY;
    for n in 0..AGM_MAX_ITER {
        let c = a.sub(b).cscale(Complex64::new(0.5, 0.0));
        csum = csum.add(c.mul(c).cscale(Complex64::new(pw, 0.0)));
        pw *= 2.0;
        let an = a.add(b).cscale(Complex64::new(0.5, 0.0));
        let mut bn = a.mul(b).sqrt();
        let ratio = bn.val() / an.val();
        if ratio.re < 0.0 || (ratio.re == 0.0 && ratio.im < 0.0) {
            bn = bn.neg();
        }
        a = an;
        b = bn;
        let done = c.val().norm() <= AGM_EPS * a.val().norm()
            || (n > 3 && c.val().norm() >= prev_c);
        prev_c = c.val().norm();
        if n > 3 && done {
            let big_k = one.cscale(Complex64::new(PI / 2.0, 0.0)).div(a);
            let big_e = big_k.mul(one.sub(csum));
            return Ok((big_k, big_e));
        }
    }
    Err(Error::NoConvergence("AGM did not converge".into()))
}

/// K, K', E, E' via the AGM; K'(k) = K(k') and E'(k) = E(k') on the
/// principal complementary branch.
pub fn legendre_quad(k: Modulus) -> Result<LegendreQuad> {
    let kp = k.complementary();
    let (big_k, big_e) = agm_ke(k.0)?;
    let (big_k_prime, big_e_prime) = agm_ke(kp)?;
    Ok(LegendreQuad {
        k: k.0,
        big_k,
        big_k_prime,
        big_e,
        big_e_prime,
    })
}

/// k-derivatives of (K, K', E, E') from the closed system.
#[derive(Debug, Clone, Copy)]
pub struct LegendreQuadDeriv {
    pub d_big_k: Complex64,
    pub d_big_k_prime: Complex64,
    pub d_big_e: Complex64,
    pub d_big_e_prime: Complex64,
}

pub fn legendre_quad_deriv(k: Modulus, lq: &LegendreQuad) -> LegendreQuadDeriv {
    let kk = k.0;
    let one = Complex64::new(1.0, 0.0);
    let km1 = kk * kk - one;
    LegendreQuadDeriv {
        d_big_k: -lq.big_k / kk - lq.big_e / (km1 * kk),
        d_big_k_prime: kk * lq.big_k_prime / (one - kk * kk) + lq.big_e_prime / (km1 * kk),
        d_big_e: (lq.big_e - lq.big_k) / kk,
        d_big_e_prime: kk * lq.big_k_prime / (one - kk * kk) + kk * lq.big_e_prime / km1,
    }
}

/// The four-parameter general solution of the closed system: the canonical
/// quadruple mixed by constants (alpha, beta, gamma, delta). Its level
/// surface is K E' + K' E - K K' = (pi/2)(alpha delta + beta gamma).
pub fn general_solution(
    lq: &LegendreQuad,
    alpha: Complex64,
    beta: Complex64,
    gamma: Complex64,
    delta: Complex64,
) -> LegendreQuad {
    LegendreQuad {
        k: lq.k,
        big_k: alpha * lq.big_k - beta * lq.big_k_prime,
        big_k_prime: gamma * lq.big_k + delta * lq.big_k_prime,
        big_e: alpha * lq.big_e + beta * (lq.big_e_prime - lq.big_k_prime),
        big_e_prime: delta * lq.big_e_prime + gamma * (lq.big_k - lq.big_e),
    }
}
