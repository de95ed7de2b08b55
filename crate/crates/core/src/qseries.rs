//! Jacobi theta-constants, the Weierstrass eta series, modular forms built
//! from them, duplication rules, and the closed-form solutions of the
//! canonical and Jacobi flows.
//!
//! The three theta-constants are the classical series
//!
//! ```text
//! theta2(tau) = sum_k exp(pi i tau (k+1/2)^2)        (k over all integers)
//! theta3(tau) = sum_k exp(pi i tau k^2)
//! theta4(tau) = sum_k (-1)^k exp(pi i tau k^2)
//! ```
//!
//! and eta is `2 pi^2 { 1/24 - sum_{k>=1} w_k/(1-w_k)^2 }` with
//! `w_k = exp(2 pi i k tau)`. All tau-derivatives are taken termwise, never
//! by finite differences.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

/// Series terms below `EPS_REL * |partial sum|` stop the summation.
const EPS_REL: f64 = 1e-17;
/// Minimum number of terms taken before the stopping rule may fire.
const MIN_TERMS: usize = 8;
/// Hard cap on series terms; far above what the im-floor ever needs.
const MAX_TERMS: usize = 4000;

/// Convergence floor for Im(tau). Below this the q-series lose digits, so the
/// point is rejected instead of silently degrading.
pub const IM_FLOOR: f64 = 0.05;

pub const I: Complex64 = Complex64::new(0.0, 1.0);
pub const PI: f64 = std::f64::consts::PI;

/// A point of the upper half-plane, the "time" of all modular flows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tau {
    pub re: f64,
    pub im: f64,
}

impl Tau {
    pub fn new(re: f64, im: f64) -> Result<Self> {
        if !(im > 0.0) {
            return Err(Error::Domain(format!(
                "tau = {re}+{im}i is not in the upper half-plane"
            )));
        }
        if im < IM_FLOOR {
            return Err(Error::Domain(format!(
                "Im(tau) = {im} below convergence floor {IM_FLOOR}"
            )));
        }
        Ok(Tau { re, im })
    }

    pub fn from_complex(z: Complex64) -> Result<Self> {
        Tau::new(z.re, z.im)
    }

    pub fn as_complex(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

/// Theta-constants and eta at a common tau, with termwise tau-derivatives up
/// to the requested order (at most 3).
#[derive(Debug, Clone)]
pub struct ThetaQuad {
    pub tau: Tau,
    pub max_order: usize,
    /// `theta2[n]` is the n-th tau-derivative; index 0 is the value.
    pub theta2: Vec<Complex64>,
    pub theta3: Vec<Complex64>,
    pub theta4: Vec<Complex64>,
    pub eta: Vec<Complex64>,
}

impl ThetaQuad {
    pub fn t2(&self) -> Complex64 {
        self.theta2[0]
    }
    pub fn t3(&self) -> Complex64 {
        self.theta3[0]
    }
    pub fn t4(&self) -> Complex64 {
        self.theta4[0]
    }
    pub fn eta0(&self) -> Complex64 {
        self.eta[0]
    }

    /// Residual of the Jacobi identity theta3^4 = theta2^4 + theta4^4,
    /// relative to the largest fourth power.
    pub fn jacobi_identity_residual(&self) -> f64 {
        let p2 = self.t2().powu(4);
        let p3 = self.t3().powu(4);
        let p4 = self.t4().powu(4);
        let scale = p2.norm().max(p3.norm()).max(p4.norm()).max(f64::MIN_POSITIVE);
        (p3 - p2 - p4).norm() / scale
    }
}

/// Moebius (fractional-linear) map tau -> (alpha tau + beta)/(gamma tau + delta),
/// normalized to unit determinant.
#[derive(Debug, Clone, Copy)]
pub struct Moebius {
    pub alpha: Complex64,
    pub beta: Complex64,
    pub gamma: Complex64,
    pub delta: Complex64,
}

impl Moebius {
    pub const IDENTITY: Moebius = Moebius {
        alpha: Complex64::new(1.0, 0.0),
        beta: Complex64::new(0.0, 0.0),
        gamma: Complex64::new(0.0, 0.0),
        delta: Complex64::new(1.0, 0.0),
    };

    /// Builds a unit-determinant map, rescaling the entries if necessary.
    pub fn new(alpha: Complex64, beta: Complex64, gamma: Complex64, delta: Complex64) -> Result<Self> {
        let det = alpha * delta - beta * gamma;
        if det.norm() < 1e-14 {
            return Err(Error::Parameter("Moebius determinant vanishes".into()));
        }
        let s = det.sqrt();
        Ok(Moebius {
            alpha: alpha / s,
            beta: beta / s,
            gamma: gamma / s,
            delta: delta / s,
        })
    }

    pub fn det(&self) -> Complex64 {
        self.alpha * self.delta - self.beta * self.gamma
    }

    /// Denominator gamma*t + delta.
    pub fn den(&self, t: Complex64) -> Complex64 {
        self.gamma * t + self.delta
    }

    pub fn apply(&self, t: Complex64) -> Result<Complex64> {
        let d = self.den(t);
        if d.norm() < 1e-14 {
            return Err(Error::Domain("Moebius denominator vanishes".into()));
        }
        Ok((self.alpha * t + self.beta) / d)
    }
}

fn sum_series(
    mut term: impl FnMut(usize) -> Complex64,
    head: Complex64,
) -> Result<Complex64> {
    let mut sum = head;
    for k in 1.. {
        let t = term(k);
        sum += t;
        if k >= MIN_TERMS && t.norm() <= EPS_REL * sum.norm() {
            return Ok(sum);
        }
        if k > MAX_TERMS {
            return Err(Error::NoConvergence("theta/eta series".into()));
        }
    }
    unreachable!()
}

/// Evaluates the theta-constants and eta at `tau` with termwise derivatives
/// up to `max_order` (0..=3).
pub fn theta_quad(tau: Tau, max_order: usize) -> Result<ThetaQuad> {
    if max_order > 3 {
        return Err(Error::Parameter(format!(
            "derivative order {max_order} exceeds 3"
        )));
    }
    let t = tau.as_complex();
    let pit = PI * I * t;

    let mut theta2 = Vec::with_capacity(max_order + 1);
    let mut theta3 = Vec::with_capacity(max_order + 1);
    let mut theta4 = Vec::with_capacity(max_order + 1);
    let mut eta = Vec::with_capacity(max_order + 1);

    for n in 0..=max_order {
        // theta2: terms 2 exp(pi i tau (k-1/2)^2) for k = 1, 2, ...
        // (half-integer squares), derivative factor (pi i (k-1/2)^2)^n
        let t2 = sum_series(
            |k| {
                let hk = k as f64 - 0.5;
                2.0 * (pit * hk * hk).exp() * (PI * I * hk * hk).powu(n as u32)
            },
            Complex64::new(0.0, 0.0),
        )?;
        theta2.push(t2);

        // theta3 / theta4: head 1 (order 0 only), terms 2 (+-1)^k exp(pi i tau k^2)
        let head = if n == 0 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        };
        let t3 = sum_series(
            |k| {
                let kk = (k * k) as f64;
                2.0 * (pit * kk).exp() * (PI * I * kk).powu(n as u32)
            },
            head,
        )?;
        theta3.push(t3);
        let t4 = sum_series(
            |k| {
                let kk = (k * k) as f64;
                let sign = if k % 2 == 1 { -1.0 } else { 1.0 };
                2.0 * sign * (pit * kk).exp() * (PI * I * kk).powu(n as u32)
            },
            head,
        )?;
        theta4.push(t4);

        // eta: 2 pi^2 { 1/24 - sum w/(1-w)^2 }, derivatives through
        // f(w) = w/(1-w)^2 with w = exp(2 pi i k tau), dw/dtau = 2 pi i k w.
        let head_eta = if n == 0 {
            Complex64::new(2.0 * PI * PI / 24.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        };
        let e = sum_series(
            |k| {
                let w = (2.0 * PI * I * (k as f64) * t).exp();
                let c = 2.0 * PI * I * (k as f64);
                let om = Complex64::new(1.0, 0.0) - w;
                let d = match n {
                    0 => w / (om * om),
                    1 => c * w * (1.0 + w) / om.powu(3),
                    2 => c * c * (w * (1.0 + w) / om.powu(3) + w * w * 2.0 * (2.0 + w) / om.powu(4)),
                    _ => {
                        c.powu(3)
                            * (w * (1.0 + w) / om.powu(3)
                                + 3.0 * w * w * 2.0 * (2.0 + w) / om.powu(4)
                                + w.powu(3) * 6.0 * (3.0 + w) / om.powu(5))
                    }
                };
                -2.0 * PI * PI * d
            },
            head_eta,
        )?;
        eta.push(e);
    }

    Ok(ThetaQuad {
        tau,
        max_order,
        theta2,
        theta3,
        theta4,
        eta,
    })
}

/// Weierstrass invariants and Eisenstein series built from a theta quadruple.
///
/// `g2_sym`/`g3_sym` use the symmetric three-theta polynomials; `g2_nt`/`g3_nt`
/// use the two-theta form (no theta2) that embeds the Weierstrass flow into
/// the canonical one. `e2/e4/e6` are normalized on the two-theta convention.
#[derive(Debug, Clone, Copy)]
pub struct ModularForms {
    pub g2_sym: Complex64,
    pub g3_sym: Complex64,
    pub g2_nt: Complex64,
    pub g3_nt: Complex64,
    pub e2: Complex64,
    pub e4: Complex64,
    pub e6: Complex64,
}

pub fn modular_forms(tq: &ThetaQuad) -> ModularForms {
    let p2 = tq.t2().powu(4);
    let p3 = tq.t3().powu(4);
    let p4 = tq.t4().powu(4);
    let pi4 = PI.powi(4);
    let pi6 = PI.powi(6);

    let g2_sym = pi4 / 24.0 * (p2 * p2 + p3 * p3 + p4 * p4);
    let g3_sym = pi6 / 432.0 * (p2 + p3) * (p3 + p4) * (p4 - p2);
    let g2_nt = pi4 / 12.0 * (p3 * p3 - p3 * p4 + p4 * p4);
    let g3_nt = pi6 / 432.0 * (2.0 * p3 - p4) * (p3 + p4) * (2.0 * p4 - p3);

    let e2 = 12.0 / (PI * PI) * tq.eta0();
    let e4 = 12.0 / pi4 * g2_nt;
    let e6 = 216.0 / pi6 * g3_nt;

    ModularForms {
        g2_sym,
        g3_sym,
        g2_nt,
        g3_nt,
        e2,
        e4,
        e6,
    }
}

/// Duplication rules: eta(2 tau) and g2(2 tau) from data at tau.
pub fn duplication_values(tq: &ThetaQuad) -> (Complex64, Complex64) {
    let s = tq.t3().powu(4) + tq.t4().powu(4);
    let g2 = modular_forms(tq).g2_sym;
    let eta2 = 0.5 * tq.eta0() + PI * PI / 48.0 * s;
    let g2_2 = -0.25 * g2 + 5.0 * PI.powi(4) / 192.0 * s * s;
    (eta2, g2_2)
}

/// Sign choice for the multivalued branches of the closed-form solutions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BranchSign {
    Plus,
    Minus,
}

impl BranchSign {
    pub fn factor(self) -> f64 {
        match self {
            BranchSign::Plus => 1.0,
            BranchSign::Minus => -1.0,
        }
    }
}

/// sqrt(pi i / 6) on the principal branch.
pub fn sqrt_pi_i_6() -> Complex64 {
    (PI * I / 6.0).sqrt()
}

/// General Moebius-parameterized solution of the canonical system at `tau`.
///
/// With `eps = 0` the solution decouples into the elementary two-parameter
/// family; `sign` then fixes the sign of the y component (and of the square
/// roots otherwise).
pub fn canonical_closed_form(
    tau: Complex64,
    m: &Moebius,
    eps: Complex64,
    sign: BranchSign,
) -> Result<[Complex64; 4]> {
    let den = m.den(tau);
    if den.norm() < 1e-14 {
        return Err(Error::Domain("gamma tau + delta = 0".into()));
    }
    if eps.norm() == 0.0 {
        let y = sign.factor() / den;
        let z = 1.0 / den;
        let u = -(m.gamma * m.gamma * tau + m.gamma * m.delta - 1.0) / (den * den);
        return Ok([Complex64::new(0.0, 0.0), y, z, u]);
    }
    let big_t = m.apply(tau)?;
    let tq = theta_quad(Tau::from_complex(big_t)?, 0)?;
    let r = sqrt_pi_i_6() * sign.factor();
    let x = eps * tq.t2() * tq.t2() / den;
    let y = r * tq.t3() * tq.t3() / den;
    let z = r * tq.t4() * tq.t4() / den;
    let u = 2.0 * I / PI * tq.eta0() / (den * den) - m.gamma / den;
    Ok([x, y, z, u])
}

/// General solution of the Jacobi system as a function of its own time h
/// `sign` flips A and B together; the pair (a, b) is even
/// in that choice.
pub fn jacobi_closed_form(
    h: Complex64,
    m: &Moebius,
    i_const: Complex64,
    sign: BranchSign,
) -> Result<[Complex64; 4]> {
    if i_const.norm() < 1e-14 {
        return Err(Error::Parameter("Jacobi integral constant I = 0".into()));
    }
    let den = m.den(h);
    if den.norm() < 1e-14 {
        return Err(Error::Domain("gamma h + delta = 0".into()));
    }
    let big_t = m.apply(h)?;
    let tq = theta_quad(Tau::from_complex(big_t)?, 0)?;
    let lam = tq.t2().powu(4) / tq.t3().powu(4);
    let frac4 = tq.t4().powu(4) / tq.t3().powu(4);

    let a = i_const - 2.0 * i_const * lam;
    let b = i_const * i_const / 8.0 * lam * frac4;
    let s = sign.factor();
    let a_big = s * (PI * I / i_const).sqrt() * tq.t3() * tq.t3() / den;
    let brace = PI * PI / 12.0 * (tq.t2().powu(4) - tq.t4().powu(4))
        + tq.eta0()
        + PI / 2.0 * I * m.gamma * den;
    let b_big = s * (I * i_const / PI.powi(3)).sqrt() / (den * tq.t3() * tq.t3()) * brace;
    Ok([a_big, b_big, a, b])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    // Oracle values computed by 100-term direct summation in 40-digit
    // arithmetic, frozen here.
    const THETA3_I: f64 = 1.086434811213308014575316;
    const THETA2_I: f64 = 0.913579138156116821407659;
    const ETA_I: f64 = 0.785398163397448309615661; // = pi/4

    #[test]
    fn rejects_lower_half_plane_and_floor() {
        assert!(matches!(Tau::new(0.0, -1.0), Err(Error::Domain(_))));
        assert!(matches!(Tau::new(0.0, 0.01), Err(Error::Domain(_))));
        assert!(Tau::new(0.0, 0.05).is_ok());
    }

    #[test]
    fn rejects_order_above_three() {
        let tau = Tau::new(0.0, 1.0).unwrap();
        assert!(theta_quad(tau, 4).is_err());
    }

    #[test]
    fn cusp_limit_at_tau_10i() {
        let tq = theta_quad(Tau::new(0.0, 10.0).unwrap(), 0).unwrap();
        let lead = 2.0 * (-2.5 * PI).exp();
        assert!((tq.t2() - c(lead, 0.0)).norm() < 1e-12);
        assert!((tq.t3() - c(1.0, 0.0)).norm() < 1e-12);
        assert!((tq.t4() - c(1.0, 0.0)).norm() < 1e-12);
        assert!((tq.eta0() - c(PI * PI / 12.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn jacobi_identity_at_i() {
        let tq = theta_quad(Tau::new(0.0, 1.0).unwrap(), 0).unwrap();
        let r = (tq.t3().powu(4) - tq.t2().powu(4) - tq.t4().powu(4)).norm();
        assert!(r < 1e-13, "residual {r}");
    }

    #[test]
    fn matches_high_precision_oracle_at_i() {
        let tq = theta_quad(Tau::new(0.0, 1.0).unwrap(), 0).unwrap();
        assert!((tq.t3() - c(THETA3_I, 0.0)).norm() < 1e-14);
        assert!((tq.t2() - c(THETA2_I, 0.0)).norm() < 1e-14);
        assert!((tq.t4() - c(THETA2_I, 0.0)).norm() < 1e-14);
        assert!((tq.eta0() - c(ETA_I, 0.0)).norm() < 1e-14);

        // independent brute-force summation oracle, 100 terms, compensated
        let mut sum = 0.0f64;
        let mut comp = 0.0f64;
        for k in 1..=100 {
            let term = 2.0 * (-PI * (k * k) as f64).exp();
            let yv = term - comp;
            let tv = sum + yv;
            comp = (tv - sum) - yv;
            sum = tv;
        }
        assert!((tq.t3().re - (1.0 + sum)).abs() < 1e-14);
    }

    #[test]
    fn termwise_derivative_matches_finite_difference() {
        let h = 1e-5;
        let tau0 = Tau::new(0.13, 0.92).unwrap();
        let tq = theta_quad(tau0, 1).unwrap();
        let tp = theta_quad(Tau::new(tau0.re + h, tau0.im).unwrap(), 0).unwrap();
        let tm = theta_quad(Tau::new(tau0.re - h, tau0.im).unwrap(), 0).unwrap();
        for (d, p, m0) in [
            (tq.theta2[1], tp.t2(), tm.t2()),
            (tq.theta3[1], tp.t3(), tm.t3()),
            (tq.theta4[1], tp.t4(), tm.t4()),
            (tq.eta[1], tp.eta0(), tm.eta0()),
        ] {
            let fd = (p - m0) / (2.0 * h);
            assert!((d - fd).norm() / d.norm() < 1e-8, "{d} vs {fd}");
        }
    }

    #[test]
    fn modular_forms_cusp_limit() {
        // At the cusp theta2 -> 0, theta3 = theta4 -> 1, eta -> pi^2/12.
        let tq = theta_quad(Tau::new(0.0, 40.0).unwrap(), 0).unwrap();
        let mf = modular_forms(&tq);
        assert!((mf.e2 - c(1.0, 0.0)).norm() < 1e-12);
        assert!((mf.e4 - c(1.0, 0.0)).norm() < 1e-12);
        assert!((mf.e6 - c(1.0, 0.0)).norm() < 1e-12);
        assert!((mf.g2_sym - c(PI.powi(4) / 12.0, 0.0)).norm() < 1e-10);
        assert!((mf.g2_nt - c(PI.powi(4) / 12.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn two_g_conventions_agree_on_theta_surface() {
        // Substituting theta2^4 = theta3^4 - theta4^4 into the symmetric form
        // must reproduce the two-theta form.
        let tq = theta_quad(Tau::new(0.0, 2.0).unwrap(), 0).unwrap();
        let mf = modular_forms(&tq);
        let p3 = tq.t3().powu(4);
        let p4 = tq.t4().powu(4);
        let p2sub = p3 - p4;
        let g2_sub = PI.powi(4) / 24.0 * (p2sub * p2sub + p3 * p3 + p4 * p4);
        let g3_sub = PI.powi(6) / 432.0 * (p2sub + p3) * (p3 + p4) * (p4 - p2sub);
        assert!((mf.g2_nt - g2_sub).norm() / g2_sub.norm() < 1e-12);
        assert!((mf.g3_nt - g3_sub).norm() / g3_sub.norm() < 1e-12);
        assert!((mf.g2_sym - g2_sub).norm() / g2_sub.norm() < 1e-12);
    }

    #[test]
    fn duplication_matches_direct_evaluation() {
        let tq = theta_quad(Tau::new(0.0, 1.5).unwrap(), 0).unwrap();
        let (eta2, g2_2) = duplication_values(&tq);
        let tq2 = theta_quad(Tau::new(0.0, 3.0).unwrap(), 0).unwrap();
        let mf2 = modular_forms(&tq2);
        assert!((eta2 - tq2.eta0()).norm() < 1e-12);
        assert!((g2_2 - mf2.g2_sym).norm() / mf2.g2_sym.norm() < 1e-12);
    }

    #[test]
    fn decoupled_closed_form_at_origin() {
        let m = Moebius::new(c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)).unwrap();
        let s = canonical_closed_form(c(0.0, 0.0), &m, c(0.0, 0.0), BranchSign::Plus).unwrap();
        for (got, want) in s.iter().zip([c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]) {
            assert!((got - want).norm() < 1e-15);
        }
    }

    #[test]
    fn identity_moebius_collapses_to_definition() {
        let tau = c(0.1, 1.1);
        let eps = sqrt_pi_i_6();
        let s = canonical_closed_form(tau, &Moebius::IDENTITY, eps, BranchSign::Plus).unwrap();
        let tq = theta_quad(Tau::from_complex(tau).unwrap(), 0).unwrap();
        let r = sqrt_pi_i_6();
        assert!((s[0] - r * tq.t2() * tq.t2()).norm() < 1e-13);
        assert!((s[1] - r * tq.t3() * tq.t3()).norm() < 1e-13);
        assert!((s[2] - r * tq.t4() * tq.t4()).norm() < 1e-13);
        assert!((s[3] - 2.0 * I / PI * tq.eta0()).norm() < 1e-13);
    }

    #[test]
    fn jacobi_closed_form_reproduces_classical_variables() {
        // With I = 4 the (a, b) components reduce to the classical rational
        // expressions in the theta-constants.
        let h = c(0.0, 1.0);
        let s = jacobi_closed_form(h, &Moebius::IDENTITY, c(4.0, 0.0), BranchSign::Plus).unwrap();
        let tq = theta_quad(Tau::from_complex(h).unwrap(), 0).unwrap();
        let lam = tq.t2().powu(4) / tq.t3().powu(4);
        let a_classic = 4.0 - 8.0 * lam;
        let b_classic = 2.0 * tq.t2().powu(4) * tq.t4().powu(4) / tq.t3().powu(8);
        assert!((s[2] - a_classic).norm() < 1e-12);
        assert!((s[3] - b_classic).norm() < 1e-12);
    }

    #[test]
    fn moebius_rejects_degenerate() {
        assert!(Moebius::new(c(1.0, 0.0), c(2.0, 0.0), c(2.0, 0.0), c(4.0, 0.0)).is_err());
    }
}
