//! Gauss hypergeometric function 2F1 for complex parameters and argument,
//! plus the complex gamma function it needs.
//!
//! Evaluation ladder: raw power series inside |s| <= 0.7, then the Pfaff
//! transformation s -> s/(s-1), then the 1-s connection formula (when
//! c-a-b is not an integer), with a wide-radius series fallback for the
//! awkward ring where neither transformation lands inside the fast region.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::qseries::PI;

/// Crossover radius between the raw series and transformation formulas.
const SERIES_RADIUS: f64 = 0.7;
/// Beyond this the raw series is not trusted at all.
const FALLBACK_RADIUS: f64 = 0.90;
const SERIES_EPS: f64 = 1e-16;
const MAX_TERMS: usize = 2500;

/// Lanczos approximation (g = 7, 9 coefficients) for the complex gamma
/// function, with reflection for Re(z) < 0.5.
pub fn gamma(z: Complex64) -> Complex64 {
    const G: [f64; 9] = [
        0.99999999999980993,
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ];
    if z.re < 0.5 {
        // reflection: gamma(z) = pi / (sin(pi z) gamma(1-z))
        let one = Complex64::new(1.0, 0.0);
        return PI / ((PI * z).sin() * gamma(one - z));
    }
    let z = z - 1.0;
    let mut x = Complex64::new(G[0], 0.0);
    for (i, &g) in G.iter().enumerate().skip(1) {
        x += g / (z + i as f64);
    }
    let t = z + 7.5;
    (2.0 * PI).sqrt() * t.powc(z + 0.5) * (-t).exp() * x
}

fn is_nonpositive_integer(z: Complex64) -> bool {
    z.im.abs() < 1e-12 && z.re <= 0.5 && (z.re - z.re.round()).abs() < 1e-12
}

fn is_integer(z: Complex64) -> bool {
    z.im.abs() < 1e-12 && (z.re - z.re.round()).abs() < 1e-12
}

fn raw_series(a: Complex64, b: Complex64, c: Complex64, s: Complex64) -> Result<Complex64> {
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    for n in 0..MAX_TERMS {
        let nf = n as f64;
        term *= (a + nf) * (b + nf) / ((c + nf) * (nf + 1.0)) * s;
        sum += term;
        if term.norm() <= SERIES_EPS * sum.norm() && n > 4 {
            return Ok(sum);
        }
    }
    Err(Error::NoConvergence(format!(
        "2F1 series did not converge at |s| = {}",
        s.norm()
    )))
}

/// 2F1(a, b; c | s).
///
/// Fails with `Parameter` when c is a non-positive integer, `Cut` when s lies
/// on [1, inf), and `NoConvergence` when the transformation ladder cannot
/// cover the argument.
pub fn hyp2f1(a: Complex64, b: Complex64, c: Complex64, s: Complex64) -> Result<Complex64> {
    if is_nonpositive_integer(c) {
        return Err(Error::Parameter(format!(
            "2F1 parameter c = {c} is a non-positive integer"
        )));
    }
    // terminating (polynomial) cases converge everywhere
    if is_nonpositive_integer(a) || is_nonpositive_integer(b) {
        return raw_series(a, b, c, s);
    }
    if s.im == 0.0 && s.re >= 1.0 {
        return Err(Error::Cut(format!(
            "argument s = {} on the branch cut [1, inf)",
            s.re
        )));
    }
    if s.norm() <= SERIES_RADIUS {
        return raw_series(a, b, c, s);
    }
    // Pfaff: (1-s)^{-a} 2F1(a, c-b; c | s/(s-1))
    let one = Complex64::new(1.0, 0.0);
    let sp = s / (s - one);
    if sp.norm() <= SERIES_RADIUS {
        return Ok((one - s).powc(-a) * raw_series(a, c - b, c, sp)?);
    }
    // 1-s connection, valid for non-integer c-a-b
    let cab = c - a - b;
    if (one - s).norm() <= SERIES_RADIUS && !is_integer(cab) {
        let f1 = gamma(c) * gamma(cab) / (gamma(c - a) * gamma(c - b))
            * raw_series(a, b, one + a + b - c, one - s)?;
        let f2 = gamma(c) * gamma(-cab) / (gamma(a) * gamma(b))
            * (one - s).powc(cab)
            * raw_series(c - a, c - b, one + cab, one - s)?;
        return Ok(f1 + f2);
    }
    // slow but convergent fallback ring
    if s.norm() <= FALLBACK_RADIUS {
        return raw_series(a, b, c, s);
    }
    if sp.norm() <= FALLBACK_RADIUS {
        return Ok((one - s).powc(-a) * raw_series(a, c - b, c, sp)?);
    }
    Err(Error::NoConvergence(format!(
        "2F1 argument s = {s} outside the covered region"
    )))
}

/// d/ds 2F1(a, b; c | s) = (a b / c) 2F1(a+1, b+1; c+1 | s).
pub fn hyp2f1_deriv(a: Complex64, b: Complex64, c: Complex64, s: Complex64) -> Result<Complex64> {
    Ok(a * b / c * hyp2f1(a + 1.0, b + 1.0, c + 1.0, s)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c64(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    // frozen 40-digit oracle values
    const F_HALF_HALF_ONE_009: f64 = 1.023715546376166387; // = (2/pi) K(0.3)
    const F_SIXTH_THIRD_HALF_02: f64 = 1.024893318790276425;

    #[test]
    fn gamma_sanity() {
        assert!((gamma(c64(5.0, 0.0)) - c64(24.0, 0.0)).norm() < 1e-10);
        assert!((gamma(c64(0.5, 0.0)) - c64(PI.sqrt(), 0.0)).norm() < 1e-12);
        // reflection path
        let g = gamma(c64(-0.5, 0.0));
        assert!((g - c64(-2.0 * PI.sqrt(), 0.0)).norm() < 1e-10);
    }

    #[test]
    fn unit_at_zero_argument() {
        let v = hyp2f1(c64(0.5, 0.0), c64(0.5, 0.0), c64(1.0, 0.0), c64(0.0, 0.0)).unwrap();
        assert!((v - c64(1.0, 0.0)).norm() == 0.0);
    }

    #[test]
    fn matches_agm_k_oracle() {
        let v = hyp2f1(c64(0.5, 0.0), c64(0.5, 0.0), c64(1.0, 0.0), c64(0.09, 0.0)).unwrap();
        assert!((v - c64(F_HALF_HALF_ONE_009, 0.0)).norm() < 1e-12);
        let lq = crate::elliptic::legendre_quad(crate::elliptic::Modulus::new(c64(0.3, 0.0)).unwrap())
            .unwrap();
        assert!((v - 2.0 / PI * lq.big_k).norm() < 1e-12);
    }

    #[test]
    fn frozen_value_at_generic_parameters() {
        let v = hyp2f1(
            c64(1.0 / 6.0, 0.0),
            c64(1.0 / 3.0, 0.0),
            c64(0.5, 0.0),
            c64(0.2, 0.0),
        )
        .unwrap();
        assert!((v - c64(F_SIXTH_THIRD_HALF_02, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn derivative_rule_matches_finite_difference() {
        let (a, b, cc) = (c64(1.0 / 6.0, 0.0), c64(1.0 / 3.0, 0.0), c64(0.5, 0.0));
        let s = c64(0.2, 0.0);
        let h = 1e-6;
        let d = hyp2f1_deriv(a, b, cc, s).unwrap();
        let fp = hyp2f1(a, b, cc, s + h).unwrap();
        let fm = hyp2f1(a, b, cc, s - h).unwrap();
        let fd = (fp - fm) / (2.0 * h);
        assert!((d - fd).norm() / d.norm() < 1e-8);
    }

    #[test]
    fn pfaff_region_agrees_with_series_overlap() {
        // point reachable both by raw series (fallback ring) and Pfaff
        let (a, b, cc) = (c64(0.3, 0.1), c64(0.7, -0.2), c64(1.1, 0.0));
        let s = c64(-0.65, 0.35); // |s| = 0.738..., |s/(s-1)| < 0.7
        let via_pfaff = hyp2f1(a, b, cc, s).unwrap();
        let via_series = raw_series(a, b, cc, s).unwrap();
        assert!((via_pfaff - via_series).norm() / via_series.norm() < 1e-12);
    }

    #[test]
    fn one_minus_s_connection_agrees() {
        // s = 0.8: |s| > 0.7, s/(s-1) = -4, 1-s = 0.2 -> connection path
        let (a, b, cc) = (c64(0.25, 0.0), c64(0.35, 0.0), c64(1.2, 0.0));
        let s = c64(0.8, 0.0);
        let v = hyp2f1(a, b, cc, s).unwrap();
        let direct = raw_series(a, b, cc, s).unwrap(); // still converges slowly
        assert!((v - direct).norm() / direct.norm() < 1e-11);
    }

    #[test]
    fn rejects_bad_parameters_and_cut() {
        assert!(matches!(
            hyp2f1(c64(1.0, 0.0), c64(1.0, 0.0), c64(0.0, 0.0), c64(0.1, 0.0)),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(
            hyp2f1(c64(1.0, 0.0), c64(1.0, 0.0), c64(2.5, 0.0), c64(1.5, 0.0)),
            Err(Error::Cut(_))
        ));
    }
}
