//! Truncated Taylor polynomials ("jets") in the time variable, used to
//! propagate exact high-order derivatives through polynomial vector fields
//! and to assemble nonlinear ODE residuals without finite differences.

use num_complex::Complex64;

/// Maximum jet length: value plus derivatives up to order 4.
pub const JET_LEN: usize = 5;

/// Taylor coefficients c[k] of a function of the flow time, truncated at
/// degree `JET_LEN - 1`. Derivatives are k! * c[k].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub c: [Complex64; JET_LEN],
}

impl Jet {
    pub fn zero() -> Jet {
        Jet {
            c: [Complex64::new(0.0, 0.0); JET_LEN],
        }
    }

    pub fn constant(v: Complex64) -> Jet {
        let mut j = Jet::zero();
        j.c[0] = v;
        j
    }

    /// Jet from derivative values d[k] = f^{(k)}(0).
    pub fn from_derivatives(d: &[Complex64]) -> Jet {
        let mut j = Jet::zero();
        let mut fact = 1.0;
        for (k, &dk) in d.iter().take(JET_LEN).enumerate() {
            if k > 0 {
                fact *= k as f64;
            }
            j.c[k] = dk / fact;
        }
        j
    }

    /// k-th derivative value.
    pub fn derivative(&self, k: usize) -> Complex64 {
        let mut fact = 1.0;
        for i in 2..=k {
            fact *= i as f64;
        }
        self.c[k] * fact
    }

    pub fn value(&self) -> Complex64 {
        self.c[0]
    }

    pub fn add(&self, o: &Jet) -> Jet {
        let mut r = *self;
        for k in 0..JET_LEN {
            r.c[k] += o.c[k];
        }
        r
    }

    pub fn sub(&self, o: &Jet) -> Jet {
        let mut r = *self;
        for k in 0..JET_LEN {
            r.c[k] -= o.c[k];
        }
        r
    }

    pub fn neg(&self) -> Jet {
        let mut r = *self;
        for k in 0..JET_LEN {
            r.c[k] = -r.c[k];
        }
        r
    }

    pub fn scale(&self, s: Complex64) -> Jet {
        let mut r = *self;
        for k in 0..JET_LEN {
            r.c[k] *= s;
        }
        r
    }

    pub fn mul(&self, o: &Jet) -> Jet {
        let mut r = Jet::zero();
        for i in 0..JET_LEN {
            for j in 0..JET_LEN - i {
                r.c[i + j] += self.c[i] * o.c[j];
            }
        }
        r
    }

    /// Series division; panics on zero leading coefficient (callers guard).
    pub fn div(&self, o: &Jet) -> Jet {
        let mut r = Jet::zero();
        for k in 0..JET_LEN {
            let mut acc = self.c[k];
            for j in 0..k {
                acc -= r.c[j] * o.c[k - j];
            }
            r.c[k] = acc / o.c[0];
        }
        r
    }

    /// Termwise derivative d/dt, truncated (top coefficient lost).
    pub fn diff(&self) -> Jet {
        let mut r = Jet::zero();
        for k in 1..JET_LEN {
            r.c[k - 1] = self.c[k] * k as f64;
        }
        r
    }

    pub fn powi(&self, n: usize) -> Jet {
        let mut r = Jet::constant(Complex64::new(1.0, 0.0));
        for _ in 0..n {
            r = r.mul(self);
        }
        r
    }
}
