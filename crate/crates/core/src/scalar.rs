//! Scalar abstraction shared by plain evaluation, forward-mode
//! dual-number differentiation, and truncated Taylor-jet propagation.

use num_complex::Complex64;

use crate::jets::{Jet, JET_LEN};

/// Scalar abstraction so one right-hand side serves plain evaluation,
/// dual-number Jacobians and Taylor-jet propagation.
pub trait Scalar: Copy {
    /// Primal (order-zero) value, used for branch decisions and stopping rules.
    fn val(&self) -> Complex64;
    fn from_c(v: Complex64) -> Self;
    fn add(self, o: Self) -> Self;
    fn sub(self, o: Self) -> Self;
    fn mul(self, o: Self) -> Self;
    fn div(self, o: Self) -> Self;
    fn neg(self) -> Self;
    fn cscale(self, f: Complex64) -> Self;
    fn sqrt(self) -> Self;
}

impl Scalar for Complex64 {
    fn val(&self) -> Complex64 {
        *self
    }
    fn from_c(v: Complex64) -> Self {
        v
    }
    fn add(self, o: Self) -> Self {
        self + o
    }
    fn sub(self, o: Self) -> Self {
        self - o
    }
    fn mul(self, o: Self) -> Self {
        self * o
    }
    fn div(self, o: Self) -> Self {
        self / o
    }
    fn neg(self) -> Self {
        -self
    }
    fn cscale(self, f: Complex64) -> Self {
        self * f
    }
    fn sqrt(self) -> Self {
        Complex64::sqrt(self)
    }
}

/// Forward-mode dual number carrying one directional derivative.
#[derive(Debug, Clone, Copy)]
pub struct Dual {
    pub v: Complex64,
    pub d: Complex64,
}

impl Scalar for Dual {
    fn val(&self) -> Complex64 {
        self.v
    }
    fn from_c(v: Complex64) -> Self {
        Dual {
            v,
            d: Complex64::new(0.0, 0.0),
        }
    }
    fn add(self, o: Self) -> Self {
        Dual {
            v: self.v + o.v,
            d: self.d + o.d,
        }
    }
    fn sub(self, o: Self) -> Self {
        Dual {
            v: self.v - o.v,
            d: self.d - o.d,
        }
    }
    fn mul(self, o: Self) -> Self {
        Dual {
            v: self.v * o.v,
            d: self.d * o.v + self.v * o.d,
        }
    }
    fn div(self, o: Self) -> Self {
        Dual {
            v: self.v / o.v,
            d: (self.d * o.v - self.v * o.d) / (o.v * o.v),
        }
    }
    fn neg(self) -> Self {
        Dual {
            v: -self.v,
            d: -self.d,
        }
    }
    fn cscale(self, f: Complex64) -> Self {
        Dual {
            v: self.v * f,
            d: self.d * f,
        }
    }
    fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        Dual {
            v: s,
            d: self.d / (2.0 * s),
        }
    }
}

impl Scalar for Jet {
    fn val(&self) -> Complex64 {
        self.c[0]
    }
    fn from_c(v: Complex64) -> Self {
        Jet::constant(v)
    }
    fn add(self, o: Self) -> Self {
        Jet::add(&self, &o)
    }
    fn sub(self, o: Self) -> Self {
        Jet::sub(&self, &o)
    }
    fn mul(self, o: Self) -> Self {
        Jet::mul(&self, &o)
    }
    fn div(self, o: Self) -> Self {
        Jet::div(&self, &o)
    }
    fn neg(self) -> Self {
        Jet::neg(&self)
    }
    fn cscale(self, f: Complex64) -> Self {
        Jet::scale(&self, f)
    }
    fn sqrt(self) -> Self {
        let mut r = Jet::zero();
        r.c[0] = self.c[0].sqrt();
        for k in 1..JET_LEN {
            let mut acc = self.c[k];
            for j in 1..k {
                acc -= r.c[j] * r.c[k - j];
            }
            r.c[k] = acc / (2.0 * r.c[0]);
        }
        r
    }
}

