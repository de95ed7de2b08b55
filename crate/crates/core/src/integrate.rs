//! Adaptive integration of the modular flows along straight segments in the
//! complex time plane.
//!
//! The segment t0 -> t1 is pulled back to sigma in [0, 1] through
//! dX/dsigma = (t1 - t0) V(X); the stepper is the Dormand-Prince 5(4)
//! embedded pair with PI step-size control, the complex components being
//! error-controlled exactly like a doubled real system.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::flows::{admissible, vector_field_at, SystemState};

/// Straight segment in the complex time plane of one system.
#[derive(Debug, Clone, Copy)]
pub struct PathSegment {
    pub t0: Complex64,
    pub t1: Complex64,
}

/// Integration options. Tolerances must sit in [1e-13, 1e-6].
#[derive(Debug, Clone, Copy)]
pub struct IntOpts {
    pub rtol: f64,
    pub atol: f64,
    /// Cap on the sigma-step; the default guarantees the reporting density.
    pub max_step: f64,
}

impl Default for IntOpts {
    fn default() -> Self {
        IntOpts {
            rtol: 1e-10,
            atol: 1e-12,
            max_step: 1.0 / 66.0,
        }
    }
}

/// One accepted sample along a trajectory.
#[derive(Debug, Clone)]
pub struct Sample {
    pub t: Complex64,
    pub state: Vec<Complex64>,
    /// Local error estimate of the accepting step (0 for the initial point).
    pub err_est: f64,
}

/// An integrated trajectory with step statistics.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub system: crate::flows::SystemId,
    pub segment: PathSegment,
    pub samples: Vec<Sample>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl Trajectory {
    pub fn final_state(&self) -> &Sample {
        self.samples.last().expect("trajectory has samples")
    }

    pub fn state_at(&self, idx: usize) -> SystemState {
        SystemState {
            system: self.system,
            v: self.samples[idx].state.clone(),
        }
    }

    /// Mean accepted step length in t-plane units.
    pub fn mean_step(&self) -> f64 {
        let seg = (self.segment.t1 - self.segment.t0).norm();
        seg / self.accepted_steps.max(1) as f64
    }
}

const DP_C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
/// 5th-order weights (same as the last A row; FSAL pair).
const DP_B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
/// Embedded 4th-order weights.
const DP_B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrates `init` along `path` in the system's own time.
pub fn integrate(init: &SystemState, path: PathSegment, opts: &IntOpts) -> Result<Trajectory> {
    if !(1e-13..=1e-6).contains(&opts.rtol) || !(1e-13..=1e-6).contains(&opts.atol) {
        return Err(Error::Parameter(
            "tolerances must lie in [1e-13, 1e-6]".into(),
        ));
    }
    let dt = path.t1 - path.t0;
    let n = init.v.len();
    let sys = init.system;
    let f = |sigma: f64, y: &[Complex64]| -> Result<Vec<Complex64>> {
        let st = SystemState {
            system: sys,
            v: y.to_vec(),
        };
        let t = path.t0 + dt * sigma;
        Ok(vector_field_at(&st, t)?
            .into_iter()
            .map(|v| v * dt)
            .collect())
    };

    let mut sigma = 0.0f64;
    let mut y = init.v.clone();
    let mut h = opts.max_step.min(0.01);
    let mut err_prev: f64 = 1.0;
    let mut samples = vec![Sample {
        t: path.t0,
        state: y.clone(),
        err_est: 0.0,
    }];
    let mut accepted = 0usize;
    let mut rejected = 0usize;
    let mut k0 = f(0.0, &y)?;

    let escape = |sigma: f64, y: &[Complex64]| -> Result<()> {
        let st = SystemState {
            system: sys,
            v: y.to_vec(),
        };
        if !admissible(&st) {
            let t = path.t0 + dt * sigma;
            return Err(Error::DomainEscape {
                t_re: t.re,
                t_im: t.im,
                what: "state no longer finite".into(),
            });
        }
        Ok(())
    };

    while sigma < 1.0 {
        if h < 1e-12 {
            let t = path.t0 + dt * sigma;
            return Err(Error::StepUnderflow { t_re: t.re, t_im: t.im });
        }
        if sigma + h > 1.0 {
            h = 1.0 - sigma;
        }
        // stages
        let mut k = vec![k0.clone()];
        for s in 1..7 {
            let mut ys = y.clone();
            for (j, kj) in k.iter().enumerate() {
                let a = DP_A[s][j];
                if a != 0.0 {
                    for i in 0..n {
                        ys[i] += h * a * kj[i];
                    }
                }
            }
            k.push(f(sigma + DP_C[s] * h, &ys)?);
        }
        let mut y5 = y.clone();
        let mut y4 = y.clone();
        for (j, kj) in k.iter().enumerate() {
            for i in 0..n {
                y5[i] += h * DP_B5[j] * kj[i];
                y4[i] += h * DP_B4[j] * kj[i];
            }
        }
        // scaled error norm over the doubled real components
        let mut err2 = 0.0;
        for i in 0..n {
            let sc_re = opts.atol + opts.rtol * y[i].re.abs().max(y5[i].re.abs());
            let sc_im = opts.atol + opts.rtol * y[i].im.abs().max(y5[i].im.abs());
            let de = y5[i] - y4[i];
            err2 += (de.re / sc_re).powi(2) + (de.im / sc_im).powi(2);
        }
        let err = (err2 / (2.0 * n as f64)).sqrt().max(1e-30);

        if err <= 1.0 {
            sigma += h;
            y = y5;
            escape(sigma, &y)?;
            accepted += 1;
            samples.push(Sample {
                t: path.t0 + dt * sigma,
                state: y.clone(),
                err_est: err,
            });
            k0 = k.pop().unwrap(); // FSAL
            // PI controller (order 5: exponents 0.7/5 and 0.4/5)
            let fac = 0.9 * err.powf(-0.7 / 5.0) * err_prev.powf(0.4 / 5.0);
            h *= fac.clamp(0.2, 5.0);
            h = h.min(opts.max_step);
            err_prev = err;
        } else {
            rejected += 1;
            h *= (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
        }
    }

    // the loop guarantees the endpoint sample lands exactly on sigma = 1
    Ok(Trajectory {
        system: sys,
        segment: path,
        samples,
        accepted_steps: accepted,
        rejected_steps: rejected,
    })
}
