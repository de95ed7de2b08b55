//! Hamiltonian layer of the canonical flow: the rational bracket omega, its
//! transcendental partner omega-tilde, the pencil omega + lambda
//! omega-tilde, Casimirs and determinant identities, the Nambu 4-bracket
//! reduction, the constant-bracket obstruction, bracket transport along
//! flows, the mixed-variable Lagrangian check, the pushforward bracket in
//! Jacobi coordinates, and the scaling symmetry.

use num_complex::Complex64;

use crate::conserved::{canonical_j_gradients, canonical_transcendental, normalizer_n};
use crate::elliptic::ke_generic;
use crate::error::{Error, Result};
use crate::flows::{
    jacobian, transform_jacobian, transform_state, vector_field, SystemId, SystemState,
    TransformOpts,
};
use crate::integrate::Trajectory;
use crate::linalg;
use crate::qseries::{I, PI};
use crate::scalar::{Dual, Scalar};

pub type Mat4 = [[Complex64; 4]; 4];

/// Which bracket of the pencil.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BracketKind {
    Omega,
    OmegaTilde,
    Pencil(Complex64),
}

/// A 4x4 antisymmetric Poisson bivector evaluated at a state.
#[derive(Debug, Clone)]
pub struct BracketMatrix {
    pub kind: BracketKind,
    pub m: Mat4,
}

fn zero4() -> Mat4 {
    [[Complex64::new(0.0, 0.0); 4]; 4]
}

fn antisymmetrize_upper(m: &mut Mat4) {
    for i in 0..4 {
        for j in 0..i {
            m[i][j] = -m[j][i];
        }
        m[i][i] = Complex64::new(0.0, 0.0);
    }
}

fn guard_canonical(s: &SystemState) -> Result<()> {
    if !matches!(s.system, SystemId::Canonical) {
        return Err(Error::Parameter("bracket needs a canonical state".into()));
    }
    crate::flows::canonical_guard(&s.v)
}

/// The degenerate rational bracket: prefactor x/(2H) on the first row built
/// from the y, z, u field components.
pub fn omega(s: &SystemState) -> Result<BracketMatrix> {
    guard_canonical(s)?;
    let (x, y, z, u) = (s.v[0], s.v[1], s.v[2], s.v[3]);
    let h = (y * y - z * z) / (2.0 * x * x);
    let f = x / (2.0 * h);
    let mut m = zero4();
    m[0][1] = f * (u + y * y - 2.0 * z * z) * y;
    m[0][2] = f * (u - 2.0 * y * y + z * z) * z;
    m[0][3] = f * (u * u - y.powu(4) + y * y * z * z - z.powu(4));
    antisymmetrize_upper(&mut m);
    Ok(BracketMatrix {
        kind: BracketKind::Omega,
        m,
    })
}

/// The transcendental extension, with K = K(z/y), E = E(z/y) and the three
/// printed polynomial blocks.
pub fn omega_tilde(s: &SystemState) -> Result<BracketMatrix> {
    guard_canonical(s)?;
    let (x, y, z, _u) = (s.v[0], s.v[1], s.v[2], s.v[3]);
    let lq = crate::elliptic::legendre_quad(crate::elliptic::Modulus::new(z / y)?)?;
    let (bk, be) = (lq.big_k, lq.big_e);
    let r = be / bk - 1.0;
    let m1 = 3.0 * y * y * r * r - z * z;
    let m3 = y * y * (3.0 * be * be / (bk * bk) - 1.0) + z * z;
    let m2 = 3.0 * y.powu(4) * r * r + y * y * z * z * (6.0 * be / bk - 5.0) + 2.0 * z.powu(4);
    let f = 2.0 / PI * bk * bk;
    let mut m = zero4();
    m[0][1] = f * x / y * z * z;
    m[0][2] = f * x * z;
    m[0][3] = f * x * m1;
    m[1][2] = f * z / y * (y * y - z * z);
    m[1][3] = f * m2 / y;
    m[2][3] = f * z * m3;
    antisymmetrize_upper(&mut m);
    Ok(BracketMatrix {
        kind: BracketKind::OmegaTilde,
        m,
    })
}

/// omega + lambda omega-tilde (entrywise).
pub fn bracket(s: &SystemState, kind: BracketKind) -> Result<BracketMatrix> {
    match kind {
        BracketKind::Omega => omega(s),
        BracketKind::OmegaTilde => omega_tilde(s),
        BracketKind::Pencil(lambda) => {
            let w = omega(s)?;
            let wt = omega_tilde(s)?;
            let mut m = zero4();
            for i in 0..4 {
                for j in 0..4 {
                    m[i][j] = w.m[i][j] + lambda * wt.m[i][j];
                }
            }
            Ok(BracketMatrix {
                kind: BracketKind::Pencil(lambda),
                m,
            })
        }
    }
}

/// Observables that the bracket layer manipulates. Named ones carry
/// analytic gradients; `Custom` falls back to central differences.
#[derive(Clone)]
pub enum Observable {
    Hamiltonian,
    J1,
    J2,
    Normalizer,
    /// (lambda J1)^{-1}
    InvLambdaJ1(Complex64),
    Coordinate(usize),
    Custom(
        &'static str,
        std::rc::Rc<dyn Fn(&[Complex64]) -> Result<Complex64>>,
    ),
}

impl Observable {
    pub fn name(&self) -> String {
        match self {
            Observable::Hamiltonian => "H".into(),
            Observable::J1 => "J1".into(),
            Observable::J2 => "J2".into(),
            Observable::Normalizer => "N".into(),
            Observable::InvLambdaJ1(_) => "(lambda J1)^-1".into(),
            Observable::Coordinate(i) => format!("x{}", i),
            Observable::Custom(n, _) => (*n).into(),
        }
    }

    pub fn eval(&self, v: &[Complex64]) -> Result<Complex64> {
        match self {
            Observable::Hamiltonian => {
                Ok((v[1] * v[1] - v[2] * v[2]) / (2.0 * v[0] * v[0]))
            }
            Observable::J1 => Ok(canonical_transcendental(v)?.0),
            Observable::J2 => Ok(canonical_transcendental(v)?.1),
            Observable::Normalizer => Ok(normalizer_n(v)?.0),
            Observable::InvLambdaJ1(lambda) => {
                let j1 = canonical_transcendental(v)?.0;
                Ok(1.0 / (lambda * j1))
            }
            Observable::Coordinate(i) => Ok(v[*i]),
            Observable::Custom(_, f) => f(v),
        }
    }

    pub fn gradient(&self, v: &[Complex64]) -> Result<[Complex64; 4]> {
        let zero = Complex64::new(0.0, 0.0);
        match self {
            Observable::Hamiltonian => {
                let (x, y, z) = (v[0], v[1], v[2]);
                Ok([
                    -(y * y - z * z) / (x * x * x),
                    y / (x * x),
                    -z / (x * x),
                    zero,
                ])
            }
            Observable::J1 => Ok(canonical_j_gradients(v)?.0),
            Observable::J2 => Ok(canonical_j_gradients(v)?.1),
            Observable::Normalizer => Ok(normalizer_n(v)?.1),
            Observable::InvLambdaJ1(lambda) => {
                let j1 = canonical_transcendental(v)?.0;
                let g = canonical_j_gradients(v)?.0;
                let f = -1.0 / (lambda * j1 * j1);
                Ok([f * g[0], f * g[1], f * g[2], f * g[3]])
            }
            Observable::Coordinate(i) => {
                let mut g = [zero; 4];
                g[*i] = Complex64::new(1.0, 0.0);
                Ok(g)
            }
            Observable::Custom(_, f) => {
                // central differences, step 1e-6
                let h = 1e-6;
                let mut g = [zero; 4];
                for j in 0..4 {
                    let mut vp = v.to_vec();
                    let mut vm = v.to_vec();
                    vp[j] += Complex64::new(h, 0.0);
                    vm[j] -= Complex64::new(h, 0.0);
                    g[j] = (f(&vp)? - f(&vm)?) / (2.0 * h);
                }
                Ok(g)
            }
        }
    }
}

/// {f, g}_b = grad f . b . grad g.
pub fn poisson_bracket(
    f: &Observable,
    g: &Observable,
    b: &BracketMatrix,
    s: &SystemState,
) -> Result<Complex64> {
    let gf = f.gradient(&s.v)?;
    let gg = g.gradient(&s.v)?;
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..4 {
        for j in 0..4 {
            acc += gf[i] * b.m[i][j] * gg[j];
        }
    }
    Ok(acc)
}

fn mat_to_vecs(m: &Mat4) -> Vec<Vec<Complex64>> {
    m.iter().map(|r| r.to_vec()).collect()
}

fn mv4(m: &Mat4, v: &[Complex64; 4]) -> [Complex64; 4] {
    let mut out = [Complex64::new(0.0, 0.0); 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i] += m[i][j] * v[j];
        }
    }
    out
}

fn maxnorm4(v: &[Complex64; 4]) -> f64 {
    v.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// Determinant of an antisymmetric 4x4 as the squared Pfaffian (exact
/// polynomial, far better conditioned than elimination).
fn det_antisym(m: &Mat4) -> Complex64 {
    let pf = m[0][1] * m[2][3] - m[0][2] * m[1][3] + m[0][3] * m[1][2];
    pf * pf
}

/// Casimir relations and determinant identities at one state.
#[derive(Debug, Clone)]
pub struct CasimirReport {
    /// max-norm of omega grad J1 and omega grad J2 (relative to the
    /// gradient scale times the bracket scale)
    pub omega_j1: f64,
    pub omega_j2: f64,
    pub tilde_h: f64,
    pub tilde_n: f64,
    /// |det omega| normalized by the fourth power of the entry scale
    pub det_omega: f64,
    /// relative deviation of det(omega + lambda omega-tilde) from
    /// (4/pi^2) lambda^2 J1^4 x^6 y^2 z^2
    pub det_pencil_rel: f64,
    /// conditioning of the Pfaffian evaluation: largest product magnitude
    /// over the Pfaffian magnitude. Near the J1 = 0 surface the determinant
    /// degenerates and f64 cannot certify small relative residuals; rows
    /// gate on this factor.
    pub det_conditioning: f64,
}

pub fn casimir_and_det_check(s: &SystemState, lambda: Complex64) -> Result<CasimirReport> {
    let w = omega(s)?;
    let wt = omega_tilde(s)?;
    let (gj1, gj2) = canonical_j_gradients(&s.v)?;
    let gh = Observable::Hamiltonian.gradient(&s.v)?;
    let gn = Observable::Normalizer.gradient(&s.v)?;

    let scale_w = w.m.iter().flatten().map(|c| c.norm()).fold(0.0, f64::max);
    let scale_wt = wt.m.iter().flatten().map(|c| c.norm()).fold(0.0, f64::max);
    let rel = |m: &Mat4, g: &[Complex64; 4], sc: f64| {
        maxnorm4(&mv4(m, g)) / (sc * g.iter().map(|c| c.norm()).fold(0.0, f64::max)).max(1e-30)
    };

    let pencil = bracket(s, BracketKind::Pencil(lambda))?;
    let det_p = det_antisym(&pencil.m);
    let pf_terms = [
        pencil.m[0][1] * pencil.m[2][3],
        pencil.m[0][2] * pencil.m[1][3],
        pencil.m[0][3] * pencil.m[1][2],
    ];
    let pf = pf_terms[0] - pf_terms[1] + pf_terms[2];
    let det_conditioning =
        pf_terms.iter().map(|t| t.norm()).fold(0.0, f64::max) / pf.norm().max(1e-300);
    let (x, y, z) = (s.v[0], s.v[1], s.v[2]);
    let j1 = canonical_transcendental(&s.v)?.0;
    let want = 4.0 / (PI * PI) * lambda * lambda * j1.powu(4) * x.powu(6) * y * y * z * z;
    let det_w = det_antisym(&w.m);

    Ok(CasimirReport {
        omega_j1: rel(&w.m, &gj1, scale_w),
        omega_j2: rel(&w.m, &gj2, scale_w),
        tilde_h: rel(&wt.m, &gh, scale_wt),
        tilde_n: rel(&wt.m, &gn, scale_wt),
        det_omega: det_w.norm() / scale_w.powi(4).max(1e-30),
        det_pencil_rel: (det_p - want).norm() / want.norm(),
        det_conditioning,
    })
}

/// Max normalized Schouten residual sum_cyc Omega^{il} d_l Omega^{jk} over
/// coordinate triples, entry derivatives by central differences with one
/// Richardson refinement.
pub fn jacobi_identity_residual(s: &SystemState, kind: BracketKind) -> Result<f64> {
    let b0 = bracket(s, kind)?;
    let h = 1e-6;
    // d[l][j][k] = d Omega^{jk} / d x^l
    let mut d = [[[Complex64::new(0.0, 0.0); 4]; 4]; 4];
    for l in 0..4 {
        let diff = |step: f64| -> Result<Mat4> {
            let mut vp = s.v.clone();
            let mut vm = s.v.clone();
            vp[l] += Complex64::new(step, 0.0);
            vm[l] -= Complex64::new(step, 0.0);
            let bp = bracket(&SystemState::new(s.system, vp)?, kind)?;
            let bm = bracket(&SystemState::new(s.system, vm)?, kind)?;
            let mut out = zero4();
            for i in 0..4 {
                for j in 0..4 {
                    out[i][j] = (bp.m[i][j] - bm.m[i][j]) / (2.0 * step);
                }
            }
            Ok(out)
        };
        let d1 = diff(h)?;
        let d2 = diff(h / 2.0)?;
        for j in 0..4 {
            for k in 0..4 {
                d[l][j][k] = (4.0 * d2[j][k] - d1[j][k]) / 3.0;
            }
        }
    }
    let mut worst = 0.0f64;
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                let mut acc = Complex64::new(0.0, 0.0);
                let mut scale = 0.0f64;
                for l in 0..4 {
                    let t1 = b0.m[i][l] * d[l][j][k];
                    let t2 = b0.m[j][l] * d[l][k][i];
                    let t3 = b0.m[k][l] * d[l][i][j];
                    acc += t1 + t2 + t3;
                    scale = scale.max(t1.norm()).max(t2.norm()).max(t3.norm());
                }
                if scale > 1e-14 {
                    worst = worst.max(acc.norm() / scale.max(1.0));
                }
            }
        }
    }
    Ok(worst)
}

/// Nambu reduction report.
#[derive(Debug, Clone)]
pub struct NambuReport {
    /// max relative entrywise deviation of (2/pi) x^3 y z eps grad J1 grad J2
    /// from omega
    pub entrywise_rel: f64,
    /// |{f1,f2,I2,I1} - {f1,f2}_omega| for coordinate observables, max
    pub four_bracket_rel: f64,
    /// sign flip under swapping the two integral slots (exact)
    pub swap_antisymmetry: f64,
}

fn eps4(p: [usize; 4]) -> f64 {
    let mut sgn = 1.0;
    for a in 0..4 {
        for b in a + 1..4 {
            if p[a] == p[b] {
                return 0.0;
            }
            if p[a] > p[b] {
                sgn = -sgn;
            }
        }
    }
    sgn
}

pub fn nambu_reduce_check(s: &SystemState, lambda: Complex64) -> Result<NambuReport> {
    let w = omega(s)?;
    let (gj1, gj2) = canonical_j_gradients(&s.v)?;
    let (x, y, z) = (s.v[0], s.v[1], s.v[2]);
    let pref = 2.0 / PI * x.powu(3) * y * z;
    let mut nam = zero4();
    for j in 0..4 {
        for k in 0..4 {
            let mut acc = Complex64::new(0.0, 0.0);
            for l in 0..4 {
                for n in 0..4 {
                    let e = eps4([j, k, l, n]);
                    if e != 0.0 {
                        acc += e * gj1[l] * gj2[n];
                    }
                }
            }
            nam[j][k] = pref * acc;
        }
    }
    let scale = w.m.iter().flatten().map(|c| c.norm()).fold(0.0, f64::max);
    let mut entry = 0.0f64;
    for i in 0..4 {
        for j in 0..4 {
            entry = entry.max((nam[i][j] - w.m[i][j]).norm() / scale);
        }
    }

    // full 4-bracket with multiplier sqrt(det Omega) = (2/pi) lambda J1^2
    // x^3 y z, slots (f1, f2, I2, I1) with I1 = (lambda J1)^{-1}, I2 = J2
    let j1 = canonical_transcendental(&s.v)?.0;
    let xi = 2.0 / PI * lambda * j1 * j1 * x.powu(3) * y * z;
    let gi1 = Observable::InvLambdaJ1(lambda).gradient(&s.v)?;
    let four = |ga: &[Complex64; 4], gb: &[Complex64; 4], gc: &[Complex64; 4], gd: &[Complex64; 4]| {
        let mut acc = Complex64::new(0.0, 0.0);
        for p in 0..4 {
            for q in 0..4 {
                for r in 0..4 {
                    for t in 0..4 {
                        let e = eps4([p, q, r, t]);
                        if e != 0.0 {
                            acc += e * ga[p] * gb[q] * gc[r] * gd[t];
                        }
                    }
                }
            }
        }
        xi * acc
    };
    let mut fb_rel = 0.0f64;
    let mut swap = 0.0f64;
    for i in 0..4 {
        for j in 0..4 {
            if i == j {
                continue;
            }
            let gi = Observable::Coordinate(i).gradient(&s.v)?;
            let gj = Observable::Coordinate(j).gradient(&s.v)?;
            let fb = four(&gi, &gj, &gj2, &gi1);
            fb_rel = fb_rel.max((fb - w.m[i][j]).norm() / scale);
            let fb_swapped = four(&gi, &gj, &gi1, &gj2);
            swap = swap.max((fb + fb_swapped).norm() / scale.max(1e-30));
        }
    }
    Ok(NambuReport {
        entrywise_rel: entry,
        four_bracket_rel: fb_rel,
        swap_antisymmetry: swap,
    })
}

/// Constant-antisymmetric-bracket obstruction: stacks the linear constraints
/// (Omega W + W^T Omega) = 0 over the supplied Jacobians and returns the
/// nullspace dimension plus the normalized smallest singular value.
pub fn constant_bracket_nullspace(ws: &[Vec<Vec<Complex64>>]) -> (usize, f64) {
    // basis of antisymmetric 4x4: (01),(02),(03),(12),(13),(23)
    let pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
    let mut rows: Vec<Vec<Complex64>> = Vec::new();
    for w in ws {
        for &(i, j) in &pairs {
            // constraint entry (i, j) of Omega W + W^T Omega as linear
            // function of the 6 unknowns
            let mut row = Vec::with_capacity(6);
            for &(p, q) in &pairs {
                // Omega = E_pq - E_qp
                let mut val = Complex64::new(0.0, 0.0);
                // (Omega W)_{ij} = sum_l Omega_{il} W_{lj}
                if i == p {
                    val += w[q][j];
                }
                if i == q {
                    val -= w[p][j];
                }
                // (W^T Omega)_{ij} = sum_l W_{li} Omega_{lj}
                if j == q {
                    val += w[p][i];
                }
                if j == p {
                    val -= w[q][i];
                }
                row.push(val);
            }
            rows.push(row);
        }
    }
    // normalize rows
    for r in rows.iter_mut() {
        let n: f64 = r.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if n > 1e-300 {
            for c in r.iter_mut() {
                *c /= n;
            }
        }
    }
    let sv = linalg::singular_values(&rows);
    let hi = *sv.last().unwrap();
    // the doubled-real embedding reports each complex singular value twice
    let dim = sv.iter().filter(|s| **s < 1e-8 * hi.max(1e-30)).count() / 2;
    (dim, sv[0] / hi.max(1e-30))
}

/// Convenience wrapper sampling the constraint from a list of states.
pub fn constant_bracket_obstruction(states: &[SystemState]) -> Result<(usize, f64)> {
    let ws: Vec<_> = states
        .iter()
        .map(jacobian)
        .collect::<Result<Vec<_>>>()?;
    Ok(constant_bracket_nullspace(&ws))
}

/// Transport residual of a bracket along a trajectory: the flow derivative
/// of Omega(X(t)) (forward Euler predictor, step `h`) against both printed
/// sign conventions. Exactly one of them vanishes.
#[derive(Debug, Clone)]
pub struct TransportReport {
    /// residual of dOmega/dt = W Omega + Omega W^T (the statement)
    pub statement: f64,
    /// residual of dOmega/dt = -(Omega W + W^T Omega) (the proof line)
    pub proof_sign: f64,
}

pub fn bracket_transport_residual(
    traj: &Trajectory,
    kind: BracketKind,
    h: f64,
) -> Result<TransportReport> {
    let mut worst_stmt = 0.0f64;
    let mut worst_proof = 0.0f64;
    let n = traj.samples.len();
    let stride = (n / 8).max(1);
    for idx in (0..n - 1).step_by(stride) {
        let s = traj.state_at(idx);
        if crate::flows::canonical_guard(&s.v).is_err() {
            continue;
        }
        let v = vector_field(&s)?;
        let mut vp = s.v.clone();
        for (c, f) in vp.iter_mut().zip(v.iter()) {
            *c += h * f;
        }
        let b0 = bracket(&s, kind)?;
        let b1 = bracket(&SystemState::new(s.system, vp)?, kind)?;
        let w = jacobian(&s)?;
        let mut scale = 0.0f64;
        let mut r_stmt = 0.0f64;
        let mut r_proof = 0.0f64;
        for i in 0..4 {
            for j in 0..4 {
                let dot = (b1.m[i][j] - b0.m[i][j]) / h;
                let mut wo = Complex64::new(0.0, 0.0);
                let mut ow = Complex64::new(0.0, 0.0);
                for l in 0..4 {
                    wo += w[i][l] * b0.m[l][j] + b0.m[i][l] * w[j][l]; // W O + O W^T
                    ow += b0.m[i][l] * w[l][j] + w[l][i] * b0.m[l][j]; // O W + W^T O
                }
                scale = scale.max(wo.norm()).max(dot.norm());
                r_stmt = r_stmt.max((dot - wo).norm());
                r_proof = r_proof.max((dot + ow).norm());
            }
        }
        worst_stmt = worst_stmt.max(r_stmt / scale.max(1e-30));
        worst_proof = worst_proof.max(r_proof / scale.max(1e-30));
    }
    Ok(TransportReport {
        statement: worst_stmt,
        proof_sign: worst_proof,
    })
}

// ---- Lagrangian check in mixed variables (A, B, k, I) ----

/// rho coefficients of the first-order Lagrangian
/// L = rho_A A-dot + rho_k k-dot + rho_I I-dot - J1^2, generic over scalars
/// so duals provide the analytic partials.
fn rho_generic<T: Scalar>(v: &[T]) -> Result<[T; 4]> {
    let (a_big, b_big, k, i) = (v[0], v[1], v[2], v[3]);
    let one = T::from_c(Complex64::new(1.0, 0.0));
    let (bk, be) = ke_generic(k)?;
    let k2 = k.mul(k);
    let k2m1 = k2.sub(one);
    // J1 = 4 K B - (E + (k^2-1) K) A I ; J2 = 4 K' B + (E' - k^2 K') A I
    let j1 = bk
        .mul(b_big)
        .cscale(Complex64::new(4.0, 0.0))
        .sub(be.add(k2m1.mul(bk)).mul(a_big).mul(i));
    let kp = one.sub(k2).sqrt();
    let (bkp, bep) = ke_generic(kp)?;
    let j2 = bkp
        .mul(b_big)
        .cscale(Complex64::new(4.0, 0.0))
        .add(bep.sub(k2.mul(bkp)).mul(a_big).mul(i));
    let rho_a = j1
        .mul(bk)
        .cscale(Complex64::new(4.0, 0.0))
        .div(a_big.mul(a_big));
    let rho_b = T::from_c(Complex64::new(0.0, 0.0));
    let num = j1.mul(j1).sub(
        b_big
            .mul(b_big)
            .mul(bk)
            .mul(bk)
            .cscale(Complex64::new(16.0, 0.0)),
    );
    let den = k.mul(k2m1).mul(i).mul(a_big.mul(a_big));
    let rho_k = k
        .mul(i)
        .mul(bk.mul(bk))
        .add(num.div(den))
        .cscale(Complex64::new(-2.0, 0.0));
    let rho_i = j2.add(
        bk.cscale(Complex64::new(2.0, 0.0))
            .div(a_big.mul(i))
            .mul(j1.sub(b_big.mul(bk).cscale(Complex64::new(4.0, 0.0)))),
    );
    Ok([rho_a, rho_b, rho_k, rho_i])
}

/// The total-derivative term g = B K^2 / A whose flow derivative the
/// Lagrangian drops.
fn total_derivative_g<T: Scalar>(v: &[T]) -> Result<T> {
    let (bk, _) = ke_generic(v[2])?;
    Ok(v[1].mul(bk).mul(bk).div(v[0]))
}

fn rho_at(v: &[Complex64]) -> Result<[Complex64; 4]> {
    rho_generic(v)
}

/// d rho_k / d X^j matrix via dual passes.
fn rho_jacobian(v: &[Complex64]) -> Result<Mat4> {
    let mut m = zero4();
    for j in 0..4 {
        let seeded: Vec<Dual> = v
            .iter()
            .enumerate()
            .map(|(idx, &c)| Dual {
                v: c,
                d: if idx == j {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                },
            })
            .collect();
        let out = rho_generic(&seeded)?;
        for i in 0..4 {
            m[i][j] = out[i].d;
        }
    }
    Ok(m)
}

fn j1_sq_gradient(v: &[Complex64]) -> Result<[Complex64; 4]> {
    let mut g = [Complex64::new(0.0, 0.0); 4];
    for j in 0..4 {
        let seeded: Vec<Dual> = v
            .iter()
            .enumerate()
            .map(|(idx, &c)| Dual {
                v: c,
                d: if idx == j {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                },
            })
            .collect();
        let (j1, _) = crate::conserved::intermediate_transcendental_generic(&seeded)?;
        g[j] = j1.mul(j1).d;
    }
    Ok(g)
}

/// Discrete Euler-Lagrange residual of the mixed-variable Lagrangian on a
/// uniform grid of `n` points Hermite-resampled from a canonical trajectory.
/// Returns the max residual over interior points and coordinates, normalized
/// by the J1^2 scale.
#[derive(Debug, Clone)]
pub struct LagrangianReport {
    pub el_residual: f64,
    /// same residual with the total-derivative term included (must match)
    pub el_with_total_derivative: f64,
    /// |L + 8 dg/dtau| / |J1^2| on the grid: the on-shell value identity
    /// (L reduces to -J1^2 modulo exact total derivatives)
    pub onshell_value: f64,
}

/// Hermite resampling of a canonical trajectory onto a uniform sigma grid,
/// then transformed pointwise to (A, B, k, I) with sign continuity.
fn resample_to_intermediate(
    traj: &Trajectory,
    n: usize,
) -> Result<(f64, Vec<Vec<Complex64>>)> {
    if traj.samples.len() < 4 {
        return Err(Error::Resampling("trajectory too short".into()));
    }
    let t0 = traj.segment.t0;
    let dt = traj.segment.t1 - traj.segment.t0;
    let total = dt.norm();
    let step = total / (n as f64 - 1.0);
    let mut out = Vec::with_capacity(n);
    let mut prev: Option<Vec<Complex64>> = None;
    for g in 0..n {
        let sigma = g as f64 / (n as f64 - 1.0);
        // locate the bracketing samples
        let mut idx = 0;
        while idx + 2 < traj.samples.len()
            && (traj.samples[idx + 1].t - t0).norm() < sigma * total
        {
            idx += 1;
        }
        let s0 = &traj.samples[idx];
        let s1 = &traj.samples[idx + 1];
        let h01 = s1.t - s0.t;
        let local = if h01.norm() < 1e-300 {
            0.0
        } else {
            ((t0 + dt * sigma - s0.t) / h01).re
        };
        // cubic Hermite with field values as slopes
        let f0 = vector_field(&traj.state_at(idx))?;
        let f1 = vector_field(&traj.state_at(idx + 1))?;
        let t2 = local * local;
        let t3 = t2 * local;
        let (h00, h10, h01c, h11) = (
            2.0 * t3 - 3.0 * t2 + 1.0,
            t3 - 2.0 * t2 + local,
            -2.0 * t3 + 3.0 * t2,
            t3 - t2,
        );
        let state: Vec<Complex64> = (0..4)
            .map(|i| {
                h00 * s0.state[i]
                    + h10 * h01 * f0[i]
                    + h01c * s1.state[i]
                    + h11 * h01 * f1[i]
            })
            .collect();
        let cs = SystemState::new(SystemId::Canonical, state)?;
        let mut opts = TransformOpts::default();
        let mut inter = transform_state(&cs, SystemId::Intermediate, &opts)?;
        if let Some(p) = &prev {
            // keep A and k branches continuous
            if (inter.v[0] + p[0]).norm() < (inter.v[0] - p[0]).norm() {
                opts.sign_i = -opts.sign_i;
                inter = transform_state(&cs, SystemId::Intermediate, &opts)?;
            }
            if (inter.v[2] + p[2]).norm() < (inter.v[2] - p[2]).norm() {
                opts.sign_k = -opts.sign_k;
                inter = transform_state(&cs, SystemId::Intermediate, &opts)?;
            }
        }
        prev = Some(inter.v.clone());
        out.push(inter.v);
    }
    Ok((step, out))
}

pub fn lagrangian_residual(traj: &Trajectory, n: usize) -> Result<LagrangianReport> {
    let (step, grid) = resample_to_intermediate(traj, n)?;
    // direction of the time step in the complex plane
    let dt = traj.segment.t1 - traj.segment.t0;
    let dir = dt / dt.norm();
    let hstep = step * dir.norm(); // real magnitude; complex direction folded below
    let cstep = dir * step;

    let mut worst = 0.0f64;
    let mut worst_td = 0.0f64;
    let mut onshell = 0.0f64;
    let mut scale = 0.0f64;
    let _ = hstep;
    for g in 1..n - 1 {
        let vm = &grid[g - 1];
        let v0 = &grid[g];
        let vp = &grid[g + 1];
        let rho_m = rho_at(vm)?;
        let rho_0 = rho_at(v0)?;
        let rho_p = rho_at(vp)?;
        let drho: Vec<Complex64> = (0..4).map(|i| (rho_p[i] - rho_m[i]) / (2.0 * cstep)).collect();
        let xdot: Vec<Complex64> = (0..4).map(|i| (vp[i] - vm[i]) / (2.0 * cstep)).collect();
        let jrho = rho_jacobian(v0)?;
        let gj1sq = j1_sq_gradient(v0)?;
        let (j1, _) = crate::conserved::intermediate_transcendental(v0)?;
        scale = j1.norm_sqr().max(scale);
        for coord in 0..4 {
            // d/dt rho_coord - sum_k d rho_k/d X^coord Xdot^k + d(J1^2)/dX^coord
            let mut el = drho[coord] + gj1sq[coord];
            for k in 0..4 {
                el -= jrho[k][coord] * xdot[k];
            }
            worst = worst.max(el.norm());
        }
        // the total-derivative term drops from the Euler-Lagrange operator
        // because the Hessian of g is symmetric; its whole contribution is
        // -8 (H - H^T) xdot, measured here
        {
            let hess_at = |hh: f64| -> Result<Mat4> {
                let mut hess = zero4();
                for j in 0..4 {
                    let mut vp2 = v0.clone();
                    let mut vm2 = v0.clone();
                    vp2[j] += Complex64::new(hh, 0.0);
                    vm2[j] -= Complex64::new(hh, 0.0);
                    let gp2 = grad_g(&vp2)?;
                    let gm2 = grad_g(&vm2)?;
                    for i in 0..4 {
                        hess[j][i] = (gp2[i] - gm2[i]) / (2.0 * hh);
                    }
                }
                Ok(hess)
            };
            let h1 = hess_at(1e-4)?;
            let h2 = hess_at(5e-5)?;
            let mut hess = zero4();
            for i in 0..4 {
                for j in 0..4 {
                    hess[i][j] = (4.0 * h2[i][j] - h1[i][j]) / 3.0;
                }
            }
            for i in 0..4 {
                let mut acc = Complex64::new(0.0, 0.0);
                for j in 0..4 {
                    acc += (hess[i][j] - hess[j][i]) * xdot[j];
                }
                worst_td = worst_td.max(8.0 * acc.norm());
            }
        }
        // on-shell value with exact flow velocities: L = -8 dg/dtau, which
        // is the statement that L reduces to -J1^2 modulo exact total
        // derivatives (J1^2 Ndot and J2 Idot being total derivatives too)
        let vstate = SystemState::new(SystemId::Intermediate, v0.clone())?;
        let vflow = vector_field(&vstate)?;
        let mut lval = -j1 * j1;
        for i in 0..4 {
            lval += rho_0[i] * vflow[i];
        }
        let g0 = grad_g(v0)?;
        let dg: Complex64 = g0.iter().zip(vflow.iter()).map(|(a, b)| a * b).sum();
        onshell = onshell.max((lval + 8.0 * dg).norm());
    }
    let scale = scale.max(1e-30);
    Ok(LagrangianReport {
        el_residual: worst / scale,
        el_with_total_derivative: worst_td / scale,
        onshell_value: onshell / scale,
    })
}

fn grad_g(v: &[Complex64]) -> Result<[Complex64; 4]> {
    let mut g = [Complex64::new(0.0, 0.0); 4];
    for j in 0..4 {
        let seeded: Vec<Dual> = v
            .iter()
            .enumerate()
            .map(|(idx, &c)| Dual {
                v: c,
                d: if idx == j {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                },
            })
            .collect();
        g[j] = total_derivative_g(&seeded)?.d;
    }
    Ok(g)
}

/// Pushforward of the pencil to Jacobi coordinates: TO T^T with T the
/// analytic Jacobian of the canonical-to-Jacobi point map.
#[derive(Debug, Clone)]
pub struct PushforwardReport {
    pub antisymmetry: f64,
    /// relative residual of Y-dot = Omega-tilde grad_Y H against the Jacobi
    /// field at the image point
    pub field_rel: f64,
    /// relative residual of det(T Omega T^T) = det Omega (det T)^2
    pub det_rel: f64,
}

pub fn pushforward_bracket(
    s: &SystemState,
    lambda: Complex64,
) -> Result<(BracketMatrix, PushforwardReport)> {
    let opts = TransformOpts::default();
    let t = transform_jacobian(s, SystemId::Jacobi, &opts)?;
    let b = bracket(s, BracketKind::Pencil(lambda))?;
    let mut raw = zero4();
    for i in 0..4 {
        for j in 0..4 {
            let mut acc = Complex64::new(0.0, 0.0);
            for p in 0..4 {
                for q in 0..4 {
                    acc += t[i][p] * b.m[p][q] * t[j][q];
                }
            }
            raw[i][j] = acc;
        }
    }
    // congruence of an antisymmetric matrix is antisymmetric; enforce it
    // exactly and report the rounding defect of the raw product
    let scale = raw.iter().flatten().map(|c| c.norm()).fold(0.0, f64::max);
    let mut anti = 0.0f64;
    let mut out = zero4();
    for i in 0..4 {
        for j in i + 1..4 {
            anti = anti.max((raw[i][j] + raw[j][i]).norm() / scale.max(1e-30));
            let v = (raw[i][j] - raw[j][i]) * 0.5;
            out[i][j] = v;
            out[j][i] = -v;
        }
    }

    // gradient of H = (pi/(24 i)) I_jac in Jacobi coordinates, with the
    // branch of I_jac = 12 i I_can^2 inherited from the source state
    let (x, y, z) = (s.v[0], s.v[1], s.v[2]);
    let i_jac = 12.0 * I * (y * y - z * z) / (PI * x * x);
    let img = transform_state(s, SystemId::Jacobi, &opts)?;
    let gh = [
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, 0.0),
        PI / (24.0 * I) * img.v[2] / i_jac,
        PI / (24.0 * I) * 16.0 / i_jac,
    ];
    let want = vector_field(&img)?;
    let got = mv4(&out, &gh);
    let vscale = want.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut field_rel = 0.0f64;
    for i in 0..4 {
        field_rel = field_rel.max((got[i] - want[i]).norm() / vscale.max(1e-30));
    }

    let det_src = det_antisym(&b.m);
    let det_t = linalg::det(&t);
    let det_out = det_antisym(&out);
    let det_want = det_src * det_t * det_t;
    let det_rel = (det_out - det_want).norm() / det_want.norm().max(1e-30);

    Ok((
        BracketMatrix {
            kind: BracketKind::Pencil(lambda),
            m: out,
        },
        PushforwardReport {
            antisymmetry: anti,
            field_rel,
            det_rel,
        },
    ))
}

/// Scaling-symmetry report: the polynomial identity G(a^2+32b) = -4(a^2+32b),
/// vanishing commutators of the generator with both fields, and the e^{2s} x
/// substitution law for the canonical integral.
#[derive(Debug, Clone)]
pub struct ScalingReport {
    pub polynomial_identity: f64,
    pub commutator_canonical: f64,
    pub commutator_jacobi: f64,
    pub integral_rescaling: f64,
}

pub fn scaling_symmetry_check(
    canonical: &SystemState,
    jacobi: &SystemState,
) -> Result<ScalingReport> {
    // G = A d_A - B d_B - 2a d_a - 4b d_b applied to I^2 = a^2 + 32 b:
    // directional derivative along (A, -B, -2a, -4b)
    let (a, b) = (jacobi.v[2], jacobi.v[3]);
    let gi2 = 2.0 * a * (-2.0 * a) + 32.0 * (-4.0 * b);
    let i2 = a * a + 32.0 * b;
    let poly = (gi2 + 4.0 * i2).norm() / i2.norm().max(1e-30);

    // commutator [G, V] with G linear: W_V G - G_lin V
    let comm = |s: &SystemState, gdiag: &[Complex64]| -> Result<f64> {
        let w = jacobian(s)?;
        let v = vector_field(s)?;
        let gvec: Vec<Complex64> = s.v.iter().zip(gdiag).map(|(x, d)| x * d).collect();
        let mut worst = 0.0f64;
        let scale = v.iter().map(|c| c.norm()).fold(0.0, f64::max);
        for i in 0..s.v.len() {
            let mut acc = Complex64::new(0.0, 0.0);
            for l in 0..s.v.len() {
                acc += w[i][l] * gvec[l];
            }
            acc -= gdiag[i] * v[i];
            worst = worst.max(acc.norm() / scale.max(1e-30));
        }
        Ok(worst)
    };
    let two = Complex64::new(2.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let comm_c = comm(canonical, &[two, zero, zero, zero])?;
    let comm_j = comm(
        jacobi,
        &[
            Complex64::new(1.0, 0.0),
            Complex64::new(-1.0, 0.0),
            Complex64::new(-2.0, 0.0),
            Complex64::new(-4.0, 0.0),
        ],
    )?;

    // x -> e^{2s} x leaves (y,z,u) on the same solution and rescales the
    // canonical integral by e^{-4s}
    let sfac = 0.37f64;
    let mut scaled = canonical.v.clone();
    scaled[0] *= (2.0 * sfac).exp();
    let i_orig = (canonical.v[1] * canonical.v[1] - canonical.v[2] * canonical.v[2])
        / (canonical.v[0] * canonical.v[0]);
    let i_new = (scaled[1] * scaled[1] - scaled[2] * scaled[2]) / (scaled[0] * scaled[0]);
    let rescale = (i_new - i_orig * (-4.0 * sfac).exp()).norm() / i_orig.norm().max(1e-30);

    Ok(ScalingReport {
        polynomial_identity: poly,
        commutator_canonical: comm_c,
        commutator_jacobi: comm_j,
        integral_rescaling: rescale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qseries::{canonical_closed_form, BranchSign, Moebius};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn moebius() -> Moebius {
        Moebius::new(c(1.0, 0.0), c(0.3, 0.0), c(0.2, 0.0), c(1.0, 0.0)).unwrap()
    }

    fn theta_state(tau: Complex64) -> SystemState {
        let v = canonical_closed_form(tau, &moebius(), c(0.7, 0.1), BranchSign::Plus).unwrap();
        SystemState::new(SystemId::Canonical, v.to_vec()).unwrap()
    }

    #[test]
    fn omega_grad_h_is_the_field_at_worked_example() {
        let s = SystemState::new(
            SystemId::Canonical,
            vec![c(1.0, 0.0), c(2.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)],
        )
        .unwrap();
        let w = omega(&s).unwrap();
        let gh = Observable::Hamiltonian.gradient(&s.v).unwrap();
        let got = mv4(&w.m, &gh);
        let want = [c(5.0, 0.0), c(4.0, 0.0), c(-7.0, 0.0), c(-13.0, 0.0)];
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).norm() < 1e-12, "{g} vs {w}");
        }
        let v = vector_field(&s).unwrap();
        for (g, f) in got.iter().zip(v.iter()) {
            assert!((g - f).norm() < 1e-12);
        }
    }

    #[test]
    fn omega_grad_h_equals_field_at_random_states() {
        for tau in [c(0.1, 1.1), c(-0.2, 0.9), c(0.3, 1.4)] {
            let s = theta_state(tau);
            let w = omega(&s).unwrap();
            let gh = Observable::Hamiltonian.gradient(&s.v).unwrap();
            let got = mv4(&w.m, &gh);
            let v = vector_field(&s).unwrap();
            let scale = v.iter().map(|x| x.norm()).fold(0.0, f64::max);
            for (g, f) in got.iter().zip(v.iter()) {
                assert!((g - f).norm() / scale < 1e-12);
            }
        }
    }

    #[test]
    fn brackets_antisymmetric_and_pencil_at_zero() {
        let s = theta_state(c(0.1, 1.1));
        for kind in [
            BracketKind::Omega,
            BracketKind::OmegaTilde,
            BracketKind::Pencil(c(2.0, 1.0)),
        ] {
            let b = bracket(&s, kind).unwrap();
            for i in 0..4 {
                for j in 0..4 {
                    assert!((b.m[i][j] + b.m[j][i]).norm() == 0.0);
                }
            }
        }
        let w = omega(&s).unwrap();
        let p0 = bracket(&s, BracketKind::Pencil(c(0.0, 0.0))).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert!((w.m[i][j] - p0.m[i][j]).norm() == 0.0);
            }
        }
    }

    #[test]
    fn commutation_relations() {
        let s = theta_state(c(0.12, 1.05));
        let lambda = c(1.3, -0.4);
        let b = bracket(&s, BracketKind::Pencil(lambda)).unwrap();
        let h = Observable::Hamiltonian;
        let j1 = Observable::J1;
        let j2 = Observable::J2;
        let hj1 = poisson_bracket(&h, &j1, &b, &s).unwrap();
        let hj2 = poisson_bracket(&h, &j2, &b, &s).unwrap();
        assert!(hj1.norm() < 1e-9, "{{H,J1}} = {hj1}");
        assert!(hj2.norm() < 1e-9, "{{H,J2}} = {hj2}");
        let inv = Observable::InvLambdaJ1(lambda);
        let canon = poisson_bracket(&j2, &inv, &b, &s).unwrap();
        assert!((canon - c(1.0, 0.0)).norm() < 1e-8, "{{J2,(lJ1)^-1}} = {canon}");
        // {f, f} = 0 exactly by antisymmetry
        let ff = poisson_bracket(&j1, &j1, &b, &s).unwrap();
        assert!(ff.norm() < 1e-12);
    }

    #[test]
    fn casimirs_and_determinants() {
        for tau in [c(0.1, 1.1), c(0.25, 0.85)] {
            let s = theta_state(tau);
            let rep = casimir_and_det_check(&s, c(1.0, 0.0)).unwrap();
            assert!(rep.omega_j1 < 1e-9, "{rep:?}");
            assert!(rep.omega_j2 < 1e-9, "{rep:?}");
            assert!(rep.tilde_h < 1e-9, "{rep:?}");
            assert!(rep.tilde_n < 1e-9, "{rep:?}");
            assert!(rep.det_omega < 1e-12, "{rep:?}");
            assert!(rep.det_pencil_rel < 1e-9, "{rep:?}");
            let rep2 = casimir_and_det_check(&s, c(2.0, 1.0)).unwrap();
            assert!(rep2.det_pencil_rel < 1e-9, "{rep2:?}");
        }
    }

    #[test]
    fn jacobi_identity_residuals() {
        let s = theta_state(c(0.1, 1.1));
        for kind in [
            BracketKind::Omega,
            BracketKind::OmegaTilde,
            BracketKind::Pencil(c(1.0, 0.0)),
            BracketKind::Pencil(c(-1.0, 0.0)),
            BracketKind::Pencil(c(2.0, 1.0)),
        ] {
            let r = jacobi_identity_residual(&s, kind).unwrap();
            assert!(r < 1e-5, "{kind:?}: {r}");
        }
    }

    #[test]
    fn nambu_reduction() {
        let s = theta_state(c(0.07, 1.02));
        let rep = nambu_reduce_check(&s, c(1.7, 0.2)).unwrap();
        assert!(rep.entrywise_rel < 1e-8, "{rep:?}");
        assert!(rep.four_bracket_rel < 1e-8, "{rep:?}");
        assert!(rep.swap_antisymmetry < 1e-12, "{rep:?}");
        // x -> 0 degeneration: the x^3 prefactor collapses the reduced
        // bracket at the same cubic rate as omega's x-row scaling
        let mut v = s.v.clone();
        v[0] *= 1e-3;
        let s2 = SystemState::new(SystemId::Canonical, v).unwrap();
        let rep2 = nambu_reduce_check(&s2, c(1.7, 0.2)).unwrap();
        assert!(rep2.entrywise_rel < 1e-8, "{rep2:?}");
    }

    #[test]
    fn obstruction_nullspace_zero_and_positive_control() {
        let states: Vec<SystemState> = (0..4)
            .flat_map(|i| {
                let tau = c(0.05 + 0.07 * i as f64, 0.9 + 0.1 * i as f64);
                let cs = theta_state(tau);
                let tq = crate::qseries::theta_quad(
                    crate::qseries::Tau::from_complex(tau).unwrap(),
                    0,
                )
                .unwrap();
                let sym = SystemState::new(
                    SystemId::SymmetricTheta,
                    vec![tq.t2(), tq.t3(), tq.t4(), tq.eta0()],
                )
                .unwrap();
                let jac = transform_state(&cs, SystemId::Jacobi, &TransformOpts::default())
                    .unwrap();
                [cs, sym, jac]
            })
            .collect();
        for sys in [SystemId::Canonical, SystemId::SymmetricTheta, SystemId::Jacobi] {
            let of_sys: Vec<SystemState> = states
                .iter()
                .filter(|s| s.system == sys)
                .cloned()
                .collect();
            // pad with scaled copies to reach 12 samples
            let mut pool = of_sys.clone();
            for k in 0..3 {
                for s in &of_sys {
                    let f = 1.0 + 0.31 * (k + 1) as f64;
                    let v: Vec<Complex64> = s.v.iter().map(|x| x * f).collect();
                    pool.push(SystemState::new(sys, v).unwrap());
                }
            }
            let (dim, smin) = constant_bracket_obstruction(&pool).unwrap();
            assert_eq!(dim, 0, "{sys:?}");
            assert!(smin > 1e-6, "{sys:?} smin = {smin}");
        }

        // fabricated positive control: W = J S with J symplectic, S symmetric
        let mut j0 = vec![vec![c(0.0, 0.0); 4]; 4];
        j0[0][2] = c(1.0, 0.0);
        j0[1][3] = c(1.0, 0.0);
        j0[2][0] = c(-1.0, 0.0);
        j0[3][1] = c(-1.0, 0.0);
        let mut svals = vec![vec![c(0.0, 0.0); 4]; 4];
        let seed = [0.7, -0.3, 0.4, 1.1, 0.2, -0.8, 0.5, 0.9, -0.6, 0.3];
        let mut it = seed.iter();
        for i in 0..4 {
            for j in i..4 {
                let v = c(*it.next().unwrap(), 0.0);
                svals[i][j] = v;
                svals[j][i] = v;
            }
        }
        let w: Vec<Vec<Complex64>> = (0..4)
            .map(|i| {
                (0..4)
                    .map(|j| (0..4).map(|l| j0[i][l] * svals[l][j]).sum())
                    .collect()
            })
            .collect();
        let (dim, _) = constant_bracket_nullspace(&[w.clone(), w.clone(), w]);
        assert!(dim >= 1, "positive control found no nullspace");
    }

    #[test]
    fn transport_statement_sign_wins() {
        use crate::integrate::{integrate, IntOpts, PathSegment};
        let t0 = c(0.05, 1.0);
        let init = theta_state(t0);
        let tr = integrate(
            &init,
            PathSegment {
                t0,
                t1: t0 + c(0.3, 0.05),
            },
            &IntOpts {
                rtol: 1e-10,
                ..Default::default()
            },
        )
        .unwrap();
        let rep = bracket_transport_residual(&tr, BracketKind::Omega, 1e-8).unwrap();
        assert!(rep.statement < 1e-6, "{rep:?}");
        assert!(rep.proof_sign > 1e-2, "{rep:?}");
        // step-linear convergence of the forward-difference residual
        let r4 = bracket_transport_residual(&tr, BracketKind::Omega, 1e-4)
            .unwrap()
            .statement;
        let r5 = bracket_transport_residual(&tr, BracketKind::Omega, 1e-5)
            .unwrap()
            .statement;
        let r6 = bracket_transport_residual(&tr, BracketKind::Omega, 1e-6)
            .unwrap()
            .statement;
        assert!(r4 / r5 > 5.0 && r4 / r5 < 20.0, "{r4} {r5}");
        assert!(r5 / r6 > 5.0 && r5 / r6 < 20.0, "{r5} {r6}");
        // constant bracket with W = 0: both conventions vanish; covered by
        // the degenerate check below
        let w0 = vec![vec![c(0.0, 0.0); 4]; 4];
        let (dim, _) = constant_bracket_nullspace(&[w0]);
        assert_eq!(dim, 6); // every constant bracket transports trivially
    }

    #[test]
    fn lagrangian_el_second_order_and_invariances() {
        use crate::integrate::{integrate, IntOpts, PathSegment};
        let t0 = c(0.02, 1.0);
        let init = theta_state(t0);
        let tr = integrate(
            &init,
            PathSegment {
                t0,
                t1: t0 + c(0.22, 0.04),
            },
            &IntOpts {
                rtol: 1e-11,
                max_step: 1.0 / 400.0,
                ..Default::default()
            },
        )
        .unwrap();
        let coarse = lagrangian_residual(&tr, 41).unwrap();
        let fine = lagrangian_residual(&tr, 81).unwrap();
        assert!(
            coarse.el_residual / fine.el_residual > 3.5,
            "convergence factor {} ({} -> {})",
            coarse.el_residual / fine.el_residual,
            coarse.el_residual,
            fine.el_residual
        );
        // adding the total-derivative term leaves the EL residual unchanged
        assert!(fine.el_with_total_derivative < 1e-8, "{fine:?}");
        // on-shell value identity: L reduces to -J1^2 modulo the exact
        // total derivative
        assert!(fine.onshell_value < 1e-7, "{fine:?}");
    }

    #[test]
    fn pushforward_bracket_report() {
        let s = theta_state(c(0.09, 1.08));
        let (_, rep) = pushforward_bracket(&s, c(1.0, 0.0)).unwrap();
        assert!(rep.antisymmetry < 1e-11, "{rep:?}");
        assert!(rep.field_rel < 1e-8, "{rep:?}");
        assert!(rep.det_rel < 1e-9, "{rep:?}");
    }

    #[test]
    fn scaling_symmetry_rows() {
        let cs = theta_state(c(0.1, 1.1));
        let js = transform_state(&cs, SystemId::Jacobi, &TransformOpts::default()).unwrap();
        let rep = scaling_symmetry_check(&cs, &js).unwrap();
        assert!(rep.polynomial_identity < 1e-13, "{rep:?}");
        assert!(rep.commutator_canonical < 1e-12, "{rep:?}");
        assert!(rep.commutator_jacobi < 1e-12, "{rep:?}");
        assert!(rep.integral_rescaling < 1e-12, "{rep:?}");
    }

    #[test]
    fn custom_observable_fd_gradient_matches_analytic() {
        let s = theta_state(c(0.1, 1.1));
        let custom = Observable::Custom(
            "H_custom",
            std::rc::Rc::new(|v: &[Complex64]| {
                Ok((v[1] * v[1] - v[2] * v[2]) / (2.0 * v[0] * v[0]))
            }),
        );
        let g_fd = custom.gradient(&s.v).unwrap();
        let g_an = Observable::Hamiltonian.gradient(&s.v).unwrap();
        for (a, b) in g_fd.iter().zip(g_an.iter()) {
            assert!((a - b).norm() / b.norm().max(1.0) < 1e-6);
        }
    }
}
