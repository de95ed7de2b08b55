//! `check`: verification suites over seeded random fixtures. Output is a
//! JSON array of {check, residual, threshold, pass} rows (or CSV), with a
//! one-line summary on standard error. Exit code 5 when any row fails.

use clap::Args;
use num_complex::Complex64;
use rayon::prelude::*;
use theta_flows::conserved::{
    self, identity_report, invariant_drift, ode_residual_report, weierstrass_normalization_scan, CheckRow,
    WeierstrassIntParams,
};
use theta_flows::flows::{
    pushforward_field, transform_state, vector_field, SystemId, SystemState, TransformOpts,
};
use theta_flows::integrate::{integrate, IntOpts, PathSegment};
use theta_flows::poisson::{
    bracket_transport_residual, casimir_and_det_check, constant_bracket_nullspace,
    constant_bracket_obstruction, jacobi_identity_residual, lagrangian_residual,
    nambu_reduce_check, poisson_bracket, pushforward_bracket, scaling_symmetry_check,
    BracketKind, Observable,
};
use theta_flows::qseries::{I, PI};
use theta_flows::sampling::{Sampler, TauRegion};
use theta_flows::{Error, Result};

use crate::util::write_output;
use crate::{Cli, EXIT_CHECK_FAILED, EXIT_OK, EXIT_PARSE};

#[derive(Args, Debug)]
pub struct CheckArgs {
    /// Suite: identities, brackets, obstruction, transport, lagrangian,
    /// nambu, ramamani, chazy, weierstrass_scan, drift, all.
    pub suite: String,
    /// Number of random fixtures for the sampled suites.
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
}

fn region(cli: &Cli) -> TauRegion {
    TauRegion {
        re_min: cli.re_min,
        re_max: cli.re_max,
        im_min: cli.im_min,
        im_max: cli.im_max,
    }
}

fn aggregate(rows_per_fixture: Vec<Vec<CheckRow>>) -> Vec<CheckRow> {
    let mut agg: Vec<CheckRow> = Vec::new();
    for rows in rows_per_fixture {
        for row in rows {
            match agg.iter_mut().find(|r| r.check == row.check) {
                Some(existing) => {
                    if row.residual.is_nan() || row.residual > existing.residual {
                        existing.residual = row.residual;
                    }
                    existing.pass = existing.pass && row.pass;
                    if existing.error.is_none() {
                        existing.error = row.error;
                    }
                }
                None => agg.push(row),
            }
        }
    }
    agg
}

pub fn suite_identities(cli: &Cli, samples: usize) -> Vec<CheckRow> {
    let mut sampler = Sampler::new(cli.seed, region(cli));
    let taus: Vec<Complex64> = (0..samples).map(|_| sampler.tau()).collect();
    let per: Vec<Vec<CheckRow>> = taus
        .par_iter()
        .map(|t| identity_report(t.re, t.im))
        .collect();
    aggregate(per)
}

fn fixture_states(cli: &Cli, n: usize) -> Vec<SystemState> {
    let mut sampler = Sampler::new(cli.seed, region(cli));
    (0..n)
        .map(|_| sampler.canonical_state().expect("sampler yields states"))
        .collect()
}

pub fn suite_brackets(cli: &Cli, samples: usize) -> Vec<CheckRow> {
    let states = fixture_states(cli, samples.clamp(4, 24));
    let lam1 = Complex64::new(1.0, 0.0);
    let lam2 = Complex64::new(2.0, 1.0);
    let per: Vec<Vec<CheckRow>> = states
        .par_iter()
        .map(|s| -> Vec<CheckRow> {
            let mut rows = Vec::new();
            let run = |name: &str, thr: f64, r: Result<f64>| match r {
                Ok(v) => CheckRow::ok(name, v, thr),
                Err(e) => CheckRow::err(name, thr, &e),
            };
            // omega grad H = field
            rows.push(run("omega_grad_h_equals_field", 1e-12, (|| {
                let w = theta_flows::poisson::omega(s)?;
                let gh = Observable::Hamiltonian.gradient(&s.v)?;
                let v = vector_field(s)?;
                let scale = v.iter().map(|c| c.norm()).fold(0.0, f64::max);
                let mut worst = 0.0f64;
                for i in 0..4 {
                    let got: Complex64 = (0..4).map(|j| w.m[i][j] * gh[j]).sum();
                    worst = worst.max((got - v[i]).norm() / scale);
                }
                Ok(worst)
            })()));
            match casimir_and_det_check(s, lam1) {
                Ok(rep) => {
                    rows.push(CheckRow::ok("casimir_omega_j1", rep.omega_j1, 1e-9));
                    rows.push(CheckRow::ok("casimir_omega_j2", rep.omega_j2, 1e-9));
                    rows.push(CheckRow::ok("casimir_tilde_h", rep.tilde_h, 1e-9));
                    rows.push(CheckRow::ok("casimir_tilde_n", rep.tilde_n, 1e-9));
                    rows.push(CheckRow::ok("det_omega_zero", rep.det_omega, 1e-12));
                    // near the J1 = 0 surface the Pfaffian cancellation
                    // amplifies rounding; gate the fixed tolerance on the
                    // reported conditioning
                    let thr = if rep.det_conditioning < 100.0 {
                        1e-9
                    } else {
                        rep.det_conditioning * 1e-11
                    };
                    rows.push(CheckRow::ok("det_pencil_closed_form_lambda1", rep.det_pencil_rel, thr));
                }
                Err(e) => rows.push(CheckRow::err("casimir_block", 1e-9, &e)),
            }
            match casimir_and_det_check(s, lam2) {
                Ok(rep) => {
                    let thr = if rep.det_conditioning < 100.0 {
                        1e-9
                    } else {
                        rep.det_conditioning * 1e-11
                    };
                    rows.push(CheckRow::ok(
                        "det_pencil_closed_form_lambda_complex",
                        rep.det_pencil_rel,
                        thr,
                    ))
                }
                Err(e) => rows.push(CheckRow::err("det_pencil_closed_form_lambda_complex", 1e-9, &e)),
            }
            for (name, kind) in [
                ("jacobi_identity_omega", BracketKind::Omega),
                ("jacobi_identity_tilde", BracketKind::OmegaTilde),
                ("jacobi_identity_pencil_p1", BracketKind::Pencil(lam1)),
                (
                    "jacobi_identity_pencil_m1",
                    BracketKind::Pencil(Complex64::new(-1.0, 0.0)),
                ),
                ("jacobi_identity_pencil_c", BracketKind::Pencil(lam2)),
            ] {
                rows.push(run(name, 1e-5, jacobi_identity_residual(s, kind)));
            }
            match nambu_reduce_check(s, lam1) {
                Ok(rep) => {
                    rows.push(CheckRow::ok("nambu_entrywise", rep.entrywise_rel, 1e-8));
                    rows.push(CheckRow::ok("nambu_four_bracket", rep.four_bracket_rel, 1e-8));
                    rows.push(CheckRow::ok("nambu_swap_sign", rep.swap_antisymmetry, 1e-12));
                }
                Err(e) => rows.push(CheckRow::err("nambu_block", 1e-8, &e)),
            }
            rows.push(run("commutation_h_j1", 1e-9, (|| {
                let b = theta_flows::poisson::bracket(s, BracketKind::Pencil(lam1))?;
                Ok(poisson_bracket(&Observable::Hamiltonian, &Observable::J1, &b, s)?.norm())
            })()));
            rows.push(run("commutation_h_j2", 1e-9, (|| {
                let b = theta_flows::poisson::bracket(s, BracketKind::Pencil(lam1))?;
                Ok(poisson_bracket(&Observable::Hamiltonian, &Observable::J2, &b, s)?.norm())
            })()));
            rows.push(run("commutation_canonical_pair", 1e-8, (|| {
                let b = theta_flows::poisson::bracket(s, BracketKind::Pencil(lam1))?;
                let v = poisson_bracket(
                    &Observable::J2,
                    &Observable::InvLambdaJ1(lam1),
                    &b,
                    s,
                )?;
                Ok((v - Complex64::new(1.0, 0.0)).norm())
            })()));
            match pushforward_bracket(s, lam1) {
                Ok((_, rep)) => {
                    rows.push(CheckRow::ok("pushforward_antisymmetry", rep.antisymmetry, 1e-11));
                    rows.push(CheckRow::ok("pushforward_jacobi_field", rep.field_rel, 1e-8));
                    rows.push(CheckRow::ok("pushforward_det_congruence", rep.det_rel, 1e-9));
                }
                Err(e) => rows.push(CheckRow::err("pushforward_block", 1e-8, &e)),
            }
            match transform_state(s, SystemId::Jacobi, &TransformOpts::default())
                .and_then(|js| scaling_symmetry_check(s, &js))
            {
                Ok(rep) => {
                    rows.push(CheckRow::ok(
                        "scaling_polynomial_identity",
                        rep.polynomial_identity,
                        1e-13,
                    ));
                    rows.push(CheckRow::ok(
                        "scaling_commutator_canonical",
                        rep.commutator_canonical,
                        1e-8,
                    ));
                    rows.push(CheckRow::ok(
                        "scaling_commutator_jacobi",
                        rep.commutator_jacobi,
                        1e-8,
                    ));
                    rows.push(CheckRow::ok(
                        "scaling_integral_rescaling",
                        rep.integral_rescaling,
                        1e-12,
                    ));
                }
                Err(e) => rows.push(CheckRow::err("scaling_block", 1e-8, &e)),
            }
            rows
        })
        .collect();
    aggregate(per)
}

pub fn suite_obstruction(cli: &Cli) -> Vec<CheckRow> {
    let states = fixture_states(cli, 12);
    let mut rows = Vec::new();
    for sys in [SystemId::Canonical, SystemId::SymmetricTheta, SystemId::Jacobi] {
        let mapped: Result<Vec<SystemState>> = states
            .iter()
            .map(|s| match sys {
                SystemId::Canonical => Ok(s.clone()),
                SystemId::Jacobi => transform_state(s, SystemId::Jacobi, &TransformOpts::default()),
                SystemId::SymmetricTheta => {
                    // theta-like symmetric state from the canonical one:
                    // invert the square normalization componentwise
                    let r = theta_flows::qseries::sqrt_pi_i_6();
                    let t2 = (s.v[0] / r).sqrt();
                    let t3 = (s.v[1] / r).sqrt();
                    let t4 = (s.v[2] / r).sqrt();
                    let eta = s.v[3] * PI / (2.0 * I);
                    SystemState::new(SystemId::SymmetricTheta, vec![t2, t3, t4, eta])
                }
                _ => unreachable!(),
            })
            .collect();
        match mapped.and_then(|m| constant_bracket_obstruction(&m)) {
            Ok((dim, smin)) => {
                rows.push(CheckRow {
                    check: format!("obstruction_nullspace_dim_{}", sys.name()),
                    residual: dim as f64,
                    threshold: 0.5,
                    pass: dim == 0,
                    error: None,
                });
                rows.push(CheckRow {
                    check: format!("obstruction_smin_{}", sys.name()),
                    residual: smin,
                    threshold: 1e-6,
                    pass: smin > 1e-6,
                    error: None,
                });
            }
            Err(e) => rows.push(CheckRow::err(
                &format!("obstruction_{}", sys.name()),
                1e-6,
                &e,
            )),
        }
    }
    // fabricated positive control: a linear field with a symplectic-
    // compatible constant bracket must produce nullspace dimension >= 1
    let c = |re: f64| Complex64::new(re, 0.0);
    let mut j0 = vec![vec![c(0.0); 4]; 4];
    j0[0][2] = c(1.0);
    j0[1][3] = c(1.0);
    j0[2][0] = c(-1.0);
    j0[3][1] = c(-1.0);
    let seed = [0.7, -0.3, 0.4, 1.1, 0.2, -0.8, 0.5, 0.9, -0.6, 0.3];
    let mut svals = vec![vec![c(0.0); 4]; 4];
    let mut it = seed.iter();
    for i in 0..4 {
        for jj in i..4 {
            let v = c(*it.next().unwrap());
            svals[i][jj] = v;
            svals[jj][i] = v;
        }
    }
    let w: Vec<Vec<Complex64>> = (0..4)
        .map(|i| {
            (0..4)
                .map(|jj| (0..4).map(|l| j0[i][l] * svals[l][jj]).sum())
                .collect()
        })
        .collect();
    let (dim, _) = constant_bracket_nullspace(&[w.clone(), w.clone(), w]);
    rows.push(CheckRow {
        check: "obstruction_positive_control_dim".into(),
        residual: dim as f64,
        threshold: 0.5,
        pass: dim >= 1,
        error: None,
    });
    rows
}

fn fixture_trajectory(cli: &Cli, len: Complex64, max_step: f64) -> Result<theta_flows::integrate::Trajectory> {
    let mut sampler = Sampler::new(cli.seed, region(cli));
    let tau0 = loop {
        let t = sampler.tau();
        if t.im > 0.8 && t.im < 1.6 && t.re.abs() < 0.4 {
            break t;
        }
    };
    let m = sampler.moebius();
    let eps = Complex64::new(0.7, 0.1);
    let v = theta_flows::qseries::canonical_closed_form(
        tau0,
        &m,
        eps,
        theta_flows::qseries::BranchSign::Plus,
    )?;
    let init = SystemState::new(SystemId::Canonical, v.to_vec())?;
    integrate(
        &init,
        PathSegment {
            t0: tau0,
            t1: tau0 + len,
        },
        &IntOpts {
            rtol: 1e-11,
            atol: 1e-13,
            max_step,
        },
    )
}

pub fn suite_transport(cli: &Cli) -> Vec<CheckRow> {
    let mut rows = Vec::new();
    match fixture_trajectory(cli, Complex64::new(0.3, 0.05), 1.0 / 66.0) {
        Ok(tr) => {
            match bracket_transport_residual(&tr, BracketKind::Omega, 1e-8) {
                Ok(rep) => {
                    rows.push(CheckRow::ok("transport_statement_sign", rep.statement, 1e-6));
                    rows.push(CheckRow {
                        check: "transport_proof_sign_fails".into(),
                        residual: rep.proof_sign,
                        threshold: 1e-2,
                        pass: rep.proof_sign > 1e-2,
                        error: None,
                    });
                }
                Err(e) => rows.push(CheckRow::err("transport_omega", 1e-6, &e)),
            }
            // step-linear convergence of the forward-difference residual
            let scan: Result<Vec<f64>> = [1e-4, 1e-5, 1e-6]
                .iter()
                .map(|h| Ok(bracket_transport_residual(&tr, BracketKind::Omega, *h)?.statement))
                .collect();
            match scan {
                Ok(r) => {
                    let ok = r[0] / r[1] > 5.0 && r[0] / r[1] < 20.0 && r[1] / r[2] > 5.0
                        && r[1] / r[2] < 20.0;
                    rows.push(CheckRow {
                        check: "transport_step_linear_scaling".into(),
                        residual: r[0] / r[1],
                        threshold: 10.0,
                        pass: ok,
                        error: None,
                    });
                }
                Err(e) => rows.push(CheckRow::err("transport_step_scaling", 10.0, &e)),
            }
        }
        Err(e) => rows.push(CheckRow::err("transport_fixture", 1e-6, &e)),
    }
    rows
}

pub fn suite_lagrangian(cli: &Cli) -> Vec<CheckRow> {
    let mut rows = Vec::new();
    match fixture_trajectory(cli, Complex64::new(0.22, 0.04), 1.0 / 400.0) {
        Ok(tr) => {
            let coarse = lagrangian_residual(&tr, 41);
            let fine = lagrangian_residual(&tr, 81);
            match (coarse, fine) {
                (Ok(c0), Ok(f0)) => {
                    rows.push(CheckRow::ok("lagrangian_el_residual_fine", f0.el_residual, 1e-2));
                    let factor = c0.el_residual / f0.el_residual.max(1e-300);
                    rows.push(CheckRow {
                        check: "lagrangian_el_second_order_factor".into(),
                        residual: factor,
                        threshold: 3.5,
                        pass: factor >= 3.5,
                        error: None,
                    });
                    rows.push(CheckRow::ok(
                        "lagrangian_total_derivative_drops",
                        f0.el_with_total_derivative,
                        1e-7,
                    ));
                    rows.push(CheckRow::ok(
                        "lagrangian_onshell_value",
                        f0.onshell_value,
                        1e-7,
                    ));
                }
                (Err(e), _) | (_, Err(e)) => {
                    rows.push(CheckRow::err("lagrangian_block", 1e-2, &e))
                }
            }
        }
        Err(e) => rows.push(CheckRow::err("lagrangian_fixture", 1e-2, &e)),
    }
    rows
}

pub fn suite_nambu(cli: &Cli, samples: usize) -> Vec<CheckRow> {
    let states = fixture_states(cli, samples.clamp(4, 20));
    let per: Vec<Vec<CheckRow>> = states
        .par_iter()
        .map(|s| match nambu_reduce_check(s, Complex64::new(1.0, 0.0)) {
            Ok(rep) => vec![
                CheckRow::ok("nambu_entrywise", rep.entrywise_rel, 1e-8),
                CheckRow::ok("nambu_four_bracket", rep.four_bracket_rel, 1e-8),
                CheckRow::ok("nambu_swap_sign", rep.swap_antisymmetry, 1e-12),
            ],
            Err(e) => vec![CheckRow::err("nambu_block", 1e-8, &e)],
        })
        .collect();
    aggregate(per)
}

pub fn suite_ramamani(cli: &Cli, samples: usize) -> Vec<CheckRow> {
    let states = fixture_states(cli, samples.clamp(4, 20));
    let opts = TransformOpts::default();
    let per: Vec<Vec<CheckRow>> = states
        .par_iter()
        .map(|s| -> Vec<CheckRow> {
            let mut rows = Vec::new();
            let block = || -> Result<Vec<CheckRow>> {
                let img = transform_state(s, SystemId::Ramamani, &opts)?;
                let push = pushforward_field(s, SystemId::Ramamani, &opts)?;
                let printed = vector_field(&img)?;
                let (p, q) = (img.v[0], img.v[2]);
                let scale = printed.iter().map(|c| c.norm()).fold(1e-30, f64::max);
                // measured discrepancies of the printed substitution against
                // the printed flow: the P row is off by pi i Q, the Pt row by
                // 2 pi i Q, and the Q row
                // exact (never patched; the corrected-sign rows follow)
                let d1 = push[0] - printed[0];
                let d2 = push[1] - printed[1];
                let d3 = push[2] - printed[2];
                let mut out = vec![
                    CheckRow::ok(
                        "ramamani_p_row_discrepancy_is_pi_i_q",
                        (d1 - PI * I * q).norm() / scale,
                        1e-9,
                    ),
                    CheckRow::ok(
                        "ramamani_pt_row_discrepancy_is_2pi_i_q",
                        (d2 - 2.0 * PI * I * q).norm() / scale,
                        1e-9,
                    ),
                    CheckRow::ok("ramamani_q_row_holds_as_written", d3.norm() / scale, 1e-9),
                ];
                let _ = p;
                // flipping the sign of the printed Q column makes all three
                // printed equations hold exactly
                let flipped = SystemState::new(
                    SystemId::Ramamani,
                    vec![img.v[0], img.v[1], -img.v[2]],
                )?;
                let printed_f = vector_field(&flipped)?;
                let push_f = [push[0], push[1], -push[2]];
                let mut worst = 0.0f64;
                for (a, b) in push_f.iter().zip(printed_f.iter()) {
                    worst = worst.max((a - b).norm() / scale);
                }
                out.push(CheckRow::ok("ramamani_flow_holds_with_q_sign_flipped", worst, 1e-9));
                Ok(out)
            };
            match block() {
                Ok(mut r) => rows.append(&mut r),
                Err(e) => rows.push(CheckRow::err("ramamani_block", 1e-9, &e)),
            }
            rows
        })
        .collect();
    let mut rows = aggregate(per);
    // drift of the composed integrals along the printed flow
    let drift_block = || -> Result<CheckRow> {
        let mut sampler = Sampler::new(cli.seed, region(cli));
        let s = sampler.canonical_state()?;
        let r0 = transform_state(&s, SystemId::Ramamani, &opts)?;
        let tr = integrate(
            &r0,
            PathSegment {
                t0: Complex64::new(0.0, 0.0),
                t1: Complex64::new(0.12, 0.04),
            },
            &IntOpts {
                rtol: 1e-11,
                atol: 1e-13,
                ..Default::default()
            },
        )?;
        let worst = invariant_drift(&tr)?
            .into_iter()
            .map(|(_, d)| d)
            .fold(0.0, f64::max);
        Ok(CheckRow::ok("ramamani_integrals_drift", worst, 1e-7))
    };
    match drift_block() {
        Ok(r) => rows.push(r),
        Err(e) => rows.push(CheckRow::err("ramamani_integrals_drift", 1e-7, &e)),
    }
    rows
}

pub fn suite_chazy(cli: &Cli, samples: usize) -> Vec<CheckRow> {
    let states = fixture_states(cli, samples.clamp(4, 24));
    let per: Vec<Vec<CheckRow>> = states
        .par_iter()
        .map(|s| match ode_residual_report(s) {
            Ok(rows) => rows,
            Err(e) => vec![CheckRow::err("ode_residual_block", 1e-9, &e)],
        })
        .collect();
    let mut rows = aggregate(per);
    // decoupled closed-form family satisfies the winning normalization
    let dec = || -> Result<CheckRow> {
        let m = theta_flows::qseries::Moebius::new(
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(1.0, 0.0),
        )?;
        let v = theta_flows::qseries::canonical_closed_form(
            Complex64::new(0.2, 0.3),
            &m,
            Complex64::new(0.0, 0.0),
            theta_flows::qseries::BranchSign::Plus,
        )?;
        let s = SystemState::new(SystemId::Canonical, v.to_vec())?;
        let jets = theta_flows::flows::flow_jets(&s, 3)?;
        let u = &jets[3];
        let (u0, u1, u2, u3) = (
            u.derivative(0),
            u.derivative(1),
            u.derivative(2),
            u.derivative(3),
        );
        let scale = u3.norm().max((12.0 * u0 * u2).norm()).max(1e-30);
        Ok(CheckRow::ok(
            "chazy_decoupled_family",
            (u3 - 12.0 * u0 * u2 + 18.0 * u1 * u1).norm() / scale,
            1e-11,
        ))
    };
    match dec() {
        Ok(r) => rows.push(r),
        Err(e) => rows.push(CheckRow::err("chazy_decoupled_family", 1e-11, &e)),
    }
    rows
}

pub fn suite_weierstrass_scan(cli: &Cli) -> Vec<CheckRow> {
    let mut sampler = Sampler::new(cli.seed, region(cli));
    let mut rows = Vec::new();
    let mut block = || -> Result<Vec<CheckRow>> {
        let tau0 = loop {
            let t = sampler.tau();
            if t.im > 0.9 && t.im < 1.4 && t.re.abs() < 0.3 {
                break t;
            }
        };
        let m = sampler.moebius();
        let mk = |t: Complex64| -> Result<Vec<Complex64>> {
            let v = theta_flows::qseries::canonical_closed_form(
                t,
                &m,
                Complex64::new(0.7, 0.1),
                theta_flows::qseries::BranchSign::Plus,
            )?;
            let s = SystemState::new(SystemId::Canonical, v.to_vec())?;
            Ok(transform_state(&s, SystemId::Weierstrass, &TransformOpts::default())?.v)
        };
        let states = vec![
            mk(tau0)?,
            mk(tau0 + Complex64::new(0.02, 0.0))?,
            mk(tau0 + Complex64::new(0.0, 0.03))?,
            mk(tau0 + Complex64::new(0.01, 0.01))?,
        ];
        let hits = weierstrass_normalization_scan(&states, 1e-7);
        let unique = hits.len() == 1 && hits[0].0 == WeierstrassIntParams::default();
        Ok(vec![
            CheckRow {
                check: "weierstrass_normalization_scan_unique_winner".into(),
                residual: hits.len() as f64,
                threshold: 1.5,
                pass: unique,
                error: None,
            },
            CheckRow::ok(
                "weierstrass_scan_winner_constancy",
                hits.first().map(|h| h.1).unwrap_or(f64::NAN),
                1e-7,
            ),
        ])
    };
    match block() {
        Ok(mut r) => rows.append(&mut r),
        Err(e) => rows.push(CheckRow::err("weierstrass_normalization_scan", 1e-7, &e)),
    }
    rows
}

/// Invariant-drift suite across every system with a closed set of integrals.
pub fn suite_drift(cli: &Cli) -> Vec<CheckRow> {
    let mut rows = Vec::new();
    let opts = IntOpts {
        rtol: 1e-11,
        atol: 1e-13,
        ..Default::default()
    };
    let run = |name: &str, init: Result<SystemState>, seg: PathSegment| -> CheckRow {
        let block = || -> Result<f64> {
            let tr = integrate(&init?, seg, &opts)?;
            Ok(invariant_drift(&tr)?
                .into_iter()
                .map(|(_, d)| d)
                .fold(0.0, f64::max))
        };
        match block() {
            Ok(v) => CheckRow::ok(name, v, 1e-7),
            Err(e) => CheckRow::err(name, 1e-7, &e),
        }
    };
    let mut sampler = Sampler::new(cli.seed, region(cli));
    let s = sampler.canonical_state().expect("state");
    let tau0 = Complex64::new(0.05, 1.02);
    let m = sampler.moebius();
    let theta_init = theta_flows::qseries::canonical_closed_form(
        tau0,
        &m,
        Complex64::new(0.7, 0.1),
        theta_flows::qseries::BranchSign::Plus,
    )
    .map(|v| SystemState::new(SystemId::Canonical, v.to_vec()).unwrap());

    rows.push(run(
        "drift_canonical19",
        theta_init.clone().map_err(Error::from),
        PathSegment {
            t0: tau0,
            t1: tau0 + Complex64::new(0.4, 0.0),
        },
    ));
    let topts = TransformOpts::default();
    rows.push(run(
        "drift_jacobi9",
        theta_init
            .clone()
            .and_then(|st| transform_state(&st, SystemId::Jacobi, &topts)),
        PathSegment {
            t0: Complex64::new(0.0, 0.0),
            t1: Complex64::new(0.1, 0.05),
        },
    ));
    rows.push(run(
        "drift_intermediate25",
        theta_init
            .clone()
            .and_then(|st| transform_state(&st, SystemId::Intermediate, &topts)),
        PathSegment {
            t0: Complex64::new(0.0, 0.0),
            t1: Complex64::new(0.1, 0.05),
        },
    ));
    rows.push(run(
        "drift_darboux_halphen2",
        theta_init
            .clone()
            .and_then(|st| transform_state(&st, SystemId::DarbouxHalphen, &topts)),
        PathSegment {
            t0: Complex64::new(0.0, 0.0),
            t1: Complex64::new(0.15, 0.05),
        },
    ));
    rows.push(run(
        "drift_weierstrass3",
        theta_init
            .clone()
            .and_then(|st| transform_state(&st, SystemId::Weierstrass, &topts)),
        PathSegment {
            t0: Complex64::new(0.0, 0.0),
            t1: Complex64::new(0.08, 0.03),
        },
    ));
    rows.push(run(
        "drift_ramamani44",
        theta_init
            .clone()
            .and_then(|st| transform_state(&st, SystemId::Ramamani, &topts)),
        PathSegment {
            t0: Complex64::new(0.0, 0.0),
            t1: Complex64::new(0.12, 0.04),
        },
    ));
    // symmetric system from an off-surface perturbed theta state
    rows.push(run(
        "drift_symmetric8",
        (|| {
            let tq = theta_flows::qseries::theta_quad(
                theta_flows::qseries::Tau::new(0.1, 1.1)?,
                0,
            )?;
            SystemState::new(
                SystemId::SymmetricTheta,
                vec![
                    tq.t2() * 1.1,
                    tq.t3(),
                    tq.t4() * Complex64::new(0.95, 0.05),
                    tq.eta0(),
                ],
            )
        })(),
        PathSegment {
            t0: Complex64::new(0.0, 0.0),
            t1: Complex64::new(0.04, 0.02),
        },
    ));
    // Halphen-Brioschi at (1/6, 1/3, 1/2) from a 2F1 seed
    rows.push(run(
        "drift_halphen_brioschi57",
        (|| {
            let (a, b, cc) = (
                Complex64::new(1.0 / 6.0, 0.0),
                Complex64::new(1.0 / 3.0, 0.0),
                Complex64::new(0.5, 0.0),
            );
            let v = conserved::hb_seed_from_2f1(
                a,
                b,
                cc,
                Complex64::new(0.3, 0.05),
                Complex64::new(1.0, 0.0),
                Complex64::new(0.3, 0.1),
            )?;
            SystemState::new(SystemId::HalphenBrioschi { a, b, c: cc }, v.to_vec())
        })(),
        PathSegment {
            t0: Complex64::new(0.0, 0.0),
            t1: Complex64::new(0.04, 0.02),
        },
    ));
    let _ = s;
    // pointwise pair identity along the canonical fixture
    let pair_identity = || -> Result<CheckRow> {
        let st = theta_init?;
        let r = conserved::canonical_pair_identity_residual(&st.v)?;
        Ok(CheckRow::ok("canonical_pair_identity", r.norm(), 1e-11))
    };
    match pair_identity() {
        Ok(r) => rows.push(r),
        Err(e) => rows.push(CheckRow::err("canonical_pair_identity", 1e-11, &e)),
    }
    rows
}

pub fn run(cli: &Cli, args: &CheckArgs) -> Result<i32> {
    let rows = match args.suite.as_str() {
        "identities" => suite_identities(cli, args.samples),
        "brackets" => suite_brackets(cli, args.samples),
        "obstruction" => suite_obstruction(cli),
        "transport" => suite_transport(cli),
        "lagrangian" => suite_lagrangian(cli),
        "nambu" => suite_nambu(cli, args.samples),
        "ramamani" => suite_ramamani(cli, args.samples),
        "chazy" => suite_chazy(cli, args.samples),
        "weierstrass_scan" => suite_weierstrass_scan(cli),
        "drift" => suite_drift(cli),
        "all" => {
            let mut all = suite_identities(cli, args.samples);
            all.extend(suite_brackets(cli, 8));
            all.extend(suite_obstruction(cli));
            all.extend(suite_transport(cli));
            all.extend(suite_lagrangian(cli));
            all.extend(suite_ramamani(cli, 8));
            all.extend(suite_chazy(cli, 8));
            all.extend(suite_weierstrass_scan(cli));
            all.extend(suite_drift(cli));
            all
        }
        other => {
            eprintln!("error: unknown suite {other:?} (identities, brackets, obstruction, transport, lagrangian, nambu, ramamani, chazy, weierstrass_scan, drift, all)");
            return Ok(EXIT_PARSE);
        }
    };

    let failed = rows.iter().filter(|r| !r.pass).count();
    let content = if cli.format == "csv" {
        let mut s = String::from("check,residual,threshold,pass,error\n");
        for r in &rows {
            s.push_str(&format!(
                "{},{:.17e},{:.17e},{},{}\n",
                r.check,
                r.residual,
                r.threshold,
                r.pass,
                r.error.clone().unwrap_or_default()
            ));
        }
        s
    } else {
        let mut s = serde_json::to_string_pretty(&rows)
            .map_err(|e| Error::Parameter(e.to_string()))?;
        s.push('\n');
        s
    };
    write_output(&cli.out, &content).map_err(|e| Error::Parameter(e.to_string()))?;
    eprintln!(
        "suite {}: {}/{} checks passed",
        args.suite,
        rows.len() - failed,
        rows.len()
    );
    Ok(if failed == 0 { EXIT_OK } else { EXIT_CHECK_FAILED })
}
