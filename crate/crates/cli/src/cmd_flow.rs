//! `flow`: integrate a system along a straight segment and emit a CSV
//! trajectory annotated with invariant values and local error estimates.

use clap::Args;
use num_complex::Complex64;
use theta_flows::conserved::invariants;
use theta_flows::flows::{SystemId, SystemState};
use theta_flows::integrate::{integrate, IntOpts, PathSegment};
use theta_flows::qseries::{canonical_closed_form, jacobi_closed_form, BranchSign, Moebius};
use theta_flows::{Error, Result};

use crate::util::{fmt_cell, parse_complex, parse_state, write_output};
use crate::{Cli, EXIT_OK, EXIT_PARSE};

#[derive(Args, Debug)]
pub struct FlowArgs {
    /// System id: canonical19, jacobi9, symmetric8, intermediate25,
    /// darboux_halphen2, weierstrass3, ramamani44, halphen_brioschi57.
    #[arg(long)]
    pub system: String,
    /// Initial state as semicolon-separated complex components
    /// ("re,im;re,im;...").
    #[arg(long, allow_hyphen_values = true)]
    pub state: Option<String>,
    /// Theta-generated initial state at this tau (canonical19/jacobi9).
    #[arg(long, allow_hyphen_values = true)]
    pub from_theta: Option<String>,
    /// Moebius constants "a;b;c;d" for --from-theta.
    #[arg(long, allow_hyphen_values = true)]
    pub moebius: Option<String>,
    /// Epsilon constant of the canonical closed form.
    #[arg(long, allow_hyphen_values = true, default_value = "0.7,0.1")]
    pub eps: String,
    /// Integral constant of the Jacobi closed form.
    #[arg(long, allow_hyphen_values = true, default_value = "3.0,0.5")]
    pub iconst: String,
    /// Segment start in the system's own time.
    #[arg(long, allow_hyphen_values = true)]
    pub t0: String,
    /// Segment end.
    #[arg(long, allow_hyphen_values = true)]
    pub t1: String,
    /// Hypergeometric parameters "a;b;c" for halphen_brioschi57.
    #[arg(long, allow_hyphen_values = true, default_value = "0.166666666666666657;0.33333333333333331;0.5")]
    pub hb_params: String,
    /// Append a column with the deviation from the closed-form solution.
    #[arg(long, default_value_t = false)]
    pub verify_closed_form: bool,
}

fn parse_system(name: &str, hb: &str) -> Result<SystemId> {
    Ok(match name {
        "canonical" => SystemId::Canonical,
        "jacobi" => SystemId::Jacobi,
        "symmetric_theta" => SystemId::SymmetricTheta,
        "intermediate" => SystemId::Intermediate,
        "legendre_closure" => SystemId::LegendreClosure,
        "darboux_halphen" => SystemId::DarbouxHalphen,
        "weierstrass" => SystemId::Weierstrass,
        "ramamani" => SystemId::Ramamani,
        "halphen_brioschi" => {
            let ps = parse_state(hb).map_err(Error::Parameter)?;
            if ps.len() != 3 {
                return Err(Error::Parameter("--hb-params needs a;b;c".into()));
            }
            SystemId::HalphenBrioschi {
                a: ps[0],
                b: ps[1],
                c: ps[2],
            }
        }
        _ => return Err(Error::Parameter(format!("unknown system {name:?}"))),
    })
}

pub fn run(cli: &Cli, args: &FlowArgs) -> Result<i32> {
    let system = match parse_system(&args.system, &args.hb_params) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return Ok(EXIT_PARSE);
        }
    };
    let (Ok(t0), Ok(t1)) = (parse_complex(&args.t0), parse_complex(&args.t1)) else {
        eprintln!("usage: flow --t0 re[,im] --t1 re[,im]");
        return Ok(EXIT_PARSE);
    };

    let moebius = match &args.moebius {
        None => Moebius::IDENTITY,
        Some(m) => {
            let ps = parse_state(m).map_err(Error::Parameter)?;
            if ps.len() != 4 {
                eprintln!("error: --moebius needs a;b;c;d");
                return Ok(EXIT_PARSE);
            }
            Moebius::new(ps[0], ps[1], ps[2], ps[3])?
        }
    };
    let eps = parse_complex(&args.eps).map_err(Error::Parameter)?;
    let iconst = parse_complex(&args.iconst).map_err(Error::Parameter)?;

    // closed-form oracle in the system's own time, where one exists
    let closed_form: Option<Box<dyn Fn(Complex64) -> Result<[Complex64; 4]>>> =
        if args.from_theta.is_some() {
            match system {
                SystemId::Canonical => {
                    let m = moebius;
                    Some(Box::new(move |t| {
                        canonical_closed_form(t, &m, eps, BranchSign::Plus)
                    }))
                }
                SystemId::Jacobi => {
                    let m = moebius;
                    Some(Box::new(move |t| {
                        jacobi_closed_form(t, &m, iconst, BranchSign::Plus)
                    }))
                }
                _ => None,
            }
        } else {
            None
        };

    let init = if let Some(tau) = &args.from_theta {
        let Ok(_tau0) = parse_complex(tau) else {
            eprintln!("error: bad --from-theta value");
            return Ok(EXIT_PARSE);
        };
        match &closed_form {
            Some(f) => SystemState::new(system, f(t0)?.to_vec())?,
            None => {
                eprintln!("error: --from-theta supports canonical19 and jacobi9");
                return Ok(EXIT_PARSE);
            }
        }
    } else if let Some(sv) = &args.state {
        let v = match parse_state(sv) {
            Ok(v) => v,
            Err(e) => {
                eprintln!("error: {e}");
                return Ok(EXIT_PARSE);
            }
        };
        SystemState::new(system, v)?
    } else {
        eprintln!("error: give --state or --from-theta");
        return Ok(EXIT_PARSE);
    };

    let opts = IntOpts {
        rtol: cli.rtol,
        atol: cli.atol,
        ..Default::default()
    };
    let traj = integrate(&init, PathSegment { t0, t1 }, &opts)?;

    // column layout
    let names: Vec<String> = match invariants(&traj.state_at(0)) {
        Ok(set) => set.all().map(|(n, _)| n.clone()).collect(),
        Err(_) => Vec::new(),
    };
    let mut csv = String::new();
    csv.push_str("idx,t_re,t_im");
    for i in 0..init.v.len() {
        csv.push_str(&format!(",c{i}_re,c{i}_im"));
    }
    for n in &names {
        csv.push_str(&format!(",{n}_re,{n}_im"));
    }
    csv.push_str(",err_est");
    if args.verify_closed_form {
        csv.push_str(",closed_form_dev");
    }
    csv.push('\n');

    let mut max_dev = 0.0f64;
    let mut max_drift = vec![0.0f64; names.len()];
    let mut base: Option<Vec<Complex64>> = None;
    for (idx, s) in traj.samples.iter().enumerate() {
        csv.push_str(&format!(
            "{idx},{},{}",
            fmt_cell(s.t.re),
            fmt_cell(s.t.im)
        ));
        for c in &s.state {
            csv.push_str(&format!(",{},{}", fmt_cell(c.re), fmt_cell(c.im)));
        }
        if !names.is_empty() {
            match invariants(&SystemState::new(system, s.state.clone())?) {
                Ok(set) => {
                    let vals: Vec<Complex64> = set.all().map(|(_, v)| *v).collect();
                    if let Some(b) = &base {
                        for (j, (v, b)) in vals.iter().zip(b.iter()).enumerate() {
                            let aligned = if (v + b).norm() < (v - b).norm() { -v } else { *v };
                            max_drift[j] =
                                max_drift[j].max((aligned - b).norm() / b.norm().max(1e-12));
                        }
                    } else {
                        base = Some(vals.clone());
                    }
                    for v in vals {
                        csv.push_str(&format!(",{},{}", fmt_cell(v.re), fmt_cell(v.im)));
                    }
                }
                Err(_) => {
                    for _ in &names {
                        csv.push_str(",nan,nan");
                    }
                }
            }
        }
        csv.push_str(&format!(",{}", fmt_cell(s.err_est)));
        if args.verify_closed_form {
            let dev = match &closed_form {
                Some(f) => {
                    let want = f(s.t)?;
                    s.state
                        .iter()
                        .zip(want.iter())
                        .map(|(g, w)| (g - w).norm())
                        .fold(0.0, f64::max)
                }
                None => f64::NAN,
            };
            max_dev = max_dev.max(dev);
            csv.push_str(&format!(",{}", fmt_cell(dev)));
        }
        csv.push('\n');
    }

    write_output(&cli.out, &csv).map_err(|e| Error::Parameter(e.to_string()))?;
    eprintln!(
        "rows: {} accepted: {} rejected: {}",
        traj.samples.len(),
        traj.accepted_steps,
        traj.rejected_steps
    );
    if args.verify_closed_form {
        eprintln!("closed_form_max_dev: {max_dev:.3e}");
    }
    if !names.is_empty() {
        let worst = max_drift.iter().cloned().fold(0.0, f64::max);
        eprintln!("max_invariant_drift: {worst:.3e}");
    }
    Ok(EXIT_OK)
}
