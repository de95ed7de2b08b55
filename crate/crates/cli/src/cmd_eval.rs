//! `eval` subcommands: theta constants, elliptic integrals, 2F1, modular
//! forms. Values print with 15 significant digits.

use clap::Subcommand;
use theta_flows::qseries::{modular_forms, theta_quad, Tau};
use theta_flows::{elliptic, hyp2f1, Result};

use crate::util::{fmt15, parse_complex, write_output};
use crate::{Cli, EXIT_OK, EXIT_PARSE};

#[derive(Subcommand, Debug)]
pub enum EvalCmd {
    /// Theta constants and eta at tau, plus the quartic identity residual.
    Theta {
        #[arg(long, allow_hyphen_values = true)]
        tau: String,
        /// Termwise derivative order to include (0..=3).
        #[arg(long, default_value_t = 0)]
        order: usize,
    },
    /// Complete elliptic integrals K, K', E, E' at modulus k.
    Elliptic {
        #[arg(long, allow_hyphen_values = true)]
        k: String,
    },
    /// Gauss hypergeometric 2F1(a, b; c | s).
    Hyp2f1 {
        #[arg(long, allow_hyphen_values = true)]
        a: String,
        #[arg(long, allow_hyphen_values = true)]
        b: String,
        #[arg(long, allow_hyphen_values = true)]
        c: String,
        #[arg(long, allow_hyphen_values = true)]
        s: String,
    },
    /// Weierstrass invariants in both conventions and E2, E4, E6.
    Forms {
        #[arg(long, allow_hyphen_values = true)]
        tau: String,
    },
}

pub fn run(cli: &Cli, cmd: &EvalCmd) -> Result<i32> {
    let mut out = String::new();
    match cmd {
        EvalCmd::Theta { tau, order } => {
            let Ok(t) = parse_complex(tau) else {
                eprintln!("usage: eval theta --tau re[,im]");
                return Ok(EXIT_PARSE);
            };
            let tq = theta_quad(Tau::new(t.re, t.im)?, (*order).min(3))?;
            out.push_str(&format!("theta2 = {}\n", fmt15(tq.t2())));
            out.push_str(&format!("theta3 = {}\n", fmt15(tq.t3())));
            out.push_str(&format!("theta4 = {}\n", fmt15(tq.t4())));
            out.push_str(&format!("eta    = {}\n", fmt15(tq.eta0())));
            for n in 1..=tq.max_order {
                out.push_str(&format!(
                    "d{n}/dtau: theta2 = {} theta3 = {} theta4 = {} eta = {}\n",
                    fmt15(tq.theta2[n]),
                    fmt15(tq.theta3[n]),
                    fmt15(tq.theta4[n]),
                    fmt15(tq.eta[n])
                ));
            }
            let resid = (tq.t3().powu(4) - tq.t2().powu(4) - tq.t4().powu(4)).norm();
            out.push_str(&format!("quartic_identity_abs = {resid:.3e}\n"));
        }
        EvalCmd::Elliptic { k } => {
            let Ok(kv) = parse_complex(k) else {
                eprintln!("usage: eval elliptic --k re[,im]");
                return Ok(EXIT_PARSE);
            };
            let lq = elliptic::legendre_quad(elliptic::Modulus::new(kv)?)?;
            out.push_str(&format!("K  = {}\n", fmt15(lq.big_k)));
            out.push_str(&format!("K' = {}\n", fmt15(lq.big_k_prime)));
            out.push_str(&format!("E  = {}\n", fmt15(lq.big_e)));
            out.push_str(&format!("E' = {}\n", fmt15(lq.big_e_prime)));
            out.push_str(&format!(
                "legendre_identity_abs = {:.3e}\n",
                lq.legendre_identity_residual().norm()
            ));
        }
        EvalCmd::Hyp2f1 { a, b, c, s } => {
            let (Ok(a), Ok(b), Ok(c), Ok(s)) = (
                parse_complex(a),
                parse_complex(b),
                parse_complex(c),
                parse_complex(s),
            ) else {
                eprintln!("usage: eval hyp2f1 --a A --b B --c C --s S (complex as re,im)");
                return Ok(EXIT_PARSE);
            };
            let v = hyp2f1::hyp2f1(a, b, c, s)?;
            out.push_str(&format!("2F1 = {}\n", fmt15(v)));
        }
        EvalCmd::Forms { tau } => {
            let Ok(t) = parse_complex(tau) else {
                eprintln!("usage: eval forms --tau re[,im]");
                return Ok(EXIT_PARSE);
            };
            let tq = theta_quad(Tau::new(t.re, t.im)?, 0)?;
            let mf = modular_forms(&tq);
            out.push_str(&format!("g2 (three-theta) = {}\n", fmt15(mf.g2_sym)));
            out.push_str(&format!("g3 (three-theta) = {}\n", fmt15(mf.g3_sym)));
            out.push_str(&format!("g2 (two-theta)   = {}\n", fmt15(mf.g2_nt)));
            out.push_str(&format!("g3 (two-theta)   = {}\n", fmt15(mf.g3_nt)));
            out.push_str(&format!("E2 = {}\n", fmt15(mf.e2)));
            out.push_str(&format!("E4 = {}\n", fmt15(mf.e4)));
            out.push_str(&format!("E6 = {}\n", fmt15(mf.e6)));
        }
    }
    write_output(&cli.out, &out).map_err(|e| theta_flows::Error::Parameter(e.to_string()))?;
    Ok(EXIT_OK)
}
