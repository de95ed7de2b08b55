//! Argument parsing helpers and byte-stable output writers.

use num_complex::Complex64;
use theta_flows::Error;

use crate::{EXIT_DOMAIN, EXIT_ESCAPE};

/// Parses "re" or "re,im" into a complex number.
pub fn parse_complex(s: &str) -> Result<Complex64, String> {
    let parts: Vec<&str> = s.split(',').collect();
    match parts.len() {
        1 => {
            let re: f64 = parts[0]
                .trim()
                .parse()
                .map_err(|_| format!("bad number {s:?}"))?;
            Ok(Complex64::new(re, 0.0))
        }
        2 => {
            let re: f64 = parts[0]
                .trim()
                .parse()
                .map_err(|_| format!("bad real part in {s:?}"))?;
            let im: f64 = parts[1]
                .trim()
                .parse()
                .map_err(|_| format!("bad imaginary part in {s:?}"))?;
            Ok(Complex64::new(re, im))
        }
        _ => Err(format!("expected \"re\" or \"re,im\", got {s:?}")),
    }
}

/// Parses a semicolon-separated list of complex components.
pub fn parse_state(s: &str) -> Result<Vec<Complex64>, String> {
    s.split(';').map(parse_complex).collect()
}

/// 15-significant-digit rendering used by `eval`.
pub fn fmt15(z: Complex64) -> String {
    format!("{:.14e} {:+.14e}i", z.re, z.im)
}

/// Full-precision stable rendering used in CSV cells.
pub fn fmt_cell(x: f64) -> String {
    format!("{x:.17e}")
}

/// Writes to the selected sink with LF endings.
pub fn write_output(out: &Option<String>, content: &str) -> std::io::Result<()> {
    match out {
        Some(path) => std::fs::write(path, content),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(content.as_bytes())
        }
    }
}

pub fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::DomainEscape { .. } => EXIT_ESCAPE,
        _ => EXIT_DOMAIN,
    }
}
