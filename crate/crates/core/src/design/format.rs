//! Plain-text coefficient files.
//!
//! ```text
//! <kind> <realization> <N> <Π> <T>
//! a_1 … a_N
//! c_0 … c_N
//! ```
//!
//! Numbers are written with 17 significant digits so `f64` values survive
//! a round trip exactly.

use std::fmt::Write as _;

use super::{FilterCoefficients, FilterKind, Realization};
use crate::error::{Error, Result};
use crate::Real;

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_coefficients<T: Real>(coeffs: &FilterCoefficients<T>) -> String {
    let mut out = String::new();
    let join = |v: &[T]| {
        v.iter()
            .map(|c| num(c.to_f64_lossy()))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let _ = writeln!(
        out,
        "{} {} {} {} {}",
        coeffs.kind().name(),
        coeffs.realization().name(),
        coeffs.order(),
        coeffs.period(),
        num(coeffs.sampling_time().to_f64_lossy())
    );
    let _ = writeln!(out, "{}", join(coeffs.feedback()));
    let _ = writeln!(out, "{}", join(coeffs.feedforward()));
    out
}

/// Parses the format written by [`write_coefficients`]. `source` names the
/// input in error messages.
pub fn parse_coefficients<T: Real>(text: &str, source: &str) -> Result<FilterCoefficients<T>> {
    let err = |line: usize, message: String| Error::Parse {
        path: source.to_string(),
        line,
        message,
    };
    let lines: Vec<&str> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .collect();
    if lines.len() != 3 {
        return Err(err(
            lines.len().min(3) + 1,
            format!("expected 3 non-empty lines, found {}", lines.len()),
        ));
    }
    let header: Vec<&str> = lines[0].split_whitespace().collect();
    if header.len() != 5 {
        return Err(err(1, "header must be `kind realization N Pi T`".into()));
    }
    let kind = FilterKind::from_name(header[0])
        .ok_or_else(|| err(1, format!("unknown kind `{}`", header[0])))?;
    let realization = Realization::from_name(header[1])
        .ok_or_else(|| err(1, format!("unknown realization `{}`", header[1])))?;
    let order: usize = header[2]
        .parse()
        .map_err(|_| err(1, format!("bad order `{}`", header[2])))?;
    let period: usize = header[3]
        .parse()
        .map_err(|_| err(1, format!("bad period `{}`", header[3])))?;
    let dt: f64 = header[4]
        .parse()
        .map_err(|_| err(1, format!("bad sampling time `{}`", header[4])))?;
    let parse_row = |idx: usize, expected: usize| -> Result<Vec<T>> {
        let row = lines[idx]
            .split_whitespace()
            .map(|s| s.parse::<f64>().map(T::lit))
            .collect::<std::result::Result<Vec<T>, _>>()
            .map_err(|e| err(idx + 1, e.to_string()))?;
        if row.len() != expected {
            return Err(err(
                idx + 1,
                format!("expected {expected} values, found {}", row.len()),
            ));
        }
        Ok(row)
    };
    let feedback = parse_row(1, order)?;
    let feedforward = parse_row(2, order + 1)?;
    FilterCoefficients::new(kind, realization, period, T::lit(dt), feedback, feedforward)
}
