//! Frequency responses and Bode tables on the fast (unlifted) frequency axis.

use num_complex::Complex;

use crate::design::FilterCoefficients;
use crate::error::{Error, Result};
use crate::Real;

const SINGULAR_DENOMINATOR: f64 = 1e-300;

/// `F(w)` at `w = e^{-j ω̃ Π T}`.
///
/// `omega_tilde` is in rad/s and may be negative (for symmetry checks);
/// its magnitude must not exceed the Nyquist rate `π/T`.
pub fn eval_response<T: Real>(coeffs: &FilterCoefficients<T>, omega_tilde: T) -> Result<Complex<T>> {
    let dt = coeffs.sampling_time();
    let nyquist = T::PI() / dt;
    if !omega_tilde.is_finite() || omega_tilde.abs() > nyquist * (T::one() + T::epsilon()) {
        return Err(Error::invalid(format!(
            "frequency {omega_tilde} rad/s outside [-pi/T, pi/T]"
        )));
    }
    // Reduce the lifted phase before taking sin/cos to keep f32 usable.
    let two_pi = T::PI() + T::PI();
    let theta = (omega_tilde * T::of_usize(coeffs.period()) * dt) % two_pi;
    let w = Complex::new(theta.cos(), -theta.sin());

    let horner = |c: &[T]| {
        c.iter()
            .rev()
            .fold(Complex::new(T::zero(), T::zero()), |acc, ci| acc * w + *ci)
    };
    let num = horner(coeffs.feedforward());
    let den = horner(coeffs.feedback()) * w + T::one();
    let mag = den.norm();
    if mag.to_f64_lossy() < SINGULAR_DENOMINATOR {
        return Err(Error::SingularResponse {
            omega: omega_tilde.to_f64_lossy(),
            magnitude: mag.to_f64_lossy(),
        });
    }
    Ok(num / den)
}

/// Frequencies (rad/s) at which a Bode table is sampled.
#[derive(Debug, Clone, PartialEq)]
pub enum FrequencyGrid {
    Log { start: f64, stop: f64, points: usize },
    Linear { start: f64, stop: f64, points: usize },
    Explicit(Vec<f64>),
}

impl FrequencyGrid {
    pub const DEFAULT_POINTS: usize = 2000;
    pub const DEFAULT_START: f64 = 1e-3;

    /// 2000 log-spaced points from 10⁻³ rad/s to `π/T`.
    pub fn default_for(sampling_time: f64) -> Self {
        FrequencyGrid::Log {
            start: Self::DEFAULT_START,
            stop: std::f64::consts::PI / sampling_time,
            points: Self::DEFAULT_POINTS,
        }
    }

    pub fn frequencies(&self) -> Result<Vec<f64>> {
        let spaced = |start: f64, stop: f64, points: usize, log: bool| -> Result<Vec<f64>> {
            if points < 2 || !(start > 0.0) || !(stop > start) {
                return Err(Error::invalid(format!(
                    "frequency grid needs 0 < start < stop and at least 2 points (got {start}, {stop}, {points})"
                )));
            }
            let last = (points - 1) as f64;
            Ok((0..points)
                .map(|i| {
                    let f = i as f64 / last;
                    if log {
                        (start.ln() + f * (stop.ln() - start.ln())).exp()
                    } else {
                        start + f * (stop - start)
                    }
                })
                .collect())
        };
        match self {
            FrequencyGrid::Log { start, stop, points } => spaced(*start, *stop, *points, true),
            FrequencyGrid::Linear { start, stop, points } => spaced(*start, *stop, *points, false),
            FrequencyGrid::Explicit(v) => {
                if v.is_empty() || v[0] <= 0.0 || v.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::invalid(
                        "explicit frequency grid must be positive and strictly increasing",
                    ));
                }
                Ok(v.clone())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodeRow<T> {
    pub omega: T,
    pub gain_db: T,
    /// Principal value in (−180°, 180°].
    pub phase_deg: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BodeTable<T> {
    pub rows: Vec<BodeRow<T>>,
}

impl<T: Real> BodeTable<T> {
    pub const CSV_HEADER: &'static str = "omega_rad_s,gain_db,phase_deg";

    /// Linear interpolation of the gain (dB) at `omega`, clamped to the table ends.
    pub fn gain_db_at(&self, omega: T) -> Option<T> {
        let rows = &self.rows;
        let first = rows.first()?;
        if omega <= first.omega {
            return Some(first.gain_db);
        }
        let i = rows.partition_point(|r| r.omega < omega);
        if i >= rows.len() {
            return rows.last().map(|r| r.gain_db);
        }
        let (lo, hi) = (rows[i - 1], rows[i]);
        let f = (omega - lo.omega) / (hi.omega - lo.omega);
        Some(lo.gain_db + f * (hi.gain_db - lo.gain_db))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.rows.len() * 48);
        out.push_str(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&crate::table::format_row(&[
                r.omega.to_f64_lossy(),
                r.gain_db.to_f64_lossy(),
                r.phase_deg.to_f64_lossy(),
            ]));
            out.push('\n');
        }
        out
    }
}

pub fn bode_table<T: Real>(coeffs: &FilterCoefficients<T>, grid: &FrequencyGrid) -> Result<BodeTable<T>> {
    let nyquist = std::f64::consts::PI / coeffs.sampling_time().to_f64_lossy();
    let freqs = grid.frequencies()?;
    if freqs.last().is_some_and(|w| *w > nyquist * (1.0 + 1e-12)) {
        return Err(Error::invalid(format!(
            "frequency grid exceeds the Nyquist rate {nyquist} rad/s"
        )));
    }
    let rows = freqs
        .into_iter()
        .map(|w| {
            // Clamp the top point so rounding in the grid cannot trip the range check.
            let omega = T::lit(w.min(nyquist));
            let f = eval_response(coeffs, omega)?;
            let mut phase = f.arg().to_f64_lossy().to_degrees();
            if phase <= -180.0 {
                phase += 360.0;
            }
            Ok(BodeRow {
                omega,
                gain_db: T::lit(20.0) * f.norm().log10(),
                phase_deg: T::lit(phase),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BodeTable { rows })
}
