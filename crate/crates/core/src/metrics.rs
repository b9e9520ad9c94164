//! Separation quality measures and lifted-spectrum classification.

use std::ops::Range;

use num_complex::Complex;
use rustfft::{FftNum, FftPlanner};

use crate::error::{Error, Result};
use crate::Real;

pub const DEFAULT_CLASSIFY_TOL: f64 = 1e-6;
const MIN_CLASSIFY_LEN: usize = 8;

/// Spectral membership of one lifted channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumClassification {
    /// Zero everywhere.
    pub zero: bool,
    /// Some non-zero content at `|ω| ≤ ρ`.
    pub periodic: bool,
    /// Some non-zero content at `|ω| > ρ`.
    pub aperiodic: bool,
    pub max_low: f64,
    pub max_high: f64,
    /// Relative threshold below which a bin counts as zero.
    pub tol: f64,
}

/// What a channel is, given its membership flags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LiftedClass {
    Zero,
    Periodic,
    Aperiodic,
    PeriodicAperiodic,
}

impl SpectrumClassification {
    pub fn class(&self) -> LiftedClass {
        match (self.zero, self.periodic, self.aperiodic) {
            (true, _, _) | (false, false, false) => LiftedClass::Zero,
            (false, true, false) => LiftedClass::Periodic,
            (false, false, true) => LiftedClass::Aperiodic,
            (false, true, true) => LiftedClass::PeriodicAperiodic,
        }
    }
}

/// Classifies a lifted channel from its DFT.
///
/// Bin `k` sits at `ω = 2πk/L` folded into `(-π, π]`; magnitudes at or
/// below `tol · max|X|` are treated as zero.
pub fn classify_lifted<T: Real + FftNum>(x_tau: &[T], rho: f64, tol: f64) -> Result<SpectrumClassification> {
    if x_tau.is_empty() {
        return Err(Error::invalid("cannot classify an empty sequence"));
    }
    if x_tau.len() < MIN_CLASSIFY_LEN {
        return Err(Error::invalid(format!(
            "classification needs at least {MIN_CLASSIFY_LEN} samples, got {}",
            x_tau.len()
        )));
    }
    if !(0.0..=std::f64::consts::PI).contains(&rho) {
        return Err(Error::invalid(format!("rho must lie in [0, pi], got {rho}")));
    }
    let n = x_tau.len();
    let mut buf: Vec<Complex<T>> = x_tau.iter().map(|x| Complex::new(*x, T::zero())).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);

    let (mut max_low, mut max_high) = (0.0_f64, 0.0_f64);
    for (k, c) in buf.iter().enumerate() {
        let mag = c.norm().to_f64_lossy();
        let kk = if k > n / 2 { n - k } else { k };
        let omega = std::f64::consts::TAU * kk as f64 / n as f64;
        if omega <= rho {
            max_low = max_low.max(mag);
        } else {
            max_high = max_high.max(mag);
        }
    }
    let peak = max_low.max(max_high);
    let zero = peak == 0.0;
    let floor = tol * peak;
    Ok(SpectrumClassification {
        zero,
        periodic: !zero && max_low > floor,
        aperiodic: !zero && max_high > floor,
        max_low,
        max_high,
        tol,
    })
}

/// `|Σ x_p x_a| / (‖x_p‖ ‖x_a‖)`, defined as 0 when either norm is 0.
pub fn orthogonality_defect<T: Real>(x_p: &[T], x_a: &[T]) -> Result<f64> {
    if x_p.len() != x_a.len() {
        return Err(Error::invalid(format!(
            "sequences differ in length ({} vs {})",
            x_p.len(),
            x_a.len()
        )));
    }
    let (mut dot, mut np, mut na) = (0.0, 0.0, 0.0);
    for (p, a) in x_p.iter().zip(x_a) {
        let (p, a) = (p.to_f64_lossy(), a.to_f64_lossy());
        dot += p * a;
        np += p * p;
        na += a * a;
    }
    if np == 0.0 || na == 0.0 {
        return Ok(0.0);
    }
    Ok(dot.abs() / (np.sqrt() * na.sqrt()))
}

/// RMS of `separated - truth` over `window`.
pub fn interference_rms<T: Real>(separated: &[T], truth: &[T], window: Range<usize>) -> Result<f64> {
    if window.is_empty() {
        return Err(Error::invalid("interference window is empty"));
    }
    if window.end > separated.len() || window.end > truth.len() {
        return Err(Error::invalid(format!(
            "window {:?} exceeds the sequences ({} and {} samples)",
            window,
            separated.len(),
            truth.len()
        )));
    }
    let n = window.len() as f64;
    let ss: f64 = window
        .map(|t| {
            let d = separated[t].to_f64_lossy() - truth[t].to_f64_lossy();
            d * d
        })
        .sum();
    Ok((ss / n).sqrt())
}

/// Plain RMS of a sequence.
pub fn rms<T: Real>(x: &[T]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    (x.iter().map(|v| v.to_f64_lossy().powi(2)).sum::<f64>() / x.len() as f64).sqrt()
}
