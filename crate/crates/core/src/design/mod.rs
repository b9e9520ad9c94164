//! Coefficient design for periodic-pass and aperiodic-pass filters.
//!
//! Every filter is rational in the lifted delay `𝒵⁻¹ = z^{-Π}`:
//!
//! ```text
//!            c_0 + c_1 𝒵⁻¹ + … + c_N 𝒵⁻ᴺ
//!   F(𝒵⁻¹) = ---------------------------
//!            1 + a_1 𝒵⁻¹ + … + a_N 𝒵⁻ᴺ
//! ```
//!
//! The IIR pair comes from a bilinear-transformed first-order section raised
//! to the `N`th power, the FIR pair from an equiripple (Remez exchange)
//! low-pass on the lifted axis, and [`make_complementary`] turns any
//! periodic-pass filter into the aperiodic-pass filter `1 - F_p`.

mod format;
mod iir;
mod remez;
mod stability;

use std::fmt;

use crate::error::{Error, Result};
use crate::Real;

pub use format::{parse_coefficients, write_coefficients};
pub use iir::{design_iir, MAX_IIR_ORDER};
pub use remez::{design_fir_equiripple, remez_lowpass, RemezReport, REMEZ_MAX_ITERATIONS, REMEZ_TOLERANCE};
pub use stability::{check_stability, StabilityReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FilterKind {
    PeriodicPass,
    AperiodicPass,
}

impl FilterKind {
    pub fn name(self) -> &'static str {
        match self {
            FilterKind::PeriodicPass => "periodic-pass",
            FilterKind::AperiodicPass => "aperiodic-pass",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "periodic-pass" => Some(FilterKind::PeriodicPass),
            "aperiodic-pass" => Some(FilterKind::AperiodicPass),
            _ => None,
        }
    }
}

/// Base structure a complementary filter was derived from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BaseRealization {
    Iir,
    Fir,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Realization {
    Iir,
    Fir,
    ComplementaryOf(BaseRealization),
    /// Classical comb filter used as a baseline.
    Comb,
}

impl Realization {
    pub fn name(self) -> &'static str {
        match self {
            Realization::Iir => "iir",
            Realization::Fir => "fir",
            Realization::ComplementaryOf(BaseRealization::Iir) => "complementary-iir",
            Realization::ComplementaryOf(BaseRealization::Fir) => "complementary-fir",
            Realization::Comb => "comb",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "iir" => Realization::Iir,
            "fir" => Realization::Fir,
            "complementary-iir" => Realization::ComplementaryOf(BaseRealization::Iir),
            "complementary-fir" => Realization::ComplementaryOf(BaseRealization::Fir),
            "comb" => Realization::Comb,
            _ => return None,
        })
    }
}

impl fmt::Display for Realization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One rational filter in the lifted delay variable.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterCoefficients<T> {
    period: usize,
    sampling_time: T,
    feedback: Vec<T>,
    feedforward: Vec<T>,
    kind: FilterKind,
    realization: Realization,
}

impl<T: Real> FilterCoefficients<T> {
    /// `feedback` holds `a_1..a_N` (`a_0 = 1` implied), `feedforward` holds `c_0..c_N`.
    pub fn new(
        kind: FilterKind,
        realization: Realization,
        period: usize,
        sampling_time: T,
        feedback: Vec<T>,
        feedforward: Vec<T>,
    ) -> Result<Self> {
        if period == 0 {
            return Err(Error::invalid("period must be at least 1"));
        }
        if !(sampling_time > T::zero()) || !sampling_time.is_finite() {
            return Err(Error::invalid("sampling time must be positive and finite"));
        }
        if feedback.is_empty() {
            return Err(Error::invalid("filter order must be at least 1"));
        }
        if feedforward.len() != feedback.len() + 1 {
            return Err(Error::invalid(format!(
                "order {} needs {} feedforward coefficients, got {}",
                feedback.len(),
                feedback.len() + 1,
                feedforward.len()
            )));
        }
        if feedback.iter().chain(&feedforward).any(|c| !c.is_finite()) {
            return Err(Error::invalid("coefficients must be finite"));
        }
        if realization == Realization::Fir && feedback.iter().any(|a| *a != T::zero()) {
            return Err(Error::invalid("FIR realization requires all-zero feedback"));
        }
        Ok(Self {
            period,
            sampling_time,
            feedback,
            feedforward,
            kind,
            realization,
        })
    }

    pub fn order(&self) -> usize {
        self.feedback.len()
    }

    pub fn period(&self) -> usize {
        self.period
    }

    pub fn sampling_time(&self) -> T {
        self.sampling_time
    }

    pub fn feedback(&self) -> &[T] {
        &self.feedback
    }

    pub fn feedforward(&self) -> &[T] {
        &self.feedforward
    }

    pub fn kind(&self) -> FilterKind {
        self.kind
    }

    pub fn realization(&self) -> Realization {
        self.realization
    }

    /// True when every feedback coefficient is zero.
    pub fn is_fir(&self) -> bool {
        self.feedback.iter().all(|a| *a == T::zero())
    }

    /// Same coefficients in another scalar type.
    pub fn cast<U: Real>(&self) -> FilterCoefficients<U> {
        let conv = |v: &[T]| v.iter().map(|x| U::lit(x.to_f64_lossy())).collect();
        FilterCoefficients {
            period: self.period,
            sampling_time: U::lit(self.sampling_time.to_f64_lossy()),
            feedback: conv(&self.feedback),
            feedforward: conv(&self.feedforward),
            kind: self.kind,
            realization: self.realization,
        }
    }
}

/// Separation frequency together with the lifting geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeparationSpec<T> {
    rho_tilde: T,
    period: usize,
    sampling_time: T,
    wide_band: bool,
}

impl<T: Real> SeparationSpec<T> {
    /// Requires `0 < ρ̃·Π·T ≤ π`.
    pub fn new(rho_tilde: T, period: usize, sampling_time: T) -> Result<Self> {
        let spec = Self::wide_band(rho_tilde, period, sampling_time)?;
        let rho = spec.normalized();
        if rho > T::PI() {
            return Err(Error::OutOfBand(rho.to_f64_lossy()));
        }
        Ok(Self {
            wide_band: false,
            ..spec
        })
    }

    /// Like [`SeparationSpec::new`] but accepts `ρ̃·Π·T > π`.
    ///
    /// Only the bilinear IIR design is defined there; the FIR designer
    /// still rejects such specs.
    pub fn wide_band(rho_tilde: T, period: usize, sampling_time: T) -> Result<Self> {
        if period == 0 {
            return Err(Error::invalid("period must be at least 1"));
        }
        if !(sampling_time > T::zero()) || !sampling_time.is_finite() {
            return Err(Error::invalid("sampling time must be positive and finite"));
        }
        if !(rho_tilde > T::zero()) || !rho_tilde.is_finite() {
            return Err(Error::DegenerateDesign(rho_tilde.to_f64_lossy()));
        }
        Ok(Self {
            rho_tilde,
            period,
            sampling_time,
            wide_band: true,
        })
    }

    pub fn rho_tilde(&self) -> T {
        self.rho_tilde
    }

    pub fn period(&self) -> usize {
        self.period
    }

    pub fn sampling_time(&self) -> T {
        self.sampling_time
    }

    pub fn is_wide_band(&self) -> bool {
        self.wide_band
    }

    /// `ρ = ρ̃·Π·T` in rad/sample of the lifted axis.
    pub fn normalized(&self) -> T {
        self.rho_tilde * T::of_usize(self.period) * self.sampling_time
    }

    /// Same geometry with a different separation frequency, keeping the band policy.
    pub fn with_rho_tilde(&self, rho_tilde: T) -> Result<Self> {
        if self.wide_band {
            Self::wide_band(rho_tilde, self.period, self.sampling_time)
        } else {
            Self::new(rho_tilde, self.period, self.sampling_time)
        }
    }
}

/// Returns the aperiodic-pass filter `F_a = 1 - F_p` over the common denominator.
pub fn make_complementary<T: Real>(periodic_pass: &FilterCoefficients<T>) -> Result<FilterCoefficients<T>> {
    if periodic_pass.kind != FilterKind::PeriodicPass {
        return Err(Error::invalid("complement requires a periodic-pass filter"));
    }
    let base = match periodic_pass.realization {
        Realization::Iir => BaseRealization::Iir,
        Realization::Fir => BaseRealization::Fir,
        other => {
            return Err(Error::invalid(format!(
                "cannot complement a {other} filter"
            )))
        }
    };
    let b = &periodic_pass.feedforward;
    let feedforward = std::iter::once(T::one() - b[0])
        .chain(periodic_pass.feedback.iter().zip(&b[1..]).map(|(a, b)| *a - *b))
        .collect();
    FilterCoefficients::new(
        FilterKind::AperiodicPass,
        Realization::ComplementaryOf(base),
        periodic_pass.period,
        periodic_pass.sampling_time,
        periodic_pass.feedback.clone(),
        feedforward,
    )
}

/// Band edges for the FIR designer; `None` selects `(ρ, min(π, 3ρ))`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FirBands {
    pub edges: Option<(f64, f64)>,
    pub weight_ratio: f64,
}

/// A recipe that turns a [`SeparationSpec`] into a periodic/aperiodic pair.
///
/// Separators keep the recipe so a new separation frequency can be applied
/// mid-run without rebuilding their histories.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FilterDesign {
    Iir { order: usize },
    Fir { order: usize, bands: FirBands },
    ComplementaryIir { order: usize },
    ComplementaryFir { order: usize, bands: FirBands },
}

impl FilterDesign {
    pub fn fir(order: usize) -> Self {
        FilterDesign::Fir {
            order,
            bands: FirBands {
                edges: None,
                weight_ratio: 1.0,
            },
        }
    }

    pub fn complementary_fir(order: usize) -> Self {
        FilterDesign::ComplementaryFir {
            order,
            bands: FirBands {
                edges: None,
                weight_ratio: 1.0,
            },
        }
    }

    pub fn order(&self) -> usize {
        match *self {
            FilterDesign::Iir { order }
            | FilterDesign::Fir { order, .. }
            | FilterDesign::ComplementaryIir { order }
            | FilterDesign::ComplementaryFir { order, .. } => order,
        }
    }

    /// Short label such as `iir3` or `fir50`.
    pub fn label(&self) -> String {
        match *self {
            FilterDesign::Iir { order } => format!("iir{order}"),
            FilterDesign::Fir { order, .. } => format!("fir{order}"),
            FilterDesign::ComplementaryIir { order } => format!("comp-iir{order}"),
            FilterDesign::ComplementaryFir { order, .. } => format!("comp-fir{order}"),
        }
    }

    pub fn design<T: Real>(
        &self,
        spec: &SeparationSpec<T>,
    ) -> Result<(FilterCoefficients<T>, FilterCoefficients<T>)> {
        match *self {
            FilterDesign::Iir { order } => design_iir(spec, order),
            FilterDesign::ComplementaryIir { order } => {
                let (p, _) = design_iir(spec, order)?;
                let a = make_complementary(&p)?;
                Ok((p, a))
            }
            FilterDesign::Fir { order, bands } => fir_pair(spec, order, bands),
            FilterDesign::ComplementaryFir { order, bands } => {
                let (p, _) = fir_pair(spec, order, bands)?;
                let a = make_complementary(&p)?;
                Ok((p, a))
            }
        }
    }
}

fn fir_pair<T: Real>(
    spec: &SeparationSpec<T>,
    order: usize,
    bands: FirBands,
) -> Result<(FilterCoefficients<T>, FilterCoefficients<T>)> {
    let rho = spec.normalized().to_f64_lossy();
    let (pass, stop) = bands
        .edges
        .unwrap_or_else(|| (rho, (3.0 * rho).min(std::f64::consts::PI)));
    let weight = if bands.weight_ratio > 0.0 { bands.weight_ratio } else { 1.0 };
    design_fir_equiripple(spec, order, pass, stop, weight)
}
