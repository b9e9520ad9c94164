//! Classical comb filters used as baselines against the separators.
//!
//! A comb removes the harmonics of `1/(ΠT)`; its output is taken as the
//! aperiodic part and `input - output` as the periodic part.

use crate::design::{FilterCoefficients, FilterKind, Realization};
use crate::error::{Error, Result};
use crate::pasf::LiftedFilter;
use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CombVariant {
    /// `1 - ((1-g)(1-b)/2) (1 + 𝒵⁻¹)/(1 - b 𝒵⁻¹)`.
    Feedback { b: f64, g: f64 },
    /// `β(1 - 𝒵⁻¹)/(1 - α 𝒵⁻¹)` parameterized by notch gain `|G|` and quality `Q`.
    Notch { gain: f64, q: f64 },
}

impl CombVariant {
    /// `(1 - 𝒵⁻¹)/2`.
    pub fn one() -> Self {
        CombVariant::Feedback { b: 0.0, g: 0.0 }
    }

    /// `(3/2)(1 - 𝒵⁻¹)/(2 - 𝒵⁻¹)`.
    pub fn two() -> Self {
        CombVariant::Feedback { b: 0.5, g: 0.0 }
    }

    pub fn three(gain: f64, q: f64) -> Self {
        CombVariant::Notch { gain, q }
    }

    /// `(α, β)` of the notch form.
    pub fn notch_parameters(gain: f64, q: f64) -> (f64, f64) {
        let gamma = (1.0 - gain * gain).sqrt() / gain * (std::f64::consts::PI / (2.0 * q)).tan();
        ((1.0 - gamma) / (1.0 + gamma), 1.0 / (1.0 + gamma))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CombSpec {
    pub variant: CombVariant,
    pub period: usize,
    pub sampling_time: f64,
}

/// First-order aperiodic-pass comb in `𝒵⁻¹ = z^{-Π}`.
pub fn design_comb<T: Real>(spec: &CombSpec) -> Result<FilterCoefficients<T>> {
    let (feedback, feedforward) = match spec.variant {
        CombVariant::Feedback { b, g } => {
            if !(0.0..1.0).contains(&b) || !(0.0..1.0).contains(&g) {
                return Err(Error::invalid(format!(
                    "comb parameters need 0 <= b < 1 and 0 <= g < 1 (got b={b}, g={g})"
                )));
            }
            let k = (1.0 - g) * (1.0 - b) / 2.0;
            (-b, [1.0 - k, -b - k])
        }
        CombVariant::Notch { gain, q } => {
            if !(gain > 0.0 && gain < 1.0) || !(q > 0.0) || !q.is_finite() {
                return Err(Error::invalid(format!(
                    "notch comb needs 0 < |G| < 1 and Q > 0 (got |G|={gain}, Q={q})"
                )));
            }
            let (alpha, beta) = CombVariant::notch_parameters(gain, q);
            (-alpha, [beta, -beta])
        }
    };
    FilterCoefficients::new(
        FilterKind::AperiodicPass,
        Realization::Comb,
        spec.period,
        T::lit(spec.sampling_time),
        vec![T::lit(feedback)],
        feedforward.iter().map(|c| T::lit(*c)).collect(),
    )
}

/// Streaming comb separation: `(x - C x, C x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CombSeparator<T> {
    filter: LiftedFilter<T>,
}

impl<T: Real> CombSeparator<T> {
    pub fn new(spec: &CombSpec) -> Result<Self> {
        Ok(CombSeparator {
            filter: LiftedFilter::new(design_comb(spec)?),
        })
    }

    pub fn step(&mut self, x: T) -> Result<(T, T)> {
        let xa = self.filter.step(x)?;
        Ok((x - xa, xa))
    }

    /// New parameters, same period; histories are kept.
    pub fn reconfigure(&mut self, spec: &CombSpec) -> Result<()> {
        self.filter.reconfigure(design_comb(spec)?)
    }
}
