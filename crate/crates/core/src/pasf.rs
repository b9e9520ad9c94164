//! Streaming periodic/aperiodic separation.
//!
//! Each output obeys a difference equation whose taps sit at multiples of
//! the period:
//!
//! ```text
//! x̃_p(t) = -Σ_{i=1}^{N} a_i x̃_p(t - iΠ) + Σ_{i=0}^{N} b_i x(t - iΠ)
//! x̃_a(t) = -Σ_{i=1}^{N} c_i x̃_a(t - iΠ) + Σ_{i=0}^{N} d_i x(t - iΠ)
//! ```
//!
//! so one ring buffer of `N·Π` past inputs and one per output suffice.

use crate::design::{FilterCoefficients, FilterDesign, FilterKind, SeparationSpec};
use crate::error::{Error, Result};
use crate::Real;

/// Fixed-capacity delay line; `cursor` is the slot the next sample overwrites.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct DelayLine<T> {
    buf: Vec<T>,
    cursor: usize,
}

impl<T: Clone> DelayLine<T> {
    pub(crate) fn from_history(history: &[T]) -> Self {
        DelayLine {
            buf: history.to_vec(),
            cursor: 0,
        }
    }

    /// Sample written `lag` steps ago (`1 ≤ lag ≤ capacity`).
    #[inline]
    pub(crate) fn tap(&self, lag: usize) -> &T {
        let n = self.buf.len();
        &self.buf[(self.cursor + n - lag) % n]
    }

    #[inline]
    pub(crate) fn push(&mut self, x: T) {
        self.buf[self.cursor] = x;
        self.cursor += 1;
        if self.cursor == self.buf.len() {
            self.cursor = 0;
        }
    }

    /// Contents oldest first.
    pub(crate) fn history(&self) -> Vec<T> {
        let (new, old) = self.buf.split_at(self.cursor);
        old.iter().chain(new).cloned().collect()
    }
}

#[inline]
fn filter_output<T: Real>(
    coeffs: &FilterCoefficients<T>,
    input: &DelayLine<T>,
    output: &DelayLine<T>,
    x: T,
) -> T {
    let period = coeffs.period();
    let ff = coeffs.feedforward();
    let mut y = ff[0] * x;
    for (i, (b, a)) in ff[1..].iter().zip(coeffs.feedback()).enumerate() {
        let lag = (i + 1) * period;
        y += *b * *input.tap(lag) - *a * *output.tap(lag);
    }
    y
}

fn check_history<T>(name: &str, h: &[T], len: usize) -> Result<()> {
    if h.len() != len {
        return Err(Error::DimensionMismatch(format!(
            "{name} history needs {len} samples (N·Π), got {}",
            h.len()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
struct WarmStart<T> {
    input: Vec<T>,
    periodic: Vec<T>,
    aperiodic: Vec<T>,
}

/// Single-channel periodic/aperiodic separation filter.
#[derive(Debug, Clone, PartialEq)]
pub struct Pasf<T> {
    p: FilterCoefficients<T>,
    a: FilterCoefficients<T>,
    design: Option<FilterDesign>,
    input: DelayLine<T>,
    p_out: DelayLine<T>,
    a_out: DelayLine<T>,
    warm: WarmStart<T>,
    poisoned: bool,
}

impl<T: Real> Pasf<T> {
    /// Zero warm start.
    pub fn new(p: FilterCoefficients<T>, a: FilterCoefficients<T>) -> Result<Self> {
        let len = Self::check_pair(&p, &a)?;
        let zeros = vec![T::zero(); len];
        Self::with_history(p, a, &zeros, &zeros, &zeros)
    }

    /// Designs the pair from `spec` and remembers the recipe for
    /// [`Pasf::reconfigure_spec`].
    pub fn from_design(design: FilterDesign, spec: &SeparationSpec<T>) -> Result<Self> {
        let (p, a) = design.design(spec)?;
        let mut f = Self::new(p, a)?;
        f.design = Some(design);
        Ok(f)
    }

    /// Warm start from explicit histories of length `N·Π`, oldest first.
    pub fn with_history(
        p: FilterCoefficients<T>,
        a: FilterCoefficients<T>,
        input: &[T],
        periodic: &[T],
        aperiodic: &[T],
    ) -> Result<Self> {
        let len = Self::check_pair(&p, &a)?;
        check_history("input", input, len)?;
        check_history("periodic output", periodic, len)?;
        check_history("aperiodic output", aperiodic, len)?;
        Ok(Pasf {
            p,
            a,
            design: None,
            input: DelayLine::from_history(input),
            p_out: DelayLine::from_history(periodic),
            a_out: DelayLine::from_history(aperiodic),
            warm: WarmStart {
                input: input.to_vec(),
                periodic: periodic.to_vec(),
                aperiodic: aperiodic.to_vec(),
            },
            poisoned: false,
        })
    }

    /// Attaches the recipe used by [`Pasf::reconfigure_spec`].
    pub fn with_design(mut self, design: FilterDesign) -> Self {
        self.design = Some(design);
        self
    }

    fn check_pair(p: &FilterCoefficients<T>, a: &FilterCoefficients<T>) -> Result<usize> {
        if p.kind() != FilterKind::PeriodicPass || a.kind() != FilterKind::AperiodicPass {
            return Err(Error::invalid(
                "separator needs a periodic-pass and an aperiodic-pass filter, in that order",
            ));
        }
        if p.period() != a.period() || p.order() != a.order() {
            return Err(Error::invalid(format!(
                "filter pair disagrees on geometry: (N={}, Π={}) vs (N={}, Π={})",
                p.order(),
                p.period(),
                a.order(),
                a.period()
            )));
        }
        Ok(p.order() * p.period())
    }

    pub fn periodic_filter(&self) -> &FilterCoefficients<T> {
        &self.p
    }

    pub fn aperiodic_filter(&self) -> &FilterCoefficients<T> {
        &self.a
    }

    pub fn period(&self) -> usize {
        self.p.period()
    }

    pub fn order(&self) -> usize {
        self.p.order()
    }

    pub fn is_poisoned(&self) -> bool {
        self.poisoned
    }

    /// Separates one sample into `(x̃_p, x̃_a)`.
    pub fn step(&mut self, x: T) -> Result<(T, T)> {
        if self.poisoned {
            return Err(Error::Poisoned);
        }
        if !x.is_finite() {
            self.poisoned = true;
            return Err(Error::Poisoned);
        }
        let xp = filter_output(&self.p, &self.input, &self.p_out, x);
        let xa = filter_output(&self.a, &self.input, &self.a_out, x);
        self.input.push(x);
        self.p_out.push(xp);
        self.a_out.push(xa);
        Ok((xp, xa))
    }

    /// Runs a whole sequence through the filter.
    pub fn separate(&mut self, xs: &[T]) -> Result<(Vec<T>, Vec<T>)> {
        let mut p = Vec::with_capacity(xs.len());
        let mut a = Vec::with_capacity(xs.len());
        for &x in xs {
            let (xp, xa) = self.step(x)?;
            p.push(xp);
            a.push(xa);
        }
        Ok((p, a))
    }

    /// Swaps in new coefficients of the same order and period; histories are kept.
    pub fn reconfigure(&mut self, p: FilterCoefficients<T>, a: FilterCoefficients<T>) -> Result<()> {
        if p.period() != self.period() || p.order() != self.order() {
            return Err(Error::UnsupportedReconfiguration(format!(
                "separator is fixed at N={}, Π={}; requested N={}, Π={}",
                self.order(),
                self.period(),
                p.order(),
                p.period()
            )));
        }
        Self::check_pair(&p, &a)?;
        self.p = p;
        self.a = a;
        Ok(())
    }

    /// Redesigns with the stored recipe for a new separation frequency.
    pub fn reconfigure_spec(&mut self, spec: &SeparationSpec<T>) -> Result<()> {
        let design = self.design.ok_or_else(|| {
            Error::UnsupportedReconfiguration("separator was built without a design recipe".into())
        })?;
        if spec.period() != self.period() {
            return Err(Error::UnsupportedReconfiguration(format!(
                "period change {} -> {} needs a fresh separator",
                self.period(),
                spec.period()
            )));
        }
        let (p, a) = design.design(spec)?;
        self.reconfigure(p, a)
    }

    /// Restores the warm-start histories and clears a poisoned state.
    pub fn reset(&mut self) {
        self.input = DelayLine::from_history(&self.warm.input);
        self.p_out = DelayLine::from_history(&self.warm.periodic);
        self.a_out = DelayLine::from_history(&self.warm.aperiodic);
        self.poisoned = false;
    }

    /// Current `(input, periodic, aperiodic)` histories, oldest first.
    pub fn histories(&self) -> (Vec<T>, Vec<T>, Vec<T>) {
        (self.input.history(), self.p_out.history(), self.a_out.history())
    }
}

/// One lifted-delay filter on its own, used for the comb baselines.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedFilter<T> {
    coeffs: FilterCoefficients<T>,
    input: DelayLine<T>,
    output: DelayLine<T>,
    poisoned: bool,
}

impl<T: Real> LiftedFilter<T> {
    pub fn new(coeffs: FilterCoefficients<T>) -> Self {
        let zeros = vec![T::zero(); coeffs.order() * coeffs.period()];
        LiftedFilter {
            coeffs,
            input: DelayLine::from_history(&zeros),
            output: DelayLine::from_history(&zeros),
            poisoned: false,
        }
    }

    pub fn coefficients(&self) -> &FilterCoefficients<T> {
        &self.coeffs
    }

    pub fn step(&mut self, x: T) -> Result<T> {
        if self.poisoned {
            return Err(Error::Poisoned);
        }
        if !x.is_finite() {
            self.poisoned = true;
            return Err(Error::Poisoned);
        }
        let y = filter_output(&self.coeffs, &self.input, &self.output, x);
        self.input.push(x);
        self.output.push(y);
        Ok(y)
    }

    /// Same order and period only; histories are kept.
    pub fn reconfigure(&mut self, coeffs: FilterCoefficients<T>) -> Result<()> {
        if coeffs.period() != self.coeffs.period() || coeffs.order() != self.coeffs.order() {
            return Err(Error::UnsupportedReconfiguration(
                "filter order and period are fixed".into(),
            ));
        }
        self.coeffs = coeffs;
        Ok(())
    }
}

/// `n` independent channels; the matrix form of the filters is diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorPasf<T> {
    channels: Vec<Pasf<T>>,
}

impl<T: Real> VectorPasf<T> {
    pub fn new(channels: Vec<Pasf<T>>) -> Result<Self> {
        let first = channels
            .first()
            .ok_or_else(|| Error::invalid("vector separator needs at least one channel"))?;
        let (n, period) = (first.order(), first.period());
        if channels.iter().any(|c| c.order() != n || c.period() != period) {
            return Err(Error::invalid("all channels must share N and Π"));
        }
        Ok(VectorPasf { channels })
    }

    /// Same design and spec on every one of `dim` channels, zero warm start.
    pub fn uniform(design: FilterDesign, spec: &SeparationSpec<T>, dim: usize) -> Result<Self> {
        let proto = Pasf::from_design(design, spec)?;
        Self::new(vec![proto; dim])
    }

    pub fn dim(&self) -> usize {
        self.channels.len()
    }

    pub fn channels(&self) -> &[Pasf<T>] {
        &self.channels
    }

    pub fn channels_mut(&mut self) -> &mut [Pasf<T>] {
        &mut self.channels
    }

    pub fn step(&mut self, x: &[T]) -> Result<(Vec<T>, Vec<T>)> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "expected a {}-vector, got {}",
                self.dim(),
                x.len()
            )));
        }
        let mut p = Vec::with_capacity(x.len());
        let mut a = Vec::with_capacity(x.len());
        for (ch, xi) in self.channels.iter_mut().zip(x) {
            let (xp, xa) = ch.step(*xi)?;
            p.push(xp);
            a.push(xa);
        }
        Ok((p, a))
    }

    pub fn reconfigure_spec(&mut self, spec: &SeparationSpec<T>) -> Result<()> {
        self.channels.iter_mut().try_for_each(|c| c.reconfigure_spec(spec))
    }

    pub fn reset(&mut self) {
        self.channels.iter_mut().for_each(Pasf::reset);
    }
}
