//! Declarative signal generators evaluated on the sample grid `t·T`.
//!
//! Descriptors are pure functions of the sample index (and, for noise, of
//! the run seed), so a scenario can be replayed or evaluated out of order.
//! Time boundaries are given in seconds but compared as sample indices
//! (`round(s / T)`) so that `25.3 s` is exactly sample 25300 at 1 ms.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::error::{Error, Result};

/// Which ends of a time window are included.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Bounds {
    #[serde(rename = "[]")]
    Closed,
    #[default]
    #[serde(rename = "[)")]
    ClosedOpen,
    #[serde(rename = "(]")]
    OpenClosed,
    #[serde(rename = "()")]
    Open,
}

/// A time interval in seconds; a missing end is unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Window {
    #[serde(default)]
    pub start_s: Option<f64>,
    #[serde(default)]
    pub end_s: Option<f64>,
    #[serde(default)]
    pub bounds: Bounds,
}

fn sample_of(seconds: f64, dt: f64) -> i64 {
    (seconds / dt).round() as i64
}

impl Window {
    pub fn new(start_s: Option<f64>, end_s: Option<f64>, bounds: Bounds) -> Self {
        Window { start_s, end_s, bounds }
    }

    pub fn contains(&self, t: i64, dt: f64) -> bool {
        let (lo_closed, hi_closed) = match self.bounds {
            Bounds::Closed => (true, true),
            Bounds::ClosedOpen => (true, false),
            Bounds::OpenClosed => (false, true),
            Bounds::Open => (false, false),
        };
        let above = self.start_s.is_none_or(|s| {
            let s = sample_of(s, dt);
            if lo_closed {
                t >= s
            } else {
                t > s
            }
        });
        let below = self.end_s.is_none_or(|e| {
            let e = sample_of(e, dt);
            if hi_closed {
                t <= e
            } else {
                t < e
            }
        });
        above && below
    }

    /// Conservative overlap test on the sample grid.
    fn overlaps(&self, other: &Window, dt: f64) -> bool {
        let lo = |w: &Window| match (w.start_s, w.bounds) {
            (None, _) => i64::MIN,
            (Some(s), Bounds::Closed | Bounds::ClosedOpen) => sample_of(s, dt),
            (Some(s), _) => sample_of(s, dt) + 1,
        };
        let hi = |w: &Window| match (w.end_s, w.bounds) {
            (None, _) => i64::MAX,
            (Some(e), Bounds::Closed | Bounds::OpenClosed) => sample_of(e, dt),
            (Some(e), _) => sample_of(e, dt) - 1,
        };
        lo(self).max(lo(other)) <= hi(self).min(hi(other))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    #[serde(flatten)]
    pub window: Window,
    pub signal: SignalDescriptor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SignalDescriptor {
    Constant {
        value: f64,
    },
    /// `Σ amplitude · sin(harmonic · 2π · base_hz · Tt)` over `terms = [[harmonic, amplitude], …]`.
    Harmonics {
        base_hz: f64,
        terms: Vec<[f64; 2]>,
    },
    /// `amplitude · sin(omega · (Tt - delay_s) + phase)`.
    Sine {
        amplitude: f64,
        omega: f64,
        #[serde(default)]
        phase: f64,
        #[serde(default)]
        delay_s: f64,
    },
    /// `amplitude · sin(omega · Tt)` while `t mod gate_period < on_samples`, else 0.
    GatedSine {
        amplitude: f64,
        omega: f64,
        gate_period: u64,
        on_samples: u64,
    },
    /// `signal` inside the window, 0 outside.
    Window {
        #[serde(flatten)]
        window: Window,
        signal: Box<SignalDescriptor>,
    },
    /// First piece whose window contains `t`, else `otherwise`.
    Piecewise {
        pieces: Vec<Piece>,
        otherwise: Box<SignalDescriptor>,
    },
    Sum {
        terms: Vec<SignalDescriptor>,
    },
    Scaled {
        factor: f64,
        signal: Box<SignalDescriptor>,
    },
    /// Gaussian `N(mean, variance)`, independent per sample; `stream`
    /// separates draws that share the run seed.
    Noise {
        #[serde(default)]
        mean: f64,
        variance: f64,
        #[serde(default)]
        stream: u64,
    },
}

/// Standard normal draw tied to `(seed, stream, t)`.
fn normal_at(seed: u64, stream: u64, t: i64) -> f64 {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&stream.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(t as u64);
    StandardNormal.sample(&mut rng)
}

impl SignalDescriptor {
    pub fn constant(value: f64) -> Self {
        SignalDescriptor::Constant { value }
    }

    pub fn pulse(level: f64, window: Window) -> Self {
        SignalDescriptor::Window {
            window,
            signal: Box::new(Self::constant(level)),
        }
    }

    pub fn scaled(factor: f64, signal: SignalDescriptor) -> Self {
        SignalDescriptor::Scaled {
            factor,
            signal: Box::new(signal),
        }
    }

    /// Value at sample `t` with sampling time `dt`; `seed` feeds noise terms.
    pub fn eval(&self, t: i64, dt: f64, seed: u64) -> f64 {
        let time = t as f64 * dt;
        match self {
            SignalDescriptor::Constant { value } => *value,
            SignalDescriptor::Harmonics { base_hz, terms } => terms
                .iter()
                .map(|[h, amp]| amp * (h * TAU * base_hz * time).sin())
                .sum(),
            SignalDescriptor::Sine {
                amplitude,
                omega,
                phase,
                delay_s,
            } => amplitude * (omega * (time - delay_s) + phase).sin(),
            SignalDescriptor::GatedSine {
                amplitude,
                omega,
                gate_period,
                on_samples,
            } => {
                if (t.rem_euclid(*gate_period as i64) as u64) < *on_samples {
                    amplitude * (omega * time).sin()
                } else {
                    0.0
                }
            }
            SignalDescriptor::Window { window, signal } => {
                if window.contains(t, dt) {
                    signal.eval(t, dt, seed)
                } else {
                    0.0
                }
            }
            SignalDescriptor::Piecewise { pieces, otherwise } => pieces
                .iter()
                .find(|p| p.window.contains(t, dt))
                .map_or_else(|| otherwise.eval(t, dt, seed), |p| p.signal.eval(t, dt, seed)),
            SignalDescriptor::Sum { terms } => terms.iter().map(|s| s.eval(t, dt, seed)).sum(),
            SignalDescriptor::Scaled { factor, signal } => factor * signal.eval(t, dt, seed),
            SignalDescriptor::Noise {
                mean,
                variance,
                stream,
            } => {
                if *variance == 0.0 {
                    *mean
                } else {
                    mean + variance.sqrt() * normal_at(seed, *stream, t)
                }
            }
        }
    }

    /// Time derivative (per second) at sample `t`; windows contribute no impulses.
    pub fn eval_rate(&self, t: i64, dt: f64) -> Result<f64> {
        let time = t as f64 * dt;
        Ok(match self {
            SignalDescriptor::Constant { .. } => 0.0,
            SignalDescriptor::Harmonics { base_hz, terms } => terms
                .iter()
                .map(|[h, amp]| {
                    let w = h * TAU * base_hz;
                    amp * w * (w * time).cos()
                })
                .sum(),
            SignalDescriptor::Sine {
                amplitude,
                omega,
                phase,
                delay_s,
            } => amplitude * omega * (omega * (time - delay_s) + phase).cos(),
            SignalDescriptor::GatedSine {
                amplitude,
                omega,
                gate_period,
                on_samples,
            } => {
                if (t.rem_euclid(*gate_period as i64) as u64) < *on_samples {
                    amplitude * omega * (omega * time).cos()
                } else {
                    0.0
                }
            }
            SignalDescriptor::Window { window, signal } => {
                if window.contains(t, dt) {
                    signal.eval_rate(t, dt)?
                } else {
                    0.0
                }
            }
            SignalDescriptor::Piecewise { pieces, otherwise } => {
                match pieces.iter().find(|p| p.window.contains(t, dt)) {
                    Some(p) => p.signal.eval_rate(t, dt)?,
                    None => otherwise.eval_rate(t, dt)?,
                }
            }
            SignalDescriptor::Sum { terms } => terms
                .iter()
                .map(|s| s.eval_rate(t, dt))
                .sum::<Result<f64>>()?,
            SignalDescriptor::Scaled { factor, signal } => factor * signal.eval_rate(t, dt)?,
            SignalDescriptor::Noise { .. } => {
                return Err(Error::invalid("noise has no time derivative"));
            }
        })
    }

    /// True when any term draws from the noise generator.
    pub fn has_noise(&self) -> bool {
        match self {
            SignalDescriptor::Noise { .. } => true,
            SignalDescriptor::Window { signal, .. } | SignalDescriptor::Scaled { signal, .. } => signal.has_noise(),
            SignalDescriptor::Piecewise { pieces, otherwise } => {
                otherwise.has_noise() || pieces.iter().any(|p| p.signal.has_noise())
            }
            SignalDescriptor::Sum { terms } => terms.iter().any(|s| s.has_noise()),
            _ => false,
        }
    }

    /// Checks parameters; `dt` is needed to compare window boundaries.
    pub fn validate(&self, dt: f64) -> Result<()> {
        match self {
            SignalDescriptor::Constant { value } => finite("constant", *value),
            SignalDescriptor::Harmonics { base_hz, terms } => {
                finite("base_hz", *base_hz)?;
                terms.iter().try_for_each(|[h, a]| {
                    finite("harmonic", *h)?;
                    finite("amplitude", *a)
                })
            }
            SignalDescriptor::Sine {
                amplitude,
                omega,
                phase,
                delay_s,
            } => [amplitude, omega, phase, delay_s]
                .into_iter()
                .try_for_each(|v| finite("sine parameter", *v)),
            SignalDescriptor::GatedSine {
                gate_period,
                on_samples,
                amplitude,
                omega,
            } => {
                finite("amplitude", *amplitude)?;
                finite("omega", *omega)?;
                if *gate_period == 0 || on_samples > gate_period {
                    return Err(Error::invalid(format!(
                        "gated sine needs 0 < on_samples <= gate_period (got {on_samples}/{gate_period})"
                    )));
                }
                Ok(())
            }
            SignalDescriptor::Window { window, signal } => {
                check_window(window)?;
                signal.validate(dt)
            }
            SignalDescriptor::Piecewise { pieces, otherwise } => {
                for (i, p) in pieces.iter().enumerate() {
                    check_window(&p.window)?;
                    p.signal.validate(dt)?;
                    if let Some(j) = pieces[..i].iter().position(|q| q.window.overlaps(&p.window, dt)) {
                        return Err(Error::invalid(format!(
                            "piecewise signal: pieces {j} and {i} overlap"
                        )));
                    }
                }
                otherwise.validate(dt)
            }
            SignalDescriptor::Sum { terms } => terms.iter().try_for_each(|s| s.validate(dt)),
            SignalDescriptor::Scaled { factor, signal } => {
                finite("factor", *factor)?;
                signal.validate(dt)
            }
            SignalDescriptor::Noise { mean, variance, .. } => {
                finite("mean", *mean)?;
                if !(*variance >= 0.0) || !variance.is_finite() {
                    return Err(Error::invalid(format!(
                        "noise variance must be finite and non-negative (got {variance})"
                    )));
                }
                Ok(())
            }
        }
    }
}

fn finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be finite (got {v})")))
    }
}

fn check_window(w: &Window) -> Result<()> {
    if let (Some(s), Some(e)) = (w.start_s, w.end_s) {
        if e < s {
            return Err(Error::invalid(format!("window ends ({e} s) before it starts ({s} s)")));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    #[serde(default)]
    pub mean: f64,
    pub variance: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn stream(&self) -> Result<GaussianStream> {
        if !(self.variance >= 0.0) || !self.variance.is_finite() {
            return Err(Error::invalid(format!(
                "noise variance must be finite and non-negative (got {})",
                self.variance
            )));
        }
        Ok(GaussianStream {
            rng: ChaCha8Rng::seed_from_u64(self.seed),
            mean: self.mean,
            std: self.variance.sqrt(),
        })
    }
}

/// Sequential `N(mean, variance)` samples.
///
/// Standard normals come from the ziggurat sampler of `rand_distr` driven by
/// ChaCha8 seeded with `seed`, then scaled by `√variance` and shifted.
#[derive(Debug, Clone)]
pub struct GaussianStream {
    rng: ChaCha8Rng,
    mean: f64,
    std: f64,
}

impl Iterator for GaussianStream {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        let z: f64 = StandardNormal.sample(&mut self.rng);
        Some(self.mean + self.std * z)
    }
}
