//! Equiripple linear-phase FIR design by Remez exchange.
//!
//! Designs a type-I (even order, symmetric) low-pass on the lifted frequency
//! axis. Its amplitude `A(ω) = Σ_{k=0}^{M} α_k cos(kω)`, `M = N/2`, is
//! handled as a degree-`M` polynomial in `x = cos ω` and evaluated through
//! barycentric Lagrange interpolation on the current extremal set.

use std::f64::consts::PI;

use super::{FilterCoefficients, FilterKind, Realization, SeparationSpec};
use crate::error::{Error, Result};
use crate::Real;

pub const REMEZ_MAX_ITERATIONS: usize = 25;
/// Convergence when `(max|E| - |δ|) / max|E|` falls below this.
pub const REMEZ_TOLERANCE: f64 = 1e-7;
/// Dense grid holds about `GRID_DENSITY · N` points across both bands.
const GRID_DENSITY: usize = 16;
const MIN_BAND_POINTS: usize = 8;

/// Diagnostics from a converged design.
#[derive(Debug, Clone, PartialEq)]
pub struct RemezReport {
    pub iterations: usize,
    /// Weighted ripple `|δ|`; passband deviation is `|δ|`, stopband `|δ| / weight`.
    pub ripple: f64,
    /// Final extremal frequencies in rad/sample.
    pub extremal_frequencies: Vec<f64>,
}

struct Grid {
    omega: Vec<f64>,
    x: Vec<f64>,
    desired: Vec<f64>,
    weight: Vec<f64>,
    /// `[start, end)` index range of each band.
    bands: Vec<(usize, usize)>,
}

impl Grid {
    fn new(order: usize, pass: f64, stop: f64, stop_weight: f64) -> Self {
        let specs = [(0.0, pass, 1.0, 1.0), (stop, PI, 0.0, stop_weight)];
        let total_width: f64 = specs.iter().map(|(lo, hi, _, _)| hi - lo).sum();
        let target = (GRID_DENSITY * order) as f64;
        let mut g = Grid {
            omega: Vec::new(),
            x: Vec::new(),
            desired: Vec::new(),
            weight: Vec::new(),
            bands: Vec::new(),
        };
        for (lo, hi, d, w) in specs {
            let width = hi - lo;
            let count = if width > 0.0 {
                ((target * width / total_width).ceil() as usize).max(MIN_BAND_POINTS)
            } else {
                1
            };
            let start = g.omega.len();
            for i in 0..count {
                let om = if count == 1 {
                    lo
                } else {
                    lo + width * i as f64 / (count - 1) as f64
                };
                g.omega.push(om);
                g.x.push(om.cos());
                g.desired.push(d);
                g.weight.push(w);
            }
            g.bands.push((start, g.omega.len()));
        }
        g
    }

    fn len(&self) -> usize {
        self.omega.len()
    }
}

/// Barycentric weights `1/Π_{j≠i}(x_i - x_j)`, rescaled by a common factor.
fn barycentric_weights(x: &[f64]) -> Vec<f64> {
    let logs: Vec<(f64, f64)> = x
        .iter()
        .enumerate()
        .map(|(i, xi)| {
            let mut log = 0.0;
            let mut sign = 1.0;
            for (j, xj) in x.iter().enumerate() {
                if i != j {
                    let d = xi - xj;
                    log -= d.abs().ln();
                    if d < 0.0 {
                        sign = -sign;
                    }
                }
            }
            (log, sign)
        })
        .collect();
    let max = logs.iter().map(|(l, _)| *l).fold(f64::NEG_INFINITY, f64::max);
    logs.into_iter().map(|(l, s)| s * (l - max).exp()).collect()
}

struct Interpolant {
    nodes: Vec<f64>,
    values: Vec<f64>,
    weights: Vec<f64>,
}

impl Interpolant {
    fn eval(&self, x: f64) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for ((xi, yi), wi) in self.nodes.iter().zip(&self.values).zip(&self.weights) {
            let d = x - xi;
            if d == 0.0 {
                return *yi;
            }
            let t = wi / d;
            num += t * yi;
            den += t;
        }
        num / den
    }
}

/// Picks `count` alternating extrema of `err`, honoring band boundaries.
fn select_extrema(err: &[f64], bands: &[(usize, usize)], count: usize) -> Option<Vec<usize>> {
    let mut cand: Vec<usize> = Vec::new();
    for &(start, end) in bands {
        for j in start..end {
            let e = err[j];
            let left = if j > start { Some(err[j - 1]) } else { None };
            let right = if j + 1 < end { Some(err[j + 1]) } else { None };
            let is_ext = if e > 0.0 {
                left.is_none_or(|l| e >= l) && right.is_none_or(|r| e >= r)
            } else if e < 0.0 {
                left.is_none_or(|l| e <= l) && right.is_none_or(|r| e <= r)
            } else {
                false
            };
            if is_ext {
                cand.push(j);
            }
        }
    }

    let merge_same_sign = |cand: &mut Vec<usize>| {
        let mut out: Vec<usize> = Vec::with_capacity(cand.len());
        for &j in cand.iter() {
            match out.last() {
                Some(&k) if err[k].signum() == err[j].signum() => {
                    if err[j].abs() > err[k].abs() {
                        *out.last_mut().unwrap() = j;
                    }
                }
                _ => out.push(j),
            }
        }
        *cand = out;
    };
    merge_same_sign(&mut cand);

    // Dropping an interior point merges its neighbours too, so with a
    // single surplus point only an end may go.
    while cand.len() > count {
        if cand.len() == count + 1 {
            let last = cand.len() - 1;
            if err[cand[0]].abs() < err[cand[last]].abs() {
                cand.remove(0);
            } else {
                cand.remove(last);
            }
            continue;
        }
        let (pos, _) = cand
            .iter()
            .enumerate()
            .min_by(|a, b| err[*a.1].abs().total_cmp(&err[*b.1].abs()))?;
        cand.remove(pos);
        merge_same_sign(&mut cand);
    }
    (cand.len() == count).then_some(cand)
}

/// Equiripple low-pass impulse response of even `order` (length `order + 1`).
///
/// Passband `[0, passband_edge]` targets 1 with weight 1, stopband
/// `[stopband_edge, π]` targets 0 with weight `stop_weight`.
pub fn remez_lowpass(
    order: usize,
    passband_edge: f64,
    stopband_edge: f64,
    stop_weight: f64,
) -> Result<(Vec<f64>, RemezReport)> {
    if order < 4 || order % 2 != 0 {
        return Err(Error::invalid(format!(
            "FIR order must be even and at least 4, got {order}"
        )));
    }
    if !(passband_edge > 0.0 && passband_edge < stopband_edge && stopband_edge <= PI) {
        return Err(Error::invalid(format!(
            "band edges must satisfy 0 < passband ({passband_edge}) < stopband ({stopband_edge}) <= pi"
        )));
    }
    if !(stop_weight > 0.0) || !stop_weight.is_finite() {
        return Err(Error::invalid("weight ratio must be positive"));
    }

    let m = order / 2;
    let grid = Grid::new(order, passband_edge, stopband_edge, stop_weight);
    let g = grid.len();
    let mut ext: Vec<usize> = (0..m + 2).map(|i| i * (g - 1) / (m + 1)).collect();
    let mut err = vec![0.0; g];

    let mut last_spread = f64::INFINITY;
    let mut last_delta = 0.0;
    for iteration in 1..=REMEZ_MAX_ITERATIONS {
        let xe: Vec<f64> = ext.iter().map(|&j| grid.x[j]).collect();
        let bw = barycentric_weights(&xe);
        let alt = |i: usize| if i % 2 == 0 { 1.0 } else { -1.0 };
        let (mut num, mut den) = (0.0, 0.0);
        for (i, &j) in ext.iter().enumerate() {
            num += bw[i] * grid.desired[j];
            den += bw[i] * alt(i) / grid.weight[j];
        }
        let delta = num / den;
        let values: Vec<f64> = ext
            .iter()
            .enumerate()
            .map(|(i, &j)| grid.desired[j] - alt(i) * delta / grid.weight[j])
            .collect();
        let interp = Interpolant {
            weights: barycentric_weights(&xe[..=m]),
            nodes: xe[..=m].to_vec(),
            values: values[..=m].to_vec(),
        };

        for j in 0..g {
            err[j] = grid.weight[j] * (grid.desired[j] - interp.eval(grid.x[j]));
        }
        let max_err = err.iter().fold(0.0_f64, |acc, e| acc.max(e.abs()));
        let spread = if max_err > 0.0 {
            (max_err - delta.abs()) / max_err
        } else {
            0.0
        };
        last_spread = spread;
        last_delta = delta.abs();

        if spread <= REMEZ_TOLERANCE {
            let taps = impulse_response(&interp, order);
            let report = RemezReport {
                iterations: iteration,
                ripple: delta.abs(),
                extremal_frequencies: ext.iter().map(|&j| grid.omega[j]).collect(),
            };
            return Ok((taps, report));
        }

        ext = select_extrema(&err, &grid.bands, m + 2).ok_or(Error::DesignFailure {
            iterations: iteration,
            ripple: delta.abs(),
            spread,
        })?;
    }
    Err(Error::DesignFailure {
        iterations: REMEZ_MAX_ITERATIONS,
        ripple: last_delta,
        spread: last_spread,
    })
}

/// Recovers `h[0..=N]` from the amplitude polynomial by sampling it at
/// `2πk/(N+1)`; exact for a degree-`M` cosine polynomial.
fn impulse_response(interp: &Interpolant, order: usize) -> Vec<f64> {
    let len = order + 1;
    let m = order / 2;
    let amps: Vec<f64> = (0..=m)
        .map(|k| interp.eval((2.0 * PI * k as f64 / len as f64).cos()))
        .collect();
    (0..len)
        .map(|n| {
            let offset = n as f64 - m as f64;
            let mut acc = amps[0];
            for (k, a) in amps.iter().enumerate().skip(1) {
                acc += 2.0 * a * (2.0 * PI * k as f64 * offset / len as f64).cos();
            }
            acc / len as f64
        })
        .collect()
}

/// Equiripple periodic-pass (low-pass) and aperiodic-pass (high-pass) pair.
///
/// The high-pass is the delay complement `h_a[n] = δ[n - N/2] - h_p[n]`,
/// which keeps linear phase and inherits the equiripple error. Edges are in
/// rad/sample of the lifted axis; `weight_ratio` weights the stopband
/// relative to the passband. Coefficients are computed in `f64`.
pub fn design_fir_equiripple<T: Real>(
    spec: &SeparationSpec<T>,
    order: usize,
    passband_edge: f64,
    stopband_edge: f64,
    weight_ratio: f64,
) -> Result<(FilterCoefficients<T>, FilterCoefficients<T>)> {
    let (taps, _) = remez_lowpass(order, passband_edge, stopband_edge, weight_ratio)?;
    let m = order / 2;
    let high: Vec<f64> = taps
        .iter()
        .enumerate()
        .map(|(n, h)| if n == m { 1.0 - h } else { -h })
        .collect();
    let to_t = |v: Vec<f64>| v.into_iter().map(T::lit).collect::<Vec<T>>();
    let p = FilterCoefficients::new(
        FilterKind::PeriodicPass,
        Realization::Fir,
        spec.period(),
        spec.sampling_time(),
        vec![T::zero(); order],
        to_t(taps),
    )?;
    let a = FilterCoefficients::new(
        FilterKind::AperiodicPass,
        Realization::Fir,
        spec.period(),
        spec.sampling_time(),
        vec![T::zero(); order],
        to_t(high),
    )?;
    Ok((p, a))
}
