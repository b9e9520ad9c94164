//! Index algebra between the sample axis `t` and the lifted axes `(k, τ)`.
//!
//! `t = k·Π + τ` with `0 ≤ τ < Π`. The phase offset uses the Euclidean
//! remainder so negative sample indices land on a non-negative `τ`.

use crate::error::{Error, Result};

/// A sample index rewritten as lifted sample `k` and phase offset `tau`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LiftedIndex {
    pub k: i64,
    pub tau: usize,
    pub period: usize,
}

impl LiftedIndex {
    /// The fast-axis sample index `k·Π + τ`.
    pub fn sample_index(&self) -> i64 {
        self.k * self.period as i64 + self.tau as i64
    }
}

fn check_period(period: usize) -> Result<()> {
    if period == 0 {
        return Err(Error::invalid("period must be at least 1"));
    }
    Ok(())
}

pub fn split_index(t: i64, period: usize) -> Result<LiftedIndex> {
    check_period(period)?;
    let p = period as i64;
    let tau = t.rem_euclid(p);
    Ok(LiftedIndex {
        k: t.div_euclid(p),
        tau: tau as usize,
        period,
    })
}

/// Splits `sequence` (sample 0 at `t = 0`) into `period` phase channels.
pub fn lift<T: Copy>(sequence: &[T], period: usize) -> Result<Vec<Vec<T>>> {
    check_period(period)?;
    let mut channels: Vec<Vec<T>> = (0..period)
        .map(|tau| Vec::with_capacity(sequence.len() / period + usize::from(tau < sequence.len() % period)))
        .collect();
    for (t, &x) in sequence.iter().enumerate() {
        channels[t % period].push(x);
    }
    Ok(channels)
}

/// Interleaves phase channels back onto the sample axis.
///
/// The channel lengths must describe a contiguous range starting at `t = 0`:
/// some prefix of channels holds `L` samples and the rest `L - 1`.
pub fn unlift<T: Copy>(channels: &[Vec<T>], period: usize) -> Result<Vec<T>> {
    check_period(period)?;
    if channels.len() != period {
        return Err(Error::invalid(format!(
            "expected {period} channels, got {}",
            channels.len()
        )));
    }
    let longest = channels[0].len();
    let mut seen_short = false;
    for (tau, ch) in channels.iter().enumerate() {
        let len = ch.len();
        if len == longest && !seen_short {
            continue;
        }
        if longest > 0 && len == longest - 1 {
            seen_short = true;
            continue;
        }
        return Err(Error::invalid(format!(
            "channel {tau} has {len} samples, inconsistent with a contiguous range (channel 0 has {longest})"
        )));
    }
    let total: usize = channels.iter().map(Vec::len).sum();
    Ok((0..total).map(|t| channels[t % period][t / period]).collect())
}
