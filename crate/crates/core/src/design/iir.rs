use super::{FilterCoefficients, FilterKind, Realization, SeparationSpec};
use crate::error::{Error, Result};
use crate::Real;

/// Orders above this are rejected: repeated convolution of the base
/// section loses accuracy quickly beyond it.
pub const MAX_IIR_ORDER: usize = 8;

fn convolve<T: Real>(x: &[T], y: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); x.len() + y.len() - 1];
    for (i, xi) in x.iter().enumerate() {
        for (j, yj) in y.iter().enumerate() {
            out[i + j] += *xi * *yj;
        }
    }
    out
}

fn power<T: Real>(base: &[T], n: usize) -> Vec<T> {
    (1..n).fold(base.to_vec(), |acc, _| convolve(&acc, base))
}

/// Bilinear-transformed `N`th-order periodic-pass/aperiodic-pass pair.
///
/// With `ρ = ρ̃ΠT` and `w = 𝒵⁻¹`:
///
/// ```text
/// F_p = ( ρ(1 + w) / ((2 + ρ) + (ρ - 2) w) )^N
/// F_a = ( 2(1 - w) / ((2 + ρ) + (ρ - 2) w) )^N
/// ```
///
/// No frequency prewarping is applied. Both filters share the denominator.
pub fn design_iir<T: Real>(
    spec: &SeparationSpec<T>,
    order: usize,
) -> Result<(FilterCoefficients<T>, FilterCoefficients<T>)> {
    if order == 0 {
        return Err(Error::invalid("IIR order must be at least 1"));
    }
    if order > MAX_IIR_ORDER {
        return Err(Error::invalid(format!(
            "IIR order {order} exceeds the supported maximum {MAX_IIR_ORDER}"
        )));
    }
    let rho = spec.normalized();
    if !(rho > T::zero()) {
        return Err(Error::DegenerateDesign(spec.rho_tilde().to_f64_lossy()));
    }
    if !spec.is_wide_band() && rho > T::PI() {
        return Err(Error::OutOfBand(rho.to_f64_lossy()));
    }

    let two = T::lit(2.0);
    let den = power(&[two + rho, rho - two], order);
    let num_p = power(&[rho, rho], order);
    let num_a = power(&[two, -two], order);

    let scale = den[0];
    let normalize = |v: Vec<T>| -> Vec<T> { v.into_iter().map(|c| c / scale).collect() };
    let feedback: Vec<T> = normalize(den)[1..].to_vec();

    let p = FilterCoefficients::new(
        FilterKind::PeriodicPass,
        Realization::Iir,
        spec.period(),
        spec.sampling_time(),
        feedback.clone(),
        normalize(num_p),
    )?;
    let a = FilterCoefficients::new(
        FilterKind::AperiodicPass,
        Realization::Iir,
        spec.period(),
        spec.sampling_time(),
        feedback,
        normalize(num_a),
    )?;
    Ok((p, a))
}
