use nalgebra::DMatrix;

use super::FilterCoefficients;
use crate::Real;

/// Roots must stay below this magnitude to count as stable.
const STABILITY_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityReport<T> {
    pub stable: bool,
    pub max_root_magnitude: T,
}

/// Pole check for `1 + Σ a_i 𝒵⁻ⁱ` via the eigenvalues of its companion matrix.
///
/// Roots are computed in double precision regardless of `T`.
pub fn check_stability<T: Real>(coeffs: &FilterCoefficients<T>) -> StabilityReport<T> {
    let a: Vec<f64> = coeffs.feedback().iter().map(|c| c.to_f64_lossy()).collect();
    let n = a.len();
    if a.iter().all(|c| *c == 0.0) {
        return StabilityReport {
            stable: true,
            max_root_magnitude: T::zero(),
        };
    }
    // Companion matrix of 𝒵ᴺ + a_1 𝒵ᴺ⁻¹ + … + a_N.
    let mut companion = DMatrix::<f64>::zeros(n, n);
    for (j, c) in a.iter().enumerate() {
        companion[(0, j)] = -c;
    }
    for i in 1..n {
        companion[(i, i - 1)] = 1.0;
    }
    let max = companion
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0_f64, f64::max);
    StabilityReport {
        stable: max < 1.0 - STABILITY_MARGIN,
        max_root_magnitude: T::lit(max),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{FilterKind, Realization};

    fn iir(feedback: Vec<f64>) -> FilterCoefficients<f64> {
        let n = feedback.len();
        FilterCoefficients::new(
            FilterKind::PeriodicPass,
            Realization::Iir,
            10,
            0.01,
            feedback,
            vec![1.0; n + 1],
        )
        .unwrap()
    }

    #[test]
    fn fir_is_trivially_stable() {
        let r = check_stability(&iir(vec![0.0, 0.0, 0.0]));
        assert!(r.stable);
        assert_eq!(r.max_root_magnitude, 0.0);
    }

    #[test]
    fn pole_on_unit_circle_is_unstable() {
        let r = check_stability(&iir(vec![-1.0]));
        assert!(!r.stable);
        assert!((r.max_root_magnitude - 1.0).abs() < 1e-12);
    }

    #[test]
    fn complex_pair() {
        // (1 - 0.9 e^{jπ/4} w)(1 - 0.9 e^{-jπ/4} w)
        let r = 0.9_f64;
        let th = std::f64::consts::FRAC_PI_4;
        let rep = check_stability(&iir(vec![-2.0 * r * th.cos(), r * r]));
        assert!(rep.stable);
        assert!((rep.max_root_magnitude - 0.9).abs() < 1e-12);
    }
}
