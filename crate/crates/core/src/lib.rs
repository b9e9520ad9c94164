//! Periodic/aperiodic separation of sampled states.
//!
//! A signal `x(t)` is lifted onto `Π` phase channels `x_τ(k)`; low lifted
//! frequencies (`|ω| ≤ ρ`) form the quasi-periodic part and high lifted
//! frequencies the quasi-aperiodic part. The filters here realize that split
//! with delays at multiples of `Π`, and [`kfpasf`] combines the split with a
//! Kalman filter so both parts can be estimated from noisy measurements.
//!
//! The numeric core is generic over the scalar type through [`Real`]
//! (`f32` and `f64`). Scenario plumbing, signal generators and CSV export
//! work in `f64`; the aliases at the crate root name the common concrete
//! instantiations.

pub mod baselines;
pub mod table;
pub mod design;
pub mod error;
pub mod kalman;
pub mod kfpasf;
pub mod lifting;
pub mod metrics;
pub mod montecarlo;
pub mod pasf;
pub mod response;
pub mod scenario;
pub mod signals;

use std::fmt::{Debug, Display, LowerExp};

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

pub use error::{Error, Result};

/// Floating-point scalar used throughout the filter and estimator code.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Debug
    + Display
    + LowerExp
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal. Never fails for the implemented types.
    fn lit(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("f64 literal representable")
    }

    fn to_f64_lossy(self) -> f64 {
        <Self as ToPrimitive>::to_f64(&self).unwrap_or(f64::NAN)
    }

    fn of_usize(n: usize) -> Self {
        Self::lit(n as f64)
    }
}

impl Real for f32 {}
impl Real for f64 {}

pub use baselines::{design_comb, CombSeparator, CombSpec, CombVariant};
pub use design::{
    check_stability, design_fir_equiripple, design_iir, make_complementary, FilterCoefficients,
    FilterDesign, FilterKind, Realization, SeparationSpec, StabilityReport,
};
pub use kalman::{KalmanBelief, MatrixScalar, SystemModel};
pub use kfpasf::{KfPasf, KfPasfRecord};
pub use lifting::{lift, split_index, unlift, LiftedIndex};
pub use pasf::{Pasf, VectorPasf};
pub use response::{bode_table, eval_response, BodeRow, BodeTable, FrequencyGrid};

pub type FilterCoefficientsF64 = FilterCoefficients<f64>;
pub type FilterCoefficientsF32 = FilterCoefficients<f32>;
pub type SeparationSpecF64 = SeparationSpec<f64>;
pub type SeparationSpecF32 = SeparationSpec<f32>;
pub type PasfF64 = Pasf<f64>;
pub type PasfF32 = Pasf<f32>;
pub type VectorPasfF64 = VectorPasf<f64>;
pub type BodeTableF64 = BodeTable<f64>;
pub type SystemModelF64 = SystemModel<f64>;
pub type KalmanBeliefF64 = KalmanBelief<f64>;
pub type KfPasfF64 = KfPasf<f64>;
pub type KfPasfF32 = KfPasf<f32>;
