//! Kalman filter with periodic/aperiodic separation of its estimates.
//!
//! Each step runs an ordinary Kalman prediction and update and splits both
//! estimates with the separation filters. The filters' memory terms
//!
//! ```text
//! θ_p(t) = Σ_{i=1}^{N} ( -a_i x̂_p(t-iΠ|t-iΠ) + b_i x̂_pa(t-iΠ|t-iΠ) )
//! ```
//!
//! (and `θ_a` with `c_i`, `d_i`) only involve past *updated* estimates, so
//! they are computed once per step and shared by the predicted
//! `x̂_p(t|t-1) = θ_p + S_p x̂_pa(t|t-1)` and updated
//! `x̂_p(t|t) = θ_p + S_p x̂_pa(t|t)` separations.

use nalgebra::{DMatrix, DVector};

use crate::design::{FilterCoefficients, FilterDesign, FilterKind, SeparationSpec};
use crate::error::{Error, Result};
use crate::kalman::{kf_predict, kf_update, KalmanBelief, MatrixScalar, SystemModel};
use crate::pasf::DelayLine;

/// `N·Π`-deep histories of updated estimates, oldest first.
///
/// The newest entry of `pa` is the initial estimate `x̂(0|0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KfPasfHistories<T: MatrixScalar> {
    pub pa: Vec<DVector<T>>,
    pub p: Vec<DVector<T>>,
    pub a: Vec<DVector<T>>,
}

impl<T: MatrixScalar> KfPasfHistories<T> {
    pub fn zeros(dim: usize, depth: usize) -> Self {
        Self::constant(&DVector::zeros(dim), &DVector::zeros(dim), &DVector::zeros(dim), depth)
    }

    pub fn constant(pa: &DVector<T>, p: &DVector<T>, a: &DVector<T>, depth: usize) -> Self {
        KfPasfHistories {
            pa: vec![pa.clone(); depth],
            p: vec![p.clone(); depth],
            a: vec![a.clone(); depth],
        }
    }
}

/// Everything one step produces.
#[derive(Debug, Clone, PartialEq)]
pub struct KfPasfRecord<T: MatrixScalar> {
    pub t: i64,
    pub x_pa_pred: DVector<T>,
    pub x_p_pred: DVector<T>,
    pub x_a_pred: DVector<T>,
    pub x_pa: DVector<T>,
    pub x_p: DVector<T>,
    pub x_a: DVector<T>,
    pub p: DMatrix<T>,
    pub gain: DMatrix<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KfPasf<T: MatrixScalar> {
    model: SystemModel<T>,
    belief: KalmanBelief<T>,
    p_coeffs: Vec<FilterCoefficients<T>>,
    a_coeffs: Vec<FilterCoefficients<T>>,
    design: Option<FilterDesign>,
    hist_pa: DelayLine<DVector<T>>,
    hist_p: DelayLine<DVector<T>>,
    hist_a: DelayLine<DVector<T>>,
    poisoned: bool,
}

impl<T: MatrixScalar> KfPasf<T> {
    /// `p_coeffs[j]`, `a_coeffs[j]` separate state component `j`; all must
    /// share `N` and `Π`.
    pub fn init(
        model: SystemModel<T>,
        p_coeffs: Vec<FilterCoefficients<T>>,
        a_coeffs: Vec<FilterCoefficients<T>>,
        histories: KfPasfHistories<T>,
        p0: DMatrix<T>,
    ) -> Result<Self> {
        let n = model.state_dim();
        if p_coeffs.len() != n || a_coeffs.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "need {n} coefficient pairs, got {} periodic and {} aperiodic",
                p_coeffs.len(),
                a_coeffs.len()
            )));
        }
        let (order, period) = (p_coeffs[0].order(), p_coeffs[0].period());
        for (p, a) in p_coeffs.iter().zip(&a_coeffs) {
            if p.kind() != FilterKind::PeriodicPass || a.kind() != FilterKind::AperiodicPass {
                return Err(Error::invalid("coefficient pairs must be (periodic-pass, aperiodic-pass)"));
            }
            if p.order() != order || a.order() != order || p.period() != period || a.period() != period {
                return Err(Error::invalid("all coefficient sets must share N and Π"));
            }
        }
        let depth = order * period;
        for (name, h) in [("x_pa", &histories.pa), ("x_p", &histories.p), ("x_a", &histories.a)] {
            if h.len() != depth {
                return Err(Error::invalid(format!(
                    "{name} history needs N·Π = {depth} entries, got {}",
                    h.len()
                )));
            }
            if let Some(bad) = h.iter().find(|v| v.len() != n) {
                return Err(Error::DimensionMismatch(format!(
                    "{name} history entry has {} components, state has {n}",
                    bad.len()
                )));
            }
        }
        let x0 = histories.pa[depth - 1].clone();
        let belief = KalmanBelief::new(x0, p0, 0)?;
        Ok(KfPasf {
            model,
            belief,
            p_coeffs,
            a_coeffs,
            design: None,
            hist_pa: DelayLine::from_history(&histories.pa),
            hist_p: DelayLine::from_history(&histories.p),
            hist_a: DelayLine::from_history(&histories.a),
            poisoned: false,
        })
    }

    /// One design replicated on every state component.
    pub fn uniform(
        model: SystemModel<T>,
        design: FilterDesign,
        spec: &SeparationSpec<T>,
        histories: KfPasfHistories<T>,
        p0: DMatrix<T>,
    ) -> Result<Self> {
        let (p, a) = design.design(spec)?;
        let n = model.state_dim();
        let mut f = Self::init(model, vec![p; n], vec![a; n], histories, p0)?;
        f.design = Some(design);
        Ok(f)
    }

    pub fn model(&self) -> &SystemModel<T> {
        &self.model
    }

    pub fn belief(&self) -> &KalmanBelief<T> {
        &self.belief
    }

    pub fn order(&self) -> usize {
        self.p_coeffs[0].order()
    }

    pub fn period(&self) -> usize {
        self.p_coeffs[0].period()
    }

    /// `(θ_p, θ_a)` from the buffered updated estimates.
    fn memory_terms(&self) -> (DVector<T>, DVector<T>) {
        let n = self.model.state_dim();
        let period = self.period();
        let mut theta_p = DVector::<T>::zeros(n);
        let mut theta_a = DVector::<T>::zeros(n);
        for i in 1..=self.order() {
            let lag = i * period;
            let (pa, p, a) = (self.hist_pa.tap(lag), self.hist_p.tap(lag), self.hist_a.tap(lag));
            for j in 0..n {
                let (pc, ac) = (&self.p_coeffs[j], &self.a_coeffs[j]);
                theta_p[j] += pc.feedforward()[i] * pa[j] - pc.feedback()[i - 1] * p[j];
                theta_a[j] += ac.feedforward()[i] * pa[j] - ac.feedback()[i - 1] * a[j];
            }
        }
        (theta_p, theta_a)
    }

    fn split(&self, theta_p: &DVector<T>, theta_a: &DVector<T>, x: &DVector<T>) -> (DVector<T>, DVector<T>) {
        let p = DVector::from_fn(x.len(), |j, _| theta_p[j] + self.p_coeffs[j].feedforward()[0] * x[j]);
        let a = DVector::from_fn(x.len(), |j, _| theta_a[j] + self.a_coeffs[j].feedforward()[0] * x[j]);
        (p, a)
    }

    /// Advances from `t-1` to `t` with input `u(t-1)` and measurement `y(t)`.
    pub fn step(&mut self, u_prev: &DVector<T>, y: &DVector<T>) -> Result<KfPasfRecord<T>> {
        if self.poisoned {
            return Err(Error::Poisoned);
        }
        if u_prev.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            self.poisoned = true;
            return Err(Error::Poisoned);
        }
        let pred = kf_predict(&self.belief, &self.model, u_prev)?;
        let (theta_p, theta_a) = self.memory_terms();
        let (x_p_pred, x_a_pred) = self.split(&theta_p, &theta_a, &pred.x_hat);

        let (upd, gain) = kf_update(&pred, &self.model, y)?;
        let (x_p, x_a) = self.split(&theta_p, &theta_a, &upd.x_hat);
        if upd.x_hat.iter().chain(x_p.iter()).chain(x_a.iter()).any(|v| !v.is_finite()) {
            self.poisoned = true;
            return Err(Error::Poisoned);
        }

        self.hist_pa.push(upd.x_hat.clone());
        self.hist_p.push(x_p.clone());
        self.hist_a.push(x_a.clone());
        let record = KfPasfRecord {
            t: upd.stamp.t,
            x_pa_pred: pred.x_hat,
            x_p_pred,
            x_a_pred,
            x_pa: upd.x_hat.clone(),
            x_p,
            x_a,
            p: upd.p.clone(),
            gain,
        };
        self.belief = upd;
        Ok(record)
    }

    /// Swaps in new per-component coefficients; histories and belief are kept.
    pub fn reconfigure(
        &mut self,
        p_coeffs: Vec<FilterCoefficients<T>>,
        a_coeffs: Vec<FilterCoefficients<T>>,
    ) -> Result<()> {
        let n = self.model.state_dim();
        if p_coeffs.len() != n || a_coeffs.len() != n {
            return Err(Error::DimensionMismatch(format!("need {n} coefficient pairs")));
        }
        let (order, period) = (self.order(), self.period());
        if p_coeffs
            .iter()
            .chain(&a_coeffs)
            .any(|c| c.order() != order || c.period() != period)
        {
            return Err(Error::UnsupportedReconfiguration(format!(
                "estimator is fixed at N={order}, Π={period}"
            )));
        }
        self.p_coeffs = p_coeffs;
        self.a_coeffs = a_coeffs;
        Ok(())
    }

    /// Redesigns every component for a new separation frequency.
    pub fn reconfigure_spec(&mut self, spec: &SeparationSpec<T>) -> Result<()> {
        let design = self.design.ok_or_else(|| {
            Error::UnsupportedReconfiguration("estimator was built without a design recipe".into())
        })?;
        let (p, a) = design.design(spec)?;
        let n = self.model.state_dim();
        self.reconfigure(vec![p; n], vec![a; n])
    }
}
