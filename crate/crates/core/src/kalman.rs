//! Discrete-time Kalman filter for `x(t+1) = A x(t) + B u(t) + v(t)`,
//! `y(t) = C x(t) + w(t)` with `v ~ N(0, Q)`, `w ~ N(0, R)`.

use nalgebra::{DMatrix, DVector, RealField};

use crate::error::{Error, Result};
use crate::Real;

/// Scalars usable in the dense linear algebra.
pub trait MatrixScalar: Real + RealField + Copy {}

impl MatrixScalar for f32 {}
impl MatrixScalar for f64 {}

const SYMMETRY_TOL: f64 = 1e-10;
const PSD_TOL: f64 = 1e-12;
/// Reciprocal condition of `S` below which the update is refused.
pub const MIN_INNOVATION_RCOND: f64 = 1e-12;

fn to_f64<T: MatrixScalar>(m: &DMatrix<T>) -> DMatrix<f64> {
    m.map(|x| Real::to_f64_lossy(x))
}

fn symmetrize<T: MatrixScalar>(m: &DMatrix<T>) -> DMatrix<T> {
    (m + m.transpose()) * T::lit(0.5)
}

fn check_shape<T>(name: &str, m: &DMatrix<T>, rows: usize, cols: usize) -> Result<()> {
    if m.shape() != (rows, cols) {
        return Err(Error::DimensionMismatch(format!(
            "{name} is {}x{}, expected {rows}x{cols}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

fn check_covariance<T: MatrixScalar>(name: &str, m: &DMatrix<T>) -> Result<()> {
    let m = to_f64(m);
    let scale = 1.0 + m.amax();
    if (&m - m.transpose()).amax() > SYMMETRY_TOL * scale {
        return Err(Error::invalid(format!("{name} must be symmetric")));
    }
    let sym = (&m + m.transpose()) * 0.5;
    let min = sym.symmetric_eigenvalues().min();
    if min < -PSD_TOL * scale {
        return Err(Error::invalid(format!(
            "{name} must be positive semidefinite (smallest eigenvalue {min:e})"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemModel<T: MatrixScalar> {
    pub a: DMatrix<T>,
    pub b: DMatrix<T>,
    pub c: DMatrix<T>,
    pub q: DMatrix<T>,
    pub r: DMatrix<T>,
}

impl<T: MatrixScalar> SystemModel<T> {
    pub fn new(
        a: DMatrix<T>,
        b: DMatrix<T>,
        c: DMatrix<T>,
        q: DMatrix<T>,
        r: DMatrix<T>,
    ) -> Result<Self> {
        let n = a.nrows();
        if n == 0 {
            return Err(Error::invalid("state dimension must be at least 1"));
        }
        check_shape("A", &a, n, n)?;
        check_shape("B", &b, n, b.ncols())?;
        check_shape("C", &c, c.nrows(), n)?;
        check_shape("Q", &q, n, n)?;
        let m = c.nrows();
        if m == 0 {
            return Err(Error::invalid("output dimension must be at least 1"));
        }
        check_shape("R", &r, m, m)?;
        check_covariance("Q", &q)?;
        check_covariance("R", &r)?;
        Ok(SystemModel { a, b, c, q, r })
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.b.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.c.nrows()
    }

    /// Rank test on `[C; CA; …; CA^{n-1}]`.
    pub fn is_observable(&self) -> bool {
        let (a, c) = (to_f64(&self.a), to_f64(&self.c));
        let n = self.state_dim();
        let m = self.output_dim();
        let mut obs = DMatrix::<f64>::zeros(n * m, n);
        let mut block = c;
        for i in 0..n {
            obs.view_mut((i * m, 0), (m, n)).copy_from(&block);
            block = &block * &a;
        }
        let tol = 1e-10 * (1.0 + obs.amax());
        obs.rank(tol) == n
    }

    pub fn cast<U: MatrixScalar>(&self) -> SystemModel<U> {
        let c = |m: &DMatrix<T>| m.map(|x| U::lit(Real::to_f64_lossy(x)));
        SystemModel {
            a: c(&self.a),
            b: c(&self.b),
            c: c(&self.c),
            q: c(&self.q),
            r: c(&self.r),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Predicted,
    Updated,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::Predicted => "predicted",
            Phase::Updated => "updated",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Stamp {
    pub t: i64,
    pub phase: Phase,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KalmanBelief<T: MatrixScalar> {
    pub x_hat: DVector<T>,
    pub p: DMatrix<T>,
    pub stamp: Stamp,
}

impl<T: MatrixScalar> KalmanBelief<T> {
    /// Updated belief at time `t`.
    pub fn new(x_hat: DVector<T>, p: DMatrix<T>, t: i64) -> Result<Self> {
        check_shape("P", &p, x_hat.len(), x_hat.len())?;
        check_covariance("P", &p)?;
        Ok(KalmanBelief {
            x_hat,
            p: symmetrize(&p),
            stamp: Stamp {
                t,
                phase: Phase::Updated,
            },
        })
    }

    fn expect(&self, phase: Phase) -> Result<()> {
        if self.stamp.phase != phase {
            return Err(Error::WrongPhase {
                expected: phase.name(),
                found: self.stamp.phase.name(),
            });
        }
        Ok(())
    }
}

/// `x̂(t|t-1) = A x̂ + B u`, `P(t|t-1) = A P Aᵀ + Q`.
pub fn kf_predict<T: MatrixScalar>(
    belief: &KalmanBelief<T>,
    model: &SystemModel<T>,
    u: &DVector<T>,
) -> Result<KalmanBelief<T>> {
    belief.expect(Phase::Updated)?;
    if belief.x_hat.len() != model.state_dim() {
        return Err(Error::DimensionMismatch(format!(
            "belief has {} states, model {}",
            belief.x_hat.len(),
            model.state_dim()
        )));
    }
    if u.len() != model.input_dim() {
        return Err(Error::DimensionMismatch(format!(
            "input has {} entries, model expects {}",
            u.len(),
            model.input_dim()
        )));
    }
    let x_hat = &model.a * &belief.x_hat + &model.b * u;
    let p = &model.a * &belief.p * model.a.transpose() + &model.q;
    Ok(KalmanBelief {
        x_hat,
        p: symmetrize(&p),
        stamp: Stamp {
            t: belief.stamp.t + 1,
            phase: Phase::Predicted,
        },
    })
}

/// Measurement update; returns the updated belief and the gain `g = P Cᵀ S⁻¹`.
pub fn kf_update<T: MatrixScalar>(
    belief: &KalmanBelief<T>,
    model: &SystemModel<T>,
    y: &DVector<T>,
) -> Result<(KalmanBelief<T>, DMatrix<T>)> {
    belief.expect(Phase::Predicted)?;
    if y.len() != model.output_dim() {
        return Err(Error::DimensionMismatch(format!(
            "measurement has {} entries, model expects {}",
            y.len(),
            model.output_dim()
        )));
    }
    let c = &model.c;
    let cp = c * &belief.p;
    let s = symmetrize(&(&cp * c.transpose() + &model.r));

    let s64 = to_f64(&s);
    let eig = s64.clone().symmetric_eigenvalues();
    let (lo, hi) = eig
        .iter()
        .fold((f64::INFINITY, 0.0_f64), |(lo, hi), e| (lo.min(e.abs()), hi.max(e.abs())));
    let rcond = if hi > 0.0 { lo / hi } else { 0.0 };
    if !(rcond >= MIN_INNOVATION_RCOND) {
        return Err(Error::SingularInnovation(rcond));
    }

    // S gᵀ = C P  (S and P symmetric).
    let gt = match s.clone().cholesky() {
        Some(ch) => ch.solve(&cp),
        None => s
            .lu()
            .solve(&cp)
            .ok_or(Error::SingularInnovation(rcond))?,
    };
    let g = gt.transpose();

    let innovation = y - c * &belief.x_hat;
    let x_hat = &belief.x_hat + &g * innovation;
    let n = model.state_dim();
    let p = (DMatrix::<T>::identity(n, n) - &g * c) * &belief.p;
    Ok((
        KalmanBelief {
            x_hat,
            p: symmetrize(&p),
            stamp: Stamp {
                t: belief.stamp.t,
                phase: Phase::Updated,
            },
        },
        g,
    ))
}
