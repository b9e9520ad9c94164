//! Seeded Monte-Carlo replicas of the Kalman separator.
//!
//! Replicas run in parallel, one noise seed each, and are merged in seed
//! order so the summary does not depend on scheduling.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::design::{FilterDesign, SeparationSpec};
use crate::error::{Error, Result};
use crate::kalman::SystemModel;
use crate::kfpasf::{KfPasf, KfPasfHistories};
use crate::pasf::VectorPasf;
use crate::signals::{Bounds, SignalDescriptor, Window};

/// Runs `job` once per seed on the rayon pool; results come back in seed order.
///
/// On failure the error of the first failing seed (in seed order) is returned.
pub fn run_replicas<R, F>(seeds: &[u64], job: F) -> Result<Vec<R>>
where
    R: Send,
    F: Fn(u64) -> Result<R> + Sync,
{
    let results: Vec<Result<R>> = seeds.par_iter().map(|&s| job(s)).collect();
    results.into_iter().collect()
}

/// Mean and standard deviation of each column over replicas.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub replicas: usize,
}

impl Ensemble {
    /// `rows[k][i]` is sample `i` of replica `k`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let k = rows.len();
        if k < 2 {
            return Err(Error::invalid("an ensemble needs at least two replicas"));
        }
        let len = rows[0].len();
        if rows.iter().any(|r| r.len() != len) {
            return Err(Error::invalid("replicas differ in length"));
        }
        let mut mean = vec![0.0; len];
        for r in rows {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= k as f64);
        let mut var = vec![0.0; len];
        for r in rows {
            for ((s, v), m) in var.iter_mut().zip(r).zip(&mean) {
                *s += (v - m).powi(2);
            }
        }
        let std = var.into_iter().map(|s| (s / (k - 1) as f64).sqrt()).collect();
        Ok(Ensemble { mean, std, replicas: k })
    }

    /// Standard error of the mean at sample `i`.
    pub fn std_error(&self, i: usize) -> f64 {
        self.std[i] / (self.replicas as f64).sqrt()
    }
}

/// Which estimate an error sequence belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrorKind {
    /// `x̂(t|t) - x(t)`
    Total,
    /// `x̂_p(t|t) - x_p(t)`
    Periodic,
    /// `x̂_a(t|t) - x_a(t)`
    Aperiodic,
}

impl ErrorKind {
    pub fn name(self) -> &'static str {
        match self {
            ErrorKind::Total => "e",
            ErrorKind::Periodic => "e_p",
            ErrorKind::Aperiodic => "e_a",
        }
    }
}

/// Sample mean of one error component at one probe time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeBias {
    pub step: usize,
    pub kind: ErrorKind,
    pub component: usize,
    pub mean: f64,
    pub std_error: f64,
}

impl ProbeBias {
    /// `|mean|` in units of its standard error.
    pub fn z_score(&self) -> f64 {
        if self.std_error > 0.0 {
            self.mean.abs() / self.std_error
        } else if self.mean == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloSummary {
    pub replicas: usize,
    pub probes: Vec<ProbeBias>,
    /// Time-averaged traces of the empirical covariances of `e`, `e_p`, `e_a`.
    pub trace_total: f64,
    pub trace_periodic: f64,
    pub trace_aperiodic: f64,
}

impl MonteCarloSummary {
    /// Every probe mean lies within `k` standard errors of zero.
    pub fn unbiased_within(&self, k: f64) -> bool {
        self.probes.iter().all(|p| p.z_score() <= k)
    }

    pub fn worst_probe(&self) -> Option<&ProbeBias> {
        self.probes.iter().max_by(|a, b| a.z_score().total_cmp(&b.z_score()))
    }

    /// `|tr P - (tr P_p + tr P_a)| / tr P`.
    pub fn decomposition_defect(&self) -> f64 {
        (self.trace_total - (self.trace_periodic + self.trace_aperiodic)).abs() / self.trace_total
    }
}

/// A linear plant observed by a [`KfPasf`], replayed under independent noise.
///
/// The ground-truth split is the same separator applied to the true state
/// with the same (zero) initial histories, so `e_p = F_p e` exactly.
#[derive(Debug, Clone)]
pub struct KfPasfMonteCarlo {
    pub model: SystemModel<f64>,
    pub design: FilterDesign,
    pub spec: SeparationSpec<f64>,
    /// One descriptor per input channel.
    pub input: Vec<SignalDescriptor>,
    pub process_variance: f64,
    pub measurement_variance: f64,
    pub steps: usize,
    pub probes: usize,
}

impl KfPasfMonteCarlo {
    /// Small version of the realization-comparison example: same plant rows,
    /// `Π = 50`, 1 ms sampling, 2000 steps, first-order IIR at `ρ̃ = 0.01`.
    pub fn scaled_example() -> Result<Self> {
        let dt = 0.001;
        let period = 50;
        let a = DMatrix::from_row_slice(3, 3, &[1.0, dt, 0.0, 0.0, 1.0, dt, -2500.0, -100.0, 0.0]);
        let b = DMatrix::from_column_slice(3, 1, &[0.0, 0.0, 1.0]);
        let c = DMatrix::from_row_slice(1, 3, &[1.0, 0.0, 0.0]);
        let q = DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 0.0, 1e-8]));
        let r = DMatrix::from_element(1, 1, 0.25);
        let model = SystemModel::new(a, b, c, q, r)?;
        let base_hz = 1.0 / (period as f64 * dt);
        let harmonics = SignalDescriptor::Harmonics {
            base_hz,
            terms: (1..=10).map(|i| [i as f64, 0.01 * (i * i) as f64]).collect(),
        };
        let pulse = SignalDescriptor::pulse(2.0, Window::new(Some(1.0), Some(1.03), Bounds::OpenClosed));
        let input = SignalDescriptor::scaled(
            2500.0,
            SignalDescriptor::Sum {
                terms: vec![SignalDescriptor::constant(1.0), harmonics, pulse],
            },
        );
        Ok(KfPasfMonteCarlo {
            model,
            design: FilterDesign::Iir { order: 1 },
            spec: SeparationSpec::new(0.01, period, dt)?,
            input: vec![input],
            process_variance: 1e-4,
            measurement_variance: 0.25,
            steps: 2000,
            probes: 20,
        })
    }

    /// Probe steps, evenly spaced and ending at the last step.
    pub fn probe_steps(&self) -> Vec<usize> {
        (1..=self.probes).map(|k| k * self.steps / self.probes).collect()
    }

    /// Error sequences of one replica, laid out as `[kind][component][step-1]`.
    pub fn replica(&self, seed: u64) -> Result<[Vec<Vec<f64>>; 3]> {
        let n = self.model.state_dim();
        let m = self.model.output_dim();
        if self.input.len() != self.model.input_dim() {
            return Err(Error::DimensionMismatch(format!(
                "{} input descriptors for {} inputs",
                self.input.len(),
                self.model.input_dim()
            )));
        }
        let dt = self.spec.sampling_time();
        let depth = self.design.order() * self.spec.period();
        let mut kf = KfPasf::uniform(
            self.model.clone(),
            self.design,
            &self.spec,
            KfPasfHistories::zeros(n, depth),
            DMatrix::zeros(n, n),
        )?;
        let mut truth_sep = VectorPasf::uniform(self.design, &self.spec, n)?;
        let noise = |variance: f64, stream: u64, t: i64| {
            SignalDescriptor::Noise {
                mean: 0.0,
                variance,
                stream,
            }
            .eval(t, dt, seed)
        };

        let mut errors: [Vec<Vec<f64>>; 3] = std::array::from_fn(|_| vec![Vec::with_capacity(self.steps); n]);
        let mut x = DVector::<f64>::zeros(n);
        for t in 1..=self.steps as i64 {
            let u = DVector::from_iterator(self.input.len(), self.input.iter().map(|d| d.eval(t - 1, dt, seed)));
            let noisy = DVector::from_fn(u.len(), |i, _| u[i] + noise(self.process_variance, 10 + i as u64, t - 1));
            x = &self.model.a * &x + &self.model.b * noisy;
            let y = &self.model.c * &x + DVector::from_fn(m, |i, _| noise(self.measurement_variance, 20 + i as u64, t));
            let rec = kf.step(&u, &y)?;
            let (xp, xa) = truth_sep.step(x.as_slice())?;
            for j in 0..n {
                errors[0][j].push(rec.x_pa[j] - x[j]);
                errors[1][j].push(rec.x_p[j] - xp[j]);
                errors[2][j].push(rec.x_a[j] - xa[j]);
            }
        }
        Ok(errors)
    }

    pub fn run(&self, seeds: &[u64]) -> Result<MonteCarloSummary> {
        let replicas = run_replicas(seeds, |s| self.replica(s))?;
        let n = self.model.state_dim();
        let kinds = [ErrorKind::Total, ErrorKind::Periodic, ErrorKind::Aperiodic];
        let probe_steps = self.probe_steps();
        let mut probes = Vec::new();
        let mut traces = [0.0; 3];
        for (ki, kind) in kinds.iter().enumerate() {
            for j in 0..n {
                let rows: Vec<Vec<f64>> = replicas.iter().map(|r| r[ki][j].clone()).collect();
                let ens = Ensemble::from_rows(&rows)?;
                for &s in &probe_steps {
                    probes.push(ProbeBias {
                        step: s,
                        kind: *kind,
                        component: j,
                        mean: ens.mean[s - 1],
                        std_error: ens.std_error(s - 1),
                    });
                }
                traces[ki] += ens.std.iter().map(|s| s * s).sum::<f64>() / self.steps as f64;
            }
        }
        Ok(MonteCarloSummary {
            replicas: seeds.len(),
            probes,
            trace_total: traces[0],
            trace_periodic: traces[1],
            trace_aperiodic: traces[2],
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn replicas_come_back_in_seed_order() {
        let seeds: Vec<u64> = (0..64).rev().collect();
        let out = run_replicas(&seeds, |s| Ok(s * 3)).unwrap();
        assert_eq!(out, seeds.iter().map(|s| s * 3).collect::<Vec<_>>());
    }

    #[test]
    fn first_error_in_seed_order_wins() {
        let err = run_replicas(&[5, 1, 9, 2], |s| {
            if s < 3 {
                Err(Error::invalid(format!("seed {s}")))
            } else {
                Ok(s)
            }
        })
        .unwrap_err();
        assert!(err.to_string().contains("seed 1"));
    }

    #[test]
    fn ensemble_moments() {
        let rows = vec![vec![1.0, 2.0], vec![3.0, 2.0], vec![5.0, 2.0]];
        let e = Ensemble::from_rows(&rows).unwrap();
        assert_eq!(e.mean, vec![3.0, 2.0]);
        assert_eq!(e.std, vec![2.0, 0.0]);
        assert!((e.std_error(0) - 2.0 / 3f64.sqrt()).abs() < 1e-15);
        assert!(Ensemble::from_rows(&rows[..1]).is_err());
    }

    #[test]
    fn replica_is_deterministic_and_seed_dependent() {
        let mut mc = KfPasfMonteCarlo::scaled_example().unwrap();
        mc.steps = 200;
        let a = mc.replica(3).unwrap();
        assert_eq!(a, mc.replica(3).unwrap());
        assert_ne!(a, mc.replica(4).unwrap());
    }

    #[test]
    fn noise_free_replica_has_zero_error() {
        let mut mc = KfPasfMonteCarlo::scaled_example().unwrap();
        mc.steps = 300;
        mc.process_variance = 0.0;
        mc.measurement_variance = 0.0;
        let e = mc.replica(0).unwrap();
        for kind in &e {
            for comp in kind {
                assert!(comp.iter().all(|v| v.abs() < 1e-9));
            }
        }
    }
}
