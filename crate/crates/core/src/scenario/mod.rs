//! Declarative simulation scenarios.
//!
//! A scenario is a TOML document with a shared header (sampling time,
//! period, duration, separation-frequency schedule, filter realizations)
//! and exactly one of two experiment sections:
//!
//! * `[estimation]` — a linear plant driven by inputs and noise, observed by
//!   one Kalman separator per realization, optionally closed by a PD law on
//!   the separated estimates;
//! * `[separation]` — a synthetic periodic + aperiodic signal split directly
//!   by the separators and by comb filters.
//!
//! Every waveform, schedule and noise source is a [`SignalDescriptor`]. The
//! four worked examples ship as built-ins (`sec51` … `sec54`).

mod plot;
mod run;

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::design::{FilterDesign, FirBands, SeparationSpec};
use crate::error::{Error, Result};
use crate::kalman::SystemModel;
use crate::signals::{SignalDescriptor, Window};
use crate::table::{format_g, write_text, Table};

pub use run::run_scenario;

pub const DEFAULT_SEED: u64 = 1;

const BUILTINS: [(&str, &str); 4] = [
    ("sec51", include_str!("builtin/sec51.toml")),
    ("sec52", include_str!("builtin/sec52.toml")),
    ("sec53", include_str!("builtin/sec53.toml")),
    ("sec54", include_str!("builtin/sec54.toml")),
];

pub fn builtin_names() -> impl Iterator<Item = &'static str> {
    BUILTINS.iter().map(|(n, _)| *n)
}

/// Source text of a built-in scenario.
pub fn builtin_source(name: &str) -> Option<&'static str> {
    BUILTINS.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub sampling_time: f64,
    pub period: usize,
    pub duration_s: f64,
    /// Separation frequency in rad/s as a function of time.
    pub rho_tilde: SignalDescriptor,
    #[serde(default)]
    pub realizations: Vec<RealizationChoice>,
    pub estimation: Option<Estimation>,
    pub separation: Option<Separation>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RealizationKind {
    Iir,
    Fir,
    ComplementaryIir,
    ComplementaryFir,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RealizationChoice {
    pub realization: RealizationKind,
    pub order: usize,
    /// FIR pass/stop edges in rad/sample of the lifted axis; defaults to `(ρ, min(π, 3ρ))`.
    pub edges: Option<[f64; 2]>,
    /// FIR stopband weight relative to the passband.
    pub weight_ratio: Option<f64>,
}

impl RealizationChoice {
    pub fn new(realization: RealizationKind, order: usize) -> Self {
        RealizationChoice {
            realization,
            order,
            edges: None,
            weight_ratio: None,
        }
    }

    pub fn design(&self) -> FilterDesign {
        let bands = FirBands {
            edges: self.edges.map(|[p, s]| (p, s)),
            weight_ratio: self.weight_ratio.unwrap_or(1.0),
        };
        match self.realization {
            RealizationKind::Iir => FilterDesign::Iir { order: self.order },
            RealizationKind::Fir => FilterDesign::Fir { order: self.order, bands },
            RealizationKind::ComplementaryIir => FilterDesign::ComplementaryIir { order: self.order },
            RealizationKind::ComplementaryFir => FilterDesign::ComplementaryFir { order: self.order, bands },
        }
    }

    pub fn label(&self) -> String {
        self.design().label()
    }

    fn is_iir(&self) -> bool {
        matches!(self.realization, RealizationKind::Iir | RealizationKind::ComplementaryIir)
    }

    /// Spec for `rho_tilde`; IIR designs also accept `ρ̃ΠT > π`.
    pub fn spec(&self, rho_tilde: f64, period: usize, dt: f64) -> Result<SeparationSpec<f64>> {
        match SeparationSpec::new(rho_tilde, period, dt) {
            Err(Error::OutOfBand(_)) if self.is_iir() => SeparationSpec::wide_band(rho_tilde, period, dt),
            other => other,
        }
    }
}

/// Plant, Kalman model and inputs of an estimation experiment.
///
/// The plant is `x(t+1) = A x(t) + B (u(t) + v(t))`, `y(t) = C x(t) + w(t)`
/// and the estimator uses the same `A, B, C` with covariances `Q, R`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Estimation {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    pub c: Vec<Vec<f64>>,
    pub q: Vec<Vec<f64>>,
    pub r: Vec<Vec<f64>>,
    /// `P(0|0)`; zero when omitted.
    pub p0: Option<Vec<Vec<f64>>>,
    /// Open-loop input per channel; zero when omitted.
    #[serde(default)]
    pub input: Vec<SignalDescriptor>,
    /// `v`, one per input channel.
    pub process_noise: Vec<SignalDescriptor>,
    /// `w`, one per output channel.
    pub measurement_noise: Vec<SignalDescriptor>,
    pub periodic_twin: Option<PeriodicTwin>,
    pub controller: Option<Controller>,
    /// Where to measure `x̂_p - x_p` (needs `periodic_twin`).
    pub interference_window: Option<Window>,
    #[serde(default)]
    pub interference_state: usize,
    /// Where to measure command tracking (needs `controller`).
    pub tracking_window: Option<Window>,
}

/// Noise-free copy of the plant driven by the periodic part of the input.
///
/// It is pre-run for `settle_s` plus the deepest separator history, then
/// supplies the initial state, warm-start histories and the periodic
/// ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeriodicTwin {
    pub input: Vec<SignalDescriptor>,
    pub settle_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Component {
    Periodic,
    Aperiodic,
}

impl Component {
    pub fn name(self) -> &'static str {
        match self {
            Component::Periodic => "periodic",
            Component::Aperiodic => "aperiodic",
        }
    }
}

/// `u = Σ kp (cmd - x̂_pos) + kd (ċmd - x̂_vel)` over the loops while `active`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Controller {
    pub active: Window,
    pub loops: Vec<ControlLoop>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlLoop {
    pub component: Component,
    pub command: SignalDescriptor,
    pub kp: f64,
    pub kd: f64,
    #[serde(default)]
    pub position_state: usize,
    #[serde(default = "default_velocity_state")]
    pub velocity_state: usize,
    #[serde(default)]
    pub input: usize,
}

fn default_velocity_state() -> usize {
    1
}

/// Direct separation of `x_pa = x_p + x_a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Separation {
    pub periodic: SignalDescriptor,
    pub aperiodic: SignalDescriptor,
    #[serde(default)]
    pub combs: Vec<CombEntry>,
    pub interference_window: Option<Window>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CombEntry {
    pub label: String,
    pub variant: CombChoice,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CombChoice {
    Feedback { b: f64, g: f64 },
    /// Quality factor may follow a schedule.
    Notch { gain: f64, q: SignalDescriptor },
}

impl Scenario {
    pub fn from_toml_str(text: &str, source: &str) -> Result<Self> {
        let sc: Scenario = toml::from_str(text).map_err(|e| toml_error(e, text, source))?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text, &path.display().to_string())
    }

    pub fn builtin(name: &str) -> Result<Self> {
        let src = builtin_source(name).ok_or_else(|| {
            Error::invalid(format!(
                "unknown scenario '{name}' (built-ins: {})",
                builtin_names().collect::<Vec<_>>().join(", ")
            ))
        })?;
        Self::from_toml_str(src, &format!("<builtin {name}>"))
    }

    /// A built-in name, or else a path to a scenario file.
    pub fn resolve(name_or_path: &str) -> Result<Self> {
        if builtin_source(name_or_path).is_some() {
            Self::builtin(name_or_path)
        } else if Path::new(name_or_path).exists() {
            Self::load(Path::new(name_or_path))
        } else {
            Self::builtin(name_or_path)
        }
    }

    pub fn steps(&self) -> usize {
        (self.duration_s / self.sampling_time).round() as usize
    }

    pub(crate) fn rho_at(&self, t: i64) -> f64 {
        self.rho_tilde.eval(t, self.sampling_time, 0)
    }

    pub fn validate(&self) -> Result<()> {
        let dt = self.sampling_time;
        if self.name.trim().is_empty() {
            return Err(Error::invalid("scenario name is empty"));
        }
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::invalid(format!("sampling_time must be positive (got {dt})")));
        }
        if self.period == 0 {
            return Err(Error::invalid("period must be at least 1"));
        }
        if !(self.duration_s >= dt) || !self.duration_s.is_finite() {
            return Err(Error::invalid(format!(
                "duration_s must cover at least one sample (got {})",
                self.duration_s
            )));
        }
        let steps = self.steps();
        if ((steps as f64) * dt - self.duration_s).abs() > 1e-9 * self.duration_s.max(1.0) {
            return Err(Error::invalid(format!(
                "duration_s = {} is not a whole number of samples",
                self.duration_s
            )));
        }
        check_schedule("rho_tilde", &self.rho_tilde, dt)?;

        let mut values = BTreeSet::new();
        for t in 0..=steps as i64 {
            let r = self.rho_at(t);
            if !(r > 0.0) || !r.is_finite() {
                return Err(Error::invalid(format!(
                    "rho_tilde must be positive; got {r} at t = {} s",
                    format_g(t as f64 * dt)
                )));
            }
            values.insert(r.to_bits());
        }
        for choice in &self.realizations {
            for bits in &values {
                let spec = choice.spec(f64::from_bits(*bits), self.period, dt)?;
                choice.design().design(&spec).map_err(|e| {
                    Error::invalid(format!(
                        "realization {} at rho_tilde = {}: {e}",
                        choice.label(),
                        f64::from_bits(*bits)
                    ))
                })?;
            }
        }
        let labels: BTreeSet<String> = self.realizations.iter().map(|c| c.label()).collect();
        if labels.len() != self.realizations.len() {
            return Err(Error::invalid("realizations must be distinct"));
        }

        match (&self.estimation, &self.separation) {
            (Some(est), None) => {
                if self.realizations.is_empty() {
                    return Err(Error::invalid("an estimation scenario needs at least one realization"));
                }
                est.validate(dt)
            }
            (None, Some(sep)) => {
                if self.realizations.is_empty() && sep.combs.is_empty() {
                    return Err(Error::invalid("a separation scenario needs a realization or a comb"));
                }
                sep.validate(dt, &labels)
            }
            _ => Err(Error::invalid(
                "a scenario needs exactly one of [estimation] or [separation]",
            )),
        }
    }
}

fn check_schedule(name: &str, s: &SignalDescriptor, dt: f64) -> Result<()> {
    s.validate(dt)
        .map_err(|e| Error::invalid(format!("{name}: {e}")))?;
    if s.has_noise() {
        return Err(Error::invalid(format!("{name} must be deterministic")));
    }
    Ok(())
}

pub(crate) fn matrix(name: &str, rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if r == 0 || c == 0 {
        return Err(Error::invalid(format!("matrix {name} is empty")));
    }
    if let Some(i) = rows.iter().position(|row| row.len() != c) {
        return Err(Error::invalid(format!(
            "matrix {name}: row {i} has {} entries, row 0 has {c}",
            rows[i].len()
        )));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("matrix {name} has non-finite entries")));
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

impl Estimation {
    pub fn model(&self) -> Result<SystemModel<f64>> {
        SystemModel::new(
            matrix("a", &self.a)?,
            matrix("b", &self.b)?,
            matrix("c", &self.c)?,
            matrix("q", &self.q)?,
            matrix("r", &self.r)?,
        )
    }

    pub fn initial_covariance(&self, n: usize) -> Result<DMatrix<f64>> {
        match &self.p0 {
            None => Ok(DMatrix::zeros(n, n)),
            Some(rows) => {
                let p = matrix("p0", rows)?;
                if p.shape() != (n, n) {
                    return Err(Error::DimensionMismatch(format!(
                        "p0 is {}x{}, state has {n} components",
                        p.nrows(),
                        p.ncols()
                    )));
                }
                Ok(p)
            }
        }
    }

    fn validate(&self, dt: f64) -> Result<()> {
        let model = self.model()?;
        let (n, p, m) = (model.state_dim(), model.input_dim(), model.output_dim());
        self.initial_covariance(n)?;
        let count = |name: &str, list: &[SignalDescriptor], want: usize, optional: bool| -> Result<()> {
            if !(list.len() == want || optional && list.is_empty()) {
                return Err(Error::DimensionMismatch(format!(
                    "{name} needs {want} descriptors, got {}",
                    list.len()
                )));
            }
            for (i, d) in list.iter().enumerate() {
                d.validate(dt).map_err(|e| Error::invalid(format!("{name}[{i}]: {e}")))?;
            }
            Ok(())
        };
        count("input", &self.input, p, true)?;
        count("process_noise", &self.process_noise, p, false)?;
        count("measurement_noise", &self.measurement_noise, m, false)?;
        if let Some(twin) = &self.periodic_twin {
            count("periodic_twin.input", &twin.input, p, false)?;
            if twin.input.iter().any(SignalDescriptor::has_noise) {
                return Err(Error::invalid("periodic_twin input must be deterministic"));
            }
            if !(twin.settle_s >= 0.0) || !twin.settle_s.is_finite() {
                return Err(Error::invalid("periodic_twin.settle_s must be non-negative"));
            }
        }
        if self.interference_window.is_some() && self.periodic_twin.is_none() {
            return Err(Error::invalid("interference_window needs a periodic_twin for ground truth"));
        }
        if self.interference_state >= n {
            return Err(Error::invalid(format!(
                "interference_state {} out of range for {n} states",
                self.interference_state
            )));
        }
        if self.tracking_window.is_some() && self.controller.is_none() {
            return Err(Error::invalid("tracking_window needs a controller"));
        }
        if let Some(ctrl) = &self.controller {
            if ctrl.loops.is_empty() {
                return Err(Error::invalid("controller has no loops"));
            }
            for (i, l) in ctrl.loops.iter().enumerate() {
                check_schedule(&format!("controller.loops[{i}].command"), &l.command, dt)?;
                if l.position_state >= n || l.velocity_state >= n || l.input >= p {
                    return Err(Error::invalid(format!(
                        "controller.loops[{i}] refers to a state or input that does not exist"
                    )));
                }
                if !l.kp.is_finite() || !l.kd.is_finite() {
                    return Err(Error::invalid(format!("controller.loops[{i}] gains must be finite")));
                }
            }
        }
        Ok(())
    }
}

impl Separation {
    fn validate(&self, dt: f64, realization_labels: &BTreeSet<String>) -> Result<()> {
        check_schedule("separation.periodic", &self.periodic, dt)?;
        self.aperiodic
            .validate(dt)
            .map_err(|e| Error::invalid(format!("separation.aperiodic: {e}")))?;
        let mut seen = BTreeSet::new();
        for c in &self.combs {
            if c.label.trim().is_empty() || !c.label.chars().all(|ch| ch.is_ascii_alphanumeric() || ch == '_' || ch == '-') {
                return Err(Error::invalid(format!("comb label '{}' must be a plain identifier", c.label)));
            }
            if !seen.insert(c.label.clone()) || realization_labels.contains(&format!("pasf_{}", c.label)) {
                return Err(Error::invalid(format!("duplicate separator label '{}'", c.label)));
            }
            if let CombChoice::Notch { q, .. } = &c.variant {
                check_schedule(&format!("{}.q", c.label), q, dt)?;
            }
        }
        Ok(())
    }
}

/// A stand-alone estimator model file: `a`, `b`, `c`, `q`, `r` and an
/// optional `p0`, each a list of rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    pub c: Vec<Vec<f64>>,
    pub q: Vec<Vec<f64>>,
    pub r: Vec<Vec<f64>>,
    pub p0: Option<Vec<Vec<f64>>>,
}

impl ModelFile {
    pub fn from_toml_str(text: &str, source: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| toml_error(e, text, source))
    }

    /// The model and `P(0|0)` (zero when omitted).
    pub fn into_parts(&self) -> Result<(SystemModel<f64>, DMatrix<f64>)> {
        let est = Estimation {
            a: self.a.clone(),
            b: self.b.clone(),
            c: self.c.clone(),
            q: self.q.clone(),
            r: self.r.clone(),
            p0: self.p0.clone(),
            input: Vec::new(),
            process_noise: Vec::new(),
            measurement_noise: Vec::new(),
            periodic_twin: None,
            controller: None,
            interference_window: None,
            interference_state: 0,
            tracking_window: None,
        };
        let model = est.model()?;
        let p0 = est.initial_covariance(model.state_dim())?;
        Ok((model, p0))
    }
}

fn toml_error(e: toml::de::Error, text: &str, source: &str) -> Error {
    let line = e
        .span()
        .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
        .unwrap_or(0);
    Error::Parse {
        path: source.to_string(),
        line,
        message: e.message().trim().to_string(),
    }
}

/// One subplot of the emitted plot script.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotPanel {
    pub title: String,
    pub file: String,
    pub columns: Vec<String>,
}

/// Tables, scalar metrics and plot layout produced by a run.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioOutput {
    pub name: String,
    pub seed: u64,
    /// `(file stem, table)` in output order.
    pub tables: Vec<(String, Table)>,
    pub metrics: Vec<(String, f64)>,
    pub panels: Vec<PlotPanel>,
}

impl ScenarioOutput {
    pub fn table(&self, stem: &str) -> Option<&Table> {
        self.tables.iter().find(|(s, _)| s == stem).map(|(_, t)| t)
    }

    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metrics.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    pub fn metrics_csv(&self) -> String {
        let mut out = String::from("metric,value\n");
        for (n, v) in &self.metrics {
            out.push_str(&format!("{n},{}\n", format_g(*v)));
        }
        out
    }

    pub fn plot_script(&self) -> String {
        plot::script(&self.name, &self.panels)
    }

    /// Writes every table as `<stem>.csv`, `metrics.csv` and optionally
    /// `plot_<name>.py` under `dir`; returns the written paths.
    pub fn write(&self, dir: &Path, with_plot_script: bool) -> Result<Vec<PathBuf>> {
        let mut written = Vec::new();
        for (stem, table) in &self.tables {
            let path = dir.join(format!("{stem}.csv"));
            table.write(&path)?;
            written.push(path);
        }
        let path = dir.join("metrics.csv");
        write_text(&path, &self.metrics_csv())?;
        written.push(path);
        if with_plot_script {
            let path = dir.join(format!("plot_{}.py", self.name));
            write_text(&path, &self.plot_script())?;
            written.push(path);
        }
        Ok(written)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_parse_and_validate() {
        for name in builtin_names() {
            let sc = Scenario::builtin(name).unwrap();
            assert_eq!(sc.name, name);
        }
        assert!(Scenario::builtin("sec99").is_err());
    }

    #[test]
    fn sec51_schedule_switches() {
        let sc = Scenario::builtin("sec51").unwrap();
        assert_eq!(sc.steps(), 120_000);
        assert_eq!(sc.rho_at(39_999), 10.0);
        assert_eq!(sc.rho_at(40_000), 0.2);
        assert_eq!(sc.rho_at(79_999), 0.2);
        assert_eq!(sc.rho_at(80_000), 10.0);
        assert_eq!(sc.rho_at(100_000), 10.0);
        assert_eq!(sc.rho_at(100_001), 0.01);
    }

    #[test]
    fn parse_errors_carry_lines() {
        let text = "name = \"x\"\nsampling_time = 0.001\nperiod = \"ten\"\n";
        match Scenario::from_toml_str(text, "bad.toml") {
            Err(Error::Parse { path, line, .. }) => {
                assert_eq!(path, "bad.toml");
                assert_eq!(line, 3);
            }
            other => panic!("expected a parse error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let mut text = builtin_source("sec53").unwrap().to_string();
        text.insert_str(0, "colour = \"blue\"\n");
        assert!(matches!(Scenario::from_toml_str(&text, "x"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn semantic_validation() {
        let base = Scenario::builtin("sec52").unwrap();

        let mut sc = base.clone();
        sc.separation = Some(Separation {
            periodic: SignalDescriptor::constant(0.0),
            aperiodic: SignalDescriptor::constant(0.0),
            combs: vec![],
            interference_window: None,
        });
        assert!(sc.validate().is_err());

        let mut sc = base.clone();
        sc.estimation.as_mut().unwrap().measurement_noise.clear();
        assert!(matches!(sc.validate(), Err(Error::DimensionMismatch(_))));

        let mut sc = base.clone();
        sc.rho_tilde = SignalDescriptor::constant(-1.0);
        assert!(sc.validate().is_err());

        let mut sc = base.clone();
        sc.duration_s = 1.0005 + 1e-4;
        assert!(sc.validate().is_err());

        // A FIR design cannot be placed above the lifted Nyquist frequency.
        let mut sc = base;
        sc.rho_tilde = SignalDescriptor::constant(10.0);
        assert!(sc.validate().is_err());
    }

    #[test]
    fn matrix_rows_must_agree() {
        assert!(matrix("a", &[vec![1.0, 2.0], vec![3.0]]).is_err());
        assert!(matrix("a", &[]).is_err());
        assert_eq!(matrix("a", &[vec![1.0, 2.0]]).unwrap().shape(), (1, 2));
    }
}
