use nalgebra::DVector;

use super::{
    CombChoice, Component, Estimation, PlotPanel, RealizationChoice, Scenario, ScenarioOutput, Separation,
};
use crate::baselines::{CombSeparator, CombSpec, CombVariant};
use crate::error::{Error, Result};
use crate::kalman::SystemModel;
use crate::kfpasf::{KfPasf, KfPasfHistories};
use crate::metrics::{interference_rms, rms};
use crate::pasf::Pasf;
use crate::signals::{SignalDescriptor, Window};
use crate::table::Table;

/// Runs a scenario; identical `(scenario, seed)` give identical output.
pub fn run_scenario(sc: &Scenario, seed: u64) -> Result<ScenarioOutput> {
    sc.validate()?;
    let mut out = ScenarioOutput {
        name: sc.name.clone(),
        seed,
        tables: Vec::new(),
        metrics: Vec::new(),
        panels: Vec::new(),
    };
    match (&sc.estimation, &sc.separation) {
        (Some(est), _) => run_estimation(sc, est, seed, &mut out)?,
        (_, Some(sep)) => run_separation(sc, sep, seed, &mut out)?,
        _ => unreachable!("validated"),
    }
    Ok(out)
}

fn names(prefix: &str, n: usize) -> impl Iterator<Item = String> + '_ {
    (1..=n).map(move |i| format!("{prefix}_{i}"))
}

/// Sample indices of `window` within `range`.
fn window_range(window: &Window, first: i64, count: usize, dt: f64) -> std::ops::Range<usize> {
    let idx: Vec<usize> = (0..count).filter(|&i| window.contains(first + i as i64, dt)).collect();
    match (idx.first(), idx.last()) {
        (Some(&a), Some(&b)) => a..b + 1,
        _ => 0..0,
    }
}

fn is_constant(s: &SignalDescriptor) -> bool {
    matches!(s, SignalDescriptor::Constant { .. })
}

/// Noise-free plant states `x(t)` for `t ∈ [start, end]` driven by the twin input.
struct Twin {
    start: i64,
    states: Vec<DVector<f64>>,
}

impl Twin {
    fn simulate(model: &SystemModel<f64>, input: &[SignalDescriptor], start: i64, end: i64, dt: f64) -> Self {
        let mut x = DVector::zeros(model.state_dim());
        let mut states = Vec::with_capacity((end - start + 1) as usize);
        states.push(x.clone());
        for t in start..end {
            let u = DVector::from_iterator(input.len(), input.iter().map(|d| d.eval(t, dt, 0)));
            x = &model.a * &x + &model.b * u;
            states.push(x.clone());
        }
        Twin { start, states }
    }

    fn at(&self, t: i64) -> &DVector<f64> {
        &self.states[(t - self.start) as usize]
    }
}

fn run_estimation(sc: &Scenario, est: &Estimation, seed: u64, out: &mut ScenarioOutput) -> Result<()> {
    let dt = sc.sampling_time;
    let steps = sc.steps();
    let model = est.model()?;
    let (n, p, m) = (model.state_dim(), model.input_dim(), model.output_dim());
    let p0 = est.initial_covariance(n)?;
    let scheduled = !is_constant(&sc.rho_tilde);

    let twin = est.periodic_twin.as_ref().map(|tw| {
        let depth = sc.realizations.iter().map(|c| c.order * sc.period).max().unwrap_or(0);
        let settle = (tw.settle_s / dt).round() as i64;
        Twin::simulate(&model, &tw.input, -(settle + depth as i64), steps as i64, dt)
    });

    let mut header = vec!["t".to_string(), "rho_tilde".to_string()];
    header.extend(names("u", p));
    header.extend(names("y", m));
    header.extend(names("x", n));
    header.extend(names("xhat", n));
    header.extend(names("xp_hat", n));
    header.extend(names("xa_hat", n));
    header.push("trP".into());
    if twin.is_some() {
        header.extend(names("xp_true", n));
        header.extend(names("xa_true", n));
    }
    if let Some(ctrl) = &est.controller {
        header.extend(ctrl.loops.iter().map(|l| format!("cmd_{}", l.component.name())));
    }

    let mut interference = Table::new(std::iter::once("t".to_string()).chain(sc.realizations.iter().map(|c| c.label())));
    let mut interference_cols: Vec<Vec<f64>> = Vec::new();
    let mut times: Vec<f64> = Vec::new();

    for choice in &sc.realizations {
        let label = choice.label();
        let mut table = Table::new(header.clone());
        let mut rho = sc.rho_at(0);
        let spec = choice.spec(rho, sc.period, dt)?;
        let depth = choice.order * sc.period;
        let (histories, x0) = match &twin {
            Some(tw) => {
                let zeros = DVector::zeros(n);
                let pa: Vec<_> = (-(depth as i64) + 1..=0).map(|t| tw.at(t).clone()).collect();
                let h = KfPasfHistories {
                    p: pa.clone(),
                    a: vec![zeros; depth],
                    pa,
                };
                (h, tw.at(0).clone())
            }
            None => (KfPasfHistories::zeros(n, depth), DVector::zeros(n)),
        };
        let mut kf = KfPasf::uniform(model.clone(), choice.design(), &spec, histories, p0.clone())?;
        let mut x = x0;
        let mut u = open_loop(est, 0, dt, seed, p);
        let mut err_p = Vec::with_capacity(steps);
        let mut tracking: Vec<(Vec<f64>, Vec<f64>)> = est
            .controller
            .iter()
            .flat_map(|c| c.loops.iter().map(|_| (Vec::with_capacity(steps), Vec::with_capacity(steps))))
            .collect();

        for t in 1..=steps as i64 {
            let v = DVector::from_iterator(p, est.process_noise.iter().map(|d| d.eval(t - 1, dt, seed)));
            x = &model.a * &x + &model.b * (&u + v);
            let w = DVector::from_iterator(m, est.measurement_noise.iter().map(|d| d.eval(t, dt, seed)));
            let y = &model.c * &x + w;

            let r = sc.rho_at(t);
            if r != rho {
                rho = r;
                kf.reconfigure_spec(&choice.spec(rho, sc.period, dt)?)?;
            }
            let rec = kf.step(&u, &y).map_err(|e| at_time(e, &label, t, dt))?;

            // Input applied from t to t+1.
            let mut next_u = open_loop(est, t, dt, seed, p);
            let mut cmds = Vec::new();
            if let Some(ctrl) = &est.controller {
                let active = ctrl.active.contains(t, dt);
                for (k, l) in ctrl.loops.iter().enumerate() {
                    let cmd = l.command.eval(t, dt, seed);
                    let rate = l.command.eval_rate(t, dt)?;
                    let xh = match l.component {
                        Component::Periodic => &rec.x_p,
                        Component::Aperiodic => &rec.x_a,
                    };
                    if active {
                        next_u[l.input] += l.kp * (cmd - xh[l.position_state]) + l.kd * (rate - xh[l.velocity_state]);
                    }
                    tracking[k].0.push(xh[l.position_state] - cmd);
                    tracking[k].1.push(cmd);
                    cmds.push(cmd);
                }
            }

            let mut row = Vec::with_capacity(header.len());
            row.push(t as f64 * dt);
            row.push(rho);
            row.extend(next_u.iter());
            row.extend(y.iter());
            row.extend(x.iter());
            row.extend(rec.x_pa.iter());
            row.extend(rec.x_p.iter());
            row.extend(rec.x_a.iter());
            row.push(rec.p.trace());
            if let Some(tw) = &twin {
                let xp = tw.at(t);
                row.extend(xp.iter());
                row.extend((&x - xp).iter());
                err_p.push(rec.x_p[est.interference_state] - xp[est.interference_state]);
            }
            row.extend(cmds);
            table.push(row);
            u = next_u;
        }

        if twin.is_some() {
            if let Some(win) = &est.interference_window {
                let range = window_range(win, 1, steps, dt);
                let zeros = vec![0.0; steps];
                out.metrics
                    .push((format!("{label}.interference_rms"), interference_rms(&err_p, &zeros, range)?));
            }
            interference_cols.push(err_p);
        }
        if let (Some(ctrl), Some(win)) = (&est.controller, &est.tracking_window) {
            let range = window_range(win, 1, steps, dt);
            if range.is_empty() {
                return Err(Error::invalid("tracking_window contains no samples"));
            }
            for (l, (err, cmd)) in ctrl.loops.iter().zip(&tracking) {
                let c = l.component.name();
                let e = rms(&err[range.clone()]);
                let r = rms(&cmd[range.clone()]);
                out.metrics.push((format!("{label}.tracking_error_rms_{c}"), e));
                out.metrics.push((format!("{label}.command_rms_{c}"), r));
                out.metrics.push((format!("{label}.tracking_ratio_{c}"), e / r));
            }
        }
        if times.is_empty() {
            times = (1..=steps).map(|t| t as f64 * dt).collect();
        }

        let s = est.interference_state + 1;
        let mut cols = vec![format!("x_{s}"), format!("xp_hat_{s}"), format!("xa_hat_{s}")];
        if twin.is_some() {
            cols.push(format!("xp_true_{s}"));
        }
        if let Some(ctrl) = &est.controller {
            cols.extend(ctrl.loops.iter().map(|l| format!("cmd_{}", l.component.name())));
        }
        out.panels.push(PlotPanel {
            title: format!("{} {label}: state {s} and its separation", sc.name),
            file: format!("{label}.csv"),
            columns: cols,
        });
        out.tables.push((label, table));
    }

    if scheduled {
        let first = sc.realizations[0].label();
        out.panels.push(PlotPanel {
            title: "separation frequency [rad/s]".into(),
            file: format!("{first}.csv"),
            columns: vec!["rho_tilde".into()],
        });
    }
    if !interference_cols.is_empty() {
        for (i, t) in times.iter().enumerate() {
            let mut row = vec![*t];
            row.extend(interference_cols.iter().map(|c| c[i]));
            interference.push(row);
        }
        out.panels.push(PlotPanel {
            title: format!("interference x̂p_{} - xp_{}", est.interference_state + 1, est.interference_state + 1),
            file: "interference.csv".into(),
            columns: sc.realizations.iter().map(RealizationChoice::label).collect(),
        });
        out.tables.push(("interference".into(), interference));
    }
    Ok(())
}

fn open_loop(est: &Estimation, t: i64, dt: f64, seed: u64, p: usize) -> DVector<f64> {
    if est.input.is_empty() {
        DVector::zeros(p)
    } else {
        DVector::from_iterator(p, est.input.iter().map(|d| d.eval(t, dt, seed)))
    }
}

fn at_time(e: Error, label: &str, t: i64, dt: f64) -> Error {
    match e {
        Error::Poisoned => Error::invalid(format!("{label}: estimator diverged at t = {} s", t as f64 * dt)),
        other => other,
    }
}

enum Separator {
    Pasf { pasf: Pasf<f64>, choice: RealizationChoice },
    Comb { comb: CombSeparator<f64>, notch: Option<Notch> },
}

/// Notch comb whose quality factor follows a schedule.
struct Notch {
    gain: f64,
    q: f64,
    schedule: SignalDescriptor,
}

fn comb_spec(variant: CombVariant, sc: &Scenario) -> CombSpec {
    CombSpec {
        variant,
        period: sc.period,
        sampling_time: sc.sampling_time,
    }
}

fn run_separation(sc: &Scenario, sep: &Separation, seed: u64, out: &mut ScenarioOutput) -> Result<()> {
    let dt = sc.sampling_time;
    let steps = sc.steps();
    let mut rho = sc.rho_at(0);

    let mut seps: Vec<(String, Separator)> = Vec::new();
    for choice in &sc.realizations {
        let pasf = Pasf::from_design(choice.design(), &choice.spec(rho, sc.period, dt)?)?;
        seps.push((format!("pasf_{}", choice.label()), Separator::Pasf { pasf, choice: *choice }));
    }
    for c in &sep.combs {
        let (variant, notch) = match &c.variant {
            CombChoice::Feedback { b, g } => (CombVariant::Feedback { b: *b, g: *g }, None),
            CombChoice::Notch { gain, q } => {
                let q0 = q.eval(0, dt, 0);
                let notch = Notch {
                    gain: *gain,
                    q: q0,
                    schedule: q.clone(),
                };
                (CombVariant::three(*gain, q0), Some(notch))
            }
        };
        let comb = CombSeparator::new(&comb_spec(variant, sc))?;
        seps.push((c.label.clone(), Separator::Comb { comb, notch }));
    }

    let header = ["t", "x_pa", "x_p", "x_a", "xp_sep", "xa_sep"];
    let mut tables: Vec<Table> = seps.iter().map(|_| Table::new(header)).collect();
    let mut interference = Table::new(std::iter::once("t".to_string()).chain(seps.iter().map(|(l, _)| l.clone())));
    let mut errs: Vec<Vec<f64>> = vec![Vec::with_capacity(steps); seps.len()];

    for t in 0..steps as i64 {
        let xp = sep.periodic.eval(t, dt, seed);
        let xa = sep.aperiodic.eval(t, dt, seed);
        let x = xp + xa;
        let r = sc.rho_at(t);
        let rho_changed = r != rho;
        rho = r;
        let mut irow = vec![t as f64 * dt];
        for (k, (_, s)) in seps.iter_mut().enumerate() {
            let (p_out, a_out) = match s {
                Separator::Pasf { pasf, choice } => {
                    if rho_changed {
                        pasf.reconfigure_spec(&choice.spec(rho, sc.period, dt)?)?;
                    }
                    pasf.step(x)?
                }
                Separator::Comb { comb, notch } => {
                    if let Some(n) = notch {
                        let qt = n.schedule.eval(t, dt, 0);
                        if qt != n.q {
                            n.q = qt;
                            comb.reconfigure(&comb_spec(CombVariant::three(n.gain, qt), sc))?;
                        }
                    }
                    comb.step(x)?
                }
            };
            tables[k].push(vec![t as f64 * dt, x, xp, xa, p_out, a_out]);
            errs[k].push(p_out - xp);
            irow.push(p_out - xp);
        }
        interference.push(irow);
    }

    if let Some(win) = &sep.interference_window {
        let range = window_range(win, 0, steps, dt);
        let zeros = vec![0.0; steps];
        for ((label, _), e) in seps.iter().zip(&errs) {
            out.metrics
                .push((format!("{label}.interference_rms"), interference_rms(e, &zeros, range.clone())?));
        }
    }
    for ((label, _), table) in seps.iter().zip(tables) {
        out.panels.push(PlotPanel {
            title: format!("{} {label}", sc.name),
            file: format!("{label}.csv"),
            columns: vec!["x_pa".into(), "xp_sep".into(), "xa_sep".into()],
        });
        out.tables.push((label.clone(), table));
    }
    out.panels.push(PlotPanel {
        title: "interference (separated periodic - true periodic)".into(),
        file: "interference.csv".into(),
        columns: seps.iter().map(|(l, _)| l.clone()).collect(),
    });
    out.tables.push(("interference".into(), interference));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signals::Bounds;
    use nalgebra::DMatrix;

    #[test]
    fn window_range_endpoints() {
        let w = Window::new(Some(0.5), None, Bounds::ClosedOpen);
        assert_eq!(window_range(&w, 1, 1000, 0.001), 499..1000);
        let none = Window::new(Some(5.0), Some(6.0), Bounds::Closed);
        assert_eq!(window_range(&none, 0, 10, 0.001), 0..0);
    }

    #[test]
    fn twin_follows_plant() {
        let model = SystemModel::new(
            DMatrix::from_element(1, 1, 0.5),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::zeros(1, 1),
            DMatrix::from_element(1, 1, 1.0),
        )
        .unwrap();
        let tw = Twin::simulate(&model, &[SignalDescriptor::constant(1.0)], -3, 2, 1.0);
        let got: Vec<f64> = (-3..=2).map(|t| tw.at(t)[0]).collect();
        assert_eq!(got, vec![0.0, 1.0, 1.5, 1.75, 1.875, 1.9375]);
    }
}
