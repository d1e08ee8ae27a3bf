//! Autoregressive evaluation of a learned model against the plant.
//!
//! A rollout is seeded with the first `n` true samples. After that every
//! history entry is the model's own (post-processed) prediction; only the
//! commands come from the trace. Pressure is predicted first from history
//! and then fed into the current-pressure input for the remaining outputs.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{write_features, Current, Sample, PRESSURE_TARGET, TARGETS, TARGET_NAMES};
use crate::plant::{module_mass, simulate, CommandTrace, PlantConfig, PlantTrajectory, Quad, ENGINES};
use crate::regression::CoefficientModel;

/// History window of a running rollout. `window[0]` is the latest sample.
#[derive(Debug, Clone)]
pub struct RolloutState {
    pub n: usize,
    pub window: VecDeque<Sample>,
    /// Index of the next sample to predict.
    pub t: usize,
}

impl RolloutState {
    /// Seeds the window from the first `n` samples of `warmup`.
    pub fn warm(warmup: &PlantTrajectory, n: usize) -> Result<Self> {
        if warmup.len() < n {
            return Err(Error::InsufficientHistory { index: warmup.len(), n });
        }
        let window = (0..n).rev().map(|i| Sample::from_trajectory(warmup, i)).collect();
        Ok(Self { n, window, t: n })
    }

    pub fn push(&mut self, sample: Sample) {
        self.window.push_front(sample);
        self.window.truncate(self.n);
        self.t += 1;
    }

    pub fn latest(&self) -> &Sample {
        &self.window[0]
    }
}

/// Predicted trajectory before and after post-processing.
#[derive(Debug, Clone, PartialEq)]
pub struct Rollout {
    /// Non-negative thrusts and non-decreasing masses; this is what is fed
    /// back into the history.
    pub clamped: PlantTrajectory,
    /// Model outputs as produced.
    pub raw: PlantTrajectory,
}

fn push_sample(traj: &mut PlantTrajectory, command: Quad, status: Quad, y: &[f64; TARGETS]) {
    traj.commands.push(command);
    traj.status.push(status);
    traj.thrusts.push([y[0], y[1], y[2], y[3]]);
    traj.pressures.push(y[PRESSURE_TARGET]);
    traj.m_fuel.push(y[5]);
    traj.m_ox.push(y[6]);
}

/// Replays `trace` through `model`, feeding predictions back as history.
///
/// `warmup` must hold at least the first `n` samples of the true
/// trajectory; they are copied to the output unchanged.
pub fn rollout(model: &CoefficientModel, trace: &CommandTrace, warmup: &PlantTrajectory) -> Result<Rollout> {
    let n = model.n;
    let total = trace.len() + 1;
    if total <= n {
        return Err(Error::InvalidInput(format!("trace of {} commands is too short for history {n}", trace.len())));
    }
    warmup.check_lengths()?;
    let mut state = RolloutState::warm(warmup, n)?;
    let prefix = warmup.prefix(n);
    let mut clamped = prefix.clone();
    clamped.dt = trace.dt;
    let mut raw = clamped.clone();

    let layout = model.history().layout();
    let mut x = vec![0.0; layout.width()];
    for t in n..total {
        let command = trace.commands[t - 1];
        let status = trace.status[t - 1];
        let prev = *state.latest();
        let mut current = Current { command, status, pressure: prev.pressure };
        let hist = state.window.make_contiguous();
        write_features(&mut x, &layout, &current, hist, &model.lambda)?;
        if model.causal_pressure {
            current.pressure = model.predict_output(&x, PRESSURE_TARGET)?;
            x[layout.pressure()] = current.pressure;
        }
        let y = model.predict(&x)?;
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Diverged { index: t, time: t as f64 * trace.dt });
        }
        push_sample(&mut raw, command, status, &y);

        let mut yc = y;
        for v in yc.iter_mut().take(ENGINES) {
            *v = v.max(0.0);
        }
        yc[5] = yc[5].max(prev.m_fuel);
        yc[6] = yc[6].max(prev.m_ox);
        push_sample(&mut clamped, command, status, &yc);
        state.push(Sample {
            command,
            thrust: [yc[0], yc[1], yc[2], yc[3]],
            pressure: yc[PRESSURE_TARGET],
            m_fuel: yc[5],
            m_ox: yc[6],
        });
    }
    Ok(Rollout { clamped, raw })
}

/// One-step-ahead predictions using the true history at every sample.
/// The first `n` samples are copied from `traj`.
pub fn teacher_forced(model: &CoefficientModel, traj: &PlantTrajectory) -> Result<PlantTrajectory> {
    let n = model.n;
    if traj.len() <= n {
        return Err(Error::InvalidInput(format!("trajectory of {} samples is too short for history {n}", traj.len())));
    }
    let layout = model.history().layout();
    let mut pred = traj.prefix(n);
    let mut x = vec![0.0; layout.width()];
    let mut hist = Vec::with_capacity(n);
    for t in n..traj.len() {
        hist.clear();
        hist.extend((1..=n).map(|h| Sample::from_trajectory(traj, t - h)));
        let current = Current { command: traj.commands[t], status: traj.status[t], pressure: traj.pressures[t] };
        write_features(&mut x, &layout, &current, &hist, &model.lambda)?;
        let y = model.predict(&x)?;
        push_sample(&mut pred, traj.commands[t], traj.status[t], &y);
    }
    Ok(pred)
}

/// Errors of one experiment. Per-output vectors follow
/// `(To1, To2, To3, To4, P, mf, mo)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub experiment: String,
    pub mode: String,
    pub samples: usize,
    pub transient_samples: usize,
    pub steady_samples: usize,
    pub rmse: Vec<f64>,
    pub max_abs_error: Vec<f64>,
    pub transient_max_abs_error: Vec<f64>,
    pub steady_max_abs_error: Vec<f64>,
    /// Largest error once the settle window after the first ignition has
    /// passed. Continuously varying commands make every sample transient
    /// under the window rule; this is the steady figure for such signals.
    pub after_startup_max_abs_error: Vec<f64>,
    /// Largest thrust error of the unclamped model output, when available.
    pub raw_max_abs_error: Option<Vec<f64>>,
    pub module_mass_max_error: f64,
    pub sparsity: f64,
    /// Time of the first non-finite prediction, if the rollout diverged.
    pub diverged_at: Option<f64>,
}

impl ValidationReport {
    pub fn thrust_max(&self) -> f64 {
        self.max_abs_error[..ENGINES].iter().copied().fold(0.0, f64::max)
    }

    pub fn thrust_transient_max(&self) -> f64 {
        self.transient_max_abs_error[..ENGINES].iter().copied().fold(0.0, f64::max)
    }

    pub fn thrust_steady_max(&self) -> f64 {
        self.steady_max_abs_error[..ENGINES].iter().copied().fold(0.0, f64::max)
    }

    pub fn thrust_after_startup_max(&self) -> f64 {
        self.after_startup_max_abs_error[..ENGINES].iter().copied().fold(0.0, f64::max)
    }

    /// Empty report for an experiment that diverged.
    pub fn diverged(experiment: &str, mode: &str, time: f64, sparsity: f64) -> Self {
        let inf = vec![f64::INFINITY; TARGETS];
        Self {
            experiment: experiment.into(),
            mode: mode.into(),
            samples: 0,
            transient_samples: 0,
            steady_samples: 0,
            rmse: inf.clone(),
            max_abs_error: inf.clone(),
            transient_max_abs_error: inf.clone(),
            steady_max_abs_error: inf.clone(),
            after_startup_max_abs_error: inf,
            raw_max_abs_error: None,
            module_mass_max_error: f64::INFINITY,
            sparsity,
            diverged_at: Some(time),
        }
    }
}

/// Command changes larger than this start a transient window, N.
pub const COMMAND_STEP_THRESHOLD: f64 = 1.0;

/// Marks samples that lie within `settle_window` seconds after a command
/// change (any engine moving by more than 1 N, or switching on/off).
pub fn transient_mask(traj: &PlantTrajectory, settle_window: f64) -> Vec<bool> {
    let window = (settle_window / traj.dt).round() as usize;
    let mut mask = vec![false; traj.len()];
    let mut last_change: Option<usize> = None;
    for i in 0..traj.len() {
        if i > 0 {
            let (a, b) = (&traj.commands[i - 1], &traj.commands[i]);
            let (sa, sb) = (&traj.status[i - 1], &traj.status[i]);
            if (0..ENGINES).any(|j| (a[j] - b[j]).abs() > COMMAND_STEP_THRESHOLD || sa[j] != sb[j]) {
                last_change = Some(i);
            }
        }
        mask[i] = matches!(last_change, Some(c) if i - c < window);
    }
    mask
}

fn output_row(traj: &PlantTrajectory, i: usize) -> [f64; TARGETS] {
    let t = traj.thrusts[i];
    [t[0], t[1], t[2], t[3], traj.pressures[i], traj.m_fuel[i], traj.m_ox[i]]
}

/// Compares aligned true and predicted trajectories.
pub fn error_windows(
    experiment: &str,
    truth: &PlantTrajectory,
    pred: &PlantTrajectory,
    settle_window: f64,
    cfg: &PlantConfig,
) -> Result<ValidationReport> {
    truth.check_lengths()?;
    pred.check_lengths()?;
    if truth.len() != pred.len() {
        return Err(Error::InvalidInput(format!("trajectories of {} and {} samples", truth.len(), pred.len())));
    }
    if truth.is_empty() {
        return Err(Error::InvalidInput("empty trajectories".into()));
    }
    let mask = transient_mask(truth, settle_window);
    let window = (settle_window / truth.dt).round() as usize;
    let ignition = (0..truth.len()).find(|&i| truth.status[i].iter().any(|&s| s > 0.5));
    let startup_end = ignition.map_or(truth.len(), |i| i + window);
    let mut max_after = [0.0f64; TARGETS];
    let mut ss = [0.0; TARGETS];
    let mut max_all = [0.0f64; TARGETS];
    let mut max_tr = [0.0f64; TARGETS];
    let mut max_st = [0.0f64; TARGETS];
    for i in 0..truth.len() {
        let (a, b) = (output_row(truth, i), output_row(pred, i));
        for k in 0..TARGETS {
            let e = (a[k] - b[k]).abs();
            ss[k] += e * e;
            max_all[k] = max_all[k].max(e);
            if mask[i] {
                max_tr[k] = max_tr[k].max(e);
            } else {
                max_st[k] = max_st[k].max(e);
            }
            if i >= startup_end {
                max_after[k] = max_after[k].max(e);
            }
        }
    }
    let n = truth.len() as f64;
    let mass_true = module_mass(truth, cfg);
    let mass_pred = module_mass(pred, cfg);
    let mass_err = mass_true.iter().zip(&mass_pred).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let transient = mask.iter().filter(|&&m| m).count();
    Ok(ValidationReport {
        experiment: experiment.into(),
        mode: String::new(),
        samples: truth.len(),
        transient_samples: transient,
        steady_samples: truth.len() - transient,
        rmse: ss.iter().map(|s| (s / n).sqrt()).collect(),
        max_abs_error: max_all.to_vec(),
        transient_max_abs_error: max_tr.to_vec(),
        steady_max_abs_error: max_st.to_vec(),
        after_startup_max_abs_error: max_after.to_vec(),
        raw_max_abs_error: None,
        module_mass_max_error: mass_err,
        sparsity: 0.0,
        diverged_at: None,
    })
}

/// Default settle window, s.
pub const SETTLE_WINDOW: f64 = 1.0;

/// Anything that can predict a trajectory for a command trace given the
/// true warm-up prefix: a learned model, or the plant itself.
pub trait TrajectoryPredictor {
    fn history(&self) -> usize;
    fn sparsity(&self) -> f64;
    fn predict_trajectory(&self, trace: &CommandTrace, warmup: &PlantTrajectory) -> Result<Rollout>;
}

impl TrajectoryPredictor for CoefficientModel {
    fn history(&self) -> usize {
        self.n
    }
    fn sparsity(&self) -> f64 {
        self.sparsity
    }
    fn predict_trajectory(&self, trace: &CommandTrace, warmup: &PlantTrajectory) -> Result<Rollout> {
        rollout(self, trace, warmup)
    }
}

/// Replays the plant itself; every error is zero.
#[derive(Debug, Clone)]
pub struct PlantPassthrough {
    pub cfg: PlantConfig,
    pub n: usize,
}

impl TrajectoryPredictor for PlantPassthrough {
    fn history(&self) -> usize {
        self.n
    }
    fn sparsity(&self) -> f64 {
        0.0
    }
    fn predict_trajectory(&self, trace: &CommandTrace, _warmup: &PlantTrajectory) -> Result<Rollout> {
        let traj = simulate(trace, &self.cfg)?;
        Ok(Rollout { clamped: traj.clone(), raw: traj })
    }
}

/// Simulates the plant on `trace`, rolls the predictor out against it and
/// reports the errors. A diverging rollout yields a report with
/// `diverged_at` set rather than an error.
pub fn evaluate<P: TrajectoryPredictor + ?Sized>(
    experiment: &str,
    predictor: &P,
    trace: &CommandTrace,
    cfg: &PlantConfig,
) -> Result<(ValidationReport, PlantTrajectory, Option<Rollout>)> {
    if trace.is_empty() {
        return Err(Error::InvalidInput(format!("{experiment}: empty command trace")));
    }
    let truth = simulate(trace, cfg)?;
    let warmup = truth.prefix(predictor.history());
    match predictor.predict_trajectory(trace, &warmup) {
        Ok(ro) => {
            let mut report = error_windows(experiment, &truth, &ro.clamped, SETTLE_WINDOW, cfg)?;
            report.mode = "rollout".into();
            report.sparsity = predictor.sparsity();
            let mut raw_max = vec![0.0f64; TARGETS];
            for i in 0..truth.len() {
                let (a, b) = (output_row(&truth, i), output_row(&ro.raw, i));
                for k in 0..TARGETS {
                    raw_max[k] = raw_max[k].max((a[k] - b[k]).abs());
                }
            }
            report.raw_max_abs_error = Some(raw_max);
            Ok((report, truth, Some(ro)))
        }
        Err(Error::Diverged { time, .. }) => {
            Ok((ValidationReport::diverged(experiment, "rollout", time, predictor.sparsity()), truth, None))
        }
        Err(e) => Err(e),
    }
}

/// One-step-ahead report on a true trajectory.
pub fn teacher_forced_eval(
    experiment: &str,
    model: &CoefficientModel,
    traj: &PlantTrajectory,
    cfg: &PlantConfig,
) -> Result<ValidationReport> {
    let pred = teacher_forced(model, traj)?;
    let mut report = error_windows(experiment, traj, &pred, SETTLE_WINDOW, cfg)?;
    report.mode = "teacher_forced".into();
    report.sparsity = model.sparsity;
    Ok(report)
}

/// Rollout of the bundled descent profile against the plant.
pub fn descent_profile_eval<P: TrajectoryPredictor + ?Sized>(
    predictor: &P,
    profile: &CommandTrace,
    cfg: &PlantConfig,
) -> Result<(ValidationReport, PlantTrajectory, Option<Rollout>)> {
    evaluate("descent", predictor, profile, cfg)
}

/// Synthetic open-loop powered-descent command profile (about 1000 s):
/// high-thrust braking with the engine pairs (1, 3) and (2, 4) trimmed in
/// opposite directions, a throttle-down, a coast with engines off, a
/// restart and a stepped terminal descent ending in shutdown.
pub fn descent_profile(dt: f64) -> CommandTrace {
    let mut tr = CommandTrace::new(dt);
    let steps = |seconds: f64| (seconds / dt).round() as usize;
    let on = [1.0; ENGINES];
    let mut t = 0.0;
    let mut push = |tr: &mut CommandTrace, seconds: f64, f: &dyn Fn(f64) -> (Quad, Quad)| {
        for _ in 0..steps(seconds) {
            let (c, s) = f(t);
            tr.push(c, s);
            t += dt;
        }
    };
    let two_pi = 2.0 * std::f64::consts::PI;

    // Engines off before ignition.
    push(&mut tr, 2.0, &|_| ([0.0; ENGINES], [0.0; ENGINES]));
    // Rough braking with slow pair-wise attitude trim.
    push(&mut tr, 200.0, &|t| {
        let trim = 25.0 * (two_pi * t / 45.0).sin();
        let base = 640.0 - 0.2 * (t - 2.0);
        ([base + trim, base - trim, base + trim, base - trim], on)
    });
    // Throttle-down.
    push(&mut tr, 20.0, &|t| {
        let level = 600.0 - 14.0 * (t - 202.0);
        ([level; ENGINES], on)
    });
    // Low-thrust hold with a gentle ripple.
    push(&mut tr, 120.0, &|t| {
        let r = 8.0 * (two_pi * t / 20.0).sin();
        ([320.0 + r, 320.0 - r, 320.0 + r, 320.0 - r], on)
    });
    // Coast.
    push(&mut tr, 300.0, &|_| ([0.0; ENGINES], [0.0; ENGINES]));
    // Restart and terminal descent in steps.
    for (level, seconds) in [(520.0, 40.0), (470.0, 40.0), (420.0, 50.0), (380.0, 60.0), (340.0, 60.0), (300.0, 40.0)] {
        push(&mut tr, seconds, &move |t| {
            let r = 6.0 * (two_pi * t / 15.0).sin();
            ([level + r, level - r, level - r, level + r], on)
        });
    }
    // Shutdown.
    push(&mut tr, 68.0, &|_| ([0.0; ENGINES], [0.0; ENGINES]));
    tr
}

/// Writes a flat plotting table: time, then truth, prediction and error for
/// every output.
pub fn write_plot_csv(
    path: &std::path::Path,
    truth: &PlantTrajectory,
    pred: &PlantTrajectory,
    cfg: &PlantConfig,
) -> Result<()> {
    let (mass_true, mass_pred) = (module_mass(truth, cfg), module_mass(pred, cfg));
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    let mut header = vec!["t".to_string()];
    for name in TARGET_NAMES {
        header.push(name.to_string());
        header.push(format!("{name}_pred"));
        header.push(format!("{name}_err"));
    }
    header.push("mass".into());
    header.push("mass_pred".into());
    header.push("mass_err".into());
    w.write_record(&header).map_err(|e| Error::csv(path, e))?;
    for i in 0..truth.len() {
        let (a, b) = (output_row(truth, i), output_row(pred, i));
        let mut rec = vec![truth.time(i).to_string()];
        for k in 0..TARGETS {
            rec.push(a[k].to_string());
            rec.push(b[k].to_string());
            rec.push((b[k] - a[k]).to_string());
        }
        let (ma, mb) = (mass_true[i], mass_pred[i]);
        rec.push(ma.to_string());
        rec.push(mb.to_string());
        rec.push((mb - ma).to_string());
        w.write_record(&rec).map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::excitation::{step_stair_trace, ExcitationConfig};

    #[test]
    fn transient_windows() {
        let cfg = PlantConfig::default();
        let mut tr = CommandTrace::new(cfg.dt);
        for _ in 0..300 {
            tr.push_uniform(500.0);
        }
        let traj = simulate(&tr, &cfg).unwrap();
        // The only change is the start-up from rest at sample 1.
        let mask = transient_mask(&traj, 1.0);
        assert!(!mask[0] && mask[1] && mask[100] && !mask[101] && !mask[300]);

        let stair = step_stair_trace(&[400.0, 600.0], 2.0, &ExcitationConfig::default()).unwrap();
        let traj = simulate(&stair, &cfg).unwrap();
        let mask = transient_mask(&traj, 0.5);
        assert!(mask[201] && mask[250] && !mask[251] && !mask[150]);
    }

    #[test]
    fn identical_trajectories_give_zero_report() {
        let cfg = PlantConfig::default();
        let stair = step_stair_trace(&[400.0, 600.0], 2.0, &ExcitationConfig::default()).unwrap();
        let traj = simulate(&stair, &cfg).unwrap();
        let r = error_windows("same", &traj, &traj, 1.0, &cfg).unwrap();
        assert!(r.rmse.iter().chain(&r.max_abs_error).all(|&v| v == 0.0));
        assert_eq!(r.module_mass_max_error, 0.0);
        assert_eq!(r.transient_samples + r.steady_samples, traj.len());
        assert!(error_windows("bad", &traj, &traj.prefix(10), 1.0, &cfg).is_err());
    }

    #[test]
    fn plant_passthrough_is_exact() {
        let cfg = PlantConfig::default();
        let profile = descent_profile(cfg.dt);
        let p = PlantPassthrough { cfg: cfg.clone(), n: 6 };
        let (r, _, _) = descent_profile_eval(&p, &profile, &cfg).unwrap();
        assert_eq!(r.thrust_max(), 0.0);
        assert_eq!(r.module_mass_max_error, 0.0);
        assert!(descent_profile_eval(&p, &CommandTrace::new(cfg.dt), &cfg).is_err());
    }

    #[test]
    fn descent_profile_is_feasible() {
        let cfg = PlantConfig::default();
        let profile = descent_profile(cfg.dt);
        let secs = profile.len() as f64 * cfg.dt;
        assert!((900.0..=1100.0).contains(&secs), "{secs}");
        let traj = simulate(&profile, &cfg).unwrap();
        let mass = module_mass(&traj, &cfg);
        let last = *mass.last().unwrap();
        assert!(last > 0.25 * cfg.m_module0, "final mass {last}");
        // The bottle stays above the regulator setting, so the feed pressure
        // returns to p_reg whenever the engines are off.
        assert_eq!(*traj.pressures.last().unwrap(), cfg.p_reg);
    }
}
