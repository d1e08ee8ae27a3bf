//! Staged identification pipeline: generate data, sweep, train, validate.
//!
//! Stages hand off through files so that a corpus can be reused by many
//! sweeps and trainings. Every stage writes the resolved configuration
//! next to its outputs, and all artifacts are deterministic functions of
//! that configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::excitation::{build_corpus, excitation_segment, step_stair_trace, ExcitationConfig, SegmentKind};
use crate::features::{assemble_with, merge, Dataset, HistorySpec, LambdaParams};
use crate::io::{ensure_dir, read_json, write_json};
use crate::plant::{simulate, CommandTrace, PlantConfig, PlantTrajectory, ENGINES};
use crate::regression::{model_from_fit, problem_for, BasisSpec, CoefficientModel, TrainOptions};
use crate::rollout::{
    descent_profile, evaluate, teacher_forced_eval, write_plot_csv, PlantPassthrough, TrajectoryPredictor,
    ValidationReport,
};
use crate::tuning::{pareto_table, sweep_history, sweep_mu, write_pareto_csv, SweepConfig, SweepReport};

/// Fixed validation experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ValidationConfig {
    /// Bias of the held-out excitation segment, N.
    pub sine_bias: f64,
    pub stair_levels: Vec<f64>,
    pub stair_hold: f64,
    /// Start and end level of the fall step, N.
    pub fall: [f64; 2],
    pub fall_hold: f64,
    pub descent: bool,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self {
            sine_bias: 600.0,
            stair_levels: vec![300.0, 450.0, 600.0, 750.0, 600.0, 450.0, 300.0],
            stair_hold: 4.0,
            fall: [800.0, 240.0],
            fall_hold: 5.0,
            descent: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub plant: PlantConfig,
    pub excitation: ExcitationConfig,
    pub history: HistorySpec,
    pub basis: BasisSpec,
    pub lambda: LambdaParams,
    pub train: TrainOptions,
    pub sweep: SweepConfig,
    pub validation: ValidationConfig,
    pub output_dir: PathBuf,
    /// Seeds the corpus shuffle and the CV folds.
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            plant: PlantConfig::default(),
            excitation: ExcitationConfig::default(),
            history: HistorySpec::default(),
            basis: BasisSpec::default(),
            lambda: LambdaParams::default(),
            train: TrainOptions::default(),
            sweep: SweepConfig::default(),
            validation: ValidationConfig::default(),
            output_dir: PathBuf::from("out"),
            seed: 0,
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        read_json(path)
    }

    /// Propagates the shared settings into the sub-configurations and
    /// checks them.
    pub fn resolve(mut self) -> Result<Self> {
        self.excitation.seed = self.seed;
        self.sweep.seed = self.seed;
        self.train.basis = self.basis;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        self.plant.validate()?;
        self.excitation.validate()?;
        self.sweep.validate()?;
        self.basis.validate()?;
        HistorySpec::new(self.history.n)?;
        let ex = &self.excitation;
        if ex.e_min != self.plant.e_min || ex.e_max != self.plant.e_max || ex.dt != self.plant.dt {
            return Err(Error::InvalidConfig(
                "excitation e_min, e_max and dt must match the plant configuration".into(),
            ));
        }
        if !(self.train.mu.is_finite() && self.train.mu >= 0.0) {
            return Err(Error::InvalidConfig(format!("mu must be finite and >= 0, got {}", self.train.mu)));
        }
        if !(self.lambda.scale > 0.0 && self.lambda.eps > 0.0) {
            return Err(Error::InvalidConfig("lambda scale and eps must be positive".into()));
        }
        Ok(())
    }

    pub fn train_options(&self) -> TrainOptions {
        TrainOptions { basis: self.basis, ..self.train }
    }

    pub fn write_snapshot(&self, dir: &Path) -> Result<()> {
        write_json(&dir.join("config.json"), self)
    }
}

pub const MANIFEST: &str = "manifest.json";

/// One generated trace as listed in the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    pub kind: SegmentKind,
    pub e_bias: Option<f64>,
    pub duration: f64,
    pub samples: usize,
    /// Command columns only, relative to the data directory.
    pub commands: String,
    /// Full plant record, relative to the data directory.
    pub trajectory: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub traces: usize,
    pub samples: usize,
    pub command_min: f64,
    pub command_max: f64,
    pub thrust_min: f64,
    pub thrust_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub dt: f64,
    pub summary: CorpusSummary,
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn load(data_dir: &Path) -> Result<Self> {
        read_json(&data_dir.join(MANIFEST))
    }

    /// Reads every trajectory listed in the manifest, in order.
    pub fn trajectories(&self, data_dir: &Path) -> Result<Vec<(String, PlantTrajectory)>> {
        self.entries
            .iter()
            .map(|e| {
                let mut traj = PlantTrajectory::read_csv(&data_dir.join(&e.trajectory))?;
                traj.dt = self.dt;
                Ok((e.name.clone(), traj))
            })
            .collect()
    }
}

/// Builds and simulates the corpus and writes it under `out`.
pub fn cmd_gen_data(cfg: &PipelineConfig, out: &Path) -> Result<Manifest> {
    ensure_dir(&out.join("commands"))?;
    ensure_dir(&out.join("trajectories"))?;
    cfg.write_snapshot(out)?;
    let corpus = build_corpus(&cfg.excitation)?;
    let mut entries = Vec::with_capacity(corpus.len());
    let mut summary = CorpusSummary {
        traces: 0,
        samples: 0,
        command_min: f64::INFINITY,
        command_max: f64::NEG_INFINITY,
        thrust_min: f64::INFINITY,
        thrust_max: f64::NEG_INFINITY,
    };
    for entry in &corpus {
        let traj = simulate(&entry.trace, &cfg.plant).map_err(|e| match e {
            Error::Depleted { index, time } => Error::InvalidInput(format!(
                "trace {}: propellant depleted at sample {index} (t = {time:.3} s)",
                entry.name
            )),
            other => other,
        })?;
        let commands = format!("commands/{}.csv", entry.name);
        let trajectory = format!("trajectories/{}.csv", entry.name);
        entry.trace.write_csv(&out.join(&commands))?;
        traj.write_csv(&out.join(&trajectory))?;
        for (c, s) in entry.trace.commands.iter().zip(&entry.trace.status) {
            for j in 0..ENGINES {
                if s[j] > 0.5 {
                    summary.command_min = summary.command_min.min(c[j]);
                    summary.command_max = summary.command_max.max(c[j]);
                }
            }
        }
        for t in traj.thrusts.iter().flatten() {
            summary.thrust_min = summary.thrust_min.min(*t);
            summary.thrust_max = summary.thrust_max.max(*t);
        }
        summary.traces += 1;
        summary.samples += traj.len();
        entries.push(ManifestEntry {
            name: entry.name.clone(),
            kind: entry.kind,
            e_bias: entry.e_bias,
            duration: entry.duration(),
            samples: traj.len(),
            commands,
            trajectory,
        });
    }
    let manifest = Manifest { dt: cfg.plant.dt, summary, entries };
    write_json(&out.join(MANIFEST), &manifest)?;
    Ok(manifest)
}

/// Assembles one dataset over all trajectories at history `n`.
pub fn corpus_dataset(trajs: &[(String, PlantTrajectory)], n: usize, lambda: &LambdaParams) -> Result<Dataset> {
    let history = HistorySpec::new(n)?;
    let parts: Vec<Dataset> =
        trajs.iter().map(|(name, t)| assemble_with(t, &history, lambda, name)).collect::<Result<_>>()?;
    merge(&parts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub n: usize,
    pub mu: f64,
    pub basis: BasisSpec,
    pub rows: usize,
    pub width: usize,
    pub train_rmse: Vec<f64>,
    pub sparsity: f64,
    pub nonzeros: usize,
    pub sweeps: Vec<usize>,
    pub kkt_residual: Vec<f64>,
}

/// Fits a model at the configured history length and weight.
pub fn cmd_train(cfg: &PipelineConfig, data_dir: &Path, out: &Path) -> Result<(CoefficientModel, TrainReport)> {
    ensure_dir(out)?;
    cfg.write_snapshot(out)?;
    let manifest = Manifest::load(data_dir)?;
    let trajs = manifest.trajectories(data_dir)?;
    let ds = corpus_dataset(&trajs, cfg.history.n, &cfg.lambda)?;
    let opts = cfg.train_options();
    let problem = problem_for(&ds, &opts)?;
    let mut fit = problem.solve(opts.mu, &opts.lasso, None)?;
    let (sweeps, kkt) = (fit.sweeps.clone(), fit.kkt_residual.clone());
    if opts.refit {
        fit = problem.refit(&fit);
    }
    let model = model_from_fit(&problem, &fit, ds.history, ds.lambda, &opts);
    let pred = model.predict_rows(ds.inputs.view())?;
    let rmse = crate::regression::rmse(pred.view(), ds.targets.view())?;
    let report = TrainReport {
        n: ds.history.n,
        mu: opts.mu,
        basis: opts.basis,
        rows: ds.rows(),
        width: model.k.ncols(),
        train_rmse: rmse.per_output,
        sparsity: model.sparsity,
        nonzeros: model.nonzeros(),
        sweeps,
        kkt_residual: kkt,
    };
    model.save(&out.join("model.json"))?;
    write_json(&out.join("train_report.json"), &report)?;
    Ok((model, report))
}

/// Selected hyperparameters of a sweep run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub n: usize,
    pub mu: f64,
}

pub const SELECTION: &str = "selected.json";

/// History sweep, then a weight sweep at the selected history length.
pub fn cmd_sweep(cfg: &PipelineConfig, data_dir: &Path, out: &Path) -> Result<(SweepReport, SweepReport, Selection)> {
    ensure_dir(out)?;
    cfg.write_snapshot(out)?;
    let manifest = Manifest::load(data_dir)?;
    let trajs = manifest.trajectories(data_dir)?;
    let opts = cfg.train_options();
    let datasets: Vec<Dataset> =
        cfg.sweep.n_grid.iter().map(|&n| corpus_dataset(&trajs, n, &cfg.lambda)).collect::<Result<_>>()?;
    let history = sweep_history(&datasets, &cfg.sweep, &opts)?;
    history.write_csv(&out.join("sweep_history.csv"))?;
    history.write_json(&out.join("sweep_history.json"))?;

    let ds = datasets
        .iter()
        .find(|d| d.history.n == history.selected_n)
        .expect("selected history comes from the grid");
    let mu = sweep_mu(ds, &cfg.sweep, &opts)?;
    mu.write_csv(&out.join("sweep_mu.csv"))?;
    mu.write_json(&out.join("sweep_mu.json"))?;
    write_pareto_csv(&out.join("pareto.csv"), &pareto_table(&mu))?;

    let selection = Selection { n: history.selected_n, mu: mu.selected_mu };
    write_json(&out.join(SELECTION), &selection)?;
    Ok((history, mu, selection))
}

/// Reports of one validation experiment in both evaluation modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub rollout: ValidationReport,
    pub teacher_forced: Option<ValidationReport>,
}

/// The validation traces, in suite order.
pub fn validation_suite(cfg: &PipelineConfig) -> Result<Vec<(String, CommandTrace)>> {
    let v = &cfg.validation;
    let mut suite = vec![
        ("sine".to_string(), excitation_segment(v.sine_bias, &cfg.excitation)?),
        ("stair".to_string(), step_stair_trace(&v.stair_levels, v.stair_hold, &cfg.excitation)?),
        ("fall".to_string(), step_stair_trace(&v.fall, v.fall_hold, &cfg.excitation)?),
    ];
    if v.descent {
        suite.push(("descent".to_string(), descent_profile(cfg.plant.dt)));
    }
    Ok(suite)
}

/// Runs the validation suite with any predictor. Experiments that diverge
/// are reported as such and the suite continues.
pub fn validate_with<P: TrajectoryPredictor + ?Sized>(
    cfg: &PipelineConfig,
    predictor: &P,
    model: Option<&CoefficientModel>,
    out: &Path,
) -> Result<Vec<ExperimentReport>> {
    ensure_dir(out)?;
    cfg.write_snapshot(out)?;
    let mut reports = Vec::new();
    for (name, trace) in validation_suite(cfg)? {
        let (rollout, truth, ro) = evaluate(&name, predictor, &trace, &cfg.plant)?;
        truth.write_csv(&out.join(format!("{name}_truth.csv")))?;
        if let Some(ro) = &ro {
            ro.clamped.write_csv_with_suffix(&out.join(format!("{name}_pred.csv")), "_pred")?;
            write_plot_csv(&out.join(format!("{name}_plot.csv")), &truth, &ro.clamped, &cfg.plant)?;
        }
        let teacher_forced = model.map(|m| teacher_forced_eval(&name, m, &truth, &cfg.plant)).transpose()?;
        let report = ExperimentReport { experiment: name.clone(), rollout, teacher_forced };
        write_json(&out.join(format!("{name}_report.json")), &report)?;
        reports.push(report);
    }
    write_json(&out.join("validation.json"), &reports)?;
    Ok(reports)
}

/// Validates a saved model against the plant.
pub fn cmd_validate(cfg: &PipelineConfig, model_path: &Path, out: &Path) -> Result<Vec<ExperimentReport>> {
    let model = CoefficientModel::load(model_path)?;
    validate_with(cfg, &model, Some(&model), out)
}

/// Validation with the plant standing in for the model; every error is
/// zero. Useful to check the harness itself.
pub fn cmd_validate_passthrough(cfg: &PipelineConfig, out: &Path) -> Result<Vec<ExperimentReport>> {
    let p = PlantPassthrough { cfg: cfg.plant.clone(), n: cfg.history.n };
    validate_with(cfg, &p, None, out)
}
