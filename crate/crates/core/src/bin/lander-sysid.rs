use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lander_sysid::error::{Error, Result};
use lander_sysid::io::read_json;
use lander_sysid::pipeline::{
    cmd_gen_data, cmd_sweep, cmd_train, cmd_validate, cmd_validate_passthrough, PipelineConfig, Selection, SELECTION,
};
use lander_sysid::regression::{BasisKind, BasisSpec};

#[derive(Parser)]
#[command(name = "lander-sysid", version, about = "Sparse identification of a four-engine lander propulsion system")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON configuration; missing fields take defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output_dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// linear | elementwise-poly | full-quadratic
    #[arg(long, global = true)]
    basis: Option<String>,
    #[arg(long, global = true)]
    folds: Option<usize>,
    /// History length n.
    #[arg(long, global = true)]
    history: Option<usize>,
    /// L1 weight.
    #[arg(long, global = true)]
    mu: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the excitation corpus.
    GenData,
    /// Cross-validated sweep over history length, then over the L1 weight.
    Sweep {
        #[arg(long)]
        data: PathBuf,
    },
    /// Fit a model on the whole corpus.
    Train {
        #[arg(long)]
        data: PathBuf,
        /// Take n and mu from a sweep's selected.json (or its directory).
        #[arg(long)]
        from_sweep: Option<PathBuf>,
    },
    /// Run the validation suite against the plant.
    Validate {
        #[arg(long, required_unless_present = "passthrough")]
        model: Option<PathBuf>,
        /// Use the plant itself as the predictor.
        #[arg(long)]
        passthrough: bool,
    },
}

fn config(common: &Common) -> Result<PipelineConfig> {
    let mut cfg = match &common.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(out) = &common.out {
        cfg.output_dir = out.clone();
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(b) = &common.basis {
        let kind: BasisKind = b.parse()?;
        cfg.basis = match kind {
            BasisKind::Linear => BasisSpec::linear(),
            kind => BasisSpec { kind, degree: 2, include_bias: true },
        };
    }
    if let Some(folds) = common.folds {
        cfg.sweep.folds = folds;
    }
    if let Some(n) = common.history {
        cfg.history.n = n;
    }
    if let Some(mu) = common.mu {
        cfg.train.mu = mu;
    }
    cfg.resolve()
}

fn run(cli: Cli) -> Result<serde_json::Value> {
    let mut cfg = config(&cli.common)?;
    let out = cfg.output_dir.clone();
    let value = match cli.command {
        Command::GenData => {
            let m = cmd_gen_data(&cfg, &out)?;
            serde_json::json!({ "stage": "gen-data", "out": out, "summary": m.summary })
        }
        Command::Sweep { data } => {
            let (_, _, sel) = cmd_sweep(&cfg, &data, &out)?;
            serde_json::json!({ "stage": "sweep", "out": out, "selected": sel })
        }
        Command::Train { data, from_sweep } => {
            if let Some(path) = from_sweep {
                let path = if path.is_dir() { path.join(SELECTION) } else { path };
                let sel: Selection = read_json(&path)?;
                cfg.history.n = sel.n;
                cfg.train.mu = sel.mu;
                cfg = cfg.resolve()?;
            }
            let (_, report) = cmd_train(&cfg, &data, &out)?;
            serde_json::json!({
                "stage": "train", "out": out, "n": report.n, "mu": report.mu,
                "sparsity": report.sparsity, "train_rmse": report.train_rmse,
            })
        }
        Command::Validate { model, passthrough } => {
            let reports = match (passthrough, model) {
                (true, _) => cmd_validate_passthrough(&cfg, &out)?,
                (false, Some(model)) => cmd_validate(&cfg, &model, &out)?,
                (false, None) => return Err(Error::InvalidInput("validate needs --model or --passthrough".into())),
            };
            let summary: Vec<_> = reports
                .iter()
                .map(|r| {
                    serde_json::json!({
                        "experiment": r.experiment,
                        "thrust_max_abs_error": r.rollout.thrust_max(),
                        "module_mass_max_error": r.rollout.module_mass_max_error,
                        "diverged_at": r.rollout.diverged_at,
                    })
                })
                .collect();
            serde_json::json!({ "stage": "validate", "out": out, "experiments": summary })
        }
    };
    Ok(value)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(v) => {
            println!("{}", serde_json::to_string_pretty(&v).expect("json values serialize"));
            ExitCode::SUCCESS
        }
        Err(e) => {
            let v = serde_json::json!({ "error": e.kind(), "message": e.to_string() });
            eprintln!("{v}");
            ExitCode::FAILURE
        }
    }
}
