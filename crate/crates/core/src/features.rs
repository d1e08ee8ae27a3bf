//! History-extended supervised dataset.
//!
//! Input layout for history length `n` (width `11n + 10`):
//!
//! | block    | width | content                                        |
//! |----------|-------|------------------------------------------------|
//! | `T_r`    | 4     | commanded thrust at `t`                        |
//! | `T_r,h`  | 4n    | commanded thrust at `t-1..t-n`, engine-major   |
//! | `T_o,h`  | 4n    | delivered thrust at `t-1..t-n`, engine-major   |
//! | `P`      | 1     | feed pressure at `t`                           |
//! | `P_h`    | n     | feed pressure at `t-1..t-n`                    |
//! | `m_f,h`  | n     | ejected fuel at `t-1..t-n`                     |
//! | `m_o,h`  | n     | ejected oxidizer at `t-1..t-n`                 |
//! | `S_e`    | 4     | engine on/off at `t`                           |
//! | `λ`      | 1     | scaled inverse of ejected mass at `t-1`        |
//!
//! Targets are `(T_o[4], P, m_f, m_o)` at `t`.

use std::path::Path;

use ndarray::{s, Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{read_json, write_json};
use crate::plant::{PlantTrajectory, Quad, ENGINES};

pub const TARGETS: usize = 7;
pub const TARGET_NAMES: [&str; TARGETS] = ["To1", "To2", "To3", "To4", "P", "mf", "mo"];
/// Index of the pressure target.
pub const PRESSURE_TARGET: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistorySpec {
    pub n: usize,
}

impl Default for HistorySpec {
    fn default() -> Self {
        Self { n: 6 }
    }
}

impl HistorySpec {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidConfig("history length must be >= 1".into()));
        }
        Ok(Self { n })
    }

    pub fn layout(&self) -> FeatureLayout {
        FeatureLayout { n: self.n }
    }
}

/// Offsets into the input vector for history length `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureLayout {
    pub n: usize,
}

impl FeatureLayout {
    pub fn width(&self) -> usize {
        11 * self.n + 10
    }
    pub fn command(&self, engine: usize) -> usize {
        engine
    }
    pub fn command_hist(&self, engine: usize, lag: usize) -> usize {
        4 + engine * self.n + (lag - 1)
    }
    pub fn thrust_hist(&self, engine: usize, lag: usize) -> usize {
        4 + 4 * self.n + engine * self.n + (lag - 1)
    }
    pub fn pressure(&self) -> usize {
        4 + 8 * self.n
    }
    pub fn pressure_hist(&self, lag: usize) -> usize {
        5 + 8 * self.n + (lag - 1)
    }
    pub fn fuel_hist(&self, lag: usize) -> usize {
        5 + 9 * self.n + (lag - 1)
    }
    pub fn ox_hist(&self, lag: usize) -> usize {
        5 + 10 * self.n + (lag - 1)
    }
    pub fn status(&self, engine: usize) -> usize {
        5 + 11 * self.n + engine
    }
    pub fn lambda(&self) -> usize {
        9 + 11 * self.n
    }

    pub fn column_names(&self) -> Vec<String> {
        let n = self.n;
        let mut names = vec![String::new(); self.width()];
        for j in 0..ENGINES {
            names[self.command(j)] = format!("Tr{}", j + 1);
            names[self.status(j)] = format!("Se{}", j + 1);
            for h in 1..=n {
                names[self.command_hist(j, h)] = format!("Tr{}_h{h}", j + 1);
                names[self.thrust_hist(j, h)] = format!("To{}_h{h}", j + 1);
            }
        }
        names[self.pressure()] = "P".into();
        for h in 1..=n {
            names[self.pressure_hist(h)] = format!("P_h{h}");
            names[self.fuel_hist(h)] = format!("mf_h{h}");
            names[self.ox_hist(h)] = format!("mo_h{h}");
        }
        names[self.lambda()] = "lambda".into();
        names
    }
}

/// Constants of `λ = c / (m_f + m_o + eps)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaParams {
    pub scale: f64,
    pub eps: f64,
}

impl Default for LambdaParams {
    fn default() -> Self {
        Self { scale: 1.0, eps: 1.0 }
    }
}

pub fn lambda_feature(m_f: f64, m_o: f64, params: &LambdaParams) -> Result<f64> {
    if m_f < 0.0 || m_o < 0.0 {
        return Err(Error::InvalidInput(format!("negative ejected mass ({m_f}, {m_o})")));
    }
    if !(params.eps > 0.0) {
        return Err(Error::InvalidConfig("lambda eps must be positive".into()));
    }
    Ok(params.scale / (m_f + m_o + params.eps))
}

/// `[x[t-1], x[t-2], ..., x[t-n]]`.
pub fn extend_state(series: &[f64], t: usize, n: usize) -> Result<Vec<f64>> {
    if t < n {
        return Err(Error::InsufficientHistory { index: t, n });
    }
    if t > series.len() {
        return Err(Error::InvalidInput(format!("index {t} beyond series of length {}", series.len())));
    }
    Ok((1..=n).map(|h| series[t - h]).collect())
}

/// Output sample held in a history window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub command: Quad,
    pub thrust: Quad,
    pub pressure: f64,
    pub m_fuel: f64,
    pub m_ox: f64,
}

impl Sample {
    pub fn from_trajectory(traj: &PlantTrajectory, i: usize) -> Self {
        Self {
            command: traj.commands[i],
            thrust: traj.thrusts[i],
            pressure: traj.pressures[i],
            m_fuel: traj.m_fuel[i],
            m_ox: traj.m_ox[i],
        }
    }
}

/// Current-time inputs of one feature row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Current {
    pub command: Quad,
    pub status: Quad,
    pub pressure: f64,
}

/// Fills `out` with one input row. `history[0]` is the sample at `t-1`.
pub fn write_features(
    out: &mut [f64],
    layout: &FeatureLayout,
    current: &Current,
    history: &[Sample],
    lambda: &LambdaParams,
) -> Result<()> {
    let n = layout.n;
    if out.len() != layout.width() {
        return Err(Error::WidthMismatch { expected: layout.width(), found: out.len() });
    }
    if history.len() < n {
        return Err(Error::InsufficientHistory { index: history.len(), n });
    }
    for j in 0..ENGINES {
        out[layout.command(j)] = current.command[j];
        out[layout.status(j)] = current.status[j];
        for h in 1..=n {
            out[layout.command_hist(j, h)] = history[h - 1].command[j];
            out[layout.thrust_hist(j, h)] = history[h - 1].thrust[j];
        }
    }
    out[layout.pressure()] = current.pressure;
    for h in 1..=n {
        out[layout.pressure_hist(h)] = history[h - 1].pressure;
        out[layout.fuel_hist(h)] = history[h - 1].m_fuel;
        out[layout.ox_hist(h)] = history[h - 1].m_ox;
    }
    out[layout.lambda()] = lambda_feature(history[0].m_fuel, history[0].m_ox, lambda)?;
    Ok(())
}

pub fn target_row(traj: &PlantTrajectory, t: usize) -> [f64; TARGETS] {
    let th = traj.thrusts[t];
    [th[0], th[1], th[2], th[3], traj.pressures[t], traj.m_fuel[t], traj.m_ox[t]]
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowSource {
    pub trace: String,
    pub sample: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub inputs: Array2<f64>,
    pub targets: Array2<f64>,
    pub history: HistorySpec,
    pub lambda: LambdaParams,
    pub provenance: Vec<RowSource>,
}

impl Dataset {
    pub fn rows(&self) -> usize {
        self.inputs.nrows()
    }

    pub fn select(&self, rows: &[usize]) -> Dataset {
        Dataset {
            inputs: self.inputs.select(Axis(0), rows),
            targets: self.targets.select(Axis(0), rows),
            history: self.history,
            lambda: self.lambda,
            provenance: rows.iter().map(|&r| self.provenance[r].clone()).collect(),
        }
    }
}

/// Builds one row per sample `t` in `n..len`.
pub fn assemble(traj: &PlantTrajectory, history: &HistorySpec, source: &str) -> Result<Dataset> {
    assemble_with(traj, history, &LambdaParams::default(), source)
}

pub fn assemble_with(
    traj: &PlantTrajectory,
    history: &HistorySpec,
    lambda: &LambdaParams,
    source: &str,
) -> Result<Dataset> {
    traj.check_lengths()?;
    let n = history.n;
    if n == 0 {
        return Err(Error::InvalidConfig("history length must be >= 1".into()));
    }
    if traj.len() < n + 1 {
        return Err(Error::InvalidInput(format!(
            "trajectory of {} samples is too short for history {n}",
            traj.len()
        )));
    }
    let layout = history.layout();
    let rows = traj.len() - n;
    let mut inputs = Array2::<f64>::zeros((rows, layout.width()));
    let mut targets = Array2::<f64>::zeros((rows, TARGETS));
    let mut provenance = Vec::with_capacity(rows);
    let mut hist: Vec<Sample> = Vec::with_capacity(n);
    for (r, t) in (n..traj.len()).enumerate() {
        hist.clear();
        hist.extend((1..=n).map(|h| Sample::from_trajectory(traj, t - h)));
        let current = Current { command: traj.commands[t], status: traj.status[t], pressure: traj.pressures[t] };
        let mut row = inputs.row_mut(r);
        write_features(row.as_slice_mut().expect("row-major"), &layout, &current, &hist, lambda)?;
        for (k, v) in target_row(traj, t).into_iter().enumerate() {
            targets[(r, k)] = v;
        }
        provenance.push(RowSource { trace: source.to_string(), sample: t });
    }
    if inputs.iter().chain(targets.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("assembled dataset"));
    }
    Ok(Dataset { inputs, targets, history: *history, lambda: *lambda, provenance })
}

pub fn merge(datasets: &[Dataset]) -> Result<Dataset> {
    let first = datasets.first().ok_or_else(|| Error::InvalidInput("nothing to merge".into()))?;
    for d in datasets {
        if d.history != first.history {
            return Err(Error::HistoryMismatch { expected: first.history.n, found: d.history.n });
        }
    }
    let inputs = ndarray::concatenate(Axis(0), &datasets.iter().map(|d| d.inputs.view()).collect::<Vec<_>>())
        .map_err(|e| Error::InvalidInput(e.to_string()))?;
    let targets = ndarray::concatenate(Axis(0), &datasets.iter().map(|d| d.targets.view()).collect::<Vec<_>>())
        .map_err(|e| Error::InvalidInput(e.to_string()))?;
    let provenance = datasets.iter().flat_map(|d| d.provenance.iter().cloned()).collect();
    Ok(Dataset { inputs, targets, history: first.history, lambda: first.lambda, provenance })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FoldMode {
    /// Seeded shuffle of rows before cutting folds.
    #[default]
    Shuffled,
    /// Consecutive blocks of rows in dataset order.
    Contiguous,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Partitions row indices `0..rows` into `k` folds whose sizes differ by
/// at most one.
pub fn fold_indices(rows: usize, k: usize, seed: u64, mode: FoldMode) -> Result<Vec<Fold>> {
    if k < 2 {
        return Err(Error::InvalidConfig(format!("need at least 2 folds, got {k}")));
    }
    if k > rows {
        return Err(Error::InvalidInput(format!("{k} folds requested for {rows} rows")));
    }
    let mut order: Vec<usize> = (0..rows).collect();
    if mode == FoldMode::Shuffled {
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    let base = rows / k;
    let extra = rows % k;
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let size = base + usize::from(f < extra);
        let mut test = order[start..start + size].to_vec();
        test.sort_unstable();
        let mut train: Vec<usize> = order[..start].iter().chain(&order[start + size..]).copied().collect();
        train.sort_unstable();
        folds.push(Fold { train, test });
        start += size;
    }
    Ok(folds)
}

pub fn split_kfold(ds: &Dataset, k: usize, seed: u64, mode: FoldMode) -> Result<Vec<(Dataset, Dataset)>> {
    Ok(fold_indices(ds.rows(), k, seed, mode)?
        .into_iter()
        .map(|f| (ds.select(&f.train), ds.select(&f.test)))
        .collect())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct DatasetSidecar {
    n: usize,
    lambda: LambdaParams,
    columns: Vec<String>,
    targets: Vec<String>,
    provenance: Vec<RowSource>,
}

impl Dataset {
    /// Writes `<stem>.csv` (inputs then targets, one row per sample) and
    /// `<stem>.json` (history, λ constants, provenance).
    pub fn save(&self, dir: &Path, stem: &str) -> Result<()> {
        let layout = self.history.layout();
        let columns = layout.column_names();
        let targets: Vec<String> = TARGET_NAMES.iter().map(|t| format!("y_{t}")).collect();
        let path = dir.join(format!("{stem}.csv"));
        let mut w = csv::Writer::from_path(&path).map_err(|e| Error::csv(&path, e))?;
        w.write_record(columns.iter().chain(&targets)).map_err(|e| Error::csv(&path, e))?;
        for (x, y) in self.inputs.outer_iter().zip(self.targets.outer_iter()) {
            w.write_record(x.iter().chain(y.iter()).map(f64::to_string))
                .map_err(|e| Error::csv(&path, e))?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        let sidecar = DatasetSidecar {
            n: self.history.n,
            lambda: self.lambda,
            columns,
            targets,
            provenance: self.provenance.clone(),
        };
        write_json(&dir.join(format!("{stem}.json")), &sidecar)
    }

    pub fn load(dir: &Path, stem: &str) -> Result<Dataset> {
        let sidecar: DatasetSidecar = read_json(&dir.join(format!("{stem}.json")))?;
        let history = HistorySpec::new(sidecar.n)?;
        let width = history.layout().width();
        let path = dir.join(format!("{stem}.csv"));
        let mut r = csv::Reader::from_path(&path).map_err(|e| Error::csv(&path, e))?;
        let mut flat = Vec::new();
        let mut rows = 0;
        for rec in r.records() {
            let rec = rec.map_err(|e| Error::csv(&path, e))?;
            if rec.len() != width + TARGETS {
                return Err(Error::WidthMismatch { expected: width + TARGETS, found: rec.len() });
            }
            for f in rec.iter() {
                flat.push(f.parse::<f64>().map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?);
            }
            rows += 1;
        }
        let all = Array2::from_shape_vec((rows, width + TARGETS), flat).map_err(|e| Error::InvalidInput(e.to_string()))?;
        Ok(Dataset {
            inputs: all.slice(s![.., ..width]).to_owned(),
            targets: all.slice(s![.., width..]).to_owned(),
            history,
            lambda: sidecar.lambda,
            provenance: sidecar.provenance,
        })
    }
}
