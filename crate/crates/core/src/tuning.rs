//! Cross-validated sweeps over history length and regularization weight.
//!
//! Errors are compared on a scale-free basis: each output's RMSE is divided
//! by the standard deviation of that target over the swept dataset, and the
//! per-output ratios are combined as a root mean square.

use std::path::Path;

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{fold_indices, Dataset, Fold, FoldMode, TARGETS};
use crate::io::write_json;
use crate::regression::{model_from_fit, problem_for_rows, CoefficientModel, LassoFit, TrainOptions};

/// `points` values spaced evenly in `log10` from `lo` to `hi`, endpoints
/// exact.
pub fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.log10(), hi.log10());
            (0..points)
                .map(|i| match i {
                    0 => lo,
                    i if i == points - 1 => hi,
                    i => 10f64.powf(a + (b - a) * i as f64 / (points - 1) as f64),
                })
                .collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    pub n_grid: Vec<usize>,
    pub mu_grid: Vec<f64>,
    pub folds: usize,
    pub seed: u64,
    pub fold_mode: FoldMode,
    /// Regularization weight held fixed while sweeping history length.
    pub history_mu: f64,
    /// Relative margin within which two mean test errors count as tied.
    pub tie_tolerance: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            n_grid: (1..=10).collect(),
            mu_grid: log_grid(1e-5, 1.0, 11),
            folds: 5,
            seed: 0,
            fold_mode: FoldMode::Shuffled,
            history_mu: 1e-3,
            tie_tolerance: 1e-3,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_grid.is_empty() || self.mu_grid.is_empty() {
            return Err(Error::InvalidConfig("sweep grids must not be empty".into()));
        }
        if self.n_grid.contains(&0) {
            return Err(Error::InvalidConfig("history lengths must be >= 1".into()));
        }
        if self.mu_grid.iter().chain([&self.history_mu]).any(|m| !(m.is_finite() && *m >= 0.0)) {
            return Err(Error::InvalidConfig("regularization weights must be finite and >= 0".into()));
        }
        if self.folds < 2 {
            return Err(Error::InvalidConfig(format!("need at least 2 folds, got {}", self.folds)));
        }
        if !(self.tie_tolerance >= 0.0) {
            return Err(Error::InvalidConfig("tie tolerance must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    History,
    Mu,
}

/// One grid point on one fold, or (with `fold == None`) the mean over folds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub mu: f64,
    pub fold: Option<usize>,
    pub train_rmse: f64,
    pub test_rmse: f64,
    pub sparsity: f64,
    pub nonzeros: usize,
    /// Test RMSE per output in target units.
    pub test_rmse_per_output: Vec<f64>,
    pub max_kkt_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub kind: SweepKind,
    pub folds: usize,
    pub selected_n: usize,
    pub selected_mu: f64,
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    /// Rows averaged over folds, in grid order.
    pub fn aggregate(&self) -> Vec<&SweepRow> {
        self.rows.iter().filter(|r| r.fold.is_none()).collect()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
        let mut header: Vec<String> =
            ["n", "mu", "fold", "train_rmse", "test_rmse", "sparsity", "nonzeros", "max_kkt_residual"]
                .map(String::from)
                .to_vec();
        header.extend(crate::features::TARGET_NAMES.iter().map(|t| format!("test_rmse_{t}")));
        w.write_record(&header).map_err(|e| Error::csv(path, e))?;
        for r in &self.rows {
            let mut rec = vec![
                r.n.to_string(),
                r.mu.to_string(),
                r.fold.map_or_else(|| "mean".to_string(), |f| f.to_string()),
                r.train_rmse.to_string(),
                r.test_rmse.to_string(),
                r.sparsity.to_string(),
                r.nonzeros.to_string(),
                r.max_kkt_residual.to_string(),
            ];
            rec.extend(r.test_rmse_per_output.iter().map(f64::to_string));
            w.write_record(&rec).map_err(|e| Error::csv(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }
}

fn target_scales(ds: &Dataset) -> Vec<f64> {
    ds.targets
        .std_axis(Axis(0), 0.0)
        .iter()
        .map(|&s| if s > 0.0 && s.is_finite() { s } else { 1.0 })
        .collect()
}

/// Per-output RMSE and the scale-free aggregate of a model on `rows`.
fn evaluate_rows(model: &CoefficientModel, ds: &Dataset, rows: &[usize], scales: &[f64]) -> Result<(Vec<f64>, f64)> {
    let mut ss = [0.0; TARGETS];
    for &i in rows {
        let x = ds.inputs.row(i).to_vec();
        let y = model.predict(&x)?;
        for k in 0..TARGETS {
            let e = y[k] - ds.targets[(i, k)];
            ss[k] += e * e;
        }
    }
    let m = rows.len().max(1) as f64;
    let per: Vec<f64> = ss.iter().map(|s| (s / m).sqrt()).collect();
    let agg = (per.iter().zip(scales).map(|(r, s)| (r / s).powi(2)).sum::<f64>() / TARGETS as f64).sqrt();
    Ok((per, agg))
}

fn fold_failed(n: usize, fold: usize) -> impl Fn(Error) -> Error {
    move |e| Error::FoldFailed { n, fold, source: Box::new(e) }
}

/// k-fold CV of one dataset along `mus`. Each fold walks the grid from the
/// largest weight down, warm-starting every fit from the previous one.
/// Returns per-fold rows followed by the fold means, both in grid order.
pub fn cross_validate(ds: &Dataset, mus: &[f64], folds: &[Fold], opts: &TrainOptions) -> Result<Vec<SweepRow>> {
    let n = ds.history.n;
    let scales = target_scales(ds);
    let mut order: Vec<usize> = (0..mus.len()).collect();
    order.sort_by(|&a, &b| mus[b].total_cmp(&mus[a]).then(a.cmp(&b)));

    let mut per_fold: Vec<Vec<Option<SweepRow>>> = Vec::with_capacity(folds.len());
    for (fi, fold) in folds.iter().enumerate() {
        let err = fold_failed(n, fi);
        let problem = problem_for_rows(ds, Some(&fold.train), opts).map_err(&err)?;
        let mut rows = vec![None; mus.len()];
        let mut warm: Option<Array2<f64>> = None;
        for &gi in &order {
            let mu = mus[gi];
            let fit: LassoFit = problem.solve(mu, &opts.lasso, warm.as_ref()).map_err(&err)?;
            warm = Some(fit.coef.clone());
            let max_kkt = fit.kkt_residual.iter().copied().fold(0.0, f64::max);
            let fit = if opts.refit { problem.refit(&fit) } else { fit };
            let model = model_from_fit(&problem, &fit, ds.history, ds.lambda, opts);
            let (_, train) = evaluate_rows(&model, ds, &fold.train, &scales).map_err(&err)?;
            let (per, test) = evaluate_rows(&model, ds, &fold.test, &scales).map_err(&err)?;
            rows[gi] = Some(SweepRow {
                n,
                mu,
                fold: Some(fi),
                train_rmse: train,
                test_rmse: test,
                sparsity: model.sparsity,
                nonzeros: model.nonzeros(),
                test_rmse_per_output: per,
                max_kkt_residual: max_kkt,
            });
        }
        per_fold.push(rows);
    }

    let mut out: Vec<SweepRow> = Vec::new();
    for rows in &per_fold {
        out.extend(rows.iter().map(|r| r.clone().expect("every grid point solved")));
    }
    let k = folds.len() as f64;
    for gi in 0..mus.len() {
        let col: Vec<&SweepRow> = per_fold.iter().map(|rows| rows[gi].as_ref().expect("solved")).collect();
        let mean = |f: &dyn Fn(&SweepRow) -> f64| col.iter().map(|r| f(r)).sum::<f64>() / k;
        out.push(SweepRow {
            n,
            mu: mus[gi],
            fold: None,
            train_rmse: mean(&|r| r.train_rmse),
            test_rmse: mean(&|r| r.test_rmse),
            sparsity: mean(&|r| r.sparsity),
            nonzeros: (mean(&|r| r.nonzeros as f64)).round() as usize,
            test_rmse_per_output: (0..TARGETS).map(|o| mean(&|r| r.test_rmse_per_output[o])).collect(),
            max_kkt_residual: col.iter().map(|r| r.max_kkt_residual).fold(0.0, f64::max),
        });
    }
    Ok(out)
}

/// Index of the preferred candidate: the lowest error, except that any
/// candidate within the tie margin that comes earlier in `preference`
/// wins. `preference` lists candidate indices from most to least preferred.
fn select(errors: &[f64], preference: &[usize], tie: f64) -> usize {
    let best = errors.iter().copied().fold(f64::INFINITY, f64::min);
    let margin = best * tie + 1e-12;
    preference.iter().copied().find(|&i| errors[i] <= best + margin).unwrap_or(preference[0])
}

/// CV over history lengths at the fixed weight `cfg.history_mu`. Expects
/// one dataset per history length, assembled from the same trajectories.
pub fn sweep_history(datasets: &[Dataset], cfg: &SweepConfig, opts: &TrainOptions) -> Result<SweepReport> {
    cfg.validate()?;
    if datasets.is_empty() {
        return Err(Error::InvalidInput("no datasets to sweep".into()));
    }
    let mut rows = Vec::new();
    let mut agg = Vec::new();
    for ds in datasets {
        let folds = fold_indices(ds.rows(), cfg.folds, cfg.seed, cfg.fold_mode)?;
        let r = cross_validate(ds, &[cfg.history_mu], &folds, opts)?;
        agg.push(r.last().expect("aggregate row").clone());
        rows.extend(r);
    }
    let errors: Vec<f64> = agg.iter().map(|r| r.test_rmse).collect();
    let mut preference: Vec<usize> = (0..agg.len()).collect();
    preference.sort_by_key(|&i| (agg[i].n, i));
    let chosen = select(&errors, &preference, cfg.tie_tolerance);
    Ok(SweepReport {
        kind: SweepKind::History,
        folds: cfg.folds,
        selected_n: agg[chosen].n,
        selected_mu: cfg.history_mu,
        rows,
    })
}

/// CV over `cfg.mu_grid` on a dataset at a fixed history length.
pub fn sweep_mu(ds: &Dataset, cfg: &SweepConfig, opts: &TrainOptions) -> Result<SweepReport> {
    cfg.validate()?;
    let folds = fold_indices(ds.rows(), cfg.folds, cfg.seed, cfg.fold_mode)?;
    let rows = cross_validate(ds, &cfg.mu_grid, &folds, opts)?;
    let agg: Vec<&SweepRow> = rows.iter().filter(|r| r.fold.is_none()).collect();
    let errors: Vec<f64> = agg.iter().map(|r| r.test_rmse).collect();
    let mut preference: Vec<usize> = (0..agg.len()).collect();
    preference.sort_by(|&a, &b| agg[b].mu.total_cmp(&agg[a].mu).then(a.cmp(&b)));
    let chosen = select(&errors, &preference, cfg.tie_tolerance);
    let selected_mu = agg[chosen].mu;
    Ok(SweepReport { kind: SweepKind::Mu, folds: cfg.folds, selected_n: ds.history.n, selected_mu, rows })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoRow {
    pub mu: f64,
    pub sparsity: f64,
    pub train_rmse: f64,
    pub test_rmse: f64,
    /// Not dominated by a point that is at least as sparse and at least as
    /// accurate, and strictly better in one of the two.
    pub pareto: bool,
    pub knee: bool,
}

/// Sparsity/accuracy trade-off of a `μ` sweep: the full path in grid order
/// with the non-dominated points and the knee marked. The knee is the
/// non-dominated point farthest from the chord joining the two extreme
/// non-dominated points, with both axes scaled to their ranges.
pub fn pareto_table(report: &SweepReport) -> Vec<ParetoRow> {
    let agg = report.aggregate();
    let dominated = |p: &SweepRow| {
        agg.iter().any(|q| {
            q.sparsity >= p.sparsity
                && q.test_rmse <= p.test_rmse
                && (q.sparsity > p.sparsity || q.test_rmse < p.test_rmse)
        })
    };
    let mut rows: Vec<ParetoRow> = agg
        .iter()
        .map(|r| ParetoRow {
            mu: r.mu,
            sparsity: r.sparsity,
            train_rmse: r.train_rmse,
            test_rmse: r.test_rmse,
            pareto: !dominated(r),
            knee: false,
        })
        .collect();

    let front: Vec<usize> = (0..rows.len()).filter(|&i| rows[i].pareto).collect();
    let knee = if front.len() <= 2 {
        front.iter().copied().min_by(|&a, &b| rows[a].test_rmse.total_cmp(&rows[b].test_rmse))
    } else {
        let xs = front.iter().map(|&i| rows[i].sparsity);
        let ys = front.iter().map(|&i| rows[i].test_rmse);
        let (x0, x1) = (xs.clone().fold(f64::INFINITY, f64::min), xs.fold(f64::NEG_INFINITY, f64::max));
        let (y0, y1) = (ys.clone().fold(f64::INFINITY, f64::min), ys.fold(f64::NEG_INFINITY, f64::max));
        let norm = |i: usize| {
            let x = if x1 > x0 { (rows[i].sparsity - x0) / (x1 - x0) } else { 0.0 };
            let y = if y1 > y0 { (rows[i].test_rmse - y0) / (y1 - y0) } else { 0.0 };
            (x, y)
        };
        let a = *front.iter().min_by(|&&i, &&j| rows[i].sparsity.total_cmp(&rows[j].sparsity)).expect("front");
        let b = *front.iter().max_by(|&&i, &&j| rows[i].sparsity.total_cmp(&rows[j].sparsity)).expect("front");
        let ((ax, ay), (bx, by)) = (norm(a), norm(b));
        let len = ((bx - ax).powi(2) + (by - ay).powi(2)).sqrt();
        front.iter().copied().max_by(|&i, &j| {
            let d = |k: usize| {
                let (x, y) = norm(k);
                if len > 0.0 {
                    ((bx - ax) * (ay - y) - (ax - x) * (by - ay)).abs() / len
                } else {
                    0.0
                }
            };
            d(i).total_cmp(&d(j)).then(j.cmp(&i))
        })
    };
    if let Some(k) = knee {
        rows[k].knee = true;
    }
    rows
}

pub fn write_pareto_csv(path: &Path, rows: &[ParetoRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(mu: f64, sparsity: f64, test: f64) -> SweepRow {
        SweepRow {
            n: 1,
            mu,
            fold: None,
            train_rmse: test,
            test_rmse: test,
            sparsity,
            nonzeros: 0,
            test_rmse_per_output: vec![test; TARGETS],
            max_kkt_residual: 0.0,
        }
    }

    fn report(rows: Vec<SweepRow>) -> SweepReport {
        SweepReport { kind: SweepKind::Mu, folds: 2, selected_n: 1, selected_mu: rows[0].mu, rows }
    }

    #[test]
    fn log_grid_endpoints() {
        let g = log_grid(1e-5, 1.0, 11);
        assert_eq!(g.len(), 11);
        assert_eq!(g[0], 1e-5);
        assert_eq!(g[10], 1.0);
        assert!((g[5] - 10f64.powf(-2.5)).abs() < 1e-15);
        assert_eq!(log_grid(1e-3, 1.0, 1), vec![1e-3]);
    }

    #[test]
    fn selection_breaks_ties_by_preference() {
        // Errors 1.0 and 1.0005 tie at 1e-3; preference order decides.
        assert_eq!(select(&[1.0005, 1.0, 2.0], &[0, 1, 2], 1e-3), 0);
        assert_eq!(select(&[1.01, 1.0, 2.0], &[0, 1, 2], 1e-3), 1);
        assert_eq!(select(&[3.0], &[0], 0.0), 0);
    }

    #[test]
    fn pareto_excludes_dominated_points() {
        let rows = pareto_table(&report(vec![
            row(1e-3, 0.2, 1.0),
            row(1e-2, 0.5, 1.1),
            row(2e-2, 0.4, 1.2), // dominated by the previous point
            row(1e-1, 0.9, 3.0),
        ]));
        let flags: Vec<bool> = rows.iter().map(|r| r.pareto).collect();
        assert_eq!(flags, vec![true, true, false, true]);
        assert_eq!(rows.iter().filter(|r| r.knee).count(), 1);
        assert!(rows[1].knee);
    }

    #[test]
    fn pareto_single_point() {
        let rows = pareto_table(&report(vec![row(1e-3, 0.3, 1.0)]));
        assert_eq!(rows.len(), 1);
        assert!(rows[0].pareto && rows[0].knee);
    }

    #[test]
    fn config_validation() {
        assert!(SweepConfig::default().validate().is_ok());
        let bad = SweepConfig { folds: 1, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = SweepConfig { n_grid: vec![], ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = SweepConfig { mu_grid: vec![-1.0], ..Default::default() };
        assert!(bad.validate().is_err());
    }
}
