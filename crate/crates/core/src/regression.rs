//! Polynomial basis expansion and L1-regularized least squares.
//!
//! Fitting works on standardized basis columns and standardized targets.
//! For each output row the solver minimizes
//!
//! ```text
//! (1 / 2N) Σ_i (y_i - z_i·β)² + μ ‖β‖₁
//! ```
//!
//! by cyclic coordinate descent with soft-thresholding on the Gram matrix
//! `ZᵀZ / N`. The bias column is never penalized. The stored coefficient
//! matrix is mapped back to raw basis coordinates, so prediction is a
//! single matrix-vector product `K φ(x)`.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use ndarray::{linalg::general_mat_mul, s, Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{Dataset, FeatureLayout, HistorySpec, LambdaParams, PRESSURE_TARGET, TARGETS};
use crate::io::{read_json, write_json};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BasisKind {
    Linear,
    ElementwisePoly,
    FullQuadratic,
}

impl std::str::FromStr for BasisKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(BasisKind::Linear),
            "elementwise-poly" | "poly" => Ok(BasisKind::ElementwisePoly),
            "full-quadratic" | "quadratic" => Ok(BasisKind::FullQuadratic),
            other => Err(Error::InvalidConfig(format!("unknown basis kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisSpec {
    pub kind: BasisKind,
    pub degree: usize,
    pub include_bias: bool,
}

impl Default for BasisSpec {
    fn default() -> Self {
        Self { kind: BasisKind::ElementwisePoly, degree: 2, include_bias: true }
    }
}

impl BasisSpec {
    pub fn linear() -> Self {
        Self { kind: BasisKind::Linear, degree: 1, include_bias: true }
    }

    pub fn validate(&self) -> Result<()> {
        if self.degree == 0 {
            return Err(Error::InvalidConfig("basis degree must be >= 1".into()));
        }
        Ok(())
    }

    /// Expanded width for `p` inputs.
    pub fn width(&self, p: usize) -> usize {
        let bias = usize::from(self.include_bias);
        bias + match self.kind {
            BasisKind::Linear => p,
            BasisKind::ElementwisePoly => self.degree * p,
            BasisKind::FullQuadratic => p + p * (p + 1) / 2,
        }
    }

    /// Column ordering: bias, then `x`, then `x²`, ... for the elementwise
    /// basis; bias, `x`, then `x_i x_j` for `i <= j` in row-major order for
    /// the full quadratic.
    pub fn expand_into(&self, x: &[f64], out: &mut [f64]) {
        let p = x.len();
        debug_assert_eq!(out.len(), self.width(p));
        let mut k = 0;
        if self.include_bias {
            out[0] = 1.0;
            k = 1;
        }
        out[k..k + p].copy_from_slice(x);
        k += p;
        match self.kind {
            BasisKind::Linear => {}
            BasisKind::ElementwisePoly => {
                for d in 2..=self.degree {
                    for (o, &v) in out[k..k + p].iter_mut().zip(x) {
                        *o = v.powi(d as i32);
                    }
                    k += p;
                }
            }
            BasisKind::FullQuadratic => {
                for i in 0..p {
                    for j in i..p {
                        out[k] = x[i] * x[j];
                        k += 1;
                    }
                }
            }
        }
    }

    pub fn expand(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.width(x.len())];
        self.expand_into(x, &mut out);
        out
    }

    pub fn expand_rows(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut out = Array2::zeros((x.nrows(), self.width(x.ncols())));
        for (xr, mut or) in x.outer_iter().zip(out.outer_iter_mut()) {
            let xr = xr.to_vec();
            self.expand_into(&xr, or.as_slice_mut().expect("row-major"));
        }
        out
    }

    /// For every expanded column, whether it depends on input `input`.
    pub fn depends_on(&self, p: usize, input: usize) -> Vec<bool> {
        let mut dep = Vec::with_capacity(self.width(p));
        if self.include_bias {
            dep.push(false);
        }
        dep.extend((0..p).map(|i| i == input));
        match self.kind {
            BasisKind::Linear => {}
            BasisKind::ElementwisePoly => {
                for _ in 2..=self.degree {
                    dep.extend((0..p).map(|i| i == input));
                }
            }
            BasisKind::FullQuadratic => {
                for i in 0..p {
                    for j in i..p {
                        dep.push(i == input || j == input);
                    }
                }
            }
        }
        dep
    }
}

/// `sign(z) max(|z| - a, 0)`.
pub fn soft_threshold(z: f64, a: f64) -> f64 {
    if z > a {
        z - a
    } else if z < -a {
        z + a
    } else {
        0.0
    }
}

/// Per-column affine map of the basis: `z = (φ - mean) / scale`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardization {
    pub fn apply(&self, phi: &[f64]) -> Vec<f64> {
        phi.iter().zip(&self.mean).zip(&self.scale).map(|((v, m), s)| (v - m) / s).collect()
    }

    pub fn invert(&self, z: &[f64]) -> Vec<f64> {
        z.iter().zip(&self.mean).zip(&self.scale).map(|((v, m), s)| v * s + m).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LassoOptions {
    pub max_sweeps: usize,
    /// Convergence threshold on the KKT residual.
    pub tol: f64,
}

impl Default for LassoOptions {
    fn default() -> Self {
        Self { max_sweeps: 10_000, tol: 1e-8 }
    }
}

/// Solution of one coordinate-descent problem.
#[derive(Debug, Clone, PartialEq)]
pub struct CdSolution {
    pub coef: Vec<f64>,
    pub sweeps: usize,
    pub converged: bool,
    pub kkt_residual: f64,
}

/// `½ βᵀGβ - cᵀβ + μ Σ_{penalized} |β_j|`.
pub fn quadratic_objective(gram: ArrayView2<f64>, xty: &[f64], coef: &[f64], mu: f64, penalized: &[bool]) -> f64 {
    let b = ArrayView1::from(coef);
    let gb = gram.dot(&b);
    let quad = 0.5 * b.dot(&gb) - b.iter().zip(xty).map(|(x, c)| x * c).sum::<f64>();
    let l1: f64 = coef.iter().zip(penalized).filter(|(_, &p)| p).map(|(v, _)| v.abs()).sum();
    quad + mu * l1
}

/// Largest violation of the subgradient optimality conditions. Columns
/// marked `fixed` are held at zero and not checked.
pub fn kkt_residual(
    gram: ArrayView2<f64>,
    xty: &[f64],
    coef: &[f64],
    mu: f64,
    penalized: &[bool],
    fixed: &[bool],
) -> f64 {
    let b = ArrayView1::from(coef);
    let grad = gram.dot(&b);
    let mut worst = 0.0f64;
    for j in 0..coef.len() {
        if fixed[j] {
            continue;
        }
        let g = grad[j] - xty[j];
        let r = if !penalized[j] {
            g.abs()
        } else if coef[j] == 0.0 {
            (g.abs() - mu).max(0.0)
        } else {
            (g + mu * coef[j].signum()).abs()
        };
        worst = worst.max(r);
    }
    worst
}

/// Objective restricted to the coordinates in `idx` (all others zero).
fn restricted_objective(g: &DMatrix<f64>, c: &DVector<f64>, beta: &DVector<f64>, mu: f64, pen: &[bool]) -> f64 {
    let quad = 0.5 * beta.dot(&(g * beta)) - c.dot(beta);
    let l1: f64 = beta.iter().zip(pen).filter(|(_, &p)| p).map(|(v, _)| v.abs()).sum();
    quad + mu * l1
}

/// Active-set finishing for a coordinate-descent iterate.
///
/// Repeatedly solves the problem exactly on the current support with the
/// current signs, `G_AA β = c_A − μ s_A`, moves towards that point with a
/// line search over the sign crossings, and adds the zero coordinate that
/// violates optimality the most. Every accepted step lowers the objective.
/// Returns the KKT residual reached.
fn active_set_finish(
    gram: ArrayView2<f64>,
    xty: &[f64],
    coef: &mut [f64],
    mu: f64,
    penalized: &[bool],
    frozen: &[bool],
    tol: f64,
) -> f64 {
    let f = coef.len();
    let mut sign: Vec<f64> = (0..f).map(|j| if penalized[j] { coef[j].signum() * f64::from(u8::from(coef[j] != 0.0)) } else { 0.0 }).collect();
    for _ in 0..4 * f + 16 {
        let grad: Vec<f64> = {
            let g = gram.dot(&ArrayView1::from(&coef[..]));
            (0..f).map(|j| g[j] - xty[j]).collect()
        };
        let kkt = kkt_residual(gram, xty, coef, mu, penalized, frozen);
        if kkt < tol {
            return kkt;
        }
        let support: Vec<usize> =
            (0..f).filter(|&j| !frozen[j] && (coef[j] != 0.0 || !penalized[j])).collect();
        // Nonzero coordinates already optimal: add the worst zero coordinate.
        let nz_ok = support.iter().all(|&j| (grad[j] + mu * sign[j]).abs() < tol || (coef[j] == 0.0 && penalized[j]));
        let mut support = support;
        if nz_ok {
            let worst = (0..f)
                .filter(|&j| !frozen[j] && penalized[j] && coef[j] == 0.0)
                .max_by(|&a, &b| grad[a].abs().total_cmp(&grad[b].abs()));
            match worst {
                Some(j) if grad[j].abs() > mu => {
                    sign[j] = -grad[j].signum();
                    support.push(j);
                    support.sort_unstable();
                    support.dedup();
                }
                _ => return kkt,
            }
        }
        if support.is_empty() {
            return kkt;
        }
        let k = support.len();
        let pen: Vec<bool> = support.iter().map(|&j| penalized[j]).collect();
        let g = DMatrix::from_fn(k, k, |a, b| gram[(support[a], support[b])]);
        let c = DVector::from_fn(k, |a, _| xty[support[a]]);
        let rhs = DVector::from_fn(k, |a, _| xty[support[a]] - mu * sign[support[a]]);
        let svd = g.clone().svd(true, true);
        let cut = svd.singular_values.max() * 1e-13;
        let Ok(mut target) = svd.solve(&rhs, cut) else {
            return kkt;
        };
        // Iterative refinement; the support blocks can be badly conditioned.
        for _ in 0..3 {
            let resid = &rhs - &g * &target;
            match svd.solve(&resid, cut) {
                Ok(d) => target += d,
                Err(_) => break,
            }
        }
        let start = DVector::from_fn(k, |a, _| coef[support[a]]);
        let f0 = restricted_objective(&g, &c, &start, mu, &pen);
        let dir = &target - &start;
        let mut steps = vec![1.0];
        // Candidate step lengths: the full step and every zero crossing.
        for a in 0..k {
            let (x0, x1) = (start[a], start[a] + dir[a]);
            if x0 != 0.0 && x0.signum() != x1.signum() {
                steps.push(x0 / (x0 - x1));
            }
        }
        steps.sort_by(f64::total_cmp);
        steps.dedup();
        let mut best: Option<(f64, DVector<f64>)> = None;
        for &t in &steps {
            let mut cand = &start + &dir * t;
            for a in 0..k {
                let (x0, x1) = (start[a], start[a] + dir[a]);
                if x0 != 0.0 && x0.signum() != x1.signum() && (x0 / (x0 - x1) - t).abs() <= 1e-15 * (1.0 + t) {
                    cand[a] = 0.0;
                }
            }
            let val = restricted_objective(&g, &c, &cand, mu, &pen);
            if best.as_ref().is_none_or(|(v, _)| val < *v) {
                best = Some((val, cand));
            }
        }
        let Some((val, cand)) = best else { return kkt };
        if val > f0 {
            return kkt;
        }
        let before: Vec<f64> = coef.to_vec();
        for (a, &j) in support.iter().enumerate() {
            coef[j] = cand[a];
        }
        for j in 0..f {
            sign[j] = if penalized[j] && coef[j] != 0.0 { coef[j].signum() } else { 0.0 };
        }
        if coef == &before[..] {
            return kkt;
        }
    }
    kkt_residual(gram, xty, coef, mu, penalized, frozen)
}

/// Cyclic coordinate descent on `½ βᵀGβ - cᵀβ + μ‖β_pen‖₁`.
///
/// Full sweeps alternate with sweeps over the current nonzero set. Once a
/// full sweep leaves the sign pattern unchanged the iterate is handed to an
/// active-set finisher that solves exactly on the support; this matters on
/// the strongly collinear designs produced by history embedding, where
/// plain coordinate descent converges very slowly. The iteration stops when
/// the KKT residual is below `opts.tol`. Coordinates with `fixed[j]` or a
/// zero diagonal stay at zero.
pub fn coordinate_descent(
    gram: ArrayView2<f64>,
    xty: &[f64],
    mu: f64,
    penalized: &[bool],
    fixed: &[bool],
    opts: &LassoOptions,
    warm: Option<&[f64]>,
) -> CdSolution {
    let f = xty.len();
    let frozen: Vec<bool> = (0..f).map(|j| fixed[j] || gram[(j, j)] <= 0.0).collect();
    let mut coef: Vec<f64> = match warm {
        Some(w) => w.iter().zip(&frozen).map(|(&v, &z)| if z { 0.0 } else { v }).collect(),
        None => vec![0.0; f],
    };
    // q = Gβ
    let mut q = gram.dot(&ArrayView1::from(&coef[..])).to_vec();

    let update = |j: usize, coef: &mut [f64], q: &mut [f64]| -> f64 {
        let gjj = gram[(j, j)];
        let old = coef[j];
        let rho = xty[j] - q[j] + gjj * old;
        let new = if penalized[j] { soft_threshold(rho, mu) / gjj } else { rho / gjj };
        let delta = new - old;
        if delta != 0.0 {
            coef[j] = new;
            for (qk, g) in q.iter_mut().zip(gram.row(j)) {
                *qk += g * delta;
            }
        }
        delta.abs()
    };
    let signature = |coef: &[f64]| -> Vec<i8> { coef.iter().map(|v| v.signum() as i8 * i8::from(*v != 0.0)).collect() };

    let mut sweeps = 0;
    let mut converged = false;
    let mut kkt = f64::INFINITY;
    let mut last: Option<Vec<i8>> = None;
    let mut tried: Option<Vec<i8>> = None;
    while sweeps < opts.max_sweeps {
        sweeps += 1;
        for j in 0..f {
            if !frozen[j] {
                update(j, &mut coef, &mut q);
            }
        }
        kkt = kkt_residual(gram, xty, &coef, mu, penalized, &frozen);
        if kkt < opts.tol {
            converged = true;
            break;
        }
        let sig = signature(&coef);
        if last.as_ref() == Some(&sig) && tried.as_ref() != Some(&sig) {
            let mut cand = coef.clone();
            let r = active_set_finish(gram, xty, &mut cand, mu, penalized, &frozen, opts.tol);
            if r < kkt {
                coef = cand;
                kkt = r;
                q = gram.dot(&ArrayView1::from(&coef[..])).to_vec();
            }
            if kkt < opts.tol {
                converged = true;
                break;
            }
            tried = Some(sig.clone());
        }
        last = Some(sig);
        // Polish the active set before the next full pass.
        let mut inner_sweeps = 0;
        while sweeps < opts.max_sweeps && inner_sweeps < 100 {
            sweeps += 1;
            inner_sweeps += 1;
            let mut inner = 0.0f64;
            for j in 0..f {
                if !frozen[j] && coef[j] != 0.0 {
                    inner = inner.max(update(j, &mut coef, &mut q));
                }
            }
            if inner < opts.tol {
                break;
            }
        }
    }
    if converged {
        if let Some(cand) = polish_support(gram, xty, &coef, mu, penalized, &frozen) {
            let r = kkt_residual(gram, xty, &cand, mu, penalized, &frozen);
            if r < kkt {
                coef = cand;
                kkt = r;
            }
        }
    }
    CdSolution { coef, sweeps, converged, kkt_residual: kkt }
}

/// Supports wider than this are left as coordinate descent returned them;
/// the dense solve would dominate the cost.
const POLISH_MAX_SUPPORT: usize = 512;

/// Exact solution on the support of a converged iterate with its signs
/// held, `G_AA β = c_A − μ s_A`. Coordinate descent stops at the KKT
/// tolerance; this removes the remaining error so that small coefficients
/// are accurate in relative terms too. `None` when a sign would flip.
fn polish_support(
    gram: ArrayView2<f64>,
    xty: &[f64],
    coef: &[f64],
    mu: f64,
    penalized: &[bool],
    frozen: &[bool],
) -> Option<Vec<f64>> {
    let support: Vec<usize> = (0..coef.len()).filter(|&j| !frozen[j] && (coef[j] != 0.0 || !penalized[j])).collect();
    if support.is_empty() || support.len() > POLISH_MAX_SUPPORT {
        return None;
    }
    let k = support.len();
    let sign = |j: usize| if penalized[j] { coef[j].signum() } else { 0.0 };
    let g = DMatrix::from_fn(k, k, |a, b| gram[(support[a], support[b])]);
    let rhs = DVector::from_fn(k, |a, _| xty[support[a]] - mu * sign(support[a]));
    let svd = g.clone().svd(true, true);
    let cut = svd.singular_values.max() * 1e-13;
    let mut beta = svd.solve(&rhs, cut).ok()?;
    for _ in 0..3 {
        let resid = &rhs - &g * &beta;
        beta += svd.solve(&resid, cut).ok()?;
    }
    let mut out = coef.to_vec();
    for (a, &j) in support.iter().enumerate() {
        if penalized[j] && beta[a].signum() != coef[j].signum() {
            return None;
        }
        out[j] = beta[a];
    }
    Some(out)
}

/// Relative residual variance below which a standardized column counts as
/// a linear combination of the columns before it.
pub const DEPENDENCE_TOL: f64 = 1e-9;

/// Columns of a positive semidefinite Gram matrix that are linear
/// combinations of earlier columns, found by an in-order Cholesky
/// factorization that skips columns whose residual variance falls below
/// `tol` times their own variance. Zero-variance columns are reported too.
pub fn dependent_columns(gram: &Array2<f64>, tol: f64) -> Vec<usize> {
    let f = gram.nrows();
    // Rows of L for the kept columns, in kept order.
    let mut kept: Vec<usize> = Vec::new();
    let mut l = Array2::<f64>::zeros((f, f));
    let mut dropped = Vec::new();
    for j in 0..f {
        let gjj = gram[(j, j)];
        if gjj <= 0.0 {
            dropped.push(j);
            continue;
        }
        let m = kept.len();
        let mut row = vec![0.0; m];
        for (a, &i) in kept.iter().enumerate() {
            let dot: f64 = (0..a).map(|b| l[(a, b)] * row[b]).sum();
            row[a] = (gram[(i, j)] - dot) / l[(a, a)];
        }
        let resid = gjj - row.iter().map(|v| v * v).sum::<f64>();
        if resid <= tol * gjj {
            dropped.push(j);
            continue;
        }
        for (b, v) in row.into_iter().enumerate() {
            l[(m, b)] = v;
        }
        l[(m, m)] = resid.sqrt();
        kept.push(j);
    }
    dropped
}

/// Standardized least-squares problem for several outputs sharing one
/// design. Holds the Gram matrix so that many `μ` values can be solved
/// without touching the rows again.
#[derive(Debug, Clone)]
pub struct LassoProblem {
    /// Whether column 0 is an unpenalized intercept.
    pub has_bias: bool,
    pub rows: usize,
    pub standardization: Standardization,
    pub target_mean: Vec<f64>,
    pub target_scale: Vec<f64>,
    /// `ZᵀZ / N` over non-bias columns.
    pub gram: Array2<f64>,
    /// `Zᵀ ỹ / N`, one column per output.
    pub xty: Array2<f64>,
    /// `allowed[(r, j)]`: non-bias column `j` may enter output `r`.
    pub allowed: Array2<bool>,
}

const CHUNK: usize = 1024;

impl LassoProblem {
    /// `phi` holds expanded rows; when `has_bias` its first column is the
    /// constant 1 and the problem is centered.
    pub fn new(phi: ArrayView2<f64>, targets: ArrayView2<f64>, has_bias: bool) -> Result<Self> {
        Self::from_rows(phi.nrows(), phi.ncols(), targets, has_bias, |r0, r1, out| {
            out.assign(&phi.slice(s![r0..r1, ..]));
        })
    }

    /// Builds the problem from a row generator so that wide bases never
    /// materialize the full expanded design. `fill(r0, r1, out)` writes
    /// expanded rows `r0..r1` into `out`.
    pub fn from_rows<F>(rows: usize, width: usize, targets: ArrayView2<f64>, has_bias: bool, fill: F) -> Result<Self>
    where
        F: Fn(usize, usize, &mut ndarray::ArrayViewMut2<f64>),
    {
        if rows == 0 {
            return Err(Error::InvalidInput("no rows to fit".into()));
        }
        if targets.nrows() != rows {
            return Err(Error::InvalidInput(format!("{rows} design rows but {} target rows", targets.nrows())));
        }
        if targets.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("targets"));
        }
        let off = usize::from(has_bias);
        if width < off {
            return Err(Error::InvalidInput("empty design".into()));
        }
        let fp = width - off;
        let nt = targets.ncols();
        let nf = rows as f64;

        let mut buf = Array2::<f64>::zeros((CHUNK, width));
        let mut mean = Array1::<f64>::zeros(fp);
        if has_bias {
            for r0 in (0..rows).step_by(CHUNK) {
                let r1 = (r0 + CHUNK).min(rows);
                let mut view = buf.slice_mut(s![..r1 - r0, ..]);
                fill(r0, r1, &mut view);
                if view.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite("features"));
                }
                mean += &view.slice(s![.., off..]).sum_axis(Axis(0));
            }
            mean /= nf;
        }
        let y_mean: Array1<f64> = if has_bias { targets.mean_axis(Axis(0)).expect("rows > 0") } else { Array1::zeros(nt) };

        let mut gram = Array2::<f64>::zeros((fp, fp));
        let mut cross = Array2::<f64>::zeros((fp, nt));
        let mut y_ss = Array1::<f64>::zeros(nt);
        for r0 in (0..rows).step_by(CHUNK) {
            let r1 = (r0 + CHUNK).min(rows);
            let mut view = buf.slice_mut(s![..r1 - r0, ..]);
            fill(r0, r1, &mut view);
            if view.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("features"));
            }
            let mut zc = view.slice(s![.., off..]).to_owned();
            zc -= &mean;
            let yc = &targets.slice(s![r0..r1, ..]) - &y_mean;
            general_mat_mul(1.0, &zc.t(), &zc, 1.0, &mut gram);
            general_mat_mul(1.0, &zc.t(), &yc, 1.0, &mut cross);
            y_ss += &yc.mapv(|v| v * v).sum_axis(Axis(0));
        }

        let scale: Vec<f64> = (0..fp)
            .map(|j| {
                let s = (gram[(j, j)] / nf).sqrt();
                if s > 0.0 && s.is_finite() {
                    s
                } else {
                    1.0
                }
            })
            .collect();
        let y_scale: Vec<f64> = y_ss
            .iter()
            .map(|&ss| {
                let s = (ss / nf).sqrt();
                if s > 0.0 {
                    s
                } else {
                    1.0
                }
            })
            .collect();
        for i in 0..fp {
            for j in 0..fp {
                gram[(i, j)] /= nf * scale[i] * scale[j];
            }
            for r in 0..nt {
                cross[(i, r)] /= nf * scale[i] * y_scale[r];
            }
        }
        // Exactly constant columns carry no information.
        for j in 0..fp {
            if gram[(j, j)] < 1e-24 {
                gram.row_mut(j).fill(0.0);
                gram.column_mut(j).fill(0.0);
                cross.row_mut(j).fill(0.0);
            }
        }
        // Columns that are (numerically) exact linear combinations of
        // earlier columns are dropped, so every support Gram block is
        // nonsingular and the solution is unique. History embedding of an
        // exactly discretized plant produces such columns: lagged pressure
        // is affine in lagged thrust, lagged masses are trapezoid sums of
        // lagged thrust, and a binary status equals its own square.
        for j in dependent_columns(&gram, DEPENDENCE_TOL) {
            gram.row_mut(j).fill(0.0);
            gram.column_mut(j).fill(0.0);
            cross.row_mut(j).fill(0.0);
        }

        let mut std_mean = vec![0.0; width];
        let mut std_scale = vec![1.0; width];
        for j in 0..fp {
            std_mean[off + j] = mean[j];
            std_scale[off + j] = scale[j];
        }
        Ok(Self {
            has_bias,
            rows,
            standardization: Standardization { mean: std_mean, scale: std_scale },
            target_mean: y_mean.to_vec(),
            target_scale: y_scale,
            gram,
            xty: cross,
            allowed: Array2::from_elem((nt, fp), true),
        })
    }

    pub fn outputs(&self) -> usize {
        self.xty.ncols()
    }

    pub fn penalized_width(&self) -> usize {
        self.gram.nrows()
    }

    /// Forbids expanded column `col` (full-width index) for output `output`.
    pub fn forbid(&mut self, output: usize, col: usize) {
        let off = usize::from(self.has_bias);
        if col >= off {
            self.allowed[(output, col - off)] = false;
        }
    }

    fn fixed(&self, r: usize) -> Vec<bool> {
        self.allowed.row(r).iter().map(|&a| !a).collect()
    }

    /// Solves every output row at `mu`, optionally warm-started from a
    /// previous standardized solution.
    pub fn solve(&self, mu: f64, opts: &LassoOptions, warm: Option<&Array2<f64>>) -> Result<LassoFit> {
        if !(mu >= 0.0 && mu.is_finite()) {
            return Err(Error::InvalidConfig(format!("mu must be finite and >= 0, got {mu}")));
        }
        let fp = self.penalized_width();
        let penalized = vec![true; fp];
        let mut coef = Array2::<f64>::zeros((self.outputs(), fp));
        let mut sweeps = Vec::with_capacity(self.outputs());
        let mut kkt = Vec::with_capacity(self.outputs());
        for r in 0..self.outputs() {
            let xty = self.xty.column(r).to_vec();
            let w = warm.map(|w| w.row(r).to_vec());
            let sol = coordinate_descent(self.gram.view(), &xty, mu, &penalized, &self.fixed(r), opts, w.as_deref());
            if !sol.converged {
                return Err(Error::NotConverged { output: r, sweeps: sol.sweeps, kkt_residual: sol.kkt_residual });
            }
            coef.row_mut(r).assign(&ArrayView1::from(&sol.coef[..]));
            sweeps.push(sol.sweeps);
            kkt.push(sol.kkt_residual);
        }
        Ok(LassoFit { mu, coef, sweeps, kkt_residual: kkt, refit: false })
    }

    /// Least-squares re-estimate of the nonzero coefficients of `fit`,
    /// keeping its support. Uses an SVD pseudo-inverse of the support Gram
    /// block so collinear supports still resolve to the minimum-norm
    /// solution.
    pub fn refit(&self, fit: &LassoFit) -> LassoFit {
        let mut coef = fit.coef.clone();
        for r in 0..self.outputs() {
            let support: Vec<usize> = (0..self.penalized_width()).filter(|&j| fit.coef[(r, j)] != 0.0).collect();
            if support.is_empty() {
                continue;
            }
            let k = support.len();
            let g = DMatrix::from_fn(k, k, |a, b| self.gram[(support[a], support[b])]);
            let c = DVector::from_fn(k, |a, _| self.xty[(support[a], r)]);
            let svd = g.svd(true, true);
            let smax = svd.singular_values.max();
            let beta = svd.solve(&c, smax * 1e-13).expect("u and v were computed");
            for (a, &j) in support.iter().enumerate() {
                coef[(r, j)] = beta[a];
            }
        }
        LassoFit { mu: fit.mu, coef, sweeps: fit.sweeps.clone(), kkt_residual: fit.kkt_residual.clone(), refit: true }
    }

    /// Objective of output `r` at standardized coefficients `coef`.
    pub fn objective(&self, r: usize, coef: &[f64], mu: f64) -> f64 {
        let xty = self.xty.column(r).to_vec();
        quadratic_objective(self.gram.view(), &xty, coef, mu, &vec![true; coef.len()])
    }

    pub fn kkt(&self, fit: &LassoFit) -> Vec<f64> {
        let penalized = vec![true; self.penalized_width()];
        (0..self.outputs())
            .map(|r| {
                let xty = self.xty.column(r).to_vec();
                let coef = fit.coef.row(r).to_vec();
                kkt_residual(self.gram.view(), &xty, &coef, fit.mu, &penalized, &self.fixed(r))
            })
            .collect()
    }

    /// Smallest `μ` at which every coefficient is zero.
    pub fn null_mu(&self) -> f64 {
        self.xty.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Maps a standardized solution to raw-basis coefficients.
    pub fn destandardize(&self, fit: &LassoFit) -> Array2<f64> {
        let off = usize::from(self.has_bias);
        let width = self.penalized_width() + off;
        let mut k = Array2::<f64>::zeros((self.outputs(), width));
        for r in 0..self.outputs() {
            let mut bias = self.target_mean[r];
            for j in 0..self.penalized_width() {
                let b = fit.coef[(r, j)];
                if b != 0.0 {
                    let kj = self.target_scale[r] * b / self.standardization.scale[off + j];
                    k[(r, off + j)] = kj;
                    bias -= kj * self.standardization.mean[off + j];
                }
            }
            if self.has_bias {
                k[(r, 0)] = bias;
            }
        }
        k
    }
}

/// Standardized coefficients for every output at one `μ`.
#[derive(Debug, Clone, PartialEq)]
pub struct LassoFit {
    pub mu: f64,
    /// Outputs × non-bias columns.
    pub coef: Array2<f64>,
    pub sweeps: Vec<usize>,
    pub kkt_residual: Vec<f64>,
    pub refit: bool,
}

impl LassoFit {
    /// Fraction of exactly-zero penalized coefficients.
    pub fn sparsity(&self) -> f64 {
        if self.coef.is_empty() {
            return 0.0;
        }
        self.coef.iter().filter(|&&v| v == 0.0).count() as f64 / self.coef.len() as f64
    }
}

/// Fits all outputs at once on an expanded design.
pub fn fit_lasso(phi: ArrayView2<f64>, targets: ArrayView2<f64>, mu: f64, has_bias: bool, opts: &LassoOptions) -> Result<(LassoProblem, LassoFit)> {
    let problem = LassoProblem::new(phi, targets, has_bias)?;
    let fit = problem.solve(mu, opts, None)?;
    Ok((problem, fit))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainOptions {
    pub mu: f64,
    /// Set from the surrounding configuration rather than stored with the
    /// other options.
    #[serde(skip)]
    pub basis: BasisSpec,
    pub lasso: LassoOptions,
    /// Least-squares re-estimate on the selected support.
    pub refit: bool,
    /// Keep the current-pressure input (and its powers) out of the
    /// pressure output row, so pressure is predicted from history alone.
    pub causal_pressure: bool,
    /// Fit each output as a change from its own previous sample, so the
    /// penalty shrinks towards persistence rather than towards zero. The
    /// stored `K` still maps features to absolute outputs.
    pub increment_targets: bool,
    /// Keep ejected-mass and λ inputs (and their powers) out of the thrust
    /// and pressure rows.
    pub mass_free_dynamics: bool,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            mu: 1e-2,
            basis: BasisSpec::default(),
            lasso: LassoOptions::default(),
            refit: true,
            causal_pressure: true,
            increment_targets: true,
            mass_free_dynamics: true,
        }
    }
}

/// Builds the standardized problem for a dataset under `opts`.
pub fn problem_for(ds: &Dataset, opts: &TrainOptions) -> Result<LassoProblem> {
    problem_for_rows(ds, None, opts)
}

/// Like [`problem_for`] restricted to `rows` of `ds`.
pub fn problem_for_rows(ds: &Dataset, rows: Option<&[usize]>, opts: &TrainOptions) -> Result<LassoProblem> {
    opts.basis.validate()?;
    let p = ds.inputs.ncols();
    let layout = ds.history.layout();
    if p != layout.width() {
        return Err(Error::WidthMismatch { expected: layout.width(), found: p });
    }
    let width = opts.basis.width(p);
    let index: Vec<usize> = match rows {
        Some(r) => r.to_vec(),
        None => (0..ds.rows()).collect(),
    };
    let mut targets = ds.targets.select(Axis(0), &index);
    if opts.increment_targets {
        for (r, &input) in persistence_inputs(&layout).iter().enumerate() {
            for (k, &row) in index.iter().enumerate() {
                targets[(k, r)] -= ds.inputs[(row, input)];
            }
        }
    }
    let basis = opts.basis;
    let mut problem = LassoProblem::from_rows(index.len(), width, targets.view(), basis.include_bias, |r0, r1, out| {
        let mut x = vec![0.0; p];
        for (k, mut orow) in out.outer_iter_mut().enumerate().take(r1 - r0) {
            for (xi, v) in x.iter_mut().zip(ds.inputs.row(index[r0 + k])) {
                *xi = *v;
            }
            basis.expand_into(&x, orow.as_slice_mut().expect("row-major"));
        }
    })?;
    if opts.mass_free_dynamics {
        let mut inputs = vec![layout.lambda()];
        for h in 1..=layout.n {
            inputs.push(layout.fuel_hist(h));
            inputs.push(layout.ox_hist(h));
        }
        for input in inputs {
            for (col, dep) in basis.depends_on(p, input).into_iter().enumerate() {
                if dep {
                    for out in 0..=PRESSURE_TARGET {
                        problem.forbid(out, col);
                    }
                }
            }
        }
    }
    if opts.causal_pressure {
        for (col, dep) in basis.depends_on(p, layout.pressure()).into_iter().enumerate() {
            if dep {
                problem.forbid(PRESSURE_TARGET, col);
            }
        }
    }
    Ok(problem)
}

/// Input column holding the previous value of each output.
pub fn persistence_inputs(layout: &FeatureLayout) -> [usize; TARGETS] {
    [
        layout.thrust_hist(0, 1),
        layout.thrust_hist(1, 1),
        layout.thrust_hist(2, 1),
        layout.thrust_hist(3, 1),
        layout.pressure_hist(1),
        layout.fuel_hist(1),
        layout.ox_hist(1),
    ]
}

/// Fraction of exactly-zero entries of a coefficient matrix.
pub fn sparsity_of(k: &Array2<f64>) -> f64 {
    if k.is_empty() {
        return 0.0;
    }
    k.iter().filter(|&&v| v == 0.0).count() as f64 / k.len() as f64
}

pub fn model_from_fit(problem: &LassoProblem, fit: &LassoFit, ds_history: HistorySpec, lambda: LambdaParams, opts: &TrainOptions) -> CoefficientModel {
    let mut k = problem.destandardize(fit);
    if opts.increment_targets {
        // The linear block follows the bias in every basis.
        let off = usize::from(opts.basis.include_bias);
        for (r, &input) in persistence_inputs(&ds_history.layout()).iter().enumerate() {
            k[(r, off + input)] += 1.0;
        }
    }
    CoefficientModel {
        sparsity: sparsity_of(&k),
        k,
        basis: opts.basis,
        standardization: problem.standardization.clone(),
        target_mean: problem.target_mean.clone(),
        target_scale: problem.target_scale.clone(),
        coef_std: fit.coef.clone(),
        mu: fit.mu,
        n: ds_history.n,
        lambda,
        refit: fit.refit,
        causal_pressure: opts.causal_pressure,
        increment_targets: opts.increment_targets,
    }
}

/// Expands, standardizes and fits a dataset.
pub fn train(ds: &Dataset, opts: &TrainOptions) -> Result<CoefficientModel> {
    let problem = problem_for(ds, opts)?;
    let mut fit = problem.solve(opts.mu, &opts.lasso, None)?;
    if opts.refit {
        fit = problem.refit(&fit);
    }
    Ok(model_from_fit(&problem, &fit, ds.history, ds.lambda, opts))
}

/// Learned map `Ỹ = K φ(X̃)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientModel {
    /// Outputs × basis width, raw basis coordinates.
    pub k: Array2<f64>,
    pub basis: BasisSpec,
    pub standardization: Standardization,
    pub target_mean: Vec<f64>,
    pub target_scale: Vec<f64>,
    /// Outputs × non-bias columns, standardized coordinates.
    pub coef_std: Array2<f64>,
    pub mu: f64,
    pub n: usize,
    pub lambda: LambdaParams,
    pub refit: bool,
    pub causal_pressure: bool,
    /// The standardized coefficients predict changes from the previous
    /// sample; `K` already includes the persistence term.
    pub increment_targets: bool,
    /// Fraction of exactly-zero entries of `K`.
    pub sparsity: f64,
}

impl CoefficientModel {
    pub fn history(&self) -> HistorySpec {
        HistorySpec { n: self.n }
    }

    pub fn input_width(&self) -> usize {
        FeatureLayout { n: self.n }.width()
    }

    fn check_width(&self, x: &[f64]) -> Result<()> {
        let w = self.input_width();
        if x.len() != w {
            return Err(Error::WidthMismatch { expected: w, found: x.len() });
        }
        Ok(())
    }

    pub fn predict(&self, x: &[f64]) -> Result<[f64; TARGETS]> {
        self.check_width(x)?;
        let phi = self.basis.expand(x);
        let mut out = [0.0; TARGETS];
        for (r, o) in out.iter_mut().enumerate().take(self.k.nrows()) {
            *o = self.k.row(r).iter().zip(&phi).map(|(a, b)| a * b).sum();
        }
        Ok(out)
    }

    /// One output row only.
    pub fn predict_output(&self, x: &[f64], output: usize) -> Result<f64> {
        self.check_width(x)?;
        let phi = self.basis.expand(x);
        Ok(self.k.row(output).iter().zip(&phi).map(|(a, b)| a * b).sum())
    }

    /// Prediction through the standardized coefficients.
    pub fn predict_standardized(&self, x: &[f64]) -> Result<[f64; TARGETS]> {
        self.check_width(x)?;
        let z = self.standardization.apply(&self.basis.expand(x));
        let off = usize::from(self.basis.include_bias);
        let mut out = [0.0; TARGETS];
        for (r, o) in out.iter_mut().enumerate().take(self.coef_std.nrows()) {
            let s: f64 = self.coef_std.row(r).iter().zip(&z[off..]).map(|(a, b)| a * b).sum();
            *o = self.target_mean[r] + self.target_scale[r] * s;
        }
        if self.increment_targets {
            for (o, &input) in out.iter_mut().zip(&persistence_inputs(&self.history().layout())) {
                *o += x[input];
            }
        }
        Ok(out)
    }

    pub fn predict_rows(&self, inputs: ArrayView2<f64>) -> Result<Array2<f64>> {
        let mut out = Array2::zeros((inputs.nrows(), TARGETS));
        for (x, mut o) in inputs.outer_iter().zip(out.outer_iter_mut()) {
            let y = self.predict(&x.to_vec())?;
            o.assign(&ArrayView1::from(&y[..]));
        }
        Ok(out)
    }

    /// Nonzero entries of `K`; `sparsity` is the complementary fraction.
    pub fn nonzeros(&self) -> usize {
        self.k.iter().filter(|&&v| v != 0.0).count()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, &ModelFile::from(self))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file: ModelFile = read_json(path)?;
        file.into_model()
    }
}

/// On-disk form: dense vectors for the standardization, sparse triplets
/// for `K`.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct ModelFile {
    basis: BasisSpec,
    mu: f64,
    n: usize,
    lambda: LambdaParams,
    refit: bool,
    causal_pressure: bool,
    #[serde(default)]
    increment_targets: bool,
    sparsity: f64,
    outputs: usize,
    width: usize,
    standardization: Standardization,
    target_mean: Vec<f64>,
    target_scale: Vec<f64>,
    /// `(row, col, value)` of nonzero `K` entries, raw coordinates.
    k: Vec<(usize, usize, f64)>,
    /// `(row, col, value)` of nonzero standardized coefficients.
    k_standardized: Vec<(usize, usize, f64)>,
}

fn triplets(a: &Array2<f64>) -> Vec<(usize, usize, f64)> {
    a.indexed_iter().filter(|(_, &v)| v != 0.0).map(|((r, c), &v)| (r, c, v)).collect()
}

impl From<&CoefficientModel> for ModelFile {
    fn from(m: &CoefficientModel) -> Self {
        ModelFile {
            basis: m.basis,
            mu: m.mu,
            n: m.n,
            lambda: m.lambda,
            refit: m.refit,
            causal_pressure: m.causal_pressure,
            increment_targets: m.increment_targets,
            sparsity: m.sparsity,
            outputs: m.k.nrows(),
            width: m.k.ncols(),
            standardization: m.standardization.clone(),
            target_mean: m.target_mean.clone(),
            target_scale: m.target_scale.clone(),
            k: triplets(&m.k),
            k_standardized: triplets(&m.coef_std),
        }
    }
}

impl ModelFile {
    fn into_model(self) -> Result<CoefficientModel> {
        let p = FeatureLayout { n: self.n }.width();
        if self.basis.width(p) != self.width || self.outputs != TARGETS {
            return Err(Error::WidthMismatch { expected: self.basis.width(p), found: self.width });
        }
        let off = usize::from(self.basis.include_bias);
        let mut k = Array2::zeros((self.outputs, self.width));
        for (r, c, v) in self.k {
            if r >= self.outputs || c >= self.width {
                return Err(Error::InvalidInput(format!("coefficient ({r}, {c}) out of bounds")));
            }
            k[(r, c)] = v;
        }
        let mut coef_std = Array2::zeros((self.outputs, self.width - off));
        for (r, c, v) in self.k_standardized {
            if r >= self.outputs || c >= self.width - off {
                return Err(Error::InvalidInput(format!("coefficient ({r}, {c}) out of bounds")));
            }
            coef_std[(r, c)] = v;
        }
        Ok(CoefficientModel {
            k,
            basis: self.basis,
            standardization: self.standardization,
            target_mean: self.target_mean,
            target_scale: self.target_scale,
            coef_std,
            mu: self.mu,
            n: self.n,
            lambda: self.lambda,
            refit: self.refit,
            causal_pressure: self.causal_pressure,
            increment_targets: self.increment_targets,
            sparsity: self.sparsity,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rmse {
    pub per_output: Vec<f64>,
    /// Root mean square of `per_output`.
    pub aggregate: f64,
}

pub fn rmse(pred: ArrayView2<f64>, truth: ArrayView2<f64>) -> Result<Rmse> {
    if pred.dim() != truth.dim() {
        return Err(Error::InvalidInput(format!("shape {:?} vs {:?}", pred.dim(), truth.dim())));
    }
    if pred.nrows() == 0 {
        return Err(Error::InvalidInput("rmse of empty input".into()));
    }
    let n = pred.nrows() as f64;
    let per_output: Vec<f64> = (0..pred.ncols())
        .map(|c| {
            let ss: f64 = pred.column(c).iter().zip(truth.column(c)).map(|(a, b)| (a - b) * (a - b)).sum();
            (ss / n).sqrt()
        })
        .collect();
    let aggregate = (per_output.iter().map(|v| v * v).sum::<f64>() / per_output.len() as f64).sqrt();
    Ok(Rmse { per_output, aggregate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn expansions() {
        let x = [3.0, 5.0];
        assert_eq!(BasisSpec::linear().expand(&x), vec![1.0, 3.0, 5.0]);
        assert_eq!(BasisSpec::default().expand(&x), vec![1.0, 3.0, 5.0, 9.0, 25.0]);
        let fq = BasisSpec { kind: BasisKind::FullQuadratic, degree: 2, include_bias: true };
        assert_eq!(fq.expand(&x), vec![1.0, 3.0, 5.0, 9.0, 15.0, 25.0]);
        let cubic = BasisSpec { kind: BasisKind::ElementwisePoly, degree: 3, include_bias: false };
        assert_eq!(cubic.expand(&x), vec![3.0, 5.0, 9.0, 25.0, 27.0, 125.0]);
    }

    #[test]
    fn widths() {
        let p = 76;
        assert_eq!(BasisSpec::linear().width(p), 77);
        assert_eq!(BasisSpec::default().width(p), 153);
        let fq = BasisSpec { kind: BasisKind::FullQuadratic, degree: 2, include_bias: true };
        assert_eq!(fq.width(p), 3003);
        for b in [BasisSpec::linear(), BasisSpec::default(), fq] {
            assert_eq!(b.expand(&vec![0.5; 7]).len(), b.width(7));
            assert_eq!(b.depends_on(7, 3).len(), b.width(7));
        }
        assert_eq!(fq.depends_on(2, 1), vec![false, false, true, false, true, true]);
    }

    #[test]
    fn soft_threshold_cases() {
        assert_eq!(soft_threshold(3.0, 1.0), 2.0);
        assert_eq!(soft_threshold(-0.5, 1.0), 0.0);
        assert_eq!(soft_threshold(-2.5, 1.0), -1.5);
        assert_eq!(soft_threshold(1.7, 0.0), 1.7);
    }

    #[test]
    fn standardization_inverts() {
        let s = Standardization { mean: vec![0.0, 1e6, -3.0], scale: vec![1.0, 2.5e4, 0.1] };
        let v = vec![1.0, 1.02e6, -2.9];
        let back = s.invert(&s.apply(&v));
        for (a, b) in back.iter().zip(&v) {
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }

    #[test]
    fn null_threshold_zeros_everything() {
        let phi = array![[1.0, 0.2, 3.0], [1.0, -1.0, 2.5], [1.0, 0.7, -1.0], [1.0, 1.5, 0.0], [1.0, -0.3, 0.4]];
        let y = array![[1.0], [2.0], [-0.5], [0.3], [0.9]];
        let problem = LassoProblem::new(phi.view(), y.view(), true).unwrap();
        let fit = problem.solve(problem.null_mu(), &LassoOptions::default(), None).unwrap();
        assert!(fit.coef.iter().all(|&v| v == 0.0));
        let k = problem.destandardize(&fit);
        assert!((k[(0, 0)] - 0.74).abs() < 1e-12);
        let fit = problem.solve(0.5 * problem.null_mu(), &LassoOptions::default(), None).unwrap();
        assert!(fit.coef.iter().any(|&v| v != 0.0));
    }

    #[test]
    fn rmse_cases() {
        let t = Array2::from_shape_fn((5, 7), |(i, j)| (i * 7 + j) as f64);
        assert_eq!(rmse(t.view(), t.view()).unwrap().aggregate, 0.0);
        let mut p = t.clone();
        p.column_mut(2).mapv_inplace(|v| v + 2.0);
        let r = rmse(p.view(), t.view()).unwrap();
        assert!((r.per_output[2] - 2.0).abs() < 1e-12);
        assert_eq!(r.per_output[0], 0.0);
        let one = Array2::from_shape_vec((1, 7), vec![3.0, 4.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let r = rmse(one.view(), Array2::zeros((1, 7)).view()).unwrap();
        assert_eq!(r.per_output[..2], [3.0, 4.0]);
        assert!(rmse(Array2::zeros((0, 7)).view(), Array2::zeros((0, 7)).view()).is_err());
        assert!(rmse(Array2::zeros((2, 7)).view(), Array2::zeros((3, 7)).view()).is_err());
    }

    #[test]
    fn non_finite_rejected() {
        let phi = array![[1.0, f64::NAN], [1.0, 2.0]];
        let y = array![[1.0], [2.0]];
        assert!(matches!(LassoProblem::new(phi.view(), y.view(), true), Err(Error::NonFinite(_))));
    }

    #[test]
    fn non_convergence_reports_kkt() {
        let phi = Array2::from_shape_fn((50, 4), |(i, j)| if j == 0 { 1.0 } else { ((i * (j + 3)) % 11) as f64 + 0.01 * j as f64 * i as f64 });
        let y = Array2::from_shape_fn((50, 1), |(i, _)| (i % 5) as f64);
        let problem = LassoProblem::new(phi.view(), y.view(), true).unwrap();
        let err = problem.solve(0.0, &LassoOptions { max_sweeps: 3, tol: 0.0 }, None).unwrap_err();
        match err {
            Error::NotConverged { kkt_residual, .. } => assert!(kkt_residual > 0.0),
            other => panic!("{other:?}"),
        }
    }
}
