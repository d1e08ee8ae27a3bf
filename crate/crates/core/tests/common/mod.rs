#![allow(dead_code)]

use lander_sysid::plant::{PlantTrajectory, ENGINES};
use nalgebra::{DMatrix, DVector};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Gaussian-ish sample from the sum of uniforms; good enough for test data
/// and avoids another dependency.
pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    (0..12).map(|_| rng.random::<f64>()).sum::<f64>() - 6.0
}

/// Random tall design with columns of different scales and offsets.
pub fn tall_problem(seed: u64, rows: usize, cols: usize) -> (Array2<f64>, Vec<f64>, Vec<f64>) {
    let mut r = rng(seed);
    let scales: Vec<f64> = (0..cols).map(|_| 10f64.powf(r.random_range(-1.0..2.0))).collect();
    let offsets: Vec<f64> = (0..cols).map(|_| r.random_range(-5.0..5.0)).collect();
    let x = Array2::from_shape_fn((rows, cols), |(_, j)| offsets[j] + scales[j] * normal(&mut r));
    let beta: Vec<f64> = (0..cols).map(|_| r.random_range(-2.0..2.0)).collect();
    let y = (0..rows)
        .map(|i| (0..cols).map(|j| x[(i, j)] * beta[j]).sum::<f64>() + 0.1 * normal(&mut r))
        .collect();
    (x, y, beta)
}

/// Least squares through the normal equations, solved by Cholesky.
pub fn normal_equations(x: &Array2<f64>, y: &[f64]) -> Vec<f64> {
    let (n, p) = x.dim();
    let xm = DMatrix::from_fn(n, p, |i, j| x[(i, j)]);
    let yv = DVector::from_column_slice(y);
    let xtx = xm.transpose() * &xm;
    let xty = xm.transpose() * yv;
    let chol = xtx.cholesky().expect("full column rank");
    chol.solve(&xty).iter().copied().collect()
}

/// Seven independent order-2 linear channels laid out as a plant
/// trajectory: each output follows
/// `y(t) = a1 y(t-1) + a2 y(t-2) + b u(t) + noise`
/// with its own command or forcing. Longer histories carry no extra
/// information.
pub fn ar2_trajectory(len: usize, seed: u64) -> PlantTrajectory {
    const A1: f64 = 1.5;
    const A2: f64 = -0.7;
    let mut r = rng(seed);
    let mut traj = PlantTrajectory { dt: 0.01, ..Default::default() };
    let mut y = vec![[0.0f64; 7]; len];
    let mut u = vec![[0.0f64; ENGINES]; len];
    let mut forcing = vec![[0.0f64; 3]; len];
    for t in 0..len {
        for j in 0..ENGINES {
            u[t][j] = r.random_range(240.0..800.0);
        }
        for f in 0..3 {
            forcing[t][f] = r.random_range(-1.0..1.0);
        }
        if t >= 2 {
            for k in 0..7 {
                let drive = if k < ENGINES { 0.1 * u[t][k] } else { forcing[t][k - ENGINES] };
                y[t][k] = A1 * y[t - 1][k] + A2 * y[t - 2][k] + drive + 0.05 * normal(&mut r);
            }
        }
    }
    for t in 0..len {
        traj.commands.push(u[t]);
        traj.status.push([1.0; ENGINES]);
        traj.thrusts.push([y[t][0], y[t][1], y[t][2], y[t][3]]);
        traj.pressures.push(y[t][4]);
        // Offsets keep the mass channels positive for the inverse-mass feature.
        traj.m_fuel.push(50.0 + y[t][5]);
        traj.m_ox.push(80.0 + y[t][6]);
    }
    traj
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// History sweep over `1..=10` on the synthetic order-2 trajectory with a
/// linear basis.
pub fn ar2_history_sweep() -> lander_sysid::tuning::SweepReport {
    use lander_sysid::features::{assemble, HistorySpec};
    use lander_sysid::regression::{BasisSpec, TrainOptions};
    use lander_sysid::tuning::{sweep_history, SweepConfig};

    let traj = ar2_trajectory(6000, 3);
    let cfg = SweepConfig { history_mu: 1e-4, ..Default::default() };
    let datasets: Vec<_> =
        cfg.n_grid.iter().map(|&n| assemble(&traj, &HistorySpec::new(n).unwrap(), "ar2").unwrap()).collect();
    let opts = TrainOptions { basis: BasisSpec::linear(), ..Default::default() };
    sweep_history(&datasets, &cfg, &opts).unwrap()
}
