mod common;

use lander_sysid::excitation::{build_corpus, excitation_basis, thrust_levels, ExcitationConfig};
use lander_sysid::features::{assemble, HistorySpec, TARGETS};
use lander_sysid::plant::{module_mass, simulate, PlantConfig, PlantTrajectory, ENGINES};
use proptest::prelude::*;

fn corpus() -> Vec<PlantTrajectory> {
    let cfg = PlantConfig::default();
    build_corpus(&ExcitationConfig::default())
        .unwrap()
        .iter()
        .map(|e| simulate(&e.trace, &cfg).unwrap())
        .collect()
}

#[test]
fn mass_is_conserved_and_follows_flow_law() {
    let cfg = PlantConfig::default();
    let mr = cfg.mixture_ratio;
    for traj in corpus() {
        let mm = module_mass(&traj, &cfg);
        for i in 0..traj.len() {
            // Exact up to the rounding of one addition at the module scale.
            let total = mm[i] + traj.m_fuel[i] + traj.m_ox[i];
            assert!((total - cfg.m_module0).abs() <= 2.0 * f64::EPSILON * cfg.m_module0, "{total}");
        }
        for i in 1..traj.len() {
            // Trapezoidal integration of total flow, split by mixture ratio.
            let flow = |k: usize| traj.thrusts[k].iter().map(|t| t / (cfg.isp * cfg.g0)).sum::<f64>();
            let dm = 0.5 * cfg.dt * (flow(i - 1) + flow(i));
            let df = traj.m_fuel[i] - traj.m_fuel[i - 1];
            let dox = traj.m_ox[i] - traj.m_ox[i - 1];
            let tol = |x: f64| 1e-9 * x.abs().max(1e-12) + 1e-12;
            assert!((df - dm / (1.0 + mr)).abs() <= tol(dm), "fuel step {i}");
            assert!((dox - dm * mr / (1.0 + mr)).abs() <= tol(dm), "ox step {i}");
        }
    }
}

#[test]
fn simulation_is_deterministic() {
    let a = corpus();
    let b = corpus();
    assert_eq!(a, b);
}

#[test]
fn thrust_levels_follow_the_formula() {
    for m in [1usize, 2, 3, 5, 8, 13] {
        for (lo, hi) in [(240.0, 800.0), (100.0, 1000.0), (0.5, 2.5)] {
            let cfg = ExcitationConfig { e_min: lo, e_max: hi, m_levels: m, ..Default::default() };
            let levels = thrust_levels(&cfg);
            assert_eq!(levels.len(), m);
            for (k, e) in levels.iter().enumerate() {
                assert_eq!(*e, lo + (k as f64 / m as f64) * (hi - lo));
            }
            assert!(levels.iter().all(|&e| e < hi));
        }
    }
}

#[test]
fn features_align_with_lags() {
    let traj = &corpus()[0];
    let n = 3;
    let ds = assemble(traj, &HistorySpec::new(n).unwrap(), "x").unwrap();
    let layout = HistorySpec::new(n).unwrap().layout();
    assert_eq!(ds.rows(), traj.len() - n);
    for (r, t) in (n..traj.len()).enumerate().step_by(97) {
        assert_eq!(ds.provenance[r].sample, t);
        for j in 0..ENGINES {
            assert_eq!(ds.inputs[(r, layout.command(j))], traj.commands[t][j]);
            assert_eq!(ds.inputs[(r, layout.status(j))], traj.status[t][j]);
            for h in 1..=n {
                assert_eq!(ds.inputs[(r, layout.thrust_hist(j, h))], traj.thrusts[t - h][j]);
                assert_eq!(ds.inputs[(r, layout.command_hist(j, h))], traj.commands[t - h][j]);
            }
            assert_eq!(ds.targets[(r, j)], traj.thrusts[t][j]);
        }
        assert_eq!(ds.inputs[(r, layout.pressure())], traj.pressures[t]);
        for h in 1..=n {
            assert_eq!(ds.inputs[(r, layout.pressure_hist(h))], traj.pressures[t - h]);
            assert_eq!(ds.inputs[(r, layout.fuel_hist(h))], traj.m_fuel[t - h]);
            assert_eq!(ds.inputs[(r, layout.ox_hist(h))], traj.m_ox[t - h]);
        }
        let lambda = 1.0 / (traj.m_fuel[t - 1] + traj.m_ox[t - 1] + 1.0);
        assert_eq!(ds.inputs[(r, layout.lambda())], lambda);
        assert_eq!(ds.targets.ncols(), TARGETS);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn excitation_direction_is_unit(t in -1e4f64..1e4) {
        let s = excitation_basis(t);
        let norm = s.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assert!((norm - 1.0).abs() <= 1e-12);
    }

    /// Outputs at sample t never appear among the inputs of row t: only
    /// the current pressure column may change when P(t) is perturbed, and
    /// nothing changes when thrust or mass at t is perturbed.
    #[test]
    fn no_leakage_from_current_outputs(t in 10usize..500, n in 1usize..6, delta in 1.0f64..50.0) {
        let base = common::ar2_trajectory(520, 5);
        let spec = HistorySpec::new(n).unwrap();
        let layout = spec.layout();
        let reference = assemble(&base, &spec, "x").unwrap();
        let row = t - n;

        let mut moved = base.clone();
        moved.thrusts[t][1] += delta;
        moved.m_fuel[t] += delta;
        moved.m_ox[t] += delta;
        let ds = assemble(&moved, &spec, "x").unwrap();
        prop_assert_eq!(ds.inputs.row(row), reference.inputs.row(row));

        let mut moved = base.clone();
        moved.pressures[t] += delta;
        let ds = assemble(&moved, &spec, "x").unwrap();
        for c in 0..layout.width() {
            let same = ds.inputs[(row, c)] == reference.inputs[(row, c)];
            prop_assert_eq!(same, c != layout.pressure(), "column {}", c);
        }
    }
}

#[test]
fn excitation_direction_is_unit_dense() {
    let mut worst = 0.0f64;
    for i in 0..100_000 {
        let t = i as f64 * 0.0137 - 300.0;
        let s = excitation_basis(t);
        worst = worst.max((s.iter().map(|v| v * v).sum::<f64>().sqrt() - 1.0).abs());
    }
    assert!(worst <= 1e-12, "{worst:e}");
}
