//! Surrogate four-engine pressure-fed propulsion plant.
//!
//! Each engine has a throttle valve with asymmetric first-order dynamics
//! (faster opening than closing), square-root coupling of thrust to feed
//! pressure and a thrust slew limit. A single gas bottle regulates the
//! propellant tanks; it blows down isothermally as propellant volume leaves
//! the tanks, and the feed pressure droops linearly with total mass flow.
//!
//! The model is integrated with explicit Euler at a fixed step. Ejected
//! mass uses the trapezoidal rule over the delivered thrusts at the start
//! and end of each step, so the recorded mass increments are an exact
//! function of the recorded thrusts.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const ENGINES: usize = 4;

/// Per-engine quantity.
pub type Quad = [f64; ENGINES];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlantConfig {
    /// Minimum on-thrust, N.
    pub e_min: f64,
    /// Rated thrust, N.
    pub e_max: f64,
    /// Regulated tank pressure, Pa.
    pub p_reg: f64,
    /// Initial gas bottle pressure, Pa.
    pub p_bottle0: f64,
    /// Gas bottle volume, m³.
    pub v_bottle: f64,
    /// Feed pressure droop, Pa per kg/s of total flow.
    pub droop_coeff: f64,
    pub tau_rise: f64,
    pub tau_fall: f64,
    /// Thrust slew limit, N/s.
    pub slew_limit: f64,
    pub isp: f64,
    pub g0: f64,
    /// Oxidizer to fuel mass ratio.
    pub mixture_ratio: f64,
    /// Initial total module mass, kg.
    pub m_module0: f64,
    pub dt: f64,
    /// Mean propellant density used to convert mass flow into ullage
    /// volume for the bottle blowdown, kg/m³.
    pub prop_density: f64,
}

impl Default for PlantConfig {
    fn default() -> Self {
        Self {
            e_min: 240.0,
            e_max: 800.0,
            p_reg: 1.8e6,
            p_bottle0: 2.4e7,
            v_bottle: 0.03,
            droop_coeff: 2.0e5,
            tau_rise: 0.08,
            tau_fall: 0.15,
            slew_limit: 4000.0,
            isp: 285.0,
            g0: 9.80665,
            mixture_ratio: 1.65,
            m_module0: 600.0,
            dt: 0.01,
            prop_density: 1150.0,
        }
    }
}

impl PlantConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("e_min", self.e_min),
            ("p_reg", self.p_reg),
            ("p_bottle0", self.p_bottle0),
            ("v_bottle", self.v_bottle),
            ("tau_rise", self.tau_rise),
            ("tau_fall", self.tau_fall),
            ("slew_limit", self.slew_limit),
            ("isp", self.isp),
            ("g0", self.g0),
            ("mixture_ratio", self.mixture_ratio),
            ("m_module0", self.m_module0),
            ("dt", self.dt),
            ("prop_density", self.prop_density),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConfig(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if !(self.droop_coeff.is_finite() && self.droop_coeff >= 0.0) {
            return Err(Error::InvalidConfig("droop_coeff must be non-negative".into()));
        }
        if !(self.e_max.is_finite() && self.e_max > self.e_min) {
            return Err(Error::InvalidConfig(format!(
                "need 0 < e_min < e_max, got e_min={} e_max={}",
                self.e_min, self.e_max
            )));
        }
        if self.tau_fall < self.tau_rise {
            return Err(Error::InvalidConfig("tau_fall must be >= tau_rise".into()));
        }
        Ok(())
    }

    /// Propellant mass flow for a delivered thrust, kg/s.
    pub fn mass_flow(&self, thrust: f64) -> f64 {
        thrust / (self.isp * self.g0)
    }

    /// Feed pressure with no flow.
    pub fn supply_pressure(&self, p_bottle: f64) -> f64 {
        self.p_reg.min(p_bottle)
    }

    /// Upper bound on delivered thrust at a given feed pressure.
    pub fn thrust_ceiling(&self, p_tank: f64) -> f64 {
        self.e_max * (p_tank.max(0.0) / self.p_reg).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantState {
    pub t: f64,
    pub p_bottle: f64,
    pub p_tank: f64,
    pub thrust: Quad,
    pub m_fuel_ejected: f64,
    pub m_ox_ejected: f64,
    pub valve_pos: Quad,
}

impl PlantState {
    /// Full bottle, engines at rest, nothing ejected.
    pub fn initial(cfg: &PlantConfig) -> Self {
        Self {
            t: 0.0,
            p_bottle: cfg.p_bottle0,
            p_tank: cfg.supply_pressure(cfg.p_bottle0),
            thrust: [0.0; ENGINES],
            m_fuel_ejected: 0.0,
            m_ox_ejected: 0.0,
            valve_pos: [0.0; ENGINES],
        }
    }

    pub fn ejected(&self) -> f64 {
        self.m_fuel_ejected + self.m_ox_ejected
    }
}

/// Commanded thrust per engine and on/off status, one entry per step.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CommandTrace {
    pub dt: f64,
    pub commands: Vec<Quad>,
    pub status: Vec<Quad>,
}

impl CommandTrace {
    pub fn new(dt: f64) -> Self {
        Self { dt, commands: Vec::new(), status: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.commands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.commands.is_empty()
    }

    pub fn push(&mut self, command: Quad, status: Quad) {
        self.commands.push(command);
        self.status.push(status);
    }

    /// Same command on all engines, on whenever the command is positive.
    pub fn push_uniform(&mut self, level: f64) {
        let on = if level > 0.0 { 1.0 } else { 0.0 };
        self.push([level; ENGINES], [on; ENGINES]);
    }

    pub fn extend(&mut self, other: &CommandTrace) {
        self.commands.extend_from_slice(&other.commands);
        self.status.extend_from_slice(&other.status);
    }

    pub const CSV_HEADER: [&'static str; 9] = ["t", "Tr1", "Tr2", "Tr3", "Tr4", "Se1", "Se2", "Se3", "Se4"];

    /// Writes the commands in the command columns of the plant schema.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
        w.write_record(Self::CSV_HEADER).map_err(|e| Error::csv(path, e))?;
        for (i, (c, s)) in self.commands.iter().zip(&self.status).enumerate() {
            let mut rec = Vec::with_capacity(9);
            rec.push((i as f64 * self.dt).to_string());
            rec.extend(c.iter().map(f64::to_string));
            rec.extend(s.iter().map(f64::to_string));
            w.write_record(&rec).map_err(|e| Error::csv(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Reads a command CSV; the time column is ignored in favour of `dt`.
    pub fn read_csv(path: &Path, dt: f64) -> Result<Self> {
        let mut r = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
        let mut trace = CommandTrace::new(dt);
        for rec in r.records() {
            let rec = rec.map_err(|e| Error::csv(path, e))?;
            if rec.len() != 9 {
                return Err(Error::InvalidInput(format!("{}: expected 9 columns, got {}", path.display(), rec.len())));
            }
            let v: Vec<f64> = rec
                .iter()
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
            trace.push([v[1], v[2], v[3], v[4]], [v[5], v[6], v[7], v[8]]);
        }
        Ok(trace)
    }

    pub fn validate(&self, cfg: &PlantConfig) -> Result<()> {
        if self.commands.len() != self.status.len() {
            return Err(Error::InvalidInput(format!(
                "trace has {} commands but {} status entries",
                self.commands.len(),
                self.status.len()
            )));
        }
        // Allow rounding from the generators.
        let slack = 1e-9 * cfg.e_max;
        for (i, (c, s)) in self.commands.iter().zip(&self.status).enumerate() {
            for j in 0..ENGINES {
                if !c[j].is_finite() {
                    return Err(Error::NonFiniteCommand { index: i });
                }
                if s[j] != 0.0 && s[j] != 1.0 {
                    return Err(Error::InvalidInput(format!("status at sample {i} engine {} is {}", j + 1, s[j])));
                }
                if s[j] == 1.0 && (c[j] < cfg.e_min - slack || c[j] > cfg.e_max + slack) {
                    return Err(Error::InvalidInput(format!(
                        "command {} N at sample {i} engine {} outside [{}, {}]",
                        c[j],
                        j + 1,
                        cfg.e_min,
                        cfg.e_max
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Sampled plant record. Sample 0 is the initial state (nothing commanded);
/// sample `i > 0` holds the command applied over step `i - 1` and the state
/// it produced, so a trace of `L` commands yields `L + 1` samples.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PlantTrajectory {
    pub dt: f64,
    pub commands: Vec<Quad>,
    pub status: Vec<Quad>,
    pub thrusts: Vec<Quad>,
    pub pressures: Vec<f64>,
    pub m_fuel: Vec<f64>,
    pub m_ox: Vec<f64>,
}

impl PlantTrajectory {
    pub fn len(&self) -> usize {
        self.thrusts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thrusts.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.dt
    }

    fn push(&mut self, command: Quad, status: Quad, state: &PlantState) {
        self.commands.push(command);
        self.status.push(status);
        self.thrusts.push(state.thrust);
        self.pressures.push(state.p_tank);
        self.m_fuel.push(state.m_fuel_ejected);
        self.m_ox.push(state.m_ox_ejected);
    }

    /// First `len` samples.
    pub fn prefix(&self, len: usize) -> PlantTrajectory {
        let len = len.min(self.len());
        PlantTrajectory {
            dt: self.dt,
            commands: self.commands[..len].to_vec(),
            status: self.status[..len].to_vec(),
            thrusts: self.thrusts[..len].to_vec(),
            pressures: self.pressures[..len].to_vec(),
            m_fuel: self.m_fuel[..len].to_vec(),
            m_ox: self.m_ox[..len].to_vec(),
        }
    }

    /// The commands that produced samples 1.. of this trajectory.
    pub fn command_trace(&self) -> CommandTrace {
        CommandTrace {
            dt: self.dt,
            commands: self.commands.iter().skip(1).copied().collect(),
            status: self.status.iter().skip(1).copied().collect(),
        }
    }

    pub fn check_lengths(&self) -> Result<()> {
        let n = self.thrusts.len();
        let lens = [
            self.commands.len(),
            self.status.len(),
            self.pressures.len(),
            self.m_fuel.len(),
            self.m_ox.len(),
        ];
        if lens.iter().any(|&l| l != n) {
            return Err(Error::InvalidInput("trajectory columns have unequal lengths".into()));
        }
        Ok(())
    }

    pub const CSV_HEADER: [&'static str; 16] = [
        "t", "Tr1", "Tr2", "Tr3", "Tr4", "Se1", "Se2", "Se3", "Se4", "To1", "To2", "To3", "To4", "P", "mf", "mo",
    ];

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        self.write_csv_with_suffix(path, "")
    }

    /// Writes the trajectory in the plant CSV schema. A non-empty `suffix`
    /// is appended to every output column name (`To1_pred`, ...).
    pub fn write_csv_with_suffix(&self, path: &Path, suffix: &str) -> Result<()> {
        self.check_lengths()?;
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
        let header: Vec<String> = Self::CSV_HEADER
            .iter()
            .enumerate()
            .map(|(k, h)| if k >= 9 { format!("{h}{suffix}") } else { h.to_string() })
            .collect();
        w.write_record(&header).map_err(|e| Error::csv(path, e))?;
        for i in 0..self.len() {
            let mut rec = Vec::with_capacity(16);
            rec.push(self.time(i).to_string());
            rec.extend(self.commands[i].iter().map(f64::to_string));
            rec.extend(self.status[i].iter().map(f64::to_string));
            rec.extend(self.thrusts[i].iter().map(f64::to_string));
            rec.push(self.pressures[i].to_string());
            rec.push(self.m_fuel[i].to_string());
            rec.push(self.m_ox[i].to_string());
            w.write_record(&rec).map_err(|e| Error::csv(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
        let mut traj = PlantTrajectory::default();
        let mut times = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(|e| Error::csv(path, e))?;
            if rec.len() != 16 {
                return Err(Error::InvalidInput(format!("{}: expected 16 columns, got {}", path.display(), rec.len())));
            }
            let v: Vec<f64> = rec
                .iter()
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
            times.push(v[0]);
            traj.commands.push([v[1], v[2], v[3], v[4]]);
            traj.status.push([v[5], v[6], v[7], v[8]]);
            traj.thrusts.push([v[9], v[10], v[11], v[12]]);
            traj.pressures.push(v[13]);
            traj.m_fuel.push(v[14]);
            traj.m_ox.push(v[15]);
        }
        traj.dt = if times.len() >= 2 { times[1] - times[0] } else { 0.0 };
        Ok(traj)
    }
}

/// Advances the plant by one `cfg.dt`.
pub fn step(state: &PlantState, command: &Quad, status: &Quad, cfg: &PlantConfig) -> Result<PlantState> {
    if command.iter().any(|c| !c.is_finite()) {
        return Err(Error::NonFiniteCommand { index: 0 });
    }
    let dt = cfg.dt;
    let flow_old: f64 = state.thrust.iter().map(|&f| cfg.mass_flow(f)).sum();

    let mut valve_pos = state.valve_pos;
    for j in 0..ENGINES {
        let target = if status[j] > 0.5 { command[j].clamp(cfg.e_min, cfg.e_max) } else { 0.0 };
        let frac = target / cfg.e_max;
        let tau = if frac > valve_pos[j] { cfg.tau_rise } else { cfg.tau_fall };
        valve_pos[j] += dt / tau * (frac - valve_pos[j]);
    }

    // Gas expelled at tank pressure to back-fill the propellant volume.
    let ullage = flow_old / cfg.prop_density * dt;
    let p_bottle = (state.p_bottle - state.p_tank * ullage / cfg.v_bottle).max(0.0);
    let p_tank = (cfg.supply_pressure(p_bottle) - cfg.droop_coeff * flow_old).max(0.0);

    let ceiling = cfg.thrust_ceiling(p_tank);
    let max_delta = cfg.slew_limit * dt;
    let mut thrust = [0.0; ENGINES];
    for j in 0..ENGINES {
        let candidate = cfg.e_max * valve_pos[j] * (p_tank / cfg.p_reg).sqrt();
        let prev = state.thrust[j];
        thrust[j] = candidate.clamp(prev - max_delta, prev + max_delta).min(ceiling).max(0.0);
    }

    let flow_new: f64 = thrust.iter().map(|&f| cfg.mass_flow(f)).sum();
    let dm = 0.5 * dt * (flow_old + flow_new);
    let mr = cfg.mixture_ratio;
    let m_fuel_ejected = state.m_fuel_ejected + dm / (1.0 + mr);
    let m_ox_ejected = state.m_ox_ejected + dm * mr / (1.0 + mr);

    let t = state.t + dt;
    if cfg.m_module0 - (m_fuel_ejected + m_ox_ejected) <= 0.0 {
        return Err(Error::Depleted { index: 0, time: t });
    }

    Ok(PlantState { t, p_bottle, p_tank, thrust, m_fuel_ejected, m_ox_ejected, valve_pos })
}

/// Runs a command trace from the initial state.
pub fn simulate(trace: &CommandTrace, cfg: &PlantConfig) -> Result<PlantTrajectory> {
    cfg.validate()?;
    trace.validate(cfg)?;
    let mut state = PlantState::initial(cfg);
    let mut traj = PlantTrajectory { dt: cfg.dt, ..Default::default() };
    traj.push([0.0; ENGINES], [0.0; ENGINES], &state);
    for (i, (c, s)) in trace.commands.iter().zip(&trace.status).enumerate() {
        state = step(&state, c, s, cfg).map_err(|e| match e {
            Error::NonFiniteCommand { .. } => Error::NonFiniteCommand { index: i },
            Error::Depleted { time, .. } => Error::Depleted { index: i, time },
            other => other,
        })?;
        traj.push(*c, *s, &state);
    }
    Ok(traj)
}

/// Remaining module mass per sample.
pub fn module_mass(traj: &PlantTrajectory, cfg: &PlantConfig) -> Vec<f64> {
    traj.m_fuel.iter().zip(&traj.m_ox).map(|(f, o)| cfg.m_module0 - (f + o)).collect()
}
