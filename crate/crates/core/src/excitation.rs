//! Excitation inputs: discretized thrust levels, the four-engine
//! trigonometric excitation scaled about each level, and step/ramp families.

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plant::{CommandTrace, Quad, ENGINES};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StairSpec {
    pub levels: Vec<f64>,
    pub hold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RampSpec {
    pub start: f64,
    pub end: f64,
    pub rate: f64,
    pub hold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExcitationConfig {
    pub e_min: f64,
    pub e_max: f64,
    pub m_levels: usize,
    pub a_amp: f64,
    /// Seconds per excitation segment.
    pub duration: f64,
    pub dt: f64,
    /// Only shuffles the order of the excitation segments.
    pub seed: u64,
    pub stairs: Vec<StairSpec>,
    pub ramps: Vec<RampSpec>,
}

impl Default for ExcitationConfig {
    fn default() -> Self {
        Self {
            e_min: 240.0,
            e_max: 800.0,
            m_levels: 8,
            a_amp: 100.0,
            duration: 30.0,
            dt: 0.01,
            seed: 0,
            stairs: vec![
                StairSpec { levels: vec![240.0, 400.0, 560.0, 720.0, 800.0, 640.0, 480.0, 320.0, 240.0], hold: 3.0 },
                StairSpec { levels: vec![0.0, 800.0, 0.0, 240.0, 0.0, 520.0, 0.0, 360.0, 680.0, 0.0], hold: 3.0 },
                StairSpec { levels: vec![800.0, 240.0, 760.0, 300.0, 700.0, 440.0, 620.0, 280.0], hold: 3.0 },
            ],
            ramps: vec![
                RampSpec { start: 240.0, end: 800.0, rate: 56.0, hold: 5.0 },
                RampSpec { start: 800.0, end: 240.0, rate: 112.0, hold: 5.0 },
                RampSpec { start: 350.0, end: 750.0, rate: 20.0, hold: 3.0 },
            ],
        }
    }
}

impl ExcitationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.e_min > 0.0 && self.e_max > self.e_min && self.e_max.is_finite()) {
            return Err(Error::InvalidConfig(format!("bad thrust range [{}, {}]", self.e_min, self.e_max)));
        }
        if self.m_levels == 0 {
            return Err(Error::InvalidConfig("m_levels must be >= 1".into()));
        }
        if !(self.a_amp >= 0.0 && self.a_amp.is_finite()) {
            return Err(Error::InvalidConfig("a_amp must be >= 0".into()));
        }
        if !(self.dt > 0.0 && self.duration >= 0.0) {
            return Err(Error::InvalidConfig("dt must be positive and duration non-negative".into()));
        }
        Ok(())
    }

    fn samples(&self, seconds: f64) -> usize {
        (seconds / self.dt).round() as usize
    }

    fn in_range(&self, v: f64) -> bool {
        v >= self.e_min && v <= self.e_max
    }
}

/// `E_k = E_min + (k / M)(E_max - E_min)` for `k = 0..M`. The rated
/// thrust itself is not one of the levels.
pub fn thrust_levels(cfg: &ExcitationConfig) -> Vec<f64> {
    let m = cfg.m_levels as f64;
    (0..cfg.m_levels)
        .map(|k| cfg.e_min + (k as f64 / m) * (cfg.e_max - cfg.e_min))
        .collect()
}

/// Unit direction on the 3-sphere swept by the excitation angles.
pub fn excitation_basis(t: f64) -> Quad {
    let r = PI * t;
    let theta = PI * (2.0 * (2.0 * t).sin()).sin();
    let phi = PI * (2.0 * t).sin();
    let (sr, cr) = r.sin_cos();
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    [cr * ct * cp, cr * ct * sp, cr * st, sr]
}

/// Excitation about `e_bias`, clamped to the thrust range, all engines on.
pub fn excitation_segment(e_bias: f64, cfg: &ExcitationConfig) -> Result<CommandTrace> {
    if !cfg.in_range(e_bias) {
        return Err(Error::InvalidInput(format!(
            "bias {e_bias} N outside [{}, {}]",
            cfg.e_min, cfg.e_max
        )));
    }
    let mut trace = CommandTrace::new(cfg.dt);
    for i in 0..cfg.samples(cfg.duration) {
        let s = excitation_basis(i as f64 * cfg.dt);
        let cmd = s.map(|sj| (e_bias + cfg.a_amp * sj).clamp(cfg.e_min, cfg.e_max));
        trace.push(cmd, [1.0; ENGINES]);
    }
    Ok(trace)
}

/// Piecewise-constant command on all engines; a level of 0 switches the
/// engines off.
pub fn step_stair_trace(levels: &[f64], hold: f64, cfg: &ExcitationConfig) -> Result<CommandTrace> {
    if levels.is_empty() {
        return Err(Error::InvalidInput("step-stair needs at least one level".into()));
    }
    if !(hold > 0.0) {
        return Err(Error::InvalidInput("hold must be positive".into()));
    }
    if let Some(bad) = levels.iter().find(|&&l| l != 0.0 && !cfg.in_range(l)) {
        return Err(Error::InvalidInput(format!("level {bad} N is neither 0 nor in range")));
    }
    let per = cfg.samples(hold);
    let mut trace = CommandTrace::new(cfg.dt);
    for &level in levels {
        for _ in 0..per {
            trace.push_uniform(level);
        }
    }
    Ok(trace)
}

/// Linear command from `start` to `end` at `rate` N/s, then `hold` seconds
/// at `end`.
pub fn ramp_trace(start: f64, end: f64, rate: f64, hold: f64, cfg: &ExcitationConfig) -> Result<CommandTrace> {
    if !(rate > 0.0) {
        return Err(Error::InvalidInput(format!("ramp rate must be positive, got {rate}")));
    }
    if !cfg.in_range(start) || !cfg.in_range(end) {
        return Err(Error::InvalidInput(format!("ramp {start} -> {end} N leaves the thrust range")));
    }
    let ramp = cfg.samples((end - start).abs() / rate);
    let total = ramp + cfg.samples(hold.max(0.0));
    let sign = (end - start).signum();
    let mut trace = CommandTrace::new(cfg.dt);
    for i in 0..total {
        let level = if i < ramp { start + sign * rate * (i as f64 * cfg.dt) } else { end };
        trace.push_uniform(level);
    }
    Ok(trace)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentKind {
    Excitation,
    Stair,
    Ramp,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusEntry {
    pub name: String,
    pub kind: SegmentKind,
    pub e_bias: Option<f64>,
    pub trace: CommandTrace,
}

impl CorpusEntry {
    pub fn duration(&self) -> f64 {
        self.trace.len() as f64 * self.trace.dt
    }
}

/// One excitation segment per thrust level (order shuffled by `seed`),
/// followed by the configured stair and ramp families in order.
pub fn build_corpus(cfg: &ExcitationConfig) -> Result<Vec<CorpusEntry>> {
    cfg.validate()?;
    let mut levels = thrust_levels(cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    levels.shuffle(&mut rng);

    let mut corpus = Vec::new();
    for (i, &e) in levels.iter().enumerate() {
        corpus.push(CorpusEntry {
            name: format!("exc{i:02}_{}", e.round() as i64),
            kind: SegmentKind::Excitation,
            e_bias: Some(e),
            trace: excitation_segment(e, cfg)?,
        });
    }
    for (i, s) in cfg.stairs.iter().enumerate() {
        corpus.push(CorpusEntry {
            name: format!("stair{i:02}"),
            kind: SegmentKind::Stair,
            e_bias: None,
            trace: step_stair_trace(&s.levels, s.hold, cfg)?,
        });
    }
    for (i, r) in cfg.ramps.iter().enumerate() {
        corpus.push(CorpusEntry {
            name: format!("ramp{i:02}"),
            kind: SegmentKind::Ramp,
            e_bias: None,
            trace: ramp_trace(r.start, r.end, r.rate, r.hold, cfg)?,
        });
    }
    Ok(corpus)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(e_min: f64, e_max: f64, m: usize) -> ExcitationConfig {
        ExcitationConfig { e_min, e_max, m_levels: m, ..Default::default() }
    }

    #[test]
    fn levels_closed_form() {
        assert_eq!(thrust_levels(&cfg(400.0, 700.0, 3)), vec![400.0, 500.0, 600.0]);
        assert_eq!(thrust_levels(&cfg(400.0, 700.0, 1)), vec![400.0]);
        assert_eq!(
            thrust_levels(&cfg(240.0, 800.0, 8)),
            vec![240.0, 310.0, 380.0, 450.0, 520.0, 590.0, 660.0, 730.0]
        );
    }

    #[test]
    fn basis_special_points() {
        assert_eq!(excitation_basis(0.0), [1.0, 0.0, 0.0, 0.0]);
        let s = excitation_basis(0.5);
        assert!(s[0].abs() < 1e-15 && s[1].abs() < 1e-15 && s[2].abs() < 1e-15);
        assert!((s[3] - 1.0).abs() < 1e-15);
        // Independent evaluation at t = 0.25.
        let t: f64 = 0.25;
        let r = std::f64::consts::PI * t;
        let th = std::f64::consts::PI * (2.0 * (2.0 * t).sin()).sin();
        let ph = std::f64::consts::PI * (2.0 * t).sin();
        let want = [r.cos() * th.cos() * ph.cos(), r.cos() * th.cos() * ph.sin(), r.cos() * th.sin(), r.sin()];
        let got = excitation_basis(t);
        for j in 0..4 {
            assert!((got[j] - want[j]).abs() < 1e-15);
        }
        let norm: f64 = got.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn segment_at_origin_and_zero_amplitude() {
        let c = ExcitationConfig::default();
        let seg = excitation_segment(600.0, &c).unwrap();
        assert_eq!(seg.len(), 3000);
        assert_eq!(seg.commands[0], [700.0, 600.0, 600.0, 600.0]);
        assert!(seg.status.iter().all(|s| *s == [1.0; 4]));

        let flat = ExcitationConfig { a_amp: 0.0, ..Default::default() };
        let seg = excitation_segment(450.0, &flat).unwrap();
        assert!(seg.commands.iter().all(|c| *c == [450.0; 4]));
    }

    #[test]
    fn segment_envelope() {
        let c = ExcitationConfig::default();
        let seg = excitation_segment(450.0, &c).unwrap();
        let lo = seg.commands.iter().flatten().copied().fold(f64::INFINITY, f64::min);
        let hi = seg.commands.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
        assert!(lo >= 350.0 - 1e-9 && hi <= 550.0 + 1e-9);
        // Clamped at the bottom of the range.
        let seg = excitation_segment(240.0, &c).unwrap();
        assert!(seg.commands.iter().flatten().all(|&v| (240.0..=800.0).contains(&v)));
        assert!(excitation_segment(900.0, &c).is_err());
    }

    #[test]
    fn stairs_and_ramps() {
        let c = ExcitationConfig::default();
        let s = step_stair_trace(&[400.0], 10.0, &c).unwrap();
        assert_eq!(s.len(), 1000);
        assert!(s.commands.iter().all(|v| *v == [400.0; 4]));
        let s = step_stair_trace(&[400.0, 600.0, 800.0, 600.0, 400.0], 5.0, &c).unwrap();
        assert_eq!(s.len(), 2500);
        assert_eq!(s.commands[1250], [800.0; 4]);
        let s = step_stair_trace(&[800.0, 0.0], 1.0, &c).unwrap();
        assert_eq!(s.status[150], [0.0; 4]);
        assert!(step_stair_trace(&[], 5.0, &c).is_err());
        assert!(step_stair_trace(&[100.0], 5.0, &c).is_err());

        let r = ramp_trace(500.0, 500.0, 10.0, 2.0, &c).unwrap();
        assert!(r.commands.iter().all(|v| *v == [500.0; 4]));
        let r = ramp_trace(240.0, 800.0, 56.0, 0.0, &c).unwrap();
        assert_eq!(r.len(), 1000);
        let r = ramp_trace(800.0, 240.0, 112.0, 1.0, &c).unwrap();
        assert_eq!(r.len(), 600);
        assert!((r.commands[250][0] - 520.0).abs() < 1e-9);
        assert!(ramp_trace(240.0, 800.0, 0.0, 1.0, &c).is_err());
        assert!(ramp_trace(240.0, 800.0, -3.0, 1.0, &c).is_err());
    }

    #[test]
    fn corpus_shapes() {
        let single = ExcitationConfig { m_levels: 1, stairs: vec![], ramps: vec![], ..Default::default() };
        assert_eq!(build_corpus(&single).unwrap().len(), 1);

        let c = ExcitationConfig::default();
        let corpus = build_corpus(&c).unwrap();
        let n_exc = corpus.iter().filter(|e| e.kind == SegmentKind::Excitation).count();
        assert_eq!(n_exc, 8);
        assert_eq!(corpus.len(), 8 + c.stairs.len() + c.ramps.len());
        let on: Vec<f64> = corpus
            .iter()
            .flat_map(|e| e.trace.commands.iter().zip(&e.trace.status))
            .flat_map(|(cmd, st)| (0..4).filter(move |&j| st[j] == 1.0).map(move |j| cmd[j]))
            .collect();
        let lo = on.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = on.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert!(lo >= c.e_min && hi <= c.e_max);
        assert!(lo <= c.e_min * 1.01 && hi >= c.e_max * 0.99);
        assert_eq!(build_corpus(&c).unwrap(), corpus);
    }
}
