//! Run configuration: flat `section.key = value` lines.
//!
//! ```text
//! # comments and blank lines are ignored
//! run.seed = 7
//! sea.state = moderate
//! plant.K_oil = 1.8e9
//! agent.episodes = 150
//! scenario.controller = pd
//! ```
//!
//! Parsing is strict: every unknown key, malformed value or repeated key is
//! reported, all at once.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use ahc_core::ddpg::AgentConfig;
use ahc_core::evalkit::{sea_state, BandSpec, InitialState, OffsetWindow, SeaState, SEA_STATES};
use ahc_core::pid::PdGains;
use ahc_core::plant::{parse_bool, WinchParams};
use ahc_core::series::fmt_g17;
use ahc_core::vessel::{CraneGeometry, ParametricRao, SecondOrder};
use ahc_core::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControllerKind {
    None,
    Pd,
    Rl,
}

impl ControllerKind {
    pub fn name(self) -> &'static str {
        match self {
            ControllerKind::None => "none",
            ControllerKind::Pd => "pd",
            ControllerKind::Rl => "rl",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeaSection {
    pub hs: f64,
    pub tp: f64,
    /// Record length for `synth`, s.
    pub duration: f64,
    pub dt: f64,
}

/// Per-DOF overrides of the default parametric RAO.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SecondOrderOverride {
    pub gain: Option<f64>,
    pub omega_n: Option<f64>,
    pub zeta: Option<f64>,
}

impl SecondOrderOverride {
    fn apply(&self, base: SecondOrder) -> SecondOrder {
        SecondOrder {
            gain: self.gain.unwrap_or(base.gain),
            omega_n: self.omega_n.unwrap_or(base.omega_n),
            zeta: self.zeta.unwrap_or(base.zeta),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VesselSection {
    pub heading_deg: f64,
    /// Tabulated RAO file; overrides the parametric model when set.
    pub rao_file: Option<PathBuf>,
    pub heave: SecondOrderOverride,
    pub roll: SecondOrderOverride,
    pub pitch: SecondOrderOverride,
    pub crane: CraneGeometry,
}

impl VesselSection {
    pub fn parametric(&self) -> ParametricRao {
        let base = ParametricRao::container_ship(self.heading_deg);
        ParametricRao {
            heave: self.heave.apply(base.heave),
            roll: self.roll.apply(base.roll),
            pitch: self.pitch.apply(base.pitch),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSection {
    /// Length of the sea record the training reference is cut from, s.
    pub reference_duration: f64,
    /// Start of the fixed training slice within that record, s.
    pub reference_start: f64,
    /// Write an intermediate checkpoint every this many episodes (0: never).
    pub checkpoint_every: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSection {
    pub controller: ControllerKind,
    pub seas: Vec<SeaState>,
    pub duration: f64,
    pub discard: f64,
    pub offsets: Vec<OffsetWindow>,
    pub disturbance: Option<BandSpec>,
    pub noise: Option<BandSpec>,
    pub initial: InitialState,
    pub psd_segment: usize,
    pub psd_overlap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub seed: u64,
    pub sea: SeaSection,
    pub vessel: VesselSection,
    pub plant: WinchParams,
    pub gravity_bias: bool,
    pub pd: PdGains,
    pub agent: AgentConfig,
    pub train: TrainSection,
    pub scenario: ScenarioSection,
}

impl Default for Config {
    fn default() -> Self {
        let moderate = SEA_STATES[1];
        Self {
            seed: 0,
            sea: SeaSection {
                hs: moderate.hs,
                tp: moderate.tp,
                duration: 1000.0,
                dt: 0.1,
            },
            vessel: VesselSection {
                heading_deg: 135.0,
                rao_file: None,
                heave: SecondOrderOverride::default(),
                roll: SecondOrderOverride::default(),
                pitch: SecondOrderOverride::default(),
                crane: CraneGeometry::default(),
            },
            plant: WinchParams::default(),
            gravity_bias: false,
            pd: PdGains::default(),
            agent: AgentConfig::default(),
            train: TrainSection {
                reference_duration: 10_000.0,
                reference_start: 0.0,
                checkpoint_every: 0,
            },
            scenario: ScenarioSection {
                controller: ControllerKind::Pd,
                seas: SEA_STATES.to_vec(),
                duration: 1000.0,
                discard: 10.0,
                offsets: Vec::new(),
                disturbance: None,
                noise: None,
                initial: InitialState::Equilibrium,
                psd_segment: 1024,
                psd_overlap: 0.5,
            },
        }
    }
}

fn num(v: &str) -> Result<f64> {
    let x: f64 = v.parse().map_err(|_| Error::Parse(format!("cannot parse `{v}` as a number")))?;
    if !x.is_finite() {
        return Err(Error::Parse(format!("`{v}` is not finite")));
    }
    Ok(x)
}

fn count(v: &str) -> Result<usize> {
    v.parse().map_err(|_| Error::Parse(format!("cannot parse `{v}` as a count")))
}

fn triple(v: &str) -> Result<[f64; 3]> {
    let parts: Vec<&str> = v.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [a, b, c] => Ok([num(a)?, num(b)?, num(c)?]),
        _ => Err(Error::Parse(format!("expected three comma-separated numbers, got `{v}`"))),
    }
}

fn band(v: &str) -> Result<Option<BandSpec>> {
    if v == "off" {
        return Ok(None);
    }
    let [s0, omega_lo, omega_hi] = triple(v)?;
    Ok(Some(BandSpec { s0, omega_lo, omega_hi }))
}

/// `t_start:t_end:level` windows separated by `;`, or `off`.
fn offsets(v: &str) -> Result<Vec<OffsetWindow>> {
    if v == "off" {
        return Ok(Vec::new());
    }
    v.split(';')
        .map(|w| {
            let p: Vec<&str> = w.split(':').map(str::trim).collect();
            match p.as_slice() {
                [a, b, c] => Ok(OffsetWindow {
                    t_start: num(a)?,
                    t_end: num(b)?,
                    level: num(c)?,
                }),
                _ => Err(Error::Parse(format!("offset window `{w}` is not t_start:t_end:level"))),
            }
        })
        .collect()
}

fn seas(v: &str) -> Result<Vec<SeaState>> {
    if v == "all" {
        return Ok(SEA_STATES.to_vec());
    }
    v.split(',').map(|s| sea_state(s.trim())).collect()
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        // Relative RAO paths are relative to the config file.
        if let (Some(rao), Some(dir)) = (&cfg.vessel.rao_file, path.parent()) {
            if rao.is_relative() {
                cfg.vessel.rao_file = Some(dir.join(rao));
            }
        }
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Config::default();
        let mut problems = Vec::new();
        let mut seen = BTreeSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                problems.push(format!("line {}: expected `section.key = value`", i + 1));
                continue;
            };
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                problems.push(format!("line {}: `{key}` set twice", i + 1));
                continue;
            }
            if let Err(e) = cfg.set(key, value) {
                let msg = match e {
                    Error::Parse(m) | Error::Domain(m) => m,
                    other => other.to_string(),
                };
                problems.push(format!("line {}: {key}: {msg}", i + 1));
            }
        }
        if problems.is_empty() {
            if let Err(e) = cfg.validate() {
                problems.push(e.to_string());
            }
        }
        if problems.is_empty() {
            Ok(cfg)
        } else {
            Err(Error::Parse(problems.join("; ")))
        }
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let (section, field) = key
            .split_once('.')
            .ok_or_else(|| Error::Parse("keys have the form section.key".into()))?;
        let unknown = || Err(Error::Parse("unknown key".into()));
        match section {
            "run" => match field {
                "seed" => self.seed = value.parse().map_err(|_| Error::Parse(format!("bad seed `{value}`")))?,
                _ => return unknown(),
            },
            "sea" => match field {
                "state" => {
                    let s = sea_state(value)?;
                    self.sea.hs = s.hs;
                    self.sea.tp = s.tp;
                }
                "hs" => self.sea.hs = num(value)?,
                "tp" => self.sea.tp = num(value)?,
                "duration" => self.sea.duration = num(value)?,
                "dt" => self.sea.dt = num(value)?,
                _ => return unknown(),
            },
            "vessel" => {
                let v = &mut self.vessel;
                match field {
                    "heading" => v.heading_deg = num(value)?,
                    "rao_file" => v.rao_file = Some(PathBuf::from(value)),
                    "x_crane" => v.crane.x_crane = num(value)?,
                    "y_crane" => v.crane.y_crane = num(value)?,
                    "l_crane" => v.crane.l_crane = num(value)?,
                    "beta_s" => v.crane.beta_s_deg = num(value)?,
                    _ => {
                        let (dof, param) = field.split_once('_').ok_or(Error::Parse("unknown key".into()))?;
                        let slot = match dof {
                            "heave" => &mut v.heave,
                            "roll" => &mut v.roll,
                            "pitch" => &mut v.pitch,
                            _ => return unknown(),
                        };
                        let x = Some(num(value)?);
                        match param {
                            "gain" => slot.gain = x,
                            "omega_n" => slot.omega_n = x,
                            "zeta" => slot.zeta = x,
                            _ => return unknown(),
                        }
                    }
                }
            }
            "plant" => match field {
                "gravity_bias" => self.gravity_bias = parse_bool(value)?,
                _ if WinchParams::KEYS.contains(&field) => self.plant.set(field, value)?,
                _ => return unknown(),
            },
            "pd" => match field {
                "kp" => self.pd.kp = num(value)?,
                "kd" => self.pd.kd = num(value)?,
                "tf" => self.pd.tf = num(value)?,
                _ => return unknown(),
            },
            "agent" => {
                if field == "seed" {
                    return Err(Error::Parse("the agent seed derives from run.seed".into()));
                }
                self.agent.set(field, value).map_err(|e| match e {
                    Error::Parse(m) if m.starts_with("unknown agent key") => Error::Parse("unknown key".into()),
                    other => other,
                })?
            }
            "train" => match field {
                "reference_duration" => self.train.reference_duration = num(value)?,
                "reference_start" => self.train.reference_start = num(value)?,
                "checkpoint_every" => self.train.checkpoint_every = count(value)?,
                _ => return unknown(),
            },
            "scenario" => {
                let s = &mut self.scenario;
                match field {
                    "controller" => {
                        s.controller = match value {
                            "none" => ControllerKind::None,
                            "pd" => ControllerKind::Pd,
                            "rl" => ControllerKind::Rl,
                            _ => return Err(Error::Parse(format!("controller must be none, pd or rl, got `{value}`"))),
                        }
                    }
                    "seas" => s.seas = seas(value)?,
                    "duration" => s.duration = num(value)?,
                    "discard" => s.discard = num(value)?,
                    "offsets" => s.offsets = offsets(value)?,
                    "disturbance" => s.disturbance = band(value)?,
                    "noise" => s.noise = band(value)?,
                    "initial" => {
                        s.initial = match value {
                            "equilibrium" => InitialState::Equilibrium,
                            "zero" => InitialState::Zero,
                            _ => return Err(Error::Parse(format!("initial must be equilibrium or zero, got `{value}`"))),
                        }
                    }
                    "psd_segment" => s.psd_segment = count(value)?,
                    "psd_overlap" => s.psd_overlap = num(value)?,
                    _ => return unknown(),
                }
            }
            _ => return Err(Error::Parse(format!("unknown section `{section}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sea.hs >= 0.0) || !(self.sea.tp > 0.0) {
            return Err(Error::Domain("sea.hs must be >= 0 and sea.tp > 0".into()));
        }
        if !(self.sea.duration > 0.0) || !(self.sea.dt > 0.0) {
            return Err(Error::Domain("sea.duration and sea.dt must be > 0".into()));
        }
        self.plant.validate()?;
        if !(self.pd.tf >= 0.0) {
            return Err(Error::Domain("pd.tf must be >= 0".into()));
        }
        self.agent.validate()?;
        // Policies are trained and evaluated at one control interval.
        if self.sea.dt != self.agent.dt {
            return Err(Error::Domain(format!(
                "sea.dt ({}) and agent.dt ({}) must match",
                self.sea.dt, self.agent.dt
            )));
        }
        let episode_span = self.agent.steps_per_episode as f64 * self.agent.dt;
        if !(self.train.reference_start >= 0.0)
            || self.train.reference_start + episode_span > self.train.reference_duration + 1e-9
        {
            return Err(Error::Domain(format!(
                "training slice [{}, {}] s does not fit in a {} s reference",
                self.train.reference_start,
                self.train.reference_start + episode_span,
                self.train.reference_duration
            )));
        }
        if self.scenario.seas.is_empty() {
            return Err(Error::Domain("scenario.seas is empty".into()));
        }
        if !(0.0..1.0).contains(&self.scenario.psd_overlap) || self.scenario.psd_segment < 2 {
            return Err(Error::Domain("psd_segment must be >= 2 and psd_overlap in [0, 1)".into()));
        }
        Ok(())
    }

    /// Every effective setting as `(key, value)`, in a form [`Config::parse`]
    /// accepts back.
    pub fn entries(&self) -> Vec<(String, String)> {
        let f = |x: f64| fmt_g17(x);
        let band = |b: &Option<BandSpec>| {
            b.map_or("off".to_string(), |b| format!("{},{},{}", f(b.s0), f(b.omega_lo), f(b.omega_hi)))
        };
        let mut out: Vec<(String, String)> = vec![
            ("run.seed".into(), self.seed.to_string()),
            ("sea.hs".into(), f(self.sea.hs)),
            ("sea.tp".into(), f(self.sea.tp)),
            ("sea.duration".into(), f(self.sea.duration)),
            ("sea.dt".into(), f(self.sea.dt)),
            ("vessel.heading".into(), f(self.vessel.heading_deg)),
        ];
        if let Some(p) = &self.vessel.rao_file {
            out.push(("vessel.rao_file".into(), p.display().to_string()));
        }
        let p = self.vessel.parametric();
        for (dof, so) in [("heave", p.heave), ("roll", p.roll), ("pitch", p.pitch)] {
            out.push((format!("vessel.{dof}_gain"), f(so.gain)));
            out.push((format!("vessel.{dof}_omega_n"), f(so.omega_n)));
            out.push((format!("vessel.{dof}_zeta"), f(so.zeta)));
        }
        let c = &self.vessel.crane;
        out.extend([
            ("vessel.x_crane".into(), f(c.x_crane)),
            ("vessel.y_crane".into(), f(c.y_crane)),
            ("vessel.l_crane".into(), f(c.l_crane)),
            ("vessel.beta_s".into(), f(c.beta_s_deg)),
        ]);
        let w = &self.plant;
        let plant = [
            ("g", w.g),
            ("K_oil", w.K_oil),
            ("V_c", w.V_c),
            ("D_p", w.D_p),
            ("D_m", w.D_m),
            ("omega_p", w.omega_p),
            ("k1_p", w.k1_p),
            ("k1_m", w.k1_m),
            ("T_w", w.T_w),
            ("k", w.k),
            ("r", w.r),
            ("eta_m", w.eta_m),
            ("J_w", w.J_w),
            ("b", w.b),
            ("m", w.m),
        ];
        out.extend(plant.iter().map(|(k, v)| (format!("plant.{k}"), f(*v))));
        out.push(("plant.omega_p_hz_to_rad".into(), w.omega_p_hz_to_rad.to_string()));
        out.push(("plant.gravity_bias".into(), self.gravity_bias.to_string()));
        out.extend([
            ("pd.kp".into(), f(self.pd.kp)),
            ("pd.kd".into(), f(self.pd.kd)),
            ("pd.tf".into(), f(self.pd.tf)),
        ]);
        out.extend(
            self.agent
                .entries()
                .into_iter()
                .filter(|(k, _)| k != "seed")
                .map(|(k, v)| (format!("agent.{k}"), v)),
        );
        out.extend([
            ("train.reference_duration".into(), f(self.train.reference_duration)),
            ("train.reference_start".into(), f(self.train.reference_start)),
            ("train.checkpoint_every".into(), self.train.checkpoint_every.to_string()),
        ]);
        let s = &self.scenario;
        let offsets = if s.offsets.is_empty() {
            "off".to_string()
        } else {
            s.offsets
                .iter()
                .map(|o| format!("{}:{}:{}", f(o.t_start), f(o.t_end), f(o.level)))
                .collect::<Vec<_>>()
                .join(";")
        };
        out.extend([
            ("scenario.controller".into(), s.controller.name().to_string()),
            (
                "scenario.seas".into(),
                s.seas.iter().map(|x| x.name).collect::<Vec<_>>().join(","),
            ),
            ("scenario.duration".into(), f(s.duration)),
            ("scenario.discard".into(), f(s.discard)),
            ("scenario.offsets".into(), offsets),
            ("scenario.disturbance".into(), band(&s.disturbance)),
            ("scenario.noise".into(), band(&s.noise)),
            (
                "scenario.initial".into(),
                match s.initial {
                    InitialState::Zero => "zero",
                    _ => "equilibrium",
                }
                .to_string(),
            ),
            ("scenario.psd_segment".into(), s.psd_segment.to_string()),
            ("scenario.psd_overlap".into(), f(s.psd_overlap)),
        ]);
        out
    }

    pub fn to_text(&self) -> String {
        self.entries()
            .iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }
}
