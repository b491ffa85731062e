//! Closed-loop scenarios and compensation metrics.
//!
//! A scenario synthesizes a sea, maps it to the net winch heave through the
//! vessel RAOs and crane geometry, then steps the winch under a controller at
//! the control interval. Disturbances enter the rope acceleration; sensor
//! noise corrupts only what the controller sees.

use std::f64::consts::PI;
use std::io::{Read, Write};
use std::path::Path;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::ddpg::Observation;
use crate::error::{Error, Result};
use crate::nn::{Checkpoint, Mlp};
use crate::pid::{PdController, PdGains};
use crate::plant::{hanging_equilibrium, measure, WinchParams, WinchPlant, WinchState};
use crate::rng::RngSeed;
use crate::seaway::{band_limited_series, pm_wave_elevation};
use crate::series::{fmt_g17, TimeSeries};
use crate::vessel::{net_winch_heave, parametric_rao, winch_heave_rate, CraneGeometry, ParametricRao, Rao, VesselMotion};

/// Root mean square; 0 for an empty slice.
pub fn rms_values(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt()
}

pub fn rms(series: &TimeSeries) -> f64 {
    rms_values(series.values())
}

/// `100·(rms(uncomp) − rms(comp)) / rms(uncomp)`.
pub fn compensation_percent(uncomp: &TimeSeries, comp: &TimeSeries) -> Result<f64> {
    compensation_from_rms(rms(uncomp), rms(comp))
}

fn compensation_from_rms(rms_uncomp: f64, rms_comp: f64) -> Result<f64> {
    if !(rms_uncomp > 0.0) {
        return Err(Error::UndefinedMetric(
            "compensation is undefined for a zero uncompensated RMS".into(),
        ));
    }
    Ok(100.0 * (rms_uncomp - rms_comp) / rms_uncomp)
}

/// `20·log₁₀(σ_signal / σ_noise)`.
pub fn snr_db(sigma_signal: f64, sigma_noise: f64) -> Result<f64> {
    if !(sigma_signal > 0.0) || !(sigma_noise > 0.0) {
        return Err(Error::domain(format!(
            "SNR needs positive RMS values, got {sigma_signal} and {sigma_noise}"
        )));
    }
    Ok(20.0 * (sigma_signal / sigma_noise).log10())
}

/// One-sided power spectral density on a uniform frequency grid (rad/s).
#[derive(Debug, Clone, PartialEq)]
pub struct Psd {
    pub omega: Vec<f64>,
    pub density: Vec<f64>,
}

impl Psd {
    /// Rectangle-rule integral over the grid.
    pub fn integral(&self) -> f64 {
        if self.omega.len() < 2 {
            return 0.0;
        }
        let dw = self.omega[1] - self.omega[0];
        self.density.iter().sum::<f64>() * dw
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "omega,density")?;
        for (o, d) in self.omega.iter().zip(&self.density) {
            writeln!(w, "{},{}", fmt_g17(*o), fmt_g17(*d))?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("in-memory write");
        String::from_utf8(buf).expect("ascii")
    }
}

/// Welch estimate: Hann-windowed segments of `segment_len` samples with
/// fractional `overlap`, each mean-removed, periodograms averaged. Density
/// is per rad/s, so its integral over ω approximates the variance.
pub fn welch_psd(series: &TimeSeries, segment_len: usize, overlap: f64) -> Result<Psd> {
    let n = series.len();
    if segment_len < 2 || segment_len > n {
        return Err(Error::domain(format!(
            "segment length must be in [2, {n}], got {segment_len}"
        )));
    }
    if !(0.0..1.0).contains(&overlap) {
        return Err(Error::domain(format!("overlap must be in [0, 1), got {overlap}")));
    }
    let hop = ((segment_len as f64 * (1.0 - overlap)).round() as usize).max(1);
    let window: Vec<f64> = (0..segment_len)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / segment_len as f64).cos())
        .collect();
    let w_energy: f64 = window.iter().map(|w| w * w).sum();
    let fs = 1.0 / series.dt();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(segment_len);
    let n_bins = segment_len / 2 + 1;
    let mut acc = vec![0.0; n_bins];
    let mut segments = 0usize;
    let mut buf = vec![Complex::new(0.0, 0.0); segment_len];
    let v = series.values();
    let mut start = 0;
    while start + segment_len <= n {
        let seg = &v[start..start + segment_len];
        let mean = seg.iter().sum::<f64>() / segment_len as f64;
        for ((b, x), w) in buf.iter_mut().zip(seg).zip(&window) {
            *b = Complex::new((x - mean) * w, 0.0);
        }
        fft.process(&mut buf);
        for (a, b) in acc.iter_mut().zip(&buf) {
            *a += b.norm_sqr();
        }
        segments += 1;
        start += hop;
    }
    // Per-Hz one-sided density, then per rad/s.
    let scale = 1.0 / (fs * w_energy * segments as f64 * 2.0 * PI);
    let density = acc
        .iter()
        .enumerate()
        .map(|(k, a)| {
            let one_sided = if k == 0 || (segment_len % 2 == 0 && k == segment_len / 2) { 1.0 } else { 2.0 };
            a * scale * one_sided
        })
        .collect();
    let dw = 2.0 * PI * fs / segment_len as f64;
    Ok(Psd {
        omega: (0..n_bins).map(|k| k as f64 * dw).collect(),
        density,
    })
}

/// Significant wave height (m) and peak period (s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeaState {
    pub name: &'static str,
    pub hs: f64,
    pub tp: f64,
}

/// The four benchmark sea states, mildest first.
pub const SEA_STATES: [SeaState; 4] = [
    SeaState {
        name: "slight",
        hs: 1.5,
        tp: 6.0,
    },
    SeaState {
        name: "moderate",
        hs: 4.0,
        tp: 9.0,
    },
    SeaState {
        name: "rough",
        hs: 6.0,
        tp: 12.0,
    },
    SeaState {
        name: "very_rough",
        hs: 8.5,
        tp: 14.0,
    },
];

pub fn sea_state(name: &str) -> Result<SeaState> {
    SEA_STATES
        .iter()
        .copied()
        .find(|s| s.name == name)
        .ok_or_else(|| Error::parse(format!("unknown sea state `{name}`")))
}

/// Flat spectral density `s0` on `[omega_lo, omega_hi]` rad/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandSpec {
    pub s0: f64,
    pub omega_lo: f64,
    pub omega_hi: f64,
}

impl BandSpec {
    /// Standard deviation of an exact realization, `sqrt(s0·(hi − lo))`.
    pub fn analytic_rms(&self) -> f64 {
        (self.s0 * (self.omega_hi - self.omega_lo)).sqrt()
    }
}

/// Hold `level` metres of offset on `[t_start, t_end)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OffsetWindow {
    pub t_start: f64,
    pub t_end: f64,
    pub level: f64,
}

impl Default for OffsetWindow {
    fn default() -> Self {
        Self {
            t_start: 100.0,
            t_end: 300.0,
            level: 1.0,
        }
    }
}

/// A trained policy: the actor network and its action bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    pub actor: Mlp,
    pub a_low: f64,
    pub a_high: f64,
}

impl Policy {
    pub fn act(&self, s: &Observation) -> Result<f64> {
        Ok(self.actor.forward(&s.to_array())?[0].clamp(self.a_low, self.a_high))
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        let actor = ck
            .net("actor")
            .cloned()
            .ok_or_else(|| Error::parse("checkpoint has no `actor` network"))?;
        let bound = |key: &str, default: f64| -> Result<f64> {
            ck.meta(key)
                .map_or(Ok(default), |v| v.parse().map_err(|_| Error::parse(format!("bad {key} `{v}`"))))
        };
        Ok(Self {
            actor,
            a_low: bound("agent.a_low", -1.0)?,
            a_high: bound("agent.a_high", 1.0)?,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::MissingCheckpoint(path.display().to_string()),
            _ => Error::Io(e),
        })?;
        Self::from_checkpoint(&Checkpoint::read(std::io::BufReader::new(file))?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ControllerSpec {
    /// Zero command throughout.
    None,
    Pd(PdGains),
    Rl(Policy),
}

impl ControllerSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ControllerSpec::None => "none",
            ControllerSpec::Pd(_) => "pd",
            ControllerSpec::Rl(_) => "rl",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RaoSource {
    /// [`ParametricRao::container_ship`] at the scenario heading.
    DefaultParametric,
    Parametric(ParametricRao),
    Table(Rao),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialState {
    /// Load at rest; with the gravity bias on, pressure holds it up.
    Equilibrium,
    Zero,
    Given(WinchState),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub sea: SeaState,
    pub heading_deg: f64,
    /// Simulated time, s.
    pub duration: f64,
    /// Control interval, s.
    pub dt: f64,
    pub controller: ControllerSpec,
    pub offsets: Vec<OffsetWindow>,
    pub disturbance: Option<BandSpec>,
    pub noise: Option<BandSpec>,
    pub crane: CraneGeometry,
    pub rao: RaoSource,
    pub plant: WinchParams,
    pub gravity_bias: bool,
    pub initial: InitialState,
    /// Initial stretch left out of the metrics, s.
    pub discard: f64,
    pub seed: RngSeed,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            name: "moderate".into(),
            sea: SEA_STATES[1],
            heading_deg: 135.0,
            duration: 1000.0,
            dt: 0.1,
            controller: ControllerSpec::Pd(PdGains::default()),
            offsets: Vec::new(),
            disturbance: None,
            noise: None,
            crane: CraneGeometry::default(),
            rao: RaoSource::DefaultParametric,
            plant: WinchParams::default(),
            gravity_bias: false,
            initial: InitialState::Equilibrium,
            discard: 10.0,
            seed: RngSeed(0),
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.duration > 0.0) || !(self.dt > 0.0) {
            return Err(Error::domain("scenario duration and dt must be > 0"));
        }
        if !(self.discard >= 0.0) || self.discard >= self.duration {
            return Err(Error::domain(format!(
                "discard {} s must lie in [0, duration)",
                self.discard
            )));
        }
        for w in &self.offsets {
            if !(w.t_start >= 0.0 && w.t_start < w.t_end && w.t_end <= self.duration) || !w.level.is_finite() {
                return Err(Error::domain(format!(
                    "offset window [{}, {}) outside [0, {}]",
                    w.t_start, w.t_end, self.duration
                )));
            }
        }
        for band in self.disturbance.iter().chain(&self.noise) {
            if !(band.s0 >= 0.0) || !(band.omega_lo >= 0.0 && band.omega_lo < band.omega_hi) {
                return Err(Error::domain(format!("bad band spec {band:?}")));
            }
        }
        self.plant.validate()
    }

    pub fn offset_at(&self, t: f64) -> f64 {
        self.offsets
            .iter()
            .filter(|w| t >= w.t_start && t < w.t_end)
            .map(|w| w.level)
            .sum()
    }

    pub fn rao_table(&self) -> Result<Rao> {
        match &self.rao {
            RaoSource::DefaultParametric => parametric_rao(&ParametricRao::container_ship(self.heading_deg), self.heading_deg),
            RaoSource::Parametric(p) => parametric_rao(p, self.heading_deg),
            RaoSource::Table(r) => Ok(r.clone()),
        }
    }
}

/// Sea and vessel response for a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Motions {
    pub wave: TimeSeries,
    pub vessel: VesselMotion,
    pub z_winch: TimeSeries,
    pub zdot_winch: TimeSeries,
}

/// Synthesizes the wave for `sea` over `[0, duration]` and propagates it to
/// the winch.
pub fn winch_motion(
    sea: SeaState,
    rao: &Rao,
    crane: &CraneGeometry,
    duration: f64,
    dt: f64,
    seed: RngSeed,
) -> Result<Motions> {
    let wave = pm_wave_elevation(sea.hs, sea.tp, duration, dt, seed)?;
    let vessel = VesselMotion::from_wave(&wave, rao)?;
    let z_winch = net_winch_heave(&vessel, crane)?;
    let zdot_winch = winch_heave_rate(&z_winch)?;
    Ok(Motions {
        wave,
        vessel,
        z_winch,
        zdot_winch,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub comp_percent: f64,
    pub rms_uncomp: f64,
    pub rms_comp: f64,
    /// Fraction of samples with the swash angle at its limit.
    pub sat_fraction: f64,
    /// Uncompensated RMS over the RMS of the heave-measurement noise, when
    /// noise is configured.
    pub snr_db: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub uncompensated: TimeSeries,
    /// `z_w + z_winch − offset` from the true plant state.
    pub compensated: TimeSeries,
    pub command: TimeSeries,
    pub swash: TimeSeries,
    pub offset: TimeSeries,
    /// Noise added to the measured rope length, if any.
    pub noise: Option<TimeSeries>,
    pub metrics: Metrics,
}

impl RunResult {
    /// First sample index inside the metric window.
    pub fn window_start(&self, discard: f64) -> usize {
        ((discard / self.compensated.dt()).round() as usize).min(self.compensated.len() - 1)
    }
}

/// Swash angles within this distance of ±1 count as saturated.
pub const SATURATION_TOLERANCE: f64 = 1e-6;

pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunResult> {
    cfg.validate()?;
    let rao = cfg.rao_table()?;
    let motion = winch_motion(cfg.sea, &rao, &cfg.crane, cfg.duration, cfg.dt, cfg.seed.derive("sea"))?;
    let n = motion.z_winch.len();
    let band = |spec: &Option<BandSpec>, label: &str| -> Result<Option<Vec<f64>>> {
        spec.map(|b| {
            band_limited_series(b.s0, b.omega_lo, b.omega_hi, cfg.duration, cfg.dt, cfg.seed.derive(label))
                .map(TimeSeries::into_values)
        })
        .transpose()
    };
    let disturbance = band(&cfg.disturbance, "disturbance")?;
    let noise_z = band(&cfg.noise, "noise-z")?;
    let noise_zdot = band(&cfg.noise, "noise-zdot")?;

    let mut plant = WinchPlant::new(cfg.plant)?.with_gravity_bias(cfg.gravity_bias);
    plant.set_state(match cfg.initial {
        InitialState::Equilibrium if cfg.gravity_bias => hanging_equilibrium(&cfg.plant),
        InitialState::Equilibrium => WinchState::default(),
        InitialState::Zero => WinchState::default(),
        InitialState::Given(s) => s,
    });
    let mut pd = match &cfg.controller {
        ControllerSpec::Pd(g) => Some(PdController::new(*g)),
        _ => None,
    };

    let zw = motion.z_winch.values();
    let zwd = motion.zdot_winch.values();
    let mut comp = Vec::with_capacity(n);
    let mut command = Vec::with_capacity(n);
    let mut swash = Vec::with_capacity(n);
    let mut offsets = Vec::with_capacity(n);
    for k in 0..n {
        let offset = cfg.offset_at(motion.z_winch.time(k));
        let state = plant.state();
        let (nz, nzd) = (
            noise_z.as_ref().map_or(0.0, |v| v[k]),
            noise_zdot.as_ref().map_or(0.0, |v| v[k]),
        );
        let (z_meas, zdot_meas) = measure(&state, nz, nzd);
        let u = match &cfg.controller {
            ControllerSpec::None => 0.0,
            ControllerSpec::Pd(_) => pd
                .as_mut()
                .expect("PD state exists for a PD scenario")
                .step(offset - (z_meas + zw[k]), cfg.dt)?,
            ControllerSpec::Rl(policy) => policy.act(&Observation {
                z_w: z_meas,
                zdot_w: zdot_meas,
                z_winch: zw[k] - offset,
                zdot_winch: zwd[k],
            })?,
        };
        comp.push(state.z_w + zw[k] - offset);
        command.push(u);
        swash.push(state.x_p);
        offsets.push(offset);
        if k + 1 < n {
            plant.step(u, disturbance.as_ref().map_or(0.0, |d| d[k]), cfg.dt)?;
        }
    }

    let series = |v: Vec<f64>| motion.z_winch.with_values(v);
    let compensated = series(comp)?;
    let swash = series(swash)?;
    let noise = noise_z.map(series).transpose()?;
    let k0 = ((cfg.discard / cfg.dt).round() as usize).min(n - 1);
    let rms_uncomp = rms_values(&zw[k0..]);
    let rms_comp = rms_values(&compensated.values()[k0..]);
    let window = &swash.values()[k0..];
    let sat = window.iter().filter(|x| x.abs() >= 1.0 - SATURATION_TOLERANCE).count();
    let snr = match &noise {
        Some(nz) => Some(snr_db(rms_uncomp, rms_values(&nz.values()[k0..]))?),
        None => None,
    };
    Ok(RunResult {
        uncompensated: motion.z_winch.clone(),
        command: series(command)?,
        offset: series(offsets)?,
        metrics: Metrics {
            comp_percent: compensation_from_rms(rms_uncomp, rms_comp)?,
            rms_uncomp,
            rms_comp,
            sat_fraction: sat as f64 / window.len() as f64,
            snr_db: snr,
        },
        compensated,
        swash,
        noise,
    })
}

/// One row of the results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub scenario: String,
    pub controller: String,
    #[serde(rename = "Hs")]
    pub hs: f64,
    #[serde(rename = "Tp")]
    pub tp: f64,
    pub comp_percent: f64,
    pub rms_uncomp: f64,
    pub rms_comp: f64,
    pub sat_fraction: f64,
    pub seed: u64,
}

impl ResultRow {
    pub fn new(cfg: &ScenarioConfig, metrics: &Metrics) -> Self {
        Self {
            scenario: cfg.name.clone(),
            controller: cfg.controller.name().into(),
            hs: cfg.sea.hs,
            tp: cfg.sea.tp,
            comp_percent: metrics.comp_percent,
            rms_uncomp: metrics.rms_uncomp,
            rms_comp: metrics.rms_comp,
            sat_fraction: metrics.sat_fraction,
            seed: cfg.seed.0,
        }
    }
}

pub fn write_results_csv<W: Write>(rows: &[ResultRow], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in rows {
        wr.serialize(r)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_results_csv<R: Read>(r: R) -> Result<Vec<ResultRow>> {
    csv::Reader::from_reader(r)
        .deserialize()
        .map(|row| row.map_err(Error::from))
        .collect()
}

/// Runs every controller on every sea state of `seas`, holding the rest of
/// `base` (seed included) fixed, so all controllers see the same waves in a
/// given sea. Rows are grouped by sea state.
pub fn compare_controllers(
    base: &ScenarioConfig,
    controllers: &[ControllerSpec],
    seas: &[SeaState],
) -> Result<Vec<ResultRow>> {
    let mut rows = Vec::with_capacity(controllers.len() * seas.len());
    for sea in seas {
        for c in controllers {
            let cfg = ScenarioConfig {
                name: sea.name.into(),
                sea: *sea,
                controller: c.clone(),
                ..base.clone()
            };
            let res = run_scenario(&cfg)?;
            rows.push(ResultRow::new(&cfg, &res.metrics));
        }
    }
    Ok(rows)
}
