//! Vessel response and crane-tip heave.
//!
//! Wave elevation is mapped to heave, roll and pitch by multiplying its
//! discrete Fourier transform by a tabulated response amplitude operator
//! (RAO), and the three motions are combined through the crane lever arms
//! into the net vertical motion of the winch.
//!
//! Phase convention: a component `a·cos(ωt + φ)` of the wave produces
//! `|H(ω)|·a·cos(ωt + φ + arg H(ω))`, i.e. a positive RAO phase is a lead.
//! Roll and pitch series are in radians.

use std::f64::consts::PI;
use std::fmt;
use std::io::BufRead;
use std::str::FromStr;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::series::TimeSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dof {
    Heave,
    Roll,
    Pitch,
}

impl Dof {
    pub const ALL: [Dof; 3] = [Dof::Heave, Dof::Roll, Dof::Pitch];

    pub fn name(self) -> &'static str {
        match self {
            Dof::Heave => "heave",
            Dof::Roll => "roll",
            Dof::Pitch => "pitch",
        }
    }
}

impl fmt::Display for Dof {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Dof {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "heave" => Ok(Dof::Heave),
            "roll" => Ok(Dof::Roll),
            "pitch" => Ok(Dof::Pitch),
            other => Err(Error::parse(format!("unknown degree of freedom `{other}`"))),
        }
    }
}

/// One degree of freedom of an RAO: amplitude and phase against frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct RaoTable {
    omega: Vec<f64>,
    amplitude: Vec<f64>,
    /// Phase as given, radians.
    phase: Vec<f64>,
    /// Phase with 2π jumps removed; what interpolation uses.
    unwrapped: Vec<f64>,
}

impl RaoTable {
    pub fn new(omega: Vec<f64>, amplitude: Vec<f64>, phase: Vec<f64>) -> Result<Self> {
        if omega.is_empty() || omega.len() != amplitude.len() || omega.len() != phase.len() {
            return Err(Error::domain("RAO table columns must be non-empty and of equal length"));
        }
        if omega.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::domain("RAO frequencies must be strictly increasing"));
        }
        if amplitude.iter().any(|a| !(*a >= 0.0)) {
            return Err(Error::domain("RAO amplitudes must be >= 0"));
        }
        let mut unwrapped = phase.clone();
        for i in 1..unwrapped.len() {
            let mut d = unwrapped[i] - unwrapped[i - 1];
            while d > PI {
                d -= 2.0 * PI;
            }
            while d < -PI {
                d += 2.0 * PI;
            }
            unwrapped[i] = unwrapped[i - 1] + d;
        }
        Ok(Self {
            omega,
            amplitude,
            phase,
            unwrapped,
        })
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn amplitude(&self) -> &[f64] {
        &self.amplitude
    }

    pub fn phase(&self) -> &[f64] {
        &self.phase
    }

    /// Linear interpolation in amplitude and unwrapped phase; held at the
    /// end values outside the table.
    pub fn at(&self, omega: f64) -> (f64, f64) {
        let n = self.omega.len();
        if omega <= self.omega[0] {
            return (self.amplitude[0], self.unwrapped[0]);
        }
        if omega >= self.omega[n - 1] {
            return (self.amplitude[n - 1], self.unwrapped[n - 1]);
        }
        let hi = self.omega.partition_point(|&w| w <= omega);
        let lo = hi - 1;
        let f = (omega - self.omega[lo]) / (self.omega[hi] - self.omega[lo]);
        (
            self.amplitude[lo] + f * (self.amplitude[hi] - self.amplitude[lo]),
            self.unwrapped[lo] + f * (self.unwrapped[hi] - self.unwrapped[lo]),
        )
    }

    pub fn complex_at(&self, omega: f64) -> Complex<f64> {
        let (a, p) = self.at(omega);
        Complex::from_polar(a, p)
    }
}

/// Heave, roll and pitch RAOs for one incident wave heading.
#[derive(Debug, Clone, PartialEq)]
pub struct Rao {
    pub heading_deg: f64,
    pub heave: RaoTable,
    pub roll: RaoTable,
    pub pitch: RaoTable,
}

impl Rao {
    pub fn table(&self, dof: Dof) -> &RaoTable {
        match dof {
            Dof::Heave => &self.heave,
            Dof::Roll => &self.roll,
            Dof::Pitch => &self.pitch,
        }
    }

    /// Reads the RAO csv format:
    ///
    /// ```text
    /// # heading_deg=135
    /// dof,omega,amplitude,phase_rad
    /// heave,0.1,0.99,-0.02
    /// ...
    /// ```
    pub fn read_csv<R: BufRead>(r: R) -> Result<Rao> {
        let mut heading = None;
        let mut header_seen = false;
        let mut cols: [(Vec<f64>, Vec<f64>, Vec<f64>); 3] = Default::default();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                if let Some(v) = comment.trim().strip_prefix("heading_deg=") {
                    heading = Some(v.trim().parse::<f64>().map_err(|_| {
                        Error::parse(format!("line {}: bad heading `{}`", i + 1, v.trim()))
                    })?);
                }
                continue;
            }
            if !header_seen {
                if line != "dof,omega,amplitude,phase_rad" {
                    return Err(Error::parse("RAO csv header must be `dof,omega,amplitude,phase_rad`"));
                }
                header_seen = true;
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 4 {
                return Err(Error::parse(format!("line {}: expected 4 fields", i + 1)));
            }
            let dof: Dof = fields[0].parse()?;
            let num = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::parse(format!("line {}: bad number `{}`", i + 1, s.trim())))
            };
            let slot = &mut cols[dof as usize];
            slot.0.push(num(fields[1])?);
            slot.1.push(num(fields[2])?);
            slot.2.push(num(fields[3])?);
        }
        let heading_deg = heading.ok_or_else(|| Error::parse("RAO csv lacks `# heading_deg=<v>`"))?;
        let [heave, roll, pitch] = cols.map(|(w, a, p)| (w, a, p));
        let build = |dof: Dof, (w, a, p): (Vec<f64>, Vec<f64>, Vec<f64>)| {
            if w.is_empty() {
                return Err(Error::parse(format!("RAO csv has no rows for {dof}")));
            }
            RaoTable::new(w, a, p)
        };
        Ok(Rao {
            heading_deg,
            heave: build(Dof::Heave, heave)?,
            roll: build(Dof::Roll, roll)?,
            pitch: build(Dof::Pitch, pitch)?,
        })
    }

    pub fn to_csv_string(&self) -> String {
        use crate::series::fmt_g17;
        let mut out = format!("# heading_deg={}\ndof,omega,amplitude,phase_rad\n", fmt_g17(self.heading_deg));
        for dof in Dof::ALL {
            let t = self.table(dof);
            for i in 0..t.omega.len() {
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    dof,
                    fmt_g17(t.omega[i]),
                    fmt_g17(t.amplitude[i]),
                    fmt_g17(t.phase[i])
                ));
            }
        }
        out
    }
}

/// Gain, undamped natural frequency (rad/s) and damping ratio of a
/// second-order response `gain / (1 - r² + 2iζr)`, `r = ω/ωₙ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondOrder {
    pub gain: f64,
    pub omega_n: f64,
    pub zeta: f64,
}

impl SecondOrder {
    pub fn response(&self, omega: f64) -> Complex<f64> {
        let r = omega / self.omega_n;
        Complex::new(self.gain, 0.0) / Complex::new(1.0 - r * r, 2.0 * self.zeta * r)
    }

    /// Frequency of the amplitude peak, `ωₙ·sqrt(1 - 2ζ²)` (0 when overdamped
    /// enough that the peak is at DC).
    pub fn resonance(&self) -> f64 {
        let q = 1.0 - 2.0 * self.zeta * self.zeta;
        if q > 0.0 {
            self.omega_n * q.sqrt()
        } else {
            0.0
        }
    }
}

/// Second-order stand-in for hull RAOs. Roll and pitch gains are in rad per
/// metre of wave amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParametricRao {
    pub heave: SecondOrder,
    pub roll: SecondOrder,
    pub pitch: SecondOrder,
}

impl ParametricRao {
    /// Defaults loosely shaped after a 230 m container ship at zero speed:
    /// heave follows the surface for long waves without resonant overshoot
    /// and rolls off above 0.45 rad/s (wavelengths under about 300 m); roll
    /// is lightly damped with a ~33 s period; roll and pitch gains scale with
    /// the beam and head components of the heading.
    pub fn container_ship(heading_deg: f64) -> Self {
        let beta = heading_deg.to_radians();
        Self {
            heave: SecondOrder { gain: 1.0, omega_n: 0.45, zeta: 0.7 },
            roll: SecondOrder { gain: 0.02 * beta.sin().abs(), omega_n: 0.19, zeta: 0.1 },
            pitch: SecondOrder { gain: 0.015 * beta.cos().abs(), omega_n: 0.55, zeta: 0.4 },
        }
    }

    fn params(&self) -> [SecondOrder; 3] {
        [self.heave, self.roll, self.pitch]
    }
}

/// Frequency grid used by [`parametric_rao`]: log-spaced from 1e-3 rad/s to
/// 150 times the largest natural frequency (at least 100 rad/s).
pub const PARAMETRIC_GRID_POINTS: usize = 4000;

/// Tabulates the second-order responses on the parametric grid.
pub fn parametric_rao(params: &ParametricRao, heading_deg: f64) -> Result<Rao> {
    for p in params.params() {
        if !(p.omega_n > 0.0) || !(p.zeta > 0.0) || !(p.gain >= 0.0) {
            return Err(Error::domain(format!(
                "second-order RAO needs omega_n > 0, zeta > 0, gain >= 0; got {p:?}"
            )));
        }
    }
    let w_max = params
        .params()
        .iter()
        .map(|p| 150.0 * p.omega_n)
        .fold(100.0, f64::max);
    let (lo, hi) = (1e-3f64.ln(), w_max.ln());
    let grid: Vec<f64> = (0..PARAMETRIC_GRID_POINTS)
        .map(|i| (lo + (hi - lo) * i as f64 / (PARAMETRIC_GRID_POINTS - 1) as f64).exp())
        .collect();
    let table = |p: SecondOrder| {
        let h: Vec<Complex<f64>> = grid.iter().map(|&w| p.response(w)).collect();
        RaoTable::new(grid.clone(), h.iter().map(|c| c.norm()).collect(), h.iter().map(|c| c.arg()).collect())
    };
    Ok(Rao {
        heading_deg,
        heave: table(params.heave)?,
        roll: table(params.roll)?,
        pitch: table(params.pitch)?,
    })
}

/// Filters `wave` through one RAO table in the frequency domain.
///
/// Bins `k` and `n - k` are set to conjugates of each other; DC and the
/// Nyquist bin (even lengths) use the real part of the RAO, so the inverse
/// transform is real.
pub fn response_time_history(wave: &TimeSeries, rao: &Rao, dof: Dof) -> Result<TimeSeries> {
    let n = wave.len();
    if n < 2 {
        return Err(Error::domain("response needs a wave record of at least 2 samples"));
    }
    let table = rao.table(dof);
    let mut planner = FftPlanner::<f64>::new();
    let mut buf: Vec<Complex<f64>> = wave.values().iter().map(|&v| Complex::new(v, 0.0)).collect();
    planner.plan_fft_forward(n).process(&mut buf);

    let dw = 2.0 * PI / (n as f64 * wave.dt());
    buf[0] *= table.complex_at(0.0).re;
    for k in 1..=(n - 1) / 2 {
        let h = table.complex_at(k as f64 * dw);
        buf[k] *= h;
        buf[n - k] = buf[k].conj();
    }
    if n % 2 == 0 {
        buf[n / 2] *= table.complex_at((n / 2) as f64 * dw).re;
    }

    planner.plan_fft_inverse(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    wave.with_values(buf.iter().map(|c| c.re * scale).collect())
}

/// Heave (m), roll (rad) and pitch (rad) on a common time base.
#[derive(Debug, Clone, PartialEq)]
pub struct VesselMotion {
    pub eta3: TimeSeries,
    pub eta4: TimeSeries,
    pub eta5: TimeSeries,
}

impl VesselMotion {
    pub fn new(eta3: TimeSeries, eta4: TimeSeries, eta5: TimeSeries) -> Result<Self> {
        if !eta3.same_sampling(&eta4) || !eta3.same_sampling(&eta5) {
            return Err(Error::domain("heave, roll and pitch must share t0, dt and length"));
        }
        Ok(Self { eta3, eta4, eta5 })
    }

    pub fn from_wave(wave: &TimeSeries, rao: &Rao) -> Result<Self> {
        Self::new(
            response_time_history(wave, rao, Dof::Heave)?,
            response_time_history(wave, rao, Dof::Roll)?,
            response_time_history(wave, rao, Dof::Pitch)?,
        )
    }
}

/// Crane position in the body frame (x forward, y to port, origin at
/// waterline/centerline/midship), horizontal reach and slewing angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CraneGeometry {
    pub x_crane: f64,
    pub y_crane: f64,
    pub l_crane: f64,
    pub beta_s_deg: f64,
}

impl Default for CraneGeometry {
    fn default() -> Self {
        Self {
            x_crane: -1.5,
            y_crane: 2.0,
            l_crane: 3.0,
            beta_s_deg: 30.0,
        }
    }
}

impl CraneGeometry {
    /// Lever arm on roll.
    pub fn roll_coefficient(&self) -> f64 {
        self.y_crane + self.l_crane * self.beta_s_deg.to_radians().sin()
    }

    /// Lever arm on pitch (sign included).
    pub fn pitch_coefficient(&self) -> f64 {
        -(self.x_crane + self.l_crane * self.beta_s_deg.to_radians().cos())
    }
}

/// `z = η₃ + c₄·η₄ + c₅·η₅`, evaluated left to right.
pub fn net_winch_heave(motion: &VesselMotion, crane: &CraneGeometry) -> Result<TimeSeries> {
    if crane.l_crane < 0.0 {
        return Err(Error::domain("crane reach must be >= 0"));
    }
    let (c4, c5) = (crane.roll_coefficient(), crane.pitch_coefficient());
    let z = motion
        .eta3
        .values()
        .iter()
        .zip(motion.eta4.values())
        .zip(motion.eta5.values())
        .map(|((h, r), p)| h + c4 * r + c5 * p)
        .collect();
    motion.eta3.with_values(z)
}

/// Time derivative by central differences inside, second-order one-sided
/// differences at the ends.
pub fn winch_heave_rate(z: &TimeSeries) -> Result<TimeSeries> {
    let v = z.values();
    let n = v.len();
    if n < 3 {
        return Err(Error::domain("rate needs at least 3 samples"));
    }
    let h2 = 2.0 * z.dt();
    let mut out = Vec::with_capacity(n);
    out.push((-3.0 * v[0] + 4.0 * v[1] - v[2]) / h2);
    out.extend(v.windows(3).map(|w| (w[2] - w[0]) / h2));
    out.push((3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / h2);
    z.with_values(out)
}
