//! Hydraulically driven winch.
//!
//! Four-state linear model with state `[x_p, Δp, ż_w, z_w]`: normalized
//! pump swash angle, line pressure difference, reeled rope velocity and
//! reeled rope length. The swash angle follows the command through a first
//! order lag and saturates at ±1. The payload weight enters the rope
//! acceleration as a constant bias `d0 = r²·m·g / (J_w + m·r²)`, and an
//! external disturbance `d̃` may be added to the same state.

use std::str::FromStr;

use crate::error::{Error, Result};

/// Integrator substep inside one control interval.
pub const DEFAULT_SUBSTEP: f64 = 1e-3;

/// Winch and hydraulic drive constants. Symbol names follow the usual
/// hydrostatic-transmission notation.
#[allow(non_snake_case)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WinchParams {
    /// Gravity, m/s².
    pub g: f64,
    /// Oil bulk modulus, N/m².
    pub K_oil: f64,
    /// Line volume, m³.
    pub V_c: f64,
    /// Maximum pump displacement, m³.
    pub D_p: f64,
    /// Motor displacement, m³.
    pub D_m: f64,
    /// Pump rotation rate, used as written (see [`WinchParams::omega_p_hz_to_rad`]).
    pub omega_p: f64,
    pub k1_p: f64,
    pub k1_m: f64,
    /// Swash angle time constant, s.
    pub T_w: f64,
    /// Gear ratio.
    pub k: f64,
    /// Drum radius, m.
    pub r: f64,
    pub eta_m: f64,
    /// Drum inertia, kg·m².
    pub J_w: f64,
    /// Viscous friction, kg·m²/s.
    pub b: f64,
    /// Payload mass, kg.
    pub m: f64,
    /// Multiply `omega_p` by 2π before use. Off by default: the pressure
    /// equation uses the tabulated 45 as is.
    pub omega_p_hz_to_rad: bool,
}

impl Default for WinchParams {
    fn default() -> Self {
        Self {
            g: 9.8,
            K_oil: 1.8e9,
            V_c: 2e-3,
            D_p: 40e-6,
            D_m: 4e-6,
            omega_p: 45.0,
            k1_p: 0.0,
            k1_m: 0.0,
            T_w: 1.0,
            k: 200.0,
            r: 0.5,
            eta_m: 0.65,
            J_w: 150.0,
            b: 1e4,
            m: 1000.0,
            omega_p_hz_to_rad: false,
        }
    }
}

impl WinchParams {
    pub const KEYS: [&'static str; 16] = [
        "g", "K_oil", "V_c", "D_p", "D_m", "omega_p", "k1_p", "k1_m", "T_w", "k", "r", "eta_m", "J_w", "b", "m",
        "omega_p_hz_to_rad",
    ];

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("g", self.g),
            ("K_oil", self.K_oil),
            ("V_c", self.V_c),
            ("D_p", self.D_p),
            ("D_m", self.D_m),
            ("omega_p", self.omega_p),
            ("T_w", self.T_w),
            ("k", self.k),
            ("r", self.r),
            ("eta_m", self.eta_m),
            ("J_w", self.J_w),
            ("b", self.b),
            ("m", self.m),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::domain(format!("winch parameter {name} must be > 0, got {v}")));
            }
        }
        for (name, v) in [("k1_p", self.k1_p), ("k1_m", self.k1_m)] {
            if !(v >= 0.0) {
                return Err(Error::domain(format!("winch parameter {name} must be >= 0, got {v}")));
            }
        }
        Ok(())
    }

    /// Sets one parameter by its symbol name.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if key == "omega_p_hz_to_rad" {
            self.omega_p_hz_to_rad = parse_bool(value)?;
            return Ok(());
        }
        let v: f64 = value
            .trim()
            .parse()
            .map_err(|_| Error::parse(format!("winch parameter {key}: cannot parse `{}`", value.trim())))?;
        let slot = match key {
            "g" => &mut self.g,
            "K_oil" => &mut self.K_oil,
            "V_c" => &mut self.V_c,
            "D_p" => &mut self.D_p,
            "D_m" => &mut self.D_m,
            "omega_p" => &mut self.omega_p,
            "k1_p" => &mut self.k1_p,
            "k1_m" => &mut self.k1_m,
            "T_w" => &mut self.T_w,
            "k" => &mut self.k,
            "r" => &mut self.r,
            "eta_m" => &mut self.eta_m,
            "J_w" => &mut self.J_w,
            "b" => &mut self.b,
            "m" => &mut self.m,
            other => return Err(Error::parse(format!("unknown winch parameter `{other}`"))),
        };
        *slot = v;
        Ok(())
    }

    /// Applies a `key=value` override file on top of `self`. Blank lines and
    /// `#` comments are ignored; unknown keys are errors.
    pub fn apply_overrides(&mut self, text: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(format!("line {}: expected key=value", i + 1)))?;
            self.set(k.trim(), v)?;
        }
        self.validate()
    }

    pub fn effective_omega_p(&self) -> f64 {
        if self.omega_p_hz_to_rad {
            2.0 * std::f64::consts::PI * self.omega_p
        } else {
            self.omega_p
        }
    }

    /// Effective drum inertia seen by the rope, `J_w + m·r²`.
    pub fn inertia(&self) -> f64 {
        self.J_w + self.m * self.r * self.r
    }
}

impl FromStr for WinchParams {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut p = WinchParams::default();
        p.apply_overrides(s)?;
        Ok(p)
    }
}

pub fn parse_bool(v: &str) -> Result<bool> {
    match v.trim() {
        "true" | "on" | "1" | "yes" => Ok(true),
        "false" | "off" | "0" | "no" => Ok(false),
        other => Err(Error::parse(format!("expected on/off, got `{other}`"))),
    }
}

/// Continuous-time model `ẋ = A·x + B·u + [0, 0, d0 + d̃, 0]ᵀ`, `y = C·x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantMatrices {
    pub a: [[f64; 4]; 4],
    pub b: [f64; 4],
    pub c: [f64; 4],
    /// Gravity bias on the rope acceleration, m/s².
    pub d0: f64,
}

pub fn system_matrices(p: &WinchParams) -> PlantMatrices {
    let inertia = p.inertia();
    let k_leak = p.k1_p + p.k1_m;
    let two_k_over_v = 2.0 * p.K_oil / p.V_c;
    let mut a = [[0.0; 4]; 4];
    a[0][0] = -1.0 / p.T_w;
    a[1][0] = -two_k_over_v * p.D_p * p.effective_omega_p();
    a[1][1] = -two_k_over_v * k_leak;
    a[1][2] = two_k_over_v * p.D_m * p.k / p.r;
    a[2][1] = -p.r * p.D_m * p.k * p.eta_m / inertia;
    a[2][2] = -p.b / inertia;
    a[3][2] = 1.0;
    PlantMatrices {
        a,
        b: [1.0 / p.T_w, 0.0, 0.0, 0.0],
        c: [0.0, 0.0, 0.0, 1.0],
        d0: p.r * p.r * p.m * p.g / inertia,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct WinchState {
    pub x_p: f64,
    pub delta_p: f64,
    pub zdot_w: f64,
    pub z_w: f64,
}

impl WinchState {
    pub fn to_array(self) -> [f64; 4] {
        [self.x_p, self.delta_p, self.zdot_w, self.z_w]
    }

    pub fn from_array(x: [f64; 4]) -> Self {
        Self {
            x_p: x[0],
            delta_p: x[1],
            zdot_w: x[2],
            z_w: x[3],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

/// Pressure that holds the payload still: `Δp = d0 / (r·D_m·k·η_m / (J_w + m·r²))`.
pub fn hanging_equilibrium(p: &WinchParams) -> WinchState {
    let m = system_matrices(p);
    WinchState {
        delta_p: m.d0 / -m.a[2][1],
        ..WinchState::default()
    }
}

/// Adds measurement noise to the rope length and velocity.
pub fn measure(state: &WinchState, noise_zw: f64, noise_zdot: f64) -> (f64, f64) {
    (state.z_w + noise_zw, state.zdot_w + noise_zdot)
}

/// A winch instance: parameters, precomputed matrices and current state.
#[derive(Debug, Clone)]
pub struct WinchPlant {
    params: WinchParams,
    matrices: PlantMatrices,
    state: WinchState,
    gravity_bias: bool,
    substep: f64,
}

impl WinchPlant {
    pub fn new(params: WinchParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            matrices: system_matrices(&params),
            params,
            state: WinchState::default(),
            gravity_bias: true,
            substep: DEFAULT_SUBSTEP,
        })
    }

    pub fn with_gravity_bias(mut self, on: bool) -> Self {
        self.gravity_bias = on;
        self
    }

    pub fn with_substep(mut self, h: f64) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::domain(format!("substep must be > 0, got {h}")));
        }
        self.substep = h;
        Ok(self)
    }

    pub fn params(&self) -> &WinchParams {
        &self.params
    }

    pub fn matrices(&self) -> &PlantMatrices {
        &self.matrices
    }

    pub fn gravity_bias(&self) -> bool {
        self.gravity_bias
    }

    pub fn state(&self) -> WinchState {
        self.state
    }

    /// Replaces the state; the swash angle is clamped to [-1, 1].
    pub fn set_state(&mut self, mut state: WinchState) {
        state.x_p = state.x_p.clamp(-1.0, 1.0);
        self.state = state;
    }

    /// Advances by `dt` with command `u_p` and disturbance `d_tilde` held
    /// constant. Uses classical RK4 on substeps no longer than the configured
    /// substep, clamping the swash angle after each one.
    pub fn step(&mut self, u_p: f64, d_tilde: f64, dt: f64) -> Result<WinchState> {
        if !(dt > 0.0) {
            return Err(Error::domain(format!("dt must be > 0, got {dt}")));
        }
        if !u_p.is_finite() || !d_tilde.is_finite() {
            return Err(Error::PlantFault(format!("non-finite input u_p={u_p}, d={d_tilde}")));
        }
        let n = (dt / self.substep).round().max(1.0) as usize;
        let h = dt / n as f64;
        let bias = if self.gravity_bias { self.matrices.d0 } else { 0.0 } + d_tilde;
        let mut x = self.state.to_array();
        for _ in 0..n {
            x = rk4(&self.matrices, x, u_p, bias, h);
            x[0] = x[0].clamp(-1.0, 1.0);
        }
        let next = WinchState::from_array(x);
        if !next.is_finite() {
            return Err(Error::PlantFault(format!("state became non-finite: {next:?}")));
        }
        self.state = next;
        Ok(next)
    }
}

#[inline]
pub(crate) fn derivative(m: &PlantMatrices, x: &[f64; 4], u: f64, bias: f64) -> [f64; 4] {
    let a = &m.a;
    [
        a[0][0] * x[0] + m.b[0] * u,
        a[1][0] * x[0] + a[1][1] * x[1] + a[1][2] * x[2],
        a[2][1] * x[1] + a[2][2] * x[2] + bias,
        a[3][2] * x[2],
    ]
}

#[inline]
fn rk4(m: &PlantMatrices, x: [f64; 4], u: f64, bias: f64, h: f64) -> [f64; 4] {
    let add = |x: &[f64; 4], k: &[f64; 4], s: f64| [x[0] + s * k[0], x[1] + s * k[1], x[2] + s * k[2], x[3] + s * k[3]];
    let k1 = derivative(m, &x, u, bias);
    let k2 = derivative(m, &add(&x, &k1, h / 2.0), u, bias);
    let k3 = derivative(m, &add(&x, &k2, h / 2.0), u, bias);
    let k4 = derivative(m, &add(&x, &k3, h), u, bias);
    let mut out = x;
    for i in 0..4 {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}
