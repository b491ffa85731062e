//! Irregular sea synthesis.
//!
//! A one-sided spectrum is discretized on the grid `n·Δω` (`Δω = 2π/T` for a
//! record of length `T`, `n ≥ 1`), each component gets amplitude
//! `sqrt(2·S(ωₙ)·Δω)`, a uniform random phase on `[-π, π)` and a frequency
//! jittered by `Δω·X`, `X ~ U(-0.5, 0.5)`, so the record does not repeat.
//! Flat band-limited spectra (disturbances, sensor noise) reuse the same
//! machinery.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngSeed;
use crate::series::TimeSeries;

/// Pierson–Moskowitz cutoff in multiples of the peak frequency. The energy
/// above it is `1.24 / 10⁴` of the total.
const PM_CUTOFF_PEAK_MULTIPLE: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SpectrumSpec {
    PiersonMoskowitz { hs: f64, tp: f64 },
    /// Density `s0` on `[omega_lo, omega_hi]`, zero elsewhere.
    ConstantBand { s0: f64, omega_lo: f64, omega_hi: f64 },
}

impl SpectrumSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            SpectrumSpec::PiersonMoskowitz { hs, tp } => {
                if !(hs >= 0.0) || !(tp > 0.0) {
                    return Err(Error::domain(format!(
                        "Pierson-Moskowitz needs Hs >= 0 and Tp > 0, got Hs={hs}, Tp={tp}"
                    )));
                }
            }
            SpectrumSpec::ConstantBand { s0, omega_lo, omega_hi } => {
                if !(s0 >= 0.0) || !(omega_lo >= 0.0) || !(omega_lo < omega_hi) {
                    return Err(Error::domain(format!(
                        "constant band needs S0 >= 0 and 0 <= lo < hi, got S0={s0}, [{omega_lo}, {omega_hi}]"
                    )));
                }
            }
        }
        Ok(())
    }

    /// One-sided spectral density at `omega > 0`.
    pub fn density(&self, omega: f64) -> Result<f64> {
        match *self {
            SpectrumSpec::PiersonMoskowitz { hs, tp } => pm_spectral_density(omega, hs, tp),
            SpectrumSpec::ConstantBand { s0, omega_lo, omega_hi } => {
                if !(omega > 0.0) {
                    return Err(Error::domain(format!("frequency must be > 0, got {omega}")));
                }
                Ok(if (omega_lo..=omega_hi).contains(&omega) { s0 } else { 0.0 })
            }
        }
    }
}

/// Pierson–Moskowitz wave elevation spectrum in m²·s/rad.
pub fn pm_spectral_density(omega: f64, hs: f64, tp: f64) -> Result<f64> {
    if !(omega > 0.0) || !(tp > 0.0) || !(hs >= 0.0) {
        return Err(Error::domain(format!(
            "pm spectrum needs omega > 0, Tp > 0, Hs >= 0; got omega={omega}, Hs={hs}, Tp={tp}"
        )));
    }
    let x = omega * tp / (2.0 * PI);
    let x4 = x * x * x * x;
    Ok(0.31 / (2.0 * PI) * tp * hs * hs / (x4 * x) * (-1.25 / x4).exp())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Harmonic {
    pub amplitude: f64,
    pub omega: f64,
    pub phase: f64,
}

/// Components of a random-phase realization. Component `i` sits near the
/// nominal frequency `(first_index + i)·delta_omega`.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicSet {
    pub components: Vec<Harmonic>,
    pub delta_omega: f64,
    pub first_index: usize,
}

impl HarmonicSet {
    pub fn empty(delta_omega: f64) -> Self {
        Self {
            components: Vec::new(),
            delta_omega,
            first_index: 1,
        }
    }

    pub fn nominal_omega(&self, i: usize) -> f64 {
        (self.first_index + i) as f64 * self.delta_omega
    }

    /// Variance of the realization, `Σ Aₙ²/2`.
    pub fn variance(&self) -> f64 {
        self.components.iter().map(|c| 0.5 * c.amplitude * c.amplitude).sum()
    }
}

/// Discretizes `spec` on the grid `ωₙ = n·Δω`, `n = 1..=n_components`.
pub fn discretize_spectrum(
    spec: &SpectrumSpec,
    duration: f64,
    n_components: usize,
    seed: RngSeed,
) -> Result<HarmonicSet> {
    discretize_grid(spec, duration, 1, n_components, seed)
}

/// Discretizes `spec` on the grid `n·Δω` for `n` in
/// `first_index..first_index + count`. The random stream draws the
/// frequency jitter, then the phase, per component in grid order.
pub fn discretize_grid(
    spec: &SpectrumSpec,
    duration: f64,
    first_index: usize,
    count: usize,
    seed: RngSeed,
) -> Result<HarmonicSet> {
    spec.validate()?;
    if !(duration > 0.0) {
        return Err(Error::domain(format!("duration must be > 0, got {duration}")));
    }
    if count == 0 || first_index == 0 {
        return Err(Error::domain("need at least one component on a grid starting at n >= 1"));
    }
    let dw = 2.0 * PI / duration;
    let mut rng = seed.rng();
    let mut components = Vec::with_capacity(count);
    for n in first_index..first_index + count {
        let nominal = n as f64 * dw;
        let amplitude = (2.0 * spec.density(nominal)? * dw).sqrt();
        let jitter: f64 = rng.random_range(-0.5..0.5);
        let phase: f64 = rng.random_range(-PI..PI);
        components.push(Harmonic {
            amplitude,
            omega: nominal + dw * jitter,
            phase,
        });
    }
    Ok(HarmonicSet {
        components,
        delta_omega: dw,
        first_index,
    })
}

/// Sums the harmonics at `t = k·dt`, `k = 0..n_samples`.
///
/// Each component is advanced by complex rotation and re-anchored to the
/// exact phase every block, which keeps the error near round-off while
/// avoiding a cosine per sample and component.
pub fn synthesize(harmonics: &HarmonicSet, n_samples: usize, dt: f64) -> Result<TimeSeries> {
    if !(dt > 0.0) || n_samples == 0 {
        return Err(Error::domain("synthesis needs dt > 0 and at least one sample"));
    }
    const LANES: usize = 8;
    const BLOCK: usize = 256;

    let n = harmonics.components.len();
    let padded = n.div_ceil(LANES) * LANES;
    let mut zr = vec![0.0; padded];
    let mut zi = vec![0.0; padded];
    let mut wr = vec![1.0; padded];
    let mut wi = vec![0.0; padded];
    for (c, h) in harmonics.components.iter().enumerate() {
        let (s, co) = (h.omega * dt).sin_cos();
        wr[c] = co;
        wi[c] = s;
    }

    let mut out = vec![0.0; n_samples];
    for block_start in (0..n_samples).step_by(BLOCK) {
        for (c, h) in harmonics.components.iter().enumerate() {
            let (s, co) = (h.omega * block_start as f64 * dt + h.phase).sin_cos();
            zr[c] = h.amplitude * co;
            zi[c] = h.amplitude * s;
        }
        let block_end = (block_start + BLOCK).min(n_samples);
        for value in &mut out[block_start..block_end] {
            let mut acc = [0.0; LANES];
            for (((zr, zi), wr), wi) in zr
                .chunks_exact_mut(LANES)
                .zip(zi.chunks_exact_mut(LANES))
                .zip(wr.chunks_exact(LANES))
                .zip(wi.chunks_exact(LANES))
            {
                for j in 0..LANES {
                    acc[j] += zr[j];
                    let r = zr[j] * wr[j] - zi[j] * wi[j];
                    zi[j] = zr[j] * wi[j] + zi[j] * wr[j];
                    zr[j] = r;
                }
            }
            *value = acc.iter().sum();
        }
    }
    TimeSeries::new(0.0, dt, out)
}

/// Number of samples covering `[0, duration]` inclusive at spacing `dt`.
pub fn sample_count(duration: f64, dt: f64) -> usize {
    (duration / dt).round() as usize + 1
}

/// Grid size used for a Pierson–Moskowitz record: up to ten times the
/// peak frequency, capped at the Nyquist frequency of `dt`.
pub fn pm_component_count(tp: f64, duration: f64, dt: f64) -> usize {
    let dw = 2.0 * PI / duration;
    let cutoff = (PM_CUTOFF_PEAK_MULTIPLE * 2.0 * PI / tp).min(PI / dt);
    ((cutoff / dw).floor() as usize).max(1)
}

/// Wave elevation record for a Pierson–Moskowitz sea, sampled on
/// `[0, duration]`.
pub fn pm_wave_elevation(hs: f64, tp: f64, duration: f64, dt: f64, seed: RngSeed) -> Result<TimeSeries> {
    let spec = SpectrumSpec::PiersonMoskowitz { hs, tp };
    let harmonics = discretize_spectrum(&spec, duration, pm_component_count(tp, duration, dt), seed)?;
    synthesize(&harmonics, sample_count(duration, dt), dt)
}

/// Grid restricted to a flat band: `n` from `max(1, ceil(lo/Δω))`,
/// `ceil((hi - lo)/Δω)` components.
pub fn band_harmonics(s0: f64, omega_lo: f64, omega_hi: f64, duration: f64, seed: RngSeed) -> Result<HarmonicSet> {
    let spec = SpectrumSpec::ConstantBand { s0, omega_lo, omega_hi };
    spec.validate()?;
    if !(duration > 0.0) {
        return Err(Error::domain(format!("duration must be > 0, got {duration}")));
    }
    let dw = 2.0 * PI / duration;
    let first = ((omega_lo / dw).ceil() as usize).max(1);
    let count = (((omega_hi - omega_lo) / dw).ceil() as usize).max(1);
    // The last grid point may land just past the upper edge; keep it in band.
    let last_in_band = (omega_hi / dw).floor() as usize;
    let count = count.min(last_in_band.saturating_sub(first) + 1).max(1);
    discretize_grid(&spec, duration, first, count, seed)
}

/// Realization of a flat spectrum of density `s0` on `[omega_lo, omega_hi]`,
/// sampled on `[0, duration]`. Its variance is `s0·(omega_hi - omega_lo)`.
pub fn band_limited_series(
    s0: f64,
    omega_lo: f64,
    omega_hi: f64,
    duration: f64,
    dt: f64,
    seed: RngSeed,
) -> Result<TimeSeries> {
    if !(dt > 0.0) {
        return Err(Error::domain(format!("dt must be > 0, got {dt}")));
    }
    if omega_hi > PI / dt {
        return Err(Error::domain(format!(
            "band edge {omega_hi} rad/s exceeds the Nyquist frequency {} rad/s",
            PI / dt
        )));
    }
    let harmonics = band_harmonics(s0, omega_lo, omega_hi, duration, seed)?;
    synthesize(&harmonics, sample_count(duration, dt), dt)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pm_density_reference_value() {
        // (0.31/2π)·9·16·e^(-5/4)
        let s = pm_spectral_density(2.0 * PI / 9.0, 4.0, 9.0).unwrap();
        let expected = 0.31 / (2.0 * PI) * 9.0 * 16.0 * (-1.25f64).exp();
        assert!((s - expected).abs() < 1e-12);
        assert!((s - 2.0355).abs() < 5e-5);
    }

    #[test]
    fn pm_density_scales_with_hs_squared() {
        assert_eq!(pm_spectral_density(1.0, 0.0, 9.0).unwrap(), 0.0);
        let a = pm_spectral_density(0.8, 2.0, 9.0).unwrap();
        let b = pm_spectral_density(0.8, 4.0, 9.0).unwrap();
        assert!((b / a - 4.0).abs() < 1e-12);
    }

    #[test]
    fn pm_density_domain_errors() {
        assert!(matches!(pm_spectral_density(0.0, 4.0, 9.0), Err(Error::Domain(_))));
        assert!(matches!(pm_spectral_density(-1.0, 4.0, 9.0), Err(Error::Domain(_))));
        assert!(matches!(pm_spectral_density(1.0, 4.0, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn discretization_amplitude_near_peak() {
        let spec = SpectrumSpec::PiersonMoskowitz { hs: 4.0, tp: 9.0 };
        let h = discretize_spectrum(&spec, 10_000.0, 2000, RngSeed(3)).unwrap();
        assert!((h.delta_omega - 6.2832e-4).abs() < 1e-8);
        let i = (0..h.components.len())
            .min_by(|&a, &b| {
                (h.nominal_omega(a) - 0.698)
                    .abs()
                    .total_cmp(&(h.nominal_omega(b) - 0.698).abs())
            })
            .unwrap();
        assert!((h.components[i].amplitude - 0.05058).abs() < 5e-5);
    }

    #[test]
    fn zero_density_gives_zero_amplitude() {
        let spec = SpectrumSpec::ConstantBand { s0: 2.0, omega_lo: 1.0, omega_hi: 2.0 };
        let h = discretize_spectrum(&spec, 100.0, 50, RngSeed(1)).unwrap();
        for (i, c) in h.components.iter().enumerate() {
            let w = h.nominal_omega(i);
            if !(1.0..=2.0).contains(&w) {
                assert_eq!(c.amplitude, 0.0);
            } else {
                assert!(c.amplitude > 0.0);
            }
        }
    }

    #[test]
    fn discretization_is_seed_deterministic_and_bounded() {
        let spec = SpectrumSpec::PiersonMoskowitz { hs: 2.0, tp: 7.0 };
        let a = discretize_spectrum(&spec, 500.0, 300, RngSeed(11)).unwrap();
        let b = discretize_spectrum(&spec, 500.0, 300, RngSeed(11)).unwrap();
        assert_eq!(a, b);
        for (i, c) in a.components.iter().enumerate() {
            assert!((c.omega - a.nominal_omega(i)).abs() <= a.delta_omega / 2.0);
            assert!((-PI..=PI).contains(&c.phase));
            assert!(c.amplitude >= 0.0);
        }
    }

    #[test]
    fn synthesize_trivial_cases() {
        let empty = synthesize(&HarmonicSet::empty(0.1), 10, 0.1).unwrap();
        assert!(empty.values().iter().all(|&v| v == 0.0));

        let one = HarmonicSet {
            components: vec![Harmonic { amplitude: 1.0, omega: 1.0, phase: 0.0 }],
            delta_omega: 1.0,
            first_index: 1,
        };
        let s = synthesize(&one, 600, PI).unwrap();
        for (k, v) in s.values().iter().enumerate() {
            let expected = if k % 2 == 0 { 1.0 } else { -1.0 };
            assert!((v - expected).abs() < 1e-12, "k={k} v={v}");
        }
    }

    #[test]
    fn synthesize_matches_direct_sum() {
        let spec = SpectrumSpec::PiersonMoskowitz { hs: 3.0, tp: 8.0 };
        let h = discretize_spectrum(&spec, 200.0, 77, RngSeed(5)).unwrap();
        let dt = 0.1;
        let s = synthesize(&h, 2001, dt).unwrap();
        for k in (0..2001).step_by(37) {
            let t = k as f64 * dt;
            let direct: f64 = h
                .components
                .iter()
                .map(|c| c.amplitude * (c.omega * t + c.phase).cos())
                .sum();
            assert!((s.values()[k] - direct).abs() < 1e-11, "k={k}");
        }
    }

    #[test]
    fn band_limited_zero_density_is_zero() {
        let s = band_limited_series(0.0, 0.0, 0.5, 100.0, 0.1, RngSeed(2)).unwrap();
        assert!(s.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn band_limited_rejects_band_past_nyquist() {
        let r = band_limited_series(1.0, 1.0, 40.0, 100.0, 0.1, RngSeed(2));
        assert!(matches!(r, Err(Error::Domain(_))));
    }

    #[test]
    fn band_limited_rms() {
        let s = band_limited_series(10.0, 0.0, 0.5, 10_000.0, 0.1, RngSeed(21)).unwrap();
        let rms = (s.values().iter().map(|v| v * v).sum::<f64>() / s.len() as f64).sqrt();
        assert!((rms / 5f64.sqrt() - 1.0).abs() < 0.05, "rms={rms}");

        let s = band_limited_series(1e-6, 3.14, 30.0, 10_000.0, 0.1, RngSeed(22)).unwrap();
        let rms = (s.values().iter().map(|v| v * v).sum::<f64>() / s.len() as f64).sqrt();
        assert!((rms / 5.183e-3 - 1.0).abs() < 0.05, "rms={rms}");
    }
}
