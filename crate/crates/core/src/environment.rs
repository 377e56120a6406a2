//! Environmental effects on emission: surface conditioning (a static
//! work-function shift), one-sided current spikes from a contaminated
//! surface, and gas scattering across the gap.
//!
//! Gas scattering uses kinetic-theory mean free path `λ = kT/(pσ)` and an
//! exponential survival probability `exp(−d/λ)`. That picture only holds
//! while `λ` is at least comparable to the gap, so attenuation is a mode
//! switch on [`EnvironmentState`] and is off by default. Pressure inversion
//! always runs with it enabled.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::constants::CODATA_2018;
use crate::device::{device_current, DeviceGeometry, IVCurve, Sample};
use crate::error::{Error, Result};
use crate::physics::Material;

/// Pressure above which residual-gas ion bombardment of the emitter is
/// flagged (1e-4 mbar).
pub const ION_BOMBARDMENT_WARNING_PA: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvironmentState {
    /// K.
    pub temperature_t: f64,
    /// Pa.
    pub pressure_p: f64,
    /// m².
    pub gas_cross_section_sigma: f64,
    /// eV, 0 for a clean surface.
    pub surface_delta_phi: f64,
    /// Expected spikes per sample.
    pub noise_spike_rate: f64,
    /// Spike height as a multiple of the base current.
    pub noise_spike_amplitude: f64,
    pub rng_seed: u64,
    /// Apply ballistic attenuation in [`device_current`].
    pub attenuation: bool,
}

impl Default for EnvironmentState {
    fn default() -> Self {
        EnvironmentState {
            temperature_t: 300.0,
            pressure_p: 0.0,
            gas_cross_section_sigma: 1e-19,
            surface_delta_phi: 0.0,
            noise_spike_rate: 0.0,
            noise_spike_amplitude: 0.0,
            rng_seed: 0,
            attenuation: false,
        }
    }
}

impl EnvironmentState {
    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("temperature_T", self.temperature_t, self.temperature_t > 0.0),
            ("pressure_p", self.pressure_p, self.pressure_p >= 0.0),
            (
                "gas_cross_section_sigma",
                self.gas_cross_section_sigma,
                self.gas_cross_section_sigma > 0.0,
            ),
            ("noise_spike_rate", self.noise_spike_rate, self.noise_spike_rate >= 0.0),
            (
                "noise_spike_amplitude",
                self.noise_spike_amplitude,
                self.noise_spike_amplitude >= 0.0,
            ),
            ("surface_delta_phi", self.surface_delta_phi, true),
        ];
        for (label, v, ok) in checks {
            if !v.is_finite() || !ok {
                return Err(Error::invalid(format!("environment {label} out of range: {v}")));
            }
        }
        Ok(())
    }

    pub fn with_pressure(&self, pressure_p: f64) -> Self {
        EnvironmentState {
            pressure_p,
            ..self.clone()
        }
    }

    /// Human-readable warnings about operating conditions.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.pressure_p > ION_BOMBARDMENT_WARNING_PA {
            out.push(format!(
                "pressure {:.3e} Pa is above {:.0e} Pa: residual-gas ions may bombard the emitter",
                self.pressure_p, ION_BOMBARDMENT_WARNING_PA
            ));
        }
        out
    }
}

/// `φ + Δφ`, in eV.
pub fn effective_work_function(material: &Material, env: &EnvironmentState) -> Result<f64> {
    let phi = material.work_function_phi + env.surface_delta_phi;
    if !(phi.is_finite() && phi > 0.0) {
        return Err(Error::invalid(format!(
            "effective work function {} + {} = {phi} eV is not positive",
            material.work_function_phi, env.surface_delta_phi
        )));
    }
    Ok(phi)
}

/// Kinetic-theory mean free path `kT/(pσ)` in metres; `f64::INFINITY` at
/// zero pressure.
pub fn mean_free_path(env: &EnvironmentState) -> f64 {
    if env.pressure_p == 0.0 {
        return f64::INFINITY;
    }
    CODATA_2018.boltzmann_k * env.temperature_t / (env.pressure_p * env.gas_cross_section_sigma)
}

/// Probability that an electron crosses `gap` metres without a collision.
pub fn ballistic_fraction(env: &EnvironmentState, gap: f64) -> Result<f64> {
    if !(gap.is_finite() && gap > 0.0) {
        return Err(Error::invalid(format!("gap must be > 0, got {gap}")));
    }
    let lambda = mean_free_path(env);
    if lambda.is_infinite() {
        return Ok(1.0);
    }
    Ok((-gap / lambda).exp())
}

/// Relative closeness at which a measured current counts as the vacuum
/// current.
const VACUUM_MATCH_ULPS: f64 = 8.0 * f64::EPSILON;

/// Infers the gas pressure that attenuates the vacuum current at `voltage`
/// down to `measured_current`, by bisection on log-pressure.
///
/// Attenuation is forced on for the inversion regardless of the template's
/// mode flag. The result is within 1e-3 relative of the forward model's
/// preimage, comfortably inside the 1% contract.
pub fn pressure_from_current(
    geometry: &DeviceGeometry,
    material: &Material,
    env_template: &EnvironmentState,
    measured_current: f64,
    voltage: f64,
) -> Result<f64> {
    if !(measured_current.is_finite() && measured_current > 0.0) {
        return Err(Error::invalid(format!(
            "measured current must be > 0, got {measured_current}"
        )));
    }
    let env = EnvironmentState {
        attenuation: true,
        ..env_template.clone()
    };
    let current_at = |p: f64| device_current(geometry, material, &env.with_pressure(p), voltage);

    let vacuum = current_at(0.0)?;
    if vacuum <= 0.0 {
        return Err(Error::invalid(format!(
            "vacuum current at {voltage} V is zero; pressure is not observable"
        )));
    }
    if measured_current > vacuum * (1.0 + VACUUM_MATCH_ULPS) {
        return Err(Error::InconsistentMeasurement {
            measured: measured_current,
            vacuum,
        });
    }
    if measured_current >= vacuum * (1.0 - VACUUM_MATCH_ULPS) {
        return Ok(0.0);
    }

    // Bracket in log10(p): current is strictly decreasing in p.
    let (mut lo, mut hi) = (-15.0f64, 10.0f64);
    while current_at(10f64.powf(lo))? < measured_current {
        lo -= 10.0;
        if lo < -300.0 {
            return Err(Error::invalid("pressure below representable range".to_string()));
        }
    }
    while current_at(10f64.powf(hi))? > measured_current {
        hi += 10.0;
        if hi > 300.0 {
            return Err(Error::invalid("pressure above representable range".to_string()));
        }
    }
    // 1e-3 relative in p is ~4.3e-4 in log10.
    while hi - lo > 4e-4 {
        let mid = 0.5 * (lo + hi);
        if current_at(10f64.powf(mid))? > measured_current {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(10f64.powf(0.5 * (lo + hi)))
}

/// Adds one-sided multiplicative current spikes to a curve.
///
/// Each sample independently receives a spike with probability
/// `min(noise_spike_rate, 1)`; a spike multiplies its current by
/// `1 + noise_spike_amplitude`. The stream is a ChaCha8 generator seeded
/// from `rng_seed`, so the output is identical across runs and platforms.
pub fn emission_noise(env: &EnvironmentState, base: &IVCurve) -> IVCurve {
    if env.noise_spike_rate == 0.0 {
        return base.clone();
    }
    let p = env.noise_spike_rate.min(1.0);
    let gain = 1.0 + env.noise_spike_amplitude;
    let mut rng = ChaCha8Rng::seed_from_u64(env.rng_seed);
    let samples = base
        .samples()
        .iter()
        .map(|s| {
            let spike = rng.gen::<f64>() < p;
            Sample {
                voltage: s.voltage,
                current: if spike { s.current * gain } else { s.current },
            }
        })
        .collect();
    IVCurve::from_parts_unchecked(samples, base.metadata.clone())
}
