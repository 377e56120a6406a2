//! Whole-device behaviour of a parallel lateral-diode array: screening,
//! current, sweeps, turn-on voltage and the breakdown design rule.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::environment::{ballistic_fraction, effective_work_function, EnvironmentState};
use crate::error::{Error, Result};
use crate::physics::{fn_coefficients, fn_current_density_simplified, local_field, Material};

/// Default breakdown field limits, V/m. Configuration defaults only.
pub const BREAKDOWN_LIMIT_VACUUM: f64 = 1e10;
pub const BREAKDOWN_LIMIT_AIR: f64 = 3e8;

/// Default turn-on detection threshold, A.
pub const DEFAULT_TURN_ON_THRESHOLD: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ScreeningModel {
    /// `s = 1 − exp(−c·pitch/gap)`. The law and the default `c = 2` are
    /// placeholders: no calibrated screening law exists for this layout.
    Exponential { c: f64 },
    /// `s = 1`.
    Disabled,
}

impl Default for ScreeningModel {
    fn default() -> Self {
        ScreeningModel::Exponential { c: 2.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviceGeometry {
    /// Anode-cathode gap, m.
    pub gap_d: f64,
    pub num_emitters_n: u32,
    /// Emitter pitch, m.
    pub pitch: f64,
    /// m².
    pub emitting_area_per_tip: f64,
    /// `F = β·V`, m⁻¹.
    pub field_conversion_beta: f64,
    /// V/m; fields exactly at the limit pass.
    pub breakdown_field_limit: f64,
    pub screening: ScreeningModel,
}

impl Default for DeviceGeometry {
    fn default() -> Self {
        DeviceGeometry {
            gap_d: 2e-6,
            num_emitters_n: 20,
            pitch: 10e-6,
            // 100 nm apex times an assumed 10 µm etch depth.
            emitting_area_per_tip: 100e-9 * 10e-6,
            field_conversion_beta: 5e7,
            breakdown_field_limit: BREAKDOWN_LIMIT_VACUUM,
            screening: ScreeningModel::default(),
        }
    }
}

impl DeviceGeometry {
    pub fn validate(&self) -> Result<()> {
        for (label, v) in [
            ("gap_d", self.gap_d),
            ("pitch", self.pitch),
            ("emitting_area_per_tip", self.emitting_area_per_tip),
            ("field_conversion_beta", self.field_conversion_beta),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("geometry {label} must be > 0, got {v}")));
            }
        }
        // An infinite limit disables the design rule.
        if !(self.breakdown_field_limit > 0.0) {
            return Err(Error::invalid(format!(
                "geometry breakdown_field_limit must be > 0, got {}",
                self.breakdown_field_limit
            )));
        }
        if self.num_emitters_n < 1 {
            return Err(Error::invalid("geometry num_emitters_N must be >= 1"));
        }
        if let ScreeningModel::Exponential { c } = self.screening {
            if !(c.is_finite() && c > 0.0) {
                return Err(Error::invalid(format!("screening constant must be > 0, got {c}")));
            }
        }
        Ok(())
    }
}

/// One I-V measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sample {
    /// V.
    pub voltage: f64,
    /// A.
    pub current: f64,
}

/// An I-V curve with strictly increasing voltages and finite, non-negative
/// currents.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct IVCurve {
    samples: Vec<Sample>,
    pub metadata: BTreeMap<String, String>,
}

impl IVCurve {
    pub fn new(samples: Vec<Sample>) -> Result<Self> {
        for (i, s) in samples.iter().enumerate() {
            if !s.voltage.is_finite() || !s.current.is_finite() {
                return Err(Error::invalid(format!("sample {i} is not finite")));
            }
            if s.current < 0.0 {
                return Err(Error::invalid(format!("sample {i} has negative current")));
            }
        }
        if samples.windows(2).any(|w| w[1].voltage <= w[0].voltage) {
            return Err(Error::invalid("voltages must be strictly increasing"));
        }
        Ok(IVCurve {
            samples,
            metadata: BTreeMap::new(),
        })
    }

    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        Self::new(
            pairs
                .iter()
                .map(|&(voltage, current)| Sample { voltage, current })
                .collect(),
        )
    }

    pub(crate) fn from_parts_unchecked(
        samples: Vec<Sample>,
        metadata: BTreeMap<String, String>,
    ) -> Self {
        IVCurve { samples, metadata }
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn voltages(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.voltage)
    }

    pub fn currents(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.current)
    }
}

/// Fraction of the isolated-emitter field retained in the array, in (0, 1].
pub fn screening_factor(geometry: &DeviceGeometry) -> f64 {
    if geometry.num_emitters_n <= 1 {
        return 1.0;
    }
    match geometry.screening {
        ScreeningModel::Disabled => 1.0,
        ScreeningModel::Exponential { c } => -(-c * geometry.pitch / geometry.gap_d).exp_m1(),
    }
}

/// Result of the breakdown design rule at one bias point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BreakdownReport {
    pub voltage: f64,
    /// V/m.
    pub field: f64,
    /// V/m.
    pub limit: f64,
    /// `field / limit`; at most 1 for a pass.
    pub margin_ratio: f64,
    pub passed: bool,
}

/// Flags a violation iff `β·V` exceeds the configured limit.
pub fn breakdown_check(geometry: &DeviceGeometry, voltage: f64) -> Result<BreakdownReport> {
    let field = local_field(geometry, voltage)?.field;
    let limit = geometry.breakdown_field_limit;
    Ok(BreakdownReport {
        voltage,
        field,
        limit,
        margin_ratio: field / limit,
        passed: field <= limit,
    })
}

/// Total array current in amperes:
/// `N · s · area · J(φ_eff, β·V) · ballistic_fraction`.
///
/// The ballistic factor is applied only when `env.attenuation` is set.
pub fn device_current(
    geometry: &DeviceGeometry,
    material: &Material,
    env: &EnvironmentState,
    voltage: f64,
) -> Result<f64> {
    geometry.validate()?;
    env.validate()?;
    let report = breakdown_check(geometry, voltage)?;
    if !report.passed {
        return Err(Error::Breakdown {
            field: report.field,
            limit: report.limit,
        });
    }
    let phi_eff = effective_work_function(material, env)?;
    let coeffs = fn_coefficients(&material.with_work_function(phi_eff))?;
    let j = fn_current_density_simplified(&coeffs, report.field)?;
    let survive = if env.attenuation {
        ballistic_fraction(env, geometry.gap_d)?
    } else {
        1.0
    };
    let per_tip = screening_factor(geometry) * geometry.emitting_area_per_tip * j * survive;
    Ok(f64::from(geometry.num_emitters_n) * per_tip)
}

/// Voltage-space aggregates `(C, B)` such that
/// `device_current(V) = C·V²·exp(−B/V)`.
pub fn aggregate_parameters(
    geometry: &DeviceGeometry,
    material: &Material,
    env: &EnvironmentState,
) -> Result<(f64, f64)> {
    geometry.validate()?;
    let phi_eff = effective_work_function(material, env)?;
    let coeffs = fn_coefficients(&material.with_work_function(phi_eff))?;
    let beta = geometry.field_conversion_beta;
    let survive = if env.attenuation {
        ballistic_fraction(env, geometry.gap_d)?
    } else {
        1.0
    };
    let c = f64::from(geometry.num_emitters_n)
        * screening_factor(geometry)
        * geometry.emitting_area_per_tip
        * survive
        * coeffs.a_fn
        * beta
        * beta;
    Ok((c, coeffs.b_fn / beta))
}

/// Fits `β` and the per-tip emitting area of `template` so the device
/// reproduces the aggregate law `I = C·V²·exp(−B/V)` for the given
/// material and environment. Other geometry fields are kept.
pub fn calibrate_to_aggregates(
    template: &DeviceGeometry,
    material: &Material,
    env: &EnvironmentState,
    prefactor_c: f64,
    slope_b: f64,
) -> Result<DeviceGeometry> {
    if !(prefactor_c.is_finite() && prefactor_c > 0.0) {
        return Err(Error::invalid(format!("prefactor C must be > 0, got {prefactor_c}")));
    }
    if !(slope_b.is_finite() && slope_b > 0.0) {
        return Err(Error::UnphysicalFit { slope: slope_b });
    }
    let phi_eff = effective_work_function(material, env)?;
    let coeffs = fn_coefficients(&material.with_work_function(phi_eff))?;
    let beta = coeffs.b_fn / slope_b;
    let survive = if env.attenuation {
        ballistic_fraction(env, template.gap_d)?
    } else {
        1.0
    };
    let mut geometry = DeviceGeometry {
        field_conversion_beta: beta,
        ..template.clone()
    };
    let per_area = f64::from(geometry.num_emitters_n)
        * screening_factor(&geometry)
        * survive
        * coeffs.a_fn
        * beta
        * beta;
    geometry.emitting_area_per_tip = prefactor_c / per_area;
    geometry.validate()?;
    Ok(geometry)
}

/// Evenly spaced sweep over `[v_min, v_max]`, both endpoints included.
/// Any breakdown violation aborts the whole sweep.
pub fn iv_sweep(
    geometry: &DeviceGeometry,
    material: &Material,
    env: &EnvironmentState,
    v_min: f64,
    v_max: f64,
    steps: usize,
) -> Result<IVCurve> {
    if !(v_min.is_finite() && v_max.is_finite() && 0.0 <= v_min && v_min < v_max) {
        return Err(Error::invalid(format!(
            "sweep range must satisfy 0 <= v_min < v_max, got [{v_min}, {v_max}]"
        )));
    }
    if steps < 2 {
        return Err(Error::invalid(format!("sweep needs at least 2 steps, got {steps}")));
    }
    let span = v_max - v_min;
    let last = (steps - 1) as f64;
    let samples = (0..steps)
        .map(|i| {
            let voltage = if i == steps - 1 {
                v_max
            } else {
                v_min + span * (i as f64) / last
            };
            device_current(geometry, material, env, voltage).map(|current| Sample { voltage, current })
        })
        .collect::<Result<Vec<_>>>()?;
    IVCurve::new(samples)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TurnOnOptions {
    /// A.
    pub threshold_current: f64,
    /// Upper end of the search, V. The breakdown voltage caps it further.
    pub v_max: f64,
    /// Absolute bisection tolerance, V.
    pub tolerance: f64,
}

impl Default for TurnOnOptions {
    fn default() -> Self {
        TurnOnOptions {
            threshold_current: DEFAULT_TURN_ON_THRESHOLD,
            v_max: 1000.0,
            tolerance: 0.01,
        }
    }
}

/// Smallest bias at which the model current reaches the threshold, to
/// within `options.tolerance` from above.
pub fn turn_on_voltage(
    geometry: &DeviceGeometry,
    material: &Material,
    env: &EnvironmentState,
    options: &TurnOnOptions,
) -> Result<f64> {
    let threshold = options.threshold_current;
    if !(threshold.is_finite() && threshold > 0.0) {
        return Err(Error::invalid(format!("threshold current must be > 0, got {threshold}")));
    }
    if !(options.v_max.is_finite() && options.v_max > 0.0) {
        return Err(Error::invalid(format!("turn-on v_max must be > 0, got {}", options.v_max)));
    }
    if !(options.tolerance > 0.0) {
        return Err(Error::invalid("turn-on tolerance must be > 0"));
    }
    geometry.validate()?;
    let beta = geometry.field_conversion_beta;
    let mut upper = options.v_max.min(geometry.breakdown_field_limit / beta);
    while beta * upper > geometry.breakdown_field_limit {
        upper *= 1.0 - f64::EPSILON;
    }
    let current = |v: f64| device_current(geometry, material, env, v);
    let at_upper = current(upper)?;
    if at_upper < threshold {
        return Err(Error::NeverTurnsOn {
            threshold,
            v_upper: upper,
            current_at_upper: at_upper,
        });
    }
    let (mut lo, mut hi) = (0.0, upper);
    while hi - lo > options.tolerance {
        let mid = 0.5 * (lo + hi);
        if current(mid)? >= threshold {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}
