//! Run configuration in a flat `section.key = value` format.
//!
//! ```text
//! # before-cleaning device
//! material.name = aluminum
//! geometry.gap_d = 2e-6
//! geometry.breakdown_mode = air
//! fit.residual_space = log
//! ```
//!
//! Keys are case-insensitive. Omitted keys take defaults. Setting
//! `material.name` to a built-in preset loads that preset before the other
//! `material.*` keys apply, and `geometry.breakdown_mode` picks the default
//! breakdown limit unless `geometry.breakdown_field_limit` is also given.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::device::{
    DeviceGeometry, ScreeningModel, TurnOnOptions, BREAKDOWN_LIMIT_AIR, BREAKDOWN_LIMIT_VACUUM,
};
use crate::environment::EnvironmentState;
use crate::error::{Error, Result};
use crate::extraction::{RefineOptions, ResidualSpace};
use crate::physics::Material;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BreakdownMode {
    #[default]
    Vacuum,
    Air,
}

impl BreakdownMode {
    pub fn default_limit(self) -> f64 {
        match self {
            BreakdownMode::Vacuum => BREAKDOWN_LIMIT_VACUUM,
            BreakdownMode::Air => BREAKDOWN_LIMIT_AIR,
        }
    }
}

/// Which physical parameter a fit converts its slope into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Derive {
    /// Pin the material work function, report β.
    #[default]
    Beta,
    /// Pin the geometry's β, report φ.
    Phi,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepOptions {
    pub v_min: f64,
    pub v_max: f64,
    pub steps: usize,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            v_min: 0.0,
            v_max: 100.0,
            steps: 101,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct FitOptions {
    pub refine: RefineOptions,
    pub derive: Derive,
    pub turn_on: TurnOnOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct OutputOptions {
    pub path: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct RunConfig {
    pub material: Material,
    pub geometry: DeviceGeometry,
    pub breakdown_mode: BreakdownMode,
    pub environment: EnvironmentState,
    pub fit: FitOptions,
    pub sweep: SweepOptions,
    pub output: OutputOptions,
}

struct Entry {
    value: String,
    line: usize,
    key_col: usize,
    value_col: usize,
}

impl Entry {
    fn err(&self, message: impl Into<String>) -> Error {
        Error::Config {
            line: self.line,
            column: self.value_col,
            message: message.into(),
        }
    }

    fn f64(&self, key: &str) -> Result<f64> {
        let v: f64 = self
            .value
            .parse()
            .map_err(|_| self.err(format!("{key}: expected a number, got `{}`", self.value)))?;
        if v.is_nan() {
            return Err(self.err(format!("{key}: NaN is not allowed")));
        }
        Ok(v)
    }

    fn finite(&self, key: &str) -> Result<f64> {
        let v = self.f64(key)?;
        if !v.is_finite() {
            return Err(self.err(format!("{key}: must be finite, got {v}")));
        }
        Ok(v)
    }

    fn positive(&self, key: &str) -> Result<f64> {
        let v = self.finite(key)?;
        if v <= 0.0 {
            return Err(self.err(format!("{key}: must be > 0, got {v}")));
        }
        Ok(v)
    }

    fn non_negative(&self, key: &str) -> Result<f64> {
        let v = self.finite(key)?;
        if v < 0.0 {
            return Err(self.err(format!("{key}: must be >= 0, got {v}")));
        }
        Ok(v)
    }

    fn integer<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        self.value
            .parse()
            .map_err(|_| self.err(format!("{key}: expected a non-negative integer, got `{}`", self.value)))
    }

    fn choice<'a>(&self, key: &str, options: &[&'a str]) -> Result<&'a str> {
        let lower = self.value.to_ascii_lowercase();
        options
            .iter()
            .find(|o| **o == lower)
            .copied()
            .ok_or_else(|| self.err(format!("{key}: expected one of {options:?}, got `{}`", self.value)))
    }

    fn boolean(&self, key: &str) -> Result<bool> {
        match self.choice(key, &["true", "false", "on", "off", "yes", "no"])? {
            "true" | "on" | "yes" => Ok(true),
            _ => Ok(false),
        }
    }
}

fn tokenize(text: &str) -> Result<BTreeMap<String, Entry>> {
    let mut entries: BTreeMap<String, Entry> = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("");
        if content.trim().is_empty() {
            continue;
        }
        let Some(eq) = content.find('=') else {
            return Err(Error::Config {
                line,
                column: content.len() - content.trim_start().len() + 1,
                message: "expected `section.key = value`".into(),
            });
        };
        let key_part = &content[..eq];
        let value_part = &content[eq + 1..];
        let key = key_part.trim().to_ascii_lowercase();
        let key_col = key_part.len() - key_part.trim_start().len() + 1;
        let value = value_part.trim().to_string();
        let value_col = eq + 2 + (value_part.len() - value_part.trim_start().len());
        if key.is_empty() || !key.contains('.') {
            return Err(Error::Config {
                line,
                column: key_col,
                message: format!("key `{}` must have the form section.key", key_part.trim()),
            });
        }
        if value.is_empty() {
            return Err(Error::Config {
                line,
                column: value_col,
                message: format!("{key}: missing value"),
            });
        }
        if let Some(prev) = entries.get(&key) {
            return Err(Error::Config {
                line,
                column: key_col,
                message: format!("{key}: duplicate key (first set on line {})", prev.line),
            });
        }
        entries.insert(
            key,
            Entry {
                value,
                line,
                key_col,
                value_col,
            },
        );
    }
    Ok(entries)
}

/// Parses configuration text into a fully resolved, validated config.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut entries = tokenize(text)?;
    let mut cfg = RunConfig::default();

    // Keys that seed defaults for others go first.
    if let Some(e) = entries.remove("material.name") {
        cfg.material = Material::preset(&e.value.to_ascii_lowercase()).unwrap_or_else(|| Material {
            name: e.value.clone(),
            ..Material::default()
        });
    }
    if let Some(e) = entries.remove("geometry.breakdown_mode") {
        cfg.breakdown_mode = match e.choice("geometry.breakdown_mode", &["vacuum", "air"])? {
            "air" => BreakdownMode::Air,
            _ => BreakdownMode::Vacuum,
        };
        cfg.geometry.breakdown_field_limit = cfg.breakdown_mode.default_limit();
    }
    let screening_c = entries.remove("geometry.screening_c");
    if let Some(e) = entries.remove("geometry.screening") {
        cfg.geometry.screening = match e.choice("geometry.screening", &["exponential", "disabled", "none"])? {
            "exponential" => ScreeningModel::default(),
            _ => ScreeningModel::Disabled,
        };
    }
    if let Some(e) = screening_c {
        let c = e.positive("geometry.screening_c")?;
        match &mut cfg.geometry.screening {
            ScreeningModel::Exponential { c: slot } => *slot = c,
            ScreeningModel::Disabled => {
                return Err(e.err("geometry.screening_c: screening is disabled"));
            }
        }
    }

    for (key, e) in &entries {
        apply(&mut cfg, key, e)?;
    }
    if cfg.sweep.v_min >= cfg.sweep.v_max {
        let e = entries
            .get("sweep.v_max")
            .or_else(|| entries.get("sweep.v_min"));
        let (line, column) = e.map_or((0, 0), |e| (e.line, e.value_col));
        return Err(Error::Config {
            line,
            column,
            message: format!(
                "sweep.v_min ({}) must be below sweep.v_max ({})",
                cfg.sweep.v_min, cfg.sweep.v_max
            ),
        });
    }
    for check in [
        cfg.material.validate(),
        cfg.geometry.validate(),
        cfg.environment.validate(),
    ] {
        check.map_err(|err| Error::Config {
            line: 0,
            column: 0,
            message: err.to_string(),
        })?;
    }
    Ok(cfg)
}

fn apply(cfg: &mut RunConfig, key: &str, e: &Entry) -> Result<()> {
    let k = key;
    match key {
        "material.work_function_phi" => cfg.material.work_function_phi = e.positive(k)?,
        "material.fermi_level_mu" => cfg.material.fermi_level_mu = e.positive(k)?,
        "material.richardson_constant_a" => cfg.material.richardson_constant_a = e.positive(k)?,

        "geometry.gap_d" => cfg.geometry.gap_d = e.positive(k)?,
        "geometry.num_emitters_n" => {
            let n: u32 = e.integer(k)?;
            if n < 1 {
                return Err(e.err(format!("{k}: must be >= 1")));
            }
            cfg.geometry.num_emitters_n = n;
        }
        "geometry.pitch" => cfg.geometry.pitch = e.positive(k)?,
        "geometry.emitting_area_per_tip" => cfg.geometry.emitting_area_per_tip = e.positive(k)?,
        "geometry.field_conversion_beta" => cfg.geometry.field_conversion_beta = e.positive(k)?,
        "geometry.breakdown_field_limit" => {
            let v = e.f64(k)?;
            if v <= 0.0 {
                return Err(e.err(format!("{k}: must be > 0, got {v}")));
            }
            cfg.geometry.breakdown_field_limit = v;
        }

        "environment.temperature_t" => cfg.environment.temperature_t = e.positive(k)?,
        "environment.pressure_p" => cfg.environment.pressure_p = e.non_negative(k)?,
        "environment.gas_cross_section_sigma" => {
            cfg.environment.gas_cross_section_sigma = e.positive(k)?
        }
        "environment.surface_delta_phi" => cfg.environment.surface_delta_phi = e.finite(k)?,
        "environment.noise_spike_rate" => cfg.environment.noise_spike_rate = e.non_negative(k)?,
        "environment.noise_spike_amplitude" => {
            cfg.environment.noise_spike_amplitude = e.non_negative(k)?
        }
        "environment.rng_seed" => cfg.environment.rng_seed = e.integer(k)?,
        "environment.attenuation" => cfg.environment.attenuation = e.boolean(k)?,

        "fit.current_floor" => cfg.fit.refine.current_floor = e.non_negative(k)?,
        "fit.residual_space" => {
            cfg.fit.refine.residual_space = match e.choice(k, &["log", "linear"])? {
                "linear" => ResidualSpace::Linear,
                _ => ResidualSpace::Log,
            }
        }
        "fit.max_iterations" => {
            let n: usize = e.integer(k)?;
            if n < 1 {
                return Err(e.err(format!("{k}: must be >= 1")));
            }
            cfg.fit.refine.max_iterations = n;
        }
        "fit.tolerance" => cfg.fit.refine.tolerance = e.positive(k)?,
        "fit.derive" => {
            cfg.fit.derive = match e.choice(k, &["beta", "phi", "none"])? {
                "phi" => Derive::Phi,
                "none" => Derive::None,
                _ => Derive::Beta,
            }
        }

        "turnon.threshold_current" => cfg.fit.turn_on.threshold_current = e.positive(k)?,
        "turnon.v_max" => cfg.fit.turn_on.v_max = e.positive(k)?,
        "turnon.tolerance" => cfg.fit.turn_on.tolerance = e.positive(k)?,

        "sweep.v_min" => cfg.sweep.v_min = e.non_negative(k)?,
        "sweep.v_max" => cfg.sweep.v_max = e.positive(k)?,
        "sweep.steps" => {
            let n: usize = e.integer(k)?;
            if n < 2 {
                return Err(e.err(format!("{k}: must be >= 2")));
            }
            cfg.sweep.steps = n;
        }

        "output.path" => cfg.output.path = Some(e.value.clone()),

        _ => {
            return Err(Error::Config {
                line: e.line,
                column: e.key_col,
                message: format!("unknown key `{key}`"),
            })
        }
    }
    Ok(())
}

/// Renders a config back into the text grammar; `parse_config` of the
/// result reproduces `cfg`.
pub fn to_config_text(cfg: &RunConfig) -> String {
    let mut s = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(s, "{k} = {v}");
    };
    let m = &cfg.material;
    kv("material.name", m.name.clone());
    kv("material.work_function_phi", m.work_function_phi.to_string());
    kv("material.fermi_level_mu", m.fermi_level_mu.to_string());
    kv("material.richardson_constant_a", m.richardson_constant_a.to_string());

    let g = &cfg.geometry;
    kv("geometry.gap_d", g.gap_d.to_string());
    kv("geometry.num_emitters_n", g.num_emitters_n.to_string());
    kv("geometry.pitch", g.pitch.to_string());
    kv("geometry.emitting_area_per_tip", g.emitting_area_per_tip.to_string());
    kv("geometry.field_conversion_beta", g.field_conversion_beta.to_string());
    kv(
        "geometry.breakdown_mode",
        match cfg.breakdown_mode {
            BreakdownMode::Vacuum => "vacuum",
            BreakdownMode::Air => "air",
        }
        .into(),
    );
    kv("geometry.breakdown_field_limit", g.breakdown_field_limit.to_string());
    match g.screening {
        ScreeningModel::Exponential { c } => {
            kv("geometry.screening", "exponential".into());
            kv("geometry.screening_c", c.to_string());
        }
        ScreeningModel::Disabled => kv("geometry.screening", "disabled".into()),
    }

    let env = &cfg.environment;
    kv("environment.temperature_t", env.temperature_t.to_string());
    kv("environment.pressure_p", env.pressure_p.to_string());
    kv("environment.gas_cross_section_sigma", env.gas_cross_section_sigma.to_string());
    kv("environment.surface_delta_phi", env.surface_delta_phi.to_string());
    kv("environment.noise_spike_rate", env.noise_spike_rate.to_string());
    kv("environment.noise_spike_amplitude", env.noise_spike_amplitude.to_string());
    kv("environment.rng_seed", env.rng_seed.to_string());
    kv("environment.attenuation", env.attenuation.to_string());

    let r = &cfg.fit.refine;
    kv("fit.current_floor", r.current_floor.to_string());
    kv(
        "fit.residual_space",
        match r.residual_space {
            ResidualSpace::Log => "log",
            ResidualSpace::Linear => "linear",
        }
        .into(),
    );
    kv("fit.max_iterations", r.max_iterations.to_string());
    kv("fit.tolerance", r.tolerance.to_string());
    kv(
        "fit.derive",
        match cfg.fit.derive {
            Derive::Beta => "beta",
            Derive::Phi => "phi",
            Derive::None => "none",
        }
        .into(),
    );
    let t = &cfg.fit.turn_on;
    kv("turnon.threshold_current", t.threshold_current.to_string());
    kv("turnon.v_max", t.v_max.to_string());
    kv("turnon.tolerance", t.tolerance.to_string());

    kv("sweep.v_min", cfg.sweep.v_min.to_string());
    kv("sweep.v_max", cfg.sweep.v_max.to_string());
    kv("sweep.steps", cfg.sweep.steps.to_string());
    if let Some(p) = &cfg.output.path {
        kv("output.path", p.clone());
    }
    s
}
