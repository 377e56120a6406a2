//! Emission current densities: Richardson-Dushman thermionic emission and
//! zero-temperature Fowler-Nordheim field emission, in full and simplified
//! form.
//!
//! All functions are pure. Limit values are returned instead of errors at
//! the origin (`T = 0`, `F = 0`) so sweeps can start there, and exponentials
//! that underflow clamp to zero.
//!
//! ## Prefactor convention
//!
//! The full expression implemented here is
//!
//! ```text
//! J(F) = q/(4π²ħ) · √μ / ((μ+φ)√φ) · (qF)² · exp(−4√(2m φ³) / (3ħ·qF))
//! ```
//!
//! with energies in joules and the field entering through the force `qF`
//! on the electron, which is what makes the expression dimensionally an
//! A/m² current density. At `μ = φ` it reduces to `a_fn F² exp(−b_fn/F)`
//! with `a_fn = K1/φ`, `K1 = q²/(8π²ħ)` in A·eV·V⁻². This prefactor is twice
//! the frequently quoted `q³/(8πhφ)` (1.54e-6 A·eV·V⁻²); the two conventions
//! differ only by a constant that any fit absorbs into the aggregate
//! prefactor.

use serde::Serialize;

use crate::constants::{PhysicalConstants, CODATA_2018};
use crate::device::DeviceGeometry;
use crate::error::{Error, Result};

/// Emitter material parameters. Energies in eV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Material {
    pub name: String,
    pub work_function_phi: f64,
    pub fermi_level_mu: f64,
    /// A·m⁻²·K⁻².
    pub richardson_constant_a: f64,
}

/// Default Richardson constant, A·m⁻²·K⁻².
pub const DEFAULT_RICHARDSON: f64 = 1.2e6;

impl Material {
    pub fn new(
        name: impl Into<String>,
        work_function_phi: f64,
        fermi_level_mu: f64,
        richardson_constant_a: f64,
    ) -> Result<Self> {
        let m = Material {
            name: name.into(),
            work_function_phi,
            fermi_level_mu,
            richardson_constant_a,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        for (label, v) in [
            ("work_function_phi", self.work_function_phi),
            ("fermi_level_mu", self.fermi_level_mu),
            ("richardson_constant_a", self.richardson_constant_a),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("material {label} must be > 0, got {v}")));
            }
        }
        Ok(())
    }

    pub fn aluminum() -> Self {
        Material {
            name: "aluminum".into(),
            work_function_phi: 4.28,
            fermi_level_mu: 11.7,
            richardson_constant_a: DEFAULT_RICHARDSON,
        }
    }

    /// Fermi level set equal to the work function (metal approximation).
    pub fn tungsten() -> Self {
        Material {
            name: "tungsten".into(),
            work_function_phi: 4.5,
            fermi_level_mu: 4.5,
            richardson_constant_a: DEFAULT_RICHARDSON,
        }
    }

    /// Looks up a built-in material by name.
    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "aluminum" | "aluminium" => Some(Self::aluminum()),
            "tungsten" => Some(Self::tungsten()),
            _ => None,
        }
    }

    /// Same material with a different work function.
    pub fn with_work_function(&self, phi: f64) -> Self {
        Material {
            work_function_phi: phi,
            ..self.clone()
        }
    }
}

impl Default for Material {
    fn default() -> Self {
        Self::aluminum()
    }
}

/// Simplified Fowler-Nordheim coefficients for one work function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FNCoefficients {
    /// A·V⁻²: `J = a_fn · F² · exp(−b_fn/F)` with `F` in V/m.
    pub a_fn: f64,
    /// V/m.
    pub b_fn: f64,
    /// A·eV·V⁻².
    pub k1: f64,
    /// eV^{-3/2}·V·m⁻¹.
    pub k2: f64,
}

impl FNCoefficients {
    /// Builds coefficients directly, e.g. for synthetic tests.
    pub fn from_raw(a_fn: f64, b_fn: f64) -> Self {
        FNCoefficients {
            a_fn,
            b_fn,
            k1: f64::NAN,
            k2: f64::NAN,
        }
    }
}

fn check_nonneg(label: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("{label} must be finite and >= 0, got {v}")))
    }
}

/// Richardson-Dushman current density `A·T²·exp(−φ/kT)` in A/m².
pub fn thermionic_current_density(material: &Material, temperature: f64) -> Result<f64> {
    check_nonneg("temperature", temperature)?;
    material.validate()?;
    if temperature == 0.0 {
        return Ok(0.0);
    }
    let kt = CODATA_2018.boltzmann_ev() * temperature;
    let j = material.richardson_constant_a
        * temperature
        * temperature
        * (-material.work_function_phi / kt).exp();
    Ok(j)
}

/// Full zero-temperature Fowler-Nordheim current density (A/m²) for a
/// local field in V/m. See the module docs for the prefactor convention.
pub fn fn_current_density_full(material: &Material, field: f64) -> Result<f64> {
    check_nonneg("field", field)?;
    material.validate()?;
    if field == 0.0 {
        return Ok(0.0);
    }
    let c = CODATA_2018;
    let phi = c.ev_to_joule(material.work_function_phi);
    let mu = c.ev_to_joule(material.fermi_level_mu);
    let force = c.electron_charge_q * field;
    let prefactor = c.electron_charge_q / (4.0 * std::f64::consts::PI.powi(2) * c.reduced_planck_hbar)
        * mu.sqrt()
        / ((mu + phi) * phi.sqrt());
    let exponent =
        -4.0 / (3.0 * c.reduced_planck_hbar * force) * (2.0 * c.electron_mass_m * phi.powi(3)).sqrt();
    Ok(prefactor * force * force * exponent.exp())
}

/// Simplified-law coefficients for a material, from CODATA constants.
pub fn fn_coefficients(material: &Material) -> Result<FNCoefficients> {
    material.validate()?;
    Ok(coefficients_for_phi(&CODATA_2018, material.work_function_phi))
}

pub(crate) fn coefficients_for_phi(c: &PhysicalConstants, phi: f64) -> FNCoefficients {
    let k1 = c.fn_k1();
    let k2 = c.fn_k2();
    FNCoefficients {
        a_fn: k1 / phi,
        b_fn: k2 * phi.powf(1.5),
        k1,
        k2,
    }
}

/// `a_fn · F² · exp(−b_fn/F)` in A/m².
pub fn fn_current_density_simplified(coeffs: &FNCoefficients, field: f64) -> Result<f64> {
    check_nonneg("field", field)?;
    if field == 0.0 {
        return Ok(0.0);
    }
    Ok(coeffs.a_fn * field * field * (-coeffs.b_fn / field).exp())
}

/// Local emitter field and the dimensionless enhancement it implies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LocalField {
    /// V/m.
    pub field: f64,
    /// `γ = β·d`.
    pub enhancement: f64,
}

/// `F = β·V` for the geometry's field-conversion factor.
pub fn local_field(geometry: &DeviceGeometry, voltage: f64) -> Result<LocalField> {
    check_nonneg("voltage", voltage)?;
    Ok(LocalField {
        field: geometry.field_conversion_beta * voltage,
        enhancement: geometry.field_conversion_beta * geometry.gap_d,
    })
}
