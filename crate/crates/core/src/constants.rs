//! Physical constants (CODATA 2018) and the unit conversions built on them.
//!
//! Energies cross the public API in electron-volts. Every conversion to
//! joules goes through [`PhysicalConstants::ev_to_joule`] so there is one
//! place where the two systems meet.

use std::f64::consts::PI;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhysicalConstants {
    /// Boltzmann constant, J/K.
    pub boltzmann_k: f64,
    /// Reduced Planck constant, J·s.
    pub reduced_planck_hbar: f64,
    /// Elementary charge, C.
    pub electron_charge_q: f64,
    /// Electron rest mass, kg.
    pub electron_mass_m: f64,
}

/// CODATA 2018 values. `q` and `k` are exact by SI definition.
pub const CODATA_2018: PhysicalConstants = PhysicalConstants {
    boltzmann_k: 1.380_649e-23,
    reduced_planck_hbar: 1.054_571_817e-34,
    electron_charge_q: 1.602_176_634e-19,
    electron_mass_m: 9.109_383_701_5e-31,
};

impl Default for PhysicalConstants {
    fn default() -> Self {
        CODATA_2018
    }
}

impl PhysicalConstants {
    /// Boltzmann constant in eV/K.
    pub fn boltzmann_ev(&self) -> f64 {
        self.boltzmann_k / self.electron_charge_q
    }

    pub fn ev_to_joule(&self, energy_ev: f64) -> f64 {
        energy_ev * self.electron_charge_q
    }

    pub fn joule_to_ev(&self, energy_j: f64) -> f64 {
        energy_j / self.electron_charge_q
    }

    /// Prefactor constant `K1` such that `a_fn = K1 / phi` with `phi` in eV.
    ///
    /// Unit: A·eV·V⁻². Taken from the zero-temperature tunnelling prefactor
    /// `q/(4π²ħ)·√μ/((μ+φ)√φ)` evaluated at `μ = φ` (where the energy factor
    /// collapses to `1/(2φ)`), with the field entering as the force `qF` on
    /// the electron and `φ` expressed in eV.
    pub fn fn_k1(&self) -> f64 {
        let q = self.electron_charge_q;
        q * q / (8.0 * PI * PI * self.reduced_planck_hbar)
    }

    /// Exponent constant `K2` such that `b_fn = K2 · phi^{3/2}` with `phi`
    /// in eV. Unit: eV^{-3/2}·V·m⁻¹.
    pub fn fn_k2(&self) -> f64 {
        let q = self.electron_charge_q;
        4.0 * (2.0 * self.electron_mass_m).sqrt() * q.sqrt() / (3.0 * self.reduced_planck_hbar)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_positive() {
        let c = CODATA_2018;
        for v in [
            c.boltzmann_k,
            c.reduced_planck_hbar,
            c.electron_charge_q,
            c.electron_mass_m,
            c.boltzmann_ev(),
        ] {
            assert!(v > 0.0 && v.is_finite());
        }
    }

    #[test]
    fn boltzmann_representations_agree() {
        let c = CODATA_2018;
        let back = c.ev_to_joule(c.boltzmann_ev());
        assert!(((back - c.boltzmann_k) / c.boltzmann_k).abs() < 1e-12);
        assert!((c.boltzmann_ev() - 8.617_333_262e-5).abs() / 8.617_333_262e-5 < 1e-9);
    }

    #[test]
    fn fn_constants_match_high_precision_values() {
        // 40-digit evaluation from the same CODATA inputs.
        let c = CODATA_2018;
        assert!((c.fn_k1() / 3.082_867_747_732_018e-6 - 1.0).abs() < 1e-12);
        assert!((c.fn_k2() / 6.830_889_630_418_658e9 - 1.0).abs() < 1e-12);
    }
}
