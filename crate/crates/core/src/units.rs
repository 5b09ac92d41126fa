//! Hartree atomic units and conversion to SI.

use serde::{Deserialize, Serialize};

/// Default fine-structure constant.
pub const ALPHA: f64 = 1.0 / 137.036;
/// Speed of light in atomic units for the default α.
pub const C_LIGHT: f64 = 137.036;

const ELECTRON_MASS_KG: f64 = 9.109_383_701_5e-31;
const HBAR_JS: f64 = 1.054_571_817e-34;
const C_SI: f64 = 299_792_458.0;
const ELEMENTARY_CHARGE_C: f64 = 1.602_176_634e-19;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum UnitSystem {
    #[default]
    Hartree,
    Si,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    Energy,
    Length,
    Time,
    Frequency,
    Velocity,
    Charge,
}

/// Fine-structure parameter plus the unit system used at I/O boundaries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalScale {
    pub alpha_s: f64,
    pub system: UnitSystem,
}

impl Default for PhysicalScale {
    fn default() -> Self {
        Self { alpha_s: ALPHA, system: UnitSystem::Hartree }
    }
}

impl PhysicalScale {
    pub fn new(alpha_s: f64, system: UnitSystem) -> crate::Result<Self> {
        if !(alpha_s > 0.0 && alpha_s.is_finite()) {
            return Err(crate::Error::Domain(format!("alpha_s must be positive, got {alpha_s}")));
        }
        Ok(Self { alpha_s, system })
    }

    pub fn c(&self) -> f64 {
        1.0 / self.alpha_s
    }

    /// Size of one atomic unit of `q` expressed in SI.
    pub fn si_factor(&self, q: Quantity) -> f64 {
        let a = self.alpha_s;
        let energy = a * a * ELECTRON_MASS_KG * C_SI * C_SI;
        let length = HBAR_JS / (ELECTRON_MASS_KG * C_SI * a);
        let time = HBAR_JS / energy;
        match q {
            Quantity::Energy => energy,
            Quantity::Length => length,
            Quantity::Time => time,
            Quantity::Frequency => 1.0 / time,
            Quantity::Velocity => length / time,
            Quantity::Charge => ELEMENTARY_CHARGE_C,
        }
    }

    pub fn to_si(&self, q: Quantity, value: f64) -> f64 {
        value * self.si_factor(q)
    }

    pub fn from_si(&self, q: Quantity, value: f64) -> f64 {
        value / self.si_factor(q)
    }

    /// Convert an internal value into the configured output system.
    pub fn output(&self, q: Quantity, value: f64) -> f64 {
        match self.system {
            UnitSystem::Hartree => value,
            UnitSystem::Si => self.to_si(q, value),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hartree_energy_in_joules() {
        let s = PhysicalScale::default();
        let e = s.si_factor(Quantity::Energy);
        assert!((e / 4.359_744_722e-18 - 1.0).abs() < 1e-4);
        let l = s.si_factor(Quantity::Length);
        assert!((l / 5.291_772_109e-11 - 1.0).abs() < 1e-4);
        // atomic velocity unit is alpha * c
        assert!((s.si_factor(Quantity::Velocity) / (ALPHA * C_SI) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_alpha() {
        assert!(PhysicalScale::new(0.0, UnitSystem::Si).is_err());
        assert!(PhysicalScale::new(-1.0, UnitSystem::Si).is_err());
    }

    proptest::proptest! {
        #[test]
        fn round_trip(v in -1e6f64..1e6, alpha in 1e-3f64..0.5) {
            let s = PhysicalScale::new(alpha, UnitSystem::Si).unwrap();
            for q in [Quantity::Energy, Quantity::Length, Quantity::Time, Quantity::Frequency, Quantity::Velocity] {
                let back = s.from_si(q, s.to_si(q, v));
                proptest::prop_assert!((back - v).abs() <= 1e-14 * v.abs().max(1e-300));
            }
        }
    }
}
