//! CODATA 2018 physical constants (exact SI values where defined).

use serde::{Deserialize, Serialize};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const HBAR: f64 = 1.054_571_817e-34;
pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_812_8e-12;
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;

/// Constants as a value object so a run configuration can override them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalConstants {
    #[serde(default = "default_c")]
    pub c_m_per_s: f64,
    #[serde(default = "default_hbar")]
    pub hbar_j_s: f64,
    #[serde(default = "default_eps0")]
    pub eps0_f_per_m: f64,
    #[serde(default = "default_e")]
    pub e_charge_c: f64,
}

fn default_c() -> f64 {
    SPEED_OF_LIGHT
}
fn default_hbar() -> f64 {
    HBAR
}
fn default_eps0() -> f64 {
    VACUUM_PERMITTIVITY
}
fn default_e() -> f64 {
    ELEMENTARY_CHARGE
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::CODATA
    }
}

impl PhysicalConstants {
    pub const CODATA: PhysicalConstants = PhysicalConstants {
        c_m_per_s: SPEED_OF_LIGHT,
        hbar_j_s: HBAR,
        eps0_f_per_m: VACUUM_PERMITTIVITY,
        e_charge_c: ELEMENTARY_CHARGE,
    };

    /// Angular frequency (rad/s) of light with vacuum wavelength `wavelength_nm`.
    pub fn angular_frequency(&self, wavelength_nm: f64) -> f64 {
        2.0 * std::f64::consts::PI * self.c_m_per_s / (wavelength_nm * 1e-9)
    }

    pub fn validate(&self) -> crate::Result<()> {
        let all = [self.c_m_per_s, self.hbar_j_s, self.eps0_f_per_m, self.e_charge_c];
        if all.iter().all(|v| v.is_finite() && *v > 0.0) {
            Ok(())
        } else {
            Err(crate::Error::Config("physical constants must be positive".into()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codata_values_to_six_digits() {
        let k = PhysicalConstants::default();
        assert_eq!(k.c_m_per_s, 299_792_458.0);
        assert!((k.hbar_j_s / 1.054_57e-34 - 1.0).abs() < 1e-5);
        assert!((k.eps0_f_per_m / 8.854_19e-12 - 1.0).abs() < 1e-5);
        assert!((k.e_charge_c / 1.602_18e-19 - 1.0).abs() < 1e-5);
    }

    #[test]
    fn omega_at_zpl() {
        let w = PhysicalConstants::CODATA.angular_frequency(637.0);
        assert!((w / 2.957_1e15 - 1.0).abs() < 1e-4);
    }
}
