//! Emitter/cavity figure-of-merit algebra. Rates are in s⁻¹ (g and κ as
//! angular rates), linewidths in Hz unless the name says otherwise.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::constants::PhysicalConstants;
use crate::stack::{emitter_rates, EmitterSpec};
use crate::{Error, Result};

/// Transition dipole (C·m) from a radiative rate in a medium of index
/// `n_host`, inverting γ = nω³d²/(3πε₀ħc³).
pub fn dipole_from_lifetime(gamma_per_s: f64, wavelength_nm: f64, n_host: f64, k: &PhysicalConstants) -> f64 {
    let omega = k.angular_frequency(wavelength_nm);
    (3.0 * PI * k.eps0_f_per_m * k.hbar_j_s * k.c_m_per_s.powi(3) * gamma_per_s / (n_host * omega.powi(3))).sqrt()
}

/// g = ξ·d·E_vac/ħ with E_vac in V/m.
pub fn coupling_rate(dipole_c_m: f64, e_vac_v_per_m: f64, xi: f64, k: &PhysicalConstants) -> f64 {
    xi * dipole_c_m * e_vac_v_per_m / k.hbar_j_s
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Linewidths {
    pub gamma_lambda_pm: f64,
    pub gamma_f_hz: f64,
    pub q: f64,
    pub finesse: f64,
    pub kappa_per_s: f64,
}

/// Converts a length-scan linewidth Γ_L into wavelength, frequency, Q,
/// finesse and κ.
pub fn linewidth_conversions(
    gamma_l_pm: f64,
    dlambda_dl: f64,
    wavelength_nm: f64,
    k: &PhysicalConstants,
) -> Result<Linewidths> {
    if !(gamma_l_pm > 0.0 && dlambda_dl > 0.0 && wavelength_nm > 0.0) {
        return Err(Error::InvalidInput("linewidth, slope and wavelength must be positive".into()));
    }
    let gamma_lambda_pm = gamma_l_pm * dlambda_dl;
    let lambda_pm = wavelength_nm * 1e3;
    let q = lambda_pm / gamma_lambda_pm;
    let gamma_f_hz = k.c_m_per_s * gamma_lambda_pm * 1e-12 / (wavelength_nm * 1e-9).powi(2);
    Ok(Linewidths {
        gamma_lambda_pm,
        gamma_f_hz,
        q,
        finesse: lambda_pm / (2.0 * gamma_l_pm),
        kappa_per_s: 2.0 * PI * gamma_f_hz,
    })
}

/// κ = ω/Q.
pub fn kappa_from_q(q: f64, wavelength_nm: f64, k: &PhysicalConstants) -> f64 {
    k.angular_frequency(wavelength_nm) / q
}

pub fn q_from_kappa(kappa_per_s: f64, wavelength_nm: f64, k: &PhysicalConstants) -> f64 {
    k.angular_frequency(wavelength_nm) / kappa_per_s
}

/// F_P^ZPL = 4g²/(κγ_R⁰).
pub fn purcell_zpl_theory(g: f64, kappa: f64, gamma_r0: f64) -> f64 {
    4.0 * g * g / (kappa * gamma_r0)
}

/// The Purcell formula assumes g < κ.
pub fn is_weak_coupling(g: f64, kappa: f64) -> bool {
    g < kappa
}

/// Measured decay rates for the same emitter on and off cavity resonance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatesMeasurement {
    pub gamma_on_per_s: f64,
    pub gamma_off_per_s: f64,
    pub gamma_bulk_per_s: f64,
    pub debye_waller: f64,
}

impl RatesMeasurement {
    /// ZPL6 decay rates with a chosen Debye-Waller fraction.
    pub fn zpl6(debye_waller: f64) -> Self {
        RatesMeasurement {
            gamma_on_per_s: 158e6,
            gamma_off_per_s: 88.2e6,
            gamma_bulk_per_s: 79.4e6,
            debye_waller,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma_off_per_s > 0.0 && self.gamma_bulk_per_s > 0.0) {
            return Err(Error::InvalidInput("decay rates must be positive".into()));
        }
        if self.gamma_on_per_s <= self.gamma_off_per_s {
            return Err(Error::InvalidInput("on-resonance rate must exceed off-resonance rate".into()));
        }
        if !(self.debye_waller > 0.0 && self.debye_waller < 1.0) {
            return Err(Error::InvalidInput(format!(
                "Debye-Waller fraction {} outside (0, 1)",
                self.debye_waller
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatesAnalysis {
    pub f_p_total: f64,
    pub f_p_zpl: f64,
    pub eta_zpl: f64,
    pub gamma_zpl_per_s: f64,
}

pub fn rates_algebra(m: &RatesMeasurement) -> Result<RatesAnalysis> {
    m.validate()?;
    let gamma_zpl = m.debye_waller * m.gamma_bulk_per_s;
    let f = (m.gamma_on_per_s - m.gamma_off_per_s + gamma_zpl) / gamma_zpl;
    Ok(RatesAnalysis {
        f_p_total: m.gamma_on_per_s / m.gamma_bulk_per_s,
        f_p_zpl: f,
        eta_zpl: f * gamma_zpl / m.gamma_on_per_s,
        gamma_zpl_per_s: gamma_zpl,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DebyeWallerEstimate {
    pub debye_waller: f64,
    pub gamma_zpl_per_s: f64,
    /// On and off rates coincide, so the data carry no ZPL information.
    pub degenerate: bool,
}

/// γ₀ = (γ_on − γ_off)/(F − 1), DW = γ₀/γ_bulk.
pub fn debye_waller_inversion(gamma_on: f64, gamma_off: f64, gamma_bulk: f64, f_theory: f64) -> Result<DebyeWallerEstimate> {
    if !(f_theory > 1.0) {
        return Err(Error::Domain(format!("theoretical Purcell factor {f_theory} must exceed 1")));
    }
    if !(gamma_bulk > 0.0) {
        return Err(Error::InvalidInput("bulk rate must be positive".into()));
    }
    if gamma_on < gamma_off {
        return Err(Error::Degenerate("on-resonance rate below off-resonance rate".into()));
    }
    let gamma_zpl = (gamma_on - gamma_off) / (f_theory - 1.0);
    Ok(DebyeWallerEstimate {
        debye_waller: gamma_zpl / gamma_bulk,
        gamma_zpl_per_s: gamma_zpl,
        degenerate: gamma_on == gamma_off,
    })
}

/// Transform-limited linewidth (Hz) of the Purcell-enhanced emitter.
pub fn transform_limit(f_p_zpl: f64, gamma_zpl: f64, gamma_sideband: f64) -> f64 {
    (gamma_sideband + f_p_zpl * gamma_zpl) / (2.0 * PI)
}

/// ZPL fraction of the emission with the ZPL channel enhanced by F.
pub fn eta_zpl(f_p_zpl: f64, gamma_zpl: f64, gamma_sideband: f64) -> f64 {
    f_p_zpl * gamma_zpl / (gamma_sideband + f_p_zpl * gamma_zpl)
}

/// Where a number in a report came from.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Config,
    Default,
    Computed,
    Measured,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CouplingReport {
    pub wavelength_nm: f64,
    pub dipole_c_m: f64,
    pub dipole_over_e_nm: f64,
    pub e_vac_kv_per_m: f64,
    pub e_vac_source: Provenance,
    pub g_per_s: f64,
    pub kappa_per_s: f64,
    pub kappa_source: Provenance,
    pub q: f64,
    pub finesse: Option<f64>,
    pub gamma_f_hz: f64,
    pub gamma_r0_per_s: f64,
    pub gamma_zpl_per_s: f64,
    pub gamma_sideband_per_s: f64,
    pub debye_waller: f64,
    pub f_p_zpl_theory: f64,
    pub eta_zpl_theory: f64,
    pub transform_limit_hz: f64,
    pub weak_coupling: bool,
    pub measured: Option<RatesAnalysis>,
    pub measured_inputs: Option<RatesMeasurement>,
    pub debye_waller_inferred: Option<DebyeWallerEstimate>,
}

/// Full coupling chain for one emitter at vacuum field `e_vac_kv_per_m` in a
/// cavity with loss rate `kappa_per_s`.
#[allow(clippy::too_many_arguments)]
pub fn coupling_report(
    emitter: &EmitterSpec,
    wavelength_nm: f64,
    e_vac_kv_per_m: f64,
    e_vac_source: Provenance,
    kappa_per_s: f64,
    kappa_source: Provenance,
    finesse: Option<f64>,
    measurement: Option<&RatesMeasurement>,
    k: &PhysicalConstants,
) -> Result<CouplingReport> {
    let rates = emitter_rates(emitter)?;
    if !(kappa_per_s > 0.0 && e_vac_kv_per_m >= 0.0) {
        return Err(Error::InvalidInput("κ must be positive and E_vac non-negative".into()));
    }
    let d = dipole_from_lifetime(rates.total, emitter.zpl_wavelength_nm, emitter.host_index, k);
    let g = coupling_rate(d, e_vac_kv_per_m * 1e3, emitter.dipole_orientation, k);
    let f = purcell_zpl_theory(g, kappa_per_s, rates.total);
    let measured = measurement.map(rates_algebra).transpose()?;
    let inferred = match measurement {
        Some(m) if f > 1.0 => Some(debye_waller_inversion(
            m.gamma_on_per_s,
            m.gamma_off_per_s,
            m.gamma_bulk_per_s,
            f,
        )?),
        _ => None,
    };
    Ok(CouplingReport {
        wavelength_nm,
        dipole_c_m: d,
        dipole_over_e_nm: d / k.e_charge_c * 1e9,
        e_vac_kv_per_m,
        e_vac_source,
        g_per_s: g,
        kappa_per_s,
        kappa_source,
        q: q_from_kappa(kappa_per_s, wavelength_nm, k),
        finesse,
        gamma_f_hz: kappa_per_s / (2.0 * PI),
        gamma_r0_per_s: rates.total,
        gamma_zpl_per_s: rates.zpl,
        gamma_sideband_per_s: rates.sideband,
        debye_waller: emitter.debye_waller,
        f_p_zpl_theory: f,
        eta_zpl_theory: eta_zpl(f, rates.zpl, rates.sideband),
        transform_limit_hz: transform_limit(f, rates.zpl, rates.sideband),
        weak_coupling: is_weak_coupling(g, kappa_per_s),
        measured,
        measured_inputs: measurement.copied(),
        debye_waller_inferred: inferred,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const K: PhysicalConstants = PhysicalConstants::CODATA;

    #[test]
    fn conversions_oracle() {
        let l = linewidth_conversions(60.6, 0.18, 637.0, &K).unwrap();
        assert!((l.gamma_lambda_pm - 10.908).abs() < 1e-9);
        assert!((l.q / 58_397.506 - 1.0).abs() < 1e-7);
        assert!((l.finesse / 5_255.775_6 - 1.0).abs() < 1e-7);
        assert!((l.gamma_f_hz / 8.059_107_8e9 - 1.0).abs() < 1e-7);
        assert!((l.kappa_per_s / 5.063_686_8e10 - 1.0).abs() < 1e-7);
        let via_q = kappa_from_q(l.q, 637.0, &K);
        assert!((via_q / l.kappa_per_s - 1.0).abs() < 1e-10);
    }

    #[test]
    fn air_cavity_identity() {
        // slope 1: Q = 2·finesse·(Γ_L-independent) λ/λ … Q = λ/Γ_L = 2F
        let l = linewidth_conversions(50.0, 1.0, 637.0, &K).unwrap();
        assert!((l.q - 2.0 * l.finesse).abs() < 1e-9);
    }

    #[test]
    fn dipole_scalings() {
        let d = dipole_from_lifetime(79.4e6, 637.0, 2.41, &K);
        assert!((d / K.e_charge_c * 1e9 / 0.108 - 1.0).abs() < 0.01);
        let d4 = dipole_from_lifetime(4.0 * 79.4e6, 637.0, 2.41, &K);
        assert!((d4 / d - 2.0).abs() < 1e-12);
        let d1 = dipole_from_lifetime(79.4e6, 637.0, 1.0, &K);
        assert!((d1 / d - 2.41_f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn purcell_oracle() {
        let g = coupling_rate(0.108_463_39e-9 * K.e_charge_c, 36.2e3, 1.0, &K);
        assert!((g / 5.965_213_2e9 - 1.0).abs() < 1e-6);
        let f = purcell_zpl_theory(g, 5.063_686_8e10, 1.0 / 12.6e-9);
        assert!((f / 35.417_316 - 1.0).abs() < 1e-6);
        assert_eq!(purcell_zpl_theory(2.0 * g, 1e10, 1e8), 4.0 * purcell_zpl_theory(g, 1e10, 1e8));
        assert_eq!(coupling_rate(1e-29, 0.0, 1.0, &K), 0.0);
    }

    #[test]
    fn rates_oracle() {
        let a = rates_algebra(&RatesMeasurement::zpl6(0.024)).unwrap();
        assert!((a.f_p_zpl - 37.628_883).abs() < 1e-5);
        assert!((a.eta_zpl - 0.453_832_91).abs() < 1e-7);
        let b = rates_algebra(&RatesMeasurement::zpl6(0.05)).unwrap();
        assert!((b.f_p_zpl - 18.581_864).abs() < 1e-5);
        assert!((b.eta_zpl - 0.466_898_73).abs() < 1e-7);
        assert!((a.f_p_total - 1.989_924_43).abs() < 1e-7);
        assert!(rates_algebra(&RatesMeasurement::zpl6(1.0)).is_err());
    }

    #[test]
    fn inversion_round_trip() {
        let dw = debye_waller_inversion(158e6, 88.2e6, 79.4e6, 35.5).unwrap();
        assert!((dw.debye_waller - 0.025_480_96).abs() < 1e-7);
        let back = rates_algebra(&RatesMeasurement::zpl6(dw.debye_waller)).unwrap();
        assert!((back.f_p_zpl / 35.5 - 1.0).abs() < 1e-10);
        let flat = debye_waller_inversion(88.2e6, 88.2e6, 79.4e6, 35.5).unwrap();
        assert!(flat.degenerate && flat.debye_waller == 0.0);
        assert!(debye_waller_inversion(158e6, 88.2e6, 79.4e6, 1.0).is_err());
    }

    #[test]
    fn transform_limits() {
        assert!((transform_limit(527.0, 2.02e6, 77.4e6) / 181.745e6 - 1.0).abs() < 1e-5);
        assert!((transform_limit(356.0, 2.02e6, 77.4e6) / 126.770e6 - 1.0).abs() < 1e-5);
        let g = 1.0 / 12.6e-9;
        assert!((transform_limit(1.0, 0.0255 * g, 0.9745 * g) / 12.6313e6 - 1.0).abs() < 1e-4);
    }
}
