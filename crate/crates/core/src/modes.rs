//! Transverse Gaussian-mode quantities and vacuum-field normalisation.

use std::f64::consts::{LN_2, PI};

use serde::Serialize;

use crate::constants::PhysicalConstants;
use crate::stack::CavityAssembly;
use crate::tmm::FieldProfile;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WaistSource {
    Formula,
    Override,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransverseMode {
    /// 1/e² intensity radius w₀.
    pub waist_um: f64,
    pub fwhm_um: f64,
    pub order: (u32, u32),
    /// Extra air-gap length needed to bring this order onto the same
    /// wavelength as the fundamental.
    pub gouy_offset_nm: f64,
    pub source: WaistSource,
}

pub fn fwhm_to_waist(fwhm_um: f64) -> f64 {
    fwhm_um / (2.0 * LN_2).sqrt()
}

pub fn waist_to_fwhm(waist_um: f64) -> f64 {
    waist_um * (2.0 * LN_2).sqrt()
}

fn check_stable(radius_um: f64, length_um: f64) -> Result<()> {
    if !(length_um > 0.0) {
        return Err(Error::InvalidInput(format!("mirror separation {length_um} µm must be positive")));
    }
    if length_um >= radius_um {
        return Err(Error::Unstable {
            length_um,
            radius_um,
        });
    }
    Ok(())
}

/// Fundamental waist of a plano-concave resonator,
/// w₀² = (λ/π)·√(Lg(R − Lg)).
pub fn beam_waist(radius_um: f64, length_um: f64, wavelength_nm: f64) -> Result<TransverseMode> {
    check_stable(radius_um, length_um)?;
    let lambda_um = wavelength_nm * 1e-3;
    let w2 = lambda_um / PI * (length_um * (radius_um - length_um)).sqrt();
    if !(w2 > 0.0 && w2.is_finite()) {
        return Err(Error::Unstable {
            length_um,
            radius_um,
        });
    }
    let waist = w2.sqrt();
    Ok(TransverseMode {
        waist_um: waist,
        fwhm_um: waist_to_fwhm(waist),
        order: (0, 0),
        gouy_offset_nm: 0.0,
        source: WaistSource::Formula,
    })
}

/// Fundamental mode of an assembled cavity; a configured waist override wins.
pub fn cavity_mode(cavity: &CavityAssembly, wavelength_nm: f64) -> Result<TransverseMode> {
    match cavity.transverse_waist_override_um {
        Some(fwhm) => {
            check_stable(cavity.curvature_radius_um, cavity.geometric_length_um())?;
            Ok(TransverseMode {
                waist_um: fwhm_to_waist(fwhm),
                fwhm_um: fwhm,
                order: (0, 0),
                gouy_offset_nm: 0.0,
                source: WaistSource::Override,
            })
        }
        None => beam_waist(cavity.curvature_radius_um, cavity.geometric_length_um(), wavelength_nm),
    }
}

/// Gouy phase arccos(√(1 − Lg/R)) of the plano-concave resonator.
pub fn gouy_phase(radius_um: f64, length_um: f64) -> Result<f64> {
    check_stable(radius_um, length_um)?;
    Ok((1.0 - length_um / radius_um).sqrt().acos())
}

/// Length offsets (nm) of transverse orders m + n = 0..=max_order.
pub fn transverse_offsets(radius_um: f64, length_um: f64, wavelength_nm: f64, max_order: u32) -> Result<Vec<f64>> {
    let psi = gouy_phase(radius_um, length_um)?;
    Ok((0..=max_order)
        .map(|order| order as f64 * wavelength_nm / (2.0 * PI) * psi)
        .collect())
}

/// Wavelength offset at fixed L for a length offset on a branch of slope
/// dλ/dL (higher orders sit on the blue side).
pub fn wavelength_offset(length_offset_nm: f64, slope: f64) -> f64 {
    -slope * length_offset_nm
}

/// A_eff = πw₀²/2 in µm².
pub fn effective_area(mode: &TransverseMode) -> f64 {
    PI * mode.waist_um * mode.waist_um / 2.0
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeVolumeReport {
    pub wavelength_nm: f64,
    pub area_um2: f64,
    /// ∫ε_r|f|²dz with f = 1 at the global field maximum.
    pub longitudinal_integral_nm: f64,
    /// Mode volume referenced to the field maximum inside the diamond.
    pub v_eff_um3: Option<f64>,
    pub v_eff_global_um3: f64,
    pub e_vac_max_diamond_kv_per_m: Option<f64>,
    pub e_vac_global_max_kv_per_m: f64,
    pub z_max_diamond_nm: Option<f64>,
    pub z_global_max_nm: f64,
}

impl ModeVolumeReport {
    pub fn diamond_field(&self) -> Result<f64> {
        self.e_vac_max_diamond_kv_per_m
            .ok_or_else(|| Error::Domain("field profile has no diamond layer".into()))
    }
}

/// Vacuum field of a resonant profile for a transverse area `area_um2`.
pub fn vacuum_field(
    profile: &FieldProfile,
    area_um2: f64,
    diamond_layer: Option<usize>,
    consts: &PhysicalConstants,
) -> Result<ModeVolumeReport> {
    if !(area_um2 > 0.0) {
        return Err(Error::InvalidInput("effective area must be positive".into()));
    }
    let lambda = profile.resonant_wavelength_nm;
    let omega = consts.angular_frequency(lambda);
    let integral = profile.energy_integral_nm();
    // |E_vac| at f = 1
    let e_unit = (consts.hbar_j_s * omega / (2.0 * consts.eps0_f_per_m * area_um2 * 1e-12 * integral * 1e-9)).sqrt();

    let z_global = profile
        .segments
        .iter()
        .map(|s| {
            let (z, a) = s.max_amplitude();
            (s.z_start_nm + z, a, s.eps_r())
        })
        .fold((0.0, 0.0, 1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
    let (z_global, eps_global) = (z_global.0, z_global.2);
    let v_global = area_um2 * integral * 1e-3 / eps_global;

    let diamond = match diamond_layer {
        Some(idx) => {
            let (z, f) = profile
                .max_in_layer(idx)
                .ok_or_else(|| Error::Domain(format!("layer {idx} not in profile")))?;
            let eps = profile
                .segments
                .iter()
                .find(|s| s.layer_index == idx)
                .map(|s| s.eps_r())
                .unwrap_or(1.0);
            Some((z, f, eps))
        }
        None => None,
    };

    Ok(ModeVolumeReport {
        wavelength_nm: lambda,
        area_um2,
        longitudinal_integral_nm: integral,
        v_eff_um3: diamond.map(|(_, f, eps)| area_um2 * integral * 1e-3 / (eps * f * f)),
        v_eff_global_um3: v_global,
        e_vac_max_diamond_kv_per_m: diamond.map(|(_, f, _)| e_unit * f * 1e-3),
        e_vac_global_max_kv_per_m: e_unit * 1e-3,
        z_max_diamond_nm: diamond.map(|(z, _, _)| z),
        z_global_max_nm: z_global,
    })
}

/// Vacuum field of a cavity on resonance at its own diamond maximum, using
/// the cavity's transverse mode.
pub fn cavity_vacuum_field(
    cavity: &CavityAssembly,
    profile: &FieldProfile,
    consts: &PhysicalConstants,
) -> Result<(TransverseMode, ModeVolumeReport)> {
    let mode = cavity_mode(cavity, profile.resonant_wavelength_nm)?;
    let report = vacuum_field(profile, effective_area(&mode), cavity.diamond_layer_index(), consts)?;
    Ok((mode, report))
}
