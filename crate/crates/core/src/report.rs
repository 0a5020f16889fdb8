//! Full coupling report for a run configuration, and the JSON form in which
//! every number carries its unit.

use serde::Serialize;
use serde_json::{Map, Value};

use crate::config::RunConfig;
use crate::cqed::{self, CouplingReport, Linewidths, Provenance, RatesMeasurement};
use crate::dispersion;
use crate::modes::{self, ModeVolumeReport, TransverseMode};
use crate::tmm;
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CavitySummary {
    pub t_d_nm: f64,
    pub l_nominal_nm: f64,
    pub l_resonant_nm: f64,
    pub resonance_wavelength_nm: f64,
    pub cold_q: f64,
    pub cold_finesse: f64,
    pub dlambda_dl: f64,
    pub dlambda_dl_source: Provenance,
    pub interface_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub cavity: CavitySummary,
    pub transverse_mode: TransverseMode,
    pub mode_volume: ModeVolumeReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub linewidths: Option<Linewidths>,
    pub coupling: CouplingReport,
}

/// Runs the chain at the air gap resonant with the emitter's ZPL.
pub fn run_report(cfg: &RunConfig) -> Result<RunReport> {
    let k = &cfg.constants;
    let lambda = cfg.emitter.zpl_wavelength_nm;
    let nominal = cfg.cavity()?;
    let cavity = tmm::tune_to_wavelength(&nominal, lambda, lambda / 4.0)?;
    cfg.emitter.check_depth(&cavity)?;
    let profile = tmm::field_profile(&cavity, lambda)?;
    let (mode, volume) = modes::cavity_vacuum_field(&cavity, &profile, k)?;
    let cold_q = tmm::finesse_route_q(&cavity, lambda);

    let interface_ratio = match cavity.diamond_layer_index() {
        Some(i) => {
            let z = profile.interface_after(i).unwrap_or(f64::NAN);
            profile.amplitude_at(z) / profile.max_in_layer(i).map_or(f64::NAN, |m| m.1)
        }
        None => f64::NAN,
    };

    let m = cfg.measurement.unwrap_or_default();
    let (slope, slope_src) = match m.dlambda_dl {
        Some(s) => (s, Provenance::Config),
        None => (dispersion::local_slope(&cavity, lambda, 0.5)?, Provenance::Computed),
    };
    let linewidths = m
        .linewidth_l_pm
        .map(|gl| cqed::linewidth_conversions(gl, slope, lambda, k))
        .transpose()?;
    let (kappa, kappa_src, finesse) = match (&linewidths, m.q) {
        (Some(l), _) => (l.kappa_per_s, Provenance::Measured, Some(l.finesse)),
        (None, Some(q)) => (cqed::kappa_from_q(q, lambda, k), Provenance::Measured, None),
        (None, None) => (
            cqed::kappa_from_q(cold_q, lambda, k),
            Provenance::Computed,
            Some(tmm::composite_finesse(&cavity, lambda)),
        ),
    };
    let (e_vac, e_src) = match cfg.e_vac_override_kv_per_m {
        Some(e) => (e, Provenance::Config),
        None => (volume.diamond_field()?, Provenance::Computed),
    };
    let rates = match (m.gamma_on_per_s, m.gamma_off_per_s) {
        (Some(on), Some(off)) => Some(RatesMeasurement {
            gamma_on_per_s: on,
            gamma_off_per_s: off,
            gamma_bulk_per_s: m.gamma_bulk_per_s.unwrap_or(1e9 / cfg.emitter.bulk_lifetime_ns),
            debye_waller: m.debye_waller.unwrap_or(cfg.emitter.debye_waller),
        }),
        _ => None,
    };
    let coupling = cqed::coupling_report(
        &cfg.emitter,
        lambda,
        e_vac,
        e_src,
        kappa,
        kappa_src,
        finesse,
        rates.as_ref(),
        k,
    )?;
    Ok(RunReport {
        cavity: CavitySummary {
            t_d_nm: cavity.diamond_thickness_nm(),
            l_nominal_nm: nominal.air_gap_nm(),
            l_resonant_nm: cavity.air_gap_nm(),
            resonance_wavelength_nm: profile.resonant_wavelength_nm,
            cold_q,
            cold_finesse: tmm::composite_finesse(&cavity, lambda),
            dlambda_dl: slope,
            dlambda_dl_source: slope_src,
            interface_ratio,
        },
        transverse_mode: mode,
        mode_volume: volume,
        linewidths,
        coupling,
    })
}

/// Key suffixes mapped to units, longest first.
const UNIT_SUFFIXES: &[(&str, &str)] = &[
    ("_kv_per_m", "kV/m"),
    ("_per_s", "1/s"),
    ("_c_m", "C*m"),
    ("_um3", "um^3"),
    ("_um2", "um^2"),
    ("_um", "um"),
    ("_nm", "nm"),
    ("_pm", "pm"),
    ("_ns", "ns"),
    ("_hz", "Hz"),
];

/// Rewrites every numeric field `name_<unit>` as `name: {value, unit}`;
/// plain numbers become dimensionless quantities.
pub fn with_units(v: Value) -> Value {
    match v {
        Value::Object(map) => {
            let mut out = Map::new();
            for (key, val) in map {
                match val {
                    Value::Number(_) => {
                        let (name, unit) = UNIT_SUFFIXES
                            .iter()
                            .find_map(|(suf, unit)| key.strip_suffix(suf).map(|n| (n.to_string(), *unit)))
                            .unwrap_or((key.clone(), "1"));
                        out.insert(name, serde_json::json!({ "value": val, "unit": unit }));
                    }
                    other => {
                        out.insert(key, with_units(other));
                    }
                }
            }
            Value::Object(out)
        }
        Value::Array(items) => Value::Array(items.into_iter().map(with_units).collect()),
        other => other,
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let v = with_units(serde_json::to_value(value)?);
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}
