//! Forward evaluation of candidate cavities and sweeps over membrane
//! thickness and air gap.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::PhysicalConstants;
use crate::cqed;
use crate::modes::{self, WaistSource};
use crate::stack::{assemble_cavity, emitter_rates, CavityAssembly, EmitterSpec, MirrorSpec};
use crate::tmm;
use crate::{Error, Result};

/// Field condition at the membrane-air interface.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Node,
    Antinode,
}

impl Termination {
    pub fn label(&self) -> &'static str {
        match self {
            Termination::Node => "node",
            Termination::Antinode => "antinode",
        }
    }
}

/// Mirrors, index and curvature shared by every design point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignTemplate {
    pub bottom_mirror: MirrorSpec,
    pub top_mirror: MirrorSpec,
    #[serde(default = "default_diamond_index")]
    pub diamond_index: f64,
    pub curvature_radius_um: f64,
    /// Intensity FWHM (µm) replacing the plano-concave waist formula.
    #[serde(default)]
    pub waist_override_fwhm_um: Option<f64>,
    /// Cavity-loss channel competing with output coupling (s⁻¹).
    #[serde(default)]
    pub kappa_loss_per_s: f64,
}

fn default_diamond_index() -> f64 {
    2.41
}

impl Default for DesignTemplate {
    /// Improved cavity: low-index terminated mirrors on both sides and a
    /// 5.5 µm radius dimple.
    fn default() -> Self {
        DesignTemplate {
            bottom_mirror: MirrorSpec::new(15, false),
            top_mirror: MirrorSpec::new(14, false),
            diamond_index: default_diamond_index(),
            curvature_radius_um: 5.5,
            waist_override_fwhm_um: None,
            kappa_loss_per_s: 0.0,
        }
    }
}

impl DesignTemplate {
    pub fn cavity(&self, t_d_nm: f64, l_nm: f64) -> Result<CavityAssembly> {
        assemble_cavity(
            self.bottom_mirror.clone(),
            self.diamond_index,
            t_d_nm,
            l_nm,
            self.top_mirror.clone(),
            self.curvature_radius_um,
        )?
        .with_waist_override(self.waist_override_fwhm_um)
    }
}

/// Inputs of one candidate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignSpec {
    pub t_d_nm: f64,
    /// Nominal air gap; retuned to the nearest ZPL resonance.
    pub l_nm: f64,
    #[serde(default)]
    pub termination: Option<Termination>,
    #[serde(default)]
    pub kappa_per_s: Option<f64>,
    #[serde(default)]
    pub q_target: Option<f64>,
}

impl DesignSpec {
    pub fn new(t_d_nm: f64, l_nm: f64) -> Self {
        DesignSpec {
            t_d_nm,
            l_nm,
            termination: None,
            kappa_per_s: None,
            q_target: None,
        }
    }

    pub fn with_termination(mut self, t: Termination) -> Self {
        self.termination = Some(t);
        self
    }

    pub fn with_q(mut self, q: f64) -> Self {
        self.q_target = Some(q);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KappaSource {
    Given,
    QTarget,
    /// κ = 2g.
    CollectionRule,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesignPoint {
    pub spec: DesignSpec,
    pub l_resonant_nm: f64,
    pub wavelength_nm: f64,
    pub termination: Termination,
    /// Distance from the interface to the nearest node or antinode (nm).
    pub termination_offset_nm: f64,
    /// |E| at the interface over the membrane maximum.
    pub interface_ratio: f64,
    pub waist_source: WaistSource,
    pub waist_um: f64,
    pub e_vac_kv_per_m: f64,
    pub g_per_s: f64,
    pub kappa_per_s: f64,
    pub kappa_source: KappaSource,
    pub kappa_numeric_per_s: f64,
    pub f_p_zpl: f64,
    pub eta_zpl: f64,
    pub q_required: f64,
    pub transform_limit_hz: f64,
    pub debye_waller: f64,
}

/// Result of the κ choice for given coupling and emitter rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KappaChoice {
    /// κ = 2g.
    pub rule_per_s: f64,
    /// Maximiser of η_ZPL(κ)·κ/(κ + κ_loss) on [2g, upper].
    pub numeric_per_s: f64,
    pub rule_objective: f64,
    pub numeric_objective: f64,
    pub upper_bound_per_s: f64,
    pub kappa_loss_per_s: f64,
}

/// Collected ZPL flux per excitation for cavity decay rate κ.
pub fn collection_objective(kappa: f64, g: f64, gamma_zpl: f64, gamma_sideband: f64, kappa_loss: f64) -> f64 {
    let f = cqed::purcell_zpl_theory(g, kappa, gamma_zpl + gamma_sideband);
    cqed::eta_zpl(f, gamma_zpl, gamma_sideband) * kappa / (kappa + kappa_loss)
}

/// Upper end of the numeric κ search, as a multiple of 2g.
pub const KAPPA_SEARCH_SPAN: f64 = 1e4;

pub fn optimize_kappa(g: f64, gamma_zpl: f64, gamma_sideband: f64, kappa_loss: f64) -> Result<KappaChoice> {
    if !(g > 0.0 && gamma_zpl > 0.0 && gamma_sideband > 0.0 && kappa_loss >= 0.0) {
        return Err(Error::InvalidInput("rates must be positive".into()));
    }
    let lo = 2.0 * g;
    let hi = KAPPA_SEARCH_SPAN * lo;
    let obj = |ln_k: f64| collection_objective(ln_k.exp(), g, gamma_zpl, gamma_sideband, kappa_loss);
    let (a, b) = (lo.ln(), hi.ln());
    let n = 400;
    let best = (0..=n)
        .map(|i| a + (b - a) * i as f64 / n as f64)
        .map(|x| (x, obj(x)))
        .fold((a, f64::NEG_INFINITY), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
    let h = (b - a) / n as f64;
    let x = tmm::golden_max((best.0 - h).max(a), (best.0 + h).min(b), 1e-12, obj);
    let x = if obj(x) >= best.1 { x } else { best.0 };
    Ok(KappaChoice {
        rule_per_s: lo,
        numeric_per_s: x.exp(),
        rule_objective: obj(a),
        numeric_objective: obj(x),
        upper_bound_per_s: hi,
        kappa_loss_per_s: kappa_loss,
    })
}

/// Position tolerance of the interface node/antinode test, as a fraction
/// of the wavelength.
pub const TERMINATION_TOLERANCE: f64 = 1.0 / 40.0;

/// Node or antinode at the membrane-air interface of a resonant profile.
pub fn interface_termination(cavity: &CavityAssembly, profile: &tmm::FieldProfile) -> Result<(Termination, f64)> {
    let idx = cavity
        .diamond_layer_index()
        .ok_or_else(|| Error::Domain("design has no membrane".into()))?;
    let z = profile
        .interface_after(idx)
        .ok_or_else(|| Error::Domain("membrane missing from profile".into()))?;
    let (node, antinode) = profile.nearest_extremum(z);
    let dn = node.map_or(f64::INFINITY, |v| (v - z).abs());
    let da = antinode.map_or(f64::INFINITY, |v| (v - z).abs());
    let tol = TERMINATION_TOLERANCE * profile.resonant_wavelength_nm;
    if dn <= da && dn <= tol {
        Ok((Termination::Node, dn))
    } else if da < dn && da <= tol {
        Ok((Termination::Antinode, da))
    } else {
        Err(Error::Domain(format!(
            "interface is {:.1} nm from the nearest node and {:.1} nm from the nearest antinode",
            dn, da
        )))
    }
}

/// Tune to the emitter's ZPL, then chain field profile → vacuum field →
/// coupling → Purcell factor and ZPL fraction.
pub fn evaluate_design(
    spec: &DesignSpec,
    template: &DesignTemplate,
    emitter: &EmitterSpec,
    k: &PhysicalConstants,
) -> Result<DesignPoint> {
    let lambda = emitter.zpl_wavelength_nm;
    let nominal = template.cavity(spec.t_d_nm, spec.l_nm)?;
    let cavity = tmm::tune_to_wavelength(&nominal, lambda, lambda / 4.0)?;
    let profile = tmm::field_profile(&cavity, lambda)?;
    let (termination, offset) = interface_termination(&cavity, &profile)?;
    if let Some(want) = spec.termination {
        if want != termination {
            return Err(Error::Domain(format!(
                "requested {} termination but the field has a {} at the interface",
                want.label(),
                termination.label()
            )));
        }
    }
    let (mode, volume) = modes::cavity_vacuum_field(&cavity, &profile, k)?;
    let e_vac = volume.diamond_field()?;
    let diamond = cavity.diamond_layer_index().expect("checked by interface test");
    let z_int = profile.interface_after(diamond).expect("checked by interface test");
    let interface_ratio =
        profile.amplitude_at(z_int) / profile.max_in_layer(diamond).map_or(f64::NAN, |(_, a)| a);

    let rates = emitter_rates(emitter)?;
    let d = cqed::dipole_from_lifetime(rates.total, lambda, emitter.host_index, k);
    let g = cqed::coupling_rate(d, e_vac * 1e3, emitter.dipole_orientation, k);
    let choice = optimize_kappa(g, rates.zpl, rates.sideband, template.kappa_loss_per_s)?;
    let (kappa, kappa_source) = match (spec.kappa_per_s, spec.q_target) {
        (Some(kp), _) => (kp, KappaSource::Given),
        (None, Some(q)) => (cqed::kappa_from_q(q, lambda, k), KappaSource::QTarget),
        (None, None) => (choice.rule_per_s, KappaSource::CollectionRule),
    };
    if !(kappa > 0.0) {
        return Err(Error::InvalidInput("κ must be positive".into()));
    }
    let f = cqed::purcell_zpl_theory(g, kappa, rates.total);
    Ok(DesignPoint {
        spec: *spec,
        l_resonant_nm: cavity.air_gap_nm(),
        wavelength_nm: lambda,
        termination,
        termination_offset_nm: offset,
        interface_ratio,
        waist_source: mode.source,
        waist_um: mode.waist_um,
        e_vac_kv_per_m: e_vac,
        g_per_s: g,
        kappa_per_s: kappa,
        kappa_source,
        kappa_numeric_per_s: choice.numeric_per_s,
        f_p_zpl: f,
        eta_zpl: cqed::eta_zpl(f, rates.zpl, rates.sideband),
        q_required: cqed::q_from_kappa(kappa, lambda, k),
        transform_limit_hz: cqed::transform_limit(f, rates.zpl, rates.sideband),
        debye_waller: emitter.debye_waller,
    })
}

/// Short machine-readable reason for a rejected grid point.
pub fn reason_code(err: &Error) -> &'static str {
    match err {
        Error::Unstable { .. } => "unstable",
        Error::NoResonance(_) | Error::OffResonance { .. } => "no-resonance",
        Error::Domain(msg) if msg.contains("termination") => "termination-mismatch",
        Error::Domain(_) => "no-interface-extremum",
        Error::InvalidInput(_) => "invalid-geometry",
        _ => "error",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub spec: DesignSpec,
    pub point: Option<DesignPoint>,
    pub reason: Option<String>,
    pub message: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    /// Indices into `rows` of the non-dominated valid points, in row order.
    pub pareto: Vec<usize>,
    pub template: DesignTemplate,
    pub emitter: EmitterSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepRanges {
    pub t_d_nm: Vec<f64>,
    pub l_nm: Vec<f64>,
    /// Required interface condition; `null` accepts either.
    #[serde(default = "default_terminations")]
    pub terminations: Vec<Option<Termination>>,
}

fn default_terminations() -> Vec<Option<Termination>> {
    vec![None]
}

/// `a` dominates `b`: at least as good in both objectives, better in one.
fn dominates(a: &DesignPoint, b: &DesignPoint) -> bool {
    a.eta_zpl >= b.eta_zpl && a.q_required <= b.q_required && (a.eta_zpl > b.eta_zpl || a.q_required < b.q_required)
}

/// Non-dominated subset for (η_ZPL max, Q_required min).
pub fn pareto_front(points: &[&DesignPoint]) -> Vec<usize> {
    (0..points.len())
        .filter(|&i| !points.iter().any(|p| dominates(p, points[i])))
        .collect()
}

pub fn sweep(
    ranges: &SweepRanges,
    template: &DesignTemplate,
    emitter: &EmitterSpec,
    k: &PhysicalConstants,
) -> Result<SweepResult> {
    if ranges.t_d_nm.is_empty() || ranges.l_nm.is_empty() || ranges.terminations.is_empty() {
        return Err(Error::InvalidInput("sweep grid is empty".into()));
    }
    let specs: Vec<DesignSpec> = ranges
        .t_d_nm
        .iter()
        .flat_map(|&t| {
            ranges.l_nm.iter().flat_map(move |&l| {
                ranges.terminations.iter().map(move |&term| DesignSpec {
                    termination: term,
                    ..DesignSpec::new(t, l)
                })
            })
        })
        .collect();
    let rows: Vec<SweepRow> = specs
        .par_iter()
        .map(|spec| match evaluate_design(spec, template, emitter, k) {
            Ok(p) => SweepRow {
                spec: *spec,
                point: Some(p),
                reason: None,
                message: None,
            },
            Err(e) => SweepRow {
                spec: *spec,
                point: None,
                reason: Some(reason_code(&e).to_string()),
                message: Some(e.to_string()),
            },
        })
        .collect();
    let valid: Vec<(usize, &DesignPoint)> = rows
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r.point.as_ref().map(|p| (i, p)))
        .collect();
    if valid.is_empty() {
        return Err(Error::NoResonance("no valid design point in the sweep grid".into()));
    }
    let pts: Vec<&DesignPoint> = valid.iter().map(|v| v.1).collect();
    let pareto = pareto_front(&pts).into_iter().map(|i| valid[i].0).collect();
    Ok(SweepResult {
        rows,
        pareto,
        template: template.clone(),
        emitter: emitter.clone(),
    })
}

/// Membrane thickness of `quarter_waves` quarter-wave optical thicknesses.
pub fn quarter_wave_membrane(quarter_waves: u32, wavelength_nm: f64, n: f64) -> f64 {
    quarter_waves as f64 * wavelength_nm / (4.0 * n)
}

/// Round-trip check of the κ used by a design against its Q.
pub fn q_to_kappa_consistent(p: &DesignPoint, k: &PhysicalConstants) -> bool {
    let omega = 2.0 * PI * k.c_m_per_s / (p.wavelength_nm * 1e-9);
    ((omega / p.kappa_per_s) / p.q_required - 1.0).abs() < 1e-12
}
