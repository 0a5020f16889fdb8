//! JSON run configuration. Every length key carries its unit.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::constants::PhysicalConstants;
use crate::design::{DesignTemplate, SweepRanges, Termination};
use crate::dispersion::DispersionOptions;
use crate::fit::{G2Options, DecayHistogram};
use crate::stack::{assemble_cavity, CavityAssembly, EmitterSpec, MirrorSpec};
use crate::{Error, Result};

/// The configuration shipped with the binary for `--paper-baseline`.
pub const PAPER_BASELINE_JSON: &str = include_str!("../data/paper_baseline.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavityConfig {
    pub bottom_mirror: MirrorSpec,
    pub top_mirror: MirrorSpec,
    pub diamond_index: f64,
    pub t_d_nm: f64,
    pub l_nm: f64,
    pub curvature_radius_um: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub waist_override_fwhm_um: Option<f64>,
}

impl CavityConfig {
    pub fn build(&self) -> Result<CavityAssembly> {
        assemble_cavity(
            self.bottom_mirror.clone(),
            self.diamond_index,
            self.t_d_nm,
            self.l_nm,
            self.top_mirror.clone(),
            self.curvature_radius_um,
        )?
        .with_waist_override(self.waist_override_fwhm_um)
    }

    pub fn from_assembly(c: &CavityAssembly) -> Self {
        CavityConfig {
            bottom_mirror: c.bottom_mirror.clone(),
            top_mirror: c.top_mirror.clone(),
            diamond_index: c.diamond.n.re,
            t_d_nm: c.diamond_thickness_nm(),
            l_nm: c.air_gap_nm(),
            curvature_radius_um: c.curvature_radius_um,
            waist_override_fwhm_um: c.transverse_waist_override_um,
        }
    }
}

/// Measured cavity linewidth and emitter decay rates.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementConfig {
    /// Linewidth of a length scan (pm of air gap).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linewidth_l_pm: Option<f64>,
    /// Mode slope dλ/dL; computed from the stack when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dlambda_dl: Option<f64>,
    /// Quality factor, used when no length-scan linewidth is given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_on_per_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_off_per_s: Option<f64>,
    /// Defaults to the inverse bulk lifetime.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_bulk_per_s: Option<f64>,
    /// Branching fraction for the rates algebra; defaults to the emitter's.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub debye_waller: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DispersionConfig {
    pub l_min_nm: f64,
    pub l_max_nm: f64,
    pub l_step_nm: f64,
    pub lambda_min_nm: f64,
    pub lambda_max_nm: f64,
    #[serde(default)]
    pub max_transverse_order: u32,
    #[serde(default = "default_scan_step")]
    pub scan_step_nm: f64,
}

fn default_scan_step() -> f64 {
    DispersionOptions::default().scan_step_nm
}

impl DispersionConfig {
    pub fn options(&self) -> DispersionOptions {
        DispersionOptions {
            scan_step_nm: self.scan_step_nm,
            max_transverse_order: self.max_transverse_order,
        }
    }

    pub fn window(&self) -> (f64, f64) {
        (self.lambda_min_nm, self.lambda_max_nm)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub t_d_nm: Vec<f64>,
    pub l_nm: Vec<f64>,
    /// Required interface condition per entry; `null` accepts either.
    #[serde(default = "default_terminations")]
    pub terminations: Vec<Option<Termination>>,
    #[serde(default)]
    pub template: DesignTemplate,
    /// Branching fraction used for design predictions.
    #[serde(default = "default_design_dw")]
    pub debye_waller: f64,
}

fn default_design_dw() -> f64 {
    EmitterSpec::DW_DESIGN
}

fn default_terminations() -> Vec<Option<Termination>> {
    vec![None]
}

impl SweepConfig {
    pub fn ranges(&self) -> SweepRanges {
        SweepRanges {
            t_d_nm: self.t_d_nm.clone(),
            l_nm: self.l_nm.clone(),
            terminations: self.terminations.clone(),
        }
    }

    /// The run's emitter with the design branching fraction.
    pub fn emitter(&self, base: &EmitterSpec) -> EmitterSpec {
        base.clone().with_debye_waller(self.debye_waller)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    #[serde(default = "default_irf")]
    pub irf_sigma_ns: f64,
    #[serde(default)]
    pub fit_window_start_ns: f64,
    #[serde(default)]
    pub irf_center_ns: f64,
    #[serde(default = "default_period")]
    pub pulse_period_ns: f64,
    #[serde(default = "default_g2_window")]
    pub g2_window_ns: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalization_delay_ns: Option<f64>,
    #[serde(default)]
    pub zero_delay_ns: f64,
}

fn default_irf() -> f64 {
    DecayHistogram::DEFAULT_IRF_SIGMA_NS
}
fn default_period() -> f64 {
    50.0
}
fn default_g2_window() -> f64 {
    20.0
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            irf_sigma_ns: default_irf(),
            fit_window_start_ns: 0.0,
            irf_center_ns: 0.0,
            pulse_period_ns: default_period(),
            g2_window_ns: default_g2_window(),
            normalization_delay_ns: None,
            zero_delay_ns: 0.0,
        }
    }
}

impl FitConfig {
    pub fn g2_options(&self) -> G2Options {
        G2Options {
            pulse_period_ns: self.pulse_period_ns,
            window_ns: self.g2_window_ns,
            normalization_delay_ns: self.normalization_delay_ns,
            zero_delay_ns: self.zero_delay_ns,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub directory: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub cavity: CavityConfig,
    pub emitter: EmitterSpec,
    #[serde(default)]
    pub constants: PhysicalConstants,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measurement: Option<MeasurementConfig>,
    /// Replaces the transfer-matrix vacuum field in the coupling report.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e_vac_override_kv_per_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dispersion: Option<DispersionConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub fit: FitConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn paper_baseline() -> Self {
        Self::from_json(PAPER_BASELINE_JSON).expect("bundled baseline config is valid")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |e: Error| Error::Config(e.to_string());
        self.cavity.build().map_err(cfg)?;
        self.emitter.validate().map_err(cfg)?;
        self.constants.validate().map_err(cfg)?;
        if let Some(e) = self.e_vac_override_kv_per_m {
            if !(e.is_finite() && e >= 0.0) {
                return Err(Error::Config("e_vac_override_kv_per_m must be >= 0".into()));
            }
        }
        if let Some(d) = &self.dispersion {
            if !(d.l_step_nm > 0.0 && d.l_max_nm >= d.l_min_nm && d.lambda_max_nm > d.lambda_min_nm && d.scan_step_nm > 0.0)
            {
                return Err(Error::Config("dispersion ranges are inconsistent".into()));
            }
        }
        if let Some(m) = &self.measurement {
            let positive = [m.linewidth_l_pm, m.dlambda_dl, m.q, m.gamma_on_per_s, m.gamma_off_per_s, m.gamma_bulk_per_s];
            if positive.iter().flatten().any(|v| !(v.is_finite() && *v > 0.0)) {
                return Err(Error::Config("measurement values must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn cavity(&self) -> Result<CavityAssembly> {
        self.cavity.build()
    }
}
