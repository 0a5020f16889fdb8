//! Layered cavity geometry and emitter parameters.
//!
//! Stack order is always bottom substrate → bottom DBR → diamond → air gap →
//! top DBR → top substrate. Lengths are in nm unless a suffix says otherwise.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::tmm;
use crate::{Error, Result};

/// Relative tolerance used when comparing refractive indices to the diamond index.
const INDEX_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub name: String,
    /// Complex refractive index n + iκ with κ ≥ 0 for absorption.
    pub n: Complex64,
    pub thickness_nm: f64,
}

impl Layer {
    /// Zero thickness is accepted: it is the identity element of the
    /// transfer-matrix product and lets the bare-cavity limit keep its shape.
    pub fn new(name: impl Into<String>, n: Complex64, thickness_nm: f64) -> Result<Self> {
        let name = name.into();
        if !(thickness_nm.is_finite() && thickness_nm >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "layer '{name}': thickness must be finite and >= 0, got {thickness_nm}"
            )));
        }
        if !(n.re.is_finite() && n.re >= 1.0) {
            return Err(Error::InvalidInput(format!(
                "layer '{name}': Re(n) must be >= 1, got {}",
                n.re
            )));
        }
        if !(n.im.is_finite() && n.im >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "layer '{name}': Im(n) must be >= 0, got {}",
                n.im
            )));
        }
        Ok(Self {
            name,
            n,
            thickness_nm,
        })
    }

    pub fn lossless(name: impl Into<String>, n: f64, thickness_nm: f64) -> Result<Self> {
        Self::new(name, Complex64::new(n, 0.0), thickness_nm)
    }

    pub fn optical_thickness_nm(&self) -> f64 {
        self.n.re * self.thickness_nm
    }

    pub fn is_lossless(&self) -> bool {
        self.n.im == 0.0
    }

    /// Real relative permittivity used for energy density.
    pub fn eps_r(&self) -> f64 {
        (self.n * self.n).re
    }
}

fn default_n_high() -> f64 {
    2.06
}
fn default_n_low() -> f64 {
    1.46
}
fn default_center() -> f64 {
    637.0
}
fn default_true() -> bool {
    true
}
fn default_substrate() -> f64 {
    1.46
}

/// Quarter-wave Bragg mirror.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MirrorSpec {
    pub pairs: u32,
    #[serde(default = "default_n_high")]
    pub n_high: f64,
    #[serde(default = "default_n_low")]
    pub n_low: f64,
    #[serde(default = "default_center")]
    pub center_wavelength_nm: f64,
    /// The layer touching the cavity is the high-index one.
    #[serde(default = "default_true")]
    pub terminal_high_index: bool,
    #[serde(default = "default_substrate")]
    pub substrate_index: f64,
    /// Fractional power absorbed per reflection at the centre wavelength,
    /// realised as a uniform extinction coefficient on all mirror layers.
    #[serde(default)]
    pub lumped_loss: f64,
}

impl MirrorSpec {
    pub fn new(pairs: u32, terminal_high_index: bool) -> Self {
        Self {
            pairs,
            n_high: default_n_high(),
            n_low: default_n_low(),
            center_wavelength_nm: default_center(),
            terminal_high_index,
            substrate_index: default_substrate(),
            lumped_loss: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.pairs == 0 {
            return Err(Error::InvalidInput("mirror must have at least one pair".into()));
        }
        if !(self.n_high >= 1.0 && self.n_low >= 1.0 && self.substrate_index >= 1.0) {
            return Err(Error::InvalidInput("mirror indices must be >= 1".into()));
        }
        if !(self.center_wavelength_nm.is_finite() && self.center_wavelength_nm > 0.0) {
            return Err(Error::InvalidInput("mirror centre wavelength must be > 0".into()));
        }
        if !(0.0..1.0).contains(&self.lumped_loss) {
            return Err(Error::InvalidInput(format!(
                "lumped loss must lie in [0, 1), got {}",
                self.lumped_loss
            )));
        }
        Ok(())
    }

    fn layers_with_extinction(&self, extinction: f64) -> Vec<Layer> {
        let quarter = |n: f64, name: &str| Layer {
            name: name.to_string(),
            n: Complex64::new(n, extinction),
            thickness_nm: self.center_wavelength_nm / (4.0 * n),
        };
        let (first, second) = if self.terminal_high_index {
            ((self.n_high, "dbr_high"), (self.n_low, "dbr_low"))
        } else {
            ((self.n_low, "dbr_low"), (self.n_high, "dbr_high"))
        };
        (0..self.pairs)
            .flat_map(|_| [quarter(first.0, first.1), quarter(second.0, second.1)])
            .collect()
    }

    /// Extinction coefficient that makes the mirror absorb `lumped_loss` of
    /// the incident power at its centre wavelength, seen from a medium of
    /// index `cavity_index`.
    fn calibrate_extinction(&self, cavity_index: f64) -> f64 {
        if self.lumped_loss == 0.0 {
            return 0.0;
        }
        let absorbed = |k: f64| {
            let resp = tmm::stack_response(
                &self.layers_with_extinction(k),
                cavity_index,
                self.substrate_index,
                self.center_wavelength_nm,
            );
            1.0 - resp.reflectance - resp.transmittance
        };
        let (mut lo, mut hi) = (0.0_f64, 1e-6_f64);
        while absorbed(hi) < self.lumped_loss && hi < 10.0 {
            hi *= 4.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if absorbed(mid) < self.lumped_loss {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi {
                break;
            }
        }
        0.5 * (lo + hi)
    }
}

/// Lossless quarter-wave layers ordered from the cavity side outward.
pub fn build_dbr(spec: &MirrorSpec) -> Result<Vec<Layer>> {
    spec.validate()?;
    Ok(spec.layers_with_extinction(0.0))
}

/// The full microcavity.
#[derive(Debug, Clone, PartialEq)]
pub struct CavityAssembly {
    pub bottom_mirror: MirrorSpec,
    pub diamond: Layer,
    pub air_gap: Layer,
    pub top_mirror: MirrorSpec,
    pub curvature_radius_um: f64,
    /// Intensity FWHM of the transverse mode at the waist (µm); when set it
    /// replaces the plano-concave waist formula everywhere.
    pub transverse_waist_override_um: Option<f64>,
    bottom_extinction: f64,
    top_extinction: f64,
}

pub fn assemble_cavity(
    bottom: MirrorSpec,
    diamond_index: f64,
    t_d_nm: f64,
    air_gap_nm: f64,
    top: MirrorSpec,
    curvature_radius_um: f64,
) -> Result<CavityAssembly> {
    let diamond = Layer::lossless("diamond", diamond_index, t_d_nm)?;
    CavityAssembly::new(bottom, diamond, air_gap_nm, top, curvature_radius_um)
}

impl CavityAssembly {
    pub fn new(
        bottom_mirror: MirrorSpec,
        diamond: Layer,
        air_gap_nm: f64,
        top_mirror: MirrorSpec,
        curvature_radius_um: f64,
    ) -> Result<Self> {
        bottom_mirror.validate()?;
        top_mirror.validate()?;
        let air_gap = Layer::lossless("air", 1.0, air_gap_nm)?;
        if air_gap_nm <= 0.0 {
            return Err(Error::InvalidInput("air gap must be > 0".into()));
        }
        if !(curvature_radius_um.is_finite() && curvature_radius_um > 0.0) {
            return Err(Error::InvalidInput("radius of curvature must be > 0".into()));
        }
        let length_um = (air_gap_nm + diamond.thickness_nm) * 1e-3;
        if length_um >= curvature_radius_um {
            return Err(Error::Unstable {
                length_um,
                radius_um: curvature_radius_um,
            });
        }
        let bottom_cavity_index = if diamond.thickness_nm > 0.0 {
            diamond.n.re
        } else {
            1.0
        };
        let bottom_extinction = bottom_mirror.calibrate_extinction(bottom_cavity_index);
        let top_extinction = top_mirror.calibrate_extinction(1.0);
        Ok(Self {
            bottom_mirror,
            diamond,
            air_gap,
            top_mirror,
            curvature_radius_um,
            transverse_waist_override_um: None,
            bottom_extinction,
            top_extinction,
        })
    }

    pub fn with_waist_override(mut self, fwhm_um: Option<f64>) -> Result<Self> {
        if let Some(w) = fwhm_um {
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::InvalidInput("waist override must be > 0".into()));
            }
        }
        self.transverse_waist_override_um = fwhm_um;
        Ok(self)
    }

    /// Same cavity with a different air gap (re-checks stability).
    pub fn with_air_gap(&self, air_gap_nm: f64) -> Result<Self> {
        let mut next = Self::new(
            self.bottom_mirror.clone(),
            self.diamond.clone(),
            air_gap_nm,
            self.top_mirror.clone(),
            self.curvature_radius_um,
        )?;
        next.transverse_waist_override_um = self.transverse_waist_override_um;
        Ok(next)
    }

    pub fn with_diamond_thickness(&self, t_d_nm: f64) -> Result<Self> {
        let diamond = Layer::new("diamond", self.diamond.n, t_d_nm)?;
        let mut next = Self::new(
            self.bottom_mirror.clone(),
            diamond,
            self.air_gap.thickness_nm,
            self.top_mirror.clone(),
            self.curvature_radius_um,
        )?;
        next.transverse_waist_override_um = self.transverse_waist_override_um;
        Ok(next)
    }

    pub fn air_gap_nm(&self) -> f64 {
        self.air_gap.thickness_nm
    }

    pub fn diamond_thickness_nm(&self) -> f64 {
        self.diamond.thickness_nm
    }

    pub fn has_diamond(&self) -> bool {
        self.diamond.thickness_nm > 0.0
    }

    /// Physical mirror separation L + t_d in µm.
    pub fn geometric_length_um(&self) -> f64 {
        (self.air_gap.thickness_nm + self.diamond.thickness_nm) * 1e-3
    }

    pub fn bottom_substrate_index(&self) -> f64 {
        self.bottom_mirror.substrate_index
    }

    pub fn top_substrate_index(&self) -> f64 {
        self.top_mirror.substrate_index
    }

    /// Bottom mirror layers ordered substrate → cavity.
    pub fn bottom_layers(&self) -> Vec<Layer> {
        let mut layers = self
            .bottom_mirror
            .layers_with_extinction(self.bottom_extinction);
        layers.reverse();
        layers
    }

    /// Top mirror layers ordered cavity → substrate.
    pub fn top_layers(&self) -> Vec<Layer> {
        self.top_mirror.layers_with_extinction(self.top_extinction)
    }

    /// Membrane and air gap (the membrane is omitted at zero thickness).
    pub fn cavity_layers(&self) -> Vec<Layer> {
        let mut layers = Vec::with_capacity(2);
        if self.has_diamond() {
            layers.push(self.diamond.clone());
        }
        layers.push(self.air_gap.clone());
        layers
    }

    /// The full stack between the two substrates.
    pub fn layers(&self) -> Vec<Layer> {
        let mut layers = self.bottom_layers();
        layers.extend(self.cavity_layers());
        layers.extend(self.top_layers());
        layers
    }

    pub fn diamond_layer_index(&self) -> Option<usize> {
        self.has_diamond()
            .then(|| 2 * self.bottom_mirror.pairs as usize)
    }

    pub fn air_layer_index(&self) -> usize {
        2 * self.bottom_mirror.pairs as usize + usize::from(self.has_diamond())
    }

    pub fn optical_path_nm(&self) -> f64 {
        self.layers().iter().map(Layer::optical_thickness_nm).sum()
    }

    pub fn is_lossless(&self) -> bool {
        self.bottom_extinction == 0.0 && self.top_extinction == 0.0 && self.diamond.is_lossless()
    }

    /// Whether a layer with refractive index `n` is the membrane material.
    pub fn is_diamond_index(&self, n: Complex64) -> bool {
        (n - self.diamond.n).norm() <= INDEX_EPS * self.diamond.n.norm()
    }
}

fn default_orientation() -> f64 {
    1.0
}

/// Single colour centre.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmitterSpec {
    pub zpl_wavelength_nm: f64,
    pub bulk_lifetime_ns: f64,
    pub host_index: f64,
    /// Fraction of the bulk emission going into the zero-phonon line.
    pub debye_waller: f64,
    #[serde(default)]
    pub depth_nm: f64,
    #[serde(default = "default_orientation")]
    pub dipole_orientation: f64,
}

impl EmitterSpec {
    /// Branching-fraction presets. The first value is the self-consistent
    /// fraction used as default.
    pub const DW_DEFAULT: f64 = 0.0255;
    pub const DW_LOW: f64 = 0.024;
    pub const DW_HIGH: f64 = 0.05;
    pub const DW_DESIGN: f64 = 0.020;

    /// NV centre in diamond at 4 K, implanted 68 nm deep.
    pub fn nv_center() -> Self {
        Self {
            zpl_wavelength_nm: 637.0,
            bulk_lifetime_ns: 12.6,
            host_index: 2.41,
            debye_waller: Self::DW_DEFAULT,
            depth_nm: 68.0,
            dipole_orientation: 1.0,
        }
    }

    pub fn with_debye_waller(mut self, dw: f64) -> Self {
        self.debye_waller = dw;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidInput(format!("emitter: {msg}")));
        if !(self.zpl_wavelength_nm.is_finite() && self.zpl_wavelength_nm > 0.0) {
            return bad("ZPL wavelength must be > 0");
        }
        if !(self.bulk_lifetime_ns.is_finite() && self.bulk_lifetime_ns > 0.0) {
            return bad("bulk lifetime must be > 0");
        }
        if !(self.host_index >= 1.0) {
            return bad("host index must be >= 1");
        }
        if !(self.debye_waller > 0.0 && self.debye_waller < 1.0) {
            return bad("Debye-Waller fraction must lie in (0, 1)");
        }
        if !(self.depth_nm >= 0.0) {
            return bad("depth must be >= 0");
        }
        if !(self.dipole_orientation > 0.0 && self.dipole_orientation <= 1.0) {
            return bad("dipole orientation factor must lie in (0, 1]");
        }
        Ok(())
    }

    pub fn check_depth(&self, cavity: &CavityAssembly) -> Result<()> {
        if self.depth_nm > cavity.diamond_thickness_nm() {
            return Err(Error::InvalidInput(format!(
                "emitter depth {} nm exceeds membrane thickness {} nm",
                self.depth_nm,
                cavity.diamond_thickness_nm()
            )));
        }
        Ok(())
    }
}

/// Bulk decay rates in s⁻¹.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EmitterRates {
    pub total: f64,
    pub zpl: f64,
    pub sideband: f64,
}

pub fn emitter_rates(e: &EmitterSpec) -> Result<EmitterRates> {
    e.validate()?;
    let total = 1.0 / (e.bulk_lifetime_ns * 1e-9);
    let zpl = e.debye_waller * total;
    Ok(EmitterRates {
        total,
        zpl,
        sideband: total - zpl,
    })
}

/// The cavity as measured: 15/14-pair DBRs ending on the high-index layer,
/// 770 nm membrane, 1.96 µm air gap, R = 16 µm, 0.83 µm intensity-FWHM waist.
pub fn paper_baseline() -> CavityAssembly {
    assemble_cavity(
        MirrorSpec::new(15, true),
        2.41,
        770.0,
        1960.0,
        MirrorSpec::new(14, true),
        16.0,
    )
    .and_then(|c| c.with_waist_override(Some(0.83)))
    .expect("baseline geometry is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quarter_wave_thicknesses() {
        let layers = build_dbr(&MirrorSpec::new(3, true)).unwrap();
        assert_eq!(layers.len(), 6);
        assert!((layers[0].thickness_nm - 77.305_825_242_718_44).abs() < 1e-9);
        assert!((layers[1].thickness_nm - 109.075_342_465_753_42).abs() < 1e-9);
        for l in &layers {
            let rel = (l.optical_thickness_nm() - 637.0 / 4.0).abs() / (637.0 / 4.0);
            assert!(rel < 1e-12);
        }
    }

    #[test]
    fn single_pair_terminal_order() {
        let hi = build_dbr(&MirrorSpec::new(1, true)).unwrap();
        assert_eq!(hi.iter().map(|l| l.n.re).collect::<Vec<_>>(), vec![2.06, 1.46]);
        let lo = build_dbr(&MirrorSpec::new(1, false)).unwrap();
        assert_eq!(lo.iter().map(|l| l.n.re).collect::<Vec<_>>(), vec![1.46, 2.06]);
    }

    #[test]
    fn zero_pairs_rejected() {
        assert!(build_dbr(&MirrorSpec::new(0, true)).is_err());
    }

    #[test]
    fn baseline_assembly_valid() {
        let c = paper_baseline();
        assert_eq!(c.layers().len(), 30 + 2 + 28);
        assert_eq!(c.diamond_layer_index(), Some(30));
        assert_eq!(c.air_layer_index(), 31);
        assert_eq!(c.layers()[30].name, "diamond");
        assert!((c.geometric_length_um() - 2.73).abs() < 1e-12);
    }

    #[test]
    fn bare_cavity_accepted() {
        let c = assemble_cavity(
            MirrorSpec::new(15, true),
            2.41,
            0.0,
            955.5,
            MirrorSpec::new(14, true),
            16.0,
        )
        .unwrap();
        assert!(!c.has_diamond());
        assert_eq!(c.diamond_layer_index(), None);
        assert!(c.layers().iter().all(|l| l.name != "diamond"));
    }

    #[test]
    fn stability_bound() {
        let err = assemble_cavity(
            MirrorSpec::new(15, true),
            2.41,
            770.0,
            17_000.0 - 770.0,
            MirrorSpec::new(14, true),
            16.0,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Unstable { .. }));
    }

    #[test]
    fn layer_invariants() {
        assert!(Layer::lossless("x", 0.9, 10.0).is_err());
        assert!(Layer::lossless("x", 1.5, -1.0).is_err());
        assert!(Layer::new("x", Complex64::new(1.5, -0.1), 1.0).is_err());
        assert!(Layer::new("x", Complex64::new(1.5, 0.1), 1.0).is_ok());
    }

    #[test]
    fn nv_rates() {
        let r = emitter_rates(&EmitterSpec::nv_center()).unwrap();
        assert!((r.total / 79.4e6 - 1.0).abs() < 0.005);
        let low = emitter_rates(&EmitterSpec::nv_center().with_debye_waller(0.024)).unwrap();
        assert!((low.zpl / 1.91e6 - 1.0).abs() < 0.005);
        let high = emitter_rates(&EmitterSpec::nv_center().with_debye_waller(0.05)).unwrap();
        assert!((high.zpl / 3.97e6 - 1.0).abs() < 0.005);
        assert_eq!(r.zpl + r.sideband, r.total);
    }

    #[test]
    fn lumped_loss_realised() {
        let mut spec = MirrorSpec::new(14, true);
        spec.lumped_loss = 50e-6;
        let k = spec.calibrate_extinction(1.0);
        assert!(k > 0.0);
        let resp = tmm::stack_response(&spec.layers_with_extinction(k), 1.0, 1.46, 637.0);
        let absorbed = 1.0 - resp.reflectance - resp.transmittance;
        assert!((absorbed / 50e-6 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn depth_check() {
        let c = paper_baseline();
        let mut e = EmitterSpec::nv_center();
        assert!(e.check_depth(&c).is_ok());
        e.depth_nm = 800.0;
        assert!(e.check_depth(&c).is_err());
    }
}
