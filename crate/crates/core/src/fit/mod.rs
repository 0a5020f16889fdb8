//! Nonlinear least-squares fitting of resonance profiles, fluorescence
//! decays and pulsed autocorrelation histograms.

mod faddeeva;
mod g2;
mod lifetime;
pub mod lm;
mod profiles;
mod series;

use serde::Serialize;

pub use faddeeva::{erfc, erfcx, exp_erfc, faddeeva};
pub use g2::{g2_pulse_areas, G2Options, G2Result};
pub use lifetime::{exgaussian, fit_lifetime};
pub use profiles::{
    fit_gaussian, fit_gaussian_from, fit_lorentzian, fit_lorentzian_from, fit_voigt, fit_voigt_from, gaussian,
    lorentzian, voigt, voigt_profile, GaussianParams, LorentzianParams, VoigtParams,
};
pub use series::{DecayHistogram, XYSeries};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub model: String,
    pub names: Vec<String>,
    pub params: Vec<f64>,
    /// 1σ standard errors; infinite when the parameter is not determined.
    pub uncertainties: Vec<f64>,
    pub reduced_chi2: f64,
    pub converged: bool,
    pub iterations: usize,
    pub residuals: Vec<f64>,
    pub degenerate: bool,
    pub warnings: Vec<String>,
}

impl FitResult {
    fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.index(name).map(|i| self.params[i])
    }

    pub fn uncertainty(&self, name: &str) -> Option<f64> {
        self.index(name).map(|i| self.uncertainties[i])
    }
}
