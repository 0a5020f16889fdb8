use serde::Serialize;

use crate::{Error, Result};

/// Paired samples with strictly increasing abscissa.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct XYSeries {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub y_err: Option<Vec<f64>>,
    pub x_unit: String,
    pub y_unit: String,
}

impl XYSeries {
    pub fn new(x: Vec<f64>, y: Vec<f64>, y_err: Option<Vec<f64>>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::InvalidInput(format!(
                "x has {} samples but y has {}",
                x.len(),
                y.len()
            )));
        }
        if let Some(e) = &y_err {
            if e.len() != y.len() {
                return Err(Error::InvalidInput("y_err length differs from y".into()));
            }
            if e.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                return Err(Error::InvalidInput("y_err entries must be positive".into()));
            }
        }
        if x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite sample".into()));
        }
        if x.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("x must be strictly increasing".into()));
        }
        Ok(XYSeries {
            x,
            y,
            y_err,
            x_unit: String::new(),
            y_unit: String::new(),
        })
    }

    pub fn with_units(mut self, x_unit: impl Into<String>, y_unit: impl Into<String>) -> Self {
        self.x_unit = x_unit.into();
        self.y_unit = y_unit.into();
        self
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Least-squares weights, 1/σ² when errors are given.
    pub fn weights(&self) -> Vec<f64> {
        match &self.y_err {
            Some(e) => e.iter().map(|s| 1.0 / (s * s)).collect(),
            None => vec![1.0; self.len()],
        }
    }
}

/// Binned photon-arrival-time histogram.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayHistogram {
    /// Bin centres (ns), uniformly spaced.
    pub time_ns: Vec<f64>,
    pub counts: Vec<u64>,
    pub irf_sigma_ns: f64,
    pub fit_window_start_ns: f64,
    /// Centre of the Gaussian instrument response.
    pub irf_center_ns: f64,
}

impl DecayHistogram {
    pub const DEFAULT_IRF_SIGMA_NS: f64 = 0.2;

    pub fn new(time_ns: Vec<f64>, counts: Vec<u64>, irf_sigma_ns: f64, fit_window_start_ns: f64) -> Result<Self> {
        if time_ns.len() != counts.len() || time_ns.len() < 2 {
            return Err(Error::InvalidInput("histogram needs ≥2 bins with matching counts".into()));
        }
        let width = time_ns[1] - time_ns[0];
        if !(width > 0.0) {
            return Err(Error::InvalidInput("time bins must increase".into()));
        }
        let uniform = time_ns
            .windows(2)
            .all(|w| ((w[1] - w[0]) - width).abs() <= 1e-6 * width);
        if !uniform {
            return Err(Error::InvalidInput("time bins must be uniformly spaced".into()));
        }
        if !(irf_sigma_ns >= 0.0 && irf_sigma_ns.is_finite()) {
            return Err(Error::InvalidInput("irf_sigma must be ≥ 0".into()));
        }
        Ok(DecayHistogram {
            time_ns,
            counts,
            irf_sigma_ns,
            fit_window_start_ns,
            irf_center_ns: 0.0,
        })
    }

    pub fn with_irf_center(mut self, center_ns: f64) -> Self {
        self.irf_center_ns = center_ns;
        self
    }

    pub fn bin_width_ns(&self) -> f64 {
        self.time_ns[1] - self.time_ns[0]
    }

    /// Merge every `factor` consecutive bins (trailing partial group dropped).
    pub fn rebin(&self, factor: usize) -> Result<Self> {
        if factor == 0 || factor > self.counts.len() / 2 {
            return Err(Error::InvalidInput(format!("cannot rebin by {factor}")));
        }
        let groups = self.counts.len() / factor;
        let time_ns = (0..groups)
            .map(|g| self.time_ns[g * factor..(g + 1) * factor].iter().sum::<f64>() / factor as f64)
            .collect();
        let counts = (0..groups)
            .map(|g| self.counts[g * factor..(g + 1) * factor].iter().sum())
            .collect();
        Ok(DecayHistogram {
            time_ns,
            counts,
            ..self.clone()
        })
    }
}
