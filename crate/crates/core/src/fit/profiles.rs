//! Lorentzian, Gaussian and Voigt line-shape fits.

use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::faddeeva::faddeeva;
use super::lm::{self, Bounds, LmOptions};
use super::{FitResult, XYSeries};
use crate::{Error, Result};

const MIN_POINTS: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LorentzianParams {
    pub center: f64,
    pub fwhm: f64,
    pub amplitude: f64,
    pub offset: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianParams {
    pub center: f64,
    pub fwhm: f64,
    pub amplitude: f64,
    pub offset: f64,
}

/// Peak-height parameterised Voigt line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VoigtParams {
    pub center: f64,
    pub amplitude: f64,
    pub gaussian_fwhm: f64,
    pub lorentzian_fwhm: f64,
    pub offset: f64,
}

pub fn lorentzian(x: f64, p: &LorentzianParams) -> f64 {
    let u = 2.0 * (x - p.center) / p.fwhm;
    p.offset + p.amplitude / (1.0 + u * u)
}

pub fn gaussian(x: f64, p: &GaussianParams) -> f64 {
    let u = (x - p.center) / p.fwhm;
    p.offset + p.amplitude * (-4.0 * LN_2 * u * u).exp()
}

/// Area-normalised Voigt profile: Gaussian of standard deviation `sigma`
/// convolved with a Lorentzian of half width `gamma`.
pub fn voigt_profile(x: f64, sigma: f64, gamma: f64) -> f64 {
    if sigma == 0.0 {
        return gamma / (PI * (x * x + gamma * gamma));
    }
    let z = Complex64::new(x, gamma) / (sigma * 2f64.sqrt());
    faddeeva(z).re / (sigma * (2.0 * PI).sqrt())
}

/// Voigt shape normalised to 1 at the centre.
fn voigt_unit(dx: f64, gaussian_fwhm: f64, lorentzian_fwhm: f64) -> f64 {
    let sigma = gaussian_fwhm.abs() / (2.0 * (2.0 * LN_2).sqrt());
    let gamma = lorentzian_fwhm.abs() / 2.0;
    if sigma <= 1e-9 * gamma {
        return gamma * gamma / (dx * dx + gamma * gamma);
    }
    let s = sigma * 2f64.sqrt();
    faddeeva(Complex64::new(dx / s, gamma / s)).re / faddeeva(Complex64::new(0.0, gamma / s)).re
}

pub fn voigt(x: f64, p: &VoigtParams) -> f64 {
    p.offset + p.amplitude * voigt_unit(x - p.center, p.gaussian_fwhm, p.lorentzian_fwhm)
}

#[derive(Clone, Copy, PartialEq)]
enum Kind {
    Center,
    Width,
    Height,
}

/// Data mapped to x' = (x − x_mid)/x_scale, y' = y/y_scale so the optimiser
/// sees O(1) numbers whatever the units.
struct Scaled {
    x_mid: f64,
    x_scale: f64,
    y_scale: f64,
    x: Vec<f64>,
    y: Vec<f64>,
    sqrt_w: Vec<f64>,
}

impl Scaled {
    fn new(data: &XYSeries) -> Self {
        let (lo, hi) = (data.x[0], data.x[data.len() - 1]);
        let x_mid = 0.5 * (lo + hi);
        let x_scale = 0.5 * (hi - lo);
        let y_scale = data.y.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let y_scale = if y_scale > 0.0 { y_scale } else { 1.0 };
        let sqrt_w = match &data.y_err {
            Some(e) => e.iter().map(|s| y_scale / s).collect(),
            None => vec![1.0; data.len()],
        };
        Scaled {
            x_mid,
            x_scale,
            y_scale,
            x: data.x.iter().map(|x| (x - x_mid) / x_scale).collect(),
            y: data.y.iter().map(|y| y / y_scale).collect(),
            sqrt_w,
        }
    }

    fn to_scaled(&self, kinds: &[Kind], p: &[f64]) -> Vec<f64> {
        kinds
            .iter()
            .zip(p)
            .map(|(k, v)| match k {
                Kind::Center => (v - self.x_mid) / self.x_scale,
                Kind::Width => v / self.x_scale,
                Kind::Height => v / self.y_scale,
            })
            .collect()
    }

    fn from_scaled(&self, kinds: &[Kind], p: &[f64]) -> Vec<f64> {
        kinds
            .iter()
            .zip(p)
            .map(|(k, v)| match k {
                Kind::Center => self.x_mid + v * self.x_scale,
                Kind::Width => v.abs() * self.x_scale,
                Kind::Height => v * self.y_scale,
            })
            .collect()
    }

    fn factor(&self, k: Kind) -> f64 {
        match k {
            Kind::Center | Kind::Width => self.x_scale,
            Kind::Height => self.y_scale,
        }
    }
}

/// Moment-style starting point: (centre, half-maximum width, height, floor).
fn peak_moments(data: &XYSeries) -> (f64, f64, f64, f64) {
    let n = data.len();
    let (imax, &ymax) = data
        .y
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty");
    let ymin = data.y.iter().cloned().fold(f64::INFINITY, f64::min);
    let half = ymin + 0.5 * (ymax - ymin);
    let crossing = |range: &mut dyn Iterator<Item = usize>, step: isize| {
        for i in range {
            if data.y[i] < half {
                let j = (i as isize - step) as usize;
                let (x0, y0, x1, y1) = (data.x[i], data.y[i], data.x[j], data.y[j]);
                return x0 + (half - y0) * (x1 - x0) / (y1 - y0);
            }
        }
        if step > 0 {
            data.x[0]
        } else {
            data.x[n - 1]
        }
    };
    let left = crossing(&mut (0..imax).rev(), -1);
    let right = crossing(&mut (imax + 1..n), 1);
    let width = (right - left).max(data.x[1] - data.x[0]);
    (data.x[imax], width, ymax - ymin, ymin)
}

fn check_points(data: &XYSeries) -> Result<()> {
    if data.len() < MIN_POINTS {
        return Err(Error::InvalidInput(format!(
            "need at least {MIN_POINTS} points, got {}",
            data.len()
        )));
    }
    Ok(())
}

fn is_flat(data: &XYSeries) -> bool {
    let ymax = data.y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let ymin = data.y.iter().cloned().fold(f64::INFINITY, f64::min);
    ymax - ymin <= 1e-12 * ymax.abs().max(ymin.abs()).max(f64::MIN_POSITIVE)
}

fn flat_result(model: &str, names: &[&str], kinds: &[Kind], data: &XYSeries) -> FitResult {
    let mean = data.y.iter().sum::<f64>() / data.len() as f64;
    let mid = 0.5 * (data.x[0] + data.x[data.len() - 1]);
    let span = data.x[data.len() - 1] - data.x[0];
    let params: Vec<f64> = names
        .iter()
        .zip(kinds)
        .map(|(name, k)| match (k, *name) {
            (Kind::Center, _) => mid,
            (Kind::Width, _) => span,
            (Kind::Height, "offset") => mean,
            (Kind::Height, _) => 0.0,
        })
        .collect();
    let uncertainties = kinds
        .iter()
        .map(|k| if *k == Kind::Height { 0.0 } else { f64::INFINITY })
        .collect();
    FitResult {
        model: model.to_string(),
        names: names.iter().map(|s| s.to_string()).collect(),
        params,
        uncertainties,
        reduced_chi2: 0.0,
        converged: true,
        iterations: 0,
        residuals: data.y.iter().map(|y| y - mean).collect(),
        degenerate: true,
        warnings: vec!["data are flat: amplitude is zero and the line shape is undetermined".into()],
    }
}

fn run(
    model: &str,
    names: &[&str],
    kinds: &[Kind],
    data: &XYSeries,
    init: &[f64],
    shape: impl Fn(&[f64], f64) -> f64,
) -> FitResult {
    let sc = Scaled::new(data);
    let p0 = sc.to_scaled(kinds, init);
    let n = data.len();
    let out = lm::minimize(
        |p, r| {
            for i in 0..n {
                r[i] = (shape(p, sc.x[i]) - sc.y[i]) * sc.sqrt_w[i];
            }
        },
        n,
        &p0,
        &Bounds::default(),
        LmOptions::default(),
    );
    let params = sc.from_scaled(kinds, &out.params);
    let uncertainties = match &out.covariance {
        Some(c) => kinds
            .iter()
            .enumerate()
            .map(|(i, k)| c[(i, i)].max(0.0).sqrt() * sc.factor(*k))
            .collect(),
        None => vec![f64::INFINITY; kinds.len()],
    };
    let dof = n.saturating_sub(kinds.len()).max(1) as f64;
    let chi2 = if data.y_err.is_some() {
        out.cost
    } else {
        out.cost * sc.y_scale * sc.y_scale
    };
    let residuals = (0..n)
        .map(|i| data.y[i] - shape(&out.params, sc.x[i]) * sc.y_scale)
        .collect();
    let mut warnings = Vec::new();
    if !out.converged {
        warnings.push(format!("no convergence after {} iterations", out.iterations));
    }
    FitResult {
        model: model.to_string(),
        names: names.iter().map(|s| s.to_string()).collect(),
        params,
        uncertainties,
        reduced_chi2: chi2 / dof,
        converged: out.converged,
        iterations: out.iterations,
        residuals,
        degenerate: out.covariance.is_none(),
        warnings,
    }
}

const LORENTZ_NAMES: [&str; 4] = ["center", "fwhm", "amplitude", "offset"];
const PEAK_KINDS: [Kind; 4] = [Kind::Center, Kind::Width, Kind::Height, Kind::Height];

/// Lorentzian fit y = offset + A/(1 + (2(x − x₀)/w)²).
pub fn fit_lorentzian(data: &XYSeries) -> Result<FitResult> {
    check_points(data)?;
    let (center, fwhm, amplitude, offset) = peak_moments(data);
    fit_lorentzian_from(
        data,
        LorentzianParams {
            center,
            fwhm,
            amplitude,
            offset,
        },
    )
}

pub fn fit_lorentzian_from(data: &XYSeries, init: LorentzianParams) -> Result<FitResult> {
    check_points(data)?;
    if is_flat(data) {
        return Ok(flat_result("lorentzian", &LORENTZ_NAMES, &PEAK_KINDS, data));
    }
    Ok(run(
        "lorentzian",
        &LORENTZ_NAMES,
        &PEAK_KINDS,
        data,
        &[init.center, init.fwhm, init.amplitude, init.offset],
        |p, x| {
            let u = 2.0 * (x - p[0]) / p[1];
            p[3] + p[2] / (1.0 + u * u)
        },
    ))
}

/// Gaussian fit y = offset + A·exp(−4 ln2 (x − x₀)²/w²).
pub fn fit_gaussian(data: &XYSeries) -> Result<FitResult> {
    check_points(data)?;
    let (center, fwhm, amplitude, offset) = peak_moments(data);
    fit_gaussian_from(
        data,
        GaussianParams {
            center,
            fwhm,
            amplitude,
            offset,
        },
    )
}

pub fn fit_gaussian_from(data: &XYSeries, init: GaussianParams) -> Result<FitResult> {
    check_points(data)?;
    if is_flat(data) {
        return Ok(flat_result("gaussian", &LORENTZ_NAMES, &PEAK_KINDS, data));
    }
    Ok(run(
        "gaussian",
        &LORENTZ_NAMES,
        &PEAK_KINDS,
        data,
        &[init.center, init.fwhm, init.amplitude, init.offset],
        |p, x| {
            let u = (x - p[0]) / p[1];
            p[3] + p[2] * (-4.0 * LN_2 * u * u).exp()
        },
    ))
}

const VOIGT_NAMES: [&str; 5] = ["center", "amplitude", "gaussian_fwhm", "lorentzian_fwhm", "offset"];
const VOIGT_KINDS: [Kind; 5] = [Kind::Center, Kind::Height, Kind::Width, Kind::Width, Kind::Height];

/// Voigt fit with separate Gaussian and Lorentzian FWHM.
pub fn fit_voigt(data: &XYSeries) -> Result<FitResult> {
    check_points(data)?;
    let (center, fwhm, amplitude, offset) = peak_moments(data);
    fit_voigt_from(
        data,
        VoigtParams {
            center,
            amplitude,
            gaussian_fwhm: 0.5 * fwhm,
            lorentzian_fwhm: 0.6 * fwhm,
            offset,
        },
    )
}

pub fn fit_voigt_from(data: &XYSeries, init: VoigtParams) -> Result<FitResult> {
    check_points(data)?;
    if is_flat(data) {
        return Ok(flat_result("voigt", &VOIGT_NAMES, &VOIGT_KINDS, data));
    }
    let mut res = run(
        "voigt",
        &VOIGT_NAMES,
        &VOIGT_KINDS,
        data,
        &[
            init.center,
            init.amplitude,
            init.gaussian_fwhm,
            init.lorentzian_fwhm,
            init.offset,
        ],
        |p, x| p[4] + p[1] * voigt_unit(x - p[0], p[2], p[3]),
    );
    let (gw, lw) = (res.params[2], res.params[3]);
    if gw < 1e-3 * lw {
        res.warnings
            .push("Gaussian width consistent with zero: line is Lorentzian".into());
    }
    Ok(res)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(x: Vec<f64>, f: impl Fn(f64) -> f64) -> XYSeries {
        let y = x.iter().map(|&v| f(v)).collect();
        XYSeries::new(x, y, None).unwrap()
    }

    fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn voigt_reference_value() {
        assert!((voigt_profile(0.0, 0.5, 0.5) - 0.417_418_561_040_735_44).abs() < 1e-9);
    }

    #[test]
    fn voigt_limits() {
        let x = 0.37;
        let lor = voigt_profile(x, 0.0, 0.2);
        assert!((voigt_profile(x, 1e-7, 0.2) - lor).abs() < 1e-6 * lor);
        let s: f64 = 0.3;
        let g = (-x * x / (2.0 * s * s)).exp() / (s * (2.0 * PI).sqrt());
        assert!((voigt_profile(x, s, 1e-12) - g).abs() < 1e-9);
    }

    #[test]
    fn lorentzian_round_trip() {
        let truth = LorentzianParams {
            center: 0.11,
            fwhm: 0.32,
            amplitude: 5.0e6,
            offset: 1.0e5,
        };
        let data = series(grid(-1.5, 1.5, 121), |x| lorentzian(x, &truth));
        let fit = fit_lorentzian(&data).unwrap();
        assert!(fit.converged);
        assert!((fit.get("fwhm").unwrap() / 0.32 - 1.0).abs() < 1e-8);
        assert!((fit.get("center").unwrap() - 0.11).abs() < 1e-9);
    }

    #[test]
    fn symmetric_data_centred() {
        let truth = LorentzianParams {
            center: 0.0,
            fwhm: 0.5,
            amplitude: 1.0,
            offset: 0.0,
        };
        let data = series(grid(-2.0, 2.0, 81), |x| lorentzian(x, &truth) + 0.01 * (3.0 * x * x).cos());
        let fit = fit_lorentzian(&data).unwrap();
        assert!(fit.get("center").unwrap().abs() < 1e-10);
    }

    #[test]
    fn constant_data_degenerate() {
        let data = series(grid(0.0, 1.0, 20), |_| 3.0);
        for fit in [
            fit_lorentzian(&data).unwrap(),
            fit_gaussian(&data).unwrap(),
            fit_voigt(&data).unwrap(),
        ] {
            assert!(fit.degenerate);
            assert_eq!(fit.get("amplitude"), Some(0.0));
        }
    }

    #[test]
    fn too_few_points() {
        let data = series(grid(0.0, 1.0, 6), |x| x);
        assert!(fit_gaussian(&data).is_err());
    }

    #[test]
    fn gaussian_round_trip() {
        let truth = GaussianParams {
            center: -0.2,
            fwhm: 0.80,
            amplitude: 2.0,
            offset: 0.3,
        };
        let data = series(grid(-3.0, 3.0, 61), |x| gaussian(x, &truth));
        let fit = fit_gaussian(&data).unwrap();
        assert!((fit.get("fwhm").unwrap() / 0.8 - 1.0).abs() < 1e-8);
    }

    #[test]
    fn voigt_round_trip() {
        let truth = VoigtParams {
            center: 1960.0,
            amplitude: 1.0,
            gaussian_fwhm: 0.030,
            lorentzian_fwhm: 0.0606,
            offset: 0.02,
        };
        let data = series(grid(1959.6, 1960.4, 201), |x| voigt(x, &truth));
        let fit = fit_voigt(&data).unwrap();
        assert!(fit.converged);
        assert!((fit.get("lorentzian_fwhm").unwrap() / 0.0606 - 1.0).abs() < 1e-6);
        assert!((fit.get("gaussian_fwhm").unwrap() / 0.030 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn voigt_collapses_to_lorentzian() {
        let truth = LorentzianParams {
            center: 0.0,
            fwhm: 0.0606,
            amplitude: 1.0,
            offset: 0.0,
        };
        let data = series(grid(-0.4, 0.4, 201), |x| lorentzian(x, &truth));
        let fit = fit_voigt(&data).unwrap();
        let lw = fit.get("lorentzian_fwhm").unwrap();
        assert!((lw / 0.0606 - 1.0).abs() < 1e-4);
        assert!(fit.get("gaussian_fwhm").unwrap() < 1e-3 * lw);
    }
}
