//! Seeded synthetic data sets shaped after published fit results. The same
//! seed always yields the same samples.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::fit::{exgaussian, gaussian, lorentzian, voigt, DecayHistogram, GaussianParams, LorentzianParams, VoigtParams, XYSeries};
use crate::{Error, Result};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Resonance line shape for synthetic scans.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum LineShape {
    Lorentzian(LorentzianParams),
    Gaussian(GaussianParams),
    Voigt(VoigtParams),
}

impl LineShape {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            LineShape::Lorentzian(p) => lorentzian(x, p),
            LineShape::Gaussian(p) => gaussian(x, p),
            LineShape::Voigt(p) => voigt(x, p),
        }
    }
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Uniform scan with multiplicative Gaussian noise of relative size
/// `rel_noise`, with matching 1σ errors attached; `seed` is ignored when
/// the noise is zero.
pub fn line_scan(shape: &LineShape, x: &[f64], rel_noise: f64, seed: u64) -> Result<XYSeries> {
    if !(rel_noise >= 0.0) {
        return Err(Error::InvalidInput("noise level must be >= 0".into()));
    }
    let mut r = rng(seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let y = x
        .iter()
        .map(|&xi| {
            let v = shape.eval(xi);
            if rel_noise > 0.0 {
                v * (1.0 + rel_noise * normal.sample(&mut r))
            } else {
                v
            }
        })
        .collect::<Vec<f64>>();
    let y_err = (rel_noise > 0.0).then(|| y.iter().map(|v| (rel_noise * v.abs()).max(f64::MIN_POSITIVE)).collect());
    XYSeries::new(x.to_vec(), y, y_err)
}

/// PL versus air-gap detuning (pm) for a Voigt line with a 60.6 pm
/// Lorentzian and 30 pm Gaussian component.
pub fn zpl2_resonance(seed: u64) -> Result<XYSeries> {
    let shape = LineShape::Voigt(VoigtParams {
        center: 0.0,
        amplitude: 1000.0,
        gaussian_fwhm: 30.0,
        lorentzian_fwhm: 60.6,
        offset: 40.0,
    });
    Ok(line_scan(&shape, &linspace(-400.0, 400.0, 201), 0.02, seed)?.with_units("pm", "arb"))
}

/// Decay rate versus lateral displacement (µm): Gaussian, 0.80 µm FWHM,
/// between the off- and on-resonance rates.
pub fn zpl6_lateral(seed: u64) -> Result<XYSeries> {
    let shape = LineShape::Gaussian(GaussianParams {
        center: 0.0,
        fwhm: 0.80,
        amplitude: 158e6 - 88.2e6,
        offset: 88.2e6,
    });
    Ok(line_scan(&shape, &linspace(-1.5, 1.5, 201), 0.002, seed)?.with_units("um", "per_s"))
}

/// Decay rate versus air-gap detuning (nm): Lorentzian with 0.32 nm FWHM.
pub fn rate_vs_detuning(seed: u64) -> Result<XYSeries> {
    let shape = LineShape::Lorentzian(LorentzianParams {
        center: 0.0,
        fwhm: 0.32,
        amplitude: 158e6 - 88.2e6,
        offset: 88.2e6,
    });
    Ok(line_scan(&shape, &linspace(-1.5, 1.5, 201), 0.002, seed)?.with_units("nm", "per_s"))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecaySpec {
    pub tau_ns: f64,
    pub amplitude: f64,
    pub baseline: f64,
    pub irf_sigma_ns: f64,
    pub irf_center_ns: f64,
    pub bin_ns: f64,
    pub bins: usize,
    pub start_ns: f64,
    /// Fast background decay (amplitude, lifetime in ns).
    pub background: Option<(f64, f64)>,
}

impl DecaySpec {
    /// Excited-state decay of an off-resonant emitter.
    pub fn bulk() -> Self {
        DecaySpec {
            tau_ns: 12.6,
            amplitude: 1e4,
            baseline: 5.0,
            irf_sigma_ns: DecayHistogram::DEFAULT_IRF_SIGMA_NS,
            irf_center_ns: 1.0,
            bin_ns: 0.1,
            bins: 800,
            start_ns: -2.0,
            background: None,
        }
    }

    /// On-resonance decay with a 0.5 ns background component.
    pub fn purcell_enhanced() -> Self {
        DecaySpec {
            tau_ns: 7.06,
            background: Some((3e4, 0.5)),
            ..Self::bulk()
        }
    }

    pub fn expected(&self, t: f64) -> f64 {
        let bg = self
            .background
            .map_or(0.0, |(a, tau)| a * exgaussian(t, tau, self.irf_sigma_ns, self.irf_center_ns));
        self.baseline + self.amplitude * exgaussian(t, self.tau_ns, self.irf_sigma_ns, self.irf_center_ns) + bg
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.bins).map(|i| self.start_ns + (i as f64 + 0.5) * self.bin_ns).collect()
    }
}

/// Photon-counting histogram; `seed = None` gives rounded expectation values.
pub fn decay_histogram(spec: &DecaySpec, seed: Option<u64>, fit_window_start_ns: f64) -> Result<DecayHistogram> {
    if !(spec.tau_ns > 0.0 && spec.bin_ns > 0.0 && spec.amplitude >= 0.0 && spec.baseline >= 0.0) {
        return Err(Error::InvalidInput("decay parameters out of range".into()));
    }
    let t = spec.times();
    let mut r = seed.map(rng);
    let counts = t
        .iter()
        .map(|&ti| {
            let mu = spec.expected(ti);
            match r.as_mut() {
                Some(r) => poisson(mu, r),
                None => mu.round() as u64,
            }
        })
        .collect();
    Ok(DecayHistogram::new(t, counts, spec.irf_sigma_ns, fit_window_start_ns)?.with_irf_center(spec.irf_center_ns))
}

fn poisson(mu: f64, r: &mut ChaCha8Rng) -> u64 {
    if mu <= 0.0 {
        0
    } else {
        Poisson::new(mu).expect("positive mean").sample(r) as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct G2Spec {
    pub pulse_period_ns: f64,
    /// Number of side peaks on each side of zero delay.
    pub side_peaks: usize,
    /// Mean counts in one uncorrelated side peak.
    pub peak_area: f64,
    /// Zero-delay area relative to the side peaks.
    pub g2_zero: f64,
    /// Peak shape: two-sided exponential with this lifetime.
    pub peak_tau_ns: f64,
    pub bin_ns: f64,
}

impl G2Spec {
    pub fn single_emitter() -> Self {
        G2Spec {
            pulse_period_ns: 50.0,
            side_peaks: 8,
            peak_area: 2e4,
            g2_zero: 0.27,
            peak_tau_ns: 2.0,
            bin_ns: 0.25,
        }
    }

    pub fn poissonian() -> Self {
        G2Spec {
            g2_zero: 1.0,
            ..Self::single_emitter()
        }
    }
}

/// Start-stop coincidence histogram around zero delay.
pub fn g2_histogram(spec: &G2Spec, seed: Option<u64>) -> Result<XYSeries> {
    if !(spec.pulse_period_ns > 0.0 && spec.bin_ns > 0.0 && spec.peak_tau_ns > 0.0 && spec.g2_zero >= 0.0) {
        return Err(Error::InvalidInput("g2 parameters out of range".into()));
    }
    let span = (spec.side_peaks as f64 + 0.5) * spec.pulse_period_ns;
    let n = (2.0 * span / spec.bin_ns).round() as usize;
    let x: Vec<f64> = (0..n).map(|i| -span + (i as f64 + 0.5) * spec.bin_ns).collect();
    let shape = |dt: f64| (-dt.abs() / spec.peak_tau_ns).exp() * spec.bin_ns / (2.0 * spec.peak_tau_ns);
    let mut r = seed.map(rng);
    let y = x
        .iter()
        .map(|&t| {
            let k = (t / spec.pulse_period_ns).round();
            let weight = if k == 0.0 { spec.g2_zero } else { 1.0 };
            let mu = spec.peak_area * weight * shape(t - k * spec.pulse_period_ns);
            match r.as_mut() {
                Some(r) => poisson(mu, r) as f64,
                None => mu,
            }
        })
        .collect();
    Ok(XYSeries::new(x, y, None)?.with_units("ns", "counts"))
}
