//! Mono-exponential decay convolved with a Gaussian instrument response.

use std::f64::consts::SQRT_2;

use super::faddeeva::exp_erfc;
use super::lm::{self, Bounds, LmOptions};
use super::{DecayHistogram, FitResult};
use crate::{Error, Result};

/// Unit-amplitude exponential (lifetime `tau`) convolved with a normalised
/// Gaussian of standard deviation `sigma` centred on `center`.
pub fn exgaussian(t: f64, tau: f64, sigma: f64, center: f64) -> f64 {
    let s = t - center;
    if sigma == 0.0 {
        return if s > 0.0 {
            (-s / tau).exp()
        } else if s == 0.0 {
            0.5
        } else {
            0.0
        };
    }
    let a = sigma * sigma / (2.0 * tau * tau) - s / tau;
    let b = (sigma / tau - s / sigma) / SQRT_2;
    0.5 * exp_erfc(a, b)
}

/// Poisson-weighted fit of `baseline + A·exgaussian(t)` to the bins at or
/// after the fit window start. Parameters: `tau_ns`, `amplitude`,
/// `baseline`.
pub fn fit_lifetime(h: &DecayHistogram) -> Result<FitResult> {
    let idx: Vec<usize> = (0..h.time_ns.len())
        .filter(|&i| h.time_ns[i] >= h.fit_window_start_ns)
        .collect();
    if idx.len() < 4 {
        return Err(Error::InvalidInput(format!(
            "fit window starting at {} ns leaves {} bins",
            h.fit_window_start_ns,
            idx.len()
        )));
    }
    let t: Vec<f64> = idx.iter().map(|&i| h.time_ns[i]).collect();
    let y: Vec<f64> = idx.iter().map(|&i| h.counts[i] as f64).collect();
    if y.iter().all(|&v| v == 0.0) {
        return Err(Error::InvalidInput("no counts inside the fit window".into()));
    }
    let sqrt_w: Vec<f64> = y.iter().map(|&v| 1.0 / v.max(1.0).sqrt()).collect();
    let n = t.len();
    let span = t[n - 1] - t[0];
    let (sigma, center) = (h.irf_sigma_ns, h.irf_center_ns);

    // Starting point: tail mean for the baseline, log-linear slope for tau,
    // linear least squares for the amplitude.
    let tail = (n / 10).max(1);
    let baseline0 = y[n - tail..].iter().sum::<f64>() / tail as f64;
    let floor = baseline0 + 3.0 * baseline0.max(1.0).sqrt();
    let pts: Vec<(f64, f64)> = t
        .iter()
        .zip(&y)
        .filter(|(_, &v)| v > floor)
        .map(|(&ti, &v)| (ti, (v - baseline0).ln()))
        .collect();
    let mut tau0 = span / 3.0;
    if pts.len() >= 3 {
        let m = pts.len() as f64;
        let (sx, sy) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
        let (mx, my) = (sx / m, sy / m);
        let (sxx, sxy) = pts
            .iter()
            .fold((0.0, 0.0), |a, p| (a.0 + (p.0 - mx).powi(2), a.1 + (p.0 - mx) * (p.1 - my)));
        let slope = sxy / sxx;
        if slope < 0.0 {
            tau0 = (-1.0 / slope).clamp(h.bin_width_ns(), 10.0 * span);
        }
    }
    let shape0: Vec<f64> = t.iter().map(|&ti| exgaussian(ti, tau0, sigma, center)).collect();
    let num: f64 = shape0.iter().zip(&y).map(|(f, v)| f * (v - baseline0)).sum();
    let den: f64 = shape0.iter().map(|f| f * f).sum();
    let amp0 = if den > 0.0 { (num / den).max(1.0) } else { 1.0 };

    let tau_lo = h.bin_width_ns() / 100.0;
    let tau_hi = 1e3 * span.max(h.bin_width_ns());
    let bounds = Bounds {
        lower: vec![tau_lo, 0.0, f64::NEG_INFINITY],
        upper: vec![tau_hi, f64::INFINITY, f64::INFINITY],
    };
    let model = |p: &[f64], ti: f64| p[2] + p[1] * exgaussian(ti, p[0], sigma, center);
    let out = lm::minimize(
        |p, r| {
            for i in 0..n {
                r[i] = (model(p, t[i]) - y[i]) * sqrt_w[i];
            }
        },
        n,
        &[tau0, amp0, baseline0],
        &bounds,
        LmOptions::default(),
    );

    let mut warnings = Vec::new();
    let mut converged = out.converged;
    if !converged {
        warnings.push(format!("no convergence after {} iterations", out.iterations));
    }
    if out.params[0] <= tau_lo || out.params[0] >= tau_hi {
        converged = false;
        warnings.push(format!("lifetime hit its bound ({} ns)", out.params[0]));
    }
    let uncertainties = match &out.covariance {
        Some(c) => (0..3).map(|i| c[(i, i)].max(0.0).sqrt()).collect(),
        None => vec![f64::INFINITY; 3],
    };
    Ok(FitResult {
        model: "exgaussian".into(),
        names: vec!["tau_ns".into(), "amplitude".into(), "baseline".into()],
        residuals: (0..n).map(|i| y[i] - model(&out.params, t[i])).collect(),
        params: out.params,
        uncertainties,
        reduced_chi2: out.cost / n.saturating_sub(3).max(1) as f64,
        converged,
        iterations: out.iterations,
        degenerate: out.covariance.is_none(),
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn histogram(tau: f64, sigma: f64, start: f64) -> DecayHistogram {
        let t: Vec<f64> = (0..1000).map(|i| -5.0 + 0.05 * i as f64).collect();
        let counts = t
            .iter()
            .map(|&ti| (10.0 + 1.0e5 * exgaussian(ti, tau, sigma, 0.0)).round() as u64)
            .collect();
        DecayHistogram::new(t, counts, sigma, start).unwrap()
    }

    #[test]
    fn delta_irf_limit_is_plain_exponential() {
        for &t in &[0.3, 1.0, 7.0] {
            let a = exgaussian(t, 2.0, 1e-9, 0.0);
            assert!((a - (-t / 2.0_f64).exp()).abs() < 1e-9);
        }
        assert_eq!(exgaussian(-1.0, 2.0, 0.0, 0.0), 0.0);
    }

    #[test]
    fn exgaussian_integrates_to_tau() {
        let (tau, sigma) = (3.0, 0.4);
        let h = 1e-3;
        let area: f64 = (0..100_000).map(|i| exgaussian(-5.0 + h * i as f64, tau, sigma, 0.0) * h).sum();
        assert!((area / tau - 1.0).abs() < 1e-4);
    }

    #[test]
    fn recovers_lifetime() {
        let fit = fit_lifetime(&histogram(12.6, 0.2, 0.0)).unwrap();
        assert!(fit.converged);
        assert!((fit.get("tau_ns").unwrap() / 12.6 - 1.0).abs() < 1e-3);
    }

    #[test]
    fn empty_window_rejected() {
        assert!(fit_lifetime(&histogram(12.6, 0.2, 100.0)).is_err());
    }
}
