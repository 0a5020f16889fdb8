//! Pulsed second-order autocorrelation by peak-area integration.

use serde::Serialize;

use super::XYSeries;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct G2Options {
    pub pulse_period_ns: f64,
    /// Full integration window centred on each peak.
    pub window_ns: f64,
    /// Peaks at |delay| ≥ this value form the normalisation set. `None`
    /// takes the outer half of the non-zero peaks.
    pub normalization_delay_ns: Option<f64>,
    /// Delay of the zero-delay peak.
    pub zero_delay_ns: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct G2Result {
    /// (peak index k, integrated counts) for peaks at zero_delay + k·period.
    pub areas: Vec<(i64, f64)>,
    pub g2_zero: f64,
    pub normalization_area: f64,
    pub normalization_peaks: Vec<i64>,
}

pub fn g2_pulse_areas(hist: &XYSeries, opts: G2Options) -> Result<G2Result> {
    let (period, window) = (opts.pulse_period_ns, opts.window_ns);
    if !(period > window && window > 0.0) {
        return Err(Error::InvalidInput(format!(
            "need period > window > 0 (period {period} ns, window {window} ns)"
        )));
    }
    if hist.is_empty() {
        return Err(Error::InvalidInput("empty histogram".into()));
    }
    let lo = hist.x[0] - opts.zero_delay_ns;
    let hi = hist.x[hist.len() - 1] - opts.zero_delay_ns;
    let half = 0.5 * window;
    let k_min = ((lo + half) / period).ceil() as i64;
    let k_max = ((hi - half) / period).floor() as i64;
    if k_min > -3 || k_max < 3 {
        return Err(Error::InvalidInput(
            "histogram must span at least three pulse periods on each side of zero delay".into(),
        ));
    }
    let areas: Vec<(i64, f64)> = (k_min..=k_max)
        .map(|k| {
            let c = opts.zero_delay_ns + k as f64 * period;
            let sum = hist
                .x
                .iter()
                .zip(&hist.y)
                .filter(|(x, _)| (**x - c).abs() <= half)
                .map(|(_, y)| *y)
                .sum();
            (k, sum)
        })
        .collect();
    let reach = k_max.min(-k_min);
    let selected: Vec<i64> = match opts.normalization_delay_ns {
        Some(d) => areas
            .iter()
            .map(|a| a.0)
            .filter(|&k| k != 0 && (k as f64 * period).abs() >= d)
            .collect(),
        None => areas
            .iter()
            .map(|a| a.0)
            .filter(|&k| k.abs() > reach / 2)
            .collect(),
    };
    if selected.is_empty() {
        return Err(Error::Degenerate("no peaks in the normalisation set".into()));
    }
    let norm = selected
        .iter()
        .map(|k| areas.iter().find(|a| a.0 == *k).expect("selected from areas").1)
        .sum::<f64>()
        / selected.len() as f64;
    if norm <= 0.0 {
        return Err(Error::Degenerate("normalisation peaks contain no counts".into()));
    }
    let zero = areas.iter().find(|a| a.0 == 0).map_or(0.0, |a| a.1);
    Ok(G2Result {
        areas,
        g2_zero: zero / norm,
        normalization_area: norm,
        normalization_peaks: selected,
    })
}
