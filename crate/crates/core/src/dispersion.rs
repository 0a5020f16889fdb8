//! Resonance wavelength versus air-gap length, tracked into mode branches.

use rayon::prelude::*;
use serde::Serialize;

use crate::modes;
use crate::stack::{CavityAssembly, Layer};
use crate::tmm::{self, CharMatrix, REFINE_TOL_NM, SCAN_STEP_NM};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeCharacter {
    AirLike,
    DiamondLike,
    Mixed,
}

impl ModeCharacter {
    /// Classification by the ratio of peak field in the air gap to peak
    /// field in the membrane. The ratio runs from 1 (antinode at the
    /// interface, membrane-confined) to n_d (node at the interface,
    /// air-confined); its position on that scale decides the label.
    pub fn from_field_ratio(ratio: f64, n_diamond: f64) -> Self {
        let x = (ratio - 1.0) / (n_diamond - 1.0);
        if x >= AIR_LIKE_LEVEL {
            ModeCharacter::AirLike
        } else if x <= DIAMOND_LIKE_LEVEL {
            ModeCharacter::DiamondLike
        } else {
            ModeCharacter::Mixed
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            ModeCharacter::AirLike => "air-like",
            ModeCharacter::DiamondLike => "diamond-like",
            ModeCharacter::Mixed => "mixed",
        }
    }
}

pub const AIR_LIKE_LEVEL: f64 = 2.0 / 3.0;
pub const DIAMOND_LIKE_LEVEL: f64 = 1.0 / 3.0;

/// Character of the resonance of `cavity` at `wavelength_nm`.
pub fn mode_character(cavity: &CavityAssembly, wavelength_nm: f64) -> ModeCharacter {
    let Some(diamond) = cavity.diamond_layer_index() else {
        return ModeCharacter::AirLike;
    };
    let profile = tmm::field_solution(cavity, wavelength_nm);
    let peak = |idx| profile.max_in_layer(idx).map_or(0.0, |(_, a)| a);
    let ratio = peak(cavity.air_layer_index()) / peak(diamond);
    ModeCharacter::from_field_ratio(ratio, cavity.diamond.n.re)
}

/// Fraction of the mode energy stored in the air gap. For a lossless stack
/// moving one mirror gives dλ/dL = λ/L_eff with L_eff the energy-weighted
/// length, so the fraction is (dλ/dL)·L/λ.
pub fn air_energy_fraction(slope: f64, air_gap_nm: f64, wavelength_nm: f64) -> f64 {
    slope * air_gap_nm / wavelength_nm
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BranchSample {
    pub air_gap_nm: f64,
    pub wavelength_nm: f64,
    /// dλ/dL.
    pub slope: f64,
    pub character: ModeCharacter,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeBranch {
    pub id: usize,
    /// m + n of the Hermite-Gaussian family.
    pub transverse_order: u32,
    pub samples: Vec<BranchSample>,
}

impl ModeBranch {
    /// Sample closest to (L, λ) in the sense of wavelength at the nearest L.
    pub fn nearest(&self, air_gap_nm: f64) -> Option<&BranchSample> {
        self.samples
            .iter()
            .min_by(|a, b| (a.air_gap_nm - air_gap_nm).abs().total_cmp(&(b.air_gap_nm - air_gap_nm).abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersionOptions {
    pub scan_step_nm: f64,
    /// Highest transverse order m + n to add as shifted copies.
    pub max_transverse_order: u32,
}

impl Default for DispersionOptions {
    fn default() -> Self {
        DispersionOptions {
            scan_step_nm: SCAN_STEP_NM,
            max_transverse_order: 0,
        }
    }
}

/// Matrices on either side of the air gap, cached per scan wavelength.
struct SplitStack {
    below: Vec<Layer>,
    above: Vec<Layer>,
    n_in: f64,
    n_out: f64,
    grid: Vec<f64>,
    cached: Vec<(CharMatrix, CharMatrix)>,
}

impl SplitStack {
    fn new(cavity: &CavityAssembly, window: (f64, f64), step: f64) -> Self {
        let mut below = cavity.bottom_layers();
        if cavity.has_diamond() {
            below.push(cavity.diamond.clone());
        }
        let above = cavity.top_layers();
        let grid = tmm::scan_grid(window.0, window.1, step);
        let cached = grid
            .par_iter()
            .map(|&lam| (tmm::stack_matrix(&below, lam), tmm::stack_matrix(&above, lam)))
            .collect();
        SplitStack {
            below,
            above,
            n_in: cavity.bottom_substrate_index(),
            n_out: cavity.top_substrate_index(),
            grid,
            cached,
        }
    }

    fn transmittance(&self, lower: &CharMatrix, upper: &CharMatrix, gap: f64, lam: f64) -> f64 {
        let air = CharMatrix::slab(1.0.into(), gap, lam);
        let m = lower.mul(&air).mul(upper);
        tmm::response_from_matrix(&m, self.n_in, self.n_out, lam).transmittance
    }

    fn transmittance_at(&self, gap: f64, lam: f64) -> f64 {
        let lower = tmm::stack_matrix(&self.below, lam);
        let upper = tmm::stack_matrix(&self.above, lam);
        self.transmittance(&lower, &upper, gap, lam)
    }

    /// Refined resonance wavelengths at one air gap, ascending.
    fn resonances(&self, gap: f64) -> Vec<f64> {
        let values: Vec<f64> = self
            .grid
            .iter()
            .zip(&self.cached)
            .map(|(&lam, (lo, up))| self.transmittance(lo, up, gap, lam))
            .collect();
        tmm::scan_peaks(&values)
            .into_iter()
            .map(|k| {
                tmm::golden_max(self.grid[k - 1], self.grid[k + 1], REFINE_TOL_NM, |lam| {
                    self.transmittance_at(gap, lam)
                })
            })
            .collect()
    }
}

struct Track {
    id: usize,
    points: Vec<(f64, f64)>,
}

impl Track {
    fn predict(&self, gap: f64) -> (f64, f64) {
        let &(l1, w1) = self.points.last().expect("tracks start non-empty");
        let slope = match self.points.len() {
            1 => 0.0,
            n => {
                let (l0, w0) = self.points[n - 2];
                (w1 - w0) / (l1 - l0)
            }
        };
        (w1 + slope * (gap - l1), slope)
    }
}

/// Track resonances over a monotone grid of air gaps.
pub fn dispersion_map(
    cavity: &CavityAssembly,
    air_gaps_nm: &[f64],
    window: (f64, f64),
    opts: DispersionOptions,
) -> Result<Vec<ModeBranch>> {
    if air_gaps_nm.is_empty() {
        return Err(Error::InvalidInput("empty air-gap grid".into()));
    }
    if air_gaps_nm.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("air-gap grid must increase strictly".into()));
    }
    if !(window.0 > 0.0 && window.1 > window.0) {
        return Err(Error::InvalidInput(format!("bad wavelength window {window:?}")));
    }
    for &gap in air_gaps_nm {
        cavity.with_air_gap(gap)?;
    }
    let split = SplitStack::new(cavity, window, opts.scan_step_nm);
    let per_gap: Vec<Vec<f64>> = air_gaps_nm.par_iter().map(|&gap| split.resonances(gap)).collect();

    let mut open: Vec<Track> = Vec::new();
    let mut closed: Vec<Track> = Vec::new();
    let mut next_id = 0;
    for (i, (&gap, cands)) in air_gaps_nm.iter().zip(&per_gap).enumerate() {
        let step = if i > 0 { gap - air_gaps_nm[i - 1] } else { 0.0 };
        let mut taken = vec![false; cands.len()];
        let mut still_open = Vec::with_capacity(open.len());
        // (distance, track index, candidate index), resolved nearest first
        let mut pairs = Vec::new();
        for (t, track) in open.iter().enumerate() {
            let (pred, slope) = track.predict(gap);
            let spacing = (slope.abs() * step).max(opts.scan_step_nm);
            let close: Vec<usize> = (0..cands.len())
                .filter(|&c| (cands[c] - pred).abs() <= 3.0 * spacing)
                .collect();
            if close.len() > 1 {
                return Err(Error::BranchTracking {
                    air_gap_nm: gap,
                    reason: format!(
                        "{} resonances within {:.3} nm of the branch prediction {pred:.4} nm",
                        close.len(),
                        3.0 * spacing
                    ),
                    suggested_step_nm: 0.5 * step,
                });
            }
            for (c, &lam) in cands.iter().enumerate() {
                let neighbour_gap = [c.checked_sub(1).map(|j| lam - cands[j]), cands.get(c + 1).map(|v| v - lam)]
                    .into_iter()
                    .flatten()
                    .fold(f64::INFINITY, f64::min);
                let d = (lam - pred).abs();
                if d < 0.5 * neighbour_gap {
                    pairs.push((d, t, c));
                }
            }
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut matched = vec![None; open.len()];
        for (_, t, c) in pairs {
            if matched[t].is_none() && !taken[c] {
                matched[t] = Some(c);
                taken[c] = true;
            }
        }
        for (track, m) in open.drain(..).zip(matched) {
            match m {
                Some(c) => {
                    let mut track = track;
                    let &(_, last) = track.points.last().expect("non-empty");
                    if cands[c] <= last {
                        return Err(Error::BranchTracking {
                            air_gap_nm: gap,
                            reason: format!("branch {} would run backwards in wavelength", track.id),
                            suggested_step_nm: 0.5 * step,
                        });
                    }
                    track.points.push((gap, cands[c]));
                    still_open.push(track);
                }
                None => closed.push(track),
            }
        }
        for (c, &lam) in cands.iter().enumerate() {
            if !taken[c] {
                still_open.push(Track {
                    id: next_id,
                    points: vec![(gap, lam)],
                });
                next_id += 1;
            }
        }
        open = still_open;
    }
    closed.extend(open);
    closed.sort_by_key(|t| t.id);

    let mut branches: Vec<ModeBranch> = closed
        .into_iter()
        .filter(|t| t.points.len() >= 2)
        .map(|t| ModeBranch {
            id: 0,
            transverse_order: 0,
            samples: with_slopes(cavity, &t.points),
        })
        .collect();
    if branches.is_empty() {
        return Err(Error::NoResonance(format!(
            "no mode branch between {} and {} nm over the air-gap grid",
            window.0, window.1
        )));
    }
    for (id, b) in branches.iter_mut().enumerate() {
        b.id = id;
    }

    if opts.max_transverse_order > 0 {
        let lo = air_gaps_nm[0];
        let hi = air_gaps_nm[air_gaps_nm.len() - 1];
        let fundamentals = branches.clone();
        let mut id = branches.len();
        for order in 1..=opts.max_transverse_order {
            for b in &fundamentals {
                let samples: Vec<BranchSample> = b
                    .samples
                    .iter()
                    .filter_map(|s| {
                        let lg = (s.air_gap_nm + cavity.diamond_thickness_nm()) * 1e-3;
                        let shift = modes::transverse_offsets(cavity.curvature_radius_um, lg, s.wavelength_nm, order)
                            .ok()?[order as usize];
                        let gap = s.air_gap_nm + shift;
                        (gap >= lo && gap <= hi).then_some(BranchSample { air_gap_nm: gap, ..*s })
                    })
                    .collect();
                if samples.len() >= 2 {
                    branches.push(ModeBranch {
                        id,
                        transverse_order: order,
                        samples,
                    });
                    id += 1;
                }
            }
        }
    }
    Ok(branches)
}

/// Centred-difference slopes (one-sided at the ends) and characters.
fn with_slopes(cavity: &CavityAssembly, points: &[(f64, f64)]) -> Vec<BranchSample> {
    let n = points.len();
    (0..n)
        .into_par_iter()
        .map(|i| {
            let (a, b) = (i.saturating_sub(1), (i + 1).min(n - 1));
            let slope = (points[b].1 - points[a].1) / (points[b].0 - points[a].0);
            let (gap, lam) = points[i];
            BranchSample {
                air_gap_nm: gap,
                wavelength_nm: lam,
                slope,
                character: cavity
                    .with_air_gap(gap)
                    .map_or(ModeCharacter::Mixed, |c| mode_character(&c, lam)),
            }
        })
        .collect()
}

/// Uniform grid from `lo` to `hi` inclusive.
pub fn air_gap_grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && hi >= lo) {
        return Err(Error::InvalidInput(format!("bad air-gap grid [{lo}, {hi}] step {step}")));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| lo + k as f64 * step).collect())
}

/// Local dλ/dL of the resonance at `wavelength_nm` by centred differences
/// of the resonance condition at L ± h.
pub fn local_slope(cavity: &CavityAssembly, wavelength_nm: f64, h_nm: f64) -> Result<f64> {
    let gap = cavity.air_gap_nm();
    let find = |g: f64| -> Result<f64> {
        let c = cavity.with_air_gap(g)?;
        let lo = wavelength_nm - 2.0;
        let res = tmm::find_resonances(&c, (lo, wavelength_nm + 2.0))?;
        res.into_iter()
            .map(|r| r.wavelength_nm)
            .min_by(|a, b| (a - wavelength_nm).abs().total_cmp(&(b - wavelength_nm).abs()))
            .ok_or_else(|| Error::NoResonance(format!("no resonance near {wavelength_nm} nm at L = {g} nm")))
    };
    Ok((find(gap + h_nm)? - find(gap - h_nm)?) / (2.0 * h_nm))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stack::{assemble_cavity, MirrorSpec};

    fn air_cavity() -> CavityAssembly {
        assemble_cavity(MirrorSpec::new(20, true), 2.41, 0.0, 955.5, MirrorSpec::new(20, true), 16.0).unwrap()
    }

    #[test]
    fn character_thresholds() {
        assert_eq!(ModeCharacter::from_field_ratio(2.3, 2.41), ModeCharacter::AirLike);
        assert_eq!(ModeCharacter::from_field_ratio(1.1, 2.41), ModeCharacter::DiamondLike);
        assert_eq!(ModeCharacter::from_field_ratio(1.7, 2.41), ModeCharacter::Mixed);
    }

    #[test]
    fn air_cavity_branches_rise() {
        let gaps = air_gap_grid(900.0, 1000.0, 5.0).unwrap();
        let branches = dispersion_map(&air_cavity(), &gaps, (620.0, 655.0), DispersionOptions::default()).unwrap();
        assert!(!branches.is_empty());
        for b in &branches {
            for w in b.samples.windows(2) {
                assert!(w[1].wavelength_nm > w[0].wavelength_nm);
            }
            for s in &b.samples {
                assert!(s.slope > 0.0 && s.slope < 1.0);
            }
        }
    }

    #[test]
    fn rejects_bad_grid() {
        let c = air_cavity();
        assert!(dispersion_map(&c, &[1000.0, 900.0], (620.0, 650.0), DispersionOptions::default()).is_err());
        assert!(dispersion_map(&c, &[], (620.0, 650.0), DispersionOptions::default()).is_err());
    }

    #[test]
    fn transverse_copies_shift_right() {
        let gaps = air_gap_grid(900.0, 1100.0, 5.0).unwrap();
        let opts = DispersionOptions {
            max_transverse_order: 1,
            ..Default::default()
        };
        let branches = dispersion_map(&air_cavity(), &gaps, (620.0, 655.0), opts).unwrap();
        assert!(branches.iter().any(|b| b.transverse_order == 1));
    }
}
