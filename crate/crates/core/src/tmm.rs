//! Normal-incidence transfer-matrix solver.
//!
//! Uses the (E, H) characteristic-matrix formalism: for a layer of index n
//! and thickness d at vacuum wavelength λ, with phase δ = 2πnd/λ,
//!
//! ```text
//! [E_left]   [ cos δ      i sin δ / n ] [E_right]
//! [H_left] = [ i n sin δ  cos δ       ] [H_right]
//! ```
//!
//! where H is expressed in units of E·Y₀ so that a forward plane wave has
//! H = nE. This form belongs to the exp(i(ωt − kz)) sign convention, in which
//! an absorbing medium has index n − iκ; layers store n + iκ, so the
//! conjugate enters the matrices.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::fit;
use crate::stack::{CavityAssembly, Layer};
use crate::{Error, Result};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Transmission scan step used by the resonance search (1 pm).
pub const SCAN_STEP_NM: f64 = 1e-3;
/// Golden-section refinement target.
pub const REFINE_TOL_NM: f64 = 1e-6;
/// Minimum peak-to-valley transmission ratio for a local maximum to count
/// as a resonance.
const MIN_CONTRAST: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharMatrix(pub [[Complex64; 2]; 2]);

impl CharMatrix {
    pub const IDENTITY: CharMatrix = CharMatrix([[ONE, ZERO], [ZERO, ONE]]);

    /// Matrix of a homogeneous slab with complex index `n`, thickness `d_nm`.
    pub fn slab(n: Complex64, d_nm: f64, wavelength_nm: f64) -> Self {
        let delta = n * (2.0 * PI * d_nm / wavelength_nm);
        let (c, s) = (delta.cos(), delta.sin());
        CharMatrix([[c, I * s / n], [I * n * s, c]])
    }

    pub fn mul(&self, rhs: &CharMatrix) -> CharMatrix {
        let a = &self.0;
        let b = &rhs.0;
        CharMatrix([
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        ])
    }

    pub fn apply(&self, v: [Complex64; 2]) -> [Complex64; 2] {
        let m = &self.0;
        [
            m[0][0] * v[0] + m[0][1] * v[1],
            m[1][0] * v[0] + m[1][1] * v[1],
        ]
    }

    pub fn det(&self) -> Complex64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }
}

pub fn characteristic_matrix(layer: &Layer, wavelength_nm: f64) -> CharMatrix {
    CharMatrix::slab(layer.n.conj(), layer.thickness_nm, wavelength_nm)
}

/// Ordered product of the layer matrices (first layer on the left).
pub fn stack_matrix(layers: &[Layer], wavelength_nm: f64) -> CharMatrix {
    layers.iter().fold(CharMatrix::IDENTITY, |acc, l| {
        acc.mul(&characteristic_matrix(l, wavelength_nm))
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StackResponse {
    pub wavelength_nm: f64,
    pub r: Complex64,
    pub t: Complex64,
    pub reflectance: f64,
    pub transmittance: f64,
}

/// Response of a composed matrix between real ambient indices.
pub fn response_from_matrix(m: &CharMatrix, n_in: f64, n_out: f64, wavelength_nm: f64) -> StackResponse {
    let [b, c] = m.apply([ONE, Complex64::new(n_out, 0.0)]);
    let denom = b * n_in + c;
    let r = (b * n_in - c) / denom;
    let t = Complex64::new(2.0 * n_in, 0.0) / denom;
    StackResponse {
        wavelength_nm,
        r,
        t,
        reflectance: r.norm_sqr(),
        transmittance: n_out / n_in * t.norm_sqr(),
    }
}

/// Amplitude and power response for light incident from the `n_in` side
/// onto `layers[0]`.
pub fn stack_response(layers: &[Layer], n_in: f64, n_out: f64, wavelength_nm: f64) -> StackResponse {
    response_from_matrix(&stack_matrix(layers, wavelength_nm), n_in, n_out, wavelength_nm)
}

/// Power transmittance of the full cavity, bottom substrate → top substrate.
pub fn cavity_transmittance(cavity: &CavityAssembly, wavelength_nm: f64) -> f64 {
    stack_response(
        &cavity.layers(),
        cavity.bottom_substrate_index(),
        cavity.top_substrate_index(),
        wavelength_nm,
    )
    .transmittance
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Resonance {
    pub wavelength_nm: f64,
    /// Cold-cavity FWHM Γ_λ in nm.
    pub linewidth_nm: f64,
    pub q_factor: f64,
    pub peak_transmittance: f64,
    /// The peak lies within a few scan steps of the search window edge.
    pub near_window_edge: bool,
}

/// Golden-section maximisation of `f` on `[a, b]`.
pub(crate) fn golden_max(mut a: f64, mut b: f64, tol: f64, f: impl Fn(f64) -> f64) -> f64 {
    let inv_phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while (b - a).abs() > tol {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        }
    }
    0.5 * (a + b)
}

/// Peak positions of a sampled transmission scan: local maxima that stand
/// at least [`MIN_CONTRAST`] above the valleys on both sides.
pub(crate) fn scan_peaks(values: &[f64]) -> Vec<usize> {
    let n = values.len();
    if n < 3 {
        return Vec::new();
    }
    let maxima: Vec<usize> = (1..n - 1)
        .filter(|&k| values[k] > values[k - 1] && values[k] >= values[k + 1])
        .collect();
    let mut peaks = Vec::with_capacity(maxima.len());
    for (idx, &k) in maxima.iter().enumerate() {
        let left_start = if idx == 0 { 0 } else { maxima[idx - 1] };
        let right_end = if idx + 1 == maxima.len() { n - 1 } else { maxima[idx + 1] };
        let left_valley = values[left_start..=k].iter().cloned().fold(f64::INFINITY, f64::min);
        let right_valley = values[k..=right_end].iter().cloned().fold(f64::INFINITY, f64::min);
        let valley = left_valley.max(right_valley);
        if values[k] >= MIN_CONTRAST * valley {
            peaks.push(k);
        }
    }
    peaks
}

/// Scan grid covering `[lo, hi]` at `step`.
pub(crate) fn scan_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).floor() as usize;
    (0..=n).map(|k| lo + k as f64 * step).collect()
}

/// Half-width at half maximum on one side of a peak, located by expanding
/// then bisecting.
fn half_width(peak: f64, peak_value: f64, direction: f64, f: &impl Fn(f64) -> f64) -> Option<f64> {
    let half = 0.5 * peak_value;
    let mut inner = 0.0;
    let mut outer = 1e-6;
    while f(peak + direction * outer) > half {
        inner = outer;
        outer *= 2.0;
        if outer > 5.0 {
            return None;
        }
    }
    for _ in 0..80 {
        let mid = 0.5 * (inner + outer);
        if f(peak + direction * mid) > half {
            inner = mid;
        } else {
            outer = mid;
        }
    }
    Some(0.5 * (inner + outer))
}

/// Cold linewidth from a Lorentzian fit to the sampled transmission peak;
/// falls back to half-maximum bracketing when the fit does not converge.
fn peak_linewidth(peak: f64, peak_value: f64, f: &impl Fn(f64) -> f64) -> Option<f64> {
    let left = half_width(peak, peak_value, -1.0, f)?;
    let right = half_width(peak, peak_value, 1.0, f)?;
    let bracketed = left + right;
    let n = 81;
    let span = 4.0 * bracketed;
    let x: Vec<f64> = (0..n)
        .map(|k| (k as f64 / (n - 1) as f64 - 0.5) * span)
        .collect();
    // Normalised so near-lossless peaks of 1e-5 are fitted on the same scale.
    let y: Vec<f64> = x.iter().map(|&dx| f(peak + dx) / peak_value).collect();
    let series = fit::XYSeries::new(x, y, None).ok()?;
    let init = fit::LorentzianParams {
        center: 0.0,
        fwhm: bracketed,
        amplitude: 1.0,
        offset: 0.0,
    };
    match fit::fit_lorentzian_from(&series, init) {
        Ok(res) if res.converged && res.params[1] > 0.0 => Some(res.params[1]),
        _ => Some(bracketed),
    }
}

/// Locate every transmission resonance of `cavity` inside `window` (nm).
///
/// An empty list is not an error.
pub fn find_resonances(cavity: &CavityAssembly, window: (f64, f64)) -> Result<Vec<Resonance>> {
    let (lo, hi) = window;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::InvalidInput(format!("bad wavelength window [{lo}, {hi}]")));
    }
    let layers = cavity.layers();
    let (n_in, n_out) = (cavity.bottom_substrate_index(), cavity.top_substrate_index());
    let f = |lam: f64| stack_response(&layers, n_in, n_out, lam).transmittance;
    let grid = scan_grid(lo, hi, SCAN_STEP_NM);
    let values: Vec<f64> = grid.iter().map(|&l| f(l)).collect();
    let mut out = Vec::new();
    for k in scan_peaks(&values) {
        let peak = golden_max(grid[k - 1], grid[k + 1], REFINE_TOL_NM, f);
        let peak_value = f(peak);
        let Some(linewidth) = peak_linewidth(peak, peak_value, &f) else {
            continue;
        };
        let near_window_edge = k <= 3 || k + 3 >= grid.len();
        out.push(Resonance {
            wavelength_nm: peak,
            linewidth_nm: linewidth,
            q_factor: peak / linewidth,
            peak_transmittance: peak_value,
            near_window_edge,
        });
    }
    Ok(out)
}

/// Reflection coefficients of the two composite mirrors as seen from inside
/// the air gap: (membrane + bottom DBR, top DBR).
pub fn inner_reflections(cavity: &CavityAssembly, wavelength_nm: f64) -> (Complex64, Complex64) {
    let mut lower: Vec<Layer> = cavity.cavity_layers();
    lower.pop(); // air gap
    lower.reverse();
    let mut bottom = cavity.bottom_layers();
    bottom.reverse();
    lower.extend(bottom);
    let r1 = stack_response(&lower, 1.0, cavity.bottom_substrate_index(), wavelength_nm).r;
    let r2 = stack_response(&cavity.top_layers(), 1.0, cavity.top_substrate_index(), wavelength_nm).r;
    (r1, r2)
}

/// Air-gap length (nm) closest to the current one at which `wavelength_nm`
/// satisfies the round-trip phase condition 4πL/λ − arg(r₁r₂) = 2πm (the
/// matrices use the exp(i(ωt − kz)) sign convention).
pub fn resonant_air_gap(cavity: &CavityAssembly, wavelength_nm: f64, max_shift_nm: f64) -> Result<f64> {
    let (r1, r2) = inner_reflections(cavity, wavelength_nm);
    let phase = (r1 * r2).arg();
    let l0 = cavity.air_gap_nm();
    // L = (2πm + φ)·λ/(4π)
    let m = ((4.0 * PI * l0 / wavelength_nm - phase) / (2.0 * PI)).round();
    let candidates = [m - 1.0, m, m + 1.0]
        .map(|m| (2.0 * PI * m + phase) * wavelength_nm / (4.0 * PI));
    candidates
        .into_iter()
        .filter(|&l| l > 0.0)
        .min_by(|a, b| (a - l0).abs().total_cmp(&(b - l0).abs()))
        .filter(|l| (l - l0).abs() <= max_shift_nm)
        .ok_or_else(|| {
            Error::NoResonance(format!(
                "no air gap within ±{max_shift_nm} nm of {l0} nm resonates at {wavelength_nm} nm"
            ))
        })
}

/// Cavity retuned so that a mode sits exactly at `wavelength_nm`.
pub fn tune_to_wavelength(cavity: &CavityAssembly, wavelength_nm: f64, max_shift_nm: f64) -> Result<CavityAssembly> {
    let gap = resonant_air_gap(cavity, wavelength_nm, max_shift_nm)?;
    cavity.with_air_gap(gap)
}

/// Quality factor from the composite-mirror model: κ = −ln(R₁R₂)/τ_rt with
/// τ_rt the round-trip group delay. Independent of the transmission
/// lineshape.
pub fn finesse_route_q(cavity: &CavityAssembly, wavelength_nm: f64) -> f64 {
    let gap = cavity.air_gap_nm();
    let phase = |lam: f64| {
        let (r1, r2) = inner_reflections(cavity, lam);
        4.0 * PI * gap / lam - (r1 * r2).arg()
    };
    let h = 1e-4;
    let mut dphi = phase(wavelength_nm + h) - phase(wavelength_nm - h);
    while dphi > PI {
        dphi -= 2.0 * PI;
    }
    while dphi < -PI {
        dphi += 2.0 * PI;
    }
    let slope = dphi / (2.0 * h);
    let (r1, r2) = inner_reflections(cavity, wavelength_nm);
    let round_trip = r1.norm_sqr() * r2.norm_sqr();
    wavelength_nm * slope.abs() / (-round_trip.ln())
}

/// Finesse of the composite two-mirror resonator.
pub fn composite_finesse(cavity: &CavityAssembly, wavelength_nm: f64) -> f64 {
    let (r1, r2) = inner_reflections(cavity, wavelength_nm);
    let rho = (r1.norm_sqr() * r2.norm_sqr()).sqrt();
    PI * rho.sqrt() / (1.0 - rho)
}

/// One homogeneous layer of a field solution.
#[derive(Debug, Clone, Serialize)]
pub struct FieldSegment {
    pub layer_index: usize,
    pub name: String,
    pub n: Complex64,
    pub z_start_nm: f64,
    pub thickness_nm: f64,
    /// (E, H) at the right-hand (top) boundary of the layer.
    #[serde(skip)]
    right: [Complex64; 2],
    #[serde(skip)]
    wavelength_nm: f64,
}

impl FieldSegment {
    pub fn z_end_nm(&self) -> f64 {
        self.z_start_nm + self.thickness_nm
    }

    pub fn eps_r(&self) -> f64 {
        (self.n * self.n).re
    }

    fn k(&self) -> Complex64 {
        self.n.conj() * (2.0 * PI / self.wavelength_nm)
    }

    /// Complex E at distance `s` from the bottom of the layer.
    pub fn field_at(&self, s: f64) -> Complex64 {
        let u = self.k() * (self.thickness_nm - s);
        let [e, h] = self.right;
        u.cos() * e + I * u.sin() / self.n.conj() * h
    }

    /// Coefficients of |E|² = mean + a·cos 2u + b·sin 2u with u = k(d − s)
    /// for a lossless layer.
    fn harmonic(&self) -> (f64, f64, f64) {
        let n = self.n.re;
        let [e, h] = self.right;
        let p = e.norm_sqr();
        let q = h.norm_sqr() / (n * n);
        let c = (e * h.conj()).im / n;
        (0.5 * (p + q), 0.5 * (p - q), c)
    }

    /// ∫|E|² ds over the layer.
    pub fn intensity_integral(&self) -> f64 {
        let d = self.thickness_nm;
        if d == 0.0 {
            return 0.0;
        }
        if self.n.im == 0.0 {
            let k = self.k().re;
            let (mean, a, b) = self.harmonic();
            let x = 2.0 * k * d;
            mean * d + a * x.sin() / (2.0 * k) + b * (1.0 - x.cos()) / (2.0 * k)
        } else {
            simpson(|s| self.field_at(s).norm_sqr(), 0.0, d, simpson_panels(self))
        }
    }

    /// Interior extrema of |E|: (positions of maxima, positions of minima), as
    /// distances from the bottom of the layer. Endpoints are included when
    /// the extremum falls on them.
    pub fn extrema(&self) -> (Vec<f64>, Vec<f64>) {
        let d = self.thickness_nm;
        if d == 0.0 {
            return (Vec::new(), Vec::new());
        }
        if self.n.im != 0.0 {
            return sampled_extrema(self);
        }
        let k = self.k().re;
        let (_, a, b) = self.harmonic();
        if a.hypot(b) == 0.0 {
            return (Vec::new(), Vec::new());
        }
        let phi = b.atan2(a); // maxima at 2u = phi + 2πm
        let u_max = 2.0 * k * d;
        let collect = |offset: f64| {
            let mut out = Vec::new();
            let mut m = ((-offset) / (2.0 * PI)).floor() - 1.0;
            loop {
                let two_u = offset + 2.0 * PI * m;
                if two_u > u_max + 1e-9 {
                    break;
                }
                if two_u >= -1e-9 {
                    let s = d - (two_u / (2.0 * k)).clamp(0.0, d);
                    out.push(s.clamp(0.0, d));
                }
                m += 1.0;
            }
            out.sort_by(f64::total_cmp);
            out
        };
        (collect(phi), collect(phi + PI))
    }

    /// Largest |E| in the layer and where it occurs (distance from bottom).
    pub fn max_amplitude(&self) -> (f64, f64) {
        let (maxima, _) = self.extrema();
        [0.0, self.thickness_nm]
            .into_iter()
            .chain(maxima)
            .map(|s| (s, self.field_at(s).norm()))
            .fold((0.0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best })
    }
}

fn simpson_panels(seg: &FieldSegment) -> usize {
    let per_wave = seg.wavelength_nm / seg.n.re;
    let n = ((seg.thickness_nm / per_wave) * 400.0).ceil() as usize;
    (n.max(64) + 1) & !1
}

/// Composite Simpson rule with an even number of panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let n = if panels % 2 == 0 { panels.max(2) } else { panels + 1 };
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + k as f64 * h);
    }
    acc * h / 3.0
}

fn sampled_extrema(seg: &FieldSegment) -> (Vec<f64>, Vec<f64>) {
    let n = simpson_panels(seg);
    let h = seg.thickness_nm / n as f64;
    let vals: Vec<f64> = (0..=n).map(|k| seg.field_at(k as f64 * h).norm()).collect();
    let mut maxima = Vec::new();
    let mut minima = Vec::new();
    for k in 1..n {
        let f = |s: f64| seg.field_at(s).norm();
        if vals[k] >= vals[k - 1] && vals[k] > vals[k + 1] {
            maxima.push(golden_max((k - 1) as f64 * h, (k + 1) as f64 * h, 1e-9, f));
        } else if vals[k] <= vals[k - 1] && vals[k] < vals[k + 1] {
            minima.push(golden_max((k - 1) as f64 * h, (k + 1) as f64 * h, 1e-9, |s| -f(s)));
        }
    }
    (maxima, minima)
}

/// Sampled standing-wave amplitude through the stack at a resonance.
#[derive(Debug, Clone, Serialize)]
pub struct FieldProfile {
    pub resonant_wavelength_nm: f64,
    /// Positions measured from the bottom substrate interface.
    pub z_nm: Vec<f64>,
    /// |E| relative to its global maximum.
    pub amplitude: Vec<f64>,
    pub eps_r: Vec<f64>,
    pub antinodes_nm: Vec<f64>,
    pub nodes_nm: Vec<f64>,
    pub segments: Vec<FieldSegment>,
    /// Raw |E| at the global maximum; divides raw fields into relative ones.
    #[serde(skip)]
    raw_max: f64,
}

impl FieldProfile {
    /// Relative |E| at position `z` (clamped into the stack).
    pub fn amplitude_at(&self, z_nm: f64) -> f64 {
        let seg = self
            .segments
            .iter()
            .find(|s| z_nm <= s.z_end_nm())
            .unwrap_or_else(|| self.segments.last().expect("non-empty profile"));
        let s = (z_nm - seg.z_start_nm).clamp(0.0, seg.thickness_nm);
        seg.field_at(s).norm() / self.raw_max
    }

    /// z of the top boundary of layer `layer_index`.
    pub fn interface_after(&self, layer_index: usize) -> Option<f64> {
        self.segments
            .iter()
            .find(|s| s.layer_index == layer_index)
            .map(FieldSegment::z_end_nm)
    }

    /// Largest relative amplitude inside one layer and its position.
    pub fn max_in_layer(&self, layer_index: usize) -> Option<(f64, f64)> {
        let seg = self.segments.iter().find(|s| s.layer_index == layer_index)?;
        let (s, a) = seg.max_amplitude();
        Some((seg.z_start_nm + s, a / self.raw_max))
    }

    /// ∫ε_r(z)|E(z)|² dz in nm with E relative to the global maximum.
    pub fn energy_integral_nm(&self) -> f64 {
        let raw: f64 = self
            .segments
            .iter()
            .map(|s| s.eps_r() * s.intensity_integral())
            .sum();
        raw / (self.raw_max * self.raw_max)
    }

    pub fn total_length_nm(&self) -> f64 {
        self.segments.last().map_or(0.0, FieldSegment::z_end_nm)
    }

    /// Nearest node and antinode to `z`.
    pub fn nearest_extremum(&self, z_nm: f64) -> (Option<f64>, Option<f64>) {
        let nearest = |v: &[f64]| {
            v.iter()
                .copied()
                .min_by(|a, b| (a - z_nm).abs().total_cmp(&(b - z_nm).abs()))
        };
        (nearest(&self.nodes_nm), nearest(&self.antinodes_nm))
    }
}

/// Minimum number of samples across the whole stack.
const FIELD_MIN_SAMPLES: usize = 2000;

/// Standing-wave profile at the given solution wavelength, without checking
/// that it is a resonance.
pub fn field_solution(cavity: &CavityAssembly, wavelength_nm: f64) -> FieldProfile {
    let layers = cavity.layers();
    let n_out = cavity.top_substrate_index();
    // Pure outgoing wave in the top substrate, unit amplitude.
    let mut right = [ONE, Complex64::new(n_out, 0.0)];
    let mut segments: Vec<FieldSegment> = Vec::with_capacity(layers.len());
    for (idx, layer) in layers.iter().enumerate().rev() {
        segments.push(FieldSegment {
            layer_index: idx,
            name: layer.name.clone(),
            n: layer.n,
            z_start_nm: 0.0,
            thickness_nm: layer.thickness_nm,
            right,
            wavelength_nm,
        });
        right = characteristic_matrix(layer, wavelength_nm).apply(right);
    }
    segments.reverse();
    let mut z = 0.0;
    for seg in &mut segments {
        seg.z_start_nm = z;
        z += seg.thickness_nm;
    }
    let total = z;

    let raw_max = segments
        .iter()
        .map(|s| s.max_amplitude().1)
        .fold(0.0_f64, f64::max);

    let mut z_nm = Vec::new();
    let mut amplitude = Vec::new();
    let mut eps_r = Vec::new();
    let mut antinodes = Vec::new();
    let mut nodes = Vec::new();
    for seg in &segments {
        if seg.thickness_nm == 0.0 {
            continue;
        }
        let spacing = wavelength_nm / (20.0 * seg.n.re);
        let by_wave = (seg.thickness_nm / spacing).ceil() as usize;
        let by_share = (FIELD_MIN_SAMPLES as f64 * seg.thickness_nm / total).ceil() as usize;
        let count = by_wave.max(by_share).max(2);
        for k in 0..=count {
            let s = seg.thickness_nm * k as f64 / count as f64;
            z_nm.push(seg.z_start_nm + s);
            amplitude.push(seg.field_at(s).norm() / raw_max);
            eps_r.push(seg.eps_r());
        }
        let (maxima, minima) = seg.extrema();
        antinodes.extend(maxima.into_iter().map(|s| seg.z_start_nm + s));
        nodes.extend(minima.into_iter().map(|s| seg.z_start_nm + s));
    }
    dedup_sorted(&mut antinodes);
    dedup_sorted(&mut nodes);

    FieldProfile {
        resonant_wavelength_nm: wavelength_nm,
        z_nm,
        amplitude,
        eps_r,
        antinodes_nm: antinodes,
        nodes_nm: nodes,
        segments,
        raw_max,
    }
}

fn dedup_sorted(v: &mut Vec<f64>) {
    v.sort_by(f64::total_cmp);
    v.dedup_by(|a, b| (*a - *b).abs() < 1e-6);
}

/// Field profile at a resonance. Rejects wavelengths more than one cold
/// linewidth away from the nearest transmission peak.
pub fn field_profile(cavity: &CavityAssembly, wavelength_nm: f64) -> Result<FieldProfile> {
    let layers = cavity.layers();
    let (n_in, n_out) = (cavity.bottom_substrate_index(), cavity.top_substrate_index());
    let f = |lam: f64| stack_response(&layers, n_in, n_out, lam).transmittance;
    let span = 0.5;
    let peak = golden_max(wavelength_nm - span, wavelength_nm + span, REFINE_TOL_NM, f);
    let peak_value = f(peak);
    let interior = (peak - wavelength_nm).abs() < span * 0.999;
    let linewidth = if interior {
        half_width(peak, peak_value, -1.0, &f)
            .zip(half_width(peak, peak_value, 1.0, &f))
            .map(|(l, r)| l + r)
    } else {
        None
    };
    match linewidth {
        Some(lw) if (peak - wavelength_nm).abs() <= lw => Ok(field_solution(cavity, wavelength_nm)),
        _ => Err(Error::OffResonance {
            wavelength_nm,
            offset_nm: (peak - wavelength_nm).abs(),
            linewidth_nm: linewidth.unwrap_or(f64::NAN),
        }),
    }
}
