//! Faddeeva function w(z) = exp(−z²)·erfc(−iz).
//!
//! Weideman's rational expansion (N = 32) in the inner region and the Laplace
//! continued fraction for large |z|. Both are for Im z ≥ 0; the lower half
//! plane follows from w(z) = 2·exp(−z²) − w(−z).

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;

const N: usize = 32;
const FRAC_1_SQRT_PI: f64 = 0.564_189_583_547_756_3;
const CF_RADIUS: f64 = 8.0;
const CF_DEPTH: usize = 60;

struct Weideman {
    l: f64,
    coef: [f64; N],
}

fn weideman() -> &'static Weideman {
    static TABLE: OnceLock<Weideman> = OnceLock::new();
    TABLE.get_or_init(|| {
        let m = 2 * N;
        let l = (N as f64 / 2f64.sqrt()).sqrt();
        // f(k) = exp(−t²)(L² + t²), t = L·tan(kπ/2M), k = −M+1..M−1
        let f: Vec<(f64, f64)> = (-(m as i64) + 1..m as i64)
            .map(|k| {
                let t = l * (k as f64 * PI / (2.0 * m as f64)).tan();
                (k as f64, (-t * t).exp() * (l * l + t * t))
            })
            .collect();
        let mut coef = [0.0; N];
        for (j, c) in coef.iter_mut().enumerate() {
            let order = (j + 1) as f64;
            let sum: f64 = f
                .iter()
                .map(|&(k, v)| v * (PI * order * k / m as f64).cos())
                .sum();
            *c = sum / (2 * m) as f64;
        }
        Weideman { l, coef }
    })
}

fn upper_half(z: Complex64) -> Complex64 {
    if z.norm() >= CF_RADIUS {
        // w(z) = (i/√π) / (z − (1/2)/(z − 1/(z − (3/2)/(z − ...))))
        let mut tail = z;
        for k in (1..=CF_DEPTH).rev() {
            tail = z - (k as f64 / 2.0) / tail;
        }
        return Complex64::new(0.0, FRAC_1_SQRT_PI) / tail;
    }
    let w = weideman();
    let iz = Complex64::new(-z.im, z.re);
    let denom = w.l - iz;
    let big_z = (w.l + iz) / denom;
    let mut p = Complex64::new(0.0, 0.0);
    for &c in w.coef.iter().rev() {
        p = p * big_z + c;
    }
    2.0 * p / (denom * denom) + FRAC_1_SQRT_PI / denom
}

/// Faddeeva function for any complex argument.
pub fn faddeeva(z: Complex64) -> Complex64 {
    if z.im >= 0.0 {
        upper_half(z)
    } else {
        2.0 * (-z * z).exp() - upper_half(-z)
    }
}

/// Scaled complementary error function exp(x²)·erfc(x).
pub fn erfcx(x: f64) -> f64 {
    if x >= 0.0 {
        upper_half(Complex64::new(0.0, x)).re
    } else {
        2.0 * (x * x).exp() - upper_half(Complex64::new(0.0, -x)).re
    }
}

pub fn erfc(x: f64) -> f64 {
    if x >= 0.0 {
        (-x * x).exp() * erfcx(x)
    } else {
        2.0 - (-x * x).exp() * erfcx(-x)
    }
}

/// exp(a)·erfc(b) without overflow for large positive `a` paired with large
/// positive `b`.
pub fn exp_erfc(a: f64, b: f64) -> f64 {
    if b >= 0.0 {
        (a - b * b).exp() * erfcx(b)
    } else {
        2.0 * a.exp() - (a - b * b).exp() * erfcx(-b)
    }
}
