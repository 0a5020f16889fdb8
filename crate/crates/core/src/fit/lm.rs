//! Damped Gauss-Newton (Levenberg-Marquardt) minimiser of Σ rᵢ(p)².

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Stop when the relative cost reduction or relative step falls below this.
    pub rel_tolerance: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        LmOptions {
            max_iterations: 500,
            rel_tolerance: 1e-10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LmOutcome {
    pub params: Vec<f64>,
    pub cost: f64,
    pub residuals: Vec<f64>,
    /// s²(JᵀJ)⁻¹ with s² = cost/(n − p); `None` when JᵀJ is singular.
    pub covariance: Option<DMatrix<f64>>,
    pub iterations: usize,
    pub converged: bool,
    /// Cost after each accepted step, starting with the initial cost.
    pub cost_history: Vec<f64>,
}

/// Box constraints applied by projection after every trial step.
#[derive(Debug, Clone, Default)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    fn project(&self, p: &mut [f64]) {
        for (i, v) in p.iter_mut().enumerate() {
            if let Some(lo) = self.lower.get(i) {
                *v = v.max(*lo);
            }
            if let Some(hi) = self.upper.get(i) {
                *v = v.min(*hi);
            }
        }
    }

    pub fn at_bound(&self, p: &[f64]) -> Vec<bool> {
        p.iter()
            .enumerate()
            .map(|(i, v)| self.lower.get(i) == Some(v) || self.upper.get(i) == Some(v))
            .collect()
    }
}

fn cost(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

fn jacobian(f: &impl Fn(&[f64], &mut [f64]), p: &[f64], n: usize, bounds: &Bounds) -> DMatrix<f64> {
    let mut jac = DMatrix::zeros(n, p.len());
    let mut plus = vec![0.0; n];
    let mut minus = vec![0.0; n];
    let mut q = p.to_vec();
    for j in 0..p.len() {
        let h = 1e-6 * p[j].abs().max(1e-3);
        let lo = bounds.lower.get(j).copied().unwrap_or(f64::NEG_INFINITY);
        let hi = bounds.upper.get(j).copied().unwrap_or(f64::INFINITY);
        let a = (p[j] + h).min(hi);
        let b = (p[j] - h).max(lo);
        q[j] = a;
        f(&q, &mut plus);
        q[j] = b;
        f(&q, &mut minus);
        q[j] = p[j];
        let span = a - b;
        for i in 0..n {
            jac[(i, j)] = (plus[i] - minus[i]) / span;
        }
    }
    jac
}

/// Minimise the sum of squared residuals written by `f` into its output
/// slice of length `n_residuals`.
pub fn minimize(
    f: impl Fn(&[f64], &mut [f64]),
    n_residuals: usize,
    initial: &[f64],
    bounds: &Bounds,
    opts: LmOptions,
) -> LmOutcome {
    let np = initial.len();
    let mut p = initial.to_vec();
    bounds.project(&mut p);
    let mut r = vec![0.0; n_residuals];
    f(&p, &mut r);
    let mut s = cost(&r);
    let mut history = vec![s];
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    let mut trial = vec![0.0; n_residuals];

    if !s.is_finite() {
        return LmOutcome {
            params: p,
            cost: s,
            residuals: r,
            covariance: None,
            iterations: 0,
            converged: false,
            cost_history: history,
        };
    }

    while iterations < opts.max_iterations {
        iterations += 1;
        if s == 0.0 {
            converged = true;
            break;
        }
        let jac = jacobian(&f, &p, n_residuals, bounds);
        let jtj = jac.transpose() * &jac;
        let grad = jac.transpose() * DVector::from_column_slice(&r);
        let mut accepted = None;
        while lambda < 1e16 {
            let mut m = jtj.clone();
            for i in 0..np {
                m[(i, i)] += lambda * jtj[(i, i)].max(1e-300);
            }
            let Some(chol) = m.cholesky() else {
                lambda *= 10.0;
                continue;
            };
            let delta = chol.solve(&(-&grad));
            let mut q: Vec<f64> = p.iter().zip(delta.iter()).map(|(a, d)| a + d).collect();
            bounds.project(&mut q);
            f(&q, &mut trial);
            let s_new = cost(&trial);
            if s_new.is_finite() && s_new < s {
                accepted = Some((q, s_new));
                lambda = (lambda / 10.0).max(1e-15);
                break;
            }
            lambda *= 10.0;
        }
        let Some((q, s_new)) = accepted else {
            // No descent direction left: at a minimum to working precision.
            converged = true;
            break;
        };
        let step: f64 = p.iter().zip(&q).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let norm: f64 = q.iter().map(|v| v * v).sum::<f64>().sqrt();
        let reduction = (s - s_new) / s;
        p = q;
        std::mem::swap(&mut r, &mut trial);
        s = s_new;
        history.push(s);
        if reduction < opts.rel_tolerance || step <= opts.rel_tolerance * (norm + opts.rel_tolerance) {
            converged = true;
            break;
        }
    }

    let jac = jacobian(&f, &p, n_residuals, bounds);
    let dof = n_residuals.saturating_sub(np).max(1) as f64;
    let covariance = (jac.transpose() * &jac)
        .try_inverse()
        .filter(|c| c.iter().all(|v| v.is_finite()))
        .map(|c| c * (s / dof));
    LmOutcome {
        params: p,
        cost: s,
        residuals: r,
        covariance,
        iterations,
        converged,
        cost_history: history,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fits_exponential_exactly() {
        let xs: Vec<f64> = (0..30).map(|i| i as f64 * 0.2).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * (-x / 1.7).exp()).collect();
        let out = minimize(
            |p, r| {
                for (i, x) in xs.iter().enumerate() {
                    r[i] = p[0] * (-x / p[1]).exp() - ys[i];
                }
            },
            xs.len(),
            &[1.0, 1.0],
            &Bounds::default(),
            LmOptions::default(),
        );
        assert!(out.converged);
        assert!((out.params[0] - 3.0).abs() < 1e-8);
        assert!((out.params[1] - 1.7).abs() < 1e-8);
    }

    #[test]
    fn cost_strictly_decreases() {
        let xs: Vec<f64> = (0..40).map(|i| i as f64 * 0.1).collect();
        let ys: Vec<f64> = xs.iter().map(|x| (2.0 * x).sin() + 0.1 * x).collect();
        let out = minimize(
            |p, r| {
                for (i, x) in xs.iter().enumerate() {
                    r[i] = (p[0] * x).sin() + p[1] * x - ys[i];
                }
            },
            xs.len(),
            &[1.8, 0.0],
            &Bounds::default(),
            LmOptions::default(),
        );
        assert!(out.cost_history.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn respects_bounds() {
        let out = minimize(
            |p, r| r[0] = p[0] + 1.0,
            1,
            &[2.0],
            &Bounds {
                lower: vec![0.0],
                upper: vec![],
            },
            LmOptions::default(),
        );
        assert_eq!(out.params[0], 0.0);
    }
}
