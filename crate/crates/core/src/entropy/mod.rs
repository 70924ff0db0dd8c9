//! Perelman's entropies λ(g) and ν(g), and the functionals 𝓕 and 𝒲 they minimize.
//!
//! Both are computed in the variable w = e^{−f/2} (λ) or w = (4πτ)^{−n/4}e^{−f/2} (ν),
//! where the gradient term becomes the Dirichlet form 4∫|Dw|² of the discrete
//! Laplacian. λ is then the least eigenvalue of −4Δ + R.

mod nu;
mod problem;

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::geometry::{DiscreteMetric, ScalarField};
use crate::linalg::lowest_eigenpair_tridiagonal;
use problem::{dot, ScalarProblem};

pub use nu::{nu_entropy, nu_entropy_at, nu_homogeneous, w_functional};

/// Solver tolerances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Relative eigen-residual for λ.
    pub eigen: f64,
    /// Preconditioned gradient norm at which descents stop.
    pub descent: f64,
    pub max_iter: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            eigen: 1e-10,
            descent: 1e-9,
            max_iter: 10_000,
        }
    }
}

impl From<&RunConfig> for Tolerances {
    fn from(cfg: &RunConfig) -> Self {
        Tolerances {
            eigen: cfg.tol_eigen,
            descent: cfg.tol_descent,
            ..Tolerances::default()
        }
    }
}

/// λ or ν with its minimizing potential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyResult {
    pub value: f64,
    pub minimizer_f: ScalarField,
    /// Minimizing scale (ν only).
    pub tau: Option<f64>,
    /// Solver iterations (0 for the direct tridiagonal eigen-solver).
    pub iterations: usize,
    /// Relative residual of the Euler–Lagrange equation.
    pub residual: f64,
    pub grid: String,
}

/// 𝓕(g, f) = ∫e^{−f}(|Df|² + R), evaluated as 4Q(w) + ∫Rw² with w = e^{−f/2}.
/// No normalization of f is imposed.
pub fn f_functional(g: &DiscreteMetric, f: &ScalarField) -> Result<f64> {
    g.check_field(f)?;
    let p = ScalarProblem::new(g)?;
    let w: Vec<f64> = f.iter().map(|v| (-v / 2.0).exp()).collect();
    Ok(4.0 * p.dirichlet(&w) + p.potential(&w))
}

fn potential_from_w(w: &[f64]) -> ScalarField {
    w.iter().map(|x| -2.0 * x.ln()).collect::<Vec<_>>().into()
}

/// Relative residual ‖(4K + MR − λM)w‖ / (scale·‖Mw‖) of the ground-state equation.
fn eigen_residual(p: &ScalarProblem, w: &[f64], lambda: f64) -> f64 {
    let kw = p.stiffness(w);
    let mut num = 0.0f64;
    let mut den = 0.0f64;
    for i in 0..w.len() {
        let mw = p.mass[i] * w[i];
        let r = 4.0 * kw[i] + p.r[i] * mw - lambda * mw;
        num = num.max((r / p.mass[i].sqrt()).abs());
        den = den.max((mw / p.mass[i].sqrt()).abs());
    }
    let scale = 1.0 + lambda.abs() + p.r.iter().fold(0.0f64, |a, r| a.max(r.abs()));
    num / (den * scale).max(f64::MIN_POSITIVE)
}

/// λ(g): the least eigenvalue of −4Δ + R, with minimizer f = −2 ln w.
pub fn lambda_entropy(g: &DiscreteMetric, tol: &Tolerances) -> Result<EntropyResult> {
    let p = ScalarProblem::new(g)?;
    let (lambda, w, iterations) = match g {
        DiscreteMetric::Warped(wm) => {
            let (d0, o0) = wm.symmetric_neg_laplacian();
            let diag: Vec<f64> = d0.iter().zip(&p.r).map(|(d, r)| 4.0 * d + r).collect();
            let off: Vec<f64> = o0.iter().map(|o| 4.0 * o).collect();
            let (lambda, y) = lowest_eigenpair_tridiagonal(&diag, &off)?;
            let w: Vec<f64> = y.iter().zip(&p.mass).map(|(y, m)| y / m.sqrt()).collect();
            (lambda, w, 0)
        }
        DiscreteMetric::Torus(_) => torus_ground_state(&p, tol)?,
        DiscreteMetric::Product(_) => (p.r[0], vec![1.0 / p.mass[0].sqrt()], 0),
    };
    let residual = eigen_residual(&p, &w, lambda);
    if residual > tol.eigen {
        return Err(Error::NoConvergence {
            what: "ground state of -4Δ + R",
            iterations,
            residual,
        });
    }
    Ok(EntropyResult {
        value: lambda,
        minimizer_f: potential_from_w(&w),
        tau: None,
        iterations,
        residual,
        grid: g.grid_label(),
    })
}

/// Shifted inverse iteration for (4K + MR) w = λ M w, shift below min R so that
/// every solve is positive definite.
fn torus_ground_state(p: &ScalarProblem, tol: &Tolerances) -> Result<(f64, Vec<f64>, usize)> {
    let n = p.len();
    let rmin = p.r.iter().cloned().fold(f64::INFINITY, f64::min);
    let sigma = rmin - 0.1 * (1.0 + rmin.abs());
    let shift: Vec<f64> = p.r.iter().map(|r| r - sigma).collect();
    let vol: f64 = p.mass.iter().sum();
    let mut w = vec![1.0 / vol.sqrt(); n];
    let mut lambda = p.potential(&w);
    for it in 1..=200 {
        let rhs: Vec<f64> = w.iter().zip(&p.mass).map(|(w, m)| w * m).collect();
        let guess: Vec<f64> = w.iter().map(|x| x / (lambda - sigma).max(1e-3)).collect();
        let z = p.solve_shifted(4.0, &shift, &rhs, Some(&guess))?;
        let norm = p.integrate_product(&z, &z).sqrt();
        w = z.iter().map(|x| x / norm).collect();
        let next = 4.0 * p.dirichlet(&w) + p.potential(&w);
        let change = (next - lambda).abs();
        lambda = next;
        let res = eigen_residual(p, &w, lambda);
        if res < tol.eigen.min(1e-11) && change < 1e-14 * (1.0 + lambda.abs()) {
            if w.iter().any(|x| *x <= 0.0) {
                return Err(Error::Consistency("torus ground state changes sign".into()));
            }
            return Ok((lambda, w, it));
        }
    }
    Err(Error::NoConvergence {
        what: "torus inverse iteration",
        iterations: 200,
        residual: eigen_residual(p, &w, lambda),
    })
}

/// λ by direct descent on 𝓕 over normalized potentials f (cross-check of
/// [`lambda_entropy`]): Sobolev-preconditioned gradient steps in f with Armijo
/// backtracking, renormalizing ∫e^{−f} = 1 after each step.
pub fn lambda_descent(g: &DiscreteMetric, tol: &Tolerances) -> Result<EntropyResult> {
    let p = ScalarProblem::new(g)?;
    let n = p.len();
    let vol: f64 = p.mass.iter().sum();
    let mut f = vec![vol.ln(); n];
    let rayleigh = |f: &[f64]| -> (f64, Vec<f64>) {
        let w: Vec<f64> = f.iter().map(|v| (-v / 2.0).exp()).collect();
        let mass = p.integrate_product(&w, &w);
        ((4.0 * p.dirichlet(&w) + p.potential(&w)) / mass, w)
    };
    let (mut value, mut w) = rayleigh(&f);
    let spread = p.r.iter().map(|r| (r - value).abs()).fold(1.0, f64::max);
    let shift = vec![spread; n];
    let mut gnorm = f64::INFINITY;
    for it in 0..tol.max_iter {
        // Gradient of F/∫w² in f: −w ⊙ (Aw − F·Mw) / ∫w².
        let kw = p.stiffness(&w);
        let mass = p.integrate_product(&w, &w);
        let grad: Vec<f64> = (0..n)
            .map(|i| -w[i] * (4.0 * kw[i] + (p.r[i] - value) * p.mass[i] * w[i]) / mass)
            .collect();
        let wbar2 = 1.0 / vol;
        let dir = p.solve_shifted(4.0 * wbar2 / 2.0, &shift.iter().map(|s| s * wbar2 / 2.0).collect::<Vec<_>>(), &grad, None)?;
        let slope = dot(&grad, &dir);
        gnorm = slope.abs().sqrt();
        if gnorm < tol.descent {
            let w: Vec<f64> = w.iter().map(|x| x / mass.sqrt()).collect();
            let residual = eigen_residual(&p, &w, value);
            return Ok(EntropyResult {
                value,
                minimizer_f: potential_from_w(&w),
                tau: None,
                iterations: it,
                residual,
                grid: g.grid_label(),
            });
        }
        let mut alpha = 1.0;
        loop {
            let trial: Vec<f64> = f.iter().zip(&dir).map(|(f, d)| f - alpha * d).collect();
            let (v, tw) = rayleigh(&trial);
            if v <= value - 1e-4 * alpha * slope || alpha < 1e-12 {
                let shift_f = p.integrate_product(&tw, &tw).ln();
                f = trial.iter().map(|x| x + shift_f).collect();
                let (v2, w2) = rayleigh(&f);
                value = v2;
                w = w2;
                break;
            }
            alpha *= 0.5;
        }
    }
    Err(Error::NoConvergence {
        what: "lambda descent",
        iterations: tol.max_iter,
        residual: gnorm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{integrate, Torus2Metric, WarpedSphereMetric};

    #[test]
    fn lambda_of_round_sphere_and_flat_torus() {
        let s4 = DiscreteMetric::Warped(WarpedSphereMetric::round(4, 256).unwrap());
        let r = lambda_entropy(&s4, &Tolerances::default()).unwrap();
        assert!((r.value - 12.0).abs() < 1e-6, "{}", r.value);
        let mass: f64 = integrate(&s4, &r.minimizer_f.map(|f| (-f).exp())).unwrap();
        assert!((mass - 1.0).abs() < 1e-10);
        let t = DiscreteMetric::Torus(Torus2Metric::flat(32).unwrap());
        let r = lambda_entropy(&t, &Tolerances::default()).unwrap();
        assert!(r.value.abs() < 1e-12);
        let f0 = r.minimizer_f[0];
        assert!(r.minimizer_f.iter().all(|f| (f - f0).abs() < 1e-10));
    }

    #[test]
    fn descent_agrees_with_eigen_solver() {
        let g = DiscreteMetric::Warped(WarpedSphereMetric::perturbed(4, 128, 2, 0.2).unwrap());
        let tol = Tolerances::default();
        let a = lambda_entropy(&g, &tol).unwrap();
        let b = lambda_descent(&g, &tol).unwrap();
        assert!((a.value - b.value).abs() < 1e-8, "{} {}", a.value, b.value);
        let t = DiscreteMetric::Torus(
            Torus2Metric::from_fn(32, |x, y| {
                let e = (0.2 * x.cos() + 0.1 * y.sin()).exp();
                [e, 0.0, e]
            })
            .unwrap(),
        );
        let a = lambda_entropy(&t, &tol).unwrap();
        let b = lambda_descent(&t, &tol).unwrap();
        assert!(a.value < 0.0);
        assert!((a.value - b.value).abs() < 1e-8, "{} {}", a.value, b.value);
    }

    #[test]
    fn f_functional_examples() {
        let t = DiscreteMetric::Torus(Torus2Metric::flat(32).unwrap());
        let vol = t.volume();
        let f = ScalarField::constant(t.field_len(), vol.ln());
        assert!(f_functional(&t, &f).unwrap().abs() < 1e-14);
        let s4 = DiscreteMetric::Warped(WarpedSphereMetric::round(4, 128).unwrap());
        let f = ScalarField::constant(s4.field_len(), s4.volume().ln());
        assert!((f_functional(&s4, &f).unwrap() - 12.0).abs() < 1e-6);
    }
}
