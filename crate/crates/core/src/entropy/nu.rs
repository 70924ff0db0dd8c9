//! ν(g) = inf over (f, τ) of 𝒲, and the constant-potential closed form.

use std::f64::consts::PI;

use super::problem::{dot, ScalarProblem};
use super::{EntropyResult, Tolerances};
use crate::error::{Error, Result};
use crate::geometry::{DiscreteMetric, ScalarField};

/// Constant-potential value of ν for a homogeneous metric: the minimum over τ of
/// τR + ln vol − (n/2)ln(4πτ) − n, attained at τ = n/2R. Returns (ν, τ).
pub fn nu_homogeneous(r: f64, vol: f64, n: usize) -> Result<(f64, f64)> {
    if !(r > 0.0) {
        return Err(Error::Domain(format!(
            "constant-potential entropy needs R > 0 (got {r}); there is no interior τ minimum"
        )));
    }
    if !(vol > 0.0) || n == 0 {
        return Err(Error::Domain(format!("need vol > 0 and n >= 1 (vol = {vol}, n = {n})")));
    }
    let nn = n as f64;
    let tau = nn / (2.0 * r);
    Ok((tau * r + vol.ln() - nn / 2.0 * (4.0 * PI * tau).ln() - nn, tau))
}

fn mass_constant(n: usize, tau: f64) -> f64 {
    (4.0 * PI * tau).powf(-(n as f64) / 2.0)
}

/// 𝒲(g, f, τ) = (4πτ)^{−n/2} ∫ e^{−f}[τ(|Df|² + R) + f − n]. The potential must
/// satisfy (4πτ)^{−n/2}∫e^{−f} = 1 to within 1e−8.
pub fn w_functional(g: &DiscreteMetric, f: &ScalarField, tau: f64) -> Result<f64> {
    g.check_field(f)?;
    if !(tau > 0.0) {
        return Err(Error::Domain(format!("tau must be positive, got {tau}")));
    }
    let p = ScalarProblem::new(g)?;
    let c = mass_constant(g.n(), tau);
    let u: Vec<f64> = f.iter().map(|v| c * (-v).exp()).collect();
    let total: f64 = u.iter().zip(&p.mass).map(|(u, m)| u * m).sum();
    if (total - 1.0).abs() > 1e-8 {
        return Err(Error::Precondition(format!(
            "(4πτ)^(-n/2)∫e^(-f) = {total}, expected 1"
        )));
    }
    let w: Vec<f64> = u.iter().map(|x| x.sqrt()).collect();
    let uf = p.integrate_product(&u, f);
    Ok(tau * (4.0 * p.dirichlet(&w) + p.potential(&w)) + uf - g.n() as f64)
}

/// Minimizer of 𝒲(·, τ) over unit-mass w.
struct Inner {
    value: f64,
    w: Vec<f64>,
    iterations: usize,
    grad_norm: f64,
    /// d𝒲*/d ln τ = τ(4Q + ∫Rw²) − n/2, by the envelope theorem.
    slope: f64,
}

fn w_value(p: &ScalarProblem, n: usize, tau: f64, w: &[f64]) -> f64 {
    let ent: f64 = w
        .iter()
        .zip(&p.mass)
        .map(|(w, m)| if *w > 0.0 { m * w * w * (w * w).ln() } else { 0.0 })
        .sum();
    let nn = n as f64;
    tau * (4.0 * p.dirichlet(w) + p.potential(w)) - ent - nn / 2.0 * (4.0 * PI * tau).ln() - nn
}

/// Preconditioned Polak–Ribière conjugate gradients on the unit-mass sphere; the
/// preconditioner is the Sobolev operator 8τK + 2cM, steps use Armijo backtracking.
fn inner_minimize(p: &ScalarProblem, n: usize, tau: f64, w0: &[f64], tol: &Tolerances) -> Result<Inner> {
    let len = p.len();
    let norm = p.integrate_product(w0, w0).sqrt();
    let mut w: Vec<f64> = w0.iter().map(|x| x / norm).collect();
    let mut value = w_value(p, n, tau, &w);
    let vol: f64 = p.mass.iter().sum();
    let rbar = p.potential(&vec![1.0; len]) / vol;
    let c = vec![2.0 * (tau * rbar).abs().max(1.0); len];
    let envelope = |w: &[f64]| tau * (4.0 * p.dirichlet(w) + p.potential(w)) - n as f64 / 2.0;
    let mut grad_norm = f64::INFINITY;
    let mut prev: Option<(Vec<f64>, Vec<f64>, f64)> = None; // (gradient, search dir, G·z)
    let mut alpha: f64 = 1.0;
    for it in 0..tol.max_iter {
        let kw = p.stiffness(&w);
        let grad: Vec<f64> = (0..len)
            .map(|i| {
                let w2 = w[i] * w[i];
                let log_term = if w2 > 0.0 { 2.0 * w[i] * w2.ln() } else { 0.0 };
                2.0 * tau * (4.0 * kw[i] + p.r[i] * p.mass[i] * w[i]) - p.mass[i] * (log_term + 2.0 * w[i])
            })
            .collect();
        let mw: Vec<f64> = w.iter().zip(&p.mass).map(|(w, m)| w * m).collect();
        let pg = p.solve_shifted(8.0 * tau, &c, &grad, None)?;
        let pm = p.solve_shifted(8.0 * tau, &c, &mw, None)?;
        let beta_proj = dot(&mw, &pg) / dot(&mw, &pm);
        let z: Vec<f64> = pg.iter().zip(&pm).map(|(a, b)| a - beta_proj * b).collect();
        let gz = dot(&grad, &z);
        grad_norm = gz.max(0.0).sqrt();
        // Below this the predicted decrease is lost in the rounding of 𝒲 itself.
        let floor = 64.0 * f64::EPSILON * (1.0 + value.abs() + tau * p.potential(&w).abs() + 4.0 * tau * p.dirichlet(&w));
        if grad_norm < tol.descent || gz < floor {
            return Ok(Inner {
                value,
                slope: envelope(&w),
                w,
                iterations: it,
                grad_norm,
            });
        }
        let mut dir = z.clone();
        if let Some((g_old, d_old, gz_old)) = &prev {
            let diff: f64 = z.iter().zip(grad.iter().zip(g_old)).map(|(z, (g, o))| z * (g - o)).sum();
            let beta = (diff / gz_old).max(0.0);
            for i in 0..len {
                dir[i] += beta * d_old[i];
            }
            // Keep the direction tangent to the constraint.
            let t = dot(&mw, &dir);
            for i in 0..len {
                dir[i] -= t * w[i];
            }
            if dot(&grad, &dir) <= 0.0 {
                dir = z.clone();
            }
        }
        let slope = dot(&grad, &dir);
        alpha = (2.0 * alpha).min(1.0);
        let mut accepted = false;
        while alpha >= 1e-14 {
            // 𝒲 depends on w², and |w| never has larger Dirichlet energy than w.
            let trial: Vec<f64> = w.iter().zip(&dir).map(|(w, d)| (w - alpha * d).abs()).collect();
            {
                let tn = p.integrate_product(&trial, &trial).sqrt();
                let trial: Vec<f64> = trial.iter().map(|x| x / tn).collect();
                let v = w_value(p, n, tau, &trial);
                if v <= value - 1e-4 * alpha * slope {
                    w = trial;
                    value = v;
                    accepted = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if accepted {
            prev = Some((grad, dir, gz));
        } else if prev.is_some() {
            // Conjugate direction failed: restart from steepest descent.
            prev = None;
            alpha = 1.0;
        } else {
            return Err(Error::NoConvergence {
                what: "inner W line search",
                iterations: it,
                residual: grad_norm,
            });
        }
    }
    Err(Error::NoConvergence {
        what: "inner W minimization",
        iterations: tol.max_iter,
        residual: grad_norm,
    })
}

fn potential_of(n: usize, tau: f64, w: &[f64]) -> ScalarField {
    let shift = (n as f64 / 2.0) * (4.0 * PI * tau).ln();
    w.iter()
        .map(|w| -(w * w).ln() - shift)
        .collect::<Vec<_>>()
        .into()
}


/// min over f of 𝒲(g, f, τ) at a fixed scale τ.
pub fn nu_entropy_at(g: &DiscreteMetric, tau: f64, tol: &Tolerances) -> Result<EntropyResult> {
    if !(tau > 0.0) {
        return Err(Error::Domain(format!("tau must be positive, got {tau}")));
    }
    let p = ScalarProblem::new(g)?;
    let start = vec![1.0; p.len()];
    let inner = inner_minimize(&p, g.n(), tau, &start, tol)?;
    Ok(EntropyResult {
        value: inner.value,
        minimizer_f: potential_of(g.n(), tau, &inner.w),
        tau: Some(tau),
        iterations: inner.iterations,
        residual: inner.grad_norm,
        grid: g.grid_label(),
    })
}

const GOLDEN: f64 = 0.618_033_988_749_894_9;

/// ν(g): nested minimization, inner over unit-mass w, outer over ln τ in the
/// bracket (default (0.01, 10)·n/2R̄ with R̄ the mean scalar curvature).
///
/// The outer search is golden section down to a width of 1e−4 in ln τ, then
/// bisection on the sign of d𝒲*/d ln τ (available exactly through the envelope
/// theorem) down to 1e−10.
pub fn nu_entropy(
    g: &DiscreteMetric,
    bracket: Option<(f64, f64)>,
    tol: &Tolerances,
) -> Result<EntropyResult> {
    let n = g.n();
    let p = ScalarProblem::new(g)?;
    let vol: f64 = p.mass.iter().sum();
    let rbar = p.potential(&vec![1.0; p.len()]) / vol;
    if let DiscreteMetric::Product(prod) = g {
        return product_nu(prod, bracket);
    }
    let (lo, hi) = match bracket {
        Some((lo, hi)) => {
            if !(lo > 0.0 && hi > lo) {
                return Err(Error::Domain(format!("bracket must satisfy 0 < lo < hi, got ({lo}, {hi})")));
            }
            (lo, hi)
        }
        None => {
            if !(rbar > 0.0) {
                return Err(Error::Domain(format!(
                    "mean scalar curvature {rbar} is not positive; pass an explicit tau bracket"
                )));
            }
            let t0 = n as f64 / (2.0 * rbar);
            (0.01 * t0, 10.0 * t0)
        }
    };
    let mut total_iterations = 0usize;
    let mut warm = vec![1.0; p.len()];
    let mut eval = |x: f64, warm: &mut Vec<f64>| -> Result<Inner> {
        let inner = inner_minimize(&p, n, x.exp(), warm, tol)?;
        total_iterations += inner.iterations;
        *warm = inner.w.clone();
        Ok(inner)
    };
    let (a0, b0) = (lo.ln(), hi.ln());
    let (mut a, mut b) = (a0, b0);
    let mut x1 = b - GOLDEN * (b - a);
    let mut x2 = a + GOLDEN * (b - a);
    let mut f1 = eval(x1, &mut warm)?.value;
    let mut f2 = eval(x2, &mut warm)?.value;
    while b - a > 1e-4 {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - GOLDEN * (b - a);
            f1 = eval(x1, &mut warm)?.value;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + GOLDEN * (b - a);
            f2 = eval(x2, &mut warm)?.value;
        }
    }
    let edge = 1e-3 * (b0 - a0).max(1.0);
    if a - a0 < edge || b0 - b < edge {
        return Err(Error::Bracket { lo, hi });
    }
    // Widen slightly so the derivative changes sign inside, then bisect.
    let (mut a, mut b) = (a - 1e-4, b + 1e-4);
    while b - a > 1e-10 {
        let mid = 0.5 * (a + b);
        let best = eval(mid, &mut warm)?;
        if best.slope > 0.0 {
            b = mid;
        } else {
            a = mid;
        }
    }
    let x = 0.5 * (a + b);
    let best = eval(x, &mut warm)?;
    let tau = x.exp();
    let f = potential_of(n, tau, &best.w);
    // Second stationarity condition: (4πτ)^{−n/2}∫f e^{−f} = n/2 + ν.
    let u: Vec<f64> = best.w.iter().map(|w| w * w).collect();
    let uf = p.integrate_product(&u, &f);
    let tau_residual = (uf - n as f64 / 2.0 - best.value).abs();
    Ok(EntropyResult {
        value: best.value,
        minimizer_f: f,
        tau: Some(tau),
        iterations: total_iterations,
        residual: best.grad_norm.max(tau_residual),
        grid: g.grid_label(),
    })
}

fn product_nu(
    prod: &crate::geometry::ProductSphereMetric,
    bracket: Option<(f64, f64)>,
) -> Result<EntropyResult> {
    let (nu, tau) = nu_homogeneous(prod.scalar_curvature(), prod.volume(), prod.n())?;
    if let Some((lo, hi)) = bracket {
        if !(lo < tau && tau < hi) {
            return Err(Error::Bracket { lo, hi });
        }
    }
    // Constant potentials are a local minimum of 𝒲(·, τ) iff 2τλ₁ ≥ 1, λ₁ the first
    // nonzero eigenvalue of −Δ, min(p/a², q/b²) on the product.
    let ((pp, q), (a, b)) = (prod.dims(), prod.radii());
    let lambda1 = (pp as f64 / (a * a)).min(q as f64 / (b * b));
    if 2.0 * tau * lambda1 < 1.0 {
        return Err(Error::Unsupported {
            op: "nu_entropy",
            detail: format!(
                "constant potential is not a local minimizer at tau = {tau} (2·tau·lambda1 = {})",
                2.0 * tau * lambda1
            ),
        });
    }
    let f = (4.0 * PI * tau).powf(-(prod.n() as f64) / 2.0);
    Ok(EntropyResult {
        value: nu,
        minimizer_f: vec![(prod.volume() * f).ln()].into(),
        tau: Some(tau),
        iterations: 0,
        residual: 0.0,
        grid: format!("S^{pp}({a}) x S^{q}({b})"),
    })
}
