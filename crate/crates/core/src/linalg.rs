//! Small dense/banded kernels shared by the solvers.

use crate::error::{Error, Result};

/// Solves a tridiagonal system by the Thomas algorithm.
///
/// `sub[i]` couples row `i` to `i-1` (sub[0] unused), `sup[i]` couples row `i` to `i+1`.
/// No pivoting: intended for symmetric positive definite or diagonally dominant systems.
pub fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut denom = diag[0];
    if denom == 0.0 {
        return Err(Error::Singular("zero pivot in tridiagonal solve".into()));
    }
    c[0] = if n > 1 { sup[0] / denom } else { 0.0 };
    d[0] = rhs[0] / denom;
    for i in 1..n {
        denom = diag[i] - sub[i] * c[i - 1];
        if denom == 0.0 || !denom.is_finite() {
            return Err(Error::Singular("zero pivot in tridiagonal solve".into()));
        }
        c[i] = if i + 1 < n { sup[i] / denom } else { 0.0 };
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Ok(d)
}

/// Number of eigenvalues of the symmetric tridiagonal matrix strictly below `x`.
pub(crate) fn sturm_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = diag[0] - x;
    if q < 0.0 {
        count += 1;
    }
    for i in 1..diag.len() {
        let denom = if q == 0.0 { f64::EPSILON * (1.0 + off[i - 1].abs()) } else { q };
        q = diag[i] - x - off[i - 1] * off[i - 1] / denom;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Smallest eigenvalue and unit eigenvector of a symmetric tridiagonal matrix
/// (`off[i]` couples `i` and `i+1`). Bisection on the Sturm sequence, then inverse
/// iteration from just below the eigenvalue.
pub fn lowest_eigenpair_tridiagonal(diag: &[f64], off: &[f64]) -> Result<(f64, Vec<f64>)> {
    let n = diag.len();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..n {
        let r = if i > 0 { off[i - 1].abs() } else { 0.0 } + if i + 1 < n { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    let scale = lo.abs().max(hi.abs()).max(1.0);
    while hi - lo > 4.0 * f64::EPSILON * scale {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(diag, off, mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let shift = lo - 1e-9 * scale;
    let shifted: Vec<f64> = diag.iter().map(|d| d - shift).collect();
    let sub: Vec<f64> = std::iter::once(0.0).chain(off.iter().copied()).collect();
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    for _ in 0..4 {
        let mut w = solve_tridiagonal(&sub, &shifted, off, &v)?;
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        w.iter_mut().for_each(|x| *x /= norm);
        v = w;
    }
    if v.iter().sum::<f64>() < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    // Rayleigh quotient of the converged vector
    let mut rq = 0.0;
    for i in 0..n {
        let mut av = diag[i] * v[i];
        if i > 0 {
            av += off[i - 1] * v[i - 1];
        }
        if i + 1 < n {
            av += off[i] * v[i + 1];
        }
        rq += v[i] * av;
    }
    Ok((rq, v))
}

/// Outcome of an iterative solve.
#[derive(Debug, Clone)]
pub struct CgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

/// Preconditioned conjugate gradients for a symmetric positive definite operator.
/// `precond` applies an SPD approximation of the inverse. Stops when ‖r‖ ≤ tol·‖b‖.
pub fn conjugate_gradient<F, P>(
    apply: F,
    precond: P,
    b: &[f64],
    x0: Vec<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<CgOutcome>
where
    F: Fn(&[f64], &mut [f64]),
    P: Fn(&[f64]) -> Vec<f64>,
{
    let n = b.len();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let bnorm = dot(b, b).sqrt().max(f64::MIN_POSITIVE);
    let mut x = x0;
    let mut ax = vec![0.0; n];
    apply(&x, &mut ax);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let mut z = precond(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for it in 0..max_iter {
        let rnorm = dot(&r, &r).sqrt();
        if rnorm <= tol * bnorm {
            return Ok(CgOutcome {
                x,
                iterations: it,
                residual: rnorm / bnorm,
            });
        }
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(Error::Singular("operator is not positive definite".into()));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        z = precond(&r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let rnorm = dot(&r, &r).sqrt() / bnorm;
    Err(Error::NoConvergence {
        what: "conjugate gradient",
        iterations: max_iter,
        residual: rnorm,
    })
}

/// Richardson extrapolation of a quantity with an even error expansion
/// c₂ε² + c₄ε⁴ + …, sampled at steps halving each time.
pub fn richardson_even(values: &[f64], ratio: f64) -> f64 {
    let mut table = values.to_vec();
    let mut factor = ratio * ratio;
    while table.len() > 1 {
        table = table
            .windows(2)
            .map(|w| (factor * w[1] - w[0]) / (factor - 1.0))
            .collect();
        factor *= ratio * ratio;
    }
    table[0]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thomas_matches_dense() {
        let sub = [0.0, -1.0, -1.0, -1.0];
        let diag = [4.0, 4.0, 4.0, 4.0];
        let sup = [-1.0, -1.0, -1.0, 0.0];
        let x = solve_tridiagonal(&sub, &diag, &sup, &[3.0, 2.0, 2.0, 3.0]).unwrap();
        for xi in x {
            assert!((xi - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn lowest_eigenvalue_of_path_laplacian() {
        // Dirichlet path Laplacian: eigenvalues 2 − 2cos(kπ/(n+1)).
        let n = 50;
        let diag = vec![2.0; n];
        let off = vec![-1.0; n - 1];
        let (l, v) = lowest_eigenpair_tridiagonal(&diag, &off).unwrap();
        let exact = 2.0 - 2.0 * (std::f64::consts::PI / (n as f64 + 1.0)).cos();
        assert!((l - exact).abs() < 1e-13);
        assert!(v.iter().all(|x| *x > 0.0));
    }

    #[test]
    fn cg_solves_spd() {
        let n = 30;
        let apply = |x: &[f64], y: &mut [f64]| {
            for i in 0..n {
                let mut s = 3.0 * x[i];
                if i > 0 {
                    s -= x[i - 1];
                }
                if i + 1 < n {
                    s -= x[i + 1];
                }
                y[i] = s;
            }
        };
        let b = vec![1.0; n];
        let precond = |r: &[f64]| r.iter().map(|v| v / 3.0).collect::<Vec<_>>();
        let out = conjugate_gradient(apply, precond, &b, vec![0.0; n], 1e-13, 200).unwrap();
        let mut y = vec![0.0; n];
        apply(&out.x, &mut y);
        assert!(y.iter().zip(&b).all(|(a, b)| (a - b).abs() < 1e-11));
    }

    #[test]
    fn richardson_removes_quadratic_error() {
        let f = |e: f64| 2.0 + 3.0 * e * e + 5.0 * e.powi(4);
        let vals = [f(0.1), f(0.05), f(0.025)];
        assert!((richardson_even(&vals, 2.0) - 2.0).abs() < 1e-12);
    }
}
