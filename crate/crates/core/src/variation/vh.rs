//! The auxiliary potential v_h: Δv = div div h (steady) or Δv + v/2τ = div div h
//! with ∫v = 0 (shrinker).

use nalgebra::{DMatrix, DVector};
use rustfft::num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    covector_divergence, divergence, ConformalMode, DiscreteMetric, ScalarField, Spectral, SymTensorField,
    WarpedSphereMetric,
};
use crate::linalg::sturm_count;

/// Solution of the auxiliary equation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VhSolution {
    pub v: ScalarField,
    pub mode: ConformalMode,
    /// Sup-norm defect of the discrete equation, relative to max(1, ‖div div h‖∞).
    pub residual: f64,
}

/// Relative size of ∫div div h tolerated before the quadrature is declared inconsistent.
const COMPATIBILITY_TOL: f64 = 1e-6;

fn shift(mode: ConformalMode) -> Result<f64> {
    match mode {
        ConformalMode::Steady => Ok(0.0),
        ConformalMode::Shrinker { tau } if tau > 0.0 => Ok(1.0 / (2.0 * tau)),
        ConformalMode::Shrinker { tau } => Err(Error::Domain(format!("tau must be positive, got {tau}"))),
    }
}

/// Solves for v_h given h.
pub fn solve_vh(g: &DiscreteMetric, h: &SymTensorField, mode: ConformalMode) -> Result<VhSolution> {
    let rhs = covector_divergence(g, &divergence(g, h)?)?;
    solve_vh_rhs(g, &rhs, mode)
}

/// Solves Δv + c·v = rhs, c = 0 or 1/2τ, with ∫v = 0.
pub(crate) fn solve_vh_rhs(g: &DiscreteMetric, rhs: &ScalarField, mode: ConformalMode) -> Result<VhSolution> {
    let c = shift(mode)?;
    let scale = rhs.max_abs().max(1.0);
    let weights = g.weights();
    let total: f64 = weights.iter().zip(rhs.iter()).map(|(w, r)| w * r).sum();
    let magnitude: f64 = weights.iter().zip(rhs.iter()).map(|(w, r)| w * r.abs()).sum();
    if c == 0.0 && total.abs() > COMPATIBILITY_TOL * magnitude.max(f64::MIN_POSITIVE) && total.abs() > 1e-12 {
        return Err(Error::Consistency(format!(
            "∫div div h = {total:e} does not vanish; the steady equation has no solution"
        )));
    }
    let (v, residual) = match g {
        DiscreteMetric::Warped(w) => {
            if c > 0.0 {
                check_resonance_warped(w, c)?;
            }
            solve_warped(w, rhs, c, &weights)?
        }
        DiscreteMetric::Torus(t) => {
            let [e, f, gg] = t.constant_metric().ok_or_else(|| Error::Unsupported {
                op: "solve_vh",
                detail: "only flat tori are supported".into(),
            })?;
            let d = e * gg - f * f;
            let gi = [gg / d, -f / d, e / d];
            let sp = Spectral::new(t.m());
            let symbol = |kx: f64, ky: f64| -(gi[0] * kx * kx + 2.0 * gi[1] * kx * ky + gi[2] * ky * ky);
            let tol = 1e-8 * (1.0 + c);
            for j in 0..t.m() {
                for i in 0..t.m() {
                    let (kx, ky) = (sp.wavenumber(i), sp.wavenumber(j));
                    if c > 0.0 && (symbol(kx, ky) + c).abs() < tol {
                        return Err(resonance(c));
                    }
                }
            }
            let v = sp.multiply(rhs, |kx, ky| {
                if kx == 0.0 && ky == 0.0 {
                    Complex::new(0.0, 0.0)
                } else {
                    Complex::new(1.0 / (symbol(kx, ky) + c), 0.0)
                }
            });
            let lv = sp.multiply(&v, |kx, ky| Complex::new(symbol(kx, ky) + c, 0.0));
            let res = lv.iter().zip(rhs.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            (v, res / scale)
        }
        DiscreteMetric::Product(_) => (vec![0.0], rhs.max_abs() / scale),
    };
    Ok(VhSolution {
        v: v.into(),
        mode,
        residual,
    })
}

fn resonance(c: f64) -> Error {
    Error::Singular(format!(
        "1/2τ = {c} is an eigenvalue of −Δ; the shrinker equation for v_h is singular"
    ))
}

/// Rejects c within the discretization error of an eigenvalue of −Δ.
fn check_resonance_warped(w: &WarpedSphereMetric, c: f64) -> Result<()> {
    let (diag, off) = w.symmetric_neg_laplacian();
    let tol = 1e-8 + c * (1.0 + c) * w.ds() * w.ds();
    if sturm_count(&diag, &off, c + tol) > sturm_count(&diag, &off, c - tol) {
        return Err(resonance(c));
    }
    Ok(())
}

/// Bordered dense solve of the sixth-order operator: [Δ + c, 1; wᵀ, 0][v; κ] = [rhs; 0].
/// The multiplier κ absorbs the quadrature defect of ∫rhs and is reported in the residual.
fn solve_warped(w: &WarpedSphereMetric, rhs: &[f64], c: f64, weights: &[f64]) -> Result<(Vec<f64>, f64)> {
    let n = w.len();
    let mut a = DMatrix::<f64>::zeros(n + 1, n + 1);
    let mut unit = vec![0.0; n];
    for j in 0..n {
        unit[j] = 1.0;
        let col = w.laplacian6(&unit);
        unit[j] = 0.0;
        for i in 0..n {
            a[(i, j)] = col[i];
        }
        a[(j, j)] += c;
        a[(j, n)] = 1.0;
        a[(n, j)] = weights[j];
    }
    let mut b = DVector::<f64>::zeros(n + 1);
    for i in 0..n {
        b[i] = rhs[i];
    }
    let x = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::Singular("v_h operator is singular".into()))?;
    let v: Vec<f64> = x.iter().take(n).copied().collect();
    let lv = w.laplacian6(&v);
    let res = (0..n)
        .map(|i| (lv[i] + c * v[i] - rhs[i]).abs())
        .fold(0.0, f64::max);
    Ok((v, res / rhs.iter().fold(1.0f64, |m, r| m.max(r.abs()))))
}
