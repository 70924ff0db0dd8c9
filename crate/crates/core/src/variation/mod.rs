//! Second variations of λ (at Ricci-flat metrics) and ν (at positive Einstein
//! metrics), the Jacobi operators L and N, stability reports and finite-difference
//! validation against the entropy solvers.
//!
//! The forms integrate against dV. For λ the second derivative of λ(g + sh) is the
//! form divided by vol(g), since λ's minimizer e^{−f} is the constant 1/vol.

mod fd;
mod stability;
mod vh;

use serde::{Deserialize, Serialize};

pub use fd::{fd_hessian_check, FdCheck, Functional};
pub use stability::{conformal_window, stability_report, zonal_harmonic, ConformalWindow, StabilityClass, StabilityReport, StabilitySource};
pub use vh::{solve_vh, VhSolution};

use crate::error::{Error, Result};
use crate::geometry::{
    covector_norm2, curvature_model, div_star, divergence, grad_norm2, hessian, inner, integrate, rm_apply,
    rough_laplacian, tensor_calculus, ConformalMode, CurvatureModel, DiscreteMetric, ScalarField, SymTensorField,
};

/// Tolerance on |Rc − g/2τ| relative to 1/2τ.
pub const EINSTEIN_TOL: f64 = 1e-6;

/// The integrated pieces of a second-variation form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FormTerms {
    /// −½∫|Dh|²
    pub dh: f64,
    /// ∫|div h|²
    pub div: f64,
    /// −½∫|Dv_h|²
    pub dv: f64,
    /// ∫Rm(h, h)
    pub rm: f64,
    /// ∫v_h²/4τ (ν only)
    pub v2: f64,
    /// −(1/2n)((1/vol)∫tr h)² (ν only, already outside the τ/vol factor)
    pub trace: f64,
    /// Overall factor on the integral part: 1 for λ, τ/vol for ν.
    pub factor: f64,
    pub value: f64,
}

impl FormTerms {
    /// Sum of the magnitudes of the terms, the scale for "vanishes" checks.
    pub fn magnitude(&self) -> f64 {
        self.factor * (self.dh.abs() + self.div.abs() + self.dv.abs() + self.rm.abs() + self.v2.abs())
            + self.trace.abs()
    }
}

fn require_ricci_flat(g: &DiscreteMetric) -> Result<()> {
    match g {
        DiscreteMetric::Torus(t) if t.constant_metric().is_some() => Ok(()),
        DiscreteMetric::Torus(_) => Err(Error::Precondition(
            "the λ second variation needs a Ricci-flat metric; this torus metric is not flat".into(),
        )),
        other => Err(Error::Precondition(format!(
            "the λ second variation needs a Ricci-flat metric; the {} ansatz has R > 0",
            other.ansatz()
        ))),
    }
}

/// Checks Rc = g/2τ through the closed-form curvature of the ansatz.
pub(crate) fn require_einstein(g: &DiscreteMetric, tau: f64) -> Result<()> {
    if !(tau > 0.0) {
        return Err(Error::Domain(format!("tau must be positive, got {tau}")));
    }
    let target = 1.0 / (2.0 * tau);
    let n = g.n() as f64;
    let defect = match (g, curvature_model(g)) {
        (DiscreteMetric::Torus(_), _) => target,
        (_, Ok(CurvatureModel::Constant { k })) => ((n - 1.0) * k - target).abs(),
        (_, Ok(CurvatureModel::Product { p, q, k1, k2 })) => {
            let r1 = (p as f64 - 1.0) * k1;
            let r2 = (q as f64 - 1.0) * k2;
            (r1 - target).abs().max((r2 - target).abs())
        }
        (_, Err(e)) => {
            return Err(Error::Precondition(format!(
                "the ν second variation needs a positive Einstein metric: {e}"
            )))
        }
    };
    if defect > EINSTEIN_TOL * target {
        return Err(Error::Precondition(format!(
            "not Einstein with Rc = g/2τ at τ = {tau}: Einstein defect |Rc − g/2τ| = {defect:e}"
        )));
    }
    Ok(())
}

fn integral(g: &DiscreteMetric, f: impl Into<ScalarField>) -> Result<f64> {
    integrate(g, &f.into())
}

fn terms(g: &DiscreteMetric, h: &SymTensorField, mode: ConformalMode) -> Result<(FormTerms, f64)> {
    let tc = tensor_calculus(g, h)?;
    let vh = solve_vh(g, h, mode)?;
    let div2 = covector_norm2(g, &tc.div_h)?;
    let dv2 = grad_norm2(g, &vh.v)?;
    let rm = tc.rm_hh()?.clone();
    let v2 = match mode {
        ConformalMode::Steady => 0.0,
        ConformalMode::Shrinker { tau } => integral(g, vh.v.map(|v| v * v / (4.0 * tau)))?,
    };
    let t = FormTerms {
        dh: -0.5 * integral(g, tc.dh_norm2.clone())?,
        div: integral(g, div2)?,
        dv: -0.5 * integral(g, dv2)?,
        rm: integral(g, rm)?,
        v2,
        trace: 0.0,
        factor: 1.0,
        value: 0.0,
    };
    let tr = integral(g, tc.tr_h.clone())?;
    Ok((t, tr))
}

/// The λ form ∫ −½|Dh|² + |div h|² − ½|Dv_h|² + Rm(h,h), term by term.
pub fn second_variation_lambda_terms(g: &DiscreteMetric, h: &SymTensorField) -> Result<FormTerms> {
    require_ricci_flat(g)?;
    let (mut t, _) = terms(g, h, ConformalMode::Steady)?;
    t.value = t.dh + t.div + t.dv + t.rm;
    Ok(t)
}

/// ∫ −½|Dh|² + |div h|² − ½|Dv_h|² + Rm(h,h) on a Ricci-flat metric.
pub fn second_variation_lambda(g: &DiscreteMetric, h: &SymTensorField) -> Result<f64> {
    Ok(second_variation_lambda_terms(g, h)?.value)
}

/// The ν form, term by term.
pub fn second_variation_nu_terms(g: &DiscreteMetric, h: &SymTensorField, tau: f64) -> Result<FormTerms> {
    require_einstein(g, tau)?;
    let (mut t, tr) = terms(g, h, ConformalMode::Shrinker { tau })?;
    let vol = g.volume();
    let n = g.n() as f64;
    t.factor = tau / vol;
    t.trace = -(tr / vol).powi(2) / (2.0 * n);
    t.value = t.factor * (t.dh + t.div + t.dv + t.rm + t.v2) + t.trace;
    Ok(t)
}

/// (τ/vol)∫[−½|Dh|² + |div h|² − ½|Dv_h|² + Rm(h,h) + v_h²/4τ] − (1/2n)((1/vol)∫tr h)²
/// at a positive Einstein metric with Rc = g/2τ.
pub fn second_variation_nu(g: &DiscreteMetric, h: &SymTensorField, tau: f64) -> Result<f64> {
    Ok(second_variation_nu_terms(g, h, tau)?.value)
}

fn jacobi(g: &DiscreteMetric, h: &SymTensorField, mode: ConformalMode) -> Result<SymTensorField> {
    let vh = solve_vh(g, h, mode)?;
    let lap = rough_laplacian(g, h)?.scaled(0.5);
    let dd = div_star(g, &divergence(g, h)?)?;
    let hess = hessian(g, &vh.v)?.scaled(0.5);
    let rm = rm_apply(g, h)?;
    lap.add_scaled(&dd, 1.0)?.add_scaled(&hess, 1.0)?.add_scaled(&rm, 1.0)
}

/// Lh = ½Δh + div*div h + ½D²v_h + Rm(h,·) on a Ricci-flat metric.
pub fn apply_l(g: &DiscreteMetric, h: &SymTensorField) -> Result<SymTensorField> {
    require_ricci_flat(g)?;
    jacobi(g, h, ConformalMode::Steady)
}

/// Nh = ½Δh + div*div h + ½D²v_h + Rm(h,·) − g/(2nτ vol)·∫tr h at a positive
/// Einstein metric with Rc = g/2τ.
pub fn apply_n(g: &DiscreteMetric, h: &SymTensorField, tau: f64) -> Result<SymTensorField> {
    require_einstein(g, tau)?;
    let base = jacobi(g, h, ConformalMode::Shrinker { tau })?;
    let tr = integral(g, crate::geometry::trace(g, h)?)?;
    let c = tr / (2.0 * g.n() as f64 * tau * g.volume());
    base.add_scaled(&SymTensorField::metric(g), -c)
}

/// ∫ A:B.
pub fn tensor_inner_product(g: &DiscreteMetric, a: &SymTensorField, b: &SymTensorField) -> Result<f64> {
    integral(g, inner(g, a, b)?)
}

/// ⟨Nh, h⟩/⟨h, h⟩.
pub fn rayleigh_quotient_n(g: &DiscreteMetric, h: &SymTensorField, tau: f64) -> Result<f64> {
    let nh = apply_n(g, h, tau)?;
    let den = tensor_inner_product(g, h, h)?;
    if !(den > 0.0) {
        return Err(Error::Domain("Rayleigh quotient of the zero tensor".into()));
    }
    Ok(tensor_inner_product(g, &nh, h)? / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_conformal_direction, Covector, ProductSphereMetric, Torus2Metric, WarpedSphereMetric};
    use std::f64::consts::PI;

    fn s4(m: usize) -> DiscreteMetric {
        DiscreteMetric::Warped(WarpedSphereMetric::round(4, m).unwrap())
    }

    #[test]
    fn torus_tt_mode() {
        let t = Torus2Metric::flat(64).unwrap();
        let (k, eps) = (2.0, 0.3);
        let z = vec![0.0; t.len()];
        let h22: Vec<f64> = t.nodes().iter().map(|(x, _)| eps * (k * x).sin()).collect();
        let g = DiscreteMetric::Torus(t);
        let h = SymTensorField::Torus { h11: z.clone(), h12: z, h22 };
        let v = second_variation_lambda(&g, &h).unwrap();
        assert!((v + PI * PI * k * k * eps * eps).abs() < 1e-10, "{v}");
    }

    #[test]
    fn metric_direction_is_null() {
        let t = DiscreteMetric::Torus(Torus2Metric::flat(32).unwrap());
        assert!(second_variation_lambda(&t, &SymTensorField::metric(&t)).unwrap().abs() < 1e-12);
        let g = s4(512);
        let v = second_variation_nu(&g, &SymTensorField::metric(&g), 1.0 / 6.0).unwrap();
        assert!(v.abs() < 1e-8, "{v}");
        let nh = apply_n(&g, &SymTensorField::metric(&g), 1.0 / 6.0).unwrap();
        assert!(nh.max_abs() < 1e-7, "{}", nh.max_abs());
    }

    #[test]
    fn product_anisotropy() {
        let g = DiscreteMetric::Product(ProductSphereMetric::new(2, 2, 1.0, 1.0).unwrap());
        let h = SymTensorField::Product { c1: 0.5, c2: -0.5 };
        assert!((second_variation_nu(&g, &h, 0.5).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(apply_n(&g, &h, 0.5).unwrap(), h);
    }

    #[test]
    fn preconditions() {
        let g = s4(64);
        assert!(matches!(
            second_variation_lambda(&g, &SymTensorField::metric(&g)),
            Err(Error::Precondition(_))
        ));
        assert!(matches!(
            second_variation_nu(&g, &SymTensorField::metric(&g), 0.2),
            Err(Error::Precondition(_))
        ));
        let p = DiscreteMetric::Warped(WarpedSphereMetric::perturbed(4, 64, 2, 0.1).unwrap());
        assert!(matches!(
            second_variation_nu(&p, &SymTensorField::metric(&p), 1.0 / 6.0),
            Err(Error::Precondition(_))
        ));
    }

    fn gegenbauer_invariant(g: &DiscreteMetric, l: usize) -> ScalarField {
        // Zonal harmonic of degree l on S^n: C_l^{((n−1)/2)}(cos s).
        let alpha = (g.n() as f64 - 1.0) / 2.0;
        g.coordinates()
            .iter()
            .map(|s| {
                let x = s.cos();
                let (mut p0, mut p1) = (1.0, 2.0 * alpha * x);
                if l == 0 {
                    return p0;
                }
                for k in 1..l {
                    let kf = k as f64;
                    let p2 = (2.0 * (kf + alpha) * x * p1 - (kf + 2.0 * alpha - 1.0) * p0) / (kf + 1.0);
                    p0 = p1;
                    p1 = p2;
                }
                p1
            })
            .collect::<Vec<_>>()
            .into()
    }

    #[test]
    fn conformal_directions_are_eigentensors() {
        // On the unit S^n, N(Su) = (n − 1 − μ/2)·Su for Δu = −μu, μ = l(l + n − 1).
        for n in [3usize, 4] {
            let g = DiscreteMetric::Warped(WarpedSphereMetric::round(n, 512).unwrap());
            let tau = 1.0 / (2.0 * (n as f64 - 1.0));
            for l in [2usize, 3] {
                let u = gegenbauer_invariant(&g, l);
                let h = make_conformal_direction(&g, &u, ConformalMode::Shrinker { tau }).unwrap();
                let mu = (l * (l + n - 1)) as f64;
                let expected = n as f64 - 1.0 - mu / 2.0;
                let rq = rayleigh_quotient_n(&g, &h, tau).unwrap();
                assert!((rq - expected).abs() < 1e-6 * expected.abs(), "n={n} l={l} {rq} {expected}");
                let form = second_variation_nu(&g, &h, tau).unwrap();
                let norm = tensor_inner_product(&g, &h, &h).unwrap();
                let predicted = tau / g.volume() * expected * norm;
                assert!((form - predicted).abs() < 1e-6 * predicted.abs(), "{form} {predicted}");
            }
        }
    }

    #[test]
    fn lie_derivative_directions_are_null() {
        let g = s4(512);
        let s = g.coordinates();
        let omega = Covector::Warped {
            s: s.iter().map(|s| s.sin() + 0.3 * (2.0 * s).sin() - 0.2 * (3.0 * s).sin()).collect(),
        };
        let h = div_star(&g, &omega).unwrap();
        let t = second_variation_nu_terms(&g, &h, 1.0 / 6.0).unwrap();
        assert!(t.value.abs() < 1e-6 * t.magnitude(), "{t:?}");
        let nh = apply_n(&g, &h, 1.0 / 6.0).unwrap();
        let q = tensor_inner_product(&g, &nh, &h).unwrap();
        assert!(q.abs() < 1e-6 * tensor_inner_product(&g, &h, &h).unwrap(), "{q}");

        let t = Torus2Metric::flat(64).unwrap();
        let w1: Vec<f64> = t.nodes().iter().map(|(x, y)| (x + 2.0 * y).sin() + 0.5 * (3.0 * x).cos()).collect();
        let w2: Vec<f64> = t.nodes().iter().map(|(x, y)| (2.0 * x - y).cos()).collect();
        let g = DiscreteMetric::Torus(t);
        let h = div_star(&g, &Covector::Torus { w1, w2 }).unwrap();
        let terms = second_variation_lambda_terms(&g, &h).unwrap();
        assert!(terms.value.abs() < 1e-10 * terms.magnitude(), "{terms:?}");
        let lh = apply_l(&g, &h).unwrap();
        assert!(lh.max_abs() < 1e-10, "{}", lh.max_abs());
    }
}
