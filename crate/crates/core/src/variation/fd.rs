//! Central second differences of λ and ν along g + sh, Richardson-extrapolated, against
//! the second-variation forms.

use serde::{Deserialize, Serialize};

use super::{second_variation_lambda, second_variation_nu};
use crate::entropy::{lambda_entropy, nu_entropy, Tolerances};
use crate::error::{Error, Result};
use crate::geometry::{scalar_curvature, integrate, DiscreteMetric, ProductSphereMetric, SymTensorField};
use crate::linalg::richardson_even;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Functional {
    Lambda,
    Nu,
}

/// Result of a finite-difference Hessian check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FdCheck {
    pub functional: Functional,
    /// Extrapolated d²E/ds² at s = 0.
    pub fd_value: f64,
    /// The analytic second variation (λ: form/vol; ν: the form itself).
    pub form_value: f64,
    pub rel_err: f64,
    pub eps_schedule: Vec<f64>,
    /// Raw central differences, one per step.
    pub samples: Vec<f64>,
}

/// g + s·h within the ansatz of g.
pub fn perturbed_metric(g: &DiscreteMetric, h: &SymTensorField, s: f64) -> Result<DiscreteMetric> {
    g.check_tensor(h)?;
    Ok(match (g, h) {
        (DiscreteMetric::Warped(w), SymTensorField::Warped { ss, sph }) => {
            DiscreteMetric::Warped(w.deformed(ss, sph, s)?)
        }
        (DiscreteMetric::Torus(t), SymTensorField::Torus { h11, h12, h22 }) => {
            DiscreteMetric::Torus(t.deformed(h11, h12, h22, s)?)
        }
        (DiscreteMetric::Product(p), SymTensorField::Product { c1, c2 }) => {
            let (f1, f2) = (1.0 + s * c1, 1.0 + s * c2);
            if f1 <= 0.0 || f2 <= 0.0 {
                return Err(Error::StepSize(format!("g + {s}·h is not positive definite")));
            }
            let ((pp, q), (a, b)) = (p.dims(), p.radii());
            DiscreteMetric::Product(ProductSphereMetric::new(pp, q, a * f1.sqrt(), b * f2.sqrt())?)
        }
        _ => unreachable!("check_tensor guarantees a matching ansatz"),
    })
}

fn energy(g: &DiscreteMetric, functional: Functional, tol: &Tolerances) -> Result<f64> {
    Ok(match functional {
        Functional::Lambda => lambda_entropy(g, tol)?.value,
        Functional::Nu => nu_entropy(g, None, tol)?.value,
    })
}

/// Compares (E(g+εh) − 2E(g) + E(g−εh))/ε², extrapolated over `eps` (a geometric
/// sequence), with the second variation of E = λ or ν at g.
pub fn fd_hessian_check(
    g: &DiscreteMetric,
    h: &SymTensorField,
    functional: Functional,
    eps: &[f64],
    tol: &Tolerances,
) -> Result<FdCheck> {
    if eps.is_empty() || eps.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::Domain("the step schedule must be nonempty and positive".into()));
    }
    let ratio = if eps.len() > 1 { eps[0] / eps[1] } else { 2.0 };
    if eps.windows(2).any(|w| ((w[0] / w[1]) / ratio - 1.0).abs() > 1e-9) || !(ratio > 1.0) {
        return Err(Error::Domain(
            "the step schedule must decrease geometrically for Richardson extrapolation".into(),
        ));
    }
    let form_value = match functional {
        Functional::Lambda => second_variation_lambda(g, h)? / g.volume(),
        Functional::Nu => {
            let rbar = integrate(g, &scalar_curvature(g)?)? / g.volume();
            second_variation_nu(g, h, g.n() as f64 / (2.0 * rbar))?
        }
    };
    let metrics = eps
        .iter()
        .flat_map(|&e| [perturbed_metric(g, h, e), perturbed_metric(g, h, -e)])
        .collect::<Result<Vec<_>>>()?;
    let base = energy(g, functional, tol)?;
    let values: Vec<Result<f64>> = std::thread::scope(|scope| {
        let handles: Vec<_> = metrics
            .iter()
            .map(|m| scope.spawn(move || energy(m, functional, tol)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("entropy evaluation panicked"))
            .collect()
    });
    let values = values.into_iter().collect::<Result<Vec<_>>>()?;
    let samples: Vec<f64> = eps
        .iter()
        .enumerate()
        .map(|(i, e)| (values[2 * i] - 2.0 * base + values[2 * i + 1]) / (e * e))
        .collect();
    let fd_value = richardson_even(&samples, ratio);
    let rel_err = (fd_value - form_value).abs() / form_value.abs().max(f64::MIN_POSITIVE);
    Ok(FdCheck {
        functional,
        fd_value,
        form_value,
        rel_err,
        eps_schedule: eps.to_vec(),
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Torus2Metric;

    #[test]
    fn product_line_matches_form() {
        let g = DiscreteMetric::Product(ProductSphereMetric::new(2, 2, 1.0, 1.0).unwrap());
        let h = SymTensorField::Product { c1: 0.5, c2: -0.5 };
        let r = fd_hessian_check(&g, &h, Functional::Nu, &[1e-2, 5e-3, 2.5e-3], &Tolerances::default()).unwrap();
        assert!((r.form_value - 0.5).abs() < 1e-12);
        assert!(r.rel_err < 1e-6, "{r:?}");
    }

    #[test]
    fn torus_fourier_mode() {
        let t = Torus2Metric::flat(64).unwrap();
        let z = vec![0.0; t.len()];
        let h22: Vec<f64> = t.nodes().iter().map(|(x, _)| x.sin()).collect();
        let g = DiscreteMetric::Torus(t);
        let h = SymTensorField::Torus { h11: z.clone(), h12: z, h22 };
        let r = fd_hessian_check(&g, &h, Functional::Lambda, &[1e-2, 5e-3, 2.5e-3], &Tolerances::default()).unwrap();
        assert!((r.form_value + 0.25).abs() < 1e-10);
        assert!(r.rel_err < 1e-2, "{r:?}");
    }

    #[test]
    fn rejects_bad_schedules() {
        let g = DiscreteMetric::Product(ProductSphereMetric::new(2, 2, 1.0, 1.0).unwrap());
        let h = SymTensorField::Product { c1: 0.5, c2: -0.5 };
        let tol = Tolerances::default();
        assert!(fd_hessian_check(&g, &h, Functional::Nu, &[], &tol).is_err());
        assert!(fd_hessian_check(&g, &h, Functional::Nu, &[1e-2, 7e-3, 1e-3], &tol).is_err());
        assert!(matches!(
            fd_hessian_check(&g, &h, Functional::Nu, &[4.0, 2.0], &tol),
            Err(Error::StepSize(_))
        ));
    }
}
