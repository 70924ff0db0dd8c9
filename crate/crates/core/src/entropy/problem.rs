//! Discrete scalar problem shared by the λ and ν solvers: quadrature weights, the
//! stiffness (Dirichlet-form) matrix and shifted Sobolev solves.

use crate::error::{Error, Result};
use crate::geometry::{scalar_curvature, DiscreteMetric, Spectral};
use crate::linalg::{conjugate_gradient, solve_tridiagonal};

pub(crate) struct ScalarProblem<'a> {
    pub g: &'a DiscreteMetric,
    pub mass: Vec<f64>,
    pub r: Vec<f64>,
    edges: Vec<f64>,
    torus: Option<(Spectral, Vec<f64>, f64)>,
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl<'a> ScalarProblem<'a> {
    pub fn new(g: &'a DiscreteMetric) -> Result<Self> {
        let r = scalar_curvature(g)?.values;
        let mass = g.weights();
        let (edges, torus) = match g {
            DiscreteMetric::Warped(w) => (w.edge_coefficients(), None),
            DiscreteMetric::Torus(t) => {
                let (symbol, m0) = t.mean_metric_symbol();
                (vec![], Some((Spectral::new(t.m()), symbol, m0)))
            }
            DiscreteMetric::Product(_) => (vec![], None),
        };
        Ok(ScalarProblem {
            g,
            mass,
            r,
            edges,
            torus,
        })
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    /// K u, with Q(u, v) = v·Ku.
    pub fn stiffness(&self, u: &[f64]) -> Vec<f64> {
        match self.g {
            DiscreteMetric::Warped(_) => {
                let e = &self.edges;
                let m = u.len() - 1;
                (0..=m)
                    .map(|i| {
                        let mut s = 0.0;
                        if i < m {
                            s += e[i] * (u[i] - u[i + 1]);
                        }
                        if i > 0 {
                            s += e[i - 1] * (u[i] - u[i - 1]);
                        }
                        s
                    })
                    .collect()
            }
            DiscreteMetric::Torus(t) => t.stiffness_apply(u),
            DiscreteMetric::Product(_) => vec![0.0; u.len()],
        }
    }

    pub fn dirichlet(&self, u: &[f64]) -> f64 {
        dot(u, &self.stiffness(u))
    }

    /// ∫ a·b.
    pub fn integrate_product(&self, a: &[f64], b: &[f64]) -> f64 {
        self.mass.iter().zip(a).zip(b).map(|((m, x), y)| m * x * y).sum()
    }

    /// ∫ R w².
    pub fn potential(&self, w: &[f64]) -> f64 {
        self.mass
            .iter()
            .zip(&self.r)
            .zip(w)
            .map(|((m, r), x)| m * r * x * x)
            .sum()
    }

    /// Solves (a·K + diag(c)·M) z = rhs for a ≥ 0 and c > 0 pointwise.
    pub fn solve_shifted(&self, a: f64, c: &[f64], rhs: &[f64], x0: Option<&[f64]>) -> Result<Vec<f64>> {
        if c.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::Singular("shifted operator is not positive definite".into()));
        }
        match self.g {
            DiscreteMetric::Warped(_) => {
                let e = &self.edges;
                let n = self.len();
                let mut diag = vec![0.0; n];
                let mut sub = vec![0.0; n];
                let mut sup = vec![0.0; n];
                for i in 0..n {
                    diag[i] = c[i] * self.mass[i];
                    if i + 1 < n {
                        diag[i] += a * e[i];
                        sup[i] = -a * e[i];
                    }
                    if i > 0 {
                        diag[i] += a * e[i - 1];
                        sub[i] = -a * e[i - 1];
                    }
                }
                solve_tridiagonal(&sub, &diag, &sup, rhs)
            }
            DiscreteMetric::Torus(t) => {
                let (sp, symbol, m0) = self.torus.as_ref().expect("torus data");
                let cbar = c.iter().sum::<f64>() / c.len() as f64;
                let pre: Vec<f64> = symbol.iter().map(|s| 1.0 / (a * s + cbar * m0)).collect();
                let precond = |r: &[f64]| {
                    let mut hat = sp.forward(r);
                    hat.iter_mut().zip(&pre).for_each(|(z, p)| *z *= *p);
                    sp.inverse_real(hat)
                };
                let apply = |x: &[f64], y: &mut [f64]| {
                    let k = t.stiffness_apply(x);
                    for i in 0..x.len() {
                        y[i] = a * k[i] + c[i] * self.mass[i] * x[i];
                    }
                };
                let start = x0.map(|x| x.to_vec()).unwrap_or_else(|| precond(rhs));
                Ok(conjugate_gradient(apply, precond, rhs, start, 1e-13, 5000)?.x)
            }
            DiscreteMetric::Product(_) => Ok(vec![rhs[0] / (c[0] * self.mass[0])]),
        }
    }
}
