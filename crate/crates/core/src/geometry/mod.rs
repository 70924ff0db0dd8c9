//! Metric ansätze and the differential operators the entropy and variation code needs.
//!
//! Three concrete ansätze are supported: rotationally symmetric metrics on Sⁿ
//! ([`WarpedSphereMetric`]), periodic metrics on T² ([`Torus2Metric`]) and
//! products of round spheres ([`ProductSphereMetric`]). Fields on a metric are
//! stored in the coordinates of its ansatz.

pub mod stencil;
mod product;
mod tensor;
mod torus;
mod warped;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use product::ProductSphereMetric;
pub use tensor::{
    covector_divergence, covector_norm2, curvature_model, div_star, divergence, grad_norm2,
    hessian, inner, laplacian_high_order, make_conformal_direction, rm_apply, rough_laplacian,
    tensor_calculus, trace, ConformalMode, CurvatureModel, TensorCalculus,
};
pub use torus::{index as torus_index, Spectral, Torus2Metric};
pub use warped::WarpedSphereMetric;

/// One of the supported metric ansätze.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "ansatz", rename_all = "snake_case")]
pub enum DiscreteMetric {
    Warped(WarpedSphereMetric),
    Torus(Torus2Metric),
    Product(ProductSphereMetric),
}

/// Values of a function on the grid of a metric (a single value for products).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ScalarField {
    pub values: Vec<f64>,
}

impl From<Vec<f64>> for ScalarField {
    fn from(values: Vec<f64>) -> Self {
        ScalarField { values }
    }
}

impl std::ops::Deref for ScalarField {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.values
    }
}

impl ScalarField {
    pub fn constant(len: usize, c: f64) -> Self {
        vec![c; len].into()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        self.values.iter().map(|&x| f(x)).collect::<Vec<_>>().into()
    }

    pub fn zip_map(&self, other: &[f64], f: impl Fn(f64, f64) -> f64) -> Self {
        self.values
            .iter()
            .zip(other)
            .map(|(&a, &b)| f(a, b))
            .collect::<Vec<_>>()
            .into()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |a, x| a.max(x.abs()))
    }
}

/// A symmetric 2-tensor in the coordinates of an ansatz.
///
/// Warped: h = ss·ds² + sph·φ²ĝ. Torus: h = h11 dx² + 2h12 dx dy + h22 dy².
/// Product: h = c1·g₁ + c2·g₂.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "ansatz", rename_all = "snake_case")]
pub enum SymTensorField {
    Warped { ss: Vec<f64>, sph: Vec<f64> },
    Torus { h11: Vec<f64>, h12: Vec<f64>, h22: Vec<f64> },
    Product { c1: f64, c2: f64 },
}

/// A 1-form in the coordinates of an ansatz (c ds on warped spheres).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "ansatz", rename_all = "snake_case")]
pub enum Covector {
    Warped { s: Vec<f64> },
    Torus { w1: Vec<f64>, w2: Vec<f64> },
    Product,
}

impl SymTensorField {
    /// The metric itself as a perturbation direction.
    pub fn metric(g: &DiscreteMetric) -> Self {
        match g {
            DiscreteMetric::Warped(w) => SymTensorField::Warped {
                ss: vec![1.0; w.len()],
                sph: vec![1.0; w.len()],
            },
            DiscreteMetric::Torus(t) => {
                let (a, b, c) = t.components();
                SymTensorField::Torus {
                    h11: a.to_vec(),
                    h12: b.to_vec(),
                    h22: c.to_vec(),
                }
            }
            DiscreteMetric::Product(_) => SymTensorField::Product { c1: 1.0, c2: 1.0 },
        }
    }

    pub fn zero(g: &DiscreteMetric) -> Self {
        SymTensorField::metric(g).scaled(0.0)
    }

    /// u·k pointwise.
    pub fn multiplied(&self, u: &[f64]) -> Self {
        let mul = |v: &Vec<f64>| v.iter().zip(u).map(|(a, b)| a * b).collect();
        match self {
            SymTensorField::Warped { ss, sph } => SymTensorField::Warped {
                ss: mul(ss),
                sph: mul(sph),
            },
            SymTensorField::Torus { h11, h12, h22 } => SymTensorField::Torus {
                h11: mul(h11),
                h12: mul(h12),
                h22: mul(h22),
            },
            SymTensorField::Product { c1, c2 } => SymTensorField::Product {
                c1: c1 * u[0],
                c2: c2 * u[0],
            },
        }
    }

    pub fn scaled(&self, k: f64) -> Self {
        self.combine(self, |a, _| k * a).expect("same ansatz")
    }

    /// self + k·other.
    pub fn add_scaled(&self, other: &Self, k: f64) -> Result<Self> {
        self.combine(other, |a, b| a + k * b)
    }

    fn combine(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let zip = |x: &Vec<f64>, y: &Vec<f64>| -> Result<Vec<f64>> {
            if x.len() != y.len() {
                return Err(Error::NonConforming {
                    expected: x.len(),
                    got: y.len(),
                });
            }
            Ok(x.iter().zip(y).map(|(a, b)| f(*a, *b)).collect())
        };
        Ok(match (self, other) {
            (SymTensorField::Warped { ss, sph }, SymTensorField::Warped { ss: s2, sph: p2 }) => {
                SymTensorField::Warped {
                    ss: zip(ss, s2)?,
                    sph: zip(sph, p2)?,
                }
            }
            (
                SymTensorField::Torus { h11, h12, h22 },
                SymTensorField::Torus {
                    h11: a,
                    h12: b,
                    h22: c,
                },
            ) => SymTensorField::Torus {
                h11: zip(h11, a)?,
                h12: zip(h12, b)?,
                h22: zip(h22, c)?,
            },
            (SymTensorField::Product { c1, c2 }, SymTensorField::Product { c1: d1, c2: d2 }) => {
                SymTensorField::Product {
                    c1: f(*c1, *d1),
                    c2: f(*c2, *d2),
                }
            }
            _ => {
                return Err(Error::Unsupported {
                    op: "tensor arithmetic",
                    detail: "tensors belong to different ansätze".into(),
                })
            }
        })
    }

    /// Largest absolute component value.
    pub fn max_abs(&self) -> f64 {
        let m = |v: &Vec<f64>| v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        match self {
            SymTensorField::Warped { ss, sph } => m(ss).max(m(sph)),
            SymTensorField::Torus { h11, h12, h22 } => m(h11).max(m(h12)).max(m(h22)),
            SymTensorField::Product { c1, c2 } => c1.abs().max(c2.abs()),
        }
    }
}

impl DiscreteMetric {
    /// Manifold dimension.
    pub fn n(&self) -> usize {
        match self {
            DiscreteMetric::Warped(w) => w.n(),
            DiscreteMetric::Torus(_) => 2,
            DiscreteMetric::Product(p) => p.n(),
        }
    }

    pub fn ansatz(&self) -> &'static str {
        match self {
            DiscreteMetric::Warped(_) => "warped",
            DiscreteMetric::Torus(_) => "torus",
            DiscreteMetric::Product(_) => "product",
        }
    }

    /// Number of grid values of a scalar field.
    pub fn field_len(&self) -> usize {
        match self {
            DiscreteMetric::Warped(w) => w.len(),
            DiscreteMetric::Torus(t) => t.len(),
            DiscreteMetric::Product(_) => 1,
        }
    }

    /// A short description of the grid for reports.
    pub fn grid_label(&self) -> String {
        match self {
            DiscreteMetric::Warped(w) => format!("warped n={} M={}", w.n(), w.m()),
            DiscreteMetric::Torus(t) => format!("torus {}x{}", t.m(), t.m()),
            DiscreteMetric::Product(p) => {
                let ((pp, q), (a, b)) = (p.dims(), p.radii());
                format!("S^{pp}({a}) x S^{q}({b})")
            }
        }
    }

    pub fn check_field(&self, values: &[f64]) -> Result<()> {
        if values.len() != self.field_len() {
            return Err(Error::NonConforming {
                expected: self.field_len(),
                got: values.len(),
            });
        }
        Ok(())
    }

    pub fn check_tensor(&self, h: &SymTensorField) -> Result<()> {
        match (self, h) {
            (DiscreteMetric::Warped(_), SymTensorField::Warped { ss, sph }) => {
                self.check_field(ss)?;
                self.check_field(sph)
            }
            (DiscreteMetric::Torus(_), SymTensorField::Torus { h11, h12, h22 }) => {
                self.check_field(h11)?;
                self.check_field(h12)?;
                self.check_field(h22)
            }
            (DiscreteMetric::Product(_), SymTensorField::Product { .. }) => Ok(()),
            _ => Err(Error::Unsupported {
                op: "tensor field",
                detail: format!("tensor does not belong to the {} ansatz", self.ansatz()),
            }),
        }
    }

    pub fn volume(&self) -> f64 {
        match self {
            DiscreteMetric::Warped(w) => w.volume(),
            DiscreteMetric::Torus(t) => t.volume(),
            DiscreteMetric::Product(p) => p.volume(),
        }
    }

    /// Quadrature weights; ∫f = Σ wᵢfᵢ.
    pub fn weights(&self) -> Vec<f64> {
        match self {
            DiscreteMetric::Warped(w) => w.weights(),
            DiscreteMetric::Torus(t) => t.weights(),
            DiscreteMetric::Product(p) => vec![p.volume()],
        }
    }

    /// Grid-node coordinates: s for warped, x for tori (row-major), 0 for products.
    pub fn coordinates(&self) -> Vec<f64> {
        match self {
            DiscreteMetric::Warped(w) => w.s_grid(),
            DiscreteMetric::Torus(t) => t.nodes().iter().map(|n| n.0).collect(),
            DiscreteMetric::Product(_) => vec![0.0],
        }
    }

    /// Discrete Dirichlet form Q(u, v) ≈ ∫⟨Du, Dv⟩, consistent with [`laplacian_apply`].
    pub fn dirichlet_form(&self, u: &[f64], v: &[f64]) -> f64 {
        match self {
            DiscreteMetric::Warped(w) => w.dirichlet_form(u, v),
            DiscreteMetric::Torus(t) => t.dirichlet_form(u, v),
            DiscreteMetric::Product(_) => 0.0,
        }
    }
}

/// Scalar curvature R on the grid.
pub fn scalar_curvature(g: &DiscreteMetric) -> Result<ScalarField> {
    Ok(match g {
        DiscreteMetric::Warped(w) => w.scalar_curvature().into(),
        DiscreteMetric::Torus(t) => t.scalar_curvature().into(),
        DiscreteMetric::Product(p) => vec![p.scalar_curvature()].into(),
    })
}

/// ∫ f dV.
pub fn integrate(g: &DiscreteMetric, f: &ScalarField) -> Result<f64> {
    g.check_field(f)?;
    Ok(match g {
        DiscreteMetric::Warped(w) => w.integrate(f),
        DiscreteMetric::Torus(t) => t.integrate(f),
        DiscreteMetric::Product(p) => f[0] * p.volume(),
    })
}

/// Δu = div grad u, self-adjoint for [`integrate`].
pub fn laplacian_apply(g: &DiscreteMetric, u: &ScalarField) -> Result<ScalarField> {
    g.check_field(u)?;
    Ok(match g {
        DiscreteMetric::Warped(w) => w.laplacian(u).into(),
        DiscreteMetric::Torus(t) => t.laplacian(u).into(),
        DiscreteMetric::Product(_) => vec![0.0].into(),
    })
}

/// Named warped-profile presets: `round`, `cylinder-capped:BETA`,
/// `perturbed:k=K,eps=E` (also `perturbed:K,E`).
pub fn warped_preset(name: &str, n: usize, m: usize) -> Result<WarpedSphereMetric> {
    let (head, args) = name.split_once(':').unwrap_or((name, ""));
    let num = |s: &str| -> Result<f64> {
        let v = s.rsplit('=').next().unwrap_or(s).trim();
        v.parse::<f64>()
            .map_err(|_| Error::Parse(format!("bad number `{s}` in profile `{name}`")))
    };
    match head.trim() {
        "round" => WarpedSphereMetric::round(n, m),
        "cylinder-capped" => {
            let beta = if args.is_empty() { 1.0 } else { num(args)? };
            WarpedSphereMetric::cylinder_capped(n, m, beta)
        }
        "perturbed" => {
            let parts: Vec<&str> = args.split(',').collect();
            if parts.len() != 2 {
                return Err(Error::Parse(format!(
                    "profile `{name}` needs two arguments, e.g. perturbed:k=2,eps=0.1"
                )));
            }
            let k = num(parts[0])?;
            if k < 0.0 || k.fract() != 0.0 {
                return Err(Error::Parse(format!("mode k must be a nonnegative integer in `{name}`")));
            }
            WarpedSphereMetric::perturbed(n, m, k as u32, num(parts[1])?)
        }
        other => Err(Error::Unknown {
            name: other.to_string(),
            known: "round, cylinder-capped:BETA, perturbed:k=K,eps=E".into(),
        }),
    }
}

/// Torus presets: `flat`, and `perturbed:k=K,eps=E` with
/// g = (1 + ε sin kx)dx² + ε sin(k(x+y))/2 dx dy + (1 + ε cos ky)dy².
pub fn torus_preset(name: &str, m: usize) -> Result<Torus2Metric> {
    let (head, args) = name.split_once(':').unwrap_or((name, ""));
    match head.trim() {
        "flat" => Torus2Metric::flat(m),
        "perturbed" => {
            let mut k = None;
            let mut eps = None;
            for part in args.split(',') {
                let (key, v) = part.split_once('=').unwrap_or(("", part));
                let v: f64 = v
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad number `{part}` in torus preset `{name}`")))?;
                match key.trim() {
                    "k" => k = Some(v),
                    "eps" => eps = Some(v),
                    _ if k.is_none() => k = Some(v),
                    _ => eps = Some(v),
                }
            }
            let (Some(k), Some(eps)) = (k, eps) else {
                return Err(Error::Parse(format!(
                    "torus preset `{name}` needs two arguments, e.g. perturbed:k=1,eps=0.1"
                )));
            };
            if k < 0.0 || k.fract() != 0.0 {
                return Err(Error::Parse(format!("mode k must be a nonnegative integer in `{name}`")));
            }
            Torus2Metric::from_fn(m, |x, y| {
                [
                    1.0 + eps * (k * x).sin(),
                    0.5 * eps * (k * (x + y)).sin(),
                    1.0 + eps * (k * y).cos(),
                ]
            })
        }
        other => Err(Error::Unknown {
            name: other.to_string(),
            known: "flat, perturbed:k=K,eps=E".into(),
        }),
    }
}
