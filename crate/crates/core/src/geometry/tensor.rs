//! Tensor calculus for symmetric 2-tensors on the supported ansätze.
//!
//! Warped spheres use the reduction of invariant tensors h = a ds² + b φ²ĝ to the
//! pair (a, b) with q = φ′/φ:
//!
//! - |Dh|² = a′² + (n−1)b′² + 2(n−1)q²(a−b)²
//! - div h = (a′ + (n−1)q(a−b)) ds, div(c ds) = c′ + (n−1)qc
//! - div*(c ds) = −c′ ds² − qc φ²ĝ, D²u = u″ ds² + qu′ φ²ĝ
//! - Δ(e ds²) = (Δe − 2(n−1)q²e) ds² + 2q²e φ²ĝ
//!
//! Flat tori are handled spectrally; products of spheres carry constant tensors.

use rustfft::num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::stencil::Parity;
use super::{Covector, DiscreteMetric, ScalarField, Spectral, SymTensorField, Torus2Metric};
use crate::error::{Error, Result};

/// Curvature operator available in closed form on a background.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CurvatureModel {
    /// Constant sectional curvature K.
    Constant { k: f64 },
    /// Round factors of dimensions p, q with curvatures k1, k2.
    Product { p: usize, q: usize, k1: f64, k2: f64 },
}

/// Einstein metric convention for conformal directions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ConformalMode {
    Steady,
    Shrinker { tau: f64 },
}

/// Pointwise quantities built from h.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorCalculus {
    pub dh_norm2: ScalarField,
    pub div_h: Covector,
    pub divdiv_h: ScalarField,
    pub tr_h: ScalarField,
    pub h_norm2: ScalarField,
    pub rm_hh: Option<ScalarField>,
    pub rm_hh_unavailable: Option<String>,
}

impl TensorCalculus {
    pub fn rm_hh(&self) -> Result<&ScalarField> {
        self.rm_hh.as_ref().ok_or_else(|| {
            Error::CurvatureModelUnavailable(self.rm_hh_unavailable.clone().unwrap_or_default())
        })
    }
}

const CURVATURE_TOL: f64 = 1e-6;

/// Closed-form curvature model, if the background has one.
pub fn curvature_model(g: &DiscreteMetric) -> Result<CurvatureModel> {
    match g {
        DiscreteMetric::Warped(w) => {
            let (k, dev) = w.constant_curvature();
            if dev > CURVATURE_TOL * k.abs().max(1.0) {
                return Err(Error::CurvatureModelUnavailable(format!(
                    "warped profile is not of constant curvature (deviation {dev:e})"
                )));
            }
            Ok(CurvatureModel::Constant { k })
        }
        DiscreteMetric::Torus(t) => {
            flat_inverse(t)?;
            Ok(CurvatureModel::Constant { k: 0.0 })
        }
        DiscreteMetric::Product(p) => {
            let (pp, q) = p.dims();
            let (k1, k2) = p.factor_curvatures();
            Ok(CurvatureModel::Product { p: pp, q, k1, k2 })
        }
    }
}

/// Inverse of a constant torus metric, or an error for non-flat tori.
fn flat_inverse(t: &Torus2Metric) -> Result<[[f64; 2]; 2]> {
    let [e, f, g] = t.constant_metric().ok_or_else(|| Error::Unsupported {
        op: "torus tensor calculus",
        detail: "only flat (constant-coefficient) tori are supported".into(),
    })?;
    let d = e * g - f * f;
    Ok([[g / d, -f / d], [-f / d, e / d]])
}

fn components(h: &SymTensorField) -> [[&Vec<f64>; 2]; 2] {
    match h {
        SymTensorField::Torus { h11, h12, h22 } => [[h11, h12], [h12, h22]],
        _ => unreachable!("torus tensor expected"),
    }
}

fn mismatch(g: &DiscreteMetric) -> Error {
    Error::Unsupported {
        op: "tensor calculus",
        detail: format!("field does not belong to the {} ansatz", g.ansatz()),
    }
}

fn zip2(a: &[f64], b: &[f64], f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| f(*x, *y)).collect()
}

/// tr_g h.
pub fn trace(g: &DiscreteMetric, h: &SymTensorField) -> Result<ScalarField> {
    g.check_tensor(h)?;
    Ok(match (g, h) {
        (DiscreteMetric::Warped(w), SymTensorField::Warped { ss, sph }) => {
            let k = w.n() as f64 - 1.0;
            zip2(ss, sph, |a, b| a + k * b).into()
        }
        (DiscreteMetric::Torus(t), h @ SymTensorField::Torus { .. }) => {
            let gi = flat_inverse(t)?;
            let c = components(h);
            (0..t.len())
                .map(|p| {
                    let mut s = 0.0;
                    for i in 0..2 {
                        for j in 0..2 {
                            s += gi[i][j] * c[i][j][p];
                        }
                    }
                    s
                })
                .collect::<Vec<_>>()
                .into()
        }
        (DiscreteMetric::Product(p), SymTensorField::Product { c1, c2 }) => {
            let (pp, q) = p.dims();
            vec![pp as f64 * c1 + q as f64 * c2].into()
        }
        _ => return Err(mismatch(g)),
    })
}

/// Pointwise ⟨h, k⟩.
pub fn inner(g: &DiscreteMetric, h: &SymTensorField, k: &SymTensorField) -> Result<ScalarField> {
    g.check_tensor(h)?;
    g.check_tensor(k)?;
    Ok(match (g, h, k) {
        (
            DiscreteMetric::Warped(w),
            SymTensorField::Warped { ss: a1, sph: b1 },
            SymTensorField::Warped { ss: a2, sph: b2 },
        ) => {
            let nm1 = w.n() as f64 - 1.0;
            (0..w.len())
                .map(|i| a1[i] * a2[i] + nm1 * b1[i] * b2[i])
                .collect::<Vec<_>>()
                .into()
        }
        (DiscreteMetric::Torus(t), SymTensorField::Torus { .. }, SymTensorField::Torus { .. }) => {
            let gi = flat_inverse(t)?;
            let (x, y) = (components(h), components(k));
            (0..t.len())
                .map(|p| {
                    let mut s = 0.0;
                    for i in 0..2 {
                        for j in 0..2 {
                            for a in 0..2 {
                                for b in 0..2 {
                                    s += gi[i][a] * gi[j][b] * x[i][j][p] * y[a][b][p];
                                }
                            }
                        }
                    }
                    s
                })
                .collect::<Vec<_>>()
                .into()
        }
        (
            DiscreteMetric::Product(p),
            SymTensorField::Product { c1, c2 },
            SymTensorField::Product { c1: d1, c2: d2 },
        ) => {
            let (pp, q) = p.dims();
            vec![pp as f64 * c1 * d1 + q as f64 * c2 * d2].into()
        }
        _ => return Err(mismatch(g)),
    })
}

/// Pointwise |ω|².
pub fn covector_norm2(g: &DiscreteMetric, w: &Covector) -> Result<ScalarField> {
    Ok(match (g, w) {
        (DiscreteMetric::Warped(_), Covector::Warped { s }) => {
            g.check_field(s)?;
            s.iter().map(|c| c * c).collect::<Vec<_>>().into()
        }
        (DiscreteMetric::Torus(t), Covector::Torus { w1, w2 }) => {
            g.check_field(w1)?;
            g.check_field(w2)?;
            let gi = flat_inverse(t)?;
            (0..t.len())
                .map(|p| {
                    gi[0][0] * w1[p] * w1[p] + 2.0 * gi[0][1] * w1[p] * w2[p] + gi[1][1] * w2[p] * w2[p]
                })
                .collect::<Vec<_>>()
                .into()
        }
        (DiscreteMetric::Product(_), Covector::Product) => vec![0.0].into(),
        _ => return Err(mismatch(g)),
    })
}

/// Pointwise |Du|², with the high-order derivative of the ansatz.
pub fn grad_norm2(g: &DiscreteMetric, u: &ScalarField) -> Result<ScalarField> {
    g.check_field(u)?;
    match g {
        DiscreteMetric::Warped(w) => {
            Ok(w.d1(u, Parity::Even).iter().map(|d| d * d).collect::<Vec<_>>().into())
        }
        DiscreteMetric::Torus(t) => {
            let sp = Spectral::new(t.m());
            let w = Covector::Torus {
                w1: sp.derivative(u, 0),
                w2: sp.derivative(u, 1),
            };
            covector_norm2(g, &w)
        }
        DiscreteMetric::Product(_) => Ok(vec![0.0].into()),
    }
}

/// High-order Δu (sixth-order on warped spheres, spectral on flat tori).
pub fn laplacian_high_order(g: &DiscreteMetric, u: &ScalarField) -> Result<ScalarField> {
    g.check_field(u)?;
    match g {
        DiscreteMetric::Warped(w) => Ok(w.laplacian6(u).into()),
        DiscreteMetric::Torus(t) => {
            let gi = flat_inverse(t)?;
            let sp = Spectral::new(t.m());
            Ok(sp
                .multiply(u, |kx, ky| {
                    Complex::new(-(gi[0][0] * kx * kx + 2.0 * gi[0][1] * kx * ky + gi[1][1] * ky * ky), 0.0)
                })
                .into())
        }
        DiscreteMetric::Product(_) => Ok(vec![0.0].into()),
    }
}

/// (div h)_i = D^j h_ji.
pub fn divergence(g: &DiscreteMetric, h: &SymTensorField) -> Result<Covector> {
    g.check_tensor(h)?;
    Ok(match (g, h) {
        (DiscreteMetric::Warped(w), SymTensorField::Warped { ss, sph }) => {
            let da = w.d1(ss, Parity::Even);
            let e = zip2(ss, sph, |a, b| a - b);
            let qe = w.q_even_vanishing(&e);
            let k = w.n() as f64 - 1.0;
            Covector::Warped {
                s: zip2(&da, &qe, |a, b| a + k * b),
            }
        }
        (DiscreteMetric::Torus(t), h @ SymTensorField::Torus { .. }) => {
            let gi = flat_inverse(t)?;
            let sp = Spectral::new(t.m());
            let c = components(h);
            // d[k][i][j] = ∂_k h_ij
            let d: Vec<Vec<Vec<Vec<f64>>>> = (0..2)
                .map(|k| {
                    (0..2)
                        .map(|i| (0..2).map(|j| sp.derivative(c[i][j], k)).collect())
                        .collect()
                })
                .collect();
            let comp = |i: usize| -> Vec<f64> {
                (0..t.len())
                    .map(|p| {
                        let mut s = 0.0;
                        for j in 0..2 {
                            for k in 0..2 {
                                s += gi[j][k] * d[k][j][i][p];
                            }
                        }
                        s
                    })
                    .collect()
            };
            Covector::Torus {
                w1: comp(0),
                w2: comp(1),
            }
        }
        (DiscreteMetric::Product(_), SymTensorField::Product { .. }) => Covector::Product,
        _ => return Err(mismatch(g)),
    })
}

/// div ω = D^i ω_i.
pub fn covector_divergence(g: &DiscreteMetric, w: &Covector) -> Result<ScalarField> {
    Ok(match (g, w) {
        (DiscreteMetric::Warped(m), Covector::Warped { s }) => {
            g.check_field(s)?;
            m.divergence6(s).into()
        }
        (DiscreteMetric::Torus(t), Covector::Torus { w1, w2 }) => {
            g.check_field(w1)?;
            g.check_field(w2)?;
            let gi = flat_inverse(t)?;
            let sp = Spectral::new(t.m());
            let (d11, d12) = (sp.derivative(w1, 0), sp.derivative(w1, 1));
            let (d21, d22) = (sp.derivative(w2, 0), sp.derivative(w2, 1));
            (0..t.len())
                .map(|p| gi[0][0] * d11[p] + gi[0][1] * (d12[p] + d21[p]) + gi[1][1] * d22[p])
                .collect::<Vec<_>>()
                .into()
        }
        (DiscreteMetric::Product(_), Covector::Product) => vec![0.0].into(),
        _ => return Err(mismatch(g)),
    })
}

/// (div*ω)_ij = −(D_iω_j + D_jω_i)/2, the formal adjoint of div.
pub fn div_star(g: &DiscreteMetric, w: &Covector) -> Result<SymTensorField> {
    Ok(match (g, w) {
        (DiscreteMetric::Warped(m), Covector::Warped { s }) => {
            g.check_field(s)?;
            SymTensorField::Warped {
                ss: m.d1(s, Parity::Odd).iter().map(|d| -d).collect(),
                sph: m.q_odd(s).iter().map(|d| -d).collect(),
            }
        }
        (DiscreteMetric::Torus(t), Covector::Torus { w1, w2 }) => {
            g.check_field(w1)?;
            g.check_field(w2)?;
            flat_inverse(t)?;
            let sp = Spectral::new(t.m());
            let (d11, d12) = (sp.derivative(w1, 0), sp.derivative(w1, 1));
            let (d21, d22) = (sp.derivative(w2, 0), sp.derivative(w2, 1));
            SymTensorField::Torus {
                h11: d11.iter().map(|d| -d).collect(),
                h12: zip2(&d12, &d21, |a, b| -(a + b) / 2.0),
                h22: d22.iter().map(|d| -d).collect(),
            }
        }
        (DiscreteMetric::Product(_), Covector::Product) => SymTensorField::Product { c1: 0.0, c2: 0.0 },
        _ => return Err(mismatch(g)),
    })
}

/// D²u.
pub fn hessian(g: &DiscreteMetric, u: &ScalarField) -> Result<SymTensorField> {
    g.check_field(u)?;
    Ok(match g {
        DiscreteMetric::Warped(w) => {
            let du = w.d1(u, Parity::Even);
            SymTensorField::Warped {
                ss: w.d2(u, Parity::Even),
                sph: w.q_odd(&du),
            }
        }
        DiscreteMetric::Torus(t) => {
            flat_inverse(t)?;
            let sp = Spectral::new(t.m());
            let sym = |a: usize, b: usize| {
                sp.multiply(u, move |kx, ky| {
                    let k = [kx, ky];
                    Complex::new(-k[a] * k[b], 0.0)
                })
            };
            SymTensorField::Torus {
                h11: sym(0, 0),
                h12: sym(0, 1),
                h22: sym(1, 1),
            }
        }
        DiscreteMetric::Product(_) => SymTensorField::Product { c1: 0.0, c2: 0.0 },
    })
}

/// Rough Laplacian Δh = D^k D_k h.
pub fn rough_laplacian(g: &DiscreteMetric, h: &SymTensorField) -> Result<SymTensorField> {
    g.check_tensor(h)?;
    Ok(match (g, h) {
        (DiscreteMetric::Warped(w), SymTensorField::Warped { ss, sph }) => {
            let e = zip2(ss, sph, |a, b| a - b);
            let le = w.laplacian6(&e);
            let lb = w.laplacian6(sph);
            let q2e = w.q2_even_vanishing(&e);
            let k = w.n() as f64 - 1.0;
            SymTensorField::Warped {
                ss: (0..w.len()).map(|i| le[i] - 2.0 * k * q2e[i] + lb[i]).collect(),
                sph: (0..w.len()).map(|i| 2.0 * q2e[i] + lb[i]).collect(),
            }
        }
        (DiscreteMetric::Torus(_), SymTensorField::Torus { h11, h12, h22 }) => {
            let lap = |v: &Vec<f64>| laplacian_high_order(g, &v.clone().into()).map(|f| f.values);
            SymTensorField::Torus {
                h11: lap(h11)?,
                h12: lap(h12)?,
                h22: lap(h22)?,
            }
        }
        (DiscreteMetric::Product(_), SymTensorField::Product { .. }) => {
            SymTensorField::Product { c1: 0.0, c2: 0.0 }
        }
        _ => return Err(mismatch(g)),
    })
}

/// Rm(h, ·)_ij = R_ikjl h_kl.
pub fn rm_apply(g: &DiscreteMetric, h: &SymTensorField) -> Result<SymTensorField> {
    g.check_tensor(h)?;
    let model = curvature_model(g)?;
    Ok(match (model, h) {
        (CurvatureModel::Constant { k }, SymTensorField::Warped { ss, sph }) => {
            let tr = trace(g, h)?;
            SymTensorField::Warped {
                ss: zip2(&tr, ss, |t, a| k * (t - a)),
                sph: zip2(&tr, sph, |t, b| k * (t - b)),
            }
        }
        (CurvatureModel::Constant { k }, h @ SymTensorField::Torus { .. }) => {
            // Flat: k = 0; kept general for the constant-curvature identity.
            let tr = trace(g, h)?;
            let (DiscreteMetric::Torus(t), SymTensorField::Torus { h11, h12, h22 }) = (g, h) else {
                unreachable!()
            };
            let (g11, g12, g22) = t.components();
            SymTensorField::Torus {
                h11: (0..t.len()).map(|p| k * (tr[p] * g11[p] - h11[p])).collect(),
                h12: (0..t.len()).map(|p| k * (tr[p] * g12[p] - h12[p])).collect(),
                h22: (0..t.len()).map(|p| k * (tr[p] * g22[p] - h22[p])).collect(),
            }
        }
        (CurvatureModel::Product { p, q, k1, k2 }, SymTensorField::Product { c1, c2 }) => {
            SymTensorField::Product {
                c1: k1 * (p as f64 - 1.0) * c1,
                c2: k2 * (q as f64 - 1.0) * c2,
            }
        }
        _ => return Err(mismatch(g)),
    })
}

/// Rm(h, h) = R_ikjl h_ij h_kl.
fn rm_hh(g: &DiscreteMetric, h: &SymTensorField, tr: &[f64], norm2: &[f64]) -> Result<ScalarField> {
    Ok(match curvature_model(g)? {
        CurvatureModel::Constant { k } => zip2(tr, norm2, |t, n| k * (t * t - n)).into(),
        CurvatureModel::Product { p, q, k1, k2 } => {
            let SymTensorField::Product { c1, c2 } = h else {
                return Err(mismatch(g));
            };
            let (p, q) = (p as f64, q as f64);
            vec![k1 * p * (p - 1.0) * c1 * c1 + k2 * q * (q - 1.0) * c2 * c2].into()
        }
    })
}

/// |Dh|², div h, div div h, tr h, |h|² and (where a curvature model exists) Rm(h, h).
pub fn tensor_calculus(g: &DiscreteMetric, h: &SymTensorField) -> Result<TensorCalculus> {
    g.check_tensor(h)?;
    let tr_h = trace(g, h)?;
    let h_norm2 = inner(g, h, h)?;
    let div_h = divergence(g, h)?;
    let divdiv_h = covector_divergence(g, &div_h)?;
    let dh_norm2: ScalarField = match (g, h) {
        (DiscreteMetric::Warped(w), SymTensorField::Warped { ss, sph }) => {
            let da = w.d1(ss, Parity::Even);
            let db = w.d1(sph, Parity::Even);
            let qe = w.q_even_vanishing(&zip2(ss, sph, |a, b| a - b));
            let k = w.n() as f64 - 1.0;
            (0..w.len())
                .map(|i| da[i] * da[i] + k * db[i] * db[i] + 2.0 * k * qe[i] * qe[i])
                .collect::<Vec<_>>()
                .into()
        }
        (DiscreteMetric::Torus(t), h @ SymTensorField::Torus { .. }) => {
            let gi = flat_inverse(t)?;
            let sp = Spectral::new(t.m());
            let c = components(h);
            let d: Vec<Vec<Vec<Vec<f64>>>> = (0..2)
                .map(|k| {
                    (0..2)
                        .map(|i| (0..2).map(|j| sp.derivative(c[i][j], k)).collect())
                        .collect()
                })
                .collect();
            (0..t.len())
                .map(|p| {
                    let mut s = 0.0;
                    for k in 0..2 {
                        for a in 0..2 {
                            for i in 0..2 {
                                for b in 0..2 {
                                    for j in 0..2 {
                                        for cc in 0..2 {
                                            s += gi[k][a] * gi[i][b] * gi[j][cc] * d[k][i][j][p] * d[a][b][cc][p];
                                        }
                                    }
                                }
                            }
                        }
                    }
                    s
                })
                .collect::<Vec<_>>()
                .into()
        }
        (DiscreteMetric::Product(_), _) => vec![0.0].into(),
        _ => return Err(mismatch(g)),
    };
    let (rm, unavailable) = match rm_hh(g, h, &tr_h, &h_norm2) {
        Ok(v) => (Some(v), None),
        Err(Error::CurvatureModelUnavailable(msg)) => (None, Some(msg)),
        Err(e) => return Err(e),
    };
    Ok(TensorCalculus {
        dh_norm2,
        div_h,
        divdiv_h,
        tr_h,
        h_norm2,
        rm_hh: rm,
        rm_hh_unavailable: unavailable,
    })
}

/// Su = (Δu)g − D²u, plus ug/2τ in shrinker mode: divergence free on Einstein metrics.
pub fn make_conformal_direction(
    g: &DiscreteMetric,
    u: &ScalarField,
    mode: ConformalMode,
) -> Result<SymTensorField> {
    g.check_field(u)?;
    let lap = laplacian_high_order(g, u)?;
    let shift = match mode {
        ConformalMode::Steady => 0.0,
        ConformalMode::Shrinker { tau } => {
            if !(tau > 0.0) {
                return Err(Error::Domain(format!("tau must be positive, got {tau}")));
            }
            1.0 / (2.0 * tau)
        }
    };
    let coeff = lap.zip_map(u, |l, v| l + shift * v);
    let gu = SymTensorField::metric(g).multiplied(&coeff);
    gu.add_scaled(&hessian(g, u)?, -1.0)
}
