//! Reduced distance and reduced volume on model shrinkers, the soliton identities,
//! and the agreement Θ = e^ν between the central density and the entropy.
//!
//! Paths are parametrized by λ = √σ on [0, √τ]. In that variable the ℒ-length
//! ∫√σ(|γ′|² + R)dσ becomes ∫ ½|dγ/dλ|² + 2λ²R dλ, whose flat minimizers are linear.

use std::f64::consts::{E, PI};

use serde::{Deserialize, Serialize};

use crate::catalog::{density, einstein_tau, unit_sphere_volume, ShrinkerSpec};
use crate::entropy::{nu_entropy, Tolerances};
use crate::error::{Error, Result};
use crate::geometry::{DiscreteMetric, ProductSphereMetric, WarpedSphereMetric};
use crate::linalg::solve_tridiagonal;

/// Model shrinker with closed-form potential F and constant C = ν.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SolitonBackground {
    /// ℝⁿ with F(x, τ) = |x|²/4τ and C = 0.
    GaussianFlat { n: usize },
    /// Positive Einstein shrinker with F ≡ n/2; g(−τ) has Rc = g/2τ.
    Einstein { spec: ShrinkerSpec },
}

/// Einstein factors (dim, normalized volume) and the total quotient order.
fn einstein_parts(spec: &ShrinkerSpec, parts: &mut Vec<(usize, f64)>, order: &mut f64) -> Result<()> {
    match spec {
        ShrinkerSpec::Einstein { dim, normalized_volume } => {
            parts.push((*dim, *normalized_volume));
            Ok(())
        }
        ShrinkerSpec::Quotient { base, group_order } => {
            *order *= *group_order as f64;
            einstein_parts(base, parts, order)
        }
        ShrinkerSpec::Product { left, right } => {
            einstein_parts(left, parts, order)?;
            einstein_parts(right, parts, order)
        }
        other => Err(Error::Precondition(format!(
            "`{other}` is not a positive Einstein shrinker (products and quotients of Einstein factors only)"
        ))),
    }
}

/// (n, vol(g(−τ))) for an Einstein-type spec.
fn einstein_volume(spec: &ShrinkerSpec, tau: f64) -> Result<(usize, f64)> {
    spec.validate()?;
    let mut parts = Vec::new();
    let mut order = 1.0;
    einstein_parts(spec, &mut parts, &mut order)?;
    let n = parts.iter().map(|p| p.0).sum();
    // Each factor is stored at Rc = g/2τ_d; at scale τ its volume picks up (τ/τ_d)^{d/2}.
    let vol = parts
        .iter()
        .map(|&(d, v)| v * (tau / einstein_tau(d)).powf(d as f64 / 2.0))
        .product::<f64>()
        / order;
    Ok((n, vol))
}

impl SolitonBackground {
    pub fn gaussian(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("dimension must be positive".into()));
        }
        Ok(SolitonBackground::GaussianFlat { n })
    }

    pub fn einstein(spec: ShrinkerSpec) -> Result<Self> {
        einstein_volume(&spec, 1.0)?;
        Ok(SolitonBackground::Einstein { spec })
    }

    pub fn n(&self) -> usize {
        match self {
            SolitonBackground::GaussianFlat { n } => *n,
            SolitonBackground::Einstein { spec } => spec.dim(),
        }
    }

    /// C = ν of the shrinker.
    pub fn nu_constant(&self) -> Result<f64> {
        match self {
            SolitonBackground::GaussianFlat { .. } => Ok(0.0),
            SolitonBackground::Einstein { spec } => Ok(density(spec)?.nu),
        }
    }

    /// F(x, τ); on Einstein backgrounds x is ignored.
    pub fn potential(&self, x: &[f64], tau: f64) -> f64 {
        match self {
            SolitonBackground::GaussianFlat { .. } => x.iter().map(|v| v * v).sum::<f64>() / (4.0 * tau),
            SolitonBackground::Einstein { spec } => spec.dim() as f64 / 2.0,
        }
    }

    /// Scalar curvature of g(−τ).
    pub fn scalar_curvature(&self, tau: f64) -> f64 {
        match self {
            SolitonBackground::GaussianFlat { .. } => 0.0,
            SolitonBackground::Einstein { spec } => spec.dim() as f64 / (2.0 * tau),
        }
    }
}

/// Sup-norm residuals of the soliton identities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    /// ΔF + R − n/2τ (trace of D²F + Rc − g/2τ = 0).
    pub soliton: f64,
    /// |DF|² + R − F/τ.
    pub auxiliary: f64,
    /// (4πτ)^{−n/2}∫e^{−F−C} − 1.
    pub mass: f64,
    pub tolerance: f64,
    pub passed: bool,
}

const IDENTITY_TOL: f64 = 1e-10;
const IDENTITY_TAUS: [f64; 3] = [0.1, 1.0, 10.0];

/// Checks the three identities at τ ∈ {0.1, 1, 10}; on ℝⁿ at the points of a
/// lattice in |x| ≤ 4 with derivatives of F from central differences.
pub fn verify_soliton_identities(bg: &SolitonBackground) -> Result<IdentityReport> {
    let n = bg.n();
    let c = bg.nu_constant()?;
    let (mut soliton, mut auxiliary, mut mass) = (0.0f64, 0.0f64, 0.0f64);
    for tau in IDENTITY_TAUS {
        let r = bg.scalar_curvature(tau);
        match bg {
            SolitonBackground::GaussianFlat { .. } => {
                // Second differences are exact on quadratics; h only sets the rounding.
                let h = 1e-2;
                for point in lattice(n) {
                    let f0 = bg.potential(&point, tau);
                    let (mut lap, mut grad2) = (0.0, 0.0);
                    for i in 0..n {
                        let mut p = point.clone();
                        p[i] += h;
                        let fp = bg.potential(&p, tau);
                        p[i] -= 2.0 * h;
                        let fm = bg.potential(&p, tau);
                        lap += (fp - 2.0 * f0 + fm) / (h * h);
                        grad2 += ((fp - fm) / (2.0 * h)).powi(2);
                    }
                    let scale = 1.0 + f0 / tau;
                    soliton = soliton.max((lap + r - n as f64 / (2.0 * tau)).abs() / scale);
                    auxiliary = auxiliary.max((grad2 + r - f0 / tau).abs() / scale);
                }
                // ∫e^{−|x|²/4τ} = (4πτ)^{n/2}, one gaussian factor per axis.
                let integral = (4.0 * PI * tau).sqrt().powi(n as i32) * (-c).exp();
                mass = mass.max((integral * (4.0 * PI * tau).powf(-(n as f64) / 2.0) - 1.0).abs());
            }
            SolitonBackground::Einstein { spec } => {
                let f = bg.potential(&[], tau);
                let (_, vol) = einstein_volume(spec, tau)?;
                soliton = soliton.max((0.0 + r - n as f64 / (2.0 * tau)).abs() * tau);
                auxiliary = auxiliary.max((0.0 + r - f / tau).abs() * tau);
                let integral = (-f - c).exp() * vol;
                mass = mass.max((integral * (4.0 * PI * tau).powf(-(n as f64) / 2.0) - 1.0).abs());
            }
        }
    }
    let passed = soliton < IDENTITY_TOL && auxiliary < IDENTITY_TOL && mass < IDENTITY_TOL;
    Ok(IdentityReport {
        soliton,
        auxiliary,
        mass,
        tolerance: IDENTITY_TOL,
        passed,
    })
}

fn lattice(n: usize) -> Vec<Vec<f64>> {
    // Points x = r·e_i and r·(1, …, 1)/√n for r in {0, 0.5, …, 4}.
    let mut out = Vec::new();
    for k in 0..=8 {
        let r = 0.5 * k as f64;
        for i in 0..n {
            let mut p = vec![0.0; n];
            p[i] = r;
            out.push(p);
        }
        out.push(vec![r / (n as f64).sqrt(); n]);
    }
    out
}

/// θ = (4πτ)^{−n/2} e^{−n/2} vol(g(−τ)) for an Einstein-type spec; independent of τ.
pub fn reduced_volume_einstein(spec: &ShrinkerSpec, tau: f64) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(Error::Domain(format!("tau must be positive, got {tau}")));
    }
    let (n, vol) = einstein_volume(spec, tau)?;
    let nn = n as f64;
    Ok((4.0 * PI * tau).powf(-nn / 2.0) * E.powf(-nn / 2.0) * vol)
}

/// A minimized discrete ℒ-geodesic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LGeodesic {
    pub ell: f64,
    pub iterations: usize,
    pub grad_norm: f64,
    /// Nodes at λ_k = k√τ/K, k = 0..=K (ambient ℝ^{n+1} coordinates on spheres).
    pub path: Vec<Vec<f64>>,
}

/// Discrete ℒ-length on the background: the path lives in ℝⁿ (gaussian, γ₀ = 0) or on the
/// unit sphere Sⁿ ⊂ ℝ^{n+1} (Einstein round sphere, γ₀ free since g(−σ) → 0).
struct PathProblem {
    sphere: bool,
    /// Coefficient of |Δγ|²/Δλ on each interval.
    kinetic: Vec<f64>,
    /// ∫ 2λ²R dλ, independent of the path.
    potential: f64,
    dl: f64,
}

impl PathProblem {
    fn energy(&self, path: &[Vec<f64>]) -> f64 {
        let mut e = self.potential;
        for k in 0..self.kinetic.len() {
            let d2: f64 = path[k + 1].iter().zip(&path[k]).map(|(a, b)| (a - b) * (a - b)).sum();
            e += self.kinetic[k] * d2 / self.dl;
        }
        e
    }

    /// Gradient with respect to the free nodes (all but the last; also the first on ℝⁿ).
    fn gradient(&self, path: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let dim = path[0].len();
        let mut g = vec![vec![0.0; dim]; path.len()];
        for k in 0..self.kinetic.len() {
            let c = 2.0 * self.kinetic[k] / self.dl;
            for i in 0..dim {
                let d = path[k + 1][i] - path[k][i];
                g[k + 1][i] += c * d;
                g[k][i] -= c * d;
            }
        }
        let last = path.len() - 1;
        g[last].iter_mut().for_each(|v| *v = 0.0);
        if self.sphere {
            tangent_project(&mut g, path);
        } else {
            g[0].iter_mut().for_each(|v| *v = 0.0);
        }
        g
    }

    /// Applies the inverse of the kinetic Hessian (a weighted path Laplacian with the
    /// boundary conditions of the free nodes) coordinatewise.
    fn precondition(&self, g: &[Vec<f64>], path: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let len = g.len();
        let dim = g[0].len();
        // Unknowns: nodes first..last-1.
        let first = if self.sphere { 0 } else { 1 };
        let m = len - 1 - first;
        let mut diag = vec![0.0; m];
        let mut sub = vec![0.0; m];
        let mut sup = vec![0.0; m];
        for j in 0..m {
            let k = j + first;
            let left = if k > 0 { 2.0 * self.kinetic[k - 1] / self.dl } else { 0.0 };
            let right = 2.0 * self.kinetic[k] / self.dl;
            // Tiny shift keeps the free-end problem definite when the left weight vanishes.
            diag[j] = left + right + 1e-12 * right;
            if j > 0 {
                sub[j] = -left;
            }
            if j + 1 < m {
                sup[j] = -right;
            }
        }
        let mut out = vec![vec![0.0; dim]; len];
        for i in 0..dim {
            let rhs: Vec<f64> = (0..m).map(|j| g[j + first][i]).collect();
            let x = solve_tridiagonal(&sub, &diag, &sup, &rhs).expect("kinetic Hessian is definite");
            for j in 0..m {
                out[j + first][i] = x[j];
            }
        }
        if self.sphere {
            tangent_project(&mut out, path);
        }
        out
    }

    fn retract(&self, path: &mut [Vec<f64>]) {
        if self.sphere {
            for p in path.iter_mut() {
                let norm = p.iter().map(|v| v * v).sum::<f64>().sqrt();
                p.iter_mut().for_each(|v| *v /= norm);
            }
        }
    }
}

fn tangent_project(v: &mut [Vec<f64>], path: &[Vec<f64>]) {
    for (vk, pk) in v.iter_mut().zip(path) {
        let radial: f64 = vk.iter().zip(pk).map(|(a, b)| a * b).sum();
        vk.iter_mut().zip(pk).for_each(|(a, b)| *a -= radial * b);
    }
}

fn dot2(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.iter().zip(y).map(|(u, v)| u * v).sum::<f64>()).sum()
}

/// Reduced distance ℓ(x, τ) = L/(2√τ) by minimizing the discrete ℒ-length over paths
/// with K intervals (uniform in λ = √σ) ending at x.
///
/// On the gaussian background x ∈ ℝⁿ and paths start at the origin. On an Einstein
/// background the spec must be a round sphere; x is a point of the unit sphere in
/// ℝ^{n+1} and the start of the path is free.
pub fn l_geodesic(bg: &SolitonBackground, x: &[f64], tau: f64, k: usize, tol: &Tolerances) -> Result<LGeodesic> {
    if !(tau > 0.0) {
        return Err(Error::Domain(format!("tau must be positive, got {tau}")));
    }
    if k < 2 {
        return Err(Error::Domain("need at least two path intervals".into()));
    }
    let n = bg.n();
    let top = tau.sqrt();
    let dl = top / k as f64;
    let (problem, mut path) = match bg {
        SolitonBackground::GaussianFlat { .. } => {
            if x.len() != n {
                return Err(Error::NonConforming { expected: n, got: x.len() });
            }
            // Start from a bent path so the minimization is not trivial.
            let path: Vec<Vec<f64>> = (0..=k)
                .map(|j| {
                    let s = j as f64 / k as f64;
                    x.iter().enumerate().map(|(i, v)| v * s * s + 0.3 * (i as f64 + 1.0) * s * (1.0 - s)).collect()
                })
                .collect();
            let problem = PathProblem {
                sphere: false,
                kinetic: vec![0.5; k],
                potential: 0.0,
                dl,
            };
            (problem, path)
        }
        SolitonBackground::Einstein { spec } => {
            let round = ShrinkerSpec::sphere(n);
            let is_round = matches!((spec, &round), (
                ShrinkerSpec::Einstein { dim, normalized_volume },
                ShrinkerSpec::Einstein { normalized_volume: v0, .. },
            ) if *dim == n && (normalized_volume - v0).abs() <= 1e-12 * v0);
            if !is_round {
                return Err(Error::Unsupported {
                    op: "l_geodesic",
                    detail: "Einstein paths are implemented on the round sphere only".into(),
                });
            }
            if x.len() != n + 1 {
                return Err(Error::NonConforming { expected: n + 1, got: x.len() });
            }
            let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !(norm > 0.0) {
                return Err(Error::Domain("x must be a nonzero vector".into()));
            }
            let end: Vec<f64> = x.iter().map(|v| v / norm).collect();
            // g(−σ) = 2(n−1)σ·ĝ, so ½|γ_λ|² becomes (n−1)λ²|γ_λ|²_ĝ; R = n/2σ makes the
            // potential term ∫2λ²R dλ = n√τ for every path.
            let kinetic: Vec<f64> = (0..k)
                .map(|j| {
                    let lm = (j as f64 + 0.5) * dl;
                    (n as f64 - 1.0) * lm * lm
                })
                .collect();
            // Initial path: a great-circle arc of about one radian ending at x.
            let mut other = vec![0.0; n + 1];
            let idx = if end[0].abs() < 0.9 { 0 } else { 1 };
            other[idx] = 1.0;
            let proj: f64 = other.iter().zip(&end).map(|(a, b)| a * b).sum();
            let mut perp: Vec<f64> = other.iter().zip(&end).map(|(a, b)| a - proj * b).collect();
            let pn = perp.iter().map(|v| v * v).sum::<f64>().sqrt();
            perp.iter_mut().for_each(|v| *v /= pn);
            let path = (0..=k)
                .map(|j| {
                    let angle = 1.0 - j as f64 / k as f64;
                    end.iter().zip(&perp).map(|(e, p)| e * angle.cos() + p * angle.sin()).collect()
                })
                .collect();
            let problem = PathProblem {
                sphere: true,
                kinetic,
                potential: n as f64 * top,
                dl,
            };
            (problem, path)
        }
    };
    // Preconditioned Polak–Ribière+ with Armijo backtracking.
    let mut value = problem.energy(&path);
    let mut grad = problem.gradient(&path);
    let mut z = problem.precondition(&grad, &path);
    let mut gz = dot2(&grad, &z);
    let mut dir = z.clone();
    let mut iterations = 0;
    let scale = value.abs().max(1.0);
    while gz.max(0.0).sqrt() > tol.descent * scale && gz > 64.0 * f64::EPSILON * scale {
        if iterations >= tol.max_iter {
            return Err(Error::NoConvergence {
                what: "L-geodesic minimization",
                iterations,
                residual: gz.max(0.0).sqrt(),
            });
        }
        let mut slope = dot2(&grad, &dir);
        if slope <= 0.0 {
            dir = z.clone();
            slope = gz;
        }
        let mut alpha = 1.0;
        let accepted = loop {
            let mut trial: Vec<Vec<f64>> = path
                .iter()
                .zip(&dir)
                .map(|(p, d)| p.iter().zip(d).map(|(a, b)| a - alpha * b).collect())
                .collect();
            problem.retract(&mut trial);
            let v = problem.energy(&trial);
            if v <= value - 1e-4 * alpha * slope {
                break Some((trial, v));
            }
            alpha *= 0.5;
            if alpha < 1e-14 {
                break None;
            }
        };
        let Some((trial, v)) = accepted else { break };
        path = trial;
        value = v;
        let new_grad = problem.gradient(&path);
        let new_z = problem.precondition(&new_grad, &path);
        let new_gz = dot2(&new_grad, &new_z);
        let diff: f64 = new_z
            .iter()
            .zip(new_grad.iter().zip(&grad))
            .map(|(z, (a, b))| z.iter().zip(a.iter().zip(b)).map(|(z, (a, b))| z * (a - b)).sum::<f64>())
            .sum();
        let beta = (diff / gz).max(0.0);
        dir = new_z
            .iter()
            .zip(&dir)
            .map(|(z, d)| z.iter().zip(d).map(|(a, b)| a + beta * b).collect())
            .collect();
        grad = new_grad;
        z = new_z;
        gz = new_gz;
        iterations += 1;
    }
    Ok(LGeodesic {
        ell: value / (2.0 * top),
        iterations,
        grad_norm: gz.max(0.0).sqrt(),
        path,
    })
}

/// Minimizes independent (x, τ) queries on scoped threads; results keep the input order.
pub fn l_geodesic_batch(
    bg: &SolitonBackground,
    queries: &[(Vec<f64>, f64)],
    k: usize,
    tol: &Tolerances,
) -> Vec<Result<LGeodesic>> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = queries
            .iter()
            .map(|(x, tau)| scope.spawn(move || l_geodesic(bg, x, *tau, k, tol)))
            .collect();
        handles.into_iter().map(|h| h.join().expect("path minimization panicked")).collect()
    })
}

/// Θ against e^ν for one shrinker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub spec: String,
    pub theta: f64,
    /// e^ν from the entropy solver on a matching ansatz, if there is one.
    pub exp_nu: Option<f64>,
    pub rel_diff: Option<f64>,
    pub agree: Option<bool>,
    pub ansatz: Option<String>,
}

const CONSISTENCY_TOL: f64 = 1e-3;

fn round_sphere_dim(spec: &ShrinkerSpec) -> Option<usize> {
    match spec {
        ShrinkerSpec::Einstein { dim, normalized_volume } => {
            let v0 = unit_sphere_volume(*dim).ok()?;
            ((normalized_volume - v0).abs() <= 1e-12 * v0).then_some(*dim)
        }
        _ => None,
    }
}

/// Compares Θ (closed form) with e^ν (entropy solver on the warped round sphere with
/// `grid_m` intervals, or the product-of-spheres ansatz). Specs without a numeric
/// ansatz give a closed-form-only report.
pub fn theta_nu_consistency(spec: &ShrinkerSpec, grid_m: usize, tol: &Tolerances) -> Result<ConsistencyReport> {
    let theta = density(spec)?.theta;
    let numeric: Option<(f64, String)> = if spec.is_flat() {
        // ν(ℝⁿ) = 0: the gaussian attains 𝒲 = 0 at every τ.
        Some((0.0, "gaussian".into()))
    } else if let Some(n) = round_sphere_dim(spec) {
        let g = DiscreteMetric::Warped(WarpedSphereMetric::round(n, grid_m)?);
        Some((nu_entropy(&g, None, tol)?.value, g.grid_label()))
    } else if let ShrinkerSpec::Product { left, right } = spec {
        match (round_sphere_dim(left), round_sphere_dim(right)) {
            (Some(p), Some(q)) => {
                // Common Einstein scale τ = 1/2: radii² 2τ(d − 1).
                let prod = ProductSphereMetric::new(p, q, (p as f64 - 1.0).sqrt(), (q as f64 - 1.0).sqrt())?;
                let g = DiscreteMetric::Product(prod);
                Some((nu_entropy(&g, None, tol)?.value, g.grid_label()))
            }
            _ => None,
        }
    } else {
        None
    };
    let (exp_nu, rel_diff, agree, ansatz) = match numeric {
        Some((nu, label)) => {
            let e = nu.exp();
            let rel = (e - theta).abs() / theta;
            (Some(e), Some(rel), Some(rel < CONSISTENCY_TOL), Some(label))
        }
        None => (None, None, None, None),
    };
    Ok(ConsistencyReport {
        spec: spec.to_string(),
        theta,
        exp_nu,
        rel_diff,
        agree,
        ansatz,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{builtin_entries, parse_spec};

    #[test]
    fn einstein_reduced_volume() {
        let s4 = ShrinkerSpec::sphere(4);
        for tau in [1.0 / 6.0, 1.0, 0.1, 10.0] {
            let th = reduced_volume_einstein(&s4, tau).unwrap();
            assert!((th - 6.0 / (E * E)).abs() < 1e-12);
        }
        let s3 = reduced_volume_einstein(&ShrinkerSpec::sphere(3), 2.0).unwrap();
        assert!((s3 - 2.0 * PI.sqrt() * E.powf(-1.5)).abs() < 1e-12);
        let rp4 = reduced_volume_einstein(&parse_spec("quotient(einstein:s4, 2)").unwrap(), 0.3).unwrap();
        assert!((rp4 - 3.0 / (E * E)).abs() < 1e-12);
        let mut checked = 0;
        for e in builtin_entries() {
            if let Ok(th) = reduced_volume_einstein(&e.spec, 0.7) {
                assert!((th - e.theta).abs() < 1e-12, "{}", e.name);
                checked += 1;
            }
        }
        assert!(checked >= 8, "{checked}");
        assert!(reduced_volume_einstein(&ShrinkerSpec::flat(4), 1.0).is_err());
    }

    #[test]
    fn identities() {
        let g = verify_soliton_identities(&SolitonBackground::gaussian(4).unwrap()).unwrap();
        assert!(g.passed, "{g:?}");
        let s = verify_soliton_identities(&SolitonBackground::einstein(ShrinkerSpec::sphere(4)).unwrap()).unwrap();
        assert!(s.passed, "{s:?}");
    }

    #[test]
    fn gaussian_reduced_distance() {
        let bg = SolitonBackground::gaussian(4).unwrap();
        let tol = Tolerances::default();
        let zero = l_geodesic(&bg, &[0.0; 4], 1.0, 64, &tol).unwrap();
        assert!(zero.ell.abs() < 1e-12);
        let x = [1.0, -1.0, 1.0, 1.0];
        let r = l_geodesic(&bg, &x, 1.0, 256, &tol).unwrap();
        assert!((r.ell - 1.0).abs() < 1e-3, "{r:?}");
        // Minimizer is the straight radial segment.
        for (j, p) in r.path.iter().enumerate() {
            let s = j as f64 / 256.0;
            assert!(p.iter().zip(&x).all(|(a, b)| (a - b * s).abs() < 1e-6));
        }
    }

    #[test]
    fn energy_nonincreasing_in_k() {
        let bg = SolitonBackground::gaussian(4).unwrap();
        let queries: Vec<(Vec<f64>, f64)> = vec![(vec![3.0, 0.0, -1.0, 2.0], 0.5); 4];
        let ks = [8, 16, 32, 64];
        let ells: Vec<f64> = ks
            .iter()
            .zip(&queries)
            .map(|(&k, (x, tau))| l_geodesic(&bg, x, *tau, k, &Tolerances::default()).unwrap().ell)
            .collect();
        assert!(ells.windows(2).all(|w| w[1] <= w[0] + 1e-10), "{ells:?}");
        let batch = l_geodesic_batch(&bg, &queries, 32, &Tolerances::default());
        assert!(batch.iter().all(|r| (r.as_ref().unwrap().ell - 7.0).abs() < 1e-8));
    }

    #[test]
    fn sphere_vertex_distance() {
        let bg = SolitonBackground::einstein(ShrinkerSpec::sphere(4)).unwrap();
        let r = l_geodesic(&bg, &[0.0, 0.0, 0.0, 0.0, 1.0], 1.0, 128, &Tolerances::default()).unwrap();
        assert!((r.ell - 2.0).abs() < 1e-2, "{}", r.ell);
        assert!(r.ell >= 2.0 - 1e-12);
    }

    #[test]
    fn flat_consistency() {
        let r = theta_nu_consistency(&ShrinkerSpec::flat(4), 64, &Tolerances::default()).unwrap();
        assert_eq!((r.theta, r.exp_nu, r.agree), (1.0, Some(1.0), Some(true)));
        let part = theta_nu_consistency(&ShrinkerSpec::complex_projective(2), 64, &Tolerances::default()).unwrap();
        assert_eq!(part.agree, None);
    }

    #[test]
    fn sphere_and_product_consistency() {
        let tol = Tolerances::default();
        for spec in [ShrinkerSpec::sphere(4), parse_spec("product(einstein:s2, einstein:s2)").unwrap()] {
            let r = theta_nu_consistency(&spec, 256, &tol).unwrap();
            assert_eq!(r.agree, Some(true), "{r:?}");
            assert!(r.rel_diff.unwrap() < 1e-4, "{r:?}");
        }
    }
}
