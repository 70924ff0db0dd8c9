//! Rotationally symmetric metrics g = ds² + φ(s)² ĝ on Sⁿ, sampled on a uniform grid.
//!
//! Scalar operators used by the entropies (Laplacian, quadrature, Dirichlet form) form
//! a conservative second-order scheme whose Laplacian is exactly self-adjoint for the
//! quadrature. Tensor calculus uses sixth-order reflected stencils so that gauge
//! identities hold to high accuracy at the poles.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::stencil::{self, Parity};
use crate::catalog::unit_sphere_volume;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WarpedRaw")]
pub struct WarpedSphereMetric {
    n: usize,
    length: f64,
    phi: Vec<f64>,
}

#[derive(Deserialize)]
struct WarpedRaw {
    n: usize,
    length: f64,
    phi: Vec<f64>,
}

impl TryFrom<WarpedRaw> for WarpedSphereMetric {
    type Error = Error;
    fn try_from(raw: WarpedRaw) -> Result<Self> {
        WarpedSphereMetric::new(raw.n, raw.length, raw.phi)
    }
}

impl WarpedSphereMetric {
    /// Validates closure at both poles and positivity in the interior.
    pub fn new(n: usize, length: f64, phi: Vec<f64>) -> Result<Self> {
        if n < 2 {
            return Err(Error::Construction(format!("warped sphere needs n >= 2, got {n}")));
        }
        if phi.len() < 33 {
            return Err(Error::Construction(format!(
                "warped grid needs M >= 32 intervals, got {}",
                phi.len().saturating_sub(1)
            )));
        }
        if !(length > 0.0 && length.is_finite()) || phi.iter().any(|p| !p.is_finite()) {
            return Err(Error::Construction("profile must be finite with L > 0".into()));
        }
        let m = phi.len() - 1;
        let scale = phi.iter().fold(1.0f64, |a, p| a.max(p.abs()));
        if phi[0].abs() > 1e-10 * scale || phi[m].abs() > 1e-10 * scale {
            return Err(Error::DegenerateMetric(format!(
                "profile must vanish at both poles (phi(0) = {}, phi(L) = {})",
                phi[0], phi[m]
            )));
        }
        if let Some(i) = (1..m).find(|&i| phi[i] <= 0.0) {
            return Err(Error::DegenerateMetric(format!(
                "phi = {} <= 0 at interior node {i}",
                phi[i]
            )));
        }
        let metric = WarpedSphereMetric { n, length, phi };
        let ds = metric.ds();
        let dphi = metric.dphi();
        let tol = (50.0 * ds * ds).max(1e-6);
        if (dphi[0] - 1.0).abs() > tol || (dphi[m] + 1.0).abs() > tol {
            return Err(Error::DegenerateMetric(format!(
                "profile does not close smoothly: phi'(0) = {}, phi'(L) = {}",
                dphi[0], dphi[m]
            )));
        }
        Ok(metric)
    }

    /// Samples `phi` on `[0, length]` with `m` intervals.
    pub fn from_fn(n: usize, length: f64, m: usize, phi: impl Fn(f64) -> f64) -> Result<Self> {
        let h = length / m as f64;
        let mut values: Vec<f64> = (0..=m).map(|i| phi(i as f64 * h)).collect();
        values[0] = 0.0;
        values[m] = 0.0;
        Self::new(n, length, values)
    }

    /// Unit round sphere, φ = sin s.
    pub fn round(n: usize, m: usize) -> Result<Self> {
        Self::from_fn(n, PI, m, f64::sin)
    }

    /// Round sphere of radius r, φ = r sin(s/r).
    pub fn round_radius(n: usize, m: usize, r: f64) -> Result<Self> {
        if !(r > 0.0) {
            return Err(Error::Domain(format!("radius must be positive, got {r}")));
        }
        Self::from_fn(n, PI * r, m, |s| r * (s / r).sin())
    }

    /// φ = sin s · (1 + ε sin²s cos ks).
    pub fn perturbed(n: usize, m: usize, k: u32, eps: f64) -> Result<Self> {
        Self::from_fn(n, PI, m, |s| {
            s.sin() * (1.0 + eps * s.sin().powi(2) * (k as f64 * s).cos())
        })
    }

    /// φ = sin s / √(1 + β sin²s): a sphere whose equator is pinched toward a neck.
    pub fn cylinder_capped(n: usize, m: usize, beta: f64) -> Result<Self> {
        if !(beta > -1.0) {
            return Err(Error::Domain(format!("cylinder-capped needs beta > -1, got {beta}")));
        }
        Self::from_fn(n, PI, m, |s| s.sin() / (1.0 + beta * s.sin().powi(2)).sqrt())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of grid intervals M.
    pub fn m(&self) -> usize {
        self.phi.len() - 1
    }

    pub fn len(&self) -> usize {
        self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi.is_empty()
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn ds(&self) -> f64 {
        self.length / self.m() as f64
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn s_grid(&self) -> Vec<f64> {
        let h = self.ds();
        (0..self.len()).map(|i| i as f64 * h).collect()
    }

    fn link_volume(&self) -> f64 {
        unit_sphere_volume(self.n - 1).expect("n >= 2")
    }

    pub fn dphi(&self) -> Vec<f64> {
        stencil::d1(&self.phi, Parity::Odd, self.ds())
    }

    pub fn ddphi(&self) -> Vec<f64> {
        stencil::d2(&self.phi, Parity::Odd, self.ds())
    }

    /// Radial and tangential sectional curvatures −φ″/φ and (1 − φ′²)/φ².
    pub fn sectional_curvatures(&self) -> (Vec<f64>, Vec<f64>) {
        let (dp, ddp) = (self.dphi(), self.ddphi());
        let m = self.m();
        let mut krad = vec![0.0; m + 1];
        let mut ktan = vec![0.0; m + 1];
        for i in 1..m {
            krad[i] = -ddp[i] / self.phi[i];
            ktan[i] = (1.0 - dp[i] * dp[i]) / (self.phi[i] * self.phi[i]);
        }
        for k in [&mut krad, &mut ktan] {
            k[0] = stencil::even_pole_limit(k[1], k[2], k[3]);
            k[m] = stencil::even_pole_limit(k[m - 1], k[m - 2], k[m - 3]);
        }
        (krad, ktan)
    }

    pub fn scalar_curvature(&self) -> Vec<f64> {
        let nn = self.n as f64;
        let (krad, ktan) = self.sectional_curvatures();
        krad.iter()
            .zip(&ktan)
            .map(|(kr, kt)| (nn - 1.0) * (2.0 * kr + (nn - 2.0) * kt))
            .collect()
    }

    /// Constant sectional curvature K and the largest deviation from it.
    pub fn constant_curvature(&self) -> (f64, f64) {
        let (krad, ktan) = self.sectional_curvatures();
        let all: Vec<f64> = krad.iter().chain(&ktan).copied().collect();
        let mean = all.iter().sum::<f64>() / all.len() as f64;
        let dev = all.iter().fold(0.0f64, |a, k| a.max((k - mean).abs()));
        (mean, dev)
    }

    /// Quadrature weights (control volumes), including vol(S^{n−1}).
    pub fn weights(&self) -> Vec<f64> {
        let h = self.ds();
        let nn = self.n as f64;
        let c = self.link_volume();
        let m = self.m();
        let pole = (h / 2.0).powf(nn) / nn;
        (0..=m)
            .map(|i| {
                if i == 0 || i == m {
                    c * pole
                } else {
                    c * h * self.phi[i].powi(self.n as i32 - 1)
                }
            })
            .collect()
    }

    /// Edge coefficients c_{i+½} with Q(u, v) = Σ c_{i+½}(u_{i+1} − u_i)(v_{i+1} − v_i).
    pub fn edge_coefficients(&self) -> Vec<f64> {
        let h = self.ds();
        let c = self.link_volume();
        self.phi
            .windows(2)
            .map(|w| c * (0.5 * (w[0] + w[1])).powi(self.n as i32 - 1) / h)
            .collect()
    }

    pub fn integrate(&self, f: &[f64]) -> f64 {
        self.weights().iter().zip(f).map(|(w, v)| w * v).sum()
    }

    pub fn volume(&self) -> f64 {
        self.weights().iter().sum()
    }

    /// Discrete Dirichlet form ∫⟨Du, Dv⟩.
    pub fn dirichlet_form(&self, u: &[f64], v: &[f64]) -> f64 {
        self.edge_coefficients()
            .iter()
            .enumerate()
            .map(|(i, c)| c * (u[i + 1] - u[i]) * (v[i + 1] - v[i]))
            .sum()
    }

    /// Conservative Laplacian; ∫ v Δu = −Q(u, v) exactly.
    pub fn laplacian(&self, u: &[f64]) -> Vec<f64> {
        let c = self.edge_coefficients();
        let w = self.weights();
        let m = self.m();
        (0..=m)
            .map(|i| {
                let right = if i < m { c[i] * (u[i + 1] - u[i]) } else { 0.0 };
                let left = if i > 0 { c[i - 1] * (u[i] - u[i - 1]) } else { 0.0 };
                (right - left) / w[i]
            })
            .collect()
    }

    /// Tridiagonal matrix of −Δ symmetrized by W^{1/2}: (diag, off).
    pub fn symmetric_neg_laplacian(&self) -> (Vec<f64>, Vec<f64>) {
        let c = self.edge_coefficients();
        let w = self.weights();
        let m = self.m();
        let diag = (0..=m)
            .map(|i| {
                let mut d = 0.0;
                if i < m {
                    d += c[i];
                }
                if i > 0 {
                    d += c[i - 1];
                }
                d / w[i]
            })
            .collect();
        let off = (0..m).map(|i| -c[i] / (w[i] * w[i + 1]).sqrt()).collect();
        (diag, off)
    }

    // Sixth-order calculus on invariant fields. Even fields: scalars and the
    // components of invariant symmetric tensors; odd fields: 1-form components.

    pub(crate) fn d1(&self, u: &[f64], parity: Parity) -> Vec<f64> {
        stencil::d1(u, parity, self.ds())
    }

    pub(crate) fn d2(&self, u: &[f64], parity: Parity) -> Vec<f64> {
        stencil::d2(u, parity, self.ds())
    }

    fn q(&self) -> Vec<f64> {
        let dp = self.dphi();
        let m = self.m();
        (0..=m)
            .map(|i| if i == 0 || i == m { 0.0 } else { dp[i] / self.phi[i] })
            .collect()
    }

    /// (φ′/φ)·c for odd c; the pole limit is c′.
    pub(crate) fn q_odd(&self, c: &[f64]) -> Vec<f64> {
        let q = self.q();
        let dc = self.d1(c, Parity::Odd);
        let m = self.m();
        let mut out: Vec<f64> = q.iter().zip(c).map(|(a, b)| a * b).collect();
        out[0] = dc[0];
        out[m] = dc[m];
        out
    }

    /// (φ′/φ)·e for even e vanishing at the poles; odd result.
    pub(crate) fn q_even_vanishing(&self, e: &[f64]) -> Vec<f64> {
        self.q().iter().zip(e).map(|(a, b)| a * b).collect()
    }

    /// (φ′/φ)²·e for even e vanishing at the poles; the pole limit is e″/2.
    pub(crate) fn q2_even_vanishing(&self, e: &[f64]) -> Vec<f64> {
        let q = self.q();
        let de = self.d2(e, Parity::Even);
        let m = self.m();
        let mut out: Vec<f64> = q.iter().zip(e).map(|(a, b)| a * a * b).collect();
        out[0] = de[0] / 2.0;
        out[m] = de[m] / 2.0;
        out
    }

    /// Sixth-order Laplacian of an even function, u″ + (n−1)(φ′/φ)u′.
    pub(crate) fn laplacian6(&self, u: &[f64]) -> Vec<f64> {
        let du = self.d1(u, Parity::Even);
        let ddu = self.d2(u, Parity::Even);
        let qdu = self.q_odd(&du);
        let k = self.n as f64 - 1.0;
        ddu.iter().zip(&qdu).map(|(a, b)| a + k * b).collect()
    }

    /// Divergence of the 1-form c ds.
    pub(crate) fn divergence6(&self, c: &[f64]) -> Vec<f64> {
        let dc = self.d1(c, Parity::Odd);
        let qc = self.q_odd(c);
        let k = self.n as f64 - 1.0;
        dc.iter().zip(&qc).map(|(a, b)| a + k * b).collect()
    }

    /// The metric g + t·h for h = a ds² + b φ²ĝ, rewritten in arc length and
    /// resampled onto a uniform grid with the same number of intervals.
    pub fn deformed(&self, a: &[f64], b: &[f64], t: f64) -> Result<Self> {
        let m = self.m();
        let mut stretch = Vec::with_capacity(m + 1);
        let mut phi_new = Vec::with_capacity(m + 1);
        for i in 0..=m {
            let (sa, sb) = (1.0 + t * a[i], 1.0 + t * b[i]);
            if sa <= 0.0 || sb <= 0.0 {
                return Err(Error::StepSize(format!(
                    "g + {t}·h is not positive definite at node {i}"
                )));
            }
            stretch.push(sa.sqrt());
            phi_new.push(self.phi[i] * sb.sqrt());
        }
        let sigma = stencil::cumulative_integral(&stretch, Parity::Even, self.ds());
        let len = sigma[m];
        let targets: Vec<f64> = (0..=m).map(|j| j as f64 * len / m as f64).collect();
        let mut values = stencil::interpolate_odd(&sigma, &phi_new, &targets);
        values[0] = 0.0;
        values[m] = 0.0;
        Self::new(self.n, len, values)
    }

    /// The same profile resampled onto `m` intervals.
    pub fn resampled(&self, m: usize) -> Result<Self> {
        let targets: Vec<f64> = (0..=m).map(|j| j as f64 * self.length / m as f64).collect();
        let mut values = stencil::interpolate_odd(&self.s_grid(), &self.phi, &targets);
        values[0] = 0.0;
        values[m] = 0.0;
        Self::new(self.n, self.length, values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_profiles() {
        assert!(WarpedSphereMetric::from_fn(4, PI, 16, f64::sin).is_err());
        assert!(matches!(
            WarpedSphereMetric::from_fn(4, PI, 64, |s| (2.0 * s).sin()),
            Err(Error::DegenerateMetric(_))
        ));
        assert!(matches!(
            WarpedSphereMetric::from_fn(4, PI, 64, |s| 2.0 * s.sin()),
            Err(Error::DegenerateMetric(_))
        ));
    }

    #[test]
    fn round_sphere_curvature_and_volume() {
        let g = WarpedSphereMetric::round(4, 512).unwrap();
        for r in g.scalar_curvature() {
            assert!((r - 12.0).abs() < 1e-7, "{r}");
        }
        assert!((g.volume() - 8.0 * PI * PI / 3.0).abs() < 1e-4);
        let (k, dev) = g.constant_curvature();
        assert!((k - 1.0).abs() < 1e-8 && dev < 1e-7);
    }

    #[test]
    fn laplacian_is_symmetric_and_conservative() {
        let g = WarpedSphereMetric::perturbed(4, 128, 3, 0.1).unwrap();
        let s = g.s_grid();
        let u: Vec<f64> = s.iter().map(|x| (2.0 * x).cos() + x.cos()).collect();
        let v: Vec<f64> = s.iter().map(|x| x.cos().powi(3)).collect();
        let lu = g.laplacian(&u);
        let lv = g.laplacian(&v);
        let a = g.integrate(&v.iter().zip(&lu).map(|(x, y)| x * y).collect::<Vec<_>>());
        let b = g.integrate(&u.iter().zip(&lv).map(|(x, y)| x * y).collect::<Vec<_>>());
        assert!((a - b).abs() < 1e-12 * a.abs().max(1.0));
        assert!(g.integrate(&lu).abs() < 1e-12);
        assert!((a + g.dirichlet_form(&u, &v)).abs() < 1e-12);
    }

    #[test]
    fn deformation_by_zero_is_identity() {
        let g = WarpedSphereMetric::cylinder_capped(4, 128, 0.5).unwrap();
        let z = vec![0.0; g.len()];
        let h = g.deformed(&z, &z, 0.3).unwrap();
        assert!((h.length() - g.length()).abs() < 1e-14);
        for (x, y) in h.phi().iter().zip(g.phi()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn homothetic_deformation() {
        // h = g scales the metric by (1 + t): a sphere of radius √(1 + t).
        let g = WarpedSphereMetric::round(3, 256).unwrap();
        let one = vec![1.0; g.len()];
        let h = g.deformed(&one, &one, 0.21).unwrap();
        let r = 1.21f64.sqrt();
        assert!((h.length() - PI * r).abs() < 1e-10);
        for (s, p) in h.s_grid().iter().zip(h.phi()) {
            assert!((p - r * (s / r).sin()).abs() < 1e-9);
        }
    }
}
