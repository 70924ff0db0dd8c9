//! Ricci flow of products of two homogeneous factors, with the restricted entropy ν̃
//! and the anisotropy χ along the flow.
//!
//! A round factor S^d(r) evolves by d(r²)/dt = −2(d − 1); flat factors (ℝ^d, and the
//! circle S¹ whose curvature vanishes) are frozen.

use serde::{Deserialize, Serialize};

use crate::catalog::unit_sphere_volume;
use crate::entropy::nu_homogeneous;
use crate::error::{Error, Result};

/// A factor of the product.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Factor {
    /// Round sphere S^dim; its radius is the corresponding a0 / b0.
    Round { dim: usize },
    /// Euclidean ℝ^dim; the radius argument is ignored and reported as a frozen scale.
    Flat { dim: usize },
}

impl Factor {
    fn dim(self) -> usize {
        match self {
            Factor::Round { dim } | Factor::Flat { dim } => dim,
        }
    }

    /// d(r²)/dt.
    fn rate(self) -> f64 {
        match self {
            Factor::Round { dim } if dim >= 2 => -2.0 * (dim as f64 - 1.0),
            _ => 0.0,
        }
    }

    fn compact(self) -> bool {
        matches!(self, Factor::Round { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowSample {
    pub t: f64,
    /// a² of the first factor.
    #[serde(rename = "A")]
    pub a2: f64,
    /// b² of the second factor.
    #[serde(rename = "B")]
    pub b2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowTrajectory {
    pub family: (Factor, Factor),
    pub samples: Vec<FlowSample>,
    /// First time a factor shrinks to a point (infinite when none does).
    pub t_singular: f64,
    /// The requested horizon reached past t_singular and the samples stop before it.
    pub truncated: bool,
}

fn sample(family: (Factor, Factor), a0: f64, b0: f64, t: f64) -> FlowSample {
    FlowSample {
        t,
        a2: a0 * a0 + family.0.rate() * t,
        b2: b0 * b0 + family.1.rate() * t,
    }
}

fn extinction(f: Factor, r: f64) -> f64 {
    let rate = f.rate();
    if rate < 0.0 {
        r * r / -rate
    } else {
        f64::INFINITY
    }
}

fn check(first: Factor, second: Factor, a0: f64, b0: f64, dt: f64, horizon: f64) -> Result<()> {
    if first.dim() == 0 || second.dim() == 0 {
        return Err(Error::Domain("factor dimensions must be at least 1".into()));
    }
    if !(a0 > 0.0 && b0 > 0.0) {
        return Err(Error::Domain(format!("radii must be positive (a0 = {a0}, b0 = {b0})")));
    }
    if !(dt > 0.0) || !(horizon >= 0.0) || !horizon.is_finite() {
        return Err(Error::Domain(format!(
            "need dt > 0 and a finite horizon >= 0 (dt = {dt}, horizon = {horizon})"
        )));
    }
    Ok(())
}

/// Exact flow sampled at t = 0, dt, 2dt, … up to the horizon or just before the
/// first extinction time.
pub fn product_flow(first: Factor, second: Factor, a0: f64, b0: f64, dt: f64, horizon: f64) -> Result<FlowTrajectory> {
    check(first, second, a0, b0, dt, horizon)?;
    let family = (first, second);
    let t_singular = extinction(first, a0).min(extinction(second, b0));
    let truncated = horizon >= t_singular;
    let mut samples = Vec::new();
    let mut k = 0usize;
    loop {
        let t = k as f64 * dt;
        if t > horizon || t >= t_singular {
            break;
        }
        samples.push(sample(family, a0, b0, t));
        k += 1;
    }
    // Close on the horizon exactly when it falls between grid points.
    if !truncated && samples.last().is_some_and(|s| s.t < horizon) {
        samples.push(sample(family, a0, b0, horizon));
    }
    Ok(FlowTrajectory {
        family,
        samples,
        t_singular,
        truncated,
    })
}

/// The same trajectory from classical RK4 on the reduced system dA/dt = F(A, B); kept
/// for families whose right-hand side is not constant.
pub fn product_flow_rk4(first: Factor, second: Factor, a0: f64, b0: f64, dt: f64, horizon: f64) -> Result<FlowTrajectory> {
    let exact = product_flow(first, second, a0, b0, dt, horizon)?;
    let rhs = |_: [f64; 2]| [first.rate(), second.rate()];
    let mut y = [a0 * a0, b0 * b0];
    let mut t = 0.0;
    let mut samples = vec![FlowSample { t, a2: y[0], b2: y[1] }];
    for target in exact.samples.iter().skip(1).map(|s| s.t) {
        let h = target - t;
        let k1 = rhs(y);
        let k2 = rhs([y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]]);
        let k3 = rhs([y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]]);
        let k4 = rhs([y[0] + h * k3[0], y[1] + h * k3[1]]);
        for i in 0..2 {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        t = target;
        samples.push(FlowSample { t, a2: y[0], b2: y[1] });
    }
    Ok(FlowTrajectory { samples, ..exact })
}

/// ν̃ at one sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NuSample {
    pub t: f64,
    /// Constant-potential entropy; None where it is undefined (no positive curvature).
    pub nu_tilde: Option<f64>,
    /// False once the constant potential stops being a local minimizer of 𝒲
    /// (2τλ₁ < 1): ν̃ is then only an upper bound for ν.
    pub constant_potential_valid: bool,
}

/// Constant-potential entropy of the product with squared radii (A, B). Flat ℝ^d
/// factors contribute nothing: their gaussian part of 𝒲 has infimum 0 at every τ.
pub fn restricted_entropy(family: (Factor, Factor), a2: f64, b2: f64) -> Result<(Option<f64>, bool)> {
    if !(a2 > 0.0 && b2 > 0.0) {
        return Err(Error::Domain(format!("squared radii must be positive (A = {a2}, B = {b2})")));
    }
    let mut n = 0usize;
    let (mut r, mut vol) = (0.0, 1.0);
    let mut lambda1 = f64::INFINITY;
    for (f, s) in [(family.0, a2), (family.1, b2)] {
        if !f.compact() {
            continue;
        }
        let d = f.dim();
        n += d;
        r += (d * (d - 1)) as f64 / s;
        vol *= unit_sphere_volume(d)? * s.powf(d as f64 / 2.0);
        lambda1 = lambda1.min(d as f64 / s);
    }
    if n == 0 || !(r > 0.0) {
        return Ok((None, false));
    }
    let (nu, tau) = nu_homogeneous(r, vol, n)?;
    Ok((Some(nu), 2.0 * tau * lambda1 >= 1.0))
}

/// ν̃(t) along a trajectory.
pub fn nu_along_flow(traj: &FlowTrajectory) -> Result<Vec<NuSample>> {
    traj.samples
        .iter()
        .map(|s| {
            let (nu, valid) = restricted_entropy(traj.family, s.a2, s.b2)?;
            Ok(NuSample {
                t: s.t,
                nu_tilde: nu,
                constant_potential_valid: valid,
            })
        })
        .collect()
}

/// χ(t) = |A − B|/(A + B).
pub fn anisotropy(traj: &FlowTrajectory) -> Vec<(f64, f64)> {
    traj.samples
        .iter()
        .map(|s| (s.t, (s.a2 - s.b2).abs() / (s.a2 + s.b2)))
        .collect()
}

/// ν̃ of S^p(e^δ) × S^q(e^{−δ}) minus that of the Einstein product, over δ²;
/// for p = q = 2 this tends to 4.
pub fn entropy_gain(p: usize, q: usize, delta: f64) -> Result<f64> {
    let family = (Factor::Round { dim: p }, Factor::Round { dim: q });
    // Einstein radii² 2τ(d − 1) at τ = 1/2.
    let (a2, b2) = ((p as f64 - 1.0).max(1.0), (q as f64 - 1.0).max(1.0));
    let base = restricted_entropy(family, a2, b2)?.0;
    let moved = restricted_entropy(family, a2 * (2.0 * delta).exp(), b2 * (-2.0 * delta).exp())?.0;
    match (base, moved) {
        (Some(b), Some(m)) => Ok((m - b) / (delta * delta)),
        _ => Err(Error::Domain("restricted entropy undefined for this family".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const S2: Factor = Factor::Round { dim: 2 };

    #[test]
    fn isotropic_s2xs2() {
        let tr = product_flow(S2, S2, 1.0, 1.0, 0.01, 1.0).unwrap();
        assert_eq!(tr.t_singular, 0.5);
        assert!(tr.truncated);
        assert!(tr.samples.iter().all(|s| s.t < 0.5 && (s.a2 - (1.0 - 2.0 * s.t)).abs() < 1e-15 && s.a2 == s.b2));
        let nu = nu_along_flow(&tr).unwrap();
        for s in &nu {
            assert!((s.nu_tilde.unwrap() - (4f64.ln() - 2.0)).abs() < 1e-12);
        }
        assert!(anisotropy(&tr).iter().all(|(_, c)| *c == 0.0));
    }

    #[test]
    fn anisotropic_start() {
        let (a0, b0) = (1.1f64.sqrt(), 0.9f64.sqrt());
        let tr = product_flow(S2, S2, a0, b0, 0.01, 0.44).unwrap();
        assert!((tr.t_singular - 0.45).abs() < 1e-15);
        assert!(!tr.truncated);
        assert!(tr.samples.iter().all(|s| (s.a2 - s.b2 - 0.2).abs() < 1e-12));
        let nu = nu_along_flow(&tr).unwrap();
        let closed = |a: f64, b: f64| 2.0 * ((a + b) / (a * b).sqrt()).ln() - 2.0;
        assert!((nu[0].nu_tilde.unwrap() - closed(1.1, 0.9)).abs() < 1e-12);
        assert!((nu[0].nu_tilde.unwrap() + 0.603656).abs() < 1e-6);
        assert!(nu[0].nu_tilde.unwrap() > 4f64.ln() - 2.0);
        assert!(nu.windows(2).all(|w| w[1].nu_tilde.unwrap() > w[0].nu_tilde.unwrap()));
        let chi = anisotropy(&tr);
        assert!((chi[0].1 - 0.1).abs() < 1e-12);
        let at = chi.iter().find(|(t, _)| (t - 0.4).abs() < 1e-9).unwrap();
        assert!((at.1 - 0.5).abs() < 1e-9);
        assert!(!nu.last().unwrap().constant_potential_valid);
    }

    #[test]
    fn flat_factor_is_frozen() {
        let tr = product_flow(Factor::Round { dim: 3 }, Factor::Flat { dim: 1 }, 1.0, 1.0, 0.05, 0.2).unwrap();
        assert!(tr.samples.iter().all(|s| (s.a2 - (1.0 - 4.0 * s.t)).abs() < 1e-15 && s.b2 == 1.0));
        assert_eq!(tr.t_singular, 0.25);
        let nu = nu_along_flow(&tr).unwrap();
        let first = nu[0].nu_tilde.unwrap();
        assert!(nu.iter().all(|s| (s.nu_tilde.unwrap() - first).abs() < 1e-12));
    }

    #[test]
    fn rk4_matches_closed_form() {
        let exact = product_flow(Factor::Round { dim: 3 }, Factor::Round { dim: 4 }, 1.3, 1.7, 0.003, 0.1).unwrap();
        let rk = product_flow_rk4(Factor::Round { dim: 3 }, Factor::Round { dim: 4 }, 1.3, 1.7, 0.003, 0.1).unwrap();
        for (a, b) in exact.samples.iter().zip(&rk.samples) {
            assert!((a.a2 - b.a2).abs() < 1e-10 && (a.b2 - b.b2).abs() < 1e-10);
        }
    }

    #[test]
    fn small_anisotropy_gain() {
        for delta in [1e-2, 1e-3] {
            let g = entropy_gain(2, 2, delta).unwrap();
            assert!((g - 4.0).abs() < 0.01 * 4.0, "{g}");
        }
    }
}
