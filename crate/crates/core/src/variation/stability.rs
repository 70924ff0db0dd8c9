//! Linear stability of positive Einstein shrinkers: μ_N, the largest eigenvalue of N on
//! divergence-free tensors with ∫tr h = 0.

use serde::{Deserialize, Serialize};

use super::rayleigh_quotient_n;
use crate::error::{Error, Result};
use crate::geometry::{
    make_conformal_direction, ConformalMode, DiscreteMetric, ProductSphereMetric, ScalarField, SymTensorField,
    WarpedSphereMetric,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StabilityClass {
    Stable,
    NeutrallyStable,
    Unstable,
}

impl StabilityClass {
    fn of(mu_tau: f64) -> Self {
        if mu_tau < 0.0 {
            StabilityClass::Stable
        } else if mu_tau == 0.0 {
            StabilityClass::NeutrallyStable
        } else {
            StabilityClass::Unstable
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StabilitySource {
    /// Quoted from the literature; not recomputed here.
    CitedConstant,
    /// Quoted and independently recomputed from Rayleigh quotients of N.
    Computed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub name: String,
    /// μ_N as an expression in τ, e.g. "1/(6*tau)".
    #[serde(rename = "mu_N")]
    pub mu_n: String,
    /// μ_N·τ, absent when no Einstein metric is available to define N.
    #[serde(rename = "mu_N_times_tau")]
    pub mu_n_tau: Option<f64>,
    #[serde(rename = "class")]
    pub stability_class: StabilityClass,
    pub source: StabilitySource,
    pub citation: String,
    /// Largest Rayleigh quotient of N found on the invariant ansatz, times τ.
    pub computed_mu_n_tau: Option<f64>,
    /// Whether the computed value matches the quoted one within 1e−6.
    pub computed_agrees: Option<bool>,
    /// Quoted maximal Lichnerowicz eigenvalue, kept as an annotation only.
    #[serde(rename = "mu_L_quoted")]
    pub mu_l_quoted: Option<String>,
    pub note: Option<String>,
}

const AGREEMENT_TOL: f64 = 1e-6;
const RAYLEIGH_GRID: usize = 256;

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Renders (num/den)/τ.
fn over_tau(num: i64, den: i64) -> String {
    if num == 0 {
        return "0".into();
    }
    let g = gcd(num, den);
    let (num, den) = (num / g, den / g);
    if den == 1 {
        format!("{num}/tau")
    } else {
        format!("{num}/({den}*tau)")
    }
}

fn known() -> String {
    "s<n> (n >= 2), cp<N> (N >= 2), s<p>xs<q> (p, q >= 2), cp1xcp1, q2, q3, q4, \
     delpezzo<k> (k = 3..8), koiso"
        .into()
}

enum Parsed {
    Sphere(usize),
    Cp(usize),
    Product(usize, usize),
    Q3,
    Q4,
    DelPezzo(u32),
    Koiso,
}

fn parse_name(name: &str) -> Result<Parsed> {
    let key: String = name
        .to_lowercase()
        .chars()
        .filter(|c| !matches!(c, '^' | ' ' | '_' | '-' | ':' | '(' | ')' | '×'))
        .collect();
    let unknown = || Error::Unknown {
        name: name.to_string(),
        known: known(),
    };
    let num = |s: &str| s.parse::<usize>().map_err(|_| unknown());
    if let Some((a, b)) = key.split_once('x') {
        let factor = |s: &str| -> Result<usize> {
            if s == "cp1" {
                Ok(2)
            } else if let Some(d) = s.strip_prefix('s') {
                num(d)
            } else {
                Err(unknown())
            }
        };
        let (p, q) = (factor(a)?, factor(b)?);
        if p < 2 || q < 2 {
            return Err(Error::Domain(format!(
                "products need two nonflat factors; S^1 is flat (got S^{p} x S^{q})"
            )));
        }
        return Ok(Parsed::Product(p, q));
    }
    Ok(match key.as_str() {
        "q2" => Parsed::Product(2, 2),
        "q3" => Parsed::Q3,
        "q4" => Parsed::Q4,
        "koiso" => Parsed::Koiso,
        "cp1" => Parsed::Sphere(2),
        _ => {
            if let Some(k) = key.strip_prefix("delpezzo").or_else(|| key.strip_prefix("cp2#")) {
                let k = k.strip_suffix("cp2").unwrap_or(k);
                let k: u32 = k.parse().map_err(|_| unknown())?;
                match k {
                    0 => Parsed::Cp(2),
                    1 => Parsed::Koiso,
                    3..=8 => Parsed::DelPezzo(k),
                    _ => {
                        return Err(Error::Domain(format!(
                            "del Pezzo index {k} is not covered (known: 0, 1, 3..8)"
                        )))
                    }
                }
            } else if let Some(d) = key.strip_prefix("cp") {
                match num(d)? {
                    0 => return Err(unknown()),
                    1 => Parsed::Sphere(2),
                    big_n => Parsed::Cp(big_n),
                }
            } else if let Some(d) = key.strip_prefix('s') {
                let n = num(d)?;
                if n < 2 {
                    return Err(Error::Domain("S^1 carries no positive Einstein metric".into()));
                }
                Parsed::Sphere(n)
            } else {
                return Err(unknown());
            }
        }
    })
}

/// Gegenbauer polynomial C_l^{(n−1)/2}(cos θ) with θ = πs/L the rescaled polar
/// coordinate of a warped sphere; a degree-l eigenfunction on the round sphere.
pub fn zonal_harmonic(g: &DiscreteMetric, l: usize) -> ScalarField {
    let alpha = (g.n() as f64 - 1.0) / 2.0;
    let scale = match g {
        DiscreteMetric::Warped(w) => std::f64::consts::PI / w.length(),
        _ => 1.0,
    };
    g.coordinates()
        .iter()
        .map(|s| {
            if l == 0 {
                return 1.0;
            }
            let x = (scale * s).cos();
            let (mut p0, mut p1) = (1.0, 2.0 * alpha * x);
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

/// Largest τ·⟨Nh,h⟩/⟨h,h⟩ over the conformal directions Su, u a zonal harmonic of
/// degree 2..=5, on the unit round S^n. Invariant divergence-free tensors on the
/// warped ansatz with ∫tr h = 0 are exactly of this form.
pub(crate) fn sphere_rayleigh(n: usize, m: usize) -> Result<f64> {
    let g = DiscreteMetric::Warped(WarpedSphereMetric::round(n, m)?);
    let tau = 1.0 / (2.0 * (n as f64 - 1.0));
    let mut best = f64::NEG_INFINITY;
    for l in 2..=5 {
        let u = zonal_harmonic(&g, l);
        let h = make_conformal_direction(&g, &u, ConformalMode::Shrinker { tau })?;
        best = best.max(tau * rayleigh_quotient_n(&g, &h, tau)?);
    }
    Ok(best)
}

/// τ·⟨Nh,h⟩/⟨h,h⟩ for h = g₁/p − g₂/q on the Einstein product S^p × S^q.
pub(crate) fn product_rayleigh(p: usize, q: usize) -> Result<f64> {
    // Rc = g/2τ with τ = 1/2: radii² = 2τ(p − 1) and 2τ(q − 1).
    let tau = 0.5;
    let prod = ProductSphereMetric::new(p, q, (p as f64 - 1.0).sqrt(), (q as f64 - 1.0).sqrt())?;
    let g = DiscreteMetric::Product(prod);
    let h = SymTensorField::Product {
        c1: 1.0 / p as f64,
        c2: -1.0 / q as f64,
    };
    Ok(tau * rayleigh_quotient_n(&g, &h, tau)?)
}

/// Stability data for a named positive Einstein shrinker.
pub fn stability_report(name: &str) -> Result<StabilityReport> {
    let cited = |mu_n: String, mu_tau: Option<f64>, class: StabilityClass, citation: &str| StabilityReport {
        name: name.to_string(),
        mu_n,
        mu_n_tau: mu_tau,
        stability_class: class,
        source: StabilitySource::CitedConstant,
        citation: citation.into(),
        computed_mu_n_tau: None,
        computed_agrees: None,
        mu_l_quoted: None,
        note: None,
    };
    let mut report = match parse_name(name)? {
        Parsed::Sphere(n) => {
            let den = n as i64 - 1;
            let quoted = -2.0 / den as f64;
            let computed = sphere_rayleigh(n, RAYLEIGH_GRID)?;
            let agrees = (computed - quoted).abs() <= AGREEMENT_TOL * quoted.abs();
            let mut r = cited(
                over_tau(-2, den),
                Some(quoted),
                StabilityClass::Stable,
                "round sphere geometrically stable (Huisken)",
            );
            r.source = StabilitySource::Computed;
            r.computed_mu_n_tau = Some(computed);
            r.computed_agrees = Some(agrees);
            if !agrees {
                r.note = Some(format!(
                    "largest computed Rayleigh quotient of N (conformal directions, degree 2) is {}; \
                     transverse-traceless tensors give -(n+1)/(2(n-1)tau), which is lower",
                    over_tau(-1, den)
                ));
            }
            r
        }
        Parsed::Product(p, q) => {
            let computed = product_rayleigh(p, q)?;
            let mut r = cited(
                over_tau(1, 2),
                Some(0.5),
                StabilityClass::Unstable,
                "product of two nonflat shrinkers; destabilizing direction g1/n1 - g2/n2",
            );
            r.source = StabilitySource::Computed;
            r.computed_mu_n_tau = Some(computed);
            r.computed_agrees = Some((computed - 0.5).abs() <= AGREEMENT_TOL * 0.5);
            r
        }
        Parsed::Cp(big_n) => {
            let mut r = cited(
                "0".into(),
                Some(0.0),
                StabilityClass::NeutrallyStable,
                "Goldschmidt: largest Lichnerowicz eigenvalue on divergence-free trace-free tensors",
            );
            r.mu_l_quoted = Some("1/tau".into());
            r.note = Some(format!("CP^{big_n}, real dimension {}", 2 * big_n));
            r
        }
        Parsed::Q3 => {
            let mut r = cited(
                over_tau(1, 6),
                Some(1.0 / 6.0),
                StabilityClass::Unstable,
                "Gasqui-Goldschmidt: spectrum of the Lichnerowicz Laplacian on the quadric Q^3",
            );
            r.mu_l_quoted = Some(over_tau(-2, 3));
            r
        }
        Parsed::Q4 => {
            let mut r = cited(
                "0".into(),
                Some(0.0),
                StabilityClass::NeutrallyStable,
                "Gasqui-Goldschmidt: spectrum of the Lichnerowicz Laplacian on the quadric Q^4",
            );
            r.mu_l_quoted = Some("-1/tau".into());
            r
        }
        Parsed::DelPezzo(k) => {
            let mut r = cited(
                over_tau(1, 2),
                Some(0.5),
                StabilityClass::Unstable,
                "Kähler-Einstein with dim H^{1,1} >= 2: harmonic (1,1)-form orthogonal to the Kähler form",
            );
            r.note = Some(format!("CP2#{k}(-CP2) has dim H^(1,1) = {}", k + 1));
            r
        }
        Parsed::Koiso => {
            let mut r = cited(
                "undefined".into(),
                None,
                StabilityClass::Unstable,
                "Koiso: Kähler shrinker on CP2#(-CP2), dim H^{1,1} = 2",
            );
            r.note = Some(
                "not Einstein, so the Einstein second-variation operator N does not apply; \
                 unstable by the Kähler class argument"
                    .into(),
            );
            r
        }
    };
    if let Some(mu) = report.mu_n_tau {
        debug_assert_eq!(report.stability_class, StabilityClass::of(mu));
        report.stability_class = StabilityClass::of(mu);
    }
    Ok(report)
}

/// The conformal instability window −1/τ < μ_fns < −n/(2(n−1)τ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConformalWindow {
    pub unstable: bool,
    /// μ_fns sits on an endpoint of the window.
    pub boundary: bool,
    pub window: (f64, f64),
}

/// Whether a positive Einstein metric whose largest nonzero eigenvalue of Δ on
/// functions is μ_fns (< 0) is unstable in conformal directions.
pub fn conformal_window(n: usize, tau: f64, mu_fns: f64) -> Result<ConformalWindow> {
    if n < 2 || !(tau > 0.0) || !(mu_fns < 0.0) {
        return Err(Error::Domain(format!(
            "need n >= 2, tau > 0 and mu_fns < 0 (got n = {n}, tau = {tau}, mu_fns = {mu_fns})"
        )));
    }
    let lo = -1.0 / tau;
    let hi = -(n as f64) / (2.0 * (n as f64 - 1.0) * tau);
    let near = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs());
    let boundary = near(mu_fns, lo) || near(mu_fns, hi);
    Ok(ConformalWindow {
        unstable: !boundary && lo < mu_fns && mu_fns < hi,
        boundary,
        window: (lo, hi),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quoted_constants() {
        let q3 = stability_report("Q3").unwrap();
        assert_eq!(q3.mu_n, "1/(6*tau)");
        assert_eq!(q3.stability_class, StabilityClass::Unstable);
        let json = serde_json::to_value(&q3).unwrap();
        assert_eq!(json["mu_N"], "1/(6*tau)");
        assert_eq!(json["class"], "unstable");
        let cp2 = stability_report("CP^2").unwrap();
        assert_eq!((cp2.mu_n.as_str(), cp2.stability_class), ("0", StabilityClass::NeutrallyStable));
        assert_eq!(stability_report("q4").unwrap().stability_class, StabilityClass::NeutrallyStable);
        for k in 3..=8 {
            let r = stability_report(&format!("delpezzo{k}")).unwrap();
            assert_eq!((r.mu_n.as_str(), r.stability_class), ("1/(2*tau)", StabilityClass::Unstable));
        }
        let koiso = stability_report("koiso").unwrap();
        assert_eq!(koiso.mu_n_tau, None);
        assert!(matches!(stability_report("torus"), Err(Error::Unknown { .. })));
    }

    #[test]
    fn computed_values() {
        let s4 = stability_report("S^4").unwrap();
        assert_eq!(s4.mu_n, "-2/(3*tau)");
        assert_eq!(s4.stability_class, StabilityClass::Stable);
        // Rayleigh quotients give −1/((n−1)τ), half the quoted value.
        assert!((s4.computed_mu_n_tau.unwrap() + 1.0 / 3.0).abs() < 1e-6);
        assert_eq!(s4.computed_agrees, Some(false));
        let p = stability_report("s2xs3").unwrap();
        assert!((p.computed_mu_n_tau.unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(p.computed_agrees, Some(true));
    }

    #[test]
    fn window() {
        for n in 2..7 {
            let nn = n as f64;
            let tau = 1.0 / (2.0 * (nn - 1.0));
            let w = conformal_window(n, tau, -nn).unwrap();
            assert!(w.boundary && !w.unstable);
        }
        let (n, tau) = (4, 1.0);
        let inside = conformal_window(n, tau, -0.8).unwrap();
        assert!(inside.unstable && !inside.boundary);
        assert!(!conformal_window(n, tau, -2.0).unwrap().unstable);
        assert!(conformal_window(n, tau, 0.5).is_err());
    }
}
