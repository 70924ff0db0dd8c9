//! Closed-form central densities Θ of shrinkers.
//!
//! Rules, applied recursively over a [`ShrinkerSpec`]:
//!
//! - flat `ℝⁿ`: Θ = 1;
//! - positive Einstein, normalized to Rc = g/2τ: Θ = (4πτe)^{−n/2} vol;
//! - Ricci-flat cone over an Einstein link Σᵐ: Θ = vol(Σ)/vol(Sᵐ);
//! - products multiply;
//! - a quotient by a group of order k divides by k.

mod spec;
mod table;

use std::f64::consts::{E, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use spec::{parse_spec, ShrinkerSpec};
pub use table::{
    builtin_entries, density_table, load_user_catalog, merged_entries, CatalogEntry, TableRow,
};

/// Θ together with ν = ln Θ and the chain of rules that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityValue {
    pub theta: f64,
    pub nu: f64,
    pub provenance: String,
}

impl DensityValue {
    fn new(theta: f64, provenance: String) -> Self {
        DensityValue {
            theta,
            nu: theta.ln(),
            provenance,
        }
    }
}

/// Volume of the unit round n-sphere, 2π^{(n+1)/2}/Γ((n+1)/2).
pub fn unit_sphere_volume(n: usize) -> Result<f64> {
    if n < 1 {
        return Err(Error::Domain("sphere dimension must be >= 1".into()));
    }
    // vol(Sⁿ) = 2π/(n−1) · vol(Sⁿ⁻²), seeded by vol(S⁰) = 2, vol(S¹) = 2π.
    let (mut v, start) = if n.is_multiple_of(2) { (2.0, 0) } else { (2.0 * PI, 1) };
    let mut k = start;
    while k < n {
        k += 2;
        v *= 2.0 * PI / (k as f64 - 1.0);
    }
    Ok(v)
}

/// τ of the Einstein normalization in dimension n.
pub fn einstein_tau(n: usize) -> f64 {
    1.0 / (2.0 * (n as f64 - 1.0))
}

/// Central density of a shrinker expression.
pub fn density(spec: &ShrinkerSpec) -> Result<DensityValue> {
    spec.validate()?;
    let (theta, provenance) = eval(spec)?;
    if theta > 1.0 + 1e-12 {
        return Err(Error::Consistency(format!(
            "density {theta} exceeds 1 for `{spec}`"
        )));
    }
    Ok(DensityValue::new(theta, provenance))
}

fn eval(spec: &ShrinkerSpec) -> Result<(f64, String)> {
    Ok(match spec {
        ShrinkerSpec::Flat { dim } => (1.0, format!("flat(R^{dim})")),
        ShrinkerSpec::Einstein {
            dim,
            normalized_volume,
        } => (
            einstein_theta(*dim, *normalized_volume),
            format!("einstein(n={dim})"),
        ),
        ShrinkerSpec::Cone { link } => {
            let (m, vol) = link.einstein_link_volume()?;
            (vol / unit_sphere_volume(m)?, format!("cone(link dim {m})"))
        }
        ShrinkerSpec::Product { left, right } => {
            let (a, pa) = eval(left)?;
            let (b, pb) = eval(right)?;
            (a * b, format!("product[{pa}, {pb}]"))
        }
        ShrinkerSpec::Quotient { base, group_order } => {
            let (a, pa) = eval(base)?;
            (a / *group_order as f64, format!("quotient[{pa}]/{group_order}"))
        }
        ShrinkerSpec::NamedConstant { name, theta, .. } => (*theta, format!("named({name})")),
    })
}

fn einstein_theta(n: usize, normalized_volume: f64) -> f64 {
    let tau = einstein_tau(n);
    (4.0 * PI * tau * E).powf(-(n as f64) / 2.0) * normalized_volume
}

/// ν = ln Θ.
pub fn nu_of(spec: &ShrinkerSpec) -> Result<f64> {
    Ok(density(spec)?.nu)
}

/// Θ(ℂP^N) = ((N+1)/πe)^N · vol(S^{2N+1})/2π.
pub fn cp_density(big_n: usize) -> Result<DensityValue> {
    if big_n < 1 {
        return Err(Error::Domain("CP^N needs N >= 1".into()));
    }
    let nf = big_n as f64;
    let theta = ((nf + 1.0) / (PI * E)).powi(big_n as i32) * unit_sphere_volume(2 * big_n + 1)?
        / (2.0 * PI);
    Ok(DensityValue::new(theta, format!("complex-projective(N={big_n})")))
}

/// Θ of the Kähler–Einstein `ℂP²#k(−ℂP²)`, (9 − k)/2e².
pub fn del_pezzo_density(k: u32) -> Result<DensityValue> {
    spec::check_del_pezzo(k)?;
    Ok(DensityValue::new(
        (9.0 - k as f64) / (2.0 * E * E),
        format!("del-pezzo(k={k})"),
    ))
}

/// Built-in table entries of strictly higher density, i.e. the only shrinkers a
/// perturbation of `spec` could decay to. Sorted by descending Θ.
pub fn decay_candidates(spec: &ShrinkerSpec) -> Result<Vec<CatalogEntry>> {
    let theta0 = density(spec)?.theta;
    Ok(builtin_entries()
        .into_iter()
        .filter(|e| e.theta > theta0 + 1e-12)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    #[test]
    fn sphere_volumes() {
        close(unit_sphere_volume(1).unwrap(), 2.0 * PI, 1e-14);
        close(unit_sphere_volume(2).unwrap(), 4.0 * PI, 1e-14);
        close(unit_sphere_volume(3).unwrap(), 2.0 * PI * PI, 1e-13);
        close(unit_sphere_volume(4).unwrap(), 8.0 * PI * PI / 3.0, 1e-13);
        close(unit_sphere_volume(5).unwrap(), PI.powi(3), 1e-12);
        assert!(unit_sphere_volume(0).is_err());
    }

    #[test]
    fn rule_examples() {
        let s4 = ShrinkerSpec::sphere(4);
        close(density(&s4).unwrap().theta, 6.0 / (E * E), 1e-14);
        let s2r2 = ShrinkerSpec::product(ShrinkerSpec::sphere(2), ShrinkerSpec::flat(2));
        close(density(&s2r2).unwrap().theta, 2.0 / E, 1e-14);
        let rp4 = ShrinkerSpec::quotient(s4.clone(), 2);
        close(density(&rp4).unwrap().theta, 3.0 / (E * E), 1e-14);
        let crp3 = ShrinkerSpec::cone(ShrinkerSpec::quotient(ShrinkerSpec::sphere(3), 2));
        close(density(&crp3).unwrap().theta, 0.5, 1e-14);
        assert_eq!(density(&ShrinkerSpec::flat(4)).unwrap().theta, 1.0);
    }

    #[test]
    fn cone_over_non_einstein_link_is_rejected() {
        let bad = ShrinkerSpec::cone(ShrinkerSpec::product(
            ShrinkerSpec::sphere(2),
            ShrinkerSpec::sphere(2),
        ));
        assert!(matches!(density(&bad), Err(Error::Construction(_))));
    }

    #[test]
    fn oversized_volume_trips_rule_one() {
        let fat = ShrinkerSpec::einstein(4, 1e3);
        assert!(matches!(density(&fat), Err(Error::Consistency(_))));
    }

    #[test]
    fn complex_projective_agrees_with_einstein_rule() {
        // N = 1 is the round 2-sphere.
        close(
            cp_density(1).unwrap().theta,
            density(&ShrinkerSpec::sphere(2)).unwrap().theta,
            1e-12,
        );
        for n in 1..=5 {
            close(
                cp_density(n).unwrap().theta,
                density(&ShrinkerSpec::complex_projective(n)).unwrap().theta,
                1e-12,
            );
        }
        close(cp_density(2).unwrap().theta, 4.5 / (E * E), 1e-14);
    }

    #[test]
    fn del_pezzo_values() {
        close(del_pezzo_density(0).unwrap().theta, 4.5 / (E * E), 1e-14);
        close(del_pezzo_density(3).unwrap().theta, 3.0 / (E * E), 1e-14);
        close(del_pezzo_density(8).unwrap().theta, 0.5 / (E * E), 1e-14);
        assert!(del_pezzo_density(1).is_err());
        assert!(del_pezzo_density(2).is_err());
        for k in [0, 3, 4, 5, 6, 7, 8] {
            close(
                del_pezzo_density(k).unwrap().theta,
                density(&ShrinkerSpec::del_pezzo(k).unwrap()).unwrap().theta,
                1e-14,
            );
        }
    }

    #[test]
    fn nu_examples() {
        assert_eq!(nu_of(&ShrinkerSpec::flat(4)).unwrap(), 0.0);
        close(nu_of(&ShrinkerSpec::sphere(4)).unwrap(), 6f64.ln() - 2.0, 1e-14);
        let s2s2 = ShrinkerSpec::product(ShrinkerSpec::sphere(2), ShrinkerSpec::sphere(2));
        close(nu_of(&s2s2).unwrap(), 4f64.ln() - 2.0, 1e-14);
    }

    #[test]
    fn decay_examples() {
        assert!(decay_candidates(&ShrinkerSpec::flat(4)).unwrap().is_empty());
        let s2s2 = ShrinkerSpec::product(ShrinkerSpec::sphere(2), ShrinkerSpec::sphere(2));
        let names: Vec<_> = decay_candidates(&s2s2)
            .unwrap()
            .into_iter()
            .map(|e| e.name)
            .collect();
        assert_eq!(names, ["R^4", "S^4", "S^3xR", "S^2xR^2", "L(2,-1)", "CP^2"]);
        let dp8 = ShrinkerSpec::del_pezzo(8).unwrap();
        assert_eq!(decay_candidates(&dp8).unwrap().len(), 20);
    }
}
