//! Products a²ĝ_{S^p} ⊕ b²ĝ_{S^q} of round spheres.

use serde::{Deserialize, Serialize};

use crate::catalog::unit_sphere_volume;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProductRaw")]
pub struct ProductSphereMetric {
    p: usize,
    q: usize,
    a: f64,
    b: f64,
}

#[derive(Deserialize)]
struct ProductRaw {
    p: usize,
    q: usize,
    a: f64,
    b: f64,
}

impl TryFrom<ProductRaw> for ProductSphereMetric {
    type Error = Error;
    fn try_from(r: ProductRaw) -> Result<Self> {
        ProductSphereMetric::new(r.p, r.q, r.a, r.b)
    }
}

impl ProductSphereMetric {
    pub fn new(p: usize, q: usize, a: f64, b: f64) -> Result<Self> {
        if p < 2 || q < 2 {
            return Err(Error::Construction(format!(
                "product factors need dimension >= 2, got ({p}, {q})"
            )));
        }
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(Error::DegenerateMetric(format!("radii must be positive, got ({a}, {b})")));
        }
        Ok(ProductSphereMetric { p, q, a, b })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.p, self.q)
    }

    pub fn radii(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn n(&self) -> usize {
        self.p + self.q
    }

    /// Sectional curvatures 1/a², 1/b² of the two factors.
    pub fn factor_curvatures(&self) -> (f64, f64) {
        (1.0 / (self.a * self.a), 1.0 / (self.b * self.b))
    }

    pub fn scalar_curvature(&self) -> f64 {
        let (k1, k2) = self.factor_curvatures();
        let (p, q) = (self.p as f64, self.q as f64);
        p * (p - 1.0) * k1 + q * (q - 1.0) * k2
    }

    pub fn volume(&self) -> f64 {
        unit_sphere_volume(self.p).expect("p >= 2")
            * unit_sphere_volume(self.q).expect("q >= 2")
            * self.a.powi(self.p as i32)
            * self.b.powi(self.q as i32)
    }

    /// Ricci eigenvalues (p−1)/a², (q−1)/b² on the two factors.
    pub fn ricci(&self) -> (f64, f64) {
        let (k1, k2) = self.factor_curvatures();
        ((self.p as f64 - 1.0) * k1, (self.q as f64 - 1.0) * k2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn unit_s2_times_s2() {
        let g = ProductSphereMetric::new(2, 2, 1.0, 1.0).unwrap();
        assert_eq!(g.scalar_curvature(), 4.0);
        assert!((g.volume() - 16.0 * PI * PI).abs() < 1e-12);
        assert!(ProductSphereMetric::new(1, 2, 1.0, 1.0).is_err());
        assert!(ProductSphereMetric::new(2, 2, 0.0, 1.0).is_err());
    }
}
