//! Metrics on the 2-torus [0, 2π)², sampled on an M×M periodic grid.
//!
//! Curvature uses second-order central differences in the Brioschi formula; the
//! Laplacian is the cellwise bilinear-form (finite-element style) stencil, exactly
//! self-adjoint for the nodal quadrature. Tensor calculus on flat tori is done
//! spectrally.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TorusRaw")]
pub struct Torus2Metric {
    m: usize,
    g11: Vec<f64>,
    g12: Vec<f64>,
    g22: Vec<f64>,
}

#[derive(Deserialize)]
struct TorusRaw {
    m: usize,
    g11: Vec<f64>,
    g12: Vec<f64>,
    g22: Vec<f64>,
}

impl TryFrom<TorusRaw> for Torus2Metric {
    type Error = Error;
    fn try_from(raw: TorusRaw) -> Result<Self> {
        Torus2Metric::new(raw.m, raw.g11, raw.g12, raw.g22)
    }
}

/// Row-major node index: `i` along x, `j` along y.
#[inline]
pub fn index(m: usize, i: usize, j: usize) -> usize {
    (i % m) + m * (j % m)
}

impl Torus2Metric {
    pub fn new(m: usize, g11: Vec<f64>, g12: Vec<f64>, g22: Vec<f64>) -> Result<Self> {
        if m < 32 {
            return Err(Error::Construction(format!("torus grid needs M >= 32, got {m}")));
        }
        for (name, c) in [("g11", &g11), ("g12", &g12), ("g22", &g22)] {
            if c.len() != m * m {
                return Err(Error::NonConforming {
                    expected: m * m,
                    got: c.len(),
                });
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(Error::Construction(format!("{name} has non-finite entries")));
            }
        }
        for p in 0..m * m {
            if g11[p] <= 0.0 || g11[p] * g22[p] - g12[p] * g12[p] <= 0.0 {
                return Err(Error::DegenerateMetric(format!(
                    "metric not positive definite at node ({}, {})",
                    p % m,
                    p / m
                )));
            }
        }
        Ok(Torus2Metric { m, g11, g12, g22 })
    }

    /// Samples g_ij(x, y) on the grid.
    pub fn from_fn(m: usize, g: impl Fn(f64, f64) -> [f64; 3]) -> Result<Self> {
        let h = 2.0 * PI / m as f64;
        let mut g11 = vec![0.0; m * m];
        let mut g12 = vec![0.0; m * m];
        let mut g22 = vec![0.0; m * m];
        for j in 0..m {
            for i in 0..m {
                let [a, b, c] = g(i as f64 * h, j as f64 * h);
                let p = index(m, i, j);
                g11[p] = a;
                g12[p] = b;
                g22[p] = c;
            }
        }
        Self::new(m, g11, g12, g22)
    }

    pub fn flat(m: usize) -> Result<Self> {
        Self::from_fn(m, |_, _| [1.0, 0.0, 1.0])
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.m * self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.m as f64
    }

    pub fn components(&self) -> (&[f64], &[f64], &[f64]) {
        (&self.g11, &self.g12, &self.g22)
    }

    /// Coordinates (x, y) of every node in index order.
    pub fn nodes(&self) -> Vec<(f64, f64)> {
        let h = self.spacing();
        (0..self.len())
            .map(|p| ((p % self.m) as f64 * h, (p / self.m) as f64 * h))
            .collect()
    }

    fn det(&self, p: usize) -> f64 {
        self.g11[p] * self.g22[p] - self.g12[p] * self.g12[p]
    }

    /// The constant metric components if the metric is constant, i.e. flat.
    pub fn constant_metric(&self) -> Option<[f64; 3]> {
        let c = [self.g11[0], self.g12[0], self.g22[0]];
        let same = |v: &[f64], c: f64| v.iter().all(|x| (x - c).abs() <= 1e-12 * (1.0 + c.abs()));
        (same(&self.g11, c[0]) && same(&self.g12, c[1]) && same(&self.g22, c[2])).then_some(c)
    }

    /// Nodal quadrature weights √det g · h².
    pub fn weights(&self) -> Vec<f64> {
        let h2 = self.spacing().powi(2);
        (0..self.len()).map(|p| self.det(p).sqrt() * h2).collect()
    }

    pub fn integrate(&self, f: &[f64]) -> f64 {
        self.weights().iter().zip(f).map(|(w, v)| w * v).sum()
    }

    pub fn volume(&self) -> f64 {
        self.weights().iter().sum()
    }

    /// 2K from the Brioschi formula with central differences.
    pub fn scalar_curvature(&self) -> Vec<f64> {
        let m = self.m;
        let h = self.spacing();
        let (e, f, g) = (&self.g11, &self.g12, &self.g22);
        let at = |v: &Vec<f64>, i: isize, j: isize| -> f64 {
            v[index(m, i.rem_euclid(m as isize) as usize, j.rem_euclid(m as isize) as usize)]
        };
        let du = |v: &Vec<f64>, i: isize, j: isize| (at(v, i + 1, j) - at(v, i - 1, j)) / (2.0 * h);
        let dv = |v: &Vec<f64>, i: isize, j: isize| (at(v, i, j + 1) - at(v, i, j - 1)) / (2.0 * h);
        let duu = |v: &Vec<f64>, i: isize, j: isize| {
            (at(v, i + 1, j) - 2.0 * at(v, i, j) + at(v, i - 1, j)) / (h * h)
        };
        let dvv = |v: &Vec<f64>, i: isize, j: isize| {
            (at(v, i, j + 1) - 2.0 * at(v, i, j) + at(v, i, j - 1)) / (h * h)
        };
        let duv = |v: &Vec<f64>, i: isize, j: isize| {
            (at(v, i + 1, j + 1) - at(v, i + 1, j - 1) - at(v, i - 1, j + 1) + at(v, i - 1, j - 1))
                / (4.0 * h * h)
        };
        let mut out = vec![0.0; m * m];
        for j in 0..m as isize {
            for i in 0..m as isize {
                let (ee, ff, gg) = (at(e, i, j), at(f, i, j), at(g, i, j));
                let (eu, ev) = (du(e, i, j), dv(e, i, j));
                let (fu, fv) = (du(f, i, j), dv(f, i, j));
                let (gu, gv) = (du(g, i, j), dv(g, i, j));
                let a11 = -0.5 * dvv(e, i, j) + duv(f, i, j) - 0.5 * duu(g, i, j);
                let m1 = det3([
                    [a11, 0.5 * eu, fu - 0.5 * ev],
                    [fv - 0.5 * gu, ee, ff],
                    [0.5 * gv, ff, gg],
                ]);
                let m2 = det3([
                    [0.0, 0.5 * ev, 0.5 * gu],
                    [0.5 * ev, ee, ff],
                    [0.5 * gu, ff, gg],
                ]);
                let d = ee * gg - ff * ff;
                out[index(m, i as usize, j as usize)] = 2.0 * (m1 - m2) / (d * d);
            }
        }
        out
    }

    /// Cell-centred coefficients √det g · g^{ij} (a11, a12, a22), cell (i, j)
    /// spanning nodes (i..i+1, j..j+1).
    fn cell_coefficients(&self) -> Vec<[f64; 3]> {
        let m = self.m;
        (0..m * m)
            .map(|c| {
                let (i, j) = (c % m, c / m);
                let corners = [
                    index(m, i, j),
                    index(m, i + 1, j),
                    index(m, i, j + 1),
                    index(m, i + 1, j + 1),
                ];
                let avg = |v: &Vec<f64>| corners.iter().map(|&p| v[p]).sum::<f64>() / 4.0;
                let (e, f, g) = (avg(&self.g11), avg(&self.g12), avg(&self.g22));
                let d = e * g - f * f;
                let s = d.sqrt();
                [s * g / d, -s * f / d, s * e / d]
            })
            .collect()
    }

    /// Stiffness matrix applied to `u`: Q(u, v) = v · K u with Q ≈ ∫⟨Du, Dv⟩.
    pub fn stiffness_apply(&self, u: &[f64]) -> Vec<f64> {
        self.stiffness_apply_with(&self.cell_coefficients(), u)
    }

    pub(crate) fn stiffness_apply_with(&self, cells: &[[f64; 3]], u: &[f64]) -> Vec<f64> {
        let m = self.m;
        let mut out = vec![0.0; m * m];
        for (c, &[a11, a12, a22]) in cells.iter().enumerate() {
            let (i, j) = (c % m, c / m);
            let p00 = index(m, i, j);
            let p10 = index(m, i + 1, j);
            let p01 = index(m, i, j + 1);
            let p11 = index(m, i + 1, j + 1);
            let xb = u[p10] - u[p00];
            let xt = u[p11] - u[p01];
            let yl = u[p01] - u[p00];
            let yr = u[p11] - u[p10];
            let d1 = 0.5 * (xb + xt);
            let d2 = 0.5 * (yl + yr);
            // Gradient of ½a11(xb² + xt²) + ½a22(yl² + yr²) + 2a12·d1·d2, halved.
            let gx_b = 0.5 * a11 * xb + 0.5 * a12 * d2;
            let gx_t = 0.5 * a11 * xt + 0.5 * a12 * d2;
            let gy_l = 0.5 * a22 * yl + 0.5 * a12 * d1;
            let gy_r = 0.5 * a22 * yr + 0.5 * a12 * d1;
            out[p10] += gx_b;
            out[p00] -= gx_b;
            out[p11] += gx_t;
            out[p01] -= gx_t;
            out[p01] += gy_l;
            out[p00] -= gy_l;
            out[p11] += gy_r;
            out[p10] -= gy_r;
        }
        out
    }

    /// Fourier symbol of the stiffness matrix of the grid-averaged constant metric,
    /// with that metric's nodal mass. Used to precondition solves on nearby metrics.
    pub fn mean_metric_symbol(&self) -> (Vec<f64>, f64) {
        let m = self.m;
        let len = self.len() as f64;
        let mean = |v: &Vec<f64>| v.iter().sum::<f64>() / len;
        let (e, f, g) = (mean(&self.g11), mean(&self.g12), mean(&self.g22));
        let d = e * g - f * f;
        let s = d.sqrt();
        let cells = vec![[s * g / d, -s * f / d, s * e / d]; m * m];
        let mut impulse = vec![0.0; m * m];
        impulse[0] = 1.0;
        let kernel = self.stiffness_apply_with(&cells, &impulse);
        let symbol = Spectral::new(m).forward(&kernel).iter().map(|z| z.re).collect();
        (symbol, s * self.spacing().powi(2))
    }

    /// Diagonal of the stiffness matrix (for Jacobi preconditioning).
    pub fn stiffness_diagonal(&self) -> Vec<f64> {
        let m = self.m;
        let mut out = vec![0.0; m * m];
        for (c, &[a11, a12, a22]) in self.cell_coefficients().iter().enumerate() {
            let (i, j) = (c % m, c / m);
            // Each corner sits on one x-edge and one y-edge of the cell.
            let signs = [(index(m, i, j), 1.0), (index(m, i + 1, j), -1.0), (index(m, i, j + 1), -1.0), (index(m, i + 1, j + 1), 1.0)];
            for (p, s) in signs {
                out[p] += 0.5 * a11 + 0.5 * a22 + 0.5 * s * a12;
            }
        }
        out
    }

    pub fn dirichlet_form(&self, u: &[f64], v: &[f64]) -> f64 {
        self.stiffness_apply(u).iter().zip(v).map(|(a, b)| a * b).sum()
    }

    pub fn laplacian(&self, u: &[f64]) -> Vec<f64> {
        let w = self.weights();
        self.stiffness_apply(u)
            .iter()
            .zip(&w)
            .map(|(k, w)| -k / w)
            .collect()
    }

    /// g + t·h, checked for positive definiteness.
    pub fn deformed(&self, h11: &[f64], h12: &[f64], h22: &[f64], t: f64) -> Result<Self> {
        let add = |g: &[f64], h: &[f64]| g.iter().zip(h).map(|(a, b)| a + t * b).collect();
        Self::new(self.m, add(&self.g11, h11), add(&self.g12, h12), add(&self.g22, h22))
            .map_err(|e| match e {
                Error::DegenerateMetric(msg) => Error::StepSize(format!("g + {t}·h: {msg}")),
                other => other,
            })
    }
}

fn det3(a: [[f64; 3]; 3]) -> f64 {
    a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
}

/// Fourier differentiation and constant-coefficient solves on the periodic grid.
pub struct Spectral {
    m: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Spectral {
    pub fn new(m: usize) -> Self {
        let mut planner = FftPlanner::new();
        Spectral {
            m,
            forward: planner.plan_fft_forward(m),
            inverse: planner.plan_fft_inverse(m),
        }
    }

    /// Wavenumber of the first-derivative symbol; the Nyquist mode is dropped.
    pub fn wavenumber(&self, j: usize) -> f64 {
        let m = self.m;
        if 2 * j < m {
            j as f64
        } else if 2 * j == m {
            0.0
        } else {
            j as f64 - m as f64
        }
    }

    fn transform(&self, data: &mut [Complex<f64>], inverse: bool) {
        let m = self.m;
        let plan = if inverse { &self.inverse } else { &self.forward };
        for row in data.chunks_mut(m) {
            plan.process(row);
        }
        let mut col = vec![Complex::new(0.0, 0.0); m];
        for i in 0..m {
            for j in 0..m {
                col[j] = data[i + m * j];
            }
            plan.process(&mut col);
            for j in 0..m {
                data[i + m * j] = col[j];
            }
        }
        if inverse {
            let s = 1.0 / (m * m) as f64;
            data.iter_mut().for_each(|z| *z *= s);
        }
    }

    pub fn forward(&self, u: &[f64]) -> Vec<Complex<f64>> {
        let mut data: Vec<Complex<f64>> = u.iter().map(|&x| Complex::new(x, 0.0)).collect();
        self.transform(&mut data, false);
        data
    }

    pub fn inverse_real(&self, mut data: Vec<Complex<f64>>) -> Vec<f64> {
        self.transform(&mut data, true);
        data.iter().map(|z| z.re).collect()
    }

    /// Applies the Fourier multiplier `symbol(kx, ky)`.
    pub fn multiply(&self, u: &[f64], symbol: impl Fn(f64, f64) -> Complex<f64>) -> Vec<f64> {
        let m = self.m;
        let mut hat = self.forward(u);
        for j in 0..m {
            for i in 0..m {
                hat[i + m * j] *= symbol(self.wavenumber(i), self.wavenumber(j));
            }
        }
        self.inverse_real(hat)
    }

    /// ∂u/∂x (axis 0) or ∂u/∂y (axis 1).
    pub fn derivative(&self, u: &[f64], axis: usize) -> Vec<f64> {
        self.multiply(u, |kx, ky| Complex::new(0.0, if axis == 0 { kx } else { ky }))
    }
}
