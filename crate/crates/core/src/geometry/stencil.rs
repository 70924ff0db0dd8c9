//! Sixth-order central differences on `[0, L]` for functions with a definite parity
//! about both endpoints (the reflection symmetry of smooth invariant fields at the
//! poles of a warped sphere).

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

const D1: [f64; 3] = [3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0];
const D2_CENTER: f64 = -49.0 / 18.0;
const D2: [f64; 3] = [3.0 / 2.0, -3.0 / 20.0, 1.0 / 90.0];

#[inline]
fn at(u: &[f64], i: isize, parity: Parity) -> f64 {
    let m = (u.len() - 1) as isize;
    let sign = match parity {
        Parity::Even => 1.0,
        Parity::Odd => -1.0,
    };
    if i < 0 {
        sign * u[(-i) as usize]
    } else if i > m {
        sign * u[(2 * m - i) as usize]
    } else {
        u[i as usize]
    }
}

/// First derivative. The result has the opposite parity.
pub fn d1(u: &[f64], parity: Parity, h: f64) -> Vec<f64> {
    let m = u.len() as isize;
    (0..m)
        .map(|i| {
            D1.iter()
                .enumerate()
                .map(|(k, c)| {
                    let k = k as isize + 1;
                    c * (at(u, i + k, parity) - at(u, i - k, parity))
                })
                .sum::<f64>()
                / h
        })
        .collect()
}

/// Second derivative. The result has the same parity.
pub fn d2(u: &[f64], parity: Parity, h: f64) -> Vec<f64> {
    let m = u.len() as isize;
    (0..m)
        .map(|i| {
            let mut s = D2_CENTER * u[i as usize];
            for (k, c) in D2.iter().enumerate() {
                let k = k as isize + 1;
                s += c * (at(u, i + k, parity) + at(u, i - k, parity));
            }
            s / (h * h)
        })
        .collect()
}

/// Value at the pole of an even function, from the three nearest interior samples
/// (exact for f₀ + f₂s² + f₄s⁴).
pub fn even_pole_limit(f1: f64, f2: f64, f3: f64) -> f64 {
    (15.0 * f1 - 6.0 * f2 + f3) / 10.0
}

/// Weights of ∫ over `[s_i, s_{i+1}]` of the quintic through `s_{i-2} … s_{i+3}`.
pub const INTERVAL_QUINTIC: [f64; 6] = [
    11.0 / 1440.0,
    -93.0 / 1440.0,
    802.0 / 1440.0,
    802.0 / 1440.0,
    -93.0 / 1440.0,
    11.0 / 1440.0,
];

/// Cumulative integral ∫₀^{s_i} u, with `u` sampled on the uniform grid.
pub fn cumulative_integral(u: &[f64], parity: Parity, h: f64) -> Vec<f64> {
    let mut out = vec![0.0; u.len()];
    for i in 0..u.len() - 1 {
        let ii = i as isize;
        let piece: f64 = INTERVAL_QUINTIC
            .iter()
            .enumerate()
            .map(|(k, w)| w * at(u, ii - 2 + k as isize, parity))
            .sum();
        out[i + 1] = out[i] + piece * h;
    }
    out
}

/// Quintic Lagrange interpolation of samples `(x_i, y_i)` (strictly increasing `x`
/// on `[0, L]`, odd reflection at both ends) onto the points `targets`.
pub fn interpolate_odd(x: &[f64], y: &[f64], targets: &[f64]) -> Vec<f64> {
    let m = (x.len() - 1) as isize;
    let len = x[x.len() - 1];
    let node = |i: isize| -> (f64, f64) {
        if i < 0 {
            (-x[(-i) as usize], -y[(-i) as usize])
        } else if i > m {
            let j = (2 * m - i) as usize;
            (2.0 * len - x[j], -y[j])
        } else {
            (x[i as usize], y[i as usize])
        }
    };
    let mut cursor = 0usize;
    targets
        .iter()
        .map(|&t| {
            while (cursor as isize) < m - 1 && x[cursor + 1] <= t {
                cursor += 1;
            }
            let base = cursor as isize - 2;
            let pts: Vec<(f64, f64)> = (0..6).map(|k| node(base + k)).collect();
            let mut acc = 0.0;
            for (j, &(xj, yj)) in pts.iter().enumerate() {
                let mut l = 1.0;
                for (k, &(xk, _)) in pts.iter().enumerate() {
                    if k != j {
                        l *= (t - xk) / (xj - xk);
                    }
                }
                acc += l * yj;
            }
            acc
        })
        .collect()
}
