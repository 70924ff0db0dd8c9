//! Randomized properties of the discrete geometry and the λ/ν solvers.

use std::f64::consts::PI;
use std::sync::OnceLock;

use proptest::prelude::*;

use soliton_core::entropy::{f_functional, lambda_entropy, nu_entropy, nu_homogeneous, w_functional, Tolerances};
use soliton_core::geometry::{
    covector_norm2, divergence, integrate, laplacian_apply, make_conformal_direction, ConformalMode, DiscreteMetric,
    ScalarField, Torus2Metric, WarpedSphereMetric,
};

const GRID: usize = 128;

fn s4() -> &'static DiscreteMetric {
    static G: OnceLock<DiscreteMetric> = OnceLock::new();
    G.get_or_init(|| DiscreteMetric::Warped(WarpedSphereMetric::round(4, GRID).unwrap()))
}

/// A smooth even function of the polar angle: Σ c_j cos(js).
fn cosine_series(g: &DiscreteMetric, c: &[f64]) -> ScalarField {
    g.coordinates()
        .iter()
        .map(|s| c.iter().enumerate().map(|(j, a)| a * (j as f64 * s).cos()).sum::<f64>())
        .collect::<Vec<_>>()
        .into()
}

fn l2(g: &DiscreteMetric, u: &ScalarField) -> f64 {
    integrate(g, &u.map(|v| v * v)).unwrap().sqrt()
}

fn bumpy_s4(k: u32, eps: f64) -> DiscreteMetric {
    DiscreteMetric::Warped(WarpedSphereMetric::perturbed(4, GRID, k, eps).unwrap())
}

fn coeffs() -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-1.0f64..1.0, 5)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn laplacian_is_self_adjoint_and_conservative(a in coeffs(), b in coeffs(), k in 1u32..4, eps in -0.2f64..0.2) {
        for g in [s4().clone(), bumpy_s4(k, eps)] {
            let (u, v) = (cosine_series(&g, &a), cosine_series(&g, &b));
            let lu = laplacian_apply(&g, &u).unwrap();
            let lv = laplacian_apply(&g, &v).unwrap();
            let uv = integrate(&g, &u.zip_map(&lv.values, |x, y| x * y)).unwrap();
            let vu = integrate(&g, &v.zip_map(&lu.values, |x, y| x * y)).unwrap();
            let scale = l2(&g, &u) * l2(&g, &v) + 1e-300;
            prop_assert!((uv - vu).abs() <= 1e-10 * scale.max(l2(&g, &lu) * l2(&g, &v)));
            prop_assert!(integrate(&g, &lu).unwrap().abs() <= 1e-10 * l2(&g, &u).max(l2(&g, &lu)));
        }
    }

    #[test]
    fn shrinker_conformal_directions_are_divergence_free(a in coeffs()) {
        // div(Su) = 0 when Rc = g/2τ; only discretization error remains.
        let g = s4();
        let u = cosine_series(g, &a);
        let h = make_conformal_direction(g, &u, ConformalMode::Shrinker { tau: 1.0 / 6.0 }).unwrap();
        let div = integrate(g, &covector_norm2(g, &divergence(g, &h).unwrap()).unwrap()).unwrap().sqrt();
        let size = l2(g, &u);
        prop_assert!(div <= 1e-6 * size.max(1e-12), "{} vs {}", div, size);
    }

    #[test]
    fn lambda_is_a_lower_bound(a in coeffs()) {
        static LAMBDA: OnceLock<f64> = OnceLock::new();
        let g = s4();
        let lambda = *LAMBDA.get_or_init(|| lambda_entropy(g, &Tolerances::default()).unwrap().value);
        let f = cosine_series(g, &a);
        // Normalize ∫e^{−f} = 1.
        let mass = integrate(g, &f.map(|v| (-v).exp())).unwrap();
        let f = f.map(|v| v + mass.ln());
        prop_assert!(f_functional(g, &f).unwrap() >= lambda - 1e-8);
    }

    #[test]
    fn nu_is_a_lower_bound(a in coeffs(), log_tau in -3.0f64..1.0) {
        static NU: OnceLock<f64> = OnceLock::new();
        let g = s4();
        let nu = *NU.get_or_init(|| nu_entropy(g, None, &Tolerances::default()).unwrap().value);
        let tau = log_tau.exp();
        let f = cosine_series(g, &a);
        let mass = integrate(g, &f.map(|v| (-v).exp())).unwrap() * (4.0 * PI * tau).powi(-2);
        let f = f.map(|v| v + mass.ln());
        prop_assert!(w_functional(g, &f, tau).unwrap() >= nu - 1e-8);
    }

    #[test]
    fn nu_homogeneous_is_scale_invariant(r in 0.1f64..50.0, vol in 0.1f64..100.0, n in 1usize..9, c in 0.05f64..20.0) {
        let (nu, tau) = nu_homogeneous(r, vol, n).unwrap();
        let (nu_c, tau_c) = nu_homogeneous(r / c, c.powf(n as f64 / 2.0) * vol, n).unwrap();
        prop_assert!((nu - nu_c).abs() <= 1e-12 * (1.0 + nu.abs()));
        prop_assert!((tau_c / tau - c).abs() <= 1e-12 * c);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn torus_lambda_is_nonpositive(a in -0.2f64..0.2, b in -0.2f64..0.2, k in 1u32..4, phase in 0.0f64..6.3) {
        let k = k as f64;
        let t = Torus2Metric::from_fn(32, |x, y| {
            [1.0 + a * (k * x + phase).sin(), 0.5 * b * (x - k * y).cos(), 1.0 + b * (k * y).sin()]
        })
        .unwrap();
        let lambda = lambda_entropy(&DiscreteMetric::Torus(t), &Tolerances::default()).unwrap().value;
        prop_assert!(lambda <= 1e-8, "{}", lambda);
    }
}

#[test]
fn lambda_of_unit_spheres() {
    for n in 2..=6usize {
        let g = DiscreteMetric::Warped(WarpedSphereMetric::round(n, 512).unwrap());
        let lambda = lambda_entropy(&g, &Tolerances::default()).unwrap().value;
        let exact = (n * (n - 1)) as f64;
        assert!((lambda - exact).abs() <= 2e-4 * exact, "S^{n}: {lambda}");
    }
}
