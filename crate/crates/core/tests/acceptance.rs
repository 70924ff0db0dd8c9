//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p soliton-core --test acceptance`.
//! Two criteria fail for reasons recorded in the README (a rounding slip in one quoted
//! table entry, and a quoted sphere stability constant that the computed spectrum does
//! not reproduce). The test asserts that exactly those fail, so a fix or a regression
//! elsewhere both show up.

use std::f64::consts::{E, PI};
use std::io::Write;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use soliton_core::catalog::{builtin_entries, density_table, ShrinkerSpec};
use soliton_core::entropy::{lambda_entropy, nu_entropy, Tolerances};
use soliton_core::flow::{entropy_gain, nu_along_flow, product_flow, Factor};
use soliton_core::geometry::{
    div_star, make_conformal_direction, ConformalMode, Covector, DiscreteMetric, ProductSphereMetric,
    SymTensorField, Torus2Metric, WarpedSphereMetric,
};
use soliton_core::reduced::{
    l_geodesic, reduced_volume_einstein, theta_nu_consistency, verify_soliton_identities, SolitonBackground,
};
use soliton_core::variation::{
    apply_n, fd_hessian_check, second_variation_lambda, second_variation_lambda_terms, second_variation_nu,
    second_variation_nu_terms, stability_report, zonal_harmonic, Functional,
};

struct Outcome {
    id: usize,
    title: &'static str,
    pass: bool,
    details: Vec<String>,
}

impl Outcome {
    fn new(id: usize, title: &'static str) -> Self {
        Outcome { id, title, pass: true, details: Vec::new() }
    }

    fn check(&mut self, ok: bool, detail: String) {
        let mark = if ok { "ok" } else { "FAILED" };
        self.details.push(format!("{mark}: {detail}"));
        self.pass &= ok;
    }
}

/// Criteria known to fail; see the README for the analysis.
const EXPECTED_FAILURES: [usize; 2] = [1, 8];

/// The 3-decimal column of the published table, top to bottom.
const TABLE_THREE_DECIMALS: [&str; 21] = [
    "1.000", "0.812", "0.791", "0.736", "0.672", "0.609", "0.541", "0.518", "0.517", "0.500", "0.500", "0.406",
    "0.406", "0.396", "0.368", "0.338", "0.333", "0.271", "0.203", "0.135", "0.068",
];

fn table_reproduction() -> Outcome {
    let mut o = Outcome::new(1, "density table reproduces the 21 published rows to 3 decimals");
    let start = Instant::now();
    let rows = density_table();
    let elapsed = start.elapsed().as_secs_f64();
    o.check(rows.len() == 21, format!("{} rows", rows.len()));
    for (row, want) in rows.iter().zip(TABLE_THREE_DECIMALS) {
        let got = format!("{:.3}", row.theta);
        if got != want {
            o.check(false, format!("{}: θ = {:.6} rounds to {got}, table has {want}", row.name, row.theta));
        }
    }
    o.check(elapsed < 1.0, format!("runtime {elapsed:.3} s"));
    o
}

fn numeric_nu() -> Outcome {
    let mut o = Outcome::new(2, "numeric ν on the warped round S⁴ and S³ (M = 512)");
    let tol = Tolerances::default();
    // Unit S^n is Einstein with τ = 1/2(n−1); ν = ln Θ with Θ(S⁴) = 6/e², Θ(S³) = 2√π e^{−3/2}.
    for (n, nu_exact, tau_exact) in [
        (4usize, 6f64.ln() - 2.0, 1.0 / 6.0),
        (3, (2.0 * PI.sqrt()).ln() - 1.5, 0.25),
    ] {
        let g = DiscreteMetric::Warped(WarpedSphereMetric::round(n, 512).unwrap());
        let start = Instant::now();
        let r = nu_entropy(&g, None, &tol).unwrap();
        let secs = start.elapsed().as_secs_f64();
        let tau = r.tau.unwrap();
        o.check(
            (r.value - nu_exact).abs() < 1e-3 && (tau - tau_exact).abs() < 1e-3 && secs < 30.0,
            format!(
                "S^{n}: ν = {:.9} (exact {nu_exact:.9}), τ = {tau:.9} (exact {tau_exact:.9}), {secs:.3} s",
                r.value
            ),
        );
    }
    o
}

fn theta_equals_exp_nu() -> Outcome {
    let mut o = Outcome::new(3, "Θ = e^ν and the Einstein reduced volume");
    let tol = Tolerances::default();
    for (label, spec) in [
        ("S^3", ShrinkerSpec::sphere(3)),
        ("S^4", ShrinkerSpec::sphere(4)),
        ("R^4", ShrinkerSpec::flat(4)),
    ] {
        let r = theta_nu_consistency(&spec, 512, &tol).unwrap();
        o.check(
            r.agree == Some(true) && r.rel_diff.unwrap() < 1e-3,
            format!("{label}: Θ = {:.9}, e^ν = {:.9}, rel diff {:.2e}", r.theta, r.exp_nu.unwrap(), r.rel_diff.unwrap()),
        );
    }
    let mut einstein = 0;
    let mut worst: f64 = 0.0;
    for e in builtin_entries() {
        if let Ok(theta) = reduced_volume_einstein(&e.spec, 0.37) {
            einstein += 1;
            worst = worst.max((theta - e.theta).abs());
        }
    }
    // S⁴, RP⁴, CP², S²×S² and the six del Pezzo rows.
    o.check(
        einstein == 10 && worst < 1e-12,
        format!("{einstein} Einstein entries, max |θ − Θ| = {worst:.1e}"),
    );
    let s4 = ShrinkerSpec::sphere(4);
    let spread = [0.1, 1.0, 10.0]
        .iter()
        .map(|&t| (reduced_volume_einstein(&s4, t).unwrap() - 6.0 / (E * E)).abs())
        .fold(0.0, f64::max);
    o.check(spread < 1e-12, format!("S^4 reduced volume at τ = 0.1, 1, 10 within {spread:.1e} of 6/e²"));
    o
}

fn lambda_properties() -> Outcome {
    let mut o = Outcome::new(4, "λ on flat and perturbed tori");
    let tol = Tolerances::default();
    let flat = DiscreteMetric::Torus(Torus2Metric::flat(64).unwrap());
    let r = lambda_entropy(&flat, &tol).unwrap();
    let spread = r.minimizer_f.values.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b))
        - r.minimizer_f.values.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    o.check(r.value.abs() <= 1e-8 && spread < 1e-8, format!("flat T²: λ = {:.2e}, spread of f {spread:.1e}", r.value));
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..20 {
        let amp: [f64; 3] = [rng.gen_range(-0.2..0.2), rng.gen_range(-0.2..0.2), rng.gen_range(-0.2..0.2)];
        let k: [f64; 4] = [0, 1, 2, 3].map(|_| rng.gen_range(1..=3) as f64);
        let phase: f64 = rng.gen_range(0.0..2.0 * PI);
        let t = Torus2Metric::from_fn(64, |x, y| {
            [
                1.0 + amp[0] * (k[0] * x + k[1] * y + phase).sin(),
                amp[2] * (k[2] * x).cos() * (k[3] * y).sin(),
                1.0 + amp[1] * (k[2] * x - k[3] * y).cos(),
            ]
        })
        .unwrap();
        let v = lambda_entropy(&DiscreteMetric::Torus(t), &tol).unwrap().value;
        worst = worst.max(v);
    }
    o.check(worst <= 1e-8, format!("20 random perturbed tori (amplitude ≤ 0.2): max λ = {worst:.3e}"));
    o
}

fn second_variation_oracles() -> Outcome {
    let mut o = Outcome::new(5, "finite-difference Hessians against the second-variation forms");
    let tol = Tolerances::default();
    let eps = [1e-2, 5e-3, 2.5e-3];

    // (a) h = ε sin(kx) dy² on the flat square torus: the form is −π²k²ε².
    let t = Torus2Metric::flat(64).unwrap();
    let (k, amp) = (1.0, 0.5);
    let z = vec![0.0; t.len()];
    let h22 = t.nodes().iter().map(|(x, _)| amp * (k * x).sin()).collect();
    let g = DiscreteMetric::Torus(t);
    let h = SymTensorField::Torus { h11: z.clone(), h12: z, h22 };
    let closed = -PI * PI * k * k * amp * amp;
    let form = second_variation_lambda(&g, &h).unwrap();
    let fd = fd_hessian_check(&g, &h, Functional::Lambda, &eps, &tol).unwrap();
    o.check(
        (form - closed).abs() < 1e-8 * closed.abs() && fd.rel_err < 1e-2,
        format!("(a) torus: form {form:.9} vs −π²k²ε² = {closed:.9}; FD {:.9}, rel err {:.2e}", fd.fd_value, fd.rel_err),
    );

    // (b) conformal direction Su, u of degree 2, on the unit S⁴.
    let g = DiscreteMetric::Warped(WarpedSphereMetric::round(4, 512).unwrap());
    let u = zonal_harmonic(&g, 2);
    let h = make_conformal_direction(&g, &u, ConformalMode::Shrinker { tau: 1.0 / 6.0 }).unwrap();
    let fd = fd_hessian_check(&g, &h, Functional::Nu, &eps, &tol).unwrap();
    o.check(
        fd.rel_err < 1e-2,
        format!("(b) S^4 Su: FD {:.6} vs form {:.6}, rel err {:.2e}", fd.fd_value, fd.form_value, fd.rel_err),
    );

    // (c) a = e^δ, b = e^{−δ} on S²×S²: ν̃(δ) = 2 ln(2 cosh 2δ) − 2, so ν̃″(0) = 8.
    let family = |d: f64| 2.0 * (2.0 * (2.0 * d).cosh()).ln() - 2.0;
    let d = 1e-3;
    let analytic = (family(d) - 2.0 * family(0.0) + family(-d)) / (d * d);
    let g = DiscreteMetric::Product(ProductSphereMetric::new(2, 2, 1.0, 1.0).unwrap());
    let h = SymTensorField::Product { c1: 0.5, c2: -0.5 };
    let form = second_variation_nu(&g, &h, 0.5).unwrap();
    let fd = fd_hessian_check(&g, &h, Functional::Nu, &eps, &tol).unwrap();
    o.check(
        (16.0 * form - 8.0).abs() < 1e-6 && (analytic - 8.0).abs() < 1e-5 && fd.rel_err < 1e-2,
        format!(
            "(c) S²×S²: 16·form = {:.9}, ν̃″(0) = 8 (closed form, FD {analytic:.7}); FD rel err {:.2e}",
            16.0 * form,
            fd.rel_err
        ),
    );
    o
}

fn null_directions() -> Outcome {
    let mut o = Outcome::new(6, "Lie-derivative and scale directions are null");
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let s4 = DiscreteMetric::Warped(WarpedSphereMetric::round(4, 512).unwrap());
    let torus = DiscreteMetric::Torus(Torus2Metric::flat(64).unwrap());
    let (mut worst_n, mut worst_l) = (0.0f64, 0.0f64);
    for _ in 0..10 {
        let c: [f64; 4] = [0; 4].map(|_| rng.gen_range(-1.0..1.0));
        let s = s4
            .coordinates()
            .iter()
            .map(|s| c.iter().enumerate().map(|(j, a)| a * ((j + 1) as f64 * s).sin()).sum())
            .collect();
        let h = div_star(&s4, &Covector::Warped { s }).unwrap();
        let t = second_variation_nu_terms(&s4, &h, 1.0 / 6.0).unwrap();
        worst_n = worst_n.max(t.value.abs() / t.magnitude());

        let m: [f64; 4] = [0; 4].map(|_| rng.gen_range(-1.0..1.0));
        let kx = rng.gen_range(1..=3) as f64;
        let ky = rng.gen_range(0..=3) as f64;
        let Some(nodes) = torus_nodes(&torus) else { unreachable!() };
        let w1 = nodes.iter().map(|(x, y)| m[0] * (kx * x + ky * y).sin() + m[1] * (ky * x).cos()).collect();
        let w2 = nodes.iter().map(|(x, y)| m[2] * (kx * x - ky * y).cos() + m[3] * (kx * y).sin()).collect();
        let h = div_star(&torus, &Covector::Torus { w1, w2 }).unwrap();
        let t = second_variation_lambda_terms(&torus, &h).unwrap();
        worst_l = worst_l.max(t.value.abs() / t.magnitude());
    }
    o.check(worst_n <= 1e-6, format!("N form on 10 random div*ω over S^4: max relative {worst_n:.2e}"));
    o.check(worst_l <= 1e-6, format!("L form on 10 random div*ω over T²: max relative {worst_l:.2e}"));
    let scale = second_variation_nu(&s4, &SymTensorField::metric(&s4), 1.0 / 6.0).unwrap();
    o.check(scale.abs() <= 1e-8, format!("ν form on h = g over S^4: {scale:.2e}"));
    o
}

fn torus_nodes(g: &DiscreteMetric) -> Option<Vec<(f64, f64)>> {
    match g {
        DiscreteMetric::Torus(t) => Some(t.nodes()),
        _ => None,
    }
}

fn product_instability() -> Outcome {
    let mut o = Outcome::new(7, "S²×S² is linearly unstable along (g₁ − g₂)/2");
    let g = DiscreteMetric::Product(ProductSphereMetric::new(2, 2, 1.0, 1.0).unwrap());
    let h = SymTensorField::Product { c1: 0.5, c2: -0.5 };
    // S²(1) has Rc = g, so τ = 1/2 and 1/2τ = 1.
    let tau = 0.5;
    let form = second_variation_nu(&g, &h, tau).unwrap();
    o.check((form - 0.5).abs() < 1e-6, format!("second variation {form:.12} (expected 1/2)"));
    let nh = apply_n(&g, &h, tau).unwrap();
    let err = nh.add_scaled(&h, -1.0 / (2.0 * tau)).unwrap().max_abs();
    o.check(err < 1e-8, format!("|Nh − h/2τ| = {err:.1e}"));
    o
}

fn stability_constants() -> Outcome {
    let mut o = Outcome::new(8, "stability constants μ_N with computed confirmation");
    let quoted: Vec<(&str, f64)> = vec![
        ("s3", -1.0),
        ("s4", -2.0 / 3.0),
        ("s5", -0.5),
        ("cp2", 0.0),
        ("cp3", 0.0),
        ("s2xs2", 0.5),
        ("s3xs2", 0.5),
        ("q3", 1.0 / 6.0),
        ("q4", 0.0),
    ];
    for (name, mu_tau) in &quoted {
        let r = stability_report(name).unwrap();
        let got = r.mu_n_tau.unwrap();
        o.check((got - mu_tau).abs() < 1e-12, format!("{name}: μ_N = {} (τμ_N = {got:.6})", r.mu_n));
    }
    for n in [3usize, 4, 5] {
        let r = stability_report(&format!("s{n}")).unwrap();
        let computed = r.computed_mu_n_tau.unwrap();
        // N(Su) = (n − 1 − l(l+n−1)/2)Su on the unit sphere; l = 2 gives τμ = −1/(n−1).
        let oracle = -1.0 / (n as f64 - 1.0);
        o.check(
            r.computed_agrees == Some(true),
            format!(
                "S^{n}: computed τμ_N = {computed:.9} (analytic conformal eigenvalue {oracle:.9}) vs quoted {:.9}",
                r.mu_n_tau.unwrap()
            ),
        );
    }
    for name in ["s2xs2", "s3xs3", "s2xs4"] {
        let r = stability_report(name).unwrap();
        o.check(
            r.computed_agrees == Some(true),
            format!("{name}: computed τμ_N = {:.9}", r.computed_mu_n_tau.unwrap()),
        );
    }
    o
}

fn flow_monotonicity() -> Outcome {
    let mut o = Outcome::new(9, "restricted entropy is monotone along product Ricci flow");
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let p = rng.gen_range(2..=4);
        let q = rng.gen_range(2..=4);
        let (a0, b0) = (rng.gen_range(0.5..2.0), rng.gen_range(0.5..2.0));
        let tr = product_flow(Factor::Round { dim: p }, Factor::Round { dim: q }, a0, b0, 1e-3, 10.0).unwrap();
        let nus: Vec<f64> = nu_along_flow(&tr).unwrap().iter().filter_map(|s| s.nu_tilde).collect();
        for w in nus.windows(2) {
            worst = worst.max(w[0] - w[1]);
        }
    }
    o.check(worst <= 1e-12, format!("10 random starts: largest decrease {worst:.1e}"));
    // Einstein radii a² = p − 1, b² = q − 1 shrink homothetically.
    let tr = product_flow(Factor::Round { dim: 3 }, Factor::Round { dim: 2 }, 2f64.sqrt(), 1.0, 1e-3, 1.0).unwrap();
    let nus: Vec<f64> = nu_along_flow(&tr).unwrap().iter().filter_map(|s| s.nu_tilde).collect();
    let drift = nus.iter().map(|v| (v - nus[0]).abs()).fold(0.0, f64::max);
    o.check(drift <= 1e-12, format!("isotropic S^3×S^2 start: drift {drift:.1e} over {} samples", nus.len()));
    let gains: Vec<f64> = [1e-2, 1e-3].iter().map(|&d| entropy_gain(2, 2, d).unwrap()).collect();
    o.check(
        (gains[1] - 4.0).abs() < 0.04,
        format!("(ν̃(δ) − ν̃(0))/δ²: {:.6} at δ = 1e-2, {:.6} at δ = 1e-3", gains[0], gains[1]),
    );
    o
}

fn reduced_distance() -> Outcome {
    let mut o = Outcome::new(10, "reduced distance and soliton identities");
    let tol = Tolerances::default();
    let flat = SolitonBackground::gaussian(4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst = 0.0f64;
    for i in 0..8 {
        let radius = 4.0 * i as f64 / 7.0;
        let dir: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        let x: Vec<f64> = dir.iter().map(|v| radius * v / norm).collect();
        let tau = rng.gen_range(0.25..2.0);
        let r = l_geodesic(&flat, &x, tau, 256, &tol).unwrap();
        worst = worst.max((r.ell - radius * radius / (4.0 * tau)).abs());
    }
    o.check(worst < 1e-3, format!("gaussian R^4, |x| ≤ 4, K = 256: max |ℓ − |x|²/4τ| = {worst:.2e}"));
    let s4 = SolitonBackground::einstein(ShrinkerSpec::sphere(4)).unwrap();
    let r = l_geodesic(&s4, &[0.0, 0.0, 0.0, 0.6, 0.8], 1.0, 256, &tol).unwrap();
    o.check((r.ell - 2.0).abs() < 1e-2, format!("S^4 vertex ℓ = {:.9} (expected 2)", r.ell));
    for (label, bg) in [("R^4", flat), ("S^4", s4)] {
        let id = verify_soliton_identities(&bg).unwrap();
        o.check(
            id.passed,
            format!(
                "{label} identities: soliton {:.1e}, auxiliary {:.1e}, mass {:.1e}",
                id.soliton, id.auxiliary, id.mass
            ),
        );
    }
    o
}

#[test]
fn acceptance() {
    let outcomes = [
        table_reproduction(),
        numeric_nu(),
        theta_equals_exp_nu(),
        lambda_properties(),
        second_variation_oracles(),
        null_directions(),
        product_instability(),
        stability_constants(),
        flow_monotonicity(),
        reduced_distance(),
    ];
    // Written to the stdout handle rather than through println! so the lines also
    // show up in a plain `cargo test` run, which captures the print macros.
    let mut report = String::new();
    for o in &outcomes {
        report += &format!("criterion {:>2}: {}  {}\n", o.id, if o.pass { "PASS" } else { "FAIL" }, o.title);
        for d in &o.details {
            report += &format!("      {d}\n");
        }
    }
    let mut out = std::io::stdout().lock();
    out.write_all(report.as_bytes()).unwrap();
    out.flush().unwrap();
    let unexpected: Vec<usize> = outcomes
        .iter()
        .filter(|o| o.pass == EXPECTED_FAILURES.contains(&o.id))
        .map(|o| o.id)
        .collect();
    assert!(
        unexpected.is_empty(),
        "criteria {unexpected:?} changed status; expected failures are {EXPECTED_FAILURES:?}"
    );
}
