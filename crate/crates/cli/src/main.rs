//! `soliton`: command-line front end for the entropy, stability, flow and density
//! computations of soliton-core.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Map, Value};

use soliton_core::catalog::{
    builtin_entries, density, load_user_catalog, merged_entries, parse_spec, ShrinkerSpec, TableRow,
};
use soliton_core::config::{OutputFormat, RunConfig};
use soliton_core::entropy::{lambda_entropy, nu_entropy, EntropyResult, Tolerances};
use soliton_core::flow::{anisotropy, nu_along_flow, product_flow, Factor};
use soliton_core::geometry::{
    integrate, make_conformal_direction, scalar_curvature, torus_preset, warped_preset, ConformalMode,
    DiscreteMetric, ProductSphereMetric, SymTensorField,
};
use soliton_core::reduced::{l_geodesic, theta_nu_consistency, verify_soliton_identities, SolitonBackground};
use soliton_core::variation::{fd_hessian_check, stability_report, zonal_harmonic, Functional};
use soliton_core::Error;

const CONFIG_ENV: &str = "SOLITON_CONFIG";

#[derive(Parser, Debug)]
#[command(name = "soliton", version, about = "Entropy, stability and central density computations for Ricci solitons")]
#[command(after_help = "The JSON file named by SOLITON_CONFIG, if set, supplies grid sizes, tolerances, \
                        finite-difference steps, output format and a user catalog path.")]
struct Cli {
    /// Output format; overrides the config file.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    #[command(subcommand)]
    verb: Verb,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
    Text,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Json => OutputFormat::Json,
            Format::Csv => OutputFormat::Csv,
            Format::Text => OutputFormat::Text,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Verb {
    /// Central density table of the built-in (and user) catalog, by descending Θ.
    Table {
        /// JSON array of {"name", "expr"} entries merged into the table.
        #[arg(long)]
        catalog: Option<PathBuf>,
    },
    /// Closed-form Θ and ν = ln Θ of a shrinker expression, e.g. "product(einstein:s2, flat:2)".
    Density { spec: String },
    /// ν(g) by nested minimization of 𝒲.
    Nu {
        #[command(flatten)]
        metric: MetricArgs,
        /// Include the minimizing potential f.
        #[arg(long)]
        with_minimizer: bool,
    },
    /// λ(g), the ground state of −4Δ + R.
    Lambda {
        #[command(flatten)]
        metric: MetricArgs,
        #[arg(long)]
        with_minimizer: bool,
    },
    /// Stability constant μ_N of a named Einstein shrinker (s4, cp2, s2xs2, q3, ...).
    Stability { name: String },
    /// Finite-difference second derivative of λ or ν against the second-variation form.
    HessianCheck {
        #[command(flatten)]
        metric: MetricArgs,
        #[arg(long, value_enum, default_value = "nu")]
        functional: FunctionalArg,
        /// conformal:l=L (warped), fourier:k=K,eps=E (torus), anisotropy (product), or metric.
        #[arg(long)]
        direction: Option<String>,
        /// Step schedule, a decreasing geometric sequence; defaults to the config fd_eps.
        #[arg(long, value_delimiter = ',')]
        eps: Option<Vec<f64>>,
        /// Largest relative error reported as a pass.
        #[arg(long, default_value_t = 1e-2)]
        tol: f64,
    },
    /// Ricci flow of a product of spheres / flat factors with the restricted entropy.
    Flow {
        /// Factors joined by `x`: s<d> round sphere, r<d> flat.
        #[arg(long, default_value = "s2xs2")]
        family: String,
        #[arg(long, default_value_t = 1.0)]
        a0: f64,
        #[arg(long, default_value_t = 1.0)]
        b0: f64,
        #[arg(long, default_value_t = 0.01)]
        dt: f64,
        #[arg(long, default_value_t = 1.0)]
        horizon: f64,
    },
    /// Reduced distance ℓ(x, τ) by discrete ℒ-geodesic minimization.
    #[command(allow_negative_numbers = true)]
    Lgeo {
        /// flat<n> (gaussian ℝⁿ) or s<n> (round shrinking sphere).
        #[arg(long, default_value = "flat4")]
        bg: String,
        /// Endpoint; n coordinates on flat<n>, n+1 ambient coordinates on s<n>.
        #[arg(long, value_delimiter = ',', required = true)]
        x: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        tau: f64,
        /// Number of path intervals.
        #[arg(long, default_value_t = 256)]
        k: usize,
        #[arg(long)]
        with_path: bool,
    },
    /// Θ from the closed form against e^ν from the entropy solver.
    Consistency { spec: String },
    /// Residuals of the soliton, auxiliary and mass identities on a model background.
    VerifyIdentities {
        #[arg(long, default_value = "flat4")]
        bg: String,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FunctionalArg {
    Lambda,
    Nu,
}

#[derive(Args, Debug)]
struct MetricArgs {
    #[arg(long, value_enum, default_value = "warped")]
    ansatz: Ansatz,
    /// Dimension of the warped sphere.
    #[arg(long, default_value_t = 4)]
    dim: usize,
    /// Warped: round, cylinder-capped:BETA, perturbed:k=K,eps=E. Torus: flat, perturbed:k=K,eps=E.
    #[arg(long)]
    profile: Option<String>,
    /// Grid size; defaults to grid_M (warped) or torus_M (torus) from the config.
    #[arg(long)]
    grid: Option<usize>,
    /// Product factor dimensions p,q.
    #[arg(long, value_delimiter = ',', num_args = 2, default_values_t = [2usize, 2])]
    dims: Vec<usize>,
    /// Product factor radii a,b.
    #[arg(long, value_delimiter = ',', num_args = 2, default_values_t = [1.0, 1.0])]
    radii: Vec<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Ansatz {
    Warped,
    Torus,
    Product,
}

/// A report plus whether it records a failed verification (exit 2).
struct Report {
    body: Value,
    failed: bool,
    csv: Option<Csv>,
}

struct Csv {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Report {
    fn ok(body: impl Serialize) -> anyhow::Result<Self> {
        Ok(Report {
            body: serde_json::to_value(body)?,
            failed: false,
            csv: None,
        })
    }
}

fn tolerances(cfg: &RunConfig) -> Tolerances {
    Tolerances {
        eigen: cfg.tol_eigen,
        descent: cfg.tol_descent,
        ..Tolerances::default()
    }
}

fn build_metric(args: &MetricArgs, cfg: &RunConfig) -> anyhow::Result<DiscreteMetric> {
    Ok(match args.ansatz {
        Ansatz::Warped => {
            let profile = args.profile.as_deref().unwrap_or("round");
            DiscreteMetric::Warped(warped_preset(profile, args.dim, args.grid.unwrap_or(cfg.grid_m))?)
        }
        Ansatz::Torus => {
            let profile = args.profile.as_deref().unwrap_or("flat");
            DiscreteMetric::Torus(torus_preset(profile, args.grid.unwrap_or(cfg.torus_m))?)
        }
        Ansatz::Product => {
            if args.profile.is_some() {
                bail!(Error::Parse("product metrics take --dims and --radii, not --profile".into()));
            }
            DiscreteMetric::Product(ProductSphereMetric::new(args.dims[0], args.dims[1], args.radii[0], args.radii[1])?)
        }
    })
}

fn entropy_body(r: EntropyResult, with_minimizer: bool) -> Value {
    let mut v = json!({
        "value": r.value,
        "tau": r.tau,
        "iterations": r.iterations,
        "residual": r.residual,
        "grid": r.grid,
    });
    if with_minimizer {
        v["minimizer_f"] = json!(r.minimizer_f.values);
    }
    v
}

/// Reads a key=value argument list such as "k=2,eps=0.3".
fn keyed(args: &str, key: &str) -> Option<f64> {
    args.split(',')
        .filter_map(|p| p.split_once('='))
        .find(|(k, _)| k.trim() == key)
        .and_then(|(_, v)| v.trim().parse().ok())
}

fn mean_tau(g: &DiscreteMetric) -> anyhow::Result<f64> {
    let rbar = integrate(g, &scalar_curvature(g)?)? / g.volume();
    if rbar.is_nan() || rbar <= 0.0 {
        bail!(Error::Domain("conformal shrinker directions need positive mean scalar curvature".into()));
    }
    Ok(g.n() as f64 / (2.0 * rbar))
}

fn build_direction(g: &DiscreteMetric, spec: Option<&str>) -> anyhow::Result<(String, SymTensorField)> {
    let default = match g {
        DiscreteMetric::Warped(_) => "conformal:l=2",
        DiscreteMetric::Torus(_) => "fourier:k=1,eps=1",
        DiscreteMetric::Product(_) => "anisotropy",
    };
    let spec = spec.unwrap_or(default);
    let (head, args) = spec.split_once(':').unwrap_or((spec, ""));
    let h = match (head, g) {
        ("metric", _) => SymTensorField::metric(g),
        ("conformal", DiscreteMetric::Warped(_)) => {
            let l = keyed(args, "l").unwrap_or(2.0);
            if l < 1.0 || l.fract() != 0.0 {
                bail!(Error::Parse(format!("degree l must be a positive integer in `{spec}`")));
            }
            let u = zonal_harmonic(g, l as usize);
            make_conformal_direction(g, &u, ConformalMode::Shrinker { tau: mean_tau(g)? })?
        }
        ("fourier", DiscreteMetric::Torus(t)) => {
            let k = keyed(args, "k").unwrap_or(1.0);
            let eps = keyed(args, "eps").unwrap_or(1.0);
            let z = vec![0.0; t.len()];
            let h22 = t.nodes().iter().map(|(x, _)| eps * (k * x).sin()).collect();
            SymTensorField::Torus { h11: z.clone(), h12: z, h22 }
        }
        ("anisotropy", DiscreteMetric::Product(_)) => SymTensorField::Product { c1: 0.5, c2: -0.5 },
        _ => bail!(Error::Parse(format!(
            "direction `{spec}` does not apply to the {} ansatz",
            g.ansatz()
        ))),
    };
    Ok((spec.to_string(), h))
}

fn parse_factor(s: &str) -> anyhow::Result<Factor> {
    let bad = || Error::Parse(format!("bad factor `{s}`; expected s<d> or r<d>"));
    let (kind, dim) = s.trim().split_at(1.min(s.trim().len()));
    let dim: usize = dim.parse().map_err(|_| bad())?;
    match kind {
        "s" | "S" => Ok(Factor::Round { dim }),
        "r" | "R" => Ok(Factor::Flat { dim }),
        _ => Err(bad().into()),
    }
}

fn parse_background(s: &str) -> anyhow::Result<SolitonBackground> {
    let s = s.trim().to_lowercase();
    let num = |rest: &str| -> anyhow::Result<usize> {
        rest.parse()
            .map_err(|_| Error::Parse(format!("bad background `{s}`; expected flat<n> or s<n>")).into())
    };
    if let Some(rest) = s.strip_prefix("flat").or_else(|| s.strip_prefix("gaussian")) {
        Ok(SolitonBackground::gaussian(num(rest)?)?)
    } else if let Some(rest) = s.strip_prefix('s') {
        Ok(SolitonBackground::einstein(ShrinkerSpec::sphere(num(rest)?))?)
    } else {
        bail!(Error::Parse(format!("bad background `{s}`; expected flat<n> or s<n>")))
    }
}

/// Accepts the expression grammar, and bare Einstein names such as `s4` or `cp2`.
fn parse_target(s: &str) -> anyhow::Result<ShrinkerSpec> {
    match parse_spec(s) {
        Ok(spec) => Ok(spec),
        Err(e) if !s.contains([':', '(']) => {
            parse_spec(&format!("einstein:{}", s.trim())).map_err(|_| e.into())
        }
        Err(e) => Err(e.into()),
    }
}

fn run(verb: Verb, cfg: &RunConfig) -> anyhow::Result<Report> {
    let tol = tolerances(cfg);
    match verb {
        Verb::Table { catalog } => {
            let path = catalog.or_else(|| cfg.catalog_path.as_ref().map(PathBuf::from));
            let entries = match path {
                Some(p) => merged_entries(load_user_catalog(&p)?),
                None => builtin_entries(),
            };
            let rows: Vec<TableRow> = entries.iter().map(TableRow::from).collect();
            let csv = Csv {
                header: vec!["name", "type", "exact", "theta"],
                rows: rows
                    .iter()
                    .map(|r| vec![r.name.clone(), r.type_label.clone(), r.exact.clone(), r.theta.to_string()])
                    .collect(),
            };
            Ok(Report {
                body: json!({ "rows": rows }),
                failed: false,
                csv: Some(csv),
            })
        }
        Verb::Density { spec } => {
            let s = parse_target(&spec)?;
            let d = density(&s)?;
            Report::ok(json!({
                "spec": s.to_string(),
                "dim": s.dim(),
                "theta": d.theta,
                "nu": d.nu,
                "provenance": d.provenance,
            }))
        }
        Verb::Nu { metric, with_minimizer } => {
            let g = build_metric(&metric, cfg)?;
            Report::ok(entropy_body(nu_entropy(&g, None, &tol)?, with_minimizer))
        }
        Verb::Lambda { metric, with_minimizer } => {
            let g = build_metric(&metric, cfg)?;
            Report::ok(entropy_body(lambda_entropy(&g, &tol)?, with_minimizer))
        }
        Verb::Stability { name } => Report::ok(stability_report(&name)?),
        Verb::HessianCheck { metric, functional, direction, eps, tol: pass_tol } => {
            let g = build_metric(&metric, cfg)?;
            let (label, h) = build_direction(&g, direction.as_deref())?;
            let functional = match functional {
                FunctionalArg::Lambda => Functional::Lambda,
                FunctionalArg::Nu => Functional::Nu,
            };
            let eps = eps.unwrap_or_else(|| cfg.fd_eps.clone());
            let r = fd_hessian_check(&g, &h, functional, &eps, &tol)?;
            let passed = r.rel_err < pass_tol;
            let mut body = serde_json::to_value(&r)?;
            body["direction"] = json!(label);
            body["grid"] = json!(g.grid_label());
            body["passed"] = json!(passed);
            Ok(Report {
                body,
                failed: !passed,
                csv: None,
            })
        }
        Verb::Flow { family, a0, b0, dt, horizon } => {
            let parts: Vec<&str> = family.split(['x', '×']).collect();
            if parts.len() != 2 {
                bail!(Error::Parse(format!("family `{family}` must have two factors, e.g. s2xs2")));
            }
            let (first, second) = (parse_factor(parts[0])?, parse_factor(parts[1])?);
            let traj = product_flow(first, second, a0, b0, dt, horizon)?;
            let nus = nu_along_flow(&traj)?;
            let chi = anisotropy(&traj);
            let samples: Vec<Value> = traj
                .samples
                .iter()
                .zip(&nus)
                .zip(&chi)
                .map(|((s, n), c)| {
                    json!({
                        "t": s.t,
                        "A": s.a2,
                        "B": s.b2,
                        "nu_tilde": n.nu_tilde,
                        "constant_potential_valid": n.constant_potential_valid,
                        "chi": c.1,
                    })
                })
                .collect();
            let csv = Csv {
                header: vec!["t", "A", "B", "nu_tilde", "chi"],
                rows: traj
                    .samples
                    .iter()
                    .zip(&nus)
                    .zip(&chi)
                    .map(|((s, n), c)| {
                        vec![
                            s.t.to_string(),
                            s.a2.to_string(),
                            s.b2.to_string(),
                            n.nu_tilde.map(|v| v.to_string()).unwrap_or_default(),
                            c.1.to_string(),
                        ]
                    })
                    .collect(),
            };
            Ok(Report {
                body: json!({
                    "family": traj.family,
                    "t_singular": traj.t_singular.is_finite().then_some(traj.t_singular),
                    "truncated": traj.truncated,
                    "samples": samples,
                }),
                failed: false,
                csv: Some(csv),
            })
        }
        Verb::Lgeo { bg, x, tau, k, with_path } => {
            let background = parse_background(&bg)?;
            let r = l_geodesic(&background, &x, tau, k, &tol)?;
            let closed_form = match background {
                SolitonBackground::GaussianFlat { .. } => x.iter().map(|v| v * v).sum::<f64>() / (4.0 * tau),
                SolitonBackground::Einstein { .. } => background.n() as f64 / 2.0,
            };
            let mut body = json!({
                "bg": bg,
                "x": x,
                "tau": tau,
                "k": k,
                "ell": r.ell,
                "closed_form": closed_form,
                "iterations": r.iterations,
                "grad_norm": r.grad_norm,
            });
            if with_path {
                body["path"] = json!(r.path);
            }
            Report::ok(body)
        }
        Verb::Consistency { spec } => {
            let s = parse_target(&spec)?;
            let r = theta_nu_consistency(&s, cfg.grid_m, &tol)?;
            let failed = r.agree == Some(false);
            Ok(Report {
                body: serde_json::to_value(r)?,
                failed,
                csv: None,
            })
        }
        Verb::VerifyIdentities { bg } => {
            let r = verify_soliton_identities(&parse_background(&bg)?)?;
            let failed = !r.passed;
            let mut body = serde_json::to_value(r)?;
            body["bg"] = json!(bg);
            Ok(Report {
                body,
                failed,
                csv: None,
            })
        }
    }
}

/// Six significant digits.
fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return x.to_string();
    }
    let e = x.abs().log10().floor() as i32;
    if (-4..6).contains(&e) {
        format!("{:.*}", (5 - e).max(0) as usize, x)
    } else {
        format!("{x:.5e}")
    }
}

fn text_value(v: &Value) -> String {
    match v {
        Value::Number(n) if n.is_f64() => sig6(n.as_f64().unwrap_or(f64::NAN)),
        Value::String(s) => s.clone(),
        Value::Null => "-".into(),
        Value::Array(items) => {
            let inner: Vec<String> = items.iter().map(text_value).collect();
            format!("[{}]", inner.join(", "))
        }
        other => other.to_string(),
    }
}

fn text_lines(prefix: &str, v: &Value, out: &mut Vec<String>) {
    match v {
        Value::Object(map) => {
            for (k, item) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                text_lines(&key, item, out);
            }
        }
        Value::Array(items) if items.iter().any(|i| i.is_object()) => {
            for (i, item) in items.iter().enumerate() {
                text_lines(&format!("{prefix}[{i}]"), item, out);
            }
        }
        _ => out.push(format!("{prefix}: {}", text_value(v))),
    }
}

fn csv_text(csv: &Csv) -> anyhow::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&csv.header)?;
    for row in &csv.rows {
        w.write_record(row)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn render(report: &Report, cfg: &RunConfig) -> anyhow::Result<String> {
    let mut body = match &report.body {
        Value::Object(m) => m.clone(),
        other => Map::from_iter([("result".to_string(), other.clone())]),
    };
    let config = serde_json::to_value(cfg)?;
    Ok(match cfg.output_format {
        OutputFormat::Json => {
            body.insert("config".into(), config);
            serde_json::to_string_pretty(&Value::Object(body))? + "\n"
        }
        OutputFormat::Text => {
            // Results first, the config snapshot after.
            let mut lines = Vec::new();
            text_lines("", &Value::Object(body), &mut lines);
            text_lines("config", &config, &mut lines);
            lines.join("\n") + "\n"
        }
        OutputFormat::Csv => match &report.csv {
            Some(csv) => csv_text(csv)?,
            None => {
                body.insert("config".into(), config);
                let mut lines = Vec::new();
                text_lines("", &Value::Object(body), &mut lines);
                let rows = lines
                    .iter()
                    .filter_map(|l| l.split_once(": "))
                    .map(|(k, v)| vec![k.to_string(), v.to_string()])
                    .collect();
                csv_text(&Csv { header: vec!["key", "value"], rows })?
            }
        },
    })
}

fn load_config() -> anyhow::Result<RunConfig> {
    match std::env::var_os(CONFIG_ENV) {
        Some(path) => {
            let text = std::fs::read_to_string(&path)
                .with_context(|| format!("reading {CONFIG_ENV}={}", path.to_string_lossy()))?;
            RunConfig::from_json(&text).with_context(|| format!("parsing {}", path.to_string_lossy()))
        }
        None => Ok(RunConfig::default()),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Parse(_) | Error::Unknown { .. }) => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = load_config().and_then(|mut cfg| {
        if let Some(f) = cli.format {
            cfg.output_format = f.into();
        }
        let report = run(cli.verb, &cfg)?;
        let text = render(&report, &cfg)?;
        Ok((text, report.failed))
    });
    match result {
        Ok((text, failed)) => {
            print!("{text}");
            ExitCode::from(if failed { 2 } else { 0 })
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
