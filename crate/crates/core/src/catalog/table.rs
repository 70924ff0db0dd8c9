use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{density, ShrinkerSpec};
use crate::error::Result;

/// A named shrinker of the built-in (or user) catalog.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub name: String,
    pub type_label: String,
    pub exact: String,
    pub spec: ShrinkerSpec,
    pub theta: f64,
    pub citation: Option<String>,
}

/// One line of the density table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub name: String,
    #[serde(rename = "type")]
    pub type_label: String,
    pub exact: String,
    pub theta: f64,
}

impl From<&CatalogEntry> for TableRow {
    fn from(e: &CatalogEntry) -> Self {
        TableRow {
            name: e.name.clone(),
            type_label: e.type_label.clone(),
            exact: e.exact.clone(),
            theta: e.theta,
        }
    }
}

const L21_CITATION: &str = "U(2)-invariant blowdown shrinker on the line bundle L(2,-1)";
const KOISO_CITATION: &str = "Koiso: U(2)-invariant Kähler shrinker on CP2#(-CP2)";
const PAGE_CITATION: &str = "Page: U(2)-invariant Einstein metric on CP2#(-CP2)";

/// Cited constants for shrinkers whose metrics are not constructed here.
pub(crate) fn named_constant(name: &str) -> Option<ShrinkerSpec> {
    let e2 = std::f64::consts::E.powi(2);
    match name {
        "l2-1" | "l(2,-1)" => Some(ShrinkerSpec::named(
            "L(2,-1)",
            (2f64.sqrt() - 2.0).exp() * (1.0 + 2f64.sqrt()) / 2.0,
            L21_CITATION,
        )),
        "koiso" => Some(ShrinkerSpec::named("Koiso", 3.826 / e2, KOISO_CITATION)),
        "page" => Some(ShrinkerSpec::named("Page", 3.821 / e2, PAGE_CITATION)),
        _ => None,
    }
}

fn entry(name: &str, type_label: &str, exact: &str, spec: ShrinkerSpec) -> CatalogEntry {
    let theta = density(&spec)
        .expect("built-in catalog entries are well formed")
        .theta;
    let citation = match &spec {
        ShrinkerSpec::NamedConstant { citation, .. } => Some(citation.clone()),
        _ => None,
    };
    CatalogEntry {
        name: name.into(),
        type_label: type_label.into(),
        exact: exact.into(),
        spec,
        theta,
        citation,
    }
}

fn sort_desc(entries: &mut [CatalogEntry]) {
    // stable: equal densities keep table order
    entries.sort_by(|a, b| b.theta.total_cmp(&a.theta));
}

/// The 21 four-dimensional shrinkers of the built-in table, by descending Θ.
pub fn builtin_entries() -> Vec<CatalogEntry> {
    use ShrinkerSpec as S;
    let dp = |k| S::del_pezzo(k).expect("valid del Pezzo index");
    let rp = |n| S::quotient(S::sphere(n), 2);
    let pe = "positive Einstein";
    let mut v = vec![
        entry("R^4", "flat", "1", S::flat(4)),
        entry("S^4", pe, "6/e^2", S::sphere(4)),
        entry("S^3xR", "product", "2(pi/e^3)^(1/2)", S::product(S::sphere(3), S::flat(1))),
        entry("S^2xR^2", "product", "2/e", S::product(S::sphere(2), S::flat(2))),
        entry(
            "L(2,-1)",
            "blowdown shrinker",
            "e^(sqrt2-2)(1+sqrt2)/2",
            named_constant("l2-1").unwrap(),
        ),
        entry("CP^2", pe, "9/(2e^2)", S::complex_projective(2)),
        entry("S^2xS^2", "product", "4/e^2", S::product(S::sphere(2), S::sphere(2))),
        entry("CP^2#(-CP^2)", "Koiso metric", "3.826/e^2", named_constant("koiso").unwrap()),
        entry("CP^2#(-CP^2)", "Page metric", "3.821/e^2", named_constant("page").unwrap()),
        entry("C(RP^3)", "Ricci flat cone", "1/2", S::cone(rp(3))),
        entry("C(RP^2)xR", "product", "1/2", S::product(S::cone(rp(2)), S::flat(1))),
        entry("RP^4", pe, "3/e^2", rp(4)),
        entry("CP^2#3(-CP^2)", pe, "3/e^2", dp(3)),
        entry("RP^3xR", "product", "(pi/e^3)^(1/2)", S::product(rp(3), S::flat(1))),
        entry("RP^2xR^2", "product", "1/e", S::product(rp(2), S::flat(2))),
        entry("CP^2#4(-CP^2)", pe, "5/(2e^2)", dp(4)),
        entry("C(S^3/Z_3)", "Ricci flat cone", "1/3", S::cone(S::quotient(S::sphere(3), 3))),
        entry("CP^2#5(-CP^2)", pe, "2/e^2", dp(5)),
        entry("CP^2#6(-CP^2)", pe, "3/(2e^2)", dp(6)),
        entry("CP^2#7(-CP^2)", pe, "1/e^2", dp(7)),
        entry("CP^2#8(-CP^2)", pe, "1/(2e^2)", dp(8)),
    ];
    sort_desc(&mut v);
    v
}

/// Rows of the built-in table, by descending Θ.
pub fn density_table() -> Vec<TableRow> {
    builtin_entries().iter().map(TableRow::from).collect()
}

#[derive(Deserialize)]
struct UserEntry {
    name: String,
    expr: ShrinkerSpec,
}

/// Reads a JSON array of `{"name": ..., "expr": <ShrinkerSpec>}` entries.
pub fn load_user_catalog(path: &Path) -> Result<Vec<CatalogEntry>> {
    let text = std::fs::read_to_string(path)?;
    parse_user_catalog(&text)
}

pub(crate) fn parse_user_catalog(text: &str) -> Result<Vec<CatalogEntry>> {
    let raw: Vec<UserEntry> = serde_json::from_str(text)?;
    raw.into_iter()
        .map(|u| {
            let d = density(&u.expr)?;
            Ok(CatalogEntry {
                name: u.name,
                type_label: "user".into(),
                exact: u.expr.to_string(),
                theta: d.theta,
                citation: None,
                spec: u.expr,
            })
        })
        .collect()
}

/// Built-ins merged with user entries, by descending Θ.
pub fn merged_entries(user: Vec<CatalogEntry>) -> Vec<CatalogEntry> {
    let mut all = builtin_entries();
    all.extend(user);
    sort_desc(&mut all);
    all
}
