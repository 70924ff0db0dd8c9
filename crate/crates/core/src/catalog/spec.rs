use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Construction expression for a shrinker.
///
/// Einstein volumes are taken at the normalization Rc = g/2τ with τ = 1/2(n−1),
/// i.e. the scale at which the round `Sⁿ` has radius one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShrinkerSpec {
    Einstein {
        dim: usize,
        normalized_volume: f64,
    },
    /// Ricci-flat cone over a positive Einstein link.
    Cone { link: Box<ShrinkerSpec> },
    Product {
        left: Box<ShrinkerSpec>,
        right: Box<ShrinkerSpec>,
    },
    /// Quotient by a freely acting isometry group of the given order.
    Quotient {
        base: Box<ShrinkerSpec>,
        group_order: u32,
    },
    Flat { dim: usize },
    /// A shrinker whose metric is not constructed here; Θ is a cited constant.
    NamedConstant {
        name: String,
        theta: f64,
        citation: String,
        #[serde(default = "default_named_dim")]
        dim: usize,
    },
}

fn default_named_dim() -> usize {
    4
}

impl ShrinkerSpec {
    pub fn einstein(dim: usize, normalized_volume: f64) -> Self {
        ShrinkerSpec::Einstein {
            dim,
            normalized_volume,
        }
    }

    pub fn flat(dim: usize) -> Self {
        ShrinkerSpec::Flat { dim }
    }

    pub fn cone(link: ShrinkerSpec) -> Self {
        ShrinkerSpec::Cone {
            link: Box::new(link),
        }
    }

    pub fn product(left: ShrinkerSpec, right: ShrinkerSpec) -> Self {
        ShrinkerSpec::Product {
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    pub fn quotient(base: ShrinkerSpec, group_order: u32) -> Self {
        ShrinkerSpec::Quotient {
            base: Box::new(base),
            group_order,
        }
    }

    pub fn named(name: &str, theta: f64, citation: &str) -> Self {
        ShrinkerSpec::NamedConstant {
            name: name.to_string(),
            theta,
            citation: citation.to_string(),
            dim: 4,
        }
    }

    /// Unit round `Sⁿ`.
    pub fn sphere(n: usize) -> Self {
        ShrinkerSpec::einstein(n, super::unit_sphere_volume(n).unwrap_or(f64::NAN))
    }

    /// Fubini–Study `ℂP^N`, rescaled to Rc = (2N−1)g.
    ///
    /// The metric of holomorphic sectional curvature 4 has Rc = 2(N+1)g and volume
    /// πᴺ/N!; scaling by c = 2(N+1)/(2N−1) reaches the normalization.
    pub fn complex_projective(big_n: usize) -> Self {
        let nf = big_n as f64;
        let c = 2.0 * (nf + 1.0) / (2.0 * nf - 1.0);
        let factorial: f64 = (1..=big_n).map(|k| k as f64).product();
        ShrinkerSpec::einstein(2 * big_n, (c * PI).powi(big_n as i32) / factorial)
    }

    /// Kähler–Einstein `ℂP²#k(−ℂP²)`; volume (2πc₁)²/2λ² with λ = 3 and c₁² = 9 − k.
    pub fn del_pezzo(k: u32) -> Result<Self> {
        check_del_pezzo(k)?;
        Ok(ShrinkerSpec::einstein(
            4,
            2.0 * PI * PI * (9.0 - k as f64) / 9.0,
        ))
    }

    /// Total dimension of the tree.
    pub fn dim(&self) -> usize {
        match self {
            ShrinkerSpec::Einstein { dim, .. } | ShrinkerSpec::Flat { dim } => *dim,
            ShrinkerSpec::NamedConstant { dim, .. } => *dim,
            ShrinkerSpec::Cone { link } => link.dim() + 1,
            ShrinkerSpec::Product { left, right } => left.dim() + right.dim(),
            ShrinkerSpec::Quotient { base, .. } => base.dim(),
        }
    }

    pub fn is_flat(&self) -> bool {
        match self {
            ShrinkerSpec::Flat { .. } => true,
            ShrinkerSpec::Product { left, right } => left.is_flat() && right.is_flat(),
            ShrinkerSpec::Quotient { base, group_order: 1 } => base.is_flat(),
            _ => false,
        }
    }

    /// Checks the structural invariants of every node.
    pub fn validate(&self) -> Result<()> {
        match self {
            ShrinkerSpec::Einstein {
                dim,
                normalized_volume,
            } => {
                if *dim < 2 {
                    return Err(Error::Construction(format!(
                        "Einstein node needs dim >= 2, got {dim}"
                    )));
                }
                if !(normalized_volume.is_finite() && *normalized_volume > 0.0) {
                    return Err(Error::Construction(format!(
                        "Einstein node needs a positive volume, got {normalized_volume}"
                    )));
                }
                Ok(())
            }
            ShrinkerSpec::Cone { link } => {
                link.validate()?;
                link.einstein_link_volume().map(|_| ())
            }
            ShrinkerSpec::Product { left, right } => {
                left.validate()?;
                right.validate()
            }
            ShrinkerSpec::Quotient { base, group_order } => {
                if *group_order < 1 {
                    return Err(Error::Construction("quotient group order must be >= 1".into()));
                }
                base.validate()
            }
            ShrinkerSpec::Flat { .. } => Ok(()),
            ShrinkerSpec::NamedConstant { name, theta, .. } => {
                if !(*theta > 0.0 && *theta <= 1.0) {
                    return Err(Error::Construction(format!(
                        "named shrinker `{name}` has theta {theta} outside (0, 1]"
                    )));
                }
                Ok(())
            }
        }
    }

    /// `(dim, normalized volume)` of a link usable by the cone rule: an Einstein node,
    /// possibly divided by a quotient.
    pub(crate) fn einstein_link_volume(&self) -> Result<(usize, f64)> {
        match self {
            ShrinkerSpec::Einstein {
                dim,
                normalized_volume,
            } => Ok((*dim, *normalized_volume)),
            ShrinkerSpec::Quotient { base, group_order } => {
                let (d, v) = base.einstein_link_volume()?;
                Ok((d, v / *group_order as f64))
            }
            other => Err(Error::Construction(format!(
                "cone link must be positive Einstein, got `{other}`"
            ))),
        }
    }
}

pub(crate) fn check_del_pezzo(k: u32) -> Result<()> {
    match k {
        0 | 3..=8 => Ok(()),
        1 | 2 => Err(Error::Domain(format!(
            "CP2#{k}(-CP2) is not Kähler–Einstein; use the named Koiso constant from the table"
        ))),
        _ => Err(Error::Domain(format!("del Pezzo index must be in 0..=8, got {k}"))),
    }
}

impl fmt::Display for ShrinkerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ShrinkerSpec::Einstein {
                dim,
                normalized_volume,
            } => write!(f, "einstein({dim}, {normalized_volume})"),
            ShrinkerSpec::Cone { link } => write!(f, "cone({link})"),
            ShrinkerSpec::Product { left, right } => write!(f, "product({left}, {right})"),
            ShrinkerSpec::Quotient { base, group_order } => {
                write!(f, "quotient({base}, {group_order})")
            }
            ShrinkerSpec::Flat { dim } => write!(f, "flat:{dim}"),
            ShrinkerSpec::NamedConstant { name, .. } => write!(f, "named:{name}"),
        }
    }
}

/// Parses the prefix grammar
///
/// ```text
/// expr := "product(" expr ("," expr)+ ")" | "quotient(" expr "," int ")" | "cone(" expr ")"
///       | "flat:" int | "einstein:" NAME | "einstein(" int "," real ")" | "named:" NAME
/// NAME := s<n> | rp<n> | cp<N> | dp<k>            (einstein)
///       | l2-1 | koiso | page                     (named)
/// ```
pub fn parse_spec(input: &str) -> Result<ShrinkerSpec> {
    let mut p = Parser {
        src: input.as_bytes(),
        pos: 0,
    };
    let spec = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.error("trailing input"));
    }
    spec.validate()?;
    Ok(spec)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, msg: &str) -> Error {
        Error::Parse(format!(
            "{msg} at byte {} in `{}`",
            self.pos,
            String::from_utf8_lossy(self.src)
        ))
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: u8) -> Result<()> {
        self.skip_ws();
        if self.src.get(self.pos) == Some(&c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&format!("expected `{}`", c as char)))
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn word(&mut self) -> String {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() {
            let c = self.src[self.pos];
            if c.is_ascii_alphanumeric() || c == b'-' || c == b'_' || c == b'.' || c == b'+' {
                self.pos += 1;
            } else {
                break;
            }
        }
        String::from_utf8_lossy(&self.src[start..self.pos]).to_lowercase()
    }

    fn number<T: std::str::FromStr>(&mut self) -> Result<T> {
        let w = self.word();
        w.parse().map_err(|_| self.error(&format!("bad number `{w}`")))
    }

    fn expr(&mut self) -> Result<ShrinkerSpec> {
        let head = self.word();
        match head.as_str() {
            "product" => {
                self.eat(b'(')?;
                let mut acc = self.expr()?;
                let mut count = 1;
                while self.peek() == Some(b',') {
                    self.eat(b',')?;
                    acc = ShrinkerSpec::product(acc, self.expr()?);
                    count += 1;
                }
                self.eat(b')')?;
                if count < 2 {
                    return Err(self.error("product needs at least two factors"));
                }
                Ok(acc)
            }
            "quotient" => {
                self.eat(b'(')?;
                let base = self.expr()?;
                self.eat(b',')?;
                let k: u32 = self.number()?;
                self.eat(b')')?;
                Ok(ShrinkerSpec::quotient(base, k))
            }
            "cone" => {
                self.eat(b'(')?;
                let link = self.expr()?;
                self.eat(b')')?;
                Ok(ShrinkerSpec::cone(link))
            }
            "flat" => {
                self.eat(b':')?;
                Ok(ShrinkerSpec::flat(self.number()?))
            }
            "einstein" => match self.peek() {
                Some(b':') => {
                    self.eat(b':')?;
                    let name = self.word();
                    einstein_preset(&name).ok_or_else(|| {
                        self.error(&format!("unknown Einstein preset `{name}` (s<n>, rp<n>, cp<N>, dp<k>)"))
                    })?
                }
                Some(b'(') => {
                    self.eat(b'(')?;
                    let dim: usize = self.number()?;
                    self.eat(b',')?;
                    let vol: f64 = self.number()?;
                    self.eat(b')')?;
                    Ok(ShrinkerSpec::einstein(dim, vol))
                }
                _ => Err(self.error("expected `:` or `(` after einstein")),
            },
            "named" => {
                self.eat(b':')?;
                let name = self.word();
                super::table::named_constant(&name)
                    .ok_or_else(|| self.error(&format!("unknown named shrinker `{name}` (l2-1, koiso, page)")))
            }
            "" => Err(self.error("expected an expression")),
            other => Err(self.error(&format!("unknown constructor `{other}`"))),
        }
    }
}

fn einstein_preset(name: &str) -> Option<Result<ShrinkerSpec>> {
    let num = |prefix: &str| -> Option<usize> { name.strip_prefix(prefix)?.parse().ok() };
    if let Some(n) = num("rp") {
        return Some(Ok(ShrinkerSpec::quotient(ShrinkerSpec::sphere(n), 2)));
    }
    if let Some(n) = num("cp") {
        return (n >= 1).then(|| Ok(ShrinkerSpec::complex_projective(n)));
    }
    if let Some(k) = num("dp") {
        return Some(ShrinkerSpec::del_pezzo(k as u32));
    }
    if let Some(n) = num("s") {
        return (n >= 2).then(|| Ok(ShrinkerSpec::sphere(n)));
    }
    None
}
