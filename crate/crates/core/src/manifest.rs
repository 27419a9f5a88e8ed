//! Line-oriented manifest format describing a standard static space-time
//! and what to check on it.
//!
//! ```text
//! [fiber]
//! coords = x, y
//! domain = [-1, 1], [-1, 1]
//! g.x.x = 1
//! g.y.y = 1
//! complete = true
//!
//! [warp]
//! f = 1 + x^2 + y^2
//! interval = -inf, inf
//! ```
//!
//! Sections: `fiber`, `warp`, `params`, `fields`, `killing`, `numerics`,
//! `geodesic`. Unknown sections or keys, duplicate keys, and names that do
//! not resolve are errors carrying the line, section and key.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::expr::{names, Params, ScalarExpr};
use crate::geometry::{Chart, MetricField, VectorFieldExpr};
use crate::killing::SpacetimeFieldCandidate;
use crate::sampling::{self, Options, Stream};
use crate::warped::{FiberFlags, SpacetimeVector, StaticSpacetime};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Numerics {
    pub samples: usize,
    pub seed: u64,
    pub tol: f64,
    pub step: f64,
    pub t_samples: usize,
    pub causal_samples: usize,
}

impl Default for Numerics {
    fn default() -> Self {
        let o = Options::default();
        Self {
            samples: o.samples,
            seed: o.seed,
            tol: o.tol,
            step: 0.01,
            t_samples: o.t_samples,
            causal_samples: 10_000,
        }
    }
}

impl Numerics {
    pub fn options(&self) -> Options {
        Options {
            samples: self.samples,
            t_samples: self.t_samples,
            seed: self.seed,
            tol: self.tol,
            ..Options::default()
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct KillingSection {
    /// Names of fiber Killing fields from `[fields]`.
    pub basis: Vec<String>,
    pub h: Option<ScalarExpr>,
    pub psi: Option<ScalarExpr>,
    pub phi: Vec<ScalarExpr>,
    /// Fiber field for the `h ∂_t + V` test.
    pub v: Option<String>,
    /// Eigenvalue candidate paired with `psi`.
    pub nu: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicSpec {
    pub t0: f64,
    pub p0: Vec<f64>,
    pub v0: SpacetimeVector,
    pub span: f64,
}

#[derive(Debug, Clone)]
pub struct Manifest {
    pub spacetime: StaticSpacetime,
    pub params: Params,
    pub vectors: Vec<(String, VectorFieldExpr)>,
    pub scalars: Vec<(String, ScalarExpr)>,
    pub killing: Option<KillingSection>,
    pub numerics: Numerics,
    pub geodesic: Option<GeodesicSpec>,
    /// SHA-256 of the manifest bytes, hex encoded.
    pub digest: String,
}

impl Manifest {
    pub fn vector(&self, name: &str) -> Option<&VectorFieldExpr> {
        self.vectors.iter().find(|(n, _)| n == name).map(|(_, v)| v)
    }

    /// The `[killing]` basis as named fields.
    pub fn basis(&self) -> Vec<(String, VectorFieldExpr)> {
        self.killing
            .iter()
            .flat_map(|k| &k.basis)
            .map(|n| (n.clone(), self.vector(n).expect("resolved at load").clone()))
            .collect()
    }

    /// The candidate `ψ h ∂_t + φ^b K_b`, when `h` is given.
    pub fn candidate(&self) -> Result<Option<SpacetimeFieldCandidate>> {
        let Some(k) = &self.killing else { return Ok(None) };
        let Some(h) = &k.h else { return Ok(None) };
        let coords = self.spacetime.fiber().chart().names();
        let psi = k.psi.clone().unwrap_or_else(|| ScalarExpr::constant(1.0, coords));
        let basis = self.basis().into_iter().map(|(_, v)| v).collect();
        SpacetimeFieldCandidate::new(h.clone(), psi, k.phi.clone(), basis).map(Some)
    }
}

struct Entry {
    line: usize,
    value: String,
    used: bool,
}

/// Raw `section -> key -> value` map with line numbers.
struct Sections {
    map: BTreeMap<String, BTreeMap<String, Entry>>,
    header_lines: BTreeMap<String, usize>,
}

const SECTIONS: [&str; 7] = ["fiber", "warp", "params", "fields", "killing", "numerics", "geodesic"];

fn err(line: usize, section: &str, key: &str, message: impl Into<String>) -> Error {
    Error::Manifest {
        line,
        section: section.into(),
        key: key.into(),
        message: message.into(),
    }
}

impl Sections {
    fn parse(text: &str) -> Result<Self> {
        let mut map: BTreeMap<String, BTreeMap<String, Entry>> = BTreeMap::new();
        let mut header_lines = BTreeMap::new();
        let mut current: Option<String> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let s = raw.trim();
            if s.is_empty() || s.starts_with('#') || s.starts_with(';') {
                continue;
            }
            if let Some(rest) = s.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| err(line, "", "", "unterminated section header"))?
                    .trim();
                if !SECTIONS.contains(&name) {
                    return Err(err(line, name, "", format!("unknown section (expected one of {})", SECTIONS.join(", "))));
                }
                if header_lines.insert(name.to_string(), line).is_some() {
                    return Err(err(line, name, "", "section appears twice"));
                }
                map.entry(name.to_string()).or_default();
                current = Some(name.to_string());
                continue;
            }
            let section = current
                .clone()
                .ok_or_else(|| err(line, "", "", "key outside of any section"))?;
            let (key, value) = s
                .split_once('=')
                .ok_or_else(|| err(line, &section, "", "expected `key = value`"))?;
            let key = key.trim().to_string();
            if key.is_empty() {
                return Err(err(line, &section, "", "empty key"));
            }
            let entries = map.get_mut(&section).expect("section registered");
            if entries.contains_key(&key) {
                return Err(err(line, &section, &key, "duplicate key"));
            }
            entries.insert(
                key,
                Entry {
                    line,
                    value: value.trim().to_string(),
                    used: false,
                },
            );
        }
        Ok(Self { map, header_lines })
    }

    fn has(&self, section: &str) -> bool {
        self.map.contains_key(section)
    }

    fn take(&mut self, section: &str, key: &str) -> Option<(usize, String)> {
        let e = self.map.get_mut(section)?.get_mut(key)?;
        e.used = true;
        Some((e.line, e.value.clone()))
    }

    fn require(&mut self, section: &str, key: &str) -> Result<(usize, String)> {
        let line = self.header_lines.get(section).copied().unwrap_or(0);
        self.take(section, key)
            .ok_or_else(|| err(line, section, key, "missing required key"))
    }

    /// Keys of a section with a given prefix, in file order.
    fn take_prefixed(&mut self, section: &str, prefix: &str) -> Vec<(String, usize, String)> {
        let Some(entries) = self.map.get_mut(section) else { return Vec::new() };
        let mut out: Vec<(String, usize, String)> = entries
            .iter_mut()
            .filter(|(k, _)| k.starts_with(prefix))
            .map(|(k, e)| {
                e.used = true;
                (k.clone(), e.line, e.value.clone())
            })
            .collect();
        out.sort_by_key(|x| x.1);
        out
    }

    fn take_all(&mut self, section: &str) -> Vec<(String, usize, String)> {
        self.take_prefixed(section, "")
    }

    fn reject_unused(&self) -> Result<()> {
        for (section, entries) in &self.map {
            if let Some((key, e)) = entries.iter().filter(|(_, e)| !e.used).min_by_key(|(_, e)| e.line) {
                return Err(err(e.line, section, key, "unknown key"));
            }
        }
        Ok(())
    }
}

/// Split on commas that are not nested in parentheses or brackets.
fn split_list(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    for c in s.chars() {
        match c {
            '(' | '[' => depth += 1,
            ')' | ']' => depth -= 1,
            _ => {}
        }
        if c == ',' && depth == 0 {
            out.push(cur.trim().to_string());
            cur.clear();
        } else {
            cur.push(c);
        }
    }
    if !cur.trim().is_empty() || !out.is_empty() {
        out.push(cur.trim().to_string());
    }
    out
}

struct Ctx<'a> {
    params: &'a Params,
    param_names: Vec<String>,
}

impl Ctx<'_> {
    fn expr(&self, src: &str, coords: &[String], line: usize, section: &str, key: &str) -> Result<ScalarExpr> {
        ScalarExpr::parse_with_params(src, coords, &self.param_names)
            .map(|e| e.bind(self.params))
            .map_err(|e| err(line, section, key, e.to_string()))
    }

    /// A real number, possibly written as a constant expression; `inf` and
    /// `-inf` are accepted when `extended`.
    fn number(&self, src: &str, line: usize, section: &str, key: &str, extended: bool) -> Result<f64> {
        match src.trim() {
            "inf" | "+inf" if extended => return Ok(f64::INFINITY),
            "-inf" if extended => return Ok(f64::NEG_INFINITY),
            _ => {}
        }
        let e = self.expr(src, &[], line, section, key)?;
        e.eval(&[], &Params::new())
            .map_err(|e| err(line, section, key, e.to_string()))
    }

    fn numbers(&self, src: &str, line: usize, section: &str, key: &str) -> Result<Vec<f64>> {
        split_list(src)
            .iter()
            .map(|s| self.number(s, line, section, key, false))
            .collect()
    }
}

fn boolean(src: &str, line: usize, section: &str, key: &str) -> Result<bool> {
    match src {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(err(line, section, key, format!("expected true or false, found `{src}`"))),
    }
}

fn integer(src: &str, line: usize, section: &str, key: &str) -> Result<u64> {
    src.parse::<u64>()
        .map_err(|_| err(line, section, key, format!("expected a nonnegative integer, found `{src}`")))
}

fn ident(s: &str) -> bool {
    s.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_') && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

pub fn load_manifest(path: &Path) -> Result<Manifest> {
    let bytes = std::fs::read(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let text = String::from_utf8(bytes.clone()).map_err(|_| err(0, "", "", "manifest is not valid UTF-8"))?;
    let mut m = parse_manifest(&text)?;
    m.digest = hex::encode(Sha256::digest(&bytes));
    Ok(m)
}

/// Parse and validate manifest text. The digest covers the text's bytes.
pub fn parse_manifest(text: &str) -> Result<Manifest> {
    let mut sec = Sections::parse(text)?;

    let mut params = Params::new();
    for (key, line, value) in sec.take_all("params") {
        if !ident(&key) {
            return Err(err(line, "params", &key, "parameter names must be identifiers"));
        }
        let ctx = Ctx {
            params: &params,
            param_names: params.keys().cloned().collect(),
        };
        let v = ctx.number(&value, line, "params", &key, false)?;
        params.insert(key, v);
    }
    let ctx = Ctx {
        params: &params,
        param_names: params.keys().cloned().collect(),
    };

    // [fiber]
    let (line, coords_src) = sec.require("fiber", "coords")?;
    let coords: Vec<String> = split_list(&coords_src);
    if coords.is_empty() || coords.iter().any(|c| !ident(c)) {
        return Err(err(line, "fiber", "coords", "expected a comma-separated list of identifiers"));
    }
    let (line, domain_src) = sec.require("fiber", "domain")?;
    let mut domain = Vec::new();
    for item in split_list(&domain_src) {
        let inner = item
            .strip_prefix('[')
            .and_then(|s| s.strip_suffix(']'))
            .ok_or_else(|| err(line, "fiber", "domain", format!("expected `[lo, hi]`, found `{item}`")))?;
        let v = ctx.numbers(inner, line, "fiber", "domain")?;
        if v.len() != 2 {
            return Err(err(line, "fiber", "domain", format!("interval `{item}` needs two endpoints")));
        }
        domain.push((v[0], v[1]));
    }
    if domain.len() != coords.len() {
        return Err(err(line, "fiber", "domain", format!("{} intervals for {} coordinates", domain.len(), coords.len())));
    }
    let margin = match sec.take("fiber", "margin") {
        Some((l, v)) => ctx.number(&v, l, "fiber", "margin", false)?,
        None => 0.0,
    };
    let chart = Chart::new(coords.clone(), domain, margin).map_err(|e| err(line, "fiber", "domain", e.to_string()))?;
    let n = coords.len();
    let mut comps: BTreeMap<(usize, usize), ScalarExpr> = BTreeMap::new();
    for (key, line, value) in sec.take_prefixed("fiber", "g.") {
        let parts: Vec<&str> = key[2..].split('.').collect();
        let idx = |name: &str| coords.iter().position(|c| c == name);
        let (i, j) = match parts.as_slice() {
            [a, b] => match (idx(a), idx(b)) {
                (Some(i), Some(j)) => (i.min(j), i.max(j)),
                _ => return Err(err(line, "fiber", &key, "metric key must name two coordinates, as g.x.y")),
            },
            _ => return Err(err(line, "fiber", &key, "metric key must name two coordinates, as g.x.y")),
        };
        if comps.contains_key(&(i, j)) {
            return Err(err(line, "fiber", &key, "metric component given twice"));
        }
        comps.insert((i, j), ctx.expr(&value, &coords, line, "fiber", &key)?);
    }
    let header = sec.header_lines.get("fiber").copied().unwrap_or(0);
    let mut upper = Vec::new();
    for i in 0..n {
        for j in i..n {
            match comps.remove(&(i, j)) {
                Some(e) => upper.push(e),
                None if i == j => {
                    return Err(err(header, "fiber", &format!("g.{}.{}", coords[i], coords[i]), "missing diagonal metric component"))
                }
                None => upper.push(ScalarExpr::constant(0.0, &coords)),
            }
        }
    }
    let fiber = MetricField::new(chart, upper, 0).map_err(|e| err(header, "fiber", "g", e.to_string()))?;
    let mut flags = FiberFlags::default();
    for (key, slot) in [("compact", &mut flags.compact), ("complete", &mut flags.complete), ("ricci_flat", &mut flags.ricci_flat)] {
        if let Some((l, v)) = sec.take("fiber", key) {
            *slot = boolean(&v, l, "fiber", key)?;
        }
    }
    let inf_f = sec
        .take("fiber", "inf_f")
        .map(|(l, v)| ctx.number(&v, l, "fiber", "inf_f", false).map(|x| (l, x)))
        .transpose()?;
    let sup_f = sec
        .take("fiber", "sup_f")
        .map(|(l, v)| ctx.number(&v, l, "fiber", "sup_f", true))
        .transpose()?;

    // [warp]
    let (fline, f_src) = sec.require("warp", "f")?;
    let warp = ctx.expr(&f_src, &coords, fline, "warp", "f")?;
    let (t1, t2, iline) = match sec.take("warp", "interval") {
        Some((l, v)) => {
            let parts = split_list(&v);
            if parts.len() != 2 {
                return Err(err(l, "warp", "interval", "expected `t1, t2`"));
            }
            (ctx.number(&parts[0], l, "warp", "interval", true)?, ctx.number(&parts[1], l, "warp", "interval", true)?, l)
        }
        None => (f64::NEG_INFINITY, f64::INFINITY, fline),
    };
    let mut spacetime = StaticSpacetime::new(fiber, warp, t1, t2)
        .map_err(|e| err(iline, "warp", "interval", e.to_string()))?
        .with_flags(flags)
        .with_sup_f(sup_f);
    if let Some((l, v)) = inf_f {
        spacetime = spacetime
            .with_inf_f(Some(v))
            .map_err(|e| err(l, "fiber", "inf_f", e.to_string()))?;
    }
    if let Some((l, v)) = sec.take("warp", "t_sample") {
        let r = ctx.numbers(&v, l, "warp", "t_sample")?;
        if r.len() != 2 {
            return Err(err(l, "warp", "t_sample", "expected `a, b`"));
        }
        spacetime = spacetime
            .with_t_sample(Some((r[0], r[1])))
            .map_err(|e| err(l, "warp", "t_sample", e.to_string()))?;
    }

    // [fields]
    let mut vectors = Vec::new();
    let mut scalars = Vec::new();
    for (key, line, value) in sec.take_all("fields") {
        if let Some(name) = key.strip_prefix("vector.") {
            let comps = split_list(&value);
            if comps.len() != n {
                return Err(err(line, "fields", &key, format!("{} components for a {n}-dimensional fiber", comps.len())));
            }
            let exprs = comps
                .iter()
                .map(|c| ctx.expr(c, &coords, line, "fields", &key))
                .collect::<Result<Vec<_>>>()?;
            let v = VectorFieldExpr::new(exprs).map_err(|e| err(line, "fields", &key, e.to_string()))?;
            vectors.push((name.to_string(), v));
        } else if let Some(name) = key.strip_prefix("scalar.") {
            scalars.push((name.to_string(), ctx.expr(&value, &coords, line, "fields", &key)?));
        } else {
            return Err(err(line, "fields", &key, "field keys start with `vector.` or `scalar.`"));
        }
    }

    // [killing]
    let killing = if sec.has("killing") {
        let tc = names(&["t"]);
        let mut k = KillingSection::default();
        if let Some((l, v)) = sec.take("killing", "basis") {
            for name in split_list(&v) {
                if !vectors.iter().any(|(n, _)| *n == name) {
                    return Err(err(l, "killing", "basis", format!("no vector field named `{name}` in [fields]")));
                }
                k.basis.push(name);
            }
        }
        if let Some((l, v)) = sec.take("killing", "h") {
            k.h = Some(ctx.expr(&v, &tc, l, "killing", "h")?);
        }
        if let Some((l, v)) = sec.take("killing", "psi") {
            k.psi = Some(ctx.expr(&v, &coords, l, "killing", "psi")?);
        }
        if let Some((l, v)) = sec.take("killing", "phi") {
            k.phi = split_list(&v)
                .iter()
                .map(|c| ctx.expr(c, &tc, l, "killing", "phi"))
                .collect::<Result<Vec<_>>>()?;
            if k.phi.len() != k.basis.len() {
                return Err(err(l, "killing", "phi", format!("{} coefficients for {} basis fields", k.phi.len(), k.basis.len())));
            }
        } else if k.h.is_some() && !k.basis.is_empty() {
            let l = sec.header_lines["killing"];
            return Err(err(l, "killing", "phi", "a coefficient per basis field is required with h"));
        }
        if let Some((l, v)) = sec.take("killing", "v") {
            if !vectors.iter().any(|(n, _)| *n == v) {
                return Err(err(l, "killing", "v", format!("no vector field named `{v}` in [fields]")));
            }
            k.v = Some(v);
        }
        if let Some((l, v)) = sec.take("killing", "nu") {
            k.nu = Some(ctx.number(&v, l, "killing", "nu", false)?);
        }
        Some(k)
    } else {
        None
    };

    // [numerics]
    let mut numerics = Numerics::default();
    for (key, slot) in [
        ("samples", &mut numerics.samples),
        ("t_samples", &mut numerics.t_samples),
        ("causal_samples", &mut numerics.causal_samples),
    ] {
        if let Some((l, v)) = sec.take("numerics", key) {
            *slot = integer(&v, l, "numerics", key)? as usize;
            if *slot == 0 {
                return Err(err(l, "numerics", key, "must be at least 1"));
            }
        }
    }
    if let Some((l, v)) = sec.take("numerics", "seed") {
        numerics.seed = integer(&v, l, "numerics", "seed")?;
    }
    for (key, slot) in [("tol", &mut numerics.tol), ("step", &mut numerics.step)] {
        if let Some((l, v)) = sec.take("numerics", key) {
            *slot = ctx.number(&v, l, "numerics", key, false)?;
            if !(*slot > 0.0) {
                return Err(err(l, "numerics", key, "must be positive"));
            }
        }
    }

    // [geodesic]
    let geodesic = if sec.has("geodesic") {
        let t0 = match sec.take("geodesic", "t0") {
            Some((l, v)) => ctx.number(&v, l, "geodesic", "t0", false)?,
            None => 0.0,
        };
        let (l, v) = sec.require("geodesic", "p0")?;
        let p0 = ctx.numbers(&v, l, "geodesic", "p0")?;
        if p0.len() != n {
            return Err(err(l, "geodesic", "p0", format!("expected {n} fiber coordinates")));
        }
        let (l, v) = sec.require("geodesic", "v0")?;
        let v0 = ctx.numbers(&v, l, "geodesic", "v0")?;
        if v0.len() != n + 1 {
            return Err(err(l, "geodesic", "v0", format!("expected {} components (dt first)", n + 1)));
        }
        let (l, v) = sec.require("geodesic", "span")?;
        let span = ctx.number(&v, l, "geodesic", "span", false)?;
        Some(GeodesicSpec {
            t0,
            p0,
            v0: SpacetimeVector::from_coords(&v0),
            span,
        })
    } else {
        None
    };

    sec.reject_unused()?;
    validate(&spacetime, &numerics, fline)?;
    Ok(Manifest {
        spacetime,
        params,
        vectors,
        scalars,
        killing,
        numerics,
        geodesic,
        digest: hex::encode(Sha256::digest(text.as_bytes())),
    })
}

/// Load-time invariants: `f > 0` and a Riemannian fiber metric on a grid
/// through the sampling box and on the random samples.
fn validate(s: &StaticSpacetime, numerics: &Numerics, fline: usize) -> Result<()> {
    let chart = s.fiber().chart();
    let bounds = chart.sample_box();
    let per_axis = if chart.dim() <= 3 { 5 } else { 3 };
    let axes: Vec<Vec<f64>> = bounds.iter().map(|&(a, b)| sampling::grid(a, b, per_axis)).collect();
    let mut points: Vec<Vec<f64>> = vec![Vec::new()];
    for axis in &axes {
        points = points
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |&x| {
                    let mut q = p.clone();
                    q.push(x);
                    q
                })
            })
            .collect();
    }
    points.extend(sampling::uniform_points(&bounds, numerics.samples, numerics.seed, Stream::FiberPoints));
    for p in &points {
        match s.validate_at(p) {
            Ok(()) => {}
            Err(e @ Error::NonpositiveWarp { .. }) => return Err(err(fline, "warp", "f", e.to_string())),
            Err(e) => return Err(err(fline, "fiber", "g", e.to_string())),
        }
    }
    Ok(())
}
