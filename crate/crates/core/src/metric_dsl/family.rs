//! Metric and vector-field families loaded from JSON, and their prolongation
//! to jets at a point.

use super::expr::{parse_expression, Expr};
use crate::error::{Error, Result};
use crate::jet_algebra::{pidx, Jet, MetricJet, Scalar, TaylorJet, PAIRS, TRIPLES};
use serde_json::{Map, Value};
use std::collections::BTreeMap;
use std::path::Path;

const FUNCTION_NAMES: [&str; 6] = ["sin", "cos", "exp", "log", "sqrt", "pow"];

/// Coordinate names plus named parameters: everything an identifier may
/// refer to.
#[derive(Debug, Clone, PartialEq)]
pub struct Bindings {
    pub coord_names: [String; 4],
    pub parameters: BTreeMap<String, f64>,
}

impl Bindings {
    fn new(coord_names: [String; 4], parameters: BTreeMap<String, f64>) -> Result<Self> {
        for (i, c) in coord_names.iter().enumerate() {
            if coord_names[..i].contains(c) {
                return Err(Error::Input(format!("duplicate coordinate name `{c}`")));
            }
        }
        for name in coord_names.iter().chain(parameters.keys()) {
            let valid = name.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
                && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
            if !valid || FUNCTION_NAMES.contains(&name.as_str()) {
                return Err(Error::Input(format!("`{name}` cannot be used as a name")));
            }
        }
        if let Some(p) = parameters.keys().find(|p| coord_names.contains(p)) {
            return Err(Error::Input(format!("parameter `{p}` shadows a coordinate")));
        }
        Ok(Bindings { coord_names, parameters })
    }

    fn check(&self, e: &Expr, context: &str) -> Result<()> {
        for id in e.identifiers() {
            if !self.coord_names.iter().any(|c| c == id) && !self.parameters.contains_key(id) {
                return Err(Error::UnknownIdentifier { name: id.to_string(), context: context.to_string() });
            }
        }
        Ok(())
    }

    pub fn eval<T: Scalar>(&self, e: &Expr, x: &[T; 4]) -> Result<T> {
        e.eval(&|name: &str| {
            if let Some(i) = self.coord_names.iter().position(|c| c == name) {
                return Some(x[i]);
            }
            self.parameters.get(name).map(|&v| T::cst(v))
        })
    }
}

/// A metric given by closed-form component expressions.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricFamily {
    pub name: String,
    pub bindings: Bindings,
    /// One expression per ordered pair, in `PAIRS` order.
    pub components: Vec<Expr>,
    /// Electromagnetic field components F_{ab}, a < b; absent entries are zero.
    pub em_field: Vec<((usize, usize), Expr)>,
}

/// A spacetime vector field Z = f^μ ∂_μ given by component expressions.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorFamily {
    pub name: String,
    pub bindings: Bindings,
    pub components: Vec<Expr>,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn parse_json(src: &str) -> Result<Map<String, Value>> {
    let v: Value = serde_json::from_str(src).map_err(|e| Error::Input(format!("invalid JSON: {e}")))?;
    match v {
        Value::Object(m) => Ok(m),
        _ => Err(Error::Input("top level must be a JSON object".into())),
    }
}

fn coords_of(m: &Map<String, Value>) -> Result<Option<[String; 4]>> {
    let Some(v) = m.get("coordinates") else { return Ok(None) };
    let arr = v.as_array().filter(|a| a.len() == 4).ok_or_else(|| Error::Input("`coordinates` must list 4 names".into()))?;
    let names: Vec<String> = arr
        .iter()
        .map(|c| c.as_str().map(str::to_string).ok_or_else(|| Error::Input("coordinate names must be strings".into())))
        .collect::<Result<_>>()?;
    Ok(Some([names[0].clone(), names[1].clone(), names[2].clone(), names[3].clone()]))
}

fn params_of(m: &Map<String, Value>) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    if let Some(v) = m.get("parameters") {
        let obj = v.as_object().ok_or_else(|| Error::Input("`parameters` must be an object".into()))?;
        for (k, v) in obj {
            let x = v.as_f64().ok_or_else(|| Error::Input(format!("parameter `{k}` must be a number")))?;
            out.insert(k.clone(), x);
        }
    }
    Ok(out)
}

fn expr_field(v: &Value, key: &str) -> Result<Expr> {
    match v {
        Value::String(s) => parse_expression(s).map_err(|e| match e {
            Error::Syntax { offset, message, expected } => {
                Error::Syntax { offset, message: format!("{key}: {message}"), expected }
            }
            other => other,
        }),
        Value::Number(n) => Ok(Expr::Num(n.as_f64().unwrap_or(f64::NAN))),
        _ => Err(Error::Input(format!("`{key}` must be an expression string or number"))),
    }
}

fn check_keys(m: &Map<String, Value>, allowed: &[&str]) -> Result<()> {
    for k in m.keys() {
        if !allowed.contains(&k.as_str()) {
            return Err(Error::Input(format!("unexpected key `{k}`")));
        }
    }
    Ok(())
}

/// Parse a two-digit index suffix such as the `01` in `g01`.
fn index_pair(key: &str, prefix: char) -> Option<(usize, usize)> {
    let mut it = key.chars();
    if it.next()? != prefix {
        return None;
    }
    let a = it.next()?.to_digit(10)? as usize;
    let b = it.next()?.to_digit(10)? as usize;
    (it.next().is_none() && a < 4 && b < 4).then_some((a, b))
}

impl MetricFamily {
    pub fn from_json(src: &str) -> Result<Self> {
        let m = parse_json(src)?;
        check_keys(&m, &["name", "coordinates", "components", "parameters", "em_field"])?;
        let name = m.get("name").and_then(Value::as_str).unwrap_or("unnamed").to_string();
        let coords = coords_of(&m)?.ok_or_else(|| Error::Input("missing `coordinates`".into()))?;
        let bindings = Bindings::new(coords, params_of(&m)?)?;
        let comps = m
            .get("components")
            .and_then(Value::as_object)
            .ok_or_else(|| Error::Input("missing `components` object".into()))?;
        let mut slots: Vec<Option<Expr>> = vec![None; 10];
        for (key, v) in comps {
            let (a, b) = index_pair(key, 'g').ok_or_else(|| Error::Input(format!("unknown component key `{key}`")))?;
            if a > b {
                return Err(Error::Input(format!("unordered component key `{key}`; use g{b}{a}")));
            }
            let e = expr_field(v, key)?;
            bindings.check(&e, key)?;
            slots[pidx(a, b)] = Some(e);
        }
        let mut components = Vec::with_capacity(10);
        for (k, s) in slots.into_iter().enumerate() {
            let (a, b) = PAIRS[k];
            components.push(s.ok_or_else(|| Error::Input(format!("missing component g{a}{b}")))?);
        }
        let mut em_field = Vec::new();
        if let Some(v) = m.get("em_field") {
            let obj = v.as_object().ok_or_else(|| Error::Input("`em_field` must be an object".into()))?;
            for (key, v) in obj {
                let (a, b) = index_pair(key, 'F').ok_or_else(|| Error::Input(format!("unknown field key `{key}`")))?;
                if a == b {
                    return Err(Error::Input(format!("`{key}`: diagonal field components vanish identically")));
                }
                let mut e = expr_field(v, key)?;
                bindings.check(&e, key)?;
                let pair = if a < b {
                    (a, b)
                } else {
                    e = Expr::Neg(Box::new(e));
                    (b, a)
                };
                if em_field.iter().any(|(p, _)| *p == pair) {
                    return Err(Error::Input(format!("`{key}` given twice (with its antisymmetric partner)")));
                }
                em_field.push((pair, e));
            }
            em_field.sort_by_key(|(p, _)| *p);
        }
        Ok(MetricFamily { name, bindings, components, em_field })
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_json(&read(path)?)
    }

    pub fn with_parameter(mut self, name: &str, value: f64) -> Self {
        self.bindings.parameters.insert(name.to_string(), value);
        self
    }

    /// Taylor expansions of the ten packed components about `point`.
    pub fn component_jets<const N: usize>(&self, point: [f64; 4], order: usize) -> Result<Vec<TaylorJet<N>>> {
        let x = coordinate_jets::<N>(point, order)?;
        self.components.iter().map(|e| fix_order(self.bindings.eval(e, &x)?, order)).collect()
    }

    /// F_{μν} expanded about `point`, full antisymmetric 4×4.
    pub fn em_jets<const N: usize>(&self, point: [f64; 4], order: usize) -> Result<[[TaylorJet<N>; 4]; 4]> {
        let x = coordinate_jets::<N>(point, order)?;
        let zero = TaylorJet::<N>::constant(0.0, order as i64)?;
        let mut f = [[zero; 4]; 4];
        for ((a, b), e) in &self.em_field {
            let v = fix_order(self.bindings.eval(e, &x)?, order)?;
            f[*a][*b] = v;
            f[*b][*a] = -v;
        }
        Ok(f)
    }

    pub fn has_em_field(&self) -> bool {
        !self.em_field.is_empty()
    }

    /// F_{μν} at a point.
    pub fn em_at(&self, point: [f64; 4]) -> Result<[[f64; 4]; 4]> {
        let f = self.em_jets::<1>(point, 0)?;
        Ok(f.map(|r| r.map(|v| v.value())))
    }
}

fn coordinate_jets<const N: usize>(point: [f64; 4], order: usize) -> Result<[TaylorJet<N>; 4]> {
    let o = order as i64;
    Ok([
        TaylorJet::variable(0, point[0], o)?,
        TaylorJet::variable(1, point[1], o)?,
        TaylorJet::variable(2, point[2], o)?,
        TaylorJet::variable(3, point[3], o)?,
    ])
}

// Components that are pure literals come back as exact constants; give them
// the working order so downstream coefficient reads are uniform.
fn fix_order<const N: usize>(v: TaylorJet<N>, order: usize) -> Result<TaylorJet<N>> {
    if v.is_exact_constant() {
        TaylorJet::constant(v.value(), order as i64)
    } else {
        Ok(v)
    }
}

// A component with a pole at the point (e.g. a horizon in Schwarzschild
// coordinates) means the metric is not defined there as an invertible matrix.
fn singular_if_pole(e: Error) -> Error {
    match e {
        Error::Domain(m) if m == "division by zero" => Error::SingularMetric { det: f64::NAN },
        other => other,
    }
}

fn unit(i: usize) -> [u8; 4] {
    let mut m = [0u8; 4];
    m[i] = 1;
    m
}

fn fill_jet<const N: usize>(comps: &[TaylorJet<N>], point: [f64; 4], order: usize) -> MetricJet {
    let mut jet = MetricJet::constant([0.0; 10]);
    jet.x = point;
    jet.order = order.min(3);
    for (k, c) in comps.iter().enumerate() {
        jet.g[k] = c.value();
        for m in 0..4 {
            jet.dg[k][m] = c.derivative(unit(m));
        }
        for (p, &(a, b)) in PAIRS.iter().enumerate() {
            let mut mi = unit(a);
            mi[b] += 1;
            jet.d2g[k][p] = c.derivative(mi);
        }
        for (t, &(a, b, d)) in TRIPLES.iter().enumerate() {
            let mut mi = unit(a);
            mi[b] += 1;
            mi[d] += 1;
            jet.d3g[k][t] = c.derivative(mi);
        }
    }
    jet
}

/// The jet of the family at `point`, computed through Taylor arithmetic.
/// Orders 0..=4 are accepted; data above third order is not stored.
pub fn prolong_family(fam: &MetricFamily, point: [f64; 4], order: usize) -> Result<MetricJet> {
    let jet = match order {
        0..=3 => fam.component_jets::<35>(point, order).map(|c| fill_jet(&c, point, order)),
        4 => fam.component_jets::<70>(point, order).map(|c| fill_jet(&c, point, order)),
        _ => return Err(Error::UnsupportedOrder(order as i64)),
    }
    .map_err(singular_if_pole)?;
    jet.validate()?;
    Ok(jet)
}

/// The metric as a generic jet whose entries are Taylor expansions in the
/// base coordinates: entry g has order `order`, dg one less, d2g two less.
pub fn taylor_metric_jet<const N: usize>(fam: &MetricFamily, point: [f64; 4], order: usize) -> Result<Jet<TaylorJet<N>>> {
    if order < 2 {
        return Err(Error::UnsupportedOrder(order as i64));
    }
    let comps = fam.component_jets::<N>(point, order)?;
    crate::jet_algebra::validate_metric(&std::array::from_fn(|k| comps[k].value()))?;
    let x = coordinate_jets::<N>(point, order)?;
    let zero = TaylorJet::<N>::constant(0.0, order as i64)?;
    let mut jet = Jet { x, g: [zero; 10], dg: [[zero; 4]; 10], d2g: [[zero; 10]; 10] };
    for k in 0..10 {
        jet.g[k] = comps[k];
        for m in 0..4 {
            jet.dg[k][m] = comps[k].partial(m);
        }
        for (p, &(a, b)) in PAIRS.iter().enumerate() {
            jet.d2g[k][p] = jet.dg[k][a].partial(b);
        }
    }
    Ok(jet)
}

impl VectorFamily {
    /// Vector-field files may omit `coordinates`; `default_coords` (usually
    /// the metric's) is used then.
    pub fn from_json(src: &str, default_coords: Option<&[String; 4]>) -> Result<Self> {
        let m = parse_json(src)?;
        check_keys(&m, &["name", "coordinates", "components", "parameters"])?;
        let name = m.get("name").and_then(Value::as_str).unwrap_or("vector field").to_string();
        let coords = match coords_of(&m)? {
            Some(c) => c,
            None => default_coords
                .cloned()
                .ok_or_else(|| Error::Input("missing `coordinates`".into()))?,
        };
        let bindings = Bindings::new(coords, params_of(&m)?)?;
        let comps = m
            .get("components")
            .and_then(Value::as_object)
            .ok_or_else(|| Error::Input("missing `components` object".into()))?;
        let mut slots: Vec<Option<Expr>> = vec![None; 4];
        for (key, v) in comps {
            let i = key
                .strip_prefix('f')
                .and_then(|d| d.parse::<usize>().ok())
                .filter(|&i| i < 4 && key.len() == 2)
                .ok_or_else(|| Error::Input(format!("unknown component key `{key}`")))?;
            let e = expr_field(v, key)?;
            bindings.check(&e, key)?;
            slots[i] = Some(e);
        }
        let components = slots
            .into_iter()
            .enumerate()
            .map(|(i, s)| s.ok_or_else(|| Error::Input(format!("missing component f{i}"))))
            .collect::<Result<_>>()?;
        Ok(VectorFamily { name, bindings, components })
    }

    pub fn from_path(path: &Path, default_coords: Option<&[String; 4]>) -> Result<Self> {
        Self::from_json(&read(path)?, default_coords)
    }

    /// Build from component strings over the given coordinate names.
    pub fn from_strs(coords: [&str; 4], comps: [&str; 4]) -> Result<Self> {
        let bindings = Bindings::new(coords.map(str::to_string), BTreeMap::new())?;
        let components = comps
            .iter()
            .map(|s| {
                let e = parse_expression(s)?;
                bindings.check(&e, "vector component")?;
                Ok(e)
            })
            .collect::<Result<_>>()?;
        Ok(VectorFamily { name: "vector field".into(), bindings, components })
    }

    pub fn eval<T: Scalar>(&self, x: &[T; 4]) -> Result<[T; 4]> {
        let mut out = [T::zero(); 4];
        for (i, e) in self.components.iter().enumerate() {
            out[i] = self.bindings.eval(e, x)?;
        }
        Ok(out)
    }

    /// Multiply every component by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        let mut v = self.clone();
        for e in &mut v.components {
            *e = Expr::Bin(super::expr::BinOp::Mul, Box::new(Expr::Num(s)), Box::new(e.clone()));
        }
        v
    }
}
