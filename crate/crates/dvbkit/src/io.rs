//! Instance files: JSON documents `{"format": 1, "kind": ..., "payload": ...}`
//! with polynomials written as lists of `[exponents, numerator, denominator]`
//! terms. Integers may be JSON numbers or decimal strings (for values beyond
//! 64 bits). Every error names the offending field path.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::bundles::{BundleError, Chart, LieAlgebroidModel, VBundle};
use crate::examples::DorfmanConnection;
use crate::functors::{GeneratorCocycle, TwoManChart};
use crate::graded::DEFAULT_DEGREE_CAP;
use crate::metric::{InvolutiveDVB, MetricDVB, MetricError};
use crate::poisson::PoissonStructure2;
use crate::poly::{Poly, PolyMatrix, Ratio};
use crate::tworep::{TwoRep, TwoRepError};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("cannot read {path}: {message}")]
    Read { path: String, message: String },
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },
}

impl IoError {
    fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        IoError::Schema { path: path.into(), message: message.into() }
    }

    /// The field path of a schema error.
    pub fn path(&self) -> Option<&str> {
        match self {
            IoError::Schema { path, .. } => Some(path),
            _ => None,
        }
    }
}

/// Instance kinds, spelled as in the `kind` field.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    LieAlgebroid,
    Tworep,
    MetricDvb,
    InvolutiveDvb,
    TwoManAtlas,
    Dorfman,
    Poisson2,
}

pub const KINDS: [Kind; 7] =
    [Kind::LieAlgebroid, Kind::Tworep, Kind::MetricDvb, Kind::InvolutiveDvb, Kind::TwoManAtlas, Kind::Dorfman, Kind::Poisson2];

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::LieAlgebroid => "lie-algebroid",
            Kind::Tworep => "tworep",
            Kind::MetricDvb => "metric-dvb",
            Kind::InvolutiveDvb => "involutive-dvb",
            Kind::TwoManAtlas => "two-man-atlas",
            Kind::Dorfman => "dorfman",
            Kind::Poisson2 => "poisson2",
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A Dorfman connection, optionally with the algebroid it is meant for.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DorfmanInstance {
    pub delta: DorfmanConnection,
    pub algebroid: Option<LieAlgebroidModel>,
}

/// A parsed and validated instance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Instance {
    LieAlgebroid(LieAlgebroidModel),
    TwoRep(TwoRep),
    MetricDvb(MetricDVB),
    InvolutiveDvb(InvolutiveDVB),
    TwoManAtlas(TwoManChart),
    Dorfman(DorfmanInstance),
    Poisson2(PoissonStructure2),
}

impl Instance {
    pub fn kind(&self) -> Kind {
        match self {
            Instance::LieAlgebroid(_) => Kind::LieAlgebroid,
            Instance::TwoRep(_) => Kind::Tworep,
            Instance::MetricDvb(_) => Kind::MetricDvb,
            Instance::InvolutiveDvb(_) => Kind::InvolutiveDvb,
            Instance::TwoManAtlas(_) => Kind::TwoManAtlas,
            Instance::Dorfman(_) => Kind::Dorfman,
            Instance::Poisson2(_) => Kind::Poisson2,
        }
    }
}

// ---------------------------------------------------------------- wire types

/// An arbitrary precision integer: a JSON integer or a decimal string.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WireInt(pub BigInt);

impl Serialize for WireInt {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self.0.to_i64() {
            Some(v) => s.serialize_i64(v),
            None => s.serialize_str(&self.0.to_string()),
        }
    }
}

struct WireIntVisitor;

impl Visitor<'_> for WireIntVisitor {
    type Value = WireInt;

    fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("an exact integer (JSON integer or decimal string)")
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> Result<WireInt, E> {
        Ok(WireInt(v.into()))
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> Result<WireInt, E> {
        Ok(WireInt(v.into()))
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> Result<WireInt, E> {
        Err(E::custom(format!("coefficient {v} is not an exact integer; write rationals as numerator/denominator")))
    }

    fn visit_str<E: de::Error>(self, v: &str) -> Result<WireInt, E> {
        v.trim().parse::<BigInt>().map(WireInt).map_err(|_| E::custom(format!("`{v}` is not a decimal integer")))
    }
}

impl<'de> Deserialize<'de> for WireInt {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        d.deserialize_any(WireIntVisitor)
    }
}

/// `[exponents, numerator, denominator]`.
pub type WireTerm = (Vec<u32>, WireInt, WireInt);
pub type WirePoly = Vec<WireTerm>;
pub type WireMatrix = Vec<Vec<WirePoly>>;
/// `[numerator, denominator]`.
pub type WireRatio = (WireInt, WireInt);

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LieAlgebroidWire {
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub names: Option<Vec<String>>,
    pub rank: usize,
    /// `anchor[i][a]`: component `a` of `ρ(a_i)`.
    pub anchor: WireMatrix,
    /// `structure[i][j][k] = c^k_ij`.
    pub structure: Vec<Vec<Vec<WirePoly>>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoRepWire {
    pub algebroid: LieAlgebroidWire,
    pub e0: usize,
    pub e1: usize,
    pub partial: WireMatrix,
    pub nabla0: Vec<WireMatrix>,
    pub nabla1: Vec<WireMatrix>,
    pub curvature: Vec<Vec<WireMatrix>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duality: Option<WireMatrix>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecomposedWire {
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub names: Option<Vec<String>>,
    pub q_rank: usize,
    pub b_rank: usize,
    /// `Λ` slices for metric DVBs, `κ` slices for involutive ones.
    pub tensor: Vec<WireMatrix>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CocycleWire {
    /// `[α, β]`.
    pub pair: (usize, usize),
    pub omega: WireMatrix,
    pub psi: WireMatrix,
    pub rho: Vec<WireMatrix>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoManAtlasWire {
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub names: Option<Vec<String>>,
    pub m: usize,
    pub n: usize,
    /// Per chart, one `[low, high]` interval per coordinate.
    pub regions: Vec<Vec<(WireRatio, WireRatio)>>,
    pub overlaps: Vec<(usize, usize)>,
    pub cocycles: Vec<CocycleWire>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DorfmanWire {
    pub dim: usize,
    pub rank: usize,
    /// `d[I][k] = Δ_{q_I}(e_k, 0)`.
    pub d: Vec<Vec<Vec<WirePoly>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub algebroid: Option<LieAlgebroidWire>,
}

fn default_cap() -> u32 {
    DEFAULT_DEGREE_CAP
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Poisson2Wire {
    pub rep: TwoRepWire,
    #[serde(default = "default_cap")]
    pub cap: u32,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Envelope {
    format: u32,
    kind: Kind,
    payload: serde_json::Value,
}

// ------------------------------------------------------------------ decoding

fn ratio(num: &WireInt, den: &WireInt, path: &str) -> Result<Ratio, IoError> {
    if den.0.is_zero() {
        return Err(IoError::schema(path, "zero denominator"));
    }
    Ok(Ratio::new(num.0.clone(), den.0.clone()))
}

fn poly(w: &WirePoly, n: usize, path: &str) -> Result<Poly, IoError> {
    let mut terms = Vec::with_capacity(w.len());
    for (t, (e, num, den)) in w.iter().enumerate() {
        if e.len() != n {
            return Err(IoError::schema(format!("{path}[{t}][0]"), format!("exponent vector has length {}, expected {n}", e.len())));
        }
        terms.push((e.clone(), ratio(num, den, &format!("{path}[{t}][2]"))?));
    }
    Poly::from_terms(n, terms).map_err(|e| IoError::schema(path, e.to_string()))
}

fn matrix(w: &WireMatrix, rows: usize, cols: usize, n: usize, path: &str) -> Result<PolyMatrix, IoError> {
    if w.len() != rows {
        return Err(IoError::schema(path, format!("{} rows, expected {rows}", w.len())));
    }
    let mut entries = Vec::with_capacity(rows * cols);
    for (i, row) in w.iter().enumerate() {
        if row.len() != cols {
            return Err(IoError::schema(format!("{path}[{i}]"), format!("{} columns, expected {cols}", row.len())));
        }
        for (j, p) in row.iter().enumerate() {
            entries.push(poly(p, n, &format!("{path}[{i}][{j}]"))?);
        }
    }
    PolyMatrix::from_entries(rows, cols, n, entries).map_err(|e| IoError::schema(path, e.to_string()))
}

fn matrices(w: &[WireMatrix], count: usize, rows: usize, cols: usize, n: usize, path: &str) -> Result<Vec<PolyMatrix>, IoError> {
    if w.len() != count {
        return Err(IoError::schema(path, format!("{} matrices, expected {count}", w.len())));
    }
    w.iter().enumerate().map(|(i, m)| matrix(m, rows, cols, n, &format!("{path}[{i}]"))).collect()
}

fn chart(dim: usize, names: &Option<Vec<String>>, path: &str) -> Result<Chart, IoError> {
    match names {
        None => Ok(Chart::new(dim)),
        Some(v) if v.len() == dim => Ok(Chart { dim, names: v.clone() }),
        Some(v) => Err(IoError::schema(format!("{path}.names"), format!("{} names for dimension {dim}", v.len()))),
    }
}

fn bundle_error(e: BundleError, path: &str) -> IoError {
    match e {
        BundleError::NotAntisymmetric { i, j } => IoError::schema(format!("{path}.structure[{i}][{j}]"), e.to_string()),
        other => IoError::schema(path, other.to_string()),
    }
}

fn algebroid(w: &LieAlgebroidWire, path: &str) -> Result<LieAlgebroidModel, IoError> {
    let (n, r) = (w.dim, w.rank);
    let ch = chart(n, &w.names, path)?;
    let anchor = matrix(&w.anchor, r, n, n, &format!("{path}.anchor"))?;
    let sp = format!("{path}.structure");
    if w.structure.len() != r {
        return Err(IoError::schema(&sp, format!("{} slices, expected {r}", w.structure.len())));
    }
    let mut structure = Vec::with_capacity(r);
    for (i, row) in w.structure.iter().enumerate() {
        if row.len() != r {
            return Err(IoError::schema(format!("{sp}[{i}]"), format!("{} entries, expected {r}", row.len())));
        }
        let mut out_row = Vec::with_capacity(r);
        for (j, v) in row.iter().enumerate() {
            if v.len() != r {
                return Err(IoError::schema(format!("{sp}[{i}][{j}]"), format!("{} components, expected {r}", v.len())));
            }
            out_row.push(v.iter().enumerate().map(|(k, p)| poly(p, n, &format!("{sp}[{i}][{j}][{k}]"))).collect::<Result<Vec<_>, _>>()?);
        }
        structure.push(out_row);
    }
    LieAlgebroidModel::new(VBundle::new(ch, r), anchor, structure).map_err(|e| bundle_error(e, path))
}

fn tworep(w: &TwoRepWire, path: &str) -> Result<TwoRep, IoError> {
    let alg = algebroid(&w.algebroid, &format!("{path}.algebroid"))?;
    let (n, r, e0, e1) = (alg.n_vars(), alg.rank(), w.e0, w.e1);
    let partial = matrix(&w.partial, e1, e0, n, &format!("{path}.partial"))?;
    let m0 = matrices(&w.nabla0, r, e0, e0, n, &format!("{path}.nabla0"))?;
    let m1 = matrices(&w.nabla1, r, e1, e1, n, &format!("{path}.nabla1"))?;
    let cp = format!("{path}.curvature");
    if w.curvature.len() != r {
        return Err(IoError::schema(&cp, format!("{} rows, expected {r}", w.curvature.len())));
    }
    let curv = w
        .curvature
        .iter()
        .enumerate()
        .map(|(i, row)| matrices(row, r, e0, e1, n, &format!("{cp}[{i}]")))
        .collect::<Result<Vec<_>, _>>()?;
    let duality = w.duality.as_ref().map(|j| matrix(j, e1, e0, n, &format!("{path}.duality"))).transpose()?;
    TwoRep::new(alg, partial, m0, m1, curv, duality).map_err(|e| match e {
        TwoRepError::CurvatureSlots(i, j) => IoError::schema(format!("{cp}[{i}][{j}]"), e.to_string()),
        other => IoError::schema(path, other.to_string()),
    })
}

fn metric_error(e: MetricError, path: &str) -> IoError {
    match e {
        MetricError::NotSymmetric(j) => IoError::schema(format!("{path}.tensor[{j}]"), e.to_string()),
        other => IoError::schema(path, other.to_string()),
    }
}

fn decomposed_parts(w: &DecomposedWire, path: &str) -> Result<(Chart, Vec<PolyMatrix>), IoError> {
    let ch = chart(w.dim, &w.names, path)?;
    let t = matrices(&w.tensor, w.b_rank, w.q_rank, w.q_rank, w.dim, &format!("{path}.tensor"))?;
    Ok((ch, t))
}

fn two_man_atlas(w: &TwoManAtlasWire, path: &str) -> Result<TwoManChart, IoError> {
    let (vars, m, n) = (w.dim, w.m, w.n);
    let ch = chart(vars, &w.names, path)?;
    let mut regions = Vec::with_capacity(w.regions.len());
    for (a, reg) in w.regions.iter().enumerate() {
        let rp = format!("{path}.regions[{a}]");
        if reg.len() != vars {
            return Err(IoError::schema(&rp, format!("{} intervals for dimension {vars}", reg.len())));
        }
        let mut out = Vec::with_capacity(vars);
        for (c, ((ln, ld), (hn, hd))) in reg.iter().enumerate() {
            let lo = ratio(ln, ld, &format!("{rp}[{c}][0]"))?;
            let hi = ratio(hn, hd, &format!("{rp}[{c}][1]"))?;
            if lo >= hi {
                return Err(IoError::schema(format!("{rp}[{c}]"), "empty interval"));
            }
            out.push((lo, hi));
        }
        regions.push(out);
    }
    let k = regions.len();
    for (o, &(a, b)) in w.overlaps.iter().enumerate() {
        if a >= k || b >= k || a == b {
            return Err(IoError::schema(format!("{path}.overlaps[{o}]"), format!("bad chart pair ({a},{b}) for {k} charts")));
        }
    }
    let mut cocycles = BTreeMap::new();
    for (idx, c) in w.cocycles.iter().enumerate() {
        let cp = format!("{path}.cocycles[{idx}]");
        let g = GeneratorCocycle {
            omega: matrix(&c.omega, m, m, vars, &format!("{cp}.omega"))?,
            psi: matrix(&c.psi, n, n, vars, &format!("{cp}.psi"))?,
            rho: matrices(&c.rho, n, m, m, vars, &format!("{cp}.rho"))?,
        };
        if cocycles.insert(c.pair, g).is_some() {
            return Err(IoError::schema(format!("{cp}.pair"), "duplicate chart pair"));
        }
    }
    let out = TwoManChart { chart: ch, regions, m, n, overlaps: w.overlaps.clone(), cocycles };
    out.validate().map_err(|e| IoError::schema(format!("{path}.cocycles"), e.to_string()))?;
    Ok(out)
}

fn dorfman(w: &DorfmanWire, path: &str) -> Result<DorfmanInstance, IoError> {
    let (n, r) = (w.dim, w.rank);
    let dp = format!("{path}.d");
    if w.d.len() != n + r {
        return Err(IoError::schema(&dp, format!("{} rows, expected {}", w.d.len(), n + r)));
    }
    let mut d = Vec::with_capacity(n + r);
    for (i, row) in w.d.iter().enumerate() {
        if row.len() != r {
            return Err(IoError::schema(format!("{dp}[{i}]"), format!("{} entries, expected {r}", row.len())));
        }
        let mut out_row = Vec::with_capacity(r);
        for (k, v) in row.iter().enumerate() {
            if v.len() != r + n {
                return Err(IoError::schema(format!("{dp}[{i}][{k}]"), format!("{} components, expected {}", v.len(), r + n)));
            }
            out_row.push(v.iter().enumerate().map(|(c, p)| poly(p, n, &format!("{dp}[{i}][{k}][{c}]"))).collect::<Result<Vec<_>, _>>()?);
        }
        d.push(out_row);
    }
    let delta = DorfmanConnection::new(n, r, d).map_err(|e| IoError::schema(&dp, e.to_string()))?;
    let alg = w.algebroid.as_ref().map(|a| algebroid(a, &format!("{path}.algebroid"))).transpose()?;
    if let Some(a) = &alg {
        if a.rank() != r || a.n_vars() != n {
            return Err(IoError::schema(format!("{path}.algebroid"), "algebroid rank or dimension differs from the connection"));
        }
    }
    Ok(DorfmanInstance { delta, algebroid: alg })
}

fn decode<T: for<'de> Deserialize<'de>>(payload: serde_json::Value) -> Result<T, IoError> {
    serde_path_to_error::deserialize(payload).map_err(|e| {
        let p = e.path().to_string();
        let path = if p == "." { "payload".to_string() } else { format!("payload.{p}") };
        IoError::schema(path, e.into_inner().to_string())
    })
}

/// Parses and validates an instance document.
pub fn parse_instance(text: &str) -> Result<Instance, IoError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let env: Envelope = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if inner.is_data() {
            IoError::schema(path, inner.to_string())
        } else {
            IoError::Syntax { line: inner.line(), column: inner.column(), message: inner.to_string() }
        }
    })?;
    de.end().map_err(|e| IoError::Syntax { line: e.line(), column: e.column(), message: e.to_string() })?;
    if env.format != FORMAT_VERSION {
        return Err(IoError::schema("format", format!("unsupported format {}, expected {FORMAT_VERSION}", env.format)));
    }
    let p = "payload";
    Ok(match env.kind {
        Kind::LieAlgebroid => Instance::LieAlgebroid(algebroid(&decode(env.payload)?, p)?),
        Kind::Tworep => Instance::TwoRep(tworep(&decode(env.payload)?, p)?),
        Kind::MetricDvb => {
            let w: DecomposedWire = decode(env.payload)?;
            let (ch, t) = decomposed_parts(&w, p)?;
            Instance::MetricDvb(MetricDVB::new(ch, w.q_rank, w.b_rank, t).map_err(|e| metric_error(e, p))?)
        }
        Kind::InvolutiveDvb => {
            let w: DecomposedWire = decode(env.payload)?;
            let (ch, t) = decomposed_parts(&w, p)?;
            Instance::InvolutiveDvb(InvolutiveDVB::new(ch, w.q_rank, w.b_rank, t).map_err(|e| metric_error(e, p))?)
        }
        Kind::TwoManAtlas => Instance::TwoManAtlas(two_man_atlas(&decode(env.payload)?, p)?),
        Kind::Dorfman => Instance::Dorfman(dorfman(&decode(env.payload)?, p)?),
        Kind::Poisson2 => {
            let w: Poisson2Wire = decode(env.payload)?;
            let rep = tworep(&w.rep, "payload.rep")?;
            let ps = PoissonStructure2::new(rep).map_err(|e| IoError::schema("payload.rep", e.to_string()))?;
            Instance::Poisson2(ps.with_cap(w.cap))
        }
    })
}

pub fn read_instance(path: &Path) -> Result<Instance, IoError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| IoError::Read { path: path.display().to_string(), message: e.to_string() })?;
    parse_instance(&text)
}

// ------------------------------------------------------------------ encoding

fn int_wire(v: &BigInt) -> WireInt {
    WireInt(v.clone())
}

fn poly_wire(p: &Poly) -> WirePoly {
    p.terms().map(|(e, c)| (e.clone(), int_wire(c.numer()), int_wire(c.denom()))).collect()
}

fn matrix_wire(m: &PolyMatrix) -> WireMatrix {
    (0..m.rows()).map(|i| (0..m.cols()).map(|j| poly_wire(m.get(i, j))).collect()).collect()
}

fn names_wire(c: &Chart) -> Option<Vec<String>> {
    (c.names != Chart::new(c.dim).names).then(|| c.names.clone())
}

fn algebroid_wire(a: &LieAlgebroidModel) -> LieAlgebroidWire {
    LieAlgebroidWire {
        dim: a.n_vars(),
        names: names_wire(a.chart()),
        rank: a.rank(),
        anchor: matrix_wire(&a.anchor),
        structure: a.structure.iter().map(|row| row.iter().map(|v| v.iter().map(poly_wire).collect()).collect()).collect(),
    }
}

fn tworep_wire(r: &TwoRep) -> TwoRepWire {
    TwoRepWire {
        algebroid: algebroid_wire(&r.algebroid),
        e0: r.e0(),
        e1: r.e1(),
        partial: matrix_wire(&r.partial),
        nabla0: r.nabla0.christoffel.iter().map(matrix_wire).collect(),
        nabla1: r.nabla1.christoffel.iter().map(matrix_wire).collect(),
        curvature: r.curvature.iter().map(|row| row.iter().map(matrix_wire).collect()).collect(),
        duality: r.duality.as_ref().map(matrix_wire),
    }
}

fn decomposed_wire(c: &Chart, q: usize, b: usize, t: &[PolyMatrix]) -> DecomposedWire {
    DecomposedWire { dim: c.dim, names: names_wire(c), q_rank: q, b_rank: b, tensor: t.iter().map(matrix_wire).collect() }
}

fn ratio_wire(r: &Ratio) -> WireRatio {
    (int_wire(r.numer()), int_wire(r.denom()))
}

fn atlas_wire(t: &TwoManChart) -> TwoManAtlasWire {
    TwoManAtlasWire {
        dim: t.chart.dim,
        names: names_wire(&t.chart),
        m: t.m,
        n: t.n,
        regions: t.regions.iter().map(|r| r.iter().map(|(lo, hi)| (ratio_wire(lo), ratio_wire(hi))).collect()).collect(),
        overlaps: t.overlaps.clone(),
        cocycles: t
            .cocycles
            .iter()
            .map(|(&pair, c)| CocycleWire {
                pair,
                omega: matrix_wire(&c.omega),
                psi: matrix_wire(&c.psi),
                rho: c.rho.iter().map(matrix_wire).collect(),
            })
            .collect(),
    }
}

fn dorfman_wire(d: &DorfmanInstance) -> DorfmanWire {
    DorfmanWire {
        dim: d.delta.n,
        rank: d.delta.r,
        d: d.delta.d.iter().map(|row| row.iter().map(|v| v.iter().map(poly_wire).collect()).collect()).collect(),
        algebroid: d.algebroid.as_ref().map(algebroid_wire),
    }
}

fn to_value<T: Serialize>(t: &T) -> serde_json::Value {
    serde_json::to_value(t).expect("wire types serialize")
}

/// The instance as a JSON value in the file format.
pub fn instance_value(inst: &Instance) -> serde_json::Value {
    let payload = match inst {
        Instance::LieAlgebroid(a) => to_value(&algebroid_wire(a)),
        Instance::TwoRep(r) => to_value(&tworep_wire(r)),
        Instance::MetricDvb(m) => to_value(&decomposed_wire(&m.host.chart, m.q_rank(), m.b_rank(), &m.lambda)),
        Instance::InvolutiveDvb(d) => to_value(&decomposed_wire(&d.host.chart, d.q_rank(), d.b_rank(), &d.kappa)),
        Instance::TwoManAtlas(t) => to_value(&atlas_wire(t)),
        Instance::Dorfman(d) => to_value(&dorfman_wire(d)),
        Instance::Poisson2(p) => to_value(&Poisson2Wire { rep: tworep_wire(p.rep()), cap: p.cap }),
    };
    to_value(&Envelope { format: FORMAT_VERSION, kind: inst.kind(), payload })
}

/// Pretty-printed instance document, newline terminated.
pub fn emit_instance(inst: &Instance) -> String {
    let mut s = serde_json::to_string_pretty(&instance_value(inst)).expect("JSON values serialize");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    const SO3: &str = r#"{
      "format": 1,
      "kind": "lie-algebroid",
      "payload": {
        "dim": 0, "rank": 3,
        "anchor": [[], [], []],
        "structure": [
          [[[], [], []], [[], [], [[[], 1, 1]]], [[], [[[], -1, 1]], []]],
          [[[], [], [[[], -1, 1]]], [[], [], []], [[[[], 1, 1]], [], []]],
          [[[], [[[], 1, 1]], []], [[[[], -1, 1]], [], []], [[], [], []]]
        ]
      }
    }"#;

    #[test]
    fn so3_over_a_point() {
        let inst = parse_instance(SO3).unwrap();
        let Instance::LieAlgebroid(a) = &inst else { panic!("wrong kind") };
        assert_eq!(a.structure[0][1][2], Poly::one(0));
        assert!(crate::bundles::check_lie_algebroid(a).passed());
        assert_eq!(parse_instance(&emit_instance(&inst)).unwrap(), inst);
    }

    #[test]
    fn float_coefficient_names_field() {
        let bad = SO3.replacen("[[], 1, 1]", "[[], 0.5, 1]", 1);
        let err = parse_instance(&bad).unwrap_err();
        assert_eq!(err.path(), Some("payload.structure[0][1][2][0][1]"), "{err}");
    }

    #[test]
    fn shape_errors_name_field() {
        let bad = SO3.replacen("\"anchor\": [[], [], []]", "\"anchor\": [[], []]", 1);
        assert_eq!(parse_instance(&bad).unwrap_err().path(), Some("payload.anchor"));
        let bad = SO3.replacen("\"kind\": \"lie-algebroid\"", "\"kind\": \"lie-group\"", 1);
        assert_eq!(parse_instance(&bad).unwrap_err().path(), Some("kind"));
        assert!(matches!(parse_instance("{\"format\": 1,").unwrap_err(), IoError::Syntax { .. }));
    }

    #[test]
    fn big_integers_survive() {
        let big = SO3.replacen("[[], 1, 1]", "[[], \"123456789012345678901234567890\", 7]", 1);
        let inst = parse_instance(&big);
        // breaks antisymmetry, so the structure check reports the slot
        assert_eq!(inst.unwrap_err().path(), Some("payload.structure[0][1]"));
    }
}
