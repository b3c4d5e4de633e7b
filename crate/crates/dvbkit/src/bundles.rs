//! Vector bundles over a polynomial chart, connections, fiber metrics, Lie
//! algebroids and the bundle-map / module-map correspondence.
//!
//! Frames are the standard ones: a section of a rank `r` bundle is a vector of
//! `r` polynomials in the chart coordinates.
//!
//! A connection, ordinary or along a Lie algebroid, is stored as one `r x r`
//! matrix per direction with `(M_i)[k][j] = Γ^k_{ij}`, so that
//! `∇_i s = ρ_i(s) + M_i s` where `ρ_i` is the anchor of the i-th frame
//! direction (`∂_i` for ordinary connections).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::poly::{Poly, PolyError, PolyMatrix};
use crate::report::Report;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BundleError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("structure functions are not antisymmetric at ({i},{j})")]
    NotAntisymmetric { i: usize, j: usize },
    #[error("fiber metric is not symmetric")]
    NotSymmetric,
    #[error("fiber metric determinant is not a nonzero constant")]
    Degenerate,
    #[error(transparent)]
    Poly(#[from] PolyError),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chart {
    pub dim: usize,
    pub names: Vec<String>,
}

impl Chart {
    pub fn new(dim: usize) -> Self {
        Chart { dim, names: (0..dim).map(|i| format!("x{i}")).collect() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VBundle {
    pub chart: Chart,
    pub rank: usize,
}

impl VBundle {
    pub fn new(chart: Chart, rank: usize) -> Self {
        VBundle { chart, rank }
    }

    pub fn n_vars(&self) -> usize {
        self.chart.dim
    }

    pub fn dual(&self) -> Self {
        self.clone()
    }

    pub fn zero_section(&self) -> Vec<Poly> {
        vec![Poly::zero(self.chart.dim); self.rank]
    }

    pub fn frame_section(&self, k: usize) -> Vec<Poly> {
        let n = self.chart.dim;
        (0..self.rank).map(|i| if i == k { Poly::one(n) } else { Poly::zero(n) }).collect()
    }
}

/// Fiberwise pairing of two coefficient vectors.
pub fn pair(a: &[Poly], b: &[Poly]) -> Poly {
    assert_eq!(a.len(), b.len(), "pairing vectors of different lengths");
    let n = a.first().map_or(0, Poly::n_vars);
    a.iter().zip(b).fold(Poly::zero(n), |acc, (x, y)| acc + x * y)
}

pub fn add_vec(a: &[Poly], b: &[Poly]) -> Vec<Poly> {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn sub_vec(a: &[Poly], b: &[Poly]) -> Vec<Poly> {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn scale_vec(f: &Poly, a: &[Poly]) -> Vec<Poly> {
    a.iter().map(|x| f * x).collect()
}

/// Linear connection, either along `TM` (one matrix per coordinate) or along
/// a Lie algebroid (one matrix per algebroid frame section).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Connection {
    pub bundle: VBundle,
    pub christoffel: Vec<PolyMatrix>,
}

impl Connection {
    pub fn new(bundle: VBundle, christoffel: Vec<PolyMatrix>) -> Result<Self, BundleError> {
        for (i, m) in christoffel.iter().enumerate() {
            if m.rows() != bundle.rank || m.cols() != bundle.rank || m.n_vars() != bundle.chart.dim {
                return Err(BundleError::Shape(format!(
                    "connection matrix {i} is {}x{} in {} variables, bundle rank {} over dimension {}",
                    m.rows(),
                    m.cols(),
                    m.n_vars(),
                    bundle.rank,
                    bundle.chart.dim
                )));
            }
        }
        Ok(Connection { bundle, christoffel })
    }

    /// The trivial (flat) connection with `directions` direction matrices.
    pub fn trivial(bundle: VBundle, directions: usize) -> Self {
        let m = PolyMatrix::zeros(bundle.rank, bundle.rank, bundle.chart.dim);
        Connection { bundle, christoffel: vec![m; directions] }
    }

    pub fn directions(&self) -> usize {
        self.christoffel.len()
    }

    /// Γ^k_{ij}.
    pub fn gamma(&self, i: usize, j: usize, k: usize) -> &Poly {
        self.christoffel[i].get(k, j)
    }

    /// Dual connection on the dual bundle: `M_i ↦ -M_iᵀ`.
    pub fn dual(&self) -> Self {
        Connection { bundle: self.bundle.dual(), christoffel: self.christoffel.iter().map(|m| -m.transpose()).collect() }
    }

    pub fn add(&self, other: &Connection) -> Self {
        assert_eq!(self.directions(), other.directions());
        Connection {
            bundle: self.bundle.clone(),
            christoffel: self.christoffel.iter().zip(&other.christoffel).map(|(a, b)| a + b).collect(),
        }
    }

    /// Covariant derivative along `∂_i` for an ordinary connection.
    pub fn covariant(&self, i: usize, s: &[Poly]) -> Vec<Poly> {
        add_vec(&s.iter().map(|p| p.d(i)).collect::<Vec<_>>(), &self.christoffel[i].mul_vec(s))
    }
}

/// Curvature components `R[i][j]` (as matrices acting on frame coordinates) of
/// an ordinary connection.
pub fn connection_curvature(conn: &Connection) -> Vec<Vec<PolyMatrix>> {
    let tangent = LieAlgebroidModel::tangent(conn.bundle.chart.clone());
    curvature(conn, &tangent)
}

/// Curvature of an A-connection along the algebroid bracket:
/// `R_ij = ρ_i(M_j) − ρ_j(M_i) + M_i M_j − M_j M_i − Σ_k c^k_ij M_k`.
pub fn curvature(conn: &Connection, alg: &LieAlgebroidModel) -> Vec<Vec<PolyMatrix>> {
    let r = alg.rank();
    assert_eq!(conn.directions(), r, "connection directions must match algebroid rank");
    let m = &conn.christoffel;
    let mut out = vec![vec![PolyMatrix::zeros(conn.bundle.rank, conn.bundle.rank, alg.n_vars()); r]; r];
    for i in 0..r {
        for j in 0..r {
            if i == j {
                continue;
            }
            let mut rij = alg.anchor_matrix(i, &m[j]) - alg.anchor_matrix(j, &m[i]) + &m[i] * &m[j] - &m[j] * &m[i];
            for (k, mk) in m.iter().enumerate() {
                let c = &alg.structure[i][j][k];
                if !c.is_zero() {
                    rij = rij - mk.scale_poly(c);
                }
            }
            out[i][j] = rij;
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiberMetric {
    pub bundle: VBundle,
    pub g: PolyMatrix,
}

impl FiberMetric {
    pub fn new(bundle: VBundle, g: PolyMatrix) -> Result<Self, BundleError> {
        if g.rows() != bundle.rank || g.cols() != bundle.rank {
            return Err(BundleError::Shape(format!("metric is {}x{}, rank {}", g.rows(), g.cols(), bundle.rank)));
        }
        if !g.is_symmetric() {
            return Err(BundleError::NotSymmetric);
        }
        if !g.has_unit_det() {
            return Err(BundleError::Degenerate);
        }
        Ok(FiberMetric { bundle, g })
    }
}

/// Residuals of `∂_i g = M_iᵀ g + g M_i` for every coordinate direction.
pub fn metric_compatibility_report(conn: &Connection, g: &FiberMetric) -> Report {
    let mut rep = Report::new("metric-compatibility");
    for (i, m) in conn.christoffel.iter().enumerate() {
        let res = g.g.d(i) - m.transpose() * &g.g - &g.g * m;
        rep.matrix_residual(format!("d{i} g"), &res);
    }
    rep
}

pub fn metric_compatibility(conn: &Connection, g: &FiberMetric) -> bool {
    metric_compatibility_report(conn, g).passed()
}

/// The metric connection closest to `conn`: `M_i + ½ g⁻¹ Φ_i` with `Φ_i` the
/// compatibility residual `∂_i g − M_iᵀ g − g M_i`.
pub fn metric_connection(conn: &Connection, g: &FiberMetric) -> Result<Connection, BundleError> {
    let ginv = g.g.inverse()?;
    let half = crate::poly::rat(1, 2);
    let christoffel = conn
        .christoffel
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let phi = g.g.d(i) - m.transpose() * &g.g - &g.g * m;
            m + &(&ginv * &phi).scale(&half)
        })
        .collect();
    Connection::new(conn.bundle.clone(), christoffel)
}

/// Lie algebroid on a trivial bundle: anchor rows `ρ(a_i)` and structure
/// functions `structure[i][j][k] = c^k_ij`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LieAlgebroidModel {
    pub bundle: VBundle,
    pub anchor: PolyMatrix,
    pub structure: Vec<Vec<Vec<Poly>>>,
}

impl LieAlgebroidModel {
    pub fn new(bundle: VBundle, anchor: PolyMatrix, structure: Vec<Vec<Vec<Poly>>>) -> Result<Self, BundleError> {
        let (r, n) = (bundle.rank, bundle.chart.dim);
        if anchor.rows() != r || anchor.cols() != n || anchor.n_vars() != n {
            return Err(BundleError::Shape(format!("anchor is {}x{}, expected {r}x{n}", anchor.rows(), anchor.cols())));
        }
        if structure.len() != r || structure.iter().any(|row| row.len() != r || row.iter().any(|c| c.len() != r)) {
            return Err(BundleError::Shape("structure functions must be r x r x r".into()));
        }
        if structure.iter().flatten().flatten().any(|p| p.n_vars() != n) {
            return Err(BundleError::Shape("structure function in wrong variable count".into()));
        }
        for i in 0..r {
            for j in 0..r {
                for k in 0..r {
                    if structure[i][j][k] != -&structure[j][i][k] {
                        return Err(BundleError::NotAntisymmetric { i, j });
                    }
                }
            }
        }
        Ok(LieAlgebroidModel { bundle, anchor, structure })
    }

    /// `TM` with the coordinate frame.
    pub fn tangent(chart: Chart) -> Self {
        let n = chart.dim;
        LieAlgebroidModel {
            bundle: VBundle::new(chart, n),
            anchor: PolyMatrix::identity(n, n),
            structure: vec![vec![vec![Poly::zero(n); n]; n]; n],
        }
    }

    /// Zero anchor and zero bracket.
    pub fn abelian(chart: Chart, rank: usize) -> Self {
        let n = chart.dim;
        LieAlgebroidModel {
            bundle: VBundle::new(chart, rank),
            anchor: PolyMatrix::zeros(rank, n, n),
            structure: vec![vec![vec![Poly::zero(n); rank]; rank]; rank],
        }
    }

    pub fn rank(&self) -> usize {
        self.bundle.rank
    }

    pub fn n_vars(&self) -> usize {
        self.bundle.chart.dim
    }

    pub fn chart(&self) -> &Chart {
        &self.bundle.chart
    }

    /// `ρ(a_i)` as a vector field.
    pub fn anchor_field(&self, i: usize) -> Vec<Poly> {
        self.anchor.row(i)
    }

    /// `ρ(a_i)(f)`.
    pub fn anchor_apply(&self, i: usize, f: &Poly) -> Poly {
        let mut acc = Poly::zero(self.n_vars());
        for a in 0..self.n_vars() {
            let v = self.anchor.get(i, a);
            if !v.is_zero() {
                acc += &(v * f.d(a));
            }
        }
        acc
    }

    pub fn anchor_matrix(&self, i: usize, m: &PolyMatrix) -> PolyMatrix {
        m.map(|p| self.anchor_apply(i, p))
    }

    /// `ρ(a_i)` applied componentwise to a section.
    pub fn anchor_vec(&self, i: usize, s: &[Poly]) -> Vec<Poly> {
        s.iter().map(|p| self.anchor_apply(i, p)).collect()
    }

    /// `ρ(s)` for a general section.
    pub fn anchor_of(&self, s: &[Poly]) -> Vec<Poly> {
        let n = self.n_vars();
        let mut out = vec![Poly::zero(n); n];
        for (i, si) in s.iter().enumerate() {
            for (a, o) in out.iter_mut().enumerate() {
                *o += &(si * self.anchor.get(i, a));
            }
        }
        out
    }

    /// Bracket of two sections, extending the frame brackets by Leibniz.
    pub fn bracket(&self, s: &[Poly], t: &[Poly]) -> Vec<Poly> {
        let r = self.rank();
        let n = self.n_vars();
        let mut out = vec![Poly::zero(n); r];
        for i in 0..r {
            if s[i].is_zero() {
                continue;
            }
            for j in 0..r {
                if t[j].is_zero() {
                    continue;
                }
                let st = &s[i] * &t[j];
                for (k, o) in out.iter_mut().enumerate() {
                    let c = &self.structure[i][j][k];
                    if !c.is_zero() {
                        *o += &(&st * c);
                    }
                }
            }
        }
        for i in 0..r {
            if s[i].is_zero() {
                continue;
            }
            for (j, o) in out.iter_mut().enumerate() {
                *o += &(&s[i] * self.anchor_apply(i, &t[j]));
            }
        }
        for j in 0..r {
            if t[j].is_zero() {
                continue;
            }
            for (i, o) in out.iter_mut().enumerate() {
                *o -= &(&t[j] * self.anchor_apply(j, &s[i]));
            }
        }
        out
    }

    /// `[a_i, a_j]` as a section.
    pub fn frame_bracket(&self, i: usize, j: usize) -> Vec<Poly> {
        self.structure[i][j].clone()
    }

    pub fn frame(&self, i: usize) -> Vec<Poly> {
        self.bundle.frame_section(i)
    }

    /// Covariant derivative `∇_{a_i} s` of an A-connection.
    pub fn covariant(&self, conn: &Connection, i: usize, s: &[Poly]) -> Vec<Poly> {
        add_vec(&self.anchor_vec(i, s), &conn.christoffel[i].mul_vec(s))
    }

    /// Re-expresses the algebroid in the frame `a'_i = Σ_j g[j][i] a_j`.
    pub fn change_frame(&self, g: &PolyMatrix) -> Result<Self, BundleError> {
        let r = self.rank();
        if g.rows() != r || g.cols() != r {
            return Err(BundleError::Shape("frame change must be r x r".into()));
        }
        let ginv = g.inverse()?;
        let cols: Vec<Vec<Poly>> = (0..r).map(|i| g.column(i)).collect();
        let n = self.n_vars();
        let anchor = PolyMatrix::from_fn(r, n, n, |i, a| self.anchor_of(&cols[i])[a].clone());
        let mut structure = vec![vec![vec![Poly::zero(n); r]; r]; r];
        for i in 0..r {
            for j in 0..r {
                let b = self.bracket(&cols[i], &cols[j]);
                structure[i][j] = ginv.mul_vec(&b);
            }
        }
        LieAlgebroidModel::new(self.bundle.clone(), anchor, structure)
    }
}

/// Lie bracket of two vector fields in coordinates.
pub fn vector_field_bracket(x: &[Poly], y: &[Poly]) -> Vec<Poly> {
    let apply = |v: &[Poly], f: &Poly| -> Poly {
        v.iter().enumerate().fold(Poly::zero(f.n_vars()), |acc, (a, va)| acc + va * f.d(a))
    };
    (0..x.len()).map(|a| apply(x, &y[a]) - apply(y, &x[a])).collect()
}

/// Jacobi identity on frame triples and anchor compatibility on frame pairs.
pub fn check_lie_algebroid(l: &LieAlgebroidModel) -> Report {
    let mut rep = Report::new("lie-algebroid");
    let r = l.rank();
    for i in 0..r {
        for j in i + 1..r {
            let lhs = l.anchor_of(&l.frame_bracket(i, j));
            let rhs = vector_field_bracket(&l.anchor_field(i), &l.anchor_field(j));
            rep.vector_residual(format!("anchor(a{i},a{j})"), &sub_vec(&lhs, &rhs));
        }
    }
    for i in 0..r {
        for j in i + 1..r {
            for k in j + 1..r {
                let (ai, aj, ak) = (l.frame(i), l.frame(j), l.frame(k));
                let t1 = l.bracket(&l.bracket(&ai, &aj), &ak);
                let t2 = l.bracket(&l.bracket(&aj, &ak), &ai);
                let t3 = l.bracket(&l.bracket(&ak, &ai), &aj);
                let jac = add_vec(&add_vec(&t1, &t2), &t3);
                rep.vector_residual(format!("jacobi(a{i},a{j},a{k})"), &jac);
            }
        }
    }
    rep
}

/// Vector bundle map `A → B` over a polynomial base map `ω₀: M → N`;
/// `matrix` is `rank B x rank A` with entries on `M`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BundleMorphism {
    pub source: VBundle,
    pub target: VBundle,
    pub base_map: Vec<Poly>,
    pub matrix: PolyMatrix,
}

/// The module map `Γ(B*) → Γ(A*)` over `ω₀*`, recorded by the images of the
/// dual frame sections of `B*`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModuleMorphism {
    pub source: VBundle,
    pub target: VBundle,
    pub base_map: Vec<Poly>,
    pub images: Vec<Vec<Poly>>,
}

impl BundleMorphism {
    pub fn new(source: VBundle, target: VBundle, base_map: Vec<Poly>, matrix: PolyMatrix) -> Result<Self, BundleError> {
        let n = source.chart.dim;
        if base_map.len() != target.chart.dim || base_map.iter().any(|p| p.n_vars() != n) {
            return Err(BundleError::Shape("base map must give one polynomial per target coordinate".into()));
        }
        if matrix.rows() != target.rank || matrix.cols() != source.rank || matrix.n_vars() != n {
            return Err(BundleError::Shape("bundle map matrix must be rank(target) x rank(source) over the source".into()));
        }
        Ok(BundleMorphism { source, target, base_map, matrix })
    }

    /// Pulls a function on the target base back along `ω₀`.
    pub fn pull_function(&self, f: &Poly) -> Poly {
        f.compose(&self.base_map, self.source.chart.dim)
    }
}

/// `ω⋆(β)(m) = ω_mᵀ β(ω₀(m))`, stored through the images of the frame.
pub fn star(w: &BundleMorphism) -> ModuleMorphism {
    let images = (0..w.target.rank).map(|j| w.matrix.row(j)).collect();
    ModuleMorphism { source: w.source.clone(), target: w.target.clone(), base_map: w.base_map.clone(), images }
}

impl ModuleMorphism {
    /// Applies the module map to a section of `B*` given on the target chart.
    pub fn apply(&self, beta: &[Poly]) -> Vec<Poly> {
        let n = self.source.chart.dim;
        let mut out = vec![Poly::zero(n); self.source.rank];
        for (j, bj) in beta.iter().enumerate() {
            let pulled = bj.compose(&self.base_map, n);
            for (o, img) in out.iter_mut().zip(&self.images[j]) {
                *o += &(&pulled * img);
            }
        }
        out
    }

    /// Recovers the bundle map from the module map.
    pub fn to_bundle_map(&self) -> BundleMorphism {
        let n = self.source.chart.dim;
        let matrix = PolyMatrix::from_fn(self.target.rank, self.source.rank, n, |j, i| self.images[j][i].clone());
        BundleMorphism {
            source: self.source.clone(),
            target: self.target.clone(),
            base_map: self.base_map.clone(),
            matrix,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{int, Poly};

    #[test]
    fn rank_one_curvature_is_minus_one() {
        let chart = Chart::new(2);
        let b = VBundle::new(chart, 1);
        let m0 = PolyMatrix::from_fn(1, 1, 2, |_, _| Poly::var(2, 1));
        let m1 = PolyMatrix::zeros(1, 1, 2);
        let conn = Connection::new(b, vec![m0, m1]).unwrap();
        let r = connection_curvature(&conn);
        assert_eq!(r[0][1].get(0, 0), &Poly::from_int(2, -1));
        // direct expansion of ∇0∇1 − ∇1∇0 on the frame section
        let e = vec![Poly::one(2)];
        let lhs = sub_vec(&conn.covariant(0, &conn.covariant(1, &e)), &conn.covariant(1, &conn.covariant(0, &e)));
        assert_eq!(lhs[0], r[0][1].get(0, 0).clone());
        assert_eq!(r[1][0], -r[0][1].clone());
    }

    #[test]
    fn so3_over_point_and_mutation() {
        let chart = Chart::new(0);
        let mut c = vec![vec![vec![Poly::zero(0); 3]; 3]; 3];
        for (i, j, k) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
            c[i][j][k] = Poly::one(0);
            c[j][i][k] = Poly::from_int(0, -1);
        }
        let l = LieAlgebroidModel::new(VBundle::new(chart, 3), PolyMatrix::zeros(3, 0, 0), c.clone()).unwrap();
        assert!(check_lie_algebroid(&l).passed());
        // c^0_{01} = 1 breaks Jacobi
        c[0][1][0] = Poly::one(0);
        c[1][0][0] = Poly::from_int(0, -1);
        let bad = LieAlgebroidModel::new(l.bundle.clone(), l.anchor.clone(), c).unwrap();
        let rep = check_lie_algebroid(&bad);
        assert_eq!(rep.failed_names(), vec!["jacobi(a0,a1,a2)".to_string()]);
    }

    #[test]
    fn orthogonal_connection_is_metric() {
        let b = VBundle::new(Chart::new(1), 2);
        let x = Poly::var(1, 0);
        let skew = PolyMatrix::from_fn(2, 2, 1, |i, j| match (i, j) {
            (0, 1) => x.clone(),
            (1, 0) => -x.clone(),
            _ => Poly::zero(1),
        });
        let g = FiberMetric::new(b.clone(), PolyMatrix::identity(2, 1)).unwrap();
        assert!(metric_compatibility(&Connection::new(b.clone(), vec![skew]).unwrap(), &g));
        let sym = PolyMatrix::from_fn(2, 2, 1, |i, j| if i == j { Poly::constant(1, int(1)) } else { Poly::zero(1) });
        assert!(!metric_compatibility(&Connection::new(b, vec![sym]).unwrap(), &g));
    }
}
