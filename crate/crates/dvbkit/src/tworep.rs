//! Representations up to homotopy on 2-term complexes `∂: E₀ → E₁`.
//!
//! Both connections are stored as matrices along the algebroid frame
//! (`∇_i s = ρ_i(s) + M_i s`). `R[i][j]` is the `rank E₀ x rank E₁` matrix of
//! `R(a_i, a_j): E₁ → E₀`.

use thiserror::Error;

use crate::bundles::{add_vec, curvature, sub_vec, vector_field_bracket, BundleError, Connection, LieAlgebroidModel, VBundle};
use crate::dvb::{LinearSection, Side};
use crate::metric::{isotropic_test, MetricDVB};
use crate::poly::{Poly, PolyMatrix, VarLayout};
use crate::report::Report;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TwoRepError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("curvature is not antisymmetric in its algebroid slots at ({0},{1})")]
    CurvatureSlots(usize, usize),
    #[error("no identification E0 ≅ E1* was declared")]
    IdentificationMissing,
    #[error("the splitting is not Lagrangian")]
    NotLagrangian,
    #[error(transparent)]
    Bundle(#[from] BundleError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TwoRep {
    pub algebroid: LieAlgebroidModel,
    /// `∂`, `rank E₁ x rank E₀`.
    pub partial: PolyMatrix,
    pub nabla0: Connection,
    pub nabla1: Connection,
    pub curvature: Vec<Vec<PolyMatrix>>,
    /// `J: E₀ → E₁*` used by the self-duality test, `rank E₁ x rank E₀`.
    pub duality: Option<PolyMatrix>,
}

/// Twist data: one `Hom(E₁, E₀)` matrix per algebroid frame section.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TwistTensor {
    pub phi: Vec<PolyMatrix>,
}

impl TwistTensor {
    pub fn zero(rep: &TwoRep) -> Self {
        TwistTensor { phi: vec![PolyMatrix::zeros(rep.e0(), rep.e1(), rep.n_vars()); rep.rank()] }
    }

    pub fn neg(&self) -> Self {
        TwistTensor { phi: self.phi.iter().map(|m| -m).collect() }
    }
}

/// Which axiom a mutation is meant to break.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RepAxiom {
    Partial,
    Connection,
    Curvature,
}

impl TwoRep {
    pub fn new(
        algebroid: LieAlgebroidModel,
        partial: PolyMatrix,
        nabla0: Vec<PolyMatrix>,
        nabla1: Vec<PolyMatrix>,
        curvature: Vec<Vec<PolyMatrix>>,
        duality: Option<PolyMatrix>,
    ) -> Result<Self, TwoRepError> {
        let (r, n) = (algebroid.rank(), algebroid.n_vars());
        let (e1, e0) = (partial.rows(), partial.cols());
        if partial.n_vars() != n {
            return Err(TwoRepError::Shape("∂ lives in the wrong variable count".into()));
        }
        if nabla0.len() != r || nabla1.len() != r {
            return Err(TwoRepError::Shape(format!("connections need {r} direction matrices")));
        }
        let chart = algebroid.chart().clone();
        let nabla0 = Connection::new(VBundle::new(chart.clone(), e0), nabla0)?;
        let nabla1 = Connection::new(VBundle::new(chart, e1), nabla1)?;
        if curvature.len() != r || curvature.iter().any(|row| row.len() != r) {
            return Err(TwoRepError::Shape(format!("curvature must be {r} x {r}")));
        }
        for i in 0..r {
            for j in 0..r {
                let c = &curvature[i][j];
                if c.rows() != e0 || c.cols() != e1 || c.n_vars() != n {
                    return Err(TwoRepError::Shape(format!("R({i},{j}) must be {e0}x{e1}")));
                }
                if *c != -&curvature[j][i] {
                    return Err(TwoRepError::CurvatureSlots(i, j));
                }
            }
        }
        if let Some(j) = &duality {
            if j.rows() != e1 || j.cols() != e0 {
                return Err(TwoRepError::Shape("identification must be rank E1 x rank E0".into()));
            }
        }
        Ok(TwoRep { algebroid, partial, nabla0, nabla1, curvature, duality })
    }

    /// Zero differential, trivial connections and zero curvature.
    pub fn zero(algebroid: LieAlgebroidModel, e0: usize, e1: usize) -> Self {
        let (r, n) = (algebroid.rank(), algebroid.n_vars());
        let chart = algebroid.chart().clone();
        TwoRep {
            partial: PolyMatrix::zeros(e1, e0, n),
            nabla0: Connection::trivial(VBundle::new(chart.clone(), e0), r),
            nabla1: Connection::trivial(VBundle::new(chart, e1), r),
            curvature: vec![vec![PolyMatrix::zeros(e0, e1, n); r]; r],
            duality: None,
            algebroid,
        }
    }

    pub fn rank(&self) -> usize {
        self.algebroid.rank()
    }

    pub fn n_vars(&self) -> usize {
        self.algebroid.n_vars()
    }

    pub fn e0(&self) -> usize {
        self.partial.cols()
    }

    pub fn e1(&self) -> usize {
        self.partial.rows()
    }

    pub fn m0(&self, i: usize) -> &PolyMatrix {
        &self.nabla0.christoffel[i]
    }

    pub fn m1(&self, i: usize) -> &PolyMatrix {
        &self.nabla1.christoffel[i]
    }

    pub fn with_duality(mut self, j: PolyMatrix) -> Self {
        self.duality = Some(j);
        self
    }

    /// `∇^Hom_i ψ = ρ_i(ψ) + M⁰_i ψ − ψ M¹_i` for `ψ ∈ Hom(E₁, E₀)`.
    pub fn hom_covariant(&self, i: usize, psi: &PolyMatrix) -> PolyMatrix {
        self.algebroid.anchor_matrix(i, psi) + self.m0(i) * psi - psi * self.m1(i)
    }

    /// Exterior covariant derivative of a `Hom(E₁, E₀)`-valued 1-form.
    fn d_one_form(&self, phi: &[PolyMatrix], i: usize, j: usize) -> PolyMatrix {
        let mut out = self.hom_covariant(i, &phi[j]) - self.hom_covariant(j, &phi[i]);
        for (k, pk) in phi.iter().enumerate() {
            let c = &self.algebroid.structure[i][j][k];
            if !c.is_zero() {
                out = out - pk.scale_poly(c);
            }
        }
        out
    }

    /// A copy with one axiom deliberately broken.
    pub fn mutate(&self, axiom: RepAxiom) -> TwoRep {
        let mut out = self.clone();
        let n = self.n_vars();
        let bump = if n > 0 { Poly::var(n, 0) + Poly::one(n) } else { Poly::one(n) };
        match axiom {
            RepAxiom::Partial => {
                let p = self.partial.get(0, 0) + &bump;
                out.partial.set(0, 0, p);
            }
            RepAxiom::Connection => {
                let m = &mut out.nabla0.christoffel[0];
                let p = m.get(0, 0) + &bump;
                m.set(0, 0, p);
            }
            RepAxiom::Curvature => {
                if self.rank() >= 2 {
                    let p = self.curvature[0][1].get(0, 0) + &bump;
                    out.curvature[0][1].set(0, 0, p.clone());
                    out.curvature[1][0].set(0, 0, -p);
                }
            }
        }
        out
    }
}

/// Residuals of the four structure equations.
pub fn check_tworep(rep: &TwoRep) -> Report {
    let mut out = Report::new("tworep");
    let r = rep.rank();
    let alg = &rep.algebroid;
    for i in 0..r {
        let res = &rep.partial * rep.m0(i) - rep.m1(i) * &rep.partial - alg.anchor_matrix(i, &rep.partial);
        out.matrix_residual(format!("chain-map(a{i})"), &res);
    }
    let c0 = curvature(&rep.nabla0, alg);
    let c1 = curvature(&rep.nabla1, alg);
    for i in 0..r {
        for j in i + 1..r {
            let rij = &rep.curvature[i][j];
            out.matrix_residual(format!("curvature-E0(a{i},a{j})"), &(&c0[i][j] - &(rij * &rep.partial)));
            out.matrix_residual(format!("curvature-E1(a{i},a{j})"), &(&c1[i][j] - &(&rep.partial * rij)));
        }
    }
    for i in 0..r {
        for j in i + 1..r {
            for k in j + 1..r {
                let mut res = PolyMatrix::zeros(rep.e0(), rep.e1(), rep.n_vars());
                for (a, b, c) in [(i, j, k), (j, k, i), (k, i, j)] {
                    res = res + rep.hom_covariant(a, &rep.curvature[b][c]);
                    for l in 0..r {
                        let s = &alg.structure[a][b][l];
                        if !s.is_zero() {
                            res = res - rep.curvature[l][c].scale_poly(s);
                        }
                    }
                }
                out.matrix_residual(format!("bianchi(a{i},a{j},a{k})"), &res);
            }
        }
    }
    out
}

/// Change of splitting by `φ`.
pub fn twist(rep: &TwoRep, phi: &TwistTensor) -> TwoRep {
    let r = rep.rank();
    let p = &phi.phi;
    let mut out = rep.clone();
    for i in 0..r {
        out.nabla1.christoffel[i] = rep.m1(i) + &(&rep.partial * &p[i]);
        out.nabla0.christoffel[i] = rep.m0(i) + &(&p[i] * &rep.partial);
    }
    for i in 0..r {
        for j in i + 1..r {
            let quad = &(&p[i] * &rep.partial) * &p[j] - &(&p[j] * &rep.partial) * &p[i];
            let rij = &rep.curvature[i][j] + &(rep.d_one_form(p, i, j) + quad);
            out.curvature[j][i] = -&rij;
            out.curvature[i][j] = rij;
        }
    }
    out
}

/// `(∂ᵀ: E₁* → E₀*, (∇¹)*, (∇⁰)*, −Rᵀ)`.
pub fn dualize_rep(rep: &TwoRep) -> TwoRep {
    let r = rep.rank();
    TwoRep {
        algebroid: rep.algebroid.clone(),
        partial: rep.partial.transpose(),
        nabla0: rep.nabla1.dual(),
        nabla1: rep.nabla0.dual(),
        curvature: (0..r).map(|i| (0..r).map(|j| -rep.curvature[i][j].transpose()).collect()).collect(),
        duality: rep.duality.as_ref().and_then(|j| j.inverse().ok()),
    }
}

/// Compares the rep with its dual through the declared `J: E₀ → E₁*`.
pub fn selfdual_report(rep: &TwoRep) -> Result<Report, TwoRepError> {
    let j = rep.duality.as_ref().ok_or(TwoRepError::IdentificationMissing)?;
    if j.rows() != rep.e1() || j.cols() != rep.e0() || rep.e0() != rep.e1() {
        return Err(TwoRepError::Shape("self-duality needs rank E0 = rank E1".into()));
    }
    let mut out = Report::new("self-dual");
    let jd = j.transpose() * &rep.partial;
    out.matrix_residual("partial-symmetry", &(&jd - &jd.transpose()));
    for i in 0..rep.rank() {
        let res = rep.algebroid.anchor_matrix(i, j) - rep.m1(i).transpose() * j - j * rep.m0(i);
        out.matrix_residual(format!("connection-duality(a{i})"), &res);
    }
    for a in 0..rep.rank() {
        for b in a + 1..rep.rank() {
            let jr = j * &rep.curvature[a][b];
            out.matrix_residual(format!("curvature-skew(a{a},a{b})"), &(&jr + &jr.transpose()));
        }
    }
    Ok(out)
}

pub fn is_selfdual(rep: &TwoRep) -> Result<bool, TwoRepError> {
    Ok(selfdual_report(rep)?.passed())
}

/// `(Id_E, ∇, ∇, R_∇)` over `TM`.
pub fn tangent_rep(conn: &Connection) -> TwoRep {
    let chart = conn.bundle.chart.clone();
    let n = chart.dim;
    let alg = LieAlgebroidModel::tangent(chart);
    let curv = curvature(conn, &alg);
    TwoRep {
        partial: PolyMatrix::identity(conn.bundle.rank, n),
        nabla0: conn.clone(),
        nabla1: conn.clone(),
        curvature: curv,
        duality: None,
        algebroid: alg,
    }
}

/// `∇_X a` for an ordinary connection on `A` (directions = chart dimension).
fn covariant_along(conn: &Connection, x: &[Poly], a: &[Poly]) -> Vec<Poly> {
    let n = conn.bundle.chart.dim;
    let mut out = vec![Poly::zero(n); a.len()];
    for (b, xb) in x.iter().enumerate() {
        if xb.is_zero() {
            continue;
        }
        let d = conn.covariant(b, a);
        for (o, di) in out.iter_mut().zip(&d) {
            *o += &(xb * di);
        }
    }
    out
}

/// The adjoint rep `(ρ: A → TM, ∇^bas, ∇^bas, R^bas_∇)`.
pub fn adjoint_rep(alg: &LieAlgebroidModel, conn: &Connection) -> Result<TwoRep, TwoRepError> {
    let (r, n) = (alg.rank(), alg.n_vars());
    if conn.bundle.rank != r || conn.directions() != n {
        return Err(TwoRepError::Shape("adjoint rep needs a TM-connection on A".into()));
    }
    let tm_frame = |c: usize| -> Vec<Poly> { (0..n).map(|b| Poly::from_int(n, (b == c) as i64)).collect() };
    let bas_tm = |i: usize, x: &[Poly]| -> Vec<Poly> {
        add_vec(&vector_field_bracket(&alg.anchor_field(i), x), &alg.anchor_of(&covariant_along(conn, x, &alg.frame(i))))
    };
    let bas_a = |i: usize, s: &[Poly]| -> Vec<Poly> {
        add_vec(&alg.bracket(&alg.frame(i), s), &covariant_along(conn, &alg.anchor_of(s), &alg.frame(i)))
    };
    let partial = alg.anchor.transpose();
    // frames are constant, so ∇_{a_i}(frame) is the i-th connection matrix column
    let m1: Vec<PolyMatrix> =
        (0..r).map(|i| PolyMatrix::from_columns(n, n, &(0..n).map(|c| bas_tm(i, &tm_frame(c))).collect::<Vec<_>>())).collect();
    let m0: Vec<PolyMatrix> =
        (0..r).map(|i| PolyMatrix::from_columns(r, n, &(0..r).map(|j| bas_a(i, &alg.frame(j))).collect::<Vec<_>>())).collect();
    let mut curv = vec![vec![PolyMatrix::zeros(r, n, n); r]; r];
    for i in 0..r {
        for j in i + 1..r {
            let (ai, aj) = (alg.frame(i), alg.frame(j));
            let bij = alg.bracket(&ai, &aj);
            let cols: Vec<Vec<Poly>> = (0..n)
                .map(|c| {
                    let x = tm_frame(c);
                    let mut v = covariant_along(conn, &x, &bij).iter().map(|p| -p.clone()).collect::<Vec<_>>();
                    v = add_vec(&v, &alg.bracket(&covariant_along(conn, &x, &ai), &aj));
                    v = add_vec(&v, &alg.bracket(&ai, &covariant_along(conn, &x, &aj)));
                    v = add_vec(&v, &covariant_along(conn, &bas_tm(j, &x), &ai));
                    sub_vec(&v, &covariant_along(conn, &bas_tm(i, &x), &aj))
                })
                .collect();
            let rij = PolyMatrix::from_columns(r, n, &cols);
            curv[j][i] = -&rij;
            curv[i][j] = rij;
        }
    }
    TwoRep::new(alg.clone(), partial, m0, m1, curv, None)
}

/// The twist relating the adjoint reps of `∇` and `∇'`: `φ_i(X) = (∇'_X − ∇_X) a_i`.
pub fn adjoint_twist(conn: &Connection, other: &Connection) -> TwistTensor {
    let (r, n) = (conn.bundle.rank, conn.bundle.chart.dim);
    let phi = (0..r)
        .map(|i| PolyMatrix::from_fn(r, n, n, |k, b| other.christoffel[b].get(k, i) - conn.christoffel[b].get(k, i)))
        .collect();
    TwistTensor { phi }
}

/// `(∂ ⊕ ∂ᵀ, ∇⁰ ⊕ (∇¹)*, ∇¹ ⊕ (∇⁰)*, R ⊕ (−Rᵀ))` on `E₀ ⊕ E₁* → E₁ ⊕ E₀*`,
/// with the swap identification.
pub fn direct_sum_double(rep: &TwoRep) -> TwoRep {
    let d = dualize_rep(rep);
    let (e0, e1, n, r) = (rep.e0(), rep.e1(), rep.n_vars(), rep.rank());
    let m0: Vec<PolyMatrix> = (0..r).map(|i| rep.m0(i).direct_sum(d.m0(i))).collect();
    let m1: Vec<PolyMatrix> = (0..r).map(|i| rep.m1(i).direct_sum(d.m1(i))).collect();
    let curv = (0..r).map(|i| (0..r).map(|j| rep.curvature[i][j].direct_sum(&d.curvature[i][j])).collect()).collect();
    // J(c, α) = (α, c) in (E₁ ⊕ E₀*)* = E₁* ⊕ E₀
    let size = e0 + e1;
    let j = PolyMatrix::from_fn(size, size, n, |row, col| {
        let hit = if row < e1 { col == e0 + row } else { col == row - e1 };
        Poly::from_int(n, hit as i64)
    });
    let chart = rep.algebroid.chart().clone();
    TwoRep {
        algebroid: rep.algebroid.clone(),
        partial: rep.partial.direct_sum(&d.partial),
        nabla0: Connection { bundle: VBundle::new(chart.clone(), size), christoffel: m0 },
        nabla1: Connection { bundle: VBundle::new(chart, size), christoffel: m1 },
        curvature: curv,
        duality: Some(j),
    }
}

/// Re-expresses `E₀` through the declared `J`, so the identification
/// becomes the identity matrix.
pub fn normalize_duality(rep: &TwoRep) -> Result<TwoRep, TwoRepError> {
    let j = rep.duality.as_ref().ok_or(TwoRepError::IdentificationMissing)?;
    let jinv = j.inverse().map_err(BundleError::from)?;
    let mut out = rep.clone();
    out.partial = &rep.partial * &jinv;
    for i in 0..rep.rank() {
        out.nabla0.christoffel[i] = j * &rep.algebroid.anchor_matrix(i, &jinv) + &(&(j * rep.m0(i)) * &jinv);
    }
    for row in out.curvature.iter_mut() {
        for c in row.iter_mut() {
            *c = j * &*c;
        }
    }
    out.duality = Some(PolyMatrix::identity(rep.e0(), rep.n_vars()));
    Ok(out)
}

/// The VB-algebroid `D → B` of a rep in decomposed form, with sections over
/// `B = E₁` written in the frame `{σ(a_i)} ∪ {c_j†}` over the function
/// algebra in the layout `[x | y]`, `y` the fiber coordinates of `E₁`.
#[derive(Clone, Debug)]
pub struct VBAlgebroidRealization {
    pub layout: VarLayout,
    pub rank_a: usize,
    pub rank_core: usize,
    /// Anchor of each generator as a vector field on `B`.
    pub anchor: Vec<Vec<Poly>>,
    /// `brackets[g][h]`: coefficients of `[g, h]` in the generator frame.
    pub brackets: Vec<Vec<Vec<Poly>>>,
}

impl VBAlgebroidRealization {
    pub fn generators(&self) -> usize {
        self.rank_a + self.rank_core
    }

    pub fn generator(&self, g: usize) -> Vec<Poly> {
        (0..self.generators()).map(|h| Poly::from_int(self.layout.total(), (g == h) as i64)).collect()
    }

    pub fn label(&self, g: usize) -> String {
        if g < self.rank_a {
            format!("s(a{g})")
        } else {
            format!("c{}+", g - self.rank_a)
        }
    }

    pub fn anchor_of(&self, s: &[Poly]) -> Vec<Poly> {
        let t = self.layout.total();
        let mut out = vec![Poly::zero(t); t];
        for (sg, field) in s.iter().zip(&self.anchor) {
            if sg.is_zero() {
                continue;
            }
            for (o, f) in out.iter_mut().zip(field) {
                *o += &(sg * f);
            }
        }
        out
    }

    pub fn apply_field(field: &[Poly], f: &Poly) -> Poly {
        let mut acc = Poly::zero(f.n_vars());
        for (v, fv) in field.iter().enumerate() {
            if !fv.is_zero() {
                acc += &(fv * f.d(v));
            }
        }
        acc
    }

    pub fn bracket(&self, s: &[Poly], t: &[Poly]) -> Vec<Poly> {
        let total = self.layout.total();
        let k = self.generators();
        let mut out = vec![Poly::zero(total); k];
        for g in 0..k {
            if s[g].is_zero() {
                continue;
            }
            for h in 0..k {
                if t[h].is_zero() {
                    continue;
                }
                let st = &s[g] * &t[h];
                for (o, c) in out.iter_mut().zip(&self.brackets[g][h]) {
                    if !c.is_zero() {
                        *o += &(&st * c);
                    }
                }
            }
        }
        let (xs, xt) = (self.anchor_of(s), self.anchor_of(t));
        for h in 0..k {
            out[h] += &Self::apply_field(&xs, &t[h]);
            out[h] -= &Self::apply_field(&xt, &s[h]);
        }
        out
    }

    /// Anchor compatibility on generator pairs and Jacobiators on triples.
    pub fn jacobi_report(&self) -> Report {
        let mut out = Report::new("vb-algebroid");
        let k = self.generators();
        let gens: Vec<Vec<Poly>> = (0..k).map(|g| self.generator(g)).collect();
        for g in 0..k {
            for h in g + 1..k {
                let lhs = self.anchor_of(&self.bracket(&gens[g], &gens[h]));
                let rhs = vector_field_bracket(&self.anchor[g], &self.anchor[h]);
                out.vector_residual(format!("anchor[{},{}]", self.label(g), self.label(h)), &sub_vec(&lhs, &rhs));
            }
        }
        for a in 0..k {
            for b in a + 1..k {
                for c in b + 1..k {
                    let (x, y, z) = (&gens[a], &gens[b], &gens[c]);
                    let t1 = self.bracket(x, &self.bracket(y, z));
                    let t2 = self.bracket(y, &self.bracket(z, x));
                    let t3 = self.bracket(z, &self.bracket(x, y));
                    out.vector_residual(
                        format!("jacobi[{},{},{}]", self.label(a), self.label(b), self.label(c)),
                        &add_vec(&add_vec(&t1, &t2), &t3),
                    );
                }
            }
        }
        out
    }
}

/// Bracket and anchor tables of the VB-algebroid defined by a rep.
pub fn realize_vb_algebroid(rep: &TwoRep) -> VBAlgebroidRealization {
    let (n, r, e0, e1) = (rep.n_vars(), rep.rank(), rep.e0(), rep.e1());
    let layout = VarLayout::new(&[n, e1]);
    let t = layout.total();
    let y = layout.vars(1);
    let alg = &rep.algebroid;
    let k = r + e0;
    let mut anchor = Vec::with_capacity(k);
    for i in 0..r {
        let mut field: Vec<Poly> = alg.anchor_field(i).iter().map(|p| layout.lift(p)).collect();
        let m1 = layout.lift_matrix(rep.m1(i));
        field.extend(m1.mul_vec(&y).into_iter().map(|p| -p));
        anchor.push(field);
    }
    for j in 0..e0 {
        let mut field = vec![Poly::zero(t); n];
        field.extend(rep.partial.column(j).iter().map(|p| layout.lift(p)));
        anchor.push(field);
    }
    let mut brackets = vec![vec![vec![Poly::zero(t); k]; k]; k];
    for i in 0..r {
        for j in 0..r {
            if i == j {
                continue;
            }
            let mut v = vec![Poly::zero(t); k];
            for (l, c) in alg.structure[i][j].iter().enumerate() {
                v[l] = layout.lift(c);
            }
            let ry = layout.lift_matrix(&rep.curvature[i][j]).mul_vec(&y);
            for (l, p) in ry.into_iter().enumerate() {
                v[r + l] -= &p;
            }
            brackets[i][j] = v;
        }
        for j in 0..e0 {
            let col = rep.m0(i).column(j);
            let mut v = vec![Poly::zero(t); k];
            for (l, p) in col.iter().enumerate() {
                v[r + l] = layout.lift(p);
            }
            brackets[r + j][i] = v.iter().map(|p| -p.clone()).collect();
            brackets[i][r + j] = v;
        }
    }
    VBAlgebroidRealization { layout, rank_a: r, rank_core: e0, anchor, brackets }
}

/// Self-duality of the rep of a metric VB-algebroid in a Lagrangian
/// splitting, together with the closure of `𝒞(𝔼)` under the bracket.
#[derive(Clone, Debug)]
pub struct MetricVbVerdict {
    pub selfdual: bool,
    pub closure: Report,
}

impl MetricVbVerdict {
    pub fn metric(&self) -> bool {
        self.selfdual && self.closure.passed()
    }
}

pub fn metric_vb_check(m: &MetricDVB, rep: &TwoRep) -> Result<MetricVbVerdict, TwoRepError> {
    if !m.is_lagrangian() {
        return Err(TwoRepError::NotLagrangian);
    }
    if m.q_rank() != rep.e1() || m.q_rank() != rep.e0() || m.b_rank() != rep.rank() {
        return Err(TwoRepError::Shape("rep must act on Q* → Q over B".into()));
    }
    let identified = rep.clone().with_duality(PolyMatrix::identity(rep.e0(), rep.n_vars()));
    let selfdual = is_selfdual(&identified)?;
    let real = realize_vb_algebroid(rep);
    let (n, q, r) = (rep.n_vars(), rep.e1(), rep.rank());
    let lay = &real.layout;
    let t = lay.total();
    // generators of 𝒞(𝔼): σ(b_i) and the tildes of ξ_k ∧ ξ_l
    let mut gens: Vec<(String, Vec<Poly>)> = (0..r).map(|i| (format!("s(b{i})"), real.generator(i))).collect();
    for kk in 0..q {
        for ll in kk + 1..q {
            let mut s = vec![Poly::zero(t); r + q];
            // core_map = Wᵀ with W = E_kl − E_lk
            s[r + ll] = lay.var(1, kk);
            s[r + kk] = -lay.var(1, ll);
            gens.push((format!("w({kk},{ll})"), s));
        }
    }
    let mut closure = Report::new("isotropic-closure");
    for a in 0..gens.len() {
        for b in a + 1..gens.len() {
            let br = real.bracket(&gens[a].1, &gens[b].1);
            let kind = match (a < r, b < r) {
                (true, true) => "[σ,σ]",
                (true, false) | (false, true) => "[σ,ω]",
                _ => "[ω,ω]",
            };
            let name = format!("{kind} {} {}", gens[a].0, gens[b].0);
            let base: Option<Vec<Poly>> = br[..r].iter().map(|p| p.restrict(n, 0)).collect();
            let core_map = PolyMatrix::from_fn(q, q, n, |p, qq| br[r + p].coefficient_in(n, &[lay.index(1, qq)]));
            let linear = (0..q).all(|p| {
                let rebuilt = (0..q).fold(Poly::zero(t), |acc, qq| acc + lay.lift(core_map.get(p, qq)) * lay.var(1, qq));
                rebuilt == br[r + p]
            });
            let ok = match (base, linear) {
                (Some(base), true) => {
                    let s = LinearSection { over: Side::A, base, core_map };
                    isotropic_test(m, &s).unwrap_or(false)
                }
                _ => false,
            };
            closure.flag(name, ok, (!ok).then(|| "bracket leaves the isotropic linear sections".to_string()));
        }
    }
    Ok(MetricVbVerdict { selfdual, closure })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundles::{metric_compatibility, Chart};
    use crate::gen::{self, AlgebroidKind, GenParams, ALGEBROID_KINDS};
    use crate::poly::seeded_rng;

    #[test]
    fn zero_rep_is_valid_and_selfdual_with_identity() {
        let alg = LieAlgebroidModel::abelian(Chart::new(1), 2);
        let rep = TwoRep::zero(alg, 2, 2).with_duality(PolyMatrix::identity(2, 1));
        assert!(check_tworep(&rep).passed());
        assert!(is_selfdual(&rep).unwrap());
        assert_eq!(dualize_rep(&dualize_rep(&rep)), rep);
    }

    #[test]
    fn tangent_rep_of_curved_connection_passes() {
        let chart = Chart::new(2);
        let x = |i| Poly::var(2, i);
        let m0 = PolyMatrix::from_fn(2, 2, 2, |i, j| if (i, j) == (0, 1) { x(1) } else { Poly::zero(2) });
        let m1 = PolyMatrix::from_fn(2, 2, 2, |i, j| if (i, j) == (1, 0) { x(0) * x(1) } else { Poly::zero(2) });
        let conn = Connection::new(VBundle::new(chart, 2), vec![m0, m1]).unwrap();
        let rep = tangent_rep(&conn);
        assert!(!rep.curvature[0][1].is_zero());
        assert!(check_tworep(&rep).passed());
        assert!(check_tworep(&dualize_rep(&rep)).passed());
        assert!(realize_vb_algebroid(&rep).jacobi_report().passed());
    }

    fn params() -> GenParams {
        GenParams { n: 2, degree: 1, terms: 2 }
    }

    #[test]
    fn adjoint_reps_pass_for_every_kind() {
        let mut rng = seeded_rng(7);
        for kind in ALGEBROID_KINDS {
            let alg = gen::random_algebroid(&mut rng, kind, params());
            assert!(crate::bundles::check_lie_algebroid(&alg).passed(), "{kind:?}");
            let conn = gen::random_connection(&mut rng, alg.rank(), 2, params());
            let rep = adjoint_rep(&alg, &conn).unwrap();
            let report = check_tworep(&rep);
            assert!(report.passed(), "{kind:?}: {:?}", report.failed_names());
        }
    }

    #[test]
    fn adjoint_reps_of_two_connections_are_twist_related() {
        let mut rng = seeded_rng(11);
        let alg = gen::random_algebroid(&mut rng, AlgebroidKind::Affine, params());
        let c1 = gen::random_connection(&mut rng, 2, 2, params());
        let c2 = gen::random_connection(&mut rng, 2, 2, params());
        let r1 = adjoint_rep(&alg, &c1).unwrap();
        let r2 = adjoint_rep(&alg, &c2).unwrap();
        assert_eq!(twist(&r1, &adjoint_twist(&c1, &c2)), r2);
    }

    #[test]
    fn twist_inverts_and_commutes_with_duals() {
        let mut rng = seeded_rng(3);
        let rep = gen::random_tworep(&mut rng, AlgebroidKind::Sl2, params());
        assert!(check_tworep(&rep).passed());
        let phi = gen::random_twist(&mut rng, &rep, params());
        let t = twist(&rep, &phi);
        assert!(check_tworep(&t).passed());
        assert_eq!(twist(&t, &phi.neg()), rep);
        let dual_phi = TwistTensor { phi: phi.phi.iter().map(|m| -m.transpose()).collect() };
        assert_eq!(dualize_rep(&t), twist(&dualize_rep(&rep), &dual_phi));
    }

    #[test]
    fn doubling_is_selfdual_and_normalizes() {
        let mut rng = seeded_rng(5);
        let rep = gen::random_tworep(&mut rng, AlgebroidKind::Affine, params());
        let d = direct_sum_double(&rep);
        assert!(check_tworep(&d).passed());
        assert!(is_selfdual(&d).unwrap());
        let n = normalize_duality(&d).unwrap();
        assert!(check_tworep(&n).passed());
        assert!(is_selfdual(&n).unwrap());
    }

    #[test]
    fn selfduality_through_a_metric() {
        let mut rng = seeded_rng(9);
        let g = gen::random_metric(&mut rng, 2, params());
        let conn = gen::random_metric_connection(&mut rng, &g, params());
        assert!(metric_compatibility(&conn, &g));
        let rep = tangent_rep(&conn).with_duality(g.g.clone());
        assert!(is_selfdual(&rep).unwrap());
        let raw = gen::random_connection(&mut rng, 2, 2, params());
        let bad = tangent_rep(&raw).with_duality(g.g.clone());
        assert!(!is_selfdual(&bad).unwrap());
        assert_eq!(is_selfdual(&tangent_rep(&raw)), Err(TwoRepError::IdentificationMissing));
    }

    #[test]
    fn realization_mirrors_the_axioms() {
        let mut rng = seeded_rng(13);
        let rep = gen::random_tworep(&mut rng, AlgebroidKind::Sl2, params());
        assert!(realize_vb_algebroid(&rep).jacobi_report().passed());
        for axiom in [RepAxiom::Partial, RepAxiom::Connection, RepAxiom::Curvature] {
            let bad = rep.mutate(axiom);
            assert!(!check_tworep(&bad).passed(), "{axiom:?}");
            assert!(!realize_vb_algebroid(&bad).jacobi_report().passed(), "{axiom:?}");
        }
        let names = check_tworep(&rep.mutate(RepAxiom::Curvature)).failed_names();
        assert!(names.iter().any(|n| n.starts_with("bianchi")), "{names:?}");
    }
}
