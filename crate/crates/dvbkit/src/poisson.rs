//! Degree −2 Poisson brackets on split [2]-manifolds `Q[-1] ⊕ B*[-2]` and the
//! dual linear Poisson structures on involutive double vector bundles.
//!
//! Generators: base coordinates `x_a`, degree 1 `ξ_k` (a frame of `Q*`) and
//! degree 2 `η_i` (a frame of `B`). A self-dual rep with `E₀ = Q*`,
//! `E₁ = Q` and identity identification fixes the generator brackets
//!
//! ```text
//! {ξ_k, ξ_l} = ∂_lk      {η_i, ξ_k} = Σ_l (M⁰_i)_lk ξ_l      {η_i, x_a} = ρ_i^a
//! {η_i, η_j} = Σ_k c^k_ij η_k − Σ_{l<m} (R_ij)_ml ξ_l ξ_m
//! ```
//!
//! and everything else follows from graded skew-symmetry and Leibniz.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::bundles::{BundleError, LieAlgebroidModel, VBundle};
use crate::graded::{GradedError, GradedFunction, Generator, Signature, DEFAULT_DEGREE_CAP};
use crate::metric::{d_layout, pullback_by_involution, InvolutiveDVB};
use crate::bundles::{metric_compatibility, Connection, FiberMetric};
use crate::poly::{Poly, PolyMatrix, VarLayout};
use crate::report::Report;
use crate::tworep::{check_tworep, normalize_duality, realize_vb_algebroid, selfdual_report, tangent_rep, TwoRep, TwoRepError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PoissonError {
    #[error("the defining rep fails: {0:?}")]
    InvalidRep(Vec<String>),
    #[error("E0 and E1 must have equal rank, got {0} and {1}")]
    Ranks(usize, usize),
    #[error("bracket table does not close at {0}")]
    NotClosed(String),
    #[error("connection is not metric")]
    NotMetric,
    #[error(transparent)]
    Graded(#[from] GradedError),
    #[error(transparent)]
    Rep(#[from] TwoRepError),
    #[error(transparent)]
    Bundle(#[from] BundleError),
}

/// A Poisson [2]-manifold in split form, stored through its self-dual rep.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PoissonStructure2 {
    rep: TwoRep,
    pub cap: u32,
}

/// Single-axiom mutations of a Poisson structure.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PoissonAxiom {
    /// `∂` gains an antisymmetric off-diagonal part.
    PartialSymmetry,
    /// `M⁰` moves by `P` with `∂P` not antisymmetric.
    ConnectionDuality,
    /// `R` gains a symmetric off-diagonal part.
    CurvatureSkew,
}

impl PoissonStructure2 {
    /// Validates the rep (chain map, curvatures, Bianchi, self-duality) and
    /// moves the identification to the identity.
    pub fn new(rep: TwoRep) -> Result<Self, PoissonError> {
        if rep.e0() != rep.e1() {
            return Err(PoissonError::Ranks(rep.e0(), rep.e1()));
        }
        let rep = match rep.duality {
            Some(_) => normalize_duality(&rep)?,
            None => return Err(TwoRepError::IdentificationMissing.into()),
        };
        let mut report = check_tworep(&rep);
        report.absorb("self-dual", selfdual_report(&rep)?);
        if !report.passed() {
            return Err(PoissonError::InvalidRep(report.failed_names()));
        }
        Ok(PoissonStructure2 { rep, cap: DEFAULT_DEGREE_CAP })
    }

    /// No validation; the rep is read with `E₀ = Q*`, `E₁ = Q` literally.
    pub fn new_unchecked(rep: TwoRep) -> Result<Self, PoissonError> {
        if rep.e0() != rep.e1() {
            return Err(PoissonError::Ranks(rep.e0(), rep.e1()));
        }
        Ok(PoissonStructure2 { rep, cap: DEFAULT_DEGREE_CAP })
    }

    pub fn with_cap(mut self, cap: u32) -> Self {
        self.cap = cap;
        self
    }

    pub fn rep(&self) -> &TwoRep {
        &self.rep
    }

    pub fn signature(&self) -> Signature {
        Signature { n: self.rep.n_vars(), odd: self.rep.e1(), even: self.rep.rank() }
    }

    fn zero(&self) -> GradedFunction {
        GradedFunction::zero(self.signature())
    }

    /// `R̂_ij = Σ_{l<m} (R_ij)_ml ξ_l ξ_m`.
    fn curvature_form(&self, i: usize, j: usize) -> GradedFunction {
        GradedFunction::two_form(self.signature(), &self.rep.curvature[i][j].transpose())
    }

    /// Bracket of two generators.
    pub fn generator_bracket(&self, a: Generator, b: Generator) -> GradedFunction {
        use Generator::*;
        let sig = self.signature();
        let n = sig.n;
        let rep = &self.rep;
        match (a, b) {
            (Odd(k), Odd(l)) => GradedFunction::from_base(sig, rep.partial.get(l, k).clone()),
            (Even(i), Odd(k)) => GradedFunction::degree_one(sig, &rep.m0(i).column(k)),
            (Odd(_), Even(_)) => -self.generator_bracket(b, a),
            (Even(i), Base(x)) => GradedFunction::from_base(sig, rep.algebroid.anchor.get(i, x).clone()),
            (Base(_), Even(_)) => -self.generator_bracket(b, a),
            (Even(i), Even(j)) => {
                let c: Vec<Poly> = rep.algebroid.structure[i][j].clone();
                GradedFunction::linear_even(sig, &c) - self.curvature_form(i, j)
            }
            _ => GradedFunction::from_base(sig, Poly::zero(n)),
        }
    }

    fn check_cap(&self, f: &GradedFunction) -> Result<(), PoissonError> {
        let d = f.max_degree();
        if d > self.cap {
            return Err(GradedError::CapExceeded { degree: d, cap: self.cap }.into());
        }
        Ok(())
    }

    /// `{F, G} = Σ (F ∂⃖_u) {u, v} (∂⃗_v G)` over generator pairs.
    pub fn bracket(&self, f: &GradedFunction, g: &GradedFunction) -> Result<GradedFunction, PoissonError> {
        self.check_cap(f)?;
        self.check_cap(g)?;
        if f.signature() != self.signature() || g.signature() != self.signature() {
            return Err(GradedError::Signature.into());
        }
        Ok(self.bracket_raw(f, g))
    }

    fn bracket_raw(&self, f: &GradedFunction, g: &GradedFunction) -> GradedFunction {
        let sig = self.signature();
        let gens: Vec<Generator> = (0..sig.generator_count()).map(|k| sig.generator(k)).collect();
        let right: Vec<GradedFunction> = gens.iter().map(|&u| f.right_derivative(u)).collect();
        let left: Vec<GradedFunction> = gens.iter().map(|&v| g.left_derivative(v)).collect();
        let mut out = self.zero();
        for (iu, &u) in gens.iter().enumerate() {
            if right[iu].is_zero() {
                continue;
            }
            for (iv, &v) in gens.iter().enumerate() {
                if left[iv].is_zero() {
                    continue;
                }
                let uv = self.generator_bracket(u, v);
                if uv.is_zero() {
                    continue;
                }
                out = out + right[iu].mul(&uv).mul(&left[iv]);
            }
        }
        out
    }

    /// The full generator table.
    pub fn table(&self) -> GeneratorTable {
        let sig = self.signature();
        let k = sig.generator_count();
        let entries = (0..k)
            .map(|a| (0..k).map(|b| self.generator_bracket(sig.generator(a), sig.generator(b))).collect())
            .collect();
        GeneratorTable { sig, entries }
    }

    /// A copy with one axiom broken, or `None` when the ranks leave no room
    /// for the perturbation.
    pub fn mutate(&self, axiom: PoissonAxiom) -> Option<PoissonStructure2> {
        let mut rep = self.rep.clone();
        let n = rep.n_vars();
        let one = Poly::one(n);
        match axiom {
            PoissonAxiom::PartialSymmetry => {
                if rep.e0() < 2 {
                    return None;
                }
                let p = rep.partial.get(0, 1) + &one;
                rep.partial.set(0, 1, p);
            }
            PoissonAxiom::ConnectionDuality => {
                if rep.rank() == 0 || rep.e0() == 0 {
                    return None;
                }
                // pick a column of ∂ that is nonzero so that ∂P + (∂P)ᵀ ≠ 0
                let col = (0..rep.e0()).find(|&c| rep.partial.column(c).iter().any(|p| !p.is_zero()))?;
                let m = &mut rep.nabla0.christoffel[0];
                let p = m.get(col, col) + &one;
                m.set(col, col, p);
            }
            PoissonAxiom::CurvatureSkew => {
                if rep.rank() < 2 || rep.e0() < 2 {
                    return None;
                }
                for (a, b) in [(0, 1), (1, 0)] {
                    let p = rep.curvature[0][1].get(a, b) + &one;
                    rep.curvature[0][1].set(a, b, p);
                    let q = rep.curvature[1][0].get(a, b) - &one;
                    rep.curvature[1][0].set(a, b, q);
                }
            }
        }
        Some(PoissonStructure2 { rep, cap: self.cap })
    }
}

/// `{u, v}` for every ordered pair of generators, indexed as in the signature.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneratorTable {
    pub sig: Signature,
    pub entries: Vec<Vec<GradedFunction>>,
}

impl GeneratorTable {
    pub fn get(&self, a: Generator, b: Generator) -> &GradedFunction {
        &self.entries[self.sig.index(a)][self.sig.index(b)]
    }
}

fn sign(a: u32, b: u32) -> bool {
    (a * b) % 2 == 1
}

/// Graded skew-symmetry, Leibniz and Jacobi on generators.
pub fn check_graded_axioms(p: &PoissonStructure2) -> Report {
    let sig = p.signature();
    let gens: Vec<Generator> = (0..sig.generator_count()).map(|k| sig.generator(k)).collect();
    let gf = |g: Generator| GradedFunction::generator(sig, g);
    let br = |f: &GradedFunction, g: &GradedFunction| p.bracket_raw(f, g);
    let mut out = Report::new("graded-poisson");
    let residual = |out: &mut Report, name: String, r: &GradedFunction| {
        let ok = r.is_zero();
        out.flag(name, ok, (!ok).then(|| format!("residual {r}")));
    };
    for (ia, &a) in gens.iter().enumerate() {
        for &b in &gens[ia..] {
            let (fa, fb) = (gf(a), gf(b));
            let ab = br(&fa, &fb);
            let ba = br(&fb, &fa);
            let r = if sign(a.degree(), b.degree()) { &ab - &ba } else { &ab + &ba };
            residual(&mut out, format!("skew{{{},{}}}", a.label(), b.label()), &r);
        }
    }
    for &a in &gens {
        for (ib, &b) in gens.iter().enumerate() {
            for &c in &gens[ib..] {
                if b.degree() == 0 && c.degree() == 0 {
                    continue;
                }
                let (fa, fb, fc) = (gf(a), gf(b), gf(c));
                let lhs = br(&fa, &fb.mul(&fc));
                let t1 = br(&fa, &fb).mul(&fc);
                let t2 = fb.mul(&br(&fa, &fc));
                let rhs = if sign(a.degree(), b.degree()) { &t1 - &t2 } else { &t1 + &t2 };
                residual(&mut out, format!("leibniz{{{},{}*{}}}", a.label(), b.label(), c.label()), &(&lhs - &rhs));
            }
        }
    }
    for (ia, &a) in gens.iter().enumerate() {
        for (ib, &b) in gens.iter().enumerate().skip(ia) {
            for &c in &gens[ib..] {
                if a.degree() + b.degree() + c.degree() < 2 {
                    continue;
                }
                let (fa, fb, fc) = (gf(a), gf(b), gf(c));
                let lhs = br(&fa, &br(&fb, &fc));
                let t1 = br(&br(&fa, &fb), &fc);
                let t2 = br(&fb, &br(&fa, &fc));
                let rhs = if sign(a.degree(), b.degree()) { &t1 - &t2 } else { &t1 + &t2 };
                residual(&mut out, format!("jacobi{{{},{},{}}}", a.label(), b.label(), c.label()), &(&lhs - &rhs));
            }
        }
    }
    out
}

fn table_entry(t: &GeneratorTable, a: Generator, b: Generator) -> &GradedFunction {
    t.get(a, b)
}

/// Reads `(∂, ρ, M⁰, c, R)` back from a generator table; `M¹ = −M⁰ᵀ` and
/// the identification is the identity.
pub fn rep_from_bracket(t: &GeneratorTable) -> Result<TwoRep, PoissonError> {
    use Generator::*;
    let sig = t.sig;
    let (n, m, nb) = (sig.n, sig.odd, sig.even);
    let not_closed = |a: Generator, b: Generator| PoissonError::NotClosed(format!("{{{},{}}}", a.label(), b.label()));
    let base_only = |a: Generator, b: Generator| -> Result<Poly, PoissonError> {
        let f = table_entry(t, a, b);
        let p = f.base_part();
        if *f != GradedFunction::from_base(sig, p.clone()) {
            return Err(not_closed(a, b));
        }
        Ok(p)
    };
    let partial = {
        let mut d = PolyMatrix::zeros(m, m, n);
        for k in 0..m {
            for l in 0..m {
                d.set(l, k, base_only(Odd(k), Odd(l))?);
            }
        }
        d
    };
    let mut anchor = PolyMatrix::zeros(nb, n, n);
    for i in 0..nb {
        for a in 0..n {
            anchor.set(i, a, base_only(Even(i), Base(a))?);
        }
    }
    let mut m0 = Vec::with_capacity(nb);
    for i in 0..nb {
        let mut cols = Vec::with_capacity(m);
        for k in 0..m {
            let f = table_entry(t, Even(i), Odd(k));
            let tau = f.degree_one_coefficients();
            if *f != GradedFunction::degree_one(sig, &tau) {
                return Err(not_closed(Even(i), Odd(k)));
            }
            cols.push(tau);
        }
        m0.push(PolyMatrix::from_columns(m, n, &cols));
    }
    let mut structure = vec![vec![vec![Poly::zero(n); nb]; nb]; nb];
    let mut curv = vec![vec![PolyMatrix::zeros(m, m, n); nb]; nb];
    for i in 0..nb {
        for j in 0..nb {
            let f = table_entry(t, Even(i), Even(j));
            let c = f.even_linear_coefficients();
            let form = (&GradedFunction::linear_even(sig, &c) - f).two_form_matrix();
            if *f != &GradedFunction::linear_even(sig, &c) - &GradedFunction::two_form(sig, &form) {
                return Err(not_closed(Even(i), Even(j)));
            }
            structure[i][j] = c;
            curv[i][j] = form.transpose();
        }
    }
    let chart = crate::bundles::Chart::new(n);
    let alg = LieAlgebroidModel::new(VBundle::new(chart, nb), anchor, structure)?;
    let m1: Vec<PolyMatrix> = m0.iter().map(|x| -x.transpose()).collect();
    Ok(TwoRep::new(alg, partial, m0, m1, curv, Some(PolyMatrix::identity(m, n)))?)
}

/// `ρ_B` and `∂` both have nonzero constant determinant.
pub fn is_symplectic(p: &PoissonStructure2) -> bool {
    let rep = p.rep();
    let anchor = &rep.algebroid.anchor;
    anchor.is_square() && anchor.has_unit_det() && rep.partial.is_square() && rep.partial.has_unit_det()
}

/// `E[-1] ⊕ T*M[-2]` for a metric bundle with metric connection: the rep
/// `(g⁻¹, −Mᵀ, M, g R_∇)` on `E* → E` over `TM`.
pub fn symplectic_from_metric_bundle(g: &FiberMetric, conn: &Connection) -> Result<PoissonStructure2, PoissonError> {
    if !metric_compatibility(conn, g) {
        return Err(PoissonError::NotMetric);
    }
    let t = tangent_rep(conn);
    let r = t.rank();
    let ginv = g.g.inverse().map_err(BundleError::from)?;
    let m1: Vec<PolyMatrix> = conn.christoffel.clone();
    let m0: Vec<PolyMatrix> = m1.iter().map(|m| -m.transpose()).collect();
    let curv = (0..r).map(|i| (0..r).map(|j| &g.g * &t.curvature[i][j]).collect()).collect();
    let e = g.bundle.rank;
    let rep = TwoRep::new(t.algebroid, ginv, m0, m1, curv, Some(PolyMatrix::identity(e, g.g.n_vars())))?;
    PoissonStructure2::new(rep)
}

/// Linear Poisson structure on `D = 𝔼*` in the layout `[x | u | v | β]`:
/// `u` the side coordinates, `v` dual to the core of `𝔼`, `β` dual to the
/// lifts `σ(b_i)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearPoissonOnD {
    pub host: InvolutiveDVB,
    pub layout: VarLayout,
    /// `table[a][b] = {z_a, z_b}` on coordinates.
    pub table: PolyMatrix,
}

/// Case label of a coordinate in the anti-Poisson analysis.
fn coordinate_case(block: usize) -> &'static str {
    match block {
        0 => "pi1*f",
        1 => "pi1*l_tau",
        2 => "l_tau†",
        _ => "l_chi",
    }
}

impl LinearPoissonOnD {
    pub fn coordinates(&self) -> Vec<(usize, usize)> {
        (0..4).flat_map(|b| (0..self.layout.size(b)).map(move |i| (b, i))).collect()
    }

    fn label(&self, (b, i): (usize, usize)) -> String {
        let stem = ["x", "u", "v", "beta"][b];
        format!("{stem}{i}")
    }

    pub fn bracket(&self, f: &Poly, g: &Poly) -> Poly {
        let t = self.layout.total();
        let df: Vec<Poly> = (0..t).map(|a| f.d(a)).collect();
        let dg: Vec<Poly> = (0..t).map(|b| g.d(b)).collect();
        let mut out = Poly::zero(t);
        for a in 0..t {
            if df[a].is_zero() {
                continue;
            }
            for b in 0..t {
                let e = self.table.get(a, b);
                if dg[b].is_zero() || e.is_zero() {
                    continue;
                }
                out += &(&(&df[a] * &dg[b]) * e);
            }
        }
        out
    }

    /// Jacobi on coordinate triples.
    pub fn jacobi_report(&self) -> Report {
        let mut out = Report::new("linear-poisson");
        let t = self.layout.total();
        let z: Vec<Poly> = (0..t).map(|a| Poly::var(t, a)).collect();
        for a in 0..t {
            for b in a + 1..t {
                for c in b + 1..t {
                    let r = self.bracket(&z[a], &self.bracket(&z[b], &z[c]))
                        + self.bracket(&z[b], &self.bracket(&z[c], &z[a]))
                        + self.bracket(&z[c], &self.bracket(&z[a], &z[b]));
                    out.residual(format!("jacobi(z{a},z{b},z{c})"), &r);
                }
            }
        }
        out
    }

    /// `ℐ*{F, G} = −{ℐ*F, ℐ*G}` on coordinate functions, named by case.
    pub fn anti_poisson_report(&self) -> Report {
        let mut out = Report::new("anti-poisson");
        let coords = self.coordinates();
        let t = self.layout.total();
        let func = |(b, i): (usize, usize)| Poly::var(t, self.layout.index(b, i));
        let inv = |f: &Poly| pullback_by_involution(&self.host, f);
        for (ia, &ca) in coords.iter().enumerate() {
            for &cb in &coords[ia..] {
                // list the higher-ranked case first so names are canonical
                let (p, q) = if ca.0 >= cb.0 { (ca, cb) } else { (cb, ca) };
                let (fp, fq) = (func(p), func(q));
                let lhs = inv(&self.bracket(&fp, &fq));
                let rhs = self.bracket(&inv(&fp), &inv(&fq));
                out.residual(
                    format!("{{{}, {}}} {} {}", coordinate_case(p.0), coordinate_case(q.0), self.label(p), self.label(q)),
                    &(lhs + rhs),
                );
            }
        }
        out
    }
}

/// The linear Poisson structure dual to the VB-algebroid of `rep`, read
/// with `E₁ = Q`, `E₀ = Q*`.
pub fn dual_linear_poisson(rep: &TwoRep) -> Result<LinearPoissonOnD, PoissonError> {
    if rep.e0() != rep.e1() {
        return Err(PoissonError::Ranks(rep.e0(), rep.e1()));
    }
    let (n, m, nb) = (rep.n_vars(), rep.e1(), rep.rank());
    let host = InvolutiveDVB::decomposed(rep.algebroid.chart().clone(), m, nb);
    let layout = d_layout(n, m, nb);
    let t = layout.total();
    let real = realize_vb_algebroid(rep);
    let lift = |p: &Poly| p.embed(t, 0);
    // realization generator g ↦ D coordinate index
    let fiber = |g: usize| if g < nb { layout.index(3, g) } else { layout.index(2, g - nb) };
    let mut table = PolyMatrix::zeros(t, t, t);
    let k = real.generators();
    for g in 0..k {
        for h in 0..k {
            let coeffs = &real.brackets[g][h];
            let mut acc = Poly::zero(t);
            for (l, c) in coeffs.iter().enumerate() {
                if !c.is_zero() {
                    acc += &(lift(c) * Poly::var(t, fiber(l)));
                }
            }
            table.set(fiber(g), fiber(h), acc);
        }
        for (z, theta) in real.anchor[g].iter().enumerate() {
            // realization variables [x | y] are the first n + m coordinates of D
            table.set(fiber(g), z, lift(theta));
            table.set(z, fiber(g), -lift(theta));
        }
    }
    Ok(LinearPoissonOnD { host, layout, table })
}

impl PoissonStructure2 {
    /// The geometric side: the dual linear Poisson structure on `D`.
    pub fn geometrize(&self) -> Result<LinearPoissonOnD, PoissonError> {
        dual_linear_poisson(&self.rep)
    }
}

/// Reads a generator table off a linear Poisson structure on `D`.
pub fn algebraize_linear(lp: &LinearPoissonOnD) -> Result<GeneratorTable, PoissonError> {
    use Generator::*;
    let lay = &lp.layout;
    let (n, m, nb) = (lay.size(0), lay.size(1), lay.size(3));
    let sig = Signature::new(n, m, nb)?;
    let t = lay.total();
    let coord = |b: usize, i: usize| Poly::var(t, lay.index(b, i));
    let not_closed = |a: Generator, b: Generator| PoissonError::NotClosed(format!("{{{},{}}}", a.label(), b.label()));
    let base = |p: &Poly, a: Generator, b: Generator| -> Result<Poly, PoissonError> {
        p.restrict(n, 0).ok_or_else(|| not_closed(a, b))
    };
    let linear = |p: &Poly, block: usize, a: Generator, b: Generator| -> Result<Vec<Poly>, PoissonError> {
        let cs: Vec<Poly> = (0..lay.size(block)).map(|i| p.coefficient_in(n, &[lay.index(block, i)])).collect();
        let rebuilt = cs.iter().enumerate().fold(Poly::zero(t), |acc, (i, c)| acc + c.embed(t, 0) * coord(block, i));
        if rebuilt != *p {
            return Err(not_closed(a, b));
        }
        Ok(cs)
    };
    let mut entries = vec![vec![GradedFunction::zero(sig); sig.generator_count()]; sig.generator_count()];
    let mut put = |a: Generator, b: Generator, f: GradedFunction| {
        entries[sig.index(a)][sig.index(b)] = f;
    };
    for k in 0..m {
        for l in 0..m {
            let p = lp.bracket(&coord(2, k), &coord(1, l));
            put(Odd(k), Odd(l), GradedFunction::from_base(sig, base(&p, Odd(k), Odd(l))?));
        }
    }
    for i in 0..nb {
        for a in 0..n {
            let p = base(&lp.bracket(&coord(3, i), &coord(0, a)), Even(i), Base(a))?;
            put(Even(i), Base(a), GradedFunction::from_base(sig, p.clone()));
            put(Base(a), Even(i), GradedFunction::from_base(sig, -p));
        }
        for k in 0..m {
            let tau = linear(&lp.bracket(&coord(3, i), &coord(2, k)), 2, Even(i), Odd(k))?;
            let f = GradedFunction::degree_one(sig, &tau);
            put(Odd(k), Even(i), -f.clone());
            put(Even(i), Odd(k), f);
        }
        for j in 0..nb {
            let p = lp.bracket(&coord(3, i), &coord(3, j));
            let c = linear(&p.homogeneous_part(&lay_block(lay, 3), 1), 3, Even(i), Even(j))?;
            let rest = p.clone() - c.iter().enumerate().fold(Poly::zero(t), |acc, (q, cq)| acc + cq.embed(t, 0) * coord(3, q));
            // rest = Σ C_lm u_l v_m
            let cm = PolyMatrix::from_fn(m, m, n, |a, b| rest.coefficient_in(n, &[lay.index(1, a), lay.index(2, b)]));
            let rebuilt = (0..m).fold(Poly::zero(t), |acc, a| {
                (0..m).fold(acc, |acc, b| acc + cm.get(a, b).embed(t, 0) * coord(1, a) * coord(2, b))
            });
            if rebuilt != rest || !cm.is_antisymmetric() {
                return Err(not_closed(Even(i), Even(j)));
            }
            put(Even(i), Even(j), GradedFunction::linear_even(sig, &c) + GradedFunction::two_form(sig, &cm));
        }
    }
    Ok(GeneratorTable { sig, entries })
}

fn lay_block(lay: &VarLayout, b: usize) -> Vec<usize> {
    (0..lay.size(b)).map(|i| lay.index(b, i)).collect()
}

/// Which side a round trip starts from.
#[derive(Clone, Debug)]
pub enum RoundtripInstance {
    Algebraic(PoissonStructure2),
    Geometric(LinearPoissonOnD),
}

/// `𝓜∘𝒢` on the algebraic side, `𝒢∘𝓜` on the geometric side, compared
/// entry by entry.
pub fn poisson_roundtrip(inst: &RoundtripInstance) -> Result<Report, PoissonError> {
    let mut out = Report::new("poisson-roundtrip");
    match inst {
        RoundtripInstance::Algebraic(p) => {
            let back = algebraize_linear(&p.geometrize()?)?;
            let orig = p.table();
            let sig = orig.sig;
            for a in 0..sig.generator_count() {
                for b in 0..sig.generator_count() {
                    let (ga, gb) = (sig.generator(a), sig.generator(b));
                    let r = &orig.entries[a][b] - &back.entries[a][b];
                    let ok = r.is_zero();
                    out.flag(format!("table{{{},{}}}", ga.label(), gb.label()), ok, (!ok).then(|| format!("residual {r}")));
                }
            }
        }
        RoundtripInstance::Geometric(l) => {
            let rep = rep_from_bracket(&algebraize_linear(l)?)?;
            let back = dual_linear_poisson(&rep)?;
            for (a, ca) in l.coordinates().into_iter().enumerate() {
                for (b, cb) in l.coordinates().into_iter().enumerate() {
                    let r = l.table.get(a, b) - back.table.get(a, b);
                    out.residual(format!("coord{{{},{}}}", l.label(ca), l.label(cb)), &r);
                }
            }
        }
    }
    Ok(out)
}

/// Coordinate-table map for quick lookups in tests and reports.
pub fn coordinate_table(l: &LinearPoissonOnD) -> BTreeMap<(String, String), Poly> {
    let mut out = BTreeMap::new();
    for (a, ca) in l.coordinates().into_iter().enumerate() {
        for (b, cb) in l.coordinates().into_iter().enumerate() {
            let e = l.table.get(a, b);
            if !e.is_zero() {
                out.insert((l.label(ca), l.label(cb)), e.clone());
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::{self, AlgebroidKind, GenParams};
    use crate::poly::seeded_rng;
    use crate::tworep::direct_sum_double;

    fn params() -> GenParams {
        GenParams { n: 2, degree: 1, terms: 2 }
    }

    fn symplectic(seed: u64) -> PoissonStructure2 {
        let mut rng = seeded_rng(seed);
        let g = gen::random_metric(&mut rng, 2, params());
        let conn = gen::random_metric_connection(&mut rng, &g, params());
        symplectic_from_metric_bundle(&g, &conn).unwrap()
    }

    fn doubled(seed: u64) -> PoissonStructure2 {
        let mut rng = seeded_rng(seed);
        let rep = gen::random_tworep(&mut rng, AlgebroidKind::Affine, GenParams { n: 1, degree: 1, terms: 1 });
        PoissonStructure2::new(direct_sum_double(&rep)).unwrap()
    }

    #[test]
    fn symplectic_instance_satisfies_the_axioms() {
        let p = symplectic(1);
        assert!(is_symplectic(&p));
        let report = check_graded_axioms(&p);
        assert!(report.passed(), "{:?}", report.failed_names());
    }

    #[test]
    fn doubled_rep_satisfies_the_axioms() {
        let p = doubled(2);
        assert!(!is_symplectic(&p));
        let report = check_graded_axioms(&p);
        assert!(report.passed(), "{:?}", report.failed_names());
    }

    #[test]
    fn mutations_are_detected() {
        let p = symplectic(3);
        for axiom in [PoissonAxiom::PartialSymmetry, PoissonAxiom::ConnectionDuality, PoissonAxiom::CurvatureSkew] {
            let bad = p.mutate(axiom).unwrap();
            let names = check_graded_axioms(&bad).failed_names();
            assert!(!names.is_empty(), "{axiom:?}");
            if axiom == PoissonAxiom::PartialSymmetry {
                assert!(names.contains(&"skew{xi0,xi1}".to_string()), "{names:?}");
            }
            if axiom == PoissonAxiom::CurvatureSkew {
                assert!(names.iter().any(|n| n.starts_with("jacobi")), "{names:?}");
            }
        }
    }

    #[test]
    fn nabla_hom_on_two_forms() {
        let p = symplectic(4);
        let sig = p.signature();
        let w = PolyMatrix::from_fn(2, 2, 2, |a, b| match (a, b) {
            (0, 1) => Poly::var(2, 0),
            (1, 0) => -Poly::var(2, 0),
            _ => Poly::zero(2),
        });
        let rep = p.rep();
        for i in 0..2 {
            let lhs = p.bracket(&GradedFunction::eta(sig, i), &GradedFunction::two_form(sig, &w)).unwrap();
            let m = rep.m0(i);
            let direct = rep.algebroid.anchor_matrix(i, &w) + m * &w + &w * &m.transpose();
            assert_eq!(lhs, GradedFunction::two_form(sig, &direct));
        }
    }

    #[test]
    fn tables_round_trip_both_ways() {
        for p in [symplectic(5), doubled(6)] {
            let t = p.table();
            let back = rep_from_bracket(&t).unwrap();
            assert_eq!(PoissonStructure2::new_unchecked(back).unwrap().table(), t);
            assert!(poisson_roundtrip(&RoundtripInstance::Algebraic(p.clone())).unwrap().passed());
            let l = p.geometrize().unwrap();
            assert!(l.jacobi_report().passed());
            assert!(l.anti_poisson_report().passed());
            assert!(poisson_roundtrip(&RoundtripInstance::Geometric(l)).unwrap().passed());
        }
    }

    #[test]
    fn asymmetric_partial_breaks_the_involution_in_one_case() {
        let p = symplectic(7).mutate(PoissonAxiom::PartialSymmetry).unwrap();
        let names = p.geometrize().unwrap().anti_poisson_report().failed_names();
        assert!(!names.is_empty());
        assert!(names.iter().all(|n| n.starts_with("{l_tau†, pi1*l_tau}")), "{names:?}");
    }

    #[test]
    fn cap_is_enforced() {
        let p = symplectic(8).with_cap(2);
        let sig = p.signature();
        let big = GradedFunction::eta(sig, 0).mul(&GradedFunction::eta(sig, 1));
        assert!(matches!(
            p.bracket(&big, &GradedFunction::xi(sig, 0)),
            Err(PoissonError::Graded(GradedError::CapExceeded { degree: 4, cap: 2 }))
        ));
    }

    #[test]
    fn metric_vb_check_on_the_tangent_double() {
        use crate::metric::MetricDVB;
        use crate::tworep::metric_vb_check;
        let p = symplectic(9);
        let rep = p.rep().clone();
        let m = MetricDVB::lagrangian(rep.algebroid.chart().clone(), rep.e1(), rep.rank());
        let verdict = metric_vb_check(&m, &rep).unwrap();
        assert!(verdict.metric(), "{:?}", verdict.closure.failed_names());
        let bad = p.mutate(PoissonAxiom::CurvatureSkew).unwrap();
        let verdict = metric_vb_check(&m, bad.rep()).unwrap();
        assert!(!verdict.selfdual);
        let names = verdict.closure.failed_names();
        assert!(!names.is_empty() && names.iter().all(|n| n.starts_with("[σ,σ]")), "{names:?}");
        let shifted = MetricDVB::new(m.host.chart.clone(), 2, 2, vec![PolyMatrix::identity(2, 2); 2]).unwrap();
        assert!(metric_vb_check(&shifted, &rep).is_err());
    }
}
