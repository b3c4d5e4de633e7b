//! Worked instances: Dorfman connections and dull brackets on `TM ⊕ E*`,
//! the pairing on `TE ⊕ T*E`, the basic 2-representation of a Lie
//! algebroid, the cotangent Poisson [2]-manifold of a metric bundle, and the
//! tangent double of a metric bundle.
//!
//! Index conventions over a chart of dimension `n` with `rank E = r`:
//! sections `q = (X, α)` of `TM ⊕ E*` are vectors `[X (n) | α (r)]` with frame
//! `q_I` (`∂_I` for `I < n`, `ε^{I−n}` after); sections `τ = (e, θ)` of
//! `E ⊕ T*M` are `[e (r) | θ (n)]` with frame `τ_J` (`e_J` for `J < r`,
//! `dx^{J−r}` after). The pairing is `⟨(X, α), (e, θ)⟩ = α(e) + θ(X)`.

use thiserror::Error;

use crate::bundles::{
    add_vec, connection_curvature, metric_compatibility, pair, scale_vec, sub_vec, vector_field_bracket, BundleError,
    Connection, FiberMetric, LieAlgebroidModel,
};
use crate::dvb::SplittingChange;
use crate::graded::{Generator, GradedFunction};
use crate::metric::{pullback_by_involution, MetricDVB, MetricError};
use crate::poisson::{check_graded_axioms, dual_linear_poisson, is_symplectic, symplectic_from_metric_bundle, PoissonError};
use crate::poly::{Poly, PolyMatrix, VarLayout};
use crate::report::Report;
use crate::tworep::{check_tworep, selfdual_report, TwoRep, TwoRepError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExampleError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("dull bracket of frame sections q{0}, q{1} has a tangent component")]
    AnchorCondition(usize, usize),
    #[error("Dorfman axioms fail: {0:?}")]
    Axioms(Vec<String>),
    #[error(transparent)]
    Bundle(#[from] BundleError),
    #[error(transparent)]
    Rep(#[from] TwoRepError),
    #[error(transparent)]
    Poisson(#[from] PoissonError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

fn zeros(len: usize, n: usize) -> Vec<Poly> {
    vec![Poly::zero(n); len]
}

fn unit(len: usize, n: usize, at: usize) -> Vec<Poly> {
    (0..len).map(|i| Poly::from_int(n, (i == at) as i64)).collect()
}

fn gradient(f: &Poly, n: usize) -> Vec<Poly> {
    (0..n).map(|c| f.d(c)).collect()
}

/// `⟨(X, α), (e, θ)⟩` for the layouts above.
pub fn tm_pairing(n: usize, r: usize, q: &[Poly], tau: &[Poly]) -> Poly {
    pair(&q[n..n + r], &tau[..r]) + pair(&q[..n], &tau[r..])
}

/// A Dorfman `(TM ⊕ E*)`-connection on `E ⊕ T*M`, stored by
/// `d[I][k] = Δ_{q_I}(e_k, 0)`. On the remaining frame sections the axioms
/// force `Δ_{q_I}(0, dx^c) = 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DorfmanConnection {
    pub n: usize,
    pub r: usize,
    pub d: Vec<Vec<Vec<Poly>>>,
}

impl DorfmanConnection {
    pub fn new(n: usize, r: usize, d: Vec<Vec<Vec<Poly>>>) -> Result<Self, ExampleError> {
        if d.len() != n + r
            || d.iter().any(|row| row.len() != r || row.iter().any(|v| v.len() != r + n || v.iter().any(|p| p.n_vars() != n)))
        {
            return Err(ExampleError::Shape(format!("Dorfman data must be {} x {r} x {} in {n} variables", n + r, r + n)));
        }
        let out = DorfmanConnection { n, r, d };
        let axioms = out.axiom_report();
        if !axioms.passed() {
            return Err(ExampleError::Axioms(axioms.failed_names()));
        }
        Ok(out)
    }

    /// Only the terms the axioms force.
    pub fn flat(n: usize, r: usize) -> Self {
        DorfmanConnection { n, r, d: vec![vec![zeros(r + n, n); r]; n + r] }
    }

    pub fn q_frame(&self, i: usize) -> Vec<Poly> {
        unit(self.n + self.r, self.n, i)
    }

    pub fn tau_frame(&self, j: usize) -> Vec<Poly> {
        unit(self.r + self.n, self.n, j)
    }

    pub fn pairing(&self, q: &[Poly], tau: &[Poly]) -> Poly {
        tm_pairing(self.n, self.r, q, tau)
    }

    /// `Δ_q τ`, extended from the frame data by the three axioms.
    pub fn apply(&self, q: &[Poly], tau: &[Poly]) -> Vec<Poly> {
        let (n, r) = (self.n, self.r);
        let mut out = zeros(r + n, n);
        for (i, qi) in q.iter().enumerate() {
            if qi.is_zero() {
                continue;
            }
            for (k, ak) in tau[..r].iter().enumerate() {
                if !ak.is_zero() {
                    out = add_vec(&out, &scale_vec(&(qi * ak), &self.d[i][k]));
                }
            }
            if i < n {
                let dt: Vec<Poly> = tau.iter().map(|p| p.d(i)).collect();
                out = add_vec(&out, &scale_vec(qi, &dt));
            }
            // ⟨q_I, τ⟩ (0, dq^I)
            let coupling = if i < n { &tau[r + i] } else { &tau[i - n] };
            if !coupling.is_zero() {
                for (c, g) in gradient(qi, n).into_iter().enumerate() {
                    out[r + c] += &(coupling * &g);
                }
            }
        }
        out
    }

    /// The three defining identities on frame sections and the test
    /// functions `x_a`, `x_a²`.
    pub fn axiom_report(&self) -> Report {
        let (n, r) = (self.n, self.r);
        let mut out = Report::new("dorfman-axioms");
        let tests: Vec<(String, Poly)> = (0..n)
            .flat_map(|a| [(format!("x{a}"), Poly::var(n, a)), (format!("x{a}^2"), Poly::var(n, a).pow(2))])
            .collect();
        for i in 0..n + r {
            let q = self.q_frame(i);
            let x_i: Vec<Poly> = q[..n].to_vec();
            for (fname, f) in &tests {
                let xf = pair(&x_i, &gradient(f, n));
                for j in 0..r + n {
                    let tau = self.tau_frame(j);
                    let base = self.apply(&q, &tau);
                    let mut expect = scale_vec(f, &base);
                    let c = self.pairing(&q, &tau);
                    for (k, g) in gradient(f, n).into_iter().enumerate() {
                        expect[r + k] += &(&c * &g);
                    }
                    out.vector_residual(
                        format!("function-slot(q{i},t{j},{fname})"),
                        &sub_vec(&self.apply(&scale_vec(f, &q), &tau), &expect),
                    );
                    let expect = add_vec(&scale_vec(f, &base), &scale_vec(&xf, &tau));
                    out.vector_residual(
                        format!("section-slot(q{i},t{j},{fname})"),
                        &sub_vec(&self.apply(&q, &scale_vec(f, &tau)), &expect),
                    );
                }
                let mut df = zeros(r + n, n);
                df[r..].clone_from_slice(&gradient(f, n));
                let mut expect = zeros(r + n, n);
                expect[r..].clone_from_slice(&gradient(&xf, n));
                out.vector_residual(format!("exact(q{i},{fname})"), &sub_vec(&self.apply(&q, &df), &expect));
            }
        }
        out
    }

    /// `⟨⟦q_I, q_J⟧, τ⟩ = X_I⟨q_J, τ⟩ − ⟨q_J, Δ_{q_I} τ⟩` on frames.
    pub fn to_dull(&self) -> DullBracket {
        let (n, r) = (self.n, self.r);
        let b = (0..n + r)
            .map(|i| {
                (0..n + r)
                    .map(|j| {
                        let qj = self.q_frame(j);
                        let mut v = zeros(n + r, n);
                        for k in 0..r {
                            v[n + k] = -self.pairing(&qj, &self.d[i][k]);
                        }
                        v
                    })
                    .collect()
            })
            .collect();
        DullBracket { n, r, b }
    }
}

/// A dull bracket on `TM ⊕ E*` by its values `b[I][J] = ⟦q_I, q_J⟧` on frames.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DullBracket {
    pub n: usize,
    pub r: usize,
    pub b: Vec<Vec<Vec<Poly>>>,
}

impl DullBracket {
    /// Frame brackets must have no `TM` part: coordinate fields commute.
    pub fn new(n: usize, r: usize, b: Vec<Vec<Vec<Poly>>>) -> Result<Self, ExampleError> {
        let s = n + r;
        if b.len() != s || b.iter().any(|row| row.len() != s || row.iter().any(|v| v.len() != s || v.iter().any(|p| p.n_vars() != n)))
        {
            return Err(ExampleError::Shape(format!("dull bracket data must be {s} x {s} x {s} in {n} variables")));
        }
        for (i, row) in b.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                if v[..n].iter().any(|p| !p.is_zero()) {
                    return Err(ExampleError::AnchorCondition(i, j));
                }
            }
        }
        Ok(DullBracket { n, r, b })
    }

    pub fn is_skew(&self) -> bool {
        let s = self.n + self.r;
        (0..s).all(|i| (0..s).all(|j| add_vec(&self.b[i][j], &self.b[j][i]).iter().all(Poly::is_zero)))
    }

    /// `⟦q₁, q₂⟧` for arbitrary sections, by Leibniz in both slots.
    pub fn bracket(&self, q1: &[Poly], q2: &[Poly]) -> Vec<Poly> {
        let (n, s) = (self.n, self.n + self.r);
        let mut out = zeros(s, n);
        for i in 0..s {
            for j in 0..s {
                let c = &q1[i] * &q2[j];
                if !c.is_zero() {
                    out = add_vec(&out, &scale_vec(&c, &self.b[i][j]));
                }
            }
        }
        for a in 0..n {
            out = add_vec(&out, &scale_vec(&q1[a], &q2.iter().map(|p| p.d(a)).collect::<Vec<_>>()));
            out = sub_vec(&out, &scale_vec(&q2[a], &q1.iter().map(|p| p.d(a)).collect::<Vec<_>>()));
        }
        out
    }

    /// Inverse of [`DorfmanConnection::to_dull`].
    pub fn to_dorfman(&self) -> DorfmanConnection {
        let (n, r) = (self.n, self.r);
        let d = (0..n + r)
            .map(|i| {
                (0..r)
                    .map(|k| {
                        let mut v = zeros(r + n, n);
                        for l in 0..r {
                            v[l] = -self.b[i][n + l][n + k].clone();
                        }
                        for c in 0..n {
                            v[r + c] = -self.b[i][c][n + k].clone();
                        }
                        v
                    })
                    .collect()
            })
            .collect();
        DorfmanConnection { n, r, d }
    }

    /// Adds a symmetric `E*` part to `⟦q_0, q_0⟧`; `None` when `r = 0`.
    pub fn with_symmetric_defect(&self) -> Option<DullBracket> {
        if self.r == 0 {
            return None;
        }
        let mut out = self.clone();
        let slot = &mut out.b[0][0][self.n];
        *slot += &Poly::one(self.n);
        Some(out)
    }
}

/// Forward and backward halves of the Dorfman/dull correspondence.
pub fn dorfman_to_dull(delta: &DorfmanConnection) -> DullBracket {
    delta.to_dull()
}

pub fn dull_to_dorfman(bracket: &DullBracket) -> DorfmanConnection {
    bracket.to_dorfman()
}

/// Points of `TE ⊕ T*E` over `E` as `[ẋ (n) | ẏ (r) | p_x (n) | p_y (r)]`,
/// polynomial in the layout `[x | y]`.
struct PontryaginModel<'a> {
    delta: &'a DorfmanConnection,
    layout: VarLayout,
}

impl PontryaginModel<'_> {
    fn total(&self) -> usize {
        self.layout.total()
    }

    /// The linear section `σ(q_I)` of the splitting defined by `Δ`.
    fn sigma(&self, i: usize) -> Vec<Poly> {
        let (n, r, t) = (self.delta.n, self.delta.r, self.total());
        let y = self.layout.vars(1);
        let mut out = zeros(2 * (n + r), t);
        if i < n {
            out[i] = Poly::one(t);
        } else {
            out[2 * n + r + (i - n)] = Poly::one(t);
        }
        for (k, yk) in y.iter().enumerate() {
            let dk = &self.delta.d[i][k];
            for l in 0..r {
                out[n + l] -= &(yk * self.layout.lift(&dk[l]));
            }
            for c in 0..n {
                out[n + r + c] -= &(yk * self.layout.lift(&dk[r + c]));
            }
        }
        out
    }

    /// The core section `τ_J†`.
    fn core(&self, j: usize) -> Vec<Poly> {
        let (n, r, t) = (self.delta.n, self.delta.r, self.total());
        let mut out = zeros(2 * (n + r), t);
        if j < r {
            out[n + j] = Poly::one(t);
        } else {
            out[n + r + (j - r)] = Poly::one(t);
        }
        out
    }

    /// `⟨(v₁, p₁), (v₂, p₂)⟩ = p₁(v₂) + p₂(v₁)`.
    fn pairing(&self, u: &[Poly], w: &[Poly]) -> Poly {
        let h = self.delta.n + self.delta.r;
        pair(&u[h..], &w[..h]) + pair(&w[h..], &u[..h])
    }

    fn linear_function(&self, alpha: &[Poly]) -> Poly {
        pair(&self.layout.vars(1), &alpha.iter().map(|p| self.layout.lift(p)).collect::<Vec<_>>())
    }
}

/// The three pairing identities for the splitting of `Δ`, with the dull
/// bracket read off `Δ` itself.
pub fn pontryagin_pairing_check(delta: &DorfmanConnection) -> Report {
    pontryagin_pairing_check_with(delta, &delta.to_dull())
}

/// Same identities, comparing the splitting of `Δ` with an independently
/// supplied bracket.
pub fn pontryagin_pairing_check_with(delta: &DorfmanConnection, bracket: &DullBracket) -> Report {
    let (n, r) = (delta.n, delta.r);
    let model = PontryaginModel { delta, layout: VarLayout::new(&[n, r]) };
    let mut out = Report::new("pontryagin-pairing");
    let sigmas: Vec<Vec<Poly>> = (0..n + r).map(|i| model.sigma(i)).collect();
    let cores: Vec<Vec<Poly>> = (0..r + n).map(|j| model.core(j)).collect();
    for i in 0..n + r {
        for j in i..n + r {
            let sym = add_vec(&bracket.b[i][j], &bracket.b[j][i]);
            let expect = model.linear_function(&sym[n..]);
            out.residual(format!("sigma-sigma(q{i},q{j})"), &(model.pairing(&sigmas[i], &sigmas[j]) - expect));
        }
    }
    for i in 0..n + r {
        for j in 0..r + n {
            let expect = model.layout.lift(&delta.pairing(&delta.q_frame(i), &delta.tau_frame(j)));
            out.residual(format!("sigma-core(q{i},t{j})"), &(model.pairing(&sigmas[i], &cores[j]) - expect));
        }
    }
    for i in 0..r + n {
        for j in i..r + n {
            out.residual(format!("core-core(t{i},t{j})"), &model.pairing(&cores[i], &cores[j]));
        }
    }
    out
}

/// Whether the horizontal lifts of `Δ` span an isotropic subbundle.
pub fn is_lagrangian_splitting(delta: &DorfmanConnection) -> bool {
    let (n, r) = (delta.n, delta.r);
    let model = PontryaginModel { delta, layout: VarLayout::new(&[n, r]) };
    let sigmas: Vec<Vec<Poly>> = (0..n + r).map(|i| model.sigma(i)).collect();
    (0..n + r).all(|i| (i..n + r).all(|j| model.pairing(&sigmas[i], &sigmas[j]).is_zero()))
}

/// Operators of the basic 2-representation on `A ⊕ T*M → TM ⊕ A*`.
struct Basic<'a> {
    alg: &'a LieAlgebroidModel,
    delta: &'a DorfmanConnection,
}

impl Basic<'_> {
    fn n(&self) -> usize {
        self.alg.n_vars()
    }

    fn r(&self) -> usize {
        self.alg.rank()
    }

    /// `(ρ, ρ*)`.
    fn partial(&self, tau: &[Poly]) -> Vec<Poly> {
        let (n, r) = (self.n(), self.r());
        let mut out = self.alg.anchor_of(&tau[..r]);
        out.extend(self.alg.anchor.mul_vec(&tau[r..r + n]));
        out
    }

    /// `Ω_{(X, α)} a = Δ_{(X, α)}(a, 0) − (0, d⟨α, a⟩)`.
    fn omega(&self, q: &[Poly], a: &[Poly]) -> Vec<Poly> {
        let (n, r) = (self.n(), self.r());
        let mut ta = a.to_vec();
        ta.extend(zeros(n, n));
        let mut out = self.delta.apply(q, &ta);
        for (c, g) in gradient(&pair(&q[n..], a), n).into_iter().enumerate() {
            out[r + c] -= &g;
        }
        out
    }

    /// `£_a (b, θ) = ([a, b], £_{ρ(a)} θ)`.
    fn lie_e0(&self, a: &[Poly], tau: &[Poly]) -> Vec<Poly> {
        let (n, r) = (self.n(), self.r());
        let v = self.alg.anchor_of(a);
        let theta = &tau[r..];
        let mut out = self.alg.bracket(a, &tau[..r]);
        for c in 0..n {
            let mut acc = pair(&v, &gradient(&theta[c], n));
            for (b, tb) in theta.iter().enumerate() {
                acc += &(tb * v[b].d(c));
            }
            out.push(acc);
        }
        out
    }

    /// `£_a (X, α) = ([ρ(a), X], £_a α)`.
    fn lie_e1(&self, a: &[Poly], q: &[Poly]) -> Vec<Poly> {
        let (n, r) = (self.n(), self.r());
        let v = self.alg.anchor_of(a);
        let alpha = &q[n..];
        let mut out = vector_field_bracket(&v, &q[..n]);
        for k in 0..r {
            let ak = self.alg.bracket(a, &self.alg.frame(k));
            out.push(pair(&v, &gradient(&alpha[k], n)) - pair(alpha, &ak));
        }
        out
    }

    fn nabla_e1(&self, a: &[Poly], q: &[Poly]) -> Vec<Poly> {
        add_vec(&self.partial(&self.omega(q, a)), &self.lie_e1(a, q))
    }

    fn nabla_e0(&self, a: &[Poly], tau: &[Poly]) -> Vec<Poly> {
        add_vec(&self.omega(&self.partial(tau), a), &self.lie_e0(a, tau))
    }

    fn curvature(&self, a: &[Poly], b: &[Poly], q: &[Poly]) -> Vec<Poly> {
        let ab = self.alg.bracket(a, b);
        let mut out: Vec<Poly> = self.omega(q, &ab).into_iter().map(|p| -p).collect();
        out = add_vec(&out, &self.lie_e0(a, &self.omega(q, b)));
        out = sub_vec(&out, &self.lie_e0(b, &self.omega(q, a)));
        out = add_vec(&out, &self.omega(&self.nabla_e1(b, q), a));
        sub_vec(&out, &self.omega(&self.nabla_e1(a, q), b))
    }
}

/// The 2-representation of `A` on `(ρ, ρ*): A ⊕ T*M → TM ⊕ A*` defined by a
/// Dorfman connection, with the pairing `J(b, θ) = (θ, b)` as identification.
/// Built for any `Δ`; only skew brackets give a self-dual result.
pub fn basic_tworep(alg: &LieAlgebroidModel, delta: &DorfmanConnection) -> Result<TwoRep, ExampleError> {
    let (n, r) = (alg.n_vars(), alg.rank());
    if delta.n != n || delta.r != r {
        return Err(ExampleError::Shape(format!("Δ is over rank {} / dimension {}, algebroid has {r} / {n}", delta.r, delta.n)));
    }
    let ops = Basic { alg, delta };
    let s = n + r;
    let frame = |k: usize| unit(s, n, k);
    let partial = PolyMatrix::from_columns(s, n, &(0..s).map(|k| ops.partial(&frame(k))).collect::<Vec<_>>());
    let m0: Vec<PolyMatrix> = (0..r)
        .map(|i| PolyMatrix::from_columns(s, n, &(0..s).map(|k| ops.nabla_e0(&alg.frame(i), &frame(k))).collect::<Vec<_>>()))
        .collect();
    let m1: Vec<PolyMatrix> = (0..r)
        .map(|i| PolyMatrix::from_columns(s, n, &(0..s).map(|k| ops.nabla_e1(&alg.frame(i), &frame(k))).collect::<Vec<_>>()))
        .collect();
    let mut curv = vec![vec![PolyMatrix::zeros(s, s, n); r]; r];
    for i in 0..r {
        for j in i + 1..r {
            let cols: Vec<Vec<Poly>> = (0..s).map(|c| ops.curvature(&alg.frame(i), &alg.frame(j), &frame(c))).collect();
            let rij = PolyMatrix::from_columns(s, n, &cols);
            curv[j][i] = -&rij;
            curv[i][j] = rij;
        }
    }
    // (b, θ) ↦ (θ, b) in (TM ⊕ A*)* = T*M ⊕ A
    let j = PolyMatrix::from_fn(s, s, n, |row, col| {
        let hit = if row < n { col == r + row } else { col == row - n };
        Poly::from_int(n, hit as i64)
    });
    Ok(TwoRep::new(alg.clone(), partial, m0, m1, curv, Some(j))?)
}

/// The three equivalent flags: skew bracket, Lagrangian splitting, mutually
/// dual basic connections.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SplittingFlags {
    pub skew: bool,
    pub lagrangian: bool,
    pub dual_connections: bool,
}

pub fn splitting_flags(alg: &LieAlgebroidModel, delta: &DorfmanConnection) -> Result<SplittingFlags, ExampleError> {
    let rep = basic_tworep(alg, delta)?;
    let dual = selfdual_report(&rep)?;
    Ok(SplittingFlags {
        skew: delta.to_dull().is_skew(),
        lagrangian: is_lagrangian_splitting(delta),
        dual_connections: !dual.failed_names().iter().any(|c| c.starts_with("connection-duality")),
    })
}

/// Every check for one basic instance: the rep axioms, self-duality and the
/// pairing identities.
pub fn basic_suite(alg: &LieAlgebroidModel, delta: &DorfmanConnection) -> Result<Report, ExampleError> {
    let rep = basic_tworep(alg, delta)?;
    let mut out = Report::new("basic");
    out.absorb("rep/", check_tworep(&rep));
    out.absorb("self-dual/", selfdual_report(&rep)?);
    out.absorb("pairing/", pontryagin_pairing_check(delta));
    Ok(out)
}

/// The cotangent Poisson [2]-manifold `E[-1] ⊕ T*M[-2]` of a metric bundle:
/// its generator table against metric derivations, symplecticity, and the
/// involution of the dual double.
pub fn cotangent_involution_check(g: &FiberMetric, conn: &Connection) -> Result<Report, ExampleError> {
    let p = symplectic_from_metric_bundle(g, conn)?;
    let sig = p.signature();
    let (n, e) = (sig.n, sig.odd);
    let mut out = Report::new("cotangent");
    let expect_eq = |out: &mut Report, name: String, lhs: GradedFunction, rhs: GradedFunction| {
        let r = &lhs - &rhs;
        let ok = r.is_zero();
        out.flag(name, ok, (!ok).then(|| format!("residual {r}")));
    };
    // ℓ_s = ⟨g s, ξ⟩ identifies sections of E with degree one functions
    let ell = |s: &[Poly]| GradedFunction::degree_one(sig, &g.g.mul_vec(s));
    let frame = |k: usize| unit(e, n, k);
    let x = |a: usize| GradedFunction::generator(sig, Generator::Base(a));
    let eta = |a: usize| GradedFunction::eta(sig, a);
    let br = |f: &GradedFunction, h: &GradedFunction| p.bracket(f, h);
    let zero = || GradedFunction::zero(sig);
    let curv = connection_curvature(conn);
    for k in 0..e {
        for l in k..e {
            let rhs = GradedFunction::from_base(sig, g.g.get(k, l).clone());
            expect_eq(&mut out, format!("{{e{k},e{l}}}"), br(&ell(&frame(k)), &ell(&frame(l)))?, rhs);
        }
        for a in 0..n {
            expect_eq(&mut out, format!("{{e{k},x{a}}}"), br(&ell(&frame(k)), &x(a))?, zero());
        }
    }
    for a in 0..n {
        for b in a..n {
            expect_eq(&mut out, format!("{{x{a},x{b}}}"), br(&x(a), &x(b))?, zero());
        }
    }
    for a in 0..n {
        for b in 0..n {
            let rhs = GradedFunction::from_base(sig, Poly::from_int(n, (a == b) as i64));
            expect_eq(&mut out, format!("{{d{a},x{b}}}"), br(&eta(a), &x(b))?, rhs);
        }
        for k in 0..e {
            let rhs = ell(&conn.covariant(a, &frame(k)));
            expect_eq(&mut out, format!("{{d{a},e{k}}}"), br(&eta(a), &ell(&frame(k)))?, rhs);
        }
        for b in a + 1..n {
            // [∇_a, ∇_b] is the curvature endomorphism over the zero field
            let hat = br(&eta(a), &eta(b))?;
            for c in 0..n {
                expect_eq(&mut out, format!("{{[d{a},d{b}],x{c}}}"), br(&hat, &x(c))?, zero());
            }
            for k in 0..e {
                let rhs = ell(&curv[a][b].column(k));
                expect_eq(&mut out, format!("{{[d{a},d{b}],e{k}}}"), br(&hat, &ell(&frame(k)))?, rhs);
            }
        }
    }
    out.flag("symplectic", is_symplectic(&p), None);
    out.absorb("axioms/", check_graded_axioms(&p));
    let lp = dual_linear_poisson(p.rep())?;
    let lay = &lp.layout;
    let t = lay.total();
    out.flag("involutive-decomposition", lp.host.is_involutive_decomposition(), None);
    for z in 0..t {
        let v = Poly::var(t, z);
        out.residual(format!("involution-squared(z{z})"), &(pullback_by_involution(&lp.host, &pullback_by_involution(&lp.host, &v)) - &v));
    }
    for i in 0..lay.size(3) {
        let beta = lay.var(3, i);
        out.residual(format!("core-reversal(beta{i})"), &(pullback_by_involution(&lp.host, &beta) + &beta));
    }
    out.absorb("linear/", lp.jacobi_report());
    out.absorb("anti-poisson/", lp.anti_poisson_report());
    Ok(out)
}

/// `Λ_j = ∂_j g − M_jᵀ g − g M_j`: the tangent double `TE` of a metric bundle
/// with the splitting of `∇`, core identified with `E*` through `g`.
pub fn tangent_double(g: &FiberMetric, conn: &Connection) -> Result<MetricDVB, ExampleError> {
    let n = g.bundle.chart.dim;
    if conn.bundle.rank != g.bundle.rank || conn.directions() != n {
        return Err(ExampleError::Shape("tangent double needs a TM-connection on the metric bundle".into()));
    }
    let lambda = conn.christoffel.iter().enumerate().map(|(j, m)| g.g.d(j) - m.transpose() * &g.g - &g.g * m).collect();
    Ok(MetricDVB::new(g.bundle.chart.clone(), g.bundle.rank, n, lambda)?)
}

/// The connection of the splitting moved by `change`: `M_j − g⁻¹ F_j` with
/// `F_j[k][l] = φ(e_l, ∂_j)_k`.
pub fn connection_of_splitting(g: &FiberMetric, conn: &Connection, change: &SplittingChange) -> Result<Connection, ExampleError> {
    let (m, n) = (g.bundle.rank, g.bundle.chart.dim);
    let ginv = g.g.inverse().map_err(BundleError::from)?;
    let christoffel = conn
        .christoffel
        .iter()
        .enumerate()
        .map(|(j, mj)| {
            let f = PolyMatrix::from_fn(m, m, n, |k, l| change.phi[l].get(k, j).clone());
            mj - &(&ginv * &f)
        })
        .collect();
    Ok(Connection::new(conn.bundle.clone(), christoffel)?)
}

/// Symmetrizes the tangent-double splitting of `∇` and reports whether the
/// resulting connection is metric.
pub fn symmetrized_tangent_connection(g: &FiberMetric, conn: &Connection) -> Result<(Connection, bool), ExampleError> {
    let double = tangent_double(g, conn)?;
    let change = crate::metric::symmetrize_splitting(&double);
    let out = connection_of_splitting(g, conn, &change)?;
    let ok = metric_compatibility(&out, g);
    Ok((out, ok))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundles::{metric_connection, Chart, VBundle};
    use crate::gen::{
        random_algebroid, random_connection, random_dorfman, random_metric, random_metric_connection, random_skew_dull,
        AlgebroidKind, GenParams,
    };
    use crate::metric::lambda_of_splitting;
    use crate::poly::{random_poly, seeded_rng};
    use crate::tworep::is_selfdual;

    #[test]
    fn duality_round_trips() {
        let mut rng = seeded_rng(3);
        let p = GenParams::default();
        for _ in 0..4 {
            let d = random_dorfman(&mut rng, 2, 2, p);
            assert_eq!(d.to_dull().to_dorfman(), d);
            let b = d.to_dull();
            assert_eq!(b.to_dorfman().to_dull(), b);
        }
        let flat = DorfmanConnection::flat(2, 1).to_dull();
        assert!(flat.b.iter().flatten().flatten().all(Poly::is_zero));
    }

    #[test]
    fn leibniz_extension_matches_dorfman_formula() {
        let mut rng = seeded_rng(5);
        let p = GenParams::default();
        let (n, r) = (2, 1);
        let d = random_dorfman(&mut rng, n, r, p);
        let b = d.to_dull();
        let rnd = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<Poly> { (0..n + r).map(|_| random_poly(rng, n, 2, 2)).collect() };
        for _ in 0..3 {
            let (q1, q2) = (rnd(&mut rng), rnd(&mut rng));
            let br = b.bracket(&q1, &q2);
            for j in 0..r + n {
                let tau = d.tau_frame(j);
                let x1 = &q1[..n];
                let lhs = d.pairing(&br, &tau);
                let rhs = pair(x1, &gradient(&d.pairing(&q2, &tau), n)) - d.pairing(&q2, &d.apply(&q1, &tau));
                assert_eq!(lhs, rhs);
            }
        }
    }

    #[test]
    fn pairing_identities_and_mutation() {
        let flat = DorfmanConnection::flat(1, 1);
        assert!(pontryagin_pairing_check(&flat).passed());
        let mut rng = seeded_rng(8);
        let d = random_dorfman(&mut rng, 2, 2, GenParams::default());
        assert!(pontryagin_pairing_check(&d).passed());
        let bad = d.to_dull().with_symmetric_defect().unwrap();
        let rep = pontryagin_pairing_check_with(&d, &bad);
        assert_eq!(rep.failed_names(), vec!["sigma-sigma(q0,q0)".to_string()]);
    }

    #[test]
    fn basic_rep_on_tangent_and_point() {
        let point = LieAlgebroidModel::abelian(Chart::new(0), 2);
        let rep = basic_tworep(&point, &DorfmanConnection::flat(0, 2)).unwrap();
        assert!(check_tworep(&rep).passed());
        assert!(is_selfdual(&rep).unwrap());
        let line = LieAlgebroidModel::tangent(Chart::new(1));
        assert!(basic_suite(&line, &DorfmanConnection::flat(1, 1)).unwrap().passed());
    }

    #[test]
    fn basic_rep_skew_versus_nonskew() {
        let mut rng = seeded_rng(21);
        let p = GenParams::default();
        for kind in [AlgebroidKind::Tangent, AlgebroidKind::Affine, AlgebroidKind::Sl2] {
            let alg = random_algebroid(&mut rng, kind, p);
            let delta = random_skew_dull(&mut rng, alg.n_vars(), alg.rank(), p).to_dorfman();
            let suite = basic_suite(&alg, &delta).unwrap();
            assert!(suite.passed(), "{kind:?}: {:?}", suite.failed_names());
            let flags = splitting_flags(&alg, &delta).unwrap();
            assert!(flags.skew && flags.lagrangian && flags.dual_connections);
            let bad = delta.to_dull().with_symmetric_defect().unwrap().to_dorfman();
            let rep = basic_tworep(&alg, &bad).unwrap();
            assert!(check_tworep(&rep).passed(), "{kind:?}: {:?}", check_tworep(&rep).failed_names());
            let dual = selfdual_report(&rep).unwrap();
            assert!(dual.failed_names().iter().any(|c| c.starts_with("connection-duality")), "{kind:?}");
            let flags = splitting_flags(&alg, &bad).unwrap();
            assert!(!flags.skew && !flags.lagrangian && !flags.dual_connections);
        }
    }

    #[test]
    fn cotangent_table() {
        let chart = Chart::new(1);
        let g = FiberMetric::new(VBundle::new(chart.clone(), 1), PolyMatrix::identity(1, 1)).unwrap();
        let flat = Connection::trivial(VBundle::new(chart, 1), 1);
        let rep = cotangent_involution_check(&g, &flat).unwrap();
        assert!(rep.passed(), "{:?}", rep.failed_names());
        let mut rng = seeded_rng(13);
        let p = GenParams::default();
        let g = random_metric(&mut rng, 2, p);
        let conn = random_metric_connection(&mut rng, &g, p);
        let rep = cotangent_involution_check(&g, &conn).unwrap();
        assert!(rep.passed(), "{:?}", rep.failed_names());
    }

    #[test]
    fn tangent_double_symmetrization() {
        let mut rng = seeded_rng(34);
        let p = GenParams::default();
        let g = random_metric(&mut rng, 2, p);
        let conn = random_connection(&mut rng, 2, 2, p);
        let double = tangent_double(&g, &conn).unwrap();
        let change = crate::metric::symmetrize_splitting(&double);
        assert!(lambda_of_splitting(&double, &change).iter().all(PolyMatrix::is_zero));
        let (sym, ok) = symmetrized_tangent_connection(&g, &conn).unwrap();
        assert!(ok);
        assert_eq!(sym, metric_connection(&conn, &g).unwrap());
    }
}
