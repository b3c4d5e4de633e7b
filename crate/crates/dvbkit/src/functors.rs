//! Between [2]-manifold chart data and involutive / metric double vector
//! bundle atlases, in both directions, plus morphisms and the degree 1 case.
//!
//! Chart data per ordered overlap `(α, β)`: `ω` on the degree 1 generators,
//! `ψ` on the degree 2 generators and `ρ: ℝⁿ → Λ²` mixing them. Geometrize
//! sends it to the transition `(w, v, u) ↦ ((ω^{βα})ᵀw, ψ^{αβ}v, ω^{αβ}u + ρ^{αβ}(v)(ω^{βα})ᵀw)`
//! of a metric double vector bundle with sides `Q`, `B` and core `Q*`.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::bundles::Chart;
use crate::dvb::{check_atlas, AtlasChart, DVBAtlas, DvbError, Transition};
use crate::graded::{GradedFunction, Signature};
use crate::metric::{d_layout, pullback_by_involution, InvolutiveDVB};
use crate::poly::{Poly, PolyError, PolyMatrix, Ratio, VarLayout};
use crate::report::Report;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FunctorError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("cocycle law fails at {0}")]
    Cocycle(String),
    #[error("missing overlap data for ({0},{1})")]
    Missing(usize, usize),
    #[error("{0} is not antisymmetric")]
    NotAntisymmetric(String),
    #[error("{0} does not have unit determinant")]
    NotUnimodular(String),
    #[error("morphism does not commute with the involutions: {0:?}")]
    NotEquivariant(Vec<String>),
    #[error("pullback leaves the expected form at {0}")]
    NotSplit(String),
    #[error(transparent)]
    Dvb(#[from] DvbError),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// Overlap data from chart `β` to chart `α`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneratorCocycle {
    pub omega: PolyMatrix,
    pub psi: PolyMatrix,
    /// `ρ(e_j)` for each degree 2 direction `j`, antisymmetric `m x m`.
    pub rho: Vec<PolyMatrix>,
}

impl GeneratorCocycle {
    pub fn identity(m: usize, n: usize, vars: usize) -> Self {
        GeneratorCocycle {
            omega: PolyMatrix::identity(m, vars),
            psi: PolyMatrix::identity(n, vars),
            rho: vec![PolyMatrix::zeros(m, m, vars); n],
        }
    }

    /// `ρ(v) = Σ_j v_j ρ_j`.
    pub fn rho_at(&self, v: &[Poly]) -> PolyMatrix {
        let m = self.omega.rows();
        let vars = self.omega.n_vars();
        v.iter().zip(&self.rho).fold(PolyMatrix::zeros(m, m, vars), |acc, (vj, r)| acc + r.scale_poly(vj))
    }

    /// `self ∘ first` for `self` on `(γ, α)` and `first` on `(α, β)`.
    pub fn after(&self, first: &GeneratorCocycle) -> GeneratorCocycle {
        let rho = (0..first.psi.cols())
            .map(|j| self.rho_at(&first.psi.column(j)) + &(&self.omega * &first.rho[j]) * &self.omega.transpose())
            .collect();
        GeneratorCocycle { omega: &self.omega * &first.omega, psi: &self.psi * &first.psi, rho }
    }

    /// Data of the reverse overlap.
    pub fn inverse(&self) -> Result<GeneratorCocycle, FunctorError> {
        let omega = self.omega.inverse()?;
        let psi = self.psi.inverse()?;
        // ρ'(ψ e_j) = −ω' ρ_j ω'ᵀ, then expand e_i = Σ_j (ψ e_j) ψ'_ji
        let x: Vec<PolyMatrix> = self.rho.iter().map(|r| -(&(&omega * r) * &omega.transpose())).collect();
        let m = omega.rows();
        let vars = omega.n_vars();
        let rho = (0..psi.cols())
            .map(|i| x.iter().enumerate().fold(PolyMatrix::zeros(m, m, vars), |acc, (j, xj)| acc + xj.scale_poly(psi.get(j, i))))
            .collect();
        Ok(GeneratorCocycle { omega, psi, rho })
    }
}

/// Local generators and overlap data of a [2]-manifold over a finite cover.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TwoManChart {
    pub chart: Chart,
    pub regions: Vec<Vec<(Ratio, Ratio)>>,
    /// Degree 1 generators per chart.
    pub m: usize,
    /// Degree 2 generators per chart.
    pub n: usize,
    pub overlaps: Vec<(usize, usize)>,
    /// `cocycles[(α, β)]` for both orders of every overlap.
    pub cocycles: BTreeMap<(usize, usize), GeneratorCocycle>,
}

impl TwoManChart {
    pub fn single(chart: Chart, m: usize, n: usize) -> Self {
        let region = vec![(Ratio::from_integer((-1).into()), Ratio::from_integer(1.into())); chart.dim];
        TwoManChart { chart, regions: vec![region], m, n, overlaps: Vec::new(), cocycles: BTreeMap::new() }
    }

    pub fn signature(&self) -> Signature {
        Signature { n: self.chart.dim, odd: self.m, even: self.n }
    }

    fn get(&self, to: usize, from: usize) -> Result<GeneratorCocycle, FunctorError> {
        if to == from {
            return Ok(GeneratorCocycle::identity(self.m, self.n, self.chart.dim));
        }
        self.cocycles.get(&(to, from)).cloned().ok_or(FunctorError::Missing(to, from))
    }

    fn overlapping(&self, i: usize, j: usize) -> bool {
        i == j || self.overlaps.iter().any(|&(p, q)| (p, q) == (i, j) || (q, p) == (i, j))
    }

    /// Shapes, unit determinants and antisymmetry of every `ρ_j`.
    pub fn validate(&self) -> Result<(), FunctorError> {
        let vars = self.chart.dim;
        for (&(a, b), c) in &self.cocycles {
            let tag = format!("({a},{b})");
            let shape_ok = c.omega.rows() == self.m
                && c.omega.cols() == self.m
                && c.psi.rows() == self.n
                && c.psi.cols() == self.n
                && c.rho.len() == self.n
                && c.rho.iter().all(|r| r.rows() == self.m && r.cols() == self.m && r.n_vars() == vars)
                && c.omega.n_vars() == vars
                && c.psi.n_vars() == vars;
            if !shape_ok {
                return Err(FunctorError::Shape(format!("overlap data {tag}")));
            }
            if !c.omega.has_unit_det() {
                return Err(FunctorError::NotUnimodular(format!("omega{tag}")));
            }
            if !c.psi.has_unit_det() {
                return Err(FunctorError::NotUnimodular(format!("psi{tag}")));
            }
            if let Some(j) = c.rho.iter().position(|r| !r.is_antisymmetric()) {
                return Err(FunctorError::NotAntisymmetric(format!("rho{tag}[{j}]")));
            }
        }
        for &(a, b) in &self.overlaps {
            self.get(a, b)?;
            self.get(b, a)?;
        }
        Ok(())
    }

    /// The cocycle laws on every triple of pairwise overlapping charts.
    pub fn cocycle_report(&self) -> Result<Report, FunctorError> {
        self.validate()?;
        let mut rep = Report::new("two-manifold-cocycle");
        let k = self.regions.len();
        for g in 0..k {
            for a in 0..k {
                for b in 0..k {
                    if g == a || a == b || !self.overlapping(g, a) || !self.overlapping(a, b) || !self.overlapping(g, b) {
                        continue;
                    }
                    let composed = self.get(g, a)?.after(&self.get(a, b)?);
                    let direct = self.get(g, b)?;
                    let tag = format!("({g},{a},{b})");
                    rep.matrix_residual(format!("cocycle omega {tag}"), &(&composed.omega - &direct.omega));
                    rep.matrix_residual(format!("cocycle psi {tag}"), &(&composed.psi - &direct.psi));
                    for (j, (x, y)) in composed.rho.iter().zip(&direct.rho).enumerate() {
                        rep.matrix_residual(format!("cocycle rho[{j}] {tag}"), &(x - y));
                    }
                }
            }
        }
        Ok(rep)
    }
}

impl TwoManChart {
    /// A copy whose `ρ` on the first recorded overlap, first direction, moves
    /// by an antisymmetric unit. `None` without an overlap or room for it.
    pub fn perturb_rho(&self) -> Option<TwoManChart> {
        if self.m < 2 || self.n == 0 {
            return None;
        }
        let key = *self.cocycles.keys().next()?;
        let mut out = self.clone();
        let vars = self.chart.dim;
        let rho = &mut out.cocycles.get_mut(&key)?.rho[0];
        let up = rho.get(0, 1) + &Poly::one(vars);
        let down = rho.get(1, 0) - &Poly::one(vars);
        rho.set(0, 1, up);
        rho.set(1, 0, down);
        Some(out)
    }
}

/// `A1 = (ω^{βα})ᵀ`, `A2 = ψ^{αβ}`, `A0 = ω^{αβ}`, `Ω_j = ρ_j A1`.
fn transition_of(forward: &GeneratorCocycle, backward: &GeneratorCocycle) -> Transition {
    let a1 = backward.omega.transpose();
    let omega = forward.rho.iter().map(|r| r * &a1).collect();
    Transition { a1, a2: forward.psi.clone(), a0: forward.omega.clone(), omega }
}

/// Output of geometrize.
#[derive(Clone, Debug)]
pub struct Geometrized {
    /// Sides `Q`, `B`, core `Q*`.
    pub metric_atlas: DVBAtlas,
    /// Sides `Q`, `Q`, core `B*`.
    pub involutive_atlas: DVBAtlas,
    pub report: Report,
}

/// `⟨(w, v, u), (w', v, u')⟩ = ⟨u, w'⟩ + ⟨u', w⟩` before and after a transition.
fn metric_independence(t: &Transition, m: usize, n: usize, vars: usize) -> Poly {
    let lay = VarLayout::new(&[vars, m, m, n, m, m]);
    let (w, w2, v, u, u2) = (lay.vars(1), lay.vars(2), lay.vars(3), lay.vars(4), lay.vars(5));
    let pair = |a: &[Poly], b: &[Poly]| a.iter().zip(b).fold(lay.zero(), |acc, (x, y)| acc + x * y);
    let lift = |mat: &PolyMatrix| lay.lift_matrix(mat);
    let a1 = lift(&t.a1);
    let a0 = lift(&t.a0);
    let omega: Vec<PolyMatrix> = t.omega.iter().map(lift).collect();
    let om = v.iter().zip(&omega).fold(PolyMatrix::zeros(m, m, lay.total()), |acc, (vj, o)| acc + o.scale_poly(vj));
    let add = |a: Vec<Poly>, b: Vec<Poly>| a.into_iter().zip(b).map(|(x, y)| x + y).collect::<Vec<_>>();
    let tw = a1.mul_vec(&w);
    let tw2 = a1.mul_vec(&w2);
    let tu = add(a0.mul_vec(&u), om.mul_vec(&w));
    let tu2 = add(a0.mul_vec(&u2), om.mul_vec(&w2));
    let before = pair(&u, &w2) + pair(&u2, &w);
    let after = pair(&tu, &tw2) + pair(&tu2, &tw);
    after - before
}

/// Builds both atlases from chart data and verifies the atlas laws, the
/// chart independence of the metric and compatibility with the involution.
pub fn geometrize(t: &TwoManChart) -> Result<Geometrized, FunctorError> {
    let cocycles = t.cocycle_report()?;
    if let Some(bad) = cocycles.failures().next() {
        return Err(FunctorError::Cocycle(bad.name.clone()));
    }
    let vars = t.chart.dim;
    let charts: Vec<AtlasChart> = t.regions.iter().map(|r| AtlasChart { region: r.clone(), ranks: [t.m, t.n, t.m] }).collect();
    let mut transitions = BTreeMap::new();
    for &(a, b) in &t.overlaps {
        let (f, r) = (t.get(a, b)?, t.get(b, a)?);
        transitions.insert((a, b), transition_of(&f, &r));
        transitions.insert((b, a), transition_of(&r, &f));
    }
    let metric_atlas = DVBAtlas { chart: t.chart.clone(), charts, overlaps: t.overlaps.clone(), transitions };
    let involutive_atlas = metric_atlas.dual_over_first()?;
    let mut report = Report::new("geometrize");
    report.absorb("metric-atlas", check_atlas(&metric_atlas)?);
    report.absorb("involutive-atlas", check_atlas(&involutive_atlas)?);
    for (&(a, b), tr) in &metric_atlas.transitions {
        report.residual(format!("metric-independence({a},{b})"), &metric_independence(tr, t.m, t.n, vars));
    }
    for (&(a, b), tr) in &involutive_atlas.transitions {
        // β-part of Ω(w, u) must be antisymmetric in (w, u)
        for c in 0..t.n {
            let bilinear = PolyMatrix::from_fn(t.m, t.m, vars, |k, i| tr.omega[k].get(c, i).clone());
            report.matrix_residual(format!("involution({a},{b})[{c}]"), &(&bilinear + &bilinear.transpose()));
        }
        report.flag(
            format!("involution sides({a},{b})"),
            tr.a1 == tr.a2,
            (tr.a1 != tr.a2).then(|| "the two side transitions differ".to_string()),
        );
    }
    Ok(Geometrized { metric_atlas, involutive_atlas, report })
}

/// Reads chart data back from an involutive atlas (sides `Q`, `Q`).
pub fn algebraize(involutive: &DVBAtlas) -> Result<TwoManChart, FunctorError> {
    let metric = involutive.dual_over_first()?;
    let first = metric.charts.first().ok_or_else(|| FunctorError::Shape("empty atlas".into()))?;
    let [m, n, core] = first.ranks;
    if core != m || metric.charts.iter().any(|c| c.ranks != first.ranks) {
        return Err(FunctorError::Shape("charts must have ranks (m, m, n) with equal sides".into()));
    }
    let mut cocycles = BTreeMap::new();
    for (&(a, b), tr) in &metric.transitions {
        let a1_inv = tr.a1.inverse()?;
        let rho = tr.omega.iter().map(|o| o * &a1_inv).collect();
        cocycles.insert((a, b), GeneratorCocycle { omega: tr.a0.clone(), psi: tr.a2.clone(), rho });
    }
    let out = TwoManChart {
        chart: metric.chart.clone(),
        regions: metric.charts.iter().map(|c| c.region.clone()).collect(),
        m,
        n,
        overlaps: metric.overlaps.clone(),
        cocycles,
    };
    out.validate()?;
    Ok(out)
}

#[derive(Clone, Debug)]
pub enum RoundtripInput {
    Chart(TwoManChart),
    Atlas(DVBAtlas),
}

/// Algebraize∘geometrize on chart data, geometrize∘algebraize on atlases.
pub fn roundtrip_check(input: &RoundtripInput) -> Result<Report, FunctorError> {
    let mut rep = Report::new("functor-roundtrip");
    match input {
        RoundtripInput::Chart(t) => {
            let back = algebraize(&geometrize(t)?.involutive_atlas)?;
            rep.flag("ranks", (back.m, back.n) == (t.m, t.n), None);
            for (k, c) in &t.cocycles {
                let ok = back.cocycles.get(k) == Some(c);
                rep.flag(format!("cocycle({},{})", k.0, k.1), ok, None);
            }
            rep.flag("overlaps", back.cocycles.len() == t.cocycles.len(), None);
        }
        RoundtripInput::Atlas(a) => {
            let back = geometrize(&algebraize(a)?)?.involutive_atlas;
            for (k, tr) in &a.transitions {
                let ok = back.transitions.get(k) == Some(tr);
                rep.flag(format!("transition({},{})", k.0, k.1), ok, None);
            }
            rep.flag("overlaps", back.transitions.len() == a.transitions.len(), None);
        }
    }
    Ok(rep)
}

/// Split morphism of [2]-manifolds, recorded as a pullback on generators:
/// `x'_a ↦ base_map[a]`, `ξ'_k ↦ Σ_l mu1[k][l] ξ_l`,
/// `η'_i ↦ Σ_j mu2[i][j] η_j + Σ_{l<p} mu12[i]_lp ξ_l ξ_p`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TwoManMorphism {
    pub source: Signature,
    pub target: Signature,
    pub base_map: Vec<Poly>,
    pub mu1: PolyMatrix,
    pub mu2: PolyMatrix,
    pub mu12: Vec<PolyMatrix>,
}

impl TwoManMorphism {
    pub fn identity(sig: Signature) -> Self {
        TwoManMorphism {
            source: sig,
            target: sig,
            base_map: (0..sig.n).map(|a| Poly::var(sig.n, a)).collect(),
            mu1: PolyMatrix::identity(sig.odd, sig.n),
            mu2: PolyMatrix::identity(sig.even, sig.n),
            mu12: vec![PolyMatrix::zeros(sig.odd, sig.odd, sig.n); sig.even],
        }
    }

    /// Pullback of a function on the target.
    pub fn pullback(&self, f: &GradedFunction) -> GradedFunction {
        let s = self.source;
        let odd: Vec<GradedFunction> = (0..self.target.odd).map(|k| GradedFunction::degree_one(s, &self.mu1.row(k))).collect();
        let even: Vec<GradedFunction> = (0..self.target.even)
            .map(|i| GradedFunction::linear_even(s, &self.mu2.row(i)) + GradedFunction::two_form(s, &self.mu12[i]))
            .collect();
        f.substitute(s, &self.base_map, &odd, &even)
    }

    /// `next ∘ self`, i.e. the morphism whose pullback is `self⋆ ∘ next⋆`.
    pub fn then(&self, next: &TwoManMorphism) -> TwoManMorphism {
        let n = self.source.n;
        let at = |m: &PolyMatrix| m.compose(&self.base_map, n);
        let mu1 = &at(&next.mu1) * &self.mu1;
        let mu2 = &at(&next.mu2) * &self.mu2;
        let mu12 = (0..next.target.even)
            .map(|i| {
                let row = at(&next.mu2).row(i);
                let from_even = row
                    .iter()
                    .zip(&self.mu12)
                    .fold(PolyMatrix::zeros(self.source.odd, self.source.odd, n), |acc, (c, w)| acc + w.scale_poly(c));
                from_even + &(&self.mu1.transpose() * &at(&next.mu12[i])) * &self.mu1
            })
            .collect();
        let base_map = next.base_map.iter().map(|p| p.compose(&self.base_map, n)).collect();
        TwoManMorphism { source: self.source, target: next.target, base_map, mu1, mu2, mu12 }
    }
}

/// The automorphism induced by a change of splitting `φ: Λ²Q → B*`, one
/// antisymmetric matrix per degree 2 generator.
pub fn split_change_morphism(sig: Signature, phi: &[PolyMatrix]) -> Result<TwoManMorphism, FunctorError> {
    if phi.len() != sig.even || phi.iter().any(|p| p.rows() != sig.odd || p.cols() != sig.odd) {
        return Err(FunctorError::Shape("one m x m matrix per degree 2 generator".into()));
    }
    if let Some(i) = phi.iter().position(|p| !p.is_antisymmetric()) {
        return Err(FunctorError::NotAntisymmetric(format!("phi[{i}]")));
    }
    Ok(TwoManMorphism { mu12: phi.to_vec(), ..TwoManMorphism::identity(sig) })
}

/// Decomposed morphism `D → D'` of involutive double vector bundles:
/// `(x, u, v, β) ↦ (ω₀(x), ω_Q u, ω_Q v, ω_{B*} β + W(u, v))`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InvolutiveMorphism {
    pub source: InvolutiveDVB,
    pub target: InvolutiveDVB,
    pub base_map: Vec<Poly>,
    pub omega_q: PolyMatrix,
    pub omega_core: PolyMatrix,
    /// `W_i(u, v) = uᵀ W_i v` for each target core direction `i`.
    pub w: Vec<PolyMatrix>,
}

impl InvolutiveMorphism {
    fn layouts(&self) -> (VarLayout, VarLayout) {
        let s = &self.source;
        let t = &self.target;
        (d_layout(s.n_vars(), s.q_rank(), s.b_rank()), d_layout(t.n_vars(), t.q_rank(), t.b_rank()))
    }

    /// Pullback of a function on `D'`.
    pub fn pullback(&self, f: &Poly) -> Poly {
        let (sl, tl) = self.layouts();
        let total = sl.total();
        let lift = |p: &Poly| sl.lift(p);
        let (u, v, beta) = (sl.vars(1), sl.vars(2), sl.vars(3));
        let oq = sl.lift_matrix(&self.omega_q);
        let oc = sl.lift_matrix(&self.omega_core);
        let mut subs: Vec<Poly> = self.base_map.iter().map(lift).collect();
        subs.extend(oq.mul_vec(&u));
        subs.extend(oq.mul_vec(&v));
        for (i, core) in oc.mul_vec(&beta).into_iter().enumerate() {
            let wi = sl.lift_matrix(&self.w[i]);
            let bil = u.iter().zip(wi.mul_vec(&v)).fold(sl.zero(), |acc, (a, b)| acc + a * b);
            subs.push(core + bil);
        }
        debug_assert_eq!(subs.len(), tl.total());
        f.compose(&subs, total)
    }

    /// `Ω∘ℐ = ℐ'∘Ω` tested on coordinate functions of `D'`.
    pub fn equivariance_report(&self) -> Report {
        let (_, tl) = self.layouts();
        let mut rep = Report::new("involution-equivariance");
        for z in 0..tl.total() {
            let f = Poly::var(tl.total(), z);
            let lhs = self.pullback(&pullback_by_involution(&self.target, &f));
            let rhs = pullback_by_involution(&self.source, &self.pullback(&f));
            rep.residual(format!("coordinate z{z}"), &(lhs - rhs));
        }
        rep
    }

    /// `self` followed by `next`.
    pub fn then(&self, next: &InvolutiveMorphism) -> InvolutiveMorphism {
        let n = self.source.n_vars();
        let at = |m: &PolyMatrix| m.compose(&self.base_map, n);
        let oc_next = at(&next.omega_core);
        let w = (0..next.target.b_rank())
            .map(|i| {
                let from_core = oc_next
                    .row(i)
                    .iter()
                    .zip(&self.w)
                    .fold(PolyMatrix::zeros(self.source.q_rank(), self.source.q_rank(), n), |acc, (c, wj)| acc + wj.scale_poly(c));
                from_core + &(&self.omega_q.transpose() * &at(&next.w[i])) * &self.omega_q
            })
            .collect();
        InvolutiveMorphism {
            source: self.source.clone(),
            target: next.target.clone(),
            base_map: next.base_map.iter().map(|p| p.compose(&self.base_map, n)).collect(),
            omega_q: &at(&next.omega_q) * &self.omega_q,
            omega_core: &oc_next * &self.omega_core,
            w,
        }
    }
}

fn signature_of(d: &InvolutiveDVB) -> Signature {
    Signature { n: d.n_vars(), odd: d.q_rank(), even: d.b_rank() }
}

/// Pulls the `ψ`-images of generators back through `Ω` and reads off the
/// split morphism; also checks that wedges of core sections go to wedges.
pub fn morphism_bridge(om: &InvolutiveMorphism) -> Result<(TwoManMorphism, Report), FunctorError> {
    let eq = om.equivariance_report();
    if !eq.passed() {
        return Err(FunctorError::NotEquivariant(eq.failed_names()));
    }
    let (sl, tl) = om.layouts();
    let (n, m, nb) = (sl.size(0), sl.size(1), sl.size(3));
    let (mt, nbt) = (tl.size(1), tl.size(3));
    let total = sl.total();
    let coeff = |p: &Poly, vars: &[usize]| p.coefficient_in(n, vars);
    let not_split = |what: String| FunctorError::NotSplit(what);
    let mut mu1 = PolyMatrix::zeros(mt, m, n);
    for k in 0..mt {
        // ψ(τ†) = ½⟨τ, v − u⟩: the pulled back v-part fixes the row
        let f = om.pullback(&(tl.var(2, k) - tl.var(1, k)));
        for l in 0..m {
            mu1.set(k, l, coeff(&f, &[sl.index(2, l)]));
        }
        let rebuilt = (0..m).fold(sl.zero(), |acc, l| acc + sl.lift(mu1.get(k, l)) * (sl.var(2, l) - sl.var(1, l)));
        if rebuilt != f {
            return Err(not_split(format!("xi{k}")));
        }
    }
    let mut mu2 = PolyMatrix::zeros(nbt, nb, n);
    let mut mu12 = Vec::with_capacity(nbt);
    for i in 0..nbt {
        let f = om.pullback(&tl.var(3, i));
        for j in 0..nb {
            mu2.set(i, j, coeff(&f, &[sl.index(3, j)]));
        }
        let w = PolyMatrix::from_fn(m, m, n, |a, b| coeff(&f, &[sl.index(1, a), sl.index(2, b)]));
        let rebuilt = (0..nb).fold(sl.zero(), |acc, j| acc + sl.lift(mu2.get(i, j)) * sl.var(3, j))
            + (0..m).fold(sl.zero(), |acc, a| {
                (0..m).fold(acc, |acc, b| acc + sl.lift(w.get(a, b)) * sl.var(1, a) * sl.var(2, b))
            });
        if rebuilt != f || !w.is_antisymmetric() {
            return Err(not_split(format!("eta{i}")));
        }
        mu12.push(w);
    }
    let mut rep = Report::new("morphism-bridge");
    rep.absorb("equivariance", eq);
    // ω⋆(τ_k ∧ τ_l)~ against (ω_Q⋆τ_k ∧ ω_Q⋆τ_l)~
    for k in 0..mt {
        for l in k + 1..mt {
            let wedge = tl.var(1, k) * tl.var(2, l) - tl.var(1, l) * tl.var(2, k);
            let pulled = om.pullback(&wedge);
            let (rk, rl) = (mu1.row(k), mu1.row(l));
            let form = PolyMatrix::from_fn(m, m, n, |a, b| &rk[a] * &rl[b] - &rl[a] * &rk[b]);
            let expected = (0..m).fold(Poly::zero(total), |acc, a| {
                (0..m).fold(acc, |acc, b| acc + sl.lift(form.get(a, b)) * sl.var(1, a) * sl.var(2, b))
            });
            rep.residual(format!("wedge({k},{l})"), &(pulled - expected));
        }
    }
    let morphism = TwoManMorphism {
        source: signature_of(&om.source),
        target: signature_of(&om.target),
        base_map: om.base_map.clone(),
        mu1,
        mu2,
        mu12,
    };
    Ok((morphism, rep))
}

/// The inverse of the bridge on data.
pub fn morphism_unbridge(mu: &TwoManMorphism) -> Result<InvolutiveMorphism, FunctorError> {
    if let Some(i) = mu.mu12.iter().position(|p| !p.is_antisymmetric()) {
        return Err(FunctorError::NotAntisymmetric(format!("mu12[{i}]")));
    }
    let chart = |s: Signature| InvolutiveDVB::decomposed(Chart::new(s.n), s.odd, s.even);
    Ok(InvolutiveMorphism {
        source: chart(mu.source),
        target: chart(mu.target),
        base_map: mu.base_map.clone(),
        omega_q: mu.mu1.clone(),
        omega_core: mu.mu2.clone(),
        w: mu.mu12.clone(),
    })
}

/// Transition matrices of a vector bundle over a finite cover, keyed by
/// `(to, from, component)` so overlaps may be disconnected.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Degree1Atlas {
    pub chart: Chart,
    pub charts: usize,
    pub rank: usize,
    pub cocycles: BTreeMap<(usize, usize, usize), PolyMatrix>,
}

/// The bundle built from generator cocycles: fiber coordinates transform by
/// `A^{-T}` when the generators transform by `A`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Degree1Geometrized {
    pub bundle_transitions: BTreeMap<(usize, usize, usize), PolyMatrix>,
    pub report: Report,
}

fn degree1_laws(rank: usize, vars: usize, cocycles: &BTreeMap<(usize, usize, usize), PolyMatrix>, rep: &mut Report) {
    for (&(a, b, c), m) in cocycles {
        rep.flag(format!("unit-det({a},{b},{c})"), m.has_unit_det(), None);
        match cocycles.get(&(b, a, c)) {
            Some(back) => rep.matrix_residual(format!("inverse({a},{b},{c})"), &(&(m * back) - &PolyMatrix::identity(rank, vars))),
            None => rep.flag(format!("inverse({a},{b},{c})"), false, Some("reverse overlap missing".into())),
        }
    }
    for (&(g, a, c), ga) in cocycles {
        for (&(a2, b, c2), ab) in cocycles {
            if a2 != a || c2 != c || b == g {
                continue;
            }
            if let Some(gb) = cocycles.get(&(g, b, c)) {
                rep.matrix_residual(format!("cocycle({g},{a},{b})[{c}]"), &(&(ga * ab) - gb));
            }
        }
    }
}

pub fn degree1_geometrize(at: &Degree1Atlas) -> Result<Degree1Geometrized, FunctorError> {
    let vars = at.chart.dim;
    let mut report = Report::new("degree1");
    degree1_laws(at.rank, vars, &at.cocycles, &mut report);
    if let Some(bad) = report.failures().next() {
        return Err(FunctorError::Cocycle(bad.name.clone()));
    }
    let mut bundle_transitions = BTreeMap::new();
    for (k, a) in &at.cocycles {
        bundle_transitions.insert(*k, a.inverse()?.transpose());
    }
    let mut check = Report::new("degree1-bundle");
    degree1_laws(at.rank, vars, &bundle_transitions, &mut check);
    report.absorb("bundle", check);
    for (k, g) in &bundle_transitions {
        let back = g.inverse()?.transpose();
        report.flag(format!("roundtrip({},{},{})", k.0, k.1, k.2), Some(&back) == at.cocycles.get(k), None);
    }
    Ok(Degree1Geometrized { bundle_transitions, report })
}

/// Two charts on a circle whose overlap has two components, glued by `+1`
/// and `−1`.
pub fn mobius_atlas() -> Degree1Atlas {
    let one = PolyMatrix::identity(1, 0);
    let minus = -&one;
    let mut cocycles = BTreeMap::new();
    cocycles.insert((0, 1, 0), one.clone());
    cocycles.insert((1, 0, 0), one);
    cocycles.insert((0, 1, 1), minus.clone());
    cocycles.insert((1, 0, 1), minus);
    Degree1Atlas { chart: Chart::new(0), charts: 2, rank: 1, cocycles }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::{random_chart_data, GenParams};
    use crate::poly::seeded_rng;

    #[test]
    fn single_chart_is_trivial() {
        let t = TwoManChart::single(Chart::new(1), 1, 1);
        let g = geometrize(&t).unwrap();
        assert!(g.report.passed());
        assert!(g.metric_atlas.transitions.is_empty());
        assert!(roundtrip_check(&RoundtripInput::Chart(t)).unwrap().passed());
    }

    #[test]
    fn random_three_chart_data_round_trips() {
        let mut rng = seeded_rng(21);
        let t = random_chart_data(&mut rng, 3, 2, 2, GenParams { n: 1, degree: 1, terms: 2 });
        assert!(t.cocycle_report().unwrap().passed());
        let g = geometrize(&t).unwrap();
        assert!(g.report.passed(), "{:?}", g.report.failed_names());
        assert!(roundtrip_check(&RoundtripInput::Chart(t)).unwrap().passed());
        assert!(roundtrip_check(&RoundtripInput::Atlas(g.involutive_atlas.clone())).unwrap().passed());
        assert_eq!(g.metric_atlas.dual_over_first().unwrap().dual_over_first().unwrap(), g.metric_atlas);
    }

    #[test]
    fn broken_cocycle_names_the_triple() {
        let mut rng = seeded_rng(22);
        let mut t = random_chart_data(&mut rng, 3, 2, 1, GenParams { n: 1, degree: 1, terms: 2 });
        let c = t.cocycles.get_mut(&(0, 2)).unwrap();
        let p = c.rho[0].get(0, 1) + Poly::one(1);
        c.rho[0].set(0, 1, p.clone());
        c.rho[0].set(1, 0, -p);
        match geometrize(&t) {
            Err(FunctorError::Cocycle(name)) => assert!(name.starts_with("cocycle rho[0]"), "{name}"),
            other => panic!("expected a cocycle failure, got {other:?}"),
        }
    }

    #[test]
    fn split_changes_compose_to_identity() {
        let sig = Signature { n: 1, odd: 2, even: 1 };
        let x = Poly::var(1, 0);
        let phi = vec![PolyMatrix::from_fn(2, 2, 1, |a, b| match (a, b) {
            (0, 1) => x.clone(),
            (1, 0) => -x.clone(),
            _ => Poly::zero(1),
        })];
        let neg: Vec<PolyMatrix> = phi.iter().map(|p| -p).collect();
        let f = split_change_morphism(sig, &phi).unwrap();
        let g = split_change_morphism(sig, &neg).unwrap();
        assert_eq!(f.then(&g), TwoManMorphism::identity(sig));
        // η ↦ η + x ξ0 ξ1, and products follow the algebra law
        let prod = GradedFunction::xi(sig, 0).mul(&GradedFunction::eta(sig, 0));
        let expected = GradedFunction::xi(sig, 0).mul(&f.pullback(&GradedFunction::eta(sig, 0)));
        assert_eq!(f.pullback(&prod), expected);
    }

    #[test]
    fn bridge_is_functorial_and_invertible() {
        let d = InvolutiveDVB::decomposed(Chart::new(1), 2, 1);
        let x = Poly::var(1, 0);
        let c = |v: i64| Poly::from_int(1, v);
        let skew = |p: Poly| PolyMatrix::from_fn(2, 2, 1, |a, b| match (a, b) {
            (0, 1) => p.clone(),
            (1, 0) => -p.clone(),
            _ => Poly::zero(1),
        });
        let f = InvolutiveMorphism {
            source: d.clone(),
            target: d.clone(),
            base_map: vec![x.clone() + c(1)],
            omega_q: PolyMatrix::from_fn(2, 2, 1, |a, b| match (a, b) {
                (0, 1) => x.clone(),
                (a, b) if a == b => c(1),
                _ => Poly::zero(1),
            }),
            omega_core: PolyMatrix::from_fn(1, 1, 1, |_, _| c(2)),
            w: vec![skew(x.clone())],
        };
        let g = InvolutiveMorphism { base_map: vec![x.clone() * x.clone()], w: vec![skew(c(3))], ..f.clone() };
        let (bf, rf) = morphism_bridge(&f).unwrap();
        assert!(rf.passed(), "{:?}", rf.failed_names());
        let (bg, _) = morphism_bridge(&g).unwrap();
        let (bfg, _) = morphism_bridge(&f.then(&g)).unwrap();
        assert_eq!(bf.then(&bg), bfg);
        assert_eq!(morphism_unbridge(&bf).unwrap(), f);
        let sig = bf.source;
        for gen in 0..sig.generator_count() {
            let h = GradedFunction::generator(sig, sig.generator(gen));
            assert_eq!(bfg.pullback(&h), bf.pullback(&bg.pullback(&h)));
        }
        let asym = InvolutiveMorphism {
            w: vec![PolyMatrix::from_fn(2, 2, 1, |a, b| if (a, b) == (0, 1) { c(1) } else { Poly::zero(1) })],
            ..f
        };
        assert!(matches!(morphism_bridge(&asym), Err(FunctorError::NotEquivariant(_))));
    }

    #[test]
    fn mobius_round_trip() {
        let g = degree1_geometrize(&mobius_atlas()).unwrap();
        assert!(g.report.passed());
        assert_eq!(g.bundle_transitions[&(0, 1, 1)], -PolyMatrix::identity(1, 0));
    }
}
