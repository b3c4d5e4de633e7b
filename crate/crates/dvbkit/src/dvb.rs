//! Decomposed double vector bundles `A ×_M B ×_M C`, their linear sections,
//! changes of splitting, duals, the canonical pairing and Pradines atlases.
//!
//! Coordinates of a point are `(m, a, b, c)`. Addition over `A` keeps `a` and
//! adds `b` and `c`; addition over `B` keeps `b` and adds `a` and `c`.
//!
//! A change of splitting `φ ∈ Γ(A*⊗B*⊗C)` is stored as one `rank C x rank B`
//! matrix per frame section of `A`. It moves the horizontal lift to
//! `Σ' = Σ + φ̃`, so the core coordinate of a point read in the new
//! decomposition is `c' = c − φ(a, b)`.

use std::collections::BTreeMap;

use num_traits::Zero;
use thiserror::Error;

use crate::bundles::Chart;
use crate::poly::{Poly, PolyError, PolyMatrix, Ratio};
use crate::report::Report;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DvbError {
    #[error("projection mismatch: {0}")]
    ProjectionMismatch(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("missing transition for declared overlap ({0},{1})")]
    MissingTransition(usize, usize),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// Which side bundle a dual or a linear section refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    A,
    B,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecomposedDVB {
    pub chart: Chart,
    pub side_a: usize,
    pub side_b: usize,
    pub core: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DvbPoint {
    pub m: Vec<Ratio>,
    pub a: Vec<Ratio>,
    pub b: Vec<Ratio>,
    pub c: Vec<Ratio>,
}

fn add_r(x: &[Ratio], y: &[Ratio]) -> Vec<Ratio> {
    x.iter().zip(y).map(|(p, q)| p + q).collect()
}

fn dot(x: &[Ratio], y: &[Ratio]) -> Ratio {
    x.iter().zip(y).fold(Ratio::zero(), |acc, (p, q)| acc + p * q)
}

impl DecomposedDVB {
    pub fn new(chart: Chart, side_a: usize, side_b: usize, core: usize) -> Self {
        DecomposedDVB { chart, side_a, side_b, core }
    }

    pub fn ranks(&self) -> (usize, usize, usize) {
        (self.side_a, self.side_b, self.core)
    }

    pub fn add_over_a(&self, p: &DvbPoint, q: &DvbPoint) -> Result<DvbPoint, DvbError> {
        if p.m != q.m || p.a != q.a {
            return Err(DvbError::ProjectionMismatch("addition over A needs equal A-projections".into()));
        }
        Ok(DvbPoint { m: p.m.clone(), a: p.a.clone(), b: add_r(&p.b, &q.b), c: add_r(&p.c, &q.c) })
    }

    pub fn add_over_b(&self, p: &DvbPoint, q: &DvbPoint) -> Result<DvbPoint, DvbError> {
        if p.m != q.m || p.b != q.b {
            return Err(DvbError::ProjectionMismatch("addition over B needs equal B-projections".into()));
        }
        Ok(DvbPoint { m: p.m.clone(), a: add_r(&p.a, &q.a), b: p.b.clone(), c: add_r(&p.c, &q.c) })
    }

    /// Core element `c̄` over `m`, in decomposed coordinates `(0, 0, c)`.
    pub fn core_point(&self, m: &[Ratio], c: &[Ratio]) -> DvbPoint {
        DvbPoint {
            m: m.to_vec(),
            a: vec![Ratio::zero(); self.side_a],
            b: vec![Ratio::zero(); self.side_b],
            c: c.to_vec(),
        }
    }

    /// Dual over a side. Over `A`: sides `(A, C*)`, core `B*`. Over `B`:
    /// sides `(C*, B)`, core `A*`.
    pub fn dualize(&self, over: Side) -> DecomposedDVB {
        match over {
            Side::A => DecomposedDVB::new(self.chart.clone(), self.side_a, self.core, self.side_b),
            Side::B => DecomposedDVB::new(self.chart.clone(), self.core, self.side_b, self.side_a),
        }
    }

    /// Constant matrix `P` with `⟨Φ, d⟩ = φᵀ P δ`, where `φ` lists the fiber
    /// coordinates of the dual element (its other side, then its core) and `δ`
    /// those of `d` (other side, then core).
    pub fn pairing_matrix(&self, over: Side) -> PolyMatrix {
        let (other, core) = match over {
            Side::A => (self.side_b, self.core),
            Side::B => (self.side_a, self.core),
        };
        let n = self.chart.dim;
        let size = other + core;
        // dual other side is C*, pairing with the core; dual core pairs with the other side
        PolyMatrix::from_fn(size, size, n, |i, j| {
            let hit = (i < core && j == other + i) || (i >= core && j == i - core);
            if hit {
                Poly::one(n)
            } else {
                Poly::zero(n)
            }
        })
    }
}

/// Pairing `⟨Φ, d⟩_A = γ·c + β'·b` of `Φ = (a, γ, β') ∈ D*_A` with `d`.
pub fn pair_over_a(phi: &DvbPoint, d: &DvbPoint) -> Result<Ratio, DvbError> {
    if phi.m != d.m || phi.a != d.a {
        return Err(DvbError::ProjectionMismatch("element of D*_A and point of D over different A-points".into()));
    }
    Ok(dot(&phi.b, &d.c) + dot(&phi.c, &d.b))
}

/// Pairing `⟨Ψ, d⟩_B = γ·c + α'·a` of `Ψ = (γ, b, α') ∈ D*_B` with `d`.
pub fn pair_over_b(psi: &DvbPoint, d: &DvbPoint) -> Result<Ratio, DvbError> {
    if psi.m != d.m || psi.b != d.b {
        return Err(DvbError::ProjectionMismatch("element of D*_B and point of D over different B-points".into()));
    }
    Ok(dot(&psi.a, &d.c) + dot(&psi.c, &d.a))
}

/// `⟨Φ, d⟩_A − ⟨Ψ, d⟩_B` for `Φ`, `Ψ` over the same `γ ∈ C*`.
pub fn canonical_pair(phi: &DvbPoint, psi: &DvbPoint, d: &DvbPoint) -> Result<Ratio, DvbError> {
    if phi.b != psi.a || phi.m != psi.m {
        return Err(DvbError::ProjectionMismatch("Φ and Ψ must project to the same element of C*".into()));
    }
    Ok(pair_over_a(phi, d)? - pair_over_b(psi, d)?)
}

/// Linear section of `D → B` (over `a ∈ Γ(A)`, `core_map: B → C`) or of
/// `D → A` (over `b ∈ Γ(B)`, `core_map: A → C`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearSection {
    pub over: Side,
    pub base: Vec<Poly>,
    pub core_map: PolyMatrix,
}

impl LinearSection {
    /// Value at the fiber point `v` (an element of `B` for sections over `B`,
    /// of `A` for sections over `A`) above `m`.
    pub fn eval(&self, m: &[Ratio], v: &[Ratio]) -> DvbPoint {
        let base: Vec<Ratio> = self.base.iter().map(|p| p.eval(m)).collect();
        let psi = self.core_map.eval(m);
        let c: Vec<Ratio> = psi.iter().map(|row| dot(row, v)).collect();
        match self.over {
            Side::B => DvbPoint { m: m.to_vec(), a: base, b: v.to_vec(), c },
            Side::A => DvbPoint { m: m.to_vec(), a: v.to_vec(), b: base, c },
        }
    }
}

/// `φ ∈ Γ(A*⊗B*⊗C)`, one `rank C x rank B` matrix per frame section of `A`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplittingChange {
    pub phi: Vec<PolyMatrix>,
}

impl SplittingChange {
    pub fn zero(dvb: &DecomposedDVB) -> Self {
        SplittingChange { phi: vec![PolyMatrix::zeros(dvb.core, dvb.side_b, dvb.chart.dim); dvb.side_a] }
    }

    pub fn neg(&self) -> Self {
        SplittingChange { phi: self.phi.iter().map(|m| -m).collect() }
    }

    /// `φ(a)` as a map `B → C`.
    pub fn at_a(&self, a: &[Poly]) -> PolyMatrix {
        let first = &self.phi[0];
        let mut acc = PolyMatrix::zeros(first.rows(), first.cols(), first.n_vars());
        for (ai, m) in a.iter().zip(&self.phi) {
            acc = acc + m.scale_poly(ai);
        }
        acc
    }

    /// `φ(·, b)` as a map `A → C`.
    pub fn at_b(&self, b: &[Poly]) -> PolyMatrix {
        let cols: Vec<Vec<Poly>> = self.phi.iter().map(|m| m.mul_vec(b)).collect();
        let rows = self.phi[0].rows();
        PolyMatrix::from_columns(rows, self.phi[0].n_vars(), &cols)
    }

    pub fn eval_point(&self, m: &[Ratio], a: &[Ratio], b: &[Ratio]) -> Vec<Ratio> {
        let mut out = vec![Ratio::zero(); self.phi[0].rows()];
        for (ai, mat) in a.iter().zip(&self.phi) {
            for (k, row) in mat.eval(m).iter().enumerate() {
                out[k] += ai * dot(row, b);
            }
        }
        out
    }
}

/// Reads a linear section in the decomposition shifted by `φ`.
pub fn apply_change_of_splitting(s: &LinearSection, change: &SplittingChange) -> LinearSection {
    let shift = match s.over {
        Side::B => change.at_a(&s.base),
        Side::A => change.at_b(&s.base),
    };
    LinearSection { over: s.over, base: s.base.clone(), core_map: &s.core_map - shift }
}

/// Coordinates of a point in the decomposition shifted by `φ`.
pub fn change_point(d: &DvbPoint, change: &SplittingChange) -> DvbPoint {
    let shift = change.eval_point(&d.m, &d.a, &d.b);
    DvbPoint { c: d.c.iter().zip(&shift).map(|(c, s)| c - s).collect(), ..d.clone() }
}

/// Horizontal lift `σ_A(a)` of the splitting shifted by `φ`, written in the
/// original decomposition.
pub fn lift_a(a: &[Poly], change: &SplittingChange) -> LinearSection {
    LinearSection { over: Side::B, base: a.to_vec(), core_map: change.at_a(a) }
}

/// Horizontal lift `σ_B(b)` of the splitting shifted by `φ`.
pub fn lift_b(b: &[Poly], change: &SplittingChange) -> LinearSection {
    LinearSection { over: Side::A, base: b.to_vec(), core_map: change.at_b(b) }
}

/// Model ranks `(m1, m2, m0)` of a chart: first side, second side, core.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AtlasChart {
    pub region: Vec<(Ratio, Ratio)>,
    pub ranks: [usize; 3],
}

/// Transition `(v1, v2, v0) ↦ (A1 v1, A2 v2, A0 v0 + Ω(v1, v2))` with
/// `Ω(v1, v2) = Σ_j (v2)_j Ω_j v1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transition {
    pub a1: PolyMatrix,
    pub a2: PolyMatrix,
    pub a0: PolyMatrix,
    pub omega: Vec<PolyMatrix>,
}

impl Transition {
    pub fn identity(ranks: [usize; 3], n_vars: usize) -> Self {
        let [m1, m2, m0] = ranks;
        Transition {
            a1: PolyMatrix::identity(m1, n_vars),
            a2: PolyMatrix::identity(m2, n_vars),
            a0: PolyMatrix::identity(m0, n_vars),
            omega: vec![PolyMatrix::zeros(m0, m1, n_vars); m2],
        }
    }

    /// `Ω(·, v2)` as a map `V1 → V0`.
    pub fn omega_at(&self, v2: &[Poly]) -> PolyMatrix {
        let mut acc = PolyMatrix::zeros(self.a0.rows(), self.a1.cols(), self.a1.n_vars());
        for (vj, m) in v2.iter().zip(&self.omega) {
            acc = acc + m.scale_poly(vj);
        }
        acc
    }

    /// `self ∘ first`: apply `first`, then `self`.
    pub fn after(&self, first: &Transition) -> Transition {
        let m2 = first.a2.cols();
        let omega = (0..m2)
            .map(|j| {
                let col = first.a2.column(j);
                &self.a0 * &first.omega[j] + &self.omega_at(&col) * &first.a1
            })
            .collect();
        Transition { a1: &self.a1 * &first.a1, a2: &self.a2 * &first.a2, a0: &self.a0 * &first.a0, omega }
    }

    /// Transition of the dual over the first side: sides `(V1, V0*)`, core `V2*`.
    pub fn dual_over_first(&self) -> Result<Transition, DvbError> {
        let a0_it = self.a0.inverse()?.transpose();
        let a2_it = self.a2.inverse()?.transpose();
        let (m1, m2, m0) = (self.a1.cols(), self.a2.cols(), self.a0.cols());
        let n = self.a1.n_vars();
        let omega = (0..m0)
            .map(|k| {
                let z = a0_it.column(k);
                // row j is zᵀ Ω_j
                let rows = PolyMatrix::from_fn(m2, m1, n, |j, i| {
                    let col = self.omega[j].column(i);
                    z.iter().zip(&col).fold(Poly::zero(n), |acc, (x, y)| acc + x * y)
                });
                -(&a2_it * &rows)
            })
            .collect();
        Ok(Transition { a1: self.a1.clone(), a2: a0_it, a0: a2_it, omega })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DVBAtlas {
    pub chart: Chart,
    pub charts: Vec<AtlasChart>,
    /// Declared overlaps as unordered pairs of chart indices.
    pub overlaps: Vec<(usize, usize)>,
    /// `transitions[(α, β)]` maps chart `β` coordinates to chart `α` ones.
    pub transitions: BTreeMap<(usize, usize), Transition>,
}

impl DVBAtlas {
    fn overlapping(&self, i: usize, j: usize) -> bool {
        i == j || self.overlaps.iter().any(|&(p, q)| (p, q) == (i, j) || (q, p) == (i, j))
    }

    fn transition(&self, to: usize, from: usize) -> Result<Transition, DvbError> {
        if to == from {
            return Ok(Transition::identity(self.charts[to].ranks, self.chart.dim));
        }
        self.transitions.get(&(to, from)).cloned().ok_or(DvbError::MissingTransition(to, from))
    }

    pub fn dual_over_first(&self) -> Result<DVBAtlas, DvbError> {
        let charts = self
            .charts
            .iter()
            .map(|c| AtlasChart { region: c.region.clone(), ranks: [c.ranks[0], c.ranks[2], c.ranks[1]] })
            .collect();
        let mut transitions = BTreeMap::new();
        for (k, t) in &self.transitions {
            transitions.insert(*k, t.dual_over_first()?);
        }
        Ok(DVBAtlas { chart: self.chart.clone(), charts, overlaps: self.overlaps.clone(), transitions })
    }
}

fn cmp_into(rep: &mut Report, name: String, lhs: &PolyMatrix, rhs: &PolyMatrix) {
    rep.matrix_residual(name, &(lhs - rhs));
}

/// Verifies the composition law on every ordered triple of pairwise
/// overlapping charts, including the inverse triples `(β, α, β)`, and unit
/// determinants of all transitions.
pub fn check_atlas(at: &DVBAtlas) -> Result<Report, DvbError> {
    let mut rep = Report::new("dvb-atlas");
    for &(p, q) in &at.overlaps {
        at.transition(p, q)?;
        at.transition(q, p)?;
    }
    for ((to, from), t) in &at.transitions {
        for (label, m) in [("A1", &t.a1), ("A2", &t.a2), ("A0", &t.a0)] {
            rep.flag(format!("unit-det {label}({to},{from})"), m.has_unit_det(), None);
        }
    }
    let k = at.charts.len();
    for g in 0..k {
        for a in 0..k {
            for b in 0..k {
                if g == a || a == b || !at.overlapping(g, a) || !at.overlapping(a, b) || !at.overlapping(g, b) {
                    continue;
                }
                let composed = at.transition(g, a)?.after(&at.transition(a, b)?);
                let direct = at.transition(g, b)?;
                let tag = format!("({g},{a},{b})");
                cmp_into(&mut rep, format!("cocycle A1 {tag}"), &composed.a1, &direct.a1);
                cmp_into(&mut rep, format!("cocycle A2 {tag}"), &composed.a2, &direct.a2);
                cmp_into(&mut rep, format!("cocycle A0 {tag}"), &composed.a0, &direct.a0);
                for (j, (x, y)) in composed.omega.iter().zip(&direct.omega).enumerate() {
                    cmp_into(&mut rep, format!("cocycle Omega[{j}] {tag}"), x, y);
                }
            }
        }
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::int;

    fn r(v: &[i64]) -> Vec<Ratio> {
        v.iter().map(|&x| int(x)).collect()
    }

    #[test]
    fn dual_ranks() {
        let d = DecomposedDVB::new(Chart::new(1), 1, 2, 3);
        assert_eq!(d.dualize(Side::A).ranks(), (1, 3, 2));
        assert_eq!(d.dualize(Side::B).ranks(), (3, 2, 1));
        assert_eq!(d.dualize(Side::A).dualize(Side::A), d);
    }

    #[test]
    fn canonical_pair_ignores_core_shift() {
        let phi = DvbPoint { m: vec![], a: r(&[2]), b: r(&[5]), c: r(&[3]) };
        let psi = DvbPoint { m: vec![], a: r(&[5]), b: r(&[7]), c: r(&[-1]) };
        let d1 = DvbPoint { m: vec![], a: r(&[2]), b: r(&[7]), c: r(&[0]) };
        let d2 = DvbPoint { c: r(&[11]), ..d1.clone() };
        let v1 = canonical_pair(&phi, &psi, &d1).unwrap();
        assert_eq!(v1, canonical_pair(&phi, &psi, &d2).unwrap());
        assert_eq!(v1, int(3 * 7 + 2));
        let wrong = DvbPoint { a: r(&[4]), ..psi };
        assert!(canonical_pair(&phi, &wrong, &d1).is_err());
    }
}
