//! Seeded random instances. Every generator builds its output so that the
//! relevant axioms hold by construction; the checks then confirm it.

use std::collections::BTreeMap;

use rand::Rng;

use crate::bundles::{metric_connection, Chart, Connection, FiberMetric, LieAlgebroidModel, VBundle};
use crate::examples::{DorfmanConnection, DullBracket};
use crate::metric::{InvolutiveDVB, MetricDVB};
use crate::functors::{Degree1Atlas, GeneratorCocycle, TwoManChart};
use crate::poly::{random_poly, Poly, PolyMatrix, Ratio};
use crate::tworep::{adjoint_rep, twist, TwistTensor, TwoRep};

/// Size and degree limits shared by the generators.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GenParams {
    pub n: usize,
    /// Total degree of random coefficient polynomials.
    pub degree: u32,
    pub terms: usize,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams { n: 2, degree: 1, terms: 2 }
    }
}

/// Small Lie algebroids with known brackets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AlgebroidKind {
    Tangent,
    Abelian,
    /// `aff(1)` acting by `e0 ↦ −Euler`, `e1 ↦ ∂_0`.
    Affine,
    /// `sl(2)` acting linearly on the first two coordinates.
    Sl2,
}

pub const ALGEBROID_KINDS: [AlgebroidKind; 4] =
    [AlgebroidKind::Tangent, AlgebroidKind::Abelian, AlgebroidKind::Affine, AlgebroidKind::Sl2];

fn structure_from(r: usize, n: usize, entries: &[(usize, usize, usize, i64)]) -> Vec<Vec<Vec<Poly>>> {
    let mut c = vec![vec![vec![Poly::zero(n); r]; r]; r];
    for &(i, j, k, v) in entries {
        c[i][j][k] = Poly::from_int(n, v);
        c[j][i][k] = Poly::from_int(n, -v);
    }
    c
}

/// The algebroid of `kind` over a chart of dimension `n` in its standard frame.
pub fn standard_algebroid(kind: AlgebroidKind, n: usize) -> LieAlgebroidModel {
    let chart = Chart::new(n);
    let x = |a: usize| Poly::var(n, a);
    let z = || Poly::zero(n);
    match kind {
        AlgebroidKind::Tangent => LieAlgebroidModel::tangent(chart),
        AlgebroidKind::Abelian => LieAlgebroidModel::abelian(chart, 2),
        AlgebroidKind::Affine => {
            assert!(n >= 1, "the affine action needs a coordinate");
            let anchor = PolyMatrix::from_fn(2, n, n, |i, a| match i {
                0 => -x(a),
                _ => Poly::from_int(n, (a == 0) as i64),
            });
            LieAlgebroidModel::new(VBundle::new(chart, 2), anchor, structure_from(2, n, &[(0, 1, 1, 1)]))
                .expect("affine action algebroid")
        }
        AlgebroidKind::Sl2 => {
            assert!(n >= 2, "the sl(2) action needs two coordinates");
            // h = x∂x − y∂y, e = x∂y, f = y∂x
            let anchor = PolyMatrix::from_fn(3, n, n, |i, a| match (i, a) {
                (0, 0) => x(0),
                (0, 1) => -x(1),
                (1, 1) => x(0),
                (2, 0) => x(1),
                _ => z(),
            });
            let c = structure_from(3, n, &[(0, 1, 1, 2), (0, 2, 2, -2), (1, 2, 0, 1)]);
            LieAlgebroidModel::new(VBundle::new(chart, 3), anchor, c).expect("sl2 action algebroid")
        }
    }
}

/// Unipotent upper triangular matrix with random entries above the diagonal.
pub fn random_unipotent<R: Rng>(rng: &mut R, k: usize, p: GenParams) -> PolyMatrix {
    PolyMatrix::from_fn(k, k, p.n, |i, j| match i.cmp(&j) {
        std::cmp::Ordering::Equal => Poly::one(p.n),
        std::cmp::Ordering::Less => random_poly(rng, p.n, p.degree, p.terms),
        std::cmp::Ordering::Greater => Poly::zero(p.n),
    })
}

/// A standard algebroid seen through a random unimodular frame change, so
/// anchor and structure functions become genuinely position dependent.
pub fn random_algebroid<R: Rng>(rng: &mut R, kind: AlgebroidKind, p: GenParams) -> LieAlgebroidModel {
    let base = standard_algebroid(kind, p.n);
    let g = random_unipotent(rng, base.rank(), p);
    base.change_frame(&g).expect("unipotent frame change is invertible")
}

pub fn random_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize, p: GenParams) -> PolyMatrix {
    PolyMatrix::from_fn(rows, cols, p.n, |_, _| random_poly(rng, p.n, p.degree, p.terms))
}

pub fn random_connection<R: Rng>(rng: &mut R, rank: usize, directions: usize, p: GenParams) -> Connection {
    let m = (0..directions).map(|_| random_matrix(rng, rank, rank, p)).collect();
    Connection::new(VBundle::new(Chart::new(p.n), rank), m).expect("shapes match")
}

/// `g = UᵀDU` with `U` unipotent and `D` a diagonal of ±1, so `det g = ±1`.
pub fn random_metric<R: Rng>(rng: &mut R, rank: usize, p: GenParams) -> FiberMetric {
    let u = random_unipotent(rng, rank, p);
    let d = PolyMatrix::from_fn(rank, rank, p.n, |i, j| {
        if i != j {
            Poly::zero(p.n)
        } else {
            Poly::from_int(p.n, if rng.gen_bool(0.75) { 1 } else { -1 })
        }
    });
    let g = u.transpose() * &d * &u;
    FiberMetric::new(VBundle::new(Chart::new(p.n), rank), g).expect("unit determinant by construction")
}

pub fn random_metric_connection<R: Rng>(rng: &mut R, g: &FiberMetric, p: GenParams) -> Connection {
    let raw = random_connection(rng, g.bundle.rank, p.n, p);
    metric_connection(&raw, g).expect("metric is invertible")
}

pub fn random_twist<R: Rng>(rng: &mut R, rep: &TwoRep, p: GenParams) -> TwistTensor {
    TwistTensor { phi: (0..rep.rank()).map(|_| random_matrix(rng, rep.e0(), rep.e1(), p)).collect() }
}

/// A valid 2-term rep: the adjoint rep of a random algebroid and connection,
/// twisted by a random tensor.
pub fn random_tworep<R: Rng>(rng: &mut R, kind: AlgebroidKind, p: GenParams) -> TwoRep {
    let alg = random_algebroid(rng, kind, p);
    let conn = random_connection(rng, alg.rank(), p.n, p);
    let rep = adjoint_rep(&alg, &conn).expect("shapes match");
    let phi = random_twist(rng, &rep, p);
    twist(&rep, &phi)
}

fn random_skew<R: Rng>(rng: &mut R, m: usize, p: GenParams) -> PolyMatrix {
    let upper = random_matrix(rng, m, m, p);
    PolyMatrix::from_fn(m, m, p.n, |a, b| match a.cmp(&b) {
        std::cmp::Ordering::Less => upper.get(a, b).clone(),
        std::cmp::Ordering::Greater => -upper.get(b, a).clone(),
        std::cmp::Ordering::Equal => Poly::zero(p.n),
    })
}

/// `a + aᵀ` for a random square `a`.
pub fn random_symmetric<R: Rng>(rng: &mut R, m: usize, p: GenParams) -> PolyMatrix {
    let a = random_matrix(rng, m, m, p);
    &a + &a.transpose()
}

/// Metric DVB with random symmetric `Λ` slices.
pub fn random_metric_dvb<R: Rng>(rng: &mut R, q_rank: usize, b_rank: usize, p: GenParams) -> MetricDVB {
    let lambda = (0..b_rank).map(|_| random_symmetric(rng, q_rank, p)).collect();
    MetricDVB::new(Chart::new(p.n), q_rank, b_rank, lambda).expect("symmetric slices")
}

/// Involutive DVB with random symmetric `κ` slices.
pub fn random_involutive_dvb<R: Rng>(rng: &mut R, q_rank: usize, b_rank: usize, p: GenParams) -> InvolutiveDVB {
    let kappa = (0..b_rank).map(|_| random_symmetric(rng, q_rank, p)).collect();
    InvolutiveDVB::new(Chart::new(p.n), q_rank, b_rank, kappa).expect("symmetric slices")
}

/// Consistent chart data on `charts` pairwise overlapping charts: each chart
/// gets random data relative to a hidden reference chart and overlaps are
/// composed through it.
pub fn random_chart_data<R: Rng>(rng: &mut R, charts: usize, m: usize, n: usize, p: GenParams) -> TwoManChart {
    let local: Vec<GeneratorCocycle> = (0..charts)
        .map(|_| GeneratorCocycle {
            omega: random_unipotent(rng, m, p),
            psi: random_unipotent(rng, n, p),
            rho: (0..n).map(|_| random_skew(rng, m, p)).collect(),
        })
        .collect();
    let mut t = TwoManChart::single(Chart::new(p.n), m, n);
    t.regions = (0..charts)
        .map(|a| vec![(Ratio::from_integer((a as i64 - 1).into()), Ratio::from_integer((a as i64 + 1).into())); p.n])
        .collect();
    for a in 0..charts {
        for b in 0..charts {
            if a == b {
                continue;
            }
            if a < b {
                t.overlaps.push((a, b));
            }
            let back = local[b].inverse().expect("unipotent data is invertible");
            t.cocycles.insert((a, b), local[a].after(&back));
        }
    }
    t
}

/// Degree 1 cocycles `A_{αβ} = G_α G_β⁻¹` on pairwise overlapping charts.
pub fn random_degree1_atlas<R: Rng>(rng: &mut R, charts: usize, rank: usize, p: GenParams) -> Degree1Atlas {
    let local: Vec<PolyMatrix> = (0..charts).map(|_| random_unipotent(rng, rank, p)).collect();
    let mut cocycles = BTreeMap::new();
    for a in 0..charts {
        for b in 0..charts {
            if a != b {
                let inv = local[b].inverse().expect("unipotent");
                cocycles.insert((a, b, 0), &local[a] * &inv);
            }
        }
    }
    Degree1Atlas { chart: Chart::new(p.n), charts, rank, cocycles }
}

/// Free frame data; the axioms then hold by the extension rule.
pub fn random_dorfman<R: Rng>(rng: &mut R, n: usize, r: usize, p: GenParams) -> DorfmanConnection {
    let d = (0..n + r)
        .map(|_| (0..r).map(|_| (0..r + n).map(|_| random_poly(rng, n, p.degree, p.terms)).collect()).collect())
        .collect();
    DorfmanConnection::new(n, r, d).unwrap()
}

/// A skew dull bracket with random `E*` parts.
pub fn random_skew_dull<R: Rng>(rng: &mut R, n: usize, r: usize, p: GenParams) -> DullBracket {
    let s = n + r;
    let mut b = vec![vec![crate::poly::zero_vec(s, n); s]; s];
    for i in 0..s {
        for j in i + 1..s {
            for k in 0..r {
                let c = random_poly(rng, n, p.degree, p.terms);
                b[j][i][n + k] = -c.clone();
                b[i][j][n + k] = c;
            }
        }
    }
    DullBracket::new(n, r, b).unwrap()
}
