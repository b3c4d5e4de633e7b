//! Named residual checks collected by every verification suite.

use serde::{Deserialize, Serialize};

use std::collections::BTreeMap;

use num_traits::Zero;

use crate::poly::{Poly, PolyMatrix, Ratio, SamplePlan};

/// Residual strings longer than this are cut so reports stay readable.
const RESIDUAL_CHARS: usize = 240;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<String>>,
    /// Nonzero residual entries of a failed check, kept for witness search.
    #[serde(skip)]
    pub residual_polys: Vec<Poly>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Report {
    pub suite: String,
    pub checks: Vec<Check>,
}

fn clip(s: String) -> String {
    if s.chars().count() <= RESIDUAL_CHARS {
        s
    } else {
        let head: String = s.chars().take(RESIDUAL_CHARS).collect();
        format!("{head} ...")
    }
}

impl Report {
    pub fn new(suite: impl Into<String>) -> Self {
        Report { suite: suite.into(), checks: Vec::new() }
    }

    /// Passes iff the polynomial residual is zero.
    pub fn residual(&mut self, name: impl Into<String>, r: &Poly) {
        let passed = r.is_zero();
        self.checks.push(Check {
            name: name.into(),
            passed,
            residual: (!passed).then(|| clip(r.to_string())),
            witness: None,
            residual_polys: if passed { Vec::new() } else { vec![r.clone()] },
        });
    }

    /// Passes iff every entry of the matrix residual is zero.
    pub fn matrix_residual(&mut self, name: impl Into<String>, r: &PolyMatrix) {
        let passed = r.is_zero();
        let residual = (!passed).then(|| {
            let nz: Vec<String> = (0..r.rows())
                .flat_map(|i| (0..r.cols()).map(move |j| (i, j)))
                .filter(|&(i, j)| !r.get(i, j).is_zero())
                .map(|(i, j)| format!("[{i},{j}] {}", r.get(i, j)))
                .collect();
            clip(nz.join("; "))
        });
        let residual_polys = r.entries().iter().filter(|p| !p.is_zero()).cloned().collect();
        self.checks.push(Check { name: name.into(), passed, residual, witness: None, residual_polys });
    }

    pub fn vector_residual(&mut self, name: impl Into<String>, r: &[Poly]) {
        let passed = r.iter().all(Poly::is_zero);
        let residual = (!passed).then(|| {
            let nz: Vec<String> =
                r.iter().enumerate().filter(|(_, p)| !p.is_zero()).map(|(i, p)| format!("[{i}] {p}")).collect();
            clip(nz.join("; "))
        });
        let residual_polys = r.iter().filter(|p| !p.is_zero()).cloned().collect();
        self.checks.push(Check { name: name.into(), passed, residual, witness: None, residual_polys });
    }

    pub fn flag(&mut self, name: impl Into<String>, passed: bool, detail: Option<String>) {
        self.checks.push(Check {
            name: name.into(),
            passed,
            residual: detail.map(clip),
            witness: None,
            residual_polys: Vec::new(),
        });
    }

    /// Failure located at a sample point.
    pub fn witnessed(&mut self, name: impl Into<String>, witness: Option<&[Ratio]>) {
        let passed = witness.is_none();
        self.checks.push(Check {
            name: name.into(),
            passed,
            residual: None,
            witness: witness.map(|w| w.iter().map(|r| r.to_string()).collect()),
            residual_polys: Vec::new(),
        });
    }

    /// Appends another report's checks, prefixing their names.
    pub fn absorb(&mut self, prefix: &str, other: Report) {
        for mut c in other.checks {
            c.name = format!("{prefix}{}", c.name);
            self.checks.push(c);
        }
    }

    /// Attaches to every failed polynomial check the first point of a seeded
    /// sample plan where a residual entry is nonzero.
    pub fn locate_witnesses(&mut self, seed: u64, samples: usize) {
        let mut plans: BTreeMap<usize, SamplePlan> = BTreeMap::new();
        for c in self.checks.iter_mut().filter(|c| !c.passed && c.witness.is_none()) {
            let Some(first) = c.residual_polys.first() else { continue };
            let n = first.n_vars();
            let plan = plans.entry(n).or_insert_with(|| SamplePlan::new(seed, samples, n));
            let hit = plan.points.iter().find(|pt| c.residual_polys.iter().any(|p| !p.eval(pt).is_zero()));
            if let Some(pt) = hit {
                c.witness = Some(pt.iter().map(|r| r.to_string()).collect());
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn failed_names(&self) -> Vec<String> {
        self.failures().map(|c| c.name.clone()).collect()
    }
}
