//! Exact multivariate polynomials over the rationals, matrices of them, and a
//! seeded evaluation oracle.
//!
//! A [`Poly`] lives in a fixed number of variables `x0..x{n-1}`; every
//! arithmetic operation asserts that both operands agree on that number.
//! Equality is structural on the normal form (no zero coefficients stored).

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Arbitrary precision rational; always kept in lowest terms with a positive
/// denominator.
pub type Ratio = BigRational;

/// Exponent vector of a monomial, one entry per variable.
pub type Exponent = Vec<u32>;

/// Term count above which [`agree`] falls back to the sampling oracle.
pub const SYMBOLIC_TERM_LIMIT: usize = 100_000;

pub fn rat(num: i64, den: i64) -> Ratio {
    Ratio::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(n: i64) -> Ratio {
    Ratio::from_integer(BigInt::from(n))
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PolyError {
    #[error("coordinate index {index} out of range for {n_vars} variables")]
    IndexOutOfRange { index: usize, n_vars: usize },
    #[error("exponent vector of length {got}, expected {expected}")]
    ExponentLength { got: usize, expected: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("matrix is not invertible over the polynomial ring")]
    NotInvertible,
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Poly {
    n_vars: usize,
    terms: BTreeMap<Exponent, Ratio>,
}

impl Poly {
    pub fn zero(n_vars: usize) -> Self {
        Poly { n_vars, terms: BTreeMap::new() }
    }

    pub fn one(n_vars: usize) -> Self {
        Self::constant(n_vars, Ratio::one())
    }

    pub fn constant(n_vars: usize, c: Ratio) -> Self {
        let mut p = Self::zero(n_vars);
        if !c.is_zero() {
            p.terms.insert(vec![0; n_vars], c);
        }
        p
    }

    pub fn from_int(n_vars: usize, c: i64) -> Self {
        Self::constant(n_vars, int(c))
    }

    /// The coordinate function `x_i`.
    pub fn var(n_vars: usize, i: usize) -> Self {
        assert!(i < n_vars, "variable x{i} out of range for {n_vars} variables");
        let mut e = vec![0; n_vars];
        e[i] = 1;
        Poly { n_vars, terms: BTreeMap::from([(e, Ratio::one())]) }
    }

    pub fn monomial(exponent: Exponent, c: Ratio) -> Self {
        let mut p = Self::zero(exponent.len());
        if !c.is_zero() {
            p.terms.insert(exponent, c);
        }
        p
    }

    /// Builds a polynomial from possibly repeated, possibly zero terms.
    pub fn from_terms<I>(n_vars: usize, terms: I) -> Result<Self, PolyError>
    where
        I: IntoIterator<Item = (Exponent, Ratio)>,
    {
        let mut p = Self::zero(n_vars);
        for (e, c) in terms {
            if e.len() != n_vars {
                return Err(PolyError::ExponentLength { got: e.len(), expected: n_vars });
            }
            p.add_term(e, c);
        }
        Ok(p)
    }

    fn add_term(&mut self, e: Exponent, c: Ratio) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(e) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponent, &Ratio)> {
        self.terms.iter()
    }

    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty() || (self.terms.len() == 1 && self.terms.keys().all(|e| e.iter().all(|&k| k == 0)))
    }

    /// Value of a constant polynomial, `None` otherwise.
    pub fn as_constant(&self) -> Option<Ratio> {
        if self.is_constant() {
            Some(self.terms.values().next().cloned().unwrap_or_else(Ratio::zero))
        } else {
            None
        }
    }

    /// Total degree; the zero polynomial has degree 0.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    pub fn scale(&self, c: &Ratio) -> Self {
        if c.is_zero() {
            return Self::zero(self.n_vars);
        }
        Poly { n_vars: self.n_vars, terms: self.terms.iter().map(|(e, v)| (e.clone(), v * c)).collect() }
    }

    pub fn scale_int(&self, c: i64) -> Self {
        self.scale(&int(c))
    }

    /// Exact partial derivative with respect to `x_i`.
    pub fn diff(&self, i: usize) -> Result<Self, PolyError> {
        if i >= self.n_vars {
            return Err(PolyError::IndexOutOfRange { index: i, n_vars: self.n_vars });
        }
        let mut out = Self::zero(self.n_vars);
        for (e, c) in &self.terms {
            if e[i] == 0 {
                continue;
            }
            let mut e2 = e.clone();
            e2[i] -= 1;
            out.add_term(e2, c * int(e[i] as i64));
        }
        Ok(out)
    }

    /// Derivative for indices already known to be in range.
    pub(crate) fn d(&self, i: usize) -> Self {
        self.diff(i).expect("derivative index checked by caller")
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Self::one(self.n_vars);
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    pub fn eval(&self, point: &[Ratio]) -> Ratio {
        assert_eq!(point.len(), self.n_vars, "evaluation point has wrong length");
        let mut acc = Ratio::zero();
        for (e, c) in &self.terms {
            let mut t = c.clone();
            for (x, &k) in point.iter().zip(e) {
                for _ in 0..k {
                    t *= x;
                }
            }
            acc += t;
        }
        acc
    }

    pub fn eval_f64(&self, point: &[f64]) -> f64 {
        assert_eq!(point.len(), self.n_vars, "evaluation point has wrong length");
        self.terms
            .iter()
            .map(|(e, c)| {
                let c = c.to_f64().unwrap_or(f64::NAN);
                e.iter().zip(point).fold(c, |acc, (&k, &x)| acc * x.powi(k as i32))
            })
            .sum()
    }

    /// Substitutes `x_i := subs[i]`; the result lives in `target_vars` variables.
    pub fn compose(&self, subs: &[Poly], target_vars: usize) -> Self {
        assert_eq!(subs.len(), self.n_vars, "one substitution per variable");
        assert!(subs.iter().all(|s| s.n_vars == target_vars), "substitutions must share the target variables");
        let mut powers: Vec<Vec<Poly>> = subs.iter().map(|s| vec![Poly::one(target_vars), s.clone()]).collect();
        let mut out = Self::zero(target_vars);
        for (e, c) in &self.terms {
            let mut t = Poly::constant(target_vars, c.clone());
            for (i, &k) in e.iter().enumerate() {
                let k = k as usize;
                while powers[i].len() <= k {
                    let next = &powers[i][powers[i].len() - 1] * &subs[i];
                    powers[i].push(next);
                }
                t = &t * &powers[i][k];
            }
            out += &t;
        }
        out
    }

    /// Re-reads the polynomial in `total` variables, variable `i` becoming `i + offset`.
    pub fn embed(&self, total: usize, offset: usize) -> Self {
        assert!(offset + self.n_vars <= total, "embedding does not fit");
        let terms = self
            .terms
            .iter()
            .map(|(e, c)| {
                let mut e2 = vec![0; total];
                e2[offset..offset + self.n_vars].copy_from_slice(e);
                (e2, c.clone())
            })
            .collect();
        Poly { n_vars: total, terms }
    }

    /// Inverse of [`Poly::embed`]; fails when a variable outside the window occurs.
    pub fn restrict(&self, n_vars: usize, offset: usize) -> Option<Self> {
        let mut out = Self::zero(n_vars);
        for (e, c) in &self.terms {
            let outside = e.iter().enumerate().any(|(i, &k)| k > 0 && (i < offset || i >= offset + n_vars));
            if outside {
                return None;
            }
            out.add_term(e[offset..offset + n_vars].to_vec(), c.clone());
        }
        Some(out)
    }

    /// Coefficient of a given monomial.
    pub fn coeff(&self, e: &[u32]) -> Ratio {
        self.terms.get(e).cloned().unwrap_or_else(Ratio::zero)
    }

    /// Splits off the part of given degree in variables `window` (as a set of
    /// indices), keeping the full variable count.
    pub fn homogeneous_part(&self, window: &[usize], degree: u32) -> Self {
        let mut out = Self::zero(self.n_vars);
        for (e, c) in &self.terms {
            let d: u32 = window.iter().map(|&i| e[i]).sum();
            if d == degree {
                out.add_term(e.clone(), c.clone());
            }
        }
        out
    }

    /// Sum of the terms of degree exactly one in `x_i`, with `x_i` removed.
    pub fn linear_coeff(&self, i: usize) -> Self {
        let mut out = Self::zero(self.n_vars);
        for (e, c) in &self.terms {
            if e[i] == 1 {
                let mut e2 = e.clone();
                e2[i] = 0;
                out.add_term(e2, c.clone());
            }
        }
        out
    }
}

impl Poly {
    /// Coefficient (a polynomial in the first `base_vars` variables) of the
    /// monomial formed by the variables listed in `mono`, counted with
    /// multiplicity, among terms with no other variables beyond the base.
    pub fn coefficient_in(&self, base_vars: usize, mono: &[usize]) -> Poly {
        let mut want = vec![0u32; self.n_vars];
        for &i in mono {
            want[i] += 1;
        }
        let mut out = Poly::zero(base_vars);
        for (e, c) in &self.terms {
            if e[base_vars..] == want[base_vars..] {
                out.add_term(e[..base_vars].to_vec(), c.clone());
            }
        }
        out
    }

    /// True when no variable at index `>= base_vars` occurs.
    pub fn only_base(&self, base_vars: usize) -> bool {
        self.terms.keys().all(|e| e[base_vars..].iter().all(|&k| k == 0))
    }
}

/// Consecutive blocks of variables in one polynomial ring, e.g. base
/// coordinates followed by several fiber coordinate blocks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VarLayout {
    sizes: Vec<usize>,
    offsets: Vec<usize>,
    total: usize,
}

impl VarLayout {
    pub fn new(sizes: &[usize]) -> Self {
        let mut offsets = Vec::with_capacity(sizes.len());
        let mut acc = 0;
        for &s in sizes {
            offsets.push(acc);
            acc += s;
        }
        VarLayout { sizes: sizes.to_vec(), offsets, total: acc }
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn offset(&self, block: usize) -> usize {
        self.offsets[block]
    }

    pub fn size(&self, block: usize) -> usize {
        self.sizes[block]
    }

    /// Global index of variable `i` of `block`.
    pub fn index(&self, block: usize, i: usize) -> usize {
        assert!(i < self.sizes[block], "variable {i} outside block {block}");
        self.offsets[block] + i
    }

    pub fn var(&self, block: usize, i: usize) -> Poly {
        Poly::var(self.total, self.index(block, i))
    }

    pub fn vars(&self, block: usize) -> Vec<Poly> {
        (0..self.sizes[block]).map(|i| self.var(block, i)).collect()
    }

    /// Lifts a polynomial in the variables of block 0.
    pub fn lift(&self, p: &Poly) -> Poly {
        p.embed(self.total, 0)
    }

    pub fn lift_matrix(&self, m: &PolyMatrix) -> PolyMatrix {
        m.embed(self.total, 0)
    }

    pub fn zero(&self) -> Poly {
        Poly::zero(self.total)
    }
}

macro_rules! forward_binop {
    ($tr:ident, $method:ident, $imp:ident) => {
        impl $tr<Poly> for Poly {
            type Output = Poly;
            fn $method(self, rhs: Poly) -> Poly {
                $imp(&self, &rhs)
            }
        }
        impl $tr<&Poly> for Poly {
            type Output = Poly;
            fn $method(self, rhs: &Poly) -> Poly {
                $imp(&self, rhs)
            }
        }
        impl $tr<Poly> for &Poly {
            type Output = Poly;
            fn $method(self, rhs: Poly) -> Poly {
                $imp(self, &rhs)
            }
        }
        impl $tr<&Poly> for &Poly {
            type Output = Poly;
            fn $method(self, rhs: &Poly) -> Poly {
                $imp(self, rhs)
            }
        }
    };
}

fn poly_add(a: &Poly, b: &Poly) -> Poly {
    assert_eq!(a.n_vars, b.n_vars, "adding polynomials in different variable counts");
    let mut out = a.clone();
    for (e, c) in &b.terms {
        out.add_term(e.clone(), c.clone());
    }
    out
}

fn poly_sub(a: &Poly, b: &Poly) -> Poly {
    assert_eq!(a.n_vars, b.n_vars, "subtracting polynomials in different variable counts");
    let mut out = a.clone();
    for (e, c) in &b.terms {
        out.add_term(e.clone(), -c.clone());
    }
    out
}

fn poly_mul(a: &Poly, b: &Poly) -> Poly {
    assert_eq!(a.n_vars, b.n_vars, "multiplying polynomials in different variable counts");
    let mut out = Poly::zero(a.n_vars);
    for (ea, ca) in &a.terms {
        for (eb, cb) in &b.terms {
            let e: Exponent = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
            out.add_term(e, ca * cb);
        }
    }
    out
}

forward_binop!(Add, add, poly_add);
forward_binop!(Sub, sub, poly_sub);
forward_binop!(Mul, mul, poly_mul);

impl AddAssign<&Poly> for Poly {
    fn add_assign(&mut self, rhs: &Poly) {
        assert_eq!(self.n_vars, rhs.n_vars, "adding polynomials in different variable counts");
        for (e, c) in &rhs.terms {
            self.add_term(e.clone(), c.clone());
        }
    }
}

impl SubAssign<&Poly> for Poly {
    fn sub_assign(&mut self, rhs: &Poly) {
        assert_eq!(self.n_vars, rhs.n_vars, "subtracting polynomials in different variable counts");
        for (e, c) in &rhs.terms {
            self.add_term(e.clone(), -c.clone());
        }
    }
}

impl Neg for Poly {
    type Output = Poly;
    fn neg(mut self) -> Poly {
        for c in self.terms.values_mut() {
            *c = -c.clone();
        }
        self
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        -self.clone()
    }
}

fn fmt_ratio(c: &Ratio) -> String {
    if c.is_integer() {
        c.numer().to_string()
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        // highest degree first reads more naturally
        let mut first = true;
        for (e, c) in self.terms.iter().rev() {
            let mono: Vec<String> = e
                .iter()
                .enumerate()
                .filter(|(_, &k)| k > 0)
                .map(|(i, &k)| if k == 1 { format!("x{i}") } else { format!("x{i}^{k}") })
                .collect();
            let neg = c.is_negative();
            let abs = c.abs();
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, "{}", if neg { " - " } else { " + " })?;
            }
            first = false;
            if mono.is_empty() {
                write!(f, "{}", fmt_ratio(&abs))?;
            } else if abs.is_one() {
                write!(f, "{}", mono.join("*"))?;
            } else {
                write!(f, "{}*{}", fmt_ratio(&abs), mono.join("*"))?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Poly[{}]({})", self.n_vars, self)
    }
}

/// Dense row-major matrix of polynomials sharing one variable count.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PolyMatrix {
    rows: usize,
    cols: usize,
    n_vars: usize,
    entries: Vec<Poly>,
}

impl PolyMatrix {
    pub fn zeros(rows: usize, cols: usize, n_vars: usize) -> Self {
        PolyMatrix { rows, cols, n_vars, entries: vec![Poly::zero(n_vars); rows * cols] }
    }

    pub fn identity(k: usize, n_vars: usize) -> Self {
        Self::from_fn(k, k, n_vars, |i, j| if i == j { Poly::one(n_vars) } else { Poly::zero(n_vars) })
    }

    pub fn from_fn(rows: usize, cols: usize, n_vars: usize, mut f: impl FnMut(usize, usize) -> Poly) -> Self {
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                let p = f(i, j);
                assert_eq!(p.n_vars(), n_vars, "matrix entry in wrong variable count");
                entries.push(p);
            }
        }
        PolyMatrix { rows, cols, n_vars, entries }
    }

    pub fn from_entries(rows: usize, cols: usize, n_vars: usize, entries: Vec<Poly>) -> Result<Self, PolyError> {
        if entries.len() != rows * cols {
            return Err(PolyError::Shape(format!("{} entries for a {rows}x{cols} matrix", entries.len())));
        }
        if let Some(p) = entries.iter().find(|p| p.n_vars() != n_vars) {
            return Err(PolyError::Shape(format!("entry in {} variables, expected {n_vars}", p.n_vars())));
        }
        Ok(PolyMatrix { rows, cols, n_vars, entries })
    }

    /// Constant matrix from integer rows.
    pub fn from_ints(n_vars: usize, rows: &[&[i64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        Self::from_fn(r, c, n_vars, |i, j| Poly::from_int(n_vars, rows[i][j]))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn entries(&self) -> &[Poly] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> &Poly {
        assert!(i < self.rows && j < self.cols, "matrix index ({i},{j}) out of range");
        &self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, p: Poly) {
        assert!(i < self.rows && j < self.cols, "matrix index ({i},{j}) out of range");
        assert_eq!(p.n_vars(), self.n_vars, "matrix entry in wrong variable count");
        self.entries[i * self.cols + j] = p;
    }

    pub fn column(&self, j: usize) -> Vec<Poly> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn row(&self, i: usize) -> Vec<Poly> {
        (0..self.cols).map(|j| self.get(i, j).clone()).collect()
    }

    pub fn from_columns(rows: usize, n_vars: usize, columns: &[Vec<Poly>]) -> Self {
        Self::from_fn(rows, columns.len(), n_vars, |i, j| columns[j][i].clone())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, self.n_vars, |i, j| self.get(j, i).clone())
    }

    pub fn map(&self, mut f: impl FnMut(&Poly) -> Poly) -> Self {
        let entries: Vec<Poly> = self.entries.iter().map(&mut f).collect();
        let n_vars = entries.first().map_or(self.n_vars, |p| p.n_vars());
        PolyMatrix { rows: self.rows, cols: self.cols, n_vars, entries }
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(Poly::is_zero)
    }

    pub fn is_symmetric(&self) -> bool {
        self.is_square() && *self == self.transpose()
    }

    pub fn is_antisymmetric(&self) -> bool {
        self.is_square() && *self == -self.transpose()
    }

    pub fn is_constant(&self) -> bool {
        self.entries.iter().all(Poly::is_constant)
    }

    pub fn diff(&self, i: usize) -> Result<Self, PolyError> {
        if i >= self.n_vars {
            return Err(PolyError::IndexOutOfRange { index: i, n_vars: self.n_vars });
        }
        Ok(self.map(|p| p.d(i)))
    }

    pub(crate) fn d(&self, i: usize) -> Self {
        self.map(|p| p.d(i))
    }

    pub fn scale(&self, c: &Ratio) -> Self {
        self.map(|p| p.scale(c))
    }

    pub fn scale_poly(&self, f: &Poly) -> Self {
        self.map(|p| p * f)
    }

    pub fn mul_vec(&self, v: &[Poly]) -> Vec<Poly> {
        assert_eq!(v.len(), self.cols, "vector length does not match matrix columns");
        (0..self.rows)
            .map(|i| {
                let mut acc = Poly::zero(self.n_vars);
                for (j, vj) in v.iter().enumerate() {
                    acc += &(self.get(i, j) * vj);
                }
                acc
            })
            .collect()
    }

    pub fn embed(&self, total: usize, offset: usize) -> Self {
        let entries: Vec<Poly> = self.entries.iter().map(|p| p.embed(total, offset)).collect();
        PolyMatrix { rows: self.rows, cols: self.cols, n_vars: total, entries }
    }

    pub fn compose(&self, subs: &[Poly], target_vars: usize) -> Self {
        let entries: Vec<Poly> = self.entries.iter().map(|p| p.compose(subs, target_vars)).collect();
        PolyMatrix { rows: self.rows, cols: self.cols, n_vars: target_vars, entries }
    }

    pub fn eval(&self, point: &[Ratio]) -> Vec<Vec<Ratio>> {
        (0..self.rows).map(|i| (0..self.cols).map(|j| self.get(i, j).eval(point)).collect()).collect()
    }

    /// Block diagonal sum.
    pub fn direct_sum(&self, other: &PolyMatrix) -> Self {
        assert_eq!(self.n_vars, other.n_vars);
        let (r, c) = (self.rows + other.rows, self.cols + other.cols);
        Self::from_fn(r, c, self.n_vars, |i, j| {
            if i < self.rows && j < self.cols {
                self.get(i, j).clone()
            } else if i >= self.rows && j >= self.cols {
                other.get(i - self.rows, j - self.cols).clone()
            } else {
                Poly::zero(self.n_vars)
            }
        })
    }

    /// Determinant by Laplace expansion with memoised minors.
    pub fn det(&self) -> Result<Poly, PolyError> {
        if !self.is_square() {
            return Err(PolyError::Shape(format!("determinant of a {}x{} matrix", self.rows, self.cols)));
        }
        let k = self.rows;
        if k == 0 {
            return Ok(Poly::one(self.n_vars));
        }
        assert!(k <= 24, "determinant size too large for subset expansion");
        let mut memo: HashMap<u32, Poly> = HashMap::new();
        Ok(self.det_minor(0, (1u32 << k) - 1, &mut memo))
    }

    // Determinant of rows `row..k` against the columns in `mask`.
    fn det_minor(&self, row: usize, mask: u32, memo: &mut HashMap<u32, Poly>) -> Poly {
        if mask == 0 {
            return Poly::one(self.n_vars);
        }
        if let Some(p) = memo.get(&mask) {
            return p.clone();
        }
        let mut acc = Poly::zero(self.n_vars);
        let mut sign_positive = true;
        for j in 0..self.cols {
            if mask & (1 << j) == 0 {
                continue;
            }
            let entry = self.get(row, j);
            if !entry.is_zero() {
                let minor = self.det_minor(row + 1, mask & !(1 << j), memo);
                let term = entry * &minor;
                if sign_positive {
                    acc += &term;
                } else {
                    acc -= &term;
                }
            }
            sign_positive = !sign_positive;
        }
        memo.insert(mask, acc.clone());
        acc
    }

    fn minor_matrix(&self, skip_row: usize, skip_col: usize) -> Self {
        Self::from_fn(self.rows - 1, self.cols - 1, self.n_vars, |i, j| {
            let ii = if i < skip_row { i } else { i + 1 };
            let jj = if j < skip_col { j } else { j + 1 };
            self.get(ii, jj).clone()
        })
    }

    pub fn adjugate(&self) -> Result<Self, PolyError> {
        if !self.is_square() {
            return Err(PolyError::Shape("adjugate of a non-square matrix".into()));
        }
        let k = self.rows;
        if k == 1 {
            return Ok(Self::identity(1, self.n_vars));
        }
        let mut out = Self::zeros(k, k, self.n_vars);
        for i in 0..k {
            for j in 0..k {
                let c = self.minor_matrix(j, i).det()?;
                out.set(i, j, if (i + j) % 2 == 0 { c } else { -c });
            }
        }
        Ok(out)
    }

    /// True when the determinant is a nonzero constant, i.e. the matrix is
    /// invertible over the polynomial ring.
    pub fn has_unit_det(&self) -> bool {
        self.det().ok().and_then(|d| d.as_constant()).is_some_and(|c| !c.is_zero())
    }

    /// Inverse over the polynomial ring; requires a nonzero constant determinant.
    pub fn inverse(&self) -> Result<Self, PolyError> {
        let d = self.det()?.as_constant().filter(|c| !c.is_zero()).ok_or(PolyError::NotInvertible)?;
        Ok(self.adjugate()?.scale(&d.recip()))
    }
}

macro_rules! forward_matop {
    ($tr:ident, $method:ident, $imp:ident) => {
        impl $tr<PolyMatrix> for PolyMatrix {
            type Output = PolyMatrix;
            fn $method(self, rhs: PolyMatrix) -> PolyMatrix {
                $imp(&self, &rhs)
            }
        }
        impl $tr<&PolyMatrix> for PolyMatrix {
            type Output = PolyMatrix;
            fn $method(self, rhs: &PolyMatrix) -> PolyMatrix {
                $imp(&self, rhs)
            }
        }
        impl $tr<PolyMatrix> for &PolyMatrix {
            type Output = PolyMatrix;
            fn $method(self, rhs: PolyMatrix) -> PolyMatrix {
                $imp(self, &rhs)
            }
        }
        impl $tr<&PolyMatrix> for &PolyMatrix {
            type Output = PolyMatrix;
            fn $method(self, rhs: &PolyMatrix) -> PolyMatrix {
                $imp(self, rhs)
            }
        }
    };
}

fn mat_add(a: &PolyMatrix, b: &PolyMatrix) -> PolyMatrix {
    assert!(a.rows == b.rows && a.cols == b.cols, "adding {}x{} and {}x{}", a.rows, a.cols, b.rows, b.cols);
    PolyMatrix::from_fn(a.rows, a.cols, a.n_vars, |i, j| a.get(i, j) + b.get(i, j))
}

fn mat_sub(a: &PolyMatrix, b: &PolyMatrix) -> PolyMatrix {
    assert!(a.rows == b.rows && a.cols == b.cols, "subtracting {}x{} and {}x{}", a.rows, a.cols, b.rows, b.cols);
    PolyMatrix::from_fn(a.rows, a.cols, a.n_vars, |i, j| a.get(i, j) - b.get(i, j))
}

fn mat_mul(a: &PolyMatrix, b: &PolyMatrix) -> PolyMatrix {
    assert_eq!(a.cols, b.rows, "multiplying {}x{} by {}x{}", a.rows, a.cols, b.rows, b.cols);
    assert_eq!(a.n_vars, b.n_vars);
    PolyMatrix::from_fn(a.rows, b.cols, a.n_vars, |i, j| {
        let mut acc = Poly::zero(a.n_vars);
        for k in 0..a.cols {
            let (x, y) = (a.get(i, k), b.get(k, j));
            if !x.is_zero() && !y.is_zero() {
                acc += &(x * y);
            }
        }
        acc
    })
}

forward_matop!(Add, add, mat_add);
forward_matop!(Sub, sub, mat_sub);
forward_matop!(Mul, mul, mat_mul);

impl Neg for PolyMatrix {
    type Output = PolyMatrix;
    fn neg(self) -> PolyMatrix {
        self.map(|p| -p)
    }
}

impl Neg for &PolyMatrix {
    type Output = PolyMatrix;
    fn neg(self) -> PolyMatrix {
        self.map(|p| -p)
    }
}

impl fmt::Debug for PolyMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "PolyMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|j| self.get(i, j).to_string()).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        write!(f, "]")
    }
}

/// Row-reduces a rational matrix in place and returns its rank.
pub fn rational_rank(mut m: Vec<Vec<Ratio>>) -> usize {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    let mut rank = 0;
    for col in 0..cols {
        let Some(pivot) = (rank..rows).find(|&r| !m[r][col].is_zero()) else { continue };
        m.swap(rank, pivot);
        let p = m[rank][col].clone();
        for r in 0..rows {
            if r != rank && !m[r][col].is_zero() {
                let f = &m[r][col] / &p;
                for c in col..cols {
                    let delta = &f * &m[rank][c];
                    m[r][c] -= delta;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Unique solution of `A x = y` by Gauss-Jordan elimination. Returns
/// `None` when the system is inconsistent or underdetermined.
pub fn rational_solve(a: &[Vec<Ratio>], y: &[Ratio]) -> Option<Vec<Ratio>> {
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    let mut m: Vec<Vec<Ratio>> = a.iter().zip(y).map(|(r, v)| r.iter().cloned().chain([v.clone()]).collect()).collect();
    let mut pivots = Vec::new();
    let mut rank = 0;
    for col in 0..cols {
        let Some(pivot) = (rank..rows).find(|&r| !m[r][col].is_zero()) else { continue };
        m.swap(rank, pivot);
        let p = m[rank][col].clone();
        for c in col..=cols {
            m[rank][c] = &m[rank][c] / &p;
        }
        for r in 0..rows {
            if r != rank && !m[r][col].is_zero() {
                let f = m[r][col].clone();
                for c in col..=cols {
                    let delta = &f * &m[rank][c];
                    m[r][c] -= delta;
                }
            }
        }
        pivots.push(col);
        rank += 1;
    }
    if rank < cols || m[rank..].iter().any(|r| !r[cols].is_zero()) {
        return None;
    }
    let mut x = vec![Ratio::zero(); cols];
    for (r, &c) in pivots.iter().enumerate() {
        x[c] = m[r][cols].clone();
    }
    Some(x)
}

/// Reproducible set of pairwise distinct rational points.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SamplePlan {
    pub seed: u64,
    pub count: usize,
    pub points: Vec<Vec<Ratio>>,
}

impl SamplePlan {
    /// Draws `count` distinct points in `n_vars` coordinates. With zero
    /// coordinates only one point exists, so the plan holds that one point.
    pub fn new(seed: u64, count: usize, n_vars: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let wanted = if n_vars == 0 { count.min(1) } else { count };
        let mut seen = BTreeSet::new();
        let mut points = Vec::with_capacity(wanted);
        while points.len() < wanted {
            let p: Vec<Ratio> = (0..n_vars).map(|_| random_ratio(&mut rng)).collect();
            if seen.insert(p.clone()) {
                points.push(p);
            }
        }
        SamplePlan { seed, count: points.len(), points }
    }
}

/// Small random rational with numerator in [-12, 12] and denominator in [1, 5].
pub fn random_ratio<R: Rng>(rng: &mut R) -> Ratio {
    rat(rng.gen_range(-12..=12), rng.gen_range(1..=5))
}

/// Random polynomial with small integer coefficients, at most `max_terms`
/// terms of total degree at most `max_degree`.
pub fn random_poly<R: Rng>(rng: &mut R, n_vars: usize, max_degree: u32, max_terms: usize) -> Poly {
    let mut p = Poly::zero(n_vars);
    let n_terms = rng.gen_range(0..=max_terms);
    for _ in 0..n_terms {
        let mut e = vec![0u32; n_vars];
        let mut budget = rng.gen_range(0..=max_degree);
        while budget > 0 && n_vars > 0 {
            e[rng.gen_range(0..n_vars)] += 1;
            budget -= 1;
        }
        let c = int(rng.gen_range(-4..=4));
        p.add_term(e, c);
    }
    p
}

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OracleVerdict {
    Equal,
    Differs { witness: Vec<Ratio> },
}

impl OracleVerdict {
    pub fn is_equal(&self) -> bool {
        matches!(self, OracleVerdict::Equal)
    }
}

/// Evaluates `p - q` at every plan point and reports the first nonzero one.
pub fn oracle_equal(p: &Poly, q: &Poly, plan: &SamplePlan) -> OracleVerdict {
    assert_eq!(p.n_vars(), q.n_vars(), "oracle comparison across variable counts");
    let diff = p - q;
    for pt in &plan.points {
        if !diff.eval(pt).is_zero() {
            return OracleVerdict::Differs { witness: pt.clone() };
        }
    }
    OracleVerdict::Equal
}

/// Symbolic comparison, or the sampling oracle once the operands exceed
/// `term_limit` terms between them.
pub fn agree(p: &Poly, q: &Poly, plan: &SamplePlan, term_limit: usize) -> OracleVerdict {
    if p.n_terms() + q.n_terms() > term_limit {
        return oracle_equal(p, q, plan);
    }
    if p == q {
        OracleVerdict::Equal
    } else {
        // symbolic mismatch; locate a witness when one of the plan points shows it
        match oracle_equal(p, q, plan) {
            OracleVerdict::Equal => OracleVerdict::Differs { witness: Vec::new() },
            d => d,
        }
    }
}

/// Shorthand used across modules: vector of zero polynomials.
pub fn zero_vec(len: usize, n_vars: usize) -> Vec<Poly> {
    vec![Poly::zero(n_vars); len]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(n: usize, i: usize) -> Poly {
        Poly::var(n, i)
    }

    #[test]
    fn power_rule() {
        let p = &x(2, 0) * &x(2, 0) * x(2, 1);
        assert_eq!(p.diff(0).unwrap(), (&x(2, 0) * &x(2, 1)).scale_int(2));
        assert!(Poly::from_int(2, 7).diff(1).unwrap().is_zero());
        assert!(matches!(p.diff(2), Err(PolyError::IndexOutOfRange { index: 2, n_vars: 2 })));
    }

    #[test]
    fn finite_difference_cross_check() {
        let (x0, x1) = (x(2, 0), x(2, 1));
        let p = x0.pow(3) + (&x0 * &x1 * &x1).scale_int(2);
        let dp = p.diff(1).unwrap();
        assert_eq!(dp, (&x0 * &x1).scale_int(4));
        let plan = SamplePlan::new(7, 5, 2);
        for pt in &plan.points {
            let f: Vec<f64> = pt.iter().map(|r| r.to_f64().unwrap()).collect();
            let h = 1e-5;
            let up = p.eval_f64(&[f[0], f[1] + h]);
            let down = p.eval_f64(&[f[0], f[1] - h]);
            let fd = (up - down) / (2.0 * h);
            let exact = dp.eval_f64(&f);
            let rel = (fd - exact).abs() / exact.abs().max(1e-12);
            assert!(rel < 1e-6, "relative error {rel} at {f:?}");
        }
    }

    #[test]
    fn oracle_binomial_and_witness() {
        let (x0, x1) = (x(2, 0), x(2, 1));
        let lhs = (&x0 + &x1).pow(2);
        let rhs = &x0 * &x0 + (&x0 * &x1).scale_int(2) + &x1 * &x1;
        let plan = SamplePlan::new(42, 25, 2);
        assert!(oracle_equal(&lhs, &rhs, &plan).is_equal());
        let shifted = &x0 + &Poly::one(2);
        match oracle_equal(&x0, &shifted, &plan) {
            OracleVerdict::Differs { witness } => assert_eq!(witness, plan.points[0]),
            OracleVerdict::Equal => panic!("x0 and x0+1 agree"),
        }
    }

    #[test]
    fn determinant_and_inverse() {
        let n = 1;
        let t = x(n, 0);
        let m = PolyMatrix::from_fn(2, 2, n, |i, j| match (i, j) {
            (0, 0) | (1, 1) => Poly::one(n),
            (0, 1) => t.clone(),
            _ => Poly::zero(n),
        });
        assert_eq!(m.det().unwrap(), Poly::one(n));
        let inv = m.inverse().unwrap();
        assert_eq!(&m * &inv, PolyMatrix::identity(2, n));
        let singular = PolyMatrix::from_fn(1, 1, n, |_, _| t.clone());
        assert_eq!(singular.inverse(), Err(PolyError::NotInvertible));
    }

    #[test]
    fn display_reads_back_terms() {
        let p = (x(2, 0) * x(2, 0)).scale(&rat(3, 2)) - x(2, 1) + Poly::one(2);
        assert_eq!(p.to_string(), "3/2*x0^2 - x1 + 1");
    }

    #[test]
    fn compose_and_embed() {
        let p = &x(1, 0) * &x(1, 0);
        let q = p.compose(&[&x(2, 0) + &x(2, 1)], 2);
        assert_eq!(q, (&x(2, 0) + &x(2, 1)).pow(2));
        let e = p.embed(3, 2);
        assert_eq!(e, &x(3, 2) * &x(3, 2));
        assert_eq!(e.restrict(1, 2).unwrap(), p);
    }
}
