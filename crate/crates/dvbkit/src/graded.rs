//! Functions on a split [2]-manifold `Q[-1] ⊕ B*[-2]`.
//!
//! An element is a supercommutative polynomial in odd degree 1 generators
//! `ξ_k` (a frame of `Q*`) and even degree 2 generators `η_i` (a frame of
//! `B`), with coefficients in the base polynomial ring. Products of degree 1
//! generators are identified with 2-forms via `ξ_k ξ_l ↔ E_kl − E_lk`.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::poly::{Poly, PolyMatrix, Ratio};

pub const DEFAULT_DEGREE_CAP: u32 = 4;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GradedError {
    #[error("degree {degree} exceeds the cap {cap}")]
    CapExceeded { degree: u32, cap: u32 },
    #[error("at most 64 odd generators are supported, got {0}")]
    TooManyOdd(usize),
    #[error("signature mismatch")]
    Signature,
}

/// Counts of base coordinates, odd generators and even generators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Signature {
    pub n: usize,
    pub odd: usize,
    pub even: usize,
}

impl Signature {
    pub fn new(n: usize, odd: usize, even: usize) -> Result<Self, GradedError> {
        if odd > 64 {
            return Err(GradedError::TooManyOdd(odd));
        }
        Ok(Signature { n, odd, even })
    }

    pub fn generator_count(&self) -> usize {
        self.n + self.odd + self.even
    }

    pub fn generator(&self, g: usize) -> Generator {
        if g < self.n {
            Generator::Base(g)
        } else if g < self.n + self.odd {
            Generator::Odd(g - self.n)
        } else {
            Generator::Even(g - self.n - self.odd)
        }
    }

    pub fn index(&self, g: Generator) -> usize {
        match g {
            Generator::Base(a) => a,
            Generator::Odd(k) => self.n + k,
            Generator::Even(i) => self.n + self.odd + i,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Generator {
    Base(usize),
    Odd(usize),
    Even(usize),
}

impl Generator {
    pub fn degree(self) -> u32 {
        match self {
            Generator::Base(_) => 0,
            Generator::Odd(_) => 1,
            Generator::Even(_) => 2,
        }
    }

    pub fn label(self) -> String {
        match self {
            Generator::Base(a) => format!("x{a}"),
            Generator::Odd(k) => format!("xi{k}"),
            Generator::Even(i) => format!("eta{i}"),
        }
    }
}

/// `ξ_S η^e` with `S` a bitmask read in increasing index order.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial {
    pub odd: u64,
    pub even: Vec<u32>,
}

impl Monomial {
    pub fn degree(&self) -> u32 {
        self.odd.count_ones() + 2 * self.even.iter().sum::<u32>()
    }

    fn parity(&self) -> u32 {
        self.odd.count_ones() % 2
    }
}

fn bits_above(mask: u64, k: usize) -> u32 {
    if k >= 63 {
        0
    } else {
        (mask >> (k + 1)).count_ones()
    }
}

fn bits_below(mask: u64, k: usize) -> u32 {
    (mask & ((1u64 << k) - 1)).count_ones()
}

/// Sign of reordering `ξ_S ξ_T` into increasing order, or `None` if they share a factor.
fn merge_sign(s: u64, t: u64) -> Option<bool> {
    if s & t != 0 {
        return None;
    }
    let mut swaps = 0u32;
    let mut rest = t;
    while rest != 0 {
        let k = rest.trailing_zeros() as usize;
        swaps += bits_above(s, k);
        rest &= rest - 1;
    }
    Some(swaps % 2 == 1)
}

#[derive(Clone, PartialEq, Eq)]
pub struct GradedFunction {
    sig: Signature,
    terms: BTreeMap<Monomial, Poly>,
}

impl GradedFunction {
    pub fn zero(sig: Signature) -> Self {
        GradedFunction { sig, terms: BTreeMap::new() }
    }

    pub fn from_base(sig: Signature, f: Poly) -> Self {
        let mut g = Self::zero(sig);
        g.push(Monomial { odd: 0, even: vec![0; sig.even] }, f);
        g
    }

    pub fn one(sig: Signature) -> Self {
        Self::from_base(sig, Poly::one(sig.n))
    }

    pub fn xi(sig: Signature, k: usize) -> Self {
        let mut g = Self::zero(sig);
        g.push(Monomial { odd: 1 << k, even: vec![0; sig.even] }, Poly::one(sig.n));
        g
    }

    pub fn eta(sig: Signature, i: usize) -> Self {
        let mut even = vec![0; sig.even];
        even[i] = 1;
        let mut g = Self::zero(sig);
        g.push(Monomial { odd: 0, even }, Poly::one(sig.n));
        g
    }

    pub fn generator(sig: Signature, g: Generator) -> Self {
        match g {
            Generator::Base(a) => Self::from_base(sig, Poly::var(sig.n, a)),
            Generator::Odd(k) => Self::xi(sig, k),
            Generator::Even(i) => Self::eta(sig, i),
        }
    }

    /// `Σ τ_k ξ_k`.
    pub fn degree_one(sig: Signature, tau: &[Poly]) -> Self {
        let mut g = Self::zero(sig);
        for (k, t) in tau.iter().enumerate() {
            g.push(Monomial { odd: 1 << k, even: vec![0; sig.even] }, t.clone());
        }
        g
    }

    /// `Σ_i b_i η_i`.
    pub fn linear_even(sig: Signature, b: &[Poly]) -> Self {
        let mut g = Self::zero(sig);
        for (i, bi) in b.iter().enumerate() {
            let mut even = vec![0; sig.even];
            even[i] = 1;
            g.push(Monomial { odd: 0, even }, bi.clone());
        }
        g
    }

    /// The degree 2 function of a skew form: `Σ_{l<m} w_lm ξ_l ξ_m`.
    pub fn two_form(sig: Signature, w: &PolyMatrix) -> Self {
        let mut g = Self::zero(sig);
        for l in 0..sig.odd {
            for m in (l + 1)..sig.odd {
                g.push(Monomial { odd: (1 << l) | (1 << m), even: vec![0; sig.even] }, w.get(l, m).clone());
            }
        }
        g
    }

    pub fn signature(&self) -> Signature {
        self.sig
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Poly)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn push(&mut self, m: Monomial, c: Poly) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(existing) => {
                *existing += &c;
                if existing.is_zero() {
                    self.terms.remove(&m);
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    pub fn coefficient(&self, m: &Monomial) -> Poly {
        self.terms.get(m).cloned().unwrap_or_else(|| Poly::zero(self.sig.n))
    }

    /// Highest degree present (0 for the zero function).
    pub fn max_degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    /// `Some(k)` if every term has degree `k`; the zero function is homogeneous of any degree.
    pub fn homogeneous_degree(&self) -> Option<u32> {
        let mut degs = self.terms.keys().map(Monomial::degree);
        let first = degs.next()?;
        degs.all(|d| d == first).then_some(first)
    }

    pub fn component(&self, degree: u32) -> Self {
        let mut g = Self::zero(self.sig);
        for (m, c) in &self.terms {
            if m.degree() == degree {
                g.terms.insert(m.clone(), c.clone());
            }
        }
        g
    }

    pub fn scale(&self, c: &Ratio) -> Self {
        let mut g = Self::zero(self.sig);
        for (m, p) in &self.terms {
            g.push(m.clone(), p.scale(c));
        }
        g
    }

    pub fn scale_poly(&self, f: &Poly) -> Self {
        let mut g = Self::zero(self.sig);
        for (m, p) in &self.terms {
            g.push(m.clone(), p * f);
        }
        g
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut g = Self::zero(self.sig);
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                let Some(neg) = merge_sign(m1.odd, m2.odd) else { continue };
                let even = m1.even.iter().zip(&m2.even).map(|(a, b)| a + b).collect();
                let c = c1 * c2;
                g.push(Monomial { odd: m1.odd | m2.odd, even }, if neg { -c } else { c });
            }
        }
        g
    }

    pub fn diff_base(&self, a: usize) -> Self {
        let mut g = Self::zero(self.sig);
        for (m, c) in &self.terms {
            g.push(m.clone(), c.d(a));
        }
        g
    }

    pub fn diff_even(&self, i: usize) -> Self {
        let mut g = Self::zero(self.sig);
        for (m, c) in &self.terms {
            let e = m.even[i];
            if e == 0 {
                continue;
            }
            let mut even = m.even.clone();
            even[i] -= 1;
            g.push(Monomial { odd: m.odd, even }, c.scale_int(e as i64));
        }
        g
    }

    fn diff_odd(&self, k: usize, from_left: bool) -> Self {
        let mut g = Self::zero(self.sig);
        for (m, c) in &self.terms {
            if m.odd & (1 << k) == 0 {
                continue;
            }
            let passes = if from_left { bits_below(m.odd, k) } else { bits_above(m.odd, k) };
            let c = if passes % 2 == 1 { -c.clone() } else { c.clone() };
            g.push(Monomial { odd: m.odd & !(1 << k), even: m.even.clone() }, c);
        }
        g
    }

    /// Derivative removing a generator from the left.
    pub fn left_derivative(&self, g: Generator) -> Self {
        match g {
            Generator::Base(a) => self.diff_base(a),
            Generator::Odd(k) => self.diff_odd(k, true),
            Generator::Even(i) => self.diff_even(i),
        }
    }

    /// Derivative removing a generator from the right.
    pub fn right_derivative(&self, g: Generator) -> Self {
        match g {
            Generator::Base(a) => self.diff_base(a),
            Generator::Odd(k) => self.diff_odd(k, false),
            Generator::Even(i) => self.diff_even(i),
        }
    }

    /// Parity of a homogeneous function (odd terms decide; zero counts as even).
    pub fn parity(&self) -> u32 {
        self.terms.keys().next().map_or(0, Monomial::parity)
    }

    /// Degree 0 part as a base polynomial.
    pub fn base_part(&self) -> Poly {
        self.coefficient(&Monomial { odd: 0, even: vec![0; self.sig.even] })
    }

    /// Coefficients `τ_k` of the degree 1 part.
    pub fn degree_one_coefficients(&self) -> Vec<Poly> {
        (0..self.sig.odd).map(|k| self.coefficient(&Monomial { odd: 1 << k, even: vec![0; self.sig.even] })).collect()
    }

    /// Coefficients `b_i` of `η_i` in the degree 2 part.
    pub fn even_linear_coefficients(&self) -> Vec<Poly> {
        (0..self.sig.even)
            .map(|i| {
                let mut even = vec![0; self.sig.even];
                even[i] = 1;
                self.coefficient(&Monomial { odd: 0, even })
            })
            .collect()
    }

    /// Skew matrix `W` with `W_lm` the coefficient of `ξ_l ξ_m` for `l < m`.
    pub fn two_form_matrix(&self) -> PolyMatrix {
        let m = self.sig.odd;
        let mut w = PolyMatrix::zeros(m, m, self.sig.n);
        for l in 0..m {
            for k in (l + 1)..m {
                let c = self.coefficient(&Monomial { odd: (1 << l) | (1 << k), even: vec![0; self.sig.even] });
                w.set(k, l, -c.clone());
                w.set(l, k, c);
            }
        }
        w
    }

    /// Substitutes base coordinates, degree 1 and degree 2 generators; the
    /// images must be homogeneous of the generator's degree.
    pub fn substitute(&self, target: Signature, base: &[Poly], odd: &[GradedFunction], even: &[GradedFunction]) -> Self {
        let mut out = Self::zero(target);
        for (m, c) in &self.terms {
            let mut term = Self::from_base(target, c.compose(base, target.n));
            for k in 0..self.sig.odd {
                if m.odd & (1 << k) != 0 {
                    term = term.mul(&odd[k]);
                }
            }
            for (i, &e) in m.even.iter().enumerate() {
                for _ in 0..e {
                    term = term.mul(&even[i]);
                }
            }
            out = out + term;
        }
        out
    }

    /// Evaluates the base coefficients at a point.
    pub fn eval_base(&self, point: &[Ratio]) -> BTreeMap<Monomial, Ratio> {
        self.terms
            .iter()
            .map(|(m, c)| (m.clone(), c.eval(point)))
            .filter(|(_, r)| !r.is_zero())
            .collect()
    }
}

impl std::ops::Add for GradedFunction {
    type Output = GradedFunction;
    fn add(mut self, rhs: GradedFunction) -> GradedFunction {
        for (m, c) in rhs.terms {
            self.push(m, c);
        }
        self
    }
}

impl std::ops::Sub for GradedFunction {
    type Output = GradedFunction;
    fn sub(self, rhs: GradedFunction) -> GradedFunction {
        self + (-rhs)
    }
}

impl std::ops::Neg for GradedFunction {
    type Output = GradedFunction;
    fn neg(mut self) -> GradedFunction {
        for c in self.terms.values_mut() {
            *c = -c.clone();
        }
        self
    }
}

impl std::ops::Add for &GradedFunction {
    type Output = GradedFunction;
    fn add(self, rhs: &GradedFunction) -> GradedFunction {
        self.clone() + rhs.clone()
    }
}

impl std::ops::Sub for &GradedFunction {
    type Output = GradedFunction;
    fn sub(self, rhs: &GradedFunction) -> GradedFunction {
        self.clone() - rhs.clone()
    }
}

impl std::ops::Mul for &GradedFunction {
    type Output = GradedFunction;
    fn mul(self, rhs: &GradedFunction) -> GradedFunction {
        GradedFunction::mul(self, rhs)
    }
}

impl fmt::Display for GradedFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            let mut factors = Vec::new();
            for k in 0..self.sig.odd {
                if m.odd & (1 << k) != 0 {
                    factors.push(format!("xi{k}"));
                }
            }
            for (i, &e) in m.even.iter().enumerate() {
                match e {
                    0 => {}
                    1 => factors.push(format!("eta{i}")),
                    _ => factors.push(format!("eta{i}^{e}")),
                }
            }
            if factors.is_empty() {
                write!(f, "({c})")?;
            } else if c.as_constant().is_some_and(|r| r.is_one()) {
                write!(f, "{}", factors.join("*"))?;
            } else {
                write!(f, "({c})*{}", factors.join("*"))?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for GradedFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Graded commutator `ab − (−1)^{|a||b|} ba` of homogeneous elements.
pub fn graded_commutator(a: &GradedFunction, b: &GradedFunction) -> GradedFunction {
    let ab = a.mul(b);
    let ba = b.mul(a);
    if a.parity() * b.parity() == 1 {
        ab + ba
    } else {
        ab - ba
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig() -> Signature {
        Signature::new(1, 3, 2).unwrap()
    }

    #[test]
    fn odd_generators_anticommute_and_square_to_zero() {
        let s = sig();
        let (a, b) = (GradedFunction::xi(s, 0), GradedFunction::xi(s, 2));
        assert_eq!(a.mul(&b), -b.mul(&a));
        assert!(a.mul(&a).is_zero());
        let e = GradedFunction::eta(s, 1);
        assert_eq!(e.mul(&e).max_degree(), 4);
    }

    #[test]
    fn left_and_right_derivatives_differ_by_sign() {
        let s = sig();
        let f = GradedFunction::xi(s, 0).mul(&GradedFunction::xi(s, 1));
        assert_eq!(f.left_derivative(Generator::Odd(0)), GradedFunction::xi(s, 1));
        assert_eq!(f.right_derivative(Generator::Odd(0)), -GradedFunction::xi(s, 1));
    }

    #[test]
    fn two_form_round_trip() {
        let s = sig();
        let w = PolyMatrix::from_ints(1, &[&[0, 2, -1], &[-2, 0, 5], &[1, -5, 0]]);
        assert_eq!(GradedFunction::two_form(s, &w).two_form_matrix(), w);
    }
}
