//! Exact polynomials in one variable and in `(t, x)`, enough to integrate
//! polynomial test functions along the graph without rounding.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::rational::{self, Rational};

fn r(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// `Σ c_i x^i`, trailing zeros trimmed.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Poly1 {
    coeffs: Vec<Rational>,
}

impl Poly1 {
    pub fn new(mut coeffs: Vec<Rational>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: Rational) -> Self {
        Self::new(vec![c])
    }

    /// `c0 + c1 x`.
    pub fn linear(c0: Rational, c1: Rational) -> Self {
        Self::new(vec![c0, c1])
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn eval(&self, x: &Rational) -> Rational {
        self.coeffs.iter().rev().fold(Rational::zero(), |acc, c| acc * x + c)
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + rational::to_f64(c))
    }

    pub fn derivative(&self) -> Self {
        Self::new(self.coeffs.iter().enumerate().skip(1).map(|(i, c)| c * r(i as i64)).collect())
    }

    /// Antiderivative vanishing at 0.
    pub fn antiderivative(&self) -> Self {
        let mut c = vec![Rational::zero()];
        c.extend(self.coeffs.iter().enumerate().map(|(i, c)| c / r(i as i64 + 1)));
        Self::new(c)
    }

    pub fn integrate(&self, a: &Rational, b: &Rational) -> Rational {
        let p = self.antiderivative();
        p.eval(b) - p.eval(a)
    }

    pub fn pow(&self, n: u32) -> Self {
        (0..n).fold(Self::constant(Rational::one()), |acc, _| &acc * self)
    }

    /// `p(inner(x))`.
    pub fn compose(&self, inner: &Poly1) -> Self {
        self.coeffs.iter().rev().fold(Self::zero(), |acc, c| &(&acc * inner) + &Self::constant(c.clone()))
    }

    pub fn scale(&self, s: &Rational) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * s).collect())
    }
}

impl Add for &Poly1 {
    type Output = Poly1;
    fn add(self, o: &Poly1) -> Poly1 {
        let n = self.coeffs.len().max(o.coeffs.len());
        Poly1::new(
            (0..n)
                .map(|i| {
                    let a = self.coeffs.get(i).cloned().unwrap_or_else(Rational::zero);
                    let b = o.coeffs.get(i).cloned().unwrap_or_else(Rational::zero);
                    a + b
                })
                .collect(),
        )
    }
}

impl Neg for &Poly1 {
    type Output = Poly1;
    fn neg(self) -> Poly1 {
        Poly1::new(self.coeffs.iter().map(|c| -c).collect())
    }
}

impl Sub for &Poly1 {
    type Output = Poly1;
    fn sub(self, o: &Poly1) -> Poly1 {
        self + &(-o)
    }
}

impl Mul for &Poly1 {
    type Output = Poly1;
    fn mul(self, o: &Poly1) -> Poly1 {
        if self.is_zero() || o.is_zero() {
            return Poly1::zero();
        }
        let mut c = vec![Rational::zero(); self.coeffs.len() + o.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in o.coeffs.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        Poly1::new(c)
    }
}

/// `Σ c_ij t^i x^j`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Poly2 {
    terms: BTreeMap<(u32, u32), Rational>,
}

impl Poly2 {
    pub fn zero() -> Self {
        Self::default()
    }

    /// From `(coefficient, t-power, x-power)` triples; repeated monomials add.
    pub fn from_terms(terms: impl IntoIterator<Item = (Rational, u32, u32)>) -> Self {
        let mut p = Self::zero();
        for (c, i, j) in terms {
            p.add_term(c, i, j);
        }
        p
    }

    fn add_term(&mut self, c: Rational, i: u32, j: u32) {
        let e = self.terms.entry((i, j)).or_insert_with(Rational::zero);
        *e += c;
        if e.is_zero() {
            self.terms.remove(&(i, j));
        }
    }

    /// Polynomial in `t` alone.
    pub fn from_t(p: &Poly1) -> Self {
        Self::from_terms(p.coeffs().iter().enumerate().map(|(i, c)| (c.clone(), i as u32, 0)))
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(u32, u32), &Rational)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn d_t(&self) -> Self {
        Self::from_terms(
            self.terms.iter().filter(|((i, _), _)| *i > 0).map(|((i, j), c)| (c * r(*i as i64), i - 1, *j)),
        )
    }

    pub fn d_x(&self) -> Self {
        Self::from_terms(
            self.terms.iter().filter(|((_, j), _)| *j > 0).map(|((i, j), c)| (c * r(*j as i64), *i, j - 1)),
        )
    }

    pub fn eval(&self, t: &Rational, x: &Rational) -> Rational {
        self.terms
            .iter()
            .map(|((i, j), c)| c * num_traits::pow(t.clone(), *i as usize) * num_traits::pow(x.clone(), *j as usize))
            .fold(Rational::zero(), |a, v| a + v)
    }

    pub fn eval_f64(&self, t: f64, x: f64) -> f64 {
        self.terms.iter().map(|((i, j), c)| rational::to_f64(c) * t.powi(*i as i32) * x.powi(*j as i32)).sum()
    }

    /// `x ↦ p(t(x), x)` for a polynomial time parametrisation `t(x)`.
    pub fn along(&self, t_of_x: &Poly1) -> Poly1 {
        let x = Poly1::linear(Rational::zero(), Rational::one());
        let mut out = Poly1::zero();
        for ((i, j), c) in &self.terms {
            let term = &(&t_of_x.pow(*i) * &x.pow(*j)).scale(c) + &Poly1::zero();
            out = &out + &term;
        }
        out
    }

    /// `t ↦ p(t, x0)`.
    pub fn at_x(&self, x0: &Rational) -> Poly1 {
        let mut c: Vec<Rational> = Vec::new();
        for ((i, j), v) in &self.terms {
            let i = *i as usize;
            if c.len() <= i {
                c.resize(i + 1, Rational::zero());
            }
            c[i] += v * num_traits::pow(x0.clone(), *j as usize);
        }
        Poly1::new(c)
    }

    /// `x ↦ p(t0, x)`.
    pub fn at_t(&self, t0: &Rational) -> Poly1 {
        let mut c: Vec<Rational> = Vec::new();
        for ((i, j), v) in &self.terms {
            let j = *j as usize;
            if c.len() <= j {
                c.resize(j + 1, Rational::zero());
            }
            c[j] += v * num_traits::pow(t0.clone(), *i as usize);
        }
        Poly1::new(c)
    }

    pub fn mul_t(&self, p: &Poly1) -> Self {
        let mut out = Self::zero();
        for ((i, j), c) in &self.terms {
            for (k, a) in p.coeffs().iter().enumerate() {
                out.add_term(c * a, i + k as u32, *j);
            }
        }
        out
    }
}

impl Add for &Poly2 {
    type Output = Poly2;
    fn add(self, o: &Poly2) -> Poly2 {
        let mut out = self.clone();
        for ((i, j), c) in &o.terms {
            out.add_term(c.clone(), *i, *j);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, q};

    #[test]
    fn univariate_basics() {
        let p = Poly1::new(vec![int(1), int(2), int(3)]); // 1 + 2x + 3x²
        assert_eq!(p.eval(&q(1, 2)), q(11, 4));
        assert_eq!(p.derivative(), Poly1::new(vec![int(2), int(6)]));
        assert_eq!(p.integrate(&int(0), &int(1)), int(3));
        let sq = p.compose(&Poly1::linear(int(1), int(1))); // p(1 + x)
        assert_eq!(sq.eval(&int(0)), int(6));
        assert_eq!(sq.eval(&int(1)), p.eval(&int(2)));
        assert!(Poly1::new(vec![int(0), int(0)]).is_zero());
    }

    #[test]
    fn bivariate_restrictions() {
        // t x + x²
        let p = Poly2::from_terms([(int(1), 1, 1), (int(1), 0, 2)]);
        assert_eq!(p.d_t(), Poly2::from_terms([(int(1), 0, 1)]));
        assert_eq!(p.d_x(), Poly2::from_terms([(int(1), 1, 0), (int(2), 0, 1)]));
        // along t = 2 + x: (2 + x) x + x² = 2x + 2x²
        let line = p.along(&Poly1::linear(int(2), int(1)));
        assert_eq!(line, Poly1::new(vec![int(0), int(2), int(2)]));
        assert_eq!(p.at_x(&int(3)), Poly1::new(vec![int(9), int(3)]));
        assert_eq!(p.at_t(&int(0)), Poly1::new(vec![int(0), int(0), int(1)]));
        assert_eq!(p.eval(&int(2), &int(3)), int(15));
        let m = p.mul_t(&Poly1::new(vec![int(0), int(1)]));
        assert_eq!(m.eval(&int(2), &int(3)), int(30));
    }
}
