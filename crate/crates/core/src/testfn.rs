//! Test functions for the weak formulations.
//!
//! One-dimensional test functions live in `(t, x)`. The exact family
//! `ψ(t) p(t, x)` uses a piecewise-polynomial `C¹` cutoff with rational knots
//! so that every residual along the graph is a finite sum of polynomial
//! integrals. Smooth families (bumps, products with transcendental factors)
//! are evaluated in floating point.
//!
//! [`SmoothFn`] covers test functions on `ℝ^N` for the planar construction.

use num_traits::{One, Zero};

use crate::poly::{Poly1, Poly2};
use crate::rational::{self, Rational};

/// A `C¹` function of `(t, x)` with its two partial derivatives.
pub trait TestFunction1D: Send + Sync {
    fn name(&self) -> String;
    fn value(&self, t: f64, x: f64) -> f64;
    fn dt(&self, t: f64, x: f64) -> f64;
    fn dx(&self, t: f64, x: f64) -> f64;

    /// Times at which the function is only piecewise smooth.
    fn time_knots(&self) -> Vec<f64> {
        Vec::new()
    }

    /// Exact representation, when there is one.
    fn as_poly(&self) -> Option<&PolyTest> {
        None
    }
}

/// Piecewise polynomial on ℝ: `polys[0]` on `(-∞, knots[0]]`, `polys[i]` on
/// `[knots[i-1], knots[i]]`, the last one on `[knots[n-1], ∞)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PiecewisePoly1 {
    knots: Vec<Rational>,
    polys: Vec<Poly1>,
}

impl PiecewisePoly1 {
    pub fn new(knots: Vec<Rational>, polys: Vec<Poly1>) -> Self {
        assert_eq!(polys.len(), knots.len() + 1, "one polynomial per knot gap");
        assert!(knots.windows(2).all(|w| w[0] < w[1]), "knots must increase");
        Self { knots, polys }
    }

    pub fn constant(c: Rational) -> Self {
        Self::new(Vec::new(), vec![Poly1::constant(c)])
    }

    /// `1` up to `a`, `1 - 3u² + 2u³` with `u = (t - a)/(b - a)` on `[a, b]`,
    /// `0` after `b`.
    pub fn cutoff(a: Rational, b: Rational) -> Self {
        let down = smoothstep_down(&a, &b);
        Self::new(vec![a, b], vec![Poly1::constant(Rational::one()), down, Poly1::zero()])
    }

    /// `0` before `a0`, rising to `1` on `[a0, b0]`, `1` until `a1`, falling
    /// to `0` on `[a1, b1]`.
    pub fn plateau(a0: Rational, b0: Rational, a1: Rational, b1: Rational) -> Self {
        let one = Poly1::constant(Rational::one());
        let up = &one - &smoothstep_down(&a0, &b0);
        let down = smoothstep_down(&a1, &b1);
        Self::new(vec![a0, b0, a1, b1], vec![Poly1::zero(), up, one, down, Poly1::zero()])
    }

    pub fn knots(&self) -> &[Rational] {
        &self.knots
    }

    pub fn polys(&self) -> &[Poly1] {
        &self.polys
    }

    /// Index of the piece containing `t`; knots belong to the left piece.
    pub fn piece_index(&self, t: &Rational) -> usize {
        self.knots.partition_point(|k| k < t)
    }

    pub fn piece_index_f64(&self, t: f64) -> usize {
        self.knots.partition_point(|k| rational::to_f64(k) < t)
    }

    /// `[lo, hi]` of piece `i`, `None` meaning unbounded.
    pub fn piece_bounds(&self, i: usize) -> (Option<&Rational>, Option<&Rational>) {
        (i.checked_sub(1).map(|j| &self.knots[j]), self.knots.get(i))
    }

    pub fn eval(&self, t: &Rational) -> Rational {
        self.polys[self.piece_index(t)].eval(t)
    }

    pub fn eval_f64(&self, t: f64) -> f64 {
        self.polys[self.piece_index_f64(t)].eval_f64(t)
    }

    pub fn derivative(&self) -> Self {
        Self::new(self.knots.clone(), self.polys.iter().map(Poly1::derivative).collect())
    }

    /// Largest jump of value or first derivative across the knots.
    pub fn c1_defect(&self) -> Rational {
        let d = self.derivative();
        let mut worst = Rational::zero();
        for (i, k) in self.knots.iter().enumerate() {
            for p in [&self.polys, &d.polys] {
                let jump = rational::abs(&(p[i + 1].eval(k) - p[i].eval(k)));
                if jump > worst {
                    worst = jump;
                }
            }
        }
        worst
    }
}

fn smoothstep_down(a: &Rational, b: &Rational) -> Poly1 {
    // u = (t - a)/(b - a); 1 - 3u² + 2u³
    let w = b - a;
    let u = Poly1::linear(-a / &w, Rational::one() / &w);
    let u2 = &u * &u;
    let u3 = &u2 * &u;
    let three = Rational::from_integer(3.into());
    let two = Rational::from_integer(2.into());
    &(&Poly1::constant(Rational::one()) - &u2.scale(&three)) + &u3.scale(&two)
}

/// `φ(t, x) = ψ(t) p(t, x)` with `ψ` piecewise polynomial and `p` a
/// polynomial, all coefficients rational.
#[derive(Clone, Debug)]
pub struct PolyTest {
    pub id: String,
    pub psi: PiecewisePoly1,
    pub p: Poly2,
    pieces: Vec<Poly2>,
}

impl PolyTest {
    pub fn new(id: impl Into<String>, psi: PiecewisePoly1, p: Poly2) -> Self {
        let pieces = psi.polys().iter().map(|q| p.mul_t(q)).collect();
        Self { id: id.into(), psi, p, pieces }
    }

    /// `φ` restricted to piece `i` of the cutoff, as one polynomial.
    pub fn piece(&self, i: usize) -> &Poly2 {
        &self.pieces[i]
    }

    pub fn num_pieces(&self) -> usize {
        self.pieces.len()
    }

    pub fn eval(&self, t: &Rational, x: &Rational) -> Rational {
        self.pieces[self.psi.piece_index(t)].eval(t, x)
    }

    pub fn dt_exact(&self, t: &Rational, x: &Rational) -> Rational {
        self.pieces[self.psi.piece_index(t)].d_t().eval(t, x)
    }

    pub fn dx_exact(&self, t: &Rational, x: &Rational) -> Rational {
        self.pieces[self.psi.piece_index(t)].d_x().eval(t, x)
    }
}

impl TestFunction1D for PolyTest {
    fn name(&self) -> String {
        self.id.clone()
    }
    fn value(&self, t: f64, x: f64) -> f64 {
        self.pieces[self.psi.piece_index_f64(t)].eval_f64(t, x)
    }
    fn dt(&self, t: f64, x: f64) -> f64 {
        self.pieces[self.psi.piece_index_f64(t)].d_t().eval_f64(t, x)
    }
    fn dx(&self, t: f64, x: f64) -> f64 {
        self.pieces[self.psi.piece_index_f64(t)].d_x().eval_f64(t, x)
    }
    fn time_knots(&self) -> Vec<f64> {
        self.psi.knots().iter().map(rational::to_f64).collect()
    }
    fn as_poly(&self) -> Option<&PolyTest> {
        Some(self)
    }
}

/// `β(u) = exp(-1/(1 - u²))` on `|u| < 1`, zero outside.
pub fn bump(u: f64) -> f64 {
    if u.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - u * u)).exp()
    }
}

pub fn bump_deriv(u: f64) -> f64 {
    if u.abs() >= 1.0 {
        0.0
    } else {
        let s = 1.0 - u * u;
        bump(u) * (-2.0 * u / (s * s))
    }
}

/// `β((t - tc)/rt) β((x - xc)/rx)`.
#[derive(Clone, Debug)]
pub struct TensorBump {
    pub tc: f64,
    pub rt: f64,
    pub xc: f64,
    pub rx: f64,
}

impl TestFunction1D for TensorBump {
    fn name(&self) -> String {
        format!("bump(t={}±{},x={}±{})", self.tc, self.rt, self.xc, self.rx)
    }
    fn value(&self, t: f64, x: f64) -> f64 {
        bump((t - self.tc) / self.rt) * bump((x - self.xc) / self.rx)
    }
    fn dt(&self, t: f64, x: f64) -> f64 {
        bump_deriv((t - self.tc) / self.rt) / self.rt * bump((x - self.xc) / self.rx)
    }
    fn dx(&self, t: f64, x: f64) -> f64 {
        bump((t - self.tc) / self.rt) * bump_deriv((x - self.xc) / self.rx) / self.rx
    }
    fn time_knots(&self) -> Vec<f64> {
        vec![self.tc - self.rt, self.tc + self.rt]
    }
}

/// Spatial factor of a [`ProductTest`].
#[derive(Clone, Copy, Debug)]
pub enum SpaceFactor {
    /// `sin(k x)`
    Sin(f64),
    /// `exp(k x)`
    Exp(f64),
    /// `exp(-(x - c)²/w²)`
    Gaussian { c: f64, w: f64 },
}

impl SpaceFactor {
    fn eval(&self, x: f64) -> (f64, f64) {
        match *self {
            Self::Sin(k) => ((k * x).sin(), k * (k * x).cos()),
            Self::Exp(k) => ((k * x).exp(), k * (k * x).exp()),
            Self::Gaussian { c, w } => {
                let g = (-(x - c).powi(2) / (w * w)).exp();
                (g, -2.0 * (x - c) / (w * w) * g)
            }
        }
    }
}

/// `ψ(t) g(x)` with `ψ` a piecewise-polynomial cutoff.
#[derive(Clone, Debug)]
pub struct ProductTest {
    pub psi: PiecewisePoly1,
    pub g: SpaceFactor,
    dpsi: PiecewisePoly1,
}

impl ProductTest {
    pub fn new(psi: PiecewisePoly1, g: SpaceFactor) -> Self {
        let dpsi = psi.derivative();
        Self { psi, g, dpsi }
    }
}

impl TestFunction1D for ProductTest {
    fn name(&self) -> String {
        format!("product({:?})", self.g)
    }
    fn value(&self, t: f64, x: f64) -> f64 {
        self.psi.eval_f64(t) * self.g.eval(x).0
    }
    fn dt(&self, t: f64, x: f64) -> f64 {
        self.dpsi.eval_f64(t) * self.g.eval(x).0
    }
    fn dx(&self, t: f64, x: f64) -> f64 {
        self.psi.eval_f64(t) * self.g.eval(x).1
    }
    fn time_knots(&self) -> Vec<f64> {
        self.psi.knots().iter().map(rational::to_f64).collect()
    }
}

/// The cutoff that is `1` on the range `[1, 3]` of every stage function and
/// vanishes from `t = 7/2` on.
pub fn canonical_cutoff() -> PiecewisePoly1 {
    PiecewisePoly1::cutoff(rational::int(3), rational::q(7, 2))
}

/// `x ψ(t)` with the canonical cutoff.
pub fn canonical_test() -> PolyTest {
    PolyTest::new("x", canonical_cutoff(), Poly2::from_terms([(rational::one(), 0, 1)]))
}

/// Twelve exact test functions. Some cutoffs have knots inside `[1, 3]` so
/// that the residual integrals cross them.
pub fn polynomial_suite() -> Vec<PolyTest> {
    use rational::{int, q};
    let c = canonical_cutoff;
    let mid = || PiecewisePoly1::plateau(q(3, 2), int(2), q(5, 2), int(3));
    let early = || PiecewisePoly1::cutoff(q(1, 2), int(1));
    let late = || PiecewisePoly1::plateau(q(9, 4), q(5, 2), q(13, 4), q(15, 4));
    let t = |terms: &[(i64, i64, u32, u32)]| Poly2::from_terms(terms.iter().map(|&(n, d, i, j)| (q(n, d), i, j)));
    vec![
        PolyTest::new("x", c(), t(&[(1, 1, 0, 1)])),
        PolyTest::new("x^2", c(), t(&[(1, 1, 0, 2)])),
        PolyTest::new("t*x", c(), t(&[(1, 1, 1, 1)])),
        PolyTest::new("x^3-x/2", c(), t(&[(1, 1, 0, 3), (-1, 2, 0, 1)])),
        PolyTest::new("t^2*x+1", c(), t(&[(1, 1, 2, 1), (1, 1, 0, 0)])),
        PolyTest::new("x*(1-x)", c(), t(&[(1, 1, 0, 1), (-1, 1, 0, 2)])),
        PolyTest::new("t+x", c(), t(&[(1, 1, 1, 0), (1, 1, 0, 1)])),
        PolyTest::new("1", c(), t(&[(1, 1, 0, 0)])),
        PolyTest::new("plateau*x^2*t", mid(), t(&[(1, 1, 1, 2)])),
        PolyTest::new("plateau*(x^4-t*x)", late(), t(&[(1, 1, 0, 4), (-1, 1, 1, 1)])),
        PolyTest::new("early*x", early(), t(&[(1, 1, 0, 1)])),
        PolyTest::new("plateau*(3t^3x^2-2/3)", mid(), t(&[(3, 1, 3, 2), (-2, 3, 0, 0)])),
    ]
}

/// Float-only test functions: tensor bumps and cutoff products.
pub fn smooth_suite() -> Vec<Box<dyn TestFunction1D>> {
    use rational::{int, q};
    vec![
        Box::new(TensorBump { tc: 2.4, rt: 1.4, xc: 0.5, rx: 0.7 }),
        Box::new(TensorBump { tc: 2.2, rt: 0.5, xc: 0.3, rx: 0.4 }),
        Box::new(ProductTest::new(canonical_cutoff(), SpaceFactor::Sin(3.0))),
        Box::new(ProductTest::new(PiecewisePoly1::plateau(q(3, 2), int(2), q(5, 2), int(3)), SpaceFactor::Exp(1.5))),
        Box::new(ProductTest::new(canonical_cutoff(), SpaceFactor::Gaussian { c: 0.6, w: 0.2 })),
    ]
}

/// A `C¹` function on `ℝ^N` with its gradient.
pub trait SmoothFn<const N: usize>: Send + Sync {
    fn name(&self) -> String;
    fn value(&self, p: &[f64; N]) -> f64;
    fn grad(&self, p: &[f64; N]) -> [f64; N];
}

/// `Σ c · Π p_i^{e_i}`.
#[derive(Clone, Debug)]
pub struct Polynomial<const N: usize> {
    pub terms: Vec<(f64, [u32; N])>,
}

impl<const N: usize> SmoothFn<N> for Polynomial<N> {
    fn name(&self) -> String {
        let parts: Vec<String> = self.terms.iter().map(|(c, e)| format!("{c}*{e:?}")).collect();
        format!("poly[{}]", parts.join("+"))
    }
    fn value(&self, p: &[f64; N]) -> f64 {
        self.terms.iter().map(|(c, e)| c * (0..N).map(|i| p[i].powi(e[i] as i32)).product::<f64>()).sum()
    }
    fn grad(&self, p: &[f64; N]) -> [f64; N] {
        let mut g = [0.0; N];
        for (c, e) in &self.terms {
            for (k, gk) in g.iter_mut().enumerate() {
                if e[k] == 0 {
                    continue;
                }
                let mut v = c * e[k] as f64;
                for i in 0..N {
                    let ei = if i == k { e[i] - 1 } else { e[i] };
                    v *= p[i].powi(ei as i32);
                }
                *gk += v;
            }
        }
        g
    }
}

/// `exp(-|p - c|²/w²)`.
#[derive(Clone, Debug)]
pub struct Gaussian<const N: usize> {
    pub center: [f64; N],
    pub width: f64,
}

impl<const N: usize> SmoothFn<N> for Gaussian<N> {
    fn name(&self) -> String {
        format!("gauss(c={:?},w={})", self.center, self.width)
    }
    fn value(&self, p: &[f64; N]) -> f64 {
        let r2: f64 = (0..N).map(|i| (p[i] - self.center[i]).powi(2)).sum();
        (-r2 / (self.width * self.width)).exp()
    }
    fn grad(&self, p: &[f64; N]) -> [f64; N] {
        let v = self.value(p);
        let s = -2.0 / (self.width * self.width);
        std::array::from_fn(|i| s * (p[i] - self.center[i]) * v)
    }
}

/// `β(|p - c|/r)`, compactly supported in the ball of radius `r`.
#[derive(Clone, Debug)]
pub struct Bump<const N: usize> {
    pub center: [f64; N],
    pub radius: f64,
}

impl<const N: usize> SmoothFn<N> for Bump<N> {
    fn name(&self) -> String {
        format!("bump(c={:?},r={})", self.center, self.radius)
    }
    fn value(&self, p: &[f64; N]) -> f64 {
        let r2: f64 = (0..N).map(|i| (p[i] - self.center[i]).powi(2)).sum();
        let u2 = r2 / (self.radius * self.radius);
        if u2 >= 1.0 {
            0.0
        } else {
            (-1.0 / (1.0 - u2)).exp()
        }
    }
    fn grad(&self, p: &[f64; N]) -> [f64; N] {
        let r2: f64 = (0..N).map(|i| (p[i] - self.center[i]).powi(2)).sum();
        let rr = self.radius * self.radius;
        let u2 = r2 / rr;
        if u2 >= 1.0 {
            return [0.0; N];
        }
        let v = (-1.0 / (1.0 - u2)).exp();
        // d/dp exp(-1/(1-u²)) = -v / (1-u²)² · 2(p - c)/r²
        let s = -v / (1.0 - u2).powi(2) * 2.0 / rr;
        std::array::from_fn(|i| s * (p[i] - self.center[i]))
    }
}

/// Constant function.
#[derive(Clone, Copy, Debug)]
pub struct Constant(pub f64);

impl<const N: usize> SmoothFn<N> for Constant {
    fn name(&self) -> String {
        format!("const({})", self.0)
    }
    fn value(&self, _: &[f64; N]) -> f64 {
        self.0
    }
    fn grad(&self, _: &[f64; N]) -> [f64; N] {
        [0.0; N]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, q};

    #[test]
    fn cutoffs_are_c1() {
        let c = canonical_cutoff();
        assert!(c.c1_defect().is_zero());
        assert_eq!(c.eval(&int(2)), int(1));
        assert_eq!(c.eval(&int(4)), int(0));
        assert_eq!(c.eval(&q(13, 4)), q(1, 2));
        let p = PiecewisePoly1::plateau(q(3, 2), int(2), q(5, 2), int(3));
        assert!(p.c1_defect().is_zero());
        assert_eq!(p.eval(&q(9, 4)), int(1));
        assert_eq!(p.eval(&q(7, 4)), q(1, 2));
    }

    #[test]
    fn poly_test_derivatives() {
        let phi = PolyTest::new("t*x", canonical_cutoff(), Poly2::from_terms([(int(1), 1, 1)]));
        assert_eq!(phi.eval(&int(2), &q(1, 2)), int(1));
        assert_eq!(phi.dt_exact(&int(2), &q(1, 2)), q(1, 2));
        assert_eq!(phi.dx_exact(&int(2), &q(1, 2)), int(2));
        assert_eq!(phi.eval(&int(4), &int(1)), int(0));
        let h = 1e-6;
        let (t, x) = (3.2, 0.7);
        let fd = (phi.value(t + h, x) - phi.value(t - h, x)) / (2.0 * h);
        assert!((fd - phi.dt(t, x)).abs() < 1e-6);
    }

    #[test]
    fn float_derivatives_match_differences() {
        let h = 1e-6;
        for f in smooth_suite() {
            for &(t, x) in &[(2.1, 0.4), (2.9, 0.55), (3.3, 0.2)] {
                let ft = (f.value(t + h, x) - f.value(t - h, x)) / (2.0 * h);
                let fx = (f.value(t, x + h) - f.value(t, x - h)) / (2.0 * h);
                assert!((ft - f.dt(t, x)).abs() < 1e-6, "{}", f.name());
                assert!((fx - f.dx(t, x)).abs() < 1e-6, "{}", f.name());
            }
        }
    }

    #[test]
    fn smooth_fn_gradients() {
        let fs: Vec<Box<dyn SmoothFn<3>>> = vec![
            Box::new(Polynomial { terms: vec![(2.0, [1, 2, 0]), (-1.0, [0, 0, 3])] }),
            Box::new(Gaussian { center: [0.1, 0.2, 0.3], width: 0.5 }),
            Box::new(Bump { center: [0.0, 0.0, 0.2], radius: 0.9 }),
        ];
        let p = [0.3, -0.2, 0.4];
        let h = 1e-6;
        for f in &fs {
            let g = f.grad(&p);
            for i in 0..3 {
                let mut a = p;
                let mut b = p;
                a[i] += h;
                b[i] -= h;
                let fd = (f.value(&a) - f.value(&b)) / (2.0 * h);
                assert!((fd - g[i]).abs() < 1e-6, "{} d{i}", f.name());
            }
        }
    }
}
