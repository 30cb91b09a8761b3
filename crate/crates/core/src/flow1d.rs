//! One-dimensional flows.
//!
//! For a continuous field `b > 0` on `(α, β)` with `b(α) = b(β) = 0` the flow
//! is `X(t, x) = F^-1(F(x) + t)` with `F(x) = ∫_{x0}^x dy/b(y)`. For the graph
//! field of a stage function, characteristics are piecewise linear in `t`
//! and checked exactly.

use std::fmt::Write as _;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};

use crate::ce_residual::GraphField;
use crate::error::{Error, Result};
use crate::measures::AtomicMeasure;
use crate::pwl::PwlFunction;
use crate::quad;
use crate::rational::{self, Rational};
use crate::testfn::SmoothFn;

/// Tolerance on `x` for the inverse of `F`.
pub const BISECTION_TOL: f64 = 1e-12;

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A continuous field with one sign interval `(α, β)` on which it is
/// positive. Either end may be infinite.
#[derive(Clone)]
pub struct ContinuousField1D {
    pub name: String,
    b: ScalarFn,
    pub alpha: f64,
    pub beta: f64,
    /// `sup |b|` on the interval.
    pub bound: f64,
    /// Finite ends are approached no closer than `delta`.
    pub delta: f64,
    /// Absolute quadrature tolerance for `F`.
    pub tol: f64,
}

impl std::fmt::Debug for ContinuousField1D {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ContinuousField1D")
            .field("name", &self.name)
            .field("alpha", &self.alpha)
            .field("beta", &self.beta)
            .finish()
    }
}

impl ContinuousField1D {
    pub fn new(
        name: impl Into<String>,
        b: impl Fn(f64) -> f64 + Send + Sync + 'static,
        alpha: f64,
        beta: f64,
        bound: f64,
    ) -> Self {
        Self { name: name.into(), b: Arc::new(b), alpha, beta, bound, delta: 1e-12, tol: 1e-13 }
    }

    /// `b ≡ 1` on the whole line.
    pub fn unit() -> Self {
        Self::new("unit", |_| 1.0, f64::NEG_INFINITY, f64::INFINITY, 1.0)
    }

    /// `b(x) = x(1 - x)` on `(0, 1)`: `F(x) = ln(x/(1-x))` from `x0 = 1/2`
    /// and `X(t, x) = σ(F(x) + t)`.
    pub fn logistic() -> Self {
        Self::new("logistic", |x| x * (1.0 - x), 0.0, 1.0, 0.25)
    }

    pub fn b(&self, x: f64) -> f64 {
        (self.b)(x)
    }

    fn lo(&self) -> f64 {
        self.alpha + self.delta
    }

    fn hi(&self) -> f64 {
        self.beta - self.delta
    }

    fn check_domain(&self, x: f64) -> Result<()> {
        if x.is_finite() && x >= self.lo() && x <= self.hi() {
            Ok(())
        } else {
            Err(Error::DomainViolation { x, alpha: self.alpha, beta: self.beta })
        }
    }

    /// `∫_a^b dy / b(y)` for `a, b` inside the clamped interval.
    fn inv_integral(&self, a: f64, b: f64) -> Result<f64> {
        quad::adaptive_gk(&|y| 1.0 / self.b(y), a, b, self.tol)
    }

    /// `F(x) = ∫_{x0}^x dy/b(y)`.
    pub fn f_of(&self, x0: f64, x: f64) -> Result<f64> {
        self.check_domain(x0)?;
        self.check_domain(x)?;
        self.inv_integral(x0, x)
    }

    /// `X(t, x)`: the point `y` with `∫_x^y 1/b = t`, by bisection to
    /// [`BISECTION_TOL`]. The integral is accumulated from the lower end of
    /// the bracket so every step integrates over the current bracket only.
    pub fn flow(&self, t: f64, x: f64) -> Result<f64> {
        self.check_domain(x)?;
        if t == 0.0 {
            return Ok(x);
        }
        let forward = t > 0.0;
        let target = t.abs();
        // Distance integral from x towards the end the flow moves to.
        let dist = |a: f64, b: f64| -> Result<f64> { Ok(self.inv_integral(a, b)?.abs()) };
        let end = if forward { self.hi() } else { self.lo() };
        let mut far = if end.is_finite() {
            end
        } else {
            let mut step = 1.0;
            loop {
                let cand = if forward { x + step } else { x - step };
                if dist(x, cand)? >= target {
                    break cand;
                }
                step *= 2.0;
                if step > 1e300 {
                    return Err(Error::BracketFailure(t));
                }
            }
        };
        if dist(x, far)? < target {
            return Err(Error::BracketFailure(t));
        }
        let mut near = x;
        let mut g_near = 0.0;
        while (far - near).abs() > BISECTION_TOL {
            let mid = 0.5 * (near + far);
            let g_mid = g_near + dist(near, mid)?;
            if g_mid < target {
                near = mid;
                g_near = g_mid;
            } else {
                far = mid;
            }
        }
        Ok(0.5 * (near + far))
    }

    /// `F(α + δ)` and `F(β - δ)` for each `δ` (from `x0`); errors unless
    /// both move monotonically outwards as `δ` decreases, the numerical form
    /// of `F(α+) = -∞`, `F(β-) = +∞`.
    pub fn endpoint_divergence(&self, x0: f64, deltas: &[f64]) -> Result<Vec<(f64, f64, f64)>> {
        let mut rows = Vec::new();
        for &d in deltas {
            let lo = if self.alpha.is_finite() { self.inv_integral(x0, self.alpha + d)? } else { f64::NEG_INFINITY };
            let hi = if self.beta.is_finite() { self.inv_integral(x0, self.beta - d)? } else { f64::INFINITY };
            rows.push((d, lo, hi));
        }
        for w in rows.windows(2) {
            let shrinking = w[1].0 < w[0].0;
            let (grows_lo, grows_hi) = (w[1].1 < w[0].1, w[1].2 > w[0].2);
            let finite_ok = (!self.alpha.is_finite() || grows_lo) && (!self.beta.is_finite() || grows_hi);
            if !shrinking || !finite_ok {
                return Err(Error::HypothesisViolated(format!(
                    "F does not diverge at the ends of ({}, {})",
                    self.alpha, self.beta
                )));
            }
        }
        Ok(rows)
    }

    /// Classical RK4 for `x' = b(x)` with `steps` equal steps.
    pub fn rk4(&self, t: f64, x: f64, steps: usize) -> f64 {
        let h = t / steps as f64;
        let mut y = x;
        for _ in 0..steps {
            let k1 = self.b(y);
            let k2 = self.b(y + 0.5 * h * k1);
            let k3 = self.b(y + 0.5 * h * k2);
            let k4 = self.b(y + h * k3);
            y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        y
    }
}

/// Terms of the transport identity
/// `⟨μ_τ, Φ(τ)⟩ - ⟨μ̄, Φ(0)⟩ = ∫_0^τ ⟨μ_t, ∂_t Φ + b ∂_x Φ⟩ dt`
/// for `Φ(t, x) = ω(X(τ - t, x))` and `μ_t = X(t, ·)_# μ̄`.
#[derive(Clone, Debug, PartialEq)]
pub struct TransportReport {
    /// `⟨μ_τ, ω⟩` with atoms moved by RK4.
    pub pairing: f64,
    /// `⟨μ̄, ω ∘ X(τ, ·)⟩` with `X` from `F^-1`.
    pub initial: f64,
    pub rhs: f64,
    pub residual: f64,
}

pub const RK4_STEPS: usize = 2000;

/// Evaluates the transport identity for a compactly supported `ω`.
pub fn transport_test(
    cf: &ContinuousField1D,
    omega: &dyn SmoothFn<1>,
    tau: f64,
    mu0: &AtomicMeasure,
    tol: f64,
) -> Result<TransportReport> {
    let atoms: Vec<(f64, f64)> = mu0.atoms().iter().map(|(x, w)| (rational::to_f64(x), *w as f64)).collect();
    let mut pairing = 0.0;
    let mut initial = 0.0;
    let mut rhs = 0.0;
    for &(x, w) in &atoms {
        pairing += w * omega.value(&[cf.rk4(tau, x, RK4_STEPS)]);
        initial += w * omega.value(&[cf.flow(tau, x)?]);
        // Along the characteristic γ(t) = X(t, x):
        // ∂_t Φ = -ω'(X) b(X), ∂_x Φ = ω'(X) b(X) / b(γ).
        let err = std::cell::Cell::new(None);
        let integrand = |t: f64| {
            let g = cf.rk4(t, x, (RK4_STEPS as f64 * t / tau).ceil().max(1.0) as usize);
            match cf.flow(tau - t, g) {
                Ok(xx) => {
                    let d = omega.grad(&[xx])[0] * cf.b(xx);
                    -d + cf.b(g) * d / cf.b(g)
                }
                Err(e) => {
                    err.set(Some(e));
                    0.0
                }
            }
        };
        rhs += w * quad::adaptive_simpson(integrand, 0.0, tau, tol, 20)?;
        if let Some(e) = err.take() {
            return Err(e);
        }
    }
    Ok(TransportReport { pairing, initial, rhs, residual: pairing - initial - rhs })
}

/// One piece of a characteristic on `[t0, t1]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CharPiece {
    Constant(Rational),
    /// `x(t) = x0 + slope (t - t0)`
    Linear {
        x0: Rational,
        slope: Rational,
    },
}

/// A continuous piecewise-linear curve `t ↦ γ(t)` on `[knots[0], knots[n]]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Characteristic {
    pub knots: Vec<Rational>,
    pub pieces: Vec<CharPiece>,
}

impl Characteristic {
    pub fn constant(x: Rational, t_end: Rational) -> Self {
        Self { knots: vec![Rational::zero(), t_end], pieces: vec![CharPiece::Constant(x)] }
    }

    fn piece_value(&self, i: usize, t: &Rational) -> Rational {
        match &self.pieces[i] {
            CharPiece::Constant(x) => x.clone(),
            CharPiece::Linear { x0, slope } => x0 + slope * (t - &self.knots[i]),
        }
    }

    fn piece_slope(&self, i: usize) -> Rational {
        match &self.pieces[i] {
            CharPiece::Constant(_) => Rational::zero(),
            CharPiece::Linear { slope, .. } => slope.clone(),
        }
    }

    /// `γ(t)`; at a knot the right piece is used.
    pub fn eval(&self, t: &Rational) -> Option<Rational> {
        if t < &self.knots[0] || t > self.knots.last().unwrap() {
            return None;
        }
        let i = self.knots.partition_point(|k| k <= t).saturating_sub(1).min(self.pieces.len() - 1);
        Some(self.piece_value(i, t))
    }

    pub fn lipschitz(&self) -> Rational {
        (0..self.pieces.len()).map(|i| self.piece_slope(i).abs()).max().unwrap_or_default()
    }

    /// Polyline rows `t,x,t_float,x_float` at the knots.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,x,t_float,x_float\n");
        for (j, t) in self.knots.iter().enumerate() {
            let x = self.piece_value(j.min(self.pieces.len() - 1), t);
            let _ = writeln!(
                out,
                "{},{},{},{}",
                rational::format(t),
                rational::format(&x),
                rational::format_f64(rational::to_f64(t)),
                rational::format_f64(rational::to_f64(&x))
            );
        }
        out
    }
}

/// The characteristic that waits at `x`, rides the graph of `f` through the
/// monotone run containing `[x, y]`, and waits at the far end. On a
/// decreasing run it starts at `y` and ends at `x`.
pub fn branch_characteristic(gf: &GraphField, x: &Rational, y: &Rational) -> Result<Characteristic> {
    let f = gf.function();
    let t_end = gf.horizon().clone();
    if x > y {
        return Err(Error::InvalidInterval { a: rational::format(x), b: rational::format(y), reason: "need x <= y" });
    }
    let run = f
        .runs()
        .into_iter()
        .find(|r| r.contains_closed(x, y))
        .ok_or_else(|| Error::NotMonotoneRun { x: rational::format(x), y: rational::format(y) })?;
    if x == y {
        return Ok(Characteristic::constant(x.clone(), t_end));
    }
    let (fx, fy) = (f.eval(x).unwrap(), f.eval(y).unwrap());
    let (start, stop, t0, t1) = if run.sign > 0 { (x, y, fx, fy) } else { (y, x, fy, fx) };
    let slope = Rational::from_integer(BigInt::from(run.sign));
    Ok(Characteristic {
        knots: vec![Rational::zero(), t0, t1, t_end],
        pieces: vec![
            CharPiece::Constant(start.clone()),
            CharPiece::Linear { x0: start.clone(), slope },
            CharPiece::Constant(stop.clone()),
        ],
    })
}

/// Worst violation of the three conditions on a characteristic of the graph
/// field: Lipschitz constant at most 1, continuity at the knots, and
/// `γ' = b(t, γ)` for a.e. `t`.
///
/// The a.e. condition is decided exactly: each piece is cut where `γ`
/// crosses a breakpoint of `f`, and on each cut `t ↦ f(γ(t)) - t` is affine,
/// so `(t, γ(t))` is on the graph either identically or at most once. In
/// addition `samples` equally spaced times per piece are checked pointwise,
/// skipping the finitely many times where `γ` meets the graph transversally
/// or sits on a breakpoint.
pub fn verify_characteristic(gamma: &Characteristic, gf: &GraphField, samples: usize) -> Rational {
    let f = gf.function();
    let one = rational::one();
    let mut worst = Rational::zero();
    let mut bump = |v: Rational| {
        if v > worst {
            worst = v;
        }
    };
    let lip = gamma.lipschitz();
    if lip > one {
        bump(lip - &one);
    }
    for i in 1..gamma.pieces.len() {
        let t = &gamma.knots[i];
        bump((gamma.piece_value(i - 1, t) - gamma.piece_value(i, t)).abs());
    }
    for i in 0..gamma.pieces.len() {
        let (t0, t1) = (&gamma.knots[i], &gamma.knots[i + 1]);
        if t0 >= t1 {
            continue;
        }
        let slope = gamma.piece_slope(i);
        let cuts = piece_cuts(gamma, i, f);
        let mut exceptional = Vec::new();
        for w in cuts.windows(2) {
            let mid = (&w[0] + &w[1]) / Rational::from_integer(BigInt::from(2));
            let b = gf.field_at(&mid, &gamma.piece_value(i, &mid));
            let (g0, g1) = (graph_gap(f, gamma, i, &w[0]), graph_gap(f, gamma, i, &w[1]));
            let on_graph_identically = g0.as_ref().is_some_and(Zero::is_zero) && g1.as_ref().is_some_and(Zero::is_zero);
            // Field a.e. on the cut: the graph value if γ rides the graph,
            // zero otherwise.
            let b_ae = if on_graph_identically { b } else { Rational::zero() };
            bump((&slope - b_ae).abs());
            if !on_graph_identically {
                if let (Some(g0), Some(g1)) = (g0, g1) {
                    if g0 != g1 {
                        // crossing time of the affine gap
                        exceptional.push(&w[0] - g0.clone() * (&w[1] - &w[0]) / (g1 - g0));
                    }
                }
            }
        }
        exceptional.extend(cuts.iter().cloned());
        for j in 0..samples {
            let t = t0 + (t1 - t0) * Rational::new(BigInt::from(2 * j + 1), BigInt::from(2 * samples));
            if exceptional.contains(&t) {
                continue;
            }
            let b = gf.field_at(&t, &gamma.piece_value(i, &t));
            bump((&slope - b).abs());
        }
    }
    worst
}

/// `[t0, t1]` of piece `i` cut at every time `γ` passes a breakpoint of `f`.
fn piece_cuts(gamma: &Characteristic, i: usize, f: &PwlFunction) -> Vec<Rational> {
    let (t0, t1) = (&gamma.knots[i], &gamma.knots[i + 1]);
    let mut cuts = vec![t0.clone(), t1.clone()];
    if let CharPiece::Linear { x0, slope } = &gamma.pieces[i] {
        if !slope.is_zero() {
            for bx in f.breakpoints() {
                let t = t0 + (bx - x0) / slope;
                if &t > t0 && &t < t1 {
                    cuts.push(t);
                }
            }
        }
    }
    cuts.sort();
    cuts
}

/// `f(γ(t)) - t`, or `None` if `γ(t)` leaves the domain of `f`.
fn graph_gap(f: &PwlFunction, gamma: &Characteristic, i: usize, t: &Rational) -> Option<Rational> {
    f.eval(&gamma.piece_value(i, t)).map(|v| v - t)
}

/// Two distinct characteristics through one point: inside the longest
/// monotone run `[r0, r1]` take `x = r0 + 3/10 |run|`, `y = r0 + 4/5 |run|`;
/// the constant curve at the start point and the branch characteristic
/// both pass through it at the time the branch leaves.
#[derive(Clone, Debug)]
pub struct NonUniqueness {
    pub point: (Rational, Rational),
    pub constant: Characteristic,
    pub branch: Characteristic,
}

pub fn non_uniqueness_witness(gf: &GraphField) -> Result<NonUniqueness> {
    let f = gf.function();
    let (len, (r0, _)) = f.max_monotone_run();
    let x = &r0 + &len * rational::q(3, 10);
    let y = &r0 + &len * rational::q(4, 5);
    let branch = branch_characteristic(gf, &x, &y)?;
    let start = match &branch.pieces[0] {
        CharPiece::Constant(s) => s.clone(),
        CharPiece::Linear { .. } => unreachable!("branch characteristics start constant"),
    };
    let t = f.eval(&start).expect("start lies in the domain");
    Ok(NonUniqueness {
        point: (t, start.clone()),
        constant: Characteristic::constant(start, gf.horizon().clone()),
        branch,
    })
}
