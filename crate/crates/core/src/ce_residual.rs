//! Weak-form residuals of the graph solution.
//!
//! The field is `b(t, x) = 1/f'(x)` on the graph `{(f(x), x)}` and zero
//! elsewhere. Pairing `∂_t φ + b ∂_x φ` with `μ̃_t` and integrating in time
//! collapses, by the area formula, to the curve integral
//! `∫_0^1 [f'(x) ∂_t φ(f(x), x) + ∂_x φ(f(x), x)] dx`, evaluated piece by
//! piece over the linear segments of `f`.

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::poly::Poly1;
use crate::pwl::PwlFunction;
use crate::quad;
use crate::rational::{self, Rational};
use crate::testfn::{PolyTest, TestFunction1D};

pub const DEFAULT_HORIZON: i64 = 4;
pub const DEFAULT_TOL: f64 = 1e-10;

/// Below this `|φ(T, x)|` counts as zero in floating point.
const SUPPORT_EPS: f64 = 1e-12;

/// The field carried by the graph of `f` on the time interval `[0, T]`.
#[derive(Clone, Debug)]
pub struct GraphField {
    f: PwlFunction,
    horizon: Rational,
}

impl GraphField {
    /// Field of a stage function with `T = 4`.
    pub fn new(f: PwlFunction) -> Result<Self> {
        Self::with_horizon(f, rational::int(DEFAULT_HORIZON))
    }

    pub fn with_horizon(f: PwlFunction, horizon: Rational) -> Result<Self> {
        if !f.has_unit_slopes() {
            return Err(Error::InvalidPwl("graph fields need slopes ±1".into()));
        }
        let crit = f.critical_values();
        if !crit[0].is_positive() || crit.last().unwrap() >= &horizon {
            return Err(Error::InvalidPwl(format!(
                "range [{}, {}] not inside (0, {})",
                rational::format(&crit[0]),
                rational::format(crit.last().unwrap()),
                rational::format(&horizon)
            )));
        }
        Ok(Self { f, horizon })
    }

    pub fn function(&self) -> &PwlFunction {
        &self.f
    }

    pub fn horizon(&self) -> &Rational {
        &self.horizon
    }

    /// `1/f'(x)` when `t = f(x)` and `x` is not a breakpoint, else `0`.
    pub fn field_at(&self, t: &Rational, x: &Rational) -> Rational {
        match (self.f.slope_at(x), self.f.eval(x)) {
            (Some(s), Some(v)) if &v == t => s.recip(),
            _ => Rational::zero(),
        }
    }

    fn endpoints(&self) -> ((Rational, Rational), (Rational, Rational)) {
        let (x0, x1) = self.f.domain();
        let v = self.f.values();
        ((x0.clone(), v[0].clone()), (x1.clone(), v.last().unwrap().clone()))
    }

    /// `φ(f(1), 1) - φ(f(0), 0)`, exactly.
    pub fn defect_exact(&self, phi: &PolyTest) -> Rational {
        let ((x0, f0), (x1, f1)) = self.endpoints();
        phi.eval(&f1, &x1) - phi.eval(&f0, &x0)
    }

    pub fn defect(&self, phi: &dyn TestFunction1D) -> f64 {
        let ((x0, f0), (x1, f1)) = self.endpoints();
        let r = rational::to_f64;
        phi.value(r(&f1), r(&x1)) - phi.value(r(&f0), r(&x0))
    }

    /// The curve integral, in exact arithmetic: every linear piece of `f` is
    /// cut where `f` crosses a knot of the cutoff, and on each cut the
    /// integrand is a polynomial in `x`.
    pub fn residual_tilde_exact(&self, phi: &PolyTest) -> Rational {
        let xs = self.f.breakpoints();
        let vs = self.f.values();
        let mut total = Rational::zero();
        for (i, s) in self.f.slopes().iter().enumerate() {
            let (a, b) = (&xs[i], &xs[i + 1]);
            // t(x) = v_i + s (x - x_i)
            let tx = Poly1::linear(&vs[i] - s * a, s.clone());
            let mut cuts = vec![a.clone()];
            for k in phi.psi.knots() {
                let x = a + (k - &vs[i]) / s;
                if &x > a && &x < b {
                    cuts.push(x);
                }
            }
            cuts.push(b.clone());
            cuts.sort();
            for w in cuts.windows(2) {
                let mid = (&w[0] + &w[1]) / Rational::from_integer(BigInt::from(2));
                let piece = phi.piece(phi.psi.piece_index(&tx.eval(&mid)));
                let integrand = &piece.d_t().along(&tx).scale(s) + &piece.d_x().along(&tx);
                total += integrand.integrate(&w[0], &w[1]);
            }
        }
        total
    }

    /// The curve integral by adaptive Simpson on each linear piece, split
    /// where the graph crosses a time knot of `φ`.
    pub fn residual_tilde(&self, phi: &dyn TestFunction1D, tol: f64) -> Result<f64> {
        let xs: Vec<f64> = self.f.breakpoints().iter().map(rational::to_f64).collect();
        let vs: Vec<f64> = self.f.values().iter().map(rational::to_f64).collect();
        let knots = phi.time_knots();
        let n = self.f.num_pieces() as f64;
        let mut total = 0.0;
        for (i, s) in self.f.slopes().iter().enumerate() {
            let s = if s.is_positive() { 1.0 } else { -1.0 };
            let (a, v) = (xs[i], vs[i]);
            let t = |x: f64| v + s * (x - a);
            let g = |x: f64| s * phi.dt(t(x), x) + phi.dx(t(x), x);
            let xk: Vec<f64> = knots.iter().map(|k| a + s * (k - v)).collect();
            total += quad::simpson_with_knots(g, a, xs[i + 1], &xk, tol / n)?;
        }
        Ok(total)
    }

    /// Errors unless `φ(T, ·)` vanishes identically.
    pub fn check_support_exact(&self, phi: &PolyTest) -> Result<()> {
        let at_t = phi.piece(phi.psi.piece_index(&self.horizon)).at_t(&self.horizon);
        if at_t.is_zero() {
            return Ok(());
        }
        let worst = (0..=20).map(|j| at_t.eval_f64(j as f64 / 20.0).abs()).fold(0.0, f64::max);
        Err(Error::SupportViolation(worst))
    }

    /// Checks `φ(T, x) = 0` on a grid of 101 points of the domain.
    pub fn check_support(&self, phi: &dyn TestFunction1D) -> Result<()> {
        let t = rational::to_f64(&self.horizon);
        let worst = (0..=100).map(|j| phi.value(t, j as f64 / 100.0).abs()).fold(0.0, f64::max);
        if worst > SUPPORT_EPS {
            return Err(Error::SupportViolation(worst));
        }
        Ok(())
    }

    /// Residual of `μ_t = μ̃_t + 1[t ≥ f(1)] δ_1 - 1[t ≥ f(0)] δ_0`: the curve
    /// integral plus `∫_{f(1)}^T ∂_t φ(t, 1) dt - ∫_{f(0)}^T ∂_t φ(t, 0) dt`.
    /// Zero initial data makes the expected value `0`.
    pub fn residual_full_exact(&self, phi: &PolyTest) -> Result<Rational> {
        self.check_support_exact(phi)?;
        let ((x0, f0), (x1, f1)) = self.endpoints();
        let trail = |x: &Rational, from: &Rational| -> Rational {
            let mut acc = Rational::zero();
            for i in 0..phi.num_pieces() {
                let (lo, hi) = phi.psi.piece_bounds(i);
                let a = lo.map_or(from.clone(), |l| l.max(from).clone());
                let b = hi.map_or(self.horizon.clone(), |h| h.min(&self.horizon).clone());
                if a < b {
                    acc += phi.piece(i).d_t().at_x(x).integrate(&a, &b);
                }
            }
            acc
        };
        Ok(self.residual_tilde_exact(phi) + trail(&x1, &f1) - trail(&x0, &f0))
    }

    pub fn residual_full(&self, phi: &dyn TestFunction1D, tol: f64) -> Result<f64> {
        self.check_support(phi)?;
        let ((x0, f0), (x1, f1)) = self.endpoints();
        let r = rational::to_f64;
        let t_end = r(&self.horizon);
        let knots = phi.time_knots();
        let trail = |x: f64, from: f64| quad::simpson_with_knots(|t| phi.dt(t, x), from, t_end, &knots, tol / 4.0);
        Ok(self.residual_tilde(phi, tol / 2.0)? + trail(r(&x1), r(&f1))? - trail(r(&x0), r(&f0))?)
    }
}

/// One line of a residual report.
#[derive(Clone, Debug, Serialize)]
pub struct ResidualRow {
    pub stage: usize,
    pub test_id: String,
    pub residual_tilde: String,
    pub defect: String,
    pub residual_full: String,
    pub mode: &'static str,
    pub tol: Option<f64>,
    pub pass: bool,
}

/// Exact rows: the curve integral must equal the defect and the full
/// residual must vanish, both without rounding.
pub fn exact_rows(stage: usize, gf: &GraphField, suite: &[PolyTest]) -> Result<Vec<ResidualRow>> {
    suite
        .par_iter()
        .map(|phi| {
            let rt = gf.residual_tilde_exact(phi);
            let d = gf.defect_exact(phi);
            let full = gf.residual_full_exact(phi)?;
            Ok(ResidualRow {
                stage,
                test_id: phi.id.clone(),
                pass: rt == d && full.is_zero(),
                residual_tilde: rational::format(&rt),
                defect: rational::format(&d),
                residual_full: rational::format(&full),
                mode: "exact",
                tol: None,
            })
        })
        .collect()
}

/// Float rows: `|residual - defect| ≤ check` and `|full| ≤ check` with
/// quadrature at tolerance `tol`.
pub fn float_rows(
    stage: usize,
    gf: &GraphField,
    suite: &[Box<dyn TestFunction1D>],
    tol: f64,
    check: f64,
) -> Result<Vec<ResidualRow>> {
    suite
        .par_iter()
        .map(|phi| {
            let rt = gf.residual_tilde(phi.as_ref(), tol)?;
            let d = gf.defect(phi.as_ref());
            let full = gf.residual_full(phi.as_ref(), tol)?;
            Ok(ResidualRow {
                stage,
                test_id: phi.name(),
                pass: (rt - d).abs() <= check && full.abs() <= check,
                residual_tilde: rational::format_f64(rt),
                defect: rational::format_f64(d),
                residual_full: rational::format_f64(full),
                mode: "float",
                tol: Some(tol),
            })
        })
        .collect()
}
