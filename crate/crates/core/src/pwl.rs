//! Exact continuous piecewise-linear functions: evaluation, level sets,
//! monotone runs and the level sweep behind preimage counting.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::{self, Rational};
use crate::stagegen::{SlopeFunction, StageState};

/// Continuous piecewise-linear function given by its values on a strictly
/// increasing list of breakpoints. Every piece has a nonzero slope.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PwlFunction {
    xs: Vec<Rational>,
    vs: Vec<Rational>,
    slopes: Vec<Rational>,
}

/// A solution of `f(x) = t` together with the sign of `f'` there.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Preimage {
    pub location: Rational,
    pub slope_sign: i8,
}

/// Maximal interval of constant slope sign.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Run {
    pub start: Rational,
    pub end: Rational,
    pub sign: i8,
}

impl Run {
    pub fn len(&self) -> Rational {
        &self.end - &self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start >= self.end
    }

    pub fn contains_closed(&self, a: &Rational, b: &Rational) -> bool {
        &self.start <= a && b <= &self.end
    }
}

/// Open band `(lo, hi)` of levels between consecutive critical values on
/// which the preimage count is constant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LevelBand {
    pub lo: Rational,
    pub hi: Rational,
    pub count: usize,
}

fn two() -> Rational {
    Rational::from_integer(BigInt::from(2))
}

impl PwlFunction {
    pub fn new(xs: Vec<Rational>, vs: Vec<Rational>) -> Result<Self> {
        if xs.len() < 2 || xs.len() != vs.len() {
            return Err(Error::InvalidPwl(format!(
                "need matching breakpoints and values, got {} and {}",
                xs.len(),
                vs.len()
            )));
        }
        if xs.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidPwl("breakpoints must be strictly increasing".into()));
        }
        let slopes: Vec<Rational> =
            xs.windows(2).zip(vs.windows(2)).map(|(x, v)| (&v[1] - &v[0]) / (&x[1] - &x[0])).collect();
        if slopes.iter().any(Zero::is_zero) {
            return Err(Error::InvalidPwl("flat pieces are not supported".into()));
        }
        Ok(Self { xs, vs, slopes })
    }

    pub fn breakpoints(&self) -> &[Rational] {
        &self.xs
    }

    pub fn values(&self) -> &[Rational] {
        &self.vs
    }

    pub fn slopes(&self) -> &[Rational] {
        &self.slopes
    }

    pub fn num_pieces(&self) -> usize {
        self.slopes.len()
    }

    pub fn domain(&self) -> (&Rational, &Rational) {
        (&self.xs[0], self.xs.last().unwrap())
    }

    /// True when every slope is `±1`.
    pub fn has_unit_slopes(&self) -> bool {
        self.slopes.iter().all(|s| s.abs() == rational::one())
    }

    fn piece_of(&self, x: &Rational) -> Option<std::result::Result<usize, usize>> {
        let (a, b) = self.domain();
        if x < a || x > b {
            return None;
        }
        Some(match self.xs.binary_search(x) {
            Ok(i) => Err(i),
            Err(i) => Ok(i - 1),
        })
    }

    pub fn eval(&self, x: &Rational) -> Option<Rational> {
        match self.piece_of(x)? {
            Err(i) => Some(self.vs[i].clone()),
            Ok(i) => Some(&self.vs[i] + &self.slopes[i] * (x - &self.xs[i])),
        }
    }

    /// `f'(x)`, undefined at breakpoints and outside the domain.
    pub fn slope_at(&self, x: &Rational) -> Option<&Rational> {
        match self.piece_of(x)? {
            Ok(i) => Some(&self.slopes[i]),
            Err(_) => None,
        }
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        let i = self.piece_index_f64(x);
        rational::to_f64(&self.vs[i]) + rational::to_f64(&self.slopes[i]) * (x - rational::to_f64(&self.xs[i]))
    }

    fn piece_index_f64(&self, x: f64) -> usize {
        let n = self.slopes.len();
        let mut lo = 0;
        let mut hi = n;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if x < rational::to_f64(&self.xs[mid]) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        lo
    }

    /// Sorted, deduplicated images of the breakpoints.
    pub fn critical_values(&self) -> Vec<Rational> {
        let mut c = self.vs.clone();
        c.sort();
        c.dedup();
        c
    }

    pub fn is_critical(&self, t: &Rational) -> bool {
        self.vs.iter().any(|v| v == t)
    }

    /// All solutions of `f(x) = t`, sorted, with slope signs. Critical levels
    /// are rejected because a breakpoint solution has no slope sign.
    pub fn preimages(&self, t: &Rational) -> Result<Vec<Preimage>> {
        if self.is_critical(t) {
            return Err(Error::CriticalLevel(rational::format(t)));
        }
        let mut out = Vec::new();
        for (i, s) in self.slopes.iter().enumerate() {
            let (v0, v1) = (&self.vs[i], &self.vs[i + 1]);
            let inside = if v0 < v1 { v0 < t && t < v1 } else { v1 < t && t < v0 };
            if inside {
                out.push(Preimage {
                    location: &self.xs[i] + (t - v0) / s,
                    slope_sign: if s.is_positive() { 1 } else { -1 },
                });
            }
        }
        Ok(out)
    }

    /// Bands between consecutive critical values with their preimage counts,
    /// from a single sweep over the piece ranges.
    pub fn level_profile(&self) -> Vec<LevelBand> {
        let mut events: BTreeMap<&Rational, i64> = BTreeMap::new();
        for w in self.vs.windows(2) {
            let (lo, hi) = if w[0] < w[1] { (&w[0], &w[1]) } else { (&w[1], &w[0]) };
            *events.entry(lo).or_default() += 1;
            *events.entry(hi).or_default() -= 1;
        }
        let keys: Vec<(&Rational, i64)> = events.into_iter().collect();
        let mut bands = Vec::with_capacity(keys.len().saturating_sub(1));
        let mut cur = 0i64;
        for pair in keys.windows(2) {
            cur += pair[0].1;
            bands.push(LevelBand { lo: pair[0].0.clone(), hi: pair[1].0.clone(), count: cur as usize });
        }
        bands
    }

    /// Essential supremum of `#f^-1(t)` with the lowest band attaining it.
    pub fn sup_preimage_count(&self) -> (usize, (Rational, Rational)) {
        let mut best: Option<&LevelBand> = None;
        let bands = self.level_profile();
        for b in &bands {
            if best.is_none_or(|x| b.count > x.count) {
                best = Some(b);
            }
        }
        let b = best.expect("a non-constant function has at least one band");
        (b.count, (b.lo.clone(), b.hi.clone()))
    }

    pub fn runs(&self) -> Vec<Run> {
        let mut runs: Vec<Run> = Vec::new();
        for (i, s) in self.slopes.iter().enumerate() {
            let sign = if s.is_positive() { 1 } else { -1 };
            match runs.last_mut() {
                Some(r) if r.sign == sign => r.end = self.xs[i + 1].clone(),
                _ => runs.push(Run { start: self.xs[i].clone(), end: self.xs[i + 1].clone(), sign }),
            }
        }
        runs
    }

    /// Longest run; ties go to the leftmost.
    pub fn max_monotone_run(&self) -> (Rational, (Rational, Rational)) {
        let runs = self.runs();
        let mut best = &runs[0];
        for r in &runs[1..] {
            if r.len() > best.len() {
                best = r;
            }
        }
        (best.len(), (best.start.clone(), best.end.clone()))
    }

    /// An open interval on which the function is strictly monotone, found by
    /// isolating the preimages of a level of maximal multiplicity: take the
    /// lowest band of maximal count, its midpoint `t` and half-width `e`, and
    /// pull `(t - e, t + e)` back along the piece of the first preimage.
    pub fn find_monotone_interval(&self, max_count: usize) -> Result<(Rational, Rational)> {
        let (m, (lo, hi)) = self.sup_preimage_count();
        if m > max_count {
            return Err(Error::HypothesisViolated(format!("preimage count reaches {m} > {max_count}")));
        }
        let t = (&lo + &hi) / two();
        let pre = self.preimages(&t)?;
        debug_assert_eq!(pre.len(), m);

        // Each neighbourhood J_i is the pullback of the band along one piece;
        // the band holds no critical value so every J_i meets each level once.
        let neighbourhoods: Vec<(Rational, Rational)> = pre
            .iter()
            .map(|p| {
                let i = match self.piece_of(&p.location) {
                    Some(Ok(i)) => i,
                    _ => unreachable!("non-critical preimage is interior to a piece"),
                };
                let x_lo = &self.xs[i] + (&lo - &self.vs[i]) / &self.slopes[i];
                let x_hi = &self.xs[i] + (&hi - &self.vs[i]) / &self.slopes[i];
                if x_lo < x_hi {
                    (x_lo, x_hi)
                } else {
                    (x_hi, x_lo)
                }
            })
            .collect();
        for w in neighbourhoods.windows(2) {
            if w[0].1 > w[1].0 {
                return Err(Error::HypothesisViolated("isolating neighbourhoods overlap".into()));
            }
        }
        Ok(neighbourhoods[0].clone())
    }

    /// `∫ #f^-1(t) dt` by the level sweep and `∫ |f'|` directly; errors if
    /// they differ.
    pub fn area_formula_check(&self) -> Result<Rational> {
        let sweep: Rational =
            self.level_profile().iter().map(|b| (&b.hi - &b.lo) * Rational::from_integer(BigInt::from(b.count))).sum();
        let direct: Rational = self.slopes.iter().zip(self.xs.windows(2)).map(|(s, w)| s.abs() * (&w[1] - &w[0])).sum();
        if sweep != direct {
            return Err(Error::AreaMismatch { sweep: rational::format(&sweep), direct: rational::format(&direct) });
        }
        Ok(sweep)
    }

    /// Graph polyline `{(f(x), x)}` as CSV: exact `t,x`, float columns, and
    /// the slope sign of the segment starting at each row.
    pub fn graph_csv(&self) -> String {
        let mut out = String::from("t,x,t_float,x_float,segment_sign\n");
        for (i, (x, v)) in self.xs.iter().zip(&self.vs).enumerate() {
            let sign = match self.slopes.get(i) {
                Some(s) if s.is_positive() => "+",
                Some(_) => "-",
                None => "",
            };
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                rational::format(v),
                rational::format(x),
                rational::format_f64(rational::to_f64(v)),
                rational::format_f64(rational::to_f64(x)),
                sign
            );
        }
        out
    }
}

/// Antiderivative of a slope function with value `base` at 0.
pub fn integrate_slopes(s: &SlopeFunction, base: &Rational) -> PwlFunction {
    let xs = s.breakpoints().to_vec();
    let mut vs = Vec::with_capacity(xs.len());
    vs.push(base.clone());
    for (lo, hi, sign) in s.pieces() {
        let w = hi - lo;
        let next = if sign > 0 { vs.last().unwrap() + w } else { vs.last().unwrap() - w };
        vs.push(next);
    }
    PwlFunction::new(xs, vs).expect("slope function pieces have nonzero width")
}

/// The stage function `f_K = 2 + ∫ s_K`.
pub fn stage_function(s: &StageState) -> PwlFunction {
    integrate_slopes(s.slopes(), &Rational::from_integer(BigInt::from(2)))
}

/// `(|f(y) - f(x)|, (y - x) - 2 min(P-mass, N-mass))` on `(x, y)`.
pub fn cone_gap(f: &PwlFunction, s: &StageState, x: &Rational, y: &Rational) -> Result<(Rational, Rational)> {
    let (p, n) = s.interval_mass(x, y)?;
    let fx = f.eval(x).ok_or_else(|| out_of_domain(x))?;
    let fy = f.eval(y).ok_or_else(|| out_of_domain(y))?;
    let lhs = (fy - fx).abs();
    let rhs = (y - x) - two() * rational::min(&p, &n);
    Ok((lhs, rhs))
}

fn out_of_domain(x: &Rational) -> Error {
    Error::InvalidInterval {
        a: rational::format(x),
        b: rational::format(x),
        reason: "point outside the function's domain",
    }
}
