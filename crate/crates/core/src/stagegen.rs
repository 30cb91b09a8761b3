//! Iterative construction of the dense sign pattern at a finite stage.
//!
//! Stage 0 is the constant slope `+1` on `[0, 1]`. Stage `k` picks the
//! `k`-th dyadic rational `q_k` of `(0, 1)` in breadth-first order, a width
//! `eps_k` of the form `2^-j / 3`, and flips the slope on
//! `I_k = (q_k - eps_k/2, q_k + eps_k/2)`. Every flip endpoint carries a
//! factor 3 in its reduced denominator, so no later dyadic centre can land on
//! the boundary set.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{self, inv_pow2, q, Rational};

/// Default upper bound on the stage index accepted by [`build`].
pub const DEFAULT_STAGE_CAP: usize = 1024;

/// Piecewise-constant `±1` slope on `[0, 1]` with exact breakpoints.
/// The value at a breakpoint is 0.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SlopeFunction {
    breakpoints: Vec<Rational>,
    signs: Vec<i8>,
}

impl SlopeFunction {
    pub fn new(breakpoints: Vec<Rational>, signs: Vec<i8>) -> Result<Self> {
        if breakpoints.len() < 2 || signs.len() + 1 != breakpoints.len() {
            return Err(Error::InvalidState(format!(
                "{} breakpoints need {} signs, got {}",
                breakpoints.len(),
                breakpoints.len().saturating_sub(1),
                signs.len()
            )));
        }
        if breakpoints[0] != rational::zero() || *breakpoints.last().unwrap() != rational::one() {
            return Err(Error::InvalidState("breakpoints must start at 0 and end at 1".into()));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidState("breakpoints must be strictly increasing".into()));
        }
        if signs.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::InvalidState("signs must be +1 or -1".into()));
        }
        Ok(Self { breakpoints, signs })
    }

    pub fn constant_positive() -> Self {
        Self { breakpoints: vec![rational::zero(), rational::one()], signs: vec![1] }
    }

    pub fn breakpoints(&self) -> &[Rational] {
        &self.breakpoints
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    pub fn pieces(&self) -> impl Iterator<Item = (&Rational, &Rational, i8)> + '_ {
        self.breakpoints.windows(2).zip(&self.signs).map(|(w, &s)| (&w[0], &w[1], s))
    }

    /// Index of the open piece containing `x`, or `Err(i)` when `x` is the
    /// breakpoint `i`. `None` outside `[0, 1]`.
    fn locate(&self, x: &Rational) -> Option<std::result::Result<usize, usize>> {
        if *x < self.breakpoints[0] || x > self.breakpoints.last().unwrap() {
            return None;
        }
        Some(match self.breakpoints.binary_search(x) {
            Ok(i) => Err(i),
            Err(i) => Ok(i - 1),
        })
    }

    /// `+1`, `-1`, or 0 on breakpoints and outside `[0, 1]`.
    pub fn value_at(&self, x: &Rational) -> i8 {
        match self.locate(x) {
            Some(Ok(i)) => self.signs[i],
            _ => 0,
        }
    }

    /// Like [`value_at`](Self::value_at) but with an explicit value on the
    /// breakpoints (the planar construction assigns them to `N`).
    pub fn sign_with_breakpoints(&self, x: &Rational, at_breakpoint: i8) -> i8 {
        match self.locate(x) {
            Some(Ok(i)) => self.signs[i],
            Some(Err(_)) => at_breakpoint,
            None => 0,
        }
    }

    /// Float lookup with the same breakpoint rule.
    pub fn sign_f64(&self, x: f64, at_breakpoint: i8) -> i8 {
        if !(0.0..=1.0).contains(&x) {
            return 0;
        }
        if x == 0.0 || x == 1.0 {
            return at_breakpoint;
        }
        // Breakpoint floats are rounded; ties resolve to the breakpoint rule.
        let mut lo = 0;
        let mut hi = self.breakpoints.len() - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            let b = rational::to_f64(&self.breakpoints[mid]);
            if x < b {
                hi = mid;
            } else if x > b {
                lo = mid;
            } else {
                return at_breakpoint;
            }
        }
        self.signs[lo]
    }

    /// Exact measures of `{+1} ∩ (a, b)` and `{-1} ∩ (a, b)`.
    pub fn masses(&self, a: &Rational, b: &Rational) -> (Rational, Rational) {
        let mut p = Rational::zero();
        let mut n = Rational::zero();
        for (lo, hi, s) in self.pieces() {
            if hi <= a || lo >= b {
                continue;
            }
            let l = if lo > a { lo } else { a };
            let r = if hi < b { hi } else { b };
            let w = r - l;
            if s > 0 {
                p += w;
            } else {
                n += w;
            }
        }
        (p, n)
    }
}

/// One stage of the construction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StageState {
    k: usize,
    eps: Vec<Rational>,
    flips: Vec<(Rational, Rational)>,
    boundary: Vec<Rational>,
    slopes: SlopeFunction,
}

/// `n`-th dyadic rational of `(0, 1)` in breadth-first order, `n >= 1`:
/// 1/2, 1/4, 3/4, 1/8, 3/8, ...
pub fn dyadic_center(n: usize) -> Rational {
    assert!(n >= 1, "dyadic enumeration starts at 1");
    let level = usize::BITS - n.leading_zeros(); // floor(log2 n) + 1
    let first = 1usize << (level - 1);
    let m = 2 * (n - first) + 1;
    Rational::new(BigInt::from(m), BigInt::one() << level)
}

pub fn init_stage() -> StageState {
    StageState {
        k: 0,
        eps: vec![rational::one()],
        flips: Vec::new(),
        boundary: vec![rational::zero(), rational::one()],
        slopes: SlopeFunction::constant_positive(),
    }
}

/// Smallest `j >= 1` with `2^-j / 3 < bound`.
fn first_exponent_below(bound: &Rational) -> u32 {
    // 2^-j < 3 * bound  <=>  2^j > 1 / (3 * bound)
    let r = (bound * Rational::from_integer(BigInt::from(3))).recip();
    let mut j = if r >= rational::one() { (r.to_integer().bits() as u32).saturating_sub(1).max(1) } else { 1 };
    while inv_pow2(j) / Rational::from_integer(BigInt::from(3)) >= *bound {
        j += 1;
    }
    j
}

pub fn advance(s: &StageState) -> StageState {
    let k = s.k + 1;
    let center = dyadic_center(k);
    let bound = s.eps[s.k].clone() * inv_pow2(k as u32);

    let pos = match s.boundary.binary_search(&center) {
        Ok(_) => unreachable!("dyadic centre {center} lies on the boundary set"),
        Err(i) => i,
    };
    let dist = rational::min(&(&center - &s.boundary[pos - 1]), &(&s.boundary[pos] - &center));
    assert!(dist.is_positive());

    let three = Rational::from_integer(BigInt::from(3));
    let mut j = first_exponent_below(&bound);
    let eps = loop {
        let e = inv_pow2(j) / &three;
        if e <= dist {
            break e;
        }
        j += 1;
    };

    let half = &eps / Rational::from_integer(BigInt::from(2));
    let a = &center - &half;
    let b = &center + &half;

    let mut boundary = s.boundary.clone();
    boundary.insert(pos, b.clone());
    boundary.insert(pos, a.clone());

    // I_k sits inside a single open piece of the previous slope function.
    let piece = match s.slopes.locate(&center) {
        Some(Ok(i)) => i,
        _ => unreachable!("centre inside (0, 1) off the boundary set"),
    };
    let mut bps = s.slopes.breakpoints.clone();
    let mut signs = s.slopes.signs.clone();
    let sign = signs[piece];
    bps.insert(piece + 1, b.clone());
    bps.insert(piece + 1, a.clone());
    signs.splice(piece..=piece, [sign, -sign, sign]);

    let mut eps_seq = s.eps.clone();
    eps_seq.push(eps);
    let mut flips = s.flips.clone();
    flips.push((a, b));

    StageState { k, eps: eps_seq, flips, boundary, slopes: SlopeFunction { breakpoints: bps, signs } }
}

pub fn build(k: usize) -> Result<StageState> {
    build_capped(k, DEFAULT_STAGE_CAP)
}

pub fn build_capped(k: usize, cap: usize) -> Result<StageState> {
    if k > cap {
        return Err(Error::StageLimit { requested: k, cap });
    }
    let mut s = init_stage();
    for _ in 0..k {
        s = advance(&s);
    }
    Ok(s)
}

/// Stages `0..=k` in order.
pub fn build_all(k: usize) -> Result<Vec<StageState>> {
    if k > DEFAULT_STAGE_CAP {
        return Err(Error::StageLimit { requested: k, cap: DEFAULT_STAGE_CAP });
    }
    let mut out = Vec::with_capacity(k + 1);
    out.push(init_stage());
    for _ in 0..k {
        let next = advance(out.last().unwrap());
        out.push(next);
    }
    Ok(out)
}

impl StageState {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn eps(&self) -> &[Rational] {
        &self.eps
    }

    pub fn flips(&self) -> &[(Rational, Rational)] {
        &self.flips
    }

    /// The boundary set `E_k`, sorted.
    pub fn boundary_set(&self) -> &[Rational] {
        &self.boundary
    }

    pub fn slopes(&self) -> &SlopeFunction {
        &self.slopes
    }

    /// Exact `(|{s = +1} ∩ (a,b)|, |{s = -1} ∩ (a,b)|)`.
    pub fn interval_mass(&self, a: &Rational, b: &Rational) -> Result<(Rational, Rational)> {
        if a >= b || a.is_negative() || *b > rational::one() {
            return Err(Error::InvalidInterval {
                a: rational::format(a),
                b: rational::format(b),
                reason: "need 0 <= a < b <= 1",
            });
        }
        Ok(self.slopes.masses(a, b))
    }

    /// `eps_k / 2`: bounds the measure of everything later stages can flip.
    pub fn tail_bound(&self) -> Rational {
        &self.eps[self.k] / Rational::from_integer(BigInt::from(2))
    }

    /// Checks every structural invariant exactly.
    pub fn check_invariants(&self) -> Result<()> {
        let fail = |m: String| Err(Error::InvalidState(m));
        if self.eps.len() != self.k + 1 || self.flips.len() != self.k {
            return fail("sequence lengths disagree with k".into());
        }
        if self.eps[0] != rational::one() {
            return fail("eps_0 must be 1".into());
        }
        let mut boundary = vec![rational::zero(), rational::one()];
        for j in 1..=self.k {
            let e = &self.eps[j];
            if !e.is_positive() || *e >= &self.eps[j - 1] * inv_pow2(j as u32) {
                return fail(format!("eps_{j} violates eps_j < 2^-j eps_(j-1)"));
            }
            let (a, b) = &self.flips[j - 1];
            if b - a != *e {
                return fail(format!("I_{j} has width different from eps_{j}"));
            }
            if boundary.iter().any(|p| p >= a && p <= b) {
                return fail(format!("closure of I_{j} meets E_{}", j - 1));
            }
            for p in [a, b] {
                if !p.denom().is_multiple_of(&BigInt::from(3)) {
                    return fail(format!("endpoint {p} of I_{j} has no factor 3"));
                }
            }
            boundary.push(a.clone());
            boundary.push(b.clone());
        }
        boundary.sort();
        if boundary != self.boundary {
            return fail("boundary set is not E_(k-1) plus the flip endpoints".into());
        }
        if self.slopes.breakpoints != self.boundary {
            return fail("slope breakpoints differ from the boundary set".into());
        }
        for (lo, hi, s) in self.slopes.pieces() {
            let mid = (lo + hi) / Rational::from_integer(BigInt::from(2));
            let covered = self.flips.iter().filter(|(a, b)| *a < mid && mid < *b).count();
            let expect = if covered % 2 == 0 { 1 } else { -1 };
            if s != expect {
                return fail(format!("slope sign wrong on ({lo}, {hi})"));
            }
        }
        Ok(())
    }

    pub fn to_doc(&self) -> StageDoc {
        StageDoc {
            k: self.k,
            eps: self.eps.clone(),
            flips: self.flips.iter().map(|(a, b)| [a.clone(), b.clone()]).collect(),
        }
    }

    /// Rebuilds a state from its serialized form and validates it.
    pub fn from_doc(doc: &StageDoc) -> Result<Self> {
        if doc.eps.len() != doc.k + 1 || doc.flips.len() != doc.k {
            return Err(Error::InvalidState("k does not match eps/flips lengths".into()));
        }
        let flips: Vec<(Rational, Rational)> = doc.flips.iter().map(|[a, b]| (a.clone(), b.clone())).collect();
        let mut boundary = vec![rational::zero(), rational::one()];
        for (a, b) in &flips {
            if a >= b || a.is_negative() || *b > rational::one() {
                return Err(Error::InvalidState(format!("bad flip ({a}, {b})")));
            }
            boundary.push(a.clone());
            boundary.push(b.clone());
        }
        boundary.sort();
        if boundary.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidState("flip endpoints collide".into()));
        }
        let signs = boundary
            .windows(2)
            .map(|w| {
                let mid = (&w[0] + &w[1]) / Rational::from_integer(BigInt::from(2));
                let c = flips.iter().filter(|(a, b)| *a < mid && mid < *b).count();
                if c % 2 == 0 {
                    1
                } else {
                    -1
                }
            })
            .collect();
        let state = StageState {
            k: doc.k,
            eps: doc.eps.clone(),
            flips,
            slopes: SlopeFunction::new(boundary.clone(), signs)?,
            boundary,
        };
        state.check_invariants()?;
        Ok(state)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("stage document serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: StageDoc = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_doc(&doc)
    }
}

/// `{k, eps: [..], flips: [[a, b], ..]}` with rationals as `"num/den"`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageDoc {
    pub k: usize,
    #[serde(with = "rational::serde_str_vec")]
    pub eps: Vec<Rational>,
    #[serde(with = "flip_pairs")]
    pub flips: Vec<[Rational; 2]>,
}

mod flip_pairs {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(xs: &[[Rational; 2]], s: S) -> std::result::Result<S::Ok, S::Error> {
        let v: Vec<[String; 2]> = xs.iter().map(|[a, b]| [rational::format(a), rational::format(b)]).collect();
        v.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<[Rational; 2]>, D::Error> {
        let v = Vec::<[String; 2]>::deserialize(d)?;
        v.iter()
            .map(|[a, b]| {
                Ok([
                    rational::parse(a).map_err(serde::de::Error::custom)?,
                    rational::parse(b).map_err(serde::de::Error::custom)?,
                ])
            })
            .collect()
    }
}

/// First stage in `states` at which both masses on `(a, b)` exceed the tail
/// bound. From there on neither mass can vanish.
pub fn first_separating_stage(states: &[StageState], a: &Rational, b: &Rational) -> Result<Option<usize>> {
    for s in states {
        let (p, n) = s.interval_mass(a, b)?;
        let tail = s.tail_bound();
        if p > tail && n > tail {
            return Ok(Some(s.k));
        }
    }
    Ok(None)
}

/// Dyadic test intervals `(m 2^-level, (m+1) 2^-level)`.
pub fn dyadic_intervals(level: u32) -> Vec<(Rational, Rational)> {
    let n = 1i64 << level;
    (0..n).map(|m| (q(m, n), q(m + 1, n))).collect()
}
