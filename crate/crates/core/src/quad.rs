//! Adaptive quadrature: Simpson for the graph curve integrals, Gauss–Kronrod
//! (7/15) for surface and line integrals in the planar construction.

use crate::error::{Error, Result};

pub const DEFAULT_MAX_DEPTH: u32 = 48;

/// Adaptive Simpson with Richardson correction. Each half of a split gets
/// half the tolerance; failing to converge within `max_depth` levels is an
/// error rather than a silently inaccurate value.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64, max_depth: u32) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) * (fa + 4.0 * fm + fb) / 6.0;
    simpson_step(&f, a, b, fa, fm, fb, whole, tol, max_depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) * (fa + 4.0 * flm + fm) / 6.0;
    let right = (b - m) * (fm + 4.0 * frm + fb) / 6.0;
    let delta = left + right - whole;
    // Below this width the interval cannot be split further in f64.
    let unsplittable = (m - a).abs() <= 4.0 * f64::EPSILON * a.abs().max(b.abs()).max(1.0);
    if delta.abs() <= 15.0 * tol || unsplittable {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::QuadratureTolNotMet { a, b, tol });
    }
    Ok(simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?)
}

/// Simpson over `[a, b]` split at the given interior knots, tolerance shared
/// in proportion to sub-interval length.
pub fn simpson_with_knots<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, knots: &[f64], tol: f64) -> Result<f64> {
    let pts = split_points(a, b, knots);
    let len = (b - a).abs().max(f64::MIN_POSITIVE);
    let mut total = 0.0;
    for w in pts.windows(2) {
        let share = tol * (w[1] - w[0]).abs() / len;
        total += adaptive_simpson(&f, w[0], w[1], share.max(tol * 1e-6), DEFAULT_MAX_DEPTH)?;
    }
    Ok(total)
}

/// `a`, sorted knots strictly inside `(a, b)`, `b`.
pub fn split_points(a: f64, b: f64, knots: &[f64]) -> Vec<f64> {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    let mut pts = vec![lo];
    let mut inner: Vec<f64> = knots.iter().copied().filter(|k| *k > lo && *k < hi).collect();
    inner.sort_by(f64::total_cmp);
    inner.dedup();
    pts.extend(inner);
    pts.push(hi);
    if a > b {
        pts.reverse();
    }
    pts
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

/// One G7/K15 panel: (Kronrod estimate, |Kronrod - Gauss|).
pub fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx) + f(c + dx);
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Recursive adaptive Gauss–Kronrod with an absolute tolerance.
pub fn adaptive_gk<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64> {
    gk_step(f, a, b, tol, DEFAULT_MAX_DEPTH)
}

fn gk_step<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let (v, err) = gk15(f, a, b);
    let floor = 64.0 * f64::EPSILON * v.abs();
    let unsplittable = (b - a).abs() <= 64.0 * f64::EPSILON * a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
    if err <= tol.max(floor) || unsplittable {
        return Ok(v);
    }
    if depth == 0 {
        return Err(Error::QuadratureTolNotMet { a, b, tol });
    }
    let m = 0.5 * (a + b);
    Ok(gk_step(f, a, m, 0.5 * tol, depth - 1)? + gk_step(f, m, b, 0.5 * tol, depth - 1)?)
}

/// Gauss–Kronrod over `[a, b]` split at interior knots.
pub fn gk_with_knots<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, knots: &[f64], tol: f64) -> Result<f64> {
    let pts = split_points(a, b, knots);
    let len = (b - a).abs().max(f64::MIN_POSITIVE);
    let mut total = 0.0;
    for w in pts.windows(2) {
        let share = tol * (w[1] - w[0]).abs() / len;
        total += adaptive_gk(f, w[0], w[1], share.max(tol * 1e-6))?;
    }
    Ok(total)
}

/// `∫_a^b ∫_{lo(u)}^{hi(u)} f(u, v) dv du` with nested Gauss–Kronrod. The
/// inner tolerance is tightened so the outer integrand is smooth to well
/// below the outer tolerance.
pub fn integrate_2d<F, L, H>(f: &F, a: f64, b: f64, lo: L, hi: H, tol: f64) -> Result<f64>
where
    F: Fn(f64, f64) -> f64,
    L: Fn(f64) -> f64,
    H: Fn(f64) -> f64,
{
    let inner_tol = tol * 1e-3;
    let err = std::cell::Cell::new(None);
    let outer = |u: f64| match adaptive_gk(&|v| f(u, v), lo(u), hi(u), inner_tol) {
        Ok(v) => v,
        Err(e) => {
            err.set(Some(e));
            0.0
        }
    };
    let v = adaptive_gk(&outer, a, b, tol)?;
    match err.take() {
        Some(e) => Err(e),
        None => Ok(v),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_polynomials_and_transcendentals() {
        let v = adaptive_simpson(|x| x * x * x, 0.0, 2.0, 1e-12, 30).unwrap();
        assert!((v - 4.0).abs() < 1e-12);
        let v = adaptive_simpson(f64::sin, 0.0, std::f64::consts::PI, 1e-11, 40).unwrap();
        assert!((v - 2.0).abs() < 1e-10);
        assert_eq!(adaptive_simpson(|x| x, 1.0, 1.0, 1e-10, 10).unwrap(), 0.0);
    }

    #[test]
    fn simpson_reports_failure() {
        let r = adaptive_simpson(|x: f64| if x < 0.3 { 0.0 } else { 1.0 / (x - 0.3).sqrt() }, 0.0, 1.0, 1e-14, 3);
        assert!(matches!(r, Err(Error::QuadratureTolNotMet { .. })));
    }

    #[test]
    fn knots_split_kinks() {
        let f = |x: f64| (x - 0.3).abs();
        let v = simpson_with_knots(f, 0.0, 1.0, &[0.3], 1e-12).unwrap();
        assert!((v - (0.045 + 0.245)).abs() < 1e-12);
        assert_eq!(split_points(1.0, 0.0, &[0.5, 2.0]), vec![1.0, 0.5, 0.0]);
    }

    #[test]
    fn gauss_kronrod() {
        let v = adaptive_gk(&|x: f64| (-x * x).exp(), -6.0, 6.0, 1e-13).unwrap();
        assert!((v - std::f64::consts::PI.sqrt()).abs() < 1e-12);
        let (v, _) = gk15(&|x: f64| x.powi(20), -1.0, 1.0);
        assert!((v - 2.0 / 21.0).abs() < 1e-14);
    }

    #[test]
    fn triangle_area_moments() {
        // ∫ over the unit right triangle of x y = 1/24
        let v = integrate_2d(&|x, y| x * y, 0.0, 1.0, |_| 0.0, |x| 1.0 - x, 1e-12).unwrap();
        assert!((v - 1.0 / 24.0).abs() < 1e-13);
    }
}
