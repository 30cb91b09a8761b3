//! The uniformly bounded example on the octahedron `|x| + |y| + |t| = 1`.
//!
//! On the face `T = {x, y, t > 0, x + y + t = 1}` the planar field is
//! `W = α (1, σ(ξ))` in the frame `(ξ, η)`, where `σ` is the stage sign
//! pattern read through the affine map `s = (y - x + 1)/2 ∈ [0, 1]`. The
//! ambient field `V = α (e_ξ + σ e_η)` has third component `σ`. Reflection
//! through the coordinate planes carries `V` to the other seven faces:
//! `U = (s2 s3 V1, s1 s3 V2, s1 s2 V3) ∘ R_s`, `u = U_3`, `B = u U`.
//!
//! Faces are parametrised by `u = y - x ∈ [-1, 1]`, `v = x + y ∈ [|u|, 1]`,
//! with `dH² = (√3/2) du dv`; the sign breakpoints are the lines
//! `u = 2 s_b - 1`, so every quadrature panel sees a constant field.

use std::fmt::Write as _;
use std::ops::{Add, Mul};

use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::quad;
use crate::rational::{self, Rational};
use crate::stagegen::StageState;
use crate::testfn::SmoothFn;

/// `√(3/2)`.
pub fn alpha() -> f64 {
    1.5f64.sqrt()
}

/// `a + b √3` with rational `a, b`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QSqrt3 {
    pub a: Rational,
    pub b: Rational,
}

impl QSqrt3 {
    pub fn rational(a: Rational) -> Self {
        Self { a, b: Rational::zero() }
    }

    pub fn zero() -> Self {
        Self::rational(Rational::zero())
    }

    pub fn to_f64(&self) -> f64 {
        rational::to_f64(&self.a) + rational::to_f64(&self.b) * 3f64.sqrt()
    }

    pub fn as_rational(&self) -> Option<&Rational> {
        self.b.is_zero().then_some(&self.a)
    }

    pub fn scale(&self, c: &Rational) -> Self {
        Self { a: &self.a * c, b: &self.b * c }
    }
}

impl Add for &QSqrt3 {
    type Output = QSqrt3;
    fn add(self, o: &QSqrt3) -> QSqrt3 {
        QSqrt3 { a: &self.a + &o.a, b: &self.b + &o.b }
    }
}

impl Mul for &QSqrt3 {
    type Output = QSqrt3;
    fn mul(self, o: &QSqrt3) -> QSqrt3 {
        let three = rational::int(3);
        QSqrt3 { a: &self.a * &o.a + three * &self.b * &o.b, b: &self.a * &o.b + &self.b * &o.a }
    }
}

/// The frame `(ξ, η, ζ)`: origin `O' = (1/2, 1/2, 0)` and unit axes along
/// `(-1, 1, 0)`, `(-1, -1, 2)`, `(1, 1, 1)`.
#[derive(Clone, Debug)]
pub struct Frame3 {
    pub origin: [Rational; 3],
    /// Unnormalised integer directions.
    pub dirs: [[i64; 3]; 3],
}

impl Default for Frame3 {
    fn default() -> Self {
        Self {
            origin: [rational::half(), rational::half(), Rational::zero()],
            dirs: [[-1, 1, 0], [-1, -1, 2], [1, 1, 1]],
        }
    }
}

fn dot_i(a: &[i64; 3], b: &[i64; 3]) -> i64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl Frame3 {
    /// Squared norms of the directions: `2, 6, 3`.
    pub fn squared_norms(&self) -> [i64; 3] {
        self.dirs.map(|d| dot_i(&d, &d))
    }

    /// Pairwise orthogonality of the directions, in integers.
    pub fn is_orthogonal(&self) -> bool {
        dot_i(&self.dirs[0], &self.dirs[1]) == 0
            && dot_i(&self.dirs[0], &self.dirs[2]) == 0
            && dot_i(&self.dirs[1], &self.dirs[2]) == 0
    }

    /// `(p - O') · d` for each direction: the frame coordinates multiplied by
    /// `√2, √6, √3`.
    pub fn to_frame_scaled(&self, p: &[Rational; 3]) -> [Rational; 3] {
        self.dirs.map(|d| {
            (0..3).map(|i| (&p[i] - &self.origin[i]) * rational::int(d[i])).fold(Rational::zero(), |a, v| a + v)
        })
    }

    pub fn to_frame(&self, p: [f64; 3]) -> [f64; 3] {
        let norms = self.squared_norms();
        std::array::from_fn(|k| {
            let d = self.dirs[k];
            let s: f64 = (0..3).map(|i| (p[i] - rational::to_f64(&self.origin[i])) * d[i] as f64).sum();
            s / (norms[k] as f64).sqrt()
        })
    }

    pub fn from_frame(&self, c: [f64; 3]) -> [f64; 3] {
        let norms = self.squared_norms();
        std::array::from_fn(|i| {
            rational::to_f64(&self.origin[i])
                + (0..3).map(|k| c[k] * self.dirs[k][i] as f64 / (norms[k] as f64).sqrt()).sum::<f64>()
        })
    }

    /// The three vertices of `T` satisfy `ζ = 0`.
    pub fn face_in_zeta_plane(&self) -> bool {
        let (z, o) = (Rational::zero(), Rational::one());
        [[o.clone(), z.clone(), z.clone()], [z.clone(), o.clone(), z.clone()], [z.clone(), z, o]]
            .iter()
            .all(|v| self.to_frame_scaled(v)[2].is_zero())
    }
}

/// Where a point lies relative to the octahedron surface.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Location {
    /// Open face with sign pattern `(s1, s2, s3)`.
    Face([i8; 3]),
    /// On the surface with some coordinate zero.
    Edge,
    Off,
}

/// The three edges of `T`: `E_1 = {x = 0}`, `E_2 = {y = 0}`, `E_3 = {t = 0}`,
/// each as `τ ∈ [0, 1] ↦ q(τ)` with `dH¹ = √2 dτ`.
pub fn edge_point(i: usize, tau: f64) -> [f64; 3] {
    match i {
        0 => [0.0, 1.0 - tau, tau],
        1 => [1.0 - tau, 0.0, tau],
        _ => [1.0 - tau, tau, 0.0],
    }
}

/// `s = (y - x + 1)/2` along edge `i` as an affine function `c0 + c1 τ`.
fn edge_s_coeffs(i: usize) -> (Rational, Rational) {
    match i {
        0 => (rational::one(), -rational::half()),
        1 => (Rational::zero(), rational::half()),
        _ => (Rational::zero(), rational::one()),
    }
}

/// Outward conormals of `T` along its edges, unnormalised (`/√6`).
pub const CONORMALS: [[i64; 3]; 3] = [[-2, 1, 1], [1, -2, 1], [1, 1, -2]];

/// All eight sign patterns, `(+,+,+)` first.
pub fn sign_patterns() -> Vec<[i8; 3]> {
    let mut v = Vec::with_capacity(8);
    for s3 in [1, -1] {
        for s2 in [1, -1] {
            for s1 in [1, -1] {
                v.push([s1, s2, s3]);
            }
        }
    }
    v
}

/// Field data of the octahedron construction at one stage.
#[derive(Clone, Debug)]
pub struct OctField {
    pub stage: StageState,
    pub frame: Frame3,
    /// Sign breakpoints in `s`, interior to `(0, 1)`.
    breaks: Vec<Rational>,
}

/// Per-face flux data.
#[derive(Clone, Debug, Serialize)]
pub struct FaceFlux {
    pub signs: [i8; 3],
    /// `∫_face U · ∇φ dH²`.
    pub interior: f64,
    /// `∫_{edge i} φ U · n_i dH¹`.
    pub edges: [f64; 3],
}

impl FaceFlux {
    pub fn balance(&self) -> f64 {
        self.interior - self.edges.iter().sum::<f64>()
    }
}

/// Both sides of the planar Gauss–Green identity on `T`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct GaussGreen {
    pub lhs: f64,
    pub rhs: f64,
}

/// Total variation of the slice measures at one level.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SliceTv {
    pub t: f64,
    /// `α · H¹(S_t)` from the slice polygon.
    pub nu: f64,
    /// Same for `μ_t = u ν_t` since `|u| = 1` on the faces.
    pub mu: f64,
    pub closed_form: f64,
}

impl OctField {
    pub fn new(stage: StageState) -> Self {
        let bp = stage.slopes().breakpoints();
        let breaks = bp[1..bp.len() - 1].to_vec();
        Self { stage, frame: Frame3::default(), breaks }
    }

    /// `σ(s)`; breakpoints and the ends belong to the negative set.
    pub fn sigma(&self, s: f64) -> i8 {
        self.stage.slopes().sign_f64(s, -1)
    }

    pub fn sigma_exact(&self, s: &Rational) -> i8 {
        let bp = self.stage.slopes().breakpoints();
        if s <= &bp[0] || s >= bp.last().unwrap() {
            return -1;
        }
        self.stage.slopes().sign_with_breakpoints(s, -1)
    }

    /// Breakpoints in `s`.
    pub fn breaks(&self) -> &[Rational] {
        &self.breaks
    }

    /// Breakpoints as lines `u = y - x = 2 s_b - 1` on a face.
    pub fn u_breaks(&self) -> Vec<f64> {
        self.breaks.iter().map(|s| 2.0 * rational::to_f64(s) - 1.0).collect()
    }

    /// Breakpoints in `ξ = (2s - 1)/√2`.
    pub fn xi_breaks(&self) -> Vec<f64> {
        self.u_breaks().iter().map(|u| u / 2f64.sqrt()).collect()
    }

    fn s_of(p: &[f64; 3]) -> f64 {
        0.5 * (p[1] - p[0] + 1.0)
    }

    /// `V` at a point of the plane `x + y + t = 1`, exactly.
    pub fn field_v_exact(&self, p: &[Rational; 3]) -> [QSqrt3; 3] {
        let s = (&p[1] - &p[0] + rational::one()) * rational::half();
        v_exact(self.sigma_exact(&s))
    }

    pub fn field_v(&self, p: &[f64; 3]) -> [f64; 3] {
        v_float(self.sigma(Self::s_of(p)))
    }

    pub fn locate(p: &[Rational; 3]) -> Location {
        let l1 = p.iter().map(Signed::abs).fold(Rational::zero(), |a, v| a + v);
        if !l1.is_one() {
            Location::Off
        } else if p.iter().any(Zero::is_zero) {
            Location::Edge
        } else {
            Location::Face(std::array::from_fn(|i| if p[i].is_positive() { 1 } else { -1 }))
        }
    }

    /// Float location with a relative tolerance on the surface equation.
    pub fn locate_f64(p: &[f64; 3], tol: f64) -> Location {
        let l1: f64 = p.iter().map(|c| c.abs()).sum();
        if (l1 - 1.0).abs() > tol {
            Location::Off
        } else if p.iter().any(|c| c.abs() <= tol) {
            Location::Edge
        } else {
            Location::Face(std::array::from_fn(|i| if p[i] > 0.0 { 1 } else { -1 }))
        }
    }

    /// `U` on face `s` at `p`, exactly.
    fn u_field_exact(&self, s: [i8; 3], p: &[Rational; 3]) -> [QSqrt3; 3] {
        let q: [Rational; 3] = std::array::from_fn(|i| &p[i] * rational::int(s[i] as i64));
        let v = self.field_v_exact(&q);
        let c = [s[1] * s[2], s[0] * s[2], s[0] * s[1]];
        std::array::from_fn(|i| v[i].scale(&rational::int(c[i] as i64)))
    }

    /// `B` exactly: `u U` on the open faces, `(0, 0, 1)` elsewhere.
    pub fn field_b_exact(&self, p: &[Rational; 3]) -> [QSqrt3; 3] {
        match Self::locate(p) {
            Location::Face(s) => {
                let uu = self.u_field_exact(s, p);
                let w = uu[2].clone();
                std::array::from_fn(|i| &uu[i] * &w)
            }
            _ => [QSqrt3::zero(), QSqrt3::zero(), QSqrt3::rational(rational::one())],
        }
    }

    /// `U` on face `s` at a point `p` of that face.
    pub fn u_field(&self, s: [i8; 3], p: &[f64; 3]) -> [f64; 3] {
        let q: [f64; 3] = std::array::from_fn(|i| p[i] * s[i] as f64);
        let v = self.field_v(&q);
        let c = [s[1] * s[2], s[0] * s[2], s[0] * s[1]];
        std::array::from_fn(|i| v[i] * c[i] as f64)
    }

    /// Weight `u = U_3`, zero off the open faces.
    pub fn weight(&self, p: &[f64; 3], tol: f64) -> f64 {
        match Self::locate_f64(p, tol) {
            Location::Face(s) => self.u_field(s, p)[2],
            _ => 0.0,
        }
    }

    pub fn field_b(&self, p: &[f64; 3], tol: f64) -> [f64; 3] {
        match Self::locate_f64(p, tol) {
            Location::Face(s) => {
                let uu = self.u_field(s, p);
                uu.map(|c| c * uu[2])
            }
            _ => [0.0, 0.0, 1.0],
        }
    }

    /// The planar field `b = (B_1, B_2)`.
    pub fn field_b_planar(&self, p: &[f64; 3], tol: f64) -> [f64; 2] {
        let b = self.field_b(p, tol);
        [b[0], b[1]]
    }

    /// Planar Gauss–Green on `T` in frame coordinates: the area integral of
    /// `W · ∇φ` strip by strip against the flux `∫_{∂T} φ W · ν dH¹`.
    pub fn face_gauss_green(&self, phi: &dyn SmoothFn<2>, tol: f64) -> Result<GaussGreen> {
        let al = alpha();
        let a = 0.5f64.sqrt();
        let h = 1.5f64.sqrt();
        let top = |xi: f64| h * (1.0 - xi.abs() / a);
        let mut edges = vec![-a];
        edges.extend(self.xi_breaks());
        edges.push(0.0);
        edges.push(a);
        edges.sort_by(f64::total_cmp);
        edges.dedup();
        let strips: Vec<(f64, f64)> = edges.windows(2).map(|w| (w[0], w[1])).collect();
        let share = tol / strips.len() as f64;
        let sig = |xi: f64| self.sigma(0.5 * (2f64.sqrt() * xi + 1.0)) as f64;
        let lhs = strips
            .par_iter()
            .map(|&(l, r)| {
                let s = sig(0.5 * (l + r));
                let f = |xi: f64, eta: f64| {
                    let g = phi.grad(&[xi, eta]);
                    al * (g[0] + s * g[1])
                };
                quad::integrate_2d(&f, l, r, |_| 0.0, top, share)
            })
            .collect::<Result<Vec<f64>>>()?
            .iter()
            .sum();
        // Boundary: bottom η = 0 with ν = (0, -1); right and left edges with
        // ν = (h, ±a)/√2 and ds = 2 dξ.
        let knots = self.xi_breaks();
        let bottom = quad::gk_with_knots(&|xi| -al * sig(xi) * phi.value(&[xi, 0.0]), -a, a, &knots, tol / 3.0)?;
        let slanted = quad::gk_with_knots(
            &|xi: f64| {
                let nx = if xi >= 0.0 { h } else { -h };
                al * (nx + sig(xi) * a) / 2f64.sqrt() * phi.value(&[xi, top(xi)]) * 2.0
            },
            -a,
            a,
            &[knots.clone(), vec![0.0]].concat(),
            tol / 3.0,
        )?;
        Ok(GaussGreen { lhs, rhs: bottom + slanted })
    }

    /// `2 · tail_bound · ‖φ‖_∞ · α 3√2`: how far the boundary flux may move
    /// between this stage and the next.
    pub fn gauss_green_stage_bound(&self, sup_phi: f64) -> f64 {
        2.0 * rational::to_f64(&self.stage.tail_bound()) * sup_phi * alpha() * 3.0 * 2f64.sqrt()
    }

    /// Interior and edge fluxes of `U` against `φ` on each of the 8 faces.
    pub fn face_fluxes(&self, phi: &dyn SmoothFn<3>, tol: f64) -> Result<Vec<FaceFlux>> {
        sign_patterns().par_iter().map(|&s| self.face_flux(s, phi, tol)).collect()
    }

    fn face_flux(&self, s: [i8; 3], phi: &dyn SmoothFn<3>, tol: f64) -> Result<FaceFlux> {
        let sgn = (s[0] * s[1] * s[2]) as f64;
        let refl = |q: [f64; 3]| -> [f64; 3] { std::array::from_fn(|i| q[i] * s[i] as f64) };
        // Interior: U·∇φ at R_s q equals s1 s2 s3 V(q) · (R_s ∇φ(R_s q)).
        let mut cuts = vec![-1.0];
        cuts.extend(self.u_breaks());
        cuts.push(0.0);
        cuts.push(1.0);
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let share = tol / (2.0 * cuts.len() as f64);
        let area = 0.75f64.sqrt();
        let mut interior = 0.0;
        for w in cuts.windows(2) {
            let sg = self.sigma(0.5 * (0.5 * (w[0] + w[1]) + 1.0));
            let v = v_float(sg);
            let f = |u: f64, vv: f64| {
                let q = [0.5 * (vv - u), 0.5 * (u + vv), 1.0 - vv];
                let g = phi.grad(&refl(q));
                sgn * (0..3).map(|i| v[i] * s[i] as f64 * g[i]).sum::<f64>() * area
            };
            interior += quad::integrate_2d(&f, w[0], w[1], |u| u.abs(), |_| 1.0, share)?;
        }
        let mut edges = [0.0; 3];
        for (i, e) in edges.iter_mut().enumerate() {
            let (c0, c1) = edge_s_coeffs(i);
            let knots: Vec<f64> = self.breaks.iter().map(|b| rational::to_f64(&((b - &c0) / &c1))).collect();
            let n = CONORMALS[i].map(|c| c as f64 / 6f64.sqrt());
            let f = |tau: f64| {
                let q = edge_point(i, tau);
                let v = self.field_v(&q);
                let vn: f64 = (0..3).map(|k| v[k] * n[k]).sum();
                sgn * phi.value(&refl(q)) * vn * 2f64.sqrt()
            };
            *e = quad::gk_with_knots(&f, 0.0, 1.0, &knots, tol / 6.0)?;
        }
        Ok(FaceFlux { signs: s, interior, edges })
    }

    /// `Σ_faces Σ_edges ∫ φ U · n_i dH¹`; mirrored edges cancel.
    pub fn edge_cancellation(&self, phi: &dyn SmoothFn<3>, tol: f64) -> Result<f64> {
        Ok(self.face_fluxes(phi, tol)?.iter().map(|f| f.edges.iter().sum::<f64>()).sum())
    }

    /// `∫_Δ u B · ∇φ dH²`, summed over the faces in a fixed order.
    pub fn divergence_pairing(&self, phi: &dyn SmoothFn<3>, tol: f64) -> Result<f64> {
        Ok(self.face_fluxes(phi, tol)?.iter().map(|f| f.interior).sum())
    }

    /// Vertices of the slice `S_t = {|x| + |y| = 1 - |t|}`, counter-clockwise.
    pub fn slice_polygon(t: f64) -> Vec<[f64; 2]> {
        let r = 1.0 - t.abs();
        if r <= 0.0 {
            return Vec::new();
        }
        vec![[r, 0.0], [0.0, r], [-r, 0.0], [0.0, -r]]
    }

    pub fn slice_tv(&self, t: f64) -> SliceTv {
        let poly = Self::slice_polygon(t);
        let perimeter: f64 = (0..poly.len())
            .map(|i| {
                let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
                ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt()
            })
            .sum();
        let nu = alpha() * perimeter;
        let closed_form = if t.abs() <= 1.0 { alpha() * 4.0 * 2f64.sqrt() * (1.0 - t.abs()) } else { 0.0 };
        SliceTv { t, nu, mu: nu, closed_form }
    }

    /// `⟨μ_t, φ⟩ = α ∫_{S_t} u φ dH¹`. The weight `u = s1 s2 σ` does not
    /// involve `s3`, so at `t = 0` it is continued from the faces.
    pub fn mu2d_pair(&self, t: f64, phi: &dyn SmoothFn<2>, tol: f64) -> Result<f64> {
        let r = 1.0 - t.abs();
        if r <= 0.0 {
            return Ok(0.0);
        }
        let mut total = 0.0;
        for (s1, s2) in [(1i8, 1i8), (-1, 1), (-1, -1), (1, -1)] {
            // |x| = r(1 - λ), |y| = r λ, so s = (r(2λ - 1) + 1)/2
            let knots: Vec<f64> =
                self.breaks.iter().map(|b| ((2.0 * rational::to_f64(b) - 1.0) / r + 1.0) / 2.0).collect();
            let f = |lam: f64| {
                let s = 0.5 * (r * (2.0 * lam - 1.0) + 1.0);
                let u = (s1 * s2) as f64 * self.sigma(s) as f64;
                let p = [s1 as f64 * r * (1.0 - lam), s2 as f64 * r * lam];
                u * phi.value(&p) * r * 2f64.sqrt()
            };
            total += quad::gk_with_knots(&f, 0.0, 1.0, &knots, tol / 4.0)?;
        }
        Ok(alpha() * total)
    }

    /// Per-face flux table.
    pub fn flux_csv(fluxes: &[FaceFlux]) -> String {
        let mut out = String::from("s1,s2,s3,interior,edge1,edge2,edge3,balance\n");
        for f in fluxes {
            let e = f.edges.map(rational::format_f64);
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                f.signs[0],
                f.signs[1],
                f.signs[2],
                rational::format_f64(f.interior),
                e[0],
                e[1],
                e[2],
                rational::format_f64(f.balance())
            );
        }
        out
    }

    /// Slice total variation on `n + 1` equally spaced levels of `[-1, 1]`.
    pub fn slice_tv_csv(&self, n: usize) -> String {
        let mut out = String::from("t,tv_nu,tv_mu,closed_form\n");
        for j in 0..=n {
            let t = -1.0 + 2.0 * j as f64 / n as f64;
            let s = self.slice_tv(t);
            let _ = writeln!(
                out,
                "{},{},{},{}",
                rational::format_f64(t),
                rational::format_f64(s.nu),
                rational::format_f64(s.mu),
                rational::format_f64(s.closed_form)
            );
        }
        out
    }
}

/// `n` seeded rational points: even indices on a random open face (random
/// barycentric weights), odd indices anywhere in `[-2, 2]³`.
pub fn sample_points(seed: u64, n: usize) -> Vec<[Rational; 3]> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let den: i64 = 1 << 20;
    (0..n)
        .map(|j| {
            if j % 2 == 0 {
                let w: [i64; 3] = std::array::from_fn(|_| rng.gen_range(1..den));
                let total: i64 = w.iter().sum();
                let s: [i64; 3] = std::array::from_fn(|_| if rng.gen::<bool>() { 1 } else { -1 });
                std::array::from_fn(|i| rational::q(s[i] * w[i], total))
            } else {
                std::array::from_fn(|_| rational::q(rng.gen_range(-2 * den..=2 * den), den))
            }
        })
        .collect()
}

fn v_exact(sigma: i8) -> [QSqrt3; 3] {
    // V = (√3/2)(-1, 1, 0) + (σ/2)(-1, -1, 2)
    let sg = rational::int(sigma as i64);
    let h = rational::half();
    [QSqrt3 { a: -&sg * &h, b: -h.clone() }, QSqrt3 { a: -&sg * &h, b: h }, QSqrt3::rational(sg)]
}

fn v_float(sigma: i8) -> [f64; 3] {
    let r3 = 3f64.sqrt() / 2.0;
    let s = sigma as f64;
    [-r3 - 0.5 * s, r3 - 0.5 * s, s]
}

/// Octahedron edges and slice diamonds as polylines `id,x,y,t`.
pub fn wireframe_csv(slices: &[f64]) -> String {
    let mut out = String::from("polyline,x,y,t\n");
    let verts =
        [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, -1.0]];
    let mut id = 0;
    let mut push = |out: &mut String, pts: &[[f64; 3]]| {
        for p in pts {
            let _ = writeln!(out, "{id},{},{},{}", p[0], p[1], p[2]);
        }
        id += 1;
    };
    for i in 0..4 {
        push(&mut out, &[verts[i], verts[(i + 1) % 4]]);
        push(&mut out, &[verts[i], verts[4]]);
        push(&mut out, &[verts[i], verts[5]]);
    }
    for &t in slices {
        let mut poly: Vec<[f64; 3]> = OctField::slice_polygon(t).iter().map(|p| [p[0], p[1], t]).collect();
        if let Some(first) = poly.first().copied() {
            poly.push(first);
            push(&mut out, &poly);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, q};
    use crate::stagegen::build;
    use crate::testfn::{Constant, Polynomial};

    fn field(k: usize) -> OctField {
        OctField::new(build(k).unwrap())
    }

    #[test]
    fn frame_is_orthonormal() {
        let fr = Frame3::default();
        assert!(fr.is_orthogonal());
        assert_eq!(fr.squared_norms(), [2, 6, 3]);
        assert!(fr.face_in_zeta_plane());
        let c = fr.to_frame([1.0, 0.0, 0.0]);
        assert!((c[0] + 0.5f64.sqrt()).abs() < 1e-15 && c[1].abs() < 1e-15 && c[2].abs() < 1e-15);
        assert_eq!(fr.to_frame([0.5, 0.5, 0.0]), [0.0, 0.0, 0.0]);
        let p = [0.3, -0.7, 0.25];
        let back = fr.from_frame(fr.to_frame(p));
        assert!((0..3).all(|i| (back[i] - p[i]).abs() < 1e-14));
    }

    #[test]
    fn v_has_unit_time_component() {
        for sg in [1, -1] {
            let v = v_exact(sg);
            assert_eq!(v[2].as_rational(), Some(&int(sg as i64)));
            // |V|² = α² · 2 = 3
            let n2 = (0..3).fold(QSqrt3::zero(), |a, i| &a + &(&v[i] * &v[i]));
            assert_eq!(n2, QSqrt3::rational(int(3)));
            // V is in the face plane: V · (1, 1, 1) = 0
            let s = (0..3).fold(QSqrt3::zero(), |a, i| &a + &v[i]);
            assert_eq!(s, QSqrt3::zero());
        }
    }

    #[test]
    fn b3_is_one() {
        let of = field(3);
        let pts = [
            [q(1, 5), q(1, 2), q(3, 10)],
            [q(-1, 7), q(2, 7), q(-4, 7)],
            [int(2), int(2), int(0)],
            [int(0), q(1, 2), q(1, 2)],
            [q(1, 3), q(-1, 3), q(1, 3)],
        ];
        for p in &pts {
            assert_eq!(of.field_b_exact(p)[2].as_rational(), Some(&int(1)));
        }
        assert_eq!(of.field_b(&[2.0, 2.0, 0.0], 1e-12), [0.0, 0.0, 1.0]);
        let p0 = OctField::new(build(0).unwrap());
        let u = p0.u_field([1, 1, 1], &[0.2, 0.3, 0.5]);
        assert_eq!(u, p0.field_v(&[0.2, 0.3, 0.5]));
        assert_eq!(u[2], 1.0);
    }

    #[test]
    fn sampled_b3() {
        let of = field(4);
        let pts = sample_points(7, 200);
        assert!(pts.iter().step_by(2).all(|p| matches!(OctField::locate(p), Location::Face(_))));
        for p in &pts {
            assert_eq!(of.field_b_exact(p)[2].as_rational(), Some(&int(1)));
        }
        assert_eq!(sample_points(7, 10), sample_points(7, 10));
    }

    #[test]
    fn slice_values() {
        let of = field(0);
        assert!((of.slice_tv(0.0).nu - 4.0 * 3f64.sqrt()).abs() < 1e-12);
        assert!(of.slice_tv(1.0).nu.abs() < 1e-15);
        assert!((of.slice_tv(0.5).nu - 2.0 * 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn mu2d_regression() {
        let of = field(0);
        let xy = Polynomial { terms: vec![(1.0, [1, 1])] };
        for t in [-0.6, 0.2, 0.5] {
            let v = of.mu2d_pair(t, &xy, 1e-12).unwrap();
            let expected = 2.0 * 3f64.sqrt() / 3.0 * (1.0 - f64::abs(t)).powi(3);
            assert!((v - expected).abs() < 1e-12, "{t}: {v} vs {expected}");
        }
        assert!(of.mu2d_pair(0.3, &Constant(1.0), 1e-12).unwrap().abs() < 1e-14);
        assert_eq!(of.mu2d_pair(0.3, &Constant(0.0), 1e-12).unwrap(), 0.0);
    }

    #[test]
    fn gauss_green_small_stages() {
        let phi = Polynomial { terms: vec![(1.0, [2, 1]), (0.5, [0, 2]), (-1.0, [1, 0])] };
        for k in 0..3 {
            let gg = field(k).face_gauss_green(&phi, 1e-11).unwrap();
            assert!((gg.lhs - gg.rhs).abs() < 1e-9, "{k}: {gg:?}");
        }
    }

    #[test]
    fn fluxes_balance_per_face() {
        let of = field(2);
        let phi = Polynomial { terms: vec![(1.0, [1, 0, 1]), (2.0, [0, 2, 0]), (1.0, [0, 0, 0])] };
        let fl = of.face_fluxes(&phi, 1e-11).unwrap();
        for f in &fl {
            assert!(f.balance().abs() < 1e-9, "{f:?}");
        }
        assert!(of.edge_cancellation(&Constant(1.0), 1e-11).unwrap().abs() < 1e-12);
        assert!(of.divergence_pairing(&phi, 1e-11).unwrap().abs() < 1e-9);
    }
}
