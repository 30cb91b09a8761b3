//! Property tests for the invariants of each module.

use ce_core::ce_residual::GraphField;
use ce_core::flow1d::{self, ContinuousField1D};
use ce_core::measures;
use ce_core::octa3d::OctField;
use ce_core::poly::Poly2;
use ce_core::pwl::{self, PwlFunction};
use ce_core::rational::{self, int, inv_pow2, q, Rational};
use ce_core::stagegen::{self, StageState};
use ce_core::testfn::{self, PolyTest};
use proptest::prelude::*;

fn stage(k: usize) -> StageState {
    stagegen::build(k).unwrap()
}

fn zero() -> Rational {
    rational::zero()
}

/// A point of `[0, 1]` on a grid fine enough to land inside short pieces.
fn unit_point() -> impl Strategy<Value = Rational> {
    (0i64..=1 << 20).prop_map(|n| q(n, 1 << 20))
}

/// Piecewise-linear function with slopes ±1 and random piece widths.
fn unit_slope_pwl() -> impl Strategy<Value = PwlFunction> {
    prop::collection::vec((1i64..20, any::<bool>()), 1..12).prop_map(|pieces| {
        let mut xs = vec![int(0)];
        let mut vs = vec![int(0)];
        for (w, up) in pieces {
            let w = q(w, 7);
            let x = xs.last().unwrap() + &w;
            let v = if up { vs.last().unwrap() + &w } else { vs.last().unwrap() - &w };
            xs.push(x);
            vs.push(v);
        }
        PwlFunction::new(xs, vs).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn eps_decay_and_separation(k in 1usize..40) {
        let s = stage(k);
        let eps = s.eps();
        for j in 1..=k {
            prop_assert!(eps[j] < &eps[j - 1] * inv_pow2(j as u32));
        }
        let prev = stage(k - 1);
        let (a, b) = &s.flips()[k - 1];
        for p in prev.boundary_set() {
            prop_assert!(!(a <= p && p <= b));
        }
    }

    #[test]
    fn later_flips_fit_in_tail(k in 0usize..20, extra in 1usize..20) {
        let s = stage(k);
        let t = stage(k + extra);
        let width: Rational = t.flips()[k..].iter().map(|(a, b)| b - a).sum();
        prop_assert!(width <= s.tail_bound());
    }

    #[test]
    fn build_is_deterministic(k in 0usize..24) {
        let s = stage(k);
        prop_assert_eq!(&s, &stage(k));
        prop_assert_eq!(&StageState::from_json(&s.to_json()).unwrap(), &s);
        prop_assert!(s.check_invariants().is_ok());
    }

    #[test]
    fn stage_function_shape(k in 0usize..14) {
        let f = pwl::stage_function(&stage(k));
        prop_assert_eq!(f.eval(&int(0)), Some(int(2)));
        prop_assert!(f.values().iter().all(|v| *v >= int(1) && *v <= int(3)));
        prop_assert_eq!(f.area_formula_check().unwrap(), int(1));
        prop_assert_eq!(measures::l1_mass(&f), int(1));
    }

    #[test]
    fn counts_grow_and_runs_shrink(k in 0usize..14) {
        let f = pwl::stage_function(&stage(k));
        let g = pwl::stage_function(&stage(k + 1));
        prop_assert!(g.sup_preimage_count().0 >= f.sup_preimage_count().0);
        prop_assert!(g.max_monotone_run().0 <= f.max_monotone_run().0);
    }

    #[test]
    fn cone_gap_holds(k in 1usize..9, a in unit_point(), b in unit_point()) {
        prop_assume!(a != b);
        let (x, y) = if a < b { (a, b) } else { (b, a) };
        let s = stage(k);
        let (p, n) = s.interval_mass(&x, &y).unwrap();
        prop_assume!(p > zero() && n > zero());
        let (lhs, rhs) = pwl::cone_gap(&pwl::stage_function(&s), &s, &x, &y).unwrap();
        prop_assert!(lhs <= rhs);
    }

    #[test]
    fn preimages_alternate(f in unit_slope_pwl(), t in -40i64..40) {
        let t = q(2 * t + 1, 14);
        prop_assume!(!f.is_critical(&t));
        let pre = f.preimages(&t).unwrap();
        for w in pre.windows(2) {
            prop_assert!(w[0].location < w[1].location);
            prop_assert_eq!(w[0].slope_sign, -w[1].slope_sign);
        }
        // one root per piece whose value range strictly contains t
        let brute = f.values().windows(2).filter(|w| {
            let (lo, hi) = if w[0] < w[1] { (&w[0], &w[1]) } else { (&w[1], &w[0]) };
            *lo < t && t < *hi
        }).count();
        prop_assert_eq!(pre.len(), brute);
        for p in &pre {
            prop_assert_eq!(f.eval(&p.location), Some(t.clone()));
        }
    }

    #[test]
    fn area_formula_general(f in unit_slope_pwl()) {
        let (a, b) = f.domain();
        prop_assert_eq!(f.area_formula_check().unwrap(), b - a);
        let (m, _) = f.sup_preimage_count();
        let (lo, hi) = f.find_monotone_interval(m).unwrap();
        prop_assert!(f.runs().iter().any(|r| r.contains_closed(&lo, &hi)));
    }

    #[test]
    fn tilde_tv_counts_preimages(k in 0usize..10, t in 0i64..4000) {
        let f = pwl::stage_function(&stage(k));
        let t = q(2 * t + 1, 2000);
        prop_assume!(!f.is_critical(&t));
        let mu = measures::mu_tilde_at(&f, &t).unwrap();
        prop_assert_eq!(mu.total_variation() as usize, f.preimages(&t).unwrap().len());
        prop_assert_eq!(measures::mu_full_at(&f, &t).unwrap().total_mass(), 0);
    }

    #[test]
    fn field_is_bounded(k in 0usize..8, t in 0i64..=400, x in unit_point()) {
        let gf = GraphField::new(pwl::stage_function(&stage(k))).unwrap();
        let v = gf.field_at(&q(t, 100), &x);
        prop_assert!(rational::abs(&v) <= int(1));
        if gf.function().eval(&x) != Some(q(t, 100)) {
            prop_assert_eq!(v, zero());
        }
    }

    #[test]
    fn full_residual_vanishes(k in 0usize..6, coeffs in prop::collection::vec((-5i64..=5, 0u32..3, 0u32..4), 1..5)) {
        let p = Poly2::from_terms(coeffs.iter().map(|&(c, i, j)| (int(c), i, j)));
        let phi = PolyTest::new("random", testfn::canonical_cutoff(), p);
        let gf = GraphField::new(pwl::stage_function(&stage(k))).unwrap();
        prop_assert_eq!(gf.residual_tilde_exact(&phi), gf.defect_exact(&phi));
        prop_assert_eq!(gf.residual_full_exact(&phi).unwrap(), zero());
    }

    #[test]
    fn witness_characteristics_are_1_lipschitz(k in 0usize..6) {
        let gf = GraphField::new(pwl::stage_function(&stage(k))).unwrap();
        let w = flow1d::non_uniqueness_witness(&gf).unwrap();
        prop_assert!(w.branch.lipschitz() <= int(1));
        prop_assert!(w.constant.lipschitz() <= int(1));
        prop_assert_eq!(flow1d::verify_characteristic(&w.branch, &gf, 32), zero());
        prop_assert_ne!(&w.branch, &w.constant);
    }

    #[test]
    fn b3_is_one(k in 0usize..5, p in prop::array::uniform3(-64i64..=64)) {
        let of = OctField::new(stage(k));
        let pt = [q(p[0], 32), q(p[1], 32), q(p[2], 32)];
        let b = of.field_b_exact(&pt);
        prop_assert_eq!(b[2].as_rational(), Some(&int(1)));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn logistic_semigroup(x in 0.05f64..0.95, s in -1.0f64..1.0, t in -1.0f64..1.0) {
        let cf = ContinuousField1D::logistic();
        prop_assert_eq!(cf.flow(0.0, x).unwrap(), x);
        let lhs = cf.flow(t + s, x).unwrap();
        let rhs = cf.flow(t, cf.flow(s, x).unwrap()).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-8);
    }

    #[test]
    fn primitive_is_increasing(a in 0.01f64..0.99, b in 0.01f64..0.99) {
        prop_assume!((a - b).abs() > 1e-6);
        let cf = ContinuousField1D::logistic();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(cf.f_of(0.5, lo).unwrap() < cf.f_of(0.5, hi).unwrap());
        // F⁻¹(F(x)) via the flow from the reference point
        let back = cf.flow(cf.f_of(0.5, lo).unwrap(), 0.5).unwrap();
        prop_assert!((back - lo).abs() <= 1e-9);
    }
}
