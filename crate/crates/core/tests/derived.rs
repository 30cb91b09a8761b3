//! Worked values checked against a from-scratch oracle in this file.
//!
//! The oracle rebuilds the stages with nothing but the selection rule and
//! Rational arithmetic; the library's answers must agree with it, and the
//! small cases are frozen as literals.

use ce_core::ce_residual::GraphField;
use ce_core::flow1d::{self, CharPiece, ContinuousField1D};
use ce_core::measures::{self, AtomicMeasure};
use ce_core::octa3d::{Frame3, OctField};
use ce_core::pwl::{self, PwlFunction};
use ce_core::rational::{int, inv_pow2, q, Rational};
use ce_core::stagegen::{self, StageState};
use ce_core::testfn::{self, PolyTest};
use ce_core::Error;

struct Oracle {
    eps: Vec<Rational>,
    flips: Vec<(Rational, Rational)>,
    xs: Vec<Rational>,
    signs: Vec<i8>,
    values: Vec<Rational>,
}

fn dyadics() -> impl Iterator<Item = Rational> {
    (1u32..).flat_map(|lvl| (1..1i64 << lvl).step_by(2).map(move |m| q(m, 1 << lvl)))
}

fn oracle(k: usize) -> Oracle {
    let mut eps = vec![int(1)];
    let mut flips: Vec<(Rational, Rational)> = Vec::new();
    let mut e_set = vec![int(0), int(1)];
    for (n, c) in dyadics().take(k).enumerate() {
        let cap = &eps[n] * inv_pow2(n as u32 + 1);
        let mut j = 1u32;
        let e = loop {
            let e = q(1, 3) * inv_pow2(j);
            let clear = e_set.iter().all(|p| !(&c - &e < *p && *p < &c + &e));
            if e < cap && clear {
                break e;
            }
            j += 1;
        };
        let (a, b) = (&c - &e / int(2), &c + &e / int(2));
        e_set.push(a.clone());
        e_set.push(b.clone());
        flips.push((a, b));
        eps.push(e);
    }
    e_set.sort();
    let signs: Vec<i8> = e_set
        .windows(2)
        .map(|w| {
            let m = (&w[0] + &w[1]) / int(2);
            let inside = flips.iter().filter(|(a, b)| *a < m && m < *b).count();
            if inside % 2 == 0 {
                1
            } else {
                -1
            }
        })
        .collect();
    let mut values = vec![int(2)];
    for (w, s) in e_set.windows(2).zip(&signs) {
        let last = values.last().unwrap().clone();
        values.push(last + (&w[1] - &w[0]) * int(*s as i64));
    }
    Oracle { eps, flips, xs: e_set, signs, values }
}

fn f(k: usize) -> PwlFunction {
    pwl::stage_function(&stagegen::build(k).unwrap())
}

#[test]
fn stages_match_oracle() {
    for k in 0..=24 {
        let s = stagegen::build(k).unwrap();
        let o = oracle(k);
        assert_eq!(s.eps(), &o.eps[..], "eps at K={k}");
        assert_eq!(s.flips(), &o.flips[..], "flips at K={k}");
        assert_eq!(s.slopes().breakpoints(), &o.xs[..], "breakpoints at K={k}");
        assert_eq!(s.slopes().signs(), &o.signs[..], "signs at K={k}");
        assert_eq!(pwl::stage_function(&s).values(), &o.values[..], "values at K={k}");
    }
}

#[test]
fn first_two_flips() {
    let s = stagegen::build(2).unwrap();
    assert_eq!(s.eps()[1..], [q(1, 6), q(1, 48)]);
    assert_eq!(s.flips(), &[(q(5, 12), q(7, 12)), (q(23, 96), q(25, 96))]);
    assert_eq!(s.slopes().signs(), &[1, -1, 1, -1, 1]);
    assert_eq!(s.slopes().breakpoints(), &[int(0), q(23, 96), q(25, 96), q(5, 12), q(7, 12), int(1)]);
    assert_eq!(stagegen::build(1).unwrap().tail_bound(), q(1, 12));
    assert_eq!(s.tail_bound(), q(1, 96));
}

#[test]
fn masses_and_values() {
    let s1 = stagegen::build(1).unwrap();
    assert_eq!(s1.interval_mass(&int(0), &int(1)).unwrap(), (q(5, 6), q(1, 6)));
    assert_eq!(s1.interval_mass(&q(5, 12), &q(7, 12)).unwrap(), (int(0), q(1, 6)));
    assert_eq!(f(1).values(), &[int(2), q(29, 12), q(9, 4), q(8, 3)]);
    assert_eq!(f(2).eval(&int(1)), Some(q(21, 8)));
}

#[test]
fn level_sets() {
    let got: Vec<_> = f(1).preimages(&q(7, 3)).unwrap().into_iter().map(|p| (p.location, p.slope_sign)).collect();
    assert_eq!(got, [(q(1, 3), 1), (q(1, 2), -1), (q(2, 3), 1)]);
    assert!(f(1).preimages(&q(7, 2)).unwrap().is_empty());
    assert_eq!(f(1).sup_preimage_count(), (3, (q(9, 4), q(29, 12))));
    assert_eq!(f(2).sup_preimage_count(), (5, (q(213, 96), q(215, 96))));
}

/// Longest run by direct enumeration of sign changes.
fn oracle_max_run(o: &Oracle) -> Rational {
    let mut best = int(0);
    let mut start = o.xs[0].clone();
    for i in 0..o.signs.len() {
        if i + 1 == o.signs.len() || o.signs[i] != o.signs[i + 1] {
            best = best.max(&o.xs[i + 1] - &start);
            start = o.xs[i + 1].clone();
        }
    }
    best
}

#[test]
fn monotone_runs() {
    assert_eq!(f(1).max_monotone_run(), (q(5, 12), (int(0), q(5, 12))));
    // Runs of f_2: 23/96, 1/48, 15/96, 1/6, 5/12; the last one is longest.
    assert_eq!(f(2).max_monotone_run(), (q(5, 12), (q(7, 12), int(1))));
    for k in 0..=20 {
        assert_eq!(f(k).max_monotone_run().0, oracle_max_run(&oracle(k)), "K={k}");
    }
    let (a, b) = f(1).find_monotone_interval(3).unwrap();
    assert!(int(0) <= a && a < b && b <= q(5, 12));
    let tent = PwlFunction::new(vec![int(0), q(1, 2), int(1)], vec![int(0), q(1, 2), int(0)]).unwrap();
    let (a, b) = tent.find_monotone_interval(2).unwrap();
    assert!(b <= q(1, 2) || a >= q(1, 2));
}

#[test]
fn cone_gap_examples() {
    let s1 = stagegen::build(1).unwrap();
    assert_eq!(pwl::cone_gap(&f(1), &s1, &int(0), &int(1)).unwrap(), (q(2, 3), q(2, 3)));
    assert_eq!(pwl::cone_gap(&f(1), &s1, &q(5, 12), &q(7, 12)).unwrap(), (q(1, 6), q(1, 6)));
}

#[test]
fn measure_examples() {
    let f1 = f(1);
    let want = AtomicMeasure::from_atoms([(q(1, 3), 1), (q(1, 2), -1), (q(2, 3), 1)]);
    let tilde = measures::mu_tilde_at(&f1, &q(7, 3)).unwrap();
    assert_eq!(tilde, want);
    assert_eq!(tilde.total_variation(), 3);
    assert!(measures::mu_tilde_at(&f1, &q(7, 2)).unwrap().is_zero());
    assert!(measures::mu_full_at(&f1, &int(1)).unwrap().is_zero());
    assert_eq!(measures::mu_full_at(&f1, &int(3)).unwrap(), AtomicMeasure::from_atoms([(int(1), 1), (int(0), -1)]));
    let full = measures::mu_full_at(&f1, &q(7, 3)).unwrap();
    assert_eq!(full, AtomicMeasure::from_atoms([(q(1, 3), 1), (q(1, 2), -1), (q(2, 3), 1), (int(0), -1)]));
    assert_eq!(want.pair_exact(|x| x.clone()), q(1, 2));
    let (_, (lo, hi)) = f(2).sup_preimage_count();
    assert_eq!(measures::mu_tilde_at(&f(2), &((lo + hi) / int(2))).unwrap().total_variation(), 5);
}

#[test]
fn graph_field_and_residuals() {
    let gf = GraphField::new(f(1)).unwrap();
    assert_eq!(gf.field_at(&q(7, 3), &q(1, 3)), int(1));
    assert_eq!(gf.field_at(&q(7, 3), &q(9, 10)), int(0));
    let canonical = testfn::canonical_test();
    assert_eq!(gf.defect_exact(&canonical), int(1));
    assert_eq!(gf.residual_tilde_exact(&canonical), int(1));
    assert_eq!(gf.residual_full_exact(&canonical).unwrap(), int(0));
    let suite: Vec<PolyTest> = testfn::polynomial_suite();
    let x2 = suite.iter().find(|p| p.id == "x^2").unwrap();
    assert_eq!(gf.defect_exact(x2), int(1));
    let gf2 = GraphField::new(f(2)).unwrap();
    let tx = suite.iter().find(|p| p.id == "t*x").unwrap();
    assert_eq!(gf2.residual_tilde_exact(tx), gf2.defect_exact(tx));
    // ψ ≡ 1 near f_2(1) = 21/8, so the defect is t·x at (21/8, 1).
    assert_eq!(gf2.defect_exact(tx), q(21, 8));
    let gf3 = GraphField::new(f(3)).unwrap();
    for phi in &suite {
        assert_eq!(gf3.residual_full_exact(phi).unwrap(), int(0), "{}", phi.id);
    }
}

#[test]
fn flow_values() {
    let cf = ContinuousField1D::logistic();
    assert!((cf.f_of(0.5, 0.75).unwrap() - 3f64.ln()).abs() < 1e-9);
    let e = std::f64::consts::E;
    assert!((cf.flow(1.0, 0.5).unwrap() - e / (1.0 + e)).abs() < 1e-9);
    let composed = cf.flow(0.3, cf.flow(0.2, 0.5).unwrap()).unwrap();
    assert!((composed - cf.flow(0.5, 0.5).unwrap()).abs() < 1e-8);
}

#[test]
fn branch_characteristic_example() {
    let gf = GraphField::new(f(1)).unwrap();
    let g = flow1d::branch_characteristic(&gf, &q(1, 8), &q(1, 3)).unwrap();
    assert_eq!(g.knots, [int(0), q(17, 8), q(7, 3), int(4)]);
    assert_eq!(g.pieces[0], CharPiece::Constant(q(1, 8)));
    assert_eq!(g.pieces[2], CharPiece::Constant(q(1, 3)));
    assert_eq!(g.eval(&q(9, 4)), Some(q(1, 4)));
    assert_eq!(flow1d::verify_characteristic(&g, &gf, 64), int(0));
    assert!(matches!(flow1d::branch_characteristic(&gf, &q(1, 8), &q(3, 5)), Err(Error::NotMonotoneRun { .. })));
}

#[test]
fn octahedron_values() {
    let frame = Frame3::default();
    let p = frame.to_frame([1.0, 0.0, 0.0]);
    assert!((p[0] + 2f64.sqrt() / 2.0).abs() < 1e-15 && p[1].abs() < 1e-15 && p[2].abs() < 1e-15);
    let of = OctField::new(stagegen::build(2).unwrap());
    assert!((of.slice_tv(0.5).nu - 2.0 * 3f64.sqrt()).abs() < 1e-12);
}

/// Stage at which both signs first exceed the tail bound on each dyadic
/// interval of length 1/32, from the oracle's own masses.
#[test]
fn density_stages() {
    let states: Vec<StageState> = stagegen::build_all(40).unwrap();
    let got: Vec<usize> = stagegen::dyadic_intervals(5)
        .iter()
        .map(|(a, b)| stagegen::first_separating_stage(&states, a, b).unwrap().unwrap())
        .collect();
    let want = [
        17, 9, 9, 5, 5, 10, 10, 3, 3, 11, 11, 6, 6, 3, 12, 24, 25, 13, 3, 7, 7, 14, 14, 4, 4, 15, 15, 8, 8, 16, 16, 32,
    ];
    assert_eq!(got, want);
    for (m, &k) in want.iter().enumerate() {
        let o = oracle(k);
        let (a, b) = (q(m as i64, 32), q(m as i64 + 1, 32));
        let (mut p, mut n) = (int(0), int(0));
        for (w, s) in o.xs.windows(2).zip(&o.signs) {
            let lo = w[0].clone().max(a.clone());
            let hi = w[1].clone().min(b.clone());
            if hi > lo {
                if *s > 0 {
                    p += hi - lo
                } else {
                    n += hi - lo
                }
            }
        }
        let tail = &o.eps[k] / int(2);
        assert!(p > tail && n > tail, "interval {m}");
    }
}
