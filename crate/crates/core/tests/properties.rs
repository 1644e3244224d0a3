use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use proptest::prelude::*;

use diophlab::affine::{sublevel_measure, sup_abs_over_box, AffineForm, ParamBox};
use diophlab::exterior::{MultiIndex, Multivector};
use diophlab::flows::Hyperplane;
use diophlab::lattice::IntegerSubgroup;
use diophlab::measure::{hit_test, hit_test_exhaustive, point, side_of, strip_measure_exact, ShellSpec, Side};
use diophlab::nondiv::{c_vector, minimax_box_constant, minimax_holds, nonconstant_orbit_identity_check};
use diophlab::sampling::{estimate_volume, Sampler};
use diophlab::scalar::{dist_to_int, int, rat, Rational};

const BUDGET: u128 = 50_000_000;

fn small_rat() -> impl Strategy<Value = Rational> {
    (-30i64..=30, 1i64..=7).prop_map(|(n, d)| rat(n, d))
}

fn unit_rat() -> impl Strategy<Value = Rational> {
    (0i64..=64).prop_map(|k| rat(k, 64))
}

fn vector(len: usize) -> impl Strategy<Value = Vec<Rational>> {
    prop::collection::vec(small_rat(), len)
}

fn param_box(d: usize) -> impl Strategy<Value = ParamBox> {
    prop::collection::vec((-8i64..=8, 1i64..=8), d).prop_map(|iv| {
        ParamBox::new(iv.into_iter().map(|(lo, w)| (rat(lo, 4), rat(lo + w, 4))).collect()).unwrap()
    })
}

fn affine(d: usize) -> impl Strategy<Value = AffineForm> {
    (small_rat(), vector(d)).prop_map(|(c, g)| AffineForm::new(c, g))
}

fn hyperplane(n: usize) -> impl Strategy<Value = Hyperplane> {
    prop::collection::vec((-40i64..=40, 1i64..=9), n)
        .prop_map(|v| Hyperplane::new(v.into_iter().map(|(a, b)| rat(a, b)).collect()).unwrap())
}

/// Every `q` in the shell on `side`, with `‖q·y‖ < θ`.
fn brute_hit(x: &[Rational], a: &Hyperplane, t: u32, theta: &Rational, side: Side) -> bool {
    let n = a.n();
    let shell = ShellSpec { t };
    let r = shell.upper();
    let y = point(x, a).unwrap();
    let mut q = vec![-(r - 1); n];
    loop {
        if shell.contains(&q) && side_of(&q, a) == side {
            let dot = q.iter().zip(&y).fold(Rational::zero(), |acc, (qi, yi)| acc + int(*qi) * yi);
            if dist_to_int(&dot) < *theta {
                return true;
            }
        }
        let Some(pos) = (0..n).rev().find(|&i| q[i] < r - 1) else {
            return false;
        };
        q[pos] += 1;
        for v in q.iter_mut().skip(pos + 1) {
            *v = -(r - 1);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn vectors_square_to_zero_and_anticommute(u in vector(4), v in vector(4)) {
        let (a, b) = (Multivector::vector(&u), Multivector::vector(&v));
        prop_assert!(a.wedge(&a).unwrap().is_zero());
        prop_assert_eq!(a.wedge(&b).unwrap(), b.wedge(&a).unwrap().scale(&int(-1)));
    }

    #[test]
    fn wedge_is_bilinear(u in vector(3), v in vector(3), w in vector(3), s in small_rat()) {
        let (a, b, c) = (Multivector::vector(&u), Multivector::vector(&v), Multivector::vector(&w));
        let lhs = a.scale(&s).try_add(&b).unwrap().wedge(&c).unwrap();
        let rhs = a.wedge(&c).unwrap().scale(&s).try_add(&b.wedge(&c).unwrap()).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn box_sup_dominates_points(f in affine(2), b in param_box(2), s in unit_rat(), t in unit_rat()) {
        let (sup, vertex) = sup_abs_over_box(&f, &b).unwrap();
        let iv = b.intervals();
        let x = vec![&iv[0].0 + (&iv[0].1 - &iv[0].0) * s, &iv[1].0 + (&iv[1].1 - &iv[1].0) * t];
        prop_assert!(f.eval(&x).unwrap().abs() <= sup);
        prop_assert_eq!(f.eval(&vertex).unwrap().abs(), sup);
    }

    #[test]
    fn sublevel_measure_is_monotone(f in affine(2), b in param_box(2), e1 in 1i64..40, e2 in 1i64..40) {
        let (lo, hi) = (rat(e1.min(e2), 8), rat(e1.max(e2), 8));
        let m_lo = sublevel_measure(&f, &b, &lo).unwrap();
        let m_hi = sublevel_measure(&f, &b, &hi).unwrap();
        prop_assert!(!m_lo.is_negative());
        prop_assert!(m_lo <= m_hi);
        prop_assert!(m_hi <= b.volume());
    }

    #[test]
    fn minimax_constant_is_sound(f in affine(2), b in param_box(2)) {
        let c_b = minimax_box_constant(&b).unwrap();
        prop_assert!(c_b.is_positive());
        prop_assert!(minimax_holds(&f, &b, &c_b).unwrap());
    }

    #[test]
    fn strip_measure_within_bound_and_monotone(
        a in hyperplane(2),
        q in prop::collection::vec(-9i64..=9, 2),
        k1 in 1i64..=31,
        k2 in 1i64..=31,
    ) {
        prop_assume!(q.iter().any(|v| *v != 0));
        let b = ParamBox::unit(1);
        let (lo, hi) = (rat(k1.min(k2), 64), rat(k1.max(k2), 64));
        let m_lo = strip_measure_exact(&b, &q, &a, &lo).unwrap();
        let m_hi = strip_measure_exact(&b, &q, &a, &hi).unwrap();
        prop_assert!(m_lo.measure <= m_hi.measure);
        prop_assert!(m_lo.measure <= m_lo.bound);
        prop_assert!(m_hi.measure <= b.volume());
    }

    #[test]
    fn orbit_components_are_linear_in_c(
        a in hyperplane(3),
        coeffs in prop::collection::vec(-3i64..=3, 6),
        xs in prop::collection::vec(vector(2), 1..3),
    ) {
        let terms = [[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]]
            .iter()
            .zip(&coeffs)
            .map(|(idx, c)| (MultiIndex::new(idx, 4).unwrap(), int(*c)));
        let w = Multivector::from_terms(4, 2, terms).unwrap();
        prop_assert!(nonconstant_orbit_identity_check(&w, &a, &xs).unwrap());
        let c = c_vector(&MultiIndex::new(&[0, 2], 4).unwrap(), &w).unwrap();
        prop_assert!(c.c[2].is_zero());
        prop_assert_eq!(&c.c[0], &int(coeffs[1]));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn lattice_hit_test_matches_exhaustive_scan(
        a in hyperplane(2),
        x in unit_rat(),
        t in 0u32..=3,
        k in 1i64..=40,
        less in any::<bool>(),
    ) {
        let theta = rat(k, 128);
        let side = if less { Side::Less } else { Side::Geq };
        let x = vec![x];
        let fast = hit_test(&x, &a, t, &theta, side, BUDGET).unwrap();
        let slow = hit_test_exhaustive(&x, &a, t, &theta, side, BUDGET).unwrap();
        prop_assert_eq!(&fast, &slow);
        prop_assert_eq!(fast.is_some(), brute_hit(&x, &a, t, &theta, side));
        if let Some(w) = fast {
            let shell = ShellSpec { t };
            prop_assert!(shell.contains(&w.q));
            prop_assert_eq!(side_of(&w.q, &a), side);
            prop_assert!(w.value < theta);
            prop_assert_eq!(w.recompute(&x, &a).unwrap(), w.value);
        }
    }

    #[test]
    fn hit_test_agrees_in_three_dimensions(
        a in hyperplane(3),
        x in prop::collection::vec(unit_rat(), 2),
        t in 0u32..=2,
        k in 1i64..=40,
        less in any::<bool>(),
    ) {
        let theta = rat(k, 256);
        let side = if less { Side::Less } else { Side::Geq };
        let fast = hit_test(&x, &a, t, &theta, side, BUDGET).unwrap();
        prop_assert_eq!(fast.is_some(), brute_hit(&x, &a, t, &theta, side));
        prop_assert_eq!(fast, hit_test_exhaustive(&x, &a, t, &theta, side, BUDGET).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn canonical_form_ignores_the_basis(
        rows in prop::collection::vec(prop::collection::vec(-6i64..=6, 4), 2),
        m in prop::collection::vec(-3i64..=3, 1),
    ) {
        let basis: Vec<Vec<BigInt>> = rows.iter().map(|r| r.iter().map(|&v| BigInt::from(v)).collect()).collect();
        let Ok(g) = IntegerSubgroup::new(basis, 4) else { return Ok(()); };
        // elementary row operation [[1, m], [0, 1]] and a swap
        let u = vec![
            vec![BigInt::one(), BigInt::from(m[0])],
            vec![BigInt::zero(), BigInt::one()],
        ];
        let swap = vec![vec![BigInt::zero(), BigInt::one()], vec![BigInt::one(), BigInt::zero()]];
        let h = g.rebased(&u).unwrap().rebased(&swap).unwrap();
        prop_assert_eq!(g.canonical_form(), h.canonical_form());
        prop_assert_eq!(g.is_primitive(), g.is_primitive_by_minors());
        prop_assert_eq!(g.elementary_divisors(), h.elementary_divisors());
    }
}

#[test]
fn sampled_estimates_are_deterministic() {
    let b = ParamBox::unit(2);
    let s = Sampler::Mc { samples: 5000, seed: 42 };
    let pred = |x: &[Rational]| Ok(&x[0] + &x[1] < Rational::one());
    let first = estimate_volume(&s, &b, pred).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let second = pool.install(|| estimate_volume(&s, &b, pred)).unwrap();
    assert_eq!(first, second);
    assert!(first.contains(0.5));
}
