use formsys::arith::{int, rat};
use formsys::count::count_solutions;
use formsys::invariants::{u_invariant, InvariantConfig};
use formsys::multilinear::polarize;
use formsys::weyl::exponential_sum;
use formsys::{BoxRegion, Form, FormSystem, PencilVector, PhaseVector};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use proptest::prelude::*;

/// A nonzero form of degree `d` in `n` variables from a list of variable picks.
fn build(n: usize, d: usize, picks: &[(Vec<usize>, i64)]) -> Option<Form> {
    let terms = picks.iter().map(|(vars, c)| {
        let mut e = vec![0u32; n];
        for &v in vars.iter().take(d) {
            e[v % n] += 1;
        }
        (e, BigInt::from(*c))
    });
    Form::new(n, terms).ok()
}

fn form_strategy(max_n: usize, max_d: usize) -> impl Strategy<Value = Form> {
    (1..=max_n, 1..=max_d)
        .prop_flat_map(|(n, d)| {
            let term = (proptest::collection::vec(0..n, d), -9i64..=9);
            (Just(n), Just(d), proptest::collection::vec(term, 1..6))
        })
        .prop_filter_map("zero form", |(n, d, picks)| build(n, d, &picks))
}

fn point(n: usize) -> impl Strategy<Value = Vec<BigInt>> {
    proptest::collection::vec((-20i64..=20).prop_map(BigInt::from), n)
}

fn factorial(d: u32) -> BigInt {
    (1..=d).map(BigInt::from).product()
}

fn form_and_points(k: usize) -> impl Strategy<Value = (Form, Vec<Vec<BigInt>>)> {
    form_strategy(5, 4).prop_flat_map(move |f| {
        let n = f.n_vars();
        let d = f.degree() as usize;
        (Just(f), proptest::collection::vec(point(n), d.max(1) * k))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn diagonal_polarization((f, xs) in form_and_points(1)) {
        let d = f.degree() as usize;
        let x = xs[0].clone();
        let diag = vec![x.clone(); d];
        prop_assert_eq!(polarize(&f, &diag).unwrap(), factorial(d as u32) * f.evaluate(&x).unwrap());
    }

    #[test]
    fn polarization_is_symmetric((f, xs) in form_and_points(1), seed in 0usize..1000) {
        let d = f.degree() as usize;
        let base = polarize(&f, &xs[..d]).unwrap();
        let mut shuffled = xs[..d].to_vec();
        // A deterministic permutation driven by the seed.
        for i in (1..d).rev() {
            shuffled.swap(i, (seed / (i + 1) + seed) % (i + 1));
        }
        prop_assert_eq!(polarize(&f, &shuffled).unwrap(), base);
    }

    #[test]
    fn polarization_is_multilinear((f, xs) in form_and_points(2), lambda in -5i64..=5) {
        let d = f.degree() as usize;
        let x = &xs[..d];
        let y = &xs[d];
        let mut combined = x.to_vec();
        combined[0] = x[0].iter().zip(y).map(|(a, b)| a + b * lambda).collect();
        let mut only_y = x.to_vec();
        only_y[0] = y.clone();
        let lhs = polarize(&f, &combined).unwrap();
        let rhs = polarize(&f, x).unwrap() + polarize(&f, &only_y).unwrap() * lambda;
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn euler_relation((f, xs) in form_and_points(1)) {
        let x = &xs[0];
        let grad = f.gradient(x).unwrap();
        let lhs: BigInt = grad.iter().zip(x).map(|(g, xi)| g * xi).sum();
        prop_assert_eq!(lhs, f.evaluate(x).unwrap() * f.degree());
    }
}

fn system_strategy(max_r: usize, n: usize, d: usize) -> impl Strategy<Value = FormSystem> {
    let term = (proptest::collection::vec(0..n, d), -5i64..=5);
    proptest::collection::vec(proptest::collection::vec(term, 1..5), 1..=max_r).prop_filter_map("zero form", move |fs| {
        let forms: Option<Vec<Form>> = fs.iter().map(|picks| build(n, d, picks)).collect();
        FormSystem::new(forms?).ok()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pencil_is_linear(sys in system_strategy(3, 4, 3), b in proptest::collection::vec(-4i64..=4, 3), c in proptest::collection::vec(-4i64..=4, 3), x in point(4)) {
        let r = sys.r();
        let (b, c) = (&b[..r], &c[..r]);
        let sum: Vec<i64> = b.iter().zip(c).map(|(u, v)| u + v).collect();
        let eval = |v: &[i64]| -> BigInt {
            let pv = PencilVector::from_i64(v);
            match sys.pencil_form(&pv) {
                Ok(f) => f.evaluate(&x).unwrap(),
                Err(_) => BigInt::zero(),
            }
        };
        prop_assert_eq!(eval(&sum), eval(b) + eval(c));
        let direct: BigInt = sys.evaluate(&x).unwrap().iter().zip(b).map(|(v, bi)| v * bi).sum();
        prop_assert_eq!(eval(b), direct);
    }

    #[test]
    fn counts_grow_with_p(sys in system_strategy(2, 3, 2), p in 1i64..6) {
        let b = BoxRegion::unit(3);
        let small = count_solutions(&sys, &b, &rat(p, 1)).unwrap().count;
        let large = count_solutions(&sys, &b, &rat(p + 1, 1)).unwrap().count;
        prop_assert!(small >= BigInt::from(1));
        prop_assert!(small <= large);
    }

    #[test]
    fn weyl_sum_below_trivial_bound(sys in system_strategy(2, 3, 2), num in proptest::collection::vec(-12i64..=12, 2), den in 1i64..13, p in 1i64..7) {
        let r = sys.r();
        let alpha = PhaseVector::exact(num[..r].iter().map(|&a| rat(a, den)).collect());
        let b = BoxRegion::unit(3);
        let p = rat(p, 1);
        let s = exponential_sum(&sys, &alpha, &b, &p).unwrap();
        let zero = exponential_sum(&sys, &PhaseVector::zero(r), &b, &p).unwrap();
        let points = s.points.to_f64().unwrap();
        prop_assert!((zero.value.re - points).abs() < 1e-9 * points.max(1.0));
        prop_assert!(s.value.norm() <= points * (1.0 + 1e-12) + 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn u_ignores_signs_and_order(sys in system_strategy(2, 4, 2), flip in proptest::bool::ANY) {
        let cfg = InvariantConfig { b_bound: 3, random_pencils: 0, ..Default::default() };
        let base = u_invariant(&sys, &cfg).unwrap().u;
        let mut forms: Vec<Form> = sys.forms().to_vec();
        forms.reverse();
        if flip {
            forms[0] = forms[0].negated();
        }
        let other = FormSystem::new(forms).unwrap();
        prop_assert_eq!(u_invariant(&other, &cfg).unwrap().u, base);
    }
}

#[test]
fn box_volume_matches_point_count_scale() {
    // (2P + 1)^n points in P·[-1,1]^n.
    let b = BoxRegion::unit(3);
    let p: BigRational = rat(4, 1);
    assert_eq!(b.lattice_point_count(&p), int(729));
}
