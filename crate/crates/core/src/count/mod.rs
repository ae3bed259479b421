//! Exact lattice point counts: `N(P)`, `M_f(P)` and `N(P^ξ; P^{-η}; α)`,
//! plus the least-squares proxy for `g(f)`.

mod poly;
mod tuples;

use std::io::Write;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::arith::{fits_fast, fits_small, floor_pow, fmt_rational, max_int_below_scaled_pow, EngineInt};
use crate::error::{Error, Result};
use crate::form::{Form, FormSystem};
use crate::phase::PhaseVector;
use crate::region::BoxRegion;

pub(crate) use poly::{horner, machine_ranges, value_bound, Leaf, PolyEngine};
pub(crate) use tuples::{tensor_value_bound, Flow, Predicate, Solutions, TupleEngine, TupleVisitor};

/// `N(P)` together with the size of the search space.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountResult {
    pub count: BigInt,
    pub p: BigRational,
    pub points_enumerated: BigInt,
    pub elapsed: Duration,
}

/// Samples `(P, M_f(P))` and the fitted growth exponent.
#[derive(Clone, Debug, PartialEq)]
pub struct GEstimate {
    pub samples: Vec<(u64, BigInt)>,
    pub slope: f64,
    pub g_estimate: f64,
    pub residual: f64,
}

pub(crate) fn check_scale(p: &BigRational) -> Result<()> {
    if p < &BigRational::one() {
        return Err(Error::InvalidArgument(format!("P must be at least 1, got {}", fmt_rational(p))));
    }
    Ok(())
}

/// Number of `x ∈ P·B ∩ ℤ^n` with `f_i(x) = 0` for every `i`.
pub fn count_solutions(sys: &FormSystem, region: &BoxRegion, p: &BigRational) -> Result<CountResult> {
    let start = Instant::now();
    if region.dim() != sys.n_vars() {
        return Err(Error::DimensionMismatch { expected: sys.n_vars(), found: region.dim() });
    }
    check_scale(p)?;
    let points = region.lattice_point_count(p);
    let Some(ranges) = region.integer_ranges(p) else {
        return Ok(CountResult { count: BigInt::zero(), p: p.clone(), points_enumerated: points, elapsed: start.elapsed() });
    };
    let bound = value_bound(sys.forms(), &ranges);
    let small = machine_ranges(&ranges)?;
    let leaf = poly::CommonRoots { r: sys.r(), d: sys.degree() as usize };
    let worst = &bound * &bound * 8;
    let count = if fits_small(&worst) {
        PolyEngine::<i64>::new(sys.forms(), &small).run(&leaf)?.0
    } else if fits_fast(&worst) {
        PolyEngine::<i128>::new(sys.forms(), &small).run(&leaf)?.0
    } else {
        PolyEngine::<BigInt>::new(sys.forms(), &small).run(&leaf)?.0
    };
    Ok(CountResult { count: BigInt::from(count), p: p.clone(), points_enumerated: points, elapsed: start.elapsed() })
}

fn count_tuples<T: EngineInt>(forms: &[Form], pred: impl FnOnce() -> Predicate<T>, bound: i64) -> Result<BigInt> {
    let engine = TupleEngine::<T>::new(forms)?;
    let n = forms[0].n_vars();
    Ok(BigInt::from(tuples::count_box(&engine, n, &pred(), bound)?))
}

/// `M_f(P)`: tuples `(x^(2), .., x^(d))` with all coordinates in `[-P, P]`
/// and `Γ_f(e_j, x^(2), .., x^(d)) = 0` for every `j`.
pub fn count_multilinear_zero(f: &Form, p: u64) -> Result<BigInt> {
    if f.degree() < 2 {
        return Err(Error::InvalidArgument("M_f needs degree >= 2".into()));
    }
    let bound = i64::try_from(p).map_err(|_| Error::InvalidArgument("P too large".into()))?;
    let vb = tensor_value_bound(std::slice::from_ref(f), &BigInt::from(p))?;
    let forms = std::slice::from_ref(f);
    if fits_small(&(&vb * 4)) {
        count_tuples::<i64>(forms, || Predicate::Zero, bound)
    } else if fits_fast(&(vb * 4)) {
        count_tuples::<i128>(forms, || Predicate::Zero, bound)
    } else {
        count_tuples::<BigInt>(forms, || Predicate::Zero, bound)
    }
}

/// Parameters of the near-integer condition at scale `P`.
pub(crate) struct NearSetup {
    pub bound: BigInt,
    pub modulus: BigInt,
    pub dmax: BigInt,
    pub small: bool,
    pub fast: bool,
}

pub(crate) fn near_setup(sys: &FormSystem, alpha: &PhaseVector, xi: &BigRational, eta: &BigRational, p: &BigRational) -> Result<NearSetup> {
    alpha.check_len(sys.r())?;
    check_scale(p)?;
    if !xi.is_positive() || xi > &BigRational::one() {
        return Err(Error::InvalidArgument("ξ must lie in (0, 1]".into()));
    }
    if eta.is_negative() {
        return Err(Error::InvalidArgument("η must be nonnegative".into()));
    }
    let bound = floor_pow(p, xi)?;
    if bound.to_i64().is_none() {
        return Err(Error::InvalidArgument("tuple bound too large to enumerate".into()));
    }
    let modulus = alpha.scaled().modulus;
    let dmax = max_int_below_scaled_pow(&modulus, p, eta)?;
    let vb = tensor_value_bound(sys.forms(), &bound)?;
    let size = &modulus * BigInt::from(sys.r() as u64 + 1) * vb * (&bound + 2) * 8;
    Ok(NearSetup { small: fits_small(&size), fast: fits_fast(&size), bound, modulus, dmax })
}

/// `N(P^ξ; P^{-η}; α)`: tuples with sup-norm at most `P^ξ` such that
/// `‖Σ α_i Γ_i(e_j, x^(2), .., x^(d))‖ < P^{-η}` for every `j`.
pub fn count_weyl_near_solutions(
    sys: &FormSystem,
    alpha: &PhaseVector,
    xi: &BigRational,
    eta: &BigRational,
    p: &BigRational,
) -> Result<BigInt> {
    if sys.degree() < 2 {
        return Err(Error::InvalidArgument("multilinear conditions need degree >= 2".into()));
    }
    let s = near_setup(sys, alpha, xi, eta, p)?;
    let b = s.bound.to_i64().unwrap();
    if s.small {
        count_tuples::<i64>(sys.forms(), || Predicate::near(alpha, &s.dmax, &s.modulus), b)
    } else if s.fast {
        count_tuples::<i128>(sys.forms(), || Predicate::near(alpha, &s.dmax, &s.modulus), b)
    } else {
        count_tuples::<BigInt>(sys.forms(), || Predicate::near(alpha, &s.dmax, &s.modulus), b)
    }
}

/// Fits `log M_f(P) ≈ slope·log P + c` and reports `(d-1)n - slope`.
pub fn estimate_g_invariant(f: &Form, p_list: &[u64]) -> Result<GEstimate> {
    let mut ps = p_list.to_vec();
    ps.sort_unstable();
    ps.dedup();
    if ps.len() < 3 || ps[0] < 2 {
        return Err(Error::InvalidArgument("need at least 3 distinct P values, each >= 2".into()));
    }
    let samples: Vec<(u64, BigInt)> =
        ps.iter().map(|&p| Ok((p, count_multilinear_zero(f, p)?))).collect::<Result<_>>()?;
    let xs: Vec<f64> = ps.iter().map(|&p| (p as f64).ln()).collect();
    let ys: Vec<f64> = samples.iter().map(|(_, m)| crate::arith::ln_abs_big(m)).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let sse: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - icpt - slope * x).powi(2)).sum();
    let residual = (sse / k).sqrt();
    let top = ((f.degree() - 1) as usize * f.n_vars()) as f64;
    Ok(GEstimate { samples, slope, g_estimate: top - slope, residual })
}

/// Writes a `(P, count)` series as CSV.
pub fn write_count_csv<W: Write>(out: W, rows: &[(BigRational, BigInt)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::InvalidArgument(format!("csv: {e}"));
    w.write_record(["P", "count"]).map_err(io)?;
    for (p, c) in rows {
        w.write_record([fmt_rational(p), c.to_string()]).map_err(io)?;
    }
    w.flush().map_err(|e| Error::InvalidArgument(format!("csv: {e}")))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::rat;
    use crate::phase::Phase;

    fn sys(text: &str, n: usize) -> FormSystem {
        FormSystem::parse(text, n).unwrap()
    }

    fn oracle_count(s: &FormSystem, p: i64) -> u64 {
        let n = s.n_vars();
        let mut x = vec![-p; n];
        let mut total = 0;
        loop {
            let v: Vec<BigInt> = x.iter().map(|&c| BigInt::from(c)).collect();
            if s.evaluate(&v).unwrap().iter().all(Zero::is_zero) {
                total += 1;
            }
            let mut k = 0;
            loop {
                if k == n {
                    return total;
                }
                x[k] += 1;
                if x[k] <= p {
                    break;
                }
                x[k] = -p;
                k += 1;
            }
        }
    }

    #[test]
    fn solution_counts() {
        let unit2 = BoxRegion::unit(2);
        assert_eq!(count_solutions(&sys("x1^2 + x2^2", 2), &unit2, &rat(10, 1)).unwrap().count, BigInt::from(1));
        assert_eq!(count_solutions(&sys("x1^2 - x2^2", 2), &unit2, &rat(2, 1)).unwrap().count, BigInt::from(9));
        let cone = sys("x1^2 + x2^2 - x3^2", 3);
        let got = count_solutions(&cone, &BoxRegion::unit(3), &rat(5, 1)).unwrap();
        assert_eq!(got.count, BigInt::from(oracle_count(&cone, 5)));
        assert_eq!(got.points_enumerated, BigInt::from(1331));
    }

    #[test]
    fn engine_matches_oracle_on_assorted_systems() {
        for (text, n, p) in [
            ("x1^3 + x2^3 - x3^3", 3, 6),
            ("x1*x2 - x3*x4", 4, 3),
            ("x1^2 - 2*x2^2; x1*x3 - x2^2", 3, 7),
            ("x1^4 - x2^4", 2, 5),
            ("x1^3 - x1*x2^2 + 2*x2^3", 2, 9),
            ("x1^2", 1, 4),
            ("x1*x2; x1*x3", 3, 3),
        ] {
            let s = sys(text, n);
            let got = count_solutions(&s, &BoxRegion::unit(n), &rat(p, 1)).unwrap().count;
            assert_eq!(got, BigInt::from(oracle_count(&s, p)), "{text}");
        }
    }

    #[test]
    fn rational_scale_and_boxes() {
        let s = sys("x1^2 - x2^2", 2);
        let half = BoxRegion::parse("0:1", 2).unwrap();
        assert_eq!(count_solutions(&s, &half, &rat(5, 2)).unwrap().count, BigInt::from(3));
        assert!(count_solutions(&s, &half, &rat(1, 2)).is_err());
    }

    #[test]
    fn multilinear_zero_counts() {
        assert_eq!(count_multilinear_zero(&Form::parse("x1*x2", 2).unwrap(), 10).unwrap(), BigInt::from(1));
        assert_eq!(count_multilinear_zero(&Form::parse("x1^2", 2).unwrap(), 10).unwrap(), BigInt::from(21));
        // f = x1^2 x2: Γ(e1,x,y) = 2(x1 y2 + x2 y1), Γ(e2,x,y) = 2 x1 y1
        let f = Form::parse("x1^2*x2", 2).unwrap();
        let mut want = 0;
        for x1 in -3i64..=3 {
            for x2 in -3i64..=3 {
                for y1 in -3i64..=3 {
                    for y2 in -3i64..=3 {
                        if x1 * y2 + x2 * y1 == 0 && x1 * y1 == 0 {
                            want += 1;
                        }
                    }
                }
            }
        }
        assert_eq!(count_multilinear_zero(&f, 3).unwrap(), BigInt::from(want));
        assert!(count_multilinear_zero(&Form::parse("x1", 1).unwrap(), 3).is_err());
    }

    #[test]
    fn near_solution_counts() {
        let s = sys("x1^2", 1);
        let third = PhaseVector::exact(vec![rat(1, 3)]);
        let one = rat(1, 1);
        let got = count_weyl_near_solutions(&s, &third, &one, &one, &rat(10, 1)).unwrap();
        assert_eq!(got, BigInt::from(7));
        let zero = PhaseVector::zero(1);
        let s2 = sys("x1*x2 + x3^2", 3);
        let got = count_weyl_near_solutions(&s2, &zero, &rat(1, 2), &one, &rat(16, 1)).unwrap();
        assert_eq!(got, BigInt::from(9 * 9 * 9));
        // huge η collapses to exact multilinear zeros
        let f = Form::parse("x1^2 - x2^2 + x1*x3", 3).unwrap();
        let got = count_weyl_near_solutions(&FormSystem::single(f.clone()), &third, &one, &rat(40, 1), &rat(4, 1)).unwrap();
        let m = count_tuples::<i128>(
            std::slice::from_ref(&f),
            || Predicate::near(&PhaseVector::exact(vec![rat(1, 3)]), &BigInt::zero(), &BigInt::from(3)),
            4,
        )
        .unwrap();
        assert_eq!(got, m);
    }

    #[test]
    fn approximate_phase_agrees_with_direct_test() {
        let f = Form::parse("x1^2 + 3*x1*x2 - x2^2", 2).unwrap();
        let s = FormSystem::single(f.clone());
        let alpha = PhaseVector(vec![Phase::sqrt(&rat(2, 1), false, 60).unwrap()]);
        let p = rat(30, 1);
        let got = count_weyl_near_solutions(&s, &alpha, &rat(1, 1), &rat(1, 2), &p).unwrap();
        let a = 2f64.sqrt();
        let tau = 30f64.powf(-0.5);
        let mut want = 0u64;
        for x1 in -30i64..=30 {
            for x2 in -30i64..=30 {
                // Γ(e1,x) = 2x1 + 3x2, Γ(e2,x) = 3x1 - 2x2
                let ok = [2 * x1 + 3 * x2, 3 * x1 - 2 * x2].iter().all(|&v| {
                    let y = a * v as f64;
                    (y - y.round()).abs() < tau
                });
                want += ok as u64;
            }
        }
        assert_eq!(got, BigInt::from(want));
    }

    #[test]
    fn g_estimates() {
        let g = estimate_g_invariant(&Form::parse("x1*x2", 2).unwrap(), &[10, 20, 40]).unwrap();
        assert_eq!(g.slope, 0.0);
        assert_eq!(g.residual, 0.0);
        assert_eq!(g.g_estimate, 2.0);
        let g = estimate_g_invariant(&Form::parse("x1^2", 2).unwrap(), &[10, 20, 40]).unwrap();
        assert!((g.slope - 1.0).abs() < 0.1 && (g.g_estimate - 1.0).abs() < 0.1);
        let g = estimate_g_invariant(&Form::parse("x1^3", 1).unwrap(), &[10, 20, 40]).unwrap();
        assert_eq!(g.samples[0].1, BigInt::from(41));
        assert!((g.g_estimate - 1.0).abs() < 0.1);
        assert!(estimate_g_invariant(&Form::parse("x1^3", 1).unwrap(), &[10, 20]).is_err());
    }

    #[test]
    fn csv_series() {
        let mut buf = Vec::new();
        write_count_csv(&mut buf, &[(rat(10, 1), BigInt::from(1)), (rat(5, 2), BigInt::from(3))]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "P,count\n10,1\n5/2,3\n");
    }
}
