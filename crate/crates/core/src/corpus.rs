//! Small worked examples with known answers. The command-line `corpus` command and
//! the acceptance tests both run these.

use num_bigint::BigInt;
use num_rational::BigRational;

use crate::arith::rat;
use crate::count::count_solutions;
use crate::error::Result;
use crate::families::bilinear_family;
use crate::form::{Form, FormSystem};
use crate::invariants::{
    check_hypotheses, h_invariant_bounds, quadratic_rank, singular_locus_dimension, u_invariant, v_star_dimension,
    FpConfig, InvariantConfig, Verdict,
};
use crate::phase::PhaseVector;
use crate::region::BoxRegion;
use crate::weyl::{major_arc_approximation, DichotomyOutcome, DEFAULT_COLUMN_CAP};

/// One dichotomy run of the regression corpus.
#[derive(Clone, Debug)]
pub struct DichotomyCase {
    pub name: &'static str,
    pub system: FormSystem,
    pub alpha: PhaseVector,
    pub theta: BigRational,
    pub p: BigRational,
}

/// Outcome of a single fixture.
#[derive(Clone, Debug, PartialEq)]
pub struct FixtureResult {
    pub name: String,
    pub expected: String,
    pub found: String,
    pub passed: bool,
}

impl FixtureResult {
    fn new(name: impl Into<String>, expected: impl ToString, found: impl ToString) -> FixtureResult {
        let (expected, found) = (expected.to_string(), found.to_string());
        FixtureResult { name: name.into(), passed: expected == found, expected, found }
    }
}

fn sys(text: &str, n: usize) -> Result<FormSystem> {
    FormSystem::parse(text, n)
}

fn exact_alpha(values: &[(i64, i64)]) -> PhaseVector {
    PhaseVector::exact(values.iter().map(|&(a, q)| rat(a, q)).collect())
}

pub fn dichotomy_cases() -> Result<Vec<DichotomyCase>> {
    let one = rat(1, 1);
    Ok(vec![
        DichotomyCase { name: "x1^2 at 1/3", system: sys("x1^2", 1)?, alpha: exact_alpha(&[(1, 3)]), theta: one.clone(), p: rat(10, 1) },
        DichotomyCase {
            name: "sum of three squares at 2/7",
            system: sys("x1^2 + x2^2 + x3^2", 3)?,
            alpha: exact_alpha(&[(2, 7)]),
            theta: one.clone(),
            p: rat(20, 1),
        },
        DichotomyCase {
            name: "mixed ternary quadratic at 5/9",
            system: sys("x1^2 - 2*x2^2 + 3*x3^2 + x1*x2", 3)?,
            alpha: exact_alpha(&[(5, 9)]),
            theta: one.clone(),
            p: rat(20, 1),
        },
        DichotomyCase {
            name: "quaternary quadratic at -3/8",
            system: sys("x1^2 + x2^2 + x3^2 - x4^2", 4)?,
            alpha: exact_alpha(&[(-3, 8)]),
            theta: one.clone(),
            p: rat(16, 1),
        },
        DichotomyCase {
            name: "two quadratics at (1/2, 1/3)",
            system: sys("x1^2 + x2^2 - x3^2; x1*x2 + x3^2", 3)?,
            alpha: exact_alpha(&[(1, 2), (1, 3)]),
            theta: one.clone(),
            p: rat(12, 1),
        },
        DichotomyCase {
            name: "bilinear pair at (1/4, 3/5)",
            system: bilinear_family(2, 2)?,
            alpha: exact_alpha(&[(1, 4), (3, 5)]),
            theta: one.clone(),
            p: rat(8, 1),
        },
        DichotomyCase {
            name: "diagonal cubic at 1/5",
            system: sys("x1^3 + x2^3 + x3^3", 3)?,
            alpha: exact_alpha(&[(1, 5)]),
            theta: rat(1, 2),
            p: rat(16, 1),
        },
        DichotomyCase {
            name: "quaternary quadratic near sqrt(2)",
            system: sys("x1^2 + x2^2 + x3^2 - x4^2", 4)?,
            alpha: PhaseVector::parse("sqrt(2)", 128)?,
            theta: rat(1, 2),
            p: rat(20, 1),
        },
    ])
}

/// Runs every fixture. Arithmetic failures (e.g. precision) are returned as errors;
/// wrong answers are reported through [`FixtureResult::passed`].
pub fn run_corpus() -> Result<Vec<FixtureResult>> {
    let mut out = Vec::new();
    let count = |text: &str, n: usize, p: i64, region: BoxRegion| -> Result<BigInt> {
        Ok(count_solutions(&sys(text, n)?, &region, &rat(p, 1))?.count)
    };
    out.push(FixtureResult::new("count x1^2 + x2^2 at P = 10", 1, count("x1^2 + x2^2", 2, 10, BoxRegion::unit(2))?));
    out.push(FixtureResult::new("count x1^2 - x2^2 at P = 2", 9, count("x1^2 - x2^2", 2, 2, BoxRegion::unit(2))?));
    out.push(FixtureResult::new("count x1*x2 at P = 10 (nonnegative box)", 21, count("x1*x2", 2, 10, BoxRegion::nonnegative_unit(2))?));

    match major_arc_approximation(&sys("x1^2", 1)?, &exact_alpha(&[(1, 3)]), &rat(1, 1), &rat(10, 1), DEFAULT_COLUMN_CAP)? {
        DichotomyOutcome::MajorArc(m) => {
            out.push(FixtureResult::new("x1^2 at 1/3: q", 3, m.q));
            out.push(FixtureResult::new("x1^2 at 1/3: a", 1, &m.a[0]));
        }
        other => out.push(FixtureResult::new("x1^2 at 1/3: outcome", "MajorArc", other.kind())),
    }
    match major_arc_approximation(&sys("x1^2; 2*x1^2", 1)?, &exact_alpha(&[(1, 3), (1, 5)]), &rat(1, 1), &rat(10, 1), DEFAULT_COLUMN_CAP)? {
        DichotomyOutcome::RankDeficient(rd) => {
            out.push(FixtureResult::new("(f, 2f): certificate", "[2, -1]", format!("{:?}", rd.b)));
        }
        other => out.push(FixtureResult::new("(f, 2f): outcome", "RankDeficient", other.kind())),
    }

    let fp = FpConfig::default();
    let primes = [5, 7, 11];
    let diff = Form::parse("x1^2 - x2^2", 2)?;
    out.push(FixtureResult::new("x1^2 - x2^2: rank", 2, quadratic_rank(&diff)?));
    out.push(FixtureResult::new("x1^2 - x2^2: h bounds", "(1, 2)", format!("{:?}", h_invariant_bounds(&diff)?)));
    out.push(FixtureResult::new("x1^2 - x2^2: dim Sing", 0, singular_locus_dimension(&diff, &primes, &fp)?.dim_estimate));
    for (text, n, rank) in [("x1^2 + x2^2 + x3^2", 3, 3), ("x1^2 - 3*x2^2 + 5*x3^2 + x4^2", 4, 4), ("2*x1^2 + x2^2", 4, 2)] {
        let f = Form::parse(text, n)?;
        out.push(FixtureResult::new(format!("{text} in {n} vars: rank"), rank, quadratic_rank(&f)?));
        out.push(FixtureResult::new(format!("{text} in {n} vars: dim Sing"), n - rank, singular_locus_dimension(&f, &primes, &fp)?.dim_estimate));
    }

    let all_primes = [5, 7, 11, 101];
    let q12 = bilinear_family(1, 2)?;
    let cfg = InvariantConfig::default();
    out.push(FixtureResult::new("bilinear (r, k) = (1, 2): u", 0, u_invariant(&q12, &cfg)?.u));
    out.push(FixtureResult::new("bilinear (r, k) = (1, 2): dim V*", 0, v_star_dimension(&q12, &all_primes, &fp)?.dim_estimate));
    let q22 = bilinear_family(2, 2)?;
    let u22 = u_invariant(&q22, &cfg)?;
    out.push(FixtureResult::new("bilinear (r, k) = (2, 2): u", 2, u22.u));
    let v22 = v_star_dimension(&q22, &all_primes, &fp)?;
    out.push(FixtureResult::new("bilinear (r, k) = (2, 2): dim V*", 3, v22.dim_estimate));
    out.push(FixtureResult::new("bilinear (r, k) = (2, 2): primes agree", true, v22.consistent && u22.consistent));
    let big = InvariantConfig { fp: FpConfig { trials: 1 << 20, ..FpConfig::default() }, ..InvariantConfig::default() };
    let rep = check_hypotheses(&bilinear_family(2, 7)?, &big)?;
    out.push(FixtureResult::new("bilinear (r, k) = (2, 7): first hypothesis", Verdict::Pass, rep.singular_locus.verdict));
    out.push(FixtureResult::new("bilinear (r, k) = (2, 7): n - u", 14, rep.singular_locus.lhs));
    out.push(FixtureResult::new("bilinear (r, k) = (2, 7): margin", 2, rep.singular_locus.margin));

    for case in dichotomy_cases()? {
        if let DichotomyOutcome::MajorArc(m) = major_arc_approximation(&case.system, &case.alpha, &case.theta, &case.p, DEFAULT_COLUMN_CAP)? {
            let q_ok = m.log_p_q.is_none_or(|l| l <= m.q_exponent + 1.0);
            let e_ok = m.log_p_errors.iter().flatten().all(|&l| l <= m.error_exponent + 1.0);
            out.push(FixtureResult::new(format!("{}: exponents within slack 1", case.name), true, q_ok && e_ok));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cases_build() {
        let cases = dichotomy_cases().unwrap();
        assert!(cases.len() >= 8);
        assert!(cases.iter().all(|c| c.alpha.len() == c.system.r()));
    }
}
