//! Case analysis on `rank ψ`: a rational approximation of `α` built from the
//! adjugate of a full-rank minor, or an integer vector `b` with `bᵀψ = 0`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::arith::{ln_abs_big, ln_abs_rat, pow_f64, rat_int, rat_to_f64, round_half_away};
use crate::count::count_weyl_near_solutions;
use crate::error::{Error, Result};
use crate::form::{Form, FormSystem, PencilVector};
use crate::phase::PhaseVector;
use crate::region::BoxRegion;

use super::expsum::exponential_sum;
use super::linalg::{adjugate, det, exact_rank_with_certificate, mat_mul};
use super::psi::{psi_eta, scan_psi, ColumnLabel, DEFAULT_COLUMN_CAP};

#[derive(Clone, Debug, PartialEq)]
pub struct MajorArc {
    pub q: BigInt,
    pub a: Vec<BigInt>,
    /// `|qα_i - a_i|`; exact when `errors_exact`, upper bounds otherwise.
    pub errors: Vec<BigRational>,
    pub errors_exact: bool,
    /// Signed determinant of the minor before gcd reduction.
    pub det: BigInt,
    pub minor: Vec<Vec<BigInt>>,
    pub minor_labels: Vec<ColumnLabel>,
    /// `log_P q`; `None` when `P = 1`.
    pub log_p_q: Option<f64>,
    /// `log_P |qα_i - a_i|`; `None` for a zero error or `P = 1`.
    pub log_p_errors: Vec<Option<f64>>,
    /// `r(d-1)θ`.
    pub q_exponent: f64,
    /// `-d + r(d-1)θ`.
    pub error_exponent: f64,
    /// `q / P^{r(d-1)θ}`.
    pub q_constant: f64,
    /// `max_i |qα_i - a_i| / P^{-d+r(d-1)θ}`.
    pub error_constant: f64,
    pub columns_seen: u64,
    pub tuples_seen: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RankDeficient {
    pub b: Vec<BigInt>,
    pub witness_pencil: Form,
    pub rank: usize,
    pub columns_seen: u64,
    pub tuples_seen: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MinorArcEvidence {
    pub abs_s: f64,
    /// `n - 2^{1-d} g̃ θ`.
    pub exponent_bound: f64,
    pub g_tilde: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum DichotomyOutcome {
    MajorArc(MajorArc),
    RankDeficient(RankDeficient),
    MinorArcEvidence(MinorArcEvidence),
}

impl DichotomyOutcome {
    pub fn kind(&self) -> &'static str {
        match self {
            DichotomyOutcome::MajorArc(_) => "MajorArc",
            DichotomyOutcome::RankDeficient(_) => "RankDeficient",
            DichotomyOutcome::MinorArcEvidence(_) => "MinorArcEvidence",
        }
    }
}

fn log_p(x: f64, p: &BigRational) -> Option<f64> {
    let lp = ln_abs_rat(p);
    (lp > 0.0 && x.is_finite()).then(|| x / lp)
}

/// `round(Σ_i α_i m_il)`, refusing when the enclosure straddles a rounding
/// boundary.
fn rounded_combination(alpha: &PhaseVector, col: &[BigInt]) -> Result<BigInt> {
    let mut center = BigRational::zero();
    let mut radius = BigRational::zero();
    for (ph, m) in alpha.0.iter().zip(col) {
        let m = rat_int(m);
        center += ph.center() * &m;
        radius += ph.radius() * m.abs();
    }
    let lo = round_half_away(&(&center - &radius));
    let hi = round_half_away(&(&center + &radius));
    if lo != hi {
        return Err(Error::Precision(
            "nearest integer to a column combination is undecided at the working precision".into(),
        ));
    }
    Ok(lo)
}

/// Builds `(q, a)` from a nonsingular `r × r` minor.
pub(crate) fn approximation_from_minor(
    sys: &FormSystem,
    alpha: &PhaseVector,
    theta: &BigRational,
    p: &BigRational,
    minor: Vec<Vec<BigInt>>,
    minor_labels: Vec<ColumnLabel>,
) -> Result<MajorArc> {
    let r = sys.r();
    let d = det(&minor);
    if d.is_zero() {
        return Err(Error::Degenerate("selected minor is singular".into()));
    }
    let adj = adjugate(&minor);
    let check = mat_mul(&adj, &minor);
    for (i, row) in check.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let want = if i == j { d.clone() } else { BigInt::zero() };
            if *v != want {
                return Err(Error::Degenerate("adjugate identity failed".into()));
            }
        }
    }
    let a_tilde: Vec<BigInt> = (0..r)
        .map(|l| {
            let col: Vec<BigInt> = (0..r).map(|i| minor[i][l].clone()).collect();
            rounded_combination(alpha, &col)
        })
        .collect::<Result<_>>()?;
    // α ≈ (ψ̃ᵀ)^{-1} ã = adj(ψ̃)ᵀ ã / det
    let sign = d.signum();
    let mut q = d.abs();
    let mut a: Vec<BigInt> = (0..r).map(|i| (0..r).map(|l| &adj[l][i] * &a_tilde[l]).sum::<BigInt>() * &sign).collect();
    let g = a.iter().fold(q.clone(), |acc, x| acc.gcd(x));
    if !g.is_one() {
        q /= &g;
        a.iter_mut().for_each(|x| *x /= &g);
    }
    let qr = rat_int(&q);
    let errors_exact = alpha.is_exact();
    let errors: Vec<BigRational> = alpha
        .0
        .iter()
        .zip(&a)
        .map(|(ph, ai)| (&qr * ph.center() - rat_int(ai)).abs() + &qr * ph.radius())
        .collect();
    let dd = sys.degree() as f64;
    let th = rat_to_f64(theta);
    let q_exponent = r as f64 * (dd - 1.0) * th;
    let error_exponent = -dd + q_exponent;
    let max_err = errors.iter().map(rat_to_f64).fold(0.0, f64::max);
    Ok(MajorArc {
        log_p_q: log_p(ln_abs_big(&q), p),
        log_p_errors: errors.iter().map(|e| if e.is_zero() { None } else { log_p(ln_abs_rat(e), p) }).collect(),
        q_constant: rat_to_f64(&qr) / pow_f64(p, q_exponent),
        error_constant: max_err / pow_f64(p, error_exponent),
        q,
        a,
        errors,
        errors_exact,
        det: d,
        minor,
        minor_labels,
        q_exponent,
        error_exponent,
        columns_seen: 0,
        tuples_seen: 0,
    })
}

/// Runs the case analysis on `ψ` for `ξ = θ`, `η = d - (d-1)θ`.
pub fn major_arc_approximation(
    sys: &FormSystem,
    alpha: &PhaseVector,
    theta: &BigRational,
    p: &BigRational,
    column_cap: usize,
) -> Result<DichotomyOutcome> {
    let r = sys.r();
    let scan = scan_psi(sys, alpha, theta, p, column_cap)?;
    if scan.rank == r {
        let minor: Vec<Vec<BigInt>> = (0..r).map(|i| scan.pivots.iter().map(|(_, c)| c[i].clone()).collect()).collect();
        let labels = scan.pivots.iter().map(|(l, _)| l.clone()).collect();
        let mut m = approximation_from_minor(sys, alpha, theta, p, minor, labels)?;
        m.columns_seen = scan.columns_seen;
        m.tuples_seen = scan.tuples_seen;
        return Ok(DichotomyOutcome::MajorArc(m));
    }
    let piv: Vec<Vec<BigInt>> = (0..r).map(|i| scan.pivots.iter().map(|(_, c)| c[i].clone()).collect()).collect();
    let (rank, b) = exact_rank_with_certificate(&piv);
    let b = b.ok_or_else(|| Error::Degenerate("rank-deficient scan produced no certificate".into()))?;
    let witness_pencil = sys.pencil_form(&PencilVector(b.clone()))?;
    Ok(DichotomyOutcome::RankDeficient(RankDeficient {
        b,
        witness_pencil,
        rank,
        columns_seen: scan.columns_seen,
        tuples_seen: scan.tuples_seen,
    }))
}

#[derive(Clone, Debug)]
pub struct DichotomyConfig {
    pub column_cap: usize,
    /// Lower bound for `inf_b g(f_b)`; computed from pencil invariants when absent.
    pub g_tilde: Option<f64>,
}

impl Default for DichotomyConfig {
    fn default() -> Self {
        DichotomyConfig { column_cap: DEFAULT_COLUMN_CAP, g_tilde: None }
    }
}

#[derive(Clone, Debug)]
pub struct DichotomyReport {
    pub abs_s: f64,
    pub lattice_points: BigInt,
    /// `P^{n-k}`.
    pub s_bound: f64,
    pub alt_i: bool,
    pub near_count: BigInt,
    /// `P^{(d-1)nθ - 2^{d-1}k}`.
    pub near_bound: f64,
    pub alt_ii: bool,
    pub eta: BigRational,
    pub tuple_bound: BigInt,
    /// `None` when the column cap stopped the scan.
    pub outcome: Option<DichotomyOutcome>,
    pub column_cap_hit: bool,
    /// Neither alternative held at this `P`.
    pub neither: bool,
}

/// Measures both alternatives at this `P` and reports the resulting case.
pub fn run_dichotomy(
    sys: &FormSystem,
    alpha: &PhaseVector,
    theta: &BigRational,
    region: &BoxRegion,
    p: &BigRational,
    k: &BigRational,
    config: &DichotomyConfig,
) -> Result<DichotomyReport> {
    if !k.is_positive() {
        return Err(Error::InvalidArgument("k must be positive".into()));
    }
    if !theta.is_positive() || theta > &BigRational::one() {
        return Err(Error::InvalidArgument("θ must lie in (0, 1]".into()));
    }
    let n = sys.n_vars() as f64;
    let d = sys.degree();
    let kf = rat_to_f64(k);
    let th = rat_to_f64(theta);
    let s = exponential_sum(sys, alpha, region, p)?;
    let abs_s = s.value.norm();
    let s_bound = pow_f64(p, n - kf);
    let eta = psi_eta(d, theta);
    let near_count = count_weyl_near_solutions(sys, alpha, theta, &eta, p)?;
    let near_bound = pow_f64(p, (d as f64 - 1.0) * n * th - 2f64.powi(d as i32 - 1) * kf);
    let alt_i = abs_s < s_bound;
    let alt_ii = rat_to_f64(&rat_int(&near_count)) >= near_bound;
    let mut column_cap_hit = false;
    let outcome = if alt_ii || !alt_i {
        match major_arc_approximation(sys, alpha, theta, p, config.column_cap) {
            Ok(o) => Some(o),
            Err(Error::ColumnCap { .. }) => {
                column_cap_hit = true;
                None
            }
            Err(e) => return Err(e),
        }
    } else {
        let g_tilde = match config.g_tilde {
            Some(g) => g,
            None => crate::invariants::pencil_g_lower(sys, 3)?,
        };
        Some(DichotomyOutcome::MinorArcEvidence(MinorArcEvidence {
            abs_s,
            exponent_bound: n - 2f64.powi(1 - d as i32) * g_tilde * th,
            g_tilde,
        }))
    };
    Ok(DichotomyReport {
        abs_s,
        lattice_points: s.points,
        s_bound,
        alt_i,
        near_count,
        near_bound,
        alt_ii,
        tuple_bound: crate::arith::floor_pow(p, theta)?,
        eta,
        outcome,
        column_cap_hit,
        neither: !alt_i && !alt_ii,
    })
}
