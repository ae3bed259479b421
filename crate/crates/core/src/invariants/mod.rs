//! Pencil invariants: singular loci, `V*`, `u`, quadratic ranks, bounds for
//! `h`, and the hypothesis checks built on them.

mod fp;

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::arith::primitive;
use crate::error::{Error, Result};
use crate::form::{Form, FormSystem, PencilVector};
use crate::weyl::linalg::rank;

pub use fp::{count_fp_points, variety_dimension_fp, FpConfig, FpCount, FpDimensionEstimate, Variety};

/// `∂²f/∂x_j∂x_k` for a quadratic form, i.e. twice its Gram matrix.
pub fn hessian(f: &Form) -> Vec<Vec<BigInt>> {
    let n = f.n_vars();
    let mut h = vec![vec![BigInt::zero(); n]; n];
    for (m, c) in f.terms() {
        let idx: Vec<usize> = m.exponents().iter().enumerate().flat_map(|(j, &e)| std::iter::repeat_n(j, e as usize)).collect();
        if let [a, b] = idx[..] {
            if a == b {
                h[a][a] += c * 2;
            } else {
                h[a][b] += c;
                h[b][a] += c;
            }
        }
    }
    h
}

/// Rank of the Gram matrix of a quadratic form.
pub fn quadratic_rank(f: &Form) -> Result<usize> {
    if f.degree() != 2 {
        return Err(Error::InvalidArgument(format!("quadratic rank needs degree 2, got {}", f.degree())));
    }
    Ok(rank(&hessian(f)))
}

/// `dim Sing(f)`: exact `n - rank` for quadratics, point counts otherwise.
pub fn singular_locus_dimension(f: &Form, primes: &[u64], cfg: &FpConfig) -> Result<FpDimensionEstimate> {
    if f.is_zero() {
        return Err(Error::ZeroForm);
    }
    if f.degree() == 2 {
        return Ok(FpDimensionEstimate::from_rank((f.n_vars() - quadratic_rank(f)?) as i64));
    }
    if f.degree() == 1 {
        return Ok(FpDimensionEstimate::from_rank(0));
    }
    variety_dimension_fp(&Variety::Singular(f.clone()), primes, cfg)
}

/// `dim V*` for the system.
pub fn v_star_dimension(sys: &FormSystem, primes: &[u64], cfg: &FpConfig) -> Result<FpDimensionEstimate> {
    variety_dimension_fp(&Variety::JacobianRankBelow(sys.clone()), primes, cfg)
}

/// Primitive `b` with `|b|_∞ <= bound`, first nonzero entry positive.
pub fn primitive_pencils(r: usize, bound: i64) -> Vec<Vec<BigInt>> {
    let mut out = Vec::new();
    let mut v = vec![-bound; r];
    loop {
        let first = v.iter().find(|&&x| x != 0);
        if first.is_some_and(|&x| x > 0) && v.iter().fold(0i64, |g, &x| g.gcd(&x)) == 1 {
            out.push(v.iter().map(|&x| BigInt::from(x)).collect());
        }
        let mut k = r;
        loop {
            if k == 0 {
                out.sort_by_key(|b: &Vec<BigInt>| b.iter().map(|x| x.abs()).max());
                return out;
            }
            k -= 1;
            v[k] += 1;
            if v[k] <= bound {
                break;
            }
            v[k] = -bound;
        }
    }
}

fn random_pencils(r: usize, count: usize, seed: u64) -> Vec<Vec<BigInt>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xb0b0);
    (0..count)
        .filter_map(|_| {
            let v: Vec<BigInt> = (0..r).map(|_| BigInt::from(rng.gen_range(-1000i64..=1000))).collect();
            (!v.iter().all(Zero::is_zero)).then(|| primitive(&v))
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct InvariantConfig {
    pub b_bound: i64,
    pub random_pencils: usize,
    pub primes: Vec<u64>,
    pub fp: FpConfig,
}

impl Default for InvariantConfig {
    fn default() -> Self {
        InvariantConfig { b_bound: 5, random_pencils: 4, primes: vec![5, 7, 11, 101], fp: FpConfig::default() }
    }
}

impl InvariantConfig {
    fn pencils(&self, r: usize) -> Vec<Vec<BigInt>> {
        let mut v = primitive_pencils(r, self.b_bound);
        if r > 1 {
            v.extend(random_pencils(r, self.random_pencils, self.fp.seed));
        }
        v
    }
}

/// `dim Sing(f_b)` for one pencil direction.
#[derive(Clone, Debug)]
pub struct PencilDimension {
    pub b: Vec<BigInt>,
    pub dim: i64,
    pub consistent: bool,
}

/// Finite-search estimate of `u = max_b dim Sing(f_b)`.
#[derive(Clone, Debug)]
pub struct UEstimate {
    pub u: i64,
    pub attained_by: Vec<BigInt>,
    pub b_bound: i64,
    pub per_b: Vec<PencilDimension>,
    pub consistent: bool,
}

/// Maximum of `dim Sing(f_b)` over the configured pencil search. A zero
/// pencil member is singular everywhere and contributes `n`.
pub fn u_invariant(sys: &FormSystem, cfg: &InvariantConfig) -> Result<UEstimate> {
    if cfg.b_bound < 1 {
        return Err(Error::InvalidArgument("b bound must be at least 1".into()));
    }
    let n = sys.n_vars() as i64;
    let mut per_b = Vec::new();
    for b in cfg.pencils(sys.r()) {
        let f = sys.pencil_form(&PencilVector(b.clone()))?;
        let (dim, consistent) = if f.is_zero() {
            (n, true)
        } else {
            let e = singular_locus_dimension(&f, &cfg.primes, &cfg.fp)?;
            (e.dim_estimate, e.consistent)
        };
        per_b.push(PencilDimension { b, dim, consistent });
    }
    let best = per_b.iter().max_by_key(|p| p.dim).unwrap();
    Ok(UEstimate {
        u: best.dim,
        attained_by: best.b.clone(),
        b_bound: cfg.b_bound,
        consistent: per_b.iter().all(|p| p.consistent),
        per_b,
    })
}

/// `(lower, upper)` bounds for the `h`-invariant of one form.
pub fn h_invariant_bounds(f: &Form) -> Result<(u64, u64)> {
    if f.is_zero() {
        return Err(Error::ZeroForm);
    }
    if f.degree() == 2 {
        let r = quadratic_rank(f)? as u64;
        return Ok((r.div_ceil(2), r));
    }
    Ok((1, f.num_terms() as u64))
}

/// `φ(d)`, and whether the value is only an upper bound.
pub fn phi(d: u32) -> (u64, bool) {
    match d {
        0..=3 => (1, false),
        4 => (3, false),
        5 => (13, false),
        _ => {
            let fact: f64 = (1..=d).map(f64::from).product();
            ((fact / std::f64::consts::LN_2.powi(d as i32)).ceil() as u64, true)
        }
    }
}

/// `r(r+1)(d-1)2^{d-1}`.
pub fn birch_threshold(r: usize, d: u32) -> u64 {
    let r = r as u64;
    r * (r + 1) * (d as u64 - 1) << (d - 1)
}

/// Lower bound for `inf_b g(f_b)`: the least pencil rank for quadratics
/// (`g(f) >= rank`), `n - u` otherwise (`g(f_b) >= n - dim Sing(f_b)`).
pub fn pencil_g_lower(sys: &FormSystem, b_bound: i64) -> Result<f64> {
    if sys.degree() == 2 {
        return Ok(min_pencil_rank(sys, b_bound)?.1 as f64);
    }
    let cfg = InvariantConfig { b_bound, ..InvariantConfig::default() };
    Ok((sys.n_vars() as i64 - u_invariant(sys, &cfg)?.u) as f64)
}

/// Least rank of `f_b` over primitive `|b| <= bound` (quadratic systems).
pub fn min_pencil_rank(sys: &FormSystem, bound: i64) -> Result<(Vec<BigInt>, usize)> {
    let mut best: Option<(Vec<BigInt>, usize)> = None;
    for b in primitive_pencils(sys.r(), bound) {
        let f = sys.pencil_form(&PencilVector(b.clone()))?;
        let rk = if f.is_zero() { 0 } else { quadratic_rank(&f)? };
        if best.as_ref().is_none_or(|(_, r)| rk < *r) {
            best = Some((b, rk));
        }
    }
    Ok(best.unwrap())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

/// `lhs > threshold`, with `margin = lhs - threshold`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Check {
    pub verdict: Verdict,
    pub lhs: i64,
    pub threshold: i64,
    pub margin: i64,
}

impl Check {
    pub(crate) fn strict(lhs: i64, threshold: i64, reliable: bool) -> Check {
        let verdict = match (reliable, lhs > threshold) {
            (false, _) => Verdict::Inconclusive,
            (true, true) => Verdict::Pass,
            (true, false) => Verdict::Fail,
        };
        Check { verdict, lhs, threshold, margin: lhs - threshold }
    }

    /// `x > threshold` for some `x ∈ [lo, hi]` of unknown position.
    fn bracketed(lo: i64, hi: i64, threshold: i64) -> Check {
        let verdict = if lo > threshold {
            Verdict::Pass
        } else if hi <= threshold {
            Verdict::Fail
        } else {
            Verdict::Inconclusive
        };
        Check { verdict, lhs: lo, threshold, margin: lo - threshold }
    }
}

#[derive(Clone, Debug)]
pub struct InvariantReport {
    pub n: usize,
    pub r: usize,
    pub d: u32,
    pub u: UEstimate,
    pub dim_v_star: FpDimensionEstimate,
    pub h_lower: u64,
    pub h_upper: u64,
    /// Rank of each `f_i`, for quadratic systems.
    pub quadratic_ranks: Option<Vec<usize>>,
    pub min_pencil_rank: Option<(Vec<BigInt>, usize)>,
    pub g_lower: i64,
    pub phi: u64,
    pub phi_is_bound: bool,
    pub threshold: u64,
    pub singular_locus: Check,
    pub birch: Check,
    pub h_invariant: Check,
    pub h_invariant_alt: Check,
    pub pencil_rank: Option<Check>,
    pub g_invariant: Check,
    /// `u <= dim V*`, when both estimates are reliable.
    pub u_within_v_star: Option<bool>,
}

/// Evaluates every hypothesis inequality with the estimated invariants.
pub fn check_hypotheses(sys: &FormSystem, cfg: &InvariantConfig) -> Result<InvariantReport> {
    let (n, r, d) = (sys.n_vars(), sys.r(), sys.degree());
    if d < 2 {
        return Err(Error::InvalidArgument("hypothesis checks need degree >= 2".into()));
    }
    let u = u_invariant(sys, cfg)?;
    let dim_v_star = v_star_dimension(sys, &cfg.primes, &cfg.fp)?;
    let mut h_lower = u64::MAX;
    let mut h_upper = u64::MAX;
    for b in cfg.pencils(r) {
        let f = sys.pencil_form(&PencilVector(b))?;
        let (lo, hi) = if f.is_zero() { (0, 0) } else { h_invariant_bounds(&f)? };
        h_lower = h_lower.min(lo);
        h_upper = h_upper.min(hi);
    }
    let (quadratic_ranks, min_rank) = if d == 2 {
        let ranks = sys.forms().iter().map(quadratic_rank).collect::<Result<Vec<_>>>()?;
        (Some(ranks), Some(min_pencil_rank(sys, cfg.b_bound)?))
    } else {
        (None, None)
    };
    let (phi_d, phi_bound) = phi(d);
    let t1 = birch_threshold(r, d);
    let t2 = phi_d * t1;
    let t2a = phi_d * (t1 + (d as u64 - 1) * (r as u64) * (r as u64 - 1));
    let n_i = n as i64;
    let g_lower = match &min_rank {
        Some((_, rk)) => *rk as i64,
        None => n_i - u.u,
    };
    let singular_locus = Check::strict(n_i - u.u, t1 as i64, u.consistent);
    let birch = Check::strict(n_i - dim_v_star.dim_estimate, t1 as i64, dim_v_star.consistent);
    let h_invariant = Check::bracketed(h_lower as i64, h_upper as i64, t2 as i64);
    let h_invariant_alt = Check::bracketed(h_lower as i64, h_upper as i64, t2a as i64);
    let pencil_rank = min_rank.as_ref().map(|(_, rk)| Check::strict(*rk as i64, 2 * (r * (r + 1)) as i64, true));
    let g_invariant = Check::strict(g_lower, t1 as i64, min_rank.is_some() || u.consistent);
    let u_within_v_star = (u.consistent && dim_v_star.consistent).then_some(u.u <= dim_v_star.dim_estimate);
    Ok(InvariantReport {
        n,
        r,
        d,
        u,
        dim_v_star,
        h_lower,
        h_upper,
        quadratic_ranks,
        min_pencil_rank: min_rank,
        g_lower,
        phi: phi_d,
        phi_is_bound: phi_bound,
        threshold: t1,
        singular_locus,
        birch,
        h_invariant,
        h_invariant_alt,
        pencil_rank,
        g_invariant,
        u_within_v_star,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::bilinear_family;

    fn form(s: &str, n: usize) -> Form {
        Form::parse(s, n).unwrap()
    }

    #[test]
    fn ranks_and_h_bounds() {
        assert_eq!(quadratic_rank(&form("x1^2 - x2^2", 2)).unwrap(), 2);
        assert_eq!(quadratic_rank(&form("x1*x2", 2)).unwrap(), 2);
        assert_eq!(quadratic_rank(&form("x1^2", 5)).unwrap(), 1);
        assert!(quadratic_rank(&form("x1^3", 1)).is_err());
        assert_eq!(h_invariant_bounds(&form("x1^2 - x2^2", 2)).unwrap(), (1, 2));
        assert_eq!(h_invariant_bounds(&form("x1^2 + x2^2 + x3^2", 3)).unwrap(), (2, 3));
        assert_eq!(h_invariant_bounds(&form("x1^3 + x2^3", 2)).unwrap(), (1, 2));
    }

    #[test]
    fn singular_dimensions() {
        let cfg = FpConfig::default();
        let p = [5, 7, 11];
        assert_eq!(singular_locus_dimension(&form("x1^2 - x2^2", 2), &p, &cfg).unwrap().dim_estimate, 0);
        assert_eq!(singular_locus_dimension(&form("x1^2", 2), &p, &cfg).unwrap().dim_estimate, 1);
        let cubic = singular_locus_dimension(&form("x1^3 + x2^3 + x3^3", 3), &p, &cfg).unwrap();
        assert_eq!(cubic.dim_estimate, 0);
        let sq = singular_locus_dimension(&form("x1^2*x2", 3), &p, &cfg).unwrap();
        // ∇ = (2x1x2, x1^2, 0): x1 = 0, x2, x3 free
        assert_eq!(sq.dim_estimate, 2);
        assert!(sq.consistent);
        let sys = bilinear_family(2, 2).unwrap();
        let qb = sys.pencil_form(&PencilVector::from_i64(&[3, 2])).unwrap();
        assert_eq!(singular_locus_dimension(&qb, &p, &cfg).unwrap().dim_estimate, 2);
    }

    #[test]
    fn u_examples() {
        let cfg = InvariantConfig { b_bound: 2, ..InvariantConfig::default() };
        let sys = FormSystem::parse("x1^2; x2^2", 2).unwrap();
        let u = u_invariant(&sys, &cfg).unwrap();
        assert_eq!(u.u, 1);
        assert_eq!(primitive_pencils(2, 2).len(), 8);
        let q = bilinear_family(2, 2).unwrap();
        assert_eq!(u_invariant(&q, &InvariantConfig::default()).unwrap().u, 2);
        let single = FormSystem::parse("x1^2 + x2^2 - x3*x4", 5).unwrap();
        assert_eq!(u_invariant(&single, &cfg).unwrap().u, 1);
    }

    #[test]
    fn thresholds() {
        assert_eq!(birch_threshold(2, 2), 12);
        assert_eq!(birch_threshold(1, 4), 48);
        assert_eq!(phi(4), (3, false));
        assert_eq!(phi(5), (13, false));
        let (p6, bound) = phi(6);
        assert!(bound && p6 >= 800);
    }

    #[test]
    fn bilinear_family_verdicts() {
        let cfg = InvariantConfig { fp: FpConfig { trials: 100_000, ..FpConfig::default() }, ..InvariantConfig::default() };
        let pass = check_hypotheses(&bilinear_family(2, 7).unwrap(), &cfg).unwrap();
        assert_eq!(pass.u.u, 7);
        assert_eq!(pass.singular_locus, Check { verdict: Verdict::Pass, lhs: 14, threshold: 12, margin: 2 });
        let fail = check_hypotheses(&bilinear_family(2, 5).unwrap(), &cfg).unwrap();
        assert_eq!(fail.singular_locus.verdict, Verdict::Fail);
        assert_eq!(fail.singular_locus.lhs, 10);
    }

    #[test]
    fn quartic_thresholds_side_by_side() {
        let sys = FormSystem::parse("x1^4 + x2^4 + x3^4 - x4^4 - x5^4", 5).unwrap();
        let cfg = InvariantConfig { primes: vec![7, 11], ..InvariantConfig::default() };
        let rep = check_hypotheses(&sys, &cfg).unwrap();
        assert_eq!(rep.h_invariant.threshold, 144);
        assert_eq!(rep.h_invariant_alt.threshold, 144);
        assert_eq!(rep.h_invariant.verdict, Verdict::Fail);
    }
}
