//! Point counts over `𝔽_p` and the dimension heuristic `#V(𝔽_p) ≈ c·p^{dim V}`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::form::{Form, FormSystem};

/// Affine cones whose dimension can be estimated.
#[derive(Clone, Debug)]
pub enum Variety {
    /// Common zeros of the given forms.
    Zeros(Vec<Form>),
    /// `{x : ∇f(x) = 0}`.
    Singular(Form),
    /// `{x : rank (∂f_i/∂x_j)(x) < r}`.
    JacobianRankBelow(FormSystem),
}

#[derive(Clone, Debug)]
pub struct FpConfig {
    /// Full enumeration when `p^n` is at most this.
    pub exact_threshold: u64,
    /// Uniform samples otherwise.
    pub trials: u64,
    pub seed: u64,
}

impl Default for FpConfig {
    fn default() -> Self {
        FpConfig { exact_threshold: 10_000_000, trials: 20_000_000, seed: 0x5eed }
    }
}

/// Number of `𝔽_p` points, exact or extrapolated from samples.
#[derive(Clone, Debug, PartialEq)]
pub struct FpCount {
    pub p: u64,
    pub exact: bool,
    pub hits: u64,
    pub trials: u64,
    pub estimate: f64,
    /// 95% Wilson interval for the count (equal to `estimate` when exact).
    pub interval: (f64, f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct FpDimensionEstimate {
    pub primes: Vec<u64>,
    pub skipped_primes: Vec<u64>,
    pub counts: Vec<FpCount>,
    /// `log_p` of each count; `None` when sampling found no point.
    pub per_prime_slopes: Vec<Option<f64>>,
    /// Rounded slope, `None` when the interval straddles two integers.
    pub per_prime_dims: Vec<Option<i64>>,
    pub dim_estimate: i64,
    pub consistent: bool,
    /// `"exact-rank"` for the quadratic shortcut, `"fp-count"` otherwise.
    pub method: &'static str,
}

impl FpDimensionEstimate {
    pub(crate) fn from_rank(dim: i64) -> Self {
        FpDimensionEstimate {
            primes: Vec::new(),
            skipped_primes: Vec::new(),
            counts: Vec::new(),
            per_prime_slopes: Vec::new(),
            per_prime_dims: Vec::new(),
            dim_estimate: dim,
            consistent: true,
            method: "exact-rank",
        }
    }
}

/// A form reduced mod `p` as a list of `(coefficient, [(var, exp)])`.
#[derive(Clone, Debug)]
struct ModForm {
    terms: Vec<(u64, Vec<(usize, usize)>)>,
}

impl ModForm {
    fn new(f: &Form, p: u64) -> ModForm {
        let pb = BigInt::from(p);
        let terms = f
            .terms()
            .filter_map(|(m, c)| {
                let c = c.mod_floor(&pb).to_u64().unwrap();
                (c != 0).then(|| {
                    let vars =
                        m.exponents().iter().enumerate().filter(|(_, &e)| e > 0).map(|(j, &e)| (j, e as usize)).collect();
                    (c, vars)
                })
            })
            .collect();
        ModForm { terms }
    }

    fn eval(&self, pows: &[u64], stride: usize, p: u64) -> u64 {
        let mut s = 0u64;
        for (c, vars) in &self.terms {
            let mut t = *c;
            for &(j, e) in vars {
                t = t * pows[j * stride + e] % p;
            }
            s += t;
            if s >= p {
                s -= p;
            }
        }
        s
    }
}

enum Test {
    Zeros(Vec<ModForm>),
    Rank { r: usize, n: usize, entries: Vec<ModForm> },
}

impl Test {
    fn holds(&self, pows: &[u64], stride: usize, p: u64, scratch: &mut Vec<u64>) -> bool {
        match self {
            Test::Zeros(fs) => fs.iter().all(|f| f.eval(pows, stride, p) == 0),
            Test::Rank { r, n, entries } => {
                scratch.clear();
                scratch.extend(entries.iter().map(|f| f.eval(pows, stride, p)));
                rank_mod_p(scratch, *r, *n, p) < *r
            }
        }
    }
}

fn pow_mod(mut b: u64, mut e: u64, p: u64) -> u64 {
    let mut r = 1;
    b %= p;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % p;
        }
        b = b * b % p;
        e >>= 1;
    }
    r
}

/// Rank of a row-major `rows × cols` matrix over `𝔽_p` (destroys `a`).
pub(crate) fn rank_mod_p(a: &mut [u64], rows: usize, cols: usize, p: u64) -> usize {
    let mut rank = 0;
    for c in 0..cols {
        if rank == rows {
            break;
        }
        let Some(piv) = (rank..rows).find(|&i| a[i * cols + c] != 0) else {
            continue;
        };
        for k in 0..cols {
            a.swap(rank * cols + k, piv * cols + k);
        }
        let inv = pow_mod(a[rank * cols + c], p - 2, p);
        for i in rank + 1..rows {
            let f = a[i * cols + c] * inv % p;
            if f == 0 {
                continue;
            }
            for k in c..cols {
                let sub = f * a[rank * cols + k] % p;
                a[i * cols + k] = (a[i * cols + k] + p - sub) % p;
            }
        }
        rank += 1;
    }
    rank
}

fn content(f: &Form) -> BigInt {
    f.terms().fold(BigInt::zero(), |g, (_, c)| g.gcd(c))
}

impl Variety {
    fn n_vars(&self) -> usize {
        match self {
            Variety::Zeros(fs) => fs[0].n_vars(),
            Variety::Singular(f) => f.n_vars(),
            Variety::JacobianRankBelow(s) => s.n_vars(),
        }
    }

    fn degree(&self) -> u32 {
        match self {
            Variety::Zeros(fs) => fs.iter().map(Form::degree).max().unwrap_or(0),
            Variety::Singular(f) => f.degree(),
            Variety::JacobianRankBelow(s) => s.degree(),
        }
    }

    fn inputs(&self) -> Vec<&Form> {
        match self {
            Variety::Zeros(fs) => fs.iter().collect(),
            Variety::Singular(f) => vec![f],
            Variety::JacobianRankBelow(s) => s.forms().iter().collect(),
        }
    }

    /// Primes at which reduction is unreliable: `p <= d`, `p` divides the
    /// content of an input form, or (for quadratics) a Hessian loses rank mod `p`.
    fn is_bad_prime(&self, p: u64) -> bool {
        if p <= self.degree() as u64 {
            return true;
        }
        let pb = BigInt::from(p);
        self.inputs().into_iter().any(|f| {
            content(f).is_multiple_of(&pb)
                || (f.degree() == 2 && {
                    let h = super::hessian(f);
                    let n = h.len();
                    let mut flat: Vec<u64> = h.iter().flatten().map(|x| x.mod_floor(&pb).to_u64().unwrap()).collect();
                    rank_mod_p(&mut flat, n, n, p) != crate::weyl::linalg::rank(&h)
                })
        })
    }

    /// When the variety is cut out by linear forms, their coefficient rows.
    fn linear_equations(&self) -> Option<Vec<Form>> {
        let eqs = match self {
            Variety::Zeros(fs) if fs.iter().all(|f| f.degree() == 1) => fs.clone(),
            Variety::Singular(f) if f.degree() == 2 => {
                (0..f.n_vars()).map(|j| f.partial_derivative(j)).collect::<Result<Vec<_>>>().ok()?
            }
            _ => return None,
        };
        Some(eqs)
    }

    fn test(&self, p: u64) -> Result<Test> {
        Ok(match self {
            Variety::Zeros(fs) => Test::Zeros(fs.iter().map(|f| ModForm::new(f, p)).collect()),
            Variety::Singular(f) => Test::Zeros(
                (0..f.n_vars()).map(|j| Ok(ModForm::new(&f.partial_derivative(j)?, p))).collect::<Result<_>>()?,
            ),
            Variety::JacobianRankBelow(s) => {
                let mut entries = Vec::new();
                for f in s.forms() {
                    for j in 0..s.n_vars() {
                        entries.push(ModForm::new(&f.partial_derivative(j)?, p));
                    }
                }
                Test::Rank { r: s.r(), n: s.n_vars(), entries }
            }
        })
    }
}

fn fill_pows(x: &[u64], d: usize, p: u64, pows: &mut [u64]) {
    let stride = d + 1;
    for (j, &v) in x.iter().enumerate() {
        let mut acc = 1;
        for e in 0..=d {
            pows[j * stride + e] = acc;
            acc = acc * v % p;
        }
    }
}

fn wilson(hits: u64, trials: u64) -> (f64, f64) {
    let z = 1.959_963_984_540_054_f64;
    let n = trials as f64;
    let ph = hits as f64 / n;
    let denom = 1.0 + z * z / n;
    let center = (ph + z * z / (2.0 * n)) / denom;
    let half = z / denom * (ph * (1.0 - ph) / n + z * z / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

const CHUNK: u64 = 1 << 16;

/// Counts (or estimates) `#V(𝔽_p)`.
pub fn count_fp_points(variety: &Variety, p: u64, cfg: &FpConfig) -> Result<FpCount> {
    if p < 2 || p >= 1 << 31 || !num_integer::Integer::is_odd(&p) && p != 2 {
        return Err(Error::InvalidArgument(format!("unsupported prime {p}")));
    }
    let n = variety.n_vars();
    let d = variety.degree() as usize;
    let stride = d + 1;
    if let Some(eqs) = variety.linear_equations() {
        // p^{n - rank} points, exactly
        let pb = BigInt::from(p);
        let mut flat = Vec::with_capacity(eqs.len() * n);
        for f in &eqs {
            for j in 0..n {
                let mut e = vec![0u32; n];
                e[j] = 1;
                flat.push(f.coefficient(&e).mod_floor(&pb).to_u64().unwrap());
            }
        }
        let rank = rank_mod_p(&mut flat, eqs.len(), n, p);
        let c = (p as f64).powi((n - rank) as i32);
        let hits = p.checked_pow((n - rank) as u32).unwrap_or(u64::MAX);
        return Ok(FpCount { p, exact: true, hits, trials: 0, estimate: c, interval: (c, c) });
    }
    let test = variety.test(p)?;
    let space = (p as f64).powi(n as i32);
    if space <= cfg.exact_threshold as f64 {
        let total = p.pow(n as u32);
        let hits: u64 = (0..p)
            .into_par_iter()
            .map(|x0| {
                let mut x = vec![0u64; n];
                x[0] = x0;
                let mut pows = vec![0u64; n * stride];
                let mut scratch = Vec::new();
                let mut hits = 0u64;
                loop {
                    fill_pows(&x, d, p, &mut pows);
                    if test.holds(&pows, stride, p, &mut scratch) {
                        hits += 1;
                    }
                    let mut k = 1;
                    loop {
                        if k == n {
                            return hits;
                        }
                        x[k] += 1;
                        if x[k] < p {
                            break;
                        }
                        x[k] = 0;
                        k += 1;
                    }
                }
            })
            .sum();
        let c = hits as f64;
        return Ok(FpCount { p, exact: true, hits, trials: total, estimate: c, interval: (c, c) });
    }
    let trials = cfg.trials.max(1);
    let chunks = trials.div_ceil(CHUNK);
    let hits: u64 = (0..chunks)
        .into_par_iter()
        .map(|ci| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ p.rotate_left(32) ^ ci.wrapping_mul(0x9e37_79b9_7f4a_7c15));
            let len = CHUNK.min(trials - ci * CHUNK);
            let mut x = vec![0u64; n];
            let mut pows = vec![0u64; n * stride];
            let mut scratch = Vec::new();
            let mut hits = 0;
            for _ in 0..len {
                x.iter_mut().for_each(|v| *v = rng.gen_range(0..p));
                fill_pows(&x, d, p, &mut pows);
                if test.holds(&pows, stride, p, &mut scratch) {
                    hits += 1;
                }
            }
            hits
        })
        .sum();
    let (lo, hi) = wilson(hits, trials);
    Ok(FpCount {
        p,
        exact: false,
        hits,
        trials,
        estimate: hits as f64 / trials as f64 * space,
        interval: ((lo * space).max(1.0), (hi * space).max(1.0)),
    })
}

/// Dimension estimate from point counts over several primes.
pub fn variety_dimension_fp(variety: &Variety, primes: &[u64], cfg: &FpConfig) -> Result<FpDimensionEstimate> {
    let mut used = Vec::new();
    let mut skipped = Vec::new();
    for &p in primes {
        if variety.is_bad_prime(p) {
            skipped.push(p);
        } else {
            used.push(p);
        }
    }
    let mut counts = Vec::new();
    let mut slopes = Vec::new();
    let mut dims = Vec::new();
    for &p in &used {
        let c = count_fp_points(variety, p, cfg)?;
        let lp = (p as f64).ln();
        if c.hits == 0 {
            slopes.push(None);
            dims.push(None);
        } else {
            let s = c.estimate.ln() / lp;
            let (a, b) = ((c.interval.0.ln() / lp).round(), (c.interval.1.ln() / lp).round());
            slopes.push(Some(s));
            dims.push((a == b && a == s.round()).then_some(s.round() as i64));
        }
        counts.push(c);
    }
    let mut known: Vec<f64> = slopes.iter().flatten().copied().collect();
    known.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let dim_estimate = if known.is_empty() {
        -1
    } else {
        let k = known.len();
        let med = if k % 2 == 1 { known[k / 2] } else { (known[k / 2 - 1] + known[k / 2]) / 2.0 };
        med.round() as i64
    };
    let consistent = !dims.is_empty() && dims.iter().all(|d| *d == Some(dim_estimate));
    Ok(FpDimensionEstimate {
        primes: used,
        skipped_primes: skipped,
        counts,
        per_prime_slopes: slopes,
        per_prime_dims: dims,
        dim_estimate,
        consistent,
        method: "fp-count",
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::bilinear_family;

    fn exact(v: &Variety, p: u64) -> u64 {
        count_fp_points(v, p, &FpConfig::default()).unwrap().hits
    }

    #[test]
    fn simple_loci() {
        let f = Form::parse("x1^2 + x2^2 + x3^2", 3).unwrap();
        for p in [5, 7, 11] {
            assert_eq!(exact(&Variety::Singular(f.clone()), p), 1);
        }
        let g = Form::parse("x1^2", 3).unwrap();
        assert_eq!(exact(&Variety::Singular(g), 7), 49);
    }

    #[test]
    fn bilinear_v_star_counts() {
        // V* = {x = 0, det Y = 0} for r = k = 2: p^2·(p^2 - ... ) count p^3 + p^2 - p
        let sys = bilinear_family(2, 2).unwrap();
        let v = Variety::JacobianRankBelow(sys);
        for p in [5u64, 7, 11] {
            assert_eq!(exact(&v, p), p * p * p + p * p - p);
        }
        let est = variety_dimension_fp(&v, &[5, 7, 11], &FpConfig::default()).unwrap();
        assert_eq!(est.dim_estimate, 3);
        assert!(est.consistent);
    }

    #[test]
    fn sampling_is_seeded_and_reasonable() {
        let f = Form::parse("x1^2 - x2*x3", 4).unwrap();
        let cfg = FpConfig { exact_threshold: 100, trials: 200_000, seed: 7 };
        let v = Variety::Zeros(vec![f]);
        let a = count_fp_points(&v, 13, &cfg).unwrap();
        let b = count_fp_points(&v, 13, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(!a.exact);
        // true count is 13^3
        assert!(a.interval.0 < 2197.0 && 2197.0 < a.interval.1, "{a:?}");
    }

    #[test]
    fn bad_primes_are_skipped() {
        let f = Form::parse("3*x1^2 + 3*x2^2", 2).unwrap();
        let est = variety_dimension_fp(&Variety::Zeros(vec![f]), &[2, 3, 5, 7], &FpConfig::default()).unwrap();
        assert_eq!(est.skipped_primes, vec![2, 3]);
        assert_eq!(est.primes, vec![5, 7]);
    }

    #[test]
    fn linear_loci_are_counted_exactly() {
        let f = Form::parse("x1*x4 + x2*x5 + x3^2", 6).unwrap();
        let c = count_fp_points(&Variety::Singular(f), 101, &FpConfig::default()).unwrap();
        assert!(c.exact);
        assert_eq!(c.hits, 101);
    }

    #[test]
    fn modular_rank() {
        let mut a = vec![1, 2, 2, 4];
        assert_eq!(rank_mod_p(&mut a, 2, 2, 7), 1);
        let mut b = vec![1, 2, 3, 4];
        assert_eq!(rank_mod_p(&mut b, 2, 2, 7), 2);
        let mut c = vec![1, 2, 3, 6];
        assert_eq!(rank_mod_p(&mut c, 2, 2, 7), 1);
    }
}
