use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::form::FormSystem;
use crate::weyl::{e, Kahan};

/// Largest `q^n` (or `m^(n-1)` prefix count) a residue enumeration may visit.
pub const ENUMERATION_CAP: u128 = 1 << 33;

/// Largest coefficient table used by the single-form fast path.
const TABLE_CAP: u128 = 1 << 22;

/// How the `q`-terms of the singular series are evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SeriesMethod {
    /// Root counts `rho(p^k)` combined through CRT and Moebius inversion. Exact.
    Multiplicative,
    /// Complex exponential sums over every residue class mod `q`, with Ramanujan
    /// type sums over the reduced `a`. Floating point.
    Direct,
}

/// The singular series cut off at `q <= q_max`.
#[derive(Clone, Debug, PartialEq)]
pub struct SingularSeriesTruncation {
    pub q_max: u64,
    pub method: SeriesMethod,
    /// `(q, sum of the terms up to q)`.
    pub partial_sums: Vec<(u64, f64)>,
    /// The `q`-terms themselves. Exact rationals under [`SeriesMethod::Multiplicative`].
    pub terms: Vec<(u64, f64)>,
    pub exact_terms: Option<Vec<(u64, BigRational)>>,
    /// Largest imaginary part seen in a term (zero for the exact method).
    pub max_imaginary: f64,
    pub value: f64,
    /// Spread of the last ten partial sums.
    pub tail_estimate: f64,
}

/// The forms reduced mod `m`, split into the first `n-1` variables and the last one.
pub(crate) struct ModSplit {
    m: u64,
    n: usize,
    d: usize,
    r: usize,
    /// `(form, exponent of the last variable, coefficient mod m, exponents of the rest)`.
    terms: Vec<(usize, usize, u64, Vec<u32>)>,
}

impl ModSplit {
    pub(crate) fn new(sys: &FormSystem, weights: Option<&[BigInt]>, m: u64) -> ModSplit {
        let n = sys.n_vars();
        let d = sys.degree() as usize;
        let mb = BigInt::from(m);
        let mut acc: BTreeMap<(usize, Vec<u32>), BigInt> = BTreeMap::new();
        for (i, f) in sys.forms().iter().enumerate() {
            let (slot, w) = match weights {
                Some(a) => (0, a[i].clone()),
                None => (i, BigInt::one()),
            };
            for (mono, c) in f.terms() {
                *acc.entry((slot, mono.exponents().to_vec())).or_insert_with(BigInt::zero) += c * &w;
            }
        }
        let terms = acc
            .into_iter()
            .filter_map(|((i, exps), c)| {
                let c = c.mod_floor(&mb).to_u64().unwrap();
                (c != 0).then(|| (i, exps[n - 1] as usize, c, exps[..n - 1].to_vec()))
            })
            .collect();
        let r = if weights.is_some() { 1 } else { sys.r() };
        ModSplit { m, n, d, r, terms }
    }

    fn powers(&self) -> Vec<Vec<u64>> {
        (0..self.m)
            .map(|x| {
                let mut row = vec![1 % self.m; self.d + 1];
                for e in 1..=self.d {
                    row[e] = mulmod(row[e - 1], x, self.m);
                }
                row
            })
            .collect()
    }

    /// Coefficients of the univariate polynomials in the last variable, laid out as
    /// `out[i * (d + 1) + e]`.
    fn coefficients(&self, prefix: &[u64], pw: &[Vec<u64>], out: &mut [u64]) {
        out.iter_mut().for_each(|c| *c = 0);
        for (i, last, c, exps) in &self.terms {
            let mut v = *c;
            for (j, &ej) in exps.iter().enumerate() {
                if ej > 0 {
                    v = mulmod(v, pw[prefix[j] as usize][ej as usize], self.m);
                }
            }
            let slot = &mut out[i * (self.d + 1) + last];
            *slot = (*slot + v) % self.m;
        }
    }

    fn prefix_count(&self) -> u128 {
        (self.m as u128).pow(self.n as u32 - 1)
    }

    /// Folds `leaf` over every prefix in `(Z/m)^(n-1)`, in parallel over the first
    /// coordinate; partial results are combined in index order.
    fn fold<A, F>(&self, leaf: F, combine: fn(A, A) -> A, zero: A) -> A
    where
        A: Send + Sync + Clone,
        F: Fn(&[u64]) -> A + Sync,
    {
        let width = self.r * (self.d + 1);
        let pw = self.powers();
        if self.n == 1 {
            let mut c = vec![0u64; width];
            self.coefficients(&[], &pw, &mut c);
            return combine(zero, leaf(&c));
        }
        let parts: Vec<A> = (0..self.m)
            .into_par_iter()
            .map(|x0| {
                let mut acc = zero.clone();
                let mut prefix = vec![0u64; self.n - 1];
                prefix[0] = x0;
                let mut c = vec![0u64; width];
                loop {
                    self.coefficients(&prefix, &pw, &mut c);
                    acc = combine(acc, leaf(&c));
                    let mut j = self.n - 2;
                    loop {
                        if j == 0 {
                            return acc;
                        }
                        prefix[j] += 1;
                        if prefix[j] < self.m {
                            break;
                        }
                        prefix[j] = 0;
                        j -= 1;
                    }
                }
            })
            .collect();
        parts.into_iter().fold(zero, combine)
    }

    fn eval(&self, c: &[u64], t: u64) -> u64 {
        let mut v = 0;
        for &ce in c.iter().rev() {
            v = (mulmod(v, t, self.m) + ce) % self.m;
        }
        v
    }

    fn table_index(&self, c: &[u64]) -> usize {
        c.iter().rev().fold(0usize, |acc, &ce| acc * self.m as usize + ce as usize)
    }

    /// Whether a table over all single-form coefficient vectors pays off.
    fn use_table(&self) -> bool {
        let size = (self.m as u128).pow(self.d as u32 + 1);
        self.r == 1 && size <= TABLE_CAP && size <= self.prefix_count()
    }

    /// Builds `table[c] = Σ_t w(poly_c(t))` over every coefficient vector `c`.
    fn table<A, W>(&self, weight: W) -> Vec<A>
    where
        A: Send + Default + std::ops::AddAssign,
        W: Fn(u64) -> A + Sync,
    {
        let size = (self.m as usize).pow(self.d as u32 + 1);
        (0..size)
            .into_par_iter()
            .map(|mut idx| {
                let mut c = vec![0u64; self.d + 1];
                for ce in c.iter_mut() {
                    *ce = (idx % self.m as usize) as u64;
                    idx /= self.m as usize;
                }
                let mut acc = A::default();
                for t in 0..self.m {
                    acc += weight(self.eval(&c, t));
                }
                acc
            })
            .collect()
    }
}

fn mulmod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn check_cap(what: &str, base: u64, exp: usize) -> Result<()> {
    let needed = (base as u128).checked_pow(exp as u32);
    match needed {
        Some(v) if v <= ENUMERATION_CAP => Ok(()),
        _ => Err(Error::EnumerationCap {
            what: what.into(),
            needed: format!("{base}^{exp}"),
            cap: ENUMERATION_CAP.to_string(),
        }),
    }
}

/// `S_{a,q} = Σ_{x mod q} e(Σ a_i f_i(x) / q)`.
pub fn complete_exponential_sum_mod_q(sys: &FormSystem, a: &[BigInt], q: u64) -> Result<Complex64> {
    if a.len() != sys.r() {
        return Err(Error::DimensionMismatch { expected: sys.r(), found: a.len() });
    }
    if q == 0 {
        return Err(Error::InvalidArgument("q must be positive".into()));
    }
    let g = a.iter().fold(BigInt::from(q), |g, ai| g.gcd(ai));
    if !g.is_one() {
        return Err(Error::InvalidArgument(format!("gcd(q, a) = {g}, expected 1")));
    }
    check_cap("complete exponential sum", q, sys.n_vars())?;
    let split = ModSplit::new(sys, Some(a), q);
    let hist = residue_histogram(&split);
    let mut k = Kahan::default();
    for (v, &h) in hist.iter().enumerate() {
        if h > 0 {
            k.add(e(v as f64 / q as f64) * h as f64);
        }
    }
    Ok(k.value())
}

/// Number of `x mod m` with `g(x) ≡ v` for each residue `v`, for a single weighted form.
fn residue_histogram(split: &ModSplit) -> Vec<u64> {
    let m = split.m as usize;
    let add = |mut a: Vec<u64>, b: Vec<u64>| {
        a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        a
    };
    split.fold(
        |c| {
            let mut h = vec![0u64; m];
            for t in 0..split.m {
                h[split.eval(c, t) as usize] += 1;
            }
            h
        },
        add,
        vec![0u64; m],
    )
}

/// `rho(m) = #{x mod m : f_i(x) ≡ 0 for all i}` by enumeration.
pub fn common_root_count(sys: &FormSystem, m: u64) -> Result<u128> {
    if m == 0 {
        return Err(Error::InvalidArgument("modulus must be positive".into()));
    }
    if m == 1 {
        return Ok(1);
    }
    check_cap("root count", m, sys.n_vars().max(2) - 1)?;
    let split = ModSplit::new(sys, None, m);
    let width = split.d + 1;
    if split.use_table() {
        let table: Vec<u64> = split.table(|v| (v == 0) as u64);
        return Ok(split.fold(|c| table[split.table_index(c)] as u128, |a, b| a + b, 0u128));
    }
    check_cap("root count", m, sys.n_vars())?;
    Ok(split.fold(
        |c| {
            (0..split.m)
                .filter(|&t| (0..split.r).all(|i| split.eval(&c[i * width..(i + 1) * width], t) == 0))
                .count() as u128
        },
        |a, b| a + b,
        0u128,
    ))
}

fn factorize(mut q: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= q {
        if q % p == 0 {
            let mut k = 0;
            while q % p == 0 {
                q /= p;
                k += 1;
            }
            out.push((p, k));
        }
        p += 1;
    }
    if q > 1 {
        out.push((q, 1));
    }
    out
}

fn moebius(q: u64) -> i64 {
    let f = factorize(q);
    if f.iter().any(|&(_, k)| k > 1) {
        0
    } else if f.len() % 2 == 0 {
        1
    } else {
        -1
    }
}

fn divisors(q: u64) -> Vec<u64> {
    (1..=q).filter(|m| q % m == 0).collect()
}

/// The `q`-term `q^{-n} Σ_{a mod q, gcd(a,q)=1} S_{a,q}`, exactly, given `rho` on the
/// divisors of `q`:  `Σ_{m | q} mu(q/m) rho(m) m^{r-n}`.
fn term_from_rho(q: u64, n: usize, r: usize, rho: &dyn Fn(u64) -> u128) -> BigRational {
    let mut total = BigRational::zero();
    for m in divisors(q) {
        let mu = moebius(q / m);
        if mu == 0 {
            continue;
        }
        let mb = BigInt::from(m);
        let num = BigInt::from(rho(m)) * mb.pow(r as u32);
        let t = BigRational::new(num, mb.pow(n as u32));
        if mu > 0 {
            total += t;
        } else {
            total -= t;
        }
    }
    total
}

/// `rho` on every `m <= q_max`, via prime powers and CRT.
fn rho_table(sys: &FormSystem, q_max: u64) -> Result<Vec<u128>> {
    let mut prime_powers = BTreeMap::new();
    for m in 2..=q_max {
        let f = factorize(m);
        if f.len() == 1 {
            prime_powers.insert(m, 0u128);
        }
    }
    let keys: Vec<u64> = prime_powers.keys().copied().collect();
    for m in keys {
        prime_powers.insert(m, common_root_count(sys, m)?);
    }
    let mut rho = vec![0u128; q_max as usize + 1];
    for m in 1..=q_max {
        rho[m as usize] = factorize(m).iter().map(|&(p, k)| prime_powers[&p.pow(k)]).product();
    }
    Ok(rho)
}

/// One `q`-term evaluated through complex exponentials: the histogram of
/// `(f_1(x), .., f_r(x)) mod q` is paired with `C_q(v) = Σ_{a reduced} e(a·v/q)`.
pub fn series_term_direct(sys: &FormSystem, q: u64) -> Result<Complex64> {
    if q == 0 {
        return Err(Error::InvalidArgument("q must be positive".into()));
    }
    let n = sys.n_vars();
    let r = sys.r();
    check_cap("series term", q, 2 * r)?;
    let split = ModSplit::new(sys, None, q);
    let qs = q as usize;
    // C_q(v) for every residue vector v, indexed in base q with v_0 least significant.
    let size = qs.pow(r as u32);
    let digits = |mut idx: usize| {
        let mut v = vec![0u64; r];
        for x in v.iter_mut() {
            *x = (idx % qs) as u64;
            idx /= qs;
        }
        v
    };
    let reduced: Vec<Vec<u64>> = (0..size)
        .map(digits)
        .filter(|a| a.iter().fold(q, |g, &x| g.gcd(&x)) == 1)
        .collect();
    let ramanujan: Vec<Complex64> = (0..size)
        .into_par_iter()
        .map(|idx| {
            let v = digits(idx);
            let mut k = Kahan::default();
            for a in &reduced {
                let dot = a.iter().zip(&v).fold(0u64, |s, (&x, &y)| (s + mulmod(x, y, q)) % q);
                k.add(e(dot as f64 / q as f64));
            }
            k.value()
        })
        .collect();
    let width = split.d + 1;
    let kahan_add = |mut a: Kahan, b: Kahan| {
        a.add(b.value());
        a
    };
    let total = if split.use_table() {
        let table: Vec<KahanSum> = split.table(|v| KahanSum::from(ramanujan[v as usize]));
        split.fold(
            |c| {
                let mut k = Kahan::default();
                k.add(table[split.table_index(c)].0.value());
                k
            },
            kahan_add,
            Kahan::default(),
        )
    } else {
        check_cap("series term", q, n)?;
        split.fold(
            |c| {
                let mut k = Kahan::default();
                for t in 0..q {
                    let idx = (0..r).rev().fold(0usize, |acc, i| {
                        acc * qs + split.eval(&c[i * width..(i + 1) * width], t) as usize
                    });
                    k.add(ramanujan[idx]);
                }
                k
            },
            kahan_add,
            Kahan::default(),
        )
    };
    Ok(total.value() / (q as f64).powi(n as i32))
}

#[derive(Default)]
struct KahanSum(Kahan);

impl From<Complex64> for KahanSum {
    fn from(v: Complex64) -> Self {
        let mut k = Kahan::default();
        k.add(v);
        KahanSum(k)
    }
}

impl std::ops::AddAssign for KahanSum {
    fn add_assign(&mut self, rhs: Self) {
        self.0.add(rhs.0.value());
    }
}

/// Tolerance on the imaginary part of a `q`-term.
pub const REALNESS_TOLERANCE: f64 = 1e-9;

/// `Σ_{q <= q_max} q^{-n} Σ_{a mod q, gcd(q,a)=1} S_{a,q}`.
pub fn singular_series(sys: &FormSystem, q_max: u64) -> Result<SingularSeriesTruncation> {
    singular_series_with(sys, q_max, SeriesMethod::Multiplicative)
}

pub fn singular_series_with(sys: &FormSystem, q_max: u64, method: SeriesMethod) -> Result<SingularSeriesTruncation> {
    if q_max == 0 {
        return Err(Error::InvalidArgument("q_max must be at least 1".into()));
    }
    let n = sys.n_vars();
    let r = sys.r();
    let (terms, exact_terms, max_imaginary) = match method {
        SeriesMethod::Multiplicative => {
            let rho = rho_table(sys, q_max)?;
            let exact: Vec<(u64, BigRational)> =
                (1..=q_max).map(|q| (q, term_from_rho(q, n, r, &|m| rho[m as usize]))).collect();
            let terms = exact.iter().map(|(q, t)| (*q, rational_to_f64(t))).collect();
            (terms, Some(exact), 0.0)
        }
        SeriesMethod::Direct => {
            let mut terms = Vec::with_capacity(q_max as usize);
            let mut worst = 0.0f64;
            for q in 1..=q_max {
                let t = series_term_direct(sys, q)?;
                worst = worst.max(t.im.abs());
                if t.im.abs() > REALNESS_TOLERANCE {
                    return Err(Error::Precision(format!(
                        "q-term at q = {q} has imaginary part {:e}",
                        t.im
                    )));
                }
                terms.push((q, t.re));
            }
            (terms, None, worst)
        }
    };
    let partial_sums = partial_sums(&terms, exact_terms.as_deref());
    let value = partial_sums.last().unwrap().1;
    let tail = &partial_sums[partial_sums.len().saturating_sub(10)..];
    let hi = tail.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let lo = tail.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    Ok(SingularSeriesTruncation {
        q_max,
        method,
        partial_sums,
        terms,
        exact_terms,
        max_imaginary,
        value,
        tail_estimate: hi - lo,
    })
}

fn partial_sums(terms: &[(u64, f64)], exact: Option<&[(u64, BigRational)]>) -> Vec<(u64, f64)> {
    match exact {
        Some(ex) => {
            let mut acc = BigRational::zero();
            ex.iter()
                .map(|(q, t)| {
                    acc += t;
                    (*q, rational_to_f64(&acc))
                })
                .collect()
        }
        None => {
            let mut acc = 0.0;
            let mut comp = 0.0;
            terms
                .iter()
                .map(|(q, t)| {
                    let y = t - comp;
                    let s = acc + y;
                    comp = (s - acc) - y;
                    acc = s;
                    (*q, acc)
                })
                .collect()
        }
    }
}

pub(crate) fn rational_to_f64(x: &BigRational) -> f64 {
    if let Some(v) = x.to_f64() {
        if v.is_finite() {
            return v;
        }
    }
    // Scale huge numerators and denominators down together.
    let shift = x.numer().bits().max(x.denom().bits()).saturating_sub(1000) as usize;
    let n = (x.numer().abs() >> shift).to_f64().unwrap_or(f64::INFINITY);
    let d = (x.denom() >> shift).to_f64().unwrap_or(f64::INFINITY);
    let v = n / d;
    if x.is_negative() { -v } else { v }
}
