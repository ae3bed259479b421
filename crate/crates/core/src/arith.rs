//! Integer and rational helpers shared by the enumeration engines.

use std::fmt::Debug;

use num_bigint::{BigInt, Sign};
use num_integer::{Integer, Roots};
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Integer type an enumeration engine can run on: `i128` for the fast path,
/// `BigInt` when the magnitude bound does not fit.
pub(crate) trait EngineInt:
    Clone + Integer + Signed + Roots + FromPrimitive + ToPrimitive + Send + Sync + Debug + 'static
{
    fn from_big(b: &BigInt) -> Self;
    fn to_big(&self) -> BigInt;
}

impl EngineInt for i64 {
    fn from_big(b: &BigInt) -> Self {
        b.to_i64().expect("engine bound check admitted a value outside i64")
    }
    fn to_big(&self) -> BigInt {
        BigInt::from(*self)
    }
}

impl EngineInt for i128 {
    fn from_big(b: &BigInt) -> Self {
        b.to_i128().expect("engine bound check admitted a value outside i128")
    }
    fn to_big(&self) -> BigInt {
        BigInt::from(*self)
    }
}

impl EngineInt for BigInt {
    fn from_big(b: &BigInt) -> Self {
        b.clone()
    }
    fn to_big(&self) -> BigInt {
        self.clone()
    }
}

/// Magnitudes below this bound are handled on the `i128` path.
pub(crate) fn fits_fast(bound: &BigInt) -> bool {
    bound.bits() <= 110
}

/// Magnitudes below this bound are handled on the `i64` path.
pub(crate) fn fits_small(bound: &BigInt) -> bool {
    bound.bits() <= 56
}

pub fn int(v: i64) -> BigInt {
    BigInt::from(v)
}

/// Converts a slice of machine integers into exact integers.
pub fn ivec(v: &[i64]) -> Vec<BigInt> {
    v.iter().map(|&x| BigInt::from(x)).collect()
}

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_int(n: &BigInt) -> BigRational {
    BigRational::from_integer(n.clone())
}

/// Parses `p/q` or `p` exactly. Decimal notation is rejected so that no value
/// is ever rounded silently.
pub fn parse_rational(text: &str) -> Result<BigRational> {
    let s = text.trim();
    let bad = || Error::InvalidArgument(format!("expected an exact rational `p/q`, got `{text}`"));
    if s.contains(['.', 'e', 'E']) {
        return Err(Error::InvalidArgument(format!(
            "decimal input `{text}` is rejected; write it as an exact fraction p/q"
        )));
    }
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let n: BigInt = num.parse().map_err(|_| bad())?;
    let d: BigInt = den.parse().map_err(|_| bad())?;
    if d.is_zero() {
        return Err(Error::InvalidArgument(format!("zero denominator in `{text}`")));
    }
    Ok(BigRational::new(n, d))
}

/// Parses an exponent-like parameter. Accepts `p/q`, integers and terminating
/// decimals, all converted exactly.
pub fn parse_exact_decimal(text: &str) -> Result<BigRational> {
    let s = text.trim();
    if s.contains('/') || !s.contains('.') {
        return parse_rational(s);
    }
    let bad = || Error::InvalidArgument(format!("cannot parse `{text}` as an exact number"));
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (ip, fp) = body.split_once('.').ok_or_else(bad)?;
    if !ip.chars().chain(fp.chars()).all(|c| c.is_ascii_digit()) || (ip.is_empty() && fp.is_empty()) {
        return Err(bad());
    }
    let digits: BigInt = format!("{ip}{fp}").parse().map_err(|_| bad())?;
    let den = num_traits::pow(BigInt::from(10), fp.len());
    let v = BigRational::new(digits, den);
    Ok(if neg { -v } else { v })
}

/// Canonical text of a rational: `p` or `p/q`.
pub fn fmt_rational(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn rat_to_f64(r: &BigRational) -> f64 {
    match (r.numer().to_f64(), r.denom().to_f64()) {
        (Some(n), Some(d)) if n.is_finite() && d.is_finite() && d != 0.0 => n / d,
        _ => (ln_abs_big(r.numer()) - ln_abs_big(r.denom())).exp() * sign_f64(r.numer()),
    }
}

fn sign_f64(b: &BigInt) -> f64 {
    match b.sign() {
        Sign::Minus => -1.0,
        Sign::NoSign => 0.0,
        Sign::Plus => 1.0,
    }
}

/// Natural log of |b|, valid for arbitrarily large integers. Returns -inf at 0.
pub fn ln_abs_big(b: &BigInt) -> f64 {
    if b.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = b.bits();
    if bits < 1000 {
        return b.abs().to_f64().unwrap().ln();
    }
    let shift = bits - 64;
    let top = (b.abs() >> shift).to_f64().unwrap();
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

pub fn ln_abs_rat(r: &BigRational) -> f64 {
    ln_abs_big(r.numer()) - ln_abs_big(r.denom())
}

/// Integer power of a rational (negative exponents allowed for nonzero bases).
pub fn rat_pow(r: &BigRational, e: i64) -> BigRational {
    let k = e.unsigned_abs() as usize;
    let v = BigRational::new(num_traits::pow(r.numer().clone(), k), num_traits::pow(r.denom().clone(), k));
    if e < 0 {
        v.recip()
    } else {
        v
    }
}

fn exponent_parts(e: &BigRational) -> Result<(i64, u32)> {
    let a = e.numer().to_i64();
    let b = e.denom().to_u32();
    match (a, b) {
        (Some(a), Some(b)) if a.unsigned_abs() <= 1 << 20 && b <= 1 << 20 => Ok((a, b)),
        _ => Err(Error::InvalidArgument(format!("exponent {} is too unwieldy", fmt_rational(e)))),
    }
}

/// `floor(P^e)` computed exactly for `P >= 1`, `e >= 0`.
pub fn floor_pow(p: &BigRational, e: &BigRational) -> Result<BigInt> {
    if p < &BigRational::one() || e.is_negative() {
        return Err(Error::InvalidArgument("floor_pow needs P >= 1 and e >= 0".into()));
    }
    let (a, b) = exponent_parts(e)?;
    // B^b <= P^a  <=>  B^b <= floor(P^a)
    Ok(rat_pow(p, a).floor().to_integer().nth_root(b))
}

/// Largest integer `D >= 0` with `D < scale * P^{-eta}`, capped at `scale`.
pub fn max_int_below_scaled_pow(scale: &BigInt, p: &BigRational, eta: &BigRational) -> Result<BigInt> {
    let (a, b) = exponent_parts(eta)?;
    // D^b < scale^b * P^{-a}  <=>  D^b <= ceil(rhs) - 1
    let rhs = rat_pow(&rat_int(scale), b as i64) * rat_pow(p, -a);
    let top: BigInt = rhs.ceil().to_integer() - 1;
    if top.is_negative() {
        return Ok(BigInt::zero());
    }
    Ok(top.nth_root(b).min(scale.clone()))
}

/// `P^e` as a float, for reporting bounds.
pub fn pow_f64(p: &BigRational, e: f64) -> f64 {
    (ln_abs_rat(p) * e).exp()
}

/// Least common multiple of the denominators of `values`.
pub fn common_denominator<'a>(values: impl IntoIterator<Item = &'a BigRational>) -> BigInt {
    values.into_iter().fold(BigInt::one(), |acc, v| acc.lcm(v.denom()))
}

/// Round half away from zero.
pub fn round_half_away(r: &BigRational) -> BigInt {
    let two = BigInt::from(2);
    let n = r.numer() * &two + if r.is_negative() { -r.denom() } else { r.denom().clone() };
    let d = r.denom() * two;
    // truncation toward zero of (2n ± d) / 2d
    let (q, _) = n.div_rem(&d);
    q
}

/// Content-free copy of an integer vector, first nonzero entry positive.
pub fn primitive(v: &[BigInt]) -> Vec<BigInt> {
    let g = v.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    if g.is_zero() {
        return v.to_vec();
    }
    let sign = v.iter().find(|x| !x.is_zero()).map(|x| x.signum()).unwrap_or_else(BigInt::one);
    v.iter().map(|x| x / &g * &sign).collect()
}

/// Exact square root of a nonnegative integer if it is a perfect square.
pub(crate) fn exact_sqrt<T: EngineInt>(v: &T) -> Option<T> {
    if v.is_negative() {
        return None;
    }
    let s = v.sqrt();
    if s.clone() * s.clone() == *v {
        Some(s)
    } else {
        None
    }
}
