//! Real phase vectors `α`, either exact rationals or dyadic enclosures of
//! irrational values.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::arith::{common_denominator, fmt_rational, parse_rational, rat_to_f64};
use crate::error::{Error, Result};

/// One coordinate of `α`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Phase {
    Exact(BigRational),
    /// The true value lies in `[center - radius, center + radius]`.
    Approx { center: BigRational, radius: BigRational, label: String },
}

impl Phase {
    pub fn exact(r: BigRational) -> Phase {
        Phase::Exact(r)
    }

    /// Enclosure of `sign·sqrt(value)` of width `2^-bits`; exact when the
    /// square root is rational.
    pub fn sqrt(value: &BigRational, negative: bool, bits: u32) -> Result<Phase> {
        if value.is_negative() {
            return Err(Error::InvalidArgument("square root of a negative number".into()));
        }
        let sign = if negative { -BigRational::one() } else { BigRational::one() };
        let (n, d) = (value.numer(), value.denom());
        let (sn, sd) = (n.sqrt(), d.sqrt());
        if &(&sn * &sn) == n && &(&sd * &sd) == d {
            return Ok(Phase::Exact(sign * BigRational::new(sn, sd)));
        }
        // floor(sqrt(n/d)·2^bits) = floor(sqrt(n·4^bits/d))
        let scale = BigInt::one() << bits;
        let inner = (n * &scale * &scale).div_floor(d);
        let root = inner.sqrt();
        let center = BigRational::new(root, scale.clone()) + BigRational::new(BigInt::one(), scale.clone() * 2);
        let radius = BigRational::new(BigInt::one(), scale * 2);
        let label = format!("{}sqrt({})", if negative { "-" } else { "" }, fmt_rational(value));
        Ok(Phase::Approx { center: sign * center, radius, label })
    }

    /// Dyadic enclosure of a float, `radius = 2^-bits`.
    pub fn approximate(value: f64, bits: u32) -> Result<Phase> {
        if !value.is_finite() {
            return Err(Error::InvalidArgument("non-finite phase".into()));
        }
        let scale = BigInt::one() << bits;
        let exact = BigRational::from_float(value).ok_or_else(|| Error::InvalidArgument("bad float".into()))?;
        let center = BigRational::new((exact * BigRational::from_integer(scale.clone())).round().to_integer(), scale.clone());
        let radius = BigRational::new(BigInt::one(), scale);
        Ok(Phase::Approx { center, radius, label: format!("{value}") })
    }

    /// `p/q`, an integer, or `[-]sqrt(p/q)`.
    pub fn parse(text: &str, bits: u32) -> Result<Phase> {
        let s = text.trim();
        let (neg, body) = match s.strip_prefix('-') {
            Some(rest) => (true, rest.trim()),
            None => (false, s),
        };
        if let Some(arg) = body.strip_prefix("sqrt(").and_then(|r| r.strip_suffix(')')) {
            return Phase::sqrt(&parse_rational(arg)?, neg, bits);
        }
        Ok(Phase::Exact(parse_rational(s)?))
    }

    pub fn center(&self) -> &BigRational {
        match self {
            Phase::Exact(r) => r,
            Phase::Approx { center, .. } => center,
        }
    }

    pub fn radius(&self) -> BigRational {
        match self {
            Phase::Exact(_) => BigRational::zero(),
            Phase::Approx { radius, .. } => radius.clone(),
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Phase::Exact(_))
    }

    pub fn to_f64(&self) -> f64 {
        rat_to_f64(self.center())
    }

    pub fn negated(&self) -> Phase {
        match self {
            Phase::Exact(r) => Phase::Exact(-r),
            Phase::Approx { center, radius, label } => {
                Phase::Approx { center: -center, radius: radius.clone(), label: format!("-({label})") }
            }
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Phase::Exact(r) => write!(f, "{}", fmt_rational(r)),
            Phase::Approx { label, radius, .. } => {
                write!(f, "{label} (±2^-{})", radius.denom().bits().saturating_sub(1))
            }
        }
    }
}

/// `α = (α_1, .., α_r)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PhaseVector(pub Vec<Phase>);

/// Integer representation of a phase vector: `α_i ∈ (m_i ± u_i) / L`.
#[derive(Clone, Debug)]
pub(crate) struct ScaledPhases {
    pub modulus: BigInt,
    pub numerators: Vec<BigInt>,
    pub uncertainty: Vec<BigInt>,
}

impl PhaseVector {
    pub fn exact(values: Vec<BigRational>) -> PhaseVector {
        PhaseVector(values.into_iter().map(Phase::Exact).collect())
    }

    pub fn zero(r: usize) -> PhaseVector {
        PhaseVector(vec![Phase::Exact(BigRational::zero()); r])
    }

    /// Comma-separated list of [`Phase::parse`] items.
    pub fn parse(text: &str, bits: u32) -> Result<PhaseVector> {
        Ok(PhaseVector(text.split(',').map(|s| Phase::parse(s, bits)).collect::<Result<_>>()?))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_exact(&self) -> bool {
        self.0.iter().all(Phase::is_exact)
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|p| p.is_exact() && p.center().is_zero())
    }

    pub fn centers(&self) -> Vec<BigRational> {
        self.0.iter().map(|p| p.center().clone()).collect()
    }

    pub fn negated(&self) -> PhaseVector {
        PhaseVector(self.0.iter().map(Phase::negated).collect())
    }

    pub(crate) fn scaled(&self) -> ScaledPhases {
        let centers = self.centers();
        let modulus = common_denominator(&centers);
        let l = BigRational::from_integer(modulus.clone());
        let numerators = centers.iter().map(|c| (c * &l).to_integer()).collect();
        let uncertainty = self.0.iter().map(|p| (p.radius() * &l).ceil().to_integer()).collect();
        ScaledPhases { modulus, numerators, uncertainty }
    }

    pub(crate) fn check_len(&self, r: usize) -> Result<()> {
        if self.len() != r {
            return Err(Error::DimensionMismatch { expected: r, found: self.len() });
        }
        Ok(())
    }
}

impl fmt::Display for PhaseVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|p| p.to_string()).collect();
        write!(f, "({})", parts.join(", "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::rat;

    #[test]
    fn sqrt_enclosure() {
        let p = Phase::sqrt(&rat(2, 1), false, 40).unwrap();
        let c = rat_to_f64(p.center());
        assert!((c - 2f64.sqrt()).abs() < 1e-12);
        let r = p.radius();
        let lo = p.center() - &r;
        let hi = p.center() + &r;
        assert!(&lo * &lo < rat(2, 1) && rat(2, 1) < &hi * &hi);
        assert_eq!(Phase::sqrt(&rat(9, 4), true, 10).unwrap(), Phase::Exact(rat(-3, 2)));
    }

    #[test]
    fn parsing() {
        let v = PhaseVector::parse("1/3, -sqrt(2), 4", 32).unwrap();
        assert!(v.0[0].is_exact() && !v.0[1].is_exact() && v.0[2].is_exact());
        assert!(v.0[1].to_f64() < -1.41);
        assert!(PhaseVector::parse("0.25", 32).is_err());
    }

    #[test]
    fn scaled_representation() {
        let v = PhaseVector::exact(vec![rat(1, 3), rat(-1, 4)]);
        let s = v.scaled();
        assert_eq!(s.modulus, BigInt::from(12));
        assert_eq!(s.numerators, vec![BigInt::from(4), BigInt::from(-3)]);
        assert!(s.uncertainty.iter().all(Zero::is_zero));
    }
}
