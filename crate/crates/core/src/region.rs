//! Boxes with rational sides inside `[-1, 1]^n`.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::arith::{fmt_rational, parse_rational};
use crate::error::{Error, Result};

/// Closed box `Π [lo_j, hi_j]` with `-1 <= lo_j <= hi_j <= 1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BoxRegion {
    intervals: Vec<(BigRational, BigRational)>,
}

impl BoxRegion {
    pub fn new(intervals: Vec<(BigRational, BigRational)>) -> Result<BoxRegion> {
        if intervals.is_empty() {
            return Err(Error::InvalidArgument("a box needs at least one side".into()));
        }
        let one = BigRational::one();
        for (lo, hi) in &intervals {
            if lo > hi || lo < &-one.clone() || hi > &one {
                return Err(Error::InvalidArgument(format!(
                    "side [{}, {}] is not an interval inside [-1, 1]",
                    fmt_rational(lo),
                    fmt_rational(hi)
                )));
            }
        }
        Ok(BoxRegion { intervals })
    }

    /// `[-1, 1]^n`.
    pub fn unit(n: usize) -> BoxRegion {
        let one = BigRational::one();
        BoxRegion { intervals: vec![(-one.clone(), one); n] }
    }

    /// `[0, 1]^n`.
    pub fn nonnegative_unit(n: usize) -> BoxRegion {
        BoxRegion { intervals: vec![(BigRational::zero(), BigRational::one()); n] }
    }

    /// Parses `lo:hi` (applied to every side) or a comma list of `lo:hi`.
    pub fn parse(text: &str, n: usize) -> Result<BoxRegion> {
        let sides: Vec<&str> = text.split(',').map(str::trim).collect();
        let parse_side = |s: &str| -> Result<(BigRational, BigRational)> {
            let (lo, hi) = s
                .split_once(':')
                .ok_or_else(|| Error::InvalidArgument(format!("box side `{s}` must be `lo:hi`")))?;
            Ok((parse_rational(lo)?, parse_rational(hi)?))
        };
        let intervals = if sides.len() == 1 {
            vec![parse_side(sides[0])?; n]
        } else if sides.len() == n {
            sides.into_iter().map(parse_side).collect::<Result<_>>()?
        } else {
            return Err(Error::DimensionMismatch { expected: n, found: sides.len() });
        };
        BoxRegion::new(intervals)
    }

    pub fn dim(&self) -> usize {
        self.intervals.len()
    }

    pub fn intervals(&self) -> &[(BigRational, BigRational)] {
        &self.intervals
    }

    pub fn volume(&self) -> BigRational {
        self.intervals.iter().map(|(lo, hi)| hi - lo).product()
    }

    /// Integer coordinate ranges of `P·B`; `None` when some side holds no integer.
    pub fn integer_ranges(&self, p: &BigRational) -> Option<Vec<(BigInt, BigInt)>> {
        self.intervals
            .iter()
            .map(|(lo, hi)| {
                let a = (lo * p).ceil().to_integer();
                let b = (hi * p).floor().to_integer();
                (a <= b).then_some((a, b))
            })
            .collect()
    }

    /// Number of integer points in `P·B`.
    pub fn lattice_point_count(&self, p: &BigRational) -> BigInt {
        match self.integer_ranges(p) {
            None => BigInt::zero(),
            Some(r) => r.iter().map(|(a, b)| b - a + 1).product(),
        }
    }

    /// Exact membership of `x` in `P·B`.
    pub fn contains_scaled(&self, p: &BigRational, x: &[BigInt]) -> bool {
        x.len() == self.dim()
            && self.intervals.iter().zip(x).all(|((lo, hi), xi)| {
                let v = BigRational::from_integer(xi.clone());
                lo * p <= v && v <= hi * p
            })
    }

    /// True when every side is symmetric about 0.
    pub fn is_sign_symmetric(&self) -> bool {
        self.intervals.iter().all(|(lo, hi)| (lo + hi).is_zero())
    }

    /// Largest `|coordinate|` of any point.
    pub fn sup_abs(&self) -> BigRational {
        self.intervals
            .iter()
            .map(|(lo, hi)| lo.abs().max(hi.abs()))
            .max()
            .unwrap_or_else(BigRational::zero)
    }
}

impl fmt::Display for BoxRegion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .intervals
            .iter()
            .map(|(lo, hi)| format!("[{}, {}]", fmt_rational(lo), fmt_rational(hi)))
            .collect();
        write!(f, "{}", parts.join(" x "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::rat;

    #[test]
    fn ranges_and_counts() {
        let b = BoxRegion::unit(2);
        assert_eq!(b.lattice_point_count(&rat(2, 1)), BigInt::from(25));
        let h = BoxRegion::parse("0:1/2", 3).unwrap();
        assert_eq!(h.integer_ranges(&rat(5, 1)).unwrap()[0], (BigInt::from(0), BigInt::from(2)));
        let thin = BoxRegion::parse("1/3:1/2", 1).unwrap();
        assert!(thin.integer_ranges(&rat(1, 1)).is_none());
        assert_eq!(thin.lattice_point_count(&rat(1, 1)), BigInt::zero());
        assert_eq!(BoxRegion::unit(3).volume(), rat(8, 1));
    }

    #[test]
    fn rejects_out_of_unit_box() {
        assert!(BoxRegion::parse("-2:1", 2).is_err());
        assert!(BoxRegion::parse("1/2:-1/2", 2).is_err());
        assert!(BoxRegion::parse("0.5:1", 2).is_err());
        assert!(BoxRegion::parse("0:1,0:1", 3).is_err());
    }

    #[test]
    fn membership_is_exact() {
        let b = BoxRegion::parse("-1/3:1/3", 1).unwrap();
        let p = rat(6, 1);
        assert!(b.contains_scaled(&p, &[BigInt::from(2)]));
        assert!(!b.contains_scaled(&p, &[BigInt::from(3)]));
        assert!(b.is_sign_symmetric());
        assert!(!BoxRegion::nonnegative_unit(2).is_sign_symmetric());
    }
}
