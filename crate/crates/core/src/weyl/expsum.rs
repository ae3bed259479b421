//! `S(α) = Σ_{x ∈ P·B ∩ ℤ^n} e(Σ α_i f_i(x))`.

use std::f64::consts::TAU;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use crate::arith::{fits_fast, fits_small, EngineInt};
use crate::count::{check_scale, horner, machine_ranges, value_bound, Leaf, PolyEngine};
use crate::error::{Error, Result};
use crate::form::{Form, FormSystem};
use crate::phase::PhaseVector;
use crate::region::BoxRegion;

/// Moduli up to this size are summed through a residue histogram.
const HISTOGRAM_LIMIT: u64 = 1 << 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExpSumMethod {
    /// Phases `g(x)/L` with `g = Σ m_i f_i` computed exactly; residues are
    /// histogrammed when `L` is small.
    Exact,
    /// Floating phases `Σ α_i f_i(x)` accumulated point by point.
    Float,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExpSum {
    pub value: Complex64,
    pub points: BigInt,
    /// Residue counts of `g(x) mod L`, when the histogram path was taken.
    pub histogram: Option<Vec<u64>>,
}

/// Compensated complex accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct Kahan {
    sum: Complex64,
    comp: Complex64,
}

impl Kahan {
    pub(crate) fn add(&mut self, v: Complex64) {
        let y = v - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }

    pub(crate) fn value(&self) -> Complex64 {
        self.sum
    }
}

pub(crate) fn e(phase: f64) -> Complex64 {
    let f = phase - phase.floor();
    Complex64::from_polar(1.0, TAU * f)
}

struct Histogram {
    modulus: u64,
}

impl<T: EngineInt> Leaf<T> for Histogram {
    type Acc = Vec<u64>;

    fn empty(&self) -> Vec<u64> {
        vec![0; self.modulus as usize]
    }

    fn visit(&self, acc: &mut Vec<u64>, coeffs: &[T], lo: i64, hi: i64) -> Result<()> {
        let l = T::from_u64(self.modulus).unwrap();
        for t in lo..=hi {
            let v = horner(coeffs, &T::from_i64(t).unwrap()).mod_floor(&l);
            acc[v.to_usize().unwrap()] += 1;
        }
        Ok(())
    }

    fn merge(&self, into: &mut Vec<u64>, other: Vec<u64>) {
        into.iter_mut().zip(other).for_each(|(a, b)| *a += b);
    }
}

struct Residues<T> {
    modulus: T,
    inv: f64,
}

impl<T: EngineInt> Leaf<T> for Residues<T> {
    type Acc = Kahan;

    fn empty(&self) -> Kahan {
        Kahan::default()
    }

    fn visit(&self, acc: &mut Kahan, coeffs: &[T], lo: i64, hi: i64) -> Result<()> {
        for t in lo..=hi {
            let v = horner(coeffs, &T::from_i64(t).unwrap()).mod_floor(&self.modulus);
            acc.add(e(v.to_f64().unwrap() * self.inv));
        }
        Ok(())
    }

    fn merge(&self, into: &mut Kahan, other: Kahan) {
        into.add(other.value());
    }
}

struct FloatPhases {
    alpha: Vec<f64>,
    d: usize,
}

impl<T: EngineInt> Leaf<T> for FloatPhases {
    type Acc = Kahan;

    fn empty(&self) -> Kahan {
        Kahan::default()
    }

    fn visit(&self, acc: &mut Kahan, coeffs: &[T], lo: i64, hi: i64) -> Result<()> {
        let w = self.d + 1;
        for t in lo..=hi {
            let tt = T::from_i64(t).unwrap();
            let mut phase = 0.0;
            for (i, a) in self.alpha.iter().enumerate() {
                let v = horner(&coeffs[i * w..(i + 1) * w], &tt).to_f64().unwrap();
                let y = a * v;
                phase += y - y.floor();
            }
            acc.add(e(phase));
        }
        Ok(())
    }

    fn merge(&self, into: &mut Kahan, other: Kahan) {
        into.add(other.value());
    }
}

fn run_with<A: Send, L>(forms: &[Form], ranges: &[(i64, i64)], bound: &BigInt, leaf: &L) -> Result<A>
where
    L: Leaf<i64, Acc = A> + Leaf<i128, Acc = A> + Leaf<BigInt, Acc = A>,
{
    if fits_small(bound) {
        PolyEngine::<i64>::new(forms, ranges).run(leaf)
    } else if fits_fast(bound) {
        PolyEngine::<i128>::new(forms, ranges).run(leaf)
    } else {
        PolyEngine::<BigInt>::new(forms, ranges).run(leaf)
    }
}

/// `S(α)` over `P·B`.
pub fn exponential_sum(sys: &FormSystem, alpha: &PhaseVector, region: &BoxRegion, p: &BigRational) -> Result<ExpSum> {
    exponential_sum_with(sys, alpha, region, p, ExpSumMethod::Exact)
}

pub fn exponential_sum_with(
    sys: &FormSystem,
    alpha: &PhaseVector,
    region: &BoxRegion,
    p: &BigRational,
    method: ExpSumMethod,
) -> Result<ExpSum> {
    alpha.check_len(sys.r())?;
    if region.dim() != sys.n_vars() {
        return Err(Error::DimensionMismatch { expected: sys.n_vars(), found: region.dim() });
    }
    check_scale(p)?;
    let points = region.lattice_point_count(p);
    let Some(ranges) = region.integer_ranges(p) else {
        return Ok(ExpSum { value: Complex64::zero(), points, histogram: None });
    };
    let small = machine_ranges(&ranges)?;
    match method {
        ExpSumMethod::Exact => {
            let s = alpha.scaled();
            let mut g = Form::zero(sys.n_vars(), sys.degree());
            for (f, m) in sys.forms().iter().zip(&s.numerators) {
                g.scaled_add(f, &m.mod_floor(&s.modulus));
            }
            let bound = value_bound(std::slice::from_ref(&g), &ranges) * 4 + &s.modulus;
            let forms = std::slice::from_ref(&g);
            if let Some(l) = s.modulus.to_u64().filter(|&l| l <= HISTOGRAM_LIMIT) {
                let hist = run_with(forms, &small, &bound, &Histogram { modulus: l })?;
                let mut acc = Kahan::default();
                for (v, &c) in hist.iter().enumerate() {
                    if c > 0 {
                        acc.add(e(v as f64 / l as f64) * c as f64);
                    }
                }
                Ok(ExpSum { value: acc.value(), points, histogram: Some(hist) })
            } else {
                let inv = 1.0 / crate::arith::rat_to_f64(&BigRational::from_integer(s.modulus.clone()));
                let value = if fits_small(&bound) {
                    let leaf = Residues { modulus: i64::from_big(&s.modulus), inv };
                    PolyEngine::<i64>::new(forms, &small).run(&leaf)?.value()
                } else if fits_fast(&bound) {
                    let leaf = Residues { modulus: i128::from_big(&s.modulus), inv };
                    PolyEngine::<i128>::new(forms, &small).run(&leaf)?.value()
                } else {
                    let leaf = Residues { modulus: s.modulus.clone(), inv };
                    PolyEngine::<BigInt>::new(forms, &small).run(&leaf)?.value()
                };
                Ok(ExpSum { value, points, histogram: None })
            }
        }
        ExpSumMethod::Float => {
            let bound = value_bound(sys.forms(), &ranges) * 4;
            let alpha_f: Vec<f64> = alpha.0.iter().map(|a| a.to_f64()).collect();
            let leaf = FloatPhases { alpha: alpha_f, d: sys.degree() as usize };
            let value = run_with(sys.forms(), &small, &bound, &leaf)?.value();
            Ok(ExpSum { value, points, histogram: None })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::rat;
    use crate::phase::Phase;

    #[test]
    fn zero_phase_counts_points() {
        let sys = FormSystem::parse("x1^2 - x2*x3", 3).unwrap();
        let s = exponential_sum(&sys, &PhaseVector::zero(1), &BoxRegion::unit(3), &rat(4, 1)).unwrap();
        assert_eq!(s.value, Complex64::new(729.0, 0.0));
        assert_eq!(s.points, BigInt::from(729));
    }

    #[test]
    fn half_phase_telescopes() {
        let sys = FormSystem::parse("x1^2", 1).unwrap();
        let alpha = PhaseVector::exact(vec![rat(1, 2)]);
        for p in [2, 10, 64] {
            let s = exponential_sum(&sys, &alpha, &BoxRegion::unit(1), &rat(p, 1)).unwrap();
            assert!((s.value - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn exact_and_float_paths_agree() {
        let sys = FormSystem::parse("x1^2 + 2*x2^2 - x3^2; x1*x2 - x3^2", 3).unwrap();
        let alpha = PhaseVector::exact(vec![rat(2, 7), rat(-5, 9)]);
        let region = BoxRegion::parse("-1:1,0:1,-1/2:1", 3).unwrap();
        let p = rat(13, 1);
        let a = exponential_sum_with(&sys, &alpha, &region, &p, ExpSumMethod::Exact).unwrap();
        let b = exponential_sum_with(&sys, &alpha, &region, &p, ExpSumMethod::Float).unwrap();
        assert!((a.value - b.value).norm() < 1e-10);
        assert!(a.value.norm() <= 27.0 * 14.0 * 20.0);
        let neg = exponential_sum(&sys, &alpha.negated(), &region, &p).unwrap();
        assert!((neg.value - a.value.conj()).norm() < 1e-10);
    }

    #[test]
    fn irrational_phase_paths_agree() {
        let sys = FormSystem::parse("x1^2 + x2^2", 2).unwrap();
        let alpha = PhaseVector(vec![Phase::sqrt(&rat(2, 1), false, 50).unwrap()]);
        let p = rat(40, 1);
        let a = exponential_sum_with(&sys, &alpha, &BoxRegion::unit(2), &p, ExpSumMethod::Exact).unwrap();
        let b = exponential_sum_with(&sys, &alpha, &BoxRegion::unit(2), &p, ExpSumMethod::Float).unwrap();
        assert!((a.value - b.value).norm() < 1e-8);
        assert!(a.value.norm() < 81.0 * 81.0 / 4.0);
    }
}
