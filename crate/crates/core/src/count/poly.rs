//! Enumeration of `P·B ∩ ℤ^n` for polynomial systems: a depth-first walk over
//! all coordinates but the last, with the last coordinate handled through the
//! univariate specialization of every form.

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;

use crate::arith::{exact_sqrt, EngineInt};
use crate::error::{Error, Result};
use crate::form::Form;

struct Term<T> {
    form: usize,
    coef: T,
    exps: Vec<u32>,
    last: usize,
}

/// Per-prefix callback. `coeffs` holds, for each form `i`, the coefficients
/// `c[i*(d+1) + e]` of `t^e` in `f_i(prefix, t)`.
pub(crate) trait Leaf<T>: Sync {
    type Acc: Send;
    fn empty(&self) -> Self::Acc;
    fn visit(&self, acc: &mut Self::Acc, coeffs: &[T], lo: i64, hi: i64) -> Result<()>;
    fn merge(&self, into: &mut Self::Acc, other: Self::Acc);
}

pub(crate) struct PolyEngine<T> {
    n: usize,
    d: usize,
    r: usize,
    terms: Vec<Term<T>>,
    ranges: Vec<(i64, i64)>,
    pows: Vec<Vec<T>>,
}

/// `max_i ||f_i||_1 · R^d`, an upper bound for every value and coefficient
/// seen during the walk.
pub(crate) fn value_bound(forms: &[Form], ranges: &[(BigInt, BigInt)]) -> BigInt {
    let radius = ranges
        .iter()
        .map(|(a, b)| a.magnitude().max(b.magnitude()).clone())
        .max()
        .unwrap_or_default()
        .max(1u32.into());
    let d = forms.first().map_or(0, Form::degree);
    let l1 = forms.iter().map(Form::l1_norm).max().unwrap_or_else(BigInt::zero);
    l1 * BigInt::from(radius).pow(d)
}

pub(crate) fn machine_ranges(ranges: &[(BigInt, BigInt)]) -> Result<Vec<(i64, i64)>> {
    ranges
        .iter()
        .map(|(a, b)| match (a.to_i64(), b.to_i64()) {
            (Some(a), Some(b)) if b.checked_sub(a).is_some() => Ok((a, b)),
            _ => Err(Error::InvalidArgument("coordinate range too large to enumerate".into())),
        })
        .collect()
}

impl<T: EngineInt> PolyEngine<T> {
    pub(crate) fn new(forms: &[Form], ranges: &[(i64, i64)]) -> PolyEngine<T> {
        let n = ranges.len();
        let d = forms[0].degree() as usize;
        let mut terms = Vec::new();
        for (i, f) in forms.iter().enumerate() {
            for (m, c) in f.terms() {
                let e = m.exponents();
                terms.push(Term { form: i, coef: T::from_big(c), exps: e[..n - 1].to_vec(), last: e[n - 1] as usize });
            }
        }
        let pows = ranges[..n - 1]
            .iter()
            .map(|&(lo, hi)| {
                let mut table = Vec::with_capacity(((hi - lo + 1) as usize) * (d + 1));
                for v in lo..=hi {
                    let v = T::from_i64(v).unwrap();
                    let mut p = T::one();
                    for _ in 0..=d {
                        table.push(p.clone());
                        p = p * v.clone();
                    }
                }
                table
            })
            .collect();
        PolyEngine { n, d, r: forms.len(), terms, ranges: ranges.to_vec(), pows }
    }

    pub(crate) fn run<L: Leaf<T>>(&self, leaf: &L) -> Result<L::Acc> {
        let width = self.r * (self.d + 1);
        if self.n == 1 {
            let mut coeffs = vec![T::zero(); width];
            for t in &self.terms {
                coeffs[t.form * (self.d + 1) + t.last] = t.coef.clone();
            }
            let mut acc = leaf.empty();
            leaf.visit(&mut acc, &coeffs, self.ranges[0].0, self.ranges[0].1)?;
            return Ok(acc);
        }
        let (lo, hi) = self.ranges[0];
        let parts: Vec<Result<L::Acc>> = (lo..=hi)
            .into_par_iter()
            .map(|x0| {
                let mut acc = leaf.empty();
                let mut levels: Vec<Vec<T>> = vec![vec![T::zero(); self.terms.len()]; self.n];
                for (k, t) in self.terms.iter().enumerate() {
                    levels[0][k] = t.coef.clone();
                }
                let mut coeffs = vec![T::zero(); width];
                self.descend(0, x0, &mut levels, &mut coeffs, leaf, &mut acc)?;
                Ok(acc)
            })
            .collect();
        let mut total = leaf.empty();
        for p in parts {
            leaf.merge(&mut total, p?);
        }
        Ok(total)
    }

    /// Sets coordinate `k` to `v` and walks the remaining prefix.
    fn descend<L: Leaf<T>>(
        &self,
        k: usize,
        v: i64,
        levels: &mut [Vec<T>],
        coeffs: &mut [T],
        leaf: &L,
        acc: &mut L::Acc,
    ) -> Result<()> {
        let stride = self.d + 1;
        let row = ((v - self.ranges[k].0) as usize) * stride;
        let table = &self.pows[k][row..row + stride];
        {
            let (done, rest) = levels.split_at_mut(k + 1);
            let (src, dst) = (&done[k], &mut rest[0]);
            for (idx, t) in self.terms.iter().enumerate() {
                let e = t.exps[k] as usize;
                dst[idx] = if e == 0 { src[idx].clone() } else { src[idx].clone() * table[e].clone() };
            }
        }
        if k + 2 == self.n {
            coeffs.iter_mut().for_each(|c| c.set_zero());
            for (idx, t) in self.terms.iter().enumerate() {
                let slot = &mut coeffs[t.form * stride + t.last];
                *slot = slot.clone() + levels[k + 1][idx].clone();
            }
            let (lo, hi) = self.ranges[self.n - 1];
            return leaf.visit(acc, coeffs, lo, hi);
        }
        let (lo, hi) = self.ranges[k + 1];
        for w in lo..=hi {
            self.descend(k + 1, w, levels, coeffs, leaf, acc)?;
        }
        Ok(())
    }
}

pub(crate) fn horner<T: EngineInt>(c: &[T], t: &T) -> T {
    c.iter().rev().fold(T::zero(), |acc, ci| acc * t.clone() + ci.clone())
}

/// Integer roots of `Σ c_e t^e` in `[lo, hi]`, appended to `out`.
/// Returns `true` when the polynomial vanishes identically.
pub(crate) fn roots_in_range<T: EngineInt>(c: &[T], lo: i64, hi: i64, out: &mut Vec<i64>) -> bool {
    let Some(top) = c.iter().rposition(|x| !x.is_zero()) else {
        return true;
    };
    let low = c.iter().position(|x| !x.is_zero()).unwrap();
    if low > 0 && lo <= 0 && 0 <= hi {
        out.push(0);
    }
    let g = &c[low..=top];
    let push = |t: T, out: &mut Vec<i64>| {
        if let Some(t) = t.to_i64() {
            if lo <= t && t <= hi && t != 0 {
                out.push(t);
            }
        }
    };
    match g.len() - 1 {
        0 => {}
        1 => {
            let (b, a) = (&g[0], &g[1]);
            if (b.clone() % a.clone()).is_zero() {
                push(-(b.clone() / a.clone()), out);
            }
        }
        2 => {
            let (cc, b, a) = (&g[0], &g[1], &g[2]);
            let four = T::from_i64(4).unwrap();
            let disc = b.clone() * b.clone() - four * a.clone() * cc.clone();
            if let Some(s) = exact_sqrt(&disc) {
                let den = a.clone() + a.clone();
                let n1 = -b.clone() + s.clone();
                if (n1.clone() % den.clone()).is_zero() {
                    push(n1 / den.clone(), out);
                }
                if !s.is_zero() {
                    let n2 = -b.clone() - s;
                    if (n2.clone() % den.clone()).is_zero() {
                        push(n2 / den, out);
                    }
                }
            }
        }
        deg => {
            // Cauchy bound on the roots, then divisors of the constant term.
            let lead = g[deg].abs();
            let cauchy = g[..deg].iter().map(|x| x.abs() / lead.clone()).max().unwrap() + T::one();
            let cap = cauchy.to_i64().unwrap_or(i64::MAX);
            let (a, b) = (lo.max(-cap), hi.min(cap));
            for t in a..=b {
                if t == 0 {
                    continue;
                }
                let tt = T::from_i64(t).unwrap();
                if (g[0].clone() % tt.clone()).is_zero() && horner(g, &tt).is_zero() {
                    out.push(t);
                }
            }
        }
    }
    false
}

/// Counts common integer roots of all forms' univariate specializations.
pub(crate) struct CommonRoots {
    pub r: usize,
    pub d: usize,
}

impl<T: EngineInt> Leaf<T> for CommonRoots {
    type Acc = (u128, Vec<i64>);

    fn empty(&self) -> Self::Acc {
        (0, Vec::new())
    }

    fn visit(&self, acc: &mut Self::Acc, coeffs: &[T], lo: i64, hi: i64) -> Result<()> {
        let stride = self.d + 1;
        let roots = &mut acc.1;
        let mut pivot = None;
        for i in 0..self.r {
            roots.clear();
            if !roots_in_range(&coeffs[i * stride..(i + 1) * stride], lo, hi, roots) {
                pivot = Some(i);
                break;
            }
        }
        let Some(p) = pivot else {
            acc.0 += (hi - lo + 1) as u128;
            return Ok(());
        };
        for &t in roots.iter() {
            let tt = T::from_i64(t).unwrap();
            if (p + 1..self.r).all(|i| horner(&coeffs[i * stride..(i + 1) * stride], &tt).is_zero()) {
                acc.0 += 1;
            }
        }
        Ok(())
    }

    fn merge(&self, into: &mut Self::Acc, other: Self::Acc) {
        into.0 += other.0;
    }
}
