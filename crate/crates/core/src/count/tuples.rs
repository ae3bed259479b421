//! Enumeration of `(d-1)`-tuples `(x^(2), .., x^(d))` for the multilinear
//! conditions `Γ_i(e_j, x^(2), .., x^(d))`. The tuple is flattened into
//! `m = (d-1)n` coordinates; every form's derivative tensor is contracted one
//! coordinate at a time, so the last coordinate `t` enters each value linearly
//! as `C_ij + B_ij t`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};
use rayon::prelude::*;

use crate::arith::EngineInt;
use crate::error::{Error, Result};
use crate::form::Form;
use crate::multilinear::DerivativeTensor;
use crate::phase::PhaseVector;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Flow {
    Continue,
    Stop,
}

pub(crate) trait TupleVisitor<T>: Sync {
    type Acc: Send;
    fn empty(&self) -> Self::Acc;
    /// `c[i*n + j] + b[i*n + j]·t` is `Γ_i(e_j, tuple)` for last coordinate `t`.
    fn visit(&self, acc: &mut Self::Acc, prefix: &[i64], c: &[T], b: &[T], last: &[(i64, i64)]) -> Result<Flow>;
    fn merge(&self, into: &mut Self::Acc, other: Self::Acc);
}

pub(crate) struct TupleEngine<T> {
    n: usize,
    d: usize,
    r: usize,
    m: usize,
    tensors: Vec<Vec<T>>,
}

/// Upper bound for `|Γ_i(e_j, tuple)|` when every coordinate is at most `radius`.
pub(crate) fn tensor_value_bound(forms: &[Form], radius: &BigInt) -> Result<BigInt> {
    let mut best = BigInt::zero();
    for f in forms {
        let t = DerivativeTensor::new(f)?;
        let s: BigInt = t.entries().iter().map(|e| e.abs()).sum();
        best = best.max(s);
    }
    let d = forms[0].degree();
    Ok(best * radius.max(&BigInt::from(1)).pow(d - 1))
}

impl<T: EngineInt> TupleEngine<T> {
    pub(crate) fn new(forms: &[Form]) -> Result<TupleEngine<T>> {
        let n = forms[0].n_vars();
        let d = forms[0].degree() as usize;
        if d < 2 {
            return Err(Error::InvalidArgument("multilinear conditions need degree >= 2".into()));
        }
        let tensors = forms
            .iter()
            .map(|f| Ok(DerivativeTensor::new(f)?.entries().iter().map(T::from_big).collect()))
            .collect::<Result<_>>()?;
        Ok(TupleEngine { n, d, r: forms.len(), m: (d - 1) * n, tensors })
    }

    pub(crate) fn m(&self) -> usize {
        self.m
    }

    fn size(&self, idx: usize) -> usize {
        self.n.pow((self.d - idx / self.n - 1) as u32)
    }

    fn fresh(&self) -> Vec<Vec<T>> {
        (0..self.m.saturating_sub(1)).map(|idx| vec![T::zero(); self.r * self.size(idx)]).collect()
    }

    fn set(&self, bufs: &mut [Vec<T>], idx: usize, v: i64) {
        let (n, s, c) = (self.n, idx / self.n, idx % self.n);
        let size = self.size(idx);
        let prev_size = size * n;
        let v = T::from_i64(v).unwrap();
        let (before, after) = bufs.split_at_mut(idx);
        let dst = &mut after[0];
        for i in 0..self.r {
            let a: &[T] = if s == 0 {
                &self.tensors[i]
            } else {
                &before[s * n - 1][i * prev_size..(i + 1) * prev_size]
            };
            let out = &mut dst[i * size..(i + 1) * size];
            if c == 0 {
                for (q, o) in out.iter_mut().enumerate() {
                    *o = v.clone() * a[q * n + c].clone();
                }
            } else {
                let p = &before[idx - 1][i * size..(i + 1) * size];
                for (q, o) in out.iter_mut().enumerate() {
                    *o = p[q].clone() + v.clone() * a[q * n + c].clone();
                }
            }
        }
    }

    fn leaf_values(&self, bufs: &[Vec<T>], c: &mut [T], b: &mut [T]) {
        let n = self.n;
        for i in 0..self.r {
            let a: &[T] = if self.d == 2 {
                &self.tensors[i]
            } else {
                &bufs[(self.d - 2) * n - 1][i * n * n..(i + 1) * n * n]
            };
            for j in 0..n {
                b[i * n + j] = a[j * n + n - 1].clone();
                c[i * n + j] = if n == 1 { T::zero() } else { bufs[self.m - 2][i * n + j].clone() };
            }
        }
    }

    /// Walks prefixes drawn from `lists` (one list per coordinate but the
    /// last); the last coordinate is handed to the visitor as `last`.
    pub(crate) fn walk<V: TupleVisitor<T>>(
        &self,
        lists: &[Vec<i64>],
        last: &[(i64, i64)],
        visitor: &V,
        acc: &mut V::Acc,
        parallel: bool,
    ) -> Result<Flow> {
        debug_assert_eq!(lists.len(), self.m - 1);
        if parallel && !lists.is_empty() {
            let parts: Vec<Result<V::Acc>> = lists[0]
                .par_iter()
                .map(|&v0| {
                    let mut a = visitor.empty();
                    let mut st = WalkState::new(self);
                    self.set(&mut st.bufs, 0, v0);
                    st.prefix.push(v0);
                    self.rec(1, lists, last, &mut st, visitor, &mut a)?;
                    Ok(a)
                })
                .collect();
            for p in parts {
                visitor.merge(acc, p?);
            }
            return Ok(Flow::Continue);
        }
        let mut st = WalkState::new(self);
        self.rec(0, lists, last, &mut st, visitor, acc)
    }

    fn rec<V: TupleVisitor<T>>(
        &self,
        idx: usize,
        lists: &[Vec<i64>],
        last: &[(i64, i64)],
        st: &mut WalkState<T>,
        visitor: &V,
        acc: &mut V::Acc,
    ) -> Result<Flow> {
        if idx + 1 == self.m {
            self.leaf_values(&st.bufs, &mut st.c, &mut st.b);
            return visitor.visit(acc, &st.prefix, &st.c, &st.b, last);
        }
        for &v in &lists[idx] {
            self.set(&mut st.bufs, idx, v);
            st.prefix.push(v);
            let flow = self.rec(idx + 1, lists, last, st, visitor, acc)?;
            st.prefix.pop();
            if flow == Flow::Stop {
                return Ok(Flow::Stop);
            }
        }
        Ok(Flow::Continue)
    }
}

struct WalkState<T> {
    bufs: Vec<Vec<T>>,
    prefix: Vec<i64>,
    c: Vec<T>,
    b: Vec<T>,
}

impl<T: EngineInt> WalkState<T> {
    fn new(e: &TupleEngine<T>) -> Self {
        WalkState {
            bufs: e.fresh(),
            prefix: Vec::with_capacity(e.m),
            c: vec![T::zero(); e.r * e.n],
            b: vec![T::zero(); e.r * e.n],
        }
    }
}

/// Which last coordinates `t` satisfy the condition for a fixed prefix.
pub(crate) enum Solutions {
    All,
    Listed,
}

/// The condition imposed on every `j`: either all `Γ_i(e_j, ·) = 0`, or
/// `‖Σ α_i Γ_i(e_j, ·)‖ < P^{-η}`.
///
/// In the second case `α_i ∈ [(m_i - u_i)/L, (m_i + u_i)/L]` and `dmax` is
/// the largest integer strictly below `L·P^{-η}`.
#[derive(Clone, Debug)]
pub(crate) enum Predicate<T> {
    Zero,
    Near { l: T, half: T, m: Vec<T>, u: Vec<T>, dmax: T },
}

struct Constraint<T> {
    j: usize,
    c: T,
    b: T,
}

impl<T: EngineInt> Predicate<T> {
    /// Reduces the phases mod 1 and scales them to a common modulus.
    pub(crate) fn near(alpha: &PhaseVector, dmax: &BigInt, modulus: &BigInt) -> Predicate<T> {
        let s = alpha.scaled();
        debug_assert_eq!(&s.modulus, modulus);
        Predicate::Near {
            l: T::from_big(modulus),
            half: T::from_big(&(modulus / 2)),
            m: s.numerators.iter().map(|x| T::from_big(&x.mod_floor(modulus))).collect(),
            u: s.uncertainty.iter().map(T::from_big).collect(),
            dmax: T::from_big(dmax),
        }
    }

    fn centered(x: T, l: &T, half: &T) -> T {
        let r = x.mod_floor(l);
        if &r > half {
            r - l.clone()
        } else {
            r
        }
    }

    /// `Some(true)`/`Some(false)` when the distance condition is decided,
    /// `None` when the enclosure straddles the threshold.
    fn classify(rho: &T, e: &T, l: &T, dmax: &T) -> Option<bool> {
        let a = rho.abs();
        if a.clone() + e.clone() <= *dmax {
            return Some(true);
        }
        let lower = (a.clone() - e.clone()).min(l.clone() - a - e.clone()).max(T::zero());
        if lower > *dmax {
            return Some(false);
        }
        None
    }

    /// Writes the qualifying `t ∈ [lo, hi]` into `out` (ascending), or
    /// reports that every `t` qualifies.
    pub(crate) fn solve(&self, n: usize, c: &[T], b: &[T], lo: i64, hi: i64, out: &mut Vec<i64>) -> Result<Solutions> {
        out.clear();
        match self {
            Predicate::Zero => Ok(zero_solve(n, c, b, lo, hi, out)),
            Predicate::Near { l, half, m, u, dmax } => {
                if dmax >= half {
                    return Ok(Solutions::All);
                }
                let r = m.len();
                let exact = u.iter().all(Zero::is_zero);
                let radius = T::from_i64(lo.abs().max(hi.abs())).unwrap();
                let err_at = |j: usize, t: &T| -> T {
                    (0..r)
                        .filter(|&i| !u[i].is_zero())
                        .map(|i| u[i].clone() * (c[i * n + j].clone() + b[i * n + j].clone() * t.clone()).abs())
                        .fold(T::zero(), |s, x| s + x)
                };
                let mut cons: Vec<Constraint<T>> = Vec::new();
                let mut widen: Vec<T> = Vec::new();
                for j in 0..n {
                    let (mut cj, mut bj) = (T::zero(), T::zero());
                    for i in 0..r {
                        cj = cj + m[i].clone() * c[i * n + j].clone();
                        bj = bj + m[i].clone() * b[i * n + j].clone();
                    }
                    let cj = Self::centered(cj, l, half);
                    let bj = Self::centered(bj, l, half);
                    let slope_free = (0..r).all(|i| u[i].is_zero() || b[i * n + j].is_zero());
                    if bj.is_zero() && slope_free {
                        let e = err_at(j, &T::zero());
                        match Self::classify(&cj, &e, l, dmax) {
                            Some(true) => continue,
                            Some(false) => return Ok(Solutions::Listed),
                            None => return Err(ambiguous()),
                        }
                    }
                    let emax = (0..r)
                        .filter(|&i| !u[i].is_zero())
                        .map(|i| u[i].clone() * (c[i * n + j].abs() + b[i * n + j].abs() * radius.clone()))
                        .fold(T::zero(), |s, x| s + x);
                    cons.push(Constraint { j, c: cj, b: bj });
                    widen.push(dmax.clone() + emax);
                }
                if cons.is_empty() {
                    return Ok(Solutions::All);
                }
                let span = (hi - lo + 1) as f64;
                let lf = l.to_f64().unwrap_or(f64::MAX);
                let estimate = |k: usize| -> f64 {
                    let bb = cons[k].b.abs().to_f64().unwrap_or(f64::MAX);
                    let w = widen[k].to_f64().unwrap_or(f64::MAX);
                    if bb == 0.0 || &widen[k] >= half {
                        return span;
                    }
                    ((bb * span + 2.0 * w) / lf + 1.0) * (2.0 * w / bb + 1.0)
                };
                let best = (0..cons.len())
                    .min_by(|&a, &b| estimate(a).partial_cmp(&estimate(b)).unwrap())
                    .unwrap();
                let check = |t: i64| -> Result<bool> {
                    let tt = T::from_i64(t).unwrap();
                    for k in &cons {
                        let rho = Self::centered(k.c.clone() + k.b.clone() * tt.clone(), l, half);
                        let e = if exact { T::zero() } else { err_at(k.j, &tt) };
                        match Self::classify(&rho, &e, l, dmax) {
                            Some(true) => {}
                            Some(false) => return Ok(false),
                            None => return Err(ambiguous()),
                        }
                    }
                    Ok(true)
                };
                if estimate(best) >= span {
                    for t in lo..=hi {
                        if check(t)? {
                            out.push(t);
                        }
                    }
                } else {
                    let k = &cons[best];
                    for_each_window(&k.c, &k.b, l, &widen[best], lo, hi, |a, z| {
                        for t in a..=z {
                            if check(t)? {
                                out.push(t);
                            }
                        }
                        Ok(())
                    })?;
                }
                Ok(Solutions::Listed)
            }
        }
    }

    /// Number of qualifying `t ∈ [lo, hi]`.
    pub(crate) fn count(&self, n: usize, c: &[T], b: &[T], lo: i64, hi: i64, scratch: &mut Vec<i64>) -> Result<u128> {
        if let Predicate::Near { l, half, m, u, dmax } = self {
            // A single nontrivial j with exact phases: sum window lengths directly.
            if u.iter().all(Zero::is_zero) && dmax < half {
                let r = m.len();
                let mut single = None;
                let mut trivial = true;
                for j in 0..n {
                    let (mut cj, mut bj) = (T::zero(), T::zero());
                    for i in 0..r {
                        cj = cj + m[i].clone() * c[i * n + j].clone();
                        bj = bj + m[i].clone() * b[i * n + j].clone();
                    }
                    let cj = Self::centered(cj, l, half);
                    let bj = Self::centered(bj, l, half);
                    if bj.is_zero() {
                        if cj.abs() > *dmax {
                            return Ok(0);
                        }
                    } else if single.is_none() {
                        single = Some((cj, bj));
                    } else {
                        trivial = false;
                    }
                }
                match (single, trivial) {
                    (None, _) => return Ok((hi - lo + 1) as u128),
                    (Some((cj, bj)), true) => {
                        let mut total = 0u128;
                        for_each_window(&cj, &bj, l, dmax, lo, hi, |a, z| {
                            total += (z - a + 1) as u128;
                            Ok(())
                        })?;
                        return Ok(total);
                    }
                    _ => {}
                }
            }
        }
        Ok(match self.solve(n, c, b, lo, hi, scratch)? {
            Solutions::All => (hi - lo + 1) as u128,
            Solutions::Listed => scratch.len() as u128,
        })
    }
}

fn ambiguous() -> Error {
    Error::Precision("near-integer test undecided at the working precision; raise --precision-bits".into())
}

/// Calls `f(a, z)` for each maximal window `[a, z] ⊂ [lo, hi]` on which
/// `c + b t` lies within `w` of a multiple of `l`. Requires `b != 0` and
/// `2w < l`, so the windows are disjoint and ascending.
fn for_each_window<T: EngineInt>(
    c: &T,
    b: &T,
    l: &T,
    w: &T,
    lo: i64,
    hi: i64,
    mut f: impl FnMut(i64, i64) -> Result<()>,
) -> Result<()> {
    let (c, b) = if b.is_negative() { (-c.clone(), -b.clone()) } else { (c.clone(), b.clone()) };
    let tl = T::from_i64(lo).unwrap();
    let th = T::from_i64(hi).unwrap();
    let ceil_div = |a: T, d: &T| -(-a).div_floor(d);
    let vmin = c.clone() + b.clone() * tl.clone();
    let vmax = c.clone() + b.clone() * th.clone();
    let k0 = ceil_div(vmin - w.clone(), l);
    let k1 = (vmax + w.clone()).div_floor(l);
    let mut k = k0;
    while k <= k1 {
        let base = k.clone() * l.clone() - c.clone();
        let a = ceil_div(base.clone() - w.clone(), &b).max(tl.clone());
        let z = (base + w.clone()).div_floor(&b).min(th.clone());
        if a <= z {
            f(a.to_i64().unwrap(), z.to_i64().unwrap())?;
        }
        k = k + T::one();
    }
    Ok(())
}

fn zero_solve<T: EngineInt>(n: usize, c: &[T], b: &[T], lo: i64, hi: i64, out: &mut Vec<i64>) -> Solutions {
    let mut fixed: Option<T> = None;
    for (ci, bi) in c.iter().zip(b).take(c.len().min(b.len())) {
        if bi.is_zero() {
            if !ci.is_zero() {
                return Solutions::Listed;
            }
            continue;
        }
        if !(ci.clone() % bi.clone()).is_zero() {
            return Solutions::Listed;
        }
        let t = -(ci.clone() / bi.clone());
        match &fixed {
            Some(f) if *f != t => return Solutions::Listed,
            _ => fixed = Some(t),
        }
    }
    let _ = n;
    match fixed {
        None => Solutions::All,
        Some(t) => {
            if let Some(t) = t.to_i64() {
                if lo <= t && t <= hi {
                    out.push(t);
                }
            }
            Solutions::Listed
        }
    }
}

/// Counts tuples satisfying a predicate over `[-bound, bound]^m`.
pub(crate) struct TupleCounter<'a, T> {
    pub n: usize,
    pub pred: &'a Predicate<T>,
}

impl<T: EngineInt> TupleVisitor<T> for TupleCounter<'_, T> {
    type Acc = (u128, Vec<i64>);

    fn empty(&self) -> Self::Acc {
        (0, Vec::new())
    }

    fn visit(&self, acc: &mut Self::Acc, _prefix: &[i64], c: &[T], b: &[T], last: &[(i64, i64)]) -> Result<Flow> {
        for &(lo, hi) in last {
            acc.0 += self.pred.count(self.n, c, b, lo, hi, &mut acc.1)?;
        }
        Ok(Flow::Continue)
    }

    fn merge(&self, into: &mut Self::Acc, other: Self::Acc) {
        into.0 += other.0;
    }
}

/// Counts tuples in `[-bound, bound]^m` satisfying `pred`.
pub(crate) fn count_box<T: EngineInt>(engine: &TupleEngine<T>, n: usize, pred: &Predicate<T>, bound: i64) -> Result<u128> {
    let list: Vec<i64> = (-bound..=bound).collect();
    let lists = vec![list; engine.m() - 1];
    let counter = TupleCounter { n, pred };
    let mut acc = counter.empty();
    engine.walk(&lists, &[(-bound, bound)], &counter, &mut acc, true)?;
    Ok(acc.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn windows_cover_exactly_the_near_values() {
        let (l, w) = (12i128, 2i128);
        for c in -15i128..15 {
            for b in [-7i128, -1, 1, 5, 11] {
                let mut got = Vec::new();
                for_each_window(&c, &b, &l, &w, -20, 20, |a, z| {
                    got.extend(a..=z);
                    Ok(())
                })
                .unwrap();
                let want: Vec<i64> = (-20..=20)
                    .filter(|&t| {
                        let r = (c + b * t as i128).rem_euclid(l);
                        r.min(l - r) <= w
                    })
                    .collect();
                assert_eq!(got, want, "c={c} b={b}");
            }
        }
    }

    #[test]
    fn classification_with_error() {
        type P = Predicate<i128>;
        assert_eq!(P::classify(&3, &1, &100, &5), Some(true));
        assert_eq!(P::classify(&9, &1, &100, &5), Some(false));
        assert_eq!(P::classify(&5, &1, &100, &5), None);
        assert_eq!(P::classify(&-50, &0, &100, &5), Some(false));
    }
}
