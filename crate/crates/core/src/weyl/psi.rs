//! The matrix `ψ` with entries `Γ_i(e_j, x^(2), .., x^(d))` over the
//! near-solution tuples, enumerated in a fixed graded order.
//!
//! Tuples are visited by sup-norm shell `k = 0, 1, ..`; inside a shell by the
//! position `p` of the first coordinate of absolute value `k`; coordinates
//! before `p` run over `[-(k-1), k-1]`, coordinate `p` over `{k, -k}`, later
//! ones over `[-k, k]`, each in the order `0, 1, -1, 2, -2, ..`. Every tuple
//! contributes the columns `j = 0, .., n-1`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};

use crate::arith::EngineInt;
use crate::count::{near_setup, Flow, Predicate, Solutions, TupleEngine, TupleVisitor};
use crate::error::{Error, Result};
use crate::form::FormSystem;
use crate::phase::PhaseVector;

use super::linalg::ColumnEchelon;

pub const DEFAULT_COLUMN_CAP: usize = 10_000_000;

/// `(tuple, j)`: the column `Γ_·(e_j, tuple)`; `tuple` is flattened.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ColumnLabel {
    pub tuple: Vec<i64>,
    pub j: usize,
}

/// `r × (columns)` integer matrix, stored by column.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PsiMatrix {
    pub r: usize,
    pub columns: Vec<Vec<BigInt>>,
    pub labels: Vec<ColumnLabel>,
}

impl PsiMatrix {
    pub fn num_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn entry(&self, i: usize, col: usize) -> &BigInt {
        &self.columns[col][i]
    }

    pub fn rows(&self) -> Vec<Vec<BigInt>> {
        (0..self.r).map(|i| self.columns.iter().map(|c| c[i].clone()).collect()).collect()
    }
}

/// `η = d - (d-1)θ`.
pub fn psi_eta(d: u32, theta: &BigRational) -> BigRational {
    let d = BigRational::from_integer(d.into());
    &d - (&d - BigRational::one()) * theta
}

fn zigzag(k: i64) -> Vec<i64> {
    let mut v = vec![0];
    for s in 1..=k {
        v.push(s);
        v.push(-s);
    }
    v
}

fn zigzag_key(t: i64) -> u64 {
    if t > 0 {
        2 * t as u64 - 1
    } else {
        2 * t.unsigned_abs()
    }
}

/// What a graded scan does with each qualifying column.
trait ColumnSink: Send {
    /// Returns `Flow::Stop` to end the scan.
    fn push(&mut self, label: ColumnLabel, col: Vec<BigInt>) -> Result<Flow>;
}

struct GradedVisitor<'a, T, S> {
    n: usize,
    r: usize,
    pred: &'a Predicate<T>,
    _sink: std::marker::PhantomData<fn() -> S>,
}

struct GradedAcc<S> {
    sink: S,
    scratch: Vec<i64>,
    tuples: u64,
}

impl<T: EngineInt, S: ColumnSink> TupleVisitor<T> for GradedVisitor<'_, T, S> {
    type Acc = GradedAcc<S>;

    fn empty(&self) -> Self::Acc {
        unreachable!("graded scans run sequentially with a caller-supplied sink")
    }

    fn visit(&self, acc: &mut Self::Acc, prefix: &[i64], c: &[T], b: &[T], last: &[(i64, i64)]) -> Result<Flow> {
        for &(lo, hi) in last {
            let mut ts: Vec<i64> = match self.pred.solve(self.n, c, b, lo, hi, &mut acc.scratch)? {
                Solutions::All => (lo..=hi).collect(),
                Solutions::Listed => acc.scratch.clone(),
            };
            ts.sort_by_key(|&t| zigzag_key(t));
            for t in ts {
                acc.tuples += 1;
                let tt = T::from_i64(t).unwrap();
                let mut tuple = prefix.to_vec();
                tuple.push(t);
                for j in 0..self.n {
                    let col: Vec<BigInt> = (0..self.r)
                        .map(|i| (c[i * self.n + j].clone() + b[i * self.n + j].clone() * tt.clone()).to_big())
                        .collect();
                    if acc.sink.push(ColumnLabel { tuple: tuple.clone(), j }, col)? == Flow::Stop {
                        return Ok(Flow::Stop);
                    }
                }
            }
        }
        Ok(Flow::Continue)
    }

    fn merge(&self, _into: &mut Self::Acc, _other: Self::Acc) {}
}

fn graded_scan<T: EngineInt, S: ColumnSink>(
    sys: &FormSystem,
    pred: &Predicate<T>,
    bound: i64,
    sink: S,
) -> Result<(S, u64, bool)> {
    let engine = TupleEngine::<T>::new(sys.forms())?;
    let m = engine.m();
    let visitor = GradedVisitor { n: sys.n_vars(), r: sys.r(), pred, _sink: std::marker::PhantomData };
    let mut acc = GradedAcc { sink, scratch: Vec::new(), tuples: 0 };
    // shell 0
    let zeros = vec![vec![0i64]; m - 1];
    if engine.walk(&zeros, &[(0, 0)], &visitor, &mut acc, false)? == Flow::Stop {
        return Ok((acc.sink, acc.tuples, false));
    }
    for k in 1..=bound {
        let inner = zigzag(k - 1);
        let outer = zigzag(k);
        for p in 0..m {
            let mut lists = Vec::with_capacity(m - 1);
            for c in 0..m - 1 {
                lists.push(match c.cmp(&p) {
                    std::cmp::Ordering::Less => inner.clone(),
                    std::cmp::Ordering::Equal => vec![k, -k],
                    std::cmp::Ordering::Greater => outer.clone(),
                });
            }
            let last = if p == m - 1 { vec![(k, k), (-k, -k)] } else { vec![(-k, k)] };
            if engine.walk(&lists, &last, &visitor, &mut acc, false)? == Flow::Stop {
                return Ok((acc.sink, acc.tuples, false));
            }
        }
    }
    Ok((acc.sink, acc.tuples, true))
}

struct Collect {
    cap: usize,
    matrix: PsiMatrix,
}

impl ColumnSink for Collect {
    fn push(&mut self, label: ColumnLabel, col: Vec<BigInt>) -> Result<Flow> {
        if self.matrix.columns.len() >= self.cap {
            return Err(Error::ColumnCap { cap: self.cap });
        }
        self.matrix.columns.push(col);
        self.matrix.labels.push(label);
        Ok(Flow::Continue)
    }
}

/// Result of a streamed scan of `ψ` that keeps only independent columns.
#[derive(Clone, Debug)]
pub struct PsiScan {
    pub rank: usize,
    /// The first independent columns in scan order, with their labels.
    pub pivots: Vec<(ColumnLabel, Vec<BigInt>)>,
    pub columns_seen: u64,
    pub tuples_seen: u64,
    /// False when the scan stopped early at full rank.
    pub complete: bool,
}

struct Stream {
    cap: usize,
    r: usize,
    echelon: ColumnEchelon,
    pivots: Vec<(ColumnLabel, Vec<BigInt>)>,
    seen: u64,
}

impl ColumnSink for Stream {
    fn push(&mut self, label: ColumnLabel, col: Vec<BigInt>) -> Result<Flow> {
        self.seen += 1;
        if self.seen > self.cap as u64 {
            return Err(Error::ColumnCap { cap: self.cap });
        }
        if self.echelon.insert(&col) {
            self.pivots.push((label, col));
            if self.echelon.rank() == self.r {
                return Ok(Flow::Stop);
            }
        }
        Ok(Flow::Continue)
    }
}

fn dispatch<R>(
    sys: &FormSystem,
    alpha: &PhaseVector,
    theta: &BigRational,
    p: &BigRational,
    small: impl FnOnce(&Predicate<i64>, i64) -> Result<R>,
    fast: impl FnOnce(&Predicate<i128>, i64) -> Result<R>,
    big: impl FnOnce(&Predicate<BigInt>, i64) -> Result<R>,
) -> Result<R> {
    if sys.degree() < 2 {
        return Err(Error::InvalidArgument("ψ needs degree >= 2".into()));
    }
    let eta = psi_eta(sys.degree(), theta);
    let s = near_setup(sys, alpha, theta, &eta, p)?;
    let bound = s.bound.to_i64().unwrap();
    if s.small {
        small(&Predicate::near(alpha, &s.dmax, &s.modulus), bound)
    } else if s.fast {
        fast(&Predicate::near(alpha, &s.dmax, &s.modulus), bound)
    } else {
        big(&Predicate::near(alpha, &s.dmax, &s.modulus), bound)
    }
}

/// All columns of `ψ` for `ξ = θ`, `η = d - (d-1)θ`, in graded order.
pub fn build_psi(sys: &FormSystem, alpha: &PhaseVector, theta: &BigRational, p: &BigRational, cap: usize) -> Result<PsiMatrix> {
    let r = sys.r();
    let fresh = || Collect { cap, matrix: PsiMatrix { r, columns: Vec::new(), labels: Vec::new() } };
    dispatch(
        sys,
        alpha,
        theta,
        p,
        |pr, b| Ok(graded_scan(sys, pr, b, fresh())?.0.matrix),
        |pr, b| Ok(graded_scan(sys, pr, b, fresh())?.0.matrix),
        |pr, b| Ok(graded_scan(sys, pr, b, fresh())?.0.matrix),
    )
}

/// Scans `ψ` in graded order, stopping as soon as `r` independent columns
/// have been found.
pub fn scan_psi(sys: &FormSystem, alpha: &PhaseVector, theta: &BigRational, p: &BigRational, cap: usize) -> Result<PsiScan> {
    let r = sys.r();
    let fresh = || Stream { cap, r, echelon: ColumnEchelon::default(), pivots: Vec::new(), seen: 0 };
    let finish = |(s, tuples, complete): (Stream, u64, bool)| PsiScan {
        rank: s.echelon.rank(),
        pivots: s.pivots,
        columns_seen: s.seen,
        tuples_seen: tuples,
        complete,
    };
    dispatch(
        sys,
        alpha,
        theta,
        p,
        |pr, b| Ok(finish(graded_scan(sys, pr, b, fresh())?)),
        |pr, b| Ok(finish(graded_scan(sys, pr, b, fresh())?)),
        |pr, b| Ok(finish(graded_scan(sys, pr, b, fresh())?)),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{ivec, rat};
    use crate::count::count_weyl_near_solutions;
    use crate::multilinear::multilinear_basis_row;

    #[test]
    fn third_phase_on_a_square() {
        let sys = FormSystem::parse("x1^2", 1).unwrap();
        let alpha = PhaseVector::exact(vec![rat(1, 3)]);
        let psi = build_psi(&sys, &alpha, &rat(1, 1), &rat(10, 1), 100).unwrap();
        assert_eq!(psi.rows(), vec![ivec(&[0, 6, -6, 12, -12, 18, -18])]);
        let tuples: Vec<i64> = psi.labels.iter().map(|l| l.tuple[0]).collect();
        assert_eq!(tuples, vec![0, 3, -3, 6, -6, 9, -9]);
    }

    #[test]
    fn graded_order_covers_the_count_and_matches_entries() {
        let sys = FormSystem::parse("x1^2 - x2*x3; x1*x2 + x3^2", 3).unwrap();
        let alpha = PhaseVector::exact(vec![rat(1, 2), rat(2, 5)]);
        let theta = rat(1, 2);
        let p = rat(36, 1);
        let psi = build_psi(&sys, &alpha, &theta, &p, 1 << 20).unwrap();
        let count = count_weyl_near_solutions(&sys, &alpha, &theta, &psi_eta(2, &theta), &p).unwrap();
        assert_eq!(BigInt::from(psi.num_columns() / 3), count);
        let mut seen = std::collections::HashSet::new();
        let mut prev_norm = 0;
        for (col, label) in psi.columns.iter().zip(&psi.labels) {
            assert!(seen.insert(label.clone()));
            let norm = label.tuple.iter().map(|x| x.abs()).max().unwrap();
            assert!(norm >= prev_norm);
            prev_norm = norm;
            let x: Vec<BigInt> = label.tuple.iter().map(|&v| BigInt::from(v)).collect();
            for i in 0..2 {
                assert_eq!(col[i], multilinear_basis_row(&sys, i, label.j, &[x.clone()]).unwrap());
            }
        }
    }

    #[test]
    fn duplicate_forms_give_equal_rows() {
        let sys = FormSystem::parse("x1*x2 + x2^2; x1*x2 + x2^2", 2).unwrap();
        let alpha = PhaseVector::exact(vec![rat(1, 7), rat(3, 7)]);
        let psi = build_psi(&sys, &alpha, &rat(1, 1), &rat(8, 1), 1 << 16).unwrap();
        let rows = psi.rows();
        assert_eq!(rows[0], rows[1]);
    }

    #[test]
    fn column_cap_is_enforced() {
        let sys = FormSystem::parse("x1^2 + x2^2", 2).unwrap();
        let err = build_psi(&sys, &PhaseVector::zero(1), &rat(1, 1), &rat(10, 1), 50).unwrap_err();
        assert_eq!(err, Error::ColumnCap { cap: 50 });
    }

    #[test]
    fn scan_stops_at_full_rank() {
        let sys = FormSystem::parse("x1^2 + x2^2 - x3^2", 3).unwrap();
        let alpha = PhaseVector::exact(vec![rat(2, 7)]);
        let s = scan_psi(&sys, &alpha, &rat(1, 1), &rat(50, 1), 1000).unwrap();
        assert_eq!(s.rank, 1);
        assert!(!s.complete);
        assert_eq!(s.pivots.len(), 1);
    }
}
