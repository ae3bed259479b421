//! Fraction-free integer linear algebra.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::arith::primitive;

/// Bareiss row reduction in place; returns the pivot columns.
fn bareiss(a: &mut [Vec<BigInt>], cols: usize) -> Vec<usize> {
    let rows = a.len();
    let mut prev = BigInt::one();
    let mut pivots = Vec::new();
    let mut k = 0;
    for col in 0..cols {
        if k == rows {
            break;
        }
        let Some(pr) = (k..rows).find(|&i| !a[i][col].is_zero()) else {
            continue;
        };
        a.swap(k, pr);
        for i in k + 1..rows {
            let f = a[i][col].clone();
            let piv = a[k][col].clone();
            for j in 0..a[i].len() {
                let v = (&piv * &a[i][j] - &f * &a[k][j]) / &prev;
                a[i][j] = v;
            }
        }
        prev = a[k][col].clone();
        pivots.push(col);
        k += 1;
    }
    pivots
}

/// Rank over ℚ.
pub fn rank(m: &[Vec<BigInt>]) -> usize {
    let cols = m.first().map_or(0, Vec::len);
    let mut a = m.to_vec();
    bareiss(&mut a, cols).len()
}

/// Rank of the `r × c` matrix `m`, and when `rank < r` a primitive
/// `b ≠ 0` with `bᵀ m = 0` (first nonzero entry positive).
pub fn exact_rank_with_certificate(m: &[Vec<BigInt>]) -> (usize, Option<Vec<BigInt>>) {
    let r = m.len();
    let c = m.first().map_or(0, Vec::len);
    let mut a: Vec<Vec<BigInt>> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut v = row.clone();
            v.extend((0..r).map(|k| if k == i { BigInt::one() } else { BigInt::zero() }));
            v
        })
        .collect();
    let rank = bareiss(&mut a, c).len();
    if rank == r {
        return (rank, None);
    }
    let b = primitive(&a[rank][c..]);
    debug_assert!(!b.iter().all(Zero::is_zero));
    (rank, Some(b))
}

/// Determinant of a square matrix.
pub fn det(m: &[Vec<BigInt>]) -> BigInt {
    let n = m.len();
    if n == 0 {
        return BigInt::one();
    }
    let mut a = m.to_vec();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n {
        let Some(pr) = (k..n).find(|&i| !a[i][k].is_zero()) else {
            return BigInt::zero();
        };
        if pr != k {
            a.swap(k, pr);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i][j] = (&a[k][k] * &a[i][j] - &a[i][k] * &a[k][j]) / &prev;
            }
        }
        prev = a[k][k].clone();
    }
    sign * &a[n - 1][n - 1]
}

/// Adjugate: `adj(m)·m = m·adj(m) = det(m)·I`.
pub fn adjugate(m: &[Vec<BigInt>]) -> Vec<Vec<BigInt>> {
    let n = m.len();
    if n == 1 {
        return vec![vec![BigInt::one()]];
    }
    let mut out = vec![vec![BigInt::zero(); n]; n];
    for i in 0..n {
        for j in 0..n {
            // cofactor C_{ji}: delete row j, column i
            let minor: Vec<Vec<BigInt>> = (0..n)
                .filter(|&rr| rr != j)
                .map(|rr| (0..n).filter(|&cc| cc != i).map(|cc| m[rr][cc].clone()).collect())
                .collect();
            let d = det(&minor);
            out[i][j] = if (i + j).is_even() { d } else { -d };
        }
    }
    out
}

pub fn mat_mul(a: &[Vec<BigInt>], b: &[Vec<BigInt>]) -> Vec<Vec<BigInt>> {
    let inner = b.len();
    let cols = b.first().map_or(0, Vec::len);
    a.iter()
        .map(|row| (0..cols).map(|j| (0..inner).map(|k| &row[k] * &b[k][j]).sum()).collect())
        .collect()
}

pub fn transpose(a: &[Vec<BigInt>]) -> Vec<Vec<BigInt>> {
    let cols = a.first().map_or(0, Vec::len);
    (0..cols).map(|j| a.iter().map(|row| row[j].clone()).collect()).collect()
}

/// Incremental independence test for a stream of integer columns of length `r`.
#[derive(Clone, Debug, Default)]
pub(crate) struct ColumnEchelon {
    reduced: Vec<(usize, Vec<BigInt>)>,
}

impl ColumnEchelon {
    pub(crate) fn rank(&self) -> usize {
        self.reduced.len()
    }

    /// Adds `col` if it is independent of the columns kept so far.
    pub(crate) fn insert(&mut self, col: &[BigInt]) -> bool {
        if col.iter().all(Zero::is_zero) {
            return false;
        }
        let mut w = col.to_vec();
        for (p, v) in &self.reduced {
            if w[*p].is_zero() {
                continue;
            }
            let (f, g) = (v[*p].clone(), w[*p].clone());
            for (wi, vi) in w.iter_mut().zip(v) {
                *wi = &f * &*wi - &g * vi;
            }
            let content = w.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
            if content.is_zero() {
                return false;
            }
            if !content.is_one() {
                w.iter_mut().for_each(|x| *x /= &content);
            }
        }
        match w.iter().position(|x| !x.is_zero()) {
            None => false,
            Some(p) => {
                self.reduced.push((p, w));
                true
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::ivec;

    fn mat(rows: &[&[i64]]) -> Vec<Vec<BigInt>> {
        rows.iter().map(|r| ivec(r)).collect()
    }

    #[test]
    fn certificates() {
        assert_eq!(exact_rank_with_certificate(&mat(&[&[2, 4], &[1, 2]])), (1, Some(ivec(&[1, -2]))));
        assert_eq!(exact_rank_with_certificate(&mat(&[&[1, 0], &[0, 1]])), (2, None));
        assert_eq!(exact_rank_with_certificate(&mat(&[&[0, 0, 0], &[0, 0, 0]])), (0, Some(ivec(&[1, 0]))));
        let m = mat(&[&[1, 2, 3], &[4, 5, 6], &[7, 8, 9]]);
        let (r, b) = exact_rank_with_certificate(&m);
        assert_eq!(r, 2);
        let b = b.unwrap();
        for j in 0..3 {
            let s: BigInt = (0..3).map(|i| &b[i] * &m[i][j]).sum();
            assert!(s.is_zero());
        }
        assert_eq!(b, ivec(&[1, -2, 1]));
    }

    #[test]
    fn determinant_and_adjugate() {
        let m = mat(&[&[2, -1, 0], &[1, 3, 4], &[0, 5, -2]]);
        let d = det(&m);
        assert_eq!(d, BigInt::from(-54));
        let adj = adjugate(&m);
        let prod = mat_mul(&adj, &m);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(prod[i][j], if i == j { d.clone() } else { BigInt::zero() });
            }
        }
        assert_eq!(det(&mat(&[&[0, 1], &[1, 0]])), BigInt::from(-1));
        assert_eq!(det(&mat(&[&[1, 2], &[2, 4]])), BigInt::zero());
        assert_eq!(rank(&mat(&[&[0, 0, 1], &[0, 0, 2]])), 1);
    }

    #[test]
    fn echelon_stream() {
        let mut e = ColumnEchelon::default();
        assert!(!e.insert(&ivec(&[0, 0])));
        assert!(e.insert(&ivec(&[2, 4])));
        assert!(!e.insert(&ivec(&[-3, -6])));
        assert!(e.insert(&ivec(&[1, 0])));
        assert_eq!(e.rank(), 2);
        assert!(!e.insert(&ivec(&[7, 9])));
    }
}
