//! The symmetric multilinear form `Γ_f` attached to a form `f`, with
//! `Γ_f(x, .., x) = d! f(x)`.

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::form::{Form, FormSystem};

/// `Γ_f(x^(1), .., x^(d))` by the inclusion–exclusion polarization identity
/// `Σ_{∅≠S⊆{1..d}} (-1)^{d-|S|} f(Σ_{i∈S} x^(i))`.
pub fn polarize(f: &Form, x_list: &[Vec<BigInt>]) -> Result<BigInt> {
    let d = f.degree() as usize;
    if x_list.len() != d {
        return Err(Error::DimensionMismatch { expected: d, found: x_list.len() });
    }
    let n = f.n_vars();
    if let Some(bad) = x_list.iter().find(|x| x.len() != n) {
        return Err(Error::DimensionMismatch { expected: n, found: bad.len() });
    }
    if d >= 24 {
        return Err(Error::InvalidArgument("polarization degree too large".into()));
    }
    let mut total = BigInt::zero();
    let mut point = vec![BigInt::zero(); n];
    for mask in 1u32..(1u32 << d) {
        point.iter_mut().for_each(|p| p.set_zero());
        for (i, x) in x_list.iter().enumerate() {
            if mask & (1 << i) != 0 {
                for (p, xi) in point.iter_mut().zip(x) {
                    *p += xi;
                }
            }
        }
        let value = f.eval_unchecked(&point);
        if (d - mask.count_ones() as usize) % 2 == 0 {
            total += value;
        } else {
            total -= value;
        }
    }
    Ok(total)
}

/// `Γ_i(e_j, x^(2), .., x^(d))` for form index `i` and variable index `j`
/// (both 0-based), `x_list` holding the `d - 1` remaining arguments.
pub fn multilinear_basis_row(sys: &FormSystem, i: usize, j: usize, x_list: &[Vec<BigInt>]) -> Result<BigInt> {
    if i >= sys.r() {
        return Err(Error::InvalidArgument(format!("form index {i} out of range (r = {})", sys.r())));
    }
    let n = sys.n_vars();
    if j >= n {
        return Err(Error::VariableOutOfRange { index: j + 1, n_vars: n });
    }
    let mut args = Vec::with_capacity(x_list.len() + 1);
    let mut e = vec![BigInt::zero(); n];
    e[j] = BigInt::one();
    args.push(e);
    args.extend(x_list.iter().cloned());
    polarize(&sys.forms()[i], &args)
}

/// Coefficient tensor of `Γ_f`: entry `(j_1, .., j_d)` is `∂^d f / ∂x_{j_1}..∂x_{j_d}`,
/// stored row-major with `j_1` slowest.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DerivativeTensor {
    n: usize,
    d: usize,
    entries: Vec<BigInt>,
}

impl DerivativeTensor {
    pub fn new(f: &Form) -> Result<DerivativeTensor> {
        let n = f.n_vars();
        let d = f.degree() as usize;
        let size = n
            .checked_pow(d as u32)
            .filter(|&s| s <= 1 << 24)
            .ok_or_else(|| Error::InvalidArgument(format!("derivative tensor n^d = {n}^{d} too large")))?;
        let mut entries = vec![BigInt::zero(); size];
        let mut idx = vec![0usize; d];
        let mut counts = vec![0u32; n];
        for slot in entries.iter_mut() {
            counts.iter_mut().for_each(|c| *c = 0);
            for &j in &idx {
                counts[j] += 1;
            }
            let c = f.coefficient(&counts);
            if !c.is_zero() {
                let fact: u64 = counts.iter().map(|&k| (1..=k as u64).product::<u64>()).product();
                *slot = c * BigInt::from(fact);
            }
            for pos in (0..d).rev() {
                idx[pos] += 1;
                if idx[pos] < n {
                    break;
                }
                idx[pos] = 0;
            }
        }
        Ok(DerivativeTensor { n, d, entries })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.d
    }

    pub fn entries(&self) -> &[BigInt] {
        &self.entries
    }

    /// `Γ(e_j, x^(2), .., x^(d))` for every `j`, given the `d - 1` arguments.
    pub fn basis_values(&self, x_list: &[&[BigInt]]) -> Vec<BigInt> {
        debug_assert_eq!(x_list.len() + 1, self.d);
        let mut level = self.entries.clone();
        for x in x_list {
            let inner = level.len() / (self.n * self.n);
            let mut next = vec![BigInt::zero(); self.n * inner];
            for j in 0..self.n {
                for (k, xk) in x.iter().enumerate() {
                    if xk.is_zero() {
                        continue;
                    }
                    let base = (j * self.n + k) * inner;
                    for t in 0..inner {
                        let v = &level[base + t];
                        if !v.is_zero() {
                            next[j * inner + t] += v * xk;
                        }
                    }
                }
            }
            level = next;
        }
        level
    }
}
