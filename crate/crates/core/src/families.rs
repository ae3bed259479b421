//! Constructors for the standard example systems.

use num_bigint::BigInt;
use num_traits::One;

use crate::error::{Error, Result};
use crate::form::{Form, FormSystem};

/// Variable index of `y_{j,i}` (1-based `j`, `i`) in [`bilinear_family`].
pub fn bilinear_y_index(r: usize, k: usize, j: usize, i: usize) -> usize {
    k + (j - 1) * r + (i - 1)
}

/// The bilinear system `Q_i(x, y) = Σ_{j=1..k} x_j y_{j,i}`, `1 <= i <= r`, in the
/// `k(r+1)` variables `x_1..x_k` followed by `y_{1,1}, .., y_{1,r}, y_{2,1}, ..`.
///
/// Its Birch locus has dimension `k(r-1) + r - 1` while every pencil member has a
/// singular locus of dimension `k(r-1)`.
pub fn bilinear_family(r: usize, k: usize) -> Result<FormSystem> {
    if r == 0 || k == 0 {
        return Err(Error::InvalidArgument("bilinear family needs r, k >= 1".into()));
    }
    let n = k * (r + 1);
    let forms = (1..=r)
        .map(|i| {
            let terms = (1..=k).map(|j| {
                let mut e = vec![0u32; n];
                e[j - 1] = 1;
                e[bilinear_y_index(r, k, j, i)] = 1;
                (e, BigInt::one())
            });
            Form::new(n, terms)
        })
        .collect::<Result<Vec<_>>>()?;
    FormSystem::new(forms)
}

/// The diagonal form `Σ c_j x_j^d`.
pub fn diagonal(coeffs: &[i64], degree: u32) -> Result<Form> {
    let n = coeffs.len();
    Form::new(
        n,
        coeffs.iter().enumerate().map(|(j, &c)| {
            let mut e = vec![0u32; n];
            e[j] = degree;
            (e, BigInt::from(c))
        }),
    )
}
