//! Weyl sums and the major arc / pencil degeneracy dichotomy.

mod dichotomy;
mod expsum;
pub mod linalg;
mod psi;

pub use dichotomy::*;
pub use expsum::{exponential_sum, exponential_sum_with, ExpSum, ExpSumMethod};
pub(crate) use expsum::{e, Kahan};
pub use linalg::exact_rank_with_certificate;
pub use psi::{build_psi, psi_eta, scan_psi, ColumnLabel, PsiMatrix, PsiScan, DEFAULT_COLUMN_CAP};
