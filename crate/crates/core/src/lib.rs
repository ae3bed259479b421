//! Systems of integral homogeneous forms: lattice point counts, Weyl sums,
//! the major/minor arc dichotomy, pencil invariants and circle-method
//! predictions.

pub mod arith;
pub mod circle;
pub mod corpus;
pub mod count;
pub mod error;
pub mod families;
pub mod form;
pub mod invariants;
pub mod multilinear;
pub mod phase;
pub mod region;
pub mod weyl;

pub use error::{Error, Result};
pub use num_bigint::BigInt;
pub use num_rational::BigRational;
pub use form::{Form, FormSystem, Monomial, PencilVector};
pub use phase::{Phase, PhaseVector};
pub use region::BoxRegion;
