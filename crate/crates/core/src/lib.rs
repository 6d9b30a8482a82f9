//! Sparse polynomial chaos expansions: candidate bases, sparse regression
//! solvers, basis adaptivity, automatic solver/scheme selection and a
//! benchmark harness.

pub mod adaptivity;
pub mod auto_select;
pub mod cv_error;
pub mod error;
pub mod harness;
pub mod input_model;
pub mod linalg;
pub mod multi_index;
pub mod normal;
pub mod poly_basis;
pub mod sampling;
pub mod solvers;
pub mod surrogate;
pub mod test_models;

pub use error::{PceError, Result};
