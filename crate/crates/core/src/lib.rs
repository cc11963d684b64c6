//! Black-box overlap estimation for fidelity certification of continuous-variable and
//! qubit states.

// `!(x > 0.0)` deliberately rejects NaN alongside out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cv_states;
pub mod descriptor;
pub mod dv_states;
pub mod error;
pub mod estimator;
pub mod experiments;
pub mod format;
pub mod quadrature;
pub mod smoothing;

pub use error::{Error, Result};
