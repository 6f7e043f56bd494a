pub mod error;
pub mod function_algebra;
pub mod jet;
pub mod quad1d;

pub use error::{Error, Result};
pub mod almost_analytic;
pub mod operator_core;
pub mod hs_calculus;
pub mod seeley;
pub mod smt_harness;
pub mod config;
