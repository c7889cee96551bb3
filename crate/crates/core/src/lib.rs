//! Reduced-rank adaptive filtering by joint iterative optimization of a
//! projection matrix and a reduced-rank filter, with a DS-CDMA space-time
//! simulator for evaluating it.

pub mod cdma;
pub mod error;
pub mod estimation;
pub mod experiment;
pub mod linalg;
pub mod rls;

pub use error::{Error, Result};
