//! Matrix product state analysis: canonical forms, injectivity, permutation
//! certificates and a gallery of reference states.

pub mod error;
pub mod gallery;
pub mod io;
pub mod mps;
pub mod permlab;
pub mod numkernel;
pub mod random;
pub mod structure;

pub use error::{Error, Result};
