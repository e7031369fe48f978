pub mod applications;
pub mod constants;
pub mod densesim;
pub mod error;
pub mod interleave;
pub mod pauli;
pub mod polyapprox;
pub mod qdrift;
pub mod rand_qsvt;
pub mod richardson;
pub mod seed;

pub use error::{Error, Result};
