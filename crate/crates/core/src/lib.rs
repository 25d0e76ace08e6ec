pub mod bands;
pub mod baselines;
pub mod blockenc;
pub mod bosehubbard;
pub mod cli;
pub mod error;
pub mod feedforward;
pub mod numkernel;
pub mod polyapprox;
pub mod qsp;
pub mod qsvt;

pub use error::{Error, Result};
