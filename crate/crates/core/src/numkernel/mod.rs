//! Dense complex linear algebra and seeded randomness.

pub mod eigh;
pub mod matrix;
pub mod random;
pub mod state;

pub use eigh::{eigh, matfun, trace_norm, HermitianSpectrum};
pub use matrix::{ComplexMatrix, C64, I, ONE, ZERO};
pub use random::{haar_state, rng_from_seed, trial_rng, FqRng};
pub use state::StateVector;
