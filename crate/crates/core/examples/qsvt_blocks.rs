//! Assemble a QSVT circuit from a dilated Hermitian matrix and compare its blocks with the spectral prediction.

use fqsvt::blockenc::dilate_hermitian;
use fqsvt::numkernel::random::random_psd;
use fqsvt::numkernel::rng_from_seed;
use fqsvt::qsp::PhaseFactorSet;
use fqsvt::qsvt::{assemble_full, predicted_blocks, Orientation};

fn main() -> fqsvt::error::Result<()> {
    let mut rng = rng_from_seed(11);
    let h = random_psd(4, 0.0, 1.0, &mut rng);
    let phi = PhaseFactorSet::circuit(vec![0.3, -1.2, 0.7, 2.1, -0.4])?;
    let full = assemble_full(&dilate_hermitian(&h)?, &phi, Orientation::Forward)?;
    let residual = predicted_blocks(&h, &phi)?.max_residual(&full);
    println!("circuit dimension {}x{}", full.rows(), full.cols());
    println!("max block residual {residual:.3e}");
    Ok(())
}
