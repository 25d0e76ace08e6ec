//! One feedforward step on a two-level system: outcome probabilities and post-measurement states.

use fqsvt::blockenc::dilate_hermitian;
use fqsvt::feedforward::{run_1fqsvt, RunMode};
use fqsvt::numkernel::{ComplexMatrix, StateVector};
use fqsvt::qsp::{to_circuit, PhaseFactorSet};

fn main() -> fqsvt::error::Result<()> {
    let h = ComplexMatrix::from_diagonal(&[0.6, 0.2]);
    let phi = to_circuit(&PhaseFactorSet::su2(vec![0.0, 0.0])?)?;
    let input = StateVector::basis(1, 0);
    for node in run_1fqsvt(&dilate_hermitian(&h)?, &phi, &input, RunMode::Enumerate)? {
        let sys = node.system_state(2);
        println!(
            "bits {:?}  prob {:.4}  system [{:.4}, {:.4}]",
            node.record.bits, node.probability, sys[0], sys[1]
        );
    }
    Ok(())
}
