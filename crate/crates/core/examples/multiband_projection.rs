//! Project onto four energy bands with feedforward rounds, then compare the channel with exact dephasing.

use fqsvt::bands::{detect_bands, exact_projectors};
use fqsvt::blockenc::dilate_hermitian;
use fqsvt::feedforward::{channel_distance, extract_kraus, MultibandOptions, MultibandProjector};
use fqsvt::numkernel::random::{haar_vector, hermitian_with_spectrum};
use fqsvt::numkernel::{eigh, rng_from_seed, C64, StateVector};

fn main() -> fqsvt::error::Result<()> {
    let mut rng = rng_from_seed(3);
    let h = hermitian_with_spectrum(&[0.05, 0.35, 0.65, 0.95], &mut rng);
    let spec = eigh(&h)?;
    let bands = detect_bands(&spec.values, 0.2)?;
    let proj = MultibandProjector::new(&dilate_hermitian(&h)?, &bands, &MultibandOptions::with_epsilon(1e-3))?;
    println!("L = {}, rounds = {}, filter degree = {}", bands.l, proj.ell(), proj.degree);

    let input = StateVector::new(haar_vector(4, &mut rng))?;
    let tree = proj.enumerate(&input)?;
    for leaf in tree.leaves.iter().filter(|l| l.probability > 1e-6) {
        println!(
            "record {:?} band {} prob {:.6}{}",
            leaf.record.bits,
            leaf.claimed_band,
            leaf.probability,
            if leaf.failed { " (failed)" } else { "" }
        );
    }
    println!("failure probability {:.3e}", tree.failure_probability());

    let kraus = extract_kraus(&proj)?;
    let probes: Vec<Vec<C64>> = (0..4).map(|i| spec.vector(i)).collect();
    let dist = channel_distance(&kraus, &exact_projectors(&spec, &bands)?, &probes, 8, 3)?;
    println!("channel distance proxy {dist:.3e}");
    Ok(())
}
