//! Query counts of feedforward projection against the random-walk and probabilistic-projection baselines.

use fqsvt::baselines::{prob_projection_depth, random_walk_success, DepthStrategy};
use fqsvt::cli::ladder_bands;
use fqsvt::feedforward::{common_degree, feedforward_query_count, MultibandOptions};
use fqsvt::numkernel::{eigh, ComplexMatrix};

fn main() -> fqsvt::error::Result<()> {
    println!("{:>3} {:>7} {:>8} {:>12} {:>8}", "L", "degree", "queries", "walk succ", "amplify");
    for l in [2usize, 4, 8] {
        let (values, bands) = ladder_bands(l, 0.1)?;
        let d = common_degree(&bands, &MultibandOptions::with_epsilon(1e-2))?;
        let walk = random_walk_success(&bands, &eigh(&ComplexMatrix::from_diagonal(&values))?, 2000, 1)?;
        let depth = prob_projection_depth(&vec![1.0 / l as f64; l], DepthStrategy::Amplify)?;
        println!(
            "{l:>3} {d:>7} {:>8} {:>12.4} {depth:>8.3}",
            feedforward_query_count(l, d),
            walk.success
        );
    }
    Ok(())
}
