//! Minimal-degree even Heaviside filters and their certification report.

use fqsvt::polyapprox::{heaviside_filter, FilterSpec};

fn main() -> fqsvt::error::Result<()> {
    println!("{:>6} {:>8} {:>7} {:>6}", "delta", "epsilon", "degree", "pass");
    for delta in [0.4, 0.2, 0.1] {
        for eps in [1e-2, 1e-3] {
            let design = heaviside_filter(&FilterSpec::new(0.5, delta, eps)?)?;
            println!("{delta:>6} {eps:>8.0e} {:>7} {:>6}", design.degree, design.report.pass());
        }
    }
    Ok(())
}
