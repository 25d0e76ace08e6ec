//! Synthesize symmetric QSP phases for a Heaviside filter and check the realized polynomial.

use fqsvt::polyapprox::{heaviside_filter, FilterSpec};
use fqsvt::qsp::{extract_pq, synthesize_symmetric, to_circuit};

fn main() -> fqsvt::error::Result<()> {
    let filter = heaviside_filter(&FilterSpec::new(0.5, 0.3, 1e-3)?)?;
    let psi = synthesize_symmetric(&filter.series, 1e-10)?;
    let phi = to_circuit(&psi)?;
    let pair = extract_pq(&psi)?;

    println!("degree {}", psi.degree());
    println!("first phases {:?}", &phi.values()[..4.min(phi.values().len())]);
    let mut worst: f64 = 0.0;
    for i in 0..=200 {
        let x = -1.0 + i as f64 / 100.0;
        worst = worst.max((pair.p_at(x).re - filter.series.eval(x)).abs());
    }
    println!("max |Re P - f| on grid: {worst:.3e}");
    Ok(())
}
