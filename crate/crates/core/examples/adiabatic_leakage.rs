//! Leakage out of the ground band under an adiabatic sweep, and its power-law fit in the total time.

use fqsvt::bands::BandStructure;
use fqsvt::baselines::{adiabatic_leakage_scaling, four_level_instance, ScheduleShape};
use fqsvt::numkernel::StateVector;

fn main() -> fqsvt::error::Result<()> {
    let (h0, h) = four_level_instance(0.3, 0.0)?;
    let bands = BandStructure {
        l: 2,
        centers: vec![0.4],
        delta: 0.5,
        bands: vec![vec![0], vec![1, 2, 3]],
    };
    let times = [50.0, 100.0, 200.0];
    let r = adiabatic_leakage_scaling(
        &h0,
        &h,
        &bands,
        0,
        &times,
        ScheduleShape::Quadratic,
        20.0,
        &StateVector::basis(2, 0),
    )?;
    for (t, p) in r.times.iter().zip(&r.leakage) {
        println!("T = {t:>5}  leakage {p:.3e}");
    }
    match r.slope {
        Some(s) => println!("log-log slope {s:.3}"),
        None => println!("leakage below resolution"),
    }
    Ok(())
}
