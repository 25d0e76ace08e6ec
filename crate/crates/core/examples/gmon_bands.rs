//! Two-mode gmon spectrum, doublon-number bands and their detection after rescaling.

use fqsvt::bosehubbard::{band_integrity, band_labels, grouping_report, GmonModel};

fn main() -> fqsvt::error::Result<()> {
    let model = GmonModel::desk_scale();
    let labels = band_labels(&model);
    for (label, states) in labels.groups() {
        let occ: Vec<Vec<usize>> = states.iter().map(|&i| model.occupations(i)).collect();
        println!("k = {label}: energy {:.1} rad/us, states {occ:?}", labels.energy(states[0]));
    }
    println!("band integrity {:.3}", band_integrity(&model)?);
    let report = grouping_report(&model, 0.3 * model.eta, 0.05)?;
    println!(
        "detected {} bands, {} agree with labels, rescaled gap {:.4}",
        report.detected.len(), report.agreeing, report.delta
    );
    Ok(())
}
