//! Energy bands, their spectral projectors and the exact band-dephasing channel.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkernel::{eigh, ComplexMatrix, HermitianSpectrum};

pub const DENSITY_EIGEN_FLOOR: f64 = -1e-10;
const EDGE_SLACK: f64 = 1e-12;

/// `L` bands separated by `L − 1` gaps of half-width at least `Δ/2` around ascending centers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandStructure {
    #[serde(rename = "L")]
    pub l: usize,
    pub centers: Vec<f64>,
    pub delta: f64,
    pub bands: Vec<Vec<usize>>,
}

impl BandStructure {
    /// Bands from given centers by the threshold rules `ℬ₀ = {E < μ₀}`, `ℬ_j = {μ_{j−1} ≤ E < μ_j}`,
    /// `ℬ_{L−1} = {E ≥ μ_{L−2}}`.
    pub fn from_centers(values: &[f64], centers: Vec<f64>, delta: f64) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(Error::Domain(format!("gap width must be positive, got {delta}")));
        }
        if centers.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Domain("band centers must be strictly ascending".into()));
        }
        if centers.iter().any(|&c| !(c > 0.0 && c < 1.0)) {
            return Err(Error::Domain("band centers must lie in (0, 1)".into()));
        }
        let l = centers.len() + 1;
        let mut bands = vec![Vec::new(); l];
        for (i, &e) in values.iter().enumerate() {
            let j = centers.iter().take_while(|&&c| e >= c).count();
            bands[j].push(i);
        }
        Ok(BandStructure {
            l,
            centers,
            delta,
            bands,
        })
    }

    pub fn single(n: usize) -> Self {
        BandStructure {
            l: 1,
            centers: Vec::new(),
            delta: 0.0,
            bands: vec![(0..n).collect()],
        }
    }

    pub fn dim(&self) -> usize {
        self.bands.iter().map(Vec::len).sum()
    }

    pub fn band_of(&self, index: usize) -> Option<usize> {
        self.bands.iter().position(|b| b.contains(&index))
    }

    /// No eigenvalue inside any open window `(μ_j − Δ/2, μ_j + Δ/2)`.
    pub fn check_assumption(&self, values: &[f64]) -> Result<()> {
        for &c in &self.centers {
            for &e in values {
                if (e - c).abs() < self.delta / 2.0 - EDGE_SLACK {
                    return Err(Error::BandAssumption {
                        eigenvalue: e,
                        center: c,
                        delta: self.delta,
                    });
                }
            }
        }
        Ok(())
    }

    /// Structural checks: count, ordering and that the bands partition `[N]`.
    pub fn validate(&self) -> Result<()> {
        if self.l == 0 || self.bands.len() != self.l || self.centers.len() + 1 != self.l {
            return Err(Error::Config(format!(
                "band structure with L = {} has {} centers and {} bands",
                self.l,
                self.centers.len(),
                self.bands.len()
            )));
        }
        if self.centers.windows(2).any(|w| w[0] >= w[1]) || self.centers.iter().any(|&c| !(c > 0.0 && c < 1.0)) {
            return Err(Error::Config("centers must be ascending inside (0, 1)".into()));
        }
        let n = self.dim();
        let mut seen = vec![false; n];
        for &i in self.bands.iter().flatten() {
            if i >= n || seen[i] {
                return Err(Error::Config("bands do not partition the index set".into()));
            }
            seen[i] = true;
        }
        Ok(())
    }
}

fn gaps(values: &[f64]) -> Result<Vec<(usize, f64)>> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("eigenvalue list".into()));
    }
    if values.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Domain("eigenvalues must be ascending".into()));
    }
    if let Some(&v) = values.iter().find(|&&v| !(0.0..=1.0).contains(&v)) {
        return Err(Error::SpectrumOutOfRange { eigenvalue: v });
    }
    Ok(values.windows(2).enumerate().map(|(i, w)| (i, w[1] - w[0])).collect())
}

fn from_selected(values: &[f64], mut selected: Vec<(usize, f64)>) -> BandStructure {
    if selected.is_empty() {
        return BandStructure::single(values.len());
    }
    selected.sort_by_key(|&(i, _)| i);
    let centers = selected.iter().map(|&(i, _)| 0.5 * (values[i] + values[i + 1])).collect();
    let delta = selected.iter().map(|&(_, w)| w).fold(f64::INFINITY, f64::min);
    let mut bands = Vec::with_capacity(selected.len() + 1);
    let mut start = 0;
    for &(i, _) in &selected {
        bands.push((start..=i).collect());
        start = i + 1;
    }
    bands.push((start..values.len()).collect());
    BandStructure {
        l: selected.len() + 1,
        centers,
        delta,
        bands,
    }
}

/// Every eigenvalue-free interval of width `≥ min_gap` becomes a gap.
pub fn detect_bands(values: &[f64], min_gap: f64) -> Result<BandStructure> {
    if !(min_gap > 0.0) {
        return Err(Error::Domain(format!("minGap must be positive, got {min_gap}")));
    }
    let selected = gaps(values)?.into_iter().filter(|&(_, w)| w >= min_gap).collect();
    Ok(from_selected(values, selected))
}

/// The `L − 1` widest gaps; ties (to 1e-12) go to the lower-energy gap.
pub fn detect_bands_by_count(values: &[f64], l: usize) -> Result<BandStructure> {
    if l == 0 {
        return Err(Error::Domain("band count must be at least 1".into()));
    }
    let mut all: Vec<(usize, f64)> = gaps(values)?.into_iter().filter(|&(_, w)| w > 0.0).collect();
    if all.len() < l - 1 {
        return Err(Error::Domain(format!(
            "{} distinct gaps available, {} requested",
            all.len(),
            l - 1
        )));
    }
    let key = |w: f64| (w * 1e12).round();
    all.sort_by(|a, b| key(b.1).total_cmp(&key(a.1)).then(a.0.cmp(&b.0)));
    all.truncate(l - 1);
    Ok(from_selected(values, all))
}

/// `Π_j = Σ_{i∈ℬ_j} |φ_i⟩⟨φ_i|`.
pub fn exact_projectors(spec: &HermitianSpectrum, bands: &BandStructure) -> Result<Vec<ComplexMatrix>> {
    if bands.dim() != spec.dim() {
        return Err(Error::Dimension(format!(
            "band structure covers {} indices, spectrum has {}",
            bands.dim(),
            spec.dim()
        )));
    }
    Ok(bands.bands.iter().map(|b| spec.projector(b)).collect())
}

/// Checks Hermiticity, unit trace and an eigenvalue floor of `−1e-10`.
pub fn validate_density(rho: &ComplexMatrix) -> Result<()> {
    if !rho.is_square() {
        return Err(Error::NotDensity("not square".into()));
    }
    rho.check_hermitian(1e-10)
        .map_err(|e| Error::NotDensity(e.to_string()))?;
    let tr = rho.trace();
    if (tr.re - 1.0).abs() > 1e-10 || tr.im.abs() > 1e-10 {
        return Err(Error::NotDensity(format!("trace {tr}")));
    }
    let min = eigh(rho)?.values[0];
    if min < DENSITY_EIGEN_FLOOR {
        return Err(Error::NotDensity(format!("negative eigenvalue {min:e}")));
    }
    Ok(())
}

/// `Σ_j Π_j ρ Π_j`.
pub fn exact_channel(rho: &ComplexMatrix, projectors: &[ComplexMatrix]) -> Result<ComplexMatrix> {
    validate_density(rho)?;
    let n = rho.rows();
    if projectors.iter().any(|p| p.rows() != n || p.cols() != n) {
        return Err(Error::Dimension("projector size differs from density matrix".into()));
    }
    Ok(apply_projectors(rho, projectors))
}

pub(crate) fn apply_projectors(rho: &ComplexMatrix, projectors: &[ComplexMatrix]) -> ComplexMatrix {
    let n = rho.rows();
    projectors
        .iter()
        .fold(ComplexMatrix::zeros(n, n), |acc, p| &acc + &p.matmul(rho).matmul(p))
}
