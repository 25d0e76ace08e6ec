use rand::Rng;
use serde::Serialize;

use super::{
    enumerate_columns, sample_branch, BlockDescriptor, FeedforwardPolicy, InitRule, MeasurementRecord, Step,
};
use crate::bands::{apply_projectors, BandStructure};
use crate::blockenc::{encoded_block, BlockEncoding};
use crate::error::{Error, Result};
use crate::numkernel::random::haar_vector;
use crate::numkernel::{eigh, rng_from_seed, trace_norm, ComplexMatrix, StateVector, C64, ONE};
use crate::polyapprox::{heaviside_filter, heaviside_filter_at_degree, FilterDesign, FilterSpec};
use crate::qsp::{pad_symmetric, synthesize_symmetric, to_circuit, PhaseFactorSet};
use crate::qsvt::{Orientation, QsvtCircuit};

pub const COMPLETENESS_TOL: f64 = 1e-6;

/// `⌈log₂ L⌉`.
pub fn ceil_log2(l: usize) -> usize {
    (usize::BITS - l.saturating_sub(1).leading_zeros()) as usize
}

/// `2·⌈log₂ L⌉·d` queries to `U_H` and `U_H†`.
pub fn feedforward_query_count(l: usize, d: usize) -> usize {
    2 * ceil_log2(l) * d
}

/// `ε̂ / (c·L·log₂ L)`, with `log₂ L` floored at 1.
pub fn per_round_epsilon(global: f64, l: usize, c: f64) -> f64 {
    let log = (l.max(2) as f64).log2();
    global / (c * l as f64 * log)
}

#[derive(Clone, Debug)]
pub struct MultibandOptions {
    /// Filter accuracy `ε` for every round.
    pub epsilon: f64,
    pub synthesis_tol: f64,
    /// Design every filter at this degree instead of its smallest certified one.
    pub degree: Option<usize>,
}

impl MultibandOptions {
    pub fn with_epsilon(epsilon: f64) -> Self {
        MultibandOptions {
            epsilon,
            synthesis_tol: 1e-10,
            degree: None,
        }
    }
}

/// The Algorithm-1 driver: one 1-FQSVT per round, its threshold chosen from earlier band bits.
#[derive(Clone, Debug)]
pub struct MultibandProjector {
    pub bands: BandStructure,
    pub epsilon: f64,
    pub degree: usize,
    pub filters: Vec<FilterDesign>,
    encoding: BlockEncoding,
    circuits: Vec<QsvtCircuit>,
}

fn round_of(k: usize, ell: usize) -> usize {
    ell - k.trailing_zeros() as usize
}

/// One certified filter per threshold, each at its own smallest degree (or the forced one),
/// plus the largest of those degrees.
fn common_filters(bands: &BandStructure, opts: &MultibandOptions, ell: usize) -> Result<(usize, Vec<FilterDesign>)> {
    let filters = bands
        .centers
        .iter()
        .enumerate()
        .map(|(i, &mu)| {
            let spec = FilterSpec::new(mu, bands.delta, opts.epsilon)?;
            match opts.degree {
                Some(d) => heaviside_filter_at_degree(&spec, d),
                None => heaviside_filter(&spec),
            }
            .map_err(|e| Error::Round {
                round: round_of(i + 1, ell),
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let degree = filters.iter().map(|f| f.degree).max().unwrap_or(0);
    Ok((degree, filters))
}

/// Common filter degree shared by the `L − 1` thresholds of `bands`.
pub fn common_degree(bands: &BandStructure, opts: &MultibandOptions) -> Result<usize> {
    bands.validate()?;
    if bands.l < 2 {
        return Ok(0);
    }
    Ok(common_filters(bands, opts, ceil_log2(bands.l))?.0)
}

impl MultibandProjector {
    pub fn new(enc: &BlockEncoding, bands: &BandStructure, opts: &MultibandOptions) -> Result<Self> {
        bands.validate()?;
        if bands.dim() != enc.encoded_dim() {
            return Err(Error::Dimension(format!(
                "band structure covers {} indices, encoding has N = {}",
                bands.dim(),
                enc.encoded_dim()
            )));
        }
        let h = encoded_block(enc).scale_real(enc.alpha());
        bands.check_assumption(&eigh(&h)?.values)?;
        let ell = ceil_log2(bands.l);
        let (degree, filters) = if bands.l > 1 {
            common_filters(bands, opts, ell)?
        } else {
            (0, Vec::new())
        };
        let mut circuits = Vec::with_capacity(2 * filters.len());
        for (i, f) in filters.iter().enumerate() {
            let build = || -> Result<(QsvtCircuit, QsvtCircuit)> {
                let psi = pad_symmetric(&synthesize_symmetric(&f.series, opts.synthesis_tol)?, degree)?;
                let phi = to_circuit(&psi)?;
                let first = QsvtCircuit::new(enc.clone(), phi.clone(), Orientation::Forward)?;
                let second = QsvtCircuit::new(enc.clone(), phi, Orientation::parity_of(degree))?;
                Ok((first, second))
            };
            let (a, b) = build().map_err(|e| Error::Round {
                round: round_of(i + 1, ell),
                source: Box::new(e),
            })?;
            circuits.push(a);
            circuits.push(b);
        }
        Ok(MultibandProjector {
            bands: bands.clone(),
            epsilon: opts.epsilon,
            degree,
            filters,
            encoding: enc.clone(),
            circuits,
        })
    }

    pub fn ell(&self) -> usize {
        ceil_log2(self.bands.l)
    }

    pub fn encoding(&self) -> &BlockEncoding {
        &self.encoding
    }

    /// Circuit phases of the round thresholded at `μ_{k−1}`.
    pub fn phases(&self, k: usize) -> &PhaseFactorSet {
        &self.circuits[2 * (k - 1)].phases
    }

    /// `(i, k)` for the round that follows `record`, per the index arithmetic of Algorithm 1.
    fn round_indices(&self, record: &MeasurementRecord) -> (usize, usize) {
        let ell = self.ell();
        let j = record.len() / 2 + 1;
        let i = record
            .band_bits()
            .iter()
            .take(j - 1)
            .enumerate()
            .map(|(r, &b)| (b as usize) << (ell - r - 1))
            .sum();
        (i, i + (1 << (ell - j)))
    }

    pub fn enumerate(&self, input: &StateVector) -> Result<BranchTree> {
        let x = self.embed(input)?;
        let leaves = enumerate_columns(self, &x)?
            .into_iter()
            .map(|(record, x)| self.leaf(record, StateVector::new(x.column(0))?))
            .collect::<Result<_>>()?;
        Ok(BranchTree {
            l: self.bands.l,
            ell: self.ell(),
            leaves,
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, input: &StateVector, rng: &mut R) -> Result<Leaf> {
        let start = StateVector::new(self.embed(input)?.column(0))?;
        let node = sample_branch(self, &start, rng)?;
        self.leaf(node.record, node.state)
    }

    /// Expected number of block-encoding queries along any completed path.
    pub fn queries_per_path(&self, record: &MeasurementRecord) -> usize {
        let mut prefix = MeasurementRecord::default();
        let mut count = 0;
        for &b in &record.bits {
            if let Some(Step::Block(_)) = self.next(&prefix) {
                count += self.degree;
            }
            prefix = prefix.pushed(b);
        }
        count
    }

    fn embed(&self, input: &StateVector) -> Result<ComplexMatrix> {
        let n = self.encoding.encoded_dim();
        if input.len() != n {
            return Err(Error::Dimension(format!("input length {} vs N = {n}", input.len())));
        }
        let mut x = ComplexMatrix::zeros(2 * self.encoding.dim(), 1);
        for (i, z) in input.amplitudes().iter().enumerate() {
            x[(i, 0)] = *z;
        }
        Ok(x)
    }

    fn leaf(&self, record: MeasurementRecord, state: StateVector) -> Result<Leaf> {
        Ok(Leaf {
            probability: state.norm_sqr(),
            claimed_band: record.claimed_index(),
            failed: record.failures() > 0,
            record,
            state,
        })
    }
}

impl FeedforwardPolicy for MultibandProjector {
    fn circuits(&self) -> &[QsvtCircuit] {
        &self.circuits
    }

    fn next(&self, record: &MeasurementRecord) -> Option<Step> {
        let ell = self.ell();
        if record.len() >= 2 * ell {
            return None;
        }
        let (i, k) = self.round_indices(record);
        if i >= self.bands.l {
            return None;
        }
        if k >= self.bands.l {
            return Some(Step::Forced(0));
        }
        let first = record.len() % 2 == 0;
        Some(Step::Block(BlockDescriptor {
            circuit: 2 * (k - 1) + usize::from(!first),
            init: if first { InitRule::Fresh } else { InitRule::FlipOnLastOutcome },
            expect_clean: !first && record.failures() == 0,
        }))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Leaf {
    pub record: MeasurementRecord,
    #[serde(rename = "prob")]
    pub probability: f64,
    pub claimed_band: usize,
    pub failed: bool,
    #[serde(skip)]
    pub state: StateVector,
}

impl Leaf {
    pub fn system_state(&self, n: usize) -> Vec<C64> {
        self.state.slice(0, n)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BranchTree {
    #[serde(rename = "L")]
    pub l: usize,
    pub ell: usize,
    pub leaves: Vec<Leaf>,
}

impl BranchTree {
    pub fn total_probability(&self) -> f64 {
        self.leaves.iter().map(|l| l.probability).sum()
    }

    pub fn failure_probability(&self) -> f64 {
        self.leaves.iter().filter(|l| l.failed).map(|l| l.probability).sum()
    }

    pub fn success_leaf(&self, band: usize) -> Option<&Leaf> {
        self.leaves.iter().find(|l| !l.failed && l.claimed_band == band)
    }

    /// Largest gap between a node's probability and the sum over its children, over all depths.
    pub fn conservation_residual(&self) -> f64 {
        let depth = self.leaves.iter().map(|l| l.record.len()).max().unwrap_or(0);
        let mut worst = (self.total_probability() - 1.0).abs();
        for cut in (0..depth).rev() {
            use std::collections::BTreeMap;
            let mut parent: BTreeMap<&[u8], f64> = BTreeMap::new();
            let mut child: BTreeMap<&[u8], f64> = BTreeMap::new();
            for l in &self.leaves {
                *parent.entry(&l.record.bits[..cut]).or_default() += l.probability;
                *child.entry(&l.record.bits[..cut + 1]).or_default() += l.probability;
            }
            for (prefix, p) in parent {
                let sum: f64 = child.iter().filter(|(c, _)| c.starts_with(prefix)).map(|(_, q)| q).sum();
                worst = worst.max((p - sum).abs());
            }
        }
        worst
    }
}

/// Leaf map from the system into the full register.
#[derive(Clone, Debug, Serialize)]
pub struct LeafOperator {
    pub record: MeasurementRecord,
    pub claimed_band: usize,
    pub failed: bool,
    pub operator: ComplexMatrix,
}

impl LeafOperator {
    /// `(⟨0|⟨0^m| ⊗ I) K`.
    pub fn system_block(&self) -> ComplexMatrix {
        let n = self.operator.cols();
        self.operator.submatrix(0, 0, n, n)
    }
}

/// All leaf operators of an enumerate run; `Σ K†K = I`.
#[derive(Clone, Debug, Serialize)]
pub struct KrausSet {
    pub n: usize,
    pub leaves: Vec<LeafOperator>,
}

impl KrausSet {
    pub fn from_projectors(projectors: &[ComplexMatrix]) -> Self {
        let n = projectors.first().map_or(0, ComplexMatrix::rows);
        KrausSet {
            n,
            leaves: projectors
                .iter()
                .enumerate()
                .map(|(i, p)| LeafOperator {
                    record: MeasurementRecord::default(),
                    claimed_band: i,
                    failed: false,
                    operator: p.clone(),
                })
                .collect(),
        }
    }

    /// Per leaf and per ancilla basis state, the `N×N` system operator.
    pub fn system_kraus(&self) -> Vec<ComplexMatrix> {
        let n = self.n;
        self.leaves
            .iter()
            .flat_map(|l| (0..l.operator.rows() / n).map(move |a| l.operator.submatrix(a * n, 0, n, n)))
            .collect()
    }

    pub fn completeness_residual(&self) -> f64 {
        let n = self.n;
        let sum = self
            .leaves
            .iter()
            .fold(ComplexMatrix::zeros(n, n), |acc, l| &acc + &l.operator.adjoint().matmul(&l.operator));
        sum.max_abs_diff(&ComplexMatrix::identity(n))
    }

    /// `Tr_anc Σ K ρ K†`.
    pub fn apply(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        let n = self.n;
        self.system_kraus()
            .iter()
            .fold(ComplexMatrix::zeros(n, n), |acc, k| &acc + &k.matmul(rho).matmul(&k.adjoint()))
    }

    pub fn success_operator(&self, band: usize) -> Option<ComplexMatrix> {
        self.leaves
            .iter()
            .find(|l| !l.failed && l.claimed_band == band)
            .map(LeafOperator::system_block)
    }
}

/// Runs the enumerate pipeline on every computational basis state of the system.
pub fn extract_kraus(projector: &MultibandProjector) -> Result<KrausSet> {
    let n = projector.encoding.encoded_dim();
    let mut x = ComplexMatrix::zeros(2 * projector.encoding.dim(), n);
    for i in 0..n {
        x[(i, i)] = ONE;
    }
    let leaves = enumerate_columns(projector, &x)?
        .into_iter()
        .map(|(record, operator)| LeafOperator {
            claimed_band: record.claimed_index(),
            failed: record.failures() > 0,
            record,
            operator,
        })
        .collect();
    let set = KrausSet { n, leaves };
    let residual = set.completeness_residual();
    if residual > COMPLETENESS_TOL {
        return Err(Error::Completeness { residual });
    }
    Ok(set)
}

/// Lower-bound proxy for `‖ℰ_FQSVT − ℰ_proj‖_tr`: the largest output trace distance over the probe
/// states and `samples` Haar-random states.
pub fn channel_distance(
    kraus: &KrausSet,
    exact: &[ComplexMatrix],
    probes: &[Vec<C64>],
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let n = kraus.n;
    if exact.iter().any(|p| p.rows() != n || p.cols() != n) {
        return Err(Error::Dimension("projector size differs from Kraus operators".into()));
    }
    let mut rng = rng_from_seed(seed);
    let randoms = (0..samples).map(|_| haar_vector(n, &mut rng));
    let mut worst: f64 = 0.0;
    for psi in probes.iter().cloned().chain(randoms) {
        if psi.len() != n {
            return Err(Error::Dimension(format!("probe of length {} vs N = {n}", psi.len())));
        }
        let rho = ComplexMatrix::from_fn(n, n, |r, c| psi[r] * psi[c].conj());
        let diff = &kraus.apply(&rho) - &apply_projectors(&rho, exact);
        worst = worst.max(trace_norm(&diff)?);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bands::{detect_bands, exact_projectors};
    use crate::blockenc::dilate_hermitian;
    use crate::numkernel::random::{hermitian_with_spectrum, rng_from_seed};
    use crate::numkernel::{HermitianSpectrum, ZERO};

    struct Instance {
        spec: HermitianSpectrum,
        bands: BandStructure,
        proj: MultibandProjector,
    }

    fn instance(values: &[f64], min_gap: f64, eps: f64, seed: u64) -> Instance {
        let h = hermitian_with_spectrum(values, &mut rng_from_seed(seed));
        let spec = eigh(&h).unwrap();
        let bands = detect_bands(&spec.values, min_gap).unwrap();
        let enc = dilate_hermitian(&h).unwrap();
        let proj = MultibandProjector::new(&enc, &bands, &MultibandOptions::with_epsilon(eps)).unwrap();
        Instance { spec, bands, proj }
    }

    fn uniform(spec: &HermitianSpectrum, idx: &[usize]) -> StateVector {
        let mut v = vec![ZERO; spec.dim()];
        for &i in idx {
            for (a, z) in v.iter_mut().zip(spec.vector(i)) {
                *a += z / (idx.len() as f64).sqrt();
            }
        }
        StateVector::new(v).unwrap()
    }

    #[test]
    fn counting() {
        assert_eq!(feedforward_query_count(1, 50), 0);
        assert_eq!(feedforward_query_count(4, 50), 200);
        assert_eq!(feedforward_query_count(5, 50), 300);
        assert_eq!((1..=9).map(ceil_log2).collect::<Vec<_>>(), vec![0, 1, 2, 2, 3, 3, 3, 3, 4]);
    }

    #[test]
    fn two_bands() {
        let inst = instance(&[0.1, 0.9], 0.5, 0.1, 1);
        assert!((inst.bands.centers[0] - 0.5).abs() < 1e-12);
        let input = uniform(&inst.spec, &[0, 1]);
        let tree = inst.proj.enumerate(&input).unwrap();
        assert_eq!(tree.leaves.len(), 4);
        assert!(tree.conservation_residual() < 1e-10);
        let l0 = tree.success_leaf(0).unwrap();
        let l1 = tree.success_leaf(1).unwrap();
        assert_eq!(l0.record.bits, vec![0, 0]);
        assert_eq!(l1.record.bits, vec![1, 0]);
        assert!((l0.probability - 0.5).abs() < 0.1 && (l1.probability - 0.5).abs() < 0.1);
        let phi0: Vec<C64> = inst.spec.vector(0).iter().map(|z| z / 2f64.sqrt()).collect();
        let phi1: Vec<C64> = inst.spec.vector(1).iter().map(|z| -z / 2f64.sqrt()).collect();
        let d0: f64 = l0.system_state(2).iter().zip(&phi0).map(|(a, b)| (a - b).norm_sqr()).sum();
        let d1: f64 = l1.system_state(2).iter().zip(&phi1).map(|(a, b)| (a - b).norm_sqr()).sum();
        assert!(d0.sqrt() < 0.1 && d1.sqrt() < 0.1);
    }

    #[test]
    fn four_bands_and_kraus() {
        let inst = instance(&[0.05, 0.35, 0.65, 0.95], 0.2, 1e-3, 2);
        let input = uniform(&inst.spec, &[0, 1, 2, 3]);
        let tree = inst.proj.enumerate(&input).unwrap();
        assert_eq!(tree.leaves.len(), 16);
        assert!(tree.conservation_residual() < 1e-10);
        for b in 0..4 {
            let leaf = tree.success_leaf(b).unwrap();
            assert!((leaf.probability - 0.25).abs() < 1e-3);
        }
        let kraus = extract_kraus(&inst.proj).unwrap();
        assert!(kraus.completeness_residual() < 1e-9);
        let exact = exact_projectors(&inst.spec, &inst.bands).unwrap();
        for (b, p) in exact.iter().enumerate() {
            let sign = if (b as u32).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
            let k = kraus.success_operator(b).unwrap();
            assert!(k.max_abs_diff(&p.scale_real(sign)) < 1e-3);
        }
        // branch linearity
        for leaf in &tree.leaves {
            let op = kraus.leaves.iter().find(|l| l.record == leaf.record).unwrap();
            let want = op.operator.mul_vec(input.amplitudes());
            let err = want.iter().zip(leaf.state.amplitudes()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(err < 1e-10);
        }
        let probes: Vec<Vec<C64>> = (0..4).map(|i| inst.spec.vector(i)).collect();
        let dist = channel_distance(&kraus, &exact, &probes, 8, 3).unwrap();
        assert!(dist <= 4.0 * 4.0 * 2.0 * 1e-3, "{dist}");
        assert!(channel_distance(&KrausSet::from_projectors(&exact), &exact, &probes, 4, 1).unwrap() < 1e-12);
    }

    #[test]
    fn three_bands_never_claim_three() {
        let inst = instance(&[0.1, 0.5, 0.9, 0.95], 0.3, 1e-2, 4);
        assert_eq!(inst.bands.l, 3);
        let tree = inst.proj.enumerate(&uniform(&inst.spec, &[0, 1, 2, 3])).unwrap();
        assert!(tree.leaves.iter().all(|l| l.claimed_band < 3));
        assert!(tree.leaves.iter().all(|l| l.record.len() == 4));
        // the upper subtree skips its second round
        assert!(tree.leaves.iter().filter(|l| l.record.bits[0] == 1).all(|l| l.record.bits[2..] == [0, 0]));
        assert!(tree.conservation_residual() < 1e-10);
        assert_eq!(inst.proj.queries_per_path(&MeasurementRecord::new(vec![1, 0, 0, 0])), 2 * inst.proj.degree);
        assert_eq!(inst.proj.queries_per_path(&MeasurementRecord::new(vec![0, 0, 1, 0])), 4 * inst.proj.degree);
    }

    #[test]
    fn band_supported_sampling() {
        let inst = instance(&[0.05, 0.35, 0.65, 0.95], 0.2, 1e-2, 5);
        let input = uniform(&inst.spec, &[2]);
        let mut rng = rng_from_seed(9);
        let hits = (0..200)
            .filter(|_| inst.proj.sample(&input, &mut rng).unwrap().claimed_band == 2)
            .count();
        assert!(hits >= 190);
    }

    #[test]
    fn epsilon_split() {
        assert!((per_round_epsilon(0.08, 4, 4.0) - 0.0025).abs() < 1e-15);
        assert!((per_round_epsilon(0.08, 2, 4.0) - 0.01).abs() < 1e-15);
    }
}
