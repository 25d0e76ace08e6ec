//! Feedforward runtime: measure-and-reset of the monitoring qubit, outcome-conditioned block
//! selection, the one-step block and the multi-band driver.

mod multiband;

pub use multiband::{
    ceil_log2, channel_distance, common_degree, extract_kraus, feedforward_query_count, per_round_epsilon, BranchTree, KrausSet, Leaf,
    LeafOperator, MultibandOptions, MultibandProjector,
};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::blockenc::BlockEncoding;
use crate::error::{Error, Result};
use crate::numkernel::{rng_from_seed, ComplexMatrix, StateVector, C64, ZERO};
use crate::qsp::PhaseFactorSet;
use crate::qsvt::{embed_input, Orientation, QsvtCircuit};

pub const PURITY_TOL: f64 = 1e-9;

/// Outcome bits in measurement order. In a multi-band run odd positions (1-based) hold band bits
/// and even positions hold success bits.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MeasurementRecord {
    pub bits: Vec<u8>,
}

impl MeasurementRecord {
    pub fn new(bits: Vec<u8>) -> Self {
        MeasurementRecord { bits }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn last(&self) -> Option<u8> {
        self.bits.last().copied()
    }

    pub fn pushed(&self, bit: u8) -> Self {
        let mut bits = self.bits.clone();
        bits.push(bit);
        MeasurementRecord { bits }
    }

    /// `cnt(s)`: ones at even positions.
    pub fn failures(&self) -> usize {
        self.bits.iter().skip(1).step_by(2).filter(|&&b| b == 1).count()
    }

    /// `b_j = s_{2j−1}`.
    pub fn band_bits(&self) -> Vec<u8> {
        self.bits.iter().step_by(2).copied().collect()
    }

    /// `Σ_j b_j 2^{ℓ−j}` with `ℓ` the number of band bits.
    pub fn claimed_index(&self) -> usize {
        self.band_bits().iter().fold(0, |acc, &b| 2 * acc + b as usize)
    }
}

/// One measurement branch: unnormalized full-register state and its probability `‖state‖²`.
#[derive(Clone, Debug)]
pub struct BranchNode {
    pub record: MeasurementRecord,
    pub state: StateVector,
    pub probability: f64,
}

impl BranchNode {
    /// Amplitudes on `|0⟩_monitor |0^m⟩ ⊗ system`.
    pub fn system_state(&self, n: usize) -> Vec<C64> {
        self.state.slice(0, n)
    }
}

/// How branches are produced at each monitoring-qubit measurement.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunMode {
    Enumerate,
    Sample(u64),
}

fn half_norms(x: &ComplexMatrix) -> [f64; 2] {
    let half = x.rows() / 2;
    let mut out = [0.0; 2];
    for r in 0..x.rows() {
        out[(r >= half) as usize] += x.row(r).iter().map(|z| z.norm_sqr()).sum::<f64>();
    }
    out
}

/// Projects the top qubit onto `outcome` and resets it to `|0⟩`.
fn project_reset(x: &ComplexMatrix, outcome: u8) -> ComplexMatrix {
    let half = x.rows() / 2;
    let mut out = ComplexMatrix::zeros(x.rows(), x.cols());
    let src = outcome as usize * half;
    for r in 0..half {
        for c in 0..x.cols() {
            out[(r, c)] = x[(src + r, c)];
        }
    }
    out
}

/// `X` on the (reset) top qubit.
fn flip_top(x: &ComplexMatrix) -> ComplexMatrix {
    let half = x.rows() / 2;
    let mut out = ComplexMatrix::zeros(x.rows(), x.cols());
    for r in 0..half {
        for c in 0..x.cols() {
            out[(r + half, c)] = x[(r, c)];
        }
    }
    out
}

fn column_state(x: &ComplexMatrix) -> Result<StateVector> {
    StateVector::new(x.column(0))
}

/// Measure-and-reset of the monitoring (top) qubit.
pub fn mar_monitoring(state: &StateVector, mode: RunMode) -> Result<Vec<BranchNode>> {
    if state.qubits() == 0 {
        return Err(Error::Dimension("no monitoring qubit in a 0-qubit register".into()));
    }
    let total = state.norm_sqr();
    if total == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let x = ComplexMatrix::from_vec(state.len(), 1, state.amplitudes().to_vec())?;
    let p = half_norms(&x);
    let node = |s: u8| -> Result<BranchNode> {
        Ok(BranchNode {
            record: MeasurementRecord::new(vec![s]),
            state: column_state(&project_reset(&x, s))?,
            probability: p[s as usize],
        })
    };
    match mode {
        RunMode::Enumerate => Ok(vec![node(0)?, node(1)?]),
        RunMode::Sample(seed) => {
            let mut rng = rng_from_seed(seed);
            let s = (rng.random::<f64>() * total >= p[0]) as u8;
            Ok(vec![node(s)?])
        }
    }
}

/// Preparation of the reset monitoring qubit before a block.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitRule {
    Fresh,
    /// `X^{s}` with `s` the most recent outcome.
    FlipOnLastOutcome,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockDescriptor {
    /// Index into the policy's circuit list.
    pub circuit: usize,
    pub init: InitRule,
    /// Assert that outcome 0 leaves the encoding ancillas in `|0^m⟩`.
    pub expect_clean: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Step {
    Block(BlockDescriptor),
    /// Record a bit without running a circuit.
    Forced(u8),
}

/// Deterministic map from the outcome history to the next block; `None` ends the run.
pub trait FeedforwardPolicy {
    fn circuits(&self) -> &[QsvtCircuit];
    fn next(&self, record: &MeasurementRecord) -> Option<Step>;
}

/// Purity of the reduced state on the monitoring and encoding-ancilla qubits, per column.
pub fn ancilla_purity(x: &[C64], system_dim: usize) -> f64 {
    let a = x.len() / system_dim;
    let mut rho = vec![ZERO; a * a];
    for i in 0..a {
        for j in 0..a {
            rho[i * a + j] = (0..system_dim)
                .map(|s| x[i * system_dim + s] * x[j * system_dim + s].conj())
                .sum();
        }
    }
    let tr: f64 = (0..a).map(|i| rho[i * a + i].re).sum();
    if tr == 0.0 {
        return 1.0;
    }
    rho.iter().map(|z| z.norm_sqr()).sum::<f64>() / (tr * tr)
}

fn check_clean(x: &ComplexMatrix, system_dim: usize) -> Result<()> {
    for c in 0..x.cols() {
        let col = x.column(c);
        if col.iter().map(|z| z.norm_sqr()).sum::<f64>() < 1e-20 {
            continue;
        }
        let purity = ancilla_purity(&col, system_dim);
        if purity < 1.0 - PURITY_TOL {
            return Err(Error::AncillaEntangled { purity });
        }
    }
    Ok(())
}

fn apply_block<P: FeedforwardPolicy + ?Sized>(
    policy: &P,
    block: &BlockDescriptor,
    record: &MeasurementRecord,
    x: &ComplexMatrix,
) -> ComplexMatrix {
    let prepared = match (block.init, record.last()) {
        (InitRule::FlipOnLastOutcome, Some(1)) => flip_top(x),
        _ => x.clone(),
    };
    policy.circuits()[block.circuit].matrix().matmul(&prepared)
}

/// Expands every outcome branch. Each column of `input` is propagated through the same
/// branch-linear map, so a full-register identity block yields the leaf operators.
pub fn enumerate_columns<P: FeedforwardPolicy + ?Sized>(
    policy: &P,
    input: &ComplexMatrix,
) -> Result<Vec<(MeasurementRecord, ComplexMatrix)>> {
    let system_dim = policy
        .circuits()
        .first()
        .map(|c| c.encoding.encoded_dim())
        .unwrap_or(1);
    let mut stack = vec![(MeasurementRecord::default(), input.clone())];
    let mut leaves = Vec::new();
    while let Some((record, x)) = stack.pop() {
        match policy.next(&record) {
            None => leaves.push((record, x)),
            Some(Step::Forced(bit)) => stack.push((record.pushed(bit), x)),
            Some(Step::Block(block)) => {
                let y = apply_block(policy, &block, &record, &x);
                for s in [1u8, 0] {
                    let z = project_reset(&y, s);
                    if s == 0 && block.expect_clean {
                        check_clean(&z, system_dim)?;
                    }
                    stack.push((record.pushed(s), z));
                }
            }
        }
    }
    leaves.sort_by(|a, b| a.0.bits.cmp(&b.0.bits));
    Ok(leaves)
}

pub fn enumerate_branches<P: FeedforwardPolicy + ?Sized>(policy: &P, input: &StateVector) -> Result<Vec<BranchNode>> {
    let x = ComplexMatrix::from_vec(input.len(), 1, input.amplitudes().to_vec())?;
    enumerate_columns(policy, &x)?
        .into_iter()
        .map(|(record, x)| {
            let state = column_state(&x)?;
            Ok(BranchNode {
                probability: state.norm_sqr(),
                record,
                state,
            })
        })
        .collect()
}

/// One trajectory; outcomes drawn with their conditional probabilities.
pub fn sample_branch<P: FeedforwardPolicy + ?Sized, R: Rng + ?Sized>(
    policy: &P,
    input: &StateVector,
    rng: &mut R,
) -> Result<BranchNode> {
    let system_dim = policy
        .circuits()
        .first()
        .map(|c| c.encoding.encoded_dim())
        .unwrap_or(1);
    let mut record = MeasurementRecord::default();
    let mut x = ComplexMatrix::from_vec(input.len(), 1, input.amplitudes().to_vec())?;
    while let Some(step) = policy.next(&record) {
        match step {
            Step::Forced(bit) => record = record.pushed(bit),
            Step::Block(block) => {
                let y = apply_block(policy, &block, &record, &x);
                let p = half_norms(&y);
                let total = p[0] + p[1];
                if total == 0.0 {
                    return Err(Error::ZeroNorm);
                }
                let s = (rng.random::<f64>() * total >= p[0]) as u8;
                x = project_reset(&y, s);
                if s == 0 && block.expect_clean {
                    check_clean(&x, system_dim)?;
                }
                record = record.pushed(s);
            }
        }
    }
    let state = column_state(&x)?;
    Ok(BranchNode {
        probability: state.norm_sqr(),
        record,
        state,
    })
}

/// The one-step feedforward block: `𝒬(U_H, Φ)`, measure, `X^{s₁}`, `𝒬(U_H^{par(d)}, Φ)`, measure.
#[derive(Clone, Debug)]
pub struct OneStepPolicy {
    circuits: Vec<QsvtCircuit>,
}

impl OneStepPolicy {
    pub fn new(enc: &BlockEncoding, phi: &PhaseFactorSet) -> Result<Self> {
        if !phi.is_su2_symmetric() {
            return Err(Error::NonSymmetricPhases);
        }
        let first = QsvtCircuit::new(enc.clone(), phi.clone(), Orientation::Forward)?;
        let second = QsvtCircuit::new(enc.clone(), phi.clone(), Orientation::parity_of(phi.degree()))?;
        Ok(OneStepPolicy {
            circuits: vec![first, second],
        })
    }
}

impl FeedforwardPolicy for OneStepPolicy {
    fn circuits(&self) -> &[QsvtCircuit] {
        &self.circuits
    }

    fn next(&self, record: &MeasurementRecord) -> Option<Step> {
        match record.len() {
            0 => Some(Step::Block(BlockDescriptor {
                circuit: 0,
                init: InitRule::Fresh,
                expect_clean: false,
            })),
            1 => Some(Step::Block(BlockDescriptor {
                circuit: 1,
                init: InitRule::FlipOnLastOutcome,
                expect_clean: true,
            })),
            _ => None,
        }
    }
}

/// Runs one 1-FQSVT block on `|0⟩|0^m⟩|φ⟩` with symmetric circuit phases `Φ`.
pub fn run_1fqsvt(enc: &BlockEncoding, phi: &PhaseFactorSet, input: &StateVector, mode: RunMode) -> Result<Vec<BranchNode>> {
    let policy = OneStepPolicy::new(enc, phi)?;
    let start = embed_input(input.amplitudes(), enc)?;
    match mode {
        RunMode::Enumerate => enumerate_branches(&policy, &start),
        RunMode::Sample(seed) => Ok(vec![sample_branch(&policy, &start, &mut rng_from_seed(seed))?]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blockenc::dilate_hermitian;
    use crate::numkernel::random::{haar_vector, random_psd, random_unitary, rng_from_seed};
    use crate::numkernel::matfun;
    use crate::qsp::{extract_pq, to_circuit};
    use std::f64::consts::PI;

    fn get<'a>(nodes: &'a [BranchNode], bits: &[u8]) -> &'a BranchNode {
        nodes.iter().find(|n| n.record.bits == bits).unwrap()
    }

    #[test]
    fn mar_trivial_cases() {
        let chi = StateVector::new(vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8), ZERO, ZERO]).unwrap();
        let b = mar_monitoring(&chi, RunMode::Enumerate).unwrap();
        assert!((b[0].probability - 1.0).abs() < 1e-15 && b[1].probability == 0.0);
        assert!(b[0].state.distance(&chi) < 1e-15);

        let h = 0.5f64.sqrt();
        let s = StateVector::new(vec![C64::new(h, 0.0), ZERO, ZERO, C64::new(h, 0.0)]).unwrap();
        let b = mar_monitoring(&s, RunMode::Enumerate).unwrap();
        assert!((b[0].probability - 0.5).abs() < 1e-15 && (b[1].probability - 0.5).abs() < 1e-15);
        assert!((b[1].state[1] - C64::new(h, 0.0)).norm() < 1e-15);
        assert!(b[1].state[3].norm() == 0.0);
        assert!(matches!(
            mar_monitoring(&StateVector::new(vec![ZERO; 2]).unwrap(), RunMode::Enumerate),
            Err(Error::ZeroNorm)
        ));
    }

    #[test]
    fn mar_sampling_frequency() {
        let s = StateVector::new(vec![C64::new(0.8, 0.0), C64::new(0.0, 0.6)]).unwrap();
        let trials = 10_000;
        let ones = (0..trials)
            .filter(|&seed| mar_monitoring(&s, RunMode::Sample(seed)).unwrap()[0].record.bits[0] == 1)
            .count() as f64;
        let sigma = (trials as f64 * 0.36 * 0.64).sqrt();
        assert!((ones - 0.36 * trials as f64).abs() < 3.0 * sigma);
    }

    #[test]
    fn worked_linear_example() {
        let h = ComplexMatrix::from_diagonal(&[0.6, 0.2]);
        let enc = dilate_hermitian(&h).unwrap();
        let phi = to_circuit(&PhaseFactorSet::su2(vec![0.0, 0.0]).unwrap()).unwrap();
        let nodes = run_1fqsvt(&enc, &phi, &StateVector::basis(1, 0), RunMode::Enumerate).unwrap();
        assert_eq!(nodes.len(), 4);
        assert!((get(&nodes, &[0, 0]).probability - 0.1296).abs() < 1e-12);
        assert!((get(&nodes, &[1, 0]).probability - 0.4096).abs() < 1e-12);
        let fail: f64 = nodes.iter().filter(|n| n.record.bits[1] == 1).map(|n| n.probability).sum();
        assert!((fail - 0.4608).abs() < 1e-12);
        let total: f64 = nodes.iter().map(|n| n.probability).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn chebyshev_two_root() {
        let e = (0.5f64).sqrt();
        let h = ComplexMatrix::from_diagonal(&[e, 0.1]);
        let enc = dilate_hermitian(&h).unwrap();
        let phi = to_circuit(&PhaseFactorSet::su2(vec![0.0; 3]).unwrap()).unwrap();
        let nodes = run_1fqsvt(&enc, &phi, &StateVector::basis(1, 0), RunMode::Enumerate).unwrap();
        assert!(get(&nodes, &[0, 0]).probability < 1e-24);
        let n10 = get(&nodes, &[1, 0]);
        assert!((n10.probability - 1.0).abs() < 1e-12);
        assert!((n10.system_state(2)[0] + 1.0).norm() < 1e-12);
    }

    #[test]
    fn branch_states_match_closed_forms() {
        let mut rng = rng_from_seed(2024);
        for trial in 0..24 {
            let d = 1 + trial % 9;
            let n = [2, 4, 8][trial % 3];
            let half: Vec<f64> = (0..=d / 2).map(|_| rng.random_range(-PI..PI)).collect();
            let psi = PhaseFactorSet::su2((0..=d).map(|j| half[j.min(d - j)]).collect()).unwrap();
            let pair = extract_pq(&psi).unwrap();
            let phi = to_circuit(&psi).unwrap();
            let h = random_psd(n, 0.0, 1.0, &mut rng);
            let f2 = matfun(&h, |x| pair.p_at(x).re.powi(2)).unwrap();
            let input = StateVector::new(haar_vector(n, &mut rng)).unwrap();
            let enc = dilate_hermitian(&h).unwrap();
            let nodes = run_1fqsvt(&enc, &phi, &input, RunMode::Enumerate).unwrap();
            let s00 = get(&nodes, &[0, 0]);
            let s10 = get(&nodes, &[1, 0]);
            let want00 = f2.mul_vec(input.amplitudes());
            let want10: Vec<C64> = want00.iter().zip(input.amplitudes()).map(|(a, b)| a - b).collect();
            let err = |got: &BranchNode, want: &[C64]| {
                let full = got.state.amplitudes();
                let head: f64 = full[..n].iter().zip(want).map(|(a, b)| (a - b).norm_sqr()).sum();
                let tail: f64 = full[n..].iter().map(|z| z.norm_sqr()).sum();
                (head + tail).sqrt()
            };
            assert!(err(s00, &want00) < 1e-9, "d={d}");
            assert!(err(s10, &want10) < 1e-9, "d={d}");
        }
    }

    fn scrambled(h: &ComplexMatrix, rng: &mut crate::numkernel::FqRng) -> BlockEncoding {
        let n = h.rows();
        let base = dilate_hermitian(h).unwrap();
        let l = ComplexMatrix::identity(n).direct_sum(&random_unitary(n, rng));
        let r = ComplexMatrix::identity(n).direct_sum(&random_unitary(n, rng));
        BlockEncoding::new(l.matmul(base.unitary()).matmul(&r), 1, 1.0, n).unwrap()
    }

    #[test]
    fn odd_degree_needs_reflected_adjoint() {
        let mut rng = rng_from_seed(99);
        for d in [1usize, 3, 5, 7] {
            let half: Vec<f64> = (0..=d / 2).map(|_| rng.random_range(-PI..PI)).collect();
            let psi = PhaseFactorSet::su2((0..=d).map(|j| half[j.min(d - j)]).collect()).unwrap();
            let pair = extract_pq(&psi).unwrap();
            let phi = to_circuit(&psi).unwrap();
            let h = random_psd(4, 0.0, 1.0, &mut rng);
            let enc = scrambled(&h, &mut rng);
            let input = StateVector::new(haar_vector(4, &mut rng)).unwrap();
            let nodes = run_1fqsvt(&enc, &phi, &input, RunMode::Enumerate).unwrap();
            let want = matfun(&h, |x| pair.p_at(x).re.powi(2) - 1.0).unwrap().mul_vec(input.amplitudes());
            let got = get(&nodes, &[1, 0]).system_state(4);
            let err = got.iter().zip(&want).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(err < 1e-10, "d={d}: {err}");

            // the unreflected adjoint leaves residue in the (1,0) branch
            let first = QsvtCircuit::new(enc.clone(), phi.clone(), Orientation::Forward).unwrap();
            let plain = QsvtCircuit::new(enc.clone(), phi.clone(), Orientation::PlainAdjoint).unwrap();
            let y = first.apply(&crate::qsvt::embed_input(input.amplitudes(), &enc).unwrap());
            let mut garbage = y.clone();
            for i in 0..8 {
                garbage[i] = ZERO;
            }
            let z = plain.apply(&garbage);
            let err = z.amplitudes()[..4].iter().zip(&want).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(err > 1e-3, "d={d}: {err}");
        }
    }

    #[test]
    fn asymmetric_phases_rejected() {
        let enc = dilate_hermitian(&ComplexMatrix::from_diagonal(&[0.2, 0.4])).unwrap();
        let phi = to_circuit(&PhaseFactorSet::su2(vec![0.1, 0.5, 0.2]).unwrap()).unwrap();
        let r = run_1fqsvt(&enc, &phi, &StateVector::basis(1, 0), RunMode::Enumerate);
        assert!(matches!(r, Err(Error::NonSymmetricPhases)));
    }

    #[test]
    fn record_accounting() {
        let r = MeasurementRecord::new(vec![1, 0, 0, 1, 1, 1]);
        assert_eq!(r.failures(), 2);
        assert_eq!(r.band_bits(), vec![1, 0, 1]);
        assert_eq!(r.claimed_index(), 5);
        assert_eq!(serde_json::to_string(&r).unwrap(), "[1,0,0,1,1,1]");
    }
}
