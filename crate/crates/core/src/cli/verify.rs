//! Reduced-size battery of the exactness and scaling checks behind `fqsvt verify`.

use std::f64::consts::PI;

use rand::Rng;

use crate::bands::{detect_bands, exact_projectors};
use crate::baselines::{prob_projection_depth, random_walk_success, DepthStrategy};
use crate::blockenc::dilate_hermitian;
use crate::bosehubbard::{grouping_report, GmonModel};
use crate::error::Result;
use crate::feedforward::{
    channel_distance, extract_kraus, feedforward_query_count, run_1fqsvt, MultibandOptions,
    MultibandProjector, RunMode,
};
use crate::numkernel::random::{haar_vector, hermitian_with_spectrum, random_psd};
use crate::numkernel::{eigh, matfun, rng_from_seed, ComplexMatrix, FqRng, StateVector, C64};
use crate::polyapprox::{heaviside_filter, FilterSpec};
use crate::qsp::{extract_pq, synthesize_symmetric, to_circuit, PhaseFactorSet};
use crate::qsvt::{actual_garbage, assemble_full, garbage_state, norm_terms, predicted_blocks, Orientation, QsvtCircuit};

use super::ladder_bands;

#[derive(Clone, Debug)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub bound: f64,
}

impl Check {
    pub fn pass(&self) -> bool {
        self.value <= self.bound
    }
}

fn symmetric_su2(d: usize, rng: &mut FqRng) -> PhaseFactorSet {
    let half: Vec<f64> = (0..=d / 2).map(|_| rng.random_range(-PI..PI)).collect();
    PhaseFactorSet::su2((0..=d).map(|j| half[j.min(d - j)]).collect()).expect("finite phases")
}

fn uniform_grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| -1.0 + 2.0 * i as f64 / (n - 1) as f64).collect()
}

pub fn battery(instances: usize, seed: u64) -> Result<Vec<Check>> {
    let mut rng = rng_from_seed(seed);
    let mut checks = Vec::new();

    let grid = uniform_grid(401);
    let mut worst: f64 = 0.0;
    for _ in 0..instances {
        let d = rng.random_range(1..=30);
        let pair = extract_pq(&symmetric_su2(d, &mut rng))?;
        worst = worst.max(pair.normalization_residual(&grid)).max(pair.q_imag_max());
    }
    checks.push(Check {
        name: "qsp_round_trip",
        value: worst,
        bound: 1e-10,
    });

    let mut worst: f64 = 0.0;
    for t in 0..instances {
        let n = [2, 4, 8][t % 3];
        let d = 1 + t % 12;
        let h = random_psd(n, 0.0, 1.0, &mut rng);
        let phi = PhaseFactorSet::circuit((0..=d).map(|_| rng.random_range(-PI..PI)).collect())?;
        let full = assemble_full(&dilate_hermitian(&h)?, &phi, Orientation::Forward)?;
        worst = worst.max(predicted_blocks(&h, &phi)?.max_residual(&full));
    }
    checks.push(Check {
        name: "qsvt_blocks",
        value: worst,
        bound: 1e-9,
    });

    let (mut garbage, mut norms): (f64, f64) = (0.0, 0.0);
    for t in 0..instances {
        let n = [2, 4][t % 2];
        let phi = to_circuit(&symmetric_su2(1 + t % 10, &mut rng))?;
        let h = random_psd(n, 0.0, 1.0, &mut rng);
        let input = StateVector::new(haar_vector(n, &mut rng))?;
        let circuit = QsvtCircuit::new(dilate_hermitian(&h)?, phi.clone(), Orientation::Forward)?;
        garbage = garbage.max(actual_garbage(&circuit, &input)?.distance(&garbage_state(&h, &phi, &input)?));
        norms = norms.max((norm_terms(&h, &phi, &input)?.iter().sum::<f64>() - 1.0).abs());
    }
    checks.push(Check {
        name: "garbage_state",
        value: garbage,
        bound: 1e-9,
    });
    checks.push(Check {
        name: "norm_identity",
        value: norms,
        bound: 1e-10,
    });

    let mut worst: f64 = 0.0;
    let linear = to_circuit(&PhaseFactorSet::su2(vec![0.0, 0.0])?)?;
    let nodes = run_1fqsvt(
        &dilate_hermitian(&ComplexMatrix::from_diagonal(&[0.6, 0.2]))?,
        &linear,
        &StateVector::basis(1, 0),
        RunMode::Enumerate,
    )?;
    let prob = |bits: &[u8]| nodes.iter().filter(|b| b.record.bits == bits).map(|b| b.probability).sum::<f64>();
    worst = worst
        .max((prob(&[0, 0]) - 0.1296).abs())
        .max((prob(&[1, 0]) - 0.4096).abs())
        .max((prob(&[0, 1]) + prob(&[1, 1]) - 0.4608).abs());
    for t in 0..instances {
        let n = [2, 4][t % 2];
        let psi = symmetric_su2(1 + t % 9, &mut rng);
        let pair = extract_pq(&psi)?;
        let h = random_psd(n, 0.0, 1.0, &mut rng);
        let f2 = matfun(&h, |x| pair.p_at(x).re.powi(2))?;
        let input = StateVector::new(haar_vector(n, &mut rng))?;
        let nodes = run_1fqsvt(&dilate_hermitian(&h)?, &to_circuit(&psi)?, &input, RunMode::Enumerate)?;
        let good = f2.mul_vec(input.amplitudes());
        let bad: Vec<C64> = good.iter().zip(input.amplitudes()).map(|(a, b)| a - b).collect();
        for (bits, want) in [([0u8, 0], &good), ([1, 0], &bad)] {
            let node = nodes.iter().find(|b| b.record.bits == bits).expect("branch present");
            let full = node.state.amplitudes();
            let head: f64 = full[..n].iter().zip(want.iter()).map(|(a, b)| (a - b).norm_sqr()).sum();
            let tail: f64 = full[n..].iter().map(|z| z.norm_sqr()).sum();
            worst = worst.max((head + tail).sqrt());
        }
    }
    checks.push(Check {
        name: "one_step_exactness",
        value: worst,
        bound: 1e-9,
    });

    let eps = 1e-3;
    let filter = heaviside_filter(&FilterSpec::new(0.5, 0.3, eps)?)?;
    let phi = to_circuit(&synthesize_symmetric(&filter.series, 1e-10)?)?;
    let h = hermitian_with_spectrum(&[0.1, 0.2, 0.8, 0.9], &mut rng);
    let input = StateVector::new(haar_vector(4, &mut rng))?;
    let nodes = run_1fqsvt(&dilate_hermitian(&h)?, &phi, &input, RunMode::Enumerate)?;
    checks.push(Check {
        name: "failure_probability",
        value: nodes.iter().filter(|b| b.record.bits[1] == 1).map(|b| b.probability).sum(),
        bound: 2.0 * 2f64.sqrt() * eps,
    });

    let eps = 1e-3;
    let h = hermitian_with_spectrum(&[0.05, 0.35, 0.65, 0.95], &mut rng);
    let spec = eigh(&h)?;
    let bands = detect_bands(&spec.values, 0.2)?;
    let proj = MultibandProjector::new(&dilate_hermitian(&h)?, &bands, &MultibandOptions::with_epsilon(eps))?;
    let kraus = extract_kraus(&proj)?;
    let probes: Vec<Vec<C64>> = (0..4).map(|i| spec.vector(i)).collect();
    let dist = channel_distance(&kraus, &exact_projectors(&spec, &bands)?, &probes, 8, seed)?;
    checks.push(Check {
        name: "multiband_channel",
        value: dist,
        bound: 4.0 * 4.0 * 2.0 * eps,
    });
    let expected = feedforward_query_count(4, proj.degree) as f64;
    let worst = kraus
        .leaves
        .iter()
        .map(|l| (proj.queries_per_path(&l.record) as f64 - expected).abs())
        .fold(0.0, f64::max);
    checks.push(Check {
        name: "multiband_queries",
        value: worst,
        bound: 0.0,
    });

    let (values, bands) = ladder_bands(4, 0.2)?;
    let walk = random_walk_success(&bands, &eigh(&ComplexMatrix::from_diagonal(&values))?, 1000, seed)?;
    checks.push(Check {
        name: "random_walk_bound",
        value: walk.success,
        bound: 0.5 + 3.0 * walk.stderr,
    });

    let mut worst: f64 = 0.0;
    for l in [4usize, 16, 64] {
        let depth = prob_projection_depth(&vec![1.0 / l as f64; l], DepthStrategy::Amplify)?;
        worst = worst.max((depth - (l as f64).sqrt()).abs());
    }
    checks.push(Check {
        name: "amplify_depth",
        value: worst,
        bound: 1e-12,
    });

    let model = GmonModel::desk_scale();
    let report = grouping_report(&model, 0.3 * model.eta, 0.05)?;
    checks.push(Check {
        name: "gmon_grouping_mismatch",
        value: (4usize.saturating_sub(report.agreeing)) as f64,
        bound: 0.0,
    });

    Ok(checks)
}
