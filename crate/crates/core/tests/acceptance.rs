use std::f64::consts::PI;
use std::path::Path;

use rand::Rng;

use fqsvt::bands::{detect_bands, exact_projectors, BandStructure};
use fqsvt::baselines::{
    adiabatic_leakage_scaling, four_level_instance, linear_fit, prob_projection_depth, random_walk_success,
    DepthStrategy, ScheduleShape,
};
use fqsvt::blockenc::dilate_hermitian;
use fqsvt::bosehubbard::{band_labels, grouping_report, GmonModel, CONTROL_LIMIT};
use fqsvt::cli::{execute, Command};
use fqsvt::feedforward::{
    ceil_log2, channel_distance, extract_kraus, feedforward_query_count, run_1fqsvt, FeedforwardPolicy, MeasurementRecord,
    MultibandOptions, MultibandProjector, RunMode, Step,
};
use fqsvt::numkernel::random::{haar_vector, hermitian_with_spectrum, random_psd};
use fqsvt::numkernel::{eigh, matfun, rng_from_seed, ComplexMatrix, FqRng, StateVector, C64};
use fqsvt::polyapprox::{heaviside_filter, FilterSpec};
use fqsvt::qsp::{extract_pq, qsp_unitary, synthesize_symmetric, to_circuit, to_su2, PhaseFactorSet};
use fqsvt::qsvt::{
    actual_garbage, assemble_full, garbage_state, norm_terms, predicted_blocks, Orientation, QsvtCircuit,
};

fn report(id: u32, name: &str, pass: bool, detail: String) {
    println!("[{}] criterion {id:>2} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {id} ({name}) failed: {detail}");
}

fn symmetric_su2(d: usize, rng: &mut FqRng) -> PhaseFactorSet {
    let half: Vec<f64> = (0..=d / 2).map(|_| rng.random_range(-PI..PI)).collect();
    PhaseFactorSet::su2((0..=d).map(|j| half[j.min(d - j)]).collect()).unwrap()
}

fn uniform_grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| -1.0 + 2.0 * i as f64 / (n - 1) as f64).collect()
}

/// `V diag(g(λ)) V†` straight from an eigendecomposition.
fn spectral(h: &ComplexMatrix, g: impl Fn(f64) -> C64) -> ComplexMatrix {
    let spec = eigh(h).unwrap();
    let n = spec.dim();
    let mut out = ComplexMatrix::zeros(n, n);
    for k in 0..n {
        let v = spec.vector(k);
        let gk = g(spec.values[k]);
        for r in 0..n {
            for c in 0..n {
                out[(r, c)] += gk * v[r] * v[c].conj();
            }
        }
    }
    out
}

fn distance(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}

#[test]
fn c01_qsp_round_trip() {
    let mut rng = rng_from_seed(101);
    let grid = uniform_grid(401);
    let (mut norm, mut imag, mut direct): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for _ in 0..200 {
        let d = rng.random_range(1..=30);
        let psi = symmetric_su2(d, &mut rng);
        let pair = extract_pq(&psi).unwrap();
        norm = norm.max(pair.normalization_residual(&grid));
        imag = imag.max(pair.q_imag_max());
        for &x in grid.iter().step_by(40) {
            direct = direct.max((qsp_unitary(x, &psi).unwrap().0[0][0] - pair.p_at(x)).norm());
        }
    }
    let pass = norm <= 1e-10 && imag <= 1e-10 && direct <= 1e-10;
    report(
        1,
        "QSP round trip",
        pass,
        format!("normalization {norm:.2e}, Im Q {imag:.2e}, P vs SU(2) product {direct:.2e} (tol 1e-10)"),
    );
}

#[test]
fn c02_comprehensive_blocks() {
    let mut rng = rng_from_seed(202);
    let (mut worst, mut oracle): (f64, f64) = (0.0, 0.0);
    let mut parities = [0usize; 2];
    for t in 0..50 {
        let n = [2, 4, 8][t % 3];
        let d = 1 + t % 12;
        parities[d % 2] += 1;
        let h = random_psd(n, 0.0, 1.0, &mut rng);
        let phi = PhaseFactorSet::circuit((0..=d).map(|_| rng.random_range(-PI..PI)).collect()).unwrap();
        let full = assemble_full(&dilate_hermitian(&h).unwrap(), &phi, Orientation::Forward).unwrap();
        worst = worst.max(predicted_blocks(&h, &phi).unwrap().max_residual(&full));
        let psi = to_su2(&phi).unwrap();
        let f = spectral(&h, |x| C64::new(qsp_unitary(x, &psi).unwrap().0[0][0].re, 0.0));
        oracle = oracle.max(full.submatrix(0, 0, n, n).max_abs_diff(&f));
    }
    let pass = worst <= 1e-9 && oracle <= 1e-9 && parities[0] > 0 && parities[1] > 0;
    report(
        2,
        "comprehensive QSVT blocks",
        pass,
        format!("max block residual {worst:.2e}, top-left vs spectral oracle {oracle:.2e} (tol 1e-9)"),
    );
}

#[test]
fn c03_garbage_state() {
    let mut rng = rng_from_seed(303);
    let (mut garbage, mut norms): (f64, f64) = (0.0, 0.0);
    for t in 0..60 {
        let n = [2, 4, 8][t % 3];
        let psi = symmetric_su2(1 + t % 14, &mut rng);
        let phi = to_circuit(&psi).unwrap();
        let h = random_psd(n, 0.0, 1.0, &mut rng);
        let input = StateVector::new(haar_vector(n, &mut rng)).unwrap();
        let circuit = QsvtCircuit::new(dilate_hermitian(&h).unwrap(), phi.clone(), Orientation::Forward).unwrap();
        let got = actual_garbage(&circuit, &input).unwrap();
        garbage = garbage.max(got.distance(&garbage_state(&h, &phi, &input).unwrap()));
        let terms = norm_terms(&h, &phi, &input).unwrap();
        norms = norms.max((terms.iter().sum::<f64>() - 1.0).abs());
        // the garbage norm must carry the two sine terms
        garbage = garbage.max((got.norm_sqr() - terms[1] - terms[2]).abs());
    }
    let pass = garbage <= 1e-9 && norms <= 1e-10;
    report(
        3,
        "garbage state",
        pass,
        format!("garbage deviation {garbage:.2e} (tol 1e-9), norm identity {norms:.2e} (tol 1e-10)"),
    );
}

#[test]
fn c04_one_step_exactness() {
    let h = ComplexMatrix::from_diagonal(&[0.6, 0.2]);
    let linear = to_circuit(&PhaseFactorSet::su2(vec![0.0, 0.0]).unwrap()).unwrap();
    let nodes = run_1fqsvt(&dilate_hermitian(&h).unwrap(), &linear, &StateVector::basis(1, 0), RunMode::Enumerate).unwrap();
    let prob = |f: &dyn Fn(&[u8]) -> bool| nodes.iter().filter(|b| f(&b.record.bits)).map(|b| b.probability).sum::<f64>();
    let p = [prob(&|b| b == [0, 0]), prob(&|b| b == [1, 0]), prob(&|b| b[1] == 1)];
    let worked = (p[0] - 0.1296).abs().max((p[1] - 0.4096).abs()).max((p[2] - 0.4608).abs());

    let mut rng = rng_from_seed(404);
    let mut worst: f64 = 0.0;
    for t in 0..200 {
        let n = [2, 4, 8][t % 3];
        let psi = symmetric_su2(1 + t % 12, &mut rng);
        let h = random_psd(n, 0.0, 1.0, &mut rng);
        let f2 = matfun(&h, |x| qsp_unitary(x, &psi).unwrap().0[0][0].re.powi(2)).unwrap();
        let input = StateVector::new(haar_vector(n, &mut rng)).unwrap();
        let nodes = run_1fqsvt(&dilate_hermitian(&h).unwrap(), &to_circuit(&psi).unwrap(), &input, RunMode::Enumerate).unwrap();
        let good = f2.mul_vec(input.amplitudes());
        let bad: Vec<C64> = good.iter().zip(input.amplitudes()).map(|(a, b)| a - b).collect();
        for (bits, want) in [([0u8, 0], &good), ([1, 0], &bad)] {
            let node = nodes.iter().find(|b| b.record.bits == bits).unwrap();
            let mut padded = want.clone();
            padded.resize(node.state.len(), C64::new(0.0, 0.0));
            worst = worst.max(distance(node.state.amplitudes(), &padded));
        }
    }
    let pass = worst <= 1e-9 && worked <= 1e-9;
    report(
        4,
        "one-step feedforward exactness",
        pass,
        format!(
            "branch deviation {worst:.2e} over 200 instances; worked example p = {:.6}/{:.6}/{:.6} (dev {worked:.1e}, tol 1e-9)",
            p[0], p[1], p[2]
        ),
    );
}

#[test]
fn c05_failure_probability() {
    let eps = 1e-3;
    let mut rng = rng_from_seed(505);
    let mut worst: f64 = 0.0;
    for (mu, delta, values) in [
        (0.5, 0.3, vec![0.1, 0.2, 0.8, 0.9]),
        (0.4, 0.2, vec![0.05, 0.25, 0.55, 0.7]),
        (0.6, 0.1, vec![0.3, 0.5, 0.7, 0.95]),
    ] {
        let filter = heaviside_filter(&FilterSpec::new(mu, delta, eps).unwrap()).unwrap();
        let phi = to_circuit(&synthesize_symmetric(&filter.series, 1e-10).unwrap()).unwrap();
        let enc = dilate_hermitian(&hermitian_with_spectrum(&values, &mut rng)).unwrap();
        for _ in 0..5 {
            let input = StateVector::new(haar_vector(4, &mut rng)).unwrap();
            let nodes = run_1fqsvt(&enc, &phi, &input, RunMode::Enumerate).unwrap();
            worst = worst.max(nodes.iter().filter(|b| b.record.bits[1] == 1).map(|b| b.probability).sum());
        }
    }
    let bound = 2.0 * 2f64.sqrt() * eps;
    report(5, "failure probability", worst <= bound, format!("max P(s2 = 1) = {worst:.3e} (bound {bound:.3e})"));
}

/// Queries along `record`, counted from the circuits the policy actually runs.
fn path_queries(proj: &MultibandProjector, record: &MeasurementRecord) -> usize {
    let mut prefix = MeasurementRecord::default();
    let mut total = 0;
    for &b in &record.bits {
        if let Some(Step::Block(desc)) = proj.next(&prefix) {
            total += proj.circuits()[desc.circuit].degree();
        }
        prefix = prefix.pushed(b);
    }
    total
}

fn fit(x: &[f64], cols: &[Vec<f64>]) -> Vec<f64> {
    // least squares for y ≈ c₀ + Σ c_k·col_k via normal equations
    let k = cols.len() + 1;
    let row = |i: usize| -> Vec<f64> { std::iter::once(1.0).chain(cols.iter().map(|c| c[i])).collect() };
    let mut a = vec![vec![0.0; k + 1]; k];
    for i in 0..x.len() {
        let r = row(i);
        for p in 0..k {
            for q in 0..k {
                a[p][q] += r[p] * r[q];
            }
            a[p][k] += r[p] * x[i];
        }
    }
    for p in 0..k {
        let piv = a[p][p];
        for q in p..=k {
            a[p][q] /= piv;
        }
        for r in 0..k {
            if r != p {
                let f = a[r][p];
                for q in p..=k {
                    a[r][q] -= f * a[p][q];
                }
            }
        }
    }
    a.iter().map(|r| r[k]).collect()
}

#[test]
fn c06_multiband_projection() {
    let eps = 1e-3;
    let mut rng = rng_from_seed(606);
    let mut lines = Vec::new();
    let mut pass = true;
    for l in [2usize, 4, 8] {
        let values: Vec<f64> = (0..l).map(|k| (k as f64 + 0.5) / l as f64).collect();
        let h = hermitian_with_spectrum(&values, &mut rng);
        let spec = eigh(&h).unwrap();
        let bands = detect_bands(&spec.values, 0.5 / l as f64).unwrap();
        assert_eq!(bands.l, l);
        let proj = MultibandProjector::new(&dilate_hermitian(&h).unwrap(), &bands, &MultibandOptions::with_epsilon(eps)).unwrap();
        let kraus = extract_kraus(&proj).unwrap();
        let exact = exact_projectors(&spec, &bands).unwrap();
        let probes: Vec<Vec<C64>> = (0..l).map(|i| spec.vector(i)).collect();
        let dist = channel_distance(&kraus, &exact, &probes, 16, 7).unwrap();
        let bound = 4.0 * l as f64 * (l as f64).log2() * eps;
        let expected = feedforward_query_count(l, proj.degree);
        let exact_count = kraus.leaves.iter().all(|leaf| path_queries(&proj, &leaf.record) == expected);
        pass &= dist <= bound && exact_count;
        lines.push(format!("L={l}: proxy {dist:.2e} ≤ {bound:.1e}, queries {expected} exact {exact_count}"));
    }

    let deltas = [0.4, 0.2, 0.1, 0.05];
    let epsilons = [1e-2, 1e-3, 1e-4];
    let (mut ld, mut lde, mut le) = (Vec::new(), Vec::new(), Vec::new());
    for &delta in &deltas {
        for &e in &epsilons {
            let degree = heaviside_filter(&FilterSpec::new(0.5, delta, e).unwrap()).unwrap().degree;
            ld.push((degree as f64).ln());
            lde.push(f64::ln(delta));
            le.push((1.0 / e).ln().ln());
        }
    }
    let coef = fit(&ld, &[lde, le]);
    let (slope_delta, slope_eps) = (coef[1], coef[2]);
    pass &= (slope_delta + 1.0).abs() <= 0.15 && slope_eps <= 1.2;
    lines.push(format!("degree slopes: {slope_delta:.3} vs Δ (−1 ± 0.15), {slope_eps:.3} vs log(1/ε) (≤ 1.2)"));
    report(6, "multiband projection", pass, lines.join("; "));
}

fn run_cli(command: Command, config: &str, seed: u64, dir: &Path) -> fqsvt::cli::Report {
    let path = dir.join("config.json");
    std::fs::write(&path, config).unwrap();
    execute(command, &path, seed, &dir.join("out")).unwrap_or_else(|e| panic!("{e}"))
}

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn c07_random_walk_bound() {
    let dir = tempfile::tempdir().unwrap();
    let config = r#"{"ls": [2, 4, 8, 16], "delta": 0.05, "epsilon": 1e-3, "walk_trials": 10000}"#;
    run_cli(Command::Baselines, config, 7, dir.path());
    let rows = read_csv(&dir.path().join("out/baselines.csv"));
    let mut pass = rows.len() == 4;
    let mut lines = Vec::new();
    for row in &rows {
        let l: usize = row[0].parse().unwrap();
        let degree: usize = row[1].parse().unwrap();
        let queries: usize = row[2].parse().unwrap();
        let success: f64 = row[3].parse().unwrap();
        let stderr: f64 = row[4].parse().unwrap();
        let bound = 2.0 / l as f64 + 3.0 * stderr;
        // feedforward grows as 2d·log₂L; the walk needs about L/2 attempts of comparable depth
        pass &= success <= bound && queries == 2 * ceil_log2(l) * degree;
        lines.push(format!("L={l}: walk {success:.4} ≤ {bound:.4}, feedforward {queries} (d = {degree})"));
    }

    // an independent run of the walk on an explicit eigenbasis
    let values = vec![0.125, 0.375, 0.625, 0.875];
    let bands = BandStructure::from_centers(&values, vec![0.25, 0.5, 0.75], 0.25).unwrap();
    let h = hermitian_with_spectrum(&values, &mut rng_from_seed(9));
    let walk = random_walk_success(&bands, &eigh(&h).unwrap(), 10_000, 11).unwrap();
    pass &= walk.success <= 0.5 + 3.0 * walk.stderr;
    lines.push(format!("rotated L=4: {:.4}", walk.success));
    report(7, "random-walk bound", pass, lines.join("; "));
}

#[test]
fn c08_amplify_depth() {
    let mut worst: f64 = 0.0;
    for l in [4usize, 16, 64] {
        let depth = prob_projection_depth(&vec![1.0 / l as f64; l], DepthStrategy::Amplify).unwrap();
        worst = worst.max((depth - (l as f64).sqrt()).abs());
    }
    report(8, "amplified depth", worst <= 1e-12, format!("max |depth − √L| = {worst:.1e}"));
}

#[test]
fn c09_adiabatic_leakage() {
    let (h0, h) = four_level_instance(0.3, 0.0).unwrap();
    let bands = BandStructure {
        l: 2,
        centers: vec![0.4],
        delta: 0.5,
        bands: vec![vec![0], vec![1, 2, 3]],
    };
    let times = [50.0, 100.0, 200.0, 400.0];
    let r = adiabatic_leakage_scaling(
        &h0,
        &h,
        &bands,
        0,
        &times,
        ScheduleShape::Quadratic,
        20.0,
        &StateVector::basis(2, 0),
    )
    .unwrap();
    let slope = r.slope.unwrap_or(f64::NAN);
    let lx: Vec<f64> = times.iter().map(|t: &f64| t.ln()).collect();
    let ly: Vec<f64> = r.leakage.iter().map(|v| v.ln()).collect();
    let (_, check, _) = linear_fit(&lx, &ly);
    let pass = (slope + 1.0).abs() <= 0.2 && (check - slope).abs() < 1e-12;
    report(
        9,
        "adiabatic leakage scaling",
        pass,
        format!("slope {slope:.3} (−1 ± 0.2), leakage {:?}", r.leakage.iter().map(|v| format!("{v:.2e}")).collect::<Vec<_>>()),
    );
}

#[test]
fn c10_gmon_bands() {
    let model = GmonModel::desk_scale();
    let labels = band_labels(&model);
    let listing: [&[[usize; 2]]; 4] = [
        &[[0, 0], [0, 1], [1, 0], [1, 1]],
        &[[0, 2], [2, 0], [2, 1], [1, 2]],
        &[[2, 2]],
        &[[0, 3], [3, 0], [3, 1], [1, 3]],
    ];
    let mut pass = true;
    for (band, members) in listing.iter().enumerate() {
        let mut want: Vec<usize> = members.iter().map(|o| model.index_of(o)).collect();
        want.sort();
        let got: Vec<usize> = (0..model.dim()).filter(|&i| labels.labels[i] == band).collect();
        pass &= got == want;
    }
    let listed = pass;

    let c = CONTROL_LIMIT;
    let strong = GmonModel {
        edges: vec![(0, 1, c)],
        delta: vec![c, -c],
        f: vec![c, c],
        ..model.clone()
    };
    let mut agreeing = Vec::new();
    for m in [model.clone(), strong.clone(), strong.with_control_noise(5), model.with_control_noise(6)] {
        let r = grouping_report(&m, 0.3 * m.eta, 0.05).unwrap();
        agreeing.push(r.agreeing);
        pass &= r.agreeing >= 4;
    }

    let dir = tempfile::tempdir().unwrap();
    let config = format!(
        r#"{{"model": {{"gmon": {{"model": {}, "margin": 0.05}}}}, "bands": {{"min_gap": 0.06}},
            "epsilon": 1e-3, "mode": "sample", "input": "haar", "trials": 1000}}"#,
        serde_json::to_string(&model).unwrap()
    );
    let out = run_cli(Command::Project, &config, 7, dir.path());
    let rows = read_csv(&dir.path().join("out/histogram.csv"));
    let worst_z = rows.iter().map(|r| r[5].parse::<f64>().unwrap().abs()).fold(0.0, f64::max);
    let total: usize = rows.iter().map(|r| r[1].parse::<usize>().unwrap()).sum();
    pass &= out.passed && worst_z <= 3.0 && total == 1000 && rows.len() == 6;
    report(
        10,
        "gmon band projection",
        pass,
        format!("listing reproduced {listed}, leading bands detected {agreeing:?}, histogram worst |z| = {worst_z:.2} over {total} samples"),
    );
}
