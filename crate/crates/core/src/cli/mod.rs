//! Command-line drivers. Every command reads one JSON config, writes CSV/JSON files into `--out`
//! and exits with 0 on success, 1 on a numerical or assertion failure and 2 on a config error.

pub mod config;
pub mod verify;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::bands::{detect_bands, detect_bands_by_count, exact_projectors, BandStructure};
use crate::baselines::{adiabatic_time_estimate, prob_projection_depth, random_walk_success, DepthStrategy};
use crate::blockenc::dilate_with_spectrum;
use crate::bosehubbard::{
    band_integrity, build_hamiltonian, grouping_report, normalize_for_qsvt, qubit_pauli_form, qubit_projection,
    truncation_shift,
};
use crate::error::Error;
use crate::feedforward::{
    channel_distance, common_degree, extract_kraus, feedforward_query_count, per_round_epsilon, MultibandOptions,
    MultibandProjector,
};
use crate::numkernel::random::{hermitian_with_spectrum, haar_vector};
use crate::numkernel::{eigh, rng_from_seed, trial_rng, ComplexMatrix, StateVector, C64, ZERO};
use crate::polyapprox::heaviside_filter;
use crate::qsp::{synthesize_with, to_circuit, SynthesisOptions};
use config::{
    load, BandSource, BaselinesConfig, BoseHubbardConfig, InputSource, ModelSource, PhasesConfig, ProjectConfig,
    ProjectMode, VerifyConfig,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Phases,
    Project,
    Baselines,
    Bosehubbard,
    Verify,
}

#[derive(Debug, Parser)]
#[command(name = "fqsvt", version, about = "Feedforward QSVT experiment drivers")]
pub struct Args {
    #[arg(value_enum)]
    pub command: Command,
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug)]
pub enum CliError {
    Config(Error),
    Failure(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Failure(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "config error: {e}"),
            CliError::Failure(e) => write!(f, "error: {e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Json(_) | Error::ParameterRange { .. } | Error::BandAssumption { .. } => {
                CliError::Config(e)
            }
            Error::Round { ref source, .. } if matches!(**source, Error::BandAssumption { .. }) => CliError::Config(e),
            e => CliError::Failure(e),
        }
    }
}

fn config_error(e: Error) -> CliError {
    match e {
        Error::Io(_) | Error::Json(_) | Error::Config(_) => CliError::Config(e),
        other => CliError::Config(Error::Config(other.to_string())),
    }
}

/// What a command did: whether its checks held, a short summary and the files written.
#[derive(Clone, Debug, Default)]
pub struct Report {
    pub passed: bool,
    pub lines: Vec<String>,
    pub files: Vec<PathBuf>,
}

impl Report {
    pub fn exit_code(&self) -> i32 {
        if self.passed {
            0
        } else {
            1
        }
    }
}

pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(args.command, &args.config, args.seed, &args.out) {
        Ok(report) => {
            for line in &report.lines {
                println!("{line}");
            }
            report.exit_code()
        }
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: Command, config: &Path, seed: u64, out: &Path) -> Result<Report, CliError> {
    let mut writer = Output::new(out)?;
    let mut report = match command {
        Command::Phases => cmd_phases(&load(config).map_err(config_error)?, &mut writer)?,
        Command::Project => cmd_project(&load(config).map_err(config_error)?, seed, &mut writer)?,
        Command::Baselines => cmd_baselines(&load(config).map_err(config_error)?, seed, &mut writer)?,
        Command::Bosehubbard => cmd_bosehubbard(&load(config).map_err(config_error)?, seed, &mut writer)?,
        Command::Verify => cmd_verify(&load(config).map_err(config_error)?, seed, &mut writer)?,
    };
    report.files = writer.files;
    Ok(report)
}

struct Output {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Output {
    fn new(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Failure(e.into()))?;
        Ok(Output {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn text(&mut self, name: &str, body: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, body).map_err(|e| CliError::Failure(e.into()))?;
        self.files.push(path);
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut body = serde_json::to_string_pretty(value).map_err(|e| CliError::Failure(e.into()))?;
        body.push('\n');
        self.text(name, &body)
    }
}

/// CSV text with a units-carrying header.
pub struct Csv(String);

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Csv(header.join(",") + "\n")
    }

    pub fn row(&mut self, cells: &[String]) {
        let _ = writeln!(self.0, "{}", cells.join(","));
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

/// 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn cmd_phases(cfg: &PhasesConfig, out: &mut Output) -> Result<Report, CliError> {
    if !(cfg.synthesis_tol > 0.0) {
        return Err(CliError::Config(Error::Config("synthesis_tol must be positive".into())));
    }
    let design = heaviside_filter(&cfg.filter)?;
    let synthesis = match synthesize_with(&design.series, SynthesisOptions::with_tol(cfg.synthesis_tol)) {
        Ok(s) => s,
        Err(Error::SynthesisStalled {
            residual,
            tol,
            iterations,
            history,
        }) => {
            let mut csv = Csv::new(&["iteration", "residual[1]"]);
            for (i, r) in history.iter().enumerate() {
                csv.row(&[i.to_string(), num(*r)]);
            }
            out.text("residual_history.csv", csv.as_str())?;
            return Err(CliError::Failure(Error::SynthesisStalled {
                residual,
                tol,
                iterations,
                history,
            }));
        }
        Err(e) => return Err(e.into()),
    };
    let circuit = to_circuit(&synthesis.phases)?;
    out.json(
        "phases.json",
        &json!({
            "filter": cfg.filter,
            "degree": design.degree,
            "window_width": design.width,
            "su2": synthesis.phases,
            "circuit": circuit,
            "synthesis_residual": synthesis.residual,
            "iterations": synthesis.iterations,
        }),
    )?;
    let mut csv = Csv::new(&[
        "condition",
        "region_lo[1]",
        "region_hi[1]",
        "bound[1]",
        "worst[1]",
        "worst_x[1]",
        "margin[1]",
        "pass",
    ]);
    for c in &design.report.conditions {
        csv.row(&[
            c.name.clone(),
            num(c.region[0]),
            num(c.region[1]),
            num(c.bound),
            num(c.worst),
            num(c.worst_x),
            num(c.margin),
            c.pass.to_string(),
        ]);
    }
    out.text("certification.csv", csv.as_str())?;
    let passed = design.report.pass();
    Ok(Report {
        passed,
        lines: vec![format!(
            "degree {} synthesis residual {:e} certification {}",
            design.degree,
            synthesis.residual,
            if passed { "passed" } else { "FAILED" }
        )],
        files: Vec::new(),
    })
}

fn project_hamiltonian(cfg: &ProjectConfig, seed: u64) -> Result<ComplexMatrix, CliError> {
    let h = match &cfg.model {
        ModelSource::Synthetic { values } => {
            if values.is_empty() || values.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(CliError::Config(Error::Config("synthetic eigenvalues must lie in [0, 1]".into())));
            }
            hermitian_with_spectrum(values, &mut rng_from_seed(seed))
        }
        ModelSource::Matrix(m) => {
            m.check_hermitian(1e-12).map_err(config_error)?;
            m.clone()
        }
        ModelSource::Gmon { model, margin } => {
            let h = build_hamiltonian(model)?;
            normalize_for_qsvt(&h, *margin)?.0
        }
    };
    if !h.rows().is_power_of_two() {
        return Err(CliError::Config(Error::Config(format!(
            "system dimension {} is not a power of two",
            h.rows()
        ))));
    }
    Ok(h)
}

fn project_input(src: &InputSource, spec_vectors: &[Vec<C64>], seed: u64) -> Result<StateVector, CliError> {
    let n = spec_vectors.len();
    let amps = match src {
        InputSource::UniformEigen => {
            let mut v = vec![ZERO; n];
            for e in spec_vectors {
                for (a, z) in v.iter_mut().zip(e) {
                    *a += z / (n as f64).sqrt();
                }
            }
            v
        }
        InputSource::Haar => haar_vector(n, &mut trial_rng(seed, u64::MAX)),
        InputSource::Basis(i) => {
            if *i >= n {
                return Err(CliError::Config(Error::Config(format!("basis index {i} ≥ N = {n}"))));
            }
            let mut v = vec![ZERO; n];
            v[*i] = C64::new(1.0, 0.0);
            v
        }
        InputSource::Amplitudes(pairs) => {
            if pairs.len() != n {
                return Err(CliError::Config(Error::Config(format!("{} amplitudes for N = {n}", pairs.len()))));
            }
            pairs.iter().map(|[re, im]| C64::new(*re, *im)).collect()
        }
    };
    StateVector::new(amps)
        .and_then(|s| s.normalized())
        .map_err(config_error)
}

fn cmd_project(cfg: &ProjectConfig, seed: u64, out: &mut Output) -> Result<Report, CliError> {
    cfg.validate().map_err(config_error)?;
    let h = project_hamiltonian(cfg, seed)?;
    let spec = eigh(&h)?;
    let bands: BandStructure = match &cfg.bands {
        BandSource::MinGap(g) => detect_bands(&spec.values, *g).map_err(config_error)?,
        BandSource::Count(l) => detect_bands_by_count(&spec.values, *l).map_err(config_error)?,
        BandSource::Explicit(b) => {
            b.validate().map_err(config_error)?;
            b.clone()
        }
    };
    let l = bands.l;
    let epsilon = match (cfg.epsilon, cfg.budget) {
        (Some(e), _) => e,
        (None, Some(b)) => per_round_epsilon(b, l, cfg.budget_constant),
        (None, None) => unreachable!("validated"),
    };
    let enc = dilate_with_spectrum(&h, &spec)?;
    let proj = MultibandProjector::new(&enc, &bands, &MultibandOptions::with_epsilon(epsilon))?;
    let vectors: Vec<Vec<C64>> = (0..spec.dim()).map(|i| spec.vector(i)).collect();
    let input = project_input(&cfg.input, &vectors, seed)?;
    let exact = exact_projectors(&spec, &bands)?;
    out.json("bands.json", &json!({ "bands": bands, "epsilon_round": epsilon, "degree": proj.degree }))?;
    let ell = proj.ell();
    let queries = feedforward_query_count(l, proj.degree);
    let mut lines = vec![format!("L = {l}, rounds = {ell}, degree = {}, epsilon_round = {epsilon:e}", proj.degree)];

    let passed = match cfg.mode {
        ProjectMode::Enumerate => {
            let tree = proj.enumerate(&input)?;
            let kraus = extract_kraus(&proj)?;
            let distance = channel_distance(&kraus, &exact, &vectors, cfg.samples, seed)?;
            let log = (l as f64).log2().max(1.0);
            let bound = cfg.budget_constant * l as f64 * log * epsilon;
            out.json("branch_tree.json", &tree)?;
            out.json("kraus.json", &kraus)?;
            let mut csv = Csv::new(&[
                "L",
                "rounds",
                "degree",
                "epsilon_round[1]",
                "queries_per_path[calls]",
                "completeness_residual[1]",
                "conservation_residual[1]",
                "distance_proxy[trace]",
                "bound[trace]",
            ]);
            csv.row(&[
                l.to_string(),
                ell.to_string(),
                proj.degree.to_string(),
                num(epsilon),
                queries.to_string(),
                num(kraus.completeness_residual()),
                num(tree.conservation_residual()),
                num(distance),
                num(bound),
            ]);
            out.text("distance.csv", csv.as_str())?;
            lines.push(format!("distance proxy {distance:e} (bound {bound:e}), {} leaves", tree.leaves.len()));
            distance <= bound
        }
        ProjectMode::Sample => {
            let mut traj = Csv::new(&["trial", "record", "claimed_band", "failed"]);
            let mut counts = vec![0usize; l];
            for t in 0..cfg.trials {
                let leaf = proj.sample(&input, &mut trial_rng(seed, t as u64))?;
                let bits: String = leaf.record.bits.iter().map(|b| char::from(b'0' + b)).collect();
                traj.row(&[t.to_string(), bits, leaf.claimed_band.to_string(), leaf.failed.to_string()]);
                counts[leaf.claimed_band] += 1;
            }
            out.text("trajectories.csv", traj.as_str())?;
            let n = cfg.trials as f64;
            let mut hist = Csv::new(&["band", "count", "frequency[1]", "exact_weight[1]", "sigma[1]", "z_score[sigma]"]);
            let mut worst: f64 = 0.0;
            for (j, p) in exact.iter().enumerate() {
                let q: f64 = p.mul_vec(input.amplitudes()).iter().map(|z| z.norm_sqr()).sum();
                let freq = counts[j] as f64 / n;
                // one count when the exact weight is 0 or 1
                let sigma = (q * (1.0 - q) / n).sqrt().max(1.0 / n);
                let z = (freq - q) / sigma;
                worst = worst.max(z.abs());
                hist.row(&[j.to_string(), counts[j].to_string(), num(freq), num(q), num(sigma), num(z)]);
            }
            out.text("histogram.csv", hist.as_str())?;
            lines.push(format!("{} samples, worst |z| = {worst:.3}", cfg.trials));
            worst <= 3.0
        }
    };
    Ok(Report {
        passed,
        lines,
        files: Vec::new(),
    })
}

/// Eigenvalues `(k + ½)/L` and thresholds `k/L`, so every gap has width `1/L`.
pub fn ladder_bands(l: usize, delta: f64) -> crate::error::Result<(Vec<f64>, BandStructure)> {
    let values: Vec<f64> = (0..l).map(|k| (k as f64 + 0.5) / l as f64).collect();
    let centers = (1..l).map(|k| k as f64 / l as f64).collect();
    let bands = BandStructure::from_centers(&values, centers, delta)?;
    Ok((values, bands))
}

fn cmd_baselines(cfg: &BaselinesConfig, seed: u64, out: &mut Output) -> Result<Report, CliError> {
    cfg.validate().map_err(config_error)?;
    let mut csv = Csv::new(&[
        "L",
        "degree",
        "feedforward_queries[calls]",
        "random_walk_success[prob]",
        "random_walk_stderr[prob]",
        "walk_bound[prob]",
        "prob_projection_depth[rounds]",
        "adiabatic_time_estimate[1/energy]",
    ]);
    let mut lines = Vec::new();
    let mut passed = true;
    for &l in &cfg.ls {
        let (values, bands) = ladder_bands(l, cfg.delta)?;
        let degree = common_degree(&bands, &MultibandOptions::with_epsilon(cfg.epsilon))?;
        let spec = eigh(&ComplexMatrix::from_diagonal(&values))?;
        let walk = random_walk_success(&bands, &spec, cfg.walk_trials, seed)?;
        let bound = 2.0 / l as f64 + 3.0 * walk.stderr;
        let depth = prob_projection_depth(&vec![1.0 / l as f64; l], DepthStrategy::Amplify)?;
        let adiabatic = adiabatic_time_estimate(l as f64, cfg.delta, cfg.epsilon)?;
        let queries = feedforward_query_count(l, degree);
        passed &= walk.success <= bound;
        csv.row(&[
            l.to_string(),
            degree.to_string(),
            queries.to_string(),
            num(walk.success),
            num(walk.stderr),
            num(bound),
            num(depth),
            num(adiabatic),
        ]);
        lines.push(format!(
            "L = {l}: feedforward {queries} queries, walk success {:.4} (≤ {bound:.4}), amplify depth {depth:.3}",
            walk.success
        ));
    }
    out.text("baselines.csv", csv.as_str())?;
    Ok(Report {
        passed,
        lines,
        files: Vec::new(),
    })
}

fn cmd_bosehubbard(cfg: &BoseHubbardConfig, seed: u64, out: &mut Output) -> Result<Report, CliError> {
    cfg.model.validate().map_err(config_error)?;
    if !(cfg.margin > 0.0 && cfg.margin < 0.5) || !(cfg.min_gap_eta > 0.0) {
        return Err(CliError::Config(Error::Config("margin must lie in (0, 1/2) and min_gap_eta be positive".into())));
    }
    let model = if cfg.noise {
        cfg.model.with_control_noise(seed)
    } else {
        cfg.model.clone()
    };
    let h = build_hamiltonian(&model)?;
    let values = eigh(&h)?.values;
    let report = grouping_report(&model, cfg.min_gap_eta * model.eta, cfg.margin)?;
    let dominant = crate::bosehubbard::dominant_labels(&model)?;
    let mut csv = Csv::new(&[
        "index",
        "energy[rad/us]",
        "rescaled[1]",
        "dominant_label",
        "label_weight[1]",
        "detected_band",
    ]);
    let mut band_of = vec![0; values.len()];
    for (b, members) in report.detected.iter().enumerate() {
        let start: usize = report.detected[..b].iter().map(Vec::len).sum();
        for k in 0..members.len() {
            band_of[start + k] = b;
        }
    }
    for (i, &e) in values.iter().enumerate() {
        csv.row(&[
            i.to_string(),
            num(e),
            num(report.map.forward(e)),
            dominant[i].0.to_string(),
            num(dominant[i].1),
            band_of[i].to_string(),
        ]);
    }
    out.text("spectrum.csv", csv.as_str())?;
    let integrity = band_integrity(&model)?;
    let truncation = truncation_shift(&model, 0)?;
    let projection = qubit_projection(&model)?.max_abs_diff(&qubit_pauli_form(&model)?);
    out.json(
        "bands.json",
        &json!({
            "model": model,
            "grouping": report,
            "band_integrity": integrity,
            "truncation_shift_label0": truncation,
            "qubit_projection_residual": projection,
        }),
    )?;
    let needed = report.expected.len().min(4);
    Ok(Report {
        passed: report.agreeing >= needed,
        lines: vec![format!(
            "{} detected bands, leading {} agree with doublon labels, rescaled gap {:.6}, integrity {:.4}, truncation shift {:e}",
            report.detected.len(),
            report.agreeing,
            report.delta,
            integrity,
            truncation
        )],
        files: Vec::new(),
    })
}

fn cmd_verify(cfg: &VerifyConfig, seed: u64, out: &mut Output) -> Result<Report, CliError> {
    if cfg.instances == 0 {
        return Err(CliError::Config(Error::Config("instances must be positive".into())));
    }
    let checks = verify::battery(cfg.instances, seed)?;
    let mut csv = Csv::new(&["check", "value[1]", "bound[1]", "pass"]);
    let mut lines = Vec::new();
    for c in &checks {
        csv.row(&[c.name.to_string(), num(c.value), num(c.bound), c.pass().to_string()]);
        lines.push(format!(
            "{:<4} {:<28} {:>12.3e}  (≤ {:.3e})",
            if c.pass() { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.bound
        ));
    }
    out.text("verify.csv", csv.as_str())?;
    Ok(Report {
        passed: checks.iter().all(verify::Check::pass),
        lines,
        files: Vec::new(),
    })
}
