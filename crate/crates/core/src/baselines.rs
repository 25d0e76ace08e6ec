//! Comparators without feedforward: probabilistic projection, memoryless random walks on the band
//! tree, and adiabatic band following.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bands::BandStructure;
use crate::error::{Error, Result};
use crate::feedforward::ceil_log2;
use crate::numkernel::random::haar_vector;
use crate::numkernel::{eigh, trial_rng, ComplexMatrix, HermitianSpectrum, StateVector, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DepthStrategy {
    /// Classical repetition, depth `1/q(j)`.
    Repeat,
    /// Amplitude amplification, depth `1/√q(j)`.
    Amplify,
}

/// Expected query depth `Σ_j q(j)·depth(q(j))` over nonzero entries.
pub fn prob_projection_depth(q: &[f64], strategy: DepthStrategy) -> Result<f64> {
    if q.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
        return Err(Error::Domain("probabilities must be finite and nonnegative".into()));
    }
    let total: f64 = q.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Domain(format!("probabilities sum to {total}")));
    }
    Ok(q.iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| match strategy {
            DepthStrategy::Repeat => 1.0,
            DepthStrategy::Amplify => p.sqrt(),
        })
        .sum())
}

#[derive(Clone, Debug, Serialize)]
pub struct RandomWalkEstimate {
    pub success: f64,
    pub stderr: f64,
    pub trials: usize,
    pub queries_per_trial: usize,
    /// `queries_per_trial / success`.
    pub expected_queries_to_success: f64,
}

pub const MIN_WALK_TRIALS: usize = 1000;
const SINGLE_BAND_WEIGHT: f64 = 1.0 - 1e-9;

/// Projector onto bands `[lo, hi)`.
fn range_projector(band_projectors: &[ComplexMatrix], lo: usize, hi: usize, n: usize) -> ComplexMatrix {
    band_projectors[lo..hi]
        .iter()
        .fold(ComplexMatrix::zeros(n, n), |acc, p| &acc + p)
}

/// Memoryless descent of the band tree. Each level measures the binary projection chosen by
/// the guessed path so far; the next child is guessed uniformly without looking at the outcome.
/// The last outcome names the claimed band. Success: the final state carries weight
/// `≥ 1 − 1e-9` on the claimed band.
pub fn random_walk_success(
    bands: &BandStructure,
    spec: &HermitianSpectrum,
    trials: usize,
    seed: u64,
) -> Result<RandomWalkEstimate> {
    if trials < MIN_WALK_TRIALS {
        return Err(Error::Domain(format!("at least {MIN_WALK_TRIALS} trials required, got {trials}")));
    }
    let n = spec.dim();
    if bands.dim() != n {
        return Err(Error::Dimension("band structure and spectrum differ in size".into()));
    }
    let l = bands.l;
    let ell = ceil_log2(l);
    let projectors: Vec<ComplexMatrix> = bands.bands.iter().map(|b| spec.projector(b)).collect();
    // lower[k] = Π_{bands < k}
    let lower: Vec<ComplexMatrix> = (0..=l).map(|k| range_projector(&projectors, 0, k, n)).collect();

    let mut hits = 0usize;
    for t in 0..trials {
        let mut rng = trial_rng(seed, t as u64);
        let mut psi = haar_vector(n, &mut rng);
        let mut node = 0usize;
        let mut claimed = 0usize;
        for j in 1..=ell {
            let k = node + (1 << (ell - j));
            let outcome = if k >= l {
                0
            } else {
                let below = lower[k].mul_vec(&psi);
                let p0: f64 = below.iter().map(|z| z.norm_sqr()).sum();
                let s = u8::from(rng.random::<f64>() >= p0);
                psi = if s == 0 {
                    below
                } else {
                    psi.iter().zip(&below).map(|(a, b)| a - b).collect()
                };
                let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                psi.iter_mut().for_each(|z| *z /= norm);
                s
            };
            if j == ell {
                claimed = node + ((outcome as usize) << (ell - j));
            } else if rng.random::<bool>() {
                node = k;
            }
        }
        if claimed < l {
            let w: f64 = projectors[claimed].mul_vec(&psi).iter().map(|z| z.norm_sqr()).sum();
            if w >= SINGLE_BAND_WEIGHT {
                hits += 1;
            }
        }
    }
    let p = hits as f64 / trials as f64;
    Ok(RandomWalkEstimate {
        success: p,
        stderr: (p * (1.0 - p) / trials as f64).sqrt(),
        trials,
        queries_per_trial: ell,
        expected_queries_to_success: if p > 0.0 { ell as f64 / p } else { f64::INFINITY },
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleShape {
    /// `γ(s) = s`.
    #[default]
    Linear,
    /// `γ(s) = s²`.
    Quadratic,
    /// `γ(s) = 3s² − 2s³`.
    Smoothstep,
}

impl ScheduleShape {
    pub fn gamma(self, s: f64) -> f64 {
        match self {
            ScheduleShape::Linear => s,
            ScheduleShape::Quadratic => s * s,
            ScheduleShape::Smoothstep => s * s * (3.0 - 2.0 * s),
        }
    }
}

/// Interpolation `H̃(s) = (1 − γ(s))H⁰ + γ(s)H` run for total time `T` in `steps` midpoint steps.
/// `reversed` runs `γ(1 − s)`; with negated `T` it undoes the forward evolution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdiabaticSchedule {
    pub shape: ScheduleShape,
    pub total_time: f64,
    pub steps: usize,
    #[serde(default)]
    pub reversed: bool,
}

impl AdiabaticSchedule {
    pub fn new(shape: ScheduleShape, total_time: f64, steps: usize) -> Result<Self> {
        let s = AdiabaticSchedule {
            shape,
            total_time,
            steps,
            reversed: false,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn reversed(&self) -> Self {
        AdiabaticSchedule {
            reversed: !self.reversed,
            total_time: -self.total_time,
            ..*self
        }
    }

    pub fn with_steps(&self, steps: usize) -> Self {
        AdiabaticSchedule { steps, ..*self }
    }

    pub fn gamma(&self, s: f64) -> f64 {
        if self.reversed {
            self.shape.gamma(1.0 - s)
        } else {
            self.shape.gamma(s)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.total_time.is_finite() {
            return Err(Error::NonFinite("total time".into()));
        }
        if self.steps == 0 {
            return Err(Error::Domain("schedule needs at least one step".into()));
        }
        let g = |s| self.shape.gamma(s);
        if g(0.0) != 0.0 || g(1.0) != 1.0 {
            return Err(Error::Domain("schedule endpoints must be exact".into()));
        }
        let grid: Vec<f64> = (0..=self.steps).map(|i| g(i as f64 / self.steps as f64)).collect();
        if grid.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Domain("schedule must be nondecreasing".into()));
        }
        Ok(())
    }
}

fn check_pair(h0: &ComplexMatrix, h: &ComplexMatrix, initial: &StateVector) -> Result<()> {
    h0.check_hermitian(1e-10)?;
    h.check_hermitian(1e-10)?;
    if h0.rows() != h.rows() || initial.len() != h.rows() {
        return Err(Error::Dimension(format!(
            "H0 is {}x{}, H is {}x{}, state has length {}",
            h0.rows(),
            h0.cols(),
            h.rows(),
            h.cols(),
            initial.len()
        )));
    }
    Ok(())
}

/// `ψ ← exp(−iΔt H̃((t + Δt/2)/T)) ψ` per step.
pub fn adiabatic_evolve(
    h0: &ComplexMatrix,
    h: &ComplexMatrix,
    sched: &AdiabaticSchedule,
    initial: &StateVector,
) -> Result<StateVector> {
    check_pair(h0, h, initial)?;
    sched.validate()?;
    if sched.total_time == 0.0 {
        return Ok(initial.clone());
    }
    let dt = sched.total_time / sched.steps as f64;
    let mut psi = initial.amplitudes().to_vec();
    for step in 0..sched.steps {
        let g = sched.gamma((step as f64 + 0.5) / sched.steps as f64);
        let ht = &h0.scale_real(1.0 - g) + &h.scale_real(g);
        let sp = eigh(&ht)?;
        let prop = sp.apply_complex(|e| C64::from_polar(1.0, -dt * e))?;
        psi = prop.mul_vec(&psi);
    }
    StateVector::new(psi)
}

/// Evolves at `steps` and `2·steps`; fails if the results differ by more than `tol`.
pub fn adiabatic_evolve_checked(
    h0: &ComplexMatrix,
    h: &ComplexMatrix,
    sched: &AdiabaticSchedule,
    initial: &StateVector,
    tol: f64,
) -> Result<StateVector> {
    let coarse = adiabatic_evolve(h0, h, sched, initial)?;
    let fine = adiabatic_evolve(h0, h, &sched.with_steps(2 * sched.steps), initial)?;
    let difference = coarse.distance(&fine);
    if difference >= tol {
        return Err(Error::Convergence {
            steps: sched.steps,
            doubled: 2 * sched.steps,
            difference,
        });
    }
    Ok(fine)
}

/// `‖Π ψ − ψ‖`.
pub fn leakage(projector: &ComplexMatrix, psi: &StateVector) -> f64 {
    let p = projector.mul_vec(psi.amplitudes());
    p.iter()
        .zip(psi.amplitudes())
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

#[derive(Clone, Debug, Serialize)]
pub struct LeakageReport {
    pub times: Vec<f64>,
    pub leakage: Vec<f64>,
    /// Least-squares slope of `log leakage` against `log T`.
    pub slope: Option<f64>,
    /// `exp(intercept)`, the `C` in `leakage ≈ C·T^slope`.
    pub constant: Option<f64>,
    /// RMS residual of the log-log fit.
    pub residual: Option<f64>,
    pub degenerate: bool,
}

pub const DEGENERATE_LEAKAGE: f64 = 1e-9;

/// Least squares `y = a + b·x`; returns `(a, b, rms)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    let rms = (x.iter().zip(y).map(|(xi, yi)| (yi - a - b * xi).powi(2)).sum::<f64>() / n).sqrt();
    (a, b, rms)
}

/// Leakage out of band `j` of `H` after adiabatic evolution from a state in band `j` of `H⁰`,
/// for each total time in `times` (steps scaled as `steps_per_time·T`).
#[allow(clippy::too_many_arguments)]
pub fn adiabatic_leakage_scaling(
    h0: &ComplexMatrix,
    h: &ComplexMatrix,
    bands: &BandStructure,
    j: usize,
    times: &[f64],
    shape: ScheduleShape,
    steps_per_time: f64,
    initial: &StateVector,
) -> Result<LeakageReport> {
    if j >= bands.l {
        return Err(Error::Domain(format!("band {j} of {}", bands.l)));
    }
    if times.len() < 2 || times.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::Domain("need at least two positive times".into()));
    }
    let p0 = eigh(h0)?.projector(&bands.bands[j]);
    let start = leakage(&p0, initial);
    if start > 1e-8 {
        return Err(Error::Domain(format!("initial state leaks {start:e} out of band {j} of H0")));
    }
    let p = eigh(h)?.projector(&bands.bands[j]);
    let mut values = Vec::with_capacity(times.len());
    for &t in times {
        let steps = ((steps_per_time * t).ceil() as usize).max(1);
        let sched = AdiabaticSchedule::new(shape, t, steps)?;
        values.push(leakage(&p, &adiabatic_evolve(h0, h, &sched, initial)?));
    }
    if values.iter().all(|&v| v < DEGENERATE_LEAKAGE) {
        return Ok(LeakageReport {
            times: times.to_vec(),
            leakage: values,
            slope: None,
            constant: None,
            residual: None,
            degenerate: true,
        });
    }
    let lx: Vec<f64> = times.iter().map(|t| t.ln()).collect();
    let ly: Vec<f64> = values.iter().map(|v| v.max(f64::MIN_POSITIVE).ln()).collect();
    let (a, b, rms) = linear_fit(&lx, &ly);
    Ok(LeakageReport {
        times: times.to_vec(),
        leakage: values,
        slope: Some(b),
        constant: Some(a.exp()),
        residual: Some(rms),
        degenerate: false,
    })
}

/// `M^{3/2} / (ε·minGap³)`, an order estimate without constants.
pub fn adiabatic_time_estimate(m: f64, min_gap: f64, epsilon: f64) -> Result<f64> {
    if !(m > 0.0 && min_gap > 0.0 && epsilon > 0.0) {
        return Err(Error::Domain("eigenpath count, gap and target must be positive".into()));
    }
    Ok(m.powf(1.5) / (epsilon * min_gap.powi(3)))
}

/// Smallest gap between band `j` and the rest of the spectrum of `H̃(s)` on a uniform `s` grid.
pub fn min_band_gap(h0: &ComplexMatrix, h: &ComplexMatrix, shape: ScheduleShape, band: &[usize], grid: usize) -> Result<f64> {
    let mut worst = f64::INFINITY;
    for i in 0..=grid {
        let g = shape.gamma(i as f64 / grid as f64);
        let vals = eigh(&(&h0.scale_real(1.0 - g) + &h.scale_real(g)))?.values;
        let inside: Vec<f64> = band.iter().map(|&k| vals[k]).collect();
        for (k, &v) in vals.iter().enumerate() {
            if !band.contains(&k) {
                for &w in &inside {
                    worst = worst.min((v - w).abs());
                }
            }
        }
    }
    Ok(worst)
}

/// The fixed 4-level instance used by the leakage examples: `H⁰ = diag(0.1 + lift, 0.7, 0.8, 0.9)`
/// and `H = W diag(0.15 + lift, 0.75, 0.85, 0.95) W†` with `W = exp(i·angle·K)` for a fixed
/// Hermitian `K`. Raising `lift` narrows the gap above the lowest level.
pub fn four_level_instance(angle: f64, lift: f64) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let h0 = ComplexMatrix::from_diagonal(&[0.1 + lift, 0.7, 0.8, 0.9]);
    let k = ComplexMatrix::from_fn(4, 4, |r, c| {
        let (a, b) = (r.min(c) as f64, r.max(c) as f64);
        let re = ((a + 1.0) * (b + 2.0)).sin();
        let im = if r == c { 0.0 } else { 0.5 * ((a + 2.0) * (b + 1.0)).cos() };
        if r <= c {
            C64::new(re, im)
        } else {
            C64::new(re, -im)
        }
    });
    let w = eigh(&k)?.apply_complex(|e| C64::from_polar(1.0, angle * e))?;
    let h = w
        .matmul(&ComplexMatrix::from_diagonal(&[0.15 + lift, 0.75, 0.85, 0.95]))
        .matmul(&w.adjoint());
    Ok((h0, h))
}
