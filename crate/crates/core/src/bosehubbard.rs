//! Gmon Bose-Hubbard model on a truncated Fock space, its doublon band labels and the affine
//! rescaling into the QSVT domain.
//!
//! Frequencies are angular, in rad/µs (`2π × MHz`).

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::bands::detect_bands;
use crate::error::{Error, Result};
use crate::numkernel::{eigh, rng_from_seed, ComplexMatrix, C64, I};

/// Control amplitude bound for `g`, `δ` and `f`: `2π × 20 MHz`.
pub const CONTROL_LIMIT: f64 = 2.0 * PI * 20.0;
/// Standard deviation of injected control errors: `2π × 1 MHz`.
pub const CONTROL_NOISE: f64 = 2.0 * PI * 1.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GmonModel {
    pub modes: usize,
    pub nmax: usize,
    pub eta: f64,
    /// `(l, j, g_{l,j})`.
    pub edges: Vec<(usize, usize, f64)>,
    pub delta: Vec<f64>,
    pub f: Vec<f64>,
    pub phi: Vec<f64>,
    #[serde(default = "default_true")]
    pub check_ranges: bool,
}

fn default_true() -> bool {
    true
}

impl GmonModel {
    /// Two modes, `n_max = 3`, `η = 2π·200`, every control at `2π·10`.
    pub fn desk_scale() -> Self {
        let c = 2.0 * PI * 10.0;
        GmonModel {
            modes: 2,
            nmax: 3,
            eta: 2.0 * PI * 200.0,
            edges: vec![(0, 1, c)],
            delta: vec![c, c],
            f: vec![c, c],
            phi: vec![0.3, 1.1],
            check_ranges: true,
        }
    }

    pub fn levels(&self) -> usize {
        self.nmax + 1
    }

    pub fn dim(&self) -> usize {
        self.levels().pow(self.modes as u32)
    }

    /// Occupations of basis state `index`, mode 0 most significant.
    pub fn occupations(&self, index: usize) -> Vec<usize> {
        let d = self.levels();
        let mut occ = vec![0; self.modes];
        let mut rest = index;
        for j in (0..self.modes).rev() {
            occ[j] = rest % d;
            rest /= d;
        }
        occ
    }

    pub fn index_of(&self, occ: &[usize]) -> usize {
        occ.iter().fold(0, |acc, &n| acc * self.levels() + n)
    }

    pub fn validate(&self) -> Result<()> {
        if self.modes == 0 || self.nmax == 0 {
            return Err(Error::Config("need at least one mode and n_max ≥ 1".into()));
        }
        for (name, v) in [("delta", &self.delta), ("f", &self.f), ("phi", &self.phi)] {
            if v.len() != self.modes {
                return Err(Error::Config(format!("{name} has {} entries for {} modes", v.len(), self.modes)));
            }
        }
        for &(l, j, _) in &self.edges {
            if l >= self.modes || j >= self.modes || l == j {
                return Err(Error::Config(format!("edge ({l}, {j}) does not join two distinct modes")));
            }
        }
        let all = self
            .edges
            .iter()
            .map(|e| e.2)
            .chain(self.delta.iter().copied())
            .chain(self.f.iter().copied())
            .chain(self.phi.iter().copied())
            .chain([self.eta]);
        if all.into_iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("gmon parameter".into()));
        }
        if self.check_ranges {
            let bounded = self
                .edges
                .iter()
                .map(|e| ("g", e.2))
                .chain(self.delta.iter().map(|&v| ("delta", v)))
                .chain(self.f.iter().map(|&v| ("f", v)));
            for (name, value) in bounded {
                if value.abs() > CONTROL_LIMIT * (1.0 + 1e-12) {
                    return Err(Error::ParameterRange {
                        name: name.into(),
                        value,
                        lo: -CONTROL_LIMIT,
                        hi: CONTROL_LIMIT,
                    });
                }
            }
            for &value in &self.phi {
                if !(0.0..=2.0 * PI).contains(&value) {
                    return Err(Error::ParameterRange {
                        name: "phi".into(),
                        value,
                        lo: 0.0,
                        hi: 2.0 * PI,
                    });
                }
            }
        }
        Ok(())
    }

    /// Copy with Gaussian errors of standard deviation `2π·1 MHz` on every `g`, `δ` and `f`.
    pub fn with_control_noise(&self, seed: u64) -> Self {
        let mut rng = rng_from_seed(seed);
        let noise = Normal::new(0.0, CONTROL_NOISE).expect("positive deviation");
        let mut out = self.clone();
        for e in &mut out.edges {
            e.2 += noise.sample(&mut rng);
        }
        for v in out.delta.iter_mut().chain(out.f.iter_mut()) {
            *v += noise.sample(&mut rng);
        }
        out.check_ranges = false;
        out
    }
}

/// `(η/2) Σ_j n_j(n_j − 1)`, diagonal in the Fock basis.
pub fn build_h0(model: &GmonModel) -> Result<ComplexMatrix> {
    model.validate()?;
    let diag: Vec<f64> = (0..model.dim())
        .map(|i| {
            let occ = model.occupations(i);
            0.5 * model.eta * occ.iter().map(|&n| (n * n.saturating_sub(1)) as f64).sum::<f64>()
        })
        .collect();
    Ok(ComplexMatrix::from_diagonal(&diag))
}

/// Adds `c·⟨out|op|in⟩` for a single-mode lowering (`-1`) or raising (`+1`) step.
fn ladder(model: &GmonModel, occ: &[usize], mode: usize, step: i32) -> Option<(Vec<usize>, f64)> {
    let n = occ[mode];
    let mut next = occ.to_vec();
    if step < 0 {
        if n == 0 {
            return None;
        }
        next[mode] = n - 1;
        Some((next, (n as f64).sqrt()))
    } else {
        if n == model.nmax {
            return None;
        }
        next[mode] = n + 1;
        Some((next, ((n + 1) as f64).sqrt()))
    }
}

/// Hopping `g(a†_l a_j + a†_j a_l)`, detuning `δ_j n_j` and drive `i f_j(a_j e^{−iφ_j} − a†_j e^{iφ_j})`.
pub fn build_h1(model: &GmonModel) -> Result<ComplexMatrix> {
    model.validate()?;
    let dim = model.dim();
    let mut h = ComplexMatrix::zeros(dim, dim);
    for col in 0..dim {
        let occ = model.occupations(col);
        for j in 0..model.modes {
            h[(col, col)] += model.delta[j] * occ[j] as f64;
            let (f, phi) = (model.f[j], model.phi[j]);
            if let Some((o, amp)) = ladder(model, &occ, j, -1) {
                h[(model.index_of(&o), col)] += I * f * amp * C64::from_polar(1.0, -phi);
            }
            if let Some((o, amp)) = ladder(model, &occ, j, 1) {
                h[(model.index_of(&o), col)] -= I * f * amp * C64::from_polar(1.0, phi);
            }
        }
        for &(l, j, g) in &model.edges {
            for (up, down) in [(l, j), (j, l)] {
                if let Some((mid, a)) = ladder(model, &occ, down, -1) {
                    if let Some((o, b)) = ladder(model, &mid, up, 1) {
                        h[(model.index_of(&o), col)] += C64::new(g * a * b, 0.0);
                    }
                }
            }
        }
    }
    h.check_hermitian(1e-12)?;
    Ok(h)
}

pub fn build_hamiltonian(model: &GmonModel) -> Result<ComplexMatrix> {
    Ok(&build_h0(model)? + &build_h1(model)?)
}

/// Doublon labels `k = Σ_j n_j(n_j − 1)/2`; the unperturbed band energy is `k·η`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BandLabeling {
    pub labels: Vec<usize>,
    pub eta: f64,
}

impl BandLabeling {
    pub fn energy(&self, index: usize) -> f64 {
        self.labels[index] as f64 * self.eta
    }

    /// Fock indices per label, ascending in label.
    pub fn groups(&self) -> BTreeMap<usize, Vec<usize>> {
        let mut out: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, &k) in self.labels.iter().enumerate() {
            out.entry(k).or_default().push(i);
        }
        out
    }
}

pub fn band_labels(model: &GmonModel) -> BandLabeling {
    BandLabeling {
        labels: (0..model.dim())
            .map(|i| model.occupations(i).iter().map(|&n| n * n.saturating_sub(1) / 2).sum())
            .collect(),
        eta: model.eta,
    }
}

/// `x ↦ (x − shift)/scale`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    pub shift: f64,
    pub scale: f64,
}

impl AffineMap {
    pub fn forward(&self, x: f64) -> f64 {
        (x - self.shift) / self.scale
    }

    pub fn inverse(&self, y: f64) -> f64 {
        y * self.scale + self.shift
    }
}

/// `H′ = (H − (E_min − m̃)I)/(E_max − E_min + 2m̃)` with `m̃ = margin·(E_max − E_min)`.
pub fn normalize_for_qsvt(h: &ComplexMatrix, margin: f64) -> Result<(ComplexMatrix, AffineMap)> {
    if !(margin > 0.0 && margin < 0.5) {
        return Err(Error::Domain(format!("margin must lie in (0, 1/2), got {margin}")));
    }
    let values = eigh(h)?.values;
    let (lo, hi) = (values[0], values[values.len() - 1]);
    let span = hi - lo;
    if span <= 1e-14 * lo.abs().max(hi.abs()).max(1.0) {
        return Err(Error::TrivialSpectrum(lo));
    }
    let m = margin * span;
    let map = AffineMap {
        shift: lo - m,
        scale: span + 2.0 * m,
    };
    let n = h.rows();
    let shifted = h - &ComplexMatrix::identity(n).scale_real(map.shift);
    Ok((shifted.scale_real(1.0 / map.scale), map))
}

/// For every eigenvector of `H₀ + H₁` (ascending energy), its dominant doublon label and the weight
/// it carries in that label's Fock states.
pub fn dominant_labels(model: &GmonModel) -> Result<Vec<(usize, f64)>> {
    let spec = eigh(&build_hamiltonian(model)?)?;
    let groups = band_labels(model).groups();
    Ok((0..spec.dim())
        .map(|i| {
            let v = spec.vector(i);
            groups
                .iter()
                .map(|(&k, idx)| (k, idx.iter().map(|&j| v[j].norm_sqr()).sum::<f64>()))
                .max_by(|a, b| a.1.total_cmp(&b.1))
                .expect("at least one label")
        })
        .collect())
}

/// Smallest dominant-label weight over all eigenvectors.
pub fn band_integrity(model: &GmonModel) -> Result<f64> {
    Ok(dominant_labels(model)?.iter().map(|p| p.1).fold(1.0, f64::min))
}

#[derive(Clone, Debug, Serialize)]
pub struct GroupingReport {
    /// Dominant labels of the eigenvectors in each detected band.
    pub detected: Vec<Vec<usize>>,
    /// Fock indices per label, ascending.
    pub expected: Vec<Vec<usize>>,
    /// Number of leading labels whose detected band holds exactly that label's states.
    pub agreeing: usize,
    /// Rescaled gap of the detected structure.
    pub delta: f64,
    pub map: AffineMap,
}

/// Runs `detect_bands` on the rescaled exact spectrum with threshold `min_gap` (unrescaled units).
pub fn grouping_report(model: &GmonModel, min_gap: f64, margin: f64) -> Result<GroupingReport> {
    let h = build_hamiltonian(model)?;
    let (hn, map) = normalize_for_qsvt(&h, margin)?;
    let values = eigh(&hn)?.values;
    let bands = detect_bands(&values, min_gap / map.scale)?;
    let dominant = dominant_labels(model)?;
    let detected: Vec<Vec<usize>> = bands.bands.iter().map(|b| b.iter().map(|&i| dominant[i].0).collect()).collect();
    let groups = band_labels(model).groups();
    let agreeing = groups
        .iter()
        .zip(&detected)
        .take_while(|((&k, idx), det)| det.len() == idx.len() && det.iter().all(|&x| x == k))
        .count();
    Ok(GroupingReport {
        detected,
        expected: groups.into_values().collect(),
        agreeing,
        delta: bands.delta,
        map,
    })
}

/// Largest relative change `|E − E′|/|E|` of the eigenvalues dominated by `label` when `n_max` grows by one.
pub fn truncation_shift(model: &GmonModel, label: usize) -> Result<f64> {
    let pick = |m: &GmonModel| -> Result<Vec<f64>> {
        let values = eigh(&build_hamiltonian(m)?)?.values;
        let dom = dominant_labels(m)?;
        Ok(values.into_iter().zip(dom).filter(|(_, d)| d.0 == label).map(|(v, _)| v).collect())
    };
    let here = pick(model)?;
    let mut bigger = model.clone();
    bigger.nmax += 1;
    let there = pick(&bigger)?;
    if here.is_empty() || here.len() != there.len() {
        return Err(Error::Domain(format!(
            "label {label} holds {} states at n_max = {} and {} after growing",
            here.len(),
            model.nmax,
            there.len()
        )));
    }
    Ok(here.iter().zip(&there).map(|(a, b)| (a - b).abs() / a.abs()).fold(0.0, f64::max))
}

/// `H₁` restricted to `n_j ≤ 1` for every mode, as a `2^n × 2^n` matrix.
pub fn qubit_projection(model: &GmonModel) -> Result<ComplexMatrix> {
    let h1 = build_h1(model)?;
    let q = 1usize << model.modes;
    let index = |b: usize| {
        let occ: Vec<usize> = (0..model.modes).map(|j| (b >> (model.modes - 1 - j)) & 1).collect();
        model.index_of(&occ)
    };
    Ok(ComplexMatrix::from_fn(q, q, |r, c| h1[(index(r), index(c))]))
}

fn pauli(label: char) -> ComplexMatrix {
    match label {
        'X' => ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]),
        'Y' => ComplexMatrix::from_vec(2, 2, vec![C64::new(0.0, 0.0), -I, I, C64::new(0.0, 0.0)]).unwrap(),
        'Z' => ComplexMatrix::from_diagonal(&[1.0, -1.0]),
        _ => ComplexMatrix::identity(2),
    }
}

fn pauli_string(modes: usize, ops: &[(usize, char)]) -> ComplexMatrix {
    (0..modes).fold(ComplexMatrix::identity(1), |acc, j| {
        let p = ops.iter().find(|(m, _)| *m == j).map_or('I', |(_, c)| *c);
        acc.kron(&pauli(p))
    })
}

/// Pauli form of the qubit projection with `Z|0⟩ = |0⟩`:
/// `Σ (g/2)(X_l X_j + Y_l Y_j) + Σ_j [(δ_j/2)(I − Z_j) + f_j(sin φ_j X_j − cos φ_j Y_j)]`.
pub fn qubit_pauli_form(model: &GmonModel) -> Result<ComplexMatrix> {
    model.validate()?;
    let n = model.modes;
    let mut h = ComplexMatrix::zeros(1 << n, 1 << n);
    for &(l, j, g) in &model.edges {
        let xx = pauli_string(n, &[(l, 'X'), (j, 'X')]);
        let yy = pauli_string(n, &[(l, 'Y'), (j, 'Y')]);
        h = &h + &(&xx + &yy).scale_real(g / 2.0);
    }
    for j in 0..n {
        let id = pauli_string(n, &[]);
        let z = pauli_string(n, &[(j, 'Z')]);
        h = &h + &(&id - &z).scale_real(model.delta[j] / 2.0);
        let x = pauli_string(n, &[(j, 'X')]).scale_real(model.f[j] * model.phi[j].sin());
        let y = pauli_string(n, &[(j, 'Y')]).scale_real(model.f[j] * model.phi[j].cos());
        h = &h + &(&x - &y);
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_mode() -> GmonModel {
        GmonModel::desk_scale()
    }

    #[test]
    fn h0_energies() {
        let m = two_mode();
        let h0 = build_h0(&m).unwrap();
        let e = |a: usize, b: usize| h0[(m.index_of(&[a, b]), m.index_of(&[a, b]))].re;
        assert!((e(0, 2) - m.eta).abs() < 1e-9);
        assert!((e(2, 2) - 2.0 * m.eta).abs() < 1e-9);
        assert!((e(0, 3) - 3.0 * m.eta).abs() < 1e-9);
        for (a, b) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            assert_eq!(e(a, b), 0.0);
        }
    }

    #[test]
    fn h1_elementary_cases() {
        let mut m = GmonModel {
            modes: 1,
            nmax: 3,
            eta: 1.0,
            edges: vec![],
            delta: vec![0.0],
            f: vec![0.0],
            phi: vec![0.0],
            check_ranges: true,
        };
        assert!(build_h1(&m).unwrap().max_abs() == 0.0);
        m.f = vec![1.0];
        let h = build_h1(&m).unwrap();
        for k in 1..=3usize {
            assert!((h[(k - 1, k)] - I * (k as f64).sqrt()).norm() < 1e-15);
            assert!((h[(k, k - 1)] + I * (k as f64).sqrt()).norm() < 1e-15);
        }
        assert!(h.data().iter().all(|z| z.re == 0.0));
    }

    #[test]
    fn control_range() {
        let mut m = two_mode();
        m.edges = vec![(0, 1, 2.0 * PI * 20.0)];
        assert!(build_h1(&m).is_ok());
        m.edges = vec![(0, 1, 2.0 * PI * 30.0)];
        assert!(matches!(build_h1(&m), Err(Error::ParameterRange { .. })));
        m.check_ranges = false;
        assert!(build_h1(&m).is_ok());
    }

    #[test]
    fn labels_match_listing() {
        let m = two_mode();
        let lab = band_labels(&m);
        let at = |a, b| lab.labels[m.index_of(&[a, b])];
        assert_eq!(at(1, 1), 0);
        assert_eq!(at(2, 1), 1);
        assert_eq!(at(3, 0), 3);
        let g = lab.groups();
        let names = |k: usize| -> Vec<Vec<usize>> { g[&k].iter().map(|&i| m.occupations(i)).collect() };
        assert_eq!(names(0), vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
        assert_eq!(names(1), vec![vec![0, 2], vec![1, 2], vec![2, 0], vec![2, 1]]);
        assert_eq!(names(2), vec![vec![2, 2]]);
        assert_eq!(names(3), vec![vec![0, 3], vec![1, 3], vec![3, 0], vec![3, 1]]);
    }

    #[test]
    fn normalization_round_trip() {
        let h = ComplexMatrix::from_diagonal(&[0.1, 0.9]);
        let (hn, map) = normalize_for_qsvt(&h, 0.1).unwrap();
        let v = eigh(&hn).unwrap().values;
        assert!((v[0] - 0.1 / 1.2).abs() < 1e-15 && (v[1] - 1.1 / 1.2).abs() < 1e-15);
        for x in [0.1, 0.37, 0.9] {
            assert!((map.inverse(map.forward(x)) - x).abs() < 1e-15);
        }
        assert!(normalize_for_qsvt(&h, 0.0).is_err());
        assert!(matches!(
            normalize_for_qsvt(&ComplexMatrix::identity(2), 0.1),
            Err(Error::TrivialSpectrum(_))
        ));
    }

    fn maximal(eta: f64) -> GmonModel {
        let c = CONTROL_LIMIT;
        GmonModel {
            eta,
            edges: vec![(0, 1, c)],
            delta: vec![c, -c],
            f: vec![c, c],
            ..two_mode()
        }
    }

    #[test]
    fn spectrum_is_real_and_reconstructs() {
        let h = build_hamiltonian(&maximal(2.0 * PI * 200.0)).unwrap();
        let spec = eigh(&h).unwrap();
        assert!(spec.reconstruct().max_abs_diff(&h) < 1e-9);
    }

    #[test]
    fn band_integrity() {
        assert!(super::band_integrity(&two_mode()).unwrap() >= 0.9);
        assert!(super::band_integrity(&maximal(15.0 * CONTROL_LIMIT)).unwrap() >= 0.9);
        // |22⟩ hybridizes with |13⟩, |31⟩ through the √6-enhanced hopping
        let tenfold = super::band_integrity(&maximal(10.0 * CONTROL_LIMIT)).unwrap();
        assert!((tenfold - 0.8467).abs() < 1e-3, "{tenfold}");
    }

    #[test]
    fn grouping_matches_labels() {
        let m = two_mode();
        let r = grouping_report(&m, 0.3 * m.eta, 0.05).unwrap();
        assert_eq!(r.agreeing, r.expected.len());
        assert!(r.delta >= 0.5 * m.eta / r.map.scale);
        let strong = maximal(m.eta);
        let r = grouping_report(&strong, 0.3 * m.eta, 0.05).unwrap();
        assert!(r.agreeing >= 4, "{:?}", r.detected);
    }

    #[test]
    fn truncation() {
        let m = two_mode();
        assert!(truncation_shift(&m, 0).unwrap() < 1e-6);
        assert!(truncation_shift(&m, 1).unwrap() < 1e-4);
    }

    #[test]
    fn qubit_projection_matches_pauli_form() {
        let m = two_mode();
        let a = qubit_projection(&m).unwrap();
        let b = qubit_pauli_form(&m).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-12);
    }

    #[test]
    fn noise_is_seeded() {
        let m = two_mode();
        assert_eq!(m.with_control_noise(3), m.with_control_noise(3));
        assert_ne!(m.with_control_noise(3), m.with_control_noise(4));
    }

    #[test]
    fn json_shape() {
        let m: GmonModel = serde_json::from_str(
            r#"{"modes":2,"nmax":3,"eta":1256.6,"edges":[[0,1,62.8]],"delta":[0,0],"f":[0,0],"phi":[0,0],"check_ranges":true}"#,
        )
        .unwrap();
        assert_eq!(m.edges, vec![(0, 1, 62.8)]);
        assert!(serde_json::from_str::<GmonModel>(r#"{"modes":2,"bogus":1}"#).is_err());
    }
}
