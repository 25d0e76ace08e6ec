//! Seeded randomness. All generators are ChaCha8 streams so runs reproduce bit-for-bit
//! across platforms; per-trial independence comes from distinct stream ids.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::matrix::{ComplexMatrix, C64};
use super::state::StateVector;

pub type FqRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> FqRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream `trial` of the generator keyed by `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> FqRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Haar-random unit state on `qubits` qubits, reproducible from `seed`.
pub fn haar_state(qubits: usize, seed: u64) -> StateVector {
    haar_state_with(qubits, &mut rng_from_seed(seed))
}

pub fn haar_state_with<R: Rng + ?Sized>(qubits: usize, rng: &mut R) -> StateVector {
    assert!(qubits >= 1, "haar_state needs at least one qubit");
    let amps: Vec<C64> = (0..1usize << qubits).map(|_| complex_normal(rng)).collect();
    StateVector::new(amps)
        .and_then(|s| s.normalized())
        .expect("gaussian draw is nonzero with probability one")
}

/// Haar unit vector of arbitrary dimension.
pub fn haar_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<C64> {
    let v: Vec<C64> = (0..n).map(|_| complex_normal(rng)).collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / norm).collect()
}

/// Haar-random unitary from Gram-Schmidt on a Ginibre matrix.
pub fn random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(n);
    while cols.len() < n {
        let mut v: Vec<C64> = (0..n).map(|_| complex_normal(rng)).collect();
        for _ in 0..2 {
            for u in &cols {
                let proj: C64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (vi, ui) in v.iter_mut().zip(u) {
                    *vi -= proj * ui;
                }
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-8 {
            cols.push(v.into_iter().map(|z| z / norm).collect());
        }
    }
    ComplexMatrix::from_fn(n, n, |r, c| cols[c][r])
}

/// GUE-style Hermitian matrix with O(1) entries.
pub fn random_hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    let g = ComplexMatrix::from_fn(n, n, |_, _| complex_normal(rng));
    (&g + &g.adjoint()).scale_real(0.5)
}

/// `U diag(λ) U†` with Haar `U` and the given eigenvalues.
pub fn hermitian_with_spectrum<R: Rng + ?Sized>(values: &[f64], rng: &mut R) -> ComplexMatrix {
    let u = random_unitary(values.len(), rng);
    let mut d = u.adjoint();
    d.scale_rows(&values.iter().map(|&x| C64::new(x, 0.0)).collect::<Vec<_>>());
    let h = u.matmul(&d);
    (&h + &h.adjoint()).scale_real(0.5)
}

/// Random Hermitian matrix with eigenvalues drawn uniformly from `[lo, hi]`.
pub fn random_psd<R: Rng + ?Sized>(n: usize, lo: f64, hi: f64, rng: &mut R) -> ComplexMatrix {
    let values: Vec<f64> = (0..n).map(|_| rng.random_range(lo..=hi)).collect();
    hermitian_with_spectrum(&values, rng)
}
