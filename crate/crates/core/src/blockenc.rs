//! Unitary block encodings of Hermitian matrices and their cosine-sine factors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkernel::{eigh, ComplexMatrix, HermitianSpectrum, C64};

pub const UNITARY_TOL: f64 = 1e-10;
const SPECTRUM_SLACK: f64 = 1e-12;
/// Smallest `√(1−σ²)` for which the completion blocks are treated as canonical.
pub const CANONICAL_GAP: f64 = 1e-6;

/// A unitary whose top-left `N×N` block is `H/α`, with `m` ancilla qubits on top.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "EncodingRepr", into = "EncodingRepr")]
pub struct BlockEncoding {
    unitary: ComplexMatrix,
    m: usize,
    alpha: f64,
    n: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EncodingRepr {
    rows: usize,
    cols: usize,
    data: Vec<[f64; 2]>,
    m: usize,
    alpha: f64,
    #[serde(rename = "N")]
    n: usize,
}

impl TryFrom<EncodingRepr> for BlockEncoding {
    type Error = Error;
    fn try_from(r: EncodingRepr) -> Result<Self> {
        let data = r.data.iter().map(|[re, im]| C64::new(*re, *im)).collect();
        BlockEncoding::new(ComplexMatrix::from_vec(r.rows, r.cols, data)?, r.m, r.alpha, r.n)
    }
}

impl From<BlockEncoding> for EncodingRepr {
    fn from(b: BlockEncoding) -> Self {
        EncodingRepr {
            rows: b.unitary.rows(),
            cols: b.unitary.cols(),
            data: b.unitary.data().iter().map(|z| [z.re, z.im]).collect(),
            m: b.m,
            alpha: b.alpha,
            n: b.n,
        }
    }
}

impl BlockEncoding {
    /// Accepts any unitary of size `N·2^m`.
    pub fn new(unitary: ComplexMatrix, m: usize, alpha: f64, n: usize) -> Result<Self> {
        if !unitary.is_square() {
            return Err(Error::NotSquare {
                rows: unitary.rows(),
                cols: unitary.cols(),
            });
        }
        if unitary.rows() != n << m || n == 0 {
            return Err(Error::Dimension(format!(
                "unitary of size {} cannot encode N = {n} with m = {m}",
                unitary.rows()
            )));
        }
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::Domain(format!("scale alpha = {alpha} must be positive")));
        }
        let residual = unitary.unitarity_residual();
        if residual > UNITARY_TOL {
            return Err(Error::NotUnitary { residual });
        }
        Ok(BlockEncoding {
            unitary,
            m,
            alpha,
            n,
        })
    }

    pub fn unitary(&self) -> &ComplexMatrix {
        &self.unitary
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn encoded_dim(&self) -> usize {
        self.n
    }

    /// `2^m`.
    pub fn ancilla_dim(&self) -> usize {
        1 << self.m
    }

    pub fn dim(&self) -> usize {
        self.unitary.rows()
    }
}

/// `α` times the top-left `N×N` block.
pub fn encoded_block(enc: &BlockEncoding) -> ComplexMatrix {
    enc.unitary.submatrix(0, 0, enc.n, enc.n).scale_real(enc.alpha)
}

fn check_unit_interval(spec: &HermitianSpectrum) -> Result<()> {
    if let Some(&eigenvalue) = spec
        .values
        .iter()
        .find(|&&x| x < -SPECTRUM_SLACK || x > 1.0 + SPECTRUM_SLACK)
    {
        return Err(Error::SpectrumOutOfRange { eigenvalue });
    }
    Ok(())
}

/// `[[H, √(I−H²)], [√(I−H²), −H]]` for `0 ≼ H ≼ I`.
pub fn dilate_hermitian(h: &ComplexMatrix) -> Result<BlockEncoding> {
    let spec = eigh(h)?;
    dilate_with_spectrum(h, &spec)
}

/// As [`dilate_hermitian`], reusing a precomputed eigendecomposition of `h`.
pub fn dilate_with_spectrum(h: &ComplexMatrix, spec: &HermitianSpectrum) -> Result<BlockEncoding> {
    check_unit_interval(spec)?;
    let n = h.rows();
    let hs = ComplexMatrix::from_fn(n, n, |r, c| 0.5 * (h[(r, c)] + h[(c, r)].conj()));
    let s = spec.apply(|x| (1.0 - x * x).max(0.0).sqrt())?;
    let mut u = ComplexMatrix::zeros(2 * n, 2 * n);
    u.set_block(0, 0, &hs);
    u.set_block(0, n, &s);
    u.set_block(n, 0, &s);
    u.set_block(n, n, &hs.scale_real(-1.0));
    BlockEncoding::new(u, 1, 1.0, n)
}

/// Factors of `U_H = diag(V, W₂) · [[Σ, S], [−S, Σ]] · diag(V†, V₂†)` for the symmetric dilation.
#[derive(Clone, Debug)]
pub struct CsdFactors {
    pub v: ComplexMatrix,
    pub sigma: Vec<f64>,
    pub s: Vec<f64>,
    pub w2: ComplexMatrix,
    pub v2: ComplexMatrix,
    /// False when some `√(1−σ²)` is below [`CANONICAL_GAP`]; then `W₂`, `V₂` are one valid
    /// completion among many.
    pub canonical: bool,
}

impl CsdFactors {
    /// `T₂`: `W₂` for odd degree, `V₂` for even degree.
    pub fn t2(&self, degree: usize) -> &ComplexMatrix {
        if degree % 2 == 1 {
            &self.w2
        } else {
            &self.v2
        }
    }

    /// The middle factor `[[Σ, S], [−S, Σ]]`.
    pub fn middle(&self) -> ComplexMatrix {
        let n = self.sigma.len();
        let mut m = ComplexMatrix::zeros(2 * n, 2 * n);
        for j in 0..n {
            let (c, s) = (C64::new(self.sigma[j], 0.0), C64::new(self.s[j], 0.0));
            m[(j, j)] = c;
            m[(j, n + j)] = s;
            m[(n + j, j)] = -s;
            m[(n + j, n + j)] = c;
        }
        m
    }

    pub fn reassemble(&self) -> ComplexMatrix {
        let left = self.v.direct_sum(&self.w2);
        let right = self.v.adjoint().direct_sum(&self.v2.adjoint());
        left.matmul(&self.middle()).matmul(&right)
    }

    pub fn reassembly_residual(&self, enc: &BlockEncoding) -> f64 {
        self.reassemble().max_abs_diff(enc.unitary())
    }

    /// Largest deviation of `diag(V, W₂)† U_H diag(V, V₂)` from the direct sum of
    /// `[[σ_j, s_j], [−s_j, σ_j]]`, read through the interleaving `j ↔ (j, N + j)`.
    pub fn qubitization_residual(&self, enc: &BlockEncoding) -> f64 {
        let n = self.sigma.len();
        let left = self.v.direct_sum(&self.w2).adjoint();
        let right = self.v.direct_sum(&self.v2);
        let mid = left.matmul(enc.unitary()).matmul(&right);
        let mut worst: f64 = 0.0;
        for a in 0..2 * n {
            for b in 0..2 * n {
                let (ja, ha) = (a % n, a / n);
                let (jb, hb) = (b % n, b / n);
                let expected = if ja != jb {
                    0.0
                } else {
                    match (ha, hb) {
                        (0, 0) | (1, 1) => self.sigma[ja],
                        (0, 1) => self.s[ja],
                        _ => -self.s[ja],
                    }
                };
                worst = worst.max((mid[(a, b)] - C64::new(expected, 0.0)).norm());
            }
        }
        worst
    }
}

/// Closed-form factors for the dilation of `h`: `V₂ = V`, `W₂ = −V`.
pub fn csd_factors(enc: &BlockEncoding, h: &ComplexMatrix) -> Result<CsdFactors> {
    if enc.m() != 1 || enc.encoded_dim() != h.rows() {
        return Err(Error::Dimension(
            "closed-form factors need the single-ancilla dilation of the same H".into(),
        ));
    }
    let spec = eigh(h)?;
    csd_from_spectrum(&spec)
}

pub fn csd_from_spectrum(spec: &HermitianSpectrum) -> Result<CsdFactors> {
    check_unit_interval(spec)?;
    let sigma: Vec<f64> = spec.values.iter().map(|x| x.clamp(0.0, 1.0)).collect();
    let s: Vec<f64> = sigma.iter().map(|x| (1.0 - x * x).max(0.0).sqrt()).collect();
    let canonical = s.iter().all(|&v| v >= CANONICAL_GAP);
    Ok(CsdFactors {
        v: spec.vectors.clone(),
        w2: spec.vectors.scale_real(-1.0),
        v2: spec.vectors.clone(),
        sigma,
        s,
        canonical,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkernel::random::{random_psd, random_unitary, rng_from_seed};

    #[test]
    fn scalar_dilation() {
        let enc = dilate_hermitian(&ComplexMatrix::from_diagonal(&[0.6])).unwrap();
        let expect = ComplexMatrix::from_real_rows(&[&[0.6, 0.8], &[0.8, -0.6]]);
        assert!(enc.unitary().max_abs_diff(&expect) < 1e-15);
    }

    #[test]
    fn identity_dilation_has_zero_off_blocks() {
        let enc = dilate_hermitian(&ComplexMatrix::identity(2)).unwrap();
        let expect = ComplexMatrix::identity(2).direct_sum(&ComplexMatrix::identity(2).scale_real(-1.0));
        assert!(enc.unitary().max_abs_diff(&expect) < 1e-15);
    }

    #[test]
    fn diagonal_dilation_is_unitary() {
        let h = ComplexMatrix::from_diagonal(&[0.1, 0.9]);
        let enc = dilate_hermitian(&h).unwrap();
        assert!(enc.unitary().unitarity_residual() <= 1e-12);
        assert!(encoded_block(&enc).max_abs_diff(&h) < 1e-12);
    }

    #[test]
    fn out_of_range_spectrum_is_rejected() {
        let err = dilate_hermitian(&ComplexMatrix::from_diagonal(&[0.2, 1.1])).unwrap_err();
        assert!(matches!(err, Error::SpectrumOutOfRange { eigenvalue } if (eigenvalue - 1.1).abs() < 1e-12));
        assert!(dilate_hermitian(&ComplexMatrix::from_diagonal(&[-0.01])).is_err());
    }

    #[test]
    fn trivial_and_random_encodings() {
        let enc = BlockEncoding::new(ComplexMatrix::identity(2), 1, 1.0, 1).unwrap();
        assert_eq!(encoded_block(&enc)[(0, 0)], C64::new(1.0, 0.0));
        let mut rng = rng_from_seed(8);
        let enc = BlockEncoding::new(random_unitary(4, &mut rng), 1, 1.0, 2).unwrap();
        let block = encoded_block(&enc);
        let norm = crate::numkernel::eigh(&block.adjoint().matmul(&block)).unwrap().values[1].sqrt();
        assert!(norm <= 1.0 + 1e-12);
        assert!(BlockEncoding::new(ComplexMatrix::identity(3), 1, 1.0, 2).is_err());
    }

    #[test]
    fn diagonal_csd() {
        let h = ComplexMatrix::from_diagonal(&[0.1, 0.9]);
        let enc = dilate_hermitian(&h).unwrap();
        let f = csd_factors(&enc, &h).unwrap();
        assert!(f.w2.max_abs_diff(&ComplexMatrix::identity(2).scale_real(-1.0)) < 1e-15);
        assert!(f.v2.max_abs_diff(&ComplexMatrix::identity(2)) < 1e-15);
        assert_eq!(f.sigma, vec![0.1, 0.9]);
        assert!(f.canonical);
    }

    #[test]
    fn random_psd_reassembly_and_qubitization() {
        let mut rng = rng_from_seed(5);
        for n in [2, 3, 4] {
            let h = random_psd(n, 0.05, 0.95, &mut rng);
            let enc = dilate_hermitian(&h).unwrap();
            let f = csd_factors(&enc, &h).unwrap();
            assert!(f.reassembly_residual(&enc) <= 1e-10);
            assert!(f.qubitization_residual(&enc) <= 1e-10);
            for (x, s) in f.sigma.iter().zip(&f.s) {
                assert!((x * x + s * s - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn eigenvalue_at_one_is_flagged() {
        let h = ComplexMatrix::from_diagonal(&[0.3, 1.0]);
        let enc = dilate_hermitian(&h).unwrap();
        let f = csd_factors(&enc, &h).unwrap();
        assert!(!f.canonical);
        assert!(f.reassembly_residual(&enc) <= 1e-10);
    }

    #[test]
    fn json_layout() {
        let enc = dilate_hermitian(&ComplexMatrix::from_diagonal(&[0.6])).unwrap();
        let j = serde_json::to_value(&enc).unwrap();
        assert_eq!(j["m"], 1);
        assert_eq!(j["N"], 1);
        assert_eq!(j["alpha"], 1.0);
        assert_eq!(j["rows"], 2);
        let back: BlockEncoding = serde_json::from_value(j).unwrap();
        assert_eq!(back, enc);
    }
}
