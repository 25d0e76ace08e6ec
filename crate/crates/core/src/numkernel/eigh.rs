use crate::error::{Error, Result};

use super::matrix::{ComplexMatrix, C64, ZERO};

/// Hermiticity tolerance accepted by [`eigh`], relative to `max(1, max|h_ij|)`.
pub const HERMITIAN_TOL: f64 = 1e-10;

const MAX_SWEEPS: usize = 80;
const OFF_TOL: f64 = 1e-14;

/// Eigendecomposition `H = V diag(values) V†` with ascending values.
#[derive(Clone, Debug)]
pub struct HermitianSpectrum {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl HermitianSpectrum {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Eigenvector paired with `values[i]`.
    pub fn vector(&self, i: usize) -> Vec<C64> {
        self.vectors.column(i)
    }

    /// `V g(Σ) V†` for a complex-valued `g`.
    pub fn apply_complex(&self, g: impl Fn(f64) -> C64) -> Result<ComplexMatrix> {
        let gv: Vec<C64> = self.values.iter().map(|&x| g(x)).collect();
        if let Some(i) = gv.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite(format!(
                "matrix function at eigenvalue {}",
                self.values[i]
            )));
        }
        let mut scaled = self.vectors.adjoint();
        scaled.scale_rows(&gv);
        Ok(self.vectors.matmul(&scaled))
    }

    /// `V g(Σ) V†` for a real-valued `g`.
    pub fn apply(&self, g: impl Fn(f64) -> f64) -> Result<ComplexMatrix> {
        self.apply_complex(|x| C64::new(g(x), 0.0))
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.apply(|x| x).expect("finite eigenvalues")
    }

    /// Orthogonal projector onto the span of the listed eigenvectors.
    pub fn projector(&self, indices: &[usize]) -> ComplexMatrix {
        let n = self.dim();
        let mut p = ComplexMatrix::zeros(n, n);
        for &k in indices {
            let v = self.vector(k);
            for r in 0..n {
                for c in 0..n {
                    p[(r, c)] += v[r] * v[c].conj();
                }
            }
        }
        p
    }
}

/// Cyclic complex Jacobi diagonalization of a Hermitian matrix.
pub fn eigh(h: &ComplexMatrix) -> Result<HermitianSpectrum> {
    h.check_hermitian(HERMITIAN_TOL)?;
    if !h.is_finite() {
        return Err(Error::NonFinite("eigh input".into()));
    }
    let n = h.rows();
    // work on the exactly Hermitian part
    let mut a = ComplexMatrix::from_fn(n, n, |r, c| 0.5 * (h[(r, c)] + h[(c, r)].conj()));
    let mut v = ComplexMatrix::identity(n);
    let norm = a.frobenius_norm();
    let target = OFF_TOL * norm;

    let mut sweeps = 0;
    loop {
        let off = off_diagonal_norm(&a);
        if off <= target || norm == 0.0 {
            break;
        }
        if sweeps == MAX_SWEEPS {
            return Err(Error::EigenNoConvergence { sweeps, off });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(HermitianSpectrum { values, vectors })
}

fn off_diagonal_norm(a: &ComplexMatrix) -> f64 {
    let n = a.rows();
    let mut s = 0.0;
    for r in 0..n {
        for c in 0..n {
            if r != c {
                s += a[(r, c)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

fn rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let g = apq.norm();
    if g == 0.0 {
        return;
    }
    let e = apq / g;
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let tau = (aqq - app) / (2.0 * g);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    let es = e.conj();
    let n = a.rows();

    for r in 0..n {
        let ap = a[(r, p)];
        let aq = a[(r, q)];
        a[(r, p)] = c * ap - s * es * aq;
        a[(r, q)] = s * ap + c * es * aq;
        let vp = v[(r, p)];
        let vq = v[(r, q)];
        v[(r, p)] = c * vp - s * es * vq;
        v[(r, q)] = s * vp + c * es * vq;
    }
    for col in 0..n {
        let rp = a[(p, col)];
        let rq = a[(q, col)];
        a[(p, col)] = c * rp - s * e * rq;
        a[(q, col)] = s * rp + c * e * rq;
    }
    a[(p, q)] = ZERO;
    a[(q, p)] = ZERO;
    a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
}

/// `V g(Σ) V†` where `H = V Σ V†`.
pub fn matfun(h: &ComplexMatrix, g: impl Fn(f64) -> f64) -> Result<ComplexMatrix> {
    eigh(h)?.apply(g)
}

/// Sum of singular values.
pub fn trace_norm(a: &ComplexMatrix) -> Result<f64> {
    if !a.is_finite() {
        return Err(Error::NonFinite("trace_norm input".into()));
    }
    if a.is_square() && a.check_hermitian(1e-13).is_ok() {
        return Ok(eigh(a)?.values.iter().map(|x| x.abs()).sum());
    }
    // eigenvalues of [[0, A], [A†, 0]] are ±σ_k plus zeros
    let (r, c) = (a.rows(), a.cols());
    let mut dil = ComplexMatrix::zeros(r + c, r + c);
    dil.set_block(0, r, a);
    dil.set_block(r, 0, &a.adjoint());
    Ok(0.5 * eigh(&dil)?.values.iter().map(|x| x.abs()).sum::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkernel::random::{random_hermitian, rng_from_seed};

    #[test]
    fn diagonal_input_is_sorted() {
        let s = eigh(&ComplexMatrix::from_diagonal(&[0.9, 0.1])).unwrap();
        assert_eq!(s.values, vec![0.1, 0.9]);
        assert!((s.vectors[(1, 0)].norm() - 1.0).abs() < 1e-15);
        assert!((s.vectors[(0, 1)].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn pauli_x() {
        let x = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let s = eigh(&x).unwrap();
        assert!((s.values[0] + 1.0).abs() < 1e-15 && (s.values[1] - 1.0).abs() < 1e-15);
        let v0 = s.vector(0);
        // (1, -1)/√2 up to phase
        assert!((v0[0] + v0[1]).norm() < 1e-14);
        let v1 = s.vector(1);
        assert!((v1[0] - v1[1]).norm() < 1e-14);
    }

    #[test]
    fn reconstruction_on_random_matrices() {
        let mut rng = rng_from_seed(11);
        for n in [1, 2, 3, 8, 17] {
            let h = random_hermitian(n, &mut rng);
            let s = eigh(&h).unwrap();
            assert!(s.reconstruct().max_abs_diff(&h) <= 1e-10 * h.max_abs().max(1.0));
            assert!(s.vectors.unitarity_residual() < 1e-12);
            assert!(s.values.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn matfun_scalar_and_square() {
        let half = matfun(&ComplexMatrix::from_diagonal(&[0.25]), f64::sqrt).unwrap();
        assert!((half[(0, 0)].re - 0.5).abs() < 1e-15);
        let mut rng = rng_from_seed(3);
        let h = random_hermitian(4, &mut rng);
        let sq = matfun(&h, |x| x * x).unwrap();
        assert!(sq.max_abs_diff(&h.matmul(&h)) < 1e-12);
        assert!(matfun(&h, |x| x / 0.0).is_err());
    }

    #[test]
    fn trace_norm_basics() {
        assert!((trace_norm(&ComplexMatrix::identity(5)).unwrap() - 5.0).abs() < 1e-13);
        assert_eq!(trace_norm(&ComplexMatrix::zeros(3, 3)).unwrap(), 0.0);
        let u = [C64::new(0.6, 0.0), C64::new(0.0, 0.8)];
        let v = [C64::new(0.0, 1.0), ZERO, ZERO];
        let outer = ComplexMatrix::from_fn(2, 3, |r, c| u[r] * v[c].conj());
        assert!((trace_norm(&outer).unwrap() - 1.0).abs() < 1e-13);
    }
}
