use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::numkernel::{C64, I, ZERO};
use crate::polyapprox::ChebyshevSeries;

use super::{chebyshev_nodes, qsp_product, Convention, PhaseFactorSet};

const VALIDATION_POINTS: usize = 97;
const INTERPOLATION_TOL: f64 = 1e-9;

/// The polynomials `P` (degree ≤ d) and `Q` (degree ≤ d − 1) of a QSP sequence, stored as
/// complex Chebyshev coefficients: `U = [[P, i√(1−x²) Q], [i√(1−x²) Q*, P*]]`.
#[derive(Clone, Debug, PartialEq)]
pub struct QspPolynomialPair {
    pub degree: usize,
    pub p: Vec<C64>,
    pub q: Vec<C64>,
}

fn eval_complex(c: &[C64], x: f64) -> C64 {
    if c.is_empty() {
        return ZERO;
    }
    let mut b1 = ZERO;
    let mut b2 = ZERO;
    for &ck in c.iter().skip(1).rev() {
        let b0 = ck + 2.0 * x * b1 - b2;
        b2 = b1;
        b1 = b0;
    }
    c[0] + x * b1 - b2
}

fn real_series(c: &[C64], part: impl Fn(C64) -> f64) -> ChebyshevSeries {
    let coeffs: Vec<f64> = if c.is_empty() {
        vec![0.0]
    } else {
        c.iter().map(|z| part(*z)).collect()
    };
    ChebyshevSeries::from_coeffs(coeffs).expect("finite coefficients")
}

fn interpolate(values: &[C64]) -> Vec<C64> {
    let n = values.len();
    (0..n)
        .map(|k| {
            let s: C64 = values
                .iter()
                .enumerate()
                .map(|(j, v)| v * (k as f64 * (j as f64 + 0.5) * PI / n as f64).cos())
                .sum();
            let c = s * (2.0 / n as f64);
            if k == 0 {
                c / 2.0
            } else {
                c
            }
        })
        .collect()
}

impl QspPolynomialPair {
    pub fn p_at(&self, x: f64) -> C64 {
        eval_complex(&self.p, x)
    }

    pub fn q_at(&self, x: f64) -> C64 {
        eval_complex(&self.q, x)
    }

    pub fn p_re(&self) -> ChebyshevSeries {
        real_series(&self.p, |z| z.re)
    }

    pub fn p_im(&self) -> ChebyshevSeries {
        real_series(&self.p, |z| z.im)
    }

    pub fn q_re(&self) -> ChebyshevSeries {
        real_series(&self.q, |z| z.re)
    }

    pub fn q_im(&self) -> ChebyshevSeries {
        real_series(&self.q, |z| z.im)
    }

    /// `max_x | |P|² + (1−x²)|Q|² − 1 |` over `grid`.
    pub fn normalization_residual(&self, grid: &[f64]) -> f64 {
        grid.iter()
            .map(|&x| (self.p_at(x).norm_sqr() + (1.0 - x * x) * self.q_at(x).norm_sqr() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Largest imaginary part among the coefficients of `Q`.
    pub fn q_imag_max(&self) -> f64 {
        self.q.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    /// Largest coefficient of `P` (resp. `Q`) with the wrong parity.
    pub fn parity_violation(&self) -> f64 {
        let d = self.degree;
        let p_bad = self.p.iter().skip((d + 1) % 2).step_by(2);
        let q_bad = self.q.iter().skip(d % 2).step_by(2);
        p_bad.chain(q_bad).map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Interpolates `P` and `Q` from the QSP unitary at Chebyshev nodes and checks the result
/// on an independent grid.
pub fn extract_pq(psi: &PhaseFactorSet) -> Result<QspPolynomialPair> {
    if psi.convention() != Convention::Su2 {
        return Err(Error::Domain("extract_pq expects su2 phase factors".into()));
    }
    let d = psi.degree();
    let v = psi.values();
    let p_vals: Vec<C64> = chebyshev_nodes(d + 1)
        .into_iter()
        .map(|x| qsp_product(x, v).0[0][0])
        .collect();
    let q_vals: Vec<C64> = chebyshev_nodes(d)
        .into_iter()
        .map(|x| qsp_product(x, v).0[0][1] / (I * (1.0 - x * x).sqrt()))
        .collect();
    let pair = QspPolynomialPair {
        degree: d,
        p: interpolate(&p_vals),
        q: interpolate(&q_vals),
    };

    let mut residual: f64 = 0.0;
    for j in 0..VALIDATION_POINTS {
        let x = -1.0 + 2.0 * j as f64 / (VALIDATION_POINTS - 1) as f64;
        let u = qsp_product(x, v);
        let s = (1.0 - x * x).max(0.0).sqrt();
        residual = residual
            .max((pair.p_at(x) - u.0[0][0]).norm())
            .max((I * s * pair.q_at(x) - u.0[0][1]).norm());
    }
    if residual > INTERPOLATION_TOL {
        return Err(Error::Interpolation { residual });
    }
    Ok(pair)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkernel::rng_from_seed;
    use rand::Rng;
    use std::f64::consts::FRAC_PI_2;

    fn grid(n: usize) -> Vec<f64> {
        (0..n).map(|j| -1.0 + 2.0 * j as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn zero_phases_give_chebyshev_pair() {
        for d in 1..8 {
            let pair = extract_pq(&PhaseFactorSet::su2(vec![0.0; d + 1]).unwrap()).unwrap();
            for &x in &grid(41) {
                let t = (d as f64 * x.acos()).cos();
                assert!((pair.p_at(x) - C64::new(t, 0.0)).norm() < 1e-12);
                // U_{d-1}(x) = sin(d θ) / sin θ
                let th = x.acos();
                let u = if th.sin().abs() < 1e-9 {
                    d as f64 * if x > 0.0 { 1.0 } else { (-1f64).powi(d as i32 - 1) }
                } else {
                    (d as f64 * th).sin() / th.sin()
                };
                assert!((pair.q_at(x) - C64::new(u, 0.0)).norm() < 1e-10, "d={d} x={x}");
            }
        }
    }

    #[test]
    fn constant_sequence() {
        let pair = extract_pq(&PhaseFactorSet::su2(vec![FRAC_PI_2]).unwrap()).unwrap();
        assert!((pair.p_at(0.4) - I).norm() < 1e-15);
        assert!(pair.q.is_empty());
        assert_eq!(pair.q_at(0.4), ZERO);
    }

    #[test]
    fn symmetric_phases_give_real_q() {
        let mut rng = rng_from_seed(21);
        for _ in 0..20 {
            let d = 9;
            let half: Vec<f64> = (0..5).map(|_| rng.random_range(-3.0..3.0)).collect();
            let v: Vec<f64> = (0..=d).map(|j| half[j.min(d - j)]).collect();
            let pair = extract_pq(&PhaseFactorSet::su2(v).unwrap()).unwrap();
            assert!(pair.q_imag_max() < 1e-10);
            assert!(pair.normalization_residual(&grid(401)) < 1e-10);
            assert!(pair.parity_violation() < 1e-10);
        }
    }

    #[test]
    fn rejects_circuit_convention() {
        assert!(extract_pq(&PhaseFactorSet::circuit(vec![0.0]).unwrap()).is_err());
    }
}
