use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use crate::error::{Error, Result};
use crate::numkernel::{eigh, ComplexMatrix, C64};
use crate::polyapprox::{ChebyshevSeries, Parity};

use super::{chebyshev_nodes, Mat2, PhaseFactorSet, IZ};

/// Smallest `1 − max|f|` accepted by the optimizer.
pub const MIN_MARGIN: f64 = 1e-8;

/// Curvature model used by the trust-region iteration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SynthesisMethod {
    /// Model Hessian `JᵀJ` rebuilt every step (Levenberg-Marquardt style).
    GaussNewton,
    /// Model Hessian seeded with `JᵀJ` and refined by symmetric-rank-one updates.
    Sr1,
}

#[derive(Clone, Copy, Debug)]
pub struct SynthesisOptions {
    pub tol: f64,
    pub max_iterations: usize,
    pub method: SynthesisMethod,
}

impl SynthesisOptions {
    pub fn with_tol(tol: f64) -> Self {
        SynthesisOptions {
            tol,
            max_iterations: 500,
            method: SynthesisMethod::GaussNewton,
        }
    }
}

/// Phases together with the optimizer trace.
#[derive(Clone, Debug)]
pub struct Synthesis {
    pub phases: PhaseFactorSet,
    pub iterations: usize,
    /// `max |Re P − f|` on the `2d`-node Chebyshev check grid.
    pub residual: f64,
    pub history: Vec<f64>,
}

/// Symmetric SU(2) phases with `Re P = f` to `tol` on a `2d`-node Chebyshev grid.
pub fn synthesize_symmetric(f: &ChebyshevSeries, tol: f64) -> Result<PhaseFactorSet> {
    synthesize_with(f, SynthesisOptions::with_tol(tol)).map(|s| s.phases)
}

pub fn synthesize_with(f: &ChebyshevSeries, opts: SynthesisOptions) -> Result<Synthesis> {
    let d = f.degree();
    let c = f.coeffs();
    match f.parity() {
        Parity::None => {
            return Err(Error::Domain("target must have definite parity".into()));
        }
        p if p != Parity::of_degree(d) => {
            return Err(Error::Domain(format!("target parity {p:?} disagrees with degree {d}")));
        }
        _ => {}
    }

    if d == 0 {
        let c0 = c[0];
        if c0.abs() > 1.0 {
            return Err(Error::Margin {
                max_abs: c0.abs(),
                margin: MIN_MARGIN,
            });
        }
        return closed_form(vec![c0.acos()]);
    }
    let lower_zero = c[..d].iter().all(|v| v.abs() <= 1e-14);
    if lower_zero && (c[d] - 1.0).abs() <= 1e-14 {
        return closed_form(vec![0.0; d + 1]);
    }
    if lower_zero && (c[d] + 1.0).abs() <= 1e-14 {
        let mut v = vec![0.0; d + 1];
        v[0] = FRAC_PI_2;
        v[d] = FRAC_PI_2;
        return closed_form(v);
    }

    let max_abs = f.max_abs_on(-1.0, 1.0);
    if max_abs > 1.0 - MIN_MARGIN {
        return Err(Error::Margin {
            max_abs,
            margin: MIN_MARGIN,
        });
    }

    let dt = (d + 2) / 2;
    let xs: Vec<f64> = (1..=dt)
        .map(|j| ((2 * j - 1) as f64 * PI / (4 * dt) as f64).cos())
        .collect();
    let fx: Vec<f64> = xs.iter().map(|&x| f.eval(x)).collect();
    let target = (0.1 * opts.tol).max(1e-15);

    let mut half = vec![0.0; dt];
    half[0] = FRAC_PI_4;
    let (mut r, mut jac) = residual_jacobian(&half, d, &xs, &fx);
    let mut g = gradient(&jac, &r);
    let mut b = gram(&jac);
    let mut radius = 1.0;
    let mut history = vec![max_abs_of(&r)];
    let mut iterations = 0;

    while max_abs_of(&r) > target && iterations < opts.max_iterations && radius > 1e-15 {
        iterations += 1;
        if opts.method == SynthesisMethod::GaussNewton {
            b = gram(&jac);
        }
        let s = trust_step(&b, &g, radius)?;
        let trial: Vec<f64> = half.iter().zip(&s).map(|(h, s)| h + s).collect();
        let (r2, j2) = residual_jacobian(&trial, d, &xs, &fx);
        let f_old = 0.5 * dot(&r, &r);
        let f_new = 0.5 * dot(&r2, &r2);
        let bs = matvec(&b, &s);
        let predicted = -(dot(&g, &s) + 0.5 * dot(&s, &bs));
        let rho = if predicted > 0.0 {
            (f_old - f_new) / predicted
        } else {
            -1.0
        };
        let g2 = gradient(&j2, &r2);
        if opts.method == SynthesisMethod::Sr1 {
            let v: Vec<f64> = g2.iter().zip(&g).zip(&bs).map(|((a, b), c)| a - b - c).collect();
            let sv = dot(&s, &v);
            if sv.abs() > 1e-8 * norm(&s) * norm(&v) {
                for (i, row) in b.iter_mut().enumerate() {
                    for (k, e) in row.iter_mut().enumerate() {
                        *e += v[i] * v[k] / sv;
                    }
                }
            }
        }
        if rho > 0.1 {
            half = trial;
            r = r2;
            jac = j2;
            g = g2;
        }
        if rho > 0.75 && norm(&s) > 0.8 * radius {
            radius *= 2.0;
        } else if rho < 0.25 {
            radius *= 0.25;
        }
        history.push(max_abs_of(&r));
    }

    let phases = PhaseFactorSet::su2(expand(&half, d))?;
    let residual = chebyshev_nodes(2 * d)
        .into_iter()
        .map(|x| (super::qsp_product(x, phases.values()).0[0][0].re - f.eval(x)).abs())
        .fold(0.0, f64::max);
    if residual > opts.tol {
        return Err(Error::SynthesisStalled {
            residual,
            tol: opts.tol,
            iterations,
            history,
        });
    }
    Ok(Synthesis {
        phases,
        iterations,
        residual,
        history,
    })
}

fn closed_form(v: Vec<f64>) -> Result<Synthesis> {
    Ok(Synthesis {
        phases: PhaseFactorSet::su2(v)?,
        iterations: 0,
        residual: 0.0,
        history: Vec::new(),
    })
}

fn expand(half: &[f64], d: usize) -> Vec<f64> {
    (0..=d).map(|k| half[k.min(d - k)]).collect()
}

/// Residuals `Re P(x_j) − f(x_j)` and their derivatives in the free half of the phases.
fn residual_jacobian(half: &[f64], d: usize, xs: &[f64], fx: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let psi = expand(half, d);
    let dt = half.len();
    let mut r = Vec::with_capacity(xs.len());
    let mut jac = Vec::with_capacity(xs.len());
    let mut full = vec![0.0; d + 1];
    for (&x, &target) in xs.iter().zip(fx) {
        let w = Mat2::signal(x);
        let factors: Vec<Mat2> = (0..=d)
            .map(|k| {
                if k == 0 {
                    Mat2::z_rotation(psi[0])
                } else {
                    w * Mat2::z_rotation(psi[k])
                }
            })
            .collect();
        let mut suffix = vec![Mat2::IDENTITY; d + 2];
        for k in (0..=d).rev() {
            suffix[k] = factors[k] * suffix[k + 1];
        }
        let mut prefix = Mat2::IDENTITY;
        for k in 0..=d {
            prefix = prefix * factors[k];
            // factor k is A·e^{iψZ}; its derivative appends iZ
            full[k] = (prefix * IZ * suffix[k + 1]).0[0][0].re;
        }
        r.push(prefix.0[0][0].re - target);
        let row: Vec<f64> = (0..dt)
            .map(|k| if d - k != k { full[k] + full[d - k] } else { full[k] })
            .collect();
        jac.push(row);
    }
    (r, jac)
}

fn gradient(jac: &[Vec<f64>], r: &[f64]) -> Vec<f64> {
    let n = jac[0].len();
    (0..n).map(|k| jac.iter().zip(r).map(|(row, ri)| row[k] * ri).sum()).collect()
}

fn gram(jac: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = jac[0].len();
    (0..n)
        .map(|a| (0..n).map(|b| jac.iter().map(|row| row[a] * row[b]).sum()).collect())
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn max_abs_of(a: &[f64]) -> f64 {
    a.iter().map(|v| v.abs()).fold(0.0, f64::max)
}

fn matvec(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter().map(|row| dot(row, v)).collect()
}

/// Approximate trust-region step: shift the model Hessian until it is positive definite
/// and the step fits in the radius.
fn trust_step(b: &[Vec<f64>], g: &[f64], radius: f64) -> Result<Vec<f64>> {
    let n = g.len();
    let bm = ComplexMatrix::from_fn(n, n, |r, c| C64::new(0.5 * (b[r][c] + b[c][r]), 0.0));
    let spec = eigh(&bm)?;
    let vecs: Vec<Vec<f64>> = (0..n).map(|k| spec.vector(k).iter().map(|z| z.re).collect()).collect();
    let gt: Vec<f64> = vecs.iter().map(|v| dot(v, g)).collect();
    let w = &spec.values;
    let step = |lam: f64| -> Vec<f64> {
        let mut s = vec![0.0; n];
        for k in 0..n {
            let coef = gt[k] / (w[k] + lam);
            for (si, vi) in s.iter_mut().zip(&vecs[k]) {
                *si -= coef * vi;
            }
        }
        s
    };
    let lam0 = if w[0] > 1e-14 * w[n - 1].abs().max(1e-300) {
        0.0
    } else {
        -w[0] + 1e-12 * w[n - 1].abs().max(1.0)
    };
    let s = step(lam0);
    if norm(&s) <= radius {
        return Ok(s);
    }
    let (mut lo, mut hi) = (lam0, lam0 + 1e8);
    for _ in 0..200 {
        let mid = if lo > 0.0 { (lo * hi).sqrt() } else { hi * 1e-12 };
        if norm(&step(mid)) > radius {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi <= lo * (1.0 + 1e-6) {
            break;
        }
    }
    Ok(step(hi))
}
