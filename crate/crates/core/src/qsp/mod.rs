//! Quantum signal processing: phase factors, their SU(2) products, the polynomial pair
//! `(P, Q)`, convention changes and symmetric phase synthesis.

mod poly;
mod synth;

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use std::ops::Mul;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkernel::{ComplexMatrix, C64, I, ONE, ZERO};

pub use poly::{extract_pq, QspPolynomialPair};
pub use synth::{
    synthesize_symmetric, synthesize_with, Synthesis, SynthesisMethod, SynthesisOptions, MIN_MARGIN,
};

/// Palindrome tolerance for [`PhaseFactorSet::is_symmetric`].
pub const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Convention {
    /// Angles of the `e^{iψZ}` rotations in the SU(2) product.
    Su2,
    /// Angles of the controlled rotations in the QSVT circuit.
    Circuit,
}

/// Phase factors `(ψ_0, …, ψ_d)` tagged with their convention.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PhaseRepr", into = "PhaseRepr")]
pub struct PhaseFactorSet {
    convention: Convention,
    values: Vec<f64>,
    symmetric: bool,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PhaseRepr {
    convention: Convention,
    values: Vec<f64>,
}

impl TryFrom<PhaseRepr> for PhaseFactorSet {
    type Error = Error;
    fn try_from(r: PhaseRepr) -> Result<Self> {
        PhaseFactorSet::new(r.convention, r.values)
    }
}

impl From<PhaseFactorSet> for PhaseRepr {
    fn from(p: PhaseFactorSet) -> Self {
        PhaseRepr {
            convention: p.convention,
            values: p.values,
        }
    }
}

impl PhaseFactorSet {
    pub fn new(convention: Convention, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Domain("phase factor set needs at least one angle".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("phase factor".into()));
        }
        let d = values.len() - 1;
        let symmetric = (0..=d).all(|j| (values[j] - values[d - j]).abs() <= SYMMETRY_TOL);
        Ok(PhaseFactorSet {
            convention,
            values,
            symmetric,
        })
    }

    pub fn su2(values: Vec<f64>) -> Result<Self> {
        Self::new(Convention::Su2, values)
    }

    pub fn circuit(values: Vec<f64>) -> Result<Self> {
        Self::new(Convention::Circuit, values)
    }

    pub fn convention(&self) -> Convention {
        self.convention
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn degree(&self) -> usize {
        self.values.len() - 1
    }

    /// Palindromic to [`SYMMETRY_TOL`] in the stored convention.
    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// Symmetry in the SU(2) convention, which is what the QSP symmetry results refer to.
    pub fn is_su2_symmetric(&self) -> bool {
        match self.convention {
            Convention::Su2 => self.symmetric,
            Convention::Circuit => to_su2(self).map(|p| p.symmetric).unwrap_or(false),
        }
    }

    /// Entrywise negation, same convention.
    pub fn negated(&self) -> Self {
        PhaseFactorSet::new(self.convention, self.values.iter().map(|v| -v).collect())
            .expect("negation keeps values finite")
    }

    fn expect(&self, c: Convention) -> Result<()> {
        if self.convention != c {
            return Err(Error::Domain(format!(
                "expected {c:?} phase factors, got {:?}",
                self.convention
            )));
        }
        Ok(())
    }
}

fn shifts(d: usize) -> Vec<f64> {
    let sign = |p: usize| if p % 2 == 0 { 1.0 } else { -1.0 };
    (0..=d)
        .map(|k| {
            if k == d {
                FRAC_PI_4
            } else if k == 0 {
                sign(d) * FRAC_PI_4
            } else {
                sign(d - k) * FRAC_PI_2
            }
        })
        .collect()
}

/// Circuit angles to SU(2) angles.
pub fn to_su2(phi: &PhaseFactorSet) -> Result<PhaseFactorSet> {
    phi.expect(Convention::Circuit)?;
    let s = shifts(phi.degree());
    PhaseFactorSet::su2(phi.values.iter().zip(&s).map(|(v, s)| v + s).collect())
}

/// SU(2) angles to circuit angles; inverse of [`to_su2`].
pub fn to_circuit(psi: &PhaseFactorSet) -> Result<PhaseFactorSet> {
    psi.expect(Convention::Su2)?;
    let s = shifts(psi.degree());
    PhaseFactorSet::circuit(psi.values.iter().zip(&s).map(|(v, s)| v - s).collect())
}

/// Raises an even-degree symmetric SU(2) sequence to `degree` without changing its unitary by
/// repeatedly replacing the center angle `ψ_c` with `(a, π/2, a)`, `a = (ψ_c − π/2)/2`.
pub fn pad_symmetric(psi: &PhaseFactorSet, degree: usize) -> Result<PhaseFactorSet> {
    psi.expect(Convention::Su2)?;
    let d = psi.degree();
    if d % 2 == 1 || degree < d || (degree - d) % 2 == 1 {
        return Err(Error::Domain(format!("cannot pad degree {d} to {degree}")));
    }
    if !psi.is_symmetric() {
        return Err(Error::NonSymmetricPhases);
    }
    let mut v = psi.values.clone();
    while v.len() < degree + 1 {
        let c = v.len() / 2;
        let a = 0.5 * (v[c] - FRAC_PI_2);
        v.splice(c..=c, [a, FRAC_PI_2, a]);
    }
    PhaseFactorSet::su2(v)
}

/// A 2×2 complex matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat2(pub [[C64; 2]; 2]);

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2([[ONE, ZERO], [ZERO, ONE]]);

    /// `e^{iψZ}`.
    pub fn z_rotation(psi: f64) -> Mat2 {
        Mat2([[C64::from_polar(1.0, psi), ZERO], [ZERO, C64::from_polar(1.0, -psi)]])
    }

    /// `e^{i arccos(x) X}`.
    pub fn signal(x: f64) -> Mat2 {
        let s = C64::new(0.0, (1.0 - x * x).max(0.0).sqrt());
        let c = C64::new(x, 0.0);
        Mat2([[c, s], [s, c]])
    }

    pub fn adjoint(&self) -> Mat2 {
        let m = self.0;
        Mat2([[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]])
    }

    pub fn conj(&self) -> Mat2 {
        let m = self.0;
        Mat2([[m[0][0].conj(), m[0][1].conj()], [m[1][0].conj(), m[1][1].conj()]])
    }

    pub fn det(&self) -> C64 {
        let m = self.0;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    pub fn max_abs_diff(&self, other: &Mat2) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..2 {
            for c in 0..2 {
                worst = worst.max((self.0[r][c] - other.0[r][c]).norm());
            }
        }
        worst
    }

    pub fn to_matrix(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(2, 2, |r, c| self.0[r][c])
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, b: Mat2) -> Mat2 {
        let a = self.0;
        let b = b.0;
        Mat2([
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        ])
    }
}

/// Pauli `iZ`, the derivative generator of `e^{iψZ}`.
pub(crate) const IZ: Mat2 = Mat2([[I, ZERO], [ZERO, C64::new(0.0, -1.0)]]);

/// Clamps `x` into `[−1, 1]` when it lies outside by at most `1e-14`.
pub(crate) fn clamp_signal(x: f64) -> Result<f64> {
    if !x.is_finite() || x.abs() > 1.0 + 1e-14 {
        return Err(Error::Domain(format!("signal x = {x} outside [-1, 1]")));
    }
    Ok(x.clamp(-1.0, 1.0))
}

/// `e^{iψ_0 Z} ∏_j e^{i arccos(x) X} e^{iψ_j Z}`.
pub fn qsp_unitary(x: f64, psi: &PhaseFactorSet) -> Result<Mat2> {
    psi.expect(Convention::Su2)?;
    let x = clamp_signal(x)?;
    Ok(qsp_product(x, psi.values()))
}

pub(crate) fn qsp_product(x: f64, psi: &[f64]) -> Mat2 {
    let w = Mat2::signal(x);
    psi[1..]
        .iter()
        .fold(Mat2::z_rotation(psi[0]), |acc, &p| acc * w * Mat2::z_rotation(p))
}

/// Outcome of [`conjugation_identity_check`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConjugationReport {
    pub max_deviation: f64,
    pub worst_x: f64,
    pub pass: bool,
}

/// Compares `U(x, ι(−Φ))` with the entrywise conjugate of `U(x, ι(Φ))` over `grid`.
pub fn conjugation_identity_check(phi: &PhaseFactorSet, grid: &[f64]) -> Result<ConjugationReport> {
    let plus = to_su2(phi)?;
    let minus = to_su2(&phi.negated())?;
    let mut report = ConjugationReport {
        max_deviation: 0.0,
        worst_x: grid.first().copied().unwrap_or(0.0),
        pass: true,
    };
    for &x in grid {
        let dev = qsp_unitary(x, &minus)?.max_abs_diff(&qsp_unitary(x, &plus)?.conj());
        if dev > report.max_deviation {
            report.max_deviation = dev;
            report.worst_x = x;
        }
    }
    report.pass = report.max_deviation <= 1e-10;
    Ok(report)
}

/// `n` Chebyshev nodes `cos((j + ½)π / n)`.
pub fn chebyshev_nodes(n: usize) -> Vec<f64> {
    (0..n)
        .map(|j| ((j as f64 + 0.5) * std::f64::consts::PI / n as f64).cos())
        .collect()
}
