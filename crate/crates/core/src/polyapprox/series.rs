use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest off-parity coefficient magnitude tolerated by a parity tag.
pub const PARITY_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
    None,
}

impl Parity {
    pub fn of_degree(d: usize) -> Parity {
        if d % 2 == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }
}

/// Real polynomial `Σ c_k T_k(x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SeriesRepr", into = "SeriesRepr")]
pub struct ChebyshevSeries {
    parity: Parity,
    coeffs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SeriesRepr {
    parity: Parity,
    coeffs: Vec<f64>,
}

impl TryFrom<SeriesRepr> for ChebyshevSeries {
    type Error = Error;
    fn try_from(r: SeriesRepr) -> Result<Self> {
        ChebyshevSeries::new(r.coeffs, r.parity)
    }
}

impl From<ChebyshevSeries> for SeriesRepr {
    fn from(s: ChebyshevSeries) -> Self {
        SeriesRepr {
            parity: s.parity,
            coeffs: s.coeffs,
        }
    }
}

impl ChebyshevSeries {
    /// Validates finiteness and the parity tag; off-parity coefficients are not altered.
    pub fn new(coeffs: Vec<f64>, parity: Parity) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Domain("Chebyshev series needs at least one coefficient".into()));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("Chebyshev coefficient".into()));
        }
        let skip = match parity {
            Parity::Even => 1,
            Parity::Odd => 0,
            Parity::None => usize::MAX,
        };
        if skip != usize::MAX {
            if let Some((k, c)) = coeffs
                .iter()
                .enumerate()
                .skip(skip)
                .step_by(2)
                .find(|(_, c)| c.abs() > PARITY_TOL)
            {
                return Err(Error::Domain(format!(
                    "{parity:?} series has coefficient {c:e} at index {k}"
                )));
            }
        }
        Ok(ChebyshevSeries { parity, coeffs })
    }

    /// Tags the parity from the coefficients themselves.
    pub fn from_coeffs(coeffs: Vec<f64>) -> Result<Self> {
        let odd_zero = coeffs.iter().skip(1).step_by(2).all(|c| c.abs() <= PARITY_TOL);
        let even_zero = coeffs.iter().step_by(2).all(|c| c.abs() <= PARITY_TOL);
        let parity = if odd_zero {
            Parity::Even
        } else if even_zero {
            Parity::Odd
        } else {
            Parity::None
        };
        Self::new(coeffs, parity)
    }

    /// `T_d`.
    pub fn chebyshev_t(d: usize) -> Self {
        let mut c = vec![0.0; d + 1];
        c[d] = 1.0;
        ChebyshevSeries {
            parity: Parity::of_degree(d),
            coeffs: c,
        }
    }

    pub fn constant(c: f64) -> Self {
        ChebyshevSeries {
            parity: Parity::Even,
            coeffs: vec![c],
        }
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Index of the last coefficient above [`PARITY_TOL`] (0 for the zero series).
    pub fn degree(&self) -> usize {
        self.coeffs
            .iter()
            .rposition(|c| c.abs() > PARITY_TOL)
            .unwrap_or(0)
    }

    pub fn scaled(&self, s: f64) -> Self {
        ChebyshevSeries {
            parity: self.parity,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    /// Truncates to degree at most `d`.
    pub fn truncated(&self, d: usize) -> Self {
        ChebyshevSeries {
            parity: self.parity,
            coeffs: self.coeffs[..(d + 1).min(self.coeffs.len())].to_vec(),
        }
    }

    /// Clenshaw recurrence. Even series run the recurrence in `2x² − 1` over half the terms.
    pub fn eval(&self, x: f64) -> f64 {
        if self.parity == Parity::Even {
            let y = 2.0 * x * x - 1.0;
            let mut b1 = 0.0;
            let mut b2 = 0.0;
            for &ck in self.coeffs.iter().step_by(2).skip(1).rev() {
                let b0 = ck + 2.0 * y * b1 - b2;
                b2 = b1;
                b1 = b0;
            }
            return self.coeffs[0] + y * b1 - b2;
        }
        clenshaw(&self.coeffs, x)
    }

    /// The product `self · self` as a Chebyshev series.
    pub fn squared(&self) -> Self {
        let n = self.coeffs.len();
        let mut out = vec![0.0; 2 * n - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in self.coeffs.iter().enumerate() {
                // T_i T_j = (T_{i+j} + T_{|i-j|}) / 2
                out[i + j] += 0.5 * a * b;
                out[i.abs_diff(j)] += 0.5 * a * b;
            }
        }
        ChebyshevSeries {
            parity: if self.parity == Parity::None {
                Parity::None
            } else {
                Parity::Even
            },
            coeffs: out,
        }
    }

    /// Maximum of `|p|` over `[a, b]`: a dense sweep in angle followed by golden-section
    /// refinement of every local peak.
    pub fn max_abs_on(&self, a: f64, b: f64) -> f64 {
        let d = self.coeffs.len();
        let n = 16 * d + 64;
        let (ta, tb) = (b.clamp(-1.0, 1.0).acos(), a.clamp(-1.0, 1.0).acos());
        let h = (tb - ta) / n as f64;
        let vals: Vec<f64> = (0..=n)
            .map(|j| self.eval((ta + h * j as f64).cos()).abs())
            .collect();
        let mut best = vals.iter().cloned().fold(0.0, f64::max);
        for j in 0..=n {
            let left = if j > 0 { vals[j - 1] } else { f64::NEG_INFINITY };
            let right = if j < n { vals[j + 1] } else { f64::NEG_INFINITY };
            if vals[j] >= left && vals[j] >= right && vals[j] > 0.5 * best {
                let lo = ta + h * (j.max(1) - 1) as f64;
                let hi = ta + h * (j + 1).min(n) as f64;
                best = best.max(self.golden_peak(lo, hi));
            }
        }
        best
    }

    fn golden_peak(&self, mut lo: f64, mut hi: f64) -> f64 {
        let r = 0.5 * (5f64.sqrt() - 1.0);
        let f = |t: f64| self.eval(t.cos()).abs();
        let mut c = hi - r * (hi - lo);
        let mut d = lo + r * (hi - lo);
        let (mut fc, mut fd) = (f(c), f(d));
        for _ in 0..40 {
            if fc > fd {
                hi = d;
                d = c;
                fd = fc;
                c = hi - r * (hi - lo);
                fc = f(c);
            } else {
                lo = c;
                c = d;
                fc = fd;
                d = lo + r * (hi - lo);
                fd = f(d);
            }
        }
        fc.max(fd).max(f(lo)).max(f(hi))
    }
}

/// Evaluates `Σ c_k T_k(x)` by Clenshaw's recurrence.
pub fn clenshaw(c: &[f64], x: f64) -> f64 {
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    for &ck in c.iter().skip(1).rev() {
        let b0 = ck + 2.0 * x * b1 - b2;
        b2 = b1;
        b1 = b0;
    }
    c[0] + x * b1 - b2
}

/// Free-function form of [`ChebyshevSeries::eval`].
pub fn cheb_eval(f: &ChebyshevSeries, x: f64) -> f64 {
    f.eval(x)
}
