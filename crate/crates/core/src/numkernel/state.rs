use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

use super::matrix::{ComplexMatrix, C64, ONE, ZERO};

/// Amplitudes over `qubits` qubits. Not necessarily normalized.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    qubits: usize,
    amps: Vec<C64>,
}

impl StateVector {
    pub fn new(amps: Vec<C64>) -> Result<Self> {
        let len = amps.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(Error::Dimension(format!(
                "state length {len} is not a power of two"
            )));
        }
        if amps.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("state amplitude".into()));
        }
        Ok(StateVector {
            qubits: len.trailing_zeros() as usize,
            amps,
        })
    }

    pub fn zero(qubits: usize) -> Self {
        Self::basis(qubits, 0)
    }

    pub fn basis(qubits: usize, index: usize) -> Self {
        let mut amps = vec![ZERO; 1 << qubits];
        amps[index] = ONE;
        StateVector { qubits, amps }
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::ZeroNorm);
        }
        Ok(self.scaled(C64::new(1.0 / n, 0.0)))
    }

    pub fn scaled(&self, s: C64) -> Self {
        StateVector {
            qubits: self.qubits,
            amps: self.amps.iter().map(|z| z * s).collect(),
        }
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> C64 {
        assert_eq!(self.len(), other.len());
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn distance(&self, other: &StateVector) -> f64 {
        assert_eq!(self.len(), other.len());
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn apply(&self, u: &ComplexMatrix) -> StateVector {
        StateVector {
            qubits: self.qubits,
            amps: u.mul_vec(&self.amps),
        }
    }

    /// `self ⊗ other`, with `self` on the most significant qubits.
    pub fn kron(&self, other: &StateVector) -> StateVector {
        let mut amps = Vec::with_capacity(self.len() * other.len());
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        StateVector {
            qubits: self.qubits + other.qubits,
            amps,
        }
    }

    /// Contiguous slice of amplitudes, e.g. the sector with the top qubits fixed.
    pub fn slice(&self, start: usize, len: usize) -> Vec<C64> {
        self.amps[start..start + len].to_vec()
    }

    /// Outer product `|ψ⟩⟨ψ|`.
    pub fn density(&self) -> ComplexMatrix {
        let n = self.len();
        ComplexMatrix::from_fn(n, n, |r, c| self.amps[r] * self.amps[c].conj())
    }
}

impl Index<usize> for StateVector {
    type Output = C64;
    fn index(&self, i: usize) -> &C64 {
        &self.amps[i]
    }
}

impl IndexMut<usize> for StateVector {
    fn index_mut(&mut self, i: usize) -> &mut C64 {
        &mut self.amps[i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_lengths() {
        assert!(StateVector::new(vec![ONE; 3]).is_err());
        assert!(StateVector::new(vec![]).is_err());
        assert_eq!(StateVector::new(vec![ONE; 8]).unwrap().qubits(), 3);
    }

    #[test]
    fn kron_orders_most_significant_first() {
        let k = StateVector::basis(1, 1).kron(&StateVector::basis(2, 2));
        assert_eq!(k.qubits(), 3);
        assert_eq!(k[6], ONE);
    }

    #[test]
    fn zero_norm_is_rejected() {
        let z = StateVector::new(vec![ZERO; 2]).unwrap();
        assert!(matches!(z.normalized(), Err(Error::ZeroNorm)));
    }
}
