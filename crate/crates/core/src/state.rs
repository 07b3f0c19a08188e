use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::MAX_QUBITS;

/// Dense amplitude vector over `2^n` computational basis states.
///
/// Qubit `m` carries weight `2^m` in the basis index (little-endian).
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n: u32,
    amps: Vec<Complex64>,
}

pub(crate) fn check_capacity(qubits: u32) -> Result<()> {
    if qubits > MAX_QUBITS {
        return Err(Error::Capacity {
            qubits,
            max: MAX_QUBITS,
        });
    }
    Ok(())
}

impl StateVector {
    /// `|0...0>` on `n` qubits.
    pub fn zero(n: u32) -> Result<Self> {
        Self::basis(n, 0)
    }

    pub fn basis(n: u32, index: usize) -> Result<Self> {
        check_capacity(n)?;
        let len = 1usize << n;
        if index >= len {
            return Err(Error::OutOfRange {
                what: "basis index",
                value: index as u64,
                limit: len as u64,
            });
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); len];
        amps[index] = Complex64::new(1.0, 0.0);
        Ok(Self { n, amps })
    }

    /// Wraps amplitudes as given. The length must be a power of two.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let len = amps.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(len));
        }
        let n = len.trailing_zeros();
        check_capacity(n)?;
        Ok(Self { n, amps })
    }

    pub fn from_real(amps: &[f64]) -> Result<Self> {
        Self::from_amplitudes(amps.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    /// Like [`from_amplitudes`](Self::from_amplitudes) but rescales to unit norm.
    pub fn normalized(amps: Vec<Complex64>) -> Result<Self> {
        let mut s = Self::from_amplitudes(amps)?;
        let norm = s.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::ZeroNorm);
        }
        s.amps.iter_mut().for_each(|a| *a /= norm);
        Ok(s)
    }

    pub fn num_qubits(&self) -> u32 {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub(crate) fn amps_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        if self.n != other.n {
            return Err(Error::QubitMismatch {
                left: self.n,
                right: other.n,
            });
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// `|<self|other>|^2`, insensitive to global phase.
    pub fn fidelity(&self, other: &Self) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Distribution of the lowest `low` qubits, summing over the rest.
    pub fn low_marginal(&self, low: u32) -> Result<Vec<f64>> {
        if low > self.n {
            return Err(Error::OutOfRange {
                what: "register width",
                value: low as u64,
                limit: self.n as u64,
            });
        }
        let mask = (1usize << low) - 1;
        let mut out = vec![0.0; 1 << low];
        for (i, a) in self.amps.iter().enumerate() {
            out[i & mask] += a.norm_sqr();
        }
        Ok(out)
    }

    /// Probability that `qubit` reads 0.
    pub fn prob_zero(&self, qubit: u32) -> Result<f64> {
        if qubit >= self.n {
            return Err(Error::OutOfRange {
                what: "qubit index",
                value: qubit as u64,
                limit: self.n as u64,
            });
        }
        let bit = 1usize << qubit;
        Ok(self
            .amps
            .iter()
            .enumerate()
            .filter(|(i, _)| i & bit == 0)
            .map(|(_, a)| a.norm_sqr())
            .sum())
    }

    /// `self ⊗ high`: `self` occupies the low qubits.
    pub fn tensor(&self, high: &Self) -> Result<Self> {
        check_capacity(self.n + high.n)?;
        let mut amps = Vec::with_capacity(self.dim() * high.dim());
        for h in &high.amps {
            amps.extend(self.amps.iter().map(|l| l * h));
        }
        Ok(Self {
            n: self.n + high.n,
            amps,
        })
    }
}

/// Sums a distribution over its lowest `drop` bits.
pub fn coarsen(probs: &[f64], drop: u32) -> Vec<f64> {
    let stride = 1usize << drop;
    probs.chunks(stride).map(|c| c.iter().sum()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tensor_places_first_factor_low() {
        let a = StateVector::basis(1, 1).unwrap();
        let b = StateVector::basis(2, 2).unwrap();
        let ab = a.tensor(&b).unwrap();
        assert_eq!(ab.num_qubits(), 3);
        assert_eq!(ab.amplitudes()[0b101].re, 1.0);
    }

    #[test]
    fn rejects_bad_lengths_and_capacity() {
        assert!(matches!(
            StateVector::from_amplitudes(vec![Complex64::new(1.0, 0.0); 3]),
            Err(Error::NotPowerOfTwo(3))
        ));
        assert!(matches!(
            StateVector::zero(MAX_QUBITS + 1),
            Err(Error::Capacity { .. })
        ));
    }

    #[test]
    fn marginal_and_coarsen_agree() {
        let s = StateVector::normalized(
            (0..8).map(|i| Complex64::new(i as f64, 1.0)).collect(),
        )
        .unwrap();
        let p = s.probabilities();
        let high = coarsen(&p, 1);
        assert_eq!(high.len(), 4);
        assert!((high.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let low = s.low_marginal(2).unwrap();
        for k in 0..4 {
            assert!((low[k] - (p[k] + p[k + 4])).abs() < 1e-15);
        }
    }
}
