//! Clock-type weak-measurement channels.
//!
//! A channel is fixed by the outcome weights `p_k`, `k ∈ Z_N`, with
//! `p_{j;s} = p_{(j - s) mod N}` and `p_k = p_{-k}`. Equivalently by the
//! cosine couplings `β_m`, `m = 0..=⌊N/2⌋`, through
//! `p_k ∝ exp(Σ_m β_m cos(2πkm/N))`.
//!
//! Log-weights are canonical; probabilities are derived from them so that
//! near-projective channels (`T → 0`) keep finite log-weights even when the
//! probabilities underflow.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default smallest temperature used to stand in for a projective measurement.
pub const DEFAULT_TEMPERATURE_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClockChannel {
    n: usize,
    couplings: Vec<f64>,
    log_weights: Vec<f64>,
    weights: Vec<f64>,
}

/// Number of independent cosine modes, `⌊N/2⌋ + 1`.
pub fn coupling_len(n: usize) -> usize {
    n / 2 + 1
}

fn check_order(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidOrder(n));
    }
    Ok(())
}

impl ClockChannel {
    /// Single-coupling model `p_k ∝ exp(cos(2πk/N) / T)`.
    pub fn from_temperature(n: usize, temperature: f64) -> Result<Self> {
        check_order(n)?;
        if !(temperature > 0.0) || !temperature.is_finite() {
            return Err(Error::InvalidTemperature(temperature));
        }
        let mut couplings = vec![0.0; coupling_len(n)];
        couplings[1] = 1.0 / temperature;
        Self::from_couplings(n, &couplings)
    }

    /// Near-projective channel at [`DEFAULT_TEMPERATURE_FLOOR`].
    pub fn projective(n: usize) -> Result<Self> {
        Self::projective_with_floor(n, DEFAULT_TEMPERATURE_FLOOR)
    }

    pub fn projective_with_floor(n: usize, floor: f64) -> Result<Self> {
        Self::from_temperature(n, floor)
    }

    pub fn from_couplings(n: usize, couplings: &[f64]) -> Result<Self> {
        check_order(n)?;
        let expected = coupling_len(n);
        if couplings.len() != expected {
            return Err(Error::CouplingLength {
                n,
                expected,
                got: couplings.len(),
            });
        }
        if couplings.iter().any(|b| !b.is_finite()) {
            return Err(Error::NonFiniteCoupling);
        }
        // β_0 multiplies cos(0) = 1 for every k and drops out after normalization.
        let alpha: Vec<f64> = (0..n)
            .map(|k| {
                couplings
                    .iter()
                    .enumerate()
                    .skip(1)
                    .map(|(m, b)| b * (2.0 * PI * (k * m) as f64 / n as f64).cos())
                    .sum()
            })
            .collect();
        let max = alpha.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let log_norm = max + alpha.iter().map(|a| (a - max).exp()).sum::<f64>().ln();
        let mut log_weights: Vec<f64> = alpha.iter().map(|a| a - log_norm).collect();
        // Cosines are parity-even analytically; make that exact in floating point.
        for k in 1..n {
            let mirror = n - k;
            if mirror > k {
                let avg = 0.5 * (log_weights[k] + log_weights[mirror]);
                log_weights[k] = avg;
                log_weights[mirror] = avg;
            }
        }
        let weights = log_weights.iter().map(|l| l.exp()).collect();
        Ok(Self {
            n,
            couplings: couplings.to_vec(),
            log_weights,
            weights,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn couplings(&self) -> &[f64] {
        &self.couplings
    }

    /// `p_k` for `k = 0..N`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `ln p_k` for `k = 0..N`.
    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    /// `p_{(charge - outcome) mod N}`.
    pub fn outcome_weight(&self, charge: usize, outcome: usize) -> Result<f64> {
        Ok(self.weights[self.offset(charge, outcome)?])
    }

    pub fn log_outcome_weight(&self, charge: usize, outcome: usize) -> Result<f64> {
        Ok(self.log_weights[self.offset(charge, outcome)?])
    }

    fn offset(&self, charge: usize, outcome: usize) -> Result<usize> {
        for (what, index) in [("charge", charge), ("outcome", outcome)] {
            if index >= self.n {
                return Err(Error::OutOfRange {
                    what,
                    index,
                    bound: self.n,
                });
            }
        }
        Ok((charge + self.n - outcome) % self.n)
    }

    /// Cosine couplings reproducing these weights. `β_0` carries the
    /// normalization constant and is not meaningful on its own.
    pub fn fourier(&self) -> Vec<f64> {
        fourier_couplings(&self.log_weights)
    }

    /// Effective temperature of the single-coupling model, if this channel is one.
    pub fn temperature(&self) -> Option<f64> {
        let b1 = self.couplings[1];
        let others_zero = self.couplings[2..].iter().all(|b| *b == 0.0);
        (others_zero && b1 > 0.0).then(|| 1.0 / b1)
    }

    /// `Σ_j sqrt(p_j p_{j+d})`: the factor a single link channel multiplies
    /// onto a density-matrix element whose two flow labels differ by `d`.
    pub fn overlap(&self, d: usize) -> f64 {
        let n = self.n;
        (0..n)
            .map(|j| (0.5 * (self.log_weights[j] + self.log_weights[(j + d) % n])).exp())
            .sum()
    }
}

/// Discrete cosine inversion of a parity-even log-weight table.
pub fn fourier_couplings(log_weights: &[f64]) -> Vec<f64> {
    let n = log_weights.len();
    (0..coupling_len(n))
        .map(|m| {
            let s: f64 = log_weights
                .iter()
                .enumerate()
                .map(|(k, l)| l * (2.0 * PI * (k * m) as f64 / n as f64).cos())
                .sum();
            if m == 0 || 2 * m == n {
                s / n as f64
            } else {
                2.0 * s / n as f64
            }
        })
        .collect()
}
