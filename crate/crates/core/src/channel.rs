//! Schmidt description of the shared two-qudit channel.

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::state::StateVector;

/// Tolerance on the squared sum of Schmidt coefficients.
pub const CHANNEL_NORM_TOL: f64 = 1e-12;

/// Schmidt coefficients b₀ ≤ b₁ ≤ … ≤ b_{N−1} of the entangled pair the
/// two parties share. The smallest coefficient sets the success
/// probability N·b₀² of a teleportation attempt.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelSpec {
    level_count: usize,
    schmidt: Vec<f64>,
}

impl ChannelSpec {
    /// Validates and wraps a coefficient list: non-negative, ascending, and
    /// normalized so that Σ bⱼ² = 1 within [`CHANNEL_NORM_TOL`].
    pub fn new(schmidt: Vec<f64>) -> Result<Self> {
        let level_count = schmidt.len();
        if level_count < 2 {
            return Err(Error::InvalidLevelCount { level_count });
        }
        for (index, &value) in schmidt.iter().enumerate() {
            if value < 0.0 {
                return Err(Error::ChannelCoefficientNegative { index, value });
            }
            if index > 0 && schmidt[index - 1] > value {
                return Err(Error::ChannelNotAscending { index });
            }
        }
        let sum_sqr: f64 = schmidt.iter().map(|b| b * b).sum();
        let deviation = (sum_sqr - 1.0).abs();
        // Non-finite coefficients are rejected here as well.
        if !deviation.is_finite() || deviation > CHANNEL_NORM_TOL {
            return Err(Error::ChannelNotNormalized { sum_sqr });
        }
        Ok(ChannelSpec {
            level_count,
            schmidt,
        })
    }

    /// All coefficients equal to 1/√N.
    pub fn maximally_entangled(level_count: usize) -> Result<Self> {
        if level_count < 2 {
            return Err(Error::InvalidLevelCount { level_count });
        }
        let b = (level_count as f64).sqrt().recip();
        Ok(ChannelSpec {
            level_count,
            schmidt: vec![b; level_count],
        })
    }

    /// Sets b₀² to the given value and spreads the remaining weight
    /// uniformly over the other N−1 coefficients. Requires
    /// 0 ≤ b₀² ≤ 1/N so the list stays ascending.
    pub fn from_b0_squared(level_count: usize, b0_squared: f64) -> Result<Self> {
        if level_count < 2 {
            return Err(Error::InvalidLevelCount { level_count });
        }
        let cap = 1.0 / level_count as f64;
        if !(0.0..=cap + 1e-12).contains(&b0_squared) {
            return Err(Error::InvalidArgument(format!(
                "b0 squared {b0_squared} outside [0, 1/{level_count}]"
            )));
        }
        let b0_squared = b0_squared.min(cap);
        let rest = ((1.0 - b0_squared) / (level_count - 1) as f64).sqrt();
        let mut schmidt = vec![rest; level_count];
        schmidt[0] = b0_squared.sqrt();
        // Guard against rounding pushing b0 a hair above the rest.
        if schmidt[0] > rest {
            schmidt = vec![(level_count as f64).sqrt().recip(); level_count];
        }
        Ok(ChannelSpec {
            level_count,
            schmidt,
        })
    }

    /// Draws squared coefficients uniformly on the probability simplex,
    /// then sorts ascending.
    pub fn random<R: Rng + ?Sized>(level_count: usize, rng: &mut R) -> Result<Self> {
        if level_count < 2 {
            return Err(Error::InvalidLevelCount { level_count });
        }
        let mut squares: Vec<f64> = (0..level_count)
            .map(|_| -(1.0 - rng.gen::<f64>()).ln())
            .collect();
        let total: f64 = squares.iter().sum();
        for s in &mut squares {
            *s /= total;
        }
        squares.sort_by(f64::total_cmp);
        Ok(ChannelSpec {
            level_count,
            schmidt: squares.into_iter().map(f64::sqrt).collect(),
        })
    }

    pub fn level_count(&self) -> usize {
        self.level_count
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.schmidt
    }

    pub fn b(&self, j: usize) -> f64 {
        self.schmidt[j]
    }

    pub fn b0(&self) -> f64 {
        self.schmidt[0]
    }

    pub fn b_max(&self) -> f64 {
        self.schmidt[self.level_count - 1]
    }

    /// Analytic success probability N·b₀² of one attempt.
    pub fn success_probability(&self) -> f64 {
        self.level_count as f64 * self.b0() * self.b0()
    }

    /// The shared state Σⱼ bⱼ |jj⟩ as a two-slot vector.
    pub fn state(&self) -> StateVector {
        let n = self.level_count;
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); n * n];
        for (j, &b) in self.schmidt.iter().enumerate() {
            amplitudes[j * n + j] = Complex64::new(b, 0.0);
        }
        StateVector::from_raw(n, 2, amplitudes)
    }
}
