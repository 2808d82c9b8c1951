//! Dense state vectors over registers of same-dimension qudits.

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::index::{digit_at, flat_index, stride};

/// Tolerance on the squared norm of publicly constructed states.
pub const NORM_TOL: f64 = 1e-10;

/// Marginal mass below which a measurement is considered degenerate.
const DEGENERACY_FLOOR: f64 = 1e-15;

/// A pure state of `slot_count` qudits, each with `level_count` levels,
/// stored as a dense array of N^k complex amplitudes.
///
/// Slot 0 carries the most significant digit of the flat index (see
/// [`crate::index`]). Values are immutable once built; every operation
/// returns a new state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateVector {
    level_count: usize,
    slot_count: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// The basis state |d₀ d₁ … d_{k−1}⟩.
    pub fn basis(level_count: usize, digits: &[usize]) -> Result<Self> {
        if level_count < 2 {
            return Err(Error::InvalidLevelCount { level_count });
        }
        if digits.is_empty() {
            return Err(Error::SlotCountMismatch { left: 0, right: 1 });
        }
        if let Some(&digit) = digits.iter().find(|&&d| d >= level_count) {
            return Err(Error::DigitOutOfRange { digit, level_count });
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); level_count.pow(digits.len() as u32)];
        amplitudes[flat_index(level_count, digits)] = Complex64::new(1.0, 0.0);
        Ok(StateVector {
            level_count,
            slot_count: digits.len(),
            amplitudes,
        })
    }

    /// Builds a state from explicit amplitudes, which must already be
    /// normalized within [`NORM_TOL`].
    pub fn from_amplitudes(
        level_count: usize,
        slot_count: usize,
        amplitudes: Vec<Complex64>,
    ) -> Result<Self> {
        if level_count < 2 {
            return Err(Error::InvalidLevelCount { level_count });
        }
        let expected = level_count.pow(slot_count as u32);
        if amplitudes.len() != expected {
            return Err(Error::AmplitudeCountMismatch {
                expected,
                found: amplitudes.len(),
            });
        }
        let state = StateVector {
            level_count,
            slot_count,
            amplitudes,
        };
        let norm_sqr = state.norm_sqr();
        let deviation = (norm_sqr - 1.0).abs();
        // A NaN norm (non-finite amplitudes) must land here too.
        if !deviation.is_finite() || deviation > NORM_TOL {
            return Err(Error::NotNormalized { norm_sqr });
        }
        Ok(state)
    }

    /// Internal constructor that skips the normalization check. Gate
    /// application goes through here because it must not rescale: the
    /// discrimination filter is deliberately non-unitary and has to act
    /// on the raw amplitudes.
    pub(crate) fn from_raw(
        level_count: usize,
        slot_count: usize,
        amplitudes: Vec<Complex64>,
    ) -> Self {
        debug_assert_eq!(amplitudes.len(), level_count.pow(slot_count as u32));
        StateVector {
            level_count,
            slot_count,
            amplitudes,
        }
    }

    /// Internal constructor that rescales to unit norm.
    pub(crate) fn from_raw_normalized(
        level_count: usize,
        slot_count: usize,
        mut amplitudes: Vec<Complex64>,
    ) -> Self {
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        debug_assert!(norm > 0.0);
        for a in &mut amplitudes {
            *a /= norm;
        }
        StateVector::from_raw(level_count, slot_count, amplitudes)
    }

    pub fn level_count(&self) -> usize {
        self.level_count
    }

    pub fn slot_count(&self) -> usize {
        self.slot_count
    }

    /// Total dimension N^k of the register.
    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, index: usize) -> Complex64 {
        self.amplitudes[index]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Tensor product: the slots of `self` come first (most significant).
    pub fn tensor(&self, other: &StateVector) -> Result<StateVector> {
        if self.level_count != other.level_count {
            return Err(Error::LevelMismatch {
                left: self.level_count,
                right: other.level_count,
            });
        }
        let mut amplitudes = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.amplitudes {
            for b in &other.amplitudes {
                amplitudes.push(a * b);
            }
        }
        Ok(StateVector::from_raw(
            self.level_count,
            self.slot_count + other.slot_count,
            amplitudes,
        ))
    }

    /// Exact outcome probabilities of a standard-basis measurement on
    /// `slot`, one entry per digit.
    pub fn outcome_distribution(&self, slot: usize) -> Result<Vec<(usize, f64)>> {
        if slot >= self.slot_count {
            return Err(Error::SlotOutOfRange {
                slot,
                slot_count: self.slot_count,
            });
        }
        let mut probabilities = vec![0.0; self.level_count];
        for (index, amp) in self.amplitudes.iter().enumerate() {
            probabilities[digit_at(self.level_count, self.slot_count, index, slot)] +=
                amp.norm_sqr();
        }
        Ok(probabilities.into_iter().enumerate().collect())
    }

    /// Projects `slot` onto `digit` and renormalizes. Returns the outcome
    /// probability together with the post-measurement state.
    pub fn project(&self, slot: usize, digit: usize) -> Result<(f64, StateVector)> {
        if slot >= self.slot_count {
            return Err(Error::SlotOutOfRange {
                slot,
                slot_count: self.slot_count,
            });
        }
        if digit >= self.level_count {
            return Err(Error::DigitOutOfRange {
                digit,
                level_count: self.level_count,
            });
        }
        let mut probability = 0.0;
        for (index, amp) in self.amplitudes.iter().enumerate() {
            if digit_at(self.level_count, self.slot_count, index, slot) == digit {
                probability += amp.norm_sqr();
            }
        }
        if probability < DEGENERACY_FLOOR {
            return Err(Error::DegenerateMeasurement {
                slot,
                total: probability,
            });
        }
        let scale = probability.sqrt().recip();
        let zero = Complex64::new(0.0, 0.0);
        let amplitudes = self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(index, amp)| {
                if digit_at(self.level_count, self.slot_count, index, slot) == digit {
                    amp * scale
                } else {
                    zero
                }
            })
            .collect();
        Ok((
            // Rescaling uses the raw mass; the reported value is clamped so
            // roundoff never leaks a probability above 1.
            probability.min(1.0),
            StateVector::from_raw(self.level_count, self.slot_count, amplitudes),
        ))
    }

    /// Samples a standard-basis measurement on `slot`. Returns the outcome
    /// digit, its probability, and the renormalized post-measurement state.
    pub fn measure<R: Rng + ?Sized>(
        &self,
        slot: usize,
        rng: &mut R,
    ) -> Result<(usize, f64, StateVector)> {
        let distribution = self.outcome_distribution(slot)?;
        let total: f64 = distribution.iter().map(|(_, p)| p).sum();
        if total < DEGENERACY_FLOOR {
            return Err(Error::DegenerateMeasurement { slot, total });
        }
        let draw: f64 = rng.gen::<f64>() * total;
        let mut cumulative = 0.0;
        let mut outcome = None;
        for &(digit, p) in &distribution {
            if p <= 0.0 {
                continue;
            }
            cumulative += p;
            outcome = Some(digit);
            if draw < cumulative {
                break;
            }
        }
        let outcome = outcome.expect("total mass above floor implies a nonzero entry");
        let (probability, post_state) = self.project(slot, outcome)?;
        Ok((outcome, probability, post_state))
    }

    /// Inner product ⟨self|other⟩.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        self.check_shape(other)?;
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Squared overlap |⟨self|other⟩|², clamped to [0, 1].
    pub fn fidelity(&self, other: &StateVector) -> Result<f64> {
        let overlap = self.inner(other)?;
        Ok(overlap.norm_sqr().clamp(0.0, 1.0))
    }

    fn check_shape(&self, other: &StateVector) -> Result<()> {
        if self.level_count != other.level_count {
            return Err(Error::LevelMismatch {
                left: self.level_count,
                right: other.level_count,
            });
        }
        if self.slot_count != other.slot_count {
            return Err(Error::SlotCountMismatch {
                left: self.slot_count,
                right: other.slot_count,
            });
        }
        Ok(())
    }

    /// Largest componentwise difference against `other`.
    pub fn max_difference(&self, other: &StateVector) -> Result<f64> {
        self.check_shape(other)?;
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    pub(crate) fn stride_of(&self, slot: usize) -> usize {
        stride(self.level_count, self.slot_count, slot)
    }
}
