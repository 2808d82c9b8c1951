//! The end-to-end resumable teleportation protocol.
//!
//! One attempt walks a four-slot register (slot 0 = the sender's apparatus,
//! slots 1 and 2 = the sender's qudits, slot 3 = the receiver's qudit)
//! through the sender's gate pipeline, measures the apparatus flag, and then
//! follows either the success branch (two more measurements, a classical
//! message, and the receiver's correction) or the failure branch (one
//! measurement and a local recovery unitary that restores the input on
//! slot 1 exactly). A failed attempt therefore leaves the sender holding
//! the original state, so the attempt can be repeated over a fresh channel.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::channel::ChannelSpec;
use crate::error::{Error, Result};
use crate::gates::{dft, filter_d21, gcnot, gen_pauli};
use crate::index::stride;
use crate::operator::apply;
use crate::state::StateVector;

/// Tolerance on the squared norm of an input state.
pub const INPUT_NORM_TOL: f64 = 1e-12;

/// Tolerance on probabilities the protocol asserts internally.
const PROBABILITY_TOL: f64 = 1e-10;

/// Cells below this mass cannot be projected onto meaningfully.
const BRANCH_FLOOR: f64 = 1e-15;

/// The single-qudit state to teleport.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InputState {
    level_count: usize,
    amplitudes: Vec<Complex64>,
}

impl InputState {
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        let level_count = amplitudes.len();
        if level_count < 2 {
            return Err(Error::InvalidLevelCount { level_count });
        }
        let norm_sqr: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        let deviation = (norm_sqr - 1.0).abs();
        // Non-finite amplitudes (NaN norm) are rejected as unnormalized.
        if !deviation.is_finite() || deviation > INPUT_NORM_TOL {
            return Err(Error::NotNormalized { norm_sqr });
        }
        Ok(InputState {
            level_count,
            amplitudes,
        })
    }

    pub fn basis(level_count: usize, digit: usize) -> Result<Self> {
        if digit >= level_count {
            return Err(Error::DigitOutOfRange { digit, level_count });
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); level_count];
        amplitudes[digit] = Complex64::new(1.0, 0.0);
        InputState::new(amplitudes)
    }

    /// Draws a state uniformly on the sphere by normalizing a vector of
    /// independent standard complex Gaussian components.
    pub fn random<R: Rng + ?Sized>(level_count: usize, rng: &mut R) -> Self {
        loop {
            let amplitudes: Vec<Complex64> = (0..level_count)
                .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
                .collect();
            let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            if norm > 1e-6 {
                return InputState {
                    level_count,
                    amplitudes: amplitudes.into_iter().map(|a| a / norm).collect(),
                };
            }
        }
    }

    /// Adopts a single-slot state vector, renormalizing away float drift.
    pub fn from_state(state: &StateVector) -> Result<Self> {
        if state.slot_count() != 1 {
            return Err(Error::SlotCountMismatch {
                left: state.slot_count(),
                right: 1,
            });
        }
        let norm_sqr = state.norm_sqr();
        let deviation = (norm_sqr - 1.0).abs();
        if !deviation.is_finite() || deviation > 1e-10 {
            return Err(Error::NotNormalized { norm_sqr });
        }
        let norm = norm_sqr.sqrt();
        Ok(InputState {
            level_count: state.level_count(),
            amplitudes: state.amplitudes().iter().map(|a| a / norm).collect(),
        })
    }

    pub fn level_count(&self) -> usize {
        self.level_count
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn to_state(&self) -> StateVector {
        StateVector::from_raw(self.level_count, 1, self.amplitudes.clone())
    }
}

/// The two base-N digits (n, m) the sender transmits on success.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ClassicalMessage {
    pub n: usize,
    pub m: usize,
}

impl ClassicalMessage {
    pub fn digits(&self) -> [usize; 2] {
        [self.n, self.m]
    }
}

/// Intermediate states of one attempt, in pipeline order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineSnapshots {
    pub psi_total: StateVector,
    pub omega: StateVector,
    pub gamma: StateVector,
    pub delta: StateVector,
}

/// The apparatus measurement that splits success from failure.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlagMeasurement {
    pub outcome: usize,
    pub probability: f64,
    pub p_success: f64,
    pub p_fail: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuccessOutcome {
    pub m: usize,
    pub n: usize,
    pub message: ClassicalMessage,
    pub bob_before_correction: StateVector,
    pub bob_corrected: StateVector,
    pub fidelity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FailureOutcome {
    pub j: usize,
    pub probability: f64,
    pub recovered: StateVector,
    pub fidelity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Branch {
    Success(SuccessOutcome),
    Failure(FailureOutcome),
}

/// Full record of one teleportation attempt.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Transcript {
    pub channel: ChannelSpec,
    pub input: InputState,
    pub snapshots: PipelineSnapshots,
    pub flag: FlagMeasurement,
    pub branch: Branch,
    pub rng_seed: u64,
}

impl Transcript {
    pub fn is_success(&self) -> bool {
        matches!(self.branch, Branch::Success(_))
    }

    /// Fidelity of whichever state the attempt delivered or recovered.
    pub fn outcome_fidelity(&self) -> f64 {
        match &self.branch {
            Branch::Success(s) => s.fidelity,
            Branch::Failure(f) => f.fidelity,
        }
    }
}

/// Aggregate over attempts; mergeable across runs.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct AttemptStats {
    attempts: u64,
    successes: u64,
    attempts_to_success: u64,
    min_fidelity_success: Option<f64>,
    min_fidelity_recovery: Option<f64>,
}

impl AttemptStats {
    pub fn attempts(&self) -> u64 {
        self.attempts
    }

    pub fn successes(&self) -> u64 {
        self.successes
    }

    /// Fraction of attempts that raised the success flag.
    pub fn empirical_success_rate(&self) -> f64 {
        if self.attempts == 0 {
            0.0
        } else {
            self.successes as f64 / self.attempts as f64
        }
    }

    /// Mean number of attempts a delivered run needed, None if nothing
    /// was delivered.
    pub fn mean_attempts_to_success(&self) -> Option<f64> {
        (self.successes > 0).then(|| self.attempts_to_success as f64 / self.successes as f64)
    }

    pub fn min_fidelity_success(&self) -> Option<f64> {
        self.min_fidelity_success
    }

    pub fn min_fidelity_recovery(&self) -> Option<f64> {
        self.min_fidelity_recovery
    }

    pub fn record(&mut self, transcript: &Transcript, attempt_number: u64) {
        self.attempts += 1;
        match &transcript.branch {
            Branch::Success(s) => {
                self.successes += 1;
                self.attempts_to_success += attempt_number;
                self.min_fidelity_success = Some(match self.min_fidelity_success {
                    Some(current) => current.min(s.fidelity),
                    None => s.fidelity,
                });
            }
            Branch::Failure(f) => {
                self.min_fidelity_recovery = Some(match self.min_fidelity_recovery {
                    Some(current) => current.min(f.fidelity),
                    None => f.fidelity,
                });
            }
        }
    }

    pub fn merge(&mut self, other: &AttemptStats) {
        self.attempts += other.attempts;
        self.successes += other.successes;
        self.attempts_to_success += other.attempts_to_success;
        self.min_fidelity_success =
            merge_min(self.min_fidelity_success, other.min_fidelity_success);
        self.min_fidelity_recovery =
            merge_min(self.min_fidelity_recovery, other.min_fidelity_recovery);
    }
}

fn merge_min(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

/// |0⟩₀ ⊗ |φ⟩₁ ⊗ |Φ⟩₂₃: apparatus, input, then the shared pair.
pub fn prepare_total(input: &InputState, channel: &ChannelSpec) -> Result<StateVector> {
    if input.level_count() != channel.level_count() {
        return Err(Error::LevelMismatch {
            left: input.level_count(),
            right: channel.level_count(),
        });
    }
    let apparatus = StateVector::basis(input.level_count(), &[0])?;
    apparatus
        .tensor(&input.to_state())?
        .tensor(&channel.state())
}

/// Runs the sender's four-gate pipeline and keeps every intermediate state.
///
/// The sequence is: controlled shift on (2→1) to factor the joint states,
/// the inverse controlled shift on (1→0) so the apparatus records slot 1,
/// the discrimination filter on (2→1), and the controlled shift on (1→0)
/// again to erase the apparatus record. Afterwards the apparatus reads 0
/// on the success component and 1 on the failure component.
pub fn alice_stages(total: &StateVector, channel: &ChannelSpec) -> Result<PipelineSnapshots> {
    if total.slot_count() != 4 {
        return Err(Error::SlotCountMismatch {
            left: total.slot_count(),
            right: 4,
        });
    }
    if total.level_count() != channel.level_count() {
        return Err(Error::LevelMismatch {
            left: total.level_count(),
            right: channel.level_count(),
        });
    }
    let apparatus_mass: f64 = total
        .outcome_distribution(0)?
        .into_iter()
        .filter(|&(digit, _)| digit == 0)
        .map(|(_, p)| p)
        .sum();
    if (apparatus_mass - 1.0).abs() > PROBABILITY_TOL {
        return Err(Error::InvalidArgument(
            "apparatus slot 0 must start in |0⟩".into(),
        ));
    }

    let shift = gcnot(total.level_count())?;
    let filter = filter_d21(channel);
    let factored = apply(&shift, &[2, 1], total)?;
    let omega = apply(&shift.dagger(), &[1, 0], &factored)?;
    let gamma = apply(&filter, &[2, 1], &omega)?;
    let delta = apply(&shift, &[1, 0], &gamma)?;
    Ok(PipelineSnapshots {
        psi_total: total.clone(),
        omega,
        gamma,
        delta,
    })
}

/// The final pre-measurement state of the pipeline.
pub fn alice_pipeline(total: &StateVector, channel: &ChannelSpec) -> Result<StateVector> {
    Ok(alice_stages(total, channel)?.delta)
}

/// Success and failure probabilities read off the apparatus marginal of
/// the pipeline output. The success probability equals N·b₀².
pub fn flag_probabilities(delta: &StateVector) -> Result<(f64, f64)> {
    let distribution = delta.outcome_distribution(0)?;
    let p_success = distribution[0].1;
    let p_fail = distribution[1..].iter().map(|(_, p)| p).sum();
    Ok((p_success, p_fail))
}

/// Samples the success branch: slot 1 in the standard basis (outcome m),
/// slot 2 rotated to the Fourier-conjugate basis and measured (outcome n),
/// then the receiver's correction U^(n,m)† on their qudit.
pub fn success_path<R: Rng + ?Sized>(
    delta_success: &StateVector,
    input: &InputState,
    rng: &mut R,
) -> Result<SuccessOutcome> {
    check_uniform_marginal(delta_success, 1)?;
    let (m, _, after_m) = delta_success.measure(1, rng)?;
    let rotated = rotate_slot2(&after_m)?;
    let (n, _, after_n) = rotated.measure(2, rng)?;
    success_outcome(&after_n, m, n, input)
}

/// Deterministic projection onto one success cell (m, n); used by the
/// exhaustive checks and the verification suite.
pub fn success_branch(
    delta_success: &StateVector,
    input: &InputState,
    m: usize,
    n: usize,
) -> Result<SuccessOutcome> {
    check_uniform_marginal(delta_success, 1)?;
    let (_, after_m) = delta_success.project(1, m)?;
    let rotated = rotate_slot2(&after_m)?;
    let (_, after_n) = rotated.project(2, n)?;
    success_outcome(&after_n, m, n, input)
}

/// Joint probability of the success cell (m, n) within the full
/// pre-measurement state, computed by direct projection.
pub fn success_cell_probability(delta: &StateVector, m: usize, n: usize) -> Result<f64> {
    let (p_flag, projected) = match delta.project(0, 0) {
        Ok(pair) => pair,
        Err(Error::DegenerateMeasurement { .. }) => return Ok(0.0),
        Err(e) => return Err(e),
    };
    let (p_m, after_m) = match projected.project(1, m) {
        Ok(pair) => pair,
        Err(Error::DegenerateMeasurement { .. }) => return Ok(0.0),
        Err(e) => return Err(e),
    };
    let rotated = rotate_slot2(&after_m)?;
    let p_n = rotated
        .outcome_distribution(2)?
        .into_iter()
        .find(|&(digit, _)| digit == n)
        .map(|(_, p)| p)
        .unwrap_or(0.0);
    Ok(p_flag * p_m * p_n)
}

/// Joint probability of the failure cell j, by direct projection.
pub fn failure_cell_probability(delta: &StateVector, j: usize) -> Result<f64> {
    let (p_flag, projected) = match delta.project(0, 1) {
        Ok(pair) => pair,
        Err(Error::DegenerateMeasurement { .. }) => return Ok(0.0),
        Err(e) => return Err(e),
    };
    let p_j = projected
        .outcome_distribution(2)?
        .into_iter()
        .find(|&(digit, _)| digit == j)
        .map(|(_, p)| p)
        .unwrap_or(0.0);
    Ok(p_flag * p_j)
}

/// Samples the failure branch: slot 2 in the standard basis (outcome j,
/// never 0), then the local recovery U^(0,j⊕1)† on slot 1.
pub fn failure_path<R: Rng + ?Sized>(
    delta_fail: &StateVector,
    input: &InputState,
    rng: &mut R,
) -> Result<FailureOutcome> {
    let (j, probability, after_j) = delta_fail.measure(2, rng)?;
    if j == 0 {
        return Err(Error::InternalConsistency(
            "failure branch produced outcome j = 0, which must have zero probability".into(),
        ));
    }
    failure_outcome(&after_j, j, probability, input)
}

/// Deterministic projection onto one failure cell j ∈ {1, …, N−1}.
pub fn failure_branch(
    delta_fail: &StateVector,
    input: &InputState,
    j: usize,
) -> Result<FailureOutcome> {
    if j == 0 {
        return Err(Error::InternalConsistency(
            "failure cell j = 0 has zero probability by construction".into(),
        ));
    }
    let (probability, after_j) = delta_fail.project(2, j)?;
    failure_outcome(&after_j, j, probability, input)
}

/// One full attempt, deterministic in `seed`.
pub fn run_attempt(input: &InputState, channel: &ChannelSpec, seed: u64) -> Result<Transcript> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = prepare_total(input, channel)?;
    let snapshots = alice_stages(&total, channel)?;
    let (p_success, p_fail) = flag_probabilities(&snapshots.delta)?;
    let (outcome, probability, post) = snapshots.delta.measure(0, &mut rng)?;
    let branch = match outcome {
        0 => Branch::Success(success_path(&post, input, &mut rng)?),
        1 => Branch::Failure(failure_path(&post, input, &mut rng)?),
        digit => {
            return Err(Error::InternalConsistency(format!(
                "flag measurement produced digit {digit}, outside {{0, 1}}"
            )))
        }
    };
    Ok(Transcript {
        channel: channel.clone(),
        input: input.clone(),
        snapshots,
        flag: FlagMeasurement {
            outcome,
            probability,
            p_success,
            p_fail,
        },
        branch,
        rng_seed: seed,
    })
}

/// Retries until delivery or `max_attempts`, feeding each failure's
/// recovered state into the next attempt over a fresh channel copy.
/// Attempt i uses seed + i. Exhausting the budget is reported through the
/// stats (zero successes), not as an error: the state is still intact.
pub fn run_resumable(
    input: &InputState,
    channel: &ChannelSpec,
    max_attempts: u64,
    seed: u64,
) -> Result<(AttemptStats, Transcript)> {
    if max_attempts == 0 {
        return Err(Error::InvalidArgument(
            "max_attempts must be at least 1".into(),
        ));
    }
    let mut stats = AttemptStats::default();
    let mut current = input.clone();
    let mut last: Option<Transcript> = None;
    for attempt in 0..max_attempts {
        let transcript = run_attempt(&current, channel, seed.wrapping_add(attempt))?;
        stats.record(&transcript, attempt + 1);
        if let Branch::Failure(failure) = &transcript.branch {
            current = InputState::from_state(&failure.recovered)?;
        }
        let done = transcript.is_success();
        last = Some(transcript);
        if done {
            break;
        }
    }
    Ok((
        stats,
        last.expect("max_attempts >= 1 guarantees one attempt"),
    ))
}

fn check_uniform_marginal(state: &StateVector, slot: usize) -> Result<()> {
    let n = state.level_count();
    let uniform = 1.0 / n as f64;
    for (digit, p) in state.outcome_distribution(slot)? {
        if (p - uniform).abs() > PROBABILITY_TOL {
            return Err(Error::InternalConsistency(format!(
                "marginal of slot {slot} is not uniform: digit {digit} has probability {p}"
            )));
        }
    }
    Ok(())
}

fn rotate_slot2(state: &StateVector) -> Result<StateVector> {
    let fourier = dft(state.level_count())?;
    apply(&fourier.dagger(), &[2], state)
}

fn success_outcome(
    after_measurements: &StateVector,
    m: usize,
    n: usize,
    input: &InputState,
) -> Result<SuccessOutcome> {
    let bob_before_correction =
        extract_slot_state(after_measurements, 3, &[(0, 0), (1, m), (2, n)])?;
    let correction = gen_pauli(input.level_count(), n, m)?.dagger();
    let bob_corrected = apply(&correction, &[0], &bob_before_correction)?;
    let fidelity = bob_corrected.fidelity(&input.to_state())?;
    Ok(SuccessOutcome {
        m,
        n,
        message: ClassicalMessage { n, m },
        bob_before_correction,
        bob_corrected,
        fidelity,
    })
}

fn failure_outcome(
    after_j: &StateVector,
    j: usize,
    probability: f64,
    input: &InputState,
) -> Result<FailureOutcome> {
    let n = input.level_count();
    let held = extract_slot_state(after_j, 1, &[(0, 1), (2, j), (3, j)])?;
    let recovery = gen_pauli(n, 0, (j + 1) % n)?.dagger();
    let recovered = apply(&recovery, &[0], &held)?;
    let fidelity = recovered.fidelity(&input.to_state())?;
    Ok(FailureOutcome {
        j,
        probability,
        recovered,
        fidelity,
    })
}

/// Reads the state riding on `slot` when every other slot holds a known
/// digit. Valid only after the projections that pin those digits; the
/// extracted vector must carry all of the register's mass.
fn extract_slot_state(
    state: &StateVector,
    slot: usize,
    fixed: &[(usize, usize)],
) -> Result<StateVector> {
    let n = state.level_count();
    let k = state.slot_count();
    let mut base = 0usize;
    for &(s, digit) in fixed {
        base += digit * stride(n, k, s);
    }
    let slot_stride = stride(n, k, slot);
    let amplitudes: Vec<Complex64> = (0..n)
        .map(|v| state.amplitude(base + v * slot_stride))
        .collect();
    let norm_sqr: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
    if (norm_sqr - 1.0).abs() > 1e-9 {
        return Err(Error::InternalConsistency(format!(
            "slot {slot} does not factor out: fiber mass {norm_sqr}"
        )));
    }
    if norm_sqr < BRANCH_FLOOR {
        return Err(Error::DegenerateMeasurement {
            slot,
            total: norm_sqr,
        });
    }
    Ok(StateVector::from_raw_normalized(n, 1, amplitudes))
}
