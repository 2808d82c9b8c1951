//! Independent brute-force verification paths.
//!
//! Everything here rebuilds the protocol's predictions from the closed-form
//! branch decomposition and explicit scalar phases rather than from the gate
//! matrices, so the gate constructors and the pipeline cannot confirm their
//! own bugs.

use num_complex::Complex64;
use serde::Serialize;

use crate::channel::ChannelSpec;
use crate::error::Result;
use crate::gates::{gen_pauli, psi_basis};
use crate::index::flat_index;
use crate::operator::apply;
use crate::protocol::InputState;
use crate::state::StateVector;

/// Probabilities this close to zero from below are clamped to zero.
const CLAMP_FLOOR: f64 = -1e-12;

/// Mass below which a cell's residual state is not resolvable.
const STATE_FLOOR: f64 = 1e-15;

/// One enumerated measurement branch.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum OutcomeKind {
    /// Flag 0 with secondary outcomes (m, n).
    Success { m: usize, n: usize },
    /// Flag 1 with secondary outcome j.
    Failure { j: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutcomeRow {
    pub flag: usize,
    pub kind: OutcomeKind,
    /// Joint probability of the branch.
    pub probability: f64,
    /// Receiver's qudit state (success) or the sender's slot-1 state
    /// (failure) conditioned on the branch, before any correction.
    /// Absent when the branch carries no mass.
    pub state: Option<StateVector>,
}

/// Exhaustive branch enumeration of one attempt.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutcomeTable {
    pub rows: Vec<OutcomeRow>,
}

impl OutcomeTable {
    pub fn total_probability(&self) -> f64 {
        self.rows.iter().map(|r| r.probability).sum()
    }

    pub fn flag_probability(&self, flag: usize) -> f64 {
        self.rows
            .iter()
            .filter(|r| r.flag == flag)
            .map(|r| r.probability)
            .sum()
    }

    pub fn success_cell(&self, m: usize, n: usize) -> Option<&OutcomeRow> {
        self.rows
            .iter()
            .find(|r| matches!(r.kind, OutcomeKind::Success { m: rm, n: rn } if rm == m && rn == n))
    }

    pub fn failure_cell(&self, j: usize) -> Option<&OutcomeRow> {
        self.rows
            .iter()
            .find(|r| matches!(r.kind, OutcomeKind::Failure { j: rj } if rj == j))
    }
}

/// e^{i·2π·power/N}, computed locally so the oracle does not share phase
/// plumbing with the gate constructors.
fn phase(level_count: usize, power: i64) -> Complex64 {
    let n = level_count as i64;
    let reduced = power.rem_euclid(n);
    Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * reduced as f64 / n as f64)
}

/// Rebuilds the three-qudit total state term by term from the joint-basis
/// expansion: (1/N) Σ_{n,m} |ψ_nm⟩₁₂ ⊗ U^(n,m)|φ⟩₃. The result must equal
/// the direct tensor product |φ⟩ ⊗ |Φ⟩ exactly.
pub fn reconstruct_total(input: &InputState, channel: &ChannelSpec) -> Result<StateVector> {
    let n_levels = channel.level_count();
    let basis = psi_basis(channel);
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); n_levels.pow(3)];
    let scale = 1.0 / n_levels as f64;
    for n in 0..n_levels {
        for m in 0..n_levels {
            let rotated = apply(&gen_pauli(n_levels, n, m)?, &[0], &input.to_state())?;
            let pair = &basis[n * n_levels + m];
            for pair_index in 0..pair.dim() {
                let weight = pair.amplitude(pair_index) * scale;
                if weight == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for f in 0..n_levels {
                    amplitudes[pair_index * n_levels + f] += weight * rotated.amplitude(f);
                }
            }
        }
    }
    StateVector::from_amplitudes(n_levels, 3, amplitudes)
}

/// Enumerates every branch of one attempt analytically: the pre-measurement
/// state is rebuilt from its closed-form success and failure components, and
/// each joint probability comes from a direct projection of that rebuilt
/// state. Success rows carry the receiver's conditional state, failure rows
/// the sender's.
pub fn enumerate_outcomes(input: &InputState, channel: &ChannelSpec) -> Result<OutcomeTable> {
    let n_levels = channel.level_count();
    let alpha = input.amplitudes();
    let b = channel.coefficients();
    let b0 = b[0];
    let dim = n_levels.pow(4);
    let zero = Complex64::new(0.0, 0.0);

    // Success component: (b₀/N) Σ_{m,n} |0,m⟩ ⊗ (Σ_j ω^{jn}|j⟩) ⊗ (Σ_f α_{f⊕m} ω^{−fn}|f⟩).
    let mut delta = vec![zero; dim];
    let success_scale = b0 / n_levels as f64;
    for m in 0..n_levels {
        for n in 0..n_levels {
            for j in 0..n_levels {
                for f in 0..n_levels {
                    let index = flat_index(n_levels, &[0, m, j, f]);
                    delta[index] += phase(n_levels, (j as i64 - f as i64) * n as i64)
                        * alpha[(f + m) % n_levels]
                        * success_scale;
                }
            }
        }
    }
    // Failure component: Σ_{j≥1} √(b_j²−b₀²) |1⟩ ⊗ (Σ_g α_{g⊕j⊕1}|g⟩) ⊗ |jj⟩.
    for j in 1..n_levels {
        let weight = (b[j] * b[j] - b0 * b0).max(0.0).sqrt();
        for g in 0..n_levels {
            let index = flat_index(n_levels, &[1, g, j, j]);
            delta[index] += alpha[(g + j + 1) % n_levels] * weight;
        }
    }

    let mut rows = Vec::with_capacity(n_levels * n_levels + n_levels - 1);
    let inv_sqrt_n = (n_levels as f64).sqrt().recip();
    for m in 0..n_levels {
        for n in 0..n_levels {
            // Project onto |0, m⟩ ⊗ |ϰ_n⟩ and read the slot-3 residual.
            let mut residual = vec![zero; n_levels];
            for f in 0..n_levels {
                for j in 0..n_levels {
                    let kappa_j = phase(n_levels, (j * n) as i64) * inv_sqrt_n;
                    residual[f] += kappa_j.conj() * delta[flat_index(n_levels, &[0, m, j, f])];
                }
            }
            rows.push(make_row(0, OutcomeKind::Success { m, n }, residual));
        }
    }
    for j in 1..n_levels {
        let residual: Vec<Complex64> = (0..n_levels)
            .map(|g| delta[flat_index(n_levels, &[1, g, j, j])])
            .collect();
        rows.push(make_row(1, OutcomeKind::Failure { j }, residual));
    }
    Ok(OutcomeTable { rows })
}

fn make_row(flag: usize, kind: OutcomeKind, residual: Vec<Complex64>) -> OutcomeRow {
    let mass: f64 = residual.iter().map(|a| a.norm_sqr()).sum();
    let probability = if mass > CLAMP_FLOOR {
        mass.max(0.0)
    } else {
        mass
    };
    let state = (mass > STATE_FLOOR).then(|| {
        let level_count = residual.len();
        StateVector::from_raw_normalized(level_count, 1, residual)
    });
    OutcomeRow {
        flag,
        kind,
        probability,
        state,
    }
}

/// Gram determinant of the joint basis. The basis is linearly independent
/// exactly when the smallest Schmidt coefficient is positive; at double
/// precision the determinant underflows the 1e−12 cutoff once b₀ gets
/// small enough, so callers probing the boundary should test b₀ directly.
pub fn gram_rank(channel: &ChannelSpec) -> (f64, bool) {
    let basis = psi_basis(channel);
    let size = basis.len();
    let mut gram = vec![Complex64::new(0.0, 0.0); size * size];
    for (row, a) in basis.iter().enumerate() {
        for (col, b) in basis.iter().enumerate() {
            gram[row * size + col] = a
                .inner(b)
                .expect("basis states share one shape by construction");
        }
    }
    let magnitude = determinant_magnitude(gram, size);
    (magnitude, magnitude > 1e-12)
}

/// |det| by LU elimination with partial pivoting.
fn determinant_magnitude(mut matrix: Vec<Complex64>, size: usize) -> f64 {
    let mut magnitude = 1.0f64;
    for col in 0..size {
        let pivot_row = (col..size)
            .max_by(|&a, &b| {
                matrix[a * size + col]
                    .norm_sqr()
                    .total_cmp(&matrix[b * size + col].norm_sqr())
            })
            .expect("the pivot range col..size is never empty");
        let pivot = matrix[pivot_row * size + col];
        if pivot.norm() < 1e-300 {
            return 0.0;
        }
        if pivot_row != col {
            for c in 0..size {
                matrix.swap(col * size + c, pivot_row * size + c);
            }
        }
        magnitude *= pivot.norm();
        for row in (col + 1)..size {
            let factor = matrix[row * size + col] / pivot;
            if factor == Complex64::new(0.0, 0.0) {
                continue;
            }
            for c in col..size {
                let sub = factor * matrix[col * size + c];
                matrix[row * size + c] -= sub;
            }
        }
    }
    magnitude
}
