//! Constructors for the operators the protocol is built from.

use num_complex::Complex64;

use crate::channel::ChannelSpec;
use crate::error::{Error, Result};
use crate::operator::Operator;
use crate::state::StateVector;

/// e^{i·2π·power/N}, with the exponent reduced modulo N first so large
/// powers do not lose precision in the trigonometric argument.
pub fn root_of_unity(level_count: usize, power: i64) -> Complex64 {
    let n = level_count as i64;
    let reduced = power.rem_euclid(n);
    Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * reduced as f64 / n as f64)
}

/// The generalized Pauli operator U^(n,m) = Σ_f e^{−i2πfn/N} |f⟩⟨f⊕m|,
/// combining a clock phase (index n) with a cyclic shift (index m).
/// U^(n,m)† is the correction the receiver applies on success.
pub fn gen_pauli(level_count: usize, n: usize, m: usize) -> Result<Operator> {
    if level_count < 2 {
        return Err(Error::InvalidLevelCount { level_count });
    }
    for digit in [n, m] {
        if digit >= level_count {
            return Err(Error::DigitOutOfRange { digit, level_count });
        }
    }
    let side = level_count;
    let mut matrix = vec![Complex64::new(0.0, 0.0); side * side];
    for f in 0..side {
        let col = (f + m) % side;
        matrix[f * side + col] = root_of_unity(level_count, -((f * n) as i64));
    }
    Operator::from_matrix(level_count, 1, matrix)
}

/// The N-level controlled shift Σ_y |y⟩⟨y| ⊗ U^(0,y): control digit y
/// applies the decrement-by-y cyclic shift to the target. Operator slot 0
/// is the control.
pub fn gcnot(level_count: usize) -> Result<Operator> {
    if level_count < 2 {
        return Err(Error::InvalidLevelCount { level_count });
    }
    let n = level_count;
    let side = n * n;
    let mut matrix = vec![Complex64::new(0.0, 0.0); side * side];
    for y in 0..n {
        for f in 0..n {
            let row = y * n + f;
            let col = y * n + (f + y) % n;
            matrix[row * side + col] = Complex64::new(1.0, 0.0);
        }
    }
    Operator::from_matrix(n, 2, matrix)
}

/// The discrimination filter: block y is (b₀/b_y)·I + √(1−(b₀/b_y)²)·U^(0,1),
/// with the ratio taken as 0 when b_y = 0. Operator slot 0 is the control.
///
/// Blocks with 0 < b₀/b_y < 1 are not unitary; the operator's unitarity
/// defect records exactly how far off it is. On the states the protocol
/// reaches, the leaked amplitude lands in the failure component and the
/// overall norm is still preserved.
pub fn filter_d21(channel: &ChannelSpec) -> Operator {
    let n = channel.level_count();
    let side = n * n;
    let b0 = channel.b0();
    let mut matrix = vec![Complex64::new(0.0, 0.0); side * side];
    for y in 0..n {
        let by = channel.b(y);
        let keep = if by == 0.0 { 0.0 } else { b0 / by };
        let leak = (1.0 - keep * keep).max(0.0).sqrt();
        for f in 0..n {
            let row = y * n + f;
            matrix[row * side + y * n + f] += Complex64::new(keep, 0.0);
            matrix[row * side + y * n + (f + 1) % n] += Complex64::new(leak, 0.0);
        }
    }
    Operator::from_matrix(n, 2, matrix).expect("filter matrix has the declared shape")
}

/// Discrete Fourier operator F = (1/√N) Σ ω^{jn} |j⟩⟨n| with ω = e^{i2π/N}.
/// F maps |n⟩ to the mutually unbiased basis state the sender measures on
/// the success path.
pub fn dft(level_count: usize) -> Result<Operator> {
    if level_count < 2 {
        return Err(Error::InvalidLevelCount { level_count });
    }
    let side = level_count;
    let scale = (side as f64).sqrt().recip();
    let mut matrix = vec![Complex64::new(0.0, 0.0); side * side];
    for j in 0..side {
        for n in 0..side {
            matrix[j * side + n] = root_of_unity(level_count, (j * n) as i64) * scale;
        }
    }
    Operator::from_matrix(level_count, 1, matrix)
}

/// The N² two-qudit states |ψ_nm⟩ = Σ_k b_k e^{i2πkn/N} |k⊕m⟩|k⟩, indexed
/// by n·N + m. They are linearly independent exactly when every b_k > 0,
/// and reduce to the orthonormal generalized Bell basis on a maximally
/// entangled channel.
pub fn psi_basis(channel: &ChannelSpec) -> Vec<StateVector> {
    let n_levels = channel.level_count();
    let mut states = Vec::with_capacity(n_levels * n_levels);
    for n in 0..n_levels {
        for m in 0..n_levels {
            let mut amplitudes = vec![Complex64::new(0.0, 0.0); n_levels * n_levels];
            for k in 0..n_levels {
                let slot0 = (k + m) % n_levels;
                amplitudes[slot0 * n_levels + k] =
                    root_of_unity(n_levels, (k * n) as i64) * channel.b(k);
            }
            states.push(StateVector::from_raw(n_levels, 2, amplitudes));
        }
    }
    states
}
