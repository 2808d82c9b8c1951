//! Dense operators on a fixed number of qudit slots, and their application
//! to subsystems of a register.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::state::StateVector;

/// A linear operator on `arity` qudits of `level_count` levels, stored as a
/// dense row-major N^arity × N^arity matrix. Slot 0 of the operator is the
/// most significant digit of its local basis index, matching the register
/// convention.
///
/// Construction computes the operator's unitarity defect, the max-norm of
/// M·M† − I, so non-unitary operators are detectable at any tolerance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Operator {
    level_count: usize,
    arity: usize,
    matrix: Vec<Complex64>,
    unitarity_defect: f64,
}

impl Operator {
    pub fn from_matrix(level_count: usize, arity: usize, matrix: Vec<Complex64>) -> Result<Self> {
        if level_count < 2 {
            return Err(Error::InvalidLevelCount { level_count });
        }
        let side = level_count.pow(arity as u32);
        if matrix.len() != side * side {
            return Err(Error::AmplitudeCountMismatch {
                expected: side * side,
                found: matrix.len(),
            });
        }
        let unitarity_defect = unitarity_defect(&matrix, side);
        Ok(Operator {
            level_count,
            arity,
            matrix,
            unitarity_defect,
        })
    }

    pub fn identity(level_count: usize, arity: usize) -> Self {
        let side = level_count.pow(arity as u32);
        let mut matrix = vec![Complex64::new(0.0, 0.0); side * side];
        for r in 0..side {
            matrix[r * side + r] = Complex64::new(1.0, 0.0);
        }
        Operator {
            level_count,
            arity,
            matrix,
            unitarity_defect: 0.0,
        }
    }

    pub fn level_count(&self) -> usize {
        self.level_count
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    /// Matrix side length N^arity.
    pub fn side(&self) -> usize {
        self.level_count.pow(self.arity as u32)
    }

    pub fn matrix(&self) -> &[Complex64] {
        &self.matrix
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.matrix[row * self.side() + col]
    }

    /// Max-norm of M·M† − I, computed at construction.
    pub fn unitarity_defect(&self) -> f64 {
        self.unitarity_defect
    }

    /// Whether the operator is unitary within `tol`.
    pub fn unitary_within(&self, tol: f64) -> bool {
        self.unitarity_defect <= tol
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Operator {
        let side = self.side();
        let mut matrix = vec![Complex64::new(0.0, 0.0); side * side];
        for r in 0..side {
            for c in 0..side {
                matrix[c * side + r] = self.matrix[r * side + c].conj();
            }
        }
        let unitarity_defect = unitarity_defect(&matrix, side);
        Operator {
            level_count: self.level_count,
            arity: self.arity,
            matrix,
            unitarity_defect,
        }
    }

    /// Matrix product self · other.
    pub fn compose(&self, other: &Operator) -> Result<Operator> {
        if self.level_count != other.level_count {
            return Err(Error::LevelMismatch {
                left: self.level_count,
                right: other.level_count,
            });
        }
        if self.arity != other.arity {
            return Err(Error::ArityMismatch {
                arity: self.arity,
                targets: other.arity,
            });
        }
        let side = self.side();
        let mut matrix = vec![Complex64::new(0.0, 0.0); side * side];
        for r in 0..side {
            for k in 0..side {
                let a = self.matrix[r * side + k];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for c in 0..side {
                    matrix[r * side + c] += a * other.matrix[k * side + c];
                }
            }
        }
        Operator::from_matrix(self.level_count, self.arity, matrix)
    }

    /// Largest entrywise difference against `other`.
    pub fn max_difference(&self, other: &Operator) -> f64 {
        self.matrix
            .iter()
            .zip(&other.matrix)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Max-norm of M·M† − I. Skips exact zeros so the cost is O(nnz · side)
/// rather than O(side³) for the block-sparse controlled gates.
fn unitarity_defect(matrix: &[Complex64], side: usize) -> f64 {
    let zero = Complex64::new(0.0, 0.0);
    let mut max_dev = 0.0f64;
    let mut gram_row = vec![zero; side];
    for r in 0..side {
        gram_row.iter_mut().for_each(|g| *g = zero);
        for c in 0..side {
            let v = matrix[r * side + c];
            if v == zero {
                continue;
            }
            for (r2, g) in gram_row.iter_mut().enumerate() {
                let w = matrix[r2 * side + c];
                if w != zero {
                    *g += v * w.conj();
                }
            }
        }
        for (r2, g) in gram_row.iter().enumerate() {
            let expected = if r == r2 { 1.0 } else { 0.0 };
            max_dev = max_dev.max((g - expected).norm());
        }
    }
    max_dev
}

/// Applies `op` to the named register slots (identity elsewhere) and returns
/// the resulting state. `targets[i]` is the register slot bound to operator
/// slot `i`, so for a controlled gate `targets[0]` is the control.
///
/// The result is deliberately not renormalized: non-unitary operators such
/// as the discrimination filter must act on the raw amplitudes, and callers
/// own any normalization step.
pub fn apply(op: &Operator, targets: &[usize], state: &StateVector) -> Result<StateVector> {
    let n = state.level_count();
    let k = state.slot_count();
    if op.level_count() != n {
        return Err(Error::LevelMismatch {
            left: op.level_count(),
            right: n,
        });
    }
    if op.arity() != targets.len() {
        return Err(Error::ArityMismatch {
            arity: op.arity(),
            targets: targets.len(),
        });
    }
    for (i, &t) in targets.iter().enumerate() {
        if t >= k {
            return Err(Error::SlotOutOfRange {
                slot: t,
                slot_count: k,
            });
        }
        if targets[..i].contains(&t) {
            return Err(Error::RepeatedTarget { slot: t });
        }
    }

    let side = op.side();
    let arity = op.arity();
    let zero = Complex64::new(0.0, 0.0);

    // Register offset of every local basis pattern of the operator.
    let target_strides: Vec<usize> = targets.iter().map(|&t| state.stride_of(t)).collect();
    let mut offsets = vec![0usize; side];
    for (pattern, offset) in offsets.iter_mut().enumerate() {
        let mut rem = pattern;
        for a in (0..arity).rev() {
            *offset += (rem % n) * target_strides[a];
            rem /= n;
        }
    }

    // Enumeration of the untouched slots.
    let rest_strides: Vec<usize> = (0..k)
        .filter(|s| !targets.contains(s))
        .map(|s| state.stride_of(s))
        .collect();
    let rest_count = n.pow(rest_strides.len() as u32);

    // Sparse row extraction: the controlled gates have one or two entries
    // per row, so skipping zeros turns the matvec cost from side² into nnz.
    let mut rows: Vec<Vec<(usize, Complex64)>> = Vec::with_capacity(side);
    let mut nnz = 0usize;
    for r in 0..side {
        let row: Vec<(usize, Complex64)> = (0..side)
            .filter_map(|c| {
                let v = op.matrix()[r * side + c];
                (v != zero).then_some((c, v))
            })
            .collect();
        nnz += row.len();
        rows.push(row);
    }
    let dense = nnz * 4 > side * side;

    let amps = state.amplitudes();
    let mut out = vec![zero; amps.len()];
    let mut gathered = vec![zero; side];
    for rest_index in 0..rest_count {
        let mut base = 0usize;
        let mut rem = rest_index;
        for s in (0..rest_strides.len()).rev() {
            base += (rem % n) * rest_strides[s];
            rem /= n;
        }
        for (pattern, g) in gathered.iter_mut().enumerate() {
            *g = amps[base + offsets[pattern]];
        }
        if dense {
            for r in 0..side {
                let row = &op.matrix()[r * side..(r + 1) * side];
                let mut acc = zero;
                for (c, m) in row.iter().enumerate() {
                    acc += m * gathered[c];
                }
                out[base + offsets[r]] = acc;
            }
        } else {
            for r in 0..side {
                let mut acc = zero;
                for &(c, v) in &rows[r] {
                    acc += v * gathered[c];
                }
                out[base + offsets[r]] = acc;
            }
        }
    }
    Ok(StateVector::from_raw(n, k, out))
}
