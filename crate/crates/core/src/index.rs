//! Flat indexing for registers of same-dimension qudits.
//!
//! A basis state |d₀ d₁ … d_{k−1}⟩ maps to the flat index
//! Σᵢ dᵢ · N^{k−1−i}: slot 0 is the most significant digit, mirroring the
//! left-to-right order the kets are written in.

/// Stride of `slot` in the flat amplitude array: N^{k−1−slot}.
pub fn stride(level_count: usize, slot_count: usize, slot: usize) -> usize {
    level_count.pow((slot_count - 1 - slot) as u32)
}

/// Flat index of the basis state with the given digits (slot 0 first).
pub fn flat_index(level_count: usize, digits: &[usize]) -> usize {
    digits.iter().fold(0, |acc, &d| acc * level_count + d)
}

/// Digits of `index` for a register of `slot_count` qudits (slot 0 first).
pub fn digits_of(level_count: usize, slot_count: usize, mut index: usize) -> Vec<usize> {
    let mut digits = vec![0; slot_count];
    for slot in (0..slot_count).rev() {
        digits[slot] = index % level_count;
        index /= level_count;
    }
    digits
}

/// Digit held by `slot` in the basis state `index`.
pub fn digit_at(level_count: usize, slot_count: usize, index: usize, slot: usize) -> usize {
    (index / stride(level_count, slot_count, slot)) % level_count
}
