//! Qutrit (N = 3) regression battery: every closed form the three-level
//! protocol is specified by, hand-coded and compared against the library.
//!
//! The reference channel throughout is b = (1/√6, 1/√3, 1/√2), for which
//! one attempt succeeds with probability 3·b₀² = 1/2.

use num_complex::Complex64;
use qutel_core::channel::ChannelSpec;
use qutel_core::gates::{filter_d21, gcnot, psi_basis};
use qutel_core::operator::{apply, Operator};
use qutel_core::protocol::{alice_pipeline, flag_probabilities, prepare_total, InputState};
use qutel_core::state::StateVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// ω = e^{i2π/3}.
fn omega(power: i64) -> Complex64 {
    Complex64::from_polar(
        1.0,
        2.0 * std::f64::consts::PI * power.rem_euclid(3) as f64 / 3.0,
    )
}

fn reference_channel() -> ChannelSpec {
    ChannelSpec::new(vec![
        (1f64 / 6.0).sqrt(),
        (1f64 / 3.0).sqrt(),
        (1f64 / 2.0).sqrt(),
    ])
    .unwrap()
}

fn random_input(seed: u64) -> InputState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    InputState::random(3, &mut rng)
}

/// The nine joint states |ψ_nm⟩, written out line by line. Each is
/// Σ_k b_k ω^{kn} |k⊕m⟩|k⟩; note that for (n, m) = (2, 1) the middle term
/// is b₁ω²|21⟩ — the shift lands on the first slot for every k, the same
/// as in the other m = 1 lines.
fn handwritten_psi(b: &[f64]) -> [[Vec<Complex64>; 3]; 3] {
    let zero = c(0.0, 0.0);
    let ket = |pairs: &[(usize, usize, Complex64)]| -> Vec<Complex64> {
        let mut amps = vec![zero; 9];
        for &(first, second, weight) in pairs {
            amps[first * 3 + second] = weight;
        }
        amps
    };
    let b0 = c(b[0], 0.0);
    let b1 = c(b[1], 0.0);
    let b2 = c(b[2], 0.0);
    [
        [
            // n = 0
            ket(&[(0, 0, b0), (1, 1, b1), (2, 2, b2)]),
            ket(&[(1, 0, b0), (2, 1, b1), (0, 2, b2)]),
            ket(&[(2, 0, b0), (0, 1, b1), (1, 2, b2)]),
        ],
        [
            // n = 1
            ket(&[(0, 0, b0), (1, 1, b1 * omega(1)), (2, 2, b2 * omega(2))]),
            ket(&[(1, 0, b0), (2, 1, b1 * omega(1)), (0, 2, b2 * omega(2))]),
            ket(&[(2, 0, b0), (0, 1, b1 * omega(1)), (1, 2, b2 * omega(2))]),
        ],
        [
            // n = 2
            ket(&[(0, 0, b0), (1, 1, b1 * omega(2)), (2, 2, b2 * omega(1))]),
            ket(&[(1, 0, b0), (2, 1, b1 * omega(2)), (0, 2, b2 * omega(1))]),
            ket(&[(2, 0, b0), (0, 1, b1 * omega(2)), (1, 2, b2 * omega(1))]),
        ],
    ]
}

/// The nine single-qutrit branch states the receiver ends up with, one per
/// (n, m) cell of the total-state expansion.
fn handwritten_phi(alpha: &[Complex64]) -> [[Vec<Complex64>; 3]; 3] {
    let (a0, a1, a2) = (alpha[0], alpha[1], alpha[2]);
    [
        [vec![a0, a1, a2], vec![a1, a2, a0], vec![a2, a0, a1]],
        [
            vec![a0, a1 * omega(2), a2 * omega(1)],
            vec![a1, a2 * omega(2), a0 * omega(1)],
            vec![a2, a0 * omega(2), a1 * omega(1)],
        ],
        [
            vec![a0, a1 * omega(1), a2 * omega(2)],
            vec![a1, a2 * omega(1), a0 * omega(2)],
            vec![a2, a0 * omega(1), a1 * omega(2)],
        ],
    ]
}

#[test]
fn joint_basis_matches_handwritten_states() {
    let channel = reference_channel();
    let basis = psi_basis(&channel);
    let expected = handwritten_psi(channel.coefficients());
    for n in 0..3 {
        for m in 0..3 {
            let state = &basis[n * 3 + m];
            for (index, amp) in state.amplitudes().iter().enumerate() {
                assert!(
                    (amp - expected[n][m][index]).norm() < 1e-14,
                    "psi({n},{m}) differs at index {index}"
                );
            }
        }
    }
}

#[test]
fn total_state_expansion_reassembles_the_tensor_product() {
    // (1/3) Σ_{n,m} |ψ_nm⟩₁₂ ⊗ |φ_nm⟩₃ must equal |φ⟩ ⊗ |Φ⟩ exactly.
    let channel = reference_channel();
    let input = random_input(201);
    let psi = handwritten_psi(channel.coefficients());
    let phi = handwritten_phi(input.amplitudes());
    let mut amps = vec![c(0.0, 0.0); 27];
    for n in 0..3 {
        for m in 0..3 {
            for pair in 0..9 {
                for f in 0..3 {
                    amps[pair * 3 + f] += psi[n][m][pair] * phi[n][m][f] / 3.0;
                }
            }
        }
    }
    let direct = input.to_state().tensor(&channel.state()).unwrap();
    for (index, amp) in amps.iter().enumerate() {
        assert!((amp - direct.amplitude(index)).norm() < 1e-14);
    }
}

#[test]
fn controlled_shift_matches_handwritten_blocks() {
    // |0⟩⟨0|⊗I + |1⟩⟨1|⊗V + |2⟩⟨2|⊗V† with V = |0⟩⟨1| + |1⟩⟨2| + |2⟩⟨0|.
    let one = c(1.0, 0.0);
    let zero = c(0.0, 0.0);
    let mut expected = vec![zero; 81];
    let mut set = |control: usize, t_out: usize, t_in: usize| {
        expected[(control * 3 + t_out) * 9 + control * 3 + t_in] = one;
    };
    for t in 0..3 {
        set(0, t, t);
    }
    for (t_out, t_in) in [(0, 1), (1, 2), (2, 0)] {
        set(1, t_out, t_in);
        set(2, t_in, t_out);
    }
    let built = gcnot(3).unwrap();
    for (index, want) in expected.iter().enumerate() {
        assert_eq!(built.matrix()[index], *want, "entry {index}");
    }
}

#[test]
fn controlled_shift_factorizes_the_joint_states() {
    // With the control on the second slot, each |ψ_nm⟩ factors into
    // |m⟩ ⊗ (b₀|0⟩ + b₁ωⁿ|1⟩ + b₂ω²ⁿ|2⟩).
    let channel = reference_channel();
    let shift = gcnot(3).unwrap();
    let b = channel.coefficients();
    for n in 0..3i64 {
        for m in 0..3usize {
            let psi = StateVector::from_amplitudes(3, 2, handwritten_psi(b)[n as usize][m].clone())
                .unwrap();
            let factored = apply(&shift, &[1, 0], &psi).unwrap();
            let tau = StateVector::from_amplitudes(
                3,
                1,
                vec![
                    c(b[0], 0.0),
                    c(b[1], 0.0) * omega(n),
                    c(b[2], 0.0) * omega(2 * n),
                ],
            )
            .unwrap();
            let expected = StateVector::basis(3, &[m]).unwrap().tensor(&tau).unwrap();
            assert!(factored.max_difference(&expected).unwrap() < 1e-14);
        }
    }
}

#[test]
fn apparatus_records_and_erases_the_measured_digit() {
    let shift = gcnot(3).unwrap();
    for m in 0..3 {
        // Inverse shift on (1 → 0) copies digit m into the apparatus...
        let start = StateVector::basis(3, &[0, m]).unwrap();
        let recorded = apply(&shift.dagger(), &[1, 0], &start).unwrap();
        let expected = StateVector::basis(3, &[m, m]).unwrap();
        assert!(recorded.max_difference(&expected).unwrap() < 1e-14);
        // ...and the forward shift erases it again.
        let erased = apply(&shift, &[1, 0], &recorded).unwrap();
        assert!(erased.max_difference(&start).unwrap() < 1e-14);
    }
}

#[test]
fn filter_matches_handwritten_controlled_blocks() {
    // D = |0⟩⟨0|⊗I + |1⟩⟨1|⊗U₁ + |2⟩⟨2|⊗W₁ with
    // U₁ = (1/√2)(I + V) and W₁ = (1/√3)I + √(2/3)V.
    let v_entries = [(0usize, 1usize), (1, 2), (2, 0)];
    let block = |a: f64, leak: f64| -> Vec<Complex64> {
        let mut m = vec![c(0.0, 0.0); 9];
        for t in 0..3 {
            m[t * 3 + t] = c(a, 0.0);
        }
        for &(r, col) in &v_entries {
            m[r * 3 + col] += c(leak, 0.0);
        }
        m
    };
    let blocks = [
        block(1.0, 0.0),
        block(0.5f64.sqrt(), 0.5f64.sqrt()),
        block((1f64 / 3.0).sqrt(), (2f64 / 3.0).sqrt()),
    ];
    let built = filter_d21(&reference_channel());
    let mut expected = vec![c(0.0, 0.0); 81];
    for (y, b) in blocks.iter().enumerate() {
        for r in 0..3 {
            for col in 0..3 {
                expected[(y * 3 + r) * 9 + y * 3 + col] = b[r * 3 + col];
            }
        }
    }
    for (index, want) in expected.iter().enumerate() {
        assert!(
            (built.matrix()[index] - want).norm() < 1e-14,
            "entry {index}"
        );
    }
    assert!(!built.unitary_within(1e-6));
}

#[test]
fn final_state_matches_handwritten_decomposition() {
    // The pipeline output splits into
    //   (b₀/√3) |0⟩₀ Σ_m |m⟩₁ Σ_n |ϰ_n⟩₂ |φ_nm⟩₃
    // + |1⟩₀ [√(b₁²−b₀²)|φ₀₂⟩₁|11⟩₂₃ + √(b₂²−b₀²)|φ₀₀⟩₁|22⟩₂₃],
    // with ϰ_n = (1/√3)(|0⟩ + ωⁿ|1⟩ + ω²ⁿ|2⟩).
    let channel = reference_channel();
    let b = channel.coefficients();
    let sqrt3 = 3f64.sqrt();
    for seed in 0..20 {
        let input = random_input(300 + seed);
        let phi = handwritten_phi(input.amplitudes());

        let mut expected = vec![c(0.0, 0.0); 81];
        let success_scale = b[0] / sqrt3;
        for m in 0..3usize {
            for n in 0..3i64 {
                for j in 0..3usize {
                    let kappa_j = omega(n * j as i64) / sqrt3;
                    for f in 0..3usize {
                        // flag digit 0, then |m, j, f⟩ on slots 1..3
                        expected[9 * m + 3 * j + f] +=
                            kappa_j * phi[n as usize][m][f] * success_scale;
                    }
                }
            }
        }
        let w1 = (b[1] * b[1] - b[0] * b[0]).sqrt();
        let w2 = (b[2] * b[2] - b[0] * b[0]).sqrt();
        for (j, weight, branch) in [(1usize, w1, &phi[0][2]), (2, w2, &phi[0][0])] {
            for g in 0..3usize {
                // flag digit 1, then |g, j, j⟩ on slots 1..3
                expected[27 + 9 * g + 3 * j + j] += branch[g] * weight;
            }
        }

        let total = prepare_total(&input, &channel).unwrap();
        let delta = alice_pipeline(&total, &channel).unwrap();

        // Phase alignment on the largest expected component.
        let anchor = expected
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm_sqr().partial_cmp(&b.1.norm_sqr()).unwrap())
            .map(|(i, _)| i)
            .unwrap();
        let ratio = expected[anchor] / delta.amplitude(anchor);
        assert!(
            (ratio.norm() - 1.0).abs() < 1e-10,
            "components differ in magnitude"
        );
        for (index, want) in expected.iter().enumerate() {
            let got = delta.amplitude(index) * ratio;
            assert!(
                (got - want).norm() < 1e-10,
                "seed {seed}: component {index}: {got} vs {want}"
            );
        }
    }
}

#[test]
fn success_probability_is_three_b0_squared() {
    let channel = reference_channel();
    let input = random_input(400);
    let total = prepare_total(&input, &channel).unwrap();
    let delta = alice_pipeline(&total, &channel).unwrap();
    let (p_success, p_fail) = flag_probabilities(&delta).unwrap();
    assert!((p_success - 3.0 * channel.b0() * channel.b0()).abs() < 1e-10);
    assert!((p_success - 0.5).abs() < 1e-10);
    assert!((p_success + p_fail - 1.0).abs() < 1e-10);
}

#[test]
fn shift_inverse_pair_is_identity_on_the_full_register() {
    let shift = gcnot(3).unwrap();
    let product = shift.dagger().compose(&shift).unwrap();
    assert!(product.max_difference(&Operator::identity(3, 2)) < 1e-14);
}
