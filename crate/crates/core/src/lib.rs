//! Dense state-vector simulation of resumable probabilistic teleportation
//! for N-level systems.
//!
//! A sender holding one share of a partially entangled qudit pair can
//! teleport an unknown N-level state exactly, with success probability
//! N·b₀² set by the smallest Schmidt coefficient of the pair. An apparatus
//! qudit on the sender's side records which joint outcome occurred; erasing
//! that record after the discrimination step leaves the sender with the
//! original state whenever the attempt fails, so the attempt can simply be
//! repeated over a fresh pair.
//!
//! The crate is organized around that protocol:
//!
//! - [`state`] / [`operator`]: dense register algebra — tensor products,
//!   subsystem gate application, projective measurement, fidelity.
//! - [`gates`]: the shift/clock operators, the controlled shift, the
//!   discrimination filter, and the Fourier operator.
//! - [`protocol`]: the four-gate pipeline, flag measurement, success and
//!   failure branches, and the seeded retry loop.
//! - [`oracle`]: independent brute-force enumeration used to cross-check
//!   the pipeline.
//! - [`verify`]: named invariant checks over a configured channel.
//!
//! Register convention: slot 0 is the sender's apparatus and the most
//! significant digit of the flat index; the receiver holds the last slot.
//! All values are immutable once constructed and safe to share across
//! threads; the only stateful object is the caller-provided random source.
//!
//! ```
//! use qutel_core::{ChannelSpec, InputState, run_resumable};
//! use rand::SeedableRng;
//!
//! let channel = ChannelSpec::new(vec![(1f64/6.0).sqrt(), (1f64/3.0).sqrt(), (1f64/2.0).sqrt()])?;
//! let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
//! let input = InputState::random(3, &mut rng);
//! let (stats, transcript) = run_resumable(&input, &channel, 32, 7)?;
//! assert!(transcript.outcome_fidelity() > 1.0 - 1e-10);
//! # Ok::<(), qutel_core::Error>(())
//! ```

pub mod channel;
pub mod error;
pub mod gates;
pub mod index;
pub mod operator;
pub mod oracle;
pub mod protocol;
pub mod state;
pub mod verify;

pub use channel::ChannelSpec;
pub use error::{Error, Result};
pub use gates::{dft, filter_d21, gcnot, gen_pauli, psi_basis};
pub use operator::{apply, Operator};
pub use oracle::{enumerate_outcomes, gram_rank, reconstruct_total, OutcomeTable};
pub use protocol::{
    alice_pipeline, alice_stages, failure_branch, failure_path, flag_probabilities, prepare_total,
    run_attempt, run_resumable, success_branch, success_path, AttemptStats, Branch, InputState,
    Transcript,
};
pub use state::StateVector;
