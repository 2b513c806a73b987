//! Privacy-preserving traffic monitoring (PPTM).
//!
//! Vehicles encode per-segment presence flags and average speeds with a
//! super-increasing sequence, encrypt the two packed values under an
//! additively homomorphic Paillier key, and sign the report with a
//! pairing-based short signature. A roadside unit batch-verifies the
//! reports and multiplies the ciphertexts; the service provider decrypts
//! only the per-segment sums and publishes average speeds. No single
//! party other than the reporting vehicle ever sees an individual speed
//! or route.
//!
//! The crate ships the cryptographic building blocks ([`paillier`],
//! [`bilinear`], [`seqcode`]), the four protocol roles ([`entities`]),
//! canonical wire encodings with a bandwidth cost model ([`wire`]), and a
//! deterministic discrete-event simulator with adversary scripting and a
//! baseline scheme for cost comparisons ([`simnet`]).

pub mod bilinear;
pub mod entities;
pub mod metrics;
pub mod paillier;
pub mod pseudonym;
pub mod seqcode;
pub mod simnet;
pub mod wire;

mod serdes;

pub use metrics::Meter;
