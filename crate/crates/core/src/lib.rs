//! Numerical toolkit for the Leggett-type crypto-nonlocal model of qudits.
//!
//! - [`bloch`]: generalized Gell-Mann basis, pure state ↔ Bloch vector maps
//!   and hidden-variable samplers.
//! - [`qcorr`]: maximally entangled qudits measured in chained CGLMP bases,
//!   the chained quantity `I_N` and its `2γ/N` asymptote.
//! - [`crypto`]: the crypto-nonlocal marginal rule, the Leggett-type bound
//!   `L`, critical setting counts and multi-family measurement sets.
//! - [`polytope`]: no-signaling distributions, statistical distance, the
//!   `Δ ≤ I_N` theorem checks and local deterministic strategies.

pub mod bloch;
pub mod crypto;
pub mod error;
pub mod numeric;
pub mod polytope;
pub mod qcorr;
pub mod rng;

pub use error::{Error, Result};
