//! q-valued pseudo-random sequence generation over prime fields GF(q), with
//! fault detection.
//!
//! Three equivalent generation backends are provided:
//!
//! * [`lfsr_serial`]: the sequential q-LFSR, one element per step. It is the
//!   reference every other backend is checked against.
//! * [`block_parallel`]: m elements per step through the m-th power of the
//!   companion matrix.
//! * [`arith_poly`]: the m next-state functions compiled into a single
//!   arithmetic polynomial mod q^m whose base-q digits are the next block.
//!
//! Two guards detect computation faults:
//!
//! * [`linear_code_guard`]: a separable q-ary linear code computed alongside
//!   each block and checked by syndrome.
//! * [`rns_guard`]: the packed polynomial evaluated in independent residue
//!   channels, reconstructed by CRT and range checked.
//!
//! [`fault_lab`] injects faults into any of these and tallies detection, and
//! [`artifact`] bundles everything derived from one generating polynomial into
//! a portable JSON document.

pub mod arith_poly;
pub mod artifact;
pub mod backend;
pub mod block_parallel;
mod error;
pub mod fault_lab;
pub mod gfq;
pub mod lfsr_serial;
pub mod linear_code_guard;
pub mod rns_guard;

pub use error::{Error, Result};

/// Largest state-space size (q^m) that exhaustive operations accept by default.
pub const DEFAULT_EXHAUSTION_LIMIT: u64 = 1 << 24;

/// Environment variable overriding [`DEFAULT_EXHAUSTION_LIMIT`].
pub const EXHAUSTION_LIMIT_ENV: &str = "QPRS_EXHAUSTION_LIMIT";

/// The exhaustion limit in effect: `QPRS_EXHAUSTION_LIMIT` if set to a valid
/// integer, otherwise the default.
pub fn exhaustion_limit() -> u64 {
    std::env::var(EXHAUSTION_LIMIT_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_EXHAUSTION_LIMIT)
}

/// q^m, or `None` on overflow.
pub(crate) fn state_space(q: u32, m: usize) -> Option<u64> {
    let m = u32::try_from(m).ok()?;
    (q as u64).checked_pow(m)
}

pub(crate) fn check_limit(q: u32, m: usize, limit: u64) -> Result<u64> {
    match state_space(q, m) {
        Some(size) if size <= limit => Ok(size),
        size => Err(Error::ExhaustionLimit { q, m, limit, size }),
    }
}
