//! Exact, certificate-producing bounds on the symmetric degrees-of-freedom of
//! partially connected `K`-user interference networks whose transmitters know
//! only the topology.
//!
//! The crate is `no_std` (it needs `alloc`). Everything here is a pure
//! function of its inputs; file formats, the command line and the batch
//! survey harness live in the `topodof-cli` companion crate.
//!
//! Layout:
//!
//! * [`linalg`]: exact rational matrices and the sign-tolerant span tests.
//! * [`topology`]: adjacency matrices, conflict graphs, canonical forms and
//!   the two scenario generators.
//! * [`outer`]: generator / fractional-generator outer bounds.
//! * [`inner`]: random Gaussian coding, interference avoidance and
//!   structured repetition coding inner bounds.
//! * [`simulate`]: Monte Carlo checks of the matching certificates.
//! * [`report`]: per-topology bound reports and survey aggregation.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod bits;
pub mod inner;
pub mod linalg;
pub mod lp;
pub mod outer;
pub mod report;
pub mod simulate;
pub mod topology;

#[cfg(test)]
mod testutil;

pub use linalg::{RatMatrix, Rational};
pub use topology::Topology;

/// Builds the reduced fraction `num / den`.
///
/// Panics if `den` is zero.
pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(num.into(), den.into())
}
