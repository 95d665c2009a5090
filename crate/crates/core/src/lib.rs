//! Adaptive slotted random access with an ideal successive interference
//! cancellation (SIC) receiver.
//!
//! The crate has two independent views of the same system:
//!
//! * [`analytic`]: a mean-field model (backlog fixed point, Laplace
//!   transforms of slot, contention and idle times) yielding success
//!   probability, throughput, channel busy ratio, access delay, age of
//!   information and energy per delivered packet;
//! * [`sim`]: a slot-by-slot Monte Carlo simulator of the same network.
//!
//! [`policy`] and [`profile`] build the access policy both of them use, and
//! [`harness`] runs load sweeps and compares the two.

// Validation deliberately uses `!(x > 0.0)` so NaN is rejected along with
// non-positive values; slot loops index several parallel per-node arrays.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analytic;
pub mod artifact;
pub mod config;
pub mod error;
pub mod harness;
pub mod numeric;
pub mod policy;
pub mod profile;
pub mod rng;
pub mod sic;
pub mod sim;

pub use artifact::PolicyBundle;
pub use config::SystemConfig;
pub use error::{Error, Result};
pub use policy::{AccessPolicy, FittedConstants, OptimumRow, PolicyForm};
pub use profile::{GridSpec, SicProfile};
pub use sic::sic_decode_count;
