//! Resolution limits for two-point super-resolution.
//!
//! * [`model`]: point-source measures, noisy band-limited samples, masks.
//! * [`identities`]: Vandermonde inversion and the location-amplitude identities.
//! * [`bounds`]: closed-form limits, combinatorial constants, inequality verifiers.
//! * [`detect`]: Hankel singular-value thresholding (1-D and multi-direction) and a MUSIC baseline.
//! * [`oracle`]: minimax one-source fitting, adversarial noise, empirical limits.
//! * [`harness`]: seeded Monte Carlo campaigns and CSV output.

// `!(x > 0.0)` is deliberate: it rejects NaN along with the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod detect;
pub mod error;
pub mod harness;
pub mod identities;
pub mod io;
pub mod model;
pub mod oracle;

pub use error::{Error, Result};
pub use num_complex::Complex64;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
