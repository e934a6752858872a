#![no_std]
// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Index loops mirror the matrix formulas they implement.
#![allow(clippy::needless_range_loop)]

extern crate alloc;
#[cfg(any(test, feature = "std"))]
extern crate std;

pub mod elliptic;
pub mod error;
pub mod heat;
pub mod moment;
pub mod numerics;
pub mod random;
pub mod specineq;
pub mod spectral;
pub mod window;

pub use error::{Error, ErrorCategory, Result};
pub use window::ObservationWindow;
