//! Time-fractional gradient flows for difference-of-convex energies.
//!
//! The crate solves `d/dt[k * (u - u₀)] + ∂φ¹(u) - ∂φ²(u) ∋ f` on a finite
//! horizon, where `k` is a completely positive kernel and `φ¹`, `φ²` are
//! convex functionals on a finite-dimensional Hilbert space.
// `!(x > 0.0)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod certify;
pub mod convex;
pub mod flow;
pub mod io;
pub mod kernel;
pub mod plaplace;

pub use kernel::{rl_pair, Kernel, KernelError, SoninePair, TimeGrid};
