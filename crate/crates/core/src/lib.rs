//! Simulation and monotonicity certification for incoherent feedforward
//! motifs with linear intermediate dynamics.
//!
//! The library answers one question about systems
//!
//! ```text
//! x' = A x + b u,    y' = F(x, y, u),    u > 0 constant,
//! ```
//!
//! with `A` Metzler and Hurwitz and `F` drawn from an eight-form catalog of
//! incoherent output dynamics: is the cumulative response
//! `cDR(u, T) = int_0^T y dt` monotone in the input `u`, even when the
//! instantaneous response `DR(u, T) = y(T)` is not?
//!
//! The pipeline:
//!
//! 1. [`linsys`] validates `(A, b)` and propagates `x` and its input
//!    sensitivity `p = dx/du` in closed form;
//! 2. [`motifs`] catalogs the output forms with their partials, the decay
//!    rate `a = -dF/dy`, and the forcing `g = dF/dx . p + dF/du`;
//! 3. [`integrator`] integrates the augmented system `(x, p, y, q, int y,
//!    int q, G)` adaptively and recovers the kernel
//!    `lambda(t) = int_t^T exp(-int_t^s a) ds` by an exact per-step
//!    backward recursion;
//! 4. [`response`] sweeps input grids, reporting DR, cDR, and three
//!    independent estimates of `d(cDR)/du` (sensitivity route, kernel
//!    route, central differences);
//! 5. [`classify`] certifies monotonicity from fixed-sign profiles of
//!    `(lambda, g)` or `(lambda', G)` and detects non-monotonicity through
//!    confirmed opposite-sign witness pairs;
//! 6. [`oracle`] cross-checks everything against brute-force references;
//! 7. [`report`] and [`config`] handle files: configs in, CSV/JSON out.
//!
//! The `parallel` feature (default) runs sweep items on a rayon pool; the
//! sequential fallback produces bitwise-identical results.

// Guards of the form `!(x > 0.0)` are deliberate: they reject NaN along with
// the out-of-range values, which `x <= 0.0` would let through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classify;
pub mod config;
pub mod error;
mod expm;
pub mod integrator;
pub mod linsys;
pub mod motifs;
pub mod oracle;
pub mod preset;
pub mod report;
pub mod response;

pub use error::{Error, Result};
pub use expm::expm;
