#![no_std]
// `!(x > 0.0)` style guards are used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
//! Numerical engines for four constructions from symplectic geometry and
//! spectral theory: the path-group model of a simply connected Lie group,
//! monodromy of the spherical pendulum, Duistermaat–Heckman localization,
//! and wave-trace asymptotics on flat tori.
//!
//! Everything here is pure computation over `alloc`; file formats and the
//! command line live in the `symdesk` crate.

extern crate alloc;

pub mod dh;
pub mod error;
pub mod lie;
pub mod path;
pub mod pendulum;
pub mod quad;
pub mod spectral;

pub use error::{Error, Result};

/// Crate version, reported by front ends.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
