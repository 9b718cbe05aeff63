//! Energy consumption of quantum combs and energy-constrained metrology.
//!
//! Modules, bottom-up: [`tensor`] (labeled linear algebra), [`comb`]
//! (causality, link product, energy functionals), [`conic`] (Hermitian SDP
//! layer with an interior-point backend), [`metrology`] (task operators,
//! probe programs, see-saw), and the applications [`phase`], [`ico`],
//! [`dilation`] and [`local`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

#[cfg(feature = "cli")]
pub mod cli;
pub mod comb;
pub mod conic;
pub mod dilation;
pub mod error;
pub mod ico;
pub mod local;
pub mod metrology;
mod par;
pub mod phase;
pub mod random;
pub mod tensor;

pub use error::{Error, Result};
