//! Multi-photon interference visibility of bright squeezed vacuum from
//! parametric down-conversion, under linear, on-off, tap-heralded and
//! multiport-filtered detection.
//!
//! Every quantity is available twice: as a truncated Fock-space simulation
//! ([`fock`], [`source`], [`optics`], [`detection`]) and as an analytic
//! formula ([`closed_form`]).

pub mod cli;
pub mod closed_form;
pub mod detection;
pub mod error;
pub mod fock;
pub mod numfmt;
pub mod optics;
pub mod source;
pub mod sweep;
pub mod validate;

pub use error::{Error, Result};
