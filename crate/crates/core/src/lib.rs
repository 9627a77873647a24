//! Desk-scale simulation of acoustic source localization on a dual
//! bistatic fiber link.
//!
//! A PN/BPSK acoustic burst ([`signal`]) couples into a cable with a receiver
//! at each end ([`channel`]). The delay difference between the two receiver
//! streams is estimated from the peak of their cross-ambiguity function
//! ([`caf`]) and mapped to a position along the cable ([`positioning`]).
//! [`crb`] gives the Cramér-Rao bound the estimates are checked against, and
//! [`cli`] drives the experiment presets.

pub mod caf;
pub mod channel;
pub mod cli;
pub mod crb;
pub mod error;
pub mod positioning;
pub mod signal;

pub use error::{Error, Result};
