//! Semantic-aware WiFi sensing toolkit.
//!
//! CFR power synthesis ([`signal_model`]), sinusoidal semantic encoding
//! ([`codec`]), activity classification in the semantic space
//! ([`semantic_space`]), fading-channel transmission ([`channel`]), the
//! contest-based upload incentive market ([`contest`]) and the experiment
//! harness behind the `semsense` binary ([`harness`]).

pub mod channel;
pub mod codec;
pub mod contest;
pub mod error;
pub mod harness;
pub mod quadrature;
pub mod semantic_space;
pub mod signal_model;

pub use error::{Error, Result};
