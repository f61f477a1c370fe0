//! Two-stage triage of crisis messages.
//!
//! A character-level convolutional network first filters out messages that
//! are not informative. Surviving messages are tagged with any of nine
//! actionability types by one RBF support vector machine per type, each
//! working on embedding similarities to that type's keywords. Tagged
//! streams can be summarized as a time-bucketed crisis profile.

pub mod actionability;
pub mod config;
pub mod corpus;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod informativeness;
pub mod persist;
pub mod pipeline;
pub mod profile;
pub mod seed;
pub mod text;

pub use error::{Error, Result};
