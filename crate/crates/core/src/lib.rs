//! Landmark-based gaze estimation.
//!
//! Heatmap landmark decoding ([`heatmap`]), a two-sphere eyeball model
//! fitted by nonlinear least squares ([`eyeball`]), landmark features and
//! SVR gaze regression ([`features`], [`svr`]), a synthetic landmark
//! generator ([`synth`]) and the evaluation protocols ([`evalkit`]).
//! The `eyegaze` binary wraps all of it; see [`cli`].

pub mod cli;
pub mod dataset;
pub mod error;
pub mod evalkit;
pub mod eyeball;
pub mod features;
pub mod geometry;
pub mod heatmap;
pub mod rng;
pub mod svr;
pub mod synth;

pub use error::{Error, Result};
