//! Fault classification of impact-cycle pressure signals using features
//! computed relative to each individual's own no-fault reference cycles.
//!
//! The crate covers the whole pipeline: segmentation and normalization of
//! recordings ([`signal`]), DTW ([`dtw`]), reference-relative features
//! ([`relative`]), pairwise-distance vectors ([`pairwise`]), classifiers
//! ([`classify`]), a synthetic percussion-pressure generator ([`synth`]),
//! dataset and model storage ([`storage`]) and the experiment runner
//! ([`bench`]).

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod classify;
pub mod dtw;
pub mod error;
pub mod pairwise;
pub mod relative;
pub mod seed;
pub mod signal;
pub mod storage;
pub mod synth;

pub use error::{Error, Result};
