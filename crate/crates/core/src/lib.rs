//! Coding-theoretic fusion for crowdsourced M-ary classification.
//!
//! Each worker answers one binary question about an item; the questions are
//! the columns of a binary code matrix whose rows are codewords for the
//! classes. Answers are fused by minimum Hamming distance decoding and
//! compared against bitwise majority voting, either exactly
//! ([`analytic`]) or by Monte Carlo ([`simkit`]).

pub mod analytic;
pub mod cli;
pub mod codebook;
pub mod crowd;
pub mod datasets;
pub mod design;
pub mod error;
pub mod fusion;
pub mod numeric;
pub mod seed;
pub mod simkit;

pub use codebook::{AnswerVector, CodeMatrix};
pub use error::{Error, Result};
