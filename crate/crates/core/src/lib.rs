//! Shallow, inspectable survival trees learned by greedy log-rank induction,
//! by greedy induction over evolved feature sets, or by jointly evolving the
//! whole tree, plus the censoring-aware metrics used to score them.
//!
//! The crate is `no_std` + `alloc`. The default `std` feature adds parallel
//! fitness evaluation and a shared fitness cache.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod data;
pub mod error;
pub mod estimators;
pub mod evolution;
pub mod expr;
pub mod fitness;
pub mod metrics;
pub mod rng;
pub mod tree;
pub mod xor;

pub use error::{Error, Result};
