//! Allocation-only building blocks of the dbot diagnosis engine.
//!
//! Everything in this crate is a pure function over in-memory data: knowledge
//! ranking ([`bm25`]), abnormal-metric detection ([`ks`], [`metrics`]),
//! document splitting ([`chapters`]), chunk clustering ([`cluster`], [`pca`]),
//! tool matching ([`tools`], [`matcher`]), the diagnosis search tree
//! ([`tree`]) and benchmark scoring ([`accuracy`]). Model calls, files and
//! threads live in the `dbot` crate.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod accuracy;
pub mod bm25;
pub mod chapters;
pub mod cluster;
pub mod embed;
mod error;
pub mod knowledge;
pub mod ks;
pub mod linalg;
pub mod matcher;
pub mod metrics;
pub mod pca;
pub mod text;
pub mod tools;
pub mod tree;

pub use error::CoreError;

pub type Result<T, E = CoreError> = core::result::Result<T, E>;
