//! Database diagnosis engine: document learning, knowledge retrieval, tool
//! matching, tree-search diagnosis and multi-expert collaboration, with all
//! model calls going through [`gateway::Gateway`].

pub mod anomaly;
pub mod bench;
pub mod bus;
pub mod collab;
pub mod doc_learning;
pub mod error;
pub mod gateway;
pub mod io;
pub mod knowledge;
pub mod pipeline;
pub mod prompts;
pub mod search;
pub mod toolkit;

pub use error::{Error, Result};
