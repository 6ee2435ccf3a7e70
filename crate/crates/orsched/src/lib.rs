//! File formats, command line, benchmark harness and HTTP service around
//! [`orsched_core`].

pub mod bench;
pub mod cli;
pub mod clock;
pub mod files;
pub mod fixtures;
pub mod service;
pub mod store;

pub use orsched_core as core;
