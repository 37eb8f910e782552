//! File formats, thread-parallel runners and the `imputekit` command-line
//! front end over [`imputekit_core`].

pub mod bench;
pub mod commands;
pub mod fsutil;
pub mod io;
pub mod manifest;
pub mod methods;
pub mod parallel;

pub use imputekit_core as core;
