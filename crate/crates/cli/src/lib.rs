//! Command line and HTTP front ends for the incremental spectral clustering loop.

pub mod api;
pub mod commands;
