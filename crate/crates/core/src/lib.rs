//! Trajectory planning for a tractor towing passive trailers.

pub mod cli;
pub mod env;
pub mod model;
pub mod opt;
pub mod poly;
pub mod search;
