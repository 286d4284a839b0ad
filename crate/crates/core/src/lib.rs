//! Plasma ramp-up control toolkit.

pub mod config;
pub mod env;
pub mod error;
pub mod iter_hybrid;
pub mod policies;
pub mod report;
pub mod series;
pub mod sim;
pub mod tuning;
