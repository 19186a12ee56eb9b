//! Command line, HTTP service and persistent run history for RPL models.

pub mod charts;
pub mod presets;
pub mod runner;
pub mod service;
pub mod store;
