//! Library surface of the experiment runner: config schema, family
//! registry, and report writing. The `ratelab` binary is a thin shell over
//! these modules, and the integration tests drive them directly.

pub mod config;
pub mod families;
pub mod report;
