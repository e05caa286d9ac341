//! Random generation, campaigns and file output.

pub mod campaign;
pub mod gen;
pub mod report;
