//! Benchmark harness for the generalized Stiefel conjugate gradient solver:
//! seeded instance generation, multi-trial runs, CSV/JSON reports, instance
//! bundles in MatrixMarket format and a self-check suite.

pub mod bench;
pub mod check;
pub mod manifest;
pub mod mtx;
pub mod params;
pub mod report;
