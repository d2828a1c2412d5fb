//! Workload generation, stream replay and reporting for the dynamic
//! matching-size estimators.

pub mod adversary;
pub mod report;
pub mod run;
pub mod workload;
