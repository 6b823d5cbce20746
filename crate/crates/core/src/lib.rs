//! Streaming moments, variance bounds from partial information, and
//! feasibility auditing of reported summary statistics.
//!
//! The crate is built around one small state, [`MomentAccumulator`]:
//! count, mean, and the sum of squared deviations. It updates in one
//! pass, merges across shards, and supports removal. On top of it sit
//! closed-form inequalities ([`bounds`]) relating a dataset's variance to
//! its extremes, members, and subsets; an auditor ([`audit`]) that uses
//! those inequalities to prove reported statistics impossible; and a
//! sharding harness ([`shard`]) that exercises the merge under arbitrary
//! partition shapes and merge orders.

pub mod audit;
pub mod bounds;
mod error;
pub mod moments;
pub mod shard;

pub use audit::{
    audit_member, audit_order_statistic, audit_subset, audit_summary, normalize, AuditOptions,
    DispersionKind, ReportedSummary, Verdict, Violation,
};
pub use bounds::{BoundResult, DataSummary, IdentityCheck, SubsetSummary, DEFAULT_REL_TOL};
pub use error::{Error, Result};
pub use moments::MomentAccumulator;
pub use shard::{DriftReport, MergePlan, Topology};
