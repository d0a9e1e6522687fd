//! Domains, datasets, marginals and workloads.

mod attrs;
mod dataset;
mod domain;
pub mod index;
mod marginal;
pub mod schema;
mod workload;

pub use attrs::AttrSet;
pub use dataset::Dataset;
pub use domain::Domain;
pub use marginal::{l1, Marginal};
pub use schema::{discretize, AttrKind, Discretized, DomainSpec, NUM_BINS};
pub use workload::{Workload, WorkloadEntry};
