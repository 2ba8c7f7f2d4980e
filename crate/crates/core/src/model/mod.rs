//! Problem data model: instances, utilities, allocations, feasibility and welfare.

mod allocation;
mod instance;
mod metrics;
mod utility;

pub use allocation::{Allocation, Cell};
pub use instance::{normalize_utilities, Agent, Instance};
pub use metrics::{check_feasible, compute_metrics, FeasibilityReport, Metrics, Violation};
pub use utility::{common_breakpoints, utility_of, PiecewiseConstantUtility};
