//! Fair electricity distribution under a hard supply cap.
//!
//! Households (agents) share a time horizon `[0, T]`; at every instant the
//! total demand of connected agents may not exceed the supply. The crate
//! covers identical and heterogeneous demands with uniform or
//! piecewise-constant utilities, and reports egalitarian, utilitarian and
//! max-difference welfare together with switching counts.

pub mod consensus;
pub mod egalitarian;
pub mod error;
pub mod interval;
pub mod io;
pub mod lp;
pub mod model;
pub mod packing;
pub mod proportional;
pub mod rational;

pub use error::{Error, Result};
pub use interval::{Interval, IntervalSet};
pub use model::{
    check_feasible, compute_metrics, normalize_utilities, utility_of, Agent, Allocation,
    FeasibilityReport, Instance, Metrics, PiecewiseConstantUtility,
};
pub use rational::Rational;
