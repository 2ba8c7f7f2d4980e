use super::allocation::Allocation;
use super::instance::Instance;
use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::rational::{format_rational, to_f64, Rational};
use num_traits::Zero;
use std::fmt;

/// A cell of the timeline where the connected demand exceeds supply.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub interval: Interval,
    pub load: Rational,
    pub agents: Vec<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FeasibilityReport {
    pub violations: Vec<Violation>,
}

impl FeasibilityReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for FeasibilityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return write!(f, "feasible");
        }
        for (k, v) in self.violations.iter().enumerate() {
            if k > 0 {
                write!(f, "; ")?;
            }
            write!(
                f,
                "{} load {} (agents {:?})",
                v.interval,
                format_rational(&v.load),
                v.agents
            )?;
        }
        Ok(())
    }
}

/// Sweeps the arrangement of all piece endpoints and sums the demand of the
/// connected agents on each elementary cell.
///
/// Errors only on a malformed allocation (wrong agent count, pieces outside
/// the horizon); supply violations are returned in the report.
pub fn check_feasible(instance: &Instance, allocation: &Allocation) -> Result<FeasibilityReport> {
    if allocation.n() != instance.n() {
        return Err(Error::AgentCountMismatch {
            expected: instance.n(),
            found: allocation.n(),
        });
    }
    allocation.validate_within(instance.horizon())?;
    let violations = allocation
        .cells(instance.horizon())
        .into_iter()
        .filter_map(|cell| {
            let load: Rational = cell
                .agents
                .iter()
                .map(|&i| instance.agent(i).demand.clone())
                .sum();
            (&load > instance.supply()).then_some(Violation {
                interval: cell.interval,
                load,
                agents: cell.agents,
            })
        })
        .collect();
    Ok(FeasibilityReport { violations })
}

/// Welfare and switching statistics of a feasible allocation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Metrics {
    /// Minimum per-agent utility.
    pub egalitarian: Rational,
    /// Sum of per-agent utilities.
    pub utilitarian: Rational,
    /// Largest pairwise utility gap.
    pub max_difference: Rational,
    pub switch_count: usize,
    pub per_agent_utility: Vec<Rational>,
    /// Number of maximal connection intervals per agent.
    pub per_agent_pieces: Vec<usize>,
}

impl Metrics {
    pub fn egalitarian_f64(&self) -> f64 {
        to_f64(&self.egalitarian)
    }

    pub fn utilitarian_f64(&self) -> f64 {
        to_f64(&self.utilitarian)
    }

    pub fn max_difference_f64(&self) -> f64 {
        to_f64(&self.max_difference)
    }
}

pub fn compute_metrics(instance: &Instance, allocation: &Allocation) -> Result<Metrics> {
    let report = check_feasible(instance, allocation)?;
    if !report.is_ok() {
        return Err(Error::Infeasible(report));
    }
    let per_agent_utility = instance
        .agents()
        .iter()
        .zip(allocation.pieces())
        .map(|(agent, set)| agent.utility.value(set))
        .collect::<Result<Vec<_>>>()?;
    let egalitarian = per_agent_utility.iter().min().cloned().unwrap_or_else(Rational::zero);
    let top = per_agent_utility.iter().max().cloned().unwrap_or_else(Rational::zero);
    let utilitarian = per_agent_utility.iter().cloned().sum();
    Ok(Metrics {
        max_difference: top - &egalitarian,
        egalitarian,
        utilitarian,
        switch_count: allocation.switch_count(instance.horizon()),
        per_agent_pieces: allocation.pieces().iter().map(|s| s.piece_count()).collect(),
        per_agent_utility,
    })
}
