use super::layout::{to_allocation, LayoutSearch};
use super::switches::minimize_switches;
use super::uniform::maximal_sets_capped;
use super::{SegmentAssignment, MAX_COLUMNS};
use crate::error::{Error, Result};
use crate::lp::{LinearProgram, LpOutcome, Relation};
use crate::model::{common_breakpoints, Allocation, Instance};
use crate::rational::{self, Rational};
use num_traits::{One, Signed, Zero};
use std::time::{Duration, Instant};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdditiveSolution {
    /// Optimal per-segment shares.
    pub assignment: SegmentAssignment,
    /// Optimal allocation; either the assignment with blocks reordered, or a
    /// layout from the switch search when that one has fewer switches.
    pub allocation: Allocation,
    /// Smallest normalized utility, maximized.
    pub value: Rational,
    /// Whether `allocation` came from the switch search.
    pub searched_layout: bool,
}

#[derive(Clone, Debug)]
pub struct AdditiveOptions {
    /// Time allowed for looking for an optimal layout with at most `n - 1`
    /// switches when reordering alone leaves more. Zero disables the search.
    pub switch_search_budget: Duration,
}

impl Default for AdditiveOptions {
    fn default() -> Self {
        Self {
            switch_search_budget: Duration::from_millis(500),
        }
    }
}

/// Egalitarian allocation for piecewise-constant additive utilities.
///
/// Utilities are normalized to total 1 first. On every segment of the common
/// grid the program chooses how long each maximal feasible set is connected;
/// among optimal assignments the utilitarian one is kept, then blocks are
/// ordered to keep switches low.
pub fn egalitarian_additive(instance: &Instance) -> Result<AdditiveSolution> {
    egalitarian_additive_with(instance, &AdditiveOptions::default())
}

pub fn egalitarian_additive_with(
    instance: &Instance,
    options: &AdditiveOptions,
) -> Result<AdditiveSolution> {
    let instance = instance.normalize_utilities()?;
    let n = instance.n();
    let sets = maximal_sets_capped(&instance)?;
    let grid = common_breakpoints(instance.utilities());
    let segments = grid.len() - 1;
    let m = sets.len();
    let columns = m * segments;
    if columns > MAX_COLUMNS {
        return Err(Error::ProgramTooLarge {
            columns,
            cap: MAX_COLUMNS,
        });
    }
    let var = |s: usize, j: usize| s * segments + j;
    let r = columns;

    // weight[i][j]: utility agent i gets from the whole of segment j.
    let weight: Vec<Vec<Rational>> = instance
        .agents()
        .iter()
        .map(|a| {
            grid.windows(2)
                .map(|w| a.utility.value_between(&w[0], &w[1]))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let mut lp = LinearProgram::new(columns + 1);
    for (i, w) in weight.iter().enumerate() {
        let mut row = Vec::new();
        for (s, set) in sets.iter().enumerate() {
            if !set.contains(i) {
                continue;
            }
            for (j, wj) in w.iter().enumerate() {
                if !wj.is_zero() {
                    row.push((var(s, j), wj.clone()));
                }
            }
        }
        row.push((r, -Rational::one()));
        lp.add_constraint(row, Relation::Ge, rational::int(0));
    }
    for j in 0..segments {
        lp.add_constraint(
            (0..m).map(|s| (var(s, j), Rational::one())).collect(),
            Relation::Eq,
            Rational::one(),
        );
    }
    lp.set_objective(vec![(r, Rational::one())]);
    let best = solve(&lp)?;
    let value = best.values[r].clone();

    lp.add_constraint(vec![(r, Rational::one())], Relation::Ge, value.clone());
    let mut objective = Vec::new();
    for (s, set) in sets.iter().enumerate() {
        for j in 0..segments {
            let total: Rational = set.members().iter().map(|&i| weight[i][j].clone()).sum();
            if !total.is_zero() {
                objective.push((var(s, j), total));
            }
        }
    }
    lp.set_objective(objective);
    let tie_broken = solve(&lp)?;

    let shares = (0..segments)
        .map(|j| (0..m).map(|s| tie_broken.values[var(s, j)].clone()).collect())
        .collect();
    let assignment = SegmentAssignment::new(grid, sets, shares)?;
    let mut allocation = minimize_switches(&assignment, n);
    let mut searched_layout = false;

    let switches = allocation.switch_count(instance.horizon());
    let bound = n - 1;
    if switches > bound && !options.switch_search_budget.is_zero() {
        // Only sets used by the optimum are tried as block labels.
        let labels: Vec<Vec<usize>> = (0..m)
            .filter(|&s| (0..segments).any(|j| assignment.shares()[j][s].is_positive()))
            .map(|s| assignment.sets()[s].members().to_vec())
            .collect();
        let deadline = Instant::now() + options.switch_search_budget;
        let mut search = LayoutSearch::new(&instance, assignment.breakpoints(), &labels, &value, deadline);
        if let Some(blocks) = search.run(bound) {
            allocation = to_allocation(blocks, &labels, n);
            searched_layout = true;
        }
    }
    Ok(AdditiveSolution {
        assignment,
        allocation,
        value,
        searched_layout,
    })
}

fn solve(lp: &LinearProgram) -> Result<crate::lp::LpSolution> {
    match lp.solve() {
        LpOutcome::Optimal(s) => Ok(s),
        LpOutcome::Infeasible { .. } => Err(Error::Solver("program infeasible".into())),
        LpOutcome::Unbounded => Err(Error::Solver("program unbounded".into())),
    }
}
