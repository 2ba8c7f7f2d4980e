use crate::error::{Error, Result};
use crate::interval::{Interval, IntervalSet};
use crate::rational::{format_rational, Rational};
use num_traits::{Signed, Zero};

/// Connection schedule: for each agent (by position), the times it is connected.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Allocation {
    pieces: Vec<IntervalSet>,
}

/// Maximal stretch of the timeline on which the connected set is constant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cell {
    pub interval: Interval,
    /// Connected agents, ascending.
    pub agents: Vec<usize>,
}

impl Allocation {
    pub fn new(pieces: Vec<IntervalSet>) -> Self {
        Self { pieces }
    }

    pub fn empty(n: usize) -> Self {
        Self {
            pieces: vec![IntervalSet::new(); n],
        }
    }

    /// Every agent connected on all of `[0, horizon)`.
    pub fn everyone(n: usize, horizon: &Rational) -> Self {
        let whole = Interval::new(Rational::zero(), horizon.clone()).expect("positive horizon");
        Self {
            pieces: vec![IntervalSet::from_interval(whole); n],
        }
    }

    /// Builds an allocation from consecutive blocks, each connecting a set of agents.
    pub fn from_blocks<I>(n: usize, blocks: I) -> Self
    where
        I: IntoIterator<Item = (Interval, Vec<usize>)>,
    {
        let mut per_agent: Vec<Vec<Interval>> = vec![Vec::new(); n];
        for (interval, members) in blocks {
            for i in members {
                per_agent[i].push(interval.clone());
            }
        }
        Self {
            pieces: per_agent.into_iter().map(IntervalSet::from_intervals).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.pieces.len()
    }

    pub fn pieces(&self) -> &[IntervalSet] {
        &self.pieces
    }

    pub fn agent(&self, i: usize) -> &IntervalSet {
        &self.pieces[i]
    }

    pub fn connected_measure(&self, i: usize) -> Rational {
        self.pieces[i].measure()
    }

    /// Checks that every piece lies inside `[0, horizon]`.
    pub fn validate_within(&self, horizon: &Rational) -> Result<()> {
        for set in &self.pieces {
            for iv in set.iter() {
                if iv.start().is_negative() || iv.end() > horizon {
                    return Err(Error::OutsideHorizon {
                        start: format_rational(iv.start()),
                        end: format_rational(iv.end()),
                        horizon: format_rational(horizon),
                    });
                }
            }
        }
        Ok(())
    }

    /// Splits `[0, horizon)` at every piece endpoint and reports who is
    /// connected on each elementary cell. Uncovered cells appear with an
    /// empty agent list. `extra_points` adds further split points.
    pub fn cells_with(&self, horizon: &Rational, extra_points: &[Rational]) -> Vec<Cell> {
        let mut points: Vec<Rational> = vec![Rational::zero(), horizon.clone()];
        points.extend(self.pieces.iter().flat_map(|s| s.endpoints().cloned()));
        points.extend(extra_points.iter().cloned());
        points.retain(|p| !p.is_negative() && p <= horizon);
        points.sort();
        points.dedup();
        points
            .windows(2)
            .map(|w| {
                let agents = self
                    .pieces
                    .iter()
                    .enumerate()
                    .filter(|(_, s)| s.contains(&w[0]))
                    .map(|(i, _)| i)
                    .collect();
                Cell {
                    interval: Interval::new(w[0].clone(), w[1].clone()).expect("dedup'd points"),
                    agents,
                }
            })
            .collect()
    }

    pub fn cells(&self, horizon: &Rational) -> Vec<Cell> {
        self.cells_with(horizon, &[])
    }

    /// Number of interior time points where the connected set changes.
    pub fn switch_count(&self, horizon: &Rational) -> usize {
        let cells = self.cells(horizon);
        cells
            .windows(2)
            .filter(|w| w[0].agents != w[1].agents)
            .count()
    }
}
