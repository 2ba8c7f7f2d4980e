//! Search for layouts with few switches that keep every agent at a target
//! utility.
//!
//! A layout with `c` switches is a sequence of `c + 1` blocks, each
//! connecting one set. Fixing the set sequence and the grid segment holding
//! each switch makes every agent's utility affine in the switch positions,
//! so each candidate is an exact feasibility LP. Candidates are tried by
//! increasing `c`; the first feasible one wins.

use crate::interval::Interval;
use crate::lp::{LinearProgram, LpOutcome, Relation};
use crate::model::{Allocation, Instance};
use crate::rational::Rational;
use num_traits::{One, Signed, Zero};
use std::time::Instant;

pub(crate) struct LayoutSearch<'a> {
    grid: &'a [Rational],
    labels: &'a [Vec<usize>],
    /// `prefix[i][s]`: agent `i`'s value of `[0, grid[s])`; `density[i][s]` on segment `s`.
    prefix: Vec<Vec<Rational>>,
    density: Vec<Vec<Rational>>,
    target: &'a Rational,
    deadline: Instant,
    nodes: u64,
    expired: bool,
}

impl<'a> LayoutSearch<'a> {
    pub fn new(
        instance: &Instance,
        grid: &'a [Rational],
        labels: &'a [Vec<usize>],
        target: &'a Rational,
        deadline: Instant,
    ) -> Self {
        let prefix = instance
            .agents()
            .iter()
            .map(|a| grid.iter().map(|x| a.utility.cumulative(x)).collect())
            .collect();
        let density = instance
            .agents()
            .iter()
            .map(|a| grid.windows(2).map(|w| a.utility.density_at(&w[0]).clone()).collect())
            .collect();
        Self {
            grid,
            labels,
            prefix,
            density,
            target,
            deadline,
            nodes: 0,
            expired: false,
        }
    }

    /// Fewest-switch layout with at most `max_switches` switches, if any.
    pub fn run(&mut self, max_switches: usize) -> Option<Vec<(Interval, usize)>> {
        let n = self.prefix.len();
        for c in 0..=max_switches {
            let mut pattern = Vec::with_capacity(c + 1);
            if let Some(found) = self.patterns(&mut pattern, c + 1, n) {
                return Some(found);
            }
            if self.expired {
                return None;
            }
        }
        None
    }

    fn patterns(&mut self, pattern: &mut Vec<usize>, len: usize, n: usize) -> Option<Vec<(Interval, usize)>> {
        if self.expired {
            return None;
        }
        if pattern.len() == len {
            // Every agent must be connected somewhere.
            let covered = (0..n).all(|i| pattern.iter().any(|&l| self.labels[l].contains(&i)));
            if !covered {
                return None;
            }
            let mut segs = Vec::with_capacity(len - 1);
            return self.assignments(pattern, &mut segs, len - 1);
        }
        for l in 0..self.labels.len() {
            if pattern.last() == Some(&l) {
                continue;
            }
            pattern.push(l);
            let found = self.patterns(pattern, len, n);
            pattern.pop();
            if found.is_some() {
                return found;
            }
        }
        None
    }

    fn assignments(
        &mut self,
        pattern: &[usize],
        segs: &mut Vec<usize>,
        c: usize,
    ) -> Option<Vec<(Interval, usize)>> {
        if self.expired {
            return None;
        }
        if segs.len() == c {
            self.nodes += 1;
            if self.nodes % 64 == 0 && Instant::now() >= self.deadline {
                self.expired = true;
                return None;
            }
            return self.solve(pattern, segs);
        }
        let from = segs.last().copied().unwrap_or(0);
        for s in from..self.grid.len() - 1 {
            segs.push(s);
            let found = self.assignments(pattern, segs, c);
            segs.pop();
            if found.is_some() {
                return found;
            }
        }
        None
    }

    fn solve(&self, pattern: &[usize], segs: &[usize]) -> Option<Vec<(Interval, usize)>> {
        let c = segs.len();
        let horizon = self.grid.last().expect("grid");
        let mut lp = LinearProgram::new(c.max(1));
        for (m, &s) in segs.iter().enumerate() {
            lp.add_constraint(
                vec![(m, Rational::one())],
                Relation::Le,
                &self.grid[s + 1] - &self.grid[s],
            );
            if m > 0 && segs[m - 1] == s {
                lp.add_constraint(
                    vec![(m - 1, Rational::one()), (m, -Rational::one())],
                    Relation::Le,
                    Rational::zero(),
                );
            }
        }
        for (i, (pre, dens)) in self.prefix.iter().zip(&self.density).enumerate() {
            let total = pre.last().expect("grid");
            let mut constant = Rational::zero();
            let mut coeffs = vec![Rational::zero(); c];
            for (b, &label) in pattern.iter().enumerate() {
                if !self.labels[label].contains(&i) {
                    continue;
                }
                if b < c {
                    constant += &pre[segs[b]];
                    coeffs[b] += &dens[segs[b]];
                } else {
                    constant += total;
                }
                if b > 0 {
                    constant -= &pre[segs[b - 1]];
                    coeffs[b - 1] -= &dens[segs[b - 1]];
                }
            }
            let row: Vec<(usize, Rational)> = coeffs
                .into_iter()
                .enumerate()
                .filter(|(_, a)| !a.is_zero())
                .collect();
            let need = self.target - &constant;
            // Box bound: every switch at its most favourable end of its segment.
            let best: Rational = row
                .iter()
                .filter(|(_, a)| a.is_positive())
                .map(|(m, a)| a * (&self.grid[segs[*m] + 1] - &self.grid[segs[*m]]))
                .sum();
            if best < need {
                return None;
            }
            if !row.is_empty() {
                lp.add_constraint(row, Relation::Ge, need);
            }
        }
        let values = match lp.solve() {
            LpOutcome::Optimal(sol) => sol.values,
            _ => return None,
        };
        let mut bounds = Vec::with_capacity(c + 2);
        bounds.push(Rational::zero());
        bounds.extend(segs.iter().enumerate().map(|(m, &s)| &self.grid[s] + &values[m]));
        bounds.push(horizon.clone());
        Some(
            bounds
                .windows(2)
                .zip(pattern)
                .filter_map(|(w, &l)| Interval::new(w[0].clone(), w[1].clone()).map(|iv| (iv, l)))
                .collect(),
        )
    }
}

pub(crate) fn to_allocation(blocks: Vec<(Interval, usize)>, labels: &[Vec<usize>], n: usize) -> Allocation {
    Allocation::from_blocks(n, blocks.into_iter().map(|(iv, l)| (iv, labels[l].clone())))
}
