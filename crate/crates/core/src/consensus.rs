//! Consensus k-division of the timeline and its link to egalitarian
//! electricity division with two maximal feasible sets.

use crate::error::{Error, Result};
use crate::interval::{Interval, IntervalSet};
use crate::lp::{LinearProgram, LpOutcome, Relation};
use crate::model::{common_breakpoints, Agent, Allocation, Instance, PiecewiseConstantUtility};
use crate::rational::{self, Rational};
use num_traits::{One, Signed, Zero};
use std::time::{Duration, Instant};

/// Partition of `[0, T)` into `k` labelled pieces.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConsensusDivision {
    k: usize,
    /// Consecutive intervals covering the horizon; neighbours carry different labels.
    labels: Vec<(Interval, usize)>,
}

impl ConsensusDivision {
    /// Merges adjacent equal labels and drops empty intervals.
    pub fn new(k: usize, labelled: Vec<(Interval, usize)>) -> Result<Self> {
        if k == 0 {
            return Err(Error::Parameter("k must be positive".into()));
        }
        let mut labels: Vec<(Interval, usize)> = Vec::with_capacity(labelled.len());
        for (iv, label) in labelled {
            if label >= k {
                return Err(Error::Parameter(format!("label {label} out of range for k = {k}")));
            }
            if let Some((prev, prev_label)) = labels.last_mut() {
                if prev.end() != iv.start() {
                    return Err(Error::Parameter("labelled intervals must be contiguous".into()));
                }
                if *prev_label == label {
                    *prev = Interval::new(prev.start().clone(), iv.end().clone()).expect("grows");
                    continue;
                }
            } else if !iv.start().is_zero() {
                return Err(Error::Parameter("division must start at 0".into()));
            }
            labels.push((iv, label));
        }
        if labels.is_empty() {
            return Err(Error::Parameter("empty division".into()));
        }
        Ok(Self { k, labels })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn labels(&self) -> &[(Interval, usize)] {
        &self.labels
    }

    pub fn horizon(&self) -> &Rational {
        self.labels.last().expect("non-empty").0.end()
    }

    pub fn cut_count(&self) -> usize {
        self.labels.len() - 1
    }

    pub fn piece(&self, j: usize) -> IntervalSet {
        IntervalSet::from_intervals(
            self.labels
                .iter()
                .filter(|(_, l)| *l == j)
                .map(|(iv, _)| iv.clone()),
        )
    }

    /// `values[i][j]`: share of agent `i`'s total value lying in piece `j`.
    pub fn values(&self, valuations: &[PiecewiseConstantUtility]) -> Result<Vec<Vec<Rational>>> {
        valuations
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let total = v.total();
                if total.is_zero() {
                    return Err(Error::ZeroUtility(i));
                }
                let mut row = vec![Rational::zero(); self.k];
                for (iv, label) in &self.labels {
                    row[*label] += v.value_between(iv.start(), iv.end())?;
                }
                Ok(row.into_iter().map(|x| x / &total).collect())
            })
            .collect()
    }

    /// Largest `|value - 1/k|` over all agents and pieces.
    pub fn max_deviation(&self, valuations: &[PiecewiseConstantUtility]) -> Result<Rational> {
        let target = rational::ratio(1, self.k as i64);
        Ok(self
            .values(valuations)?
            .into_iter()
            .flatten()
            .map(|x| (x - &target).abs())
            .max()
            .unwrap_or_else(Rational::zero))
    }
}

fn common_horizon(valuations: &[PiecewiseConstantUtility]) -> Result<Rational> {
    let first = valuations
        .first()
        .ok_or_else(|| Error::InvalidInstance("no valuations".into()))?;
    if valuations.iter().any(|v| v.horizon() != first.horizon()) {
        return Err(Error::InvalidUtility("valuations have different horizons".into()));
    }
    Ok(first.horizon().clone())
}

/// Exact division that splits every segment of the common grid into `k`
/// equal parts. Labels run forwards and backwards on alternate segments so
/// that segment boundaries add no cuts: `(k - 1)` cuts per segment.
pub fn consensus_division_lp(
    valuations: &[PiecewiseConstantUtility],
    k: usize,
) -> Result<ConsensusDivision> {
    common_horizon(valuations)?;
    if k == 0 {
        return Err(Error::Parameter("k must be positive".into()));
    }
    let grid = common_breakpoints(valuations.iter());
    let mut labelled = Vec::new();
    for (s, w) in grid.windows(2).enumerate() {
        let step = (&w[1] - &w[0]) / rational::int(k as i64);
        for p in 0..k {
            let start = &w[0] + &step * rational::int(p as i64);
            let end = if p + 1 == k { w[1].clone() } else { &start + &step };
            let label = if s % 2 == 0 { p } else { k - 1 - p };
            labelled.push((Interval::new(start, end).expect("positive step"), label));
        }
    }
    ConsensusDivision::new(k, labelled)
}

#[derive(Clone, Debug)]
pub struct MinCutOptions {
    /// Largest cut count tried; `None` means `n (k - 1)`.
    pub max_cuts: Option<usize>,
    pub time_budget: Duration,
}

impl Default for MinCutOptions {
    fn default() -> Self {
        Self {
            max_cuts: None,
            time_budget: Duration::from_secs(10),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MinCutOutcome {
    Found(ConsensusDivision),
    NotFound {
        /// Smallest max-deviation reached by any configuration tried.
        best_residual: Option<Rational>,
        max_cuts: usize,
        /// `false` if the time budget ran out before the search finished.
        exhausted: bool,
    },
}

impl MinCutOutcome {
    pub fn division(&self) -> Option<&ConsensusDivision> {
        match self {
            MinCutOutcome::Found(d) => Some(d),
            MinCutOutcome::NotFound { .. } => None,
        }
    }
}

/// Label sequences of length `len` starting at 0, with neighbours distinct,
/// new labels introduced in increasing order, and all `k` labels used.
fn label_patterns(len: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(seq: &mut Vec<usize>, len: usize, k: usize, used: usize, out: &mut Vec<Vec<usize>>) {
        if seq.len() == len {
            if used == k {
                out.push(seq.clone());
            }
            return;
        }
        // Not enough room left to introduce the missing labels.
        if k - used > len - seq.len() {
            return;
        }
        let last = *seq.last().expect("seeded");
        for label in 0..=used.min(k - 1) {
            if label == last {
                continue;
            }
            seq.push(label);
            rec(seq, len, k, used.max(label + 1), out);
            seq.pop();
        }
    }
    let mut out = Vec::new();
    if len == 0 || k == 0 {
        return out;
    }
    let mut seq = vec![0];
    rec(&mut seq, len, k, 1, &mut out);
    out
}

struct CutSearch<'a> {
    k: usize,
    grid: &'a [Rational],
    /// `density[i][s]` and `prefix[i][s]` (value of `[0, grid[s])`), normalized.
    density: Vec<Vec<Rational>>,
    prefix: Vec<Vec<Rational>>,
    epsilon: Rational,
    best: Option<Rational>,
    end: Instant,
    expired: bool,
}

impl CutSearch<'_> {
    /// Minimizes the largest deviation for a fixed label pattern and fixed
    /// segment of every cut. Returns `(deviation, cut positions)`.
    fn solve(&self, pattern: &[usize], segs: &[usize]) -> Option<(Rational, Vec<Rational>)> {
        let c = segs.len();
        let e = c;
        let mut lp = LinearProgram::new(c + 1);
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
        let target = rational::ratio(1, self.k as i64);
        for (dens, pre) in self.density.iter().zip(&self.prefix) {
            // Value of [0, t_m) is pre[s] + dens[s] * y_m; t_0 = 0, t_{c+1} = T.
            let total = pre.last().expect("grid").clone();
            for j in 0..self.k {
                let mut constant = Rational::zero();
                let mut coeffs = vec![Rational::zero(); c];
                for (m, &label) in pattern.iter().enumerate() {
                    if label != j {
                        continue;
                    }
                    // Interval m runs from cut m-1 (or 0) to cut m (or T).
                    if m < c {
                        constant += &pre[segs[m]];
                        coeffs[m] += &dens[segs[m]];
                    } else {
                        constant += &total;
                    }
                    if m > 0 {
                        constant -= &pre[segs[m - 1]];
                        coeffs[m - 1] -= &dens[segs[m - 1]];
                    }
                }
                let row: Vec<(usize, Rational)> = coeffs
                    .into_iter()
                    .enumerate()
                    .filter(|(_, a)| !a.is_zero())
                    .collect();
                // |constant + row·y - target| <= e
                let mut upper = row.clone();
                upper.push((e, -Rational::one()));
                lp.add_constraint(upper, Relation::Le, &target - &constant);
                let mut lower = row;
                lower.push((e, Rational::one()));
                lp.add_constraint(lower, Relation::Ge, &target - &constant);
            }
        }
        lp.set_objective(vec![(e, -Rational::one())]);
        match lp.solve() {
            LpOutcome::Optimal(sol) => {
                let cuts = segs
                    .iter()
                    .enumerate()
                    .map(|(m, &s)| &self.grid[s] + &sol.values[m])
                    .collect();
                Some((sol.values[e].clone(), cuts))
            }
            _ => None,
        }
    }

    /// Tries every non-decreasing segment assignment for `c` cuts.
    fn assignments(
        &mut self,
        pattern: &[usize],
        segs: &mut Vec<usize>,
        c: usize,
    ) -> Option<Vec<Rational>> {
        if self.expired {
            return None;
        }
        if segs.len() == c {
            if Instant::now() >= self.end {
                self.expired = true;
                return None;
            }
            let (dev, cuts) = self.solve(pattern, segs)?;
            if self.best.as_ref().is_none_or(|b| &dev < b) {
                self.best = Some(dev.clone());
            }
            return (dev <= self.epsilon).then_some(cuts);
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
}

/// Searches for a division within `epsilon` of consensus using as few cuts
/// as possible, trying cut counts from 0 upwards. Every candidate is solved
/// exactly, so a returned division meets `epsilon` on re-integration.
pub fn consensus_division_min_cuts(
    valuations: &[PiecewiseConstantUtility],
    k: usize,
    epsilon: &Rational,
    options: &MinCutOptions,
) -> Result<MinCutOutcome> {
    let horizon = common_horizon(valuations)?;
    if k == 0 {
        return Err(Error::Parameter("k must be positive".into()));
    }
    if epsilon.is_negative() {
        return Err(Error::Parameter("epsilon must be non-negative".into()));
    }
    let grid = common_breakpoints(valuations.iter());
    let mut density = Vec::with_capacity(valuations.len());
    let mut prefix = Vec::with_capacity(valuations.len());
    for (i, v) in valuations.iter().enumerate() {
        let v = v.normalized().ok_or(Error::ZeroUtility(i))?;
        density.push(
            grid.windows(2)
                .map(|w| v.density_at(&w[0]).clone())
                .collect::<Vec<_>>(),
        );
        prefix.push(grid.iter().map(|x| v.cumulative(x)).collect::<Vec<_>>());
    }
    let max_cuts = options
        .max_cuts
        .unwrap_or(valuations.len() * k.saturating_sub(1));
    let mut search = CutSearch {
        k,
        grid: &grid,
        density,
        prefix,
        epsilon: epsilon.clone(),
        best: None,
        end: Instant::now() + options.time_budget,
        expired: false,
    };
    for c in 0..=max_cuts {
        for pattern in label_patterns(c + 1, k) {
            if let Some(cuts) = search.assignments(&pattern, &mut Vec::with_capacity(c), c) {
                let mut bounds = Vec::with_capacity(c + 2);
                bounds.push(Rational::zero());
                bounds.extend(cuts);
                bounds.push(horizon.clone());
                let labelled = bounds
                    .windows(2)
                    .zip(&pattern)
                    .filter_map(|(w, &l)| Interval::new(w[0].clone(), w[1].clone()).map(|iv| (iv, l)))
                    .collect();
                return Ok(MinCutOutcome::Found(ConsensusDivision::new(k, labelled)?));
            }
            if search.expired {
                return Ok(MinCutOutcome::NotFound {
                    best_residual: search.best,
                    max_cuts,
                    exhausted: false,
                });
            }
        }
    }
    Ok(MinCutOutcome::NotFound {
        best_residual: search.best,
        max_cuts,
        exhausted: true,
    })
}

/// Electricity instance whose egalitarian optimum encodes a 2-consensus
/// division among the given agents: supply `n - 1`, the given agents with
/// demand 1, plus one agent with demand `n - 1` valuing the timeline by the
/// average of the (normalized) valuations. Only two maximal feasible sets
/// exist: everyone but the last agent, and the last agent alone.
pub fn reduce_consensus_to_electricity(valuations: &[PiecewiseConstantUtility]) -> Result<Instance> {
    let horizon = common_horizon(valuations)?;
    let normalized = valuations
        .iter()
        .enumerate()
        .map(|(i, v)| v.normalized().ok_or(Error::ZeroUtility(i)))
        .collect::<Result<Vec<_>>>()?;
    let m = normalized.len();
    let grid = common_breakpoints(normalized.iter());
    let count = rational::int(m as i64);
    let mean: Vec<Rational> = grid
        .windows(2)
        .map(|w| {
            normalized
                .iter()
                .map(|v| v.density_at(&w[0]).clone())
                .sum::<Rational>()
                / &count
        })
        .collect();
    let mut agents: Vec<Agent> = normalized
        .into_iter()
        .enumerate()
        .map(|(i, v)| Agent::new(i + 1, Rational::one(), v))
        .collect();
    agents.push(Agent::new(
        m + 1,
        count.clone(),
        PiecewiseConstantUtility::new(grid, mean)?,
    ));
    Instance::new(count, horizon, agents)
}

/// Reads a 2-consensus division off an allocation of a reduced instance:
/// piece 0 is when the small agents are connected, piece 1 when the large
/// agent is. Also returns the largest deviation from 1/2, recomputed by
/// integrating every original valuation.
pub fn extract_consensus_from_egalitarian(
    instance: &Instance,
    allocation: &Allocation,
) -> Result<(ConsensusDivision, Rational)> {
    let n = instance.n();
    if allocation.n() != n {
        return Err(Error::AgentCountMismatch {
            expected: n,
            found: allocation.n(),
        });
    }
    if n < 2 {
        return Err(Error::InvalidInstance("a reduced instance has at least two agents".into()));
    }
    allocation.validate_within(instance.horizon())?;
    let small: Vec<usize> = (0..n - 1).collect();
    let large = vec![n - 1];
    let labelled = allocation
        .cells(instance.horizon())
        .into_iter()
        .map(|cell| {
            if cell.agents == small {
                Ok((cell.interval, 0))
            } else if cell.agents == large {
                Ok((cell.interval, 1))
            } else {
                Err(Error::NonMaximalSetConnected {
                    members: cell.agents,
                })
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let division = ConsensusDivision::new(2, labelled)?;
    let originals: Vec<PiecewiseConstantUtility> = instance.agents()[..n - 1]
        .iter()
        .map(|a| a.utility.clone())
        .collect();
    let deviation = division.max_deviation(&originals)?;
    Ok((division, deviation))
}
