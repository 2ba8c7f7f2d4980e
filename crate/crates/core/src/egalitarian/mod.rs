//! Time-share distributions over maximal feasible sets.
//!
//! Uniform utilities reduce to choosing how long each maximal feasible set
//! is connected; additive utilities repeat that choice on every segment of
//! the common breakpoint grid.

mod additive;
mod layout;
mod switches;
mod uniform;

pub use additive::{egalitarian_additive, egalitarian_additive_with, AdditiveOptions, AdditiveSolution};
pub use switches::{minimize_switches, minimize_switches_allocation};
pub use uniform::{egalitarian_uniform, gfs_allocation, GfsAllocation};

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::model::{Allocation, Instance};
use crate::packing::FeasibleSet;
use crate::rational::{self, Rational};
use num_traits::{One, Signed, Zero};

/// Default ceiling on LP columns.
pub const MAX_COLUMNS: usize = 10_000;

/// Fraction of the timeline given to each set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SetDistribution {
    sets: Vec<FeasibleSet>,
    shares: Vec<Rational>,
}

impl SetDistribution {
    pub fn new(sets: Vec<FeasibleSet>, shares: Vec<Rational>) -> Result<Self> {
        if sets.len() != shares.len() {
            return Err(Error::Parameter(format!(
                "{} sets but {} shares",
                sets.len(),
                shares.len()
            )));
        }
        if shares.iter().any(|s| s.is_negative()) {
            return Err(Error::Parameter("negative share".into()));
        }
        let total: Rational = shares.iter().cloned().sum();
        if total != Rational::one() {
            return Err(Error::Parameter(format!(
                "shares sum to {}, not 1",
                rational::format_rational(&total)
            )));
        }
        Ok(Self { sets, shares })
    }

    pub fn sets(&self) -> &[FeasibleSet] {
        &self.sets
    }

    pub fn shares(&self) -> &[Rational] {
        &self.shares
    }

    /// Share of the timeline during which `agent` is connected.
    pub fn agent_fraction(&self, agent: usize) -> Rational {
        self.sets
            .iter()
            .zip(&self.shares)
            .filter(|(s, _)| s.contains(agent))
            .map(|(_, x)| x.clone())
            .sum()
    }

    pub fn fractions(&self, n: usize) -> Vec<Rational> {
        (0..n).map(|i| self.agent_fraction(i)).collect()
    }

    /// Sets with a positive share.
    pub fn support(&self) -> impl Iterator<Item = (&FeasibleSet, &Rational)> {
        self.sets
            .iter()
            .zip(&self.shares)
            .filter(|(_, x)| x.is_positive())
    }

    /// Lays the positive-share sets out back to back over `[0, horizon)` in order.
    pub fn to_allocation(&self, n: usize, horizon: &Rational) -> Allocation {
        let mut start = Rational::zero();
        let mut blocks = Vec::new();
        let support: Vec<_> = self.support().collect();
        for (k, (set, share)) in support.iter().enumerate() {
            let end = if k + 1 == support.len() {
                horizon.clone()
            } else {
                &start + horizon * *share
            };
            if let Some(iv) = Interval::new(start.clone(), end.clone()) {
                blocks.push((iv, set.members().to_vec()));
            }
            start = end;
        }
        Allocation::from_blocks(n, blocks)
    }
}

/// Per-segment distributions on a common breakpoint grid.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SegmentAssignment {
    breakpoints: Vec<Rational>,
    sets: Vec<FeasibleSet>,
    /// `shares[s][j]`: fraction of segment `s` during which set `j` is connected.
    shares: Vec<Vec<Rational>>,
}

impl SegmentAssignment {
    pub fn new(
        breakpoints: Vec<Rational>,
        sets: Vec<FeasibleSet>,
        shares: Vec<Vec<Rational>>,
    ) -> Result<Self> {
        if breakpoints.len() < 2 || shares.len() + 1 != breakpoints.len() {
            return Err(Error::Parameter("one share row per segment is required".into()));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Parameter("breakpoints must increase".into()));
        }
        for row in &shares {
            if row.len() != sets.len() || row.iter().any(|x| x.is_negative()) {
                return Err(Error::Parameter("malformed share row".into()));
            }
            if row.iter().cloned().sum::<Rational>() != Rational::one() {
                return Err(Error::Parameter("segment shares must sum to 1".into()));
            }
        }
        Ok(Self {
            breakpoints,
            sets,
            shares,
        })
    }

    pub fn breakpoints(&self) -> &[Rational] {
        &self.breakpoints
    }

    pub fn sets(&self) -> &[FeasibleSet] {
        &self.sets
    }

    pub fn shares(&self) -> &[Vec<Rational>] {
        &self.shares
    }

    pub fn segment_count(&self) -> usize {
        self.shares.len()
    }

    pub fn segment(&self, s: usize) -> Interval {
        Interval::new(self.breakpoints[s].clone(), self.breakpoints[s + 1].clone())
            .expect("increasing breakpoints")
    }

    pub fn segment_distribution(&self, s: usize) -> SetDistribution {
        SetDistribution {
            sets: self.sets.clone(),
            shares: self.shares[s].clone(),
        }
    }

    /// Realizes the assignment with sets in index order inside every segment.
    pub fn layout_in_order(&self, n: usize) -> Allocation {
        switches::materialize(&switches::layouts_from_assignment(self), n)
    }
}

/// Every agent connected at least `1/n` of the time (tolerance `1e-9`).
pub fn ifs_check(dist: &SetDistribution, n: usize) -> bool {
    if n == 0 {
        return true;
    }
    let threshold = rational::ratio(1, n as i64) - tolerance();
    (0..n).all(|i| dist.agent_fraction(i) >= threshold)
}

fn tolerance() -> Rational {
    rational::ratio(1, 1_000_000_000)
}

fn agent_mask(set: &FeasibleSet) -> u64 {
    set.members().iter().fold(0u64, |m, &i| m | (1 << i))
}

/// Group fair share: for every non-empty group `G`, the sets intersecting
/// `G` together get at least `|G|/n` of the time (tolerance `1e-9`).
///
/// Supports `n <= 20`; larger inputs return `false`.
pub fn gfs_check(dist: &SetDistribution, n: usize) -> bool {
    gfs_violations(dist, n).is_some_and(|v| v.is_empty())
}

/// Groups (as sorted member lists) whose fair share is not met. `None` if `n > 20`.
pub fn gfs_violations(dist: &SetDistribution, n: usize) -> Option<Vec<Vec<usize>>> {
    if n > 20 {
        return None;
    }
    let full = (1usize << n) - 1;
    // mass[M] = total share of sets whose member mask is a subset of M.
    let mut mass = vec![Rational::zero(); 1 << n];
    for (set, share) in dist.sets.iter().zip(&dist.shares) {
        mass[agent_mask(set) as usize & full] += share;
    }
    for bit in 0..n {
        for m in 0..=full {
            if m >> bit & 1 == 1 {
                let lower = mass[m ^ (1 << bit)].clone();
                mass[m] += lower;
            }
        }
    }
    let total = mass[full].clone();
    let tol = tolerance();
    let mut violated = Vec::new();
    for g in 1..=full {
        let approved = &total - &mass[full ^ g];
        let need = rational::ratio(g.count_ones() as i64, n as i64);
        if approved < need - &tol {
            violated.push((0..n).filter(|i| g >> i & 1 == 1).collect());
        }
    }
    Some(violated)
}

/// Fairness diagnostics for a set distribution.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FairnessReport {
    pub fractions: Vec<Rational>,
    pub min_fraction: Rational,
    pub ifs: bool,
    pub gfs: Option<bool>,
    /// Pairs `(i, j)` with near-equal demands but different connected fractions.
    pub contentious_pairs: Vec<(usize, usize)>,
}

/// `demand_tolerance` is relative to the largest demand; pairs whose demands
/// differ by at most that much but whose fractions differ are flagged.
pub fn fairness_report(
    instance: &Instance,
    dist: &SetDistribution,
    demand_tolerance: &Rational,
) -> FairnessReport {
    let n = instance.n();
    let fractions = dist.fractions(n);
    let largest = instance
        .agents()
        .iter()
        .map(|a| a.demand.clone())
        .max()
        .unwrap_or_else(Rational::zero);
    let slack = &largest * demand_tolerance;
    let mut contentious_pairs = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let gap = (&instance.agent(i).demand - &instance.agent(j).demand).abs();
            if gap <= slack && fractions[i] != fractions[j] {
                contentious_pairs.push((i, j));
            }
        }
    }
    FairnessReport {
        min_fraction: fractions.iter().min().cloned().unwrap_or_else(Rational::zero),
        ifs: ifs_check(dist, n),
        gfs: (n <= 20).then(|| gfs_check(dist, n)),
        fractions,
        contentious_pairs,
    }
}
