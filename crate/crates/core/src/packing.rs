//! Maximal feasible sets, bin packing and q-times bin packing.
//!
//! A q-times packing places every agent in `q` different bins of capacity
//! `S`; connecting each of the `k` bins for `1/k` of the horizon connects
//! every agent for `q/k` of the time.
//!
//! Demands are compared exactly: all sizes are rescaled to integers by the
//! common denominator before searching.

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::model::{Allocation, Instance};
use crate::rational::{self, Rational};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use std::cmp::Reverse;
use std::time::{Duration, Instant};

/// A set of agents whose total demand fits under the supply.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FeasibleSet {
    members: Vec<usize>,
    total_demand: Rational,
}

impl FeasibleSet {
    /// `members` are agent positions; duplicates are removed.
    pub fn new(mut members: Vec<usize>, demands: &[Rational]) -> Self {
        members.sort_unstable();
        members.dedup();
        let total_demand = members.iter().map(|&i| demands[i].clone()).sum();
        Self {
            members,
            total_demand,
        }
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn total_demand(&self) -> &Rational {
        &self.total_demand
    }

    pub fn contains(&self, agent: usize) -> bool {
        self.members.binary_search(&agent).is_ok()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// No agent outside the set fits in the remaining supply.
    pub fn is_maximal(&self, demands: &[Rational], supply: &Rational) -> bool {
        let slack = supply - &self.total_demand;
        (0..demands.len()).all(|i| self.contains(i) || demands[i] > slack)
    }
}

#[derive(Clone, Debug)]
pub struct PackingOptions {
    /// Exact searches refuse instances with more agents than this.
    pub max_agents: usize,
    pub time_budget: Duration,
    /// Largest bin count tried by q-times packing; `None` means `q * n`,
    /// which always admits a packing.
    pub max_bins: Option<usize>,
}

impl Default for PackingOptions {
    fn default() -> Self {
        Self {
            max_agents: 20,
            time_budget: Duration::from_secs(10),
            max_bins: None,
        }
    }
}

/// Integer view of demands and supply under a common denominator.
struct Scaled {
    sizes: Vec<u128>,
    capacity: u128,
}

impl Scaled {
    fn new(demands: &[Rational], supply: &Rational) -> Result<Self> {
        let lcm = demands
            .iter()
            .chain(std::iter::once(supply))
            .fold(BigInt::one(), |acc, r| acc.lcm(r.denom()));
        let scale = |r: &Rational| -> Result<u128> {
            let v = r.numer() * (&lcm / r.denom());
            v.to_u128().ok_or(Error::PrecisionOverflow)
        };
        let sizes = demands.iter().map(scale).collect::<Result<Vec<_>>>()?;
        let capacity = scale(supply)?;
        let total: Option<u128> = sizes.iter().try_fold(0u128, |acc, &s| acc.checked_add(s));
        if total.and_then(|t| t.checked_mul(64)).is_none() {
            return Err(Error::PrecisionOverflow);
        }
        Ok(Self { sizes, capacity })
    }
}

fn validate_demands(demands: &[Rational], supply: &Rational) -> Result<()> {
    if demands.is_empty() {
        return Err(Error::Parameter("no demands".into()));
    }
    for (i, d) in demands.iter().enumerate() {
        if d <= &Rational::zero() {
            return Err(Error::Parameter(format!("demand {i} is not positive")));
        }
        if d > supply {
            return Err(Error::DemandExceedsSupply {
                agent: i,
                demand: rational::format_rational(d),
                supply: rational::format_rational(supply),
            });
        }
    }
    Ok(())
}

/// All inclusion-maximal subsets with total demand at most the supply,
/// sorted by member list.
pub fn enumerate_maximal_feasible_sets(instance: &Instance) -> Result<Vec<FeasibleSet>> {
    maximal_feasible_sets(&instance.demands(), instance.supply(), 20)
}

pub fn maximal_feasible_sets(
    demands: &[Rational],
    supply: &Rational,
    max_agents: usize,
) -> Result<Vec<FeasibleSet>> {
    validate_demands(demands, supply)?;
    let n = demands.len();
    if n > max_agents {
        return Err(Error::TooManyAgents {
            what: "maximal feasible set enumeration",
            n,
            cap: max_agents,
        });
    }
    let scaled = Scaled::new(demands, supply)?;
    let mut found = Vec::new();
    let mut chosen = Vec::with_capacity(n);
    enumerate_rec(&scaled, 0, 0, &mut chosen, &mut found);
    let mut sets: Vec<FeasibleSet> = found
        .into_iter()
        .map(|m| FeasibleSet::new(m, demands))
        .collect();
    sets.sort();
    Ok(sets)
}

fn enumerate_rec(
    scaled: &Scaled,
    next: usize,
    load: u128,
    chosen: &mut Vec<usize>,
    found: &mut Vec<Vec<usize>>,
) {
    let n = scaled.sizes.len();
    if next == n {
        let slack = scaled.capacity - load;
        let maximal = (0..n).all(|i| chosen.contains(&i) || scaled.sizes[i] > slack);
        if maximal {
            found.push(chosen.clone());
        }
        return;
    }
    let size = scaled.sizes[next];
    if load + size <= scaled.capacity {
        chosen.push(next);
        enumerate_rec(scaled, next + 1, load + size, chosen, found);
        chosen.pop();
    }
    enumerate_rec(scaled, next + 1, load, chosen, found);
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinPackMode {
    FirstFitDecreasing,
    Exact,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinPacking {
    pub bins: Vec<FeasibleSet>,
    /// Whether `bins.len()` is proven minimal.
    pub optimal: bool,
}

impl BinPacking {
    pub fn k(&self) -> usize {
        self.bins.len()
    }
}

pub fn bin_pack(
    demands: &[Rational],
    supply: &Rational,
    mode: BinPackMode,
    options: &PackingOptions,
) -> Result<BinPacking> {
    validate_demands(demands, supply)?;
    let scaled = Scaled::new(demands, supply)?;
    let ffd = first_fit_decreasing(&scaled);
    let to_sets = |bins: Vec<Vec<usize>>| -> Vec<FeasibleSet> {
        let mut sets: Vec<FeasibleSet> =
            bins.into_iter().map(|b| FeasibleSet::new(b, demands)).collect();
        sets.sort();
        sets
    };
    match mode {
        BinPackMode::FirstFitDecreasing => {
            let lb = volume_bound(&scaled, 1);
            let optimal = ffd.len() == lb;
            Ok(BinPacking {
                bins: to_sets(ffd),
                optimal,
            })
        }
        BinPackMode::Exact => {
            if demands.len() > options.max_agents {
                return Err(Error::TooManyAgents {
                    what: "exact bin packing",
                    n: demands.len(),
                    cap: options.max_agents,
                });
            }
            let (bins, optimal) = exact_bin_pack(&scaled, ffd, options.time_budget);
            Ok(BinPacking {
                bins: to_sets(bins),
                optimal,
            })
        }
    }
}

fn volume_bound(scaled: &Scaled, q: usize) -> usize {
    let total: u128 = scaled.sizes.iter().sum::<u128>() * q as u128;
    (total.div_ceil(scaled.capacity) as usize).max(q)
}

fn order_by_size_desc(scaled: &Scaled) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scaled.sizes.len()).collect();
    order.sort_by_key(|&i| (Reverse(scaled.sizes[i]), i));
    order
}

fn first_fit_decreasing(scaled: &Scaled) -> Vec<Vec<usize>> {
    let mut bins: Vec<(u128, Vec<usize>)> = Vec::new();
    for i in order_by_size_desc(scaled) {
        let size = scaled.sizes[i];
        match bins.iter_mut().find(|(residual, _)| *residual >= size) {
            Some((residual, members)) => {
                *residual -= size;
                members.push(i);
            }
            None => bins.push((scaled.capacity - size, vec![i])),
        }
    }
    bins.into_iter().map(|(_, m)| m).collect()
}

struct Deadline {
    end: Instant,
    nodes: u64,
    expired: bool,
}

impl Deadline {
    fn new(budget: Duration) -> Self {
        Self {
            end: Instant::now() + budget,
            nodes: 0,
            expired: false,
        }
    }

    fn tick(&mut self) -> bool {
        self.nodes += 1;
        if self.nodes % 4096 == 0 && Instant::now() >= self.end {
            self.expired = true;
        }
        self.expired
    }
}

struct BinSearch<'a> {
    scaled: &'a Scaled,
    order: Vec<usize>,
    suffix_volume: Vec<u128>,
    best: Vec<Vec<usize>>,
    lower_bound: usize,
    deadline: Deadline,
}

fn exact_bin_pack(scaled: &Scaled, ffd: Vec<Vec<usize>>, budget: Duration) -> (Vec<Vec<usize>>, bool) {
    let lower_bound = volume_bound(scaled, 1);
    if ffd.len() == lower_bound {
        return (ffd, true);
    }
    let order = order_by_size_desc(scaled);
    let mut suffix_volume = vec![0u128; order.len() + 1];
    for t in (0..order.len()).rev() {
        suffix_volume[t] = suffix_volume[t + 1] + scaled.sizes[order[t]];
    }
    let mut search = BinSearch {
        scaled,
        order,
        suffix_volume,
        best: ffd,
        lower_bound,
        deadline: Deadline::new(budget),
    };
    let mut bins: Vec<(u128, Vec<usize>)> = Vec::new();
    search.descend(0, &mut bins);
    let optimal = !search.deadline.expired;
    (search.best, optimal)
}

impl BinSearch<'_> {
    fn descend(&mut self, t: usize, bins: &mut Vec<(u128, Vec<usize>)>) {
        if self.deadline.tick() || self.best.len() == self.lower_bound {
            return;
        }
        if t == self.order.len() {
            if bins.len() < self.best.len() {
                self.best = bins.iter().map(|(_, m)| m.clone()).collect();
            }
            return;
        }
        let free: u128 = bins.iter().map(|(r, _)| *r).sum();
        let overflow = self.suffix_volume[t].saturating_sub(free);
        let needed = bins.len() + overflow.div_ceil(self.scaled.capacity) as usize;
        if needed >= self.best.len() {
            return;
        }
        let item = self.order[t];
        let size = self.scaled.sizes[item];
        let mut tried: Vec<u128> = Vec::new();
        for j in 0..bins.len() {
            let residual = bins[j].0;
            if residual < size || tried.contains(&residual) {
                continue;
            }
            tried.push(residual);
            bins[j].0 -= size;
            bins[j].1.push(item);
            self.descend(t + 1, bins);
            bins[j].1.pop();
            bins[j].0 += size;
        }
        if bins.len() + 1 < self.best.len() {
            bins.push((self.scaled.capacity - size, vec![item]));
            self.descend(t + 1, bins);
            bins.pop();
        }
    }
}

/// `k` bins, each agent in exactly `q` distinct bins. Bins are identified by
/// index, so two bins may hold the same members.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QPacking {
    pub q: usize,
    pub bins: Vec<FeasibleSet>,
    /// Whether no smaller bin count admits a q-times packing.
    pub optimal: bool,
}

impl QPacking {
    pub fn k(&self) -> usize {
        self.bins.len()
    }

    /// Guaranteed connected fraction `q/k`.
    pub fn ratio(&self) -> Rational {
        rational::ratio(self.q as i64, self.k() as i64)
    }

    /// Bin `j` is connected during the `j`-th `1/k` of the horizon.
    pub fn to_allocation(&self, n: usize, horizon: &Rational) -> Allocation {
        let k = self.k() as i64;
        let blocks = self.bins.iter().enumerate().map(|(j, bin)| {
            let start = horizon * rational::ratio(j as i64, k);
            let end = horizon * rational::ratio(j as i64 + 1, k);
            (
                Interval::new(start, end).expect("k > 0"),
                bin.members().to_vec(),
            )
        });
        Allocation::from_blocks(n, blocks)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum QPackingOutcome {
    Found(QPacking),
    /// No q-times packing with at most `max_bins` bins exists (or none was
    /// found before the time budget ran out, when `exhausted` is false).
    NotFound { max_bins: usize, exhausted: bool },
}

impl QPackingOutcome {
    pub fn packing(&self) -> Option<&QPacking> {
        match self {
            QPackingOutcome::Found(p) => Some(p),
            QPackingOutcome::NotFound { .. } => None,
        }
    }

    pub fn into_packing(self) -> Option<QPacking> {
        match self {
            QPackingOutcome::Found(p) => Some(p),
            QPackingOutcome::NotFound { .. } => None,
        }
    }
}

/// Smallest `k` admitting a q-times packing, searched upward from
/// `max(q, ⌈q·Σd/S⌉)`. With `q = 1` this is exact bin packing.
pub fn q_times_bin_pack(
    demands: &[Rational],
    supply: &Rational,
    q: usize,
    options: &PackingOptions,
) -> Result<QPackingOutcome> {
    validate_demands(demands, supply)?;
    if q == 0 {
        return Err(Error::Parameter("q must be at least 1".into()));
    }
    let n = demands.len();
    if n > options.max_agents || n > 64 {
        return Err(Error::TooManyAgents {
            what: "q-times bin packing",
            n,
            cap: options.max_agents.min(64),
        });
    }
    let scaled = Scaled::new(demands, supply)?;
    let max_bins = options.max_bins.unwrap_or(q * n);
    let mut deadline = Deadline::new(options.time_budget);
    let order = order_by_size_desc(&scaled);
    for k in volume_bound(&scaled, q)..=max_bins {
        let mut search = QSearch::new(&scaled, &order, q, k, &mut deadline);
        if search.place(0, 0, 0) {
            let bins = search
                .masks
                .iter()
                .map(|&mask| {
                    FeasibleSet::new((0..n).filter(|i| mask >> i & 1 == 1).collect(), demands)
                })
                .collect();
            return Ok(QPackingOutcome::Found(QPacking {
                q,
                bins,
                optimal: true,
            }));
        }
        if deadline.expired {
            break;
        }
    }
    if !deadline.expired {
        return Ok(QPackingOutcome::NotFound {
            max_bins,
            exhausted: true,
        });
    }
    // Budget exhausted: q stacked copies of first-fit decreasing is always valid.
    let ffd = first_fit_decreasing(&scaled);
    if q * ffd.len() <= max_bins {
        let mut bins = Vec::with_capacity(q * ffd.len());
        for _ in 0..q {
            bins.extend(ffd.iter().map(|b| FeasibleSet::new(b.clone(), demands)));
        }
        return Ok(QPackingOutcome::Found(QPacking {
            q,
            bins,
            optimal: false,
        }));
    }
    Ok(QPackingOutcome::NotFound {
        max_bins,
        exhausted: false,
    })
}

struct QSearch<'a> {
    scaled: &'a Scaled,
    order: &'a [usize],
    q: usize,
    residual: Vec<u128>,
    masks: Vec<u64>,
    /// Volume still to place from item `t` onward (all copies).
    suffix_volume: Vec<u128>,
    deadline: &'a mut Deadline,
}

impl<'a> QSearch<'a> {
    fn new(scaled: &'a Scaled, order: &'a [usize], q: usize, k: usize, deadline: &'a mut Deadline) -> Self {
        let mut suffix_volume = vec![0u128; order.len() + 1];
        for t in (0..order.len()).rev() {
            suffix_volume[t] = suffix_volume[t + 1] + q as u128 * scaled.sizes[order[t]];
        }
        Self {
            scaled,
            order,
            q,
            residual: vec![scaled.capacity; k],
            masks: vec![0; k],
            suffix_volume,
            deadline,
        }
    }

    /// Places copy `copy` of item `order[t]` into a bin `>= min_bin`.
    fn place(&mut self, t: usize, copy: usize, min_bin: usize) -> bool {
        if self.deadline.tick() {
            return false;
        }
        if t == self.order.len() {
            return true;
        }
        if copy == self.q {
            return self.place(t + 1, 0, 0);
        }
        let item = self.order[t];
        let size = self.scaled.sizes[item];
        let k = self.residual.len();
        let pending = self.suffix_volume[t + 1] + (self.q - copy) as u128 * size;
        let free: u128 = self.residual.iter().sum();
        if pending > free {
            return false;
        }
        let room = (min_bin..k).filter(|&j| self.residual[j] >= size).count();
        if room < self.q - copy {
            return false;
        }
        for j in min_bin..k {
            if self.residual[j] < size {
                continue;
            }
            // Bins with identical contents are interchangeable.
            if j > min_bin && self.masks[j] == self.masks[j - 1] {
                continue;
            }
            self.residual[j] -= size;
            self.masks[j] |= 1 << item;
            if self.place(t, copy + 1, j + 1) {
                return true;
            }
            self.masks[j] &= !(1 << item);
            self.residual[j] += size;
        }
        false
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PackingRatio {
    pub q: usize,
    pub k: usize,
    pub ratio: Rational,
    pub packing: QPacking,
    /// Largest q examined.
    pub q_max: usize,
}

/// Best guarantee `q/k` over `q = 1..=q_max`; ties keep the smaller `q`.
pub fn best_packing_ratio(
    demands: &[Rational],
    supply: &Rational,
    q_max: usize,
    options: &PackingOptions,
) -> Result<PackingRatio> {
    if q_max == 0 {
        return Err(Error::Parameter("q_max must be at least 1".into()));
    }
    let mut best: Option<PackingRatio> = None;
    for q in 1..=q_max {
        let Some(packing) = q_times_bin_pack(demands, supply, q, options)?.into_packing() else {
            continue;
        };
        let ratio = packing.ratio();
        if best.as_ref().is_none_or(|b| ratio > b.ratio) {
            best = Some(PackingRatio {
                q,
                k: packing.k(),
                ratio,
                packing,
                q_max,
            });
        }
    }
    best.ok_or_else(|| Error::Solver("no q-times packing found for any q".into()))
}
