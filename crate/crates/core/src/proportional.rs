//! Identical-demand schedules.
//!
//! With a common demand `d`, exactly `q = ⌊S/d⌋` agents fit at any time.
//! Uniform utilities are served by a rotating round-robin; additive
//! utilities by running Even-Paz on `q` back-to-back copies of the horizon
//! and folding the pieces back onto `[0, T]`.

use crate::error::{Error, Result};
use crate::interval::{Interval, IntervalSet};
use crate::model::{Allocation, Instance, PiecewiseConstantUtility};
use crate::rational::{self, Rational};
use num_traits::{Signed, Zero};

/// Number of agents with demand `demand` that fit under `supply`.
pub fn connection_quota(supply: &Rational, demand: &Rational) -> Result<usize> {
    if !demand.is_positive() || !supply.is_positive() {
        return Err(Error::Parameter("supply and demand must be positive".into()));
    }
    if demand > supply {
        return Err(Error::Parameter(format!(
            "demand {} exceeds supply {}",
            rational::format_rational(demand),
            rational::format_rational(supply)
        )));
    }
    rational::floor_usize(&(supply / demand))
        .ok_or_else(|| Error::Parameter("quota does not fit in usize".into()))
}

fn identical_quota(instance: &Instance) -> Result<usize> {
    let d = instance.identical_demand().ok_or(Error::HeterogeneousDemands)?;
    connection_quota(instance.supply(), d)
}

/// Round-robin over `n` equal slots: slot `j` connects agents `j, j+1, …, j+q-1 (mod n)`.
///
/// Every agent is connected for exactly `qT/n` and exactly `q` agents are
/// connected at every time.
pub fn allocate_uniform_identical(instance: &Instance) -> Result<Allocation> {
    let q = identical_quota(instance)?;
    let n = instance.n();
    let horizon = instance.horizon();
    if q >= n {
        return Ok(Allocation::everyone(n, horizon));
    }
    let slot = horizon / rational::int(n as i64);
    let blocks = (0..n).map(|j| {
        let start = &slot * rational::int(j as i64);
        let end = if j + 1 == n {
            horizon.clone()
        } else {
            &slot * rational::int(j as i64 + 1)
        };
        let members = (0..q).map(|k| (j + k) % n).collect();
        (Interval::new(start, end).expect("positive slot"), members)
    });
    Ok(Allocation::from_blocks(n, blocks))
}

/// Even-Paz recursive halving over `interval`.
///
/// Returns one contiguous piece per input utility, in input order. Each
/// agent values its piece at no less than `1/n` of its value of the whole
/// interval. Marks that tie go left in index order.
pub fn even_paz(
    utilities: &[&PiecewiseConstantUtility],
    interval: &Interval,
) -> Result<Vec<Interval>> {
    if utilities.is_empty() {
        return Ok(Vec::new());
    }
    for (i, u) in utilities.iter().enumerate() {
        if !u.value_between(interval.start(), interval.end())?.is_positive() {
            return Err(Error::ZeroValueOnInterval(i));
        }
    }
    let mut out: Vec<Option<Interval>> = vec![None; utilities.len()];
    let agents: Vec<usize> = (0..utilities.len()).collect();
    divide(utilities, &agents, interval, &mut out)?;
    Ok(out.into_iter().map(|p| p.expect("every agent served")).collect())
}

fn divide(
    utilities: &[&PiecewiseConstantUtility],
    agents: &[usize],
    interval: &Interval,
    out: &mut [Option<Interval>],
) -> Result<()> {
    let n = agents.len();
    if n == 1 {
        out[agents[0]] = Some(interval.clone());
        return Ok(());
    }
    let left_count = n / 2;
    let fraction = rational::ratio(left_count as i64, n as i64);
    let mut marks: Vec<(Rational, usize)> = agents
        .iter()
        .map(|&i| {
            let u = utilities[i];
            let whole = u.value_between(interval.start(), interval.end())?;
            let target = whole * &fraction;
            let mark = u
                .point_with_value_from(interval.start(), &target)
                .ok_or_else(|| Error::Solver("mark beyond interval".into()))?;
            Ok((rational::min(&mark, interval.end()), i))
        })
        .collect::<Result<Vec<_>>>()?;
    marks.sort();
    let cut = marks[left_count - 1].0.clone();
    let (left, right): (Vec<_>, Vec<_>) = marks.into_iter().enumerate().partition(|(k, _)| *k < left_count);
    let left: Vec<usize> = left.into_iter().map(|(_, (_, i))| i).collect();
    let right: Vec<usize> = right.into_iter().map(|(_, (_, i))| i).collect();
    let left_iv = Interval::new(interval.start().clone(), cut.clone())
        .ok_or_else(|| Error::Solver("empty left half".into()))?;
    let right_iv = Interval::new(cut, interval.end().clone())
        .ok_or_else(|| Error::Solver("empty right half".into()))?;
    divide(utilities, &left, &left_iv, out)?;
    divide(utilities, &right, &right_iv, out)
}

/// `q` adjacent copies of the horizon, each agent's density repeated per copy.
#[derive(Clone, Debug)]
pub struct CopiedCake {
    copies: usize,
    base_horizon: Rational,
    utilities: Vec<PiecewiseConstantUtility>,
}

impl CopiedCake {
    pub fn new(instance: &Instance, copies: usize) -> Self {
        Self {
            copies,
            base_horizon: instance.horizon().clone(),
            utilities: instance.utilities().map(|u| u.repeated(copies)).collect(),
        }
    }

    pub fn copies(&self) -> usize {
        self.copies
    }

    pub fn base_horizon(&self) -> &Rational {
        &self.base_horizon
    }

    pub fn horizon(&self) -> Rational {
        &self.base_horizon * rational::int(self.copies as i64)
    }

    pub fn utilities(&self) -> &[PiecewiseConstantUtility] {
        &self.utilities
    }

    /// Folds a piece of the extended cake back onto `[0, T)` via `t ↦ t mod T`.
    pub fn fold(&self, piece: &Interval) -> IntervalSet {
        let mut parts = Vec::new();
        for c in 0..self.copies {
            let offset = &self.base_horizon * rational::int(c as i64);
            let window = Interval::new(offset.clone(), &offset + &self.base_horizon).expect("T > 0");
            if let Some(part) = piece.intersection(&window) {
                parts.push(part.shifted(&-offset));
            }
        }
        IntervalSet::from_intervals(parts)
    }
}

/// Even-Paz on `q` copies of the horizon, folded back. Each agent receives
/// at least `q/n` of its total utility and at most `q` agents are connected
/// at any time.
pub fn allocate_identical_additive(instance: &Instance) -> Result<Allocation> {
    let q = identical_quota(instance)?;
    let n = instance.n();
    if q >= n {
        return Ok(Allocation::everyone(n, instance.horizon()));
    }
    let cake = CopiedCake::new(instance, q);
    let refs: Vec<&PiecewiseConstantUtility> = cake.utilities().iter().collect();
    let whole = Interval::new(Rational::zero(), cake.horizon()).expect("positive horizon");
    let pieces = even_paz(&refs, &whole)?;
    Ok(Allocation::new(pieces.iter().map(|p| cake.fold(p)).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{check_feasible, compute_metrics, Agent};
    use crate::rational::{int, parse_rational as q, ratio};

    fn table_instance() -> Instance {
        let rows = [("0.8", "0.2"), ("0.2", "0.8"), ("0.7", "0.3"), ("0.3", "0.7")];
        let agents = rows
            .iter()
            .enumerate()
            .map(|(i, (a, b))| {
                Agent::new(
                    i + 1,
                    int(2),
                    PiecewiseConstantUtility::new(
                        vec![int(0), int(1), int(2)],
                        vec![q(a).unwrap(), q(b).unwrap()],
                    )
                    .unwrap(),
                )
            })
            .collect();
        Instance::new(int(4), int(2), agents).unwrap()
    }

    fn uniform(n: usize, d: i64, s: i64, t: i64) -> Instance {
        Instance::with_uniform_utilities(int(s), int(t), &vec![int(d); n]).unwrap()
    }

    fn iv(a: Rational, b: Rational) -> Interval {
        Interval::new(a, b).unwrap()
    }

    #[test]
    fn quota_examples() {
        assert_eq!(connection_quota(&int(4), &int(2)).unwrap(), 2);
        assert_eq!(connection_quota(&int(3), &int(3)).unwrap(), 1);
        assert_eq!(connection_quota(&int(30), &int(10)).unwrap(), 3);
        assert_eq!(connection_quota(&q("0.3").unwrap(), &q("0.1").unwrap()).unwrap(), 3);
        assert!(connection_quota(&int(1), &int(2)).is_err());
    }

    #[test]
    fn round_robin_four_agents() {
        let inst = uniform(4, 2, 4, 2);
        let a = allocate_uniform_identical(&inst).unwrap();
        for i in 0..4 {
            assert_eq!(a.connected_measure(i), int(1));
        }
        assert_eq!(a.switch_count(inst.horizon()), 3);
        assert!(check_feasible(&inst, &a).unwrap().is_ok());
    }

    #[test]
    fn round_robin_single_agent() {
        let inst = uniform(1, 1, 1, 5);
        let a = allocate_uniform_identical(&inst).unwrap();
        assert_eq!(a.agent(0).intervals(), &[iv(int(0), int(5))]);
    }

    #[test]
    fn round_robin_three_pairs() {
        let inst = uniform(3, 1, 2, 3);
        let a = allocate_uniform_identical(&inst).unwrap();
        let cells = a.cells(inst.horizon());
        let sets: Vec<Vec<usize>> = cells.iter().map(|c| c.agents.clone()).collect();
        assert_eq!(sets, vec![vec![0, 1], vec![1, 2], vec![0, 2]]);
        for i in 0..3 {
            assert_eq!(a.connected_measure(i), int(2));
        }
    }

    #[test]
    fn round_robin_rejects_mixed_demands() {
        let inst =
            Instance::with_uniform_utilities(int(3), int(1), &[int(1), int(2)]).unwrap();
        assert!(matches!(
            allocate_uniform_identical(&inst),
            Err(Error::HeterogeneousDemands)
        ));
    }

    #[test]
    fn even_paz_single_agent_takes_all() {
        let u = PiecewiseConstantUtility::uniform(int(3), int(1)).unwrap();
        let whole = iv(int(0), int(3));
        assert_eq!(even_paz(&[&u], &whole).unwrap(), vec![whole]);
    }

    #[test]
    fn even_paz_two_uniform_halves() {
        let u = PiecewiseConstantUtility::uniform(int(1), int(1)).unwrap();
        let pieces = even_paz(&[&u, &u], &iv(int(0), int(1))).unwrap();
        assert_eq!(pieces, vec![iv(int(0), ratio(1, 2)), iv(ratio(1, 2), int(1))]);
    }

    #[test]
    fn even_paz_zero_value_agent_is_an_error() {
        let u = PiecewiseConstantUtility::new(vec![int(0), int(1), int(2)], vec![int(0), int(1)])
            .unwrap();
        let v = PiecewiseConstantUtility::uniform(int(2), int(1)).unwrap();
        assert!(matches!(
            even_paz(&[&v, &u], &iv(int(0), int(1))),
            Err(Error::ZeroValueOnInterval(1))
        ));
    }

    #[test]
    fn even_paz_on_copied_table_cake() {
        // Hand-executed: every half-value mark on [0,4] sits at 2; agents 1,2 go left.
        let inst = table_instance();
        let cake = CopiedCake::new(&inst, 2);
        let refs: Vec<_> = cake.utilities().iter().collect();
        let pieces = even_paz(&refs, &iv(int(0), int(4))).unwrap();
        assert_eq!(
            pieces,
            vec![
                iv(int(0), ratio(5, 8)),
                iv(ratio(5, 8), int(2)),
                iv(int(2), ratio(19, 7)),
                iv(ratio(19, 7), int(4)),
            ]
        );
        for (u, p) in refs.iter().zip(&pieces) {
            assert!(u.value_between(p.start(), p.end()).unwrap() >= ratio(1, 2));
        }
    }

    #[test]
    fn copied_cake_doubles_value() {
        let inst = table_instance();
        let cake = CopiedCake::new(&inst, 2);
        for (ext, base) in cake.utilities().iter().zip(inst.utilities()) {
            assert_eq!(ext.total(), int(2) * base.total());
        }
        assert_eq!(cake.horizon(), int(4));
        let folded = cake.fold(&iv(ratio(3, 2), ratio(5, 2)));
        assert_eq!(
            folded.intervals(),
            &[iv(int(0), ratio(1, 2)), iv(ratio(3, 2), int(2))]
        );
    }

    #[test]
    fn table_instance_gets_half_each() {
        let inst = table_instance();
        let a = allocate_identical_additive(&inst).unwrap();
        let m = compute_metrics(&inst, &a).unwrap();
        assert!(m.per_agent_utility.iter().all(|u| u >= &ratio(1, 2)));
        assert!(m.per_agent_pieces.iter().all(|&p| p <= 2));
        assert_eq!(a.agent(2).intervals(), &[iv(int(0), ratio(5, 7))]);
    }

    #[test]
    fn quota_equal_to_n_connects_everyone() {
        let inst = uniform(2, 2, 4, 2);
        let a = allocate_identical_additive(&inst).unwrap();
        let m = compute_metrics(&inst, &a).unwrap();
        assert_eq!(m.per_agent_utility, vec![int(1), int(1)]);
    }

    #[test]
    fn uniform_four_agents_two_slots() {
        let inst = uniform(4, 2, 4, 2);
        let a = allocate_identical_additive(&inst).unwrap();
        let m = compute_metrics(&inst, &a).unwrap();
        assert_eq!(m.per_agent_utility, vec![ratio(1, 2); 4]);
    }
}
