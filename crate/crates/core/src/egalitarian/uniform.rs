use super::{SetDistribution, MAX_COLUMNS};
use crate::error::{Error, Result};
use crate::lp::{LinearProgram, LpOutcome, Relation};
use crate::model::Instance;
use crate::packing::{enumerate_maximal_feasible_sets, FeasibleSet};
use crate::rational::{self, Rational};
use num_traits::One;
use std::collections::HashMap;

pub(crate) fn maximal_sets_capped(instance: &Instance) -> Result<Vec<FeasibleSet>> {
    let sets = enumerate_maximal_feasible_sets(instance)?;
    if sets.len() > MAX_COLUMNS {
        return Err(Error::ProgramTooLarge {
            columns: sets.len(),
            cap: MAX_COLUMNS,
        });
    }
    Ok(sets)
}

/// Adds `Σ_{S ∋ i} x_S - r >= 0` for every agent and `Σ x_S = 1`.
/// Variables: `x_0..x_{K-1}`, then `r` at index `K`.
fn base_program(n: usize, sets: &[FeasibleSet]) -> LinearProgram {
    let k = sets.len();
    let mut lp = LinearProgram::new(k + 1);
    for i in 0..n {
        let mut row: Vec<(usize, Rational)> = sets
            .iter()
            .enumerate()
            .filter(|(_, s)| s.contains(i))
            .map(|(j, _)| (j, Rational::one()))
            .collect();
        row.push((k, -Rational::one()));
        lp.add_constraint(row, Relation::Ge, rational::int(0));
    }
    lp.add_constraint(
        (0..k).map(|j| (j, Rational::one())).collect(),
        Relation::Eq,
        Rational::one(),
    );
    lp
}

fn solve_optimal(lp: &LinearProgram) -> Result<crate::lp::LpSolution> {
    match lp.solve() {
        LpOutcome::Optimal(s) => Ok(s),
        LpOutcome::Infeasible { .. } => Err(Error::Solver("program infeasible".into())),
        LpOutcome::Unbounded => Err(Error::Solver("program unbounded".into())),
    }
}

/// Maximizes the fraction `r` of the time every agent is connected.
///
/// Among optimal distributions the one maximizing total connected time
/// (utilitarian tie-break) is returned; it is a vertex, so at most `n + 1`
/// sets get a positive share.
pub fn egalitarian_uniform(instance: &Instance) -> Result<(SetDistribution, Rational)> {
    let sets = maximal_sets_capped(instance)?;
    let n = instance.n();
    let k = sets.len();
    let mut lp = base_program(n, &sets);
    lp.set_objective(vec![(k, Rational::one())]);
    let best = solve_optimal(&lp)?;
    let r_star = best.values[k].clone();

    lp.add_constraint(vec![(k, Rational::one())], Relation::Ge, r_star.clone());
    lp.set_objective(
        sets.iter()
            .enumerate()
            .map(|(j, s)| (j, rational::int(s.len() as i64)))
            .collect(),
    );
    let tie_broken = solve_optimal(&lp)?;
    let shares = tie_broken.values[..k].to_vec();
    Ok((SetDistribution::new(sets, shares)?, r_star))
}

/// A group-fair-share distribution, with `r` maximized among them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GfsAllocation {
    pub distribution: SetDistribution,
    /// Smallest connected fraction.
    pub r: Rational,
    /// Groups whose fair-share constraint holds with equality.
    pub tight_groups: Vec<Vec<usize>>,
}

/// Distribution satisfying group fair share for every group of agents,
/// where a group approves every set containing at least one member.
///
/// Groups approving the same family of sets collapse to the largest one,
/// and groups approving every set are dropped since their constraint is
/// implied by `Σ x = 1`.
pub fn gfs_allocation(instance: &Instance) -> Result<GfsAllocation> {
    let n = instance.n();
    if n > 20 {
        return Err(Error::TooManyAgents {
            what: "group fair share",
            n,
            cap: 20,
        });
    }
    let sets = maximal_sets_capped(instance)?;
    let k = sets.len();
    let words = k.div_ceil(64);
    // approval[i]: bitset over sets containing agent i.
    let approval: Vec<Vec<u64>> = (0..n)
        .map(|i| {
            let mut bits = vec![0u64; words];
            for (j, s) in sets.iter().enumerate() {
                if s.contains(i) {
                    bits[j / 64] |= 1 << (j % 64);
                }
            }
            bits
        })
        .collect();

    let full = (1usize << n) - 1;
    let mut families: Vec<Vec<u64>> = vec![vec![0u64; words]; full + 1];
    let mut strongest: HashMap<Vec<u64>, usize> = HashMap::new();
    for g in 1..=full {
        let low = g.trailing_zeros() as usize;
        let rest = g & (g - 1);
        let fam: Vec<u64> = families[rest]
            .iter()
            .zip(&approval[low])
            .map(|(a, b)| a | b)
            .collect();
        let entry = strongest.entry(fam.clone()).or_insert(g);
        if g.count_ones() > entry.count_ones() || (g.count_ones() == entry.count_ones() && g < *entry) {
            *entry = g;
        }
        families[g] = fam;
    }
    drop(families);
    let everything: Vec<u64> = (0..words)
        .map(|w| {
            let bits = (k - w * 64).min(64);
            if bits == 64 {
                u64::MAX
            } else {
                (1u64 << bits) - 1
            }
        })
        .collect();
    let mut groups: Vec<(usize, Vec<u64>)> = strongest
        .into_iter()
        .filter(|(fam, _)| fam != &everything)
        .map(|(fam, g)| (g, fam))
        .collect();
    groups.sort();

    let mut lp = base_program(n, &sets);
    let first_group_row = lp.constraints().len();
    for (g, fam) in &groups {
        let row = (0..k)
            .filter(|j| fam[j / 64] >> (j % 64) & 1 == 1)
            .map(|j| (j, Rational::one()))
            .collect();
        lp.add_constraint(
            row,
            Relation::Ge,
            rational::ratio(g.count_ones() as i64, n as i64),
        );
    }
    lp.set_objective(vec![(k, Rational::one())]);
    let members = |g: usize| -> Vec<usize> { (0..n).filter(|i| g >> i & 1 == 1).collect() };
    let solution = match lp.solve() {
        LpOutcome::Optimal(s) => s,
        LpOutcome::Infeasible { violated } => {
            let certificate = violated
                .into_iter()
                .filter(|&row| row >= first_group_row)
                .map(|row| members(groups[row - first_group_row].0))
                .collect();
            return Err(Error::GfsInfeasible(certificate));
        }
        LpOutcome::Unbounded => return Err(Error::Solver("GFS program unbounded".into())),
    };
    let shares = solution.values[..k].to_vec();
    let tight_groups = groups
        .iter()
        .filter(|(g, fam)| {
            let approved: Rational = (0..k)
                .filter(|j| fam[j / 64] >> (j % 64) & 1 == 1)
                .map(|j| shares[j].clone())
                .sum();
            approved == rational::ratio(g.count_ones() as i64, n as i64)
        })
        .map(|(g, _)| members(*g))
        .collect();
    Ok(GfsAllocation {
        r: solution.values[k].clone(),
        distribution: SetDistribution::new(sets, shares)?,
        tight_groups,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::egalitarian::{gfs_check, ifs_check};
    use crate::rational::{int, ratio};

    fn inst(supply: i64, demands: &[i64]) -> Instance {
        let d: Vec<Rational> = demands.iter().map(|&x| int(x)).collect();
        Instance::with_uniform_utilities(int(supply), int(1), &d).unwrap()
    }

    fn shares_by_members(d: &SetDistribution) -> Vec<(Vec<usize>, Rational)> {
        d.sets()
            .iter()
            .zip(d.shares())
            .map(|(s, x)| (s.members().to_vec(), x.clone()))
            .collect()
    }

    #[test]
    fn three_units_two_thirds() {
        let (d, r) = egalitarian_uniform(&inst(2, &[1, 1, 1])).unwrap();
        assert_eq!(r, ratio(2, 3));
        assert_eq!(d.shares(), &[ratio(1, 3), ratio(1, 3), ratio(1, 3)]);
    }

    #[test]
    fn ten_twenty_thirty_halves() {
        let (d, r) = egalitarian_uniform(&inst(30, &[10, 20, 30])).unwrap();
        assert_eq!(r, ratio(1, 2));
        assert_eq!(
            shares_by_members(&d),
            vec![(vec![0, 1], ratio(1, 2)), (vec![2], ratio(1, 2))]
        );
    }

    #[test]
    fn everyone_fits_gives_one() {
        let (d, r) = egalitarian_uniform(&inst(10, &[1, 2, 3])).unwrap();
        assert_eq!(r, int(1));
        assert_eq!(d.shares(), &[int(1)]);
    }

    #[test]
    fn gfs_ten_twenty_thirty() {
        let g = gfs_allocation(&inst(30, &[10, 20, 30])).unwrap();
        assert_eq!(
            shares_by_members(&g.distribution),
            vec![(vec![0, 1], ratio(2, 3)), (vec![2], ratio(1, 3))]
        );
        assert!(gfs_check(&g.distribution, 3));
        assert!(g.tight_groups.contains(&vec![0, 1]));
    }

    #[test]
    fn gfs_single_set() {
        let g = gfs_allocation(&inst(10, &[1, 2])).unwrap();
        assert_eq!(g.distribution.shares(), &[int(1)]);
        assert_eq!(g.r, int(1));
    }

    #[test]
    fn gfs_three_units() {
        let g = gfs_allocation(&inst(2, &[1, 1, 1])).unwrap();
        assert_eq!(g.distribution.shares(), &[ratio(1, 3), ratio(1, 3), ratio(1, 3)]);
        assert_eq!(g.r, ratio(2, 3));
        assert!(gfs_check(&g.distribution, 3));
        assert!(ifs_check(&g.distribution, 3));
    }

    #[test]
    fn gfs_small_families() {
        let g = gfs_allocation(&inst(30, &[5, 10, 15, 30])).unwrap();
        assert_eq!(
            shares_by_members(&g.distribution),
            vec![(vec![0, 1, 2], ratio(3, 4)), (vec![3], ratio(1, 4))]
        );
    }
}
