use crate::error::{Error, Result};
use crate::interval::{Interval, IntervalSet};
use crate::rational::{self, Rational};
use num_traits::{One, Signed, Zero};

/// Piecewise-constant utility density over `[0, T]`.
///
/// Segment `j` spans `[breakpoints[j], breakpoints[j + 1])` and is worth
/// `densities[j]` per hour. The value of any set of times is the integral of
/// the density, so it is additive and non-atomic.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PiecewiseConstantUtility {
    breakpoints: Vec<Rational>,
    densities: Vec<Rational>,
}

impl PiecewiseConstantUtility {
    pub fn new(breakpoints: Vec<Rational>, densities: Vec<Rational>) -> Result<Self> {
        if breakpoints.len() < 2 {
            return Err(Error::InvalidUtility(
                "need at least two breakpoints".to_string(),
            ));
        }
        if !breakpoints[0].is_zero() {
            return Err(Error::InvalidUtility(
                "first breakpoint must be 0".to_string(),
            ));
        }
        if let Some(w) = breakpoints.windows(2).position(|w| w[0] >= w[1]) {
            return Err(Error::InvalidUtility(format!(
                "breakpoints must be strictly increasing (index {} -> {})",
                w,
                w + 1
            )));
        }
        if densities.len() + 1 != breakpoints.len() {
            return Err(Error::InvalidUtility(format!(
                "{} breakpoints need {} densities, got {}",
                breakpoints.len(),
                breakpoints.len() - 1,
                densities.len()
            )));
        }
        if let Some(j) = densities.iter().position(|d| d.is_negative()) {
            return Err(Error::InvalidUtility(format!(
                "density of segment {j} is negative"
            )));
        }
        Ok(Self {
            breakpoints,
            densities,
        })
    }

    /// Constant density `total / horizon` on a single segment.
    pub fn uniform(horizon: Rational, total: Rational) -> Result<Self> {
        if !horizon.is_positive() {
            return Err(Error::InvalidUtility("horizon must be positive".into()));
        }
        let density = total / &horizon;
        Self::new(vec![Rational::zero(), horizon], vec![density])
    }

    /// Equal-width segments over `[0, horizon]` with the given densities.
    pub fn from_equal_segments(horizon: Rational, densities: Vec<Rational>) -> Result<Self> {
        let m = densities.len() as i64;
        if m == 0 {
            return Err(Error::InvalidUtility("no segments".into()));
        }
        let breakpoints = (0..=m)
            .map(|j| &horizon * rational::ratio(j, m))
            .collect();
        Self::new(breakpoints, densities)
    }

    pub fn breakpoints(&self) -> &[Rational] {
        &self.breakpoints
    }

    pub fn densities(&self) -> &[Rational] {
        &self.densities
    }

    pub fn horizon(&self) -> &Rational {
        self.breakpoints.last().expect("validated non-empty")
    }

    pub fn segment_count(&self) -> usize {
        self.densities.len()
    }

    pub fn segment(&self, j: usize) -> Interval {
        Interval::new(self.breakpoints[j].clone(), self.breakpoints[j + 1].clone())
            .expect("strictly increasing")
    }

    /// Density on the segment containing `t`; the last segment owns `T`.
    pub fn density_at(&self, t: &Rational) -> &Rational {
        let idx = self.breakpoints.partition_point(|b| b <= t);
        let seg = idx.saturating_sub(1).min(self.densities.len() - 1);
        &self.densities[seg]
    }

    pub fn total(&self) -> Rational {
        self.densities
            .iter()
            .enumerate()
            .fold(Rational::zero(), |acc, (j, d)| {
                acc + d * (&self.breakpoints[j + 1] - &self.breakpoints[j])
            })
    }

    /// Value of `[0, x]`, for `x` clamped into `[0, T]`.
    pub fn cumulative(&self, x: &Rational) -> Rational {
        let mut acc = Rational::zero();
        for (j, d) in self.densities.iter().enumerate() {
            let (a, b) = (&self.breakpoints[j], &self.breakpoints[j + 1]);
            if x <= a {
                break;
            }
            let hi = if x < b { x } else { b };
            acc += d * (hi - a);
        }
        acc
    }

    /// Value of `[start, end]`. Errors when the interval leaves `[0, T]`.
    pub fn value_between(&self, start: &Rational, end: &Rational) -> Result<Rational> {
        if start.is_negative() || end > self.horizon() || start > end {
            return Err(Error::OutsideHorizon {
                start: rational::format_rational(start),
                end: rational::format_rational(end),
                horizon: rational::format_rational(self.horizon()),
            });
        }
        Ok(self.cumulative(end) - self.cumulative(start))
    }

    /// Value of a union of disjoint intervals.
    pub fn value(&self, set: &IntervalSet) -> Result<Rational> {
        set.iter().try_fold(Rational::zero(), |acc, iv| {
            Ok(acc + self.value_between(iv.start(), iv.end())?)
        })
    }

    /// Smallest `x` in `[start, T]` with `value([start, x]) == target`.
    ///
    /// Walks the segments accumulating value and inverts linearly inside the
    /// segment where the target is crossed. Returns `None` if the target
    /// exceeds the value of `[start, T]` or is negative.
    pub fn point_with_value_from(&self, start: &Rational, target: &Rational) -> Option<Rational> {
        if target.is_negative() {
            return None;
        }
        if target.is_zero() {
            return Some(start.clone());
        }
        let mut remaining = target.clone();
        for (j, d) in self.densities.iter().enumerate() {
            let (a, b) = (&self.breakpoints[j], &self.breakpoints[j + 1]);
            if b <= start {
                continue;
            }
            let lo = if a < start { start } else { a };
            if d.is_zero() {
                continue;
            }
            let available = d * (b - lo);
            if available >= remaining {
                return Some(lo + &remaining / d);
            }
            remaining -= available;
        }
        None
    }

    pub fn scaled(&self, factor: &Rational) -> Self {
        Self {
            breakpoints: self.breakpoints.clone(),
            densities: self.densities.iter().map(|d| d * factor).collect(),
        }
    }

    /// Rescales so the whole horizon is worth exactly 1. `None` for a zero total.
    pub fn normalized(&self) -> Option<Self> {
        let total = self.total();
        if total.is_zero() {
            return None;
        }
        Some(self.scaled(&(Rational::one() / total)))
    }

    /// Same function expressed on a finer breakpoint grid. `grid` must contain
    /// every breakpoint of `self`.
    pub fn refined(&self, grid: &[Rational]) -> Self {
        let densities = grid
            .windows(2)
            .map(|w| self.density_at(&w[0]).clone())
            .collect();
        Self {
            breakpoints: grid.to_vec(),
            densities,
        }
    }

    /// Same densities repeated `copies` times back to back over `[0, copies*T]`.
    pub fn repeated(&self, copies: usize) -> Self {
        let horizon = self.horizon().clone();
        let mut breakpoints = vec![Rational::zero()];
        let mut densities = Vec::with_capacity(self.densities.len() * copies);
        for c in 0..copies {
            let offset = &horizon * rational::int(c as i64);
            for j in 0..self.densities.len() {
                breakpoints.push(&self.breakpoints[j + 1] + &offset);
                densities.push(self.densities[j].clone());
            }
        }
        Self {
            breakpoints,
            densities,
        }
    }

    pub fn is_uniform(&self) -> bool {
        self.densities.windows(2).all(|w| w[0] == w[1])
    }
}

/// Value of `set` under `utility`.
pub fn utility_of(utility: &PiecewiseConstantUtility, set: &IntervalSet) -> Result<Rational> {
    utility.value(set)
}

/// Sorted union of all breakpoints: the coarsest grid on which every
/// utility is constant per cell.
pub fn common_breakpoints<'a, I>(utilities: I) -> Vec<Rational>
where
    I: IntoIterator<Item = &'a PiecewiseConstantUtility>,
{
    let mut all: Vec<Rational> = utilities
        .into_iter()
        .flat_map(|u| u.breakpoints().iter().cloned())
        .collect();
    all.sort();
    all.dedup();
    all
}
