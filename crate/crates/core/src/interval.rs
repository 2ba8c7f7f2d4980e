//! Half-open time intervals `[start, end)` and finite unions of them.

use crate::rational::{self, Rational};
use num_traits::Zero;
use std::fmt;

/// A non-empty half-open interval `[start, end)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Interval {
    start: Rational,
    end: Rational,
}

impl Interval {
    /// Returns `None` when `start >= end`; degenerate intervals are never stored.
    pub fn new(start: Rational, end: Rational) -> Option<Self> {
        (start < end).then_some(Self { start, end })
    }

    #[inline]
    pub fn start(&self) -> &Rational {
        &self.start
    }

    #[inline]
    pub fn end(&self) -> &Rational {
        &self.end
    }

    pub fn length(&self) -> Rational {
        &self.end - &self.start
    }

    pub fn contains(&self, t: &Rational) -> bool {
        &self.start <= t && t < &self.end
    }

    pub fn intersection(&self, other: &Interval) -> Option<Interval> {
        Interval::new(
            rational::max(&self.start, &other.start),
            rational::min(&self.end, &other.end),
        )
    }

    pub fn shifted(&self, offset: &Rational) -> Interval {
        Interval {
            start: &self.start + offset,
            end: &self.end + offset,
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}, {})",
            rational::format_rational(&self.start),
            rational::format_rational(&self.end)
        )
    }
}

/// A finite union of intervals kept sorted, pairwise disjoint and merged:
/// `[a,b)` and `[b,c)` are always stored as `[a,c)`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct IntervalSet {
    intervals: Vec<Interval>,
}

impl IntervalSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_interval(interval: Interval) -> Self {
        Self {
            intervals: vec![interval],
        }
    }

    /// Builds the union of arbitrary (possibly overlapping, unsorted) intervals.
    pub fn from_intervals<I: IntoIterator<Item = Interval>>(intervals: I) -> Self {
        let mut all: Vec<Interval> = intervals.into_iter().collect();
        all.sort();
        let mut merged: Vec<Interval> = Vec::with_capacity(all.len());
        for iv in all {
            match merged.last_mut() {
                Some(last) if iv.start <= last.end => {
                    if iv.end > last.end {
                        last.end = iv.end;
                    }
                }
                _ => merged.push(iv),
            }
        }
        Self { intervals: merged }
    }

    /// Convenience constructor from `(start, end)` pairs; empty pairs are dropped.
    pub fn from_pairs<I: IntoIterator<Item = (Rational, Rational)>>(pairs: I) -> Self {
        Self::from_intervals(pairs.into_iter().filter_map(|(a, b)| Interval::new(a, b)))
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Interval> {
        self.intervals.iter()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// Number of maximal pieces.
    pub fn piece_count(&self) -> usize {
        self.intervals.len()
    }

    pub fn measure(&self) -> Rational {
        self.intervals
            .iter()
            .fold(Rational::zero(), |acc, iv| acc + iv.length())
    }

    pub fn contains(&self, t: &Rational) -> bool {
        // First interval whose end is > t.
        let idx = self.intervals.partition_point(|iv| &iv.end <= t);
        self.intervals.get(idx).is_some_and(|iv| iv.contains(t))
    }

    pub fn union(&self, other: &IntervalSet) -> IntervalSet {
        IntervalSet::from_intervals(self.intervals.iter().chain(other.intervals.iter()).cloned())
    }

    pub fn intersect_interval(&self, window: &Interval) -> IntervalSet {
        IntervalSet {
            intervals: self
                .intervals
                .iter()
                .filter_map(|iv| iv.intersection(window))
                .collect(),
        }
    }

    /// All endpoints in ascending order.
    pub fn endpoints(&self) -> impl Iterator<Item = &Rational> {
        self.intervals.iter().flat_map(|iv| [&iv.start, &iv.end])
    }
}

impl fmt::Display for IntervalSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.intervals.is_empty() {
            return write!(f, "∅");
        }
        for (i, iv) in self.intervals.iter().enumerate() {
            if i > 0 {
                write!(f, " ∪ ")?;
            }
            write!(f, "{iv}")?;
        }
        Ok(())
    }
}

impl FromIterator<Interval> for IntervalSet {
    fn from_iter<T: IntoIterator<Item = Interval>>(iter: T) -> Self {
        IntervalSet::from_intervals(iter)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    fn iv(a: i64, b: i64) -> Interval {
        Interval::new(int(a), int(b)).unwrap()
    }

    #[test]
    fn degenerate_interval_is_rejected() {
        assert!(Interval::new(int(1), int(1)).is_none());
        assert!(Interval::new(int(2), int(1)).is_none());
    }

    #[test]
    fn adjacent_pieces_merge() {
        let s = IntervalSet::from_intervals([iv(1, 2), iv(0, 1), iv(3, 4)]);
        assert_eq!(s.intervals(), &[iv(0, 2), iv(3, 4)]);
        assert_eq!(s.piece_count(), 2);
        assert_eq!(s.measure(), int(3));
    }

    #[test]
    fn overlapping_pieces_merge() {
        let s = IntervalSet::from_intervals([iv(0, 3), iv(1, 2), iv(2, 5)]);
        assert_eq!(s.intervals(), &[iv(0, 5)]);
    }

    #[test]
    fn half_open_membership() {
        let s = IntervalSet::from_intervals([iv(0, 1), iv(2, 3)]);
        assert!(s.contains(&int(0)));
        assert!(!s.contains(&int(1)));
        assert!(s.contains(&ratio(5, 2)));
        assert!(!s.contains(&int(3)));
    }

    #[test]
    fn intersect_with_window() {
        let s = IntervalSet::from_intervals([iv(0, 2), iv(3, 6)]);
        let w = s.intersect_interval(&iv(1, 4));
        assert_eq!(w.intervals(), &[iv(1, 2), iv(3, 4)]);
    }
}
