//! Reordering connection blocks inside constant-utility segments.
//!
//! Inside a segment where every density is constant, permuting the
//! sub-intervals leaves every agent's utility unchanged. Grouping equal
//! connected sets and choosing which set opens and closes each segment is a
//! shortest-path problem over segments, solved exactly by dynamic
//! programming; the result never has more switches than the input.

use super::SegmentAssignment;
use crate::interval::Interval;
use crate::model::{common_breakpoints, Allocation, Instance};
use crate::rational::Rational;
use num_traits::{Signed, Zero};

/// A segment laid out as consecutive blocks `(connected agents, duration)`.
#[derive(Clone, Debug)]
pub(crate) struct SegmentLayout {
    pub start: Rational,
    pub end: Rational,
    pub blocks: Vec<(Vec<usize>, Rational)>,
}

pub(crate) fn layouts_from_assignment(assignment: &SegmentAssignment) -> Vec<SegmentLayout> {
    (0..assignment.segment_count())
        .map(|s| {
            let iv = assignment.segment(s);
            let len = iv.length();
            let blocks = assignment
                .sets()
                .iter()
                .zip(&assignment.shares()[s])
                .filter(|(_, x)| x.is_positive())
                .map(|(set, x)| (set.members().to_vec(), &len * x))
                .collect();
            SegmentLayout {
                start: iv.start().clone(),
                end: iv.end().clone(),
                blocks,
            }
        })
        .collect()
}

pub(crate) fn materialize(layouts: &[SegmentLayout], n: usize) -> Allocation {
    let mut blocks = Vec::new();
    for layout in layouts {
        let mut t = layout.start.clone();
        let count = layout.blocks.len();
        for (k, (members, duration)) in layout.blocks.iter().enumerate() {
            let next = if k + 1 == count {
                layout.end.clone()
            } else {
                &t + duration
            };
            if let Some(iv) = Interval::new(t.clone(), next.clone()) {
                blocks.push((iv, members.clone()));
            }
            t = next;
        }
    }
    Allocation::from_blocks(n, blocks)
}

/// Merges blocks with the same connected set (first appearance order).
fn group(layout: &SegmentLayout) -> SegmentLayout {
    let mut grouped: Vec<(Vec<usize>, Rational)> = Vec::new();
    for (members, d) in &layout.blocks {
        if d.is_zero() {
            continue;
        }
        match grouped.iter_mut().find(|(m, _)| m == members) {
            Some((_, total)) => *total += d,
            None => grouped.push((members.clone(), d.clone())),
        }
    }
    SegmentLayout {
        start: layout.start.clone(),
        end: layout.end.clone(),
        blocks: grouped,
    }
}

/// Chooses the opening and closing block of every segment to minimize the
/// number of set changes across segment boundaries. Ties keep the existing
/// order as far as possible.
fn chain(layouts: Vec<SegmentLayout>) -> Vec<SegmentLayout> {
    let layouts: Vec<SegmentLayout> = layouts
        .iter()
        .map(group)
        .filter(|l| !l.blocks.is_empty())
        .collect();
    if layouts.is_empty() {
        return layouts;
    }
    // Candidate (first, last) block indices per segment.
    let options: Vec<Vec<(usize, usize)>> = layouts
        .iter()
        .map(|l| {
            let t = l.blocks.len();
            if t == 1 {
                vec![(0, 0)]
            } else {
                let mut v = Vec::with_capacity(t * (t - 1));
                for f in 0..t {
                    for e in 0..t {
                        if f != e {
                            v.push((f, e));
                        }
                    }
                }
                v
            }
        })
        .collect();
    let disturbance = |l: &SegmentLayout, (f, e): (usize, usize)| -> usize {
        usize::from(f != 0) + usize::from(e != l.blocks.len() - 1)
    };

    // cost[s][o] = (boundary switches, disturbance) up to segment s using option o.
    let mut cost: Vec<Vec<(usize, usize)>> = Vec::with_capacity(layouts.len());
    let mut back: Vec<Vec<usize>> = Vec::with_capacity(layouts.len());
    cost.push(
        options[0]
            .iter()
            .map(|&o| (0, disturbance(&layouts[0], o)))
            .collect(),
    );
    back.push(vec![0; options[0].len()]);
    for s in 1..layouts.len() {
        let mut row = Vec::with_capacity(options[s].len());
        let mut from = Vec::with_capacity(options[s].len());
        for &(f, e) in &options[s] {
            let first = &layouts[s].blocks[f].0;
            let mut best: Option<((usize, usize), usize)> = None;
            for (p, &(_, pe)) in options[s - 1].iter().enumerate() {
                let prev_last = &layouts[s - 1].blocks[pe].0;
                let (sw, dist) = cost[s - 1][p];
                let candidate = (
                    sw + usize::from(prev_last != first),
                    dist + disturbance(&layouts[s], (f, e)),
                );
                if best.is_none_or(|(b, _)| candidate < b) {
                    best = Some((candidate, p));
                }
            }
            let (c, p) = best.expect("previous segment has options");
            row.push(c);
            from.push(p);
        }
        cost.push(row);
        back.push(from);
    }

    let last = layouts.len() - 1;
    let mut pick = (0..options[last].len())
        .min_by_key(|&o| cost[last][o])
        .expect("non-empty options");
    let mut chosen = vec![0; layouts.len()];
    for s in (0..layouts.len()).rev() {
        chosen[s] = pick;
        pick = back[s][pick];
    }

    layouts
        .into_iter()
        .zip(chosen)
        .enumerate()
        .map(|(s, (layout, o))| {
            let (f, e) = options[s][o];
            let mut blocks = Vec::with_capacity(layout.blocks.len());
            blocks.push(layout.blocks[f].clone());
            for (k, b) in layout.blocks.iter().enumerate() {
                if k != f && k != e {
                    blocks.push(b.clone());
                }
            }
            if e != f {
                blocks.push(layout.blocks[e].clone());
            }
            SegmentLayout { blocks, ..layout }
        })
        .collect()
}

/// Realizes a segment assignment with as few switches as reordering inside
/// segments allows.
pub fn minimize_switches(assignment: &SegmentAssignment, n: usize) -> Allocation {
    materialize(&chain(layouts_from_assignment(assignment)), n)
}

/// Reorders an existing allocation inside the instance's constant-utility
/// segments. Per-agent utilities are preserved exactly and the switch count
/// never increases.
pub fn minimize_switches_allocation(instance: &Instance, allocation: &Allocation) -> Allocation {
    let grid = common_breakpoints(instance.utilities());
    let cells = allocation.cells_with(instance.horizon(), &grid);
    let mut layouts: Vec<SegmentLayout> = Vec::with_capacity(grid.len());
    let mut cells = cells.into_iter().peekable();
    for w in grid.windows(2) {
        let mut blocks = Vec::new();
        while let Some(cell) = cells.next_if(|c| c.interval.end() <= &w[1]) {
            blocks.push((cell.agents, cell.interval.length()));
        }
        layouts.push(SegmentLayout {
            start: w[0].clone(),
            end: w[1].clone(),
            blocks,
        });
    }
    materialize(&chain(layouts), allocation.n())
}
