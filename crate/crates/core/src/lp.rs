//! Small dense two-phase simplex over exact rationals.
//!
//! Programs here are tiny (tens of rows, at most a few thousand columns), so
//! a dense tableau is fine and exact arithmetic makes results reproducible
//! bit for bit. Pivoting uses the largest reduced cost and falls back to
//! Bland's rule permanently once a run of degenerate pivots is seen, which
//! rules out cycling.

use crate::rational::Rational;
use num_traits::{One, Signed, Zero};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug)]
pub struct Constraint {
    pub coeffs: Vec<(usize, Rational)>,
    pub relation: Relation,
    pub rhs: Rational,
}

impl Constraint {
    pub fn new(coeffs: Vec<(usize, Rational)>, relation: Relation, rhs: Rational) -> Self {
        Self {
            coeffs,
            relation,
            rhs,
        }
    }
}

/// `maximize objective · x` subject to the constraints and `x >= 0`.
#[derive(Clone, Debug)]
pub struct LinearProgram {
    num_vars: usize,
    objective: Vec<Rational>,
    constraints: Vec<Constraint>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LpSolution {
    pub values: Vec<Rational>,
    pub objective: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LpOutcome {
    Optimal(LpSolution),
    /// `violated` lists constraint indices still unsatisfied at the end of
    /// phase one (their artificial variable stayed positive).
    Infeasible { violated: Vec<usize> },
    Unbounded,
}

impl LpOutcome {
    pub fn optimal(self) -> Option<LpSolution> {
        match self {
            LpOutcome::Optimal(s) => Some(s),
            _ => None,
        }
    }
}

const DEGENERATE_STREAK_LIMIT: usize = 32;

impl LinearProgram {
    pub fn new(num_vars: usize) -> Self {
        Self {
            num_vars,
            objective: vec![Rational::zero(); num_vars],
            constraints: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn set_objective(&mut self, coeffs: Vec<(usize, Rational)>) {
        self.objective = vec![Rational::zero(); self.num_vars];
        for (j, c) in coeffs {
            self.objective[j] += c;
        }
    }

    pub fn add_constraint(&mut self, coeffs: Vec<(usize, Rational)>, relation: Relation, rhs: Rational) {
        debug_assert!(coeffs.iter().all(|(j, _)| *j < self.num_vars));
        self.constraints.push(Constraint::new(coeffs, relation, rhs));
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn solve(&self) -> LpOutcome {
        Tableau::build(self).run(self)
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum ColumnKind {
    Original,
    Slack,
    Artificial,
}

struct Tableau {
    rows: Vec<Vec<Rational>>,
    /// Reduced costs followed by `-z` in the last slot.
    objective: Vec<Rational>,
    basis: Vec<usize>,
    kinds: Vec<ColumnKind>,
    /// Constraint index each row came from.
    origin: Vec<usize>,
    bland: bool,
    degenerate_streak: usize,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Self {
        let m = lp.constraints.len();
        let mut kinds = vec![ColumnKind::Original; lp.num_vars];
        // Normalize to non-negative right-hand sides.
        let normalized: Vec<(Vec<(usize, Rational)>, Relation, Rational)> = lp
            .constraints
            .iter()
            .map(|c| {
                if c.rhs.is_negative() {
                    let flipped = match c.relation {
                        Relation::Le => Relation::Ge,
                        Relation::Ge => Relation::Le,
                        Relation::Eq => Relation::Eq,
                    };
                    (
                        c.coeffs.iter().map(|(j, a)| (*j, -a)).collect(),
                        flipped,
                        -&c.rhs,
                    )
                } else {
                    (c.coeffs.clone(), c.relation, c.rhs.clone())
                }
            })
            .collect();

        let mut extra: Vec<(usize, Option<usize>, Option<usize>)> = Vec::with_capacity(m);
        let mut col = lp.num_vars;
        for (_, rel, _) in &normalized {
            match rel {
                Relation::Le => {
                    kinds.push(ColumnKind::Slack);
                    extra.push((col, None, None));
                    col += 1;
                }
                Relation::Ge => {
                    kinds.push(ColumnKind::Slack);
                    kinds.push(ColumnKind::Artificial);
                    extra.push((col, Some(col + 1), None));
                    col += 2;
                }
                Relation::Eq => {
                    kinds.push(ColumnKind::Artificial);
                    extra.push((col, None, Some(col)));
                    col += 1;
                }
            }
        }
        let width = col + 1;
        let mut rows = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        for ((coeffs, rel, rhs), (first, ge_art, eq_art)) in normalized.into_iter().zip(&extra) {
            let mut row = vec![Rational::zero(); width];
            for (j, a) in coeffs {
                row[j] += a;
            }
            match rel {
                Relation::Le => {
                    row[*first] = Rational::one();
                    basis.push(*first);
                }
                Relation::Ge => {
                    row[*first] = -Rational::one();
                    let art = ge_art.expect("ge row has artificial");
                    row[art] = Rational::one();
                    basis.push(art);
                }
                Relation::Eq => {
                    let art = eq_art.expect("eq row has artificial");
                    row[art] = Rational::one();
                    basis.push(art);
                }
            }
            row[width - 1] = rhs;
            rows.push(row);
        }
        Tableau {
            rows,
            objective: vec![Rational::zero(); width],
            basis,
            kinds,
            origin: (0..m).collect(),
            bland: false,
            degenerate_streak: 0,
        }
    }

    fn width(&self) -> usize {
        self.kinds.len() + 1
    }

    /// Loads reduced costs for `cost` (indexed by column) given the current basis.
    fn load_objective(&mut self, cost: &[Rational]) {
        let width = self.width();
        let mut obj: Vec<Rational> = (0..width)
            .map(|j| cost.get(j).cloned().unwrap_or_else(Rational::zero))
            .collect();
        obj[width - 1] = Rational::zero();
        for (r, &b) in self.basis.iter().enumerate() {
            let cb = cost.get(b).cloned().unwrap_or_else(Rational::zero);
            if cb.is_zero() {
                continue;
            }
            for (j, a) in self.rows[r].iter().enumerate() {
                if !a.is_zero() {
                    obj[j] -= &cb * a;
                }
            }
        }
        self.objective = obj;
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let width = self.width();
        let p = self.rows[r][c].clone();
        if !p.is_one() {
            let inv = Rational::one() / p;
            for a in self.rows[r].iter_mut() {
                if !a.is_zero() {
                    *a *= &inv;
                }
            }
        }
        let nz: Vec<usize> = (0..width).filter(|&j| !self.rows[r][j].is_zero()).collect();
        let pivot_row = self.rows[r].clone();
        for (k, row) in self.rows.iter_mut().enumerate() {
            if k == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for &j in &nz {
                row[j] -= &f * &pivot_row[j];
            }
        }
        if !self.objective[c].is_zero() {
            let f = self.objective[c].clone();
            for &j in &nz {
                self.objective[j] -= &f * &pivot_row[j];
            }
        }
        self.basis[r] = c;
    }

    /// Runs simplex iterations on the loaded objective. Returns `false` if unbounded.
    fn iterate(&mut self, allow_artificial: bool) -> bool {
        let rhs = self.width() - 1;
        loop {
            let candidates = (0..rhs).filter(|&j| {
                (allow_artificial || self.kinds[j] != ColumnKind::Artificial)
                    && self.objective[j].is_positive()
            });
            let entering = if self.bland {
                candidates.min()
            } else {
                candidates.fold(None, |best: Option<usize>, j| match best {
                    Some(b) if self.objective[b] >= self.objective[j] => Some(b),
                    _ => Some(j),
                })
            };
            let Some(c) = entering else {
                return true;
            };
            let mut leave: Option<(usize, Rational)> = None;
            for (r, row) in self.rows.iter().enumerate() {
                if !row[c].is_positive() {
                    continue;
                }
                let ratio = &row[rhs] / &row[c];
                let better = match &leave {
                    None => true,
                    Some((lr, best)) => {
                        ratio < *best || (ratio == *best && self.basis[r] < self.basis[*lr])
                    }
                };
                if better {
                    leave = Some((r, ratio));
                }
            }
            let Some((r, step)) = leave else {
                return false;
            };
            if step.is_zero() {
                self.degenerate_streak += 1;
                if self.degenerate_streak > DEGENERATE_STREAK_LIMIT {
                    self.bland = true;
                }
            } else {
                self.degenerate_streak = 0;
            }
            self.pivot(r, c);
        }
    }

    fn run(mut self, lp: &LinearProgram) -> LpOutcome {
        let rhs = self.width() - 1;
        let has_artificial = self
            .basis
            .iter()
            .any(|&b| self.kinds[b] == ColumnKind::Artificial);
        if has_artificial {
            let cost: Vec<Rational> = self
                .kinds
                .iter()
                .map(|k| {
                    if *k == ColumnKind::Artificial {
                        -Rational::one()
                    } else {
                        Rational::zero()
                    }
                })
                .collect();
            self.load_objective(&cost);
            self.iterate(true);
            // -z sits in the last slot; phase one maximizes -(sum of artificials).
            if self.objective[rhs].is_positive() {
                let violated = self
                    .basis
                    .iter()
                    .enumerate()
                    .filter(|(r, &b)| {
                        self.kinds[b] == ColumnKind::Artificial
                            && self.rows[*r][rhs].is_positive()
                    })
                    .map(|(r, _)| self.origin[r])
                    .collect();
                return LpOutcome::Infeasible { violated };
            }
            self.drive_out_artificials();
        }

        let cost: Vec<Rational> = lp.objective.clone();
        self.load_objective(&cost);
        self.bland = false;
        self.degenerate_streak = 0;
        if !self.iterate(false) {
            return LpOutcome::Unbounded;
        }
        let mut values = vec![Rational::zero(); lp.num_vars];
        for (r, &b) in self.basis.iter().enumerate() {
            if b < lp.num_vars {
                values[b] = self.rows[r][rhs].clone();
            }
        }
        let objective = values
            .iter()
            .zip(&lp.objective)
            .fold(Rational::zero(), |acc, (x, c)| acc + x * c);
        LpOutcome::Optimal(LpSolution { values, objective })
    }

    fn drive_out_artificials(&mut self) {
        let rhs = self.width() - 1;
        let mut r = 0;
        while r < self.rows.len() {
            if self.kinds[self.basis[r]] != ColumnKind::Artificial {
                r += 1;
                continue;
            }
            let replacement = (0..rhs)
                .find(|&j| self.kinds[j] != ColumnKind::Artificial && !self.rows[r][j].is_zero());
            match replacement {
                Some(c) => {
                    self.pivot(r, c);
                    r += 1;
                }
                None => {
                    // Redundant equality.
                    self.rows.remove(r);
                    self.basis.remove(r);
                    self.origin.remove(r);
                }
            }
        }
    }
}
