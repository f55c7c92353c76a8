//! Dense two-phase tableau simplex over exact rationals with Bland's rule.
//!
//! Every row owns one column that starts as a unit vector (its slack or its
//! artificial). Those columns are kept for the whole run, so the current
//! basis inverse, and hence the duals, can be read off the tableau at any time.

use num_traits::{One, Signed, Zero};

use super::{FarkasCertificate, LinearProgram, LpSolution, Optimum, Relation, Sense, UnboundedRay};
use crate::rational::Rational;

enum ColumnKind {
    Structural,
    Slack,
    Artificial,
}

struct Tableau {
    rows: Vec<Vec<Rational>>,
    rhs: Vec<Rational>,
    /// Reduced costs of the current (internal, minimising) objective.
    reduced: Vec<Rational>,
    basis: Vec<usize>,
    kinds: Vec<ColumnKind>,
    /// Column that was the unit vector `e_i` for row `i` at the start.
    unit_column: Vec<usize>,
}

enum PivotOutcome {
    Optimal,
    Unbounded(usize),
}

impl Tableau {
    fn build(lp: &LinearProgram, row_sign: &[bool]) -> Self {
        let m = lp.num_constraints();
        let nv = lp.num_vars;
        let relations: Vec<Relation> = lp
            .constraints
            .iter()
            .zip(row_sign)
            .map(|(c, &neg)| {
                if neg {
                    c.relation.flipped()
                } else {
                    c.relation
                }
            })
            .collect();
        let n_slack = relations.iter().filter(|r| **r != Relation::Eq).count();
        let n_art = relations.iter().filter(|r| **r != Relation::Le).count();
        let ncols = nv + n_slack + n_art;

        let mut kinds: Vec<ColumnKind> = (0..nv).map(|_| ColumnKind::Structural).collect();
        kinds.extend((0..n_slack).map(|_| ColumnKind::Slack));
        kinds.extend((0..n_art).map(|_| ColumnKind::Artificial));

        let mut rows = Vec::with_capacity(m);
        let mut rhs = Vec::with_capacity(m);
        let mut unit_column = Vec::with_capacity(m);
        let (mut next_slack, mut next_art) = (nv, nv + n_slack);
        for ((c, &neg), rel) in lp.constraints.iter().zip(row_sign).zip(&relations) {
            let mut row = vec![Rational::zero(); ncols];
            for (dst, a) in row.iter_mut().zip(&c.coefficients) {
                *dst = if neg { -a } else { a.clone() };
            }
            match rel {
                Relation::Le => {
                    row[next_slack] = Rational::one();
                    unit_column.push(next_slack);
                    next_slack += 1;
                }
                Relation::Ge => {
                    row[next_slack] = -Rational::one();
                    next_slack += 1;
                    row[next_art] = Rational::one();
                    unit_column.push(next_art);
                    next_art += 1;
                }
                Relation::Eq => {
                    row[next_art] = Rational::one();
                    unit_column.push(next_art);
                    next_art += 1;
                }
            }
            rows.push(row);
            rhs.push(if neg { -&c.rhs } else { c.rhs.clone() });
        }
        Tableau {
            rows,
            rhs,
            reduced: vec![Rational::zero(); ncols],
            basis: unit_column.clone(),
            kinds,
            unit_column,
        }
    }

    fn ncols(&self) -> usize {
        self.kinds.len()
    }

    fn is_artificial(&self, col: usize) -> bool {
        matches!(self.kinds[col], ColumnKind::Artificial)
    }

    fn has_artificials(&self) -> bool {
        self.kinds
            .iter()
            .any(|k| matches!(k, ColumnKind::Artificial))
    }

    /// Resets the objective row to `cost - c_Bᵀ B⁻¹ A`.
    fn price(&mut self, cost: &[Rational]) {
        let mut reduced = cost.to_vec();
        for (row, &b) in self.rows.iter().zip(&self.basis) {
            let cb = &cost[b];
            if cb.is_zero() {
                continue;
            }
            for (d, a) in reduced.iter_mut().zip(row) {
                if !a.is_zero() {
                    *d -= cb * a;
                }
            }
        }
        self.reduced = reduced;
    }

    fn pivot(&mut self, p: usize, q: usize) {
        let inv = self.rows[p][q].recip();
        if !inv.is_one() {
            for v in self.rows[p].iter_mut() {
                if !v.is_zero() {
                    *v *= &inv;
                }
            }
            self.rhs[p] *= &inv;
        }
        let support: Vec<usize> = (0..self.ncols())
            .filter(|&j| !self.rows[p][j].is_zero())
            .collect();
        let (before, rest) = self.rows.split_at_mut(p);
        let (pivot_row, after) = rest.split_first_mut().expect("pivot row");
        let pivot_rhs = self.rhs[p].clone();
        for (i, row) in before.iter_mut().chain(after.iter_mut()).enumerate() {
            let f = row[q].clone();
            if f.is_zero() {
                continue;
            }
            for &j in &support {
                row[j] -= &f * &pivot_row[j];
            }
            let i = if i < p { i } else { i + 1 };
            self.rhs[i] -= &f * &pivot_rhs;
        }
        let f = self.reduced[q].clone();
        if !f.is_zero() {
            for &j in &support {
                self.reduced[j] -= &f * &pivot_row[j];
            }
        }
        self.basis[p] = q;
    }

    /// Runs Bland's rule on the current objective row until optimal or unbounded.
    fn optimise(&mut self, allow_artificial: bool) -> PivotOutcome {
        loop {
            let entering = (0..self.ncols()).find(|&j| {
                self.reduced[j].is_negative() && (allow_artificial || !self.is_artificial(j))
            });
            let Some(q) = entering else {
                return PivotOutcome::Optimal;
            };
            let mut leave: Option<(usize, Rational)> = None;
            for i in 0..self.rows.len() {
                let a = &self.rows[i][q];
                if !a.is_positive() {
                    continue;
                }
                let ratio = &self.rhs[i] / a;
                let better = match &leave {
                    None => true,
                    Some((r, best)) => {
                        ratio < *best || (ratio == *best && self.basis[i] < self.basis[*r])
                    }
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            match leave {
                Some((p, _)) => self.pivot(p, q),
                None => return PivotOutcome::Unbounded(q),
            }
        }
    }

    /// Shadow prices of the standardised rows for objective `cost`.
    fn row_prices(&self, cost: &[Rational]) -> Vec<Rational> {
        self.unit_column
            .iter()
            .map(|&j| &cost[j] - &self.reduced[j])
            .collect()
    }

    fn structural_point(&self, nv: usize) -> Vec<Rational> {
        let mut x = vec![Rational::zero(); nv];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < nv {
                x[b] = self.rhs[i].clone();
            }
        }
        x
    }

    /// After phase 1, swaps zero-level artificials out of the basis where possible.
    fn expel_artificials(&mut self) {
        for i in 0..self.rows.len() {
            if !self.is_artificial(self.basis[i]) {
                continue;
            }
            let replacement =
                (0..self.ncols()).find(|&j| !self.is_artificial(j) && !self.rows[i][j].is_zero());
            if let Some(j) = replacement {
                self.pivot(i, j);
            }
        }
    }
}

pub(super) fn solve(lp: &LinearProgram) -> LpSolution {
    let nv = lp.num_vars;
    let row_sign: Vec<bool> = lp.constraints.iter().map(|c| c.rhs.is_negative()).collect();
    let sign = |i: usize| {
        if row_sign[i] {
            -Rational::one()
        } else {
            Rational::one()
        }
    };
    let mut t = Tableau::build(lp, &row_sign);
    let ncols = t.ncols();

    if t.has_artificials() {
        let phase1: Vec<Rational> = (0..ncols)
            .map(|j| {
                if t.is_artificial(j) {
                    Rational::one()
                } else {
                    Rational::zero()
                }
            })
            .collect();
        t.price(&phase1);
        // Phase 1 is bounded below by zero, so it always ends optimal.
        let _ = t.optimise(true);
        let infeasibility: Rational = t
            .basis
            .iter()
            .zip(&t.rhs)
            .filter(|(b, _)| t.is_artificial(**b))
            .map(|(_, v)| v.clone())
            .sum();
        if infeasibility.is_positive() {
            let prices = t.row_prices(&phase1);
            let multipliers = prices
                .into_iter()
                .enumerate()
                .map(|(i, p)| -(p * sign(i)))
                .collect();
            return LpSolution::Infeasible(FarkasCertificate { multipliers });
        }
        t.expel_artificials();
    }

    let flip = lp.sense == Sense::Maximize;
    let mut cost = vec![Rational::zero(); ncols];
    for (dst, c) in cost.iter_mut().zip(&lp.objective) {
        *dst = if flip { -c } else { c.clone() };
    }
    t.price(&cost);
    match t.optimise(false) {
        PivotOutcome::Optimal => {
            let point = t.structural_point(nv);
            let value = lp.objective_value(&point);
            let duals = t
                .row_prices(&cost)
                .into_iter()
                .enumerate()
                .map(|(i, p)| {
                    let y = p * sign(i);
                    if flip {
                        -y
                    } else {
                        y
                    }
                })
                .collect();
            LpSolution::Optimal(Optimum {
                value,
                point,
                duals,
            })
        }
        PivotOutcome::Unbounded(q) => {
            let point = t.structural_point(nv);
            let mut direction = vec![Rational::zero(); nv];
            if q < nv {
                direction[q] = Rational::one();
            }
            for (i, &b) in t.basis.iter().enumerate() {
                if b < nv {
                    direction[b] = -&t.rows[i][q];
                }
            }
            LpSolution::Unbounded(UnboundedRay { point, direction })
        }
    }
}
