//! Floating-point two-phase tableau simplex used only to guess an optimal
//! basis. Nothing it returns is trusted; the caller rebuilds the solution in
//! exact arithmetic from the basis and certifies it.

use super::{LinearProgram, Relation, Sense};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::rational::to_f64;

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-9;
/// Consecutive degenerate pivots tolerated before switching to Bland's rule.
const STALL_LIMIT: usize = 50;
const PERTURBATION: f64 = 1e-7;
const CLEANUP_TOL: f64 = 1e-14;
/// Rounds of cleanup pivots each followed by a fresh inversion of the basis.
const REINVERSIONS: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(super) enum BasicVar {
    Structural(usize),
    /// Slack of the given row.
    Slack(usize),
    /// Artificial of the given row, left basic at level zero.
    Artificial(usize),
}

pub(super) enum FloatOutcome {
    Optimal(Vec<BasicVar>),
    Infeasible,
    Unbounded,
    /// Iteration limit or numerical breakdown.
    Failed,
}

struct Tableau {
    m: usize,
    ncols: usize,
    a: Vec<f64>,
    rhs: Vec<f64>,
    reduced: Vec<f64>,
    basis: Vec<usize>,
    owner: Vec<BasicVar>,
    column_scale: Vec<f64>,
    /// Scaled right-hand side before perturbation.
    exact_rhs: Vec<f64>,
    /// Column that started as the unit vector of each row.
    unit_column: Vec<usize>,
    /// Scaled constraint matrix before any pivot.
    original: Vec<f64>,
    /// Whether tiny negative basic values are rounded to zero after a pivot.
    clamp: bool,
}

enum Step {
    Optimal,
    Unbounded,
    Failed,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Self {
        let m = lp.num_constraints();
        let nv = lp.num_vars;
        let mut rows: Vec<Vec<f64>> = lp
            .constraints
            .iter()
            .map(|c| c.coefficients.iter().map(to_f64).collect())
            .collect();
        let mut rhs: Vec<f64> = lp.constraints.iter().map(|c| to_f64(&c.rhs)).collect();
        for (row, b) in rows.iter_mut().zip(rhs.iter_mut()) {
            let scale = power_of_two_scale(row.iter().copied());
            row.iter_mut().for_each(|v| *v *= scale);
            *b *= scale;
        }
        let mut column_scale = vec![1.0; nv];
        for (j, cs) in column_scale.iter_mut().enumerate() {
            *cs = power_of_two_scale(rows.iter().map(|r| r[j]));
            rows.iter_mut().for_each(|r| r[j] *= *cs);
        }

        let mut relations: Vec<Relation> = lp.constraints.iter().map(|c| c.relation).collect();
        for i in 0..m {
            if rhs[i] < 0.0 {
                rhs[i] = -rhs[i];
                rows[i].iter_mut().for_each(|v| *v = -*v);
                relations[i] = relations[i].flipped();
            }
        }
        // Breaks ties between degenerate vertices so Dantzig pricing cannot cycle.
        let exact_rhs = rhs.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        for b in rhs.iter_mut() {
            *b += PERTURBATION * (1.0 + b.abs()) * rng.random_range(0.5..1.0);
        }
        let n_slack = relations.iter().filter(|r| **r != Relation::Eq).count();
        let n_art = relations.iter().filter(|r| **r != Relation::Le).count();
        let ncols = nv + n_slack + n_art;
        let mut owner: Vec<BasicVar> = (0..nv).map(BasicVar::Structural).collect();
        owner.resize(ncols, BasicVar::Structural(usize::MAX));

        let mut a = vec![0.0; m * ncols];
        let mut basis = Vec::with_capacity(m);
        let mut unit_column = Vec::with_capacity(m);
        let (mut next_slack, mut next_art) = (nv, nv + n_slack);
        for (i, rel) in relations.iter().enumerate() {
            let row = &mut a[i * ncols..(i + 1) * ncols];
            row[..nv].copy_from_slice(&rows[i]);
            if *rel != Relation::Eq {
                row[next_slack] = if *rel == Relation::Le { 1.0 } else { -1.0 };
                owner[next_slack] = BasicVar::Slack(i);
                if *rel == Relation::Le {
                    basis.push(next_slack);
                    unit_column.push(next_slack);
                }
                next_slack += 1;
            }
            if *rel != Relation::Le {
                row[next_art] = 1.0;
                owner[next_art] = BasicVar::Artificial(i);
                basis.push(next_art);
                unit_column.push(next_art);
                next_art += 1;
            }
        }
        let original = a.clone();
        Tableau {
            m,
            ncols,
            a,
            rhs,
            reduced: vec![0.0; ncols],
            basis,
            owner,
            column_scale,
            exact_rhs,
            unit_column,
            original,
            clamp: true,
        }
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.a[i * self.ncols..(i + 1) * self.ncols]
    }

    fn is_artificial(&self, j: usize) -> bool {
        matches!(self.owner[j], BasicVar::Artificial(_))
    }

    fn price(&mut self, cost: &[f64]) {
        let mut reduced = cost.to_vec();
        for i in 0..self.m {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                for (d, v) in reduced.iter_mut().zip(self.row(i)) {
                    *d -= cb * v;
                }
            }
        }
        self.reduced = reduced;
    }

    fn pivot(&mut self, p: usize, q: usize) {
        let n = self.ncols;
        let inv = 1.0 / self.a[p * n + q];
        for v in &mut self.a[p * n..(p + 1) * n] {
            *v *= inv;
        }
        self.rhs[p] *= inv;
        self.a[p * n + q] = 1.0;
        let support: Vec<usize> = (0..n).filter(|&j| self.a[p * n + j] != 0.0).collect();
        let (pivot_row, pivot_rhs) = (self.a[p * n..(p + 1) * n].to_vec(), self.rhs[p]);
        for i in 0..self.m {
            if i == p {
                continue;
            }
            let f = self.a[i * n + q];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.a[i * n..(i + 1) * n];
            for &j in &support {
                row[j] -= f * pivot_row[j];
            }
            row[q] = 0.0;
            self.rhs[i] -= f * pivot_rhs;
            if self.clamp && self.rhs[i] < 0.0 && self.rhs[i] > -FEAS_TOL {
                self.rhs[i] = 0.0;
            }
        }
        let f = self.reduced[q];
        if f != 0.0 {
            for &j in &support {
                self.reduced[j] -= f * pivot_row[j];
            }
            self.reduced[q] = 0.0;
        }
        self.basis[p] = q;
    }

    /// Dantzig pricing with a Harris ratio test, falling back to Bland's rule
    /// while the objective stalls.
    fn optimise(&mut self, allow_artificial: bool, max_iter: usize) -> Step {
        let mut stalled = 0;
        for _ in 0..max_iter {
            let eligible = |j: usize| allow_artificial || !self.is_artificial(j);
            let entering = if stalled >= STALL_LIMIT {
                (0..self.ncols).find(|&j| eligible(j) && self.reduced[j] < -COST_TOL)
            } else {
                let candidates: Vec<usize> = (0..self.ncols)
                    .filter(|&j| eligible(j) && self.reduced[j] < -COST_TOL)
                    .collect();
                let mut weight = vec![1.0; candidates.len()];
                for i in 0..self.m {
                    let row = self.row(i);
                    for (w, &j) in weight.iter_mut().zip(&candidates) {
                        *w += row[j] * row[j];
                    }
                }
                candidates
                    .iter()
                    .zip(&weight)
                    .map(|(&j, w)| (j, self.reduced[j] * self.reduced[j] / w))
                    .max_by(|x, y| x.1.total_cmp(&y.1))
                    .map(|(j, _)| j)
            };
            let Some(q) = entering else {
                return Step::Optimal;
            };
            let column: Vec<f64> = (0..self.m).map(|i| self.a[i * self.ncols + q]).collect();
            let mut bound = f64::INFINITY;
            for (i, &v) in column.iter().enumerate() {
                if v > PIVOT_TOL {
                    bound = bound.min((self.rhs[i] + FEAS_TOL) / v);
                }
            }
            if !bound.is_finite() {
                return Step::Unbounded;
            }
            let mut leave: Option<usize> = None;
            for (i, &v) in column.iter().enumerate() {
                if v <= PIVOT_TOL || self.rhs[i] / v > bound {
                    continue;
                }
                let better = match leave {
                    None => true,
                    Some(r) if stalled >= STALL_LIMIT => {
                        let (ri, rr) = (self.rhs[i] / v, self.rhs[r] / column[r]);
                        ri < rr || (ri == rr && self.basis[i] < self.basis[r])
                    }
                    Some(r) => v > column[r],
                };
                if better {
                    leave = Some(i);
                }
            }
            let Some(p) = leave else {
                return Step::Failed;
            };
            if self.rhs[p] / column[p] <= FEAS_TOL {
                stalled += 1;
            } else {
                stalled = 0;
            }
            self.pivot(p, q);
            if self.rhs.iter().any(|v| !v.is_finite()) {
                return Step::Failed;
            }
        }
        Step::Failed
    }

    /// Replaces the perturbed right-hand side by `B⁻¹b` for the unperturbed `b`.
    fn restore_rhs(&mut self) {
        for i in 0..self.m {
            let row = self.row(i);
            let v = self
                .unit_column
                .iter()
                .zip(&self.exact_rhs)
                .map(|(&j, b)| row[j] * b)
                .sum();
            self.rhs[i] = v;
        }
    }

    /// Recomputes the tableau and basic values from the original matrix and
    /// the current basis, discarding accumulated rounding error.
    fn reinvert(&mut self, cost: &[f64]) -> bool {
        let (m, n) = (self.m, self.ncols);
        let mut b: Vec<f64> = (0..m * m)
            .map(|k| self.original[(k / m) * n + self.basis[k % m]])
            .collect();
        let mut inv = vec![0.0; m * m];
        (0..m).for_each(|i| inv[i * m + i] = 1.0);
        for c in 0..m {
            let Some(p) = (c..m).max_by(|&x, &y| b[x * m + c].abs().total_cmp(&b[y * m + c].abs()))
            else {
                return false;
            };
            if b[p * m + c].abs() < 1e-12 {
                return false;
            }
            for j in 0..m {
                b.swap(p * m + j, c * m + j);
                inv.swap(p * m + j, c * m + j);
            }
            let d = 1.0 / b[c * m + c];
            for j in 0..m {
                b[c * m + j] *= d;
                inv[c * m + j] *= d;
            }
            for i in 0..m {
                let f = b[i * m + c];
                if i == c || f == 0.0 {
                    continue;
                }
                for j in 0..m {
                    b[i * m + j] -= f * b[c * m + j];
                    inv[i * m + j] -= f * inv[c * m + j];
                }
            }
        }
        let mut a = vec![0.0; m * n];
        for i in 0..m {
            for k in 0..m {
                let f = inv[i * m + k];
                if f == 0.0 {
                    continue;
                }
                let (dst, src) = (
                    &mut a[i * n..(i + 1) * n],
                    &self.original[k * n..(k + 1) * n],
                );
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += f * s;
                }
            }
            for (pos, &q) in self.basis.iter().enumerate() {
                a[i * n + q] = if pos == i { 1.0 } else { 0.0 };
            }
        }
        self.rhs = (0..m)
            .map(|i| (0..m).map(|k| inv[i * m + k] * self.exact_rhs[k]).sum())
            .collect();
        self.a = a;
        self.price(cost);
        true
    }

    /// Dual simplex pivots from a dual feasible basis until no basic value is negative.
    fn dual_optimise(&mut self, max_iter: usize) -> Step {
        for _ in 0..max_iter {
            let leaving = (0..self.m)
                .filter(|&i| self.rhs[i] < -CLEANUP_TOL)
                .min_by(|&x, &y| self.rhs[x].total_cmp(&self.rhs[y]));
            let Some(p) = leaving else {
                return Step::Optimal;
            };
            let mut entering: Option<(usize, f64)> = None;
            for j in 0..self.ncols {
                let v = self.a[p * self.ncols + j];
                if self.is_artificial(j) || v >= -PIVOT_TOL {
                    continue;
                }
                let ratio = self.reduced[j].max(0.0) / -v;
                let better = match entering {
                    None => true,
                    Some((q, best)) => {
                        ratio < best || (ratio == best && v < self.a[p * self.ncols + q])
                    }
                };
                if better {
                    entering = Some((j, ratio));
                }
            }
            let Some((q, _)) = entering else {
                return Step::Failed;
            };
            self.pivot(p, q);
        }
        Step::Failed
    }

    fn expel_artificials(&mut self) {
        for i in 0..self.m {
            if !self.is_artificial(self.basis[i]) {
                continue;
            }
            let replacement = (0..self.ncols)
                .filter(|&j| !self.is_artificial(j) && self.row(i)[j].abs() > PIVOT_TOL)
                .max_by(|&x, &y| self.row(i)[x].abs().total_cmp(&self.row(i)[y].abs()));
            if let Some(j) = replacement {
                self.pivot(i, j);
            }
        }
    }
}

fn power_of_two_scale(values: impl Iterator<Item = f64>) -> f64 {
    let max = values.fold(0.0f64, |acc, v| acc.max(v.abs()));
    if max == 0.0 || !max.is_finite() {
        1.0
    } else {
        (-max.log2().round()).exp2()
    }
}

pub(super) fn solve(lp: &LinearProgram) -> FloatOutcome {
    let mut t = Tableau::build(lp);
    let max_iter = 50 * (t.m + t.ncols) + 1000;
    if t.basis.iter().any(|&b| t.is_artificial(b)) {
        let phase1: Vec<f64> = (0..t.ncols)
            .map(|j| if t.is_artificial(j) { 1.0 } else { 0.0 })
            .collect();
        t.price(&phase1);
        if !matches!(t.optimise(true, max_iter), Step::Optimal) {
            return FloatOutcome::Failed;
        }
        let infeasibility: f64 = (0..t.m)
            .filter(|&i| t.is_artificial(t.basis[i]))
            .map(|i| t.rhs[i])
            .sum();
        let scale = t.rhs.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
        if infeasibility > 1e-7 * scale {
            return FloatOutcome::Infeasible;
        }
        t.expel_artificials();
    }

    let mut cost = vec![0.0; t.ncols];
    let flip = lp.sense == Sense::Maximize;
    for (j, c) in lp.objective.iter().enumerate() {
        let v = to_f64(c) * t.column_scale[j];
        cost[j] = if flip { -v } else { v };
    }
    let cmax = power_of_two_scale(cost.iter().copied());
    cost.iter_mut().for_each(|v| *v *= cmax);
    t.price(&cost);
    match t.optimise(false, max_iter) {
        Step::Optimal => {}
        Step::Unbounded => return FloatOutcome::Unbounded,
        Step::Failed => return FloatOutcome::Failed,
    }
    t.restore_rhs();
    t.clamp = false;
    for _ in 0..REINVERSIONS {
        if !matches!(t.dual_optimise(max_iter), Step::Optimal)
            || !matches!(t.optimise(false, max_iter), Step::Optimal)
        {
            return FloatOutcome::Failed;
        }
        if !t.reinvert(&cost) {
            return FloatOutcome::Failed;
        }
        if !t.rhs.iter().any(|&v| v < -CLEANUP_TOL) && !t.reduced.iter().any(|&d| d < -COST_TOL) {
            break;
        }
    }
    FloatOutcome::Optimal(t.basis.iter().map(|&b| t.owner[b]).collect())
}
