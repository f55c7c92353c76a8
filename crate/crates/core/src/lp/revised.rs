//! Exact revised simplex started from a given basis.
//!
//! The program is put in standard form with one slack per inequality row, and
//! every column is multiplied by a positive integer that clears its
//! denominators. The basis inverse is kept integer-preserving: an integer
//! matrix `adj` and a scalar `det` with `B⁻¹ = adj / det`, updated by exact
//! division after each pivot. From a basis that is either primal or dual
//! feasible, Bland-style primal or dual pivots are taken until it is optimal.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::float::BasicVar;
use super::{LinearProgram, Optimum, Relation, Sense};
use crate::rational::Rational;

struct Column {
    /// Integer entries `(row, λ·ρ_i·a_ij)` for the column factor `λ` and row factors `ρ`.
    entries: Vec<(usize, BigInt)>,
    scale: Rational,
    /// `λ·c_j` for the internal minimising cost `c`.
    cost: BigInt,
}

struct Revised<'a> {
    lp: &'a LinearProgram,
    columns: Vec<Column>,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    adj: Vec<Vec<BigInt>>,
    det: BigInt,
    /// `adj · b̂` where `b̂ = rhs_scale · b` is integral.
    values: Vec<BigInt>,
    rhs_scale: BigInt,
    row_scale: Vec<Rational>,
}

fn lcm_of_denominators<'r>(values: impl Iterator<Item = &'r Rational>) -> BigInt {
    values.fold(BigInt::one(), |acc, v| acc.lcm(v.denom()))
}

fn scaled(v: &Rational, lcm: &BigInt) -> BigInt {
    v.numer() * (lcm / v.denom())
}

fn sparse_dot(dense: &[BigInt], column: &[(usize, BigInt)]) -> BigInt {
    column
        .iter()
        .filter(|(i, _)| !dense[*i].is_zero())
        .fold(BigInt::zero(), |acc, (i, a)| acc + &dense[*i] * a)
}

/// Positive factor turning the non-zero `values` into coprime integers.
fn primitive_factor<'r>(values: impl Iterator<Item = &'r Rational> + Clone) -> Rational {
    let lcm = lcm_of_denominators(values.clone());
    let gcd = values
        .filter(|v| !v.is_zero())
        .fold(BigInt::zero(), |acc, v| acc.gcd(&scaled(v, &lcm)));
    if gcd.is_zero() {
        Rational::one()
    } else {
        Rational::new(lcm, gcd)
    }
}

/// Compares `a/b` with `c/d` for positive `b`, `d`.
fn ratio_cmp(a: &BigInt, b: &BigInt, c: &BigInt, d: &BigInt) -> Ordering {
    (a * d).cmp(&(c * b))
}

/// Fraction-free Gauss-Jordan elimination: returns `(adj, det)` with
/// `A⁻¹ = adj / det`, or `None` if `A` is singular.
fn integer_inverse(a: Vec<Vec<BigInt>>) -> Option<(Vec<Vec<BigInt>>, BigInt)> {
    let n = a.len();
    let mut m: Vec<Vec<BigInt>> = a
        .into_iter()
        .enumerate()
        .map(|(i, mut row)| {
            row.extend((0..n).map(|j| {
                if i == j {
                    BigInt::one()
                } else {
                    BigInt::zero()
                }
            }));
            row
        })
        .collect();
    let mut prev = BigInt::one();
    for k in 0..n {
        let p = (k..n).find(|&r| !m[r][k].is_zero())?;
        m.swap(k, p);
        let pivot_row = m[k].clone();
        let pk = pivot_row[k].clone();
        for (i, row) in m.iter_mut().enumerate() {
            if i == k {
                continue;
            }
            let f = row[k].clone();
            for (v, pv) in row.iter_mut().zip(&pivot_row) {
                let t = &pk * &*v - &f * pv;
                *v = t / &prev;
            }
        }
        prev = pk;
    }
    // The left block is now `prev·I` and the right block `prev·A⁻¹`.
    let adj = m.into_iter().map(|row| row[n..].to_vec()).collect();
    Some((adj, prev))
}

impl<'a> Revised<'a> {
    fn new(lp: &'a LinearProgram, start: &[BasicVar]) -> Option<Self> {
        let m = lp.num_constraints();
        let nv = lp.num_vars;
        let flip = lp.sense == Sense::Maximize;
        let row_scale: Vec<Rational> = lp
            .constraints
            .iter()
            .map(|c| primitive_factor(c.coefficients.iter()))
            .collect();
        let mut columns = Vec::with_capacity(nv + m);
        for j in 0..nv {
            let exact: Vec<(usize, Rational)> = lp
                .constraints
                .iter()
                .zip(&row_scale)
                .enumerate()
                .filter(|(_, (c, _))| !c.coefficients[j].is_zero())
                .map(|(i, (c, rho))| (i, &c.coefficients[j] * rho))
                .collect();
            let cost = if flip {
                -&lp.objective[j]
            } else {
                lp.objective[j].clone()
            };
            let lambda = primitive_factor(exact.iter().map(|(_, v)| v).chain([&cost]));
            columns.push(Column {
                entries: exact
                    .iter()
                    .map(|(i, v)| (*i, (v * &lambda).to_integer()))
                    .collect(),
                cost: (&cost * &lambda).to_integer(),
                scale: lambda,
            });
        }
        let mut slack_of = vec![None; m];
        for (i, c) in lp.constraints.iter().enumerate() {
            let sign = match c.relation {
                Relation::Le => 1,
                Relation::Ge => -1,
                Relation::Eq => continue,
            };
            slack_of[i] = Some(columns.len());
            columns.push(Column {
                entries: vec![(i, sign.into())],
                scale: Rational::one(),
                cost: BigInt::zero(),
            });
        }

        let basis = start
            .iter()
            .map(|var| match *var {
                BasicVar::Structural(j) => Some(j),
                BasicVar::Slack(i) | BasicVar::Artificial(i) => slack_of[i],
            })
            .collect::<Option<Vec<usize>>>()?;
        if basis.len() != m {
            return None;
        }
        let mut is_basic = vec![false; columns.len()];
        for &b in &basis {
            if std::mem::replace(&mut is_basic[b], true) {
                return None;
            }
        }
        let (adj, det) = Self::basis_inverse(&columns, &basis, nv, m)?;
        let scaled_rhs: Vec<Rational> = lp
            .constraints
            .iter()
            .zip(&row_scale)
            .map(|(c, rho)| &c.rhs * rho)
            .collect();
        let rhs_scale = lcm_of_denominators(scaled_rhs.iter());
        let rhs: Vec<BigInt> = scaled_rhs.iter().map(|b| scaled(b, &rhs_scale)).collect();
        let values = adj
            .iter()
            .map(|row| {
                row.iter()
                    .zip(&rhs)
                    .fold(BigInt::zero(), |acc, (a, b)| acc + a * b)
            })
            .collect();
        Some(Revised {
            lp,
            columns,
            basis,
            is_basic,
            adj,
            det,
            values,
            rhs_scale,
            row_scale,
        })
    }

    /// Inverts the basis through the square block of tight rows and basic
    /// structural columns; basic slacks are signed unit vectors.
    fn basis_inverse(
        columns: &[Column],
        basis: &[usize],
        nv: usize,
        m: usize,
    ) -> Option<(Vec<Vec<BigInt>>, BigInt)> {
        let structural: Vec<usize> = (0..m).filter(|&p| basis[p] < nv).collect();
        let mut slack_at = vec![None; m];
        for p in (0..m).filter(|&p| basis[p] >= nv) {
            let (row, sign) = &columns[basis[p]].entries[0];
            slack_at[*row] = Some((p, sign.clone()));
        }
        let tight: Vec<usize> = (0..m).filter(|&i| slack_at[i].is_none()).collect();
        if tight.len() != structural.len() {
            return None;
        }
        let mut position_in_tight = vec![None; m];
        for (t, &i) in tight.iter().enumerate() {
            position_in_tight[i] = Some(t);
        }
        let mut core = vec![vec![BigInt::zero(); tight.len()]; tight.len()];
        for (s, &p) in structural.iter().enumerate() {
            for (i, v) in &columns[basis[p]].entries {
                if let Some(t) = position_in_tight[*i] {
                    core[t][s] = v.clone();
                }
            }
        }
        let (core_adj, det) = integer_inverse(core)?;
        let mut adj = vec![vec![BigInt::zero(); m]; m];
        for (s, &p) in structural.iter().enumerate() {
            for (t, &i) in tight.iter().enumerate() {
                adj[p][i] = core_adj[s][t].clone();
            }
        }
        // A slack with sign σ in row i equals σ(b_i - A_{i,S} x_S).
        let mut row_entries: Vec<Vec<(usize, BigInt)>> = vec![Vec::new(); m];
        for (s, &p) in structural.iter().enumerate() {
            for (i, v) in &columns[basis[p]].entries {
                if slack_at[*i].is_some() {
                    row_entries[*i].push((s, v.clone()));
                }
            }
        }
        for i in 0..m {
            let Some((p, sigma)) = &slack_at[i] else {
                continue;
            };
            let mut row = vec![BigInt::zero(); m];
            row[i] = sigma * &det;
            for (s, a) in &row_entries[i] {
                for (t, &r) in tight.iter().enumerate() {
                    let c = &core_adj[*s][t];
                    if !c.is_zero() {
                        row[r] -= sigma * a * c;
                    }
                }
            }
            adj[*p] = row;
        }
        Some((adj, det))
    }

    /// `det · yᵀ` for the internal simplex multipliers `y = c_Bᵀ B⁻¹`.
    fn multipliers(&self) -> Vec<BigInt> {
        let m = self.basis.len();
        let mut y = vec![BigInt::zero(); m];
        for (row, &b) in self.adj.iter().zip(&self.basis) {
            let cb = &self.columns[b].cost;
            if cb.is_zero() {
                continue;
            }
            for (acc, v) in y.iter_mut().zip(row) {
                if !v.is_zero() {
                    *acc += cb * v;
                }
            }
        }
        y
    }

    /// `det · λ_j · d_j` for every non-basic column `j`.
    fn reduced_costs(&self, y: &[BigInt]) -> Vec<Option<BigInt>> {
        self.columns
            .iter()
            .zip(&self.is_basic)
            .map(|(col, &basic)| {
                (!basic).then(|| &col.cost * &self.det - sparse_dot(y, &col.entries))
            })
            .collect()
    }

    /// `det · B⁻¹ a_q` for the scaled column `q`.
    fn column_image(&self, q: usize) -> Vec<BigInt> {
        self.adj
            .iter()
            .map(|row| sparse_dot(row, &self.columns[q].entries))
            .collect()
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let alpha = self.column_image(q);
        let ar = alpha[r].clone();
        let pivot_row = self.adj[r].clone();
        let pivot_value = self.values[r].clone();
        for (i, a) in alpha.iter().enumerate() {
            if i == r {
                continue;
            }
            for (v, p) in self.adj[i].iter_mut().zip(&pivot_row) {
                if v.is_zero() && (p.is_zero() || a.is_zero()) {
                    continue;
                }
                let t = &ar * &*v - a * p;
                *v = t / &self.det;
            }
            let t = &ar * &self.values[i] - a * &pivot_value;
            self.values[i] = t / &self.det;
        }
        self.det = ar;
        self.is_basic[self.basis[r]] = false;
        self.is_basic[q] = true;
        self.basis[r] = q;
    }

    fn primal_step(&mut self, q: usize) -> bool {
        let alpha = self.column_image(q);
        let s = self.det.signum();
        let mut leave: Option<(usize, BigInt, BigInt)> = None;
        for (i, a) in alpha.iter().enumerate() {
            let a = a * &s;
            if !a.is_positive() {
                continue;
            }
            let v = &self.values[i] * &s;
            let better = match &leave {
                None => true,
                Some((r, bv, ba)) => match ratio_cmp(&v, &a, bv, ba) {
                    Ordering::Less => true,
                    Ordering::Equal => self.basis[i] < self.basis[*r],
                    Ordering::Greater => false,
                },
            };
            if better {
                leave = Some((i, v, a));
            }
        }
        match leave {
            Some((r, _, _)) => {
                self.pivot(r, q);
                true
            }
            None => false,
        }
    }

    fn dual_step(&mut self, r: usize, reduced: &[Option<BigInt>]) -> bool {
        let s = self.det.signum();
        let row = &self.adj[r];
        let mut enter: Option<(usize, BigInt, BigInt)> = None;
        for (j, (col, d)) in self.columns.iter().zip(reduced).enumerate() {
            let Some(d) = d else { continue };
            let alpha = sparse_dot(row, &col.entries) * &s;
            if !alpha.is_negative() {
                continue;
            }
            // Ratio d_j / -α_j; the column factor and det cancel.
            let (num, den) = (d * &s, -alpha);
            let better = match &enter {
                None => true,
                Some((_, bn, bd)) => ratio_cmp(&num, &den, bn, bd) == Ordering::Less,
            };
            if better {
                enter = Some((j, num, den));
            }
        }
        match enter {
            Some((q, _, _)) => {
                self.pivot(r, q);
                true
            }
            None => false,
        }
    }

    fn run(mut self, max_iter: usize) -> Option<Optimum> {
        for it in 0..max_iter {
            let y = self.multipliers();
            let reduced = self.reduced_costs(&y);
            let s = self.det.signum();
            let entering = reduced
                .iter()
                .position(|d| d.as_ref().is_some_and(|d| (d * &s).is_negative()));
            let infeasible =
                (0..self.basis.len()).filter(|&p| (&self.values[p] * &s).is_negative());
            let leaving = if it < max_iter / 2 {
                infeasible.min_by(|&p, &q| (&self.values[p] * &s).cmp(&(&self.values[q] * &s)))
            } else {
                infeasible.min_by_key(|&p| self.basis[p])
            };
            match (entering, leaving) {
                (None, None) => return Some(self.optimum(&y)),
                (Some(q), None) => {
                    if !self.primal_step(q) {
                        return None;
                    }
                }
                (None, Some(r)) => {
                    if !self.dual_step(r, &reduced) {
                        return None;
                    }
                }
                (Some(_), Some(_)) => return None,
            }
        }
        None
    }

    fn optimum(&self, y: &[BigInt]) -> Optimum {
        let nv = self.lp.num_vars;
        let mut point = vec![Rational::zero(); nv];
        let value_denom = &self.det * &self.rhs_scale;
        for (&b, v) in self.basis.iter().zip(&self.values) {
            if b < nv {
                point[b] = Rational::new(v.clone(), value_denom.clone()) * &self.columns[b].scale;
            }
        }
        let negate = self.lp.sense == Sense::Maximize;
        let duals = y
            .iter()
            .zip(&self.row_scale)
            .map(|(v, rho)| {
                let y = Rational::new(v.clone(), self.det.clone()) * rho;
                if negate {
                    -y
                } else {
                    y
                }
            })
            .collect();
        Optimum {
            value: self.lp.objective_value(&point),
            point,
            duals,
        }
    }
}

/// Optimum reached from `start` by exact pivots, or `None` if the start is
/// neither primal nor dual feasible or the pivot budget runs out.
pub(super) fn refine(lp: &LinearProgram, start: &[BasicVar], max_iter: usize) -> Option<Optimum> {
    Revised::new(lp, start)?.run(max_iter)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ints(rows: &[&[i64]]) -> Vec<Vec<BigInt>> {
        rows.iter()
            .map(|r| r.iter().map(|&v| BigInt::from(v)).collect())
            .collect()
    }

    #[test]
    fn integer_inverse_matches_definition() {
        let a = ints(&[&[0, 2, 1], &[3, 1, 0], &[1, 1, 1]]);
        let (adj, det) = integer_inverse(a.clone()).unwrap();
        for (i, row) in a.iter().enumerate() {
            for j in 0..3 {
                let v: BigInt = row.iter().zip(&adj).map(|(x, r)| x * &r[j]).sum();
                let expected = if i == j { det.clone() } else { BigInt::zero() };
                assert_eq!(v, expected);
            }
        }
        assert!(integer_inverse(ints(&[&[1, 2], &[2, 4]])).is_none());
    }
}
