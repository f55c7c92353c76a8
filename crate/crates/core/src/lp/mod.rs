//! Linear programs over exact rationals.
//!
//! Variables are always non-negative. [`solve`] confirms a floating-point
//! basis guess in exact arithmetic and otherwise runs a two-phase tableau
//! simplex with Bland's rule. Every answer carries a certificate that is
//! re-checked against the input before it is returned, so a returned
//! [`Optimum`] is exact and provably optimal.
//!
//! Dual values follow the shadow-price convention: `duals[i]` is the rate of
//! change of the optimal value with respect to the right-hand side of row `i`.

mod float;
mod guided;
mod revised;
mod simplex;

use std::cmp::Ordering;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::LpError;
use crate::rational::{exact_string, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Maximize,
    Minimize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

impl Relation {
    pub fn flipped(self) -> Self {
        match self {
            Relation::Le => Relation::Ge,
            Relation::Ge => Relation::Le,
            Relation::Eq => Relation::Eq,
        }
    }

    pub fn holds(self, lhs: &Rational, rhs: &Rational) -> bool {
        match self {
            Relation::Le => lhs <= rhs,
            Relation::Ge => lhs >= rhs,
            Relation::Eq => lhs == rhs,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub coefficients: Vec<Rational>,
    pub relation: Relation,
    pub rhs: Rational,
}

impl Constraint {
    pub fn activity(&self, point: &[Rational]) -> Rational {
        dot(&self.coefficients, point)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearProgram {
    pub num_vars: usize,
    pub objective: Vec<Rational>,
    pub sense: Sense,
    pub constraints: Vec<Constraint>,
}

impl LinearProgram {
    pub fn new(num_vars: usize, sense: Sense) -> Self {
        Self {
            num_vars,
            objective: vec![Rational::zero(); num_vars],
            sense,
            constraints: Vec::new(),
        }
    }

    pub fn with_objective(mut self, objective: Vec<Rational>) -> Self {
        self.objective = objective;
        self
    }

    pub fn add_constraint(
        &mut self,
        coefficients: Vec<Rational>,
        relation: Relation,
        rhs: Rational,
    ) {
        self.constraints.push(Constraint {
            coefficients,
            relation,
            rhs,
        });
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn validate(&self) -> Result<(), LpError> {
        if self.objective.len() != self.num_vars {
            return Err(LpError::Malformed(format!(
                "objective has {} entries for {} variables",
                self.objective.len(),
                self.num_vars
            )));
        }
        for (i, row) in self.constraints.iter().enumerate() {
            if row.coefficients.len() != self.num_vars {
                return Err(LpError::Malformed(format!(
                    "row {i} has {} entries for {} variables",
                    row.coefficients.len(),
                    self.num_vars
                )));
            }
        }
        Ok(())
    }

    pub fn objective_value(&self, point: &[Rational]) -> Rational {
        dot(&self.objective, point)
    }

    /// First row (or sign bound) that `point` violates.
    pub fn first_violation(&self, point: &[Rational]) -> Option<String> {
        if point.len() != self.num_vars {
            return Some(format!("point has {} entries", point.len()));
        }
        if let Some(j) = point.iter().position(|v| v.is_negative()) {
            return Some(format!("variable {j} is negative"));
        }
        self.constraints.iter().enumerate().find_map(|(i, row)| {
            let lhs = row.activity(point);
            (!row.relation.holds(&lhs, &row.rhs)).then(|| {
                format!(
                    "row {i}: {} {:?} {} fails",
                    exact_string(&lhs),
                    row.relation,
                    exact_string(&row.rhs)
                )
            })
        })
    }

    pub fn is_feasible(&self, point: &[Rational]) -> bool {
        self.first_violation(point).is_none()
    }

    /// The program keeping only the listed rows, in the given order.
    /// The program over the given columns only; the others are fixed at zero.
    pub fn restrict_columns(&self, columns: &[usize]) -> LinearProgram {
        let pick = |v: &[Rational]| columns.iter().map(|&j| v[j].clone()).collect();
        LinearProgram {
            num_vars: columns.len(),
            objective: pick(&self.objective),
            sense: self.sense,
            constraints: self
                .constraints
                .iter()
                .map(|c| Constraint {
                    coefficients: pick(&c.coefficients),
                    relation: c.relation,
                    rhs: c.rhs.clone(),
                })
                .collect(),
        }
    }

    pub fn restrict_rows(&self, rows: &[usize]) -> LinearProgram {
        LinearProgram {
            num_vars: self.num_vars,
            objective: self.objective.clone(),
            sense: self.sense,
            constraints: rows.iter().map(|&i| self.constraints[i].clone()).collect(),
        }
    }

    /// `Σ_i duals[i]·rhs[i]`.
    pub fn dual_objective(&self, duals: &[Rational]) -> Rational {
        self.constraints
            .iter()
            .zip(duals)
            .fold(Rational::zero(), |acc, (row, y)| acc + &row.rhs * y)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Optimum {
    pub value: Rational,
    pub point: Vec<Rational>,
    pub duals: Vec<Rational>,
}

/// Multipliers `y` (sign-compatible with each row's relation) with
/// `yᵀA >= 0` and `yᵀb < 0`; no non-negative point can satisfy every row.
#[derive(Clone, Debug, PartialEq)]
pub struct FarkasCertificate {
    pub multipliers: Vec<Rational>,
}

/// A feasible point and an improving direction that stays feasible forever.
#[derive(Clone, Debug, PartialEq)]
pub struct UnboundedRay {
    pub point: Vec<Rational>,
    pub direction: Vec<Rational>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpSolution {
    Optimal(Optimum),
    Infeasible(FarkasCertificate),
    Unbounded(UnboundedRay),
}

impl LpSolution {
    pub fn verdict(&self) -> Verdict {
        match self {
            LpSolution::Optimal(_) => Verdict::Optimal,
            LpSolution::Infeasible(_) => Verdict::Infeasible,
            LpSolution::Unbounded(_) => Verdict::Unbounded,
        }
    }

    pub fn optimum(&self) -> Option<&Optimum> {
        match self {
            LpSolution::Optimal(opt) => Some(opt),
            _ => None,
        }
    }

    pub fn into_optimum(self) -> Option<Optimum> {
        match self {
            LpSolution::Optimal(opt) => Some(opt),
            _ => None,
        }
    }

    pub fn value(&self) -> Option<&Rational> {
        self.optimum().map(|o| &o.value)
    }

    /// Re-checks the attached certificate against `lp`.
    pub fn certify(&self, lp: &LinearProgram) -> Result<(), LpError> {
        match self {
            LpSolution::Optimal(opt) => opt.certify(lp),
            LpSolution::Infeasible(cert) => cert.certify(lp),
            LpSolution::Unbounded(ray) => ray.certify(lp),
        }
    }
}

/// Sign a shadow price must have for `relation` under `sense`.
fn dual_sign_ok(sense: Sense, relation: Relation, y: &Rational) -> bool {
    match (sense, relation) {
        (_, Relation::Eq) => true,
        (Sense::Maximize, Relation::Le) | (Sense::Minimize, Relation::Ge) => !y.is_negative(),
        (Sense::Maximize, Relation::Ge) | (Sense::Minimize, Relation::Le) => !y.is_positive(),
    }
}

impl Optimum {
    /// Primal feasibility, dual feasibility and equal objectives.
    pub fn certify(&self, lp: &LinearProgram) -> Result<(), LpError> {
        let fail = |msg: String| Err(LpError::Certificate(msg));
        if let Some(v) = lp.first_violation(&self.point) {
            return fail(format!("optimal point infeasible: {v}"));
        }
        if lp.objective_value(&self.point) != self.value {
            return fail("objective value does not match point".into());
        }
        if self.duals.len() != lp.num_constraints() {
            return fail("dual vector has wrong length".into());
        }
        for (i, (row, y)) in lp.constraints.iter().zip(&self.duals).enumerate() {
            if !dual_sign_ok(lp.sense, row.relation, y) {
                return fail(format!("dual {i} has the wrong sign"));
            }
        }
        let reduced = reduced_costs(lp, &self.duals);
        for (j, r) in reduced.iter().enumerate() {
            let bad = match lp.sense {
                Sense::Maximize => r.is_positive(),
                Sense::Minimize => r.is_negative(),
            };
            if bad {
                return fail(format!("reduced cost of variable {j} has the wrong sign"));
            }
        }
        if lp.dual_objective(&self.duals) != self.value {
            return fail("strong duality gap is non-zero".into());
        }
        Ok(())
    }
}

impl FarkasCertificate {
    pub fn certify(&self, lp: &LinearProgram) -> Result<(), LpError> {
        let fail = |msg: &str| Err(LpError::Certificate(format!("infeasibility: {msg}")));
        if self.multipliers.len() != lp.num_constraints() {
            return fail("wrong length");
        }
        for (row, y) in lp.constraints.iter().zip(&self.multipliers) {
            if !dual_sign_ok(Sense::Maximize, row.relation, y) {
                return fail("multiplier sign");
            }
        }
        let combined = transpose_times(lp, &self.multipliers);
        if combined.iter().any(|c| c.is_negative()) {
            return fail("combined row has a negative entry");
        }
        if !lp.dual_objective(&self.multipliers).is_negative() {
            return fail("combined right-hand side is not negative");
        }
        Ok(())
    }
}

impl UnboundedRay {
    pub fn certify(&self, lp: &LinearProgram) -> Result<(), LpError> {
        let fail = |msg: String| Err(LpError::Certificate(format!("unbounded ray: {msg}")));
        if let Some(v) = lp.first_violation(&self.point) {
            return fail(format!("base point infeasible: {v}"));
        }
        if self.direction.len() != lp.num_vars || self.direction.iter().any(|d| d.is_negative()) {
            return fail("direction must be non-negative".into());
        }
        for (i, row) in lp.constraints.iter().enumerate() {
            let slope = row.activity(&self.direction);
            if !row.relation.holds(&slope, &Rational::zero()) {
                return fail(format!("direction leaves row {i}"));
            }
        }
        let gain = lp.objective_value(&self.direction);
        let improving = match lp.sense {
            Sense::Maximize => gain.is_positive(),
            Sense::Minimize => gain.is_negative(),
        };
        if !improving {
            return fail("direction does not improve the objective".into());
        }
        Ok(())
    }
}

pub(crate) fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter()
        .zip(b)
        .filter(|(x, y)| !x.is_zero() && !y.is_zero())
        .fold(Rational::zero(), |acc, (x, y)| acc + x * y)
}

/// `Aᵀy`.
fn transpose_times(lp: &LinearProgram, y: &[Rational]) -> Vec<Rational> {
    let mut out = vec![Rational::zero(); lp.num_vars];
    for (row, yi) in lp.constraints.iter().zip(y) {
        if yi.is_zero() {
            continue;
        }
        for (acc, a) in out.iter_mut().zip(&row.coefficients) {
            if !a.is_zero() {
                *acc += a * yi;
            }
        }
    }
    out
}

/// `c - Aᵀy`.
fn reduced_costs(lp: &LinearProgram, duals: &[Rational]) -> Vec<Rational> {
    let aty = transpose_times(lp, duals);
    lp.objective.iter().zip(aty).map(|(c, a)| c - a).collect()
}

/// Solves `lp` exactly and checks the resulting certificate.
///
/// A floating-point simplex first proposes a basis, which is confirmed in
/// exact arithmetic; if that fails the exact tableau simplex runs from scratch.
pub fn solve(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    lp.validate()?;
    if let Some(optimum) = guided::solve(lp) {
        let solution = LpSolution::Optimal(optimum);
        if solution.certify(lp).is_ok() {
            return Ok(solution);
        }
    }
    solve_exact(lp)
}

fn solve_uncertified(lp: &LinearProgram) -> LpSolution {
    match guided::solve(lp) {
        Some(optimum) => LpSolution::Optimal(optimum),
        None => simplex::solve(lp),
    }
}

/// Solves `lp` with the exact tableau simplex only.
pub fn solve_exact(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    lp.validate()?;
    let solution = simplex::solve(lp);
    solution.certify(lp)?;
    Ok(solution)
}

/// Solves a program with many columns by column generation: starts from the
/// `seed` columns with every other variable fixed at zero, solves, prices the
/// remaining columns with the restricted duals, adds up to `batch` of the most
/// attractive ones, and repeats until no column can improve the objective.
/// The returned certificate is checked against the full program.
pub fn solve_with_column_generation(
    lp: &LinearProgram,
    seed: &[usize],
    batch: usize,
) -> Result<LpSolution, LpError> {
    lp.validate()?;
    let n = lp.num_vars;
    if let Some(&bad) = seed.iter().find(|&&j| j >= n) {
        return Err(LpError::Malformed(format!(
            "seed column {bad} out of range"
        )));
    }
    let batch = batch.max(1);
    let mut active = vec![false; n];
    for &j in seed {
        active[j] = true;
    }
    loop {
        let columns: Vec<usize> = (0..n).filter(|&j| active[j]).collect();
        let expand = |values: &[Rational]| {
            let mut full = vec![Rational::zero(); n];
            for (&j, v) in columns.iter().zip(values) {
                full[j] = v.clone();
            }
            full
        };
        let solution = if columns.is_empty() {
            LpSolution::Infeasible(FarkasCertificate {
                multipliers: Vec::new(),
            })
        } else {
            let restricted = lp.restrict_columns(&columns);
            restricted.validate()?;
            solve_uncertified(&restricted)
        };
        let solution = match solution {
            LpSolution::Optimal(opt) => {
                let reduced = reduced_costs(lp, &opt.duals);
                let mut attractive: Vec<(Rational, usize)> = (0..n)
                    .filter(|&j| !active[j])
                    .filter_map(|j| {
                        let gain = match lp.sense {
                            Sense::Maximize => reduced[j].clone(),
                            Sense::Minimize => -&reduced[j],
                        };
                        gain.is_positive().then_some((gain, j))
                    })
                    .collect();
                if !attractive.is_empty() {
                    attractive.sort_by(|a, b| match b.0.cmp(&a.0) {
                        Ordering::Equal => a.1.cmp(&b.1),
                        other => other,
                    });
                    for (_, j) in attractive.into_iter().take(batch) {
                        active[j] = true;
                    }
                    continue;
                }
                LpSolution::Optimal(Optimum {
                    value: opt.value,
                    point: expand(&opt.point),
                    duals: opt.duals,
                })
            }
            LpSolution::Unbounded(ray) => LpSolution::Unbounded(UnboundedRay {
                point: expand(&ray.point),
                direction: expand(&ray.direction),
            }),
            LpSolution::Infeasible(cert) => {
                let candidate = LpSolution::Infeasible(cert);
                if columns.len() == n || candidate.certify(lp).is_ok() {
                    candidate
                } else {
                    active.iter_mut().for_each(|a| *a = true);
                    continue;
                }
            }
        };
        solution.certify(lp)?;
        return Ok(solution);
    }
}
