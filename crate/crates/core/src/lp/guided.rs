//! Exact solutions from a floating-point basis guess.
//!
//! The float simplex proposes a basis; the basic solution and its duals are
//! then recomputed exactly from the square system the basis selects and the
//! result is certified against the original program. Programs with more rows
//! than columns are handled through their dual, whose tableau is smaller.
//! A guess that is off by a few pivots is repaired by exact pivoting.

use num_traits::Zero;

use super::float::{self, FloatOutcome};
use super::{revised, LinearProgram, Optimum, Relation, Sense};
use crate::rational::Rational;

/// Exact pivots allowed on top of one per row before giving up on a guess.
const REPAIR_PIVOTS: usize = 200;

/// Returns an optimum confirmed by exact pivoting, or `None` when the guess
/// could not be repaired. The caller is responsible for certifying it.
pub(super) fn solve(lp: &LinearProgram) -> Option<Optimum> {
    if lp.num_constraints() > lp.num_vars {
        let dual = Dual::of(lp);
        let inner = from_float_basis(&dual.lp)?;
        Some(dual.recover(lp, &inner))
    } else {
        from_float_basis(lp)
    }
}

fn from_float_basis(lp: &LinearProgram) -> Option<Optimum> {
    let FloatOutcome::Optimal(basis) = float::solve(lp) else {
        return None;
    };
    revised::refine(lp, &basis, REPAIR_PIVOTS + lp.num_constraints())
}

/// The dual program written with non-negative variables: each primal row
/// contributes one column `z` with `y = sign · z`, or two for equalities.
struct Dual {
    lp: LinearProgram,
    columns: Vec<(usize, bool)>,
}

impl Dual {
    fn of(primal: &LinearProgram) -> Self {
        let (sense, relation) = match primal.sense {
            Sense::Maximize => (Sense::Minimize, Relation::Ge),
            Sense::Minimize => (Sense::Maximize, Relation::Le),
        };
        let mut columns = Vec::new();
        for (i, row) in primal.constraints.iter().enumerate() {
            let nonnegative = matches!(
                (primal.sense, row.relation),
                (Sense::Maximize, Relation::Le) | (Sense::Minimize, Relation::Ge)
            );
            match row.relation {
                Relation::Eq => {
                    columns.push((i, false));
                    columns.push((i, true));
                }
                _ => columns.push((i, !nonnegative)),
            }
        }
        let signed = |v: &Rational, negated: bool| if negated { -v } else { v.clone() };
        let objective = columns
            .iter()
            .map(|&(i, neg)| signed(&primal.constraints[i].rhs, neg))
            .collect();
        let mut lp = LinearProgram::new(columns.len(), sense).with_objective(objective);
        for j in 0..primal.num_vars {
            let coefficients = columns
                .iter()
                .map(|&(i, neg)| signed(&primal.constraints[i].coefficients[j], neg))
                .collect();
            lp.add_constraint(coefficients, relation, primal.objective[j].clone());
        }
        Dual { lp, columns }
    }

    fn recover(&self, primal: &LinearProgram, inner: &Optimum) -> Optimum {
        let point = inner.duals.clone();
        let mut duals = vec![Rational::zero(); primal.num_constraints()];
        for (&(i, neg), z) in self.columns.iter().zip(&inner.point) {
            if neg {
                duals[i] -= z;
            } else {
                duals[i] += z;
            }
        }
        Optimum {
            value: primal.objective_value(&point),
            point,
            duals,
        }
    }
}
