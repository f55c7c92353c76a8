//! Worst-case ring games built from an optimal label vector.
//!
//! For every label `(e,x,o)` with positive mass and every ordering of the
//! players, a ring of `n` resources is built. The player at ring position `p`
//! covers offsets `p..p+e+x-1` in its equilibrium action and offsets
//! `p+e..p+e+x+o-1` in its optimal action, all mod `n`, so every resource of
//! the ring carries exactly that label. Positions and offsets start at 0.

use itertools::Itertools;
use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::bounds::{build_primal, spoa_bound, LabelVector, WelfareCurve};
use crate::combinatorics::{falling_factorial, Label};
use crate::error::WorstCaseError;
use crate::games::{JointAction, Resource, ResourceGame};
use crate::lp::Relation;
use crate::rational::{exact_string, ExactValue, Rational};

/// Largest player count the construction accepts.
pub const MAX_RING_PLAYERS: usize = 6;

/// Work budget, in resource-coalition-block visits, for the exhaustive
/// equilibrium check inside `certify_tightness`.
pub const EQUILIBRIUM_CHECK_BUDGET: u128 = 50_000_000;

#[derive(Clone, Debug, PartialEq)]
pub struct RingGameSpec {
    pub n: usize,
    pub support: Vec<(Label, Rational)>,
    pub game: ResourceGame,
    /// Every player on action 0.
    pub a_ne: JointAction,
    /// Every player on action 1.
    pub a_opt: JointAction,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TightnessCertificate {
    pub n: usize,
    pub k: usize,
    pub lp_value: Rational,
    pub constructed_ratio: Rational,
    pub welfare_ne: Rational,
    pub welfare_opt: Rational,
    pub resources: usize,
    /// `false` when the instance was too large for the exhaustive check.
    pub equilibrium_verified: bool,
}

#[derive(Serialize)]
struct CertificateJson {
    n: usize,
    k: usize,
    lp_value: ExactValue,
    constructed_ratio: ExactValue,
    welfare_ne: String,
    welfare_opt: String,
    resources: usize,
    equilibrium_verified: bool,
}

impl TightnessCertificate {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(CertificateJson {
            n: self.n,
            k: self.k,
            lp_value: ExactValue::from(&self.lp_value),
            constructed_ratio: ExactValue::from(&self.constructed_ratio),
            welfare_ne: exact_string(&self.welfare_ne),
            welfare_opt: exact_string(&self.welfare_opt),
            resources: self.resources,
            equilibrium_verified: self.equilibrium_verified,
        })
        .expect("certificate serialises")
    }
}

fn factorial(n: usize) -> u128 {
    (1..=n as u128).product()
}

/// Resource count `n·n!·|support|` of the construction.
pub fn ring_resource_count(n: usize, support: usize) -> u128 {
    (n as u128)
        .saturating_mul(factorial(n.min(34)))
        .saturating_mul(support as u128)
}

fn check_feasible(
    n: usize,
    w: &WelfareCurve,
    k: usize,
    theta: &LabelVector,
) -> Result<(), WorstCaseError> {
    if theta.players() != n {
        return Err(WorstCaseError::InfeasibleTheta(format!(
            "labels are for {} players, expected {n}",
            theta.players()
        )));
    }
    if let Some((l, v)) = theta.support().find(|(_, v)| v.is_negative()) {
        return Err(WorstCaseError::InfeasibleTheta(format!(
            "negative mass {} on {l}",
            exact_string(v)
        )));
    }
    let lp = build_primal(n, w, k)?;
    for (i, row) in lp.constraints.iter().enumerate() {
        let lhs: Rational = row
            .coefficients
            .iter()
            .zip(theta.entries())
            .map(|(a, t)| a * t)
            .sum();
        let ok = match row.relation {
            Relation::Le => lhs <= row.rhs,
            Relation::Ge => lhs >= row.rhs,
            Relation::Eq => lhs == row.rhs,
        };
        if !ok {
            return Err(WorstCaseError::InfeasibleTheta(format!(
                "constraint {i} violated"
            )));
        }
    }
    Ok(())
}

/// Builds the ring game for `theta`, which must be feasible for the primal
/// program of `(n, w, k)`.
pub fn construct_worst_case(
    n: usize,
    w: &WelfareCurve,
    k: usize,
    theta: &LabelVector,
) -> Result<RingGameSpec, WorstCaseError> {
    let support: Vec<(Label, Rational)> = theta.support().map(|(l, v)| (l, v.clone())).collect();
    if n > MAX_RING_PLAYERS {
        return Err(WorstCaseError::SizeGuard {
            n,
            resources: ring_resource_count(n, support.len().max(1)),
            max_players: MAX_RING_PLAYERS,
        });
    }
    check_feasible(n, w, k, theta)?;
    let mut resources = Vec::new();
    let mut ne: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut opt: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (label, value) in &support {
        let (e, x, o) = label.as_tuple();
        for (ordering, players) in (0..n).permutations(n).enumerate() {
            let base = resources.len();
            for offset in 0..n {
                resources.push(Resource {
                    id: format!("L{e}-{x}-{o}/P{ordering}/{offset}"),
                    value: value.clone(),
                });
            }
            for (p, &player) in players.iter().enumerate() {
                ne[player].extend((p..p + e + x).map(|q| base + q % n));
                opt[player].extend((p + e..p + e + x + o).map(|q| base + q % n));
            }
        }
    }
    let actions = ne.into_iter().zip(opt).map(|(a, b)| vec![a, b]).collect();
    let game = ResourceGame::new(resources, actions, w.clone(), None)?;
    Ok(RingGameSpec {
        n,
        support,
        game,
        a_ne: JointAction::uniform(n, 0),
        a_opt: JointAction::uniform(n, 1),
    })
}

/// Visits needed to check every coalition of size at most `k` exhaustively
/// in a game where every player has two actions.
fn equilibrium_check_work(n: usize, k: usize, resources: usize) -> u128 {
    let blocks: u128 = (1..=k)
        .map(|s| {
            let choose = falling_factorial(n as u64, s as u64)
                .to_u128()
                .unwrap_or(u128::MAX)
                / factorial(s);
            choose.saturating_mul(1u128 << s.min(100))
        })
        .fold(0u128, u128::saturating_add);
    blocks.saturating_mul(resources as u128)
}

/// Solves the primal program, builds the ring game from its optimum and
/// checks that the game attains the bound exactly.
pub fn certify_tightness(
    n: usize,
    w: &WelfareCurve,
    k: usize,
) -> Result<(TightnessCertificate, RingGameSpec), WorstCaseError> {
    if n > MAX_RING_PLAYERS {
        return Err(WorstCaseError::SizeGuard {
            n,
            resources: ring_resource_count(n, 1),
            max_players: MAX_RING_PLAYERS,
        });
    }
    let report = spoa_bound(n, w, k)?;
    let spec = construct_worst_case(n, w, k, &report.theta)?;
    let game = &spec.game;
    let welfare_ne = game.welfare(&spec.a_ne)?;
    let welfare_opt = game.welfare(&spec.a_opt)?;

    let copies = Rational::from_integer(BigInt::from(n as u128 * factorial(n)));
    let expected_ne = report.theta.equilibrium_welfare(w) * &copies;
    let expected_opt = report.theta.optimal_welfare(w) * &copies;
    if welfare_ne != expected_ne || welfare_opt != expected_opt {
        return Err(WorstCaseError::CheckFailed(format!(
            "welfare identities: got {}/{}, expected {}/{}",
            exact_string(&welfare_ne),
            exact_string(&welfare_opt),
            exact_string(&expected_ne),
            exact_string(&expected_opt)
        )));
    }
    if game.label_resources(&spec.a_ne, &spec.a_opt)? != report.theta.scaled(&copies) {
        return Err(WorstCaseError::CheckFailed(
            "labels of the constructed game differ from n·n!·θ".into(),
        ));
    }
    if welfare_opt.is_zero() {
        return Err(WorstCaseError::CheckFailed(
            "optimal welfare of the construction is zero".into(),
        ));
    }
    let constructed_ratio = &welfare_ne / &welfare_opt;
    let bound = Rational::one() / &report.primal_value;
    if constructed_ratio != bound {
        return Err(WorstCaseError::CheckFailed(format!(
            "ratio {} differs from 1/P* = {}",
            exact_string(&constructed_ratio),
            exact_string(&bound)
        )));
    }
    let equilibrium_verified =
        if equilibrium_check_work(n, k, game.resources().len()) <= EQUILIBRIUM_CHECK_BUDGET {
            if let crate::games::Verdict::Improvable(d) = game.is_k_strong_ne(&spec.a_ne, k)? {
                return Err(WorstCaseError::CheckFailed(format!(
                    "equilibrium action is improvable by coalition {:?}",
                    d.coalition
                )));
            }
            true
        } else {
            false
        };
    let certificate = TightnessCertificate {
        n,
        k,
        lp_value: report.primal_value,
        constructed_ratio,
        welfare_ne,
        welfare_opt,
        resources: game.resources().len(),
        equilibrium_verified,
    };
    Ok((certificate, spec))
}
