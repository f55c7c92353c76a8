//! Concrete resource allocation games and brute-force oracles.
//!
//! A game assigns each player a list of actions, each a set of resources.
//! Welfare sums `v_r·w(load)` over resources; agents maximise the same sum
//! with the utility rule `u` in place of `w` when one is given.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use itertools::Itertools;
use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bounds::{LabelVector, UtilityRule, WelfareCurve};
use crate::combinatorics::{falling_factorial, index_set, Label};
use crate::error::GameError;
use crate::rational::{exact_string, parse_rational, Rational};

pub const DEFAULT_STATE_CAP: u128 = 10_000_000;
pub const DEFAULT_PERMUTATION_CAP: u128 = 1_000_000;

/// Limits on exhaustive enumeration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BruteForceCaps {
    /// Joint actions visited by `enumerate_ksne` and `brute_force_spoa`.
    pub states: u128,
    /// Ordered coalitions visited by `deviation_sum_oracle`.
    pub permutations: u128,
}

impl Default for BruteForceCaps {
    fn default() -> Self {
        Self {
            states: DEFAULT_STATE_CAP,
            permutations: DEFAULT_PERMUTATION_CAP,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Resource {
    pub id: String,
    pub value: Rational,
}

/// One action index per player.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct JointAction(pub Vec<usize>);

impl JointAction {
    pub fn uniform(players: usize, action: usize) -> Self {
        Self(vec![action; players])
    }

    pub fn players(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResourceGame {
    resources: Vec<Resource>,
    /// `actions[i][a]` lists resource indices in increasing order.
    actions: Vec<Vec<Vec<usize>>>,
    welfare: WelfareCurve,
    utility: Option<UtilityRule>,
}

/// A coalition together with a joint block that strictly improves the objective.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Deviation {
    pub coalition: Vec<usize>,
    pub block: Vec<usize>,
    pub before: Rational,
    pub after: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Stable,
    Improvable(Deviation),
}

impl Verdict {
    pub fn is_stable(&self) -> bool {
        matches!(self, Verdict::Stable)
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Verdict::Stable => serde_json::json!({ "equilibrium": true }),
            Verdict::Improvable(d) => serde_json::json!({
                "equilibrium": false,
                "witness": {
                    "coalition": d.coalition,
                    "block": d.block,
                    "objective_before": exact_string(&d.before),
                    "objective_after": exact_string(&d.after),
                }
            }),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DynamicsMode {
    Deterministic,
    Asynchronous,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DynamicsStep {
    pub coalition: Vec<usize>,
    pub old_objective: Rational,
    pub new_objective: Rational,
    pub action: JointAction,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DynamicsTrace {
    pub initial: JointAction,
    pub steps: Vec<DynamicsStep>,
    pub final_action: JointAction,
    pub final_welfare: Rational,
    pub mode: DynamicsMode,
    pub seed: Option<u64>,
}

#[derive(Serialize)]
struct StepJson<'a> {
    coalition: &'a [usize],
    old_objective: String,
    new_objective: String,
    action: &'a JointAction,
}

#[derive(Serialize)]
struct TraceJson<'a> {
    mode: DynamicsMode,
    seed: Option<u64>,
    initial: &'a JointAction,
    steps: Vec<StepJson<'a>>,
    #[serde(rename = "final")]
    final_action: &'a JointAction,
    final_welfare: String,
}

impl DynamicsTrace {
    pub fn to_json(&self) -> serde_json::Value {
        let trace = TraceJson {
            mode: self.mode,
            seed: self.seed,
            initial: &self.initial,
            steps: self
                .steps
                .iter()
                .map(|s| StepJson {
                    coalition: &s.coalition,
                    old_objective: exact_string(&s.old_objective),
                    new_objective: exact_string(&s.new_objective),
                    action: &s.action,
                })
                .collect(),
            final_action: &self.final_action,
            final_welfare: exact_string(&self.final_welfare),
        };
        serde_json::to_value(trace).expect("trace serialises")
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ResourceFile {
    id: String,
    value: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlayerFile {
    actions: Vec<Vec<String>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GameFile {
    resources: Vec<ResourceFile>,
    players: Vec<PlayerFile>,
    welfare: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    utility: Option<Vec<String>>,
}

fn invalid(path: impl Into<String>, message: impl Into<String>) -> GameError {
    GameError::Invalid {
        path: path.into(),
        message: message.into(),
    }
}

fn parse_values(values: &[String], field: &str) -> Result<Vec<Rational>, GameError> {
    values
        .iter()
        .enumerate()
        .map(|(i, s)| {
            parse_rational(s).map_err(|e| invalid(format!("{field}[{i}]"), e.to_string()))
        })
        .collect()
}

impl ResourceGame {
    /// Builds a game from resources and per-player actions given as resource
    /// indices, checking every structural invariant.
    pub fn new(
        resources: Vec<Resource>,
        actions: Vec<Vec<Vec<usize>>>,
        welfare: WelfareCurve,
        utility: Option<UtilityRule>,
    ) -> Result<Self, GameError> {
        let mut ids = HashSet::new();
        for (r, res) in resources.iter().enumerate() {
            if !ids.insert(res.id.as_str()) {
                return Err(invalid(
                    format!("resources[{r}].id"),
                    format!("duplicate id {:?}", res.id),
                ));
            }
            if res.value.is_negative() {
                return Err(invalid(
                    format!("resources[{r}].value"),
                    "must be non-negative",
                ));
            }
        }
        if actions.is_empty() {
            return Err(invalid("players", "at least one player is required"));
        }
        let mut sorted = Vec::with_capacity(actions.len());
        for (i, player) in actions.into_iter().enumerate() {
            if player.is_empty() {
                return Err(invalid(
                    format!("players[{i}].actions"),
                    "at least one action is required",
                ));
            }
            let mut own = Vec::with_capacity(player.len());
            for (a, mut set) in player.into_iter().enumerate() {
                set.sort_unstable();
                if let Some(&r) = set.iter().find(|&&r| r >= resources.len()) {
                    return Err(invalid(
                        format!("players[{i}].actions[{a}]"),
                        format!("unknown resource {r}"),
                    ));
                }
                if set.windows(2).any(|p| p[0] == p[1]) {
                    return Err(invalid(
                        format!("players[{i}].actions[{a}]"),
                        "repeated resource",
                    ));
                }
                own.push(set);
            }
            sorted.push(own);
        }
        let n = sorted.len();
        if welfare.players() != n {
            return Err(invalid(
                "welfare",
                format!(
                    "needs {} entries for {n} players, got {}",
                    n + 1,
                    welfare.players() + 1
                ),
            ));
        }
        if let Some(u) = &utility {
            if u.players() != n {
                return Err(invalid(
                    "utility",
                    format!(
                        "needs {} entries for {n} players, got {}",
                        n + 1,
                        u.players() + 1
                    ),
                ));
            }
        }
        Ok(Self {
            resources,
            actions: sorted,
            welfare,
            utility,
        })
    }

    pub fn from_json_str(text: &str) -> Result<Self, GameError> {
        let file: GameFile =
            serde_json::from_str(text).map_err(|e| GameError::Format(e.to_string()))?;
        let mut index = HashMap::new();
        let mut resources = Vec::with_capacity(file.resources.len());
        for (r, res) in file.resources.iter().enumerate() {
            let value = parse_rational(&res.value)
                .map_err(|e| invalid(format!("resources[{r}].value"), e.to_string()))?;
            if index.insert(res.id.clone(), r).is_some() {
                return Err(invalid(
                    format!("resources[{r}].id"),
                    format!("duplicate id {:?}", res.id),
                ));
            }
            resources.push(Resource {
                id: res.id.clone(),
                value,
            });
        }
        let mut actions = Vec::with_capacity(file.players.len());
        for (i, player) in file.players.iter().enumerate() {
            let mut own = Vec::with_capacity(player.actions.len());
            for (a, set) in player.actions.iter().enumerate() {
                let members = set
                    .iter()
                    .enumerate()
                    .map(|(j, id)| {
                        index.get(id).copied().ok_or_else(|| {
                            invalid(
                                format!("players[{i}].actions[{a}][{j}]"),
                                format!("unknown resource id {id:?}"),
                            )
                        })
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                own.push(members);
            }
            actions.push(own);
        }
        let welfare = WelfareCurve::new(parse_values(&file.welfare, "welfare")?)
            .map_err(|e| invalid("welfare", e.to_string()))?;
        let utility = match &file.utility {
            Some(values) => Some(
                UtilityRule::new(parse_values(values, "utility")?)
                    .map_err(|e| invalid("utility", e.to_string()))?,
            ),
            None => None,
        };
        Self::new(resources, actions, welfare, utility)
    }

    pub fn load(path: &Path) -> Result<Self, GameError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| GameError::Format(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let file = GameFile {
            resources: self
                .resources
                .iter()
                .map(|r| ResourceFile {
                    id: r.id.clone(),
                    value: exact_string(&r.value),
                })
                .collect(),
            players: self
                .actions
                .iter()
                .map(|player| PlayerFile {
                    actions: player
                        .iter()
                        .map(|set| set.iter().map(|&r| self.resources[r].id.clone()).collect())
                        .collect(),
                })
                .collect(),
            welfare: self.welfare.values().iter().map(exact_string).collect(),
            utility: self
                .utility
                .as_ref()
                .map(|u| u.values().iter().map(exact_string).collect()),
        };
        serde_json::to_value(file).expect("game serialises")
    }

    pub fn players(&self) -> usize {
        self.actions.len()
    }

    pub fn resources(&self) -> &[Resource] {
        &self.resources
    }

    /// Resource indices of every action of `player`.
    pub fn actions(&self, player: usize) -> &[Vec<usize>] {
        &self.actions[player]
    }

    pub fn welfare_curve(&self) -> &WelfareCurve {
        &self.welfare
    }

    pub fn utility_rule(&self) -> Option<&UtilityRule> {
        self.utility.as_ref()
    }

    /// Number of joint actions.
    pub fn joint_action_count(&self) -> u128 {
        self.actions
            .iter()
            .map(|a| a.len() as u128)
            .try_fold(1u128, |acc, m| acc.checked_mul(m))
            .unwrap_or(u128::MAX)
    }

    pub fn validate(&self, a: &JointAction) -> Result<(), GameError> {
        if a.players() != self.players() {
            return Err(GameError::ActionLength {
                got: a.players(),
                players: self.players(),
            });
        }
        for (player, (&action, own)) in a.0.iter().zip(&self.actions).enumerate() {
            if action >= own.len() {
                return Err(GameError::ActionIndex {
                    player,
                    action,
                    available: own.len(),
                });
            }
        }
        Ok(())
    }

    fn check_k(&self, k: usize) -> Result<(), GameError> {
        if k == 0 || k > self.players() {
            return Err(GameError::CoalitionSize {
                k,
                n: self.players(),
            });
        }
        Ok(())
    }

    /// Number of players using each resource.
    pub fn loads(&self, a: &JointAction) -> Vec<usize> {
        let mut loads = vec![0; self.resources.len()];
        for (own, &action) in self.actions.iter().zip(&a.0) {
            for &r in &own[action] {
                loads[r] += 1;
            }
        }
        loads
    }

    fn sum_with(&self, loads: &[usize], f: &[Rational]) -> Rational {
        self.resources
            .iter()
            .zip(loads)
            .filter(|(_, &l)| l > 0)
            .map(|(r, &l)| &r.value * &f[l])
            .sum()
    }

    fn objective_values(&self) -> &[Rational] {
        match &self.utility {
            Some(u) => u.values(),
            None => self.welfare.values(),
        }
    }

    /// `W(a) = Σ_r v_r·w(|a|_r)`.
    pub fn welfare(&self, a: &JointAction) -> Result<Rational, GameError> {
        self.validate(a)?;
        Ok(self.sum_with(&self.loads(a), self.welfare.values()))
    }

    /// `U(a) = Σ_r v_r·u(|a|_r)`, equal to welfare without a utility rule.
    pub fn objective(&self, a: &JointAction) -> Result<Rational, GameError> {
        self.validate(a)?;
        Ok(self.sum_with(&self.loads(a), self.objective_values()))
    }

    fn check_coalition(&self, coalition: &[usize]) -> Result<(), GameError> {
        let n = self.players();
        let distinct: HashSet<_> = coalition.iter().collect();
        if coalition.is_empty()
            || distinct.len() != coalition.len()
            || coalition.iter().any(|&i| i >= n)
        {
            return Err(GameError::Coalition { players: n });
        }
        Ok(())
    }

    /// Best block for `coalition` with everyone else fixed: the current block
    /// and its objective, then the lexicographically first maximiser and its
    /// objective.
    fn best_block(
        &self,
        a: &JointAction,
        coalition: &[usize],
    ) -> (Vec<usize>, Rational, Vec<usize>, Rational) {
        let f = self.objective_values();
        let mut base = self.loads(a);
        for &i in coalition {
            for &r in &self.actions[i][a.0[i]] {
                base[r] -= 1;
            }
        }
        let current: Vec<usize> = coalition.iter().map(|&i| a.0[i]).collect();
        let mut loads = base.clone();
        let mut evaluate = |block: &[usize]| {
            loads.copy_from_slice(&base);
            for (&i, &action) in coalition.iter().zip(block) {
                for &r in &self.actions[i][action] {
                    loads[r] += 1;
                }
            }
            self.sum_with(&loads, f)
        };
        let current_value = evaluate(&current);
        let mut best: Option<(Vec<usize>, Rational)> = None;
        for block in coalition
            .iter()
            .map(|&i| 0..self.actions[i].len())
            .multi_cartesian_product()
        {
            let value = evaluate(&block);
            if best.as_ref().map_or(true, |(_, b)| value > *b) {
                best = Some((block, value));
            }
        }
        let (block, value) = best.expect("every player has an action");
        (current, current_value, block, value)
    }

    /// Replaces the coalition's block with a maximiser of the objective,
    /// keeping the current block when it is already optimal.
    pub fn coalition_best_response(
        &self,
        a: &JointAction,
        coalition: &[usize],
    ) -> Result<JointAction, GameError> {
        self.validate(a)?;
        self.check_coalition(coalition)?;
        let (_, current_value, block, value) = self.best_block(a, coalition);
        if value <= current_value {
            return Ok(a.clone());
        }
        let mut next = a.clone();
        for (&i, &action) in coalition.iter().zip(&block) {
            next.0[i] = action;
        }
        Ok(next)
    }

    /// All coalitions of size `1..=k`, by size and then member indices.
    pub fn coalitions(&self, k: usize) -> Vec<Vec<usize>> {
        (1..=k.min(self.players()))
            .flat_map(|s| (0..self.players()).combinations(s))
            .collect()
    }

    fn verdict_unchecked(&self, a: &JointAction, k: usize) -> Verdict {
        for coalition in (1..=k).flat_map(|s| (0..self.players()).combinations(s)) {
            let (_, before, block, after) = self.best_block(a, &coalition);
            if after > before {
                return Verdict::Improvable(Deviation {
                    coalition,
                    block,
                    before,
                    after,
                });
            }
        }
        Verdict::Stable
    }

    /// Whether no coalition of at most `k` players can strictly raise the
    /// objective; otherwise the first such coalition with its best block.
    pub fn is_k_strong_ne(&self, a: &JointAction, k: usize) -> Result<Verdict, GameError> {
        self.validate(a)?;
        self.check_k(k)?;
        Ok(self.verdict_unchecked(a, k))
    }

    fn revise(&self, a: &mut JointAction, coalition: &[usize]) -> Option<DynamicsStep> {
        let (_, before, block, after) = self.best_block(a, coalition);
        if after <= before {
            return None;
        }
        for (&i, &action) in coalition.iter().zip(&block) {
            a.0[i] = action;
        }
        Some(DynamicsStep {
            coalition: coalition.to_vec(),
            old_objective: before,
            new_objective: after,
            action: a.clone(),
        })
    }

    /// Coalition best-response dynamics from `start`.
    ///
    /// Deterministic mode sweeps coalitions in order until a full round makes
    /// no change. Asynchronous mode draws coalitions uniformly with a ChaCha8
    /// generator seeded by `seed` (0 when absent) and stops once an
    /// equilibrium check, run after every `|C|` draws, succeeds.
    pub fn run_dynamics(
        &self,
        start: &JointAction,
        k: usize,
        mode: DynamicsMode,
        seed: Option<u64>,
    ) -> Result<DynamicsTrace, GameError> {
        self.validate(start)?;
        self.check_k(k)?;
        let coalitions = self.coalitions(k);
        let mut a = start.clone();
        let mut steps = Vec::new();
        let seed = match mode {
            DynamicsMode::Deterministic => {
                loop {
                    let before = steps.len();
                    for c in &coalitions {
                        steps.extend(self.revise(&mut a, c));
                    }
                    if steps.len() == before {
                        break;
                    }
                }
                None
            }
            DynamicsMode::Asynchronous => {
                let seed = seed.unwrap_or(0);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                while !self.verdict_unchecked(&a, k).is_stable() {
                    for _ in 0..coalitions.len() {
                        let c = &coalitions[rng.random_range(0..coalitions.len())];
                        steps.extend(self.revise(&mut a, c));
                    }
                }
                Some(seed)
            }
        };
        let final_welfare = self.sum_with(&self.loads(&a), self.welfare.values());
        Ok(DynamicsTrace {
            initial: start.clone(),
            steps,
            final_action: a,
            final_welfare,
            mode,
            seed,
        })
    }

    fn joint_action_at(&self, mut index: u128) -> JointAction {
        let mut out = vec![0; self.players()];
        for (slot, own) in out.iter_mut().zip(&self.actions).rev() {
            let m = own.len() as u128;
            *slot = (index % m) as usize;
            index /= m;
        }
        JointAction(out)
    }

    fn all_joint_actions(
        &self,
        cap: u128,
    ) -> Result<impl Iterator<Item = JointAction> + '_, GameError> {
        let total = self.joint_action_count();
        if total > cap {
            return Err(GameError::TooLarge {
                what: "joint actions",
                required: total,
                cap,
            });
        }
        Ok((0..total).map(move |i| self.joint_action_at(i)))
    }

    /// Every k-strong Nash equilibrium in lexicographic order.
    pub fn enumerate_ksne(
        &self,
        k: usize,
        caps: &BruteForceCaps,
    ) -> Result<Vec<JointAction>, GameError> {
        self.check_k(k)?;
        let all: Vec<JointAction> = self.all_joint_actions(caps.states)?.collect();
        #[cfg(feature = "parallel")]
        let stable = {
            use rayon::prelude::*;
            all.into_par_iter()
                .filter(|a| self.verdict_unchecked(a, k).is_stable())
                .collect()
        };
        #[cfg(not(feature = "parallel"))]
        let stable = all
            .into_iter()
            .filter(|a| self.verdict_unchecked(a, k).is_stable())
            .collect();
        Ok(stable)
    }

    /// Worst equilibrium welfare over optimal welfare, or 1 when the optimum is 0.
    pub fn brute_force_spoa(&self, k: usize, caps: &BruteForceCaps) -> Result<Rational, GameError> {
        let equilibria = self.enumerate_ksne(k, caps)?;
        let w = self.welfare.values();
        let optimum = self
            .all_joint_actions(caps.states)?
            .map(|a| self.sum_with(&self.loads(&a), w))
            .max()
            .expect("joint action space is non-empty");
        if optimum.is_zero() {
            return Ok(Rational::one());
        }
        let worst = equilibria
            .iter()
            .map(|a| self.sum_with(&self.loads(a), w))
            .min()
            .expect("a k-strong equilibrium always exists");
        Ok(worst / optimum)
    }

    /// Mass `θ(e,x,o)` of resources used by `e` players only in `a_ne`, `x`
    /// in both and `o` only in `a_opt`. Unused resources are skipped.
    pub fn label_resources(
        &self,
        a_ne: &JointAction,
        a_opt: &JointAction,
    ) -> Result<LabelVector, GameError> {
        self.validate(a_ne)?;
        self.validate(a_opt)?;
        let index = index_set(self.players()).map_err(|e| invalid("players", e.to_string()))?;
        let mut theta = LabelVector::zeros(index);
        let mut counts = vec![(0usize, 0usize, 0usize); self.resources.len()];
        for (i, own) in self.actions.iter().enumerate() {
            let ne = &own[a_ne.0[i]];
            let opt = &own[a_opt.0[i]];
            for &r in ne {
                if opt.binary_search(&r).is_ok() {
                    counts[r].1 += 1;
                } else {
                    counts[r].0 += 1;
                }
            }
            for &r in opt {
                if ne.binary_search(&r).is_err() {
                    counts[r].2 += 1;
                }
            }
        }
        for (res, &(e, x, o)) in self.resources.iter().zip(&counts) {
            if e + x + o > 0 {
                theta.add(&Label::new(e, x, o), &res.value);
            }
        }
        Ok(theta)
    }

    /// `Σ_Γ W(a_opt_Γ, a_ne_−Γ)` over all ordered coalitions `Γ` of `zeta`
    /// distinct players.
    pub fn deviation_sum_oracle(
        &self,
        a_ne: &JointAction,
        a_opt: &JointAction,
        zeta: usize,
        caps: &BruteForceCaps,
    ) -> Result<Rational, GameError> {
        self.validate(a_ne)?;
        self.validate(a_opt)?;
        self.check_k(zeta)?;
        let n = self.players();
        let count = falling_factorial(n as u64, zeta as u64)
            .to_u128()
            .unwrap_or(u128::MAX);
        if count > caps.permutations {
            return Err(GameError::TooLarge {
                what: "ordered coalitions",
                required: count,
                cap: caps.permutations,
            });
        }
        let w = self.welfare.values();
        let mut total = Rational::zero();
        for ordered in (0..n).permutations(zeta) {
            let mut a = a_ne.clone();
            for &i in &ordered {
                a.0[i] = a_opt.0[i];
            }
            total += self.sum_with(&self.loads(&a), w);
        }
        Ok(total)
    }
}

/// The ring game on `n` players: resources `r_1..r_n, s_1..s_n` of value 1,
/// player `i` choosing between `{r_i}` and `{r_{i+1}, s_i}`.
pub fn ring_game(n: usize, welfare: WelfareCurve) -> Result<ResourceGame, GameError> {
    let one = Rational::from_integer(BigInt::one());
    let resources = (1..=n)
        .map(|i| format!("r{i}"))
        .chain((1..=n).map(|i| format!("s{i}")))
        .map(|id| Resource {
            id,
            value: one.clone(),
        })
        .collect();
    let actions = (0..n)
        .map(|i| vec![vec![i], vec![(i + 1) % n, n + i]])
        .collect();
    ResourceGame::new(resources, actions, welfare, None)
}
