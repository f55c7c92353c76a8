//! The two bound programs.
//!
//! The primal program maximises optimal welfare over label masses `θ` subject
//! to one aggregated equilibrium inequality per coalition size; its value `P*`
//! gives the tight k-strong price of anarchy `1/P*`. The design program
//! minimises `μ` over per-coalition-size utility rules `u_ζ`; `1/Q*` is an
//! upper bound on what any utility design can achieve.

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::combinatorics::{deviation_terms, falling_factorial, index_set, IndexSet, Label};
use crate::error::{BoundsError, CurveError, ParseError};
use crate::lp::{self, LinearProgram, LpSolution, Relation, Sense};
use crate::rational::{exact_string, parse_rational, ExactValue, Rational};

/// System welfare per resource as a function of its load, `w(0..=n)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WelfareCurve {
    values: Vec<Rational>,
}

impl WelfareCurve {
    pub fn new(values: Vec<Rational>) -> Result<Self, CurveError> {
        if values.len() < 2 {
            return Err(CurveError::TooShort(values.len()));
        }
        if !values[0].is_zero() {
            return Err(CurveError::NonZeroOrigin(exact_string(&values[0])));
        }
        if let Some((index, v)) = values
            .iter()
            .enumerate()
            .skip(1)
            .find(|(_, v)| !v.is_positive())
        {
            return Err(CurveError::NonPositive {
                index,
                value: exact_string(v),
            });
        }
        Ok(Self { values })
    }

    /// Covering welfare: `w(j) = 1` for `j >= 1`.
    pub fn indicator(n: usize) -> Self {
        let mut values = vec![Rational::one(); n + 1];
        values[0] = Rational::zero();
        Self { values }
    }

    /// `w(j) = j`.
    pub fn identity(n: usize) -> Self {
        Self {
            values: (0..=n)
                .map(|j| Rational::from_integer(BigInt::from(j)))
                .collect(),
        }
    }

    /// `indicator`, `identity`, or comma-separated exact values of length `n+1`.
    pub fn parse(spec: &str, n: usize) -> Result<Self, ParseError> {
        match spec.trim() {
            "indicator" => Ok(Self::indicator(n)),
            "identity" => Ok(Self::identity(n)),
            list => {
                let values = list
                    .split(',')
                    .map(parse_rational)
                    .collect::<Result<Vec<_>, _>>()?;
                if values.len() != n + 1 {
                    return Err(ParseError::Welfare(format!(
                        "{} values given, expected n+1 = {}",
                        values.len(),
                        n + 1
                    )));
                }
                Self::new(values).map_err(|e| ParseError::Welfare(e.to_string()))
            }
        }
    }

    pub fn players(&self) -> usize {
        self.values.len() - 1
    }

    pub fn at(&self, load: usize) -> &Rational {
        &self.values[load]
    }

    pub fn values(&self) -> &[Rational] {
        &self.values
    }

    pub fn require_players(&self, n: usize) -> Result<(), CurveError> {
        if self.players() != n {
            return Err(CurveError::Length {
                got: self.values.len(),
                expected: n + 1,
                players: n,
            });
        }
        Ok(())
    }
}

/// Objective the agents maximise per resource, `u(0..=n)` with `u(0) = 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UtilityRule {
    values: Vec<Rational>,
}

impl UtilityRule {
    pub fn new(values: Vec<Rational>) -> Result<Self, CurveError> {
        if values.len() < 2 {
            return Err(CurveError::TooShort(values.len()));
        }
        if !values[0].is_zero() {
            return Err(CurveError::NonZeroOrigin(exact_string(&values[0])));
        }
        if let Some((index, v)) = values.iter().enumerate().find(|(_, v)| v.is_negative()) {
            return Err(CurveError::Negative {
                index,
                value: exact_string(v),
            });
        }
        Ok(Self { values })
    }

    pub fn players(&self) -> usize {
        self.values.len() - 1
    }

    pub fn at(&self, load: usize) -> &Rational {
        &self.values[load]
    }

    pub fn values(&self) -> &[Rational] {
        &self.values
    }

    pub fn scaled(&self, factor: &Rational) -> Self {
        Self {
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }
}

impl From<&WelfareCurve> for UtilityRule {
    fn from(w: &WelfareCurve) -> Self {
        Self {
            values: w.values.clone(),
        }
    }
}

/// Non-negative mass per label.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelVector {
    index: IndexSet,
    entries: Vec<Rational>,
}

impl LabelVector {
    pub fn zeros(index: IndexSet) -> Self {
        let entries = vec![Rational::zero(); index.len()];
        Self { index, entries }
    }

    pub fn from_entries(index: IndexSet, entries: Vec<Rational>) -> Result<Self, BoundsError> {
        if entries.len() != index.len() || entries.iter().any(|v| v.is_negative()) {
            return Err(BoundsError::Lp(crate::error::LpError::Malformed(
                "label vector must be non-negative with one entry per label".into(),
            )));
        }
        Ok(Self { index, entries })
    }

    pub fn index_set(&self) -> &IndexSet {
        &self.index
    }

    pub fn players(&self) -> usize {
        self.index.players()
    }

    pub fn entries(&self) -> &[Rational] {
        &self.entries
    }

    pub fn get(&self, label: &Label) -> Rational {
        self.index
            .position(label)
            .map(|i| self.entries[i].clone())
            .unwrap_or_else(Rational::zero)
    }

    pub fn add(&mut self, label: &Label, amount: &Rational) {
        let i = self.index.position(label).expect("label outside index set");
        self.entries[i] += amount;
    }

    /// Labels with non-zero mass, in index order.
    pub fn support(&self) -> impl Iterator<Item = (Label, &Rational)> {
        self.index
            .iter()
            .zip(&self.entries)
            .filter(|(_, v)| !v.is_zero())
            .map(|(l, v)| (*l, v))
    }

    pub fn scaled(&self, factor: &Rational) -> Self {
        Self {
            index: self.index.clone(),
            entries: self.entries.iter().map(|v| v * factor).collect(),
        }
    }

    /// `Σ θ(e,x,o)·w(e+x)`.
    pub fn equilibrium_welfare(&self, w: &WelfareCurve) -> Rational {
        self.support().map(|(l, v)| v * w.at(l.eq_load())).sum()
    }

    /// `Σ θ(e,x,o)·w(o+x)`.
    pub fn optimal_welfare(&self, w: &WelfareCurve) -> Rational {
        self.support().map(|(l, v)| v * w.at(l.opt_load())).sum()
    }

    /// `Σ θ(e,x,o)·Σ_{α,β} B(α,β)·w(e+x+β-α)`: total welfare over all ordered
    /// size-`zeta` coalitions switching from equilibrium to optimal actions.
    pub fn deviation_welfare(&self, w: &WelfareCurve, zeta: usize) -> Rational {
        let n = self.players();
        self.support()
            .map(|(l, v)| {
                deviation_terms(l, zeta, n)
                    .into_iter()
                    .map(|(load, count)| w.at(load) * Rational::from_integer(BigInt::from(count)))
                    .sum::<Rational>()
                    * v
            })
            .sum()
    }
}

/// Deviation counts grouped by resulting load, for every label and
/// coalition size up to `max_zeta`.
#[derive(Clone, Debug)]
pub struct DeviationTable {
    n: usize,
    index: IndexSet,
    /// `[label][zeta - 1]` -> `(load after deviation, ordered coalitions)`.
    terms: Vec<Vec<Vec<(usize, BigInt)>>>,
    permutations: Vec<BigInt>,
}

impl DeviationTable {
    pub fn new(n: usize, max_zeta: usize) -> Result<Self, BoundsError> {
        if max_zeta == 0 || max_zeta > n {
            return Err(BoundsError::CoalitionSize { k: max_zeta, n });
        }
        let index = index_set(n)?;
        let terms = index
            .iter()
            .map(|label| {
                (1..=max_zeta)
                    .map(|zeta| {
                        let mut by_load: Vec<BigUint> = vec![BigUint::zero(); n + 1];
                        for (load, count) in deviation_terms(*label, zeta, n) {
                            by_load[load] += count;
                        }
                        by_load
                            .into_iter()
                            .enumerate()
                            .filter(|(_, c)| !c.is_zero())
                            .map(|(load, c)| (load, BigInt::from(c)))
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let permutations = (1..=max_zeta)
            .map(|zeta| BigInt::from(falling_factorial(n as u64, zeta as u64)))
            .collect();
        Ok(Self {
            n,
            index,
            terms,
            permutations,
        })
    }

    pub fn index_set(&self) -> &IndexSet {
        &self.index
    }

    pub fn max_zeta(&self) -> usize {
        self.permutations.len()
    }

    /// `n!/(n-ζ)!`.
    pub fn permutations(&self, zeta: usize) -> &BigInt {
        &self.permutations[zeta - 1]
    }

    pub fn terms(&self, label_index: usize, zeta: usize) -> &[(usize, BigInt)] {
        &self.terms[label_index][zeta - 1]
    }

    /// `Σ_{α,β} B(α,β)·f(e+x+β-α)` for the label at `label_index`.
    pub fn deviation_weight(&self, label_index: usize, zeta: usize, f: &[Rational]) -> Rational {
        self.terms(label_index, zeta)
            .iter()
            .map(|(load, count)| &f[*load] * count)
            .sum()
    }

    /// Coefficient of `θ(label)` in the size-`zeta` equilibrium inequality of
    /// the primal program, with `f` in place of the welfare curve.
    pub fn equilibrium_coefficient(
        &self,
        label_index: usize,
        zeta: usize,
        f: &[Rational],
    ) -> Rational {
        let label = self.index.labels()[label_index];
        &f[label.eq_load()] * self.permutations(zeta) - self.deviation_weight(label_index, zeta, f)
    }

    /// Coefficient of `u_ζ(load)` in the design-program row of a label.
    pub fn utility_coefficient(&self, label_index: usize, zeta: usize, load: usize) -> BigInt {
        let label = self.index.labels()[label_index];
        let mut c = if label.eq_load() == load {
            self.permutations(zeta).clone()
        } else {
            BigInt::zero()
        };
        if let Some((_, count)) = self
            .terms(label_index, zeta)
            .iter()
            .find(|(l, _)| *l == load)
        {
            c -= count;
        }
        c
    }

    pub fn players(&self) -> usize {
        self.n
    }
}

fn check_k(n: usize, k: usize) -> Result<(), BoundsError> {
    if k == 0 || k > n {
        return Err(BoundsError::CoalitionSize { k, n });
    }
    Ok(())
}

fn check_inputs(n: usize, w: &WelfareCurve, k: usize) -> Result<(), BoundsError> {
    if n == 0 {
        return Err(crate::error::CombinatoricsError::ZeroPlayers.into());
    }
    check_k(n, k)?;
    w.require_players(n)?;
    Ok(())
}

/// Primal program: variables `θ` indexed by `index_set(n)`.
pub fn build_primal(n: usize, w: &WelfareCurve, k: usize) -> Result<LinearProgram, BoundsError> {
    check_inputs(n, w, k)?;
    let table = DeviationTable::new(n, k)?;
    Ok(primal_from_table(&table, w, k))
}

pub(crate) fn primal_from_table(
    table: &DeviationTable,
    w: &WelfareCurve,
    k: usize,
) -> LinearProgram {
    let labels = table.index_set().labels();
    let objective = labels.iter().map(|l| w.at(l.opt_load()).clone()).collect();
    let mut lp = LinearProgram::new(labels.len(), Sense::Maximize).with_objective(objective);
    for zeta in 1..=k {
        let row = (0..labels.len())
            .map(|i| table.equilibrium_coefficient(i, zeta, w.values()))
            .collect();
        lp.add_constraint(row, Relation::Ge, Rational::zero());
    }
    let normalisation = labels.iter().map(|l| w.at(l.eq_load()).clone()).collect();
    lp.add_constraint(normalisation, Relation::Eq, Rational::one());
    lp
}

/// Variable layout of the design program.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DesignLayout {
    pub n: usize,
    pub k: usize,
}

impl DesignLayout {
    pub const MU: usize = 0;

    pub fn num_vars(&self) -> usize {
        1 + self.n * self.k
    }

    /// Column of `u_ζ(load)` for `load` in `1..=n`.
    pub fn utility(&self, zeta: usize, load: usize) -> usize {
        1 + (zeta - 1) * self.n + (load - 1)
    }
}

/// Design program: variable 0 is `μ`, then `u_ζ(1..=n)` for each `ζ` in `1..=k`
/// (see [`DesignLayout`]); one `≤ 0` row per label.
pub fn build_design(n: usize, w: &WelfareCurve, k: usize) -> Result<LinearProgram, BoundsError> {
    check_inputs(n, w, k)?;
    let table = DeviationTable::new(n, k)?;
    Ok(design_from_table(&table, w, k))
}

fn design_from_table(table: &DeviationTable, w: &WelfareCurve, k: usize) -> LinearProgram {
    let n = table.players();
    let layout = DesignLayout { n, k };
    let mut objective = vec![Rational::zero(); layout.num_vars()];
    objective[DesignLayout::MU] = Rational::one();
    let mut lp = LinearProgram::new(layout.num_vars(), Sense::Minimize).with_objective(objective);
    for (i, label) in table.index_set().iter().enumerate() {
        let mut row = vec![Rational::zero(); layout.num_vars()];
        row[DesignLayout::MU] = -w.at(label.eq_load());
        for zeta in 1..=k {
            for load in 1..=n {
                let c = table.utility_coefficient(i, zeta, load);
                if !c.is_zero() {
                    row[layout.utility(zeta, load)] = Rational::from_integer(c);
                }
            }
        }
        lp.add_constraint(row, Relation::Le, -w.at(label.opt_load()));
    }
    lp
}

/// Design program with every `u_ζ` restricted to `t_ζ·w`: variable 0 is `μ`,
/// variable `ζ` is `t_ζ`. Its value coincides with the primal value.
pub fn build_restricted_design(
    n: usize,
    w: &WelfareCurve,
    k: usize,
) -> Result<LinearProgram, BoundsError> {
    check_inputs(n, w, k)?;
    let table = DeviationTable::new(n, k)?;
    let mut objective = vec![Rational::zero(); k + 1];
    objective[0] = Rational::one();
    let mut lp = LinearProgram::new(k + 1, Sense::Minimize).with_objective(objective);
    for (i, label) in table.index_set().iter().enumerate() {
        let mut row = Vec::with_capacity(k + 1);
        row.push(-w.at(label.eq_load()));
        for zeta in 1..=k {
            row.push(table.equilibrium_coefficient(i, zeta, w.values()));
        }
        lp.add_constraint(row, Relation::Le, -w.at(label.opt_load()));
    }
    Ok(lp)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundMode {
    WelfareSharing,
    OptimalDesign,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundKind {
    Tight,
    UpperBound,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundReport {
    pub n: usize,
    pub k: usize,
    pub mode: BoundMode,
    pub kind: BoundKind,
    /// `P*` or `Q*`.
    pub primal_value: Rational,
    pub spoa: Rational,
    /// Primal optimum for welfare sharing; for design, the worst-case label
    /// masses recovered from the design program's duals.
    pub theta: LabelVector,
    /// One rule per coalition size `1..=k` (design mode only).
    pub utility_rules: Vec<UtilityRule>,
    /// Multipliers of the `k` equilibrium inequalities (welfare-sharing mode).
    pub multipliers: Vec<Rational>,
}

fn unwrap_optimum(solution: LpSolution) -> Result<lp::Optimum, BoundsError> {
    match solution {
        LpSolution::Optimal(opt) => Ok(opt),
        LpSolution::Unbounded(_) => Err(BoundsError::Unbounded),
        LpSolution::Infeasible(_) => Err(BoundsError::Infeasible),
    }
}

/// Tight k-strong price of anarchy `1/P*(n, w, k)` for agents maximising `w`.
pub fn spoa_bound(n: usize, w: &WelfareCurve, k: usize) -> Result<BoundReport, BoundsError> {
    check_inputs(n, w, k)?;
    let table = DeviationTable::new(n, k)?;
    let program = primal_from_table(&table, w, k);
    let opt = unwrap_optimum(lp::solve(&program)?)?;
    if !opt.value.is_positive() {
        return Err(BoundsError::Unbounded);
    }
    let theta = LabelVector::from_entries(table.index_set().clone(), opt.point)?;
    let multipliers = opt.duals[..k].iter().map(|y| -y).collect();
    Ok(BoundReport {
        n,
        k,
        mode: BoundMode::WelfareSharing,
        kind: BoundKind::Tight,
        spoa: opt.value.recip(),
        primal_value: opt.value,
        theta,
        utility_rules: Vec::new(),
        multipliers,
    })
}

/// Upper bound `1/Q*(n, w, k)` on the k-strong price of anarchy achievable by
/// utility design, with the optimising per-size rules.
pub fn design_bound(n: usize, w: &WelfareCurve, k: usize) -> Result<BoundReport, BoundsError> {
    check_inputs(n, w, k)?;
    let table = DeviationTable::new(n, k)?;
    let program = design_from_table(&table, w, k);
    let layout = DesignLayout { n, k };
    let opt = unwrap_optimum(lp::solve(&program)?)?;
    let utility_rules = (1..=k)
        .map(|zeta| {
            let mut values = vec![Rational::zero()];
            values.extend((1..=n).map(|load| opt.point[layout.utility(zeta, load)].clone()));
            UtilityRule::new(values)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let theta = LabelVector::from_entries(
        table.index_set().clone(),
        opt.duals.iter().map(|y| -y).collect(),
    )?;
    Ok(BoundReport {
        n,
        k,
        mode: BoundMode::OptimalDesign,
        kind: BoundKind::UpperBound,
        spoa: opt.value.recip(),
        primal_value: opt.value,
        theta,
        utility_rules,
        multipliers: Vec::new(),
    })
}

/// Value of the restricted design program (`u_ζ ∝ w`).
pub fn restricted_design_value(
    n: usize,
    w: &WelfareCurve,
    k: usize,
) -> Result<Rational, BoundsError> {
    let program = build_restricted_design(n, w, k)?;
    Ok(unwrap_optimum(lp::solve(&program)?)?.value)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CurveRow {
    pub k: usize,
    pub spoa: Rational,
    pub design_spoa: Option<Rational>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CurveTable {
    pub n: usize,
    pub rows: Vec<CurveRow>,
}

/// One row per requested `k`, ascending.
pub fn spoa_curve(
    n: usize,
    w: &WelfareCurve,
    k_values: &[usize],
    include_design: bool,
) -> Result<CurveTable, BoundsError> {
    let mut ks: Vec<usize> = k_values.to_vec();
    ks.sort_unstable();
    ks.dedup();
    for &k in &ks {
        check_inputs(n, w, k)?;
    }
    let row = |k: usize| -> Result<CurveRow, BoundsError> {
        let spoa = spoa_bound(n, w, k)?.spoa;
        let design_spoa = if include_design {
            Some(design_bound(n, w, k)?.spoa)
        } else {
            None
        };
        Ok(CurveRow {
            k,
            spoa,
            design_spoa,
        })
    };
    #[cfg(feature = "parallel")]
    let rows = {
        use rayon::prelude::*;
        ks.par_iter()
            .map(|&k| row(k))
            .collect::<Result<Vec<_>, _>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let rows = ks.iter().map(|&k| row(k)).collect::<Result<Vec<_>, _>>()?;
    Ok(CurveTable { n, rows })
}

#[derive(Serialize, Deserialize)]
struct CurveRowJson {
    k: usize,
    spoa: ExactValue,
    #[serde(skip_serializing_if = "Option::is_none")]
    design_spoa: Option<ExactValue>,
}

#[derive(Serialize, Deserialize)]
struct CurveTableJson {
    n: usize,
    rows: Vec<CurveRowJson>,
}

impl CurveTable {
    /// Header `k,spoa,design_spoa`; cells are exact `p/q` unless `decimal`.
    pub fn to_csv(&self, decimal: bool) -> String {
        let render = |v: &Rational| {
            if decimal {
                crate::rational::decimal_string(v)
            } else {
                exact_string(v)
            }
        };
        let mut out = String::from("k,spoa,design_spoa\n");
        for row in &self.rows {
            let design = row.design_spoa.as_ref().map(render).unwrap_or_default();
            out.push_str(&format!("{},{},{}\n", row.k, render(&row.spoa), design));
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        let table = CurveTableJson {
            n: self.n,
            rows: self
                .rows
                .iter()
                .map(|r| CurveRowJson {
                    k: r.k,
                    spoa: ExactValue::from(&r.spoa),
                    design_spoa: r.design_spoa.as_ref().map(ExactValue::from),
                })
                .collect(),
        };
        serde_json::to_value(table).expect("curve table serialises")
    }
}

#[derive(Serialize)]
struct LabelMass {
    label: [usize; 3],
    value: String,
}

#[derive(Serialize)]
struct UtilityJson {
    zeta: usize,
    values: Vec<String>,
}

#[derive(Serialize)]
struct BoundReportJson {
    n: usize,
    k: usize,
    mode: BoundMode,
    kind: BoundKind,
    primal_value: ExactValue,
    spoa: ExactValue,
    theta: Vec<LabelMass>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    multipliers: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    utility_rules: Vec<UtilityJson>,
}

impl BoundReport {
    /// JSON with exact rationals; `theta` lists only labels with non-zero mass.
    pub fn to_json(&self) -> serde_json::Value {
        let report = BoundReportJson {
            n: self.n,
            k: self.k,
            mode: self.mode,
            kind: self.kind,
            primal_value: ExactValue::from(&self.primal_value),
            spoa: ExactValue::from(&self.spoa),
            theta: self
                .theta
                .support()
                .map(|(l, v)| LabelMass {
                    label: [l.eq_only, l.both, l.opt_only],
                    value: exact_string(v),
                })
                .collect(),
            multipliers: self.multipliers.iter().map(exact_string).collect(),
            utility_rules: self
                .utility_rules
                .iter()
                .enumerate()
                .map(|(i, u)| UtilityJson {
                    zeta: i + 1,
                    values: u.values().iter().map(exact_string).collect(),
                })
                .collect(),
        };
        serde_json::to_value(report).expect("bound report serialises")
    }
}
