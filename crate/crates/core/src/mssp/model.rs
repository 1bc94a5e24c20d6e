//! The clinical-trial planning MILP over a scenario set, with NACs enforced
//! on a chosen list of scenario pairs.
//!
//! Rows are not stored. [`MsspModel::for_each_row`] regenerates them in a
//! fixed order, which keeps models with tens of millions of NAC rows cheap to
//! count and stream to disk.

use std::fmt::{self, Write as _};

use serde::Serialize;

use super::case::CaseStudy;
use crate::error::{Error, Result};
use crate::scenario::ScenarioSet;
use crate::uncertainty::{GradualParameter, Outcome};

/// Model variable. Drug, trial and period indices are 1-based, scenario ids 0-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    /// Trial `(i, j)` starts in period `t` in scenario `s`.
    X { i: u16, j: u16, t: u32, s: u32 },
    /// Trial `(i, j)` is completed by the beginning of period `t`.
    V { i: u16, j: u16, t: u32, s: u32 },
    /// Trial `(i, j)` can be started at the beginning of period `t`.
    Z { i: u16, j: u16, t: u32, s: u32 },
    Cost(u32),
    Revenue(u32),
    FreeRevenue(u32),
    Enpv,
}

impl Var {
    pub fn is_binary(&self) -> bool {
        matches!(self, Var::X { .. } | Var::V { .. } | Var::Z { .. })
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Var::X { i, j, t, s } => write!(f, "X_{i}_{j}_{t}_{s}"),
            Var::V { i, j, t, s } => write!(f, "V_{i}_{j}_{t}_{s}"),
            Var::Z { i, j, t, s } => write!(f, "Z_{i}_{j}_{t}_{s}"),
            Var::Cost(s) => write!(f, "Cst_{s}"),
            Var::Revenue(s) => write!(f, "Rv_{s}"),
            Var::FreeRevenue(s) => write!(f, "FRev_{s}"),
            Var::Enpv => write!(f, "ENPV"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

/// Constraint families, in emission order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum RowGroup {
    Completion,
    AvailabilityFirst,
    AvailabilityFirstRecursion,
    Availability,
    SingleStart,
    Precedence,
    Resource,
    NacFirstPeriod,
    NacConditional,
    Cost,
    Revenue,
    FreeRevenue,
    Enpv,
}

impl RowGroup {
    pub const ALL: [RowGroup; 13] = [
        RowGroup::Completion,
        RowGroup::AvailabilityFirst,
        RowGroup::AvailabilityFirstRecursion,
        RowGroup::Availability,
        RowGroup::SingleStart,
        RowGroup::Precedence,
        RowGroup::Resource,
        RowGroup::NacFirstPeriod,
        RowGroup::NacConditional,
        RowGroup::Cost,
        RowGroup::Revenue,
        RowGroup::FreeRevenue,
        RowGroup::Enpv,
    ];

    pub fn is_nac(self) -> bool {
        matches!(self, RowGroup::NacFirstPeriod | RowGroup::NacConditional)
    }
}

/// One linear row: `sum(coef * var) <sense> rhs`.
#[derive(Clone, Debug)]
pub struct Row {
    pub group: RowGroup,
    /// Empty when rows are visited without names.
    pub name: String,
    pub terms: Vec<(Var, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// A scenario pair with NACs, and the events that separate it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NacPair {
    pub s: usize,
    pub sp: usize,
    /// `(drug, trial)` pairs, 0-based drug and 1-based trial.
    pub differentiators: Vec<(usize, u32)>,
}

#[derive(Clone, Debug)]
pub struct MsspModel {
    case: CaseStudy,
    outcomes: Vec<Vec<Outcome>>,
    probabilities: Vec<f64>,
    pairs: Vec<NacPair>,
}

/// Number of NAC rows for a model: two one-sided rows per pair, drug, trial
/// and period after the first, plus one first-period row per scenario and drug.
pub fn count_nacs(pair_count: u64, drugs: u64, trials: u64, horizon: u64, scenarios: u64) -> u64 {
    pair_count * 2 * drugs * trials * (horizon - 1) + scenarios * drugs
}

fn is_stage_failure(p: &GradualParameter, trials: u32) -> bool {
    GradualParameter::stage_failure(p.id(), trials)
        .map(|sf| (0..=trials).all(|q| sf.blocks_at(q) == p.blocks_at(q)))
        .unwrap_or(false)
        && p.chain_length() == trials
}

/// Builds the model for `set` with NACs on `pairs`.
///
/// Every parameter of the set must be an endogenous stage-failure parameter
/// with one stage per trial of the case study.
pub fn build_model(case: &CaseStudy, set: &ScenarioSet, pairs: &[(usize, usize)]) -> Result<MsspModel> {
    case.validate()?;
    if set.is_empty() {
        return Err(Error::EmptyScenarioSet);
    }
    let trials = case.trial_count() as u32;
    if set.params().len() != case.drugs.len() {
        return Err(Error::Case(format!(
            "{} uncertain parameters for {} drugs",
            set.params().len(),
            case.drugs.len()
        )));
    }
    for p in set.params() {
        if p.is_exogenous() {
            return Err(Error::ExogenousInModel { param: p.id() });
        }
        if !is_stage_failure(p, trials) {
            return Err(Error::Case(format!(
                "parameter {} is not a stage-failure parameter with {trials} stages (one per trial)",
                p.id()
            )));
        }
    }

    let mut nac_pairs = Vec::with_capacity(pairs.len());
    for &(a, b) in pairs {
        let (s, sp) = (a.min(b), a.max(b));
        let psi = set.differentiator_set(s, sp)?;
        nac_pairs.push(NacPair {
            s,
            sp,
            differentiators: psi.events,
        });
    }
    nac_pairs.sort_by_key(|p| (p.s, p.sp));
    if let Some(w) = nac_pairs.windows(2).find(|w| (w[0].s, w[0].sp) == (w[1].s, w[1].sp)) {
        return Err(Error::Case(format!("pair ({}, {}) listed twice", w[0].s, w[0].sp)));
    }

    let outcomes: Vec<Vec<Outcome>> = set.scenarios().iter().map(|s| s.outcomes.clone()).collect();
    let raw: Vec<f64> = outcomes.iter().map(|o| case.scenario_probability(o)).collect();
    let total: f64 = raw.iter().sum();
    let probabilities = raw.iter().map(|p| p / total).collect();

    Ok(MsspModel {
        case: case.clone(),
        outcomes,
        probabilities,
        pairs: nac_pairs,
    })
}

struct Emitter<'f, F> {
    row: Row,
    named: bool,
    sink: &'f mut F,
}

impl<F: FnMut(&Row)> Emitter<'_, F> {
    fn begin(&mut self, group: RowGroup, sense: Sense, rhs: f64, name: fmt::Arguments) {
        self.row.group = group;
        self.row.sense = sense;
        self.row.rhs = rhs;
        self.row.terms.clear();
        self.row.name.clear();
        if self.named {
            let _ = self.row.name.write_fmt(name);
        }
    }

    fn term(&mut self, var: Var, coef: f64) {
        self.row.terms.push((var, coef));
    }

    fn finish(&mut self) {
        (self.sink)(&self.row);
    }
}

impl MsspModel {
    pub fn case(&self) -> &CaseStudy {
        &self.case
    }

    pub fn scenario_count(&self) -> usize {
        self.outcomes.len()
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn pairs(&self) -> &[NacPair] {
        &self.pairs
    }

    fn horizon(&self) -> u32 {
        self.case.horizon
    }

    /// Last period index of `V` and `Z`: the horizon plus the longest trial.
    pub fn extended_horizon(&self) -> u32 {
        self.case.horizon + self.case.max_duration()
    }

    fn drugs(&self) -> usize {
        self.case.drugs.len()
    }

    fn trials(&self) -> usize {
        self.case.trial_count()
    }

    fn tau(&self, i: usize, j: usize) -> u32 {
        self.case.drugs[i].durations[j - 1]
    }

    /// Whether trial `j` (1-based) of drug `i` succeeds in scenario `s`.
    fn passes(&self, s: usize, i: usize, j: usize) -> bool {
        (j as u32) < self.outcomes[s][i]
    }

    fn succeeds(&self, s: usize, i: usize) -> bool {
        self.outcomes[s][i] as usize > self.trials()
    }

    fn x(i: usize, j: usize, t: u32, s: usize) -> Var {
        Var::X {
            i: i as u16 + 1,
            j: j as u16,
            t,
            s: s as u32,
        }
    }

    fn v(i: usize, j: usize, t: u32, s: usize) -> Var {
        Var::V {
            i: i as u16 + 1,
            j: j as u16,
            t,
            s: s as u32,
        }
    }

    fn z(i: usize, j: usize, t: u32, s: usize) -> Var {
        Var::Z {
            i: i as u16 + 1,
            j: j as u16,
            t,
            s: s as u32,
        }
    }

    /// All variables in declaration order.
    pub fn variables(&self) -> Vec<Var> {
        let (n, nd, m) = (self.scenario_count(), self.drugs(), self.trials());
        let (horizon, ext) = (self.horizon(), self.extended_horizon());
        let mut vars = Vec::new();
        for i in 0..nd {
            for j in 1..=m {
                for t in 1..=horizon {
                    vars.extend((0..n).map(|s| Self::x(i, j, t, s)));
                }
            }
        }
        for make in [Self::v, Self::z] {
            for i in 0..nd {
                for j in 1..=m {
                    for t in 1..=ext {
                        vars.extend((0..n).map(|s| make(i, j, t, s)));
                    }
                }
            }
        }
        for s in 0..n as u32 {
            vars.extend([Var::Cost(s), Var::Revenue(s), Var::FreeRevenue(s)]);
        }
        vars.push(Var::Enpv);
        vars
    }

    /// Objective: maximize expected net present value.
    pub fn objective(&self) -> Vec<(Var, f64)> {
        vec![(Var::Enpv, 1.0)]
    }

    /// Visits every row in emission order. Names are only built when `named`.
    pub fn for_each_row<F: FnMut(&Row)>(&self, named: bool, mut sink: F) {
        let mut e = Emitter {
            row: Row {
                group: RowGroup::Completion,
                name: String::new(),
                terms: Vec::new(),
                sense: Sense::Eq,
                rhs: 0.0,
            },
            named,
            sink: &mut sink,
        };
        let (n, nd, m) = (self.scenario_count(), self.drugs(), self.trials());
        let (horizon, ext) = (self.horizon(), self.extended_horizon());
        let in_x = |t: i64| t >= 1 && t <= horizon as i64;

        // V[t] = V[t-1] + X[t - tau]
        for i in 0..nd {
            for j in 1..=m {
                let tau = self.tau(i, j);
                for t in 1..=ext {
                    for s in 0..n {
                        e.begin(RowGroup::Completion, Sense::Eq, 0.0, format_args!("cmp_{}_{j}_{t}_{s}", i + 1));
                        e.term(Self::v(i, j, t, s), 1.0);
                        if t > 1 {
                            e.term(Self::v(i, j, t - 1, s), -1.0);
                        }
                        if in_x(t as i64 - tau as i64) {
                            e.term(Self::x(i, j, t - tau, s), -1.0);
                        }
                        e.finish();
                    }
                }
            }
        }

        // Z[i,1,1] = 1 - X[i,1,1]
        for i in 0..nd {
            for s in 0..n {
                e.begin(RowGroup::AvailabilityFirst, Sense::Eq, 1.0, format_args!("av1_{}_{s}", i + 1));
                e.term(Self::z(i, 1, 1, s), 1.0);
                e.term(Self::x(i, 1, 1, s), 1.0);
                e.finish();
            }
        }

        // Z[i,1,t] = Z[i,1,t-1] - X[i,1,t]
        for i in 0..nd {
            for t in 2..=ext {
                for s in 0..n {
                    e.begin(
                        RowGroup::AvailabilityFirstRecursion,
                        Sense::Eq,
                        0.0,
                        format_args!("av1r_{}_{t}_{s}", i + 1),
                    );
                    e.term(Self::z(i, 1, t, s), 1.0);
                    e.term(Self::z(i, 1, t - 1, s), -1.0);
                    if t <= horizon {
                        e.term(Self::x(i, 1, t, s), 1.0);
                    }
                    e.finish();
                }
            }
        }

        // Z[i,j,t] = Z[i,j,t-1] + X[i,j-1,t-tau] - X[i,j,t]; the inflow only
        // exists when trial j-1 succeeds in the scenario
        for i in 0..nd {
            for j in 2..=m {
                let prev_tau = self.tau(i, j - 1);
                for t in 1..=ext {
                    for s in 0..n {
                        e.begin(RowGroup::Availability, Sense::Eq, 0.0, format_args!("av_{}_{j}_{t}_{s}", i + 1));
                        e.term(Self::z(i, j, t, s), 1.0);
                        if t > 1 {
                            e.term(Self::z(i, j, t - 1, s), -1.0);
                        }
                        if self.passes(s, i, j - 1) && in_x(t as i64 - prev_tau as i64) {
                            e.term(Self::x(i, j - 1, t - prev_tau, s), -1.0);
                        }
                        if t <= horizon {
                            e.term(Self::x(i, j, t, s), 1.0);
                        }
                        e.finish();
                    }
                }
            }
        }

        for i in 0..nd {
            for j in 1..=m {
                for s in 0..n {
                    e.begin(RowGroup::SingleStart, Sense::Le, 1.0, format_args!("once_{}_{j}_{s}", i + 1));
                    for t in 1..=horizon {
                        e.term(Self::x(i, j, t, s), 1.0);
                    }
                    e.finish();
                }
            }
        }

        // a trial may only start once its predecessor has completed
        for i in 0..nd {
            for j in 2..=m {
                for t in 1..=horizon {
                    for s in 0..n {
                        e.begin(RowGroup::Precedence, Sense::Le, 0.0, format_args!("prec_{}_{j}_{t}_{s}", i + 1));
                        for tt in 1..=t {
                            e.term(Self::x(i, j, tt, s), 1.0);
                        }
                        e.term(Self::v(i, j - 1, t, s), -1.0);
                        e.finish();
                    }
                }
            }
        }

        for (r, &cap) in self.case.resource_caps.iter().enumerate() {
            for t in 1..=horizon {
                for s in 0..n {
                    e.begin(RowGroup::Resource, Sense::Le, cap, format_args!("res_{}_{t}_{s}", r + 1));
                    for (i, drug) in self.case.drugs.iter().enumerate() {
                        for j in 1..=m {
                            let need = drug.resources[r][j - 1];
                            if need == 0.0 {
                                continue;
                            }
                            let first = (t as i64 - self.tau(i, j) as i64 + 1).max(1) as u32;
                            for tt in first..=t {
                                e.term(Self::x(i, j, tt, s), need);
                            }
                        }
                    }
                    e.finish();
                }
            }
        }

        // first-period decisions are shared by every scenario
        for i in 0..nd {
            for s in 0..n {
                e.begin(RowGroup::NacFirstPeriod, Sense::Eq, 0.0, format_args!("nacf_{}_{s}", i + 1));
                e.term(Self::x(i, 1, 1, s), 1.0);
                e.term(Self::x(i, 1, 1, 0), -1.0);
                e.finish();
            }
        }

        // |X[s] - X[sp]| <= sum of completion indicators of the differentiating trials
        for pair in &self.pairs {
            let (s, sp) = (pair.s, pair.sp);
            for i in 0..nd {
                for j in 1..=m {
                    for t in 2..=horizon {
                        for (sense, sign, side) in [(Sense::Le, -1.0, "nacl"), (Sense::Ge, 1.0, "nacu")] {
                            e.begin(
                                RowGroup::NacConditional,
                                sense,
                                0.0,
                                format_args!("{side}_{s}_{sp}_{}_{j}_{t}", i + 1),
                            );
                            e.term(Self::x(i, j, t, s), 1.0);
                            e.term(Self::x(i, j, t, sp), -1.0);
                            for &(d, k) in &pair.differentiators {
                                e.term(Self::v(d, k as usize, t, s), sign);
                            }
                            e.finish();
                        }
                    }
                }
            }
        }

        for s in 0..n {
            e.begin(RowGroup::Cost, Sense::Eq, 0.0, format_args!("cst_{s}"));
            e.term(Var::Cost(s as u32), 1.0);
            for (i, drug) in self.case.drugs.iter().enumerate() {
                for j in 1..=m {
                    for t in 1..=horizon {
                        e.term(Self::x(i, j, t, s), -self.case.discount_at(t) * drug.costs[j - 1]);
                    }
                }
            }
            e.finish();
        }

        for s in 0..n {
            e.begin(RowGroup::Revenue, Sense::Eq, 0.0, format_args!("rv_{s}"));
            e.term(Var::Revenue(s as u32), 1.0);
            for (i, drug) in self.case.drugs.iter().enumerate() {
                if self.succeeds(s, i) {
                    let last_tau = self.tau(i, m);
                    for t in 1..=horizon {
                        let value = drug.rev_max - drug.gamma_l * (t + last_tau) as f64;
                        e.term(Self::x(i, m, t, s), -value);
                    }
                }
                for j in 2..=m {
                    for t in 1..=horizon {
                        e.term(Self::z(i, j, t, s), drug.gamma_d);
                    }
                }
            }
            e.finish();
        }

        for s in 0..n {
            e.begin(RowGroup::FreeRevenue, Sense::Eq, 0.0, format_args!("frev_{s}"));
            e.term(Var::FreeRevenue(s as u32), 1.0);
            for i in 0..nd {
                for j in 1..=m {
                    let coef = self.case.rev_open(i, j - 1) * self.case.open_factor(i, j - 1);
                    e.term(Self::z(i, j, horizon, s), -coef);
                }
                for j in 1..m {
                    let tau = self.tau(i, j);
                    let first = (horizon as i64 - tau as i64 + 1).max(1) as u32;
                    for t in first..=horizon {
                        let coef = self.case.rev_run(i, j - 1, t) * self.case.open_factor(i, j);
                        e.term(Self::x(i, j, t, s), -coef);
                    }
                }
            }
            e.finish();
        }

        e.begin(RowGroup::Enpv, Sense::Eq, 0.0, format_args!("enpv"));
        e.term(Var::Enpv, 1.0);
        for (s, &p) in self.probabilities.iter().enumerate() {
            e.term(Var::Revenue(s as u32), -p);
            e.term(Var::FreeRevenue(s as u32), -p);
            e.term(Var::Cost(s as u32), p);
        }
        e.finish();
    }

    /// Row counts per constraint family.
    pub fn row_counts(&self) -> RowCounts {
        let mut counts = RowCounts::default();
        self.for_each_row(false, |row| counts.add(row.group));
        counts
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct RowCounts {
    pub by_group: Vec<(RowGroup, u64)>,
}

impl RowCounts {
    fn add(&mut self, group: RowGroup) {
        match self.by_group.last_mut() {
            Some((g, c)) if *g == group => *c += 1,
            _ => match self.by_group.iter_mut().find(|(g, _)| *g == group) {
                Some((_, c)) => *c += 1,
                None => self.by_group.push((group, 1)),
            },
        }
    }

    pub fn get(&self, group: RowGroup) -> u64 {
        self.by_group.iter().find(|(g, _)| *g == group).map_or(0, |(_, c)| *c)
    }

    pub fn total(&self) -> u64 {
        self.by_group.iter().map(|(_, c)| c).sum()
    }

    pub fn nac(&self) -> u64 {
        self.by_group.iter().filter(|(g, _)| g.is_nac()).map(|(_, c)| c).sum()
    }
}
