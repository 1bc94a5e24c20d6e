use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::uncertainty::Outcome;

const BUILTINS: &[(&str, &str)] = &[
    ("two-drug", include_str!("../../data/two-drug.toml")),
    ("three-drug", include_str!("../../data/three-drug.toml")),
    ("four-drug", include_str!("../../data/four-drug.toml")),
    ("five-drug", include_str!("../../data/five-drug.toml")),
    ("six-drug", include_str!("../../data/six-drug.toml")),
];

/// Per-drug data. Trial vectors are indexed by trial (PI, PII, ...);
/// `resources[r][j]` is the amount of resource `r` trial `j` needs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Drug {
    pub name: String,
    pub durations: Vec<u32>,
    pub success: Vec<f64>,
    pub costs: Vec<f64>,
    pub resources: Vec<Vec<f64>>,
    pub rev_max: f64,
    /// Revenue lost per period of patent life used up.
    pub gamma_l: f64,
    /// Penalty per period a trial is available but not started.
    pub gamma_d: f64,
}

/// Parameters of a clinical-trial planning instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseStudy {
    pub name: String,
    pub horizon: u32,
    pub resource_caps: Vec<f64>,
    /// Discount factor per period `1..=horizon`; all ones when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub discount: Option<Vec<f64>>,
    pub drugs: Vec<Drug>,
}

impl CaseStudy {
    pub fn builtin(id: &str) -> Result<Self> {
        let (_, text) = BUILTINS
            .iter()
            .find(|(name, _)| *name == id)
            .ok_or_else(|| Error::Case(format!("unknown case study {id:?}; known: {}", builtin_ids().join(", "))))?;
        Self::from_toml(text)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let case: CaseStudy = toml::from_str(text).map_err(|e| Error::Case(e.to_string()))?;
        case.validate()?;
        Ok(case)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    /// Placeholder instance with `drugs` identical drugs of `trials` trials
    /// each. Only the structure (drug, trial and period counts) is
    /// meaningful; use it for sizing and timing, not for planning.
    pub fn uniform(drugs: usize, trials: usize, horizon: u32) -> Self {
        let drug = |i: usize| Drug {
            name: format!("D{}", i + 1),
            durations: vec![1; trials],
            success: vec![0.5; trials],
            costs: vec![10.0; trials],
            resources: vec![vec![1.0; trials]],
            rev_max: 3000.0,
            gamma_l: 20.0,
            gamma_d: 25.0,
        };
        Self {
            name: format!("uniform-{drugs}x{trials}"),
            horizon,
            resource_caps: vec![drugs as f64],
            discount: None,
            drugs: (0..drugs).map(drug).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Case(format!("{}: {msg}", self.name)));
        if self.horizon < 2 {
            return bad(format!("horizon {} < 2", self.horizon));
        }
        if self.drugs.is_empty() {
            return bad("no drugs".into());
        }
        let m = self.drugs[0].durations.len();
        if m == 0 {
            return bad("drugs need at least one trial".into());
        }
        if let Some(d) = &self.discount {
            if d.len() < self.horizon as usize {
                return bad(format!("{} discount factors for horizon {}", d.len(), self.horizon));
            }
        }
        for drug in &self.drugs {
            let lens = [drug.durations.len(), drug.success.len(), drug.costs.len()];
            if lens.iter().any(|&l| l != m) {
                return bad(format!("drug {} does not have {m} trials in every column", drug.name));
            }
            if drug.resources.len() != self.resource_caps.len() || drug.resources.iter().any(|r| r.len() != m) {
                return bad(format!(
                    "drug {} needs a {}x{m} resource table",
                    drug.name,
                    self.resource_caps.len()
                ));
            }
            if drug.durations.contains(&0) {
                return bad(format!("drug {} has a zero trial duration", drug.name));
            }
            if drug.success.iter().any(|&p| !(p > 0.0 && p < 1.0)) {
                return bad(format!("drug {} has a success probability outside (0, 1)", drug.name));
            }
        }
        Ok(())
    }

    /// Trials per drug.
    pub fn trial_count(&self) -> usize {
        self.drugs[0].durations.len()
    }

    pub fn max_duration(&self) -> u32 {
        self.drugs.iter().flat_map(|d| d.durations.iter().copied()).max().unwrap_or(1)
    }

    /// Discount factor for period `t` (1-based).
    pub fn discount_at(&self, t: u32) -> f64 {
        self.discount.as_ref().map_or(1.0, |d| d[t as usize - 1])
    }

    /// Probability that drug `drug` ends with `outcome`: failing trial `j`
    /// for `j <= m`, or passing everything for `m + 1`.
    pub fn outcome_probability(&self, drug: usize, outcome: Outcome) -> f64 {
        let p = &self.drugs[drug].success;
        let j = outcome as usize;
        let passed: f64 = p[..(j - 1).min(p.len())].iter().product();
        if j <= p.len() {
            passed * (1.0 - p[j - 1])
        } else {
            passed
        }
    }

    /// Unnormalized probability of a scenario (product over drugs).
    pub fn scenario_probability(&self, outcomes: &[Outcome]) -> f64 {
        outcomes
            .iter()
            .enumerate()
            .map(|(i, &o)| self.outcome_probability(i, o))
            .product()
    }

    /// Revenue if trial `j` (0-based) is still open at the horizon.
    pub(crate) fn rev_open(&self, i: usize, j: usize) -> f64 {
        let d = &self.drugs[i];
        let remaining: u32 = d.durations[j..].iter().sum();
        d.rev_max - d.gamma_l * (self.horizon + remaining) as f64
    }

    /// Revenue if trial `j` (0-based) started at period `t` is still running at the horizon.
    pub(crate) fn rev_run(&self, i: usize, j: usize, t: u32) -> f64 {
        let d = &self.drugs[i];
        let remaining: u32 = d.durations[j..].iter().sum();
        d.rev_max - d.gamma_l * (t + remaining) as f64
    }

    /// Open-revenue discount for trial `j` (0-based).
    pub(crate) fn open_factor(&self, i: usize, j: usize) -> f64 {
        let d = &self.drugs[i];
        let base = d.rev_max - d.gamma_l * self.horizon as f64;
        let remaining_cost: f64 = d.costs[j..].iter().sum();
        0.9 * (base - remaining_cost) / base
    }
}

pub fn builtin_ids() -> Vec<&'static str> {
    BUILTINS.iter().map(|(n, _)| *n).collect()
}
