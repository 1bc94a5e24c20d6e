//! Experiment manifests.
//!
//! ```toml
//! seed = 7
//! repetitions = 30
//! output_dir = "out"
//!
//! [[parameters]]
//! kind = "stage-failure"
//! stages = 3
//! count = 2
//!
//! [scenarios]
//! source = "sample"
//! count = 12
//!
//! [case]
//! builtin = "two-drug"
//! ```
//!
//! Relative paths are resolved against the directory of the config file.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::mssp::CaseStudy;
use crate::scenario::{ScenarioSet, DEFAULT_SCENARIO_LIMIT};
use crate::uncertainty::{GradualParameter, Outcome};

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub repetitions: u32,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub parameters: Vec<ParamSpec>,
    #[serde(default)]
    pub scenarios: Option<ScenarioSource>,
    #[serde(default)]
    pub case: Option<CaseSpec>,
    /// Bench rows; when absent, `bench` treats the config itself as one row.
    #[serde(default)]
    pub rows: Vec<BenchRow>,
    #[serde(default)]
    pub bench: BenchOptions,
    #[serde(skip)]
    base_dir: PathBuf,
}

fn one() -> u32 {
    1
}

fn one_usize() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ParamSpec {
    /// `count` identical parameters failing at one of `stages` stages.
    StageFailure {
        stages: u32,
        #[serde(default = "one_usize")]
        count: usize,
        #[serde(default)]
        schedule: Option<Vec<u32>>,
    },
    /// Explicit partition chain over outcomes `1..=m`, coarsest level first.
    SplitChain {
        chain: Vec<Vec<Vec<Outcome>>>,
        #[serde(default)]
        schedule: Option<Vec<u32>>,
    },
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ScenarioSource {
    Full {
        #[serde(default)]
        limit: Option<u64>,
    },
    Sample {
        count: u64,
    },
    Explicit {
        outcomes: Vec<Vec<Outcome>>,
    },
    /// A scenario file written by `snac sample`.
    File {
        path: PathBuf,
    },
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum CaseSpec {
    Builtin(String),
    Path(PathBuf),
    Inline(CaseStudy),
}

/// One line of a bench table: `products` stage-failure parameters with
/// `outcomes` outcomes each, over `scenarios` sampled scenarios (full set
/// when absent).
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchRow {
    #[serde(default)]
    pub label: Option<String>,
    pub products: usize,
    pub outcomes: u32,
    #[serde(default)]
    pub scenarios: Option<u64>,
    pub horizon: u32,
    /// Case study for model-generation timing; a structural placeholder otherwise.
    #[serde(default)]
    pub case: Option<String>,
}

impl BenchRow {
    pub fn label(&self) -> String {
        match &self.label {
            Some(l) => l.clone(),
            None => {
                let n = self.scenarios.map_or_else(
                    || (self.outcomes as u128).pow(self.products as u32).to_string(),
                    |c| c.to_string(),
                );
                format!("{}, {}, {n}", self.products, self.outcomes)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelTiming {
    None,
    #[default]
    Snac,
    Both,
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchOptions {
    #[serde(default)]
    pub model_timing: ModelTiming,
}

/// Seed for repetition `rep`: one splitmix64 step from `base + rep`.
pub fn derive_seed(base: u64, rep: u32) -> u64 {
    let mut z = base.wrapping_add(rep as u64).wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn at(path: impl Into<String>, e: Error) -> Error {
    Error::Config(format!("{}: {e}", path.into()))
}

impl ExperimentConfig {
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.base_dir = base_dir.to_path_buf();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let dir = path.parent().unwrap_or(Path::new("."));
        Self::from_toml(&text, dir).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(Error::Config("repetitions: must be at least 1".into()));
        }
        if !self.parameters.is_empty() {
            self.build_parameters()?;
        }
        if self.parameters.is_empty() && self.scenarios.is_some() {
            return Err(Error::Config("parameters: a scenario source needs at least one parameter".into()));
        }
        if let Some(ScenarioSource::Sample { count: 0 }) = self.scenarios {
            return Err(Error::Config("scenarios.count: must be at least 1".into()));
        }
        if let Some(CaseSpec::Inline(case)) = &self.case {
            case.validate().map_err(|e| at("case.inline", e))?;
        }
        if let Some(CaseSpec::Builtin(id)) = &self.case {
            CaseStudy::builtin(id).map_err(|e| at("case.builtin", e))?;
        }
        for (k, row) in self.rows.iter().enumerate() {
            let path = format!("rows[{k}]");
            if row.products == 0 {
                return Err(Error::Config(format!("{path}.products: must be at least 1")));
            }
            if row.outcomes < 2 {
                return Err(Error::Config(format!("{path}.outcomes: must be at least 2")));
            }
            if row.horizon < 2 {
                return Err(Error::Config(format!("{path}.horizon: must be at least 2")));
            }
            if row.scenarios == Some(0) {
                return Err(Error::Config(format!("{path}.scenarios: must be at least 1")));
            }
            if let Some(id) = &row.case {
                CaseStudy::builtin(id).map_err(|e| at(format!("{path}.case"), e))?;
            }
        }
        Ok(())
    }

    pub fn build_parameters(&self) -> Result<Vec<GradualParameter>> {
        if self.parameters.is_empty() {
            return Err(Error::Config("parameters: at least one parameter is required".into()));
        }
        let mut params = Vec::new();
        for (k, spec) in self.parameters.iter().enumerate() {
            let path = format!("parameters[{k}]");
            let (made, schedule) = match spec {
                ParamSpec::StageFailure { stages, count, schedule } => {
                    if *count == 0 {
                        return Err(Error::Config(format!("{path}.count: must be at least 1")));
                    }
                    let made = (0..*count)
                        .map(|c| GradualParameter::stage_failure(params.len() + c, *stages))
                        .collect::<Result<Vec<_>>>()
                        .map_err(|e| at(format!("{path}.stages"), e))?;
                    (made, schedule)
                }
                ParamSpec::SplitChain { chain, schedule } => {
                    let made = GradualParameter::split_chain(params.len(), chain).map_err(|e| at(format!("{path}.chain"), e))?;
                    (vec![made], schedule)
                }
            };
            for p in made {
                let p = match schedule {
                    Some(s) => p.with_schedule(s.clone()).map_err(|e| at(format!("{path}.schedule"), e))?,
                    None => p,
                };
                params.push(p);
            }
        }
        Ok(params)
    }

    /// The scenario set for repetition `rep`, using `seed` as the base seed.
    pub fn scenario_set(&self, seed: u64, rep: u32) -> Result<ScenarioSet> {
        let params = self.build_parameters()?;
        let source = self
            .scenarios
            .as_ref()
            .ok_or_else(|| Error::Config("scenarios: missing scenario source".into()))?;
        match source {
            ScenarioSource::Full { limit } => {
                ScenarioSet::full_cartesian(params, limit.unwrap_or(DEFAULT_SCENARIO_LIMIT)).map_err(|e| at("scenarios", e))
            }
            ScenarioSource::Sample { count } => {
                ScenarioSet::sample(params, *count, derive_seed(seed, rep)).map_err(|e| at("scenarios.count", e))
            }
            ScenarioSource::Explicit { outcomes } => {
                ScenarioSet::from_outcomes(params, outcomes.clone()).map_err(|e| at("scenarios.outcomes", e))
            }
            ScenarioSource::File { path } => {
                let path = self.resolve(path);
                let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
                ScenarioSet::parse_text(params, &text).map_err(|e| at("scenarios.path", e))
            }
        }
    }

    pub fn case_study(&self) -> Result<Option<CaseStudy>> {
        Ok(match &self.case {
            None => None,
            Some(CaseSpec::Builtin(id)) => Some(CaseStudy::builtin(id)?),
            Some(CaseSpec::Path(p)) => Some(CaseStudy::load(&self.resolve(p)).map_err(|e| at("case.path", e))?),
            Some(CaseSpec::Inline(c)) => Some(c.clone()),
        })
    }

    pub fn output_dir(&self) -> Option<PathBuf> {
        self.output_dir.as_ref().map(|p| self.resolve(p))
    }
}
