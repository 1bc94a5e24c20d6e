//! Scenario sets, the partitions they fall into under an event set, and the
//! events that tell two scenarios apart.

use std::collections::HashMap;
use std::fmt::Write as _;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::uncertainty::{EventVector, GradualParameter, Outcome};

/// Largest scenario space [`ScenarioSet::full_cartesian`] will materialize by default.
pub const DEFAULT_SCENARIO_LIMIT: u64 = 1 << 22;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Scenario {
    pub id: usize,
    pub outcomes: Vec<Outcome>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Origin {
    Full,
    Sampled { seed: u64, requested: u64 },
    Explicit,
}

#[derive(Clone, Debug)]
pub struct ScenarioSet {
    params: Vec<GradualParameter>,
    scenarios: Vec<Scenario>,
    origin: Origin,
}

/// Size of the full Cartesian scenario space, `prod |Theta_i|`.
pub fn space_size(params: &[GradualParameter]) -> u128 {
    params
        .iter()
        .map(|p| p.outcome_count() as u128)
        .fold(1u128, |acc, k| acc.saturating_mul(k))
}

fn decode_index(params: &[GradualParameter], mut idx: u64) -> Vec<Outcome> {
    let mut outcomes = vec![0; params.len()];
    for (slot, p) in outcomes.iter_mut().zip(params).rev() {
        let k = p.outcome_count() as u64;
        *slot = (idx % k) as u32 + 1;
        idx /= k;
    }
    outcomes
}

impl ScenarioSet {
    /// Every combination of outcomes, in lexicographic order.
    pub fn full_cartesian(params: Vec<GradualParameter>, limit: u64) -> Result<Self> {
        check_params(&params)?;
        let cardinality = space_size(&params);
        if cardinality > limit as u128 {
            return Err(Error::SizeLimit { cardinality, limit });
        }
        let scenarios = (0..cardinality as u64)
            .map(|i| Scenario {
                id: i as usize,
                outcomes: decode_index(&params, i),
            })
            .collect();
        Ok(Self {
            params,
            scenarios,
            origin: Origin::Full,
        })
    }

    /// `count` distinct scenarios drawn uniformly without replacement from the
    /// Cartesian space, sorted lexicographically. The space itself is never
    /// materialized; indices into it are sampled and decoded.
    pub fn sample(params: Vec<GradualParameter>, count: u64, seed: u64) -> Result<Self> {
        check_params(&params)?;
        let available = space_size(&params);
        if count == 0 || count as u128 > available {
            return Err(Error::SampleCount {
                requested: count,
                available,
            });
        }
        if available > usize::MAX as u128 {
            return Err(Error::SizeLimit {
                cardinality: available,
                limit: usize::MAX as u64,
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut picked: Vec<u64> = index::sample(&mut rng, available as usize, count as usize)
            .into_iter()
            .map(|i| i as u64)
            .collect();
        // mixed-radix decoding preserves order, so sorting indices sorts outcome vectors
        picked.sort_unstable();
        let scenarios = picked
            .into_iter()
            .enumerate()
            .map(|(id, i)| Scenario {
                id,
                outcomes: decode_index(&params, i),
            })
            .collect();
        Ok(Self {
            params,
            scenarios,
            origin: Origin::Sampled {
                seed,
                requested: count,
            },
        })
    }

    /// A set with the given scenarios in the given order.
    pub fn from_outcomes(params: Vec<GradualParameter>, outcomes: Vec<Vec<Outcome>>) -> Result<Self> {
        check_params(&params)?;
        let mut seen: HashMap<&[Outcome], usize> = HashMap::new();
        for (id, o) in outcomes.iter().enumerate() {
            if o.len() != params.len() {
                return Err(Error::BadScenario {
                    id,
                    detail: format!("{} outcomes for {} parameters", o.len(), params.len()),
                });
            }
            for (&v, p) in o.iter().zip(&params) {
                if v == 0 || v > p.outcome_count() {
                    return Err(Error::BadScenario {
                        id,
                        detail: format!("outcome {v} of parameter {} outside 1..={}", p.id(), p.outcome_count()),
                    });
                }
            }
            if let Some(prev) = seen.insert(o.as_slice(), id) {
                return Err(Error::BadScenario {
                    id,
                    detail: format!("duplicate of scenario {prev}"),
                });
            }
        }
        let scenarios = outcomes
            .into_iter()
            .enumerate()
            .map(|(id, outcomes)| Scenario { id, outcomes })
            .collect();
        Ok(Self {
            params,
            scenarios,
            origin: Origin::Explicit,
        })
    }

    pub fn params(&self) -> &[GradualParameter] {
        &self.params
    }

    pub fn scenarios(&self) -> &[Scenario] {
        &self.scenarios
    }

    pub fn origin(&self) -> &Origin {
        &self.origin
    }

    pub fn len(&self) -> usize {
        self.scenarios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenarios.is_empty()
    }

    pub fn outcomes(&self, id: usize) -> &[Outcome] {
        &self.scenarios[id].outcomes
    }

    fn check_id(&self, id: usize) -> Result<()> {
        if id >= self.len() {
            return Err(Error::OutOfRange {
                what: "scenario id",
                value: id as u64,
                max: self.len().saturating_sub(1) as u64,
            });
        }
        Ok(())
    }

    fn check_cut(&self, c: &EventVector) -> Result<()> {
        if !c.is_valid_for(&self.params) {
            return Err(Error::BadScenario {
                id: 0,
                detail: format!("event vector {c} does not fit the parameters"),
            });
        }
        Ok(())
    }

    /// Per-parameter signals of scenario `id` under event set `c`.
    pub fn signature(&self, c: &EventVector, id: usize) -> Result<Vec<u32>> {
        self.check_id(id)?;
        self.check_cut(c)?;
        Ok(self.signature_unchecked(c, id))
    }

    fn signature_unchecked(&self, c: &EventVector, id: usize) -> Vec<u32> {
        self.scenarios[id]
            .outcomes
            .iter()
            .zip(&self.params)
            .zip(c.counts())
            .map(|((&o, p), &q)| p.signal_unchecked(q, o))
            .collect()
    }

    /// Groups scenarios that `c` cannot tell apart. Blocks are ordered by
    /// their smallest member and list members in increasing id order.
    pub fn partition(&self, c: &EventVector) -> Result<Partition> {
        self.check_cut(c)?;
        Ok(self.partition_unchecked(c))
    }

    pub(crate) fn partition_unchecked(&self, c: &EventVector) -> Partition {
        let mut index: HashMap<Vec<u32>, usize> = HashMap::with_capacity(self.len());
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        let mut block_of = Vec::with_capacity(self.len());
        for id in 0..self.len() {
            let sig = self.signature_unchecked(c, id);
            let b = *index.entry(sig).or_insert_with(|| {
                blocks.push(Vec::new());
                blocks.len() - 1
            });
            blocks[b].push(id);
            block_of.push(b);
        }
        Partition {
            event_vector: c.clone(),
            blocks,
            block_of,
        }
    }

    /// The events whose occurrence first separates `r` from `s`: for each
    /// parameter on which they differ, the smallest event count at which
    /// their signals diverge.
    pub fn differentiator_set(&self, r: usize, s: usize) -> Result<DifferentiatorSet> {
        self.check_id(r)?;
        self.check_id(s)?;
        if r == s {
            return Err(Error::IdenticalScenarios(r));
        }
        let (a, b) = (self.outcomes(r), self.outcomes(s));
        let events = self
            .params
            .iter()
            .enumerate()
            .filter_map(|(i, p)| p.first_divergence(a[i], b[i]).map(|q| (i, q)))
            .collect();
        Ok(DifferentiatorSet { events })
    }

    /// Latest period at which `r` and `s` are indistinguishable in their
    /// exogenous parameters.
    pub fn tau(&self, r: usize, s: usize) -> Result<Tau> {
        self.check_id(r)?;
        self.check_id(s)?;
        let exo: Vec<(usize, &GradualParameter)> =
            self.params.iter().enumerate().filter(|(_, p)| p.is_exogenous()).collect();
        if exo.is_empty() {
            return Err(Error::NoExogenous);
        }
        let (a, b) = (self.outcomes(r), self.outcomes(s));
        let horizon = exo.iter().map(|(_, p)| p.last_scheduled_period()).max().unwrap_or(0);
        for t in 1..=horizon {
            let differ = exo.iter().any(|&(i, p)| {
                let q = p.events_by(t);
                p.signal_unchecked(q, a[i]) != p.signal_unchecked(q, b[i])
            });
            if differ {
                return Ok(Tau::At(t - 1));
            }
        }
        Ok(Tau::Never)
    }

    /// Line-oriented text form: a header with the parameter count and chain
    /// lengths, then one scenario per line as space-separated outcomes.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.params.len().to_string());
        for p in &self.params {
            let _ = write!(out, " {}", p.chain_length());
        }
        out.push('\n');
        for s in &self.scenarios {
            for (i, o) in s.outcomes.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                let _ = write!(out, "{o}");
            }
            out.push('\n');
        }
        out
    }

    pub fn parse_text(params: Vec<GradualParameter>, text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "missing header".into(),
        })?;
        let header: Vec<u32> = parse_numbers(1, header)?;
        let expected: Vec<u32> = std::iter::once(params.len() as u32)
            .chain(params.iter().map(|p| p.chain_length()))
            .collect();
        if header != expected {
            return Err(Error::Parse {
                line: 1,
                msg: format!("header {header:?} does not match parameters {expected:?}"),
            });
        }
        let mut outcomes = Vec::new();
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            outcomes.push(parse_numbers::<u32>(i + 1, line)?);
        }
        Self::from_outcomes(params, outcomes)
    }
}

fn check_params(params: &[GradualParameter]) -> Result<()> {
    if params.is_empty() {
        return Err(Error::NoParameters);
    }
    Ok(())
}

pub(crate) fn parse_numbers<T: std::str::FromStr>(line: usize, s: &str) -> Result<Vec<T>> {
    s.split_whitespace()
        .map(|tok| {
            tok.parse().map_err(|_| Error::Parse {
                line,
                msg: format!("not a number: {tok:?}"),
            })
        })
        .collect()
}

/// The partition `Pi(c)` of a scenario set under event set `c`.
#[derive(Clone, Debug)]
pub struct Partition {
    pub event_vector: EventVector,
    pub blocks: Vec<Vec<usize>>,
    block_of: Vec<usize>,
}

impl Partition {
    pub fn block_of(&self, id: usize) -> usize {
        self.block_of[id]
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(Vec::len).collect()
    }
}

/// Events that separate two scenarios, as `(parameter, event index)` pairs
/// sorted by parameter.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DifferentiatorSet {
    pub events: Vec<(usize, u32)>,
}

impl DifferentiatorSet {
    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }
}

/// Latest period at which two scenarios agree on all exogenous parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Tau {
    At(u32),
    /// The scenarios never become distinguishable through exogenous parameters.
    Never,
}
