//! Gradually realized uncertain parameters and the lattice of permissible
//! event sets.
//!
//! A parameter with outcomes `1..=K` is observed through a chain of `m`
//! events. After `q` events have occurred the decision maker sees a signal
//! that partitions the outcomes into blocks; each further event refines that
//! partition until, after the last event, every outcome is singled out.
//!
//! Signals are canonical: the signal of an outcome at level `q` is the
//! smallest outcome in its block.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Outcome index, 1-based.
pub type Outcome = u32;

/// How the events of a parameter are triggered.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParamKind {
    /// Events happen as a consequence of decisions (e.g. finishing a trial).
    Endogenous,
    /// Events happen at fixed periods; `schedule[q - 1]` is the period of event `q`.
    ExogenousScheduled { schedule: Vec<u32> },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GradualParameter {
    id: usize,
    outcome_count: u32,
    /// `table[q][outcome - 1]` is the canonical signal after `q` events.
    table: Vec<Vec<u32>>,
    kind: ParamKind,
}

impl GradualParameter {
    /// A product (or drug) that passes through `stages` ordered stages and
    /// may fail at any of them. Outcome `j <= stages` means "failed at stage
    /// `j`", outcome `stages + 1` means "passed everything". Completing `q`
    /// stages reveals failures at stages `1..=q` and nothing else.
    pub fn stage_failure(id: usize, stages: u32) -> Result<Self> {
        if stages == 0 {
            return Err(Error::ZeroStages);
        }
        let outcome_count = stages + 1;
        let table = (0..=stages)
            .map(|q| (1..=outcome_count).map(|j| j.min(q + 1)).collect())
            .collect();
        Ok(Self {
            id,
            outcome_count,
            table,
            kind: ParamKind::Endogenous,
        })
    }

    /// Builds a parameter from an explicit chain of partitions of `1..=K`.
    ///
    /// The first partition must be a single block, the last must be all
    /// singletons, and every partition must refine its predecessor.
    pub fn split_chain(id: usize, partitions: &[Vec<Vec<Outcome>>]) -> Result<Self> {
        let first = partitions.first().ok_or(Error::EmptyChain { param: id })?;
        let outcome_count: u32 = first.iter().map(|b| b.len() as u32).sum();
        if outcome_count == 0 {
            return Err(Error::BadPartition {
                param: id,
                level: 0,
                detail: "no outcomes".into(),
            });
        }

        let mut table = Vec::with_capacity(partitions.len());
        for (level, blocks) in partitions.iter().enumerate() {
            table.push(signals_from_blocks(id, level, outcome_count, blocks)?);
        }

        let bad = |level: usize, detail: &str| Error::BadPartition {
            param: id,
            level,
            detail: detail.into(),
        };
        if table[0].iter().any(|&s| s != 1) {
            return Err(bad(0, "first level must be a single block"));
        }
        let last = table.len() - 1;
        if table[last].iter().enumerate().any(|(o, &s)| s != o as u32 + 1) {
            return Err(bad(last, "last level must be all singletons"));
        }
        for level in 1..table.len() {
            let (prev, cur) = (&table[level - 1], &table[level]);
            for a in 0..outcome_count as usize {
                for b in a + 1..outcome_count as usize {
                    if cur[a] == cur[b] && prev[a] != prev[b] {
                        return Err(Error::RefinementViolation {
                            param: id,
                            level,
                            a: a as u32 + 1,
                            b: b as u32 + 1,
                        });
                    }
                }
            }
        }

        Ok(Self {
            id,
            outcome_count,
            table,
            kind: ParamKind::Endogenous,
        })
    }

    /// Marks the parameter as exogenous, with event `q` occurring at period
    /// `schedule[q - 1]`. Periods start at 1 and must be non-decreasing.
    pub fn with_schedule(mut self, schedule: Vec<u32>) -> Result<Self> {
        let bad = |detail: String| Error::BadSchedule {
            param: self.id,
            detail,
        };
        if schedule.len() != self.chain_length() as usize {
            return Err(bad(format!(
                "{} periods given for {} events",
                schedule.len(),
                self.chain_length()
            )));
        }
        if schedule.first().is_some_and(|&t| t == 0) {
            return Err(bad("periods start at 1".into()));
        }
        if schedule.windows(2).any(|w| w[0] > w[1]) {
            return Err(bad("periods must be non-decreasing".into()));
        }
        self.kind = ParamKind::ExogenousScheduled { schedule };
        Ok(self)
    }

    pub fn id(&self) -> usize {
        self.id
    }

    pub fn outcome_count(&self) -> u32 {
        self.outcome_count
    }

    /// Number of events in the chain.
    pub fn chain_length(&self) -> u32 {
        self.table.len() as u32 - 1
    }

    pub fn kind(&self) -> &ParamKind {
        &self.kind
    }

    pub fn is_exogenous(&self) -> bool {
        matches!(self.kind, ParamKind::ExogenousScheduled { .. })
    }

    /// Signal observed for `outcome` once `q` events have occurred.
    pub fn signal(&self, q: u32, outcome: Outcome) -> Result<u32> {
        if q > self.chain_length() {
            return Err(Error::OutOfRange {
                what: "event count",
                value: q.into(),
                max: self.chain_length().into(),
            });
        }
        if outcome == 0 || outcome > self.outcome_count {
            return Err(Error::OutOfRange {
                what: "outcome",
                value: outcome.into(),
                max: self.outcome_count.into(),
            });
        }
        Ok(self.signal_unchecked(q, outcome))
    }

    #[inline]
    pub(crate) fn signal_unchecked(&self, q: u32, outcome: Outcome) -> u32 {
        self.table[q as usize][outcome as usize - 1]
    }

    /// The partition at level `q` as a list of blocks, ordered by minimum.
    pub fn blocks_at(&self, q: u32) -> Vec<Vec<Outcome>> {
        let mut blocks: Vec<Vec<Outcome>> = Vec::new();
        let row = &self.table[q as usize];
        for (o, &sig) in row.iter().enumerate() {
            match blocks.iter_mut().find(|b| b[0] == sig) {
                Some(b) => b.push(o as u32 + 1),
                None => blocks.push(vec![o as u32 + 1]),
            }
        }
        blocks
    }

    /// Smallest event count at which outcomes `a` and `b` get different
    /// signals, or `None` when `a == b`.
    pub fn first_divergence(&self, a: Outcome, b: Outcome) -> Option<u32> {
        if a == b {
            return None;
        }
        (1..=self.chain_length()).find(|&q| self.signal_unchecked(q, a) != self.signal_unchecked(q, b))
    }

    /// Number of events that have occurred by period `t` (exogenous only).
    pub(crate) fn events_by(&self, t: u32) -> u32 {
        match &self.kind {
            ParamKind::ExogenousScheduled { schedule } => {
                schedule.iter().take_while(|&&p| p <= t).count() as u32
            }
            ParamKind::Endogenous => 0,
        }
    }

    pub(crate) fn last_scheduled_period(&self) -> u32 {
        match &self.kind {
            ParamKind::ExogenousScheduled { schedule } => schedule.last().copied().unwrap_or(0),
            ParamKind::Endogenous => 0,
        }
    }
}

fn signals_from_blocks(param: usize, level: usize, k: u32, blocks: &[Vec<Outcome>]) -> Result<Vec<u32>> {
    let mut signal = vec![0u32; k as usize];
    for block in blocks {
        let min = *block.iter().min().ok_or_else(|| Error::BadPartition {
            param,
            level,
            detail: "empty block".into(),
        })?;
        for &o in block {
            if o == 0 || o > k {
                return Err(Error::BadPartition {
                    param,
                    level,
                    detail: format!("outcome {o} outside 1..={k}"),
                });
            }
            if signal[o as usize - 1] != 0 {
                return Err(Error::BadPartition {
                    param,
                    level,
                    detail: format!("outcome {o} appears twice"),
                });
            }
            signal[o as usize - 1] = min;
        }
    }
    if let Some(o) = signal.iter().position(|&s| s == 0) {
        return Err(Error::BadPartition {
            param,
            level,
            detail: format!("outcome {} is not covered", o + 1),
        });
    }
    Ok(signal)
}

/// A permissible event set, stored as the number of events that have
/// occurred in each parameter's chain.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EventVector(pub Vec<u32>);

impl EventVector {
    pub fn zero(n: usize) -> Self {
        EventVector(vec![0; n])
    }

    pub fn full(params: &[GradualParameter]) -> Self {
        EventVector(params.iter().map(|p| p.chain_length()).collect())
    }

    pub fn counts(&self) -> &[u32] {
        &self.0
    }

    /// Number of events that have occurred.
    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    /// Componentwise `<=`: every event of `self` has also occurred in `other`.
    pub fn is_subset_of(&self, other: &EventVector) -> bool {
        self.0.len() == other.0.len() && self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    /// Smallest event set containing both.
    pub fn join(&self, other: &EventVector) -> EventVector {
        EventVector(self.0.iter().zip(&other.0).map(|(&a, &b)| a.max(b)).collect())
    }

    pub fn is_valid_for(&self, params: &[GradualParameter]) -> bool {
        self.0.len() == params.len() && self.0.iter().zip(params).all(|(&q, p)| q <= p.chain_length())
    }
}

impl fmt::Display for EventVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, q) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{q}")?;
        }
        write!(f, ")")
    }
}

/// All permissible event sets grouped by order, highest order first.
#[derive(Clone, Debug)]
pub struct EventLattice {
    levels: Vec<(u32, Vec<EventVector>)>,
}

impl EventLattice {
    /// `(order, vectors)` pairs from the maximum order down to 0.
    pub fn levels(&self) -> &[(u32, Vec<EventVector>)] {
        &self.levels
    }

    pub fn max_order(&self) -> u32 {
        self.levels.first().map(|(k, _)| *k).unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.levels.iter().map(|(_, v)| v.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of vectors of each order, indexed by order.
    pub fn counts_by_order(&self) -> Vec<usize> {
        let mut counts = vec![0; self.max_order() as usize + 1];
        for (k, v) in &self.levels {
            counts[*k as usize] = v.len();
        }
        counts
    }

    pub fn iter(&self) -> impl Iterator<Item = &EventVector> {
        self.levels.iter().flat_map(|(_, v)| v.iter())
    }
}

/// Enumerates the event-set lattice: every vector of per-parameter prefix
/// lengths, `prod(m_i + 1)` in total.
pub fn enumerate_event_lattice(params: &[GradualParameter]) -> Result<EventLattice> {
    if params.is_empty() {
        return Err(Error::NoParameters);
    }
    let max_order: u32 = params.iter().map(|p| p.chain_length()).sum();
    let mut buckets: Vec<Vec<EventVector>> = vec![Vec::new(); max_order as usize + 1];

    // Odometer with the last parameter varying fastest yields lexicographic order.
    let mut counts = vec![0u32; params.len()];
    loop {
        let order: u32 = counts.iter().sum();
        buckets[order as usize].push(EventVector(counts.clone()));

        let mut i = params.len();
        loop {
            if i == 0 {
                let levels = buckets
                    .into_iter()
                    .enumerate()
                    .rev()
                    .map(|(k, v)| (k as u32, v))
                    .collect();
                return Ok(EventLattice { levels });
            }
            i -= 1;
            if counts[i] < params[i].chain_length() {
                counts[i] += 1;
                break;
            }
            counts[i] = 0;
        }
    }
}
