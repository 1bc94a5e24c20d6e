//! Brute-force checks for NAC graphs: sufficiency (every block of every
//! event set is connected), per-edge necessity, and an exhaustive search for
//! the smallest sufficient graph on tiny instances.
//!
//! Nothing here goes through the partition or lattice code that the SNAC
//! sweep uses: event sets are enumerated recursively and blocks are formed
//! by comparing scenarios pairwise.

use std::fmt::Write as _;

use itertools::Itertools;
use serde::Serialize;

use crate::dsu::DisjointSets;
use crate::error::{Error, Result};
use crate::scenario::ScenarioSet;
use crate::reduce::NacGraph;
use crate::uncertainty::{EventVector, GradualParameter};

pub const DEFAULT_EXHAUSTIVE_CAP: usize = 6;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub cut: EventVector,
    pub block: Vec<usize>,
    /// Two members of the block with no path between them inside the block.
    pub witness: (usize, usize),
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct VerificationReport {
    pub sufficient: bool,
    pub violations: Vec<Violation>,
    /// One entry per graph edge, in graph order.
    pub necessary_edges: Vec<bool>,
    pub minimal: Option<bool>,
    pub min_cardinality: Option<usize>,
}

impl VerificationReport {
    pub fn all_necessary(&self) -> bool {
        self.necessary_edges.iter().all(|&b| b)
    }

    pub fn to_text(&self, graph: &NacGraph) -> String {
        let mut out = String::new();
        let _ = write!(out, "sufficient: {}", if self.sufficient { "yes" } else { "no" });
        if self.sufficient && !self.necessary_edges.is_empty() {
            let redundant = self.necessary_edges.iter().filter(|&&b| !b).count();
            if redundant == 0 {
                let _ = write!(out, "; all {} edges necessary", graph.len());
            } else {
                let _ = write!(out, "; {redundant} of {} edges not necessary", graph.len());
            }
        } else if self.sufficient {
            let _ = write!(out, "; {} edges", graph.len());
        }
        out.push('\n');
        for v in &self.violations {
            let _ = writeln!(
                out,
                "  disconnected block under {}: {:?} ({} cannot reach {})",
                v.cut, v.block, v.witness.0, v.witness.1
            );
        }
        for (e, &nec) in graph.edges().iter().zip(&self.necessary_edges) {
            if !nec {
                let _ = writeln!(out, "  redundant edge ({}, {})", e.a, e.b);
            }
        }
        if let (Some(min), Some(minimal)) = (self.min_cardinality, self.minimal) {
            let _ = writeln!(out, "  exhaustive minimum: {min} ({})", if minimal { "matched" } else { "not matched" });
        }
        out
    }
}

/// Every permissible event set, highest order first.
fn cuts_descending(params: &[GradualParameter]) -> Vec<EventVector> {
    fn rec(params: &[GradualParameter], prefix: &mut Vec<u32>, out: &mut Vec<EventVector>) {
        if prefix.len() == params.len() {
            out.push(EventVector(prefix.clone()));
            return;
        }
        for q in 0..=params[prefix.len()].chain_length() {
            prefix.push(q);
            rec(params, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(params, &mut Vec::new(), &mut out);
    out.sort_by_key(|c| std::cmp::Reverse(c.order()));
    out
}

fn indistinguishable(set: &ScenarioSet, cut: &EventVector, r: usize, s: usize) -> bool {
    let (a, b) = (set.outcomes(r), set.outcomes(s));
    set.params().iter().zip(cut.counts()).enumerate().all(|(i, (p, &q))| {
        p.signal(q, a[i]).expect("valid outcome") == p.signal(q, b[i]).expect("valid outcome")
    })
}

/// Blocks of size > 1 for every event set, by pairwise comparison.
fn all_blocks(set: &ScenarioSet) -> Vec<(EventVector, Vec<usize>)> {
    let mut out = Vec::new();
    for cut in cuts_descending(set.params()) {
        let mut assigned = vec![false; set.len()];
        for r in 0..set.len() {
            if assigned[r] {
                continue;
            }
            let block: Vec<usize> = (r..set.len())
                .filter(|&s| !assigned[s] && indistinguishable(set, &cut, r, s))
                .collect();
            for &s in &block {
                assigned[s] = true;
            }
            if block.len() > 1 {
                out.push((cut.clone(), block));
            }
        }
    }
    out
}

/// Returns the first member of `block` unreachable from `block[0]` using only
/// edges with both ends inside the block.
fn unreachable_member(block: &[usize], pairs: &[(usize, usize)], n: usize) -> Option<usize> {
    let mut inside = vec![false; n];
    for &v in block {
        inside[v] = true;
    }
    let mut dsu = DisjointSets::new(n);
    for &(a, b) in pairs {
        if inside[a] && inside[b] {
            dsu.union(a, b);
        }
    }
    block.iter().copied().find(|&v| !dsu.same(block[0], v))
}

fn check_graph(set: &ScenarioSet, graph: &NacGraph) -> Result<()> {
    if graph.scenario_count() != set.len() {
        return Err(Error::GraphMismatch(format!(
            "graph has {} scenarios, set has {}",
            graph.scenario_count(),
            set.len()
        )));
    }
    Ok(())
}

fn violations(blocks: &[(EventVector, Vec<usize>)], pairs: &[(usize, usize)], n: usize, fail_fast: bool) -> Vec<Violation> {
    let mut out = Vec::new();
    for (cut, block) in blocks {
        if let Some(v) = unreachable_member(block, pairs, n) {
            out.push(Violation {
                cut: cut.clone(),
                block: block.clone(),
                witness: (block[0], v),
            });
            if fail_fast {
                break;
            }
        }
    }
    out
}

/// Reports every block of every event set that the graph leaves disconnected.
pub fn check_sufficiency(set: &ScenarioSet, graph: &NacGraph) -> Result<VerificationReport> {
    check_graph(set, graph)?;
    let pairs: Vec<_> = graph.pairs().collect();
    let violations = violations(&all_blocks(set), &pairs, set.len(), false);
    Ok(VerificationReport {
        sufficient: violations.is_empty(),
        violations,
        ..Default::default()
    })
}

/// For each edge, whether removing it breaks sufficiency. The graph must be
/// sufficient to begin with.
pub fn check_necessity(set: &ScenarioSet, graph: &NacGraph) -> Result<VerificationReport> {
    check_graph(set, graph)?;
    let blocks = all_blocks(set);
    let pairs: Vec<_> = graph.pairs().collect();
    let found = violations(&blocks, &pairs, set.len(), false);
    if !found.is_empty() {
        return Err(Error::NotSufficient {
            violations: found.len(),
        });
    }
    let necessary_edges = (0..pairs.len())
        .map(|skip| {
            let reduced: Vec<_> = pairs
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != skip)
                .map(|(_, &p)| p)
                .collect();
            !violations(&blocks, &reduced, set.len(), true).is_empty()
        })
        .collect();
    Ok(VerificationReport {
        sufficient: true,
        violations: Vec::new(),
        necessary_edges,
        ..Default::default()
    })
}

/// Smallest sufficient edge set, found by trying candidate pair subsets in
/// increasing size. Only pairs that share a block under some event set are
/// candidates; the search starts at the spanning-tree bound of the root block.
pub fn min_nac_exhaustive(set: &ScenarioSet, cap: usize) -> Result<(usize, Vec<(usize, usize)>)> {
    let n = set.len();
    if n > cap {
        return Err(Error::OracleCapExceeded { size: n, cap });
    }
    if n < 2 {
        return Ok((0, Vec::new()));
    }
    let blocks = all_blocks(set);
    let candidates: Vec<(usize, usize)> = (0..n)
        .tuple_combinations()
        .filter(|&(a, b)| blocks.iter().any(|(_, blk)| blk.contains(&a) && blk.contains(&b)))
        .collect();
    let root_size = blocks
        .iter()
        .filter(|(c, _)| c.order() == 0)
        .map(|(_, b)| b.len())
        .max()
        .unwrap_or(1);

    for k in root_size.saturating_sub(1)..=candidates.len() {
        for subset in candidates.iter().copied().combinations(k) {
            if violations(&blocks, &subset, n, true).is_empty() {
                return Ok((k, subset));
            }
        }
    }
    unreachable!("the full candidate set is always sufficient")
}

/// Number of pairs in the complete NAC graph on `n` scenarios.
pub fn full_pair_count(n: u64) -> u64 {
    n * n.saturating_sub(1) / 2
}

/// Sufficiency, necessity and (when the set is small enough) exhaustive
/// minimality in one report.
pub fn verify(set: &ScenarioSet, graph: &NacGraph, exhaustive_cap: usize) -> Result<VerificationReport> {
    let mut report = check_sufficiency(set, graph)?;
    if report.sufficient {
        report.necessary_edges = check_necessity(set, graph)?.necessary_edges;
    }
    if set.len() <= exhaustive_cap {
        let (min, _) = min_nac_exhaustive(set, exhaustive_cap)?;
        report.min_cardinality = Some(min);
        report.minimal = Some(report.sufficient && graph.len() == min);
    }
    Ok(report)
}
