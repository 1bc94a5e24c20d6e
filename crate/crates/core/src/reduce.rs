//! Minimum-cardinality NAC pair selection.
//!
//! Event sets are swept from the highest order down to zero. For every block
//! of scenarios that an event set cannot tell apart, the block must end up
//! connected; components it already has (through edges chosen at higher
//! orders) are joined by a star of new edges. Edges chosen at one order are
//! only committed once the whole order has been processed, so sibling blocks
//! at the same order never see each other's edges.

use std::collections::HashSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dsu::DisjointSets;
use crate::error::{Error, Result};
use crate::scenario::{parse_numbers, ScenarioSet};
use crate::uncertainty::{enumerate_event_lattice, EventVector};

/// One NAC pair, with the event set and block that required it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NacEdge {
    pub a: usize,
    pub b: usize,
    /// Order of the event set at which the edge was added.
    pub level: u32,
    pub cut: Option<EventVector>,
    /// Smallest scenario id of the block that required the edge.
    pub block_min: Option<usize>,
}

/// Scenario pairs on which NACs are enforced.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NacGraph {
    n: usize,
    edges: Vec<NacEdge>,
}

impl NacGraph {
    pub fn new(n: usize) -> Self {
        Self { n, edges: Vec::new() }
    }

    /// Graph with the given unordered pairs, without provenance.
    pub fn from_pairs(n: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut g = Self::new(n);
        for (a, b) in pairs {
            g.push(NacEdge {
                a,
                b,
                level: 0,
                cut: None,
                block_min: None,
            })?;
        }
        Ok(g)
    }

    /// Every pair of the `n` scenarios.
    pub fn complete(n: usize) -> Self {
        let edges = (0..n)
            .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
            .map(|(a, b)| NacEdge {
                a,
                b,
                level: 0,
                cut: None,
                block_min: None,
            })
            .collect();
        Self { n, edges }
    }

    fn push(&mut self, mut e: NacEdge) -> Result<()> {
        if e.a > e.b {
            std::mem::swap(&mut e.a, &mut e.b);
        }
        if e.a == e.b {
            return Err(Error::GraphMismatch(format!("self-loop on {}", e.a)));
        }
        if e.b >= self.n {
            return Err(Error::GraphMismatch(format!("edge ({}, {}) outside {} scenarios", e.a, e.b, self.n)));
        }
        if self.edges.iter().any(|x| x.a == e.a && x.b == e.b) {
            return Err(Error::GraphMismatch(format!("duplicate edge ({}, {})", e.a, e.b)));
        }
        self.edges.push(e);
        Ok(())
    }

    pub fn scenario_count(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[NacEdge] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().map(|e| (e.a, e.b))
    }

    /// Copy of the graph without edge `index`.
    pub fn without_edge(&self, index: usize) -> Self {
        let mut g = self.clone();
        g.edges.remove(index);
        g
    }

    /// Header `n edge_count`, then one `a b level` line per edge. With
    /// provenance each line also carries the event set (comma separated) and
    /// the block's smallest id.
    pub fn to_text(&self, provenance: bool) -> String {
        let mut out = format!("{} {}\n", self.n, self.edges.len());
        for e in &self.edges {
            let _ = write!(out, "{} {} {}", e.a, e.b, e.level);
            if provenance {
                match (&e.cut, e.block_min) {
                    (Some(c), Some(m)) => {
                        let counts: Vec<String> = c.counts().iter().map(u32::to_string).collect();
                        let _ = write!(out, " {} {}", counts.join(","), m);
                    }
                    _ => out.push_str(" - -"),
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn parse_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "missing header".into(),
        })?;
        let header: Vec<usize> = parse_numbers(1, header)?;
        let [n, count] = header[..] else {
            return Err(Error::Parse {
                line: 1,
                msg: "header must be `n edge_count`".into(),
            });
        };
        let mut g = Self::new(n);
        for (i, line) in lines {
            let line_no = i + 1;
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != 3 && toks.len() != 5 {
                return Err(Error::Parse {
                    line: line_no,
                    msg: "expected `a b level` or `a b level cut block_min`".into(),
                });
            }
            let nums: Vec<usize> = parse_numbers(line_no, &toks[..3].join(" "))?;
            let (cut, block_min) = if toks.len() == 5 && toks[3] != "-" {
                let counts = toks[3]
                    .split(',')
                    .map(|t| {
                        t.parse::<u32>().map_err(|_| Error::Parse {
                            line: line_no,
                            msg: format!("bad event vector {:?}", toks[3]),
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                let m = parse_numbers::<usize>(line_no, toks[4])?[0];
                (Some(EventVector(counts)), Some(m))
            } else {
                (None, None)
            };
            g.push(NacEdge {
                a: nums[0],
                b: nums[1],
                level: nums[2] as u32,
                cut,
                block_min,
            })
            .map_err(|e| Error::Parse {
                line: line_no,
                msg: e.to_string(),
            })?;
        }
        if g.len() != count {
            return Err(Error::Parse {
                line: 1,
                msg: format!("header announces {count} edges, found {}", g.len()),
            });
        }
        Ok(g)
    }
}

/// Committed NAC edges as adjacency lists.
#[derive(Clone, Debug, Default)]
pub struct Snapshot {
    adj: Vec<Vec<usize>>,
}

impl Snapshot {
    pub fn new(n: usize) -> Self {
        Self { adj: vec![Vec::new(); n] }
    }

    pub fn from_pairs(n: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut s = Self::new(n);
        for (a, b) in pairs {
            s.add_edge(a, b);
        }
        s
    }

    pub fn add_edge(&mut self, a: usize, b: usize) {
        self.adj[a].push(b);
        self.adj[b].push(a);
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }
}

/// Reusable scratch space for restricting a snapshot to a block.
struct ComponentFinder {
    position: Vec<usize>,
    stamp: Vec<u32>,
    current: u32,
}

impl ComponentFinder {
    fn new(n: usize) -> Self {
        Self {
            position: vec![0; n],
            stamp: vec![0; n],
            current: 0,
        }
    }

    fn components(&mut self, snapshot: &Snapshot, block: &[usize]) -> Vec<Vec<usize>> {
        self.current += 1;
        for (pos, &v) in block.iter().enumerate() {
            self.position[v] = pos;
            self.stamp[v] = self.current;
        }
        let mut dsu = DisjointSets::new(block.len());
        for (pos, &v) in block.iter().enumerate() {
            for &w in snapshot.neighbors(v) {
                if self.stamp[w] == self.current {
                    dsu.union(pos, self.position[w]);
                }
            }
        }

        let mut order: Vec<usize> = (0..block.len()).collect();
        order.sort_by_key(|&p| block[p]);
        let mut comp_of_root = vec![usize::MAX; block.len()];
        let mut comps: Vec<Vec<usize>> = Vec::new();
        for p in order {
            let root = dsu.find(p);
            if comp_of_root[root] == usize::MAX {
                comp_of_root[root] = comps.len();
                comps.push(Vec::new());
            }
            comps[comp_of_root[root]].push(block[p]);
        }
        comps
    }
}

/// Connected components of the subgraph induced by `block` on the snapshot's
/// edges, ordered by smallest member; members are listed in increasing order.
pub fn components_under(snapshot: &Snapshot, block: &[usize]) -> Vec<Vec<usize>> {
    let n = block.iter().copied().max().map_or(0, |m| m + 1).max(snapshot.adj.len());
    ComponentFinder::new(n).components(snapshot, block)
}

/// Joins components with a star: the smallest id of every later component is
/// linked to the smallest id of the first one.
pub fn connect_components(components: &[Vec<usize>]) -> Vec<(usize, usize)> {
    let Some(first) = components.first() else {
        return Vec::new();
    };
    let hub = first.iter().copied().min().expect("component is non-empty");
    components[1..]
        .iter()
        .map(|c| {
            let rep = c.iter().copied().min().expect("component is non-empty");
            (hub.min(rep), hub.max(rep))
        })
        .collect()
}

/// Computes a minimum set of scenario pairs whose NACs enforce
/// non-anticipativity for every permissible event set.
pub fn run_snac(set: &ScenarioSet) -> NacGraph {
    let n = set.len();
    let mut graph = NacGraph::new(n);
    if n < 2 {
        return graph;
    }
    let lattice = enumerate_event_lattice(set.params()).expect("scenario sets always have parameters");
    let max_order = lattice.max_order();

    let mut snapshot = Snapshot::new(n);
    let mut finder = ComponentFinder::new(n);
    let mut seen: HashSet<(usize, usize)> = HashSet::new();

    for (order, cuts) in lattice.levels() {
        // the full event set separates every scenario
        if *order == max_order && max_order > 0 {
            continue;
        }
        let mut pending: Vec<NacEdge> = Vec::new();
        for cut in cuts {
            let partition = set.partition_unchecked(cut);
            for block in partition.blocks.iter().filter(|b| b.len() > 1) {
                let comps = finder.components(&snapshot, block);
                for (a, b) in connect_components(&comps) {
                    pending.push(NacEdge {
                        a,
                        b,
                        level: *order,
                        cut: Some(cut.clone()),
                        block_min: Some(block[0]),
                    });
                }
            }
        }
        for e in pending {
            // sibling blocks at one order are disjoint on their new edges, so a
            // repeat here would be a bug rather than a legitimate tie
            debug_assert!(!seen.contains(&(e.a, e.b)));
            if seen.insert((e.a, e.b)) {
                snapshot.add_edge(e.a, e.b);
                graph.edges.push(e);
            }
        }
    }
    graph
}
