//! Seeded sweeps reporting pair counts, NAC counts and timings per row.

use std::fmt::Write as _;
use std::time::Instant;

use serde::Serialize;

use crate::config::{derive_seed, BenchRow, ExperimentConfig, ModelTiming};
use crate::error::Result;
use crate::mssp::{build_model, count_nacs, CaseStudy};
use crate::oracle::full_pair_count;
use crate::reduce::{run_snac, NacGraph};
use crate::scenario::{ScenarioSet, DEFAULT_SCENARIO_LIMIT};
use crate::uncertainty::GradualParameter;

#[derive(Clone, Debug, Serialize)]
pub struct Repetition {
    /// Sampling seed; absent for full sets.
    pub seed: Option<u64>,
    pub pairs: u64,
    pub snac_nacs: Option<u64>,
    pub snac_seconds: f64,
    pub model_seconds: Option<f64>,
    pub full_model_seconds: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RowReport {
    pub label: String,
    pub scenarios: u64,
    pub full_pairs: u64,
    pub full_nacs: Option<u64>,
    pub pairs_avg: f64,
    pub pairs_max: u64,
    pub nacs_avg: Option<f64>,
    pub nacs_max: Option<u64>,
    pub snac_seconds_avg: f64,
    pub snac_seconds_max: f64,
    pub model_seconds_avg: Option<f64>,
    pub full_model_seconds_avg: Option<f64>,
    pub repetitions: Vec<Repetition>,
}

#[derive(Clone, Debug, Serialize)]
pub struct BenchReport {
    pub seed: u64,
    pub rows: Vec<RowReport>,
}

/// Shape used for NAC counting and model timing.
struct ModelShape {
    drugs: u64,
    trials: u64,
    horizon: u64,
    case: Option<CaseStudy>,
}

struct RowPlan {
    label: String,
    params: Vec<GradualParameter>,
    sample: Option<u64>,
    shape: Option<ModelShape>,
}

fn plan_row(row: &BenchRow) -> Result<RowPlan> {
    let trials = row.outcomes - 1;
    let params = (0..row.products)
        .map(|i| GradualParameter::stage_failure(i, trials))
        .collect::<Result<Vec<_>>>()?;
    let case = match &row.case {
        Some(id) => CaseStudy::builtin(id)?,
        None => CaseStudy::uniform(row.products, trials as usize, row.horizon),
    };
    Ok(RowPlan {
        label: row.label(),
        params,
        sample: row.scenarios,
        shape: Some(ModelShape {
            drugs: row.products as u64,
            trials: trials as u64,
            horizon: row.horizon as u64,
            case: Some(case),
        }),
    })
}

fn plan_config(cfg: &ExperimentConfig) -> Result<RowPlan> {
    let params = cfg.build_parameters()?;
    let probe = cfg.scenario_set(cfg.seed, 0)?;
    let sample = match probe.origin() {
        crate::scenario::Origin::Sampled { requested, .. } => Some(*requested),
        _ => None,
    };
    let shape = cfg.case_study()?.map(|case| ModelShape {
        drugs: case.drugs.len() as u64,
        trials: case.trial_count() as u64,
        horizon: case.horizon as u64,
        case: Some(case),
    });
    Ok(RowPlan {
        label: cfg.name.clone().unwrap_or_else(|| format!("{} params, {} scenarios", params.len(), probe.len())),
        params,
        sample,
        shape,
    })
}

fn time_model(case: &CaseStudy, set: &ScenarioSet, graph: &NacGraph) -> Result<f64> {
    let start = Instant::now();
    let pairs: Vec<_> = graph.pairs().collect();
    let model = build_model(case, set, &pairs)?;
    let mut rows = 0u64;
    model.for_each_row(false, |_| rows += 1);
    std::hint::black_box(rows);
    Ok(start.elapsed().as_secs_f64())
}

fn run_row(plan: &RowPlan, seed: u64, repetitions: u32, timing: ModelTiming, fixed_set: Option<&dyn Fn(u32) -> Result<ScenarioSet>>) -> Result<RowReport> {
    let mut reps = Vec::with_capacity(repetitions as usize);
    let mut n = 0u64;
    for rep in 0..repetitions {
        let rep_seed = plan.sample.map(|_| derive_seed(seed, rep));
        let set = match (fixed_set, plan.sample) {
            (Some(make), _) => make(rep)?,
            (None, Some(count)) => ScenarioSet::sample(plan.params.clone(), count, rep_seed.unwrap())?,
            (None, None) => ScenarioSet::full_cartesian(plan.params.clone(), DEFAULT_SCENARIO_LIMIT)?,
        };
        n = set.len() as u64;

        let start = Instant::now();
        let graph = run_snac(&set);
        let snac_seconds = start.elapsed().as_secs_f64();

        let model_case = plan.shape.as_ref().and_then(|s| s.case.as_ref());
        let model_seconds = match (timing, model_case) {
            (ModelTiming::Snac | ModelTiming::Both, Some(case)) => Some(time_model(case, &set, &graph)?),
            _ => None,
        };
        let full_model_seconds = match (timing, model_case) {
            (ModelTiming::Both, Some(case)) => Some(time_model(case, &set, &NacGraph::complete(set.len()))?),
            _ => None,
        };
        reps.push(Repetition {
            seed: rep_seed,
            pairs: graph.len() as u64,
            snac_nacs: plan
                .shape
                .as_ref()
                .map(|s| count_nacs(graph.len() as u64, s.drugs, s.trials, s.horizon, n)),
            snac_seconds,
            model_seconds,
            full_model_seconds,
        });
    }

    let count = reps.len() as f64;
    let avg = |f: &dyn Fn(&Repetition) -> Option<f64>| -> Option<f64> {
        let vals: Option<Vec<f64>> = reps.iter().map(f).collect();
        vals.map(|v| v.iter().sum::<f64>() / count)
    };
    let full_pairs = full_pair_count(n);
    Ok(RowReport {
        label: plan.label.clone(),
        scenarios: n,
        full_pairs,
        full_nacs: plan.shape.as_ref().map(|s| count_nacs(full_pairs, s.drugs, s.trials, s.horizon, n)),
        pairs_avg: avg(&|r| Some(r.pairs as f64)).unwrap_or(0.0),
        pairs_max: reps.iter().map(|r| r.pairs).max().unwrap_or(0),
        nacs_avg: avg(&|r| r.snac_nacs.map(|x| x as f64)),
        nacs_max: reps.iter().filter_map(|r| r.snac_nacs).max(),
        snac_seconds_avg: avg(&|r| Some(r.snac_seconds)).unwrap_or(0.0),
        snac_seconds_max: reps.iter().map(|r| r.snac_seconds).fold(0.0, f64::max),
        model_seconds_avg: avg(&|r| r.model_seconds),
        full_model_seconds_avg: avg(&|r| r.full_model_seconds),
        repetitions: reps,
    })
}

/// Runs every bench row of `cfg` (or the config itself as a single row).
pub fn run_bench(cfg: &ExperimentConfig, seed: u64) -> Result<BenchReport> {
    let timing = cfg.bench.model_timing;
    let mut rows = Vec::new();
    if cfg.rows.is_empty() {
        let plan = plan_config(cfg)?;
        let make = |rep: u32| cfg.scenario_set(seed, rep);
        rows.push(run_row(&plan, seed, cfg.repetitions, timing, Some(&make))?);
    } else {
        for row in &cfg.rows {
            rows.push(run_row(&plan_row(row)?, seed, cfg.repetitions, timing, None)?);
        }
    }
    Ok(BenchReport { seed, rows })
}

fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map_or_else(|| "-".to_string(), |x| x.to_string())
}

impl BenchReport {
    /// Aligned plain-text table.
    pub fn to_text(&self) -> String {
        let header = [
            "instance",
            "scenarios",
            "pairs full",
            "pairs avg",
            "pairs max",
            "NACs full",
            "NACs avg",
            "NACs max",
            "SNAC s avg",
            "SNAC s max",
            "model s avg",
            "full model s avg",
        ];
        let mut table: Vec<Vec<String>> = vec![header.iter().map(|s| s.to_string()).collect()];
        for r in &self.rows {
            table.push(vec![
                r.label.clone(),
                r.scenarios.to_string(),
                r.full_pairs.to_string(),
                format!("{:.1}", r.pairs_avg),
                r.pairs_max.to_string(),
                opt(r.full_nacs),
                opt(r.nacs_avg.map(|x| format!("{x:.1}"))),
                opt(r.nacs_max),
                format!("{:.4}", r.snac_seconds_avg),
                format!("{:.4}", r.snac_seconds_max),
                opt(r.model_seconds_avg.map(|x| format!("{x:.4}"))),
                opt(r.full_model_seconds_avg.map(|x| format!("{x:.4}"))),
            ]);
        }
        let widths: Vec<usize> = (0..header.len())
            .map(|c| table.iter().map(|row| row[c].len()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for (k, row) in table.iter().enumerate() {
            let cells: Vec<String> = row
                .iter()
                .enumerate()
                .map(|(c, cell)| {
                    if c == 0 {
                        format!("{cell:<w$}", w = widths[c])
                    } else {
                        format!("{cell:>w$}", w = widths[c])
                    }
                })
                .collect();
            let _ = writeln!(out, "{}", cells.join("  ").trim_end());
            if k == 0 {
                let total = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
                let _ = writeln!(out, "{}", "-".repeat(total));
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
