use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use snac::bench::run_bench;
use snac::config::{derive_seed, ExperimentConfig};
use snac::mssp::{build_model, count_nacs, write_model, Format};
use snac::oracle::{full_pair_count, verify, DEFAULT_EXHAUSTIVE_CAP};
use snac::reduce::{run_snac, NacGraph};
use snac::scenario::ScenarioSet;

/// Minimum non-anticipativity pair sets for stochastic programs with
/// gradually realized uncertainty.
#[derive(Parser)]
#[command(name = "snac", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Base seed; overrides the config value.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides the config value.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Pairs {
    Full,
    Snac,
}

#[derive(Subcommand)]
enum Command {
    /// Write the configured scenario set.
    Sample(Common),
    /// Compute the SNAC pair set.
    Reduce {
        #[command(flatten)]
        common: Common,
        /// Include the event set and block that produced each edge.
        #[arg(long)]
        provenance: bool,
    },
    /// Check a NAC graph for sufficiency, necessity and minimality.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Graph file from `reduce`; the SNAC graph is computed when omitted.
        #[arg(long)]
        graph: Option<PathBuf>,
        /// Largest scenario count for the exhaustive minimum search.
        #[arg(long, default_value_t = DEFAULT_EXHAUSTIVE_CAP)]
        exhaustive_cap: usize,
    },
    /// Write the planning model with full or SNAC pairs.
    Emit {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Pairs::Snac)]
        pairs: Pairs,
        #[arg(long, default_value_t = Format::Lp)]
        format: Format,
        /// Use the pairs of this graph file instead of `--pairs`.
        #[arg(long)]
        graph: Option<PathBuf>,
    },
    /// Run seeded repetitions and print a size and timing table.
    Bench(Common),
}

struct RunContext {
    cfg: ExperimentConfig,
    seed: u64,
    out: PathBuf,
}

impl RunContext {
    fn load(common: &Common) -> anyhow::Result<Self> {
        let cfg = ExperimentConfig::load(&common.config)?;
        let seed = common.seed.unwrap_or(cfg.seed);
        let out = common
            .out
            .clone()
            .or_else(|| cfg.output_dir())
            .unwrap_or_else(|| PathBuf::from("."));
        Ok(Self { cfg, seed, out })
    }

    fn set(&self) -> anyhow::Result<ScenarioSet> {
        Ok(self.cfg.scenario_set(self.seed, 0)?)
    }

    fn create(&self, name: &str) -> anyhow::Result<(PathBuf, BufWriter<File>)> {
        fs::create_dir_all(&self.out).with_context(|| format!("creating {}", self.out.display()))?;
        let path = self.out.join(name);
        let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        Ok((path, BufWriter::new(file)))
    }
}

fn load_graph(path: &Path, set: &ScenarioSet) -> anyhow::Result<NacGraph> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let graph = NacGraph::parse_text(&text).with_context(|| format!("parsing {}", path.display()))?;
    if graph.scenario_count() != set.len() {
        bail!(
            "{} covers {} scenarios but the config yields {}",
            path.display(),
            graph.scenario_count(),
            set.len()
        );
    }
    Ok(graph)
}

fn sample(common: &Common) -> anyhow::Result<ExitCode> {
    let ctx = RunContext::load(common)?;
    let set = ctx.set()?;
    let (path, mut w) = ctx.create("scenarios.txt")?;
    w.write_all(set.to_text().as_bytes())?;
    w.flush()?;
    let seed = matches!(set.origin(), snac::scenario::Origin::Sampled { .. })
        .then(|| format!(" (seed {})", derive_seed(ctx.seed, 0)))
        .unwrap_or_default();
    println!("{} scenarios{seed} -> {}", set.len(), path.display());
    Ok(ExitCode::SUCCESS)
}

fn reduce(common: &Common, provenance: bool) -> anyhow::Result<ExitCode> {
    let ctx = RunContext::load(common)?;
    let set = ctx.set()?;
    let start = Instant::now();
    let graph = run_snac(&set);
    let secs = start.elapsed().as_secs_f64();
    let (path, mut w) = ctx.create("nac_graph.txt")?;
    w.write_all(graph.to_text(provenance).as_bytes())?;
    w.flush()?;
    let full = full_pair_count(set.len() as u64);
    if full == 0 {
        println!("{} pairs", graph.len());
    } else {
        let ratio = 100.0 * (1.0 - graph.len() as f64 / full as f64);
        println!("{} pairs (full: {full}), reduction {ratio:.1}%", graph.len());
    }
    println!("time {secs:.3} s -> {}", path.display());
    Ok(ExitCode::SUCCESS)
}

fn verify_cmd(common: &Common, graph: Option<&Path>, cap: usize) -> anyhow::Result<ExitCode> {
    let ctx = RunContext::load(common)?;
    let set = ctx.set()?;
    if set.is_empty() {
        bail!("the configured scenario set is empty");
    }
    let graph = match graph {
        Some(p) => load_graph(p, &set)?,
        None => run_snac(&set),
    };
    let report = verify(&set, &graph, cap)?;
    print!("{}", report.to_text(&graph));
    if common.out.is_some() || ctx.cfg.output_dir.is_some() {
        let (path, mut w) = ctx.create("verify.json")?;
        serde_json::to_writer_pretty(&mut w, &report)?;
        w.flush()?;
        println!("report -> {}", path.display());
    }
    let ok = report.sufficient && report.all_necessary() && report.minimal != Some(false);
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn emit(common: &Common, pairs: Pairs, format: Format, graph: Option<&Path>) -> anyhow::Result<ExitCode> {
    let ctx = RunContext::load(common)?;
    let case = ctx
        .cfg
        .case_study()?
        .context("emit needs a case study ([case] in the config)")?;
    let set = ctx.set()?;
    let (tag, graph) = match (graph, pairs) {
        (Some(p), _) => ("graph", load_graph(p, &set)?),
        (None, Pairs::Full) => ("full", NacGraph::complete(set.len())),
        (None, Pairs::Snac) => ("snac", run_snac(&set)),
    };
    let pair_list: Vec<_> = graph.pairs().collect();
    let model = build_model(&case, &set, &pair_list)?;
    let (path, mut w) = ctx.create(&format!("model_{tag}.{format}"))?;
    let summary = write_model(&model, format, &mut w).with_context(|| format!("writing {}", path.display()))?;
    w.flush()?;
    let expected = count_nacs(
        pair_list.len() as u64,
        case.drugs.len() as u64,
        case.trial_count() as u64,
        case.horizon as u64,
        set.len() as u64,
    );
    println!(
        "{} pairs, {} NAC rows ({} rows, {} variables, {} binary) -> {}",
        pair_list.len(),
        summary.nac_rows,
        summary.rows,
        summary.variables,
        summary.binaries,
        path.display()
    );
    if summary.nac_rows != expected {
        bail!("NAC row count {} differs from the closed form {expected}", summary.nac_rows);
    }
    Ok(ExitCode::SUCCESS)
}

fn bench(common: &Common) -> anyhow::Result<ExitCode> {
    let ctx = RunContext::load(common)?;
    let report = run_bench(&ctx.cfg, ctx.seed)?;
    let text = report.to_text();
    print!("{text}");
    if common.out.is_some() || ctx.cfg.output_dir.is_some() {
        let (_, mut w) = ctx.create("bench.txt")?;
        w.write_all(text.as_bytes())?;
        w.flush()?;
        let (path, mut w) = ctx.create("bench.json")?;
        w.write_all(report.to_json().as_bytes())?;
        w.flush()?;
        println!("report -> {}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Sample(c) => sample(c),
        Command::Reduce { common, provenance } => reduce(common, *provenance),
        Command::Verify {
            common,
            graph,
            exhaustive_cap,
        } => verify_cmd(common, graph.as_deref(), *exhaustive_cap),
        Command::Emit {
            common,
            pairs,
            format,
            graph,
        } => emit(common, *pairs, *format, graph.as_deref()),
        Command::Bench(c) => bench(c),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
