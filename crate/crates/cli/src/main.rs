//! `usf`: run the experiment drivers, dump sampled forests, and check the
//! sampler against exact small-graph oracles.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 resource guard,
//! 3 invariant violation (including a failed `validate`).

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use usf_core::experiments::{emit_csv, parse_config, run_experiment, write_csv, ExperimentConfig, ExperimentError};
use usf_core::graph::{make_box, read_edge_list, Boundary, BoxSpec, Graph};
use usf_core::oracle::{complete_graph, cycle_graph, matrix_tree_count, random_connected_graph, spanning_trees, uniformity_test};
use usf_core::rng::RngSeed;
use usf_core::wilson::{wilson_ust, write_forest};

const PRESETS: [(&str, &str); 4] = [
    ("connectivity", include_str!("../presets/connectivity.toml")),
    ("intersection", include_str!("../presets/intersection.toml")),
    ("indistinguishability", include_str!("../presets/indistinguishability.toml")),
    ("tail-decorrelation", include_str!("../presets/tail-decorrelation.toml")),
];

#[derive(Parser)]
#[command(name = "usf", version, about = "Uniform spanning forest experiments")]
struct Cli {
    /// Worker threads for replica fan-out; defaults to the core count.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Same-tree probability of two fixed sites across box sizes.
    Connectivity(RunArgs),
    /// Intersections of two independent lazy walks.
    Intersection(RunArgs),
    /// Conditional component properties across root tuples.
    Indistinguishability(RunArgs),
    /// Decorrelation of distant windows from an inner configuration.
    TailDecorrelation(RunArgs),
    /// Sample one spanning tree and print it in the forest format.
    Sample(SampleArgs),
    /// Check the sampler against exhaustive enumeration on small graphs.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Configuration file; the built-in preset when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed, overriding the configuration. Configuration integers
    /// are signed 64-bit, which bounds the seed.
    #[arg(long, value_parser = clap::value_parser!(u64).range(..=i64::MAX as u64))]
    seed: Option<u64>,
    /// Replica count, overriding the configuration.
    #[arg(long)]
    replicas: Option<u64>,
    /// First replica id, for splitting a run into independent parts.
    #[arg(long)]
    first_replica: Option<u64>,
    /// CSV destination; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the effective configuration and exit.
    #[arg(long)]
    print_config: bool,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long, default_value_t = 2)]
    dimension: usize,
    #[arg(long, default_value_t = 8)]
    side: usize,
    #[arg(long, default_value = "wired")]
    boundary: String,
    /// Edge-list file to sample from instead of a box.
    #[arg(long, conflicts_with_all = ["dimension", "side", "boundary"])]
    graph: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Trees sampled per test graph.
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

enum Failure {
    Usage(String),
    Guard(String),
    Invariant(String),
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::ResourceGuard { .. } => Failure::Guard(e.to_string()),
            ExperimentError::Invariant(_) => Failure::Invariant(e.to_string()),
            ExperimentError::Config(_) | ExperimentError::Record(_) => Failure::Usage(e.to_string()),
        }
    }
}

fn io_failure(path: &Path, e: io::Error) -> Failure {
    Failure::Usage(format!("{}: {e}", path.display()))
}

fn load_config(name: &str, args: &RunArgs) -> Result<ExperimentConfig, Failure> {
    let text = match &args.config {
        Some(path) => fs::read_to_string(path).map_err(|e| io_failure(path, e))?,
        None => PRESETS
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, t)| t.to_string())
            .expect("every driver has a preset"),
    };
    let mut cfg = parse_config(&text).map_err(|e| Failure::Usage(format!("config: {e}")))?;
    if cfg.experiment.name.as_str() != name {
        return Err(Failure::Usage(format!(
            "config is for experiment {}, not {name}",
            cfg.experiment.name.as_str()
        )));
    }
    if let Some(seed) = args.seed {
        cfg.seeds.master = seed;
    }
    if let Some(n) = args.replicas {
        cfg.seeds.replicas = n;
    }
    if let Some(first) = args.first_replica {
        cfg.seeds.first_replica = first;
    }
    if let Some(out) = &args.out {
        cfg.experiment.output = Some(out.display().to_string());
    }
    Ok(cfg)
}

fn run_driver(name: &str, args: &RunArgs) -> Result<(), Failure> {
    let cfg = load_config(name, args)?;
    if args.print_config {
        print!("{}", usf_core::experiments::to_toml(&cfg));
        return Ok(());
    }
    let report = run_experiment(&cfg)?;
    match &cfg.experiment.output {
        Some(path) => {
            log::info!("writing {} rows to {path}", report.records.len());
            emit_csv(&report.records, Path::new(path)).map_err(ExperimentError::from)?;
            print!("{}", report.summary);
        }
        None => {
            write_csv(&report.records, io::stdout().lock()).map_err(ExperimentError::from)?;
            eprint!("{}", report.summary);
        }
    }
    Ok(())
}

fn sample(args: &SampleArgs) -> Result<(), Failure> {
    let g: Graph = match &args.graph {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
            read_edge_list(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?
        }
        None => {
            let boundary = match args.boundary.as_str() {
                "torus" => Boundary::Torus,
                "wired" => Boundary::Wired,
                "free" => Boundary::Free,
                other => return Err(Failure::Usage(format!("unknown boundary {other}"))),
            };
            let spec = BoxSpec::new(args.dimension, args.side, boundary);
            make_box(&spec).map_err(|e| Failure::Usage(e.to_string()))?
        }
    };
    if !g.is_connected() {
        return Err(Failure::Usage("the graph is disconnected".into()));
    }
    let root = g.sink().unwrap_or(0);
    log::info!("sampling a spanning tree of {} vertices rooted at {root}", g.vertex_count());
    let f = wilson_ust(&g, root, &[], &mut RngSeed::new(args.seed, 0).rng())
        .map_err(|e| Failure::Invariant(e.to_string()))?;
    let text = write_forest(&f);
    match &args.out {
        Some(path) => fs::write(path, text).map_err(|e| io_failure(path, e)),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Usage(e.to_string())),
    }
}

fn validate(args: &ValidateArgs) -> Result<(), Failure> {
    let mut failed = 0;
    let seed = RngSeed::new(args.seed, 0);
    for (i, (name, g)) in [("triangle", cycle_graph(3)), ("4-cycle", cycle_graph(4)), ("K4", complete_graph(4))]
        .into_iter()
        .enumerate()
    {
        let mut rng = seed.child(i as u64).rng();
        let test = uniformity_test(&g, args.samples, |_| {
            wilson_ust(&g, 0, &[], &mut rng).expect("connected test graph").edge_set()
        });
        let pass = test.p_value >= 0.01;
        failed += usize::from(!pass);
        println!(
            "{} uniformity on {name}: chi2 {:.3}, dof {}, p {:.4}",
            if pass { "PASS" } else { "FAIL" },
            test.statistic,
            test.dof,
            test.p_value
        );
    }
    let mut rng = seed.child(99).rng();
    let mut mismatches = 0;
    for k in 0..20 {
        let g = random_connected_graph(2 + k % 7, k % 5, &mut rng);
        if matrix_tree_count(&g) != spanning_trees(&g).len() as u128 {
            mismatches += 1;
        }
    }
    failed += usize::from(mismatches > 0);
    println!(
        "{} matrix-tree count equals enumeration on 20 random graphs ({mismatches} mismatches)",
        if mismatches == 0 { "PASS" } else { "FAIL" }
    );
    if failed > 0 {
        return Err(Failure::Invariant(format!("{failed} oracle checks failed")));
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match &cli.command {
        Command::Connectivity(a) => run_driver("connectivity", a),
        Command::Intersection(a) => run_driver("intersection", a),
        Command::Indistinguishability(a) => run_driver("indistinguishability", a),
        Command::TailDecorrelation(a) => run_driver("tail-decorrelation", a),
        Command::Sample(a) => sample(a),
        Command::Validate(a) => validate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Guard(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Invariant(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
    }
}
