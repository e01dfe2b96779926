use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use semgraph::config::{PipelineConfig, ProviderKind};
use semgraph::core::association::MatchStrategy;
use semgraph::core::worldgraph::TriplePattern;
use semgraph::dataset::load_dataset;
use semgraph::export::{graph_dot, graph_json};
use semgraph::hierarchy::{bundled_taxonomy, load_taxonomy, prune_stats};
use semgraph::pipeline::{remote_config, report_json, Pipeline};
use semgraph::provider::{record_session, RemoteProvider};
use semgraph::world_io::{read_world, world_to_json};
use semgraph::{synthetic, Error};

const USAGE_ERROR: u8 = 2;

#[derive(Parser)]
#[command(name = "semgraph", version, about = "Build and query semantic world graphs from RGB-D datasets")]
struct Cli {
    /// More log output on stderr (repeat for more).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the pipeline over a dataset and write world, graph and report files.
    Run(RunArgs),
    /// Print triples of a world file matching a pattern such as "? ObjHasColor ?".
    Query {
        #[arg(long)]
        world: PathBuf,
        #[arg(long)]
        pattern: String,
    },
    /// Taxonomy utilities.
    Taxonomy {
        #[command(subcommand)]
        command: TaxonomyCommand,
    },
    /// Record replay files for a dataset from the remote vision service.
    Record {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        endpoint: String,
        #[arg(long)]
        out: PathBuf,
        /// Pipeline config supplying retry and rate-limit settings.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Write a synthetic dataset with ground truth.
    GenSynthetic {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 5)]
        objects: usize,
        #[arg(long, default_value_t = 10)]
        frames: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Subcommand)]
enum TaxonomyCommand {
    /// Node, leaf and depth counts, before and after pruning.
    Stats {
        /// Hierarchy file; the bundled hierarchy when omitted.
        #[arg(long)]
        file: Option<PathBuf>,
        /// Comma-separated subtree roots to prune.
        #[arg(long, value_delimiter = ',', default_value = "animal,person")]
        prune: Vec<String>,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_parser = ["replay", "remote"])]
    provider: Option<String>,
    /// Report failing frames and continue instead of stopping.
    #[arg(long)]
    skip_bad_frames: bool,
    #[arg(long)]
    stride: Option<usize>,
    #[arg(long)]
    max_range_m: Option<f64>,
    #[arg(long)]
    score_threshold: Option<f64>,
    #[arg(long)]
    merge_radius_m: Option<f64>,
    #[arg(long)]
    link_distance_m: Option<f64>,
    #[arg(long, value_parser = ["optimal", "greedy"])]
    association: Option<String>,
    #[arg(long)]
    taxonomy: Option<PathBuf>,
    #[arg(long)]
    detections_dir: Option<PathBuf>,
    #[arg(long)]
    endpoint: Option<String>,
}

enum Failure {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e)
    }
}

type CmdResult = Result<(), Failure>;

fn load_config(path: Option<&Path>) -> Result<PipelineConfig, Error> {
    match path {
        Some(p) => PipelineConfig::load(p),
        None => Ok(PipelineConfig::default()),
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), Error> {
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.into(),
        source,
    })
}

fn cmd_run(args: RunArgs) -> CmdResult {
    let mut cfg = load_config(args.config.as_deref())?;
    if let Some(p) = &args.provider {
        cfg.provider = p.parse::<ProviderKind>()?;
    }
    if let Some(a) = &args.association {
        cfg.association = if a == "greedy" { MatchStrategy::Greedy } else { MatchStrategy::Optimal };
    }
    macro_rules! override_field {
        ($($field:ident),*) => {$(
            if let Some(v) = args.$field.clone() {
                cfg.$field = v;
            }
        )*};
    }
    override_field!(stride, max_range_m, score_threshold, merge_radius_m, link_distance_m);
    if args.taxonomy.is_some() {
        cfg.taxonomy_path = args.taxonomy.clone();
    }
    if args.detections_dir.is_some() {
        cfg.detections_dir = args.detections_dir.clone();
    }
    if args.endpoint.is_some() {
        cfg.endpoint = args.endpoint.clone();
    }
    cfg.validate()?;

    let dataset = load_dataset(&args.dataset)?;
    let mut pipeline = Pipeline::from_config(cfg, &dataset.root)?;
    let (world, report) = pipeline.run(&dataset, args.skip_bad_frames)?;

    std::fs::create_dir_all(&args.out).map_err(|source| Error::Io {
        path: args.out.clone(),
        source,
    })?;
    write_file(&args.out.join("world.json"), &world_to_json(&world))?;
    write_file(&args.out.join("graph.json"), &graph_json(&world))?;
    write_file(&args.out.join("graph.dot"), &graph_dot(&world))?;
    write_file(&args.out.join("report.json"), &report_json(&report))?;
    log::info!(
        "{} frames, {} skipped, {} instances, {} triples",
        report.frames.len(),
        report.skipped.len(),
        report.instances,
        report.triples
    );
    Ok(())
}

fn cmd_query(world: &Path, pattern: &str) -> CmdResult {
    let pattern: TriplePattern = pattern
        .parse()
        .map_err(|e| Failure::Usage(format!("bad pattern: {e}")))?;
    let world = read_world(world)?;
    for t in world.query(&pattern) {
        println!("{t}");
    }
    Ok(())
}

fn cmd_taxonomy_stats(file: Option<&Path>, prune: &[String]) -> CmdResult {
    let tax = match file {
        Some(p) => load_taxonomy(p)?,
        None => bundled_taxonomy(),
    };
    let roots: Vec<&str> = prune.iter().map(String::as_str).filter(|s| !s.is_empty()).collect();
    let stats = prune_stats(&tax, &roots)?;
    println!("{}", serde_json::to_string_pretty(&stats).expect("stats serialize"));
    Ok(())
}

fn cmd_record(dataset: &Path, endpoint: &str, out: &Path, config: Option<&Path>) -> CmdResult {
    let cfg = load_config(config)?;
    let dataset = load_dataset(dataset)?;
    let provider = RemoteProvider::new(remote_config(&cfg, endpoint)?)?;
    let manifest = record_session(&provider, &dataset.frames, out)?;
    if !manifest.failed.is_empty() {
        log::warn!(
            "{} of {} frames failed; see manifest.json",
            manifest.failed.len(),
            dataset.frames.len()
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .target(env_logger::Target::Stderr)
        .init();

    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Query { world, pattern } => cmd_query(&world, &pattern),
        Command::Taxonomy {
            command: TaxonomyCommand::Stats { file, prune },
        } => cmd_taxonomy_stats(file.as_deref(), &prune),
        Command::Record {
            dataset,
            endpoint,
            out,
            config,
        } => cmd_record(&dataset, &endpoint, &out, config.as_deref()),
        Command::GenSynthetic {
            out,
            objects,
            frames,
            seed,
        } => synthetic::generate(&out, objects, frames, seed)
            .map(|_| ())
            .map_err(Failure::from),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(USAGE_ERROR)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
