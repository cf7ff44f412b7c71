//! `wdcs`: extract the commonsense subgraph of Wikidata and analyse edge files.

mod config;

use std::collections::{BTreeMap, HashSet};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use wdcs::analytics::{
    compute_overlap, compute_stats, relation_frequency_distribution, temporal_diff, GraphStats,
    PageRankConfig, StatsOptions,
};
use wdcs::commonness::{Combiner, CommonnessThreshold, Comparison};
use wdcs::concept::ConceptRule;
use wdcs::extsort::SortConfig;
use wdcs::pipeline::{self, AtomicFile, ExtractConfig};
use wdcs::tabular::{EdgeReader, MalformedPolicy};
use wdcs::{Error, ExecMode, Result};

#[derive(Parser)]
#[command(name = "wdcs", version, about = "Commonsense subgraph extraction and analytics for Wikidata edge files")]
struct Cli {
    /// key=value file supplying flag defaults; command-line flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Filter, map and consolidate a Wikidata edge file into CSKG edges.
    #[command(args_override_self = true)]
    Extract(ExtractArgs),
    /// Node/edge counts, relation histogram, mean degree and top PageRank nodes.
    #[command(args_override_self = true)]
    Stats(StatsArgs),
    /// Label-triple overlap between two labelled edge files.
    #[command(args_override_self = true)]
    Overlap(OverlapArgs),
    /// Per-relation growth between two stats reports.
    #[command(args_override_self = true)]
    Diff(DiffArgs),
    /// Most frequent relations of an edge file or stats report.
    #[command(args_override_self = true)]
    Freqdist(FreqdistArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Tsv,
}

#[derive(Args)]
struct Parallelism {
    /// Worker threads; defaults to the number of available processors.
    #[arg(long)]
    jobs: Option<usize>,
}

impl Parallelism {
    fn mode(&self) -> ExecMode {
        match self.jobs {
            Some(1) => ExecMode::Sequential,
            _ => ExecMode::Parallel,
        }
    }

    fn run<R: Send>(&self, f: impl FnOnce(ExecMode) -> Result<R> + Send) -> Result<R> {
        let mode = self.mode();
        wdcs::exec::with_jobs(self.jobs, || f(mode))?
    }
}

#[derive(Args)]
struct ExtractArgs {
    #[arg(long)]
    edges: PathBuf,
    #[arg(long)]
    nodes: PathBuf,
    /// Term frequency table: `term<TAB>frequency` per line.
    #[arg(long)]
    freq: PathBuf,
    /// CSKG edge output; the provenance sidecar is written beside it.
    #[arg(long)]
    out: PathBuf,
    /// Extraction report JSON; defaults to `<out stem>.report.json`.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long, default_value_t = wdcs::commonness::DEFAULT_THRESHOLD)]
    threshold: f64,
    /// How token frequencies combine for multi-word labels: min, product or lookup.
    #[arg(long, default_value = "min")]
    combiner: Combiner,
    /// Relation mapping TSV replacing the builtin table.
    #[arg(long)]
    mapping: Option<PathBuf>,
    #[arg(long, default_value = "en")]
    language: String,
    /// Abort on the first malformed row instead of skipping it.
    #[arg(long)]
    strict: bool,
    /// Keep labels strictly above the threshold rather than at or above it.
    #[arg(long)]
    strict_above: bool,
    #[arg(long)]
    allow_leading_digit: bool,
    /// Store symmetric relations once with endpoints in ascending order.
    #[arg(long)]
    symmetric_canonical: bool,
    /// Entries in the report's relation census.
    #[arg(long, default_value_t = pipeline::DEFAULT_CENSUS_TOP)]
    top: usize,
    #[command(flatten)]
    parallelism: Parallelism,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long)]
    edges: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Number of top PageRank nodes to report.
    #[arg(long, default_value_t = 10)]
    top: usize,
    #[arg(long)]
    strict: bool,
    #[arg(long, default_value_t = 0.85)]
    damping: f64,
    #[arg(long, default_value_t = 1e-9)]
    tolerance: f64,
    #[arg(long, default_value_t = 200)]
    max_iterations: usize,
    #[command(flatten)]
    parallelism: Parallelism,
}

#[derive(Args)]
struct OverlapArgs {
    #[arg(long)]
    left: PathBuf,
    #[arg(long)]
    right: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args)]
struct DiffArgs {
    /// Stats report of the older snapshot.
    #[arg(long)]
    old: PathBuf,
    /// Stats report of the newer snapshot.
    #[arg(long)]
    new: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args)]
#[command(group = clap::ArgGroup::new("input").required(true).args(["edges", "stats"]))]
struct FreqdistArgs {
    #[arg(long)]
    edges: Option<PathBuf>,
    /// Stats report whose relation histogram is ranked.
    #[arg(long)]
    stats: Option<PathBuf>,
    #[arg(long, default_value_t = 50)]
    top: usize,
    /// Comma-separated relations left out before ranking.
    #[arg(long, value_delimiter = ',')]
    exclude: Vec<String>,
    #[arg(long)]
    strict: bool,
    /// `rank<TAB>relation<TAB>count` output; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn policy(strict: bool) -> MalformedPolicy {
    if strict {
        MalformedPolicy::Abort
    } else {
        MalformedPolicy::SkipAndCount
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => {
            let mut file = AtomicFile::create(path)?;
            file.write_all(text.as_bytes())?;
            file.commit()
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| Error::io("<stdout>", e))
        }
    }
}

fn default_report_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "edges".into());
    out.with_file_name(format!("{stem}.report.json"))
}

fn cmd_extract(args: ExtractArgs) -> Result<()> {
    let report = args.report.clone().unwrap_or_else(|| default_report_path(&args.out));
    let mut config = ExtractConfig::new(&args.edges, &args.nodes, &args.freq, &args.out, report);
    config.mapping = args.mapping;
    config.threshold = CommonnessThreshold::new(args.threshold)?;
    config.comparison = if args.strict_above {
        Comparison::StrictAbove
    } else {
        Comparison::Inclusive
    };
    config.combiner = args.combiner;
    config.language = args.language;
    config.malformed = policy(args.strict);
    config.concept_rule = ConceptRule {
        allow_leading_digit: args.allow_leading_digit,
        ..ConceptRule::default()
    };
    config.symmetric_canonical = args.symmetric_canonical;
    config.census_top = args.top;
    let summary = args.parallelism.run(|mode| {
        config.mode = mode;
        config.sort = SortConfig {
            mode,
            ..SortConfig::default()
        };
        pipeline::extract(&config)
    })?;
    let s = &summary.stages;
    log::info!(
        "extract: {} input, {} concept, {} common, {} mapped, {} after blacklist, {} written to {}",
        s.input,
        s.after_concept_filter,
        s.after_commonness_filter,
        s.after_mapping,
        s.after_blacklist,
        s.after_dedup,
        args.out.display()
    );
    Ok(())
}

fn cmd_stats(args: StatsArgs) -> Result<()> {
    let stats = args.parallelism.run(|mode| {
        let options = StatsOptions {
            top_k: args.top,
            pagerank: PageRankConfig {
                damping: args.damping,
                tolerance: args.tolerance,
                max_iterations: args.max_iterations,
            },
            mode,
            malformed: policy(args.strict),
        };
        compute_stats(&args.edges, &options)
    })?;
    let text = match args.format {
        Format::Json => stats.to_json(),
        Format::Tsv => stats.render_tsv(),
    };
    emit(args.out.as_deref(), &text)
}

fn cmd_overlap(args: OverlapArgs) -> Result<()> {
    let report = compute_overlap(&args.left, &args.right)?;
    let text = match args.format {
        Format::Json => report.to_json(),
        Format::Tsv => report.render_tsv(),
    };
    emit(args.out.as_deref(), &text)
}

fn cmd_diff(args: DiffArgs) -> Result<()> {
    let old = GraphStats::load(&args.old)?;
    let new = GraphStats::load(&args.new)?;
    let report = temporal_diff(&old, &new);
    let text = match args.format {
        Format::Json => report.to_json(),
        Format::Tsv => report.render_tsv(),
    };
    emit(args.out.as_deref(), &text)
}

fn cmd_freqdist(args: FreqdistArgs) -> Result<()> {
    let histogram = match (&args.edges, &args.stats) {
        (Some(path), _) => {
            let mut histogram = BTreeMap::new();
            for edge in EdgeReader::open(path, policy(args.strict))? {
                *histogram.entry(edge?.relation).or_insert(0u64) += 1;
            }
            histogram
        }
        (None, Some(path)) => GraphStats::load(path)?.relation_histogram,
        (None, None) => unreachable!("clap enforces the input group"),
    };
    let exclude: HashSet<String> = args.exclude.iter().map(|r| r.trim().to_string()).filter(|r| !r.is_empty()).collect();
    let ranked = relation_frequency_distribution(&histogram, args.top, &exclude);
    let text = wdcs::analytics::freqdist::render_tsv(&ranked);
    emit(args.out.as_deref(), &text)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Extract(a) => cmd_extract(a),
        Command::Stats(a) => cmd_stats(a),
        Command::Overlap(a) => cmd_overlap(a),
        Command::Diff(a) => cmd_diff(a),
        Command::Freqdist(a) => cmd_freqdist(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .format_target(false)
        .init();
    let args = match config::expand(std::env::args_os().collect()) {
        Ok(args) => args,
        Err(e) => {
            eprintln!("wdcs: {e}");
            return ExitCode::from(2);
        }
    };
    let cli = Cli::parse_from(args);
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("wdcs: {e}");
            ExitCode::from(if e.is_configuration() { 2 } else { 1 })
        }
    }
}
