//! `anchorkit`: dataset generation, hidden-state analysis and reporting.

mod analyze;
mod config;
mod failure;
mod gen;
mod output;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use anchorkit::lenskit::{NormMode, RegionMode};
use anchorkit::probekit::Aggregation;
use anchorkit::scorer::ReportFormat;
use anchorkit::shapegen::Family;
use anchorkit::taskforge::NameSetKind;
use clap::{Args, Parser, Subcommand};

use config::{RunConfig, CONFIG_VERSION};
use failure::Failure;
use output::OutDir;

/// Environment variable naming the default output root.
const OUT_ENV: &str = "ANCHORKIT_OUT";
const DEFAULT_OUT_ROOT: &str = "anchorkit-out";

#[derive(Parser)]
#[command(name = "anchorkit", version, about = "Visual correspondence datasets and hidden-state probes")]
struct Cli {
    /// TOML run config; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for per-instance work (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Print failures as one JSON object on stderr.
    #[arg(long, global = true)]
    json_errors: bool,
    /// Output directory (default: $ANCHORKIT_OUT/<command>).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render standalone shapes.
    GenShapes(GenShapesArgs),
    /// Build correspondence instances and their manifest.
    GenTasks(GenTasksArgs),
    /// Build a name-teaching finetuning set.
    GenFinetune(GenFinetuneArgs),
    /// Layer-wise representational probe over hidden-state bundles.
    Probe(ProbeArgs),
    /// Logit Lens token sets and their Jaccard curve.
    Lens(LensArgs),
    /// Parse and score response records.
    Score(ScoreArgs),
    /// Join Direct, CoT and probe results into a table.
    Report(ReportArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::GenShapes(_) => "gen-shapes",
            Command::GenTasks(_) => "gen-tasks",
            Command::GenFinetune(_) => "gen-finetune",
            Command::Probe(_) => "probe",
            Command::Lens(_) => "lens",
            Command::Score(_) => "score",
            Command::Report(_) => "report",
        }
    }
}

#[derive(Args)]
struct GenShapesArgs {
    #[arg(long)]
    family: Option<Family>,
    /// Complexity; repeat for several.
    #[arg(long = "n")]
    n: Vec<u32>,
    #[arg(long)]
    count: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct GenTasksArgs {
    #[arg(long)]
    family: Option<Family>,
    /// Complexity; repeat for several.
    #[arg(long = "n")]
    n: Vec<u32>,
    #[arg(long)]
    count: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Emit the squiggle training pairs instead of evaluation instances.
    #[arg(long)]
    task_finetune: bool,
    /// Do not draw A-D labels or the REF box.
    #[arg(long)]
    no_annotations: bool,
    /// Give the ground-truth match a fresh color.
    #[arg(long)]
    recolor_gt: bool,
}

#[derive(Args)]
struct GenFinetuneArgs {
    #[arg(long)]
    name_set: Option<NameSetKind>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    records_per_task: Option<u32>,
}

#[derive(Args)]
struct ProbeArgs {
    #[arg(long)]
    bundles: Option<PathBuf>,
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long)]
    aggregation: Option<Aggregation>,
    #[arg(long)]
    subset: Option<String>,
    #[arg(long)]
    task: Option<String>,
}

#[derive(Args)]
struct LensArgs {
    #[arg(long)]
    bundles: Option<PathBuf>,
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long)]
    unembedding: Option<PathBuf>,
    #[arg(long)]
    norm_mode: Option<NormMode>,
    #[arg(long)]
    region_mode: Option<RegionMode>,
    /// Half-open layer range as `start..end`.
    #[arg(long, value_parser = parse_range)]
    layers: Option<[usize; 2]>,
    /// `instance_id:image:row:col`; repeat for several.
    #[arg(long)]
    trajectory: Vec<String>,
}

#[derive(Args)]
struct ScoreArgs {
    /// Response-record JSONL; repeat for several.
    #[arg(long)]
    responses: Vec<PathBuf>,
    #[arg(long)]
    model_id: Option<String>,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    direct: Vec<PathBuf>,
    #[arg(long)]
    cot: Vec<PathBuf>,
    /// Probe output directory or its summary JSON.
    #[arg(long)]
    probe: Vec<PathBuf>,
    #[arg(long)]
    model_id: Option<String>,
    #[arg(long)]
    format: Option<ReportFormat>,
}

fn parse_range(s: &str) -> Result<[usize; 2], String> {
    let (a, b) = s.split_once("..").ok_or_else(|| format!("{s:?} is not start..end"))?;
    let a = a.parse().map_err(|e| format!("{a:?}: {e}"))?;
    let b = b.parse().map_err(|e| format!("{b:?}: {e}"))?;
    Ok([a, b])
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn set_vec<T>(slot: &mut Vec<T>, v: Vec<T>) {
    if !v.is_empty() {
        *slot = v;
    }
}

/// Merges flags into the loaded config, keeping only the section that runs.
fn resolve(command: Command, mut file: RunConfig) -> RunConfig {
    let mut out = RunConfig {
        version: Some(CONFIG_VERSION),
        ..RunConfig::default()
    };
    match command {
        Command::GenShapes(a) => {
            let mut c = file.gen_shapes.take().unwrap_or_default();
            set(&mut c.family, a.family);
            set_vec(&mut c.complexity, a.n);
            set(&mut c.count, a.count);
            set(&mut c.seed, a.seed);
            out.gen_shapes = Some(c);
        }
        Command::GenTasks(a) => {
            let mut c = file.gen_tasks.take().unwrap_or_default();
            set(&mut c.family, a.family);
            set_vec(&mut c.complexity, a.n);
            set(&mut c.count, a.count);
            set(&mut c.seed, a.seed);
            c.task_finetune |= a.task_finetune;
            if a.no_annotations {
                c.task.annotations_rendered = false;
            }
            c.task.recolor_gt |= a.recolor_gt;
            out.gen_tasks = Some(c);
        }
        Command::GenFinetune(a) => {
            let mut c = file.gen_finetune.take().unwrap_or_default();
            set(&mut c.name_set, a.name_set);
            set(&mut c.seed, a.seed);
            set(&mut c.teaching.records_per_task, a.records_per_task);
            out.gen_finetune = Some(c);
        }
        Command::Probe(a) => {
            let mut c = file.probe.take().unwrap_or_default();
            set(&mut c.bundles, a.bundles.map(Some));
            set(&mut c.manifest, a.manifest.map(Some));
            set(&mut c.aggregation, a.aggregation);
            set(&mut c.subset, a.subset);
            set(&mut c.task, a.task);
            out.probe = Some(c);
        }
        Command::Lens(a) => {
            let mut c = file.lens.take().unwrap_or_default();
            set(&mut c.bundles, a.bundles.map(Some));
            set(&mut c.manifest, a.manifest.map(Some));
            set(&mut c.unembedding, a.unembedding.map(Some));
            set(&mut c.norm_mode, a.norm_mode);
            set(&mut c.region_mode, a.region_mode);
            set(&mut c.layers, a.layers.map(Some));
            set_vec(&mut c.trajectory, a.trajectory);
            out.lens = Some(c);
        }
        Command::Score(a) => {
            let mut c = file.score.take().unwrap_or_default();
            set_vec(&mut c.responses, a.responses);
            set(&mut c.model_id, a.model_id.map(Some));
            out.score = Some(c);
        }
        Command::Report(a) => {
            let mut c = file.report.take().unwrap_or_default();
            set_vec(&mut c.direct, a.direct);
            set_vec(&mut c.cot, a.cot);
            set_vec(&mut c.probe, a.probe);
            set(&mut c.model_id, a.model_id.map(Some));
            set(&mut c.format, a.format);
            out.report = Some(c);
        }
    }
    out
}

fn out_root(flag: Option<PathBuf>, command: &str) -> PathBuf {
    flag.unwrap_or_else(|| {
        let root = std::env::var_os(OUT_ENV).map_or_else(|| PathBuf::from(DEFAULT_OUT_ROOT), PathBuf::from);
        root.join(command)
    })
}

fn execute(cfg: &RunConfig, out: &OutDir) -> Result<usize, Failure> {
    if let Some(c) = &cfg.gen_shapes {
        gen::gen_shapes(c, out)
    } else if let Some(c) = &cfg.gen_tasks {
        gen::gen_tasks(c, out)
    } else if let Some(c) = &cfg.gen_finetune {
        gen::gen_finetune(c, out)
    } else if let Some(c) = &cfg.probe {
        analyze::probe(c, out)
    } else if let Some(c) = &cfg.lens {
        analyze::lens(c, out)
    } else if let Some(c) = &cfg.score {
        report::score(c, out)
    } else if let Some(c) = &cfg.report {
        report::report(c, out)
    } else {
        Err(Failure::config("no command section"))
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(Failure::config("--jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Failure::new(failure::FailureKind::Runtime, e.to_string()))?;
    }
    let file = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let name = cli.command.name();
    let out = OutDir::create(out_root(cli.out, name))?;
    let cfg = resolve(cli.command, file);
    out.write_snapshot(&cfg)?;
    out.write_version_stamp()?;
    out.log(&format!("{name}: start"))?;
    match execute(&cfg, &out) {
        Ok(n) => out.log(&format!("{name}: done, {n} items")),
        Err(e) => {
            let _ = out.log(&format!("{name}: failed: {e}"));
            Err(e)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() && std::env::args().any(|a| a == "--json-errors") => {
            eprintln!("{}", Failure::config(e.to_string().trim_end()).to_json());
            return ExitCode::from(failure::FailureKind::Config.exit_code() as u8);
        }
        Err(e) => e.exit(),
    };
    let json = cli.json_errors;
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if json {
                eprintln!("{}", e.to_json());
            } else {
                eprintln!("anchorkit: {e}");
            }
            ExitCode::from(e.kind.exit_code() as u8)
        }
    }
}
