//! `reisim` command-line interface.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use reisim_cli::config::{self, LoadedConfig};
use reisim_cli::csvio;
use reisim_cli::outputs::{self, Manifest, OutputFormat};
use reisim_cli::recipes::{self, RecipeName, RecipeOptions};
use reisim_cli::timing;

use reisim_core::engine::{self, InterrogationRecord, ReadEvent, SimConfig, SweepPoint};
use reisim_core::lane::{self, LaneSide, ReadRateCurve};
use reisim_core::rng;
use reisim_core::sensing;

#[derive(Parser)]
#[command(
    name = "reisim",
    version,
    about = "Discrete-event simulator of vehicle-mounted UHF RFID readers \
             interrogating passive roadside tags"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one run; write trace, interrogation log, summary, resolved
    /// config, and manifest.
    Run(RunArgs),
    /// Rerun a base config across values of one dotted config field.
    Sweep(SweepArgs),
    /// Execute a named built-in experiment recipe.
    Recipe(RecipeArgs),
    /// Print every protocol command, reply, and gap duration for audit.
    TimingTable(TimingTableArgs),
    /// Print sensor read-time quantiles across a reader-tag distance sweep.
    SensorSweep(SensorSweepArgs),
    /// Estimate lateral lane position from interrogation logs and a
    /// read-rate curve.
    EstimateLane(EstimateLaneArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Configuration file (JSON).
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Base random seed; overrides the config's seed.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Output directory root; overrides $REISIM_OUT_DIR (default ".").
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads for parallel runs (0 = all cores). Results are
    /// independent of this setting.
    #[arg(long, value_name = "N", default_value_t = 0)]
    jobs: usize,
    /// Format for tabular output.
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,
}

impl CommonArgs {
    fn out_root(&self) -> PathBuf {
        self.out
            .clone()
            .or_else(|| std::env::var_os("REISIM_OUT_DIR").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("."))
    }

    /// Loads the config file, or starts from the defaults when none is
    /// given; then applies the seed override.
    fn load(&self) -> Result<LoadedConfig> {
        let mut loaded = match &self.config {
            Some(path) => config::load_config(path)?,
            None => LoadedConfig { sim: SimConfig::default(), lane: None },
        };
        if let Some(seed) = self.seed {
            loaded.sim.seed = seed;
        }
        Ok(loaded)
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Dotted config field to vary (e.g. gen2.encoding, radio.tx_power_dbm).
    #[arg(long, value_name = "FIELD")]
    param: String,
    /// Values: a JSON array, or a comma-separated list of scalars.
    #[arg(long, value_name = "LIST")]
    values: String,
}

#[derive(Args)]
struct RecipeArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Recipe name; one of fig9-encoding, fig10-correlation,
    /// fig11-scenarios, fig13-sensor-time.
    name: String,
    /// Seeds or trials per point; defaults to the recipe's standard count.
    #[arg(long, value_name = "N")]
    replications: Option<u32>,
}

#[derive(Args)]
struct TimingTableArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Word count priced into the user-memory read pair.
    #[arg(long, value_name = "N", default_value_t = 4)]
    words: u32,
}

#[derive(Args)]
struct SensorSweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Nearest reader-tag distance (m).
    #[arg(long, value_name = "METERS")]
    dmin: f64,
    /// Farthest reader-tag distance (m).
    #[arg(long, value_name = "METERS")]
    dmax: f64,
    /// Distance grid step (m).
    #[arg(long, value_name = "METERS")]
    step: f64,
    /// Independent read trials per distance.
    #[arg(long, value_name = "N", default_value_t = 500)]
    trials: u32,
}

#[derive(Args)]
struct EstimateLaneArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Left-antenna interrogation log (CSV as written by `run`).
    #[arg(long, value_name = "PATH")]
    left: Option<PathBuf>,
    /// Right-antenna interrogation log (CSV as written by `run`).
    #[arg(long, value_name = "PATH")]
    right: Option<PathBuf>,
    /// Read-rate curve CSV (offset_m, p_read).
    #[arg(long, value_name = "PATH")]
    curve: PathBuf,
    /// Counting-window width (s); defaults to the config's lane.tau_s.
    #[arg(long, value_name = "SECONDS")]
    tau: Option<f64>,
    /// Initial position estimate (m).
    #[arg(long, value_name = "METERS", default_value_t = 0.0)]
    pos_init: f64,
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(&args),
        Command::Sweep(args) => cmd_sweep(&args),
        Command::Recipe(args) => cmd_recipe(&args),
        Command::TimingTable(args) => cmd_timing_table(&args),
        Command::SensorSweep(args) => cmd_sensor_sweep(&args),
        Command::EstimateLane(args) => cmd_estimate_lane(&args),
    };
    if let Err(e) = result {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn trace_text(trace: &[ReadEvent], format: OutputFormat) -> String {
    match format {
        OutputFormat::Csv => {
            csvio::to_csv(&outputs::TRACE_HEADER, &outputs::trace_rows(trace))
        }
        OutputFormat::Json => outputs::to_pretty_json(&trace),
    }
}

fn interrogations_text(records: &[InterrogationRecord], format: OutputFormat) -> String {
    match format {
        OutputFormat::Csv => {
            csvio::to_csv(&outputs::INTERROGATION_HEADER, &outputs::interrogation_rows(records))
        }
        OutputFormat::Json => outputs::to_pretty_json(&records),
    }
}

fn cmd_run(args: &RunArgs) -> Result<()> {
    let loaded = args.common.load()?;
    let result = engine::run(&loaded.sim)?;
    let format = args.common.format;
    let ext = format.extension();
    let files = vec![
        ("resolved-config.json".to_string(), config::emit_config(&loaded)),
        (format!("trace.{ext}"), trace_text(&result.trace, format)),
        (format!("interrogations.{ext}"), interrogations_text(&result.interrogations, format)),
        (format!("summary.{ext}"), outputs::summary_text(&result.summary, format)),
    ];
    let manifest =
        Manifest::new("run", loaded.sim.seed, 1, &config::canonical_config_bytes(&loaded));
    let dir = args.common.out_root().join("run");
    let written = outputs::write_artifacts(&dir, manifest, &files)
        .with_context(|| format!("writing run artifacts under {}", dir.display()))?;
    println!(
        "run: {} reads in {} simulated seconds ({:.3} reads/s)",
        result.summary.total_reads, result.summary.duration_s, result.summary.reads_per_second
    );
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(())
}

/// `--values` accepts a JSON array or a comma-separated list of scalars;
/// bare words become strings.
fn parse_values(text: &str) -> Vec<serde_json::Value> {
    if let Ok(serde_json::Value::Array(items)) = serde_json::from_str(text) {
        return items;
    }
    text.split(',')
        .map(|tok| {
            let tok = tok.trim();
            serde_json::from_str(tok)
                .unwrap_or_else(|_| serde_json::Value::String(tok.to_string()))
        })
        .collect()
}

fn value_label(v: &serde_json::Value) -> String {
    match v {
        serde_json::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Runs one sweep point per value, in parallel, with the same per-point
/// seed derivation the engine's sequential sweep uses.
fn sweep_points(
    base: &SimConfig,
    param: &str,
    values: &[serde_json::Value],
    jobs: usize,
) -> Result<Vec<SweepPoint>> {
    let points = recipes::with_thread_pool(jobs, || {
        values
            .par_iter()
            .enumerate()
            .map(|(k, v)| {
                let mut cfg = engine::apply_parameter(base, param, v)?;
                cfg.seed = rng::stream(base.seed, "sweep-value", &[k as u64]);
                let result = engine::run(&cfg)?;
                Ok(SweepPoint { value: v.clone(), summary: result.summary })
            })
            .collect::<Result<Vec<_>, engine::EngineError>>()
    })??;
    Ok(points)
}

fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let loaded = args.common.load()?;
    let values = parse_values(&args.values);
    if values.is_empty() {
        bail!("--values produced an empty list");
    }
    let points = sweep_points(&loaded.sim, &args.param, &values, args.common.jobs)?;
    let format = args.common.format;
    let table = outputs::table_text(
        &["value", "duration_s", "total_reads", "reads_per_second"],
        &points,
        |p| {
            vec![
                value_label(&p.value),
                p.summary.duration_s.to_string(),
                p.summary.total_reads.to_string(),
                p.summary.reads_per_second.to_string(),
            ]
        },
        format,
    );
    #[derive(serde::Serialize)]
    struct SweepConfigRecord<'a> {
        config: &'a LoadedConfig,
        param: &'a str,
        values: &'a [serde_json::Value],
    }
    let canonical = serde_json::to_vec(&SweepConfigRecord {
        config: &loaded,
        param: &args.param,
        values: &values,
    })
    .expect("sweep record serializes");
    let files = vec![
        ("resolved-config.json".to_string(), config::emit_config(&loaded)),
        (format!("sweep.{}", format.extension()), table),
    ];
    let manifest = Manifest::new("sweep", loaded.sim.seed, values.len() as u32, &canonical);
    let dir = args.common.out_root().join("sweep");
    let written = outputs::write_artifacts(&dir, manifest, &files)
        .with_context(|| format!("writing sweep artifacts under {}", dir.display()))?;
    println!("sweep over {} across {} values", args.param, values.len());
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_recipe(args: &RecipeArgs) -> Result<()> {
    // Name resolution fails before any simulation starts.
    let name: RecipeName = args.name.parse()?;
    let opts = RecipeOptions {
        seed: args.common.seed.unwrap_or(0),
        replications: args.replications,
        jobs: args.common.jobs,
        format: args.common.format,
    };
    if let Some(r) = args.replications {
        if r == 0 {
            bail!("--replications must be >= 1");
        }
    }
    let report = recipes::run_recipe(name, &args.common.out_root(), &opts)?;
    println!("recipe {} complete", report.name);
    for path in report.files {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_timing_table(args: &TimingTableArgs) -> Result<()> {
    if args.words == 0 || args.words > 255 {
        bail!("--words must be in 1..=255, got {}", args.words);
    }
    let loaded = args.common.load()?;
    let rows = timing::timing_table(&loaded.sim.gen2, args.words);
    let text = outputs::table_text(
        &timing::TIMING_HEADER,
        &rows,
        timing::timing_row_fields,
        args.common.format,
    );
    print!("{text}");
    Ok(())
}

fn cmd_sensor_sweep(args: &SensorSweepArgs) -> Result<()> {
    if !(args.dmin > 0.0) {
        bail!("--dmin must be positive, got {}", args.dmin);
    }
    if args.dmax < args.dmin {
        bail!("--dmax ({}) must be >= --dmin ({})", args.dmax, args.dmin);
    }
    if !(args.step > 0.0) {
        bail!("--step must be positive, got {}", args.step);
    }
    if args.trials == 0 {
        bail!("--trials must be >= 1");
    }
    let mut spec = recipes::SensorTimeSpec::new(args.common.seed.unwrap_or(0), args.trials);
    spec.distance_min_m = args.dmin;
    spec.distance_max_m = args.dmax;
    spec.distance_step_m = args.step;
    let distances = spec.distances();
    let rows = sensing::sweep_distances(&spec.fixture(), &distances, spec.trials, spec.base_seed)?;
    let text = outputs::table_text(
        &["distance_m", "median_s", "p10_s", "p90_s", "attempts_mean"],
        &rows,
        |r| {
            vec![
                r.distance_m.to_string(),
                r.median_s.to_string(),
                r.p10_s.to_string(),
                r.p90_s.to_string(),
                r.attempts_mean.to_string(),
            ]
        },
        args.common.format,
    );
    print!("{text}");
    Ok(())
}

fn read_interrogations(path: &Path) -> Result<Vec<InterrogationRecord>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    let records = outputs::parse_interrogations_csv(&text)
        .with_context(|| format!("parsing {}", path.display()))?;
    Ok(records)
}

fn cmd_estimate_lane(args: &EstimateLaneArgs) -> Result<()> {
    let loaded = args.common.load()?;
    let scenario = &loaded.sim.scenario;
    let tau_s = args
        .tau
        .or(loaded.lane.as_ref().map(|l| l.tau_s))
        .context("provide --tau or a config with a lane section")?;
    let bound = lane::tau_max(
        scenario.lane_width_m,
        scenario.speed_profile.max_speed(),
        scenario.max_turn_angle_rad,
    )?;
    if tau_s >= bound {
        bail!(
            "window {tau_s} s reaches the lane-crossing bound W/(2 v cos(alpha_max)) = {bound} s; \
             a vehicle could cross a half lane within one window"
        );
    }
    let curve_text = std::fs::read_to_string(&args.curve)
        .with_context(|| format!("cannot read {}", args.curve.display()))?;
    let curve = ReadRateCurve::from_csv_str(&curve_text)
        .with_context(|| format!("parsing {}", args.curve.display()))?;

    let mut per_side: Vec<Vec<lane::CountWindow>> = Vec::new();
    for (path, side) in
        [(&args.left, LaneSide::Left), (&args.right, LaneSide::Right)]
    {
        if let Some(path) = path {
            let records = read_interrogations(path)?;
            per_side.push(lane::window_counts(&records, scenario, tau_s, side)?);
        }
    }
    let windows = match per_side.len() {
        0 => bail!("provide at least one of --left / --right"),
        1 => per_side.remove(0),
        _ => lane::merge_window_counts(&per_side[0], &per_side[1])?,
    };
    let estimates = lane::estimate_positions_over_windows(&windows, &curve, args.pos_init)?;
    #[derive(serde::Serialize)]
    struct PositionRow {
        t_s: f64,
        pos_m: f64,
    }
    let rows: Vec<PositionRow> = estimates
        .iter()
        .map(|e| PositionRow { t_s: e.t_s, pos_m: e.pos_m })
        .collect();
    let text = outputs::table_text(
        &["t_s", "pos_m"],
        &rows,
        |r| vec![r.t_s.to_string(), r.pos_m.to_string()],
        args.common.format,
    );
    print!("{text}");
    Ok(())
}
