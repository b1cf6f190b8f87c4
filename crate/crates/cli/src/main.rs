//! `har`: command-line front end for the activity-recognition pipeline.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use har_core::evaluation::{fit_base_models, prepare_split};
use har_core::features::{write_feature_csv, Layout};
use har_core::partition::{activity_descriptors, cohesion, descriptor_points, learn_partition};
use har_core::report::{confusion_svg, metrics_csv, predictions_csv, report_json, MetricsRow};
use har_core::{
    generate, load_dataset, run_experiment, BaseMethod, DayPartition, EventStream, HarError, LabelMap, RoutineSpec,
};

use config::{ExperimentConfig, SCHEMA};

#[derive(Debug)]
enum Failure {
    Usage(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Runtime(_) => 1,
            Failure::Usage(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Runtime(m) => m,
        }
    }
}

/// Bad input files count as configuration errors; everything else is runtime.
fn classify(e: HarError) -> Failure {
    match e {
        HarError::Config(_) | HarError::Json(_) | HarError::Parse { .. } => Failure::Usage(e.to_string()),
        _ => Failure::Runtime(e.to_string()),
    }
}

type Outcome<T = ()> = Result<T, Failure>;

#[derive(Parser)]
#[command(name = "har", version, about = "Event-window activity recognition for smart-home sensor logs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tune, retrain and evaluate one feature variant; writes report.json,
    /// metrics.csv, confusion.svg and predictions.csv.
    #[command(after_help = SCHEMA)]
    Run(ExperimentArgs),
    /// Run every variant in `methods` and write one metrics.csv row each.
    #[command(after_help = SCHEMA)]
    Compare(CompareArgs),
    /// Generate a synthetic CASAS log from a JSON routine spec.
    Synth(SynthArgs),
    /// Print the day partition learned on the training split as JSON.
    #[command(after_help = SCHEMA)]
    Partition(DumpArgs),
    /// Write feature vectors for every window as CSV, models fitted on train.
    #[command(after_help = SCHEMA)]
    Features(FeatureArgs),
}

#[derive(Args)]
struct ExperimentArgs {
    /// TOML experiment config; flags below override its values.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Event log in CASAS text format.
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    label_map: Option<PathBuf>,
    #[arg(short, long)]
    output_dir: Option<PathBuf>,
    /// Feature variant such as `SWMI+cyclic+location` or `Combined`.
    #[arg(long)]
    variant: Option<String>,
    /// Keep only the first N days of the log.
    #[arg(long)]
    first_days: Option<u32>,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    common: ExperimentArgs,
    /// Comma-separated variants; replaces `methods` from the config.
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<String>>,
}

#[derive(Args)]
struct SynthArgs {
    /// JSON routine spec.
    spec: PathBuf,
    /// Output log path.
    out: PathBuf,
    /// Override the spec's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the spec's number of days.
    #[arg(long)]
    days: Option<u32>,
}

#[derive(Args)]
struct DumpArgs {
    #[command(flatten)]
    common: ExperimentArgs,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FeatureArgs {
    #[command(flatten)]
    dump: DumpArgs,
    /// Window size; defaults to the smallest grid window. Ignored for DW.
    #[arg(long)]
    window: Option<usize>,
}

fn resolve_config(args: &ExperimentArgs) -> Outcome<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::load(path).map_err(Failure::Usage)?,
        None => ExperimentConfig::default(),
    };
    if let Some(d) = &args.dataset {
        cfg.dataset = Some(d.clone());
    }
    if let Some(m) = &args.label_map {
        cfg.label_map = Some(m.clone());
    }
    if let Some(o) = &args.output_dir {
        cfg.output_dir = o.clone();
    }
    if let Some(v) = &args.variant {
        cfg.set_variant(v).map_err(Failure::Usage)?;
    }
    if args.first_days.is_some() {
        cfg.first_days = args.first_days;
    }
    cfg.validate().map_err(Failure::Usage)?;
    Ok(cfg)
}

fn dataset_name(cfg: &ExperimentConfig) -> String {
    cfg.dataset
        .as_deref()
        .and_then(Path::file_stem)
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn load(cfg: &ExperimentConfig) -> Outcome<EventStream> {
    let path = cfg.dataset.as_deref().expect("validated");
    let map = match &cfg.label_map {
        Some(p) => LabelMap::load(p).map_err(classify)?,
        None => LabelMap::casas_default(),
    };
    if !path.is_file() {
        return Err(Failure::Runtime(format!("dataset not found: {}", path.display())));
    }
    let loaded = load_dataset(path, &map).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
    let diag = &loaded.diagnostics;
    if diag.error_count() > 0 {
        log::warn!("{}: skipped {} malformed lines", path.display(), diag.error_count());
        for e in diag.parse_errors.iter().take(5) {
            log::warn!("  {e}");
        }
    }
    for w in &diag.warnings {
        log::warn!("{w}");
    }
    let mut stream = loaded.stream;
    if let Some(days) = cfg.first_days {
        stream = stream.first_days(days);
    }
    if stream.is_empty() {
        return Err(Failure::Runtime(format!("{}: no events", path.display())));
    }
    Ok(stream)
}

fn write(path: &Path, contents: &str) -> Outcome {
    fs::write(path, contents).map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", path.display())))
}

fn create_dir(dir: &Path) -> Outcome {
    fs::create_dir_all(dir).map_err(|e| Failure::Runtime(format!("cannot create {}: {e}", dir.display())))
}

fn cmd_run(args: &ExperimentArgs) -> Outcome {
    let cfg = resolve_config(args)?;
    let stream = load(&cfg)?;
    let name = dataset_name(&cfg);
    let ratios = cfg.ratios().map_err(Failure::Usage)?;
    let exp = run_experiment(
        &stream,
        &cfg.feature_config(),
        &cfg.grids(),
        ratios,
        cfg.grids.metric,
        &cfg.pipeline_options(),
    )
    .map_err(|e| Failure::Runtime(e.to_string()))?;
    let r = &exp.report;

    let dir = &cfg.output_dir;
    create_dir(dir)?;
    write(&dir.join("report.json"), &report_json(&name, r).map_err(classify)?)?;
    let row = MetricsRow {
        dataset: name.clone(),
        method: r.variant.clone(),
        outcome: Ok(r.clone()),
    };
    write(&dir.join("metrics.csv"), &metrics_csv(&[row]))?;
    write(&dir.join("confusion.svg"), &confusion_svg(&r.with_other, &format!("{name} {}", r.variant)))?;
    write(&dir.join("predictions.csv"), &predictions_csv(&exp))?;

    let mut line = format!(
        "{name} {}: Acc. {:.4}, F1 {:.4}",
        r.variant, r.with_other.accuracy, r.with_other.weighted_f1
    );
    if let Some(w) = &r.without_other {
        line.push_str(&format!(" | without Other: Acc. {:.4}, F1 {:.4}", w.accuracy, w.weighted_f1));
    }
    let window = r.chosen_window.map_or_else(|| "dynamic".to_owned(), |w| w.to_string());
    println!("{line} (N = {window}, k = {})", r.chosen_k);
    Ok(())
}

fn cmd_compare(args: &CompareArgs) -> Outcome {
    let mut cfg = resolve_config(&args.common)?;
    if let Some(m) = &args.methods {
        cfg.methods = m.clone();
        cfg.validate().map_err(Failure::Usage)?;
    }
    if cfg.methods.is_empty() {
        return Err(Failure::Usage("no methods to compare (set `methods` or pass --methods)".into()));
    }
    let stream = load(&cfg)?;
    let name = dataset_name(&cfg);
    let ratios = cfg.ratios().map_err(Failure::Usage)?;
    let opts = cfg.pipeline_options();
    let grids = cfg.grids();

    let mut rows = Vec::with_capacity(cfg.methods.len());
    for method in &cfg.methods {
        let fc = cfg.variant_config(method).map_err(Failure::Usage)?;
        let outcome = run_experiment(&stream, &fc, &grids, ratios, cfg.grids.metric, &opts)
            .map(|e| e.report)
            .map_err(|e| e.to_string());
        match &outcome {
            Ok(r) => println!(
                "{name} {method}: Acc. {:.4}, F1 {:.4}",
                r.with_other.accuracy, r.with_other.weighted_f1
            ),
            Err(e) => eprintln!("{name} {method}: failed: {e}"),
        }
        rows.push(MetricsRow {
            dataset: name.clone(),
            method: method.clone(),
            outcome,
        });
    }
    create_dir(&cfg.output_dir)?;
    let path = cfg.output_dir.join("metrics.csv");
    write(&path, &metrics_csv(&rows))?;
    if rows.iter().all(|r| r.outcome.is_err()) {
        return Err(Failure::Runtime(format!("every variant failed; see {}", path.display())));
    }
    Ok(())
}

fn cmd_synth(args: &SynthArgs) -> Outcome {
    let text = fs::read_to_string(&args.spec)
        .map_err(|e| Failure::Runtime(format!("cannot read {}: {e}", args.spec.display())))?;
    let mut spec = RoutineSpec::from_json(&text).map_err(|e| Failure::Usage(format!("{}: {e}", args.spec.display())))?;
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    if let Some(days) = args.days {
        spec.days = days;
    }
    let stream = generate(&spec).map_err(|e| Failure::Usage(format!("{}: {e}", args.spec.display())))?;
    if let Some(dir) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    stream.write_casas(&args.out).map_err(classify)?;
    println!("{} events written to {}", stream.len(), args.out.display());
    Ok(())
}

#[derive(Serialize)]
struct PartitionDump {
    dataset: String,
    train_events: usize,
    descriptors: usize,
    #[serde(flatten)]
    partition: DayPartition,
    cohesion: f64,
}

fn emit(out: Option<&Path>, text: &str) -> Outcome {
    match out {
        Some(p) => write(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_partition(args: &DumpArgs) -> Outcome {
    let cfg = resolve_config(&args.common)?;
    let stream = load(&cfg)?;
    let ratios = cfg.ratios().map_err(Failure::Usage)?;
    let (a, _, _) = ratios.sizes(stream.len()).map_err(|e| Failure::Runtime(e.to_string()))?;
    let train = &stream.events[..a];
    let opts = cfg.pipeline_options();
    let partition = learn_partition(train, opts.descriptors, &opts.partition_grid)
        .map_err(|e| Failure::Runtime(e.to_string()))?;
    let points = descriptor_points(&activity_descriptors(train, opts.descriptors.include_other), opts.descriptors);
    let dump = PartitionDump {
        dataset: dataset_name(&cfg),
        train_events: a,
        descriptors: points.len(),
        partition,
        cohesion: cohesion(&partition, &points),
    };
    let mut text = serde_json::to_string_pretty(&dump).map_err(|e| Failure::Runtime(e.to_string()))?;
    text.push('\n');
    emit(args.out.as_deref(), &text)
}

/// Training windows first, then every later window, as one CSV.
fn cmd_features(args: &FeatureArgs) -> Outcome {
    let cfg = resolve_config(&args.dump.common)?;
    let stream = load(&cfg)?;
    let fc = cfg.feature_config();
    let opts = cfg.pipeline_options();
    let ratios = cfg.ratios().map_err(Failure::Usage)?;
    let n = stream.len();
    let (a, _, _) = ratios.sizes(n).map_err(|e| Failure::Runtime(e.to_string()))?;
    let m = stream.sensor_count();
    let window = if fc.base == BaseMethod::Dw {
        None
    } else {
        let smallest = cfg.grids.window.iter().copied().min().expect("validated");
        Some(args.window.unwrap_or(smallest))
    };
    if window == Some(0) {
        return Err(Failure::Usage("--window must be positive".into()));
    }
    let runtime = |e: HarError| Failure::Runtime(e.to_string());
    let base = fit_base_models(&stream.events[..a], m, &fc, &opts).map_err(runtime)?;
    let split = prepare_split(&stream.events, m, 0..a, a..n, &fc, window, &base, &opts).map_err(runtime)?;

    let columns = Layout::for_config(&fc, m).column_names(&stream.registry);
    let mut rows = split.train_x;
    rows.extend(split.eval_x);
    let labels = split.train_y.into_iter().chain(split.eval_y);
    let triggers: Vec<_> = split.train_triggers.into_iter().chain(split.eval_triggers).zip(labels).collect();

    let mut buf = Vec::new();
    write_feature_csv(&mut buf, &columns, &rows, &triggers).map_err(|e| Failure::Runtime(e.to_string()))?;
    emit(args.dump.out.as_deref(), &String::from_utf8(buf).expect("ascii csv"))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Partition(a) => cmd_partition(a),
        Command::Features(a) => cmd_features(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
