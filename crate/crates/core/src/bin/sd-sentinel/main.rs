use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};

use sd_sentinel::bench::run_bench;
use sd_sentinel::config::RunConfig;
use sd_sentinel::detector::{self, build_model, load_checkpoint, save_checkpoint, Variant};
use sd_sentinel::eeg_io::{read_labels, read_trace, write_trace, SdLabelSet, TraceFormat};
use sd_sentinel::pipeline::{self, PreparedSegment};
use sd_sentinel::score;
use sd_sentinel::simulate::{self, Split};
use sd_sentinel::spectro;
use sd_sentinel::windowing::WINDOW_MIN;
use sd_sentinel::{EegTrace, Error};

#[derive(Parser)]
#[command(name = "sd-sentinel", version, about = "Spreading-depolarization detection in single-channel EEG")]
struct Cli {
    /// TOML run configuration; unknown keys are rejected.
    #[arg(long, global = true, env = "SD_SENTINEL_CONFIG")]
    config: Option<PathBuf>,

    /// Override `run.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate labelled SD-carrying EEG and write window datasets.
    Simulate(SimulateArgs),
    /// Band spectrogram (CSV and PGM) and AC power series of a trace.
    Spectrogram(TraceArgs),
    /// Train a model on window datasets.
    Train(TrainArgs),
    /// Per-minute outcomes and confidence scores for a trace.
    Infer(InferArgs),
    /// Evaluation table and threshold sweep over labelled datasets.
    Evaluate(EvalArgs),
    /// Peak threshold sweep over labelled datasets.
    Sweep(EvalArgs),
    /// Single-thread latency per hour of EEG.
    Bench(BenchArgs),
    /// Plot-ready CSV/PGM artifacts for a trace.
    Plot(PlotArgs),
    /// Simulate, train every variant, evaluate and run the SD-free control.
    Experiment(OutArgs),
    /// Print the effective configuration.
    Config,
}

#[derive(Args)]
struct OutArgs {
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, short)]
    out: PathBuf,
    /// Splits to generate.
    #[arg(long, value_delimiter = ',', default_value = "train,test,control")]
    splits: Vec<String>,
    /// Also write each trace as rawf32 with a JSON sidecar.
    #[arg(long)]
    traces: bool,
    /// Also write trace, power and leaky-integral CSVs per segment.
    #[arg(long)]
    validation: bool,
    /// Leaky-integral time constant, seconds.
    #[arg(long, default_value_t = 60.0)]
    tau_s: f64,
}

#[derive(Args)]
struct TraceArgs {
    #[arg(long, short)]
    trace: PathBuf,
    /// `csv` or `rawf32`; inferred from the extension when omitted.
    #[arg(long)]
    format: Option<String>,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    /// Directory of `.sdds` window files.
    #[arg(long, short)]
    data: PathBuf,
    /// Checkpoint to write.
    #[arg(long, short)]
    out: PathBuf,
    /// Override `model.variant`.
    #[arg(long)]
    variant: Option<String>,
}

#[derive(Args)]
struct InferArgs {
    #[arg(long, short)]
    model: PathBuf,
    #[command(flatten)]
    trace: TraceArgs,
    /// Label file, for the expected-score column.
    #[arg(long)]
    labels: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// Checkpoints; each becomes one row, named by its variant.
    #[arg(long, short, required = true, num_args = 1..)]
    model: Vec<PathBuf>,
    /// Directory of `.sdds` window files with `_labels.txt` companions.
    #[arg(long, short)]
    data: PathBuf,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// Checkpoint; a freshly initialized model is used when omitted.
    #[arg(long, short)]
    model: Option<PathBuf>,
    /// Override `bench.hours`.
    #[arg(long)]
    hours: Option<u32>,
    /// Only one thread is supported.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..=1))]
    threads: u32,
}

#[derive(Args)]
struct PlotArgs {
    #[command(flatten)]
    trace: TraceArgs,
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Adds per-minute outcome and confidence CSVs.
    #[arg(long)]
    model: Option<PathBuf>,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::InvalidArgument(_) => Failure::Usage(e.to_string()),
            other => Failure::Run(other),
        }
    }
}

type CmdResult = Result<(), Failure>;

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), Error> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| io_error(path, e))
}

fn io_error(path: &Path, source: std::io::Error) -> Error {
    Error::Io { path: path.to_path_buf(), source }
}

fn load_trace(args: &TraceArgs) -> Result<EegTrace, Error> {
    let format = match &args.format {
        Some(f) => f.parse()?,
        None => TraceFormat::from_path(&args.trace),
    };
    read_trace(&args.trace, format)
}

fn labels_or_empty(path: Option<&Path>) -> Result<SdLabelSet, Error> {
    path.map_or_else(|| Ok(SdLabelSet::empty()), read_labels)
}

fn cmd_simulate(cfg: &RunConfig, a: &SimulateArgs) -> CmdResult {
    for name in &a.splits {
        let split = match name.as_str() {
            "train" => Split::Train,
            "test" => Split::Test,
            "control" => Split::Control,
            other => return Err(Failure::Usage(format!("unknown split `{other}`"))),
        };
        let dir = a.out.join(split.name());
        for plan in simulate::plan_segments(&cfg.simulate, split, cfg.run.seed)? {
            let (trace, labels) = simulate::generate_segment(&plan, &cfg.simulate)?;
            let windows = pipeline::extract_windows(&trace, &labels, &cfg.preprocess, &cfg.spectro)?;
            let seg = PreparedSegment {
                name: plan.name(),
                duration_min: plan.duration_min as f64,
                labels,
                windows,
            };
            pipeline::write_segment(&dir, &seg)?;
            if a.traces {
                write_trace(&trace, &dir.join(format!("{}.f32", seg.name)), TraceFormat::RawF32)?;
            }
            if a.validation {
                simulate::write_validation_bundle(&dir.join("validation"), &seg.name, &trace, &seg.labels, a.tau_s)?;
            }
            eprintln!("{}: {} min, {} SDs, {} windows", seg.name, plan.duration_min, seg.labels.len(), seg.windows.len());
        }
    }
    write(&a.out.join("config.toml"), cfg.to_toml())?;
    Ok(())
}

fn cmd_spectrogram(cfg: &RunConfig, a: &TraceArgs) -> CmdResult {
    let trace = load_trace(a)?;
    let clean = sd_sentinel::preprocess::condition(&trace, &cfg.preprocess)?;
    let (spec, power) = spectro::spectral_features(&clean, &cfg.spectro)?;
    write(&a.out.join("spectrogram.csv"), spec.to_csv())?;
    write(&a.out.join("spectrogram.pgm"), spec.to_pgm())?;
    let mut p = String::from("minute,power\n");
    for (i, v) in power.values.iter().enumerate() {
        let _ = writeln!(p, "{i},{v}");
    }
    write(&a.out.join("power.csv"), p)?;
    Ok(())
}

fn cmd_train(cfg: &RunConfig, a: &TrainArgs) -> CmdResult {
    let variant = match &a.variant {
        Some(v) => v.parse()?,
        None => cfg.model.variant,
    };
    let segments = pipeline::read_segments(&a.data)?;
    let (model, report) = pipeline::train_variant(cfg, variant, &segments)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    save_checkpoint(&model, &a.out)?;
    let mut csv = String::from("epoch,loss\n");
    for (i, l) in report.epoch_losses.iter().enumerate() {
        let _ = writeln!(csv, "{},{l}", i + 1);
        eprintln!("epoch {:>3}  loss {l:.5}", i + 1);
    }
    write(&a.out.with_extension("loss.csv"), csv)?;
    Ok(())
}

fn check_length(trace: &EegTrace) -> Result<(), Error> {
    if trace.duration_min() < WINDOW_MIN as f64 {
        return Err(Error::TooShort { required_min: WINDOW_MIN as f64, actual_min: trace.duration_min() });
    }
    Ok(())
}

fn outcome_files(
    cfg: &RunConfig,
    model_path: &Path,
    trace: &EegTrace,
    labels: &SdLabelSet,
    out: &Path,
) -> Result<(), Error> {
    check_length(trace)?;
    let model = load_checkpoint(model_path)?;
    let windows = pipeline::extract_windows(trace, labels, &cfg.preprocess, &cfg.spectro)?;
    let outcomes = detector::infer(&model, &windows, cfg.detect.threshold)?;
    let mut csv = String::from("minute,probability,outcome\n");
    for (i, (p, v)) in outcomes.probabilities.iter().zip(&outcomes.values).enumerate() {
        let _ = writeln!(csv, "{},{p:e},{v}", outcomes.start_min as usize + i);
    }
    write(&out.join("outcomes.csv"), csv)?;
    if outcomes.len() >= WINDOW_MIN {
        let conf = score::confidence(&outcomes)?;
        write(&out.join("confidence.csv"), score::confidence_csv(&conf, labels)?)?;
        let peaks = score::find_peaks(&conf, cfg.detect.confidence_threshold);
        let text: String = peaks.iter().map(|p| format!("{p}\n")).collect();
        write(&out.join("detected_peaks.txt"), text)?;
    }
    Ok(())
}

fn cmd_infer(cfg: &RunConfig, a: &InferArgs) -> CmdResult {
    let trace = load_trace(&a.trace)?;
    let labels = labels_or_empty(a.labels.as_deref())?;
    outcome_files(cfg, &a.model, &trace, &labels, &a.trace.out)?;
    Ok(())
}

fn evaluations(cfg: &RunConfig, a: &EvalArgs) -> Result<Vec<pipeline::Evaluation>, Error> {
    let segments = pipeline::read_segments(&a.data)?;
    a.model
        .iter()
        .map(|path| {
            let model = load_checkpoint(path)?;
            let name = model.architecture().variant.name();
            pipeline::evaluate(&model, name, &segments, cfg)
        })
        .collect()
}

fn cmd_evaluate(cfg: &RunConfig, a: &EvalArgs) -> CmdResult {
    let evals = evaluations(cfg, a)?;
    let rows: Vec<_> = evals.iter().map(|e| e.row.clone()).collect();
    let report = score::report_csv(&rows);
    print!("{report}");
    write(&a.out.join("report.csv"), report)?;
    for e in &evals {
        write(&a.out.join(format!("sweep-{}.csv", e.variant)), score::sweep_csv(&e.sweep, Some(e.hours)))?;
        for s in &e.segments {
            let path = a.out.join(format!("confidence-{}-{}.csv", e.variant, s.name));
            write(&path, score::confidence_csv(&s.confidence, &s.labels)?)?;
        }
    }
    Ok(())
}

fn cmd_sweep(cfg: &RunConfig, a: &EvalArgs) -> CmdResult {
    for e in evaluations(cfg, a)? {
        let csv = score::sweep_csv(&e.sweep, Some(e.hours));
        println!("# {}", e.variant);
        print!("{csv}");
        write(&a.out.join(format!("sweep-{}.csv", e.variant)), csv)?;
    }
    Ok(())
}

fn cmd_bench(cfg: &RunConfig, a: &BenchArgs) -> CmdResult {
    let t = std::time::Instant::now();
    let (model, io_s) = match &a.model {
        Some(p) => (load_checkpoint(p)?, Some(t.elapsed().as_secs_f64())),
        None => (build_model(Variant::Dual, cfg.run.seed), None),
    };
    let hours = a.hours.unwrap_or(cfg.bench.hours);
    let mut report = run_bench(&model, hours, cfg.bench.sample_rate_hz, &cfg.preprocess, &cfg.spectro, cfg.run.seed)?;
    report.io_s = io_s;
    print!("{}", report.render());
    Ok(())
}

fn cmd_plot(cfg: &RunConfig, a: &PlotArgs) -> CmdResult {
    let trace = load_trace(&a.trace)?;
    let labels = labels_or_empty(a.labels.as_deref())?;
    cmd_spectrogram(cfg, &a.trace)?;
    let out = &a.trace.out;
    simulate::write_validation_bundle(out, "trace", &trace, &labels, 60.0)?;
    if trace.duration_min() >= 10.0 {
        let ps = spectro::persistence_spectrum(&trace)?;
        let mut csv = String::from("freq_hz,log10_power_low,count\n");
        for (f, row) in ps.freqs_hz.iter().zip(&ps.counts) {
            for (k, &c) in row.iter().enumerate().filter(|(_, c)| **c > 0) {
                let edge = if k == 0 { f64::NEG_INFINITY } else { ps.log_power_edges[k - 1] };
                let _ = writeln!(csv, "{f},{edge},{c}");
            }
        }
        write(&out.join("persistence.csv"), csv)?;
    }
    if let Some(m) = &a.model {
        outcome_files(cfg, m, &trace, &labels, out)?;
    }
    Ok(())
}

fn cmd_experiment(cfg: &RunConfig, a: &OutArgs) -> CmdResult {
    let result = pipeline::run_experiment(cfg)?;
    result.write(&a.out)?;
    write(&a.out.join("config.toml"), cfg.to_toml())?;
    print!("{}", fs::read_to_string(a.out.join("report.csv")).map_err(|e| io_error(&a.out, e))?);
    if let Some(t) = result.chosen {
        println!("chosen confidence threshold {} (sensitivity {:?}, {} false-positive peaks)", t.threshold, t.sensitivity, t.fp);
    }
    Ok(())
}

fn help_footer() -> String {
    format!(
        "Configuration keys and defaults (override in a TOML file via --config or $SD_SENTINEL_CONFIG):\n\n{}\nExit codes: 0 ok, 2 usage or config error, 3 data error, 4 internal error.",
        RunConfig::default().to_toml()
    )
}

fn run(cli: Cli) -> CmdResult {
    let mut cfg = RunConfig::resolve(cli.config.as_deref())?;
    if let Some(s) = cli.seed {
        cfg.run.seed = s;
    }
    match &cli.command {
        Command::Simulate(a) => cmd_simulate(&cfg, a),
        Command::Spectrogram(a) => cmd_spectrogram(&cfg, a),
        Command::Train(a) => cmd_train(&cfg, a),
        Command::Infer(a) => cmd_infer(&cfg, a),
        Command::Evaluate(a) => cmd_evaluate(&cfg, a),
        Command::Sweep(a) => cmd_sweep(&cfg, a),
        Command::Bench(a) => cmd_bench(&cfg, a),
        Command::Plot(a) => cmd_plot(&cfg, a),
        Command::Experiment(a) => cmd_experiment(&cfg, a),
        Command::Config => {
            print!("{}", cfg.to_toml());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let footer = help_footer();
    let command = Cli::command()
        .after_long_help(footer.clone())
        .mut_subcommands(|s| s.after_long_help(footer.clone()));
    let cli = match Cli::from_arg_matches(&command.get_matches()) {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_data_error() { 3 } else { 4 })
        }
    }
}
