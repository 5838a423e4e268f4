use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use reserve_core::chainladder::{fit_chain_ladder, ResidualAdjustment};
use reserve_core::examples::{run_example, Setting};
use reserve_core::harness::{
    emit_report, format_summary, run_study_with_threads, Method, Preset, StudyConfig, StudyError, StudyReport,
};
use reserve_core::models::{fit, ModelKind};
use reserve_core::resampling::UnifnormVariance;
use reserve_core::rng::stream;
use reserve_core::triangle::{parse_csv, CsvOptions, Flavor, Target, Triangle};

#[derive(Parser)]
#[command(
    name = "reserve-bench",
    version,
    about = "Stochastic claims reserving studies scored by proper scoring rules"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo method comparison.
    #[command(subcommand)]
    Study(StudyCommand),
    /// The four-actuary examples.
    #[command(subcommand)]
    Examples(ExamplesCommand),
    /// Triangle utilities.
    #[command(subcommand)]
    Triangle(TriangleCommand),
}

#[derive(Subcommand)]
enum StudyCommand {
    /// Run a study and write summary.json, scores.csv, pit.csv, ppcurve.csv, coverage.csv.
    Run(StudyRunArgs),
    /// Print the aggregate table of an existing summary.json.
    Report(StudyReportArgs),
}

#[derive(Args)]
struct StudyRunArgs {
    /// Study configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Size preset for N and M; explicit --n/--m override it.
    #[arg(long)]
    preset: Option<PresetArg>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Number of scenarios.
    #[arg(long)]
    n: Option<usize>,
    /// Predictive draws per scenario and method.
    #[arg(long)]
    m: Option<usize>,
    /// Comma-separated method list.
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<String>>,
    /// Energy score exponent.
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    target: Option<TargetArg>,
    /// Worker threads; 0 uses all cores. Results do not depend on it.
    #[arg(long, env = "RESERVE_BENCH_THREADS", default_value_t = 0)]
    threads: usize,
    /// Use the verbatim residual adjustment and the un-squared Unifnorm variance.
    #[arg(long)]
    paper_literal: bool,
}

#[derive(Args)]
struct StudyReportArgs {
    /// A summary.json written by `study run`.
    #[arg(long)]
    summary: PathBuf,
    /// Re-emit the report files into this directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum ExamplesCommand {
    /// Simulate one example and print per-actuary results as CSV.
    Run(ExamplesRunArgs),
}

#[derive(Args)]
struct ExamplesRunArgs {
    #[arg(long)]
    setting: SettingArg,
    #[arg(long, default_value_t = 10_000)]
    sims: usize,
    #[arg(long, default_value_t = 1000)]
    draws: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, env = "RESERVE_BENCH_THREADS", default_value_t = 0)]
    threads: usize,
}

#[derive(Subcommand)]
enum TriangleCommand {
    /// Parse a triangle and print a JSON summary.
    Validate(TriangleArgs),
    /// Fit a development model and print its parameters as JSON.
    Fit {
        #[arg(long)]
        model: String,
        #[command(flatten)]
        input: TriangleArgs,
    },
}

#[derive(Args)]
struct TriangleArgs {
    /// CSV file, one accident year per line.
    #[arg(long)]
    triangle: PathBuf,
    #[arg(long, value_enum, default_value_t = FlavorArg::Cumulative)]
    flavor: FlavorArg,
    /// Shorthand for --flavor cumulative.
    #[arg(long, conflicts_with = "flavor")]
    cumulative: bool,
    /// Drop the first line.
    #[arg(long)]
    skip_header: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetArg {
    Paper,
    Desk,
}

#[derive(Clone, Copy, ValueEnum)]
enum SettingArg {
    Ex1,
    Ex2,
}

#[derive(Clone, Copy, ValueEnum)]
enum FlavorArg {
    Cumulative,
    Incremental,
}

#[derive(Clone, Copy, ValueEnum)]
enum TargetArg {
    Ultimate,
    NextYear,
}

enum Failure {
    Data(String),
    Config(String),
    Io(String),
    Study(String),
}

impl Failure {
    fn report(&self) -> ExitCode {
        let (code, tag, msg) = match self {
            Failure::Data(m) => (2, "data", m),
            Failure::Config(m) => (2, "config", m),
            Failure::Io(m) => (2, "io", m),
            Failure::Study(m) => (3, "study", m),
        };
        eprintln!("error[{tag}]: {msg}");
        ExitCode::from(code)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprintln!("error[usage]: {}", e.render().to_string().trim_start_matches("error: ").trim_end());
            return ExitCode::from(1);
        }
    };
    let result = match cli.command {
        Command::Study(StudyCommand::Run(a)) => study_run(a),
        Command::Study(StudyCommand::Report(a)) => study_report(a),
        Command::Examples(ExamplesCommand::Run(a)) => examples_run(a),
        Command::Triangle(TriangleCommand::Validate(a)) => triangle_validate(a),
        Command::Triangle(TriangleCommand::Fit { model, input }) => triangle_fit(&model, input),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => f.report(),
    }
}

/// Writes to stdout; a closed pipe is not an error.
fn emit(text: &str) -> Result<(), Failure> {
    match io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(Failure::Io(format!("stdout: {e}"))),
        _ => Ok(()),
    }
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn build_config(a: &StudyRunArgs) -> Result<StudyConfig, Failure> {
    let text = String::from_utf8(read(&a.config)?)
        .map_err(|_| Failure::Config(format!("{}: not valid UTF-8", a.config.display())))?;
    let mut cfg = StudyConfig::from_json(&text).map_err(|e| Failure::Config(format!("{}: {e}", a.config.display())))?;
    if let Some(p) = a.preset {
        cfg.apply_preset(match p {
            PresetArg::Paper => Preset::Paper,
            PresetArg::Desk => Preset::Desk,
        });
    }
    if let Some(n) = a.n {
        cfg.n_scenarios = n;
    }
    if let Some(m) = a.m {
        cfg.m_draws = m;
    }
    if let Some(s) = a.seed {
        cfg.master_seed = s;
    }
    if let Some(b) = a.beta {
        cfg.energy_beta = b;
    }
    if let Some(t) = a.target {
        cfg.target = match t {
            TargetArg::Ultimate => Target::UltimateClaim,
            TargetArg::NextYear => Target::NextYearPayments,
        };
    }
    if let Some(names) = &a.methods {
        cfg.methods = names.iter().map(|s| s.parse::<Method>()).collect::<Result<_, _>>().map_err(Failure::Config)?;
    }
    if a.paper_literal {
        cfg.residual_adjustment = ResidualAdjustment::Paper;
        cfg.unifnorm_variance = UnifnormVariance::Literal;
    }
    cfg.validate().map_err(|e| Failure::Config(e.to_string()))?;
    Ok(cfg)
}

fn write_report(report: &StudyReport, dir: &Path) -> Result<(), Failure> {
    let files = emit_report(report, dir).map_err(|e| Failure::Io(e.to_string()))?;
    for f in files {
        eprintln!("wrote {}", f.display());
    }
    Ok(())
}

fn study_run(a: StudyRunArgs) -> Result<(), Failure> {
    let cfg = build_config(&a)?;
    let start = Instant::now();
    let result = run_study_with_threads(&cfg, a.threads);
    let elapsed = start.elapsed();
    match result {
        Ok(report) => {
            write_report(&report, &a.out)?;
            eprintln!("wall time {:.1}s", elapsed.as_secs_f64());
            emit(&format_summary(&report))
        }
        Err(StudyError::ExcessiveFailures { method, failures, total, report }) => {
            write_report(&report, &a.out)?;
            Err(Failure::Study(format!("method {method} failed on {failures} of {total} scenarios")))
        }
        Err(StudyError::InvalidConfig(m)) => Err(Failure::Config(m)),
        Err(e) => Err(Failure::Study(e.to_string())),
    }
}

fn study_report(a: StudyReportArgs) -> Result<(), Failure> {
    let bytes = read(&a.summary)?;
    let report: StudyReport =
        serde_json::from_slice(&bytes).map_err(|e| Failure::Data(format!("{}: {e}", a.summary.display())))?;
    if let Some(dir) = &a.out {
        write_report(&report, dir)?;
    }
    emit(&format_summary(&report))
}

fn examples_run(a: ExamplesRunArgs) -> Result<(), Failure> {
    if a.sims < 1 || a.draws < 2 {
        return Err(Failure::Config("--sims must be at least 1 and --draws at least 2".into()));
    }
    let setting = match a.setting {
        SettingArg::Ex1 => Setting::LogNormalEx1,
        SettingArg::Ex2 => Setting::PoissonEx2,
    };
    let pool =
        rayon::ThreadPoolBuilder::new().num_threads(a.threads).build().map_err(|e| Failure::Study(e.to_string()))?;
    let report = pool.install(|| run_example(setting, a.sims, a.draws, &mut stream(a.seed, &[])));
    let csv = report.to_csv();
    match &a.out {
        Some(path) => fs::write(path, csv).map_err(|e| Failure::Io(format!("{}: {e}", path.display()))),
        None => emit(&csv),
    }
}

fn load_triangle(a: &TriangleArgs) -> Result<Triangle, Failure> {
    let flavor = if a.cumulative {
        Flavor::Cumulative
    } else {
        match a.flavor {
            FlavorArg::Cumulative => Flavor::Cumulative,
            FlavorArg::Incremental => Flavor::Incremental,
        }
    };
    let bytes = read(&a.triangle)?;
    parse_csv(&bytes, flavor, CsvOptions { skip_header: a.skip_header })
        .map_err(|e| Failure::Data(format!("{}: {e}", a.triangle.display())))
}

fn triangle_validate(a: TriangleArgs) -> Result<(), Failure> {
    let t = load_triangle(&a)?;
    let upper = t.restrict_upper();
    let diagonal: f64 = upper.latest_diagonal().iter().sum();
    let cl_ultimate = fit_chain_ladder(&upper.to_incremental()).ok().map(|f| f.mu_rows.iter().sum::<f64>());
    let summary = serde_json::json!({
        "n": t.n(),
        "flavor": t.flavor(),
        "mask": t.mask(),
        "latest_diagonal_sum": diagonal,
        "non_decreasing": t.to_cumulative().check_non_decreasing().is_ok(),
        "chain_ladder_ultimate": cl_ultimate,
    });
    emit(&(serde_json::to_string_pretty(&summary).expect("json") + "\n"))
}

fn triangle_fit(model: &str, a: TriangleArgs) -> Result<(), Failure> {
    let kind: ModelKind = model.parse().map_err(Failure::Config)?;
    let t = load_triangle(&a)?;
    let params = fit(kind, &t.restrict_upper()).map_err(|e| Failure::Data(e.to_string()))?;
    emit(&(serde_json::to_string_pretty(&params).expect("json") + "\n"))
}
