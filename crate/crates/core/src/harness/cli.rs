use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use super::config::{EnvVariant, ExperimentConfig};
use super::output::write_csv;
use super::run::{build_environment, run_experiment, trial_cover};
use super::HarnessError;
use crate::dal::{delta_t, CoverMode};
use crate::detect::{glr_scan, DetectionResult, glr_threshold, GlrConfig, GlrFamily, ObservationBuffer, DEFAULT_SIGMA2};

#[derive(Debug, Parser)]
#[command(name = "dal", version, about = "Change-detection wrapper for bandit policies: experiments and tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a synthetic experiment described by a config file.
    Synth(SynthArgs),
    /// Run an experiment on a replay file (mean matrix or logged data).
    Replay(ReplayArgs),
    /// Scan one CSV column for a change point and print the detection.
    DetectDemo(DetectArgs),
    /// Print the covering set chosen for a config.
    Cover(CoverArgs),
}

#[derive(Debug, Args)]
struct RunFlags {
    /// Output CSV (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Base seed; trial i uses seed + i.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Worker threads for the trial pool.
    #[arg(long)]
    parallelism: Option<usize>,
    /// Emit every N-th round.
    #[arg(long, default_value_t = 1)]
    thin: usize,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// TOML experiment config.
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    run: RunFlags,
}

#[derive(Debug, Args)]
struct ReplayArgs {
    /// Replay file.
    #[arg(long)]
    file: PathBuf,
    /// Optional config for the algorithm and detector.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    run: RunFlags,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FamilyArg {
    Bernoulli,
    Gaussian,
}

#[derive(Debug, Args)]
struct DetectArgs {
    /// CSV file with the reward stream.
    #[arg(long)]
    input: PathBuf,
    /// Column index or header name.
    #[arg(long, default_value = "0")]
    column: String,
    /// False-alarm level (default 1/n).
    #[arg(long)]
    delta_f: Option<f64>,
    /// Defaults to bernoulli when every value lies in [0, 1].
    #[arg(long, value_enum)]
    family: Option<FamilyArg>,
    /// Variance proxy for the gaussian family (default 0.25).
    #[arg(long)]
    sigma2: Option<f64>,
    /// Test the whole stream once instead of after every sample.
    #[arg(long)]
    offline: bool,
}

#[derive(Debug, Args)]
struct CoverArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
}

/// Runs the command line and returns the process exit code.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    cli_main_with(args, &mut stdout.lock(), &mut stderr.lock())
}

/// [`cli_main`] with explicit output streams.
pub fn cli_main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    0
                }
                _ => {
                    let _ = write!(err, "{text}");
                    1
                }
            };
        }
    };
    let result = match cli.command {
        Command::Synth(a) => ExperimentConfig::load(&a.config).and_then(|cfg| run(cfg, &a.run, out, err)),
        Command::Replay(a) => replay(a, out, err),
        Command::DetectDemo(a) => detect_demo(&a, out),
        Command::Cover(a) => cover(&a, out),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn io_err(path: &str) -> impl Fn(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_string(),
        source,
    }
}

fn run(mut cfg: ExperimentConfig, flags: &RunFlags, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), HarnessError> {
    if let Some(s) = flags.seed {
        cfg.seed = s;
    }
    if let Some(n) = flags.trials {
        cfg.trials = n;
    }
    if let Some(p) = flags.parallelism {
        cfg.parallelism = p;
    }
    let result = run_experiment(&cfg)?;
    match &flags.out {
        Some(path) => super::emit_csv(&result, path, flags.thin)?,
        None => write_csv(&result, &mut *out, flags.thin).map_err(io_err("<stdout>"))?,
    }
    let n = result.final_regrets.len() as f64;
    let last = result.stderr_regret.last().copied().unwrap_or(0.0);
    let _ = writeln!(
        err,
        "{} trials, final mean regret {:.4} (stderr {:.4}), mean restarts {:.2}, mean trial time {:.2?}",
        n,
        result.final_mean(),
        last,
        result.mean_restarts(),
        result.wall_clock.iter().sum::<std::time::Duration>() / n.max(1.0) as u32,
    );
    Ok(())
}

fn replay(a: ReplayArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), HarnessError> {
    let mut cfg = match &a.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    cfg.env.variant = EnvVariant::Replay;
    cfg.env.path = Some(a.file.clone());
    if !a.file.exists() {
        return Err(HarnessError::Config(format!("replay file {} not found", a.file.display())));
    }
    run(cfg, &a.run, out, err)
}

fn read_column(path: &Path, column: &str) -> Result<Vec<f64>, HarnessError> {
    let name = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| HarnessError::Config(format!("cannot read {name}: {e}")))?;
    let records: Vec<csv::StringRecord> = reader
        .records()
        .collect::<Result<_, _>>()
        .map_err(|e| HarnessError::Runtime(format!("{name}: {e}")))?;
    let Some(first) = records.first() else {
        return Err(HarnessError::Runtime(format!("{name} is empty")));
    };
    let has_header = first.iter().any(|f| f.parse::<f64>().is_err());
    let index = match column.parse::<usize>() {
        Ok(i) => i,
        Err(_) if has_header => first
            .iter()
            .position(|h| h == column)
            .ok_or_else(|| HarnessError::Config(format!("{name} has no column named {column:?}")))?,
        Err(_) => return Err(HarnessError::Config(format!("{name} has no header; pass a column index"))),
    };
    records
        .iter()
        .enumerate()
        .skip(usize::from(has_header))
        .map(|(i, rec)| {
            let raw = rec
                .get(index)
                .ok_or_else(|| HarnessError::Runtime(format!("{name} line {}: no column {index}", i + 1)))?;
            raw.parse::<f64>()
                .map_err(|_| HarnessError::Runtime(format!("{name} line {}: not a number: {raw:?}", i + 1)))
        })
        .collect()
}

fn detect_demo(a: &DetectArgs, out: &mut dyn Write) -> Result<(), HarnessError> {
    let values = read_column(&a.input, &a.column)?;
    let n = values.len();
    if n < 2 {
        return Err(HarnessError::Runtime("need at least two samples".into()));
    }
    let family = match a.family {
        Some(FamilyArg::Bernoulli) => GlrFamily::Bernoulli,
        Some(FamilyArg::Gaussian) => GlrFamily::gaussian(a.sigma2.unwrap_or(DEFAULT_SIGMA2))?,
        None if values.iter().all(|v| (0.0..=1.0).contains(v)) => GlrFamily::Bernoulli,
        None => GlrFamily::gaussian(a.sigma2.unwrap_or(DEFAULT_SIGMA2))?,
    };
    let cfg = GlrConfig::new(family, a.delta_f.unwrap_or(1.0 / n as f64))?;
    let write = io_err("<stdout>");
    if a.offline {
        let buffer: ObservationBuffer = values.iter().copied().collect();
        let r = glr_scan(&buffer, &cfg)?;
        return if r.detected {
            report(out, &cfg, n, &r)
        } else {
            writeln!(out, "none").map_err(&write)
        };
    }
    let mut buffer = ObservationBuffer::new();
    for (i, &x) in values.iter().enumerate() {
        buffer.push(x);
        let r = glr_scan(&buffer, &cfg)?;
        if r.detected {
            return report(out, &cfg, i + 1, &r);
        }
    }
    writeln!(out, "none").map_err(&write)
}

fn report(out: &mut dyn Write, cfg: &GlrConfig, at: usize, r: &DetectionResult) -> Result<(), HarnessError> {
    let split = r.split_index.unwrap_or(0);
    let stat = r.statistic.unwrap_or(f64::NAN);
    let threshold = glr_threshold(at, cfg.delta_f)?;
    writeln!(
        out,
        "detection at sample {at}: change after sample {split} (statistic {stat:.4}, threshold {threshold:.4})"
    )
    .map_err(io_err("<stdout>"))
}

fn cover(a: &CoverArgs, out: &mut dyn Write) -> Result<(), HarnessError> {
    let cfg = ExperimentConfig::load(&a.config)?;
    cfg.validate()?;
    let env = build_environment(&cfg, a.seed.unwrap_or(cfg.seed))?;
    let cover = trial_cover(&cfg, env.as_ref())?;
    let dim = env.features().first().map_or(0, |f| f.len());
    let r = env.features().iter().map(|f| f.norm()).fold(0.0, f64::max);
    let cover_cfg = cfg.covering(dim, 2.0 * r);
    let write = io_err("<stdout>");
    let mode = match cover_cfg.mode {
        CoverMode::LinearIndependent => "linear_independent",
        CoverMode::KernelCover => "kernel_cover",
        CoverMode::FullActionSet => "full_action_set",
    };
    writeln!(out, "mode {mode}").map_err(&write)?;
    if cover_cfg.mode == CoverMode::KernelCover {
        writeln!(out, "delta_T {:.6}", delta_t(&cover_cfg)?).map_err(&write)?;
    }
    writeln!(out, "N_e {} of {} actions", cover.len(), env.features().len()).map_err(&write)?;
    for (id, a) in cover.ids.iter().zip(&cover.actions) {
        let coords: Vec<String> = a.iter().map(|x| format!("{x:.6}")).collect();
        writeln!(out, "{id}: [{}]", coords.join(", ")).map_err(&write)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = cli_main_with(std::iter::once("dal").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn unknown_flag_prints_usage() {
        let (code, _, err) = call(&["synth", "--bogus"]);
        assert_eq!(code, 1);
        assert!(err.contains("Usage"));
        assert_eq!(call(&["frobnicate"]).0, 1);
        assert_eq!(call(&[]).0, 1);
    }

    #[test]
    fn help_exits_cleanly() {
        let (code, out, _) = call(&["--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("detect-demo"));
    }

    #[test]
    fn missing_config_names_the_path() {
        let (code, _, err) = call(&["synth", "--config", "/no/such/ps_lb.toml"]);
        assert_eq!(code, 1);
        assert!(err.contains("/no/such/ps_lb.toml"));
    }

    #[test]
    fn step_stream_detected_near_the_middle() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        let body: String = (0..100).map(|i| if i < 50 { "0\n" } else { "1\n" }).collect();
        std::fs::write(&path, body).unwrap();
        let (code, out, _) = call(&["detect-demo", "--input", path.to_str().unwrap()]);
        assert_eq!(code, 0);
        let split: usize = out.split("after sample ").nth(1).unwrap().split(' ').next().unwrap().parse().unwrap();
        assert!((45..=55).contains(&split), "{out}");
        let (_, out, _) = call(&["detect-demo", "--offline", "--input", path.to_str().unwrap()]);
        assert!(out.contains("after sample 46"), "{out}");
    }

    #[test]
    fn constant_stream_reports_none() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        std::fs::write(&path, "reward\n".to_string() + &"0.5\n".repeat(200)).unwrap();
        let (code, out, _) = call(&["detect-demo", "--input", path.to_str().unwrap(), "--column", "reward"]);
        assert_eq!(code, 0);
        assert_eq!(out.trim(), "none");
    }
}
