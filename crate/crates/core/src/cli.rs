//! Command-line front end.
//!
//! Exit codes: 0 on success, 2 for invalid input or configuration, 3 for
//! numerical failures and 4 for I/O errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use sha2::{Digest, Sha256};

use crate::backtest::{
    run_experiment, run_topology, write_topology, Artifacts, CovarianceSource, ExperimentConfig,
    Provenance, Sample,
};
use crate::corrnet::{rolling_correlations, WindowConfig};
use crate::data::{
    load_prices, log_returns, synth_one_factor, write_long_csv, AlignmentPolicy, FactorSpec,
    Layout, ReturnPanel,
};
use crate::error::{Error, Result};
use crate::portfolio::{default_q_grid, Mode};
use crate::temporal::{ArimaConfig, CentralityMethod, EigenConfig, TemporalNetwork};

pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "tempnet",
    version,
    about = "Temporal correlation networks and centrality-guided portfolios"
)]
pub struct Cli {
    /// Flat `key = value` file of default flags; explicit flags win.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    /// Only log errors.
    #[arg(short, long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a one-factor synthetic price panel.
    Synth(SynthArgs),
    /// Clustering, path length, heterogeneity and Jaccard per window.
    Topology(TopologyArgs),
    /// Rank stocks by temporal or aggregated-network centrality.
    Centrality(CentralityArgs),
    /// Efficient frontiers of central and peripheral portfolios.
    Frontier(FrontierArgs),
    /// Minimum expected shortfall against portfolio size.
    Es(EsArgs),
    /// Topology, rankings, frontiers and ES curves in one run directory.
    Backtest(BacktestArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum LayoutArg {
    Auto,
    Wide,
    Long,
}

impl From<LayoutArg> for Layout {
    fn from(l: LayoutArg) -> Self {
        match l {
            LayoutArg::Auto => Layout::Auto,
            LayoutArg::Wide => Layout::Wide,
            LayoutArg::Long => Layout::Long,
        }
    }
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 50)]
    pub stocks: usize,
    /// Number of price dates.
    #[arg(long, default_value_t = 2000)]
    pub days: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.2)]
    pub beta_min: f64,
    #[arg(long, default_value_t = 1.8)]
    pub beta_max: f64,
    #[arg(long, default_value_t = 0.01)]
    pub factor_vol: f64,
    #[arg(long, default_value_t = 0.01)]
    pub idio_vol: f64,
    /// Output file, `-` for standard output.
    #[arg(long, short, default_value = "-")]
    pub out: PathBuf,
    #[arg(long)]
    pub long: bool,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Price CSV, wide (`date,<tickers>`) or long (`date,ticker,close`).
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "auto")]
    pub layout: LayoutArg,
    /// Minimum fraction of dates a ticker must cover.
    #[arg(long, default_value_t = 0.9)]
    pub min_coverage: f64,
}

#[derive(Debug, Args)]
pub struct WindowArgs {
    /// Window length in return days.
    #[arg(long, default_value_t = 500)]
    pub delta: usize,
    #[arg(long, default_value_t = 25)]
    pub step: usize,
}

impl WindowArgs {
    fn config(&self) -> WindowConfig {
        WindowConfig {
            delta: self.delta,
            step: self.step,
        }
    }
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct TopologyArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub window: WindowArgs,
    #[arg(long, short, default_value = "-")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SpectralArgs {
    /// Eigensolver residual tolerance.
    #[arg(long, default_value_t = 1e-10)]
    pub eig_tol: f64,
    #[arg(long, default_value_t = 100_000)]
    pub eig_max_iter: usize,
    /// Sum absolute eigenvector entries.
    #[arg(long)]
    pub absolute: bool,
}

impl SpectralArgs {
    fn config(&self) -> EigenConfig {
        EigenConfig {
            tol: self.eig_tol,
            max_iter: self.eig_max_iter,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MethodArg {
    Temporal,
    Aggregated,
}

impl From<MethodArg> for CentralityMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Temporal => CentralityMethod::Temporal,
            MethodArg::Aggregated => CentralityMethod::Aggregated,
        }
    }
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct CentralityArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub window: WindowArgs,
    #[command(flatten)]
    pub spectral: SpectralArgs,
    #[arg(long, value_enum, default_value = "temporal")]
    pub method: MethodArg,
    #[arg(long, short, default_value = "-")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModesArg {
    Central,
    Peripheral,
    Both,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MethodsArg {
    Temporal,
    Aggregated,
    Both,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum CovSourceArg {
    Evaluation,
    Estimation,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub window: WindowArgs,
    #[command(flatten)]
    pub spectral: SpectralArgs,
    /// Directory in which the run directory is created.
    #[arg(long, default_value = "runs")]
    pub out_dir: PathBuf,
    /// Fixed run id instead of a timestamp.
    #[arg(long)]
    pub run_id: Option<String>,
    #[arg(long, conflicts_with = "out_of_sample")]
    pub in_sample: bool,
    #[arg(long)]
    pub out_of_sample: bool,
    /// Return days used to build the networks (out of sample).
    #[arg(long = "est", default_value_t = 3500)]
    pub estimation_len: usize,
    /// Return days used to optimise and evaluate (out of sample).
    #[arg(long = "eval", default_value_t = 225)]
    pub evaluation_len: usize,
    #[arg(long, value_enum, default_value = "both")]
    pub mode: ModesArg,
    #[arg(long, value_enum, default_value = "both")]
    pub method: MethodsArg,
    /// Tail probability of the expected shortfall.
    #[arg(long, default_value_t = 0.05)]
    pub tail_prob: f64,
    /// Comma-separated risk tolerances; defaults to 0 and 49 values from 1e-3 to 10.
    #[arg(long, value_delimiter = ',')]
    pub q_grid: Option<Vec<f64>>,
    #[arg(long)]
    pub allow_short: bool,
    /// Slice the out-of-sample optimiser estimates moments on.
    #[arg(long, value_enum, default_value = "evaluation")]
    pub cov_source: CovSourceArg,
    /// Recorded in the report.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct FrontierArgs {
    #[command(flatten)]
    pub common: ExperimentArgs,
    /// Portfolio size; defaults to 30, or the whole universe if smaller.
    #[arg(long)]
    pub m: Option<usize>,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct EsArgs {
    #[command(flatten)]
    pub common: ExperimentArgs,
    /// Comma-separated portfolio sizes; defaults to 5, 10, ..., 60, capped
    /// at the universe size.
    #[arg(long, value_delimiter = ',')]
    pub m: Option<Vec<usize>>,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct BacktestArgs {
    #[command(flatten)]
    pub common: ExperimentArgs,
    /// Comma-separated portfolio sizes for ES curves; defaults to 5, 10,
    /// ..., 60, capped at the universe size.
    #[arg(long, value_delimiter = ',')]
    pub m: Option<Vec<usize>>,
    /// Portfolio size for the frontiers; defaults to 30, or the whole
    /// universe if smaller.
    #[arg(long)]
    pub frontier_m: Option<usize>,
}

const SUBCOMMANDS: [&str; 6] = [
    "synth",
    "topology",
    "centrality",
    "frontier",
    "es",
    "backtest",
];

/// Parses `key = value` lines into flags. `true` becomes a bare switch and
/// `false` drops the key; `#` starts a comment.
pub fn config_file_args(text: &str) -> Result<Vec<OsString>> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Format {
                line: n + 1,
                column: 1,
                message: format!("expected key = value, got '{line}'"),
            });
        };
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        let value = value.trim().trim_matches('"');
        match value {
            "true" => out.push(format!("--{key}").into()),
            "false" => {}
            _ => out.push(format!("--{key}={value}").into()),
        }
    }
    Ok(out)
}

/// Splices flags from `--config` files in front of the explicit ones.
fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let mut rest = Vec::with_capacity(args.len());
    let mut config = None;
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        match a.to_str() {
            Some("--config") => config = it.next(),
            Some(s) if s.starts_with("--config=") => config = Some(s["--config=".len()..].into()),
            _ => rest.push(a),
        }
    }
    let Some(path) = config else { return Ok(rest) };
    let path = PathBuf::from(path);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let injected = config_file_args(&text)?;
    let at = rest
        .iter()
        .position(|a| a.to_str().is_some_and(|s| SUBCOMMANDS.contains(&s)))
        .map_or(rest.len(), |i| i + 1);
    rest.splice(at..at, injected);
    Ok(rest)
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_validation() {
        EXIT_VALIDATION
    } else if e.is_numeric() {
        EXIT_NUMERIC
    } else {
        EXIT_IO
    }
}

fn init_logging(verbose: u8, quiet: bool) {
    let level = match (quiet, verbose) {
        (true, _) => log::LevelFilter::Error,
        (false, 0) => log::LevelFilter::Warn,
        (false, 1) => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .try_init();
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args = match expand_config(args.into_iter().map(Into::into).collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    init_logging(cli.verbose, cli.quiet);
    match dispatch(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(cmd: &Command) -> Result<()> {
    match cmd {
        Command::Synth(a) => cmd_synth(a),
        Command::Topology(a) => cmd_topology(a),
        Command::Centrality(a) => cmd_centrality(a),
        Command::Frontier(a) => {
            let sizes = Sizes {
                curves: a.m.map(|m| vec![m]),
                frontier: a.m,
            };
            cmd_experiment(
                &a.common,
                sizes,
                Artifacts {
                    frontiers: true,
                    es_curves: false,
                },
            )
        }
        Command::Es(a) => {
            let sizes = Sizes {
                curves: a.m.clone(),
                frontier: a.m.as_ref().and_then(|m| m.first().copied()),
            };
            cmd_experiment(
                &a.common,
                sizes,
                Artifacts {
                    frontiers: false,
                    es_curves: true,
                },
            )
        }
        Command::Backtest(a) => {
            let sizes = Sizes {
                curves: a.m.clone(),
                frontier: a.frontier_m,
            };
            cmd_experiment(&a.common, sizes, Artifacts::default())
        }
    }
}

/// Portfolio sizes given on the command line; `None` means the default,
/// capped at the number of stocks.
struct Sizes {
    curves: Option<Vec<usize>>,
    frontier: Option<usize>,
}

impl Sizes {
    fn apply(self, cfg: &mut ExperimentConfig, n: usize) {
        match self.curves {
            Some(m) => cfg.sizes = m,
            None => {
                cfg.sizes.retain(|&m| m <= n);
                if cfg.sizes.is_empty() {
                    cfg.sizes.push(n);
                }
            }
        }
        cfg.frontier_size = self.frontier.unwrap_or(cfg.frontier_size.min(n));
    }
}

/// Opens `-` as standard output, anything else as a new file.
fn output(path: &Path) -> Result<Box<dyn Write>> {
    if path.as_os_str() == "-" {
        Ok(Box::new(std::io::stdout().lock()))
    } else {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        Ok(Box::new(std::io::BufWriter::new(f)))
    }
}

pub fn cmd_synth(a: &SynthArgs) -> Result<()> {
    let spec = FactorSpec::linear_betas(
        a.stocks,
        a.days,
        a.beta_min,
        a.beta_max,
        a.factor_vol,
        a.idio_vol,
        a.seed,
    );
    let panel = synth_one_factor(&spec)?;
    let mut w = output(&a.out)?;
    if a.long {
        write_long_csv(&panel, &mut w)?;
    } else {
        panel.write_wide_csv(&mut w)?;
    }
    w.flush().map_err(|e| Error::io(&a.out, e))
}

/// Loads prices and returns them with the SHA-256 of the file.
fn load_input(a: &InputArgs) -> Result<(ReturnPanel, String)> {
    let bytes = std::fs::read(&a.input).map_err(|e| Error::io(&a.input, e))?;
    let policy = AlignmentPolicy {
        min_coverage: a.min_coverage,
        layout: a.layout.into(),
    };
    let panel = load_prices(bytes.as_slice(), &policy)?;
    log::info!(
        "loaded {} stocks x {} dates from {}",
        panel.n_stocks(),
        panel.n_dates(),
        a.input.display()
    );
    Ok((log_returns(&panel)?, hex::encode(Sha256::digest(&bytes))))
}

pub fn cmd_topology(a: &TopologyArgs) -> Result<()> {
    let (panel, _) = load_input(&a.input)?;
    let rows = run_topology(&panel, a.window.config())?;
    write_topology(output(&a.out)?, &rows)
}

pub fn cmd_centrality(a: &CentralityArgs) -> Result<()> {
    let (panel, _) = load_input(&a.input)?;
    let seq = rolling_correlations(&panel, a.window.config())?;
    let net = TemporalNetwork::build(&seq, &ArimaConfig::default())?;
    let ranking = net.ranking(
        a.method.into(),
        &panel.tickers,
        &a.spectral.config(),
        a.spectral.absolute,
    )?;
    ranking
        .write_to(output(&a.out)?)
        .map_err(|e| Error::io(&a.out, e))
}

fn experiment_config(a: &ExperimentArgs) -> ExperimentConfig {
    let modes = match a.mode {
        ModesArg::Central => vec![Mode::Central],
        ModesArg::Peripheral => vec![Mode::Peripheral],
        ModesArg::Both => vec![Mode::Central, Mode::Peripheral],
    };
    let methods = match a.method {
        MethodsArg::Temporal => vec![CentralityMethod::Temporal],
        MethodsArg::Aggregated => vec![CentralityMethod::Aggregated],
        MethodsArg::Both => vec![CentralityMethod::Temporal, CentralityMethod::Aggregated],
    };
    ExperimentConfig {
        window: a.window.config(),
        estimation_len: a.estimation_len,
        evaluation_len: a.evaluation_len,
        modes,
        methods,
        tail_prob: a.tail_prob,
        q_grid: a.q_grid.clone().unwrap_or_else(default_q_grid),
        long_only: !a.allow_short,
        covariance_source: match a.cov_source {
            CovSourceArg::Evaluation => CovarianceSource::Evaluation,
            CovSourceArg::Estimation => CovarianceSource::Estimation,
        },
        absolute_centrality: a.spectral.absolute,
        eigen: a.spectral.config(),
        seed: a.seed,
        ..ExperimentConfig::default()
    }
}

fn cmd_experiment(a: &ExperimentArgs, sizes: Sizes, artifacts: Artifacts) -> Result<()> {
    let mut cfg = experiment_config(a);
    if let Some(m) = sizes
        .curves
        .iter()
        .flatten()
        .chain(&sizes.frontier)
        .find(|&&m| m == 0)
    {
        return Err(Error::Config(format!(
            "portfolio size {m} must be positive"
        )));
    }
    cfg.validate()?;
    let (panel, digest) = load_input(&a.input)?;
    sizes.apply(&mut cfg, panel.n_stocks());
    let sample = if a.out_of_sample {
        Sample::OutOfSample
    } else {
        Sample::InSample
    };
    let input_name = a
        .input
        .input
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let provenance = Provenance::for_panel(&panel, &input_name, Some(digest), cfg.seed);
    let report = run_experiment(&panel, &cfg, sample, provenance, artifacts)?;
    let dir = report.write(&a.out_dir, a.run_id.as_deref())?;
    println!("{}", dir.display());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_lines_become_flags() {
        let args = config_file_args("# defaults\ndelta = 300\nout_of_sample = true\nallow-short=false\n\nq-grid = 0,1 # two\n").unwrap();
        assert_eq!(
            args,
            vec![
                OsString::from("--delta=300"),
                "--out-of-sample".into(),
                "--q-grid=0,1".into()
            ]
        );
        assert!(matches!(
            config_file_args("delta 300"),
            Err(Error::Format { line: 1, .. })
        ));
    }

    #[test]
    fn explicit_flags_override_config() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.cfg");
        std::fs::write(&path, "delta = 300\nstep = 10\n").unwrap();
        let args: Vec<OsString> = [
            "tempnet", "topology", "--input", "x.csv", "--delta", "200", "--config",
        ]
        .into_iter()
        .map(OsString::from)
        .chain([path.clone().into_os_string()])
        .collect();
        let cli = Cli::try_parse_from(expand_config(args).unwrap()).unwrap();
        let Command::Topology(t) = cli.command else {
            panic!()
        };
        assert_eq!((t.window.delta, t.window.step), (200, 10));
    }

    #[test]
    fn exit_code_classes() {
        assert_eq!(exit_code(&Error::Config("x".into())), 2);
        assert_eq!(exit_code(&Error::Convergence("x".into())), 3);
        assert_eq!(exit_code(&Error::io("p", std::io::Error::other("x"))), 4);
    }
}
