//! Command-line front end: argument parsing and file plumbing only; all
//! estimation lives in the library.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tailscreen::error::{Error, Result};
use tailscreen::pipeline::{
    cmd_extrapolate, cmd_fit, cmd_screen, cmd_simulate, cmd_tune, ingest_csv, prepare_crime_csv,
    IngestPolicy, RunConfig, SelectorChoice,
};

const DEMO_URL: &str =
    "https://archive.ics.uci.edu/ml/machine-learning-databases/00211/CommViolPredUnnormalizedData.txt";

#[derive(Parser)]
#[command(
    name = "tailscreen",
    about = "Covariate screening and single-index estimation for conditional extreme value indices",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct DataArgs {
    /// CSV file with a header row ('?' or empty cells are missing)
    data: PathBuf,
    /// Response column name
    #[arg(long)]
    response: String,
    /// Columns never used as covariates (repeatable)
    #[arg(long)]
    exclude: Vec<String>,
    /// Drop covariates with more missing cells than this
    #[arg(long, default_value_t = 200)]
    max_missing: usize,
    /// Keep rows with nonpositive responses
    #[arg(long)]
    allow_nonpositive: bool,
}

#[derive(Args, Clone)]
struct TuningArgs {
    /// Tail order k: an integer or "auto"
    #[arg(long, default_value = "auto")]
    k: String,
    /// Bandwidth h: a number or "auto"
    #[arg(long, default_value = "auto")]
    h: String,
    /// Kernel family: epanechnikov or gaussian
    #[arg(long, default_value = "epanechnikov")]
    kernel: String,
    /// Cap of the model-size search
    #[arg(long, default_value_t = 50)]
    qcap: usize,
    /// Extreme quantile order tau (default 11/n)
    #[arg(long)]
    tau: Option<f64>,
    /// Random seed for seeded operations
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Also emit static SVG charts
    #[arg(long)]
    svg: bool,
    /// Final model size selector: jstar or jstarstar
    #[arg(long, default_value = "jstarstar")]
    selector: String,
}

#[derive(Subcommand)]
enum Command {
    /// Rank covariates by their marginal tail-index utility
    Screen {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        tuning: TuningArgs,
    },
    /// Screen, select the model size, and fit the single-index GP model
    Fit {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        tuning: TuningArgs,
    },
    /// Fit, then extrapolate the extreme conditional quantile curve
    Extrapolate {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        tuning: TuningArgs,
    },
    /// Run a simulation experiment from a key = value config file
    Simulate {
        /// Experiment config file
        config: PathBuf,
        /// Output directory
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Emit tail-order and bandwidth diagnostic traces for the response
    Tune {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        tuning: TuningArgs,
    },
    /// Download and prepare the Communities and Crime demo CSV (needs curl)
    FetchDemoData {
        /// Source URL of the raw unnormalized data file
        #[arg(long, default_value = DEMO_URL)]
        url: String,
        /// Output CSV path
        #[arg(long, default_value = "crime_demo.csv")]
        out: PathBuf,
    },
}

fn parse_auto_usize(text: &str) -> Result<Option<usize>> {
    match text {
        "auto" => Ok(None),
        other => other
            .parse()
            .map(Some)
            .map_err(|_| Error::Config(format!("expected an integer or \"auto\", got '{other}'"))),
    }
}

fn parse_auto_f64(text: &str) -> Result<Option<f64>> {
    match text {
        "auto" => Ok(None),
        other => other
            .parse()
            .map(Some)
            .map_err(|_| Error::Config(format!("expected a number or \"auto\", got '{other}'"))),
    }
}

fn build_config(tuning: &TuningArgs) -> Result<RunConfig> {
    Ok(RunConfig {
        k: parse_auto_usize(&tuning.k)?,
        h: parse_auto_f64(&tuning.h)?,
        kernel: tuning.kernel.parse()?,
        q_cap: tuning.qcap,
        tau: tuning.tau,
        seed: tuning.seed,
        out_dir: tuning.out.clone(),
        svg: tuning.svg,
        selector: match tuning.selector.as_str() {
            "jstar" => SelectorChoice::JStar,
            "jstarstar" => SelectorChoice::JStarStar,
            other => {
                return Err(Error::Config(format!(
                    "selector must be jstar or jstarstar, got '{other}'"
                )))
            }
        },
    })
}

fn load(data: &DataArgs) -> Result<tailscreen::Dataset> {
    let mut policy = IngestPolicy::new(&data.response);
    policy.exclude_columns = data.exclude.clone();
    policy.max_missing_per_covariate = data.max_missing;
    policy.positive_response_required = !data.allow_nonpositive;
    let (dataset, report) = ingest_csv(&data.data, &policy)?;
    eprintln!(
        "ingested {} rows x {} covariates ({} columns dropped for missing values, \
         {} rows dropped for missing cells, {} rows for unusable responses)",
        report.n,
        report.p,
        report.dropped_columns.len(),
        report.dropped_rows_missing,
        report.dropped_rows_response
    );
    Ok(dataset)
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Screen { data, tuning } => {
            let dataset = load(&data)?;
            let config = build_config(&tuning)?;
            let out = cmd_screen(&dataset, &config)?;
            let g = out.result.gamma0;
            eprintln!(
                "gamma0 = {:.4} at k = {}, h = {:.4}",
                g.gamma_hat,
                out.result.k.get(),
                out.result.h.get()
            );
            for path in &out.files {
                println!("{}", path.display());
            }
        }
        Command::Fit { data, tuning } => {
            let dataset = load(&data)?;
            let config = build_config(&tuning)?;
            let (fit, selection, _) = cmd_fit(&dataset, &config)?;
            eprintln!(
                "j* = {}, j** = {}; fitted {} covariates at k = {}, h = {:.4}",
                selection.j_star,
                selection.j_double_star,
                fit.labels.len(),
                fit.k.get(),
                fit.h.get()
            );
            for (label, a) in fit.labels.iter().zip(&fit.alpha) {
                eprintln!("  {label}: {a:.4}");
            }
            println!("{}", config.out_dir.join("gp_curve.csv").display());
        }
        Command::Extrapolate { data, tuning } => {
            let dataset = load(&data)?;
            let config = build_config(&tuning)?;
            let (fit, _, _) = cmd_fit(&dataset, &config)?;
            let path = cmd_extrapolate(&fit, &config)?;
            println!("{}", path.display());
        }
        Command::Simulate { config, out } => {
            let text = std::fs::read_to_string(&config)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", config.display())))?;
            let (report, path) = cmd_simulate(&text, &out)?;
            eprintln!(
                "{} replications ({} failed)",
                report.replications, report.failed
            );
            println!("{}", path.display());
        }
        Command::Tune { data, tuning } => {
            let dataset = load(&data)?;
            let config = build_config(&tuning)?;
            for path in cmd_tune(&dataset, &config)? {
                println!("{}", path.display());
            }
        }
        Command::FetchDemoData { url, out } => {
            eprintln!("fetching {url}");
            let output = std::process::Command::new("curl")
                .args(["--fail", "--silent", "--show-error", "--location", &url])
                .output()
                .map_err(|e| Error::Config(format!("could not run curl: {e}")))?;
            if !output.status.success() {
                return Err(Error::Data(format!(
                    "download failed: {}",
                    String::from_utf8_lossy(&output.stderr)
                )));
            }
            let raw = String::from_utf8_lossy(&output.stdout);
            let prepared = prepare_crime_csv(&raw)?;
            std::fs::write(&out, prepared)?;
            eprintln!("wrote {}", out.display());
            println!("{}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
