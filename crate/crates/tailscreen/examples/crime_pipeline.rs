//! End-to-end analysis of the Communities and Crime demo data: which
//! social covariates drive the tail of the robbery rate?
//!
//! Fetch the data first (downloads from the UCI repository, needs curl):
//!
//!   cargo run --release --bin tailscreen -- fetch-demo-data --out crime_demo.csv
//!
//! Then: cargo run --release --example crime_pipeline -- crime_demo.csv

use tailscreen::pipeline::{cmd_extrapolate, cmd_fit, ingest_csv, IngestPolicy, RunConfig};

fn main() {
    let path = std::env::args().nth(1).unwrap_or_else(|| "crime_demo.csv".into());
    let policy = IngestPolicy::new("robbbPerPop");
    let (dataset, report) = match ingest_csv(std::path::Path::new(&path), &policy) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("cannot ingest {path}: {e}");
            eprintln!("run `tailscreen fetch-demo-data --out {path}` first");
            std::process::exit(2);
        }
    };
    println!(
        "{} communities x {} social covariates ({} columns dropped for missing values)",
        report.n,
        report.p,
        report.dropped_columns.len()
    );

    let config = RunConfig {
        out_dir: std::env::temp_dir().join("tailscreen_crime"),
        ..RunConfig::default()
    };
    let (fit, selection, screen_out) = cmd_fit(&dataset, &config).unwrap();

    println!(
        "marginal tail index gamma0 = {:.3} at k = {}",
        screen_out.result.gamma0.gamma_hat,
        screen_out.result.k.get()
    );
    println!("top 7 covariates by marginal utility:");
    for &j in screen_out.result.ranking.iter().take(7) {
        println!("  {:>22}  d = {:.5}", dataset.names()[j], screen_out.result.utilities[j]);
    }
    println!(
        "selected sizes: j* = {}, j** = {}; single-index fit at k = {}:",
        selection.j_star,
        selection.j_double_star,
        fit.k.get()
    );
    for (label, a) in fit.labels.iter().zip(&fit.alpha) {
        println!("  {label:>22}: {a:+.3}");
    }

    let path = cmd_extrapolate(&fit, &config).unwrap();
    println!("extrapolated 1 - 11/n quantile curve written to {}", path.display());
}
