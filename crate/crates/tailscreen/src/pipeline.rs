//! CSV ingestion with the missing-data policy, the end-to-end analysis
//! commands behind the CLI (screen, fit, extrapolate, simulate, tune),
//! and CSV/SVG emission of their outputs.
//!
//! Commands are plain functions over [`Dataset`] + [`RunConfig`]; the
//! binary is a thin argument parser around them. Every emitted CSV writes
//! floats in shortest round-trip form, so re-ingesting reproduces the
//! in-memory values exactly.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::core::{rank_transform, Bandwidth, Dataset, IntermediateOrder};
use crate::error::{Error, Result};
use crate::evi::pickands_sorted;
use crate::gp::{extrapolated_quantile, fit_gp_curve, LocalGpFit};
use crate::kernel::Kernel;
use crate::quantreg::{fit_tail_quantreg, single_index_direction};
use crate::screening::{screen, ScreeningResult};
use crate::simulation::{run_simulation, MetricsReport, SimMode, SimulationSpec};
use crate::tuning::{
    bandwidth_cv, bandwidth_cv_pooled, default_h_grid, default_k_grid, discrepancy_conditional,
    scaled_h_grid, select_k, select_model_size, BandwidthTrace, KSelectionTrace, SizeSelection,
};

/// Missing-data policy for CSV ingestion. Cells that are empty, "?", or
/// fail numeric parsing count as missing.
#[derive(Debug, Clone)]
pub struct IngestPolicy {
    /// Covariates with more missing cells than this are dropped.
    pub max_missing_per_covariate: usize,
    /// Drop rows with a missing cell in any kept covariate.
    pub drop_rows_with_missing: bool,
    pub response_column: String,
    /// Drop rows whose response is zero or negative.
    pub positive_response_required: bool,
    /// Columns never used as covariates (identifiers, alternate targets).
    pub exclude_columns: Vec<String>,
}

impl IngestPolicy {
    pub fn new(response_column: impl Into<String>) -> Self {
        Self {
            max_missing_per_covariate: 200,
            drop_rows_with_missing: true,
            response_column: response_column.into(),
            positive_response_required: true,
            exclude_columns: Vec::new(),
        }
    }
}

/// Reconciliation of what ingestion kept and dropped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IngestReport {
    pub original_rows: usize,
    pub original_columns: usize,
    /// (name, missing count) of covariates over the missing cap.
    pub dropped_columns: Vec<(String, usize)>,
    pub excluded_columns: usize,
    pub dropped_rows_missing: usize,
    pub dropped_rows_response: usize,
    pub n: usize,
    pub p: usize,
}

fn parse_cell(cell: &str) -> Option<f64> {
    let t = cell.trim();
    if t.is_empty() || t == "?" {
        return None;
    }
    t.parse().ok()
}

/// Ingest a CSV with a header row: drop covariates over the missing cap,
/// drop rows with remaining missing cells or unusable responses, and
/// rank-transform every kept covariate column.
pub fn ingest_csv(path: &Path, policy: &IngestPolicy) -> Result<(Dataset, IngestReport)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_path(path)
        .map_err(|e| Error::Data(format!("cannot read {}: {e}", path.display())))?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Data(format!("bad header row: {e}")))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let response_idx = headers
        .iter()
        .position(|h| h == &policy.response_column)
        .ok_or_else(|| {
            Error::Data(format!(
                "response column '{}' not found",
                policy.response_column
            ))
        })?;

    let mut rows: Vec<Vec<Option<f64>>> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Data(format!("bad CSV record: {e}")))?;
        if record.len() != headers.len() {
            return Err(Error::Data(format!(
                "row with {} fields, expected {}",
                record.len(),
                headers.len()
            )));
        }
        rows.push(record.iter().map(parse_cell).collect());
    }
    let original_rows = rows.len();
    if original_rows == 0 {
        return Err(Error::Data("no data rows".into()));
    }

    // candidate covariates: everything except the response and exclusions
    let mut excluded = 0usize;
    let mut candidates: Vec<usize> = Vec::new();
    for (j, name) in headers.iter().enumerate() {
        if j == response_idx {
            continue;
        }
        if policy.exclude_columns.iter().any(|e| e == name) {
            excluded += 1;
            continue;
        }
        candidates.push(j);
    }

    // missing counts per candidate column
    let mut dropped_columns: Vec<(String, usize)> = Vec::new();
    let mut kept: Vec<usize> = Vec::new();
    for &j in &candidates {
        let missing = rows.iter().filter(|r| r[j].is_none()).count();
        if missing > policy.max_missing_per_covariate {
            dropped_columns.push((headers[j].clone(), missing));
        } else {
            kept.push(j);
        }
    }
    if kept.is_empty() {
        return Err(Error::Data("no covariate columns survive the missing cap".into()));
    }

    // row filtering
    let mut dropped_rows_missing = 0usize;
    let mut dropped_rows_response = 0usize;
    let mut y: Vec<f64> = Vec::new();
    let mut raw_cols: Vec<Vec<f64>> = vec![Vec::new(); kept.len()];
    for row in &rows {
        let resp = row[response_idx];
        let resp_ok = match resp {
            Some(v) if v.is_finite() => !(policy.positive_response_required && v <= 0.0),
            _ => false,
        };
        if !resp_ok {
            dropped_rows_response += 1;
            continue;
        }
        if row.iter().enumerate().any(|(j, cell)| kept.contains(&j) && cell.is_none()) {
            if policy.drop_rows_with_missing {
                dropped_rows_missing += 1;
                continue;
            }
            return Err(Error::Data(
                "missing covariate cell with drop_rows_with_missing disabled".into(),
            ));
        }
        y.push(resp.unwrap());
        for (c, &j) in kept.iter().enumerate() {
            raw_cols[c].push(row[j].unwrap());
        }
    }

    let columns: Vec<Vec<f64>> = raw_cols.iter().map(|c| rank_transform(c)).collect();
    let names: Vec<String> = kept.iter().map(|&j| headers[j].clone()).collect();
    let n = y.len();
    let p = columns.len();
    let dataset = Dataset::new(y, columns, names)?;
    Ok((
        dataset,
        IngestReport {
            original_rows,
            original_columns: headers.len(),
            dropped_columns,
            excluded_columns: excluded,
            dropped_rows_missing,
            dropped_rows_response,
            n,
            p,
        },
    ))
}

/// Which selected size the final fit uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectorChoice {
    JStar,
    JStarStar,
}

/// Command parameters shared by the analysis commands.
#[derive(Debug, Clone)]
pub struct RunConfig {
    /// Tail order; `None` selects it from the data.
    pub k: Option<usize>,
    /// Bandwidth; `None` cross-validates it.
    pub h: Option<f64>,
    pub kernel: Kernel,
    pub q_cap: usize,
    /// Extreme quantile order for extrapolation; `None` uses 11/n.
    pub tau: Option<f64>,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub svg: bool,
    pub selector: SelectorChoice,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            k: None,
            h: None,
            kernel: Kernel::Epanechnikov,
            q_cap: 50,
            tau: None,
            seed: 0,
            out_dir: PathBuf::from("."),
            svg: false,
            selector: SelectorChoice::JStarStar,
        }
    }
}

/// Screening command output.
#[derive(Debug)]
pub struct ScreenOutput {
    pub result: ScreeningResult,
    pub k_trace: Option<KSelectionTrace>,
    pub h_trace: Option<BandwidthTrace>,
    pub files: Vec<PathBuf>,
}

/// Rank the covariates: select k on the response (unless fixed), pick the
/// common bandwidth by pooled cross-validation (unless fixed), screen,
/// and write the utilities in original and ranked order.
pub fn cmd_screen(dataset: &Dataset, config: &RunConfig) -> Result<ScreenOutput> {
    let n = dataset.n();
    let (k, k_trace) = match config.k {
        Some(k) => (IntermediateOrder::new(k, n)?, None),
        None => {
            let (k, trace) = select_k(dataset.y(), &default_k_grid(n))?;
            (k, Some(trace))
        }
    };
    let t = n as f64 / k.get() as f64;
    let (h, h_trace) = match config.h {
        Some(h) => (Bandwidth::new(h)?, None),
        None => {
            let cols: Vec<&[f64]> = (0..dataset.p()).map(|j| dataset.column(j)).collect();
            let (h, trace) = bandwidth_cv_pooled(&cols, dataset.y(), t, &default_h_grid(), config.kernel)?;
            (h, Some(trace))
        }
    };
    let result = screen(dataset, k, config.kernel, h)?;

    let mut files = Vec::new();
    let mut csv = String::from("covariate,utility\n");
    for (j, name) in dataset.names().iter().enumerate() {
        writeln!(csv, "{},{}", name, fmt_utility(result.utilities[j])).unwrap();
    }
    files.push(write_text(&config.out_dir, "utilities.csv", &csv)?);

    let mut csv = String::from("rank,covariate,utility\n");
    for (r, &j) in result.ranking.iter().enumerate() {
        writeln!(
            csv,
            "{},{},{}",
            r + 1,
            dataset.names()[j],
            fmt_utility(result.utilities[j])
        )
        .unwrap();
    }
    files.push(write_text(&config.out_dir, "utilities_ranked.csv", &csv)?);

    if config.svg {
        let vals: Vec<f64> = result
            .utilities
            .iter()
            .map(|&d| if d.is_finite() { d } else { 0.0 })
            .collect();
        let svg = bar_chart_svg(&vals, "marginal utility by covariate");
        files.push(write_text(&config.out_dir, "utilities.svg", &svg)?);
    }

    Ok(ScreenOutput {
        result,
        k_trace,
        h_trace,
        files,
    })
}

/// The fitted single-index tail model.
#[derive(Debug)]
pub struct SingleIndexFit {
    /// Column indices of the selected active set, in ranking order.
    pub active_set: Vec<usize>,
    pub labels: Vec<String>,
    /// Unit direction over the active set.
    pub alpha: Vec<f64>,
    pub k: IntermediateOrder,
    pub h: Bandwidth,
    pub j_star: usize,
    pub j_double_star: usize,
    /// Index grid with one local fit per point.
    pub fits: Vec<LocalGpFit>,
    /// Discrepancies over the GP-stage k grid (diagnostics).
    pub k_trace: Vec<(usize, Option<f64>)>,
    pub n: usize,
}

/// Grid of candidate tail orders for the GP stage (deeper than the
/// screening grid; the threshold level 1 - k/n may sit well inside the
/// sample).
pub fn gp_k_grid(n: usize) -> Vec<usize> {
    let lo = ((n as f64 / 20.0).ceil() as usize).max(2);
    let hi = ((2 * n) / 5).max(lo);
    let (la, lb) = ((lo as f64).ln(), (hi as f64).ln());
    let mut grid: Vec<usize> = (0..25)
        .map(|i| (la + (lb - la) * i as f64 / 24.0).exp().round() as usize)
        .filter(|&k| k >= 2 && 2 * k < n)
        .collect();
    grid.sort_unstable();
    grid.dedup();
    grid
}

/// Screen, choose the model size, then fit the single-index GP model:
/// for each candidate GP-stage k, refit the direction at level 1 - k/n,
/// cross-validate the bandwidth, and score the conditional discrepancy;
/// the winning (k, h, alpha) drives the final local GP curve over a
/// 200-point index grid.
pub fn cmd_fit(dataset: &Dataset, config: &RunConfig) -> Result<(SingleIndexFit, SizeSelection, ScreenOutput)> {
    let screen_out = cmd_screen(dataset, config)?;
    let selection = select_model_size(dataset, &screen_out.result, config.q_cap, config.kernel)?;
    let j = match config.selector {
        SelectorChoice::JStar => selection.j_star,
        SelectorChoice::JStarStar => selection.j_double_star,
    };
    let active_set: Vec<usize> = screen_out.result.nested_set(j)?.to_vec();
    let fit = fit_final_model(dataset, &active_set, config, &selection)?;
    write_fit_outputs(dataset, &fit, &selection, config)?;
    Ok((fit, selection, screen_out))
}

fn fit_final_model(
    dataset: &Dataset,
    active_set: &[usize],
    config: &RunConfig,
    selection: &SizeSelection,
) -> Result<SingleIndexFit> {
    let n = dataset.n();
    let y = dataset.y();
    let cols: Vec<&[f64]> = active_set.iter().map(|&c| dataset.column(c)).collect();

    let k_grid: Vec<usize> = match config.k {
        Some(k) => vec![k],
        None => gp_k_grid(n),
    };

    // two-stage loop: per candidate k, bandwidth first, then the
    // discrepancy decides k
    let mut k_trace: Vec<(usize, Option<f64>)> = Vec::with_capacity(k_grid.len());
    let mut best: Option<(f64, usize, f64, Vec<f64>)> = None; // (q, k, h, alpha)
    for &k in &k_grid {
        let eval = evaluate_gp_order(dataset, &cols, active_set, k, config);
        match eval {
            Ok((q, h, alpha)) => {
                if best
                    .as_ref()
                    .is_none_or(|(bq, bk, _, _)| (q, k) < (*bq, *bk))
                {
                    best = Some((q, k, h, alpha));
                }
                k_trace.push((k, Some(q)));
            }
            Err(_) => k_trace.push((k, None)),
        }
    }
    let (_, k_best, h_best, alpha) = best.ok_or(Error::NoFeasibleK {
        grid_len: k_grid.len(),
    })?;
    let k = IntermediateOrder::new_tail(k_best, n)?;
    let h = Bandwidth::new(h_best)?;

    let z = dataset.index_values(active_set, &alpha);
    let lo = z.iter().cloned().fold(f64::INFINITY, f64::min) + h.get();
    let hi = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - h.get();
    if !(lo < hi) {
        return Err(Error::Domain(format!(
            "bandwidth {} leaves no interior index interval",
            h.get()
        )));
    }
    let grid: Vec<f64> = (0..200)
        .map(|i| lo + (hi - lo) * i as f64 / 199.0)
        .collect();
    let curve = fit_gp_curve(y, &z, &grid, k, config.kernel, h)?;
    let mut fits = Vec::with_capacity(grid.len());
    for (z0, f) in curve.points {
        fits.push(f.map_err(|e| {
            Error::FitFailed(format!("curve point z = {z0}: {e}"))
        })?);
    }

    Ok(SingleIndexFit {
        active_set: active_set.to_vec(),
        labels: active_set.iter().map(|&c| dataset.names()[c].clone()).collect(),
        alpha,
        k,
        h,
        j_star: selection.j_star,
        j_double_star: selection.j_double_star,
        fits,
        k_trace,
        n,
    })
}

/// One candidate GP-stage order: direction at level 1 - k/n, bandwidth by
/// cross-validation (unless fixed), conditional discrepancy as the score.
fn evaluate_gp_order(
    dataset: &Dataset,
    cols: &[&[f64]],
    active_set: &[usize],
    k: usize,
    config: &RunConfig,
) -> Result<(f64, f64, Vec<f64>)> {
    let n = dataset.n();
    let korder = IntermediateOrder::new_tail(k, n)?;
    let s = n as f64 / k as f64;
    let alpha = if cols.len() == 1 {
        vec![1.0]
    } else {
        let fit = fit_tail_quantreg(dataset.y(), cols, s)?;
        single_index_direction(&fit)?.alpha
    };
    let z = dataset.index_values(active_set, &alpha);
    let h = match config.h {
        Some(h) => Bandwidth::new(h)?,
        None => {
            let grid = scaled_h_grid(&z);
            bandwidth_cv(&z, dataset.y(), s, &grid, config.kernel)?.0
        }
    };
    let q = discrepancy_conditional(dataset.y(), &z, korder, config.kernel, h)?;
    Ok((q, h.get(), alpha))
}

fn write_fit_outputs(
    dataset: &Dataset,
    fit: &SingleIndexFit,
    selection: &SizeSelection,
    config: &RunConfig,
) -> Result<()> {
    let mut csv = String::from("z,gamma_hat,a_hat,threshold\n");
    for f in &fit.fits {
        writeln!(
            csv,
            "{},{},{},{}",
            f.z0, f.gamma_hat, f.a_hat, f.threshold_at_z0
        )
        .unwrap();
    }
    write_text(&config.out_dir, "gp_curve.csv", &csv)?;

    let mut csv = String::from("covariate,alpha\n");
    for (label, a) in fit.labels.iter().zip(&fit.alpha) {
        writeln!(csv, "{label},{a}").unwrap();
    }
    write_text(&config.out_dir, "direction.csv", &csv)?;

    let mut csv = String::from("j,discrepancy,h\n");
    for ev in &selection.trace {
        writeln!(
            csv,
            "{},{},{}",
            ev.j,
            ev.discrepancy.map_or(String::new(), |q| q.to_string()),
            ev.h.map_or(String::new(), |h| h.to_string())
        )
        .unwrap();
    }
    write_text(&config.out_dir, "size_trace.csv", &csv)?;

    let mut csv = String::from("k,discrepancy\n");
    for (k, q) in &fit.k_trace {
        writeln!(csv, "{},{}", k, q.map_or(String::new(), |q| q.to_string())).unwrap();
    }
    write_text(&config.out_dir, "gp_k_trace.csv", &csv)?;

    let mut summary = String::new();
    writeln!(summary, "n,{}", dataset.n()).unwrap();
    writeln!(summary, "p,{}", dataset.p()).unwrap();
    writeln!(summary, "j_star,{}", fit.j_star).unwrap();
    writeln!(summary, "j_double_star,{}", fit.j_double_star).unwrap();
    writeln!(summary, "k,{}", fit.k.get()).unwrap();
    writeln!(summary, "h,{}", fit.h.get()).unwrap();
    write_text(&config.out_dir, "fit_summary.csv", &summary)?;

    if config.svg {
        let gammas: Vec<(f64, f64)> = fit.fits.iter().map(|f| (f.z0, f.gamma_hat)).collect();
        let svg = line_chart_svg(&[("gamma", &gammas)], "tail index along the fitted index");
        write_text(&config.out_dir, "gp_curve.svg", &svg)?;
    }
    Ok(())
}

/// Extrapolated tail quantile curve at order tau (default 11/n).
pub fn cmd_extrapolate(fit: &SingleIndexFit, config: &RunConfig) -> Result<PathBuf> {
    let tau = config.tau.unwrap_or(11.0 / fit.n as f64);
    let mut csv = String::from("z,quantile\n");
    let mut series = Vec::with_capacity(fit.fits.len());
    for f in &fit.fits {
        let v = extrapolated_quantile(f, None, tau)?;
        writeln!(csv, "{},{}", f.z0, v).unwrap();
        series.push((f.z0, v));
    }
    let path = write_text(&config.out_dir, "extrapolated_quantile.csv", &csv)?;
    if config.svg {
        let svg = line_chart_svg(
            &[("extrapolated quantile", &series)],
            "extreme conditional quantile along the index",
        );
        write_text(&config.out_dir, "extrapolated_quantile.svg", &svg)?;
    }
    Ok(path)
}

/// Run a simulation experiment from a config file and write the metrics
/// table.
pub fn cmd_simulate(spec_text: &str, out_dir: &Path) -> Result<(MetricsReport, PathBuf)> {
    let spec = SimulationSpec::from_config_str(spec_text)?;
    let (_records, report) = run_simulation(&spec)?;
    let csv = metrics_csv(&spec, &report);
    let path = write_text(out_dir, "simulation_metrics.csv", &csv)?;
    Ok((report, path))
}

/// Metrics table: one row per experiment for screening mode, one row per
/// covariate set for fixed-tuning mode.
pub fn metrics_csv(spec: &SimulationSpec, report: &MetricsReport) -> String {
    let mut out = String::new();
    match spec.mode {
        SimMode::Screening => {
            out.push_str(
                "model,n,p,r,m,replications,s5,s25,s50,s75,s95,p_capture,tp_star,tp_double_star,failed\n",
            );
            let q = report.s_quantiles.unwrap_or([f64::NAN; 5]);
            writeln!(
                out,
                "{:?},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                spec.model,
                spec.n,
                spec.p,
                spec.r,
                spec.m,
                report.replications,
                q[0],
                q[1],
                q[2],
                q[3],
                q[4],
                fmt_opt(report.p_capture),
                fmt_opt(report.tp_star),
                fmt_opt(report.tp_double_star),
                report.failed
            )
            .unwrap();
        }
        SimMode::FixedTuning { .. } => {
            out.push_str("set,count,ase_median,ase_mad,log_loss_median,log_loss_mad\n");
            for s in &report.sets {
                writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    s.label,
                    s.count,
                    fmt_opt(s.ase_median),
                    fmt_opt(s.ase_mad),
                    fmt_opt(s.log_loss_median),
                    fmt_opt(s.log_loss_mad)
                )
                .unwrap();
            }
        }
    }
    out
}

/// Diagnostic traces for the response's tail order: the discrepancy and
/// the Pickands estimate over the k grid, plus the pooled bandwidth CV.
pub fn cmd_tune(dataset: &Dataset, config: &RunConfig) -> Result<Vec<PathBuf>> {
    let n = dataset.n();
    let grid = default_k_grid(n);
    let (k_star, trace) = select_k(dataset.y(), &grid)?;

    let mut sorted = dataset.y().to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("non-finite response"));
    let mut csv = String::from("k,discrepancy,gamma0\n");
    for (i, &k) in trace.grid.iter().enumerate() {
        let gamma = pickands_sorted(&sorted, k)
            .map(|(g, _)| g.to_string())
            .unwrap_or_default();
        writeln!(
            csv,
            "{},{},{}",
            k,
            trace.discrepancies[i].map_or(String::new(), |q| q.to_string()),
            gamma
        )
        .unwrap();
    }
    let mut files = vec![write_text(&config.out_dir, "k_trace.csv", &csv)?];

    let t = n as f64 / k_star.get() as f64;
    let cols: Vec<&[f64]> = (0..dataset.p()).map(|j| dataset.column(j)).collect();
    let (_, h_trace) = bandwidth_cv_pooled(&cols, dataset.y(), t, &default_h_grid(), config.kernel)?;
    let mut csv = String::from("h,cv_loss\n");
    for (i, &h) in h_trace.grid.iter().enumerate() {
        writeln!(
            csv,
            "{},{}",
            h,
            h_trace.losses[i].map_or(String::new(), |l| l.to_string())
        )
        .unwrap();
    }
    files.push(write_text(&config.out_dir, "h_trace.csv", &csv)?);
    Ok(files)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |v| v.to_string())
}

fn fmt_utility(d: f64) -> String {
    if d.is_finite() {
        d.to_string()
    } else {
        "unstable".into()
    }
}

fn write_text(dir: &Path, name: &str, text: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    std::fs::write(&path, text)?;
    Ok(path)
}

// ---------------------------------------------------------------------
// Demo data preparation (Communities and Crime, unnormalized)
// ---------------------------------------------------------------------

/// Leading identifier columns of the raw file.
const CRIME_IDENTIFIERS: [&str; 5] = ["communityname", "state", "countyCode", "communityCode", "fold"];

/// Crime outcome columns (the last 18); robbbPerPop is the demo response.
const CRIME_TARGETS: [&str; 18] = [
    "murders",
    "murdPerPop",
    "rapes",
    "rapesPerPop",
    "robberies",
    "robbbPerPop",
    "assaults",
    "assaultPerPop",
    "burglaries",
    "burglPerPop",
    "larcenies",
    "larcPerPop",
    "autoTheft",
    "autoTheftPerPop",
    "arsons",
    "arsonsPerPop",
    "ViolentCrimesPerPop",
    "nonViolPerPop",
];

/// Social predictor columns of the raw file, in file order.
const CRIME_SOCIAL: [&str; 124] = [
    "population",
    "householdsize",
    "racepctblack",
    "racePctWhite",
    "racePctAsian",
    "racePctHisp",
    "agePct12t21",
    "agePct12t29",
    "agePct16t24",
    "agePct65up",
    "numbUrban",
    "pctUrban",
    "medIncome",
    "pctWWage",
    "pctWFarmSelf",
    "pctWInvInc",
    "pctWSocSec",
    "pctWPubAsst",
    "pctWRetire",
    "medFamInc",
    "perCapInc",
    "whitePerCap",
    "blackPerCap",
    "indianPerCap",
    "AsianPerCap",
    "OtherPerCap",
    "HispPerCap",
    "NumUnderPov",
    "PctPopUnderPov",
    "PctLess9thGrade",
    "PctNotHSGrad",
    "PctBSorMore",
    "PctUnemployed",
    "PctEmploy",
    "PctEmplManu",
    "PctEmplProfServ",
    "PctOccupManu",
    "PctOccupMgmtProf",
    "MalePctDivorce",
    "MalePctNevMarr",
    "FemalePctDiv",
    "TotalPctDiv",
    "PersPerFam",
    "PctFam2Par",
    "PctKids2Par",
    "PctYoungKids2Par",
    "PctTeen2Par",
    "PctWorkMomYoungKids",
    "PctWorkMom",
    "NumKidsBornNeverMar",
    "PctKidsBornNeverMar",
    "NumImmig",
    "PctImmigRecent",
    "PctImmigRec5",
    "PctImmigRec8",
    "PctImmigRec10",
    "PctRecentImmig",
    "PctRecImmig5",
    "PctRecImmig8",
    "PctRecImmig10",
    "PctSpeakEnglOnly",
    "PctNotSpeakEnglWell",
    "PctLargHouseFam",
    "PctLargHouseOccup",
    "PersPerOccupHous",
    "PersPerOwnOccHous",
    "PersPerRentOccHous",
    "PctPersOwnOccup",
    "PctPersDenseHous",
    "PctHousLess3BR",
    "MedNumBR",
    "HousVacant",
    "PctHousOccup",
    "PctHousOwnOcc",
    "PctVacantBoarded",
    "PctVacMore6Mos",
    "MedYrHousBuilt",
    "PctHousNoPhone",
    "PctWOFullPlumb",
    "OwnOccLowQuart",
    "OwnOccMedVal",
    "OwnOccHiQuart",
    "OwnOccQrange",
    "RentLowQ",
    "RentMedian",
    "RentHighQ",
    "RentQrange",
    "MedRent",
    "MedRentPctHousInc",
    "MedOwnCostPctInc",
    "MedOwnCostPctIncNoMtg",
    "NumInShelters",
    "NumStreet",
    "PctForeignBorn",
    "PctBornSameState",
    "PctSameHouse85",
    "PctSameCity85",
    "PctSameState85",
    "LemasSwornFT",
    "LemasSwFTPerPop",
    "LemasSwFTFieldOps",
    "LemasSwFTFieldPerPop",
    "LemasTotalReq",
    "LemasTotReqPerPop",
    "PolicReqPerOffic",
    "PolicPerPop",
    "RacialMatchCommPol",
    "PctPolicWhite",
    "PctPolicBlack",
    "PctPolicHisp",
    "PctPolicAsian",
    "PctPolicMinor",
    "OfficAssgnDrugUnits",
    "NumKindsDrugsSeiz",
    "PolicAveOTWorked",
    "LandArea",
    "PopDens",
    "PctUsePubTrans",
    "PolicCars",
    "PolicOperBudg",
    "LemasPctPolicOnPatr",
    "LemasGangUnitDeploy",
    "LemasPctOfficDrugUn",
    "PolicBudgPerPop",
];

/// Convert the raw headerless demo file into a CSV with a header,
/// keeping the response (robbbPerPop) and the social predictors only.
/// The raw file is comma-separated with '?' as the missing marker.
pub fn prepare_crime_csv(raw: &str) -> Result<String> {
    let expected = CRIME_IDENTIFIERS.len() + CRIME_SOCIAL.len() + CRIME_TARGETS.len();
    let response_pos = CRIME_IDENTIFIERS.len()
        + CRIME_SOCIAL.len()
        + CRIME_TARGETS.iter().position(|t| *t == "robbbPerPop").unwrap();

    let mut out = String::from("robbbPerPop");
    for name in CRIME_SOCIAL {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');

    let mut rows = 0usize;
    for line in raw.lines() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != expected {
            return Err(Error::Data(format!(
                "raw demo row has {} fields, expected {expected}; the source \
                 format may have changed — supply a prepared CSV instead",
                fields.len()
            )));
        }
        out.push_str(fields[response_pos]);
        for j in 0..CRIME_SOCIAL.len() {
            out.push(',');
            out.push_str(fields[CRIME_IDENTIFIERS.len() + j]);
        }
        out.push('\n');
        rows += 1;
    }
    if rows == 0 {
        return Err(Error::Data("raw demo file has no data rows".into()));
    }
    Ok(out)
}

// ---------------------------------------------------------------------
// Minimal static SVG emitters
// ---------------------------------------------------------------------

const SVG_W: f64 = 640.0;
const SVG_H: f64 = 400.0;
const MARGIN: f64 = 40.0;

fn svg_header(title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SVG_W}\" height=\"{SVG_H}\" \
         viewBox=\"0 0 {SVG_W} {SVG_H}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"20\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"14\">{title}</text>\n",
        SVG_W / 2.0
    )
}

/// Polyline chart for one or more (x, y) series.
pub fn line_chart_svg(series: &[(&str, &[(f64, f64)])], title: &str) -> String {
    let mut svg = svg_header(title);
    let (mut xmin, mut xmax) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut ymin, mut ymax) = (f64::INFINITY, f64::NEG_INFINITY);
    for (_, pts) in series {
        for &(x, y) in *pts {
            xmin = xmin.min(x);
            xmax = xmax.max(x);
            ymin = ymin.min(y);
            ymax = ymax.max(y);
        }
    }
    if !(xmin < xmax) {
        xmax = xmin + 1.0;
    }
    if !(ymin < ymax) {
        ymax = ymin + 1.0;
    }
    let sx = |x: f64| MARGIN + (x - xmin) / (xmax - xmin) * (SVG_W - 2.0 * MARGIN);
    let sy = |y: f64| SVG_H - MARGIN - (y - ymin) / (ymax - ymin) * (SVG_H - 2.0 * MARGIN);
    let colors = ["#1f77b4", "#d62728", "#2ca02c"];
    for (s, (name, pts)) in series.iter().enumerate() {
        let mut d = String::new();
        for &(x, y) in *pts {
            let _ = write!(d, "{:.2},{:.2} ", sx(x), sy(y));
        }
        let color = colors[s % colors.len()];
        let _ = writeln!(
            svg,
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{d}\"/>"
        );
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" fill=\"{color}\">{name}</text>",
            MARGIN + 4.0,
            30.0 + 14.0 * s as f64
        );
    }
    let _ = writeln!(
        svg,
        "<line x1=\"{m}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\
         <line x1=\"{m}\" y1=\"{t}\" x2=\"{m}\" y2=\"{b}\" stroke=\"black\"/>",
        m = MARGIN,
        b = SVG_H - MARGIN,
        r = SVG_W - MARGIN,
        t = MARGIN
    );
    svg.push_str("</svg>\n");
    svg
}

/// Bar chart over item index.
pub fn bar_chart_svg(values: &[f64], title: &str) -> String {
    let mut svg = svg_header(title);
    let vmax = values.iter().cloned().fold(0.0f64, f64::max).max(1e-300);
    let w = (SVG_W - 2.0 * MARGIN) / values.len().max(1) as f64;
    for (i, &v) in values.iter().enumerate() {
        let h = (v.max(0.0) / vmax) * (SVG_H - 2.0 * MARGIN);
        let _ = writeln!(
            svg,
            "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"#1f77b4\"/>",
            MARGIN + i as f64 * w,
            SVG_H - MARGIN - h,
            (w * 0.9).max(0.5),
            h
        );
    }
    let _ = writeln!(
        svg,
        "<line x1=\"{m}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>",
        m = MARGIN,
        b = SVG_H - MARGIN,
        r = SVG_W - MARGIN
    );
    svg.push_str("</svg>\n");
    svg
}
