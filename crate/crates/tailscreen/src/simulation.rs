//! Benchmark experiment harness: correlated-uniform covariate designs, a
//! Burr-type response law with covariate-dependent tail index, the full
//! screen/select/fit pipeline per replication, and the aggregated metrics
//! (minimum model size quantiles, capture proportion, true positive
//! rates, out-of-sample ASE and exceedance log-likelihood).
//!
//! Everything is deterministic given (spec, seed): each replication draws
//! from its own counter-based substream and aggregation reduces in
//! replication order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::core::{rank_transform, Bandwidth, Dataset, IntermediateOrder};
use crate::error::{Error, Result};
use crate::gp::TailExceedances;
use crate::kernel::{ColumnEvaluator, Kernel};
use crate::quantreg::{fit_tail_quantreg, single_index_direction};
use crate::screening::screen;
use crate::tuning::{
    bandwidth_cv_pooled, default_h_grid, select_model_size,
};

/// The four benchmark tail-index functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    A,
    B,
    C,
    D,
}

impl ModelKind {
    /// Zero-based indices of the truly active covariates.
    pub fn active_set(self) -> &'static [usize] {
        match self {
            ModelKind::A => &[0],
            ModelKind::B => &[0, 1, 2, 3],
            ModelKind::C | ModelKind::D => &[0, 1, 9, 10],
        }
    }

    pub fn min_p(self) -> usize {
        self.active_set().iter().max().unwrap() + 1
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "a" => Ok(ModelKind::A),
            "b" => Ok(ModelKind::B),
            "c" => Ok(ModelKind::C),
            "d" => Ok(ModelKind::D),
            other => Err(Error::Config(format!("unknown model '{other}'"))),
        }
    }
}

/// Tail-index function gamma(x) of the chosen model, x in [0, 1]^p.
pub fn gamma_model(model: ModelKind, x: &[f64]) -> f64 {
    match model {
        ModelKind::A => 0.3 * (-2.5 * x[0]).exp(),
        ModelKind::B => 0.3 * (-2.0 * (x[0] + x[1] + x[2] + x[3])).exp(),
        ModelKind::C => 0.3 * (-2.0 * (x[0] + x[1] + x[9] + x[10])).exp(),
        ModelKind::D => 0.2 * (x[9] + x[10]) * (-2.0 * (x[0] + x[1])).exp(),
    }
}

/// Gaussian rows with AR(1)-type covariance (r^|i-j|), via the Cholesky
/// factor of the covariance matrix; returned column-wise.
pub(crate) fn gaussian_ar1<R: Rng>(n: usize, p: usize, r: f64, rng: &mut R) -> Vec<Vec<f64>> {
    // lower Cholesky factor of (r^|i-j|)
    let l = {
        let mut sigma = vec![0.0; p * p];
        for i in 0..p {
            for j in 0..p {
                sigma[i * p + j] = r.powi((i as i32 - j as i32).abs());
            }
        }
        crate::linalg::cholesky(&mut sigma, p).expect("AR(1) covariance is positive definite");
        sigma
    };
    let mut cols = vec![vec![0.0; n]; p];
    let mut eps = vec![0.0; p];
    for i in 0..n {
        for e in eps.iter_mut() {
            *e = rng.sample(StandardNormal);
        }
        for (j, col) in cols.iter_mut().enumerate() {
            let mut v = 0.0;
            for t in 0..=j {
                v += l[j * p + t] * eps[t];
            }
            col[i] = v;
        }
    }
    cols
}

/// Covariate design: correlated Gaussian draws rank-transformed column by
/// column, so each column is marginally uniform on {1/n, ..., 1}.
pub fn gen_covariates<R: Rng>(n: usize, p: usize, r: f64, rng: &mut R) -> Result<Vec<Vec<f64>>> {
    if !(0.0..1.0).contains(&r) {
        return Err(Error::Domain(format!("copula correlation r = {r} outside [0, 1)")));
    }
    Ok(gaussian_ar1(n, p, r, rng)
        .into_iter()
        .map(|col| rank_transform(&col))
        .collect())
}

/// Survival function 1 - F(y | gamma, m) of the response law.
pub fn survival(y: f64, gamma: f64, m: f64) -> f64 {
    let w = y.powf(-1.0 / gamma);
    (1.0 + m) * w / (1.0 + w)
}

/// Closed-form inverse: the response whose survival probability is u.
pub fn response_from_uniform(gamma: f64, m: f64, u: f64) -> f64 {
    (u / (1.0 + m - u)).powf(-gamma)
}

/// Draw one response with tail index gamma and second-order constant m.
pub fn sample_response<R: Rng>(gamma: f64, m: f64, rng: &mut R) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(Error::Domain(format!("response law needs gamma > 0, got {gamma}")));
    }
    if !(m > 0.0) {
        return Err(Error::Domain(format!("response law needs m > 0, got {m}")));
    }
    let u: f64 = rng.sample(rand::distr::Open01);
    Ok(response_from_uniform(gamma, m, u))
}

/// Which covariate set a fixed-tuning evaluation uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SetChoice {
    /// The model's true active set.
    True,
    /// The discrepancy-minimizing size j*.
    JStar,
    /// The maximum-gap size j**.
    JStarStar,
    /// The top-j ranked covariates.
    Top(usize),
}

impl SetChoice {
    pub fn label(&self) -> String {
        match self {
            SetChoice::True => "true".into(),
            SetChoice::JStar => "jstar".into(),
            SetChoice::JStarStar => "jstarstar".into(),
            SetChoice::Top(j) => format!("top{j}"),
        }
    }
}

impl std::str::FromStr for SetChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "true" => Ok(SetChoice::True),
            "jstar" => Ok(SetChoice::JStar),
            "jstarstar" => Ok(SetChoice::JStarStar),
            _ => {
                if let Some(x) = s.strip_prefix("top") {
                    Ok(SetChoice::Top(x.parse().map_err(|_| {
                        Error::Config(format!("bad set choice '{s}'"))
                    })?))
                } else {
                    Err(Error::Config(format!("bad set choice '{s}'")))
                }
            }
        }
    }
}

/// How a replication is tuned and what it reports.
#[derive(Debug, Clone, PartialEq)]
pub enum SimMode {
    /// Auto-tuned screening pipeline reporting S, P and the TP rates.
    Screening,
    /// Fixed (h, k) estimation quality runs reporting ASE and L per set.
    FixedTuning {
        h: f64,
        k: usize,
        sets: Vec<SetChoice>,
    },
}

/// A complete experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationSpec {
    pub model: ModelKind,
    pub n: usize,
    pub p: usize,
    pub r: f64,
    pub m: f64,
    pub replications: usize,
    pub seed: u64,
    /// Cap of the model-size search; 0 skips the size selectors entirely.
    pub q_cap: usize,
    pub kernel: Kernel,
    pub mode: SimMode,
    /// Model size at which the capture proportion P is reported.
    pub reporting_size: usize,
}

impl SimulationSpec {
    pub fn validate(&self) -> Result<()> {
        if self.p < self.model.min_p() {
            return Err(Error::Config(format!(
                "model {:?} needs p >= {}, got {}",
                self.model,
                self.model.min_p(),
                self.p
            )));
        }
        if !(0.0..1.0).contains(&self.r) {
            return Err(Error::Config(format!("r = {} outside [0, 1)", self.r)));
        }
        if !(self.m > 0.0) {
            return Err(Error::Config(format!("m = {} must be positive", self.m)));
        }
        if self.replications == 0 {
            return Err(Error::Config("need at least one replication".into()));
        }
        if self.n < 8 {
            return Err(Error::Config(format!("n = {} too small", self.n)));
        }
        if let SimMode::FixedTuning { h, k, sets } = &self.mode {
            Bandwidth::new(*h).map_err(|e| Error::Config(e.to_string()))?;
            IntermediateOrder::new(*k, self.n).map_err(|e| Error::Config(e.to_string()))?;
            if sets.is_empty() {
                return Err(Error::Config("fixed-tuning mode needs at least one set".into()));
            }
        }
        Ok(())
    }

    /// Parse a key = value config (# starts a comment).
    pub fn from_config_str(text: &str) -> Result<Self> {
        let mut kv = std::collections::BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected key = value", lineno + 1))
            })?;
            kv.insert(key.trim().to_ascii_lowercase(), value.trim().to_string());
        }
        let get = |key: &str| -> Result<&String> {
            kv.get(key)
                .ok_or_else(|| Error::Config(format!("missing key '{key}'")))
        };
        let parse_num = |key: &str| -> Result<f64> {
            get(key)?
                .parse()
                .map_err(|_| Error::Config(format!("bad number for '{key}'")))
        };
        let model: ModelKind = get("model")?.parse()?;
        let n = parse_num("n")? as usize;
        let p = parse_num("p")? as usize;
        let mode_str = kv
            .get("mode")
            .map(|s| s.to_ascii_lowercase())
            .unwrap_or_else(|| "screening".into());
        let mode = match mode_str.as_str() {
            "screening" => SimMode::Screening,
            "table3" | "fixed" => {
                let sets = match kv.get("sets") {
                    Some(raw) => raw
                        .split(',')
                        .filter(|t| !t.trim().is_empty())
                        .map(|t| t.parse())
                        .collect::<Result<Vec<SetChoice>>>()?,
                    None => vec![SetChoice::True, SetChoice::JStar, SetChoice::JStarStar],
                };
                SimMode::FixedTuning {
                    h: parse_num("h")?,
                    k: parse_num("k")? as usize,
                    sets,
                }
            }
            other => return Err(Error::Config(format!("unknown mode '{other}'"))),
        };
        let kernel = match kv.get("kernel") {
            Some(s) => s.parse()?,
            None => Kernel::Epanechnikov,
        };
        let spec = SimulationSpec {
            model,
            n,
            p,
            r: parse_num("r")?,
            m: parse_num("m")?,
            replications: parse_num("replications")? as usize,
            seed: parse_num("seed").unwrap_or(0.0) as u64,
            q_cap: kv
                .get("q_cap")
                .map(|s| s.parse().map_err(|_| Error::Config("bad q_cap".into())))
                .transpose()?
                .unwrap_or(50),
            kernel,
            mode,
            reporting_size: kv
                .get("reporting_size")
                .map(|s| s.parse().map_err(|_| Error::Config("bad reporting_size".into())))
                .transpose()?
                .unwrap_or(50),
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Out-of-sample quality of one covariate set in a fixed-tuning run.
#[derive(Debug, Clone, PartialEq)]
pub struct SetRecord {
    pub label: String,
    pub ase: Option<f64>,
    pub log_loss: Option<f64>,
    pub error: Option<String>,
}

/// Everything recorded for one replication.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationRecord {
    pub rep: usize,
    /// Minimum model size containing every active covariate.
    pub s_min: Option<usize>,
    pub j_star: Option<usize>,
    pub j_double_star: Option<usize>,
    pub tp_star: Option<f64>,
    pub tp_double_star: Option<f64>,
    pub sets: Vec<SetRecord>,
    pub error: Option<String>,
}

/// Substream RNG for one replication.
fn rep_rng(seed: u64, rep: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep as u64 + 1);
    rng
}

/// Generate one dataset (and the per-row tail indices) for the spec.
fn gen_dataset<R: Rng>(spec: &SimulationSpec, rng: &mut R) -> Result<(Dataset, Vec<f64>)> {
    // gamma(x) > 0 holds for every rank-transformed design except on the
    // measure-zero boundary of model D; redraw the whole design if hit
    for _attempt in 0..100 {
        let cols = gen_covariates(spec.n, spec.p, spec.r, rng)?;
        let gammas: Vec<f64> = (0..spec.n)
            .map(|i| {
                let row: Vec<f64> = cols.iter().map(|c| c[i]).collect();
                gamma_model(spec.model, &row)
            })
            .collect();
        if gammas.iter().any(|&g| g < 1e-6) {
            continue;
        }
        let y: Vec<f64> = gammas
            .iter()
            .map(|&g| sample_response(g, spec.m, rng))
            .collect::<Result<_>>()?;
        let names = (1..=spec.p).map(|j| format!("x{j}")).collect();
        return Ok((Dataset::new(y, cols, names)?, gammas));
    }
    Err(Error::Domain("could not draw a design with positive tail index".into()))
}

/// Minimum j with the full active set inside the top-j ranking.
fn minimum_model_size(ranking: &[usize], active: &[usize]) -> usize {
    let mut worst = 0usize;
    for &a in active {
        match ranking.iter().position(|&j| j == a) {
            Some(pos) => worst = worst.max(pos + 1),
            None => return ranking.len(),
        }
    }
    worst
}

fn true_positive_rate(top: &[usize], active: &[usize]) -> f64 {
    let hits = active.iter().filter(|a| top.contains(a)).count();
    hits as f64 / active.len() as f64
}

/// Run the full pipeline for one replication of the spec.
pub fn run_replication(spec: &SimulationSpec, rep: usize) -> ReplicationRecord {
    let mut record = ReplicationRecord {
        rep,
        s_min: None,
        j_star: None,
        j_double_star: None,
        tp_star: None,
        tp_double_star: None,
        sets: Vec::new(),
        error: None,
    };
    if let Err(e) = run_replication_inner(spec, rep, &mut record) {
        record.error = Some(e.to_string());
    }
    record
}

fn run_replication_inner(
    spec: &SimulationSpec,
    rep: usize,
    record: &mut ReplicationRecord,
) -> Result<()> {
    let mut rng = rep_rng(spec.seed, rep);
    let (data, _gammas) = gen_dataset(spec, &mut rng)?;
    let active = spec.model.active_set();

    match &spec.mode {
        SimMode::Screening => {
            // common screening order n/6: the marginal-fit criterion of
            // select_k targets the marginal GP fit and lands anywhere in
            // the grid, which measurably degrades the ranking; n/6 keeps
            // the conditional Pickands curves in their high-contrast zone
            let k = IntermediateOrder::new((spec.n / 6).max(2), spec.n)?;
            let cols: Vec<&[f64]> = (0..data.p()).map(|j| data.column(j)).collect();
            let t = spec.n as f64 / k.get() as f64;
            let (h, _) =
                bandwidth_cv_pooled(&cols, data.y(), t, &default_h_grid(), spec.kernel)?;
            let screening = screen(&data, k, spec.kernel, h)?;
            record.s_min = Some(minimum_model_size(&screening.ranking, active));
            if spec.q_cap > 0 {
                let selection =
                    select_model_size(&data, &screening, spec.q_cap, spec.kernel)?;
                record.j_star = Some(selection.j_star);
                record.j_double_star = Some(selection.j_double_star);
                record.tp_star = Some(true_positive_rate(
                    screening.nested_set(selection.j_star)?,
                    active,
                ));
                record.tp_double_star = Some(true_positive_rate(
                    screening.nested_set(selection.j_double_star)?,
                    active,
                ));
            }
        }
        SimMode::FixedTuning { h, k, sets } => {
            let h = Bandwidth::new(*h)?;
            let k = IntermediateOrder::new(*k, spec.n)?;
            let needs_ranking = sets.iter().any(|s| !matches!(s, SetChoice::True));
            let screening = if needs_ranking {
                Some(screen(&data, k, spec.kernel, h)?)
            } else {
                None
            };
            let needs_selectors = sets
                .iter()
                .any(|s| matches!(s, SetChoice::JStar | SetChoice::JStarStar));
            let selection = if needs_selectors {
                let scr = screening.as_ref().expect("ranking computed above");
                let sel = select_model_size(&data, scr, spec.q_cap, spec.kernel)?;
                record.j_star = Some(sel.j_star);
                record.j_double_star = Some(sel.j_double_star);
                Some(sel)
            } else {
                None
            };
            if let Some(scr) = &screening {
                record.s_min = Some(minimum_model_size(&scr.ranking, active));
            }

            // one shared test sample for every set evaluation
            let (test, test_gammas) = gen_dataset(spec, &mut rng)?;

            for choice in sets {
                let resolved: Result<Vec<usize>> = match choice {
                    SetChoice::True => Ok(active.to_vec()),
                    SetChoice::Top(j) => screening
                        .as_ref()
                        .expect("ranking computed above")
                        .nested_set((*j).min(spec.p))
                        .map(|s| s.to_vec()),
                    SetChoice::JStar => {
                        let sel = selection.as_ref().expect("selectors computed above");
                        screening
                            .as_ref()
                            .unwrap()
                            .nested_set(sel.j_star)
                            .map(|s| s.to_vec())
                    }
                    SetChoice::JStarStar => {
                        let sel = selection.as_ref().expect("selectors computed above");
                        screening
                            .as_ref()
                            .unwrap()
                            .nested_set(sel.j_double_star)
                            .map(|s| s.to_vec())
                    }
                };
                let outcome = resolved.and_then(|cols_idx| {
                    evaluate_set(spec, &data, &test, &test_gammas, &cols_idx, k, h)
                });
                record.sets.push(match outcome {
                    Ok((ase, l)) => SetRecord {
                        label: choice.label(),
                        ase: Some(ase),
                        log_loss: l,
                        error: None,
                    },
                    Err(e) => SetRecord {
                        label: choice.label(),
                        ase: None,
                        log_loss: None,
                        error: Some(e.to_string()),
                    },
                });
            }
        }
    }
    Ok(())
}

/// Fit the single-index GP estimator on the chosen covariates and score
/// it on the held-out sample: squared error of the tail-index curve and
/// the negative mean exceedance log likelihood.
fn evaluate_set(
    spec: &SimulationSpec,
    train: &Dataset,
    test: &Dataset,
    test_gammas: &[f64],
    cols_idx: &[usize],
    k: IntermediateOrder,
    h: Bandwidth,
) -> Result<(f64, Option<f64>)> {
    let s = spec.n as f64 / k.get() as f64;
    let cols: Vec<&[f64]> = cols_idx.iter().map(|&c| train.column(c)).collect();
    let alpha = if cols_idx.len() == 1 {
        vec![1.0]
    } else {
        let fit = fit_tail_quantreg(train.y(), &cols, s)?;
        single_index_direction(&fit)?.alpha
    };
    let z = train.index_values(cols_idx, &alpha);
    let prepared = TailExceedances::prepare(&z, train.y(), k, spec.kernel, h)?;

    let z_test = test.index_values(cols_idx, &alpha);
    // evaluate the fitted curve at the test index values, sweeping in
    // sorted order so neighbouring fits warm start each other
    let mut order: Vec<usize> = (0..z_test.len()).collect();
    order.sort_by(|&a, &b| {
        (z_test[a], a)
            .partial_cmp(&(z_test[b], b))
            .expect("non-finite test index")
    });
    let z0s: Vec<f64> = order
        .iter()
        .map(|&i| prepared.clamp_to_interior(z_test[i]))
        .collect();
    let fits_sorted = prepared.fit_many(&z0s);
    let mut params = vec![(f64::NAN, f64::NAN); z_test.len()];
    for (pos, fit) in fits_sorted.into_iter().enumerate() {
        params[order[pos]] = fit?;
    }
    let mut ase = 0.0;
    for (i, &(g, _)) in params.iter().enumerate() {
        ase += (g - test_gammas[i]) * (g - test_gammas[i]);
    }
    ase /= z_test.len() as f64;

    // held-out exceedance log likelihood against training thresholds at
    // the test index values
    let t = spec.n as f64 / k.get() as f64;
    let ev = ColumnEvaluator::new(&z, train.y(), spec.kernel, h);
    let mut st = ev.start();
    let mut order: Vec<usize> = (0..z_test.len()).collect();
    order.sort_by(|&a, &b| {
        (z_test[a], a)
            .partial_cmp(&(z_test[b], b))
            .expect("non-finite test index")
    });
    let interior = prepared.interior();
    let level = [1.0 - 1.0 / t];
    let mut buf = [0.0];
    let mut thresholds = vec![f64::NAN; z_test.len()];
    for &i in &order {
        let zq = match interior {
            Some((lo, hi)) => z_test[i].clamp(lo, hi),
            None => z_test[i],
        };
        if ev.quantiles(&mut st, zq, None, &level, &mut buf).is_ok() {
            thresholds[i] = buf[0];
        }
    }
    let mut ll = 0.0;
    let mut count = 0usize;
    for i in 0..z_test.len() {
        if thresholds[i].is_nan() {
            continue;
        }
        let excess = test.y()[i] - thresholds[i];
        if excess > 0.0 {
            let (g, a) = params[i];
            ll += crate::gp::gp_log_density(excess, &crate::gp::GpParams { gamma: g, sigma: a })?;
            count += 1;
        }
    }
    let log_loss = if count > 0 {
        Some(-ll / count as f64)
    } else {
        None
    };
    Ok((ase, log_loss))
}

/// Summary metrics per set label.
#[derive(Debug, Clone, PartialEq)]
pub struct SetMetrics {
    pub label: String,
    pub count: usize,
    pub ase_median: Option<f64>,
    pub ase_mad: Option<f64>,
    pub log_loss_median: Option<f64>,
    pub log_loss_mad: Option<f64>,
}

/// Aggregated output of a simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub replications: usize,
    pub failed: usize,
    pub reporting_size: usize,
    /// 5%, 25%, 50%, 75%, 95% quantiles of the minimum model size.
    pub s_quantiles: Option<[f64; 5]>,
    /// Fraction of replications whose minimum model size is within the
    /// reporting size.
    pub p_capture: Option<f64>,
    pub tp_star: Option<f64>,
    pub tp_double_star: Option<f64>,
    pub sets: Vec<SetMetrics>,
}

/// Linearly interpolated sample quantile (type 7), for reporting.
fn interpolated_quantile(sorted: &[f64], level: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = (n - 1) as f64 * level;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

fn median_mad(values: &[f64]) -> (f64, f64) {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("non-finite metric"));
    let med = interpolated_quantile(&v, 0.5);
    let mut dev: Vec<f64> = v.iter().map(|x| (x - med).abs()).collect();
    dev.sort_by(|a, b| a.partial_cmp(b).expect("non-finite metric"));
    (med, interpolated_quantile(&dev, 0.5))
}

/// Reduce replication records to the reported metrics.
pub fn aggregate(records: &[ReplicationRecord], reporting_size: usize) -> Result<MetricsReport> {
    if records.is_empty() {
        return Err(Error::Domain("no replication records to aggregate".into()));
    }
    let failed = records.iter().filter(|r| r.error.is_some()).count();

    let mut s_vals: Vec<f64> = records
        .iter()
        .filter_map(|r| r.s_min.map(|s| s as f64))
        .collect();
    let (s_quantiles, p_capture) = if s_vals.is_empty() {
        (None, None)
    } else {
        s_vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let q = [0.05, 0.25, 0.50, 0.75, 0.95]
            .map(|lvl| interpolated_quantile(&s_vals, lvl));
        let p = s_vals.iter().filter(|&&s| s <= reporting_size as f64).count() as f64
            / s_vals.len() as f64;
        (Some(q), Some(p))
    };

    let mean_of = |f: fn(&ReplicationRecord) -> Option<f64>| -> Option<f64> {
        let vals: Vec<f64> = records.iter().filter_map(f).collect();
        if vals.is_empty() {
            None
        } else {
            Some(vals.iter().sum::<f64>() / vals.len() as f64)
        }
    };

    // per-set aggregation keyed by label, in first-appearance order
    let mut labels: Vec<String> = Vec::new();
    for r in records {
        for s in &r.sets {
            if !labels.contains(&s.label) {
                labels.push(s.label.clone());
            }
        }
    }
    let sets = labels
        .into_iter()
        .map(|label| {
            let ases: Vec<f64> = records
                .iter()
                .flat_map(|r| &r.sets)
                .filter(|s| s.label == label)
                .filter_map(|s| s.ase)
                .collect();
            let lls: Vec<f64> = records
                .iter()
                .flat_map(|r| &r.sets)
                .filter(|s| s.label == label)
                .filter_map(|s| s.log_loss)
                .collect();
            let (ase_median, ase_mad) = if ases.is_empty() {
                (None, None)
            } else {
                let (m, d) = median_mad(&ases);
                (Some(m), Some(d))
            };
            let (log_loss_median, log_loss_mad) = if lls.is_empty() {
                (None, None)
            } else {
                let (m, d) = median_mad(&lls);
                (Some(m), Some(d))
            };
            SetMetrics {
                label,
                count: ases.len(),
                ase_median,
                ase_mad,
                log_loss_median,
                log_loss_mad,
            }
        })
        .collect();

    Ok(MetricsReport {
        replications: records.len(),
        failed,
        reporting_size,
        s_quantiles,
        p_capture,
        tp_star: mean_of(|r| r.tp_star),
        tp_double_star: mean_of(|r| r.tp_double_star),
        sets,
    })
}

/// Run every replication (in parallel, reduced in replication order) and
/// aggregate.
pub fn run_simulation(spec: &SimulationSpec) -> Result<(Vec<ReplicationRecord>, MetricsReport)> {
    spec.validate()?;
    let records: Vec<ReplicationRecord> = (0..spec.replications)
        .into_par_iter()
        .map(|rep| run_replication(spec, rep))
        .collect();
    let report = aggregate(&records, spec.reporting_size)?;
    Ok((records, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chacha(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn covariance_matrix_entries() {
        // entry at r = 0.5, |i-j| = 2 is 0.25
        let r: f64 = 0.5;
        assert_eq!(r.powi(2), 0.25);
        let mut rng = chacha(1);
        let cols = gaussian_ar1(2500, 3, 0.5, &mut rng);
        let corr = |a: &[f64], b: &[f64]| {
            let n = a.len() as f64;
            let (ma, mb) = (
                a.iter().sum::<f64>() / n,
                b.iter().sum::<f64>() / n,
            );
            let mut cov = 0.0;
            let (mut va, mut vb) = (0.0, 0.0);
            for i in 0..a.len() {
                cov += (a[i] - ma) * (b[i] - mb);
                va += (a[i] - ma).powi(2);
                vb += (b[i] - mb).powi(2);
            }
            cov / (va.sqrt() * vb.sqrt())
        };
        assert!((corr(&cols[0], &cols[1]) - 0.5).abs() < 0.05);
        assert!((corr(&cols[1], &cols[2]) - 0.5).abs() < 0.05);
        assert!((corr(&cols[0], &cols[2]) - 0.25).abs() < 0.06);
    }

    #[test]
    fn covariate_columns_are_rank_uniform() {
        let n = 400;
        let mut rng = chacha(7);
        for r in [0.0, 0.5] {
            let cols = gen_covariates(n, 4, r, &mut rng).unwrap();
            for col in &cols {
                let mut sorted = col.clone();
                sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let expect: Vec<f64> = (1..=n).map(|i| i as f64 / n as f64).collect();
                assert_eq!(sorted, expect);
            }
        }
        assert!(gen_covariates(10, 2, 1.0, &mut rng).is_err());
    }

    #[test]
    fn gamma_model_examples() {
        let mut x = vec![0.0; 11];
        assert_eq!(gamma_model(ModelKind::A, &x), 0.3);
        assert_eq!(gamma_model(ModelKind::B, &x), 0.3);
        assert_eq!(gamma_model(ModelKind::D, &x), 0.0);
        x[0] = 1.0;
        assert!((gamma_model(ModelKind::A, &x) - 0.3 * (-2.5f64).exp()).abs() < 1e-15);
        // active sets
        assert_eq!(ModelKind::A.active_set(), &[0]);
        assert_eq!(ModelKind::B.active_set(), &[0, 1, 2, 3]);
        assert_eq!(ModelKind::C.active_set(), &[0, 1, 9, 10]);
        assert_eq!(ModelKind::D.active_set(), &[0, 1, 9, 10]);
    }

    #[test]
    fn response_inversion_examples() {
        // u -> 1 limit gives the lower endpoint m^gamma
        let y = response_from_uniform(0.3, 0.5, 1.0);
        assert!((y - 0.5f64.powf(0.3)).abs() < 1e-12);
        // gamma = 0.3, m = 0.5, u = 0.5 -> 2^0.3, checked against a
        // numeric root-find on the survival function
        let y = response_from_uniform(0.3, 0.5, 0.5);
        assert!((y - 2.0f64.powf(0.3)).abs() < 1e-12);
        let (mut lo, mut hi) = (1e-6, 1e6);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if survival(mid, 0.3, 0.5) > 0.5 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((0.5 * (lo + hi) - y).abs() < 1e-5);
    }

    #[test]
    fn response_round_trip_identity() {
        let mut rng = chacha(99);
        for (gamma, m) in [(0.2, 0.2), (0.3, 0.5)] {
            for _ in 0..2000 {
                let u: f64 = rng.sample(rand::distr::Open01);
                let y = response_from_uniform(gamma, m, u);
                assert!(y >= m.powf(gamma) * (1.0 - 1e-12));
                assert!((survival(y, gamma, m) - u).abs() < 1e-10);
            }
        }
        assert!(sample_response(0.0, 0.5, &mut rng).is_err());
        assert!(sample_response(0.3, 0.0, &mut rng).is_err());
    }

    #[test]
    fn minimum_model_size_examples() {
        assert_eq!(minimum_model_size(&[0, 1, 2], &[0]), 1);
        assert_eq!(minimum_model_size(&[1, 4, 0, 2], &[0, 1]), 3);
        assert_eq!(minimum_model_size(&[2, 1, 0], &[5]), 3);
        assert_eq!(true_positive_rate(&[0, 3], &[0, 1]), 0.5);
        assert_eq!(true_positive_rate(&[0, 1], &[0, 1]), 1.0);
    }

    #[test]
    fn aggregate_examples() {
        let rec = |rep: usize, s: usize| ReplicationRecord {
            rep,
            s_min: Some(s),
            j_star: None,
            j_double_star: None,
            tp_star: Some(if rep == 0 { 1.0 } else { 0.5 }),
            tp_double_star: None,
            sets: vec![],
            error: None,
        };
        // all S = 1: every quantile 1, capture 1
        let records: Vec<_> = (0..10).map(|i| rec(i, 1)).collect();
        let rep = aggregate(&records, 50).unwrap();
        assert_eq!(rep.s_quantiles.unwrap(), [1.0; 5]);
        assert_eq!(rep.p_capture, Some(1.0));

        // S = 1..=100 with reporting size 50 -> P = 0.5
        let records: Vec<_> = (0..100).map(|i| rec(i, i + 1)).collect();
        let rep = aggregate(&records, 50).unwrap();
        assert_eq!(rep.p_capture, Some(0.5));

        // TP values (1, 0.5) -> mean 0.75
        let records: Vec<_> = (0..2).map(|i| rec(i, 1)).collect();
        let rep = aggregate(&records, 50).unwrap();
        assert_eq!(rep.tp_star, Some(0.75));

        // single record: every quantile equals that S
        let rep = aggregate(&[rec(0, 7)], 50).unwrap();
        assert_eq!(rep.s_quantiles.unwrap(), [7.0; 5]);
    }

    #[test]
    fn config_parsing() {
        let spec = SimulationSpec::from_config_str(
            "model = a\nn = 2500\np = 100\nr = 0.2\nm = 0.2\nreplications = 100\nseed = 42\n",
        )
        .unwrap();
        assert_eq!(spec.model, ModelKind::A);
        assert_eq!(spec.q_cap, 50);
        assert_eq!(spec.mode, SimMode::Screening);

        let spec = SimulationSpec::from_config_str(
            "model = b\nn = 2500\np = 40\nr = 0.5\nm = 0.5\nreplications = 10\nmode = table3\nh = 0.3\nk = 400\nsets = true, top40, jstar\n# comment\n",
        )
        .unwrap();
        match &spec.mode {
            SimMode::FixedTuning { h, k, sets } => {
                assert_eq!((*h, *k), (0.3, 400));
                assert_eq!(
                    sets,
                    &vec![SetChoice::True, SetChoice::Top(40), SetChoice::JStar]
                );
            }
            other => panic!("wrong mode {other:?}"),
        }

        assert!(SimulationSpec::from_config_str("model = e\nn = 100\n").is_err());
        assert!(SimulationSpec::from_config_str(
            "model = c\nn = 2500\np = 5\nr = 0.2\nm = 0.2\nreplications = 1\n"
        )
        .is_err());
    }

    #[test]
    fn deterministic_replications() {
        let spec = SimulationSpec {
            model: ModelKind::A,
            n: 300,
            p: 5,
            r: 0.2,
            m: 0.2,
            replications: 2,
            seed: 11,
            q_cap: 0,
            kernel: Kernel::Epanechnikov,
            mode: SimMode::Screening,
            reporting_size: 3,
        };
        let (rec1, rep1) = run_simulation(&spec).unwrap();
        let (rec2, rep2) = run_simulation(&spec).unwrap();
        assert_eq!(rec1, rec2);
        assert_eq!(rep1, rep2);
        assert!(rep1.failed == 0, "failures: {:?}", rec1);

        // different seeds give different draws
        let mut r1 = rep_rng(11, 0);
        let mut r2 = rep_rng(12, 0);
        let c1 = gen_covariates(20, 2, 0.2, &mut r1).unwrap();
        let c2 = gen_covariates(20, 2, 0.2, &mut r2).unwrap();
        assert_ne!(c1, c2);
        // and distinct replication substreams differ under one seed
        let mut r3 = rep_rng(11, 1);
        let c3 = gen_covariates(20, 2, 0.2, &mut r3).unwrap();
        assert_ne!(c1, c3);
    }

    #[test]
    fn model_a_easier_than_model_d() {
        // median minimum model size: model (a) <= model (d) under matched
        // designs (direction of the benchmark difficulty ordering)
        let base = SimulationSpec {
            model: ModelKind::A,
            n: 1000,
            p: 20,
            r: 0.5,
            m: 0.5,
            replications: 12,
            seed: 7,
            q_cap: 0,
            kernel: Kernel::Epanechnikov,
            mode: SimMode::Screening,
            reporting_size: 20,
        };
        let (_, rep_a) = run_simulation(&base).unwrap();
        let spec_d = SimulationSpec {
            model: ModelKind::D,
            ..base
        };
        let (_, rep_d) = run_simulation(&spec_d).unwrap();
        let med_a = rep_a.s_quantiles.unwrap()[2];
        let med_d = rep_d.s_quantiles.unwrap()[2];
        assert!(
            med_a <= med_d,
            "model (a) median S = {med_a}, model (d) = {med_d}"
        );
    }
}
