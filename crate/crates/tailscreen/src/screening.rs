//! Marginal utilities and the sure-independence ranking of covariates.
//!
//! The utility of covariate j is the average squared deviation of the
//! covariate-j conditional Pickands curve from the marginal Pickands
//! estimate, evaluated at the sample points:
//!
//! ```text
//! d_j = (1/n) sum_i { gamma_j(x_i^(j)) - gamma_0 }^2
//! ```
//!
//! One (k, h) pair is shared by every marginal estimate and by gamma_0;
//! mixing different k values across marginals inflates the utility of
//! inactive covariates.

use rayon::prelude::*;

use crate::core::{Bandwidth, Dataset, IntermediateOrder};
use crate::error::{Error, Result};
use crate::evi::{pickands_from_quantiles, pickands_levels, pickands_unconditional, EviEstimate};
use crate::kernel::{ColumnEvaluator, Kernel};

/// Fraction of degenerate evaluation points above which a column's
/// utility is flagged as unstable instead of averaged.
pub const MAX_DEGENERATE_FRACTION: f64 = 0.2;

/// Per-covariate utilities with their ranking.
#[derive(Debug, Clone)]
pub struct ScreeningResult {
    /// d_j per column, `f64::NEG_INFINITY` for flagged columns.
    pub utilities: Vec<f64>,
    /// Column indices sorted by descending utility, ties by ascending index.
    pub ranking: Vec<usize>,
    pub k: IntermediateOrder,
    pub h: Bandwidth,
    pub gamma0: EviEstimate,
    /// Columns whose utility could not be computed stably.
    pub flagged: Vec<usize>,
}

impl ScreeningResult {
    /// The top-j ranked covariate indices M(j); nested in j.
    pub fn nested_set(&self, j: usize) -> Result<&[usize]> {
        if j == 0 || j > self.ranking.len() {
            return Err(Error::Domain(format!(
                "nested set size {j} out of 1..={}",
                self.ranking.len()
            )));
        }
        Ok(&self.ranking[..j])
    }
}

/// Threshold active set {j : d_j > lambda} (strict), ascending indices.
pub fn active_set_threshold(result: &ScreeningResult, lambda: f64) -> Vec<usize> {
    result
        .utilities
        .iter()
        .enumerate()
        .filter(|(_, &d)| d > lambda)
        .map(|(j, _)| j)
        .collect()
}

/// Average squared deviation of the conditional Pickands curve from
/// gamma0 over the sample points of one covariate column.
///
/// Degenerate points (crossing quantiles, empty neighborhoods) are
/// skipped and counted, and more than [`MAX_DEGENERATE_FRACTION`] of
/// them flags the column.
pub fn marginal_utility(
    y: &[f64],
    xj: &[f64],
    k: IntermediateOrder,
    kernel: Kernel,
    h: Bandwidth,
    gamma0: f64,
) -> Result<f64> {
    let gammas = conditional_gammas(y, xj, k, kernel, h)?;
    utility_from_gammas(&gammas, gamma0)
}

/// Conditional Pickands estimates at each (trimmed) sample point; `None`
/// marks a degenerate evaluation.
fn conditional_gammas(
    y: &[f64],
    xj: &[f64],
    k: IntermediateOrder,
    kernel: Kernel,
    h: Bandwidth,
) -> Result<Vec<Option<f64>>> {
    let n = y.len();
    if xj.len() != n || n == 0 {
        return Err(Error::Domain("column and response sizes differ".into()));
    }
    let levels = pickands_levels(n, k.get());

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| (xj[a], a).partial_cmp(&(xj[b], b)).expect("non-finite covariate"));

    // every sample point is evaluated, boundary ones through their
    // one-sided window: the index functions show their strongest contrast
    // near the edges of the rank scale, and trimming [h, 1-h] measurably
    // degrades the ranking
    let ev = ColumnEvaluator::new(xj, y, kernel, h);
    let mut st = ev.start();
    let mut out = Vec::with_capacity(n);
    let mut buf = [0.0; 3];
    for &i in &order {
        let x0 = xj[i];
        match ev.quantiles(&mut st, x0, None, &levels, &mut buf) {
            Ok(()) => match pickands_from_quantiles(buf[2], buf[1], buf[0], k.get()) {
                Ok((g, _)) => out.push(Some(g)),
                Err(_) => out.push(None),
            },
            Err(_) => out.push(None),
        }
    }
    Ok(out)
}

/// The skip-and-count average: mean of (gamma - gamma0)^2 over the
/// non-degenerate points, flagged when too many are degenerate.
fn utility_from_gammas(gammas: &[Option<f64>], gamma0: f64) -> Result<f64> {
    let evaluated = gammas.len();
    let degenerate = gammas.iter().filter(|g| g.is_none()).count();
    if evaluated == 0 || (degenerate as f64) > MAX_DEGENERATE_FRACTION * evaluated as f64 {
        return Err(Error::UnstableUtility {
            degenerate,
            evaluated,
        });
    }
    let kept = (evaluated - degenerate) as f64;
    let sum: f64 = gammas
        .iter()
        .flatten()
        .map(|g| (g - gamma0) * (g - gamma0))
        .sum();
    Ok(sum / kept)
}

/// Screen every covariate column of the dataset under a single (k, h).
/// Columns are processed independently (in parallel) and flagged columns
/// rank last with utility -inf.
pub fn screen(
    dataset: &Dataset,
    k: IntermediateOrder,
    kernel: Kernel,
    h: Bandwidth,
) -> Result<ScreeningResult> {
    let gamma0 = pickands_unconditional(dataset.y(), k)?;
    let utilities: Vec<f64> = (0..dataset.p())
        .into_par_iter()
        .map(|j| {
            marginal_utility(dataset.y(), dataset.column(j), k, kernel, h, gamma0.gamma_hat)
                .unwrap_or(f64::NEG_INFINITY)
        })
        .collect();
    let flagged: Vec<usize> = utilities
        .iter()
        .enumerate()
        .filter(|(_, &d)| d == f64::NEG_INFINITY)
        .map(|(j, _)| j)
        .collect();
    Ok(ScreeningResult {
        ranking: rank_utilities(&utilities),
        utilities,
        k,
        h,
        gamma0,
        flagged,
    })
}

/// Ranking permutation: descending utility, ties broken by ascending index.
fn rank_utilities(utilities: &[f64]) -> Vec<usize> {
    let mut ranking: Vec<usize> = (0..utilities.len()).collect();
    ranking.sort_by(|&a, &b| {
        utilities[b]
            .total_cmp(&utilities[a])
            .then_with(|| a.cmp(&b))
    });
    ranking
}
