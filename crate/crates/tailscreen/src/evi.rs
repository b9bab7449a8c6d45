//! Pickands-type estimators of the extreme value index, unconditional and
//! conditional, plus the auxiliary scale estimate built from quantile
//! spacings.
//!
//! The Pickands estimator is the log ratio of quantile-difference spacings
//! at the orders n/k, n/(2k), n/(4k):
//!
//! ```text
//! gamma = log{ (U(n/k) - U(n/(2k))) / (U(n/(2k)) - U(n/(4k))) } / log 2
//! ```
//!
//! It works for any sign of the index, which is why it drives the
//! screening utilities instead of a Hill-type estimator.

use crate::core::{
    empirical_quantile, sorted_quantile, Bandwidth, IntermediateOrder, GAMMA_CAP, GAMMA_EPS,
};
use crate::error::{Error, Result};
use crate::kernel::{conditional_quantile, Kernel};

/// An estimated extreme value index.
#[derive(Debug, Clone, Copy)]
pub struct EviEstimate {
    /// The estimate, capped at +-[`GAMMA_CAP`].
    pub gamma_hat: f64,
    /// Intermediate order used.
    pub k: IntermediateOrder,
    /// Covariate point for conditional estimates; `None` when marginal.
    pub at: Option<f64>,
    /// Whether the raw ratio exceeded the cap and was clamped.
    pub clamped: bool,
}

/// Gamma from the three tail quantiles (orders n/k, n/(2k), n/(4k)).
pub(crate) fn pickands_from_quantiles(q1: f64, q2: f64, q3: f64, k: usize) -> Result<(f64, bool)> {
    let upper = q1 - q2;
    let lower = q2 - q3;
    if !(upper > 0.0) || !(lower > 0.0) {
        return Err(Error::DegeneratePickands { k, upper, lower });
    }
    let raw = (upper / lower).ln() / std::f64::consts::LN_2;
    if raw.abs() > GAMMA_CAP {
        Ok((raw.signum() * GAMMA_CAP, true))
    } else {
        Ok((raw, false))
    }
}

/// Levels 1 - 1/t for t = n/(4k), n/(2k), n/k in ascending order.
pub(crate) fn pickands_levels(n: usize, k: usize) -> [f64; 3] {
    let nf = n as f64;
    let kf = k as f64;
    [1.0 - 4.0 * kf / nf, 1.0 - 2.0 * kf / nf, 1.0 - kf / nf]
}

/// Unconditional Pickands estimator of the sample's extreme value index.
pub fn pickands_unconditional(y: &[f64], k: IntermediateOrder) -> Result<EviEstimate> {
    let n = y.len();
    let kk = k.get();
    if 4 * kk >= n {
        return Err(Error::Domain(format!(
            "k = {kk} too large for n = {n}: need k < n/4"
        )));
    }
    let q1 = empirical_quantile(y, n as f64 / kk as f64)?;
    let q2 = empirical_quantile(y, n as f64 / (2 * kk) as f64)?;
    let q3 = empirical_quantile(y, n as f64 / (4 * kk) as f64)?;
    let (gamma_hat, clamped) = pickands_from_quantiles(q1, q2, q3, kk)?;
    Ok(EviEstimate {
        gamma_hat,
        k,
        at: None,
        clamped,
    })
}

/// Same as [`pickands_unconditional`] but on a pre-sorted sample.
pub(crate) fn pickands_sorted(sorted: &[f64], k: usize) -> Result<(f64, bool)> {
    let n = sorted.len() as f64;
    let kf = k as f64;
    let q1 = sorted_quantile(sorted, n / kf)?;
    let q2 = sorted_quantile(sorted, n / (2.0 * kf))?;
    let q3 = sorted_quantile(sorted, n / (4.0 * kf))?;
    pickands_from_quantiles(q1, q2, q3, k)
}

/// Conditional Pickands estimator at x0 from kernel conditional quantiles,
/// sharing one bandwidth across the three quantile levels.
pub fn pickands_conditional(
    x: &[f64],
    y: &[f64],
    x0: f64,
    k: IntermediateOrder,
    kernel: Kernel,
    h: Bandwidth,
) -> Result<EviEstimate> {
    let n = y.len();
    let kk = k.get();
    if 4 * kk >= n {
        return Err(Error::Domain(format!(
            "k = {kk} too large for n = {n}: need k < n/4"
        )));
    }
    let nf = n as f64;
    let kf = kk as f64;
    let q1 = conditional_quantile(x, y, x0, nf / kf, kernel, h)?;
    let q2 = conditional_quantile(x, y, x0, nf / (2.0 * kf), kernel, h)?;
    let q3 = conditional_quantile(x, y, x0, nf / (4.0 * kf), kernel, h)?;
    let (gamma_hat, clamped) = pickands_from_quantiles(q1, q2, q3, kk)?;
    Ok(EviEstimate {
        gamma_hat,
        k,
        at: Some(x0),
        clamped,
    })
}

/// Auxiliary scale a0(n/k) from the quantile spacing at orders n/k and
/// n/(2k):
///
/// ```text
/// a0 = gamma * (U(n/k) - U(n/(2k))) / (1 - 2^(-gamma))
/// ```
///
/// with the gamma -> 0 limit spacing / log 2. Positive whenever the
/// spacing is positive.
pub fn aux_scale(y: &[f64], k: IntermediateOrder, gamma_hat: f64) -> Result<f64> {
    let n = y.len() as f64;
    let kf = k.get() as f64;
    let q1 = empirical_quantile(y, n / kf)?;
    let q2 = empirical_quantile(y, n / (2.0 * kf))?;
    aux_scale_from_spacing(q1 - q2, gamma_hat)
}

pub(crate) fn aux_scale_from_spacing(spacing: f64, gamma_hat: f64) -> Result<f64> {
    if !(spacing > 0.0) {
        return Err(Error::DegenerateScale { spacing });
    }
    if gamma_hat.abs() <= GAMMA_EPS {
        Ok(spacing / std::f64::consts::LN_2)
    } else {
        Ok(gamma_hat * spacing / (1.0 - 2.0_f64.powf(-gamma_hat)))
    }
}
