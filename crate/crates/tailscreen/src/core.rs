//! Shared domain types, empirical quantiles, the rank transform, and the
//! `L_gamma` integral used throughout the tail estimators.

use crate::error::{Error, Result};

/// Threshold below which |gamma| is treated as zero in every
/// `(t^gamma - 1)/gamma` style expression library-wide.
pub const GAMMA_EPS: f64 = 1e-8;

/// Cap on the absolute value of any estimated extreme value index.
pub const GAMMA_CAP: f64 = 5.0;

/// A response vector with covariate columns and their labels.
///
/// The response must be strictly positive; covariates are expected to be
/// rank-transformed to (0, 1] before screening (CSV ingestion does this,
/// simulated designs are generated that way).
#[derive(Debug, Clone)]
pub struct Dataset {
    y: Vec<f64>,
    columns: Vec<Vec<f64>>,
    names: Vec<String>,
}

impl Dataset {
    /// Build a dataset, validating positivity of the response and shape
    /// consistency. Requires n >= 8 so that some k with 1 < k < n/4 exists.
    pub fn new(y: Vec<f64>, columns: Vec<Vec<f64>>, names: Vec<String>) -> Result<Self> {
        let n = y.len();
        if n < 8 {
            return Err(Error::Domain(format!("need n >= 8 observations, got {n}")));
        }
        if y.iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return Err(Error::Domain(
                "response must be strictly positive and finite".into(),
            ));
        }
        if names.len() != columns.len() {
            return Err(Error::Domain(format!(
                "{} covariate names for {} columns",
                names.len(),
                columns.len()
            )));
        }
        for (j, col) in columns.iter().enumerate() {
            if col.len() != n {
                return Err(Error::Domain(format!(
                    "column {j} has {} entries, expected {n}",
                    col.len()
                )));
            }
            if col.iter().any(|v| !v.is_finite()) {
                return Err(Error::Domain(format!(
                    "column {j} ({}) contains non-finite entries",
                    names[j]
                )));
            }
        }
        Ok(Self { y, columns, names })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.columns.len()
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// The linear index z_i = sum_j alpha_j * x_i^(cols_j).
    pub fn index_values(&self, cols: &[usize], alpha: &[f64]) -> Vec<f64> {
        assert_eq!(cols.len(), alpha.len());
        let mut z = vec![0.0; self.n()];
        for (&j, &a) in cols.iter().zip(alpha) {
            for (zi, &xij) in z.iter_mut().zip(&self.columns[j]) {
                *zi += a * xij;
            }
        }
        z
    }
}

/// Number of effective tail observations k, constrained to 1 < k < n/4 so
/// the quantile orders n/k, n/(2k), n/(4k) all stay above 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IntermediateOrder {
    k: usize,
}

impl IntermediateOrder {
    pub fn new(k: usize, n: usize) -> Result<Self> {
        if k < 2 || 4 * k >= n {
            return Err(Error::Domain(format!(
                "intermediate order k = {k} must satisfy 1 < k < n/4 (n = {n})"
            )));
        }
        Ok(Self { k })
    }

    /// Relaxed bound for peaks-over-threshold stages, which only need the
    /// single quantile order n/k: 1 < k < n/2. The Pickands bound k < n/4
    /// applies to [`IntermediateOrder::new`] alone.
    pub fn new_tail(k: usize, n: usize) -> Result<Self> {
        if k < 2 || 2 * k >= n {
            return Err(Error::Domain(format!(
                "tail order k = {k} must satisfy 1 < k < n/2 (n = {n})"
            )));
        }
        Ok(Self { k })
    }

    pub fn get(self) -> usize {
        self.k
    }
}

/// Kernel bandwidth, in the scale of the (rank-transformed) covariate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bandwidth {
    h: f64,
}

impl Bandwidth {
    pub fn new(h: f64) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::Domain(format!("bandwidth must be positive, got {h}")));
        }
        Ok(Self { h })
    }

    pub fn get(self) -> f64 {
        self.h
    }
}

/// Sample (1 - 1/t)-th quantile: the ceil(n(1-1/t))-th order statistic,
/// i.e. the inf-type empirical quantile with no interpolation.
///
/// The rank n(1-1/t) is snapped to the nearest integer when within 1e-9 to
/// keep orders of the form n/k exact under floating point division.
pub fn empirical_quantile(sample: &[f64], t: f64) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::Domain("empirical quantile of an empty sample".into()));
    }
    if !(t > 1.0) {
        return Err(Error::Domain(format!("quantile order t = {t} must be > 1")));
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("non-finite sample value"));
    Ok(sorted[quantile_rank(sample.len(), 1.0 - 1.0 / t) - 1])
}

/// Quantile of an already ascending-sorted sample; shares the rank rule of
/// [`empirical_quantile`].
pub(crate) fn sorted_quantile(sorted: &[f64], t: f64) -> Result<f64> {
    if sorted.is_empty() {
        return Err(Error::Domain("empirical quantile of an empty sample".into()));
    }
    if !(t > 1.0) {
        return Err(Error::Domain(format!("quantile order t = {t} must be > 1")));
    }
    Ok(sorted[quantile_rank(sorted.len(), 1.0 - 1.0 / t) - 1])
}

/// 1-based order-statistic rank ceil(n * level), snapped against float dust.
pub(crate) fn quantile_rank(n: usize, level: f64) -> usize {
    let raw = n as f64 * level;
    let snapped = if (raw - raw.round()).abs() < 1e-9 {
        raw.round()
    } else {
        raw.ceil()
    };
    (snapped as usize).clamp(1, n)
}

/// Empirical-CDF transform of a column: entry i maps to rank_i / n where
/// rank_i counts entries <= column_i (ties all receive the top rank of
/// their group). Output values lie in (0, 1]; for distinct entries the
/// output multiset is exactly {1/n, ..., 1}.
pub fn rank_transform(column: &[f64]) -> Vec<f64> {
    let n = column.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| column[a].partial_cmp(&column[b]).expect("non-finite entry"));
    let mut out = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && column[order[j + 1]] == column[order[i]] {
            j += 1;
        }
        // all members of the tie group get the count of entries <= value
        let rank = (j + 1) as f64 / n as f64;
        for &idx in &order[i..=j] {
            out[idx] = rank;
        }
        i = j + 1;
    }
    out
}

/// L_gamma(t) = integral_1^t v^(gamma-1) dv, with the log(t) branch taken
/// for |gamma| <= 1e-8.
pub fn l_gamma(t: f64, gamma: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("l_gamma requires t > 0, got {t}")));
    }
    if gamma.abs() <= GAMMA_EPS {
        Ok(t.ln())
    } else {
        Ok((t.powf(gamma) - 1.0) / gamma)
    }
}
