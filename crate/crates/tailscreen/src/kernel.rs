//! Kernel weights, the kernel-weighted conditional CDF, conditional
//! quantiles, and their leave-one-out variants.
//!
//! The conditional quantile is the inf-type inverse of the weighted CDF:
//! the smallest observed response at which the cumulative kernel weight
//! reaches the target level. Leave-one-out evaluation removes one
//! observation from the sums; by construction it is bit-identical to
//! rebuilding the estimator on the deleted dataset.

use crate::core::Bandwidth;
use crate::error::{Error, Result};

/// Relative slack applied when testing whether the cumulative weight has
/// crossed the target level. Absorbs float dust in `level * total_weight`
/// so that flat-weight conditional quantiles agree exactly with the
/// unconditional order statistic.
const LEVEL_SLACK: f64 = 1e-12;

/// Supported kernel families. Both are symmetric with unit mass.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kernel {
    /// 0.75 (1 - u^2) on |u| < 1; compactly supported, the default.
    Epanechnikov,
    /// Standard normal density; unbounded support.
    Gaussian,
}

impl Kernel {
    /// Evaluate the kernel at u.
    pub fn weight(self, u: f64) -> f64 {
        match self {
            Kernel::Epanechnikov => {
                let v = 1.0 - u * u;
                if v > 0.0 {
                    0.75 * v
                } else {
                    0.0
                }
            }
            Kernel::Gaussian => (-0.5 * u * u).exp() / (2.0 * std::f64::consts::PI).sqrt(),
        }
    }

    /// Kernel value at the origin (the maximal weight).
    pub fn at_zero(self) -> f64 {
        self.weight(0.0)
    }

    /// Support radius in u units, when compact.
    pub fn support_radius(self) -> Option<f64> {
        match self {
            Kernel::Epanechnikov => Some(1.0),
            Kernel::Gaussian => None,
        }
    }
}

impl std::str::FromStr for Kernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "epanechnikov" | "epan" => Ok(Kernel::Epanechnikov),
            "gaussian" | "normal" => Ok(Kernel::Gaussian),
            other => Err(Error::Config(format!("unknown kernel family '{other}'"))),
        }
    }
}

/// Kernel-weighted conditional CDF at (y0 | x0): the weighted proportion
/// of responses <= y0, with weights K((x_i - x0)/h).
pub fn conditional_cdf(
    x: &[f64],
    y: &[f64],
    x0: f64,
    y0: f64,
    kernel: Kernel,
    h: Bandwidth,
) -> Result<f64> {
    let entries = weighted_entries(x, y, x0, kernel, h, None)?;
    let mut total = 0.0;
    let mut below = 0.0;
    for &(yi, _, w) in &entries {
        total += w;
        if yi <= y0 {
            below += w;
        }
    }
    Ok(below / total)
}

/// Product-kernel conditional CDF for a multivariate covariate point.
/// Weights are the product of per-coordinate kernel weights at the shared
/// bandwidth. Only the univariate path is used by screening and the GP
/// stage; this variant exists for direct multivariate smoothing.
pub fn conditional_cdf_product(
    cols: &[&[f64]],
    y: &[f64],
    x0: &[f64],
    y0: f64,
    kernel: Kernel,
    h: Bandwidth,
) -> Result<f64> {
    let entries = product_entries(cols, y, x0, kernel, h)?;
    let mut total = 0.0;
    let mut below = 0.0;
    for &(yi, _, w) in &entries {
        total += w;
        if yi <= y0 {
            below += w;
        }
    }
    Ok(below / total)
}

/// Conditional quantile U(t | x0) = inf{ y : F(y|x0) >= 1 - 1/t }.
pub fn conditional_quantile(
    x: &[f64],
    y: &[f64],
    x0: f64,
    t: f64,
    kernel: Kernel,
    h: Bandwidth,
) -> Result<f64> {
    check_order(t)?;
    let entries = weighted_entries(x, y, x0, kernel, h, None)?;
    Ok(scan_quantile(&entries, 1.0 - 1.0 / t))
}

/// Product-kernel variant of [`conditional_quantile`].
pub fn conditional_quantile_product(
    cols: &[&[f64]],
    y: &[f64],
    x0: &[f64],
    t: f64,
    kernel: Kernel,
    h: Bandwidth,
) -> Result<f64> {
    check_order(t)?;
    let entries = product_entries(cols, y, x0, kernel, h)?;
    Ok(scan_quantile(&entries, 1.0 - 1.0 / t))
}

/// Leave-one-out conditional quantile at x0 = x[skip]: observation `skip`
/// is excluded from the weighted sums. Exactly equal (bitwise) to
/// recomputing [`conditional_quantile`] on the dataset without that row.
pub fn loo_conditional_quantile(
    x: &[f64],
    y: &[f64],
    skip: usize,
    t: f64,
    kernel: Kernel,
    h: Bandwidth,
) -> Result<f64> {
    check_order(t)?;
    if skip >= x.len() {
        return Err(Error::Domain(format!(
            "leave-one-out index {skip} out of range for n = {}",
            x.len()
        )));
    }
    let entries = weighted_entries(x, y, x[skip], kernel, h, Some(skip))?;
    Ok(scan_quantile(&entries, 1.0 - 1.0 / t))
}

/// A bound conditional-CDF estimator over one covariate column.
#[derive(Debug, Clone)]
pub struct ConditionalCdf<'a> {
    x: &'a [f64],
    y: &'a [f64],
    kernel: Kernel,
    h: Bandwidth,
}

impl<'a> ConditionalCdf<'a> {
    pub fn new(x: &'a [f64], y: &'a [f64], kernel: Kernel, h: Bandwidth) -> Result<Self> {
        if x.len() != y.len() || x.is_empty() {
            return Err(Error::Domain(
                "conditional CDF needs equally sized, nonempty x and y".into(),
            ));
        }
        Ok(Self { x, y, kernel, h })
    }

    pub fn cdf(&self, y0: f64, x0: f64) -> Result<f64> {
        conditional_cdf(self.x, self.y, x0, y0, self.kernel, self.h)
    }

    pub fn quantile(&self, t: f64, x0: f64) -> Result<f64> {
        conditional_quantile(self.x, self.y, x0, t, self.kernel, self.h)
    }
}

fn check_order(t: f64) -> Result<()> {
    if !(t > 1.0) {
        return Err(Error::Domain(format!("quantile order t = {t} must be > 1")));
    }
    Ok(())
}

/// Collect (y, original index, weight) for observations with positive
/// weight at x0, sorted by (y, index). This ordering is the canonical
/// summation order for every weighted CDF computation in the crate; the
/// batch evaluator reproduces it element for element.
fn weighted_entries(
    x: &[f64],
    y: &[f64],
    x0: f64,
    kernel: Kernel,
    h: Bandwidth,
    skip: Option<usize>,
) -> Result<Vec<(f64, usize, f64)>> {
    debug_assert_eq!(x.len(), y.len());
    let hv = h.get();
    let mut entries: Vec<(f64, usize, f64)> = Vec::new();
    for i in 0..x.len() {
        if Some(i) == skip {
            continue;
        }
        let w = kernel.weight((x[i] - x0) / hv);
        if w > 0.0 {
            entries.push((y[i], i, w));
        }
    }
    if entries.is_empty() {
        return Err(Error::EmptyNeighborhood { x0, h: hv });
    }
    entries.sort_by(|a, b| (a.0, a.1).partial_cmp(&(b.0, b.1)).expect("non-finite response"));
    Ok(entries)
}

fn product_entries(
    cols: &[&[f64]],
    y: &[f64],
    x0: &[f64],
    kernel: Kernel,
    h: Bandwidth,
) -> Result<Vec<(f64, usize, f64)>> {
    if cols.len() != x0.len() || cols.is_empty() {
        return Err(Error::Domain(
            "product kernel needs matching covariate columns and query coordinates".into(),
        ));
    }
    let hv = h.get();
    let mut entries: Vec<(f64, usize, f64)> = Vec::new();
    for i in 0..y.len() {
        let mut w = 1.0;
        for (col, &c0) in cols.iter().zip(x0) {
            w *= kernel.weight((col[i] - c0) / hv);
            if w == 0.0 {
                break;
            }
        }
        if w > 0.0 {
            entries.push((y[i], i, w));
        }
    }
    if entries.is_empty() {
        return Err(Error::EmptyNeighborhood { x0: x0[0], h: hv });
    }
    entries.sort_by(|a, b| (a.0, a.1).partial_cmp(&(b.0, b.1)).expect("non-finite response"));
    Ok(entries)
}

/// Scan the canonical entry list for the first response at which the
/// cumulative weight reaches level * total.
fn scan_quantile(entries: &[(f64, usize, f64)], level: f64) -> f64 {
    let mut total = 0.0;
    for &(_, _, w) in entries {
        total += w;
    }
    let target = level * total * (1.0 - LEVEL_SLACK);
    let mut cum = 0.0;
    for &(yi, _, w) in entries {
        cum += w;
        if cum >= target {
            return yi;
        }
    }
    entries.last().expect("entries nonempty").0
}

/// Batch evaluator over one covariate column: answers many conditional
/// quantile queries at nondecreasing query points with a sliding kernel
/// window, producing exactly the same values as the one-shot functions.
#[derive(Debug)]
pub(crate) struct ColumnEvaluator {
    /// (x, y, original index) sorted by (x, index).
    xs: Vec<f64>,
    ys: Vec<f64>,
    ids: Vec<usize>,
    kernel: Kernel,
    h: f64,
    /// Window half-width in x units (infinite for Gaussian).
    radius: f64,
}

/// Sliding window state: members of [lo, hi) kept sorted by (y, index).
#[derive(Debug, Default, Clone)]
pub(crate) struct WindowState {
    lo: usize,
    hi: usize,
    win: Vec<(f64, usize, f64)>, // (y, original index, x)
    weights: Vec<f64>,           // scratch, parallel to win during a query
}

impl ColumnEvaluator {
    pub fn new(x: &[f64], y: &[f64], kernel: Kernel, h: Bandwidth) -> Self {
        let n = x.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| (x[a], a).partial_cmp(&(x[b], b)).expect("non-finite covariate"));
        let xs: Vec<f64> = order.iter().map(|&i| x[i]).collect();
        let ys: Vec<f64> = order.iter().map(|&i| y[i]).collect();
        let radius = match kernel.support_radius() {
            Some(r) => r * h.get() * (1.0 + 1e-12),
            None => f64::INFINITY,
        };
        Self {
            xs,
            ys,
            ids: order,
            kernel,
            h: h.get(),
            radius,
        }
    }

    pub fn start(&self) -> WindowState {
        WindowState::default()
    }

    fn advance(&self, st: &mut WindowState, x0: f64) {
        // admit new points on the right
        while st.hi < self.xs.len() && self.xs[st.hi] - x0 <= self.radius {
            let item = (self.ys[st.hi], self.ids[st.hi], self.xs[st.hi]);
            let pos = st
                .win
                .partition_point(|&(yy, ii, _)| (yy, ii) < (item.0, item.1));
            st.win.insert(pos, item);
            st.hi += 1;
        }
        // evict points fallen off the left
        while st.lo < st.hi && x0 - self.xs[st.lo] > self.radius {
            let item = (self.ys[st.lo], self.ids[st.lo], self.xs[st.lo]);
            let pos = st
                .win
                .partition_point(|&(yy, ii, _)| (yy, ii) < (item.0, item.1));
            debug_assert!(st.win[pos].1 == item.1);
            st.win.remove(pos);
            st.lo += 1;
        }
    }

    /// Evaluate the conditional quantiles at `levels` (ascending) for the
    /// query point x0, optionally excluding one original index. Query
    /// points must be fed in nondecreasing order per window state.
    pub fn quantiles(
        &self,
        st: &mut WindowState,
        x0: f64,
        skip: Option<usize>,
        levels: &[f64],
        out: &mut [f64],
    ) -> Result<()> {
        debug_assert_eq!(levels.len(), out.len());
        self.advance(st, x0);
        // pass 1: weights once into scratch, total in canonical order
        st.weights.clear();
        st.weights.reserve(st.win.len());
        let mut total = 0.0;
        for &(_, idx, x) in &st.win {
            let w = if Some(idx) == skip {
                0.0
            } else {
                self.kernel.weight((x - x0) / self.h)
            };
            st.weights.push(w);
            if w > 0.0 {
                total += w;
            }
        }
        if total == 0.0 {
            return Err(Error::EmptyNeighborhood { x0, h: self.h });
        }
        // pass 2: cumulative scan against the level targets
        let mut cum = 0.0;
        let mut lv = 0;
        let mut last_y = f64::NAN;
        for (&(yy, _, _), &w) in st.win.iter().zip(&st.weights) {
            if w > 0.0 {
                cum += w;
                last_y = yy;
                while lv < levels.len() && cum >= levels[lv] * total * (1.0 - LEVEL_SLACK) {
                    out[lv] = yy;
                    lv += 1;
                    if lv == levels.len() {
                        break;
                    }
                }
                if lv == levels.len() {
                    break;
                }
            }
        }
        while lv < levels.len() {
            out[lv] = last_y;
            lv += 1;
        }
        Ok(())
    }
}
