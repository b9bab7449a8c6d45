//! Linear quantile regression at an extreme level, used to estimate the
//! single-index direction after screening.
//!
//! The check-loss minimizer is computed by iteratively reweighted least
//! squares on a smoothed check function, with the smoothing parameter
//! halved every outer step (majorize-minimize on |r| ~ r^2 / (2 max(|r|, eps))).
//! No external solver; the brute-force vertex oracle in the tests pins the
//! optimum.

use crate::error::{Error, Result};
use crate::linalg::{cholesky, cholesky_solve};

/// Result of one tail quantile regression fit at level 1 - 1/s.
#[derive(Debug, Clone)]
pub struct TailQuantileFit {
    pub beta0: f64,
    pub beta: Vec<f64>,
    /// Quantile order: the fit targets the (1 - 1/s)-th conditional quantile.
    pub s: f64,
    /// Attained check-loss sum.
    pub objective: f64,
    /// Total inner least-squares solves performed.
    pub iterations: usize,
    pub converged: bool,
}

/// A unit-norm single-index direction extracted from a tail fit.
#[derive(Debug, Clone)]
pub struct SingleIndexDirection {
    pub alpha: Vec<f64>,
}

/// Koenker's check function rho_s(u) = u (tau - I(u < 0)) with tau = 1 - 1/s.
pub fn check_loss(u: f64, s: f64) -> f64 {
    debug_assert!(s > 1.0);
    let tau = 1.0 - 1.0 / s;
    if u < 0.0 {
        u * (tau - 1.0)
    } else {
        u * tau
    }
}

/// Fit the linear quantile regression
/// argmin_{b0, b} sum_i rho_s(y_i - b0 - b' x_i)
/// over the given covariate columns.
pub fn fit_tail_quantreg(y: &[f64], cols: &[&[f64]], s: f64) -> Result<TailQuantileFit> {
    fit_tail_quantreg_warm(y, cols, s, None)
}

/// Same fit with an optional warm start (beta0, beta) to speed nested
/// model-size sweeps.
pub fn fit_tail_quantreg_warm(
    y: &[f64],
    cols: &[&[f64]],
    s: f64,
    warm: Option<(f64, &[f64])>,
) -> Result<TailQuantileFit> {
    let n = y.len();
    let q = cols.len();
    if !(s > 1.0) {
        return Err(Error::Domain(format!("quantile order s = {s} must be > 1")));
    }
    if n == 0 {
        return Err(Error::Domain("empty response".into()));
    }
    for (j, c) in cols.iter().enumerate() {
        if c.len() != n {
            return Err(Error::Domain(format!(
                "column {j} has {} entries, expected {n}",
                c.len()
            )));
        }
    }
    // effective tail sample has about n/s observations above the level;
    // more coefficients than that cannot be identified
    if q > 0 && q as f64 >= n as f64 / s {
        return Err(Error::SingularDesign(format!(
            "q = {q} coefficients at order s = {s} needs q < n/s = {:.1}",
            n as f64 / s
        )));
    }

    let dim = q + 1;
    let tau = 1.0 - 1.0 / s;
    // flat row-major design with the intercept column first
    let mut design = vec![0.0; n * dim];
    for i in 0..n {
        design[i * dim] = 1.0;
        for (j, col) in cols.iter().enumerate() {
            design[i * dim + j + 1] = col[i];
        }
    }
    let xrow = |i: usize, j: usize| -> f64 { design[i * dim + j] };

    // rank check on the raw normal equations, before any ridge
    {
        let mut gram = vec![0.0; dim * dim];
        for i in 0..n {
            let row = &design[i * dim..(i + 1) * dim];
            for a in 0..dim {
                let xa = row[a];
                for b in a..dim {
                    gram[a * dim + b] += xa * row[b];
                }
            }
        }
        for a in 0..dim {
            for b in 0..a {
                gram[a * dim + b] = gram[b * dim + a];
            }
        }
        cholesky(&mut gram, dim)
            .map_err(|_| Error::SingularDesign("design matrix is rank deficient".into()))?;
    }

    let mean = y.iter().sum::<f64>() / n as f64;
    let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
    let scale = var.sqrt().max(1e-12);

    let mut b = vec![0.0; dim];
    let mut warm_started = false;
    if let Some((w0, wb)) = warm {
        if wb.len() == q {
            b[0] = w0;
            b[1..].copy_from_slice(wb);
            warm_started = true;
        }
    }

    // a warm start lands near the optimum; skip the coarse smoothing phase
    let mut eps = if warm_started { 1e-4 * scale } else { 1e-2 * scale };
    // floor proportional to the response scale keeps the whole iteration
    // equivariant under y -> a y
    let eps_floor = 1e-8 * scale.max(1e-4);
    let mut iterations = 0usize;
    let converged;
    let mut resid = vec![0.0; n];

    let mut gram = vec![0.0; dim * dim];
    let mut rhs = vec![0.0; dim];
    loop {
        let final_stage = eps <= eps_floor;
        // mid-continuation stages only steer the iterate; solve tightly at
        // the floor alone
        let (inner_cap, inner_tol) = if final_stage { (30, 1e-10) } else { (8, 1e-6) };
        let mut inner_ok = false;
        for _ in 0..inner_cap {
            for i in 0..n {
                let row = &design[i * dim..(i + 1) * dim];
                let mut fit = 0.0;
                for j in 0..dim {
                    fit += b[j] * row[j];
                }
                resid[i] = y[i] - fit;
            }
            // weighted normal equations with the smoothing weights 1/d_i
            gram.iter_mut().for_each(|v| *v = 0.0);
            rhs.iter_mut().for_each(|v| *v = 0.0);
            for i in 0..n {
                let d = resid[i].abs().max(eps);
                let w = 1.0 / d;
                let wy = w * y[i];
                let row = &design[i * dim..(i + 1) * dim];
                for a in 0..dim {
                    let xa = row[a];
                    rhs[a] += wy * xa + (2.0 * tau - 1.0) * xa;
                    let wxa = w * xa;
                    let out = &mut gram[a * dim..a * dim + dim];
                    for bb in a..dim {
                        out[bb] += wxa * row[bb];
                    }
                }
            }
            let mut diag_max: f64 = 0.0;
            for a in 0..dim {
                diag_max = diag_max.max(gram[a * dim + a]);
                for bb in 0..a {
                    gram[a * dim + bb] = gram[bb * dim + a];
                }
            }
            let ridge = 1e-10 * diag_max.max(1.0);
            for a in 0..dim {
                gram[a * dim + a] += ridge;
            }
            cholesky(&mut gram, dim)?;
            let next = cholesky_solve(&gram, dim, &rhs);
            iterations += 1;
            let delta: f64 = next
                .iter()
                .zip(&b)
                .map(|(a, c)| (a - c).abs())
                .fold(0.0, f64::max);
            let norm: f64 = next.iter().map(|v| v.abs()).fold(0.0, f64::max);
            b = next;
            if delta <= inner_tol * (1.0 + norm) {
                inner_ok = true;
                break;
            }
        }
        if final_stage {
            converged = inner_ok;
            break;
        }
        eps = (eps * 0.5).max(eps_floor);
    }

    let predict = |b: &[f64], i: usize| -> f64 {
        let mut fit = 0.0;
        for (j, bj) in b.iter().enumerate() {
            fit += bj * xrow(i, j);
        }
        fit
    };
    let objective_at = |b: &[f64]| -> f64 {
        y.iter()
            .enumerate()
            .map(|(i, yi)| check_loss(yi - predict(b, i), s))
            .sum()
    };
    let mut objective = objective_at(&b);

    // vertex polish: the check-loss optimum interpolates dim observations;
    // snap to the exact fit through the dim smallest smoothed residuals
    // and keep it when it does not worsen the objective
    if n >= dim {
        for (i, r) in resid.iter_mut().enumerate() {
            *r = y[i] - predict(&b, i);
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &c| {
            resid[a]
                .abs()
                .partial_cmp(&resid[c].abs())
                .expect("non-finite residual")
        });
        // candidate atom sets: every dim-subset of the dim+2 smallest
        // residuals when the dimension is small, the single smallest set
        // otherwise (large fits feed a direction, not an exact optimum)
        let mut candidates: Vec<Vec<usize>> = Vec::new();
        if dim <= 8 && n >= dim + 2 {
            let pool: Vec<usize> = order[..dim + 2].to_vec();
            for skip_a in 0..pool.len() {
                for skip_b in (skip_a + 1)..pool.len() {
                    let subset: Vec<usize> = pool
                        .iter()
                        .enumerate()
                        .filter(|(t, _)| *t != skip_a && *t != skip_b)
                        .map(|(_, &i)| i)
                        .collect();
                    candidates.push(subset);
                }
            }
        } else {
            candidates.push(order[..dim].to_vec());
        }
        for pick in candidates {
            let mut a = vec![0.0; dim * dim];
            let mut rhs = vec![0.0; dim];
            for (r, &i) in pick.iter().enumerate() {
                for j in 0..dim {
                    a[r * dim + j] = xrow(i, j);
                }
                rhs[r] = y[i];
            }
            if let Some(polished) = crate::linalg::solve_dense(a, dim, rhs) {
                let obj_p = objective_at(&polished);
                if obj_p <= objective && obj_p.is_finite() {
                    b = polished;
                    objective = obj_p;
                }
            }
        }
    }

    Ok(TailQuantileFit {
        beta0: b[0],
        beta: b[1..].to_vec(),
        s,
        objective,
        iterations,
        converged,
    })
}

/// Normalize the fitted slope vector to a unit direction. The sign is left
/// as produced: the downstream GP fit is invariant to a global flip.
pub fn single_index_direction(fit: &TailQuantileFit) -> Result<SingleIndexDirection> {
    let norm = fit.beta.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm <= 1e-12 {
        return Err(Error::ZeroDirection);
    }
    Ok(SingleIndexDirection {
        alpha: fit.beta.iter().map(|v| v / norm).collect(),
    })
}
