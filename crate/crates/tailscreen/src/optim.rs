//! Two-dimensional Nelder-Mead maximization for the local GP likelihood.
//!
//! Infeasible parameter pairs are signalled by `f = -inf`; the simplex
//! never averages objective values, so that is safe.

/// Maximize `f` over R^2 starting from `start` with initial step sizes
/// `scale`. Returns (argmax, max). Deterministic.
pub(crate) fn nelder_mead_2d<F: FnMut(f64, f64) -> f64>(
    mut f: F,
    start: [f64; 2],
    scale: [f64; 2],
    max_iter: usize,
    tol: f64,
) -> ([f64; 2], f64) {
    const ALPHA: f64 = 1.0; // reflection
    const GAMMA: f64 = 2.0; // expansion
    const RHO: f64 = 0.5; // contraction
    const SIGMA: f64 = 0.5; // shrink

    let mut pts = [
        start,
        [start[0] + scale[0], start[1]],
        [start[0], start[1] + scale[1]],
    ];
    let mut vals = [0.0f64; 3];
    for i in 0..3 {
        vals[i] = f(pts[i][0], pts[i][1]);
    }

    for _ in 0..max_iter {
        // order descending: best first (maximization)
        let mut idx = [0usize, 1, 2];
        idx.sort_by(|&a, &b| vals[b].partial_cmp(&vals[a]).unwrap_or(std::cmp::Ordering::Equal));
        let (best, mid, worst) = (idx[0], idx[1], idx[2]);

        if vals[best].is_finite()
            && vals[worst].is_finite()
            && (vals[best] - vals[worst]).abs() <= tol * (1.0 + vals[best].abs())
        {
            break;
        }

        let centroid = [
            0.5 * (pts[best][0] + pts[mid][0]),
            0.5 * (pts[best][1] + pts[mid][1]),
        ];
        let reflect = [
            centroid[0] + ALPHA * (centroid[0] - pts[worst][0]),
            centroid[1] + ALPHA * (centroid[1] - pts[worst][1]),
        ];
        let fr = f(reflect[0], reflect[1]);

        if fr > vals[best] {
            let expand = [
                centroid[0] + GAMMA * (reflect[0] - centroid[0]),
                centroid[1] + GAMMA * (reflect[1] - centroid[1]),
            ];
            let fe = f(expand[0], expand[1]);
            if fe > fr {
                pts[worst] = expand;
                vals[worst] = fe;
            } else {
                pts[worst] = reflect;
                vals[worst] = fr;
            }
        } else if fr > vals[mid] {
            pts[worst] = reflect;
            vals[worst] = fr;
        } else {
            let contract = [
                centroid[0] + RHO * (pts[worst][0] - centroid[0]),
                centroid[1] + RHO * (pts[worst][1] - centroid[1]),
            ];
            let fc = f(contract[0], contract[1]);
            if fc > vals[worst] {
                pts[worst] = contract;
                vals[worst] = fc;
            } else {
                for i in 0..3 {
                    if i == best {
                        continue;
                    }
                    pts[i] = [
                        pts[best][0] + SIGMA * (pts[i][0] - pts[best][0]),
                        pts[best][1] + SIGMA * (pts[i][1] - pts[best][1]),
                    ];
                    vals[i] = f(pts[i][0], pts[i][1]);
                }
            }
        }
    }

    let mut best = 0;
    for i in 1..3 {
        if vals[i] > vals[best] {
            best = i;
        }
    }
    (pts[best], vals[best])
}
