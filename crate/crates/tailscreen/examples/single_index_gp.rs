//! Fit the tail index as a function of a single linear index: tail
//! quantile regression for the direction, then a kernel-weighted
//! generalized Pareto likelihood along the index.
//!
//! Run: cargo run --release --example single_index_gp

use rand::SeedableRng;
use tailscreen::gp::fit_gp_curve;
use tailscreen::quantreg::{fit_tail_quantreg, single_index_direction};
use tailscreen::simulation::{gamma_model, gen_covariates, sample_response, ModelKind};
use tailscreen::{Bandwidth, Dataset, IntermediateOrder, Kernel};

fn main() {
    let (n, p) = (3000usize, 6usize);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
    let cols = gen_covariates(n, p, 0.2, &mut rng).unwrap();
    let y: Vec<f64> = (0..n)
        .map(|i| {
            let row: Vec<f64> = cols.iter().map(|c| c[i]).collect();
            sample_response(gamma_model(ModelKind::B, &row), 0.3, &mut rng).unwrap()
        })
        .collect();
    let data = Dataset::new(y, cols, (1..=p).map(|j| format!("x{j}")).collect()).unwrap();

    // direction from linear quantile regression at the tail level 1 - k/n
    let k = IntermediateOrder::new_tail(n / 4, n).unwrap();
    let s = n as f64 / k.get() as f64;
    let active = [0usize, 1, 2, 3];
    let cols_ref: Vec<&[f64]> = active.iter().map(|&j| data.column(j)).collect();
    let fit = fit_tail_quantreg(data.y(), &cols_ref, s).unwrap();
    let alpha = single_index_direction(&fit).unwrap().alpha;
    // the direction is identified up to a global sign flip
    println!("fitted direction over x1..x4 (truth is proportional to +-(1,1,1,1)):");
    for (j, a) in active.iter().zip(&alpha) {
        println!("  {}: {a:+.3}", data.names()[*j]);
    }

    // local GP likelihood along the index
    let z = data.index_values(&active, &alpha);
    let h = Bandwidth::new(0.25).unwrap();
    let lo = z.iter().cloned().fold(f64::INFINITY, f64::min) + h.get();
    let hi = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - h.get();
    let grid: Vec<f64> = (0..7).map(|i| lo + (hi - lo) * i as f64 / 6.0).collect();
    let curve = fit_gp_curve(data.y(), &z, &grid, k, Kernel::Epanechnikov, h).unwrap();

    println!("tail index along the index (threshold at order n/k = {s:.2}):");
    for (z0, point) in &curve.points {
        match point {
            Ok(f) => println!(
                "  z = {z0:+.2}: gamma = {:+.3}  scale = {:.3}  threshold = {:.3}",
                f.gamma_hat, f.a_hat, f.threshold_at_z0
            ),
            Err(e) => println!("  z = {z0:+.2}: {e}"),
        }
    }
}
