//! Pick the effective tail size k by the exceedance goodness-of-fit
//! discrepancy, and the bandwidth by leave-one-out cross-validation.
//!
//! Run: cargo run --release --example tune_tail_order

use tailscreen::tuning::{bandwidth_cv, default_h_grid, default_k_grid, select_k};
use tailscreen::Kernel;

fn main() {
    let n = 3000;
    let mut state = 7u64;
    let mut unif = || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((state >> 11) as f64 + 0.5) / (1u64 << 53) as f64
    };
    // Burr-type response: Pareto-like tail with a second-order correction
    let y: Vec<f64> = (0..n).map(|_| (unif() / (1.3 - unif())).powf(-0.4)).collect();
    let x: Vec<f64> = (0..n).map(|_| unif()).collect();

    let grid = default_k_grid(n);
    let (k, trace) = select_k(&y, &grid).unwrap();
    println!("discrepancy over the k grid (chosen k = {}):", k.get());
    for (i, &kv) in trace.grid.iter().enumerate().step_by(4) {
        match trace.discrepancies[i] {
            Some(q) => println!("  k = {kv:4}: Q = {q:.6}{}", if kv == k.get() { "  <- chosen" } else { "" }),
            None => println!("  k = {kv:4}: degenerate"),
        }
    }

    let t = n as f64 / k.get() as f64;
    let (h, htrace) = bandwidth_cv(&x, &y, t, &default_h_grid(), Kernel::Epanechnikov).unwrap();
    println!("leave-one-out check loss over the h grid (chosen h = {}):", h.get());
    for (i, &hv) in htrace.grid.iter().enumerate().step_by(2) {
        match htrace.losses[i] {
            Some(l) => println!("  h = {hv:.2}: loss = {l:.5}{}", if hv == h.get() { "  <- chosen" } else { "" }),
            None => println!("  h = {hv:.2}: infeasible"),
        }
    }
}
