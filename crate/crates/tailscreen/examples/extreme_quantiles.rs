//! Extrapolate conditional quantiles beyond the observed threshold with
//! the fitted local GP parameters: U_ex(1/tau | z) for tau far below the
//! threshold order k/n.
//!
//! Run: cargo run --release --example extreme_quantiles

use rand::SeedableRng;
use tailscreen::gp::{extrapolated_quantile, fit_gp_curve};
use tailscreen::{Bandwidth, IntermediateOrder, Kernel};

fn main() {
    let n = 4000;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    let z: Vec<f64> = (0..n)
        .map(|_| rand::Rng::sample::<f64, _>(&mut rng, rand::distr::Open01))
        .collect();
    // Pareto given z with gamma(z) = 0.35 - 0.2 z: tail thins to the right
    let y: Vec<f64> = z
        .iter()
        .map(|&zi| {
            let u: f64 = rand::Rng::sample(&mut rng, rand::distr::Open01);
            u.powf(-(0.35 - 0.2 * zi))
        })
        .collect();

    let k = IntermediateOrder::new_tail(n / 5, n).unwrap();
    let h = Bandwidth::new(0.2).unwrap();
    let grid = [0.25, 0.5, 0.75];
    let curve = fit_gp_curve(&y, &z, &grid, k, Kernel::Epanechnikov, h).unwrap();

    let taus = [0.05, 0.01, 11.0 / n as f64];
    println!("extrapolated conditional quantiles (threshold order k/n = {:.3}):", k.get() as f64 / n as f64);
    for (z0, fit) in &curve.points {
        let fit = fit.as_ref().unwrap();
        print!("  z = {z0:.2}: threshold {:8.3}", fit.threshold_at_z0);
        for tau in taus {
            let q = extrapolated_quantile(fit, None, tau).unwrap();
            print!("   q({:.4}) = {q:8.3}", 1.0 - tau);
        }
        println!();
    }
    println!("(each row rises as tau shrinks; heavier tails on the left rise faster)");
}
