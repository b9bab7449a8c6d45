//! Run a desk-scale slice of the benchmark experiment: screen, select the
//! model size, and report minimum model sizes and true positive rates.
//!
//! The full-scale protocol (p = 500, 500 replications, every design cell)
//! is the same code with a bigger spec; see the README.
//!
//! Run: cargo run --release --example simulate_benchmark

use std::time::Instant;
use tailscreen::simulation::{run_simulation, ModelKind, SimMode, SimulationSpec};
use tailscreen::Kernel;

fn main() {
    let spec = SimulationSpec {
        model: ModelKind::B,
        n: 1500,
        p: 30,
        r: 0.2,
        m: 0.2,
        replications: 4,
        seed: 2024,
        q_cap: 20,
        kernel: Kernel::Epanechnikov,
        mode: SimMode::Screening,
        reporting_size: 30,
    };
    println!(
        "model {:?}: n = {}, p = {}, r = {}, m = {}, {} replications",
        spec.model, spec.n, spec.p, spec.r, spec.m, spec.replications
    );
    let t0 = Instant::now();
    let (records, report) = run_simulation(&spec).unwrap();
    for rec in &records {
        println!(
            "  rep {}: S = {:?}  j* = {:?}  j** = {:?}  TP* = {:?}  TP** = {:?}",
            rec.rep, rec.s_min, rec.j_star, rec.j_double_star, rec.tp_star, rec.tp_double_star
        );
    }
    let q = report.s_quantiles.unwrap();
    println!("S quantiles (5/25/50/75/95%): {:.1} {:.1} {:.1} {:.1} {:.1}", q[0], q[1], q[2], q[3], q[4]);
    println!(
        "P = {:.2}  TP* = {:.2}  TP** = {:.2}  ({} failed, {:.1?})",
        report.p_capture.unwrap(),
        report.tp_star.unwrap_or(f64::NAN),
        report.tp_double_star.unwrap_or(f64::NAN),
        report.failed,
        t0.elapsed()
    );
}
