//! Quick timing probe for generator assembly and gap solves.
//!
//! Run: cargo run --release -p abc-ring --example gap_timing -- N beta [dense]

use abc_ring::ensemble::{GibbsEnsemble, StateIndexing};
use abc_ring::generator::build_ring_generator;
use abc_ring::spectral::{dense_gap, iterative_gap, IterativeOptions, DENSE_CAP};
use std::time::Instant;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let n: usize = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(12);
    let beta: f64 = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(0.0);
    let use_dense = args.get(3).map(|s| s == "dense").unwrap_or(false);

    let t0 = Instant::now();
    let ens = GibbsEnsemble::build(StateIndexing::new(n).unwrap(), beta).unwrap();
    eprintln!("ensemble: {} states in {:.2?}", ens.total(), t0.elapsed());

    let t1 = Instant::now();
    let gen = build_ring_generator(&ens).unwrap();
    eprintln!("generator: {} nnz in {:.2?}", gen.nnz(), t1.elapsed());

    let t2 = Instant::now();
    if use_dense {
        let est = dense_gap(&gen, ens.weights(), DENSE_CAP).unwrap();
        eprintln!(
            "dense gap = {:.12e} (residual {:.2e}) in {:.2?}",
            est.gap,
            est.residual,
            t2.elapsed()
        );
    } else {
        let est = iterative_gap(&gen, ens.weights(), &IterativeOptions::default()).unwrap();
        eprintln!(
            "iterative gap = {:.12e} ({} iterations, residual {:.2e}) in {:.2?}",
            est.gap,
            est.iterations,
            est.residual,
            t2.elapsed()
        );
    }
}
