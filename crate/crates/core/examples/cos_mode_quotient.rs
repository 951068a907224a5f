//! Probe: cos-mode Rayleigh quotient at beta = 15 across system sizes.

use abc_ring::dynamics::test_function;
use abc_ring::ensemble::{GibbsEnsemble, StateIndexing};
use abc_ring::generator::{build_ring_generator, rayleigh_quotient};

fn main() {
    let beta = 15.0;
    for n in [6usize, 9, 12, 15] {
        let ens = GibbsEnsemble::build(StateIndexing::new(n).unwrap(), beta).unwrap();
        let gen = build_ring_generator(&ens).unwrap();
        let phi = |r: f64| (2.0 * std::f64::consts::PI * r).cos();
        let mut vals = Vec::with_capacity(ens.total() as usize);
        ens.indexing()
            .for_each(|_, z| vals.push(test_function(z, phi).unwrap()));
        let q = rayleigh_quotient(&gen, ens.weights(), &vals).unwrap();
        let n3 = (n * n * n) as f64;
        println!("N={n}: quotient = {q:.6e}  q*N^3 = {:.4}", q * n3);
    }
}
