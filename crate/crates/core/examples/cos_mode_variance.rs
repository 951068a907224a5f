//! Probe: variance of the cos-mode test function under the Gibbs measure
//! vs the squared minimizer Fourier amplitude.

use abc_ring::dynamics::test_function;
use abc_ring::ensemble::{GibbsEnsemble, StateIndexing};
use abc_ring::functional::{solve_minimizer, Minimizer, OrbitOptions};

fn main() {
    let beta = 15.0;
    let target = match solve_minimizer(beta, &OrbitOptions::default()).unwrap() {
        Minimizer::Solution { record, .. } => record.b_mode_amplitude,
        _ => panic!(),
    };
    println!("b1 = {target:.6}, variance target = {:.6}", target * target / 2.0);
    for n in [6usize, 9, 12, 15] {
        let ens = GibbsEnsemble::build(StateIndexing::new(n).unwrap(), beta).unwrap();
        let phi = |r: f64| (2.0 * std::f64::consts::PI * r).cos();
        let mut vals = Vec::with_capacity(ens.total() as usize);
        ens.indexing()
            .for_each(|_, z| vals.push(test_function(z, phi).unwrap()));
        let var = ens.variance_of_values(&vals);
        println!(
            "N={n}: Var(f_N) = {var:.6}  ratio to target = {:.4}",
            var / (target * target / 2.0)
        );
    }
}
