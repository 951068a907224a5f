//! Fast end-to-end identity checks; one line per check, nonzero exit on
//! any failure.

use crate::RunContext;
use abc_ring::ensemble::{GibbsEnsemble, StateIndexing};
use abc_ring::functional::{
    critical_beta, empirical_density, energy, orbit_period, OrbitOptions,
};
use abc_ring::generator::{
    build_complete_generator, build_ring_generator, complete_rate, detailed_balance_report,
    ring_rate,
};
use abc_ring::interchange::{build_interchange_generator, ZeroOracle};
use abc_ring::spectral::{dense_gap, dense_spectrum, DENSE_CAP};
use anyhow::{bail, Result};

struct Check {
    name: &'static str,
    passed: bool,
}

pub fn run(_ctx: &RunContext) -> Result<()> {
    let mut checks = Vec::new();
    let mut push = |name: &'static str, passed: bool| {
        println!("{} {name}", if passed { "ok  " } else { "FAIL" });
        checks.push(Check { name, passed });
    };

    let h = |s: &str| s.parse::<abc_ring::SpeciesConfiguration>().unwrap().hamiltonian().unwrap();
    push("hamiltonian small values", h("ABC") == 1.0 / 9.0 && h("ACB") == 2.0 / 9.0);

    push(
        "state counts",
        StateIndexing::new(6).unwrap().total() == 90
            && StateIndexing::new(12).unwrap().total() == 34650,
    );

    let ens = GibbsEnsemble::build(StateIndexing::new(6).unwrap(), 5.0).unwrap();
    let ring = build_ring_generator(&ens).unwrap();
    let complete = build_complete_generator(&ens).unwrap();
    let rb = detailed_balance_report(&ring, &ens);
    let cb = detailed_balance_report(&complete, &ens);
    push(
        "detailed balance (N=6, beta=5)",
        rb.max_int_residual == 0 && cb.max_int_residual == 0,
    );

    let mut bridge = true;
    ens.indexing().for_each(|_, z| {
        bridge &= energy(&empirical_density(z).unwrap()) == z.hamiltonian().unwrap();
    });
    push("energy bridge on all N=6 states", bridge);

    let mut rate_identity = true;
    ens.indexing().for_each(|_, z| {
        for x in 0..6 {
            if z.site(x) != z.site(x + 1) {
                let lhs = 6.0 * complete_rate(z, x, (x + 1) % 6, 5.0);
                let rhs = ring_rate(z, x, 5.0);
                rate_identity &= (lhs - rhs).abs() <= 1e-15 * rhs;
            }
        }
    });
    push("neighbour-bond rate identity", rate_identity);

    let gap3 = {
        let e = GibbsEnsemble::build(StateIndexing::new(3).unwrap(), 0.0).unwrap();
        let g = build_ring_generator(&e).unwrap();
        dense_gap(&g, e.weights(), DENSE_CAP).unwrap().gap
    };
    push("ring gap N=3 equals 3", (gap3 - 3.0).abs() < 1e-10);

    let sys = build_interchange_generator(3, 0.0, &ZeroOracle).unwrap();
    let spectrum = dense_spectrum(&sys.generator, DENSE_CAP).unwrap();
    let expected = [0.0, -1.0, -1.0, -1.0, -1.0, -2.0];
    let spectrum_ok = spectrum
        .iter()
        .zip(expected)
        .all(|(got, want)| (got - want).abs() < 1e-10);
    push("interchange spectrum on 3 labels", spectrum_ok);

    let period = orbit_period(
        [1.0 / 3.0 + 1e-5, 1.0 / 3.0 - 5e-6, 1.0 / 3.0 - 5e-6],
        15.0,
        &OrbitOptions::default(),
    )
    .unwrap();
    push(
        "small-orbit period matches linearization",
        (period - critical_beta() / 15.0).abs() < 1e-5,
    );

    let failed: Vec<&str> = checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| c.name)
        .collect();
    if !failed.is_empty() {
        bail!("selftest failures: {}", failed.join(", "));
    }
    println!("selftest: {} checks passed", checks.len());
    Ok(())
}
