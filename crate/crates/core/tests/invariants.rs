//! Property-based invariants across the lattice, ensemble and generator
//! layers, plus the statistical probes of the trajectory machinery that
//! sit outside the acceptance gate.

use abc_ring::dynamics::{autocorrelation_time, derive_stream, sample_series, test_function, Kmc};
use abc_ring::ensemble::{GibbsEnsemble, StateIndexing};
use abc_ring::generator::{build_ring_generator, Graph};
use abc_ring::lattice::{Species, SpeciesConfiguration, SPECIES};
use abc_ring::spectral::{dense_gap, DENSE_CAP};
use proptest::prelude::*;

fn arb_equal_density(third: usize) -> impl Strategy<Value = SpeciesConfiguration> {
    let n = 3 * third;
    Just(()).prop_perturb(move |_, mut rng| {
        let mut sites: Vec<Species> = (0..n).map(|x| SPECIES[x % 3]).collect();
        for k in (1..n).rev() {
            let j = rng.gen_range(0..=k);
            sites.swap(k, j);
        }
        SpeciesConfiguration::new(sites).unwrap()
    })
}

proptest! {
    #[test]
    fn exchange_is_an_involution_preserving_counts(
        z in arb_equal_density(3),
        x in 0usize..9,
        d in 1usize..9,
    ) {
        let y = (x + d) % 9;
        let swapped = z.exchange(x, y);
        prop_assert_eq!(swapped.species_counts(), z.species_counts());
        prop_assert_eq!(swapped.exchange(x, y), z);
    }

    #[test]
    fn hamiltonian_is_translation_invariant(z in arb_equal_density(3), k in 0i64..9) {
        let h = z.hamiltonian().unwrap();
        prop_assert!((z.translate(k).hamiltonian().unwrap() - h).abs() < 1e-14);
    }

    #[test]
    fn nearest_neighbour_gradients_are_unit_steps(z in arb_equal_density(3), x in 0usize..9) {
        let g = z.bond_gradient_int(x, (x + 1) % 9);
        prop_assert!((-1..=1).contains(&g));
        // antisymmetry under the exchange it measures
        let back = z.exchange(x, x + 1).bond_gradient_int(x, (x + 1) % 9);
        prop_assert_eq!(g, -back);
    }

    #[test]
    fn long_bond_gradient_matches_recomputation(
        z in arb_equal_density(2),
        x in 0usize..6,
        d in 1usize..6,
    ) {
        let y = (x + d) % 6;
        let brute = z.exchange(x, y).energy_int() - z.energy_int();
        prop_assert_eq!(z.bond_gradient_int(x, y), brute);
    }

    #[test]
    fn rank_unrank_round_trip(z in arb_equal_density(3)) {
        let idx = StateIndexing::new(9).unwrap();
        let r = idx.rank(&z);
        prop_assert!(r < idx.total());
        prop_assert_eq!(idx.unrank(r), z);
    }

    #[test]
    fn parse_format_round_trip(z in arb_equal_density(4)) {
        let text = z.to_string();
        prop_assert_eq!(text.parse::<SpeciesConfiguration>().unwrap(), z);
    }

    #[test]
    fn gibbs_weights_are_translation_invariant(k in 1i64..6) {
        let ens = GibbsEnsemble::build(StateIndexing::new(6).unwrap(), 3.7).unwrap();
        ens.indexing().for_each(|i, z| {
            let j = ens.indexing().rank(&z.translate(k));
            assert_eq!(ens.weight(i), ens.weight(j));
        });
    }
}

#[test]
fn stationary_fluxes_balance_pairwise() {
    // Long stationary run at N=3: the transition counts i→j and j→i agree
    // within four standard errors for every pair.
    let beta = 1.5;
    let ens = GibbsEnsemble::build(StateIndexing::new(3).unwrap(), beta).unwrap();
    let mut rng = derive_stream(0xF1, 0);
    let z0 = ens.sample(&mut rng);
    let mut kmc = Kmc::new(z0, beta, Graph::Ring);
    let mut counts = [[0u64; 6]; 6];
    let mut prev = ens.indexing().rank(kmc.state()) as usize;
    for _ in 0..2_000_000 {
        kmc.step(&mut rng);
        let cur = ens.indexing().rank(kmc.state()) as usize;
        counts[prev][cur] += 1;
        prev = cur;
    }
    for i in 0..6 {
        for j in (i + 1)..6 {
            let (fwd, back) = (counts[i][j] as f64, counts[j][i] as f64);
            if fwd + back == 0.0 {
                continue;
            }
            let z = (fwd - back).abs() / (fwd + back).sqrt();
            assert!(z < 4.0, "pair ({i},{j}): {fwd} vs {back} (z = {z:.2})");
        }
    }
}

#[test]
fn autocorrelation_time_tracks_the_spectral_gap() {
    // At β = 0 and N = 6 the slow cos-mode decorrelates at the gap rate;
    // the integrated time of its samples agrees with 1/gap within 30%.
    let n = 6usize;
    let ens = GibbsEnsemble::build(StateIndexing::new(n).unwrap(), 0.0).unwrap();
    let gen = build_ring_generator(&ens).unwrap();
    let gap = dense_gap(&gen, ens.weights(), DENSE_CAP).unwrap().gap;
    let phi = |r: f64| (2.0 * std::f64::consts::PI * r).cos();
    let mut rng = derive_stream(0xF2, 1);
    let z0 = SpeciesConfiguration::striped(n).unwrap();
    let spacing = 0.25;
    let series = sample_series(&z0, 0.0, Graph::Ring, spacing, 400_000, |z| {
        test_function(z, phi).unwrap()
    }, &mut rng);
    let tau = autocorrelation_time(&series[2000..], spacing).unwrap();
    let expected = 1.0 / gap;
    assert!(
        (tau - expected).abs() < 0.3 * expected,
        "tau {tau} vs 1/gap {expected}"
    );
}

#[test]
fn free_energy_is_translation_invariant_on_minimizers() {
    use abc_ring::functional::{free_energy, solve_minimizer, Minimizer, OrbitOptions};
    for beta in [12.0, 15.0, 20.0] {
        let opts = OrbitOptions {
            samples: 1024,
            ..OrbitOptions::default()
        };
        let Minimizer::Solution { profile, .. } = solve_minimizer(beta, &opts).unwrap()
        else {
            panic!("beta {beta} is supercritical");
        };
        let f0 = free_energy(&profile, beta);
        for s in 0..16 {
            let shifted = profile.shift_cells(s * 1024 / 16);
            let f = free_energy(&shifted, beta);
            assert!(
                (f - f0).abs() < 1e-8,
                "beta={beta} shift {s}: {f} vs {f0}"
            );
        }
    }
}

#[test]
fn exact_sampler_feeds_stationary_trajectories() {
    // Distribution preserved from t=0 to a later time, checked by a
    // two-sample comparison of energies (start vs evolved).
    let beta = 3.0;
    let ens = GibbsEnsemble::build(StateIndexing::new(6).unwrap(), beta).unwrap();
    let exact_h = ens.expectation(|_, z| z.hamiltonian().unwrap());
    let var_h = ens.variance(|_, z| z.hamiltonian().unwrap());
    let mut rng = derive_stream(0xF3, 0);
    let replicas = 30_000usize;
    let mut acc = 0.0;
    for _ in 0..replicas {
        let z0 = ens.sample(&mut rng);
        let z1 = abc_ring::dynamics::evolve(&z0, beta, 0.5, Graph::Ring, &mut rng);
        acc += z1.hamiltonian().unwrap();
    }
    let mean = acc / replicas as f64;
    let se = (var_h / replicas as f64).sqrt();
    assert!(
        (mean - exact_h).abs() < 4.0 * se,
        "evolved mean {mean} vs {exact_h} (4se {})",
        4.0 * se
    );
}
