//! Continuous-time trajectory simulation of the exchange dynamics (kinetic
//! Monte Carlo), time-averaged estimators with batch-means errors, and the
//! observables used to probe relaxation: slow-mode test functions, Fourier
//! order parameters, and integrated autocorrelation times.
//!
//! Equal-species exchanges are no-ops for the state process and are left
//! out of the event table; per-bond rates live in a binary sum tree so a
//! nearest-neighbour event touches O(log N) tree nodes. Exchanging two
//! sites changes the energy gradient of every bond whose shorter arc
//! strictly contains one of them, so on the complete graph all bond rates
//! are refreshed after each event.

use crate::error::{Error, Result};
use crate::generator::{complete_rate, ring_rate, Graph};
use crate::lattice::{Species, SpeciesConfiguration};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::Serialize;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent RNG stream for replica `stream` of a run seeded with `seed`:
/// the ChaCha key is a splitmix64 chain over (seed, stream), so replicas
/// are reproducible and decorrelated by construction.
pub fn derive_stream(seed: u64, stream: u64) -> ChaCha12Rng {
    let mut s = seed ^ stream.wrapping_mul(0xA076_1D64_78BD_642F).wrapping_add(1);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut s).to_le_bytes());
    }
    ChaCha12Rng::from_seed(key)
}

/// Binary sum tree over per-bond rates: O(log n) update, O(log n) sampling
/// proportional to rate, exact parent recomputation on every update.
struct RateTree {
    leaves: usize,
    tree: Vec<f64>,
}

impl RateTree {
    fn new(n: usize) -> Self {
        let leaves = n.next_power_of_two().max(1);
        Self {
            leaves,
            tree: vec![0.0; 2 * leaves],
        }
    }

    fn set(&mut self, i: usize, rate: f64) {
        let mut node = self.leaves + i;
        self.tree[node] = rate;
        while node > 1 {
            node /= 2;
            self.tree[node] = self.tree[2 * node] + self.tree[2 * node + 1];
        }
    }

    fn total(&self) -> f64 {
        self.tree[1]
    }

    /// Leaf index with cumulative rate bracketing `v` ∈ [0, total).
    fn select(&self, mut v: f64) -> usize {
        let mut node = 1;
        while node < self.leaves {
            let left = self.tree[2 * node];
            if v < left {
                node = 2 * node;
            } else {
                v -= left;
                node = 2 * node + 1;
            }
        }
        let mut leaf = node - self.leaves;
        // Rounding can land on an empty leaf at a boundary; walk back to
        // the nearest positive rate.
        while self.tree[self.leaves + leaf] <= 0.0 && leaf > 0 {
            leaf -= 1;
        }
        leaf
    }
}

/// One realized continuous-time trajectory: the initial state, the ordered
/// event list and the final state.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub initial: SpeciesConfiguration,
    pub events: Vec<(f64, (u32, u32))>,
    pub final_state: SpeciesConfiguration,
}

/// Kinetic Monte Carlo engine for either exchange graph.
pub struct Kmc {
    z: SpeciesConfiguration,
    beta: f64,
    graph: Graph,
    time: f64,
    bonds: Vec<(u32, u32)>,
    tree: RateTree,
}

impl Kmc {
    pub fn new(z0: SpeciesConfiguration, beta: f64, graph: Graph) -> Self {
        let n = z0.len();
        let bonds: Vec<(u32, u32)> = match graph {
            Graph::Ring => (0..n).map(|x| (x as u32, ((x + 1) % n) as u32)).collect(),
            Graph::Complete => {
                let mut b = Vec::with_capacity(n * (n - 1) / 2);
                for x in 0..n {
                    for y in (x + 1)..n {
                        b.push((x as u32, y as u32));
                    }
                }
                b
            }
        };
        let tree = RateTree::new(bonds.len());
        let mut kmc = Self {
            z: z0,
            beta,
            graph,
            time: 0.0,
            bonds,
            tree,
        };
        kmc.refresh_all();
        kmc
    }

    fn bond_rate(&self, b: usize) -> f64 {
        let (x, y) = self.bonds[b];
        let (x, y) = (x as usize, y as usize);
        if self.z.site(x) == self.z.site(y) {
            return 0.0; // no-op exchange, excluded from the event table
        }
        match self.graph {
            Graph::Ring => ring_rate(&self.z, x, self.beta),
            Graph::Complete => complete_rate(&self.z, x, y, self.beta),
        }
    }

    fn refresh_all(&mut self) {
        for b in 0..self.bonds.len() {
            self.tree.set(b, self.bond_rate(b));
        }
    }

    pub fn state(&self) -> &SpeciesConfiguration {
        &self.z
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn total_rate(&self) -> f64 {
        self.tree.total()
    }

    /// Advance by one event; returns the new time and the exchanged bond.
    pub fn step(&mut self, rng: &mut impl Rng) -> (f64, (u32, u32)) {
        let total = self.tree.total();
        debug_assert!(total > 0.0, "the chain is irreducible, rates cannot die");
        let u: f64 = rng.gen(); // [0, 1)
        let dt = -(1.0 - u).ln() / total;
        let b = self.tree.select(rng.gen::<f64>() * total);
        let (x, y) = self.bonds[b];
        self.z.exchange_in_place(x as usize, y as usize);
        self.time += dt;
        match self.graph {
            Graph::Ring => {
                let n = self.bonds.len();
                let xb = x as usize;
                for db in [n - 1, 0, 1] {
                    let bond = (xb + db) % n;
                    self.tree.set(bond, self.bond_rate(bond));
                }
            }
            Graph::Complete => self.refresh_all(),
        }
        (self.time, (x, y))
    }
}

/// Statistically exact realization of the chain up to the time horizon;
/// bit-reproducible for a fixed seed.
pub fn simulate(
    z0: &SpeciesConfiguration,
    beta: f64,
    horizon: f64,
    graph: Graph,
    rng: &mut impl Rng,
) -> Trajectory {
    let mut kmc = Kmc::new(z0.clone(), beta, graph);
    let mut events = Vec::new();
    let mut prev = z0.clone();
    loop {
        let (t, bond) = kmc.step(rng);
        if t > horizon {
            // The jump past the horizon is discarded by convention.
            return Trajectory {
                initial: z0.clone(),
                events,
                final_state: prev,
            };
        }
        events.push((t, bond));
        prev.clone_from(kmc.state());
    }
}

/// State at the horizon, without recording events.
pub fn evolve(
    z0: &SpeciesConfiguration,
    beta: f64,
    horizon: f64,
    graph: Graph,
    rng: &mut impl Rng,
) -> SpeciesConfiguration {
    let mut kmc = Kmc::new(z0.clone(), beta, graph);
    let mut prev = kmc.state().clone();
    loop {
        let (t, _) = kmc.step(rng);
        if t > horizon {
            return prev;
        }
        prev.clone_from(kmc.state());
    }
}

/// Observable samples at uniform time spacing along one trajectory; the
/// state is read just before each mark t = spacing, 2·spacing, ….
pub fn sample_series(
    z0: &SpeciesConfiguration,
    beta: f64,
    graph: Graph,
    spacing: f64,
    count: usize,
    mut observable: impl FnMut(&SpeciesConfiguration) -> f64,
    rng: &mut impl Rng,
) -> Vec<f64> {
    let mut kmc = Kmc::new(z0.clone(), beta, graph);
    let mut series = Vec::with_capacity(count);
    let mut next_mark = spacing;
    let mut held = kmc.state().clone();
    while series.len() < count {
        let (t, _) = kmc.step(rng);
        while t > next_mark && series.len() < count {
            series.push(observable(&held));
            next_mark += spacing;
        }
        held.clone_from(kmc.state());
    }
    series
}

/// Mean with a batch-means error bar.
#[derive(Clone, Debug, Serialize)]
pub struct EstimateWithError {
    pub mean: f64,
    pub standard_error: f64,
    pub effective_samples: f64,
    pub method: String,
}

#[derive(Clone, Copy, Debug)]
pub struct BatchMeansOptions {
    pub burn_in: f64,
    pub batches: usize,
}

impl BatchMeansOptions {
    pub fn new(burn_in: f64) -> Self {
        Self { burn_in, batches: 32 }
    }
}

/// Exact time-average of an observable along one trajectory after burn-in,
/// with the run split into equal-time batches for the error bar.
pub fn mcmc_expectation(
    z0: &SpeciesConfiguration,
    beta: f64,
    graph: Graph,
    horizon: f64,
    opts: BatchMeansOptions,
    mut observable: impl FnMut(&SpeciesConfiguration) -> f64,
    rng: &mut impl Rng,
) -> Result<EstimateWithError> {
    if opts.burn_in >= horizon {
        return Err(Error::BurnInTooLong {
            burn_in: opts.burn_in,
            horizon,
        });
    }
    if opts.batches < 8 {
        return Err(Error::TooFewBatches {
            need: 8,
            got: opts.batches,
        });
    }
    let batches = opts.batches;
    let window = (horizon - opts.burn_in) / batches as f64;
    let mut integrals = vec![0.0f64; batches];

    let mut kmc = Kmc::new(z0.clone(), beta, graph);
    let mut t_prev = 0.0f64;
    let mut value = observable(kmc.state());
    loop {
        let (t_next, _) = kmc.step(rng);
        let t_stop = t_next.min(horizon);
        // Distribute the holding interval over the batch windows it meets.
        let mut lo = t_prev.max(opts.burn_in);
        while lo < t_stop {
            let idx = (((lo - opts.burn_in) / window) as usize).min(batches - 1);
            let hi = (opts.burn_in + (idx + 1) as f64 * window).min(t_stop);
            integrals[idx] += value * (hi - lo);
            lo = hi;
        }
        if t_next >= horizon {
            break;
        }
        value = observable(kmc.state());
        t_prev = t_next;
    }

    let means: Vec<f64> = integrals.iter().map(|s| s / window).collect();
    let mean = means.iter().sum::<f64>() / batches as f64;
    let identical = means.windows(2).all(|w| w[0] == w[1]);
    let standard_error = if identical {
        0.0
    } else {
        let ss: f64 = means.iter().map(|m| (m - mean) * (m - mean)).sum();
        (ss / (batches as f64 * (batches - 1) as f64)).sqrt()
    };
    Ok(EstimateWithError {
        mean,
        standard_error,
        effective_samples: batches as f64,
        method: format!("batch-means-{batches}"),
    })
}

/// Slow-mode test function (1/N)·Σ_x η_B(x)·φ(x/N) for a mode function φ
/// with vanishing grid mean.
pub fn test_function(z: &SpeciesConfiguration, phi: impl Fn(f64) -> f64) -> Result<f64> {
    let n = z.len();
    let mut phi_sum = 0.0;
    let mut value = 0.0;
    for x in 0..n {
        let p = phi(x as f64 / n as f64);
        phi_sum += p;
        if z.site(x) == Species::B {
            value += p;
        }
    }
    let mean = phi_sum / n as f64;
    if mean.abs() > 1e-10 {
        return Err(Error::NonZeroMean(mean));
    }
    Ok(value / n as f64)
}

/// Modulus of the k-th Fourier mode of the centered B occupation,
/// |(1/N)·Σ_x (η_B(x) − 1/3)·e^{2πikx/N}|; translation invariant.
pub fn order_parameter(z: &SpeciesConfiguration, k: usize) -> f64 {
    let n = z.len();
    let mut re = 0.0;
    let mut im = 0.0;
    for x in 0..n {
        let weight = if z.site(x) == Species::B {
            1.0 - 1.0 / 3.0
        } else {
            -1.0 / 3.0
        };
        let angle = 2.0 * std::f64::consts::PI * ((k * x) % n) as f64 / n as f64;
        re += weight * angle.cos();
        im += weight * angle.sin();
    }
    (re * re + im * im).sqrt() / n as f64
}

/// Integrated autocorrelation time of a uniformly spaced sample series, by
/// the self-consistent window rule: the lag sum is truncated at the first
/// window W ≥ 6·τ̂(W). Result is in the time units of `spacing`.
pub fn autocorrelation_time(series: &[f64], spacing: f64) -> Result<f64> {
    let n = series.len();
    if n < 1000 {
        return Err(Error::InvalidParameter(format!(
            "autocorrelation needs at least 1000 samples, got {n}"
        )));
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let d: Vec<f64> = series.iter().map(|x| x - mean).collect();
    let c0: f64 = d.iter().map(|x| x * x).sum::<f64>() / n as f64;
    if c0 == 0.0 {
        // A constant series carries no correlation beyond one sample.
        return Ok(0.5 * spacing);
    }
    let max_lag = n / 3;
    let mut tau = 0.5;
    for t in 1..max_lag {
        let cov: f64 = d[..n - t]
            .iter()
            .zip(&d[t..])
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / (n - t) as f64;
        tau += cov / c0;
        if t as f64 >= 6.0 * tau {
            return Ok(tau.max(0.5) * spacing);
        }
    }
    Err(Error::WindowNotConverged {
        max_lag,
        tau: tau * spacing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{GibbsEnsemble, StateIndexing};

    fn cfg(s: &str) -> SpeciesConfiguration {
        s.parse().unwrap()
    }

    #[test]
    fn trajectories_are_deterministic_and_conservative() {
        let z0 = cfg("ABCABCABC");
        let mut rng1 = derive_stream(123, 0);
        let mut rng2 = derive_stream(123, 0);
        let t1 = simulate(&z0, 2.0, 50.0, Graph::Ring, &mut rng1);
        let t2 = simulate(&z0, 2.0, 50.0, Graph::Ring, &mut rng2);
        assert_eq!(t1.events, t2.events);
        assert_eq!(t1.final_state, t2.final_state);
        assert!(!t1.events.is_empty());
        for w in t1.events.windows(2) {
            assert!(w[0].0 < w[1].0);
        }
        for &(_, (x, y)) in &t1.events {
            assert_ne!(x, y);
        }
        // conservation along the path, and the event list replays the run
        let mut z = z0.clone();
        for &(_, (x, y)) in &t1.events {
            z.exchange_in_place(x as usize, y as usize);
            assert_eq!(z.species_counts(), [3, 3, 3]);
        }
        assert_eq!(z, t1.final_state);
        // a different stream gives a different path
        let mut rng3 = derive_stream(123, 1);
        let t3 = simulate(&z0, 2.0, 50.0, Graph::Ring, &mut rng3);
        assert_ne!(t1.events, t3.events);
    }

    #[test]
    fn holding_times_are_exponential_at_constant_rate() {
        // N = 3 keeps one particle per species, so every bond is active and
        // the exit rate is exactly N at β = 0.
        let z0 = cfg("ABC");
        let mut kmc = Kmc::new(z0, 0.0, Graph::Ring);
        assert_eq!(kmc.total_rate(), 3.0);
        let mut rng = derive_stream(7, 0);
        let mut times = Vec::with_capacity(10_000);
        let mut last = 0.0;
        for _ in 0..10_000 {
            let (t, _) = kmc.step(&mut rng);
            times.push(t - last);
            last = t;
            assert_eq!(kmc.total_rate(), 3.0);
        }
        // Kolmogorov-Smirnov against Exp(3), 1% level.
        times.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = times.len() as f64;
        let mut d = 0.0f64;
        for (i, &t) in times.iter().enumerate() {
            let f = 1.0 - (-3.0 * t).exp();
            let lo = i as f64 / n;
            let hi = (i + 1) as f64 / n;
            d = d.max((f - lo).abs()).max((f - hi).abs());
        }
        let critical = 1.628 / n.sqrt();
        assert!(d < critical, "KS statistic {d} exceeds {critical}");
    }

    #[test]
    fn time_average_matches_exact_expectation() {
        let ens = GibbsEnsemble::build(StateIndexing::new(6).unwrap(), 5.0).unwrap();
        let exact = ens.expectation(|_, z| z.hamiltonian().unwrap());
        let z0 = cfg("ABCABC");
        let mut rng = derive_stream(2024, 0);
        let est = mcmc_expectation(
            &z0,
            5.0,
            Graph::Ring,
            40_000.0,
            BatchMeansOptions::new(2_000.0),
            |z| z.hamiltonian().unwrap(),
            &mut rng,
        )
        .unwrap();
        assert!(
            (est.mean - exact).abs() < 4.0 * est.standard_error,
            "MC {} ± {} vs exact {exact}",
            est.mean,
            est.standard_error
        );
    }

    #[test]
    fn complete_graph_time_average_matches_exact_expectation() {
        let ens = GibbsEnsemble::build(StateIndexing::new(6).unwrap(), 3.0).unwrap();
        let exact = ens.expectation(|_, z| z.hamiltonian().unwrap());
        let z0 = cfg("ACBACB");
        let mut rng = derive_stream(515, 0);
        let est = mcmc_expectation(
            &z0,
            3.0,
            Graph::Complete,
            60_000.0,
            BatchMeansOptions::new(2_000.0),
            |z| z.hamiltonian().unwrap(),
            &mut rng,
        )
        .unwrap();
        assert!(
            (est.mean - exact).abs() < 4.0 * est.standard_error,
            "MC {} ± {} vs exact {exact}",
            est.mean,
            est.standard_error
        );
    }

    #[test]
    fn constant_observable_has_zero_error() {
        let z0 = cfg("ABC");
        let mut rng = derive_stream(5, 0);
        let est = mcmc_expectation(
            &z0,
            1.0,
            Graph::Ring,
            200.0,
            BatchMeansOptions::new(10.0),
            |_| 2.5,
            &mut rng,
        )
        .unwrap();
        assert_eq!(est.mean, 2.5);
        assert_eq!(est.standard_error, 0.0);
    }

    #[test]
    fn batch_and_burn_in_validation() {
        let z0 = cfg("ABC");
        let mut rng = derive_stream(5, 0);
        let err = mcmc_expectation(
            &z0,
            1.0,
            Graph::Ring,
            10.0,
            BatchMeansOptions { burn_in: 20.0, batches: 32 },
            |_| 0.0,
            &mut rng,
        );
        assert!(matches!(err, Err(Error::BurnInTooLong { .. })));
        let err = mcmc_expectation(
            &z0,
            1.0,
            Graph::Ring,
            10.0,
            BatchMeansOptions { burn_in: 1.0, batches: 4 },
            |_| 0.0,
            &mut rng,
        );
        assert!(matches!(err, Err(Error::TooFewBatches { .. })));
    }

    #[test]
    fn test_function_values() {
        let phi = |r: f64| (2.0 * std::f64::consts::PI * r).cos();
        // Single B at site 1 of ABC: (1/3)·cos(2π/3) = −1/6.
        let v = test_function(&cfg("ABC"), phi).unwrap();
        assert!((v + 1.0 / 6.0).abs() < 1e-14);
        assert_eq!(test_function(&cfg("ABC"), |_| 0.0).unwrap(), 0.0);
        // Nonzero mean is rejected.
        assert!(matches!(
            test_function(&cfg("ABC"), |_| 1.0),
            Err(Error::NonZeroMean(_))
        ));
        // Translating the state is the same as shifting the mode function.
        let z = cfg("ACBBCA");
        let k = 2usize;
        let shifted = |r: f64| phi(r + k as f64 / 6.0);
        let lhs = test_function(&z.translate(k as i64), phi).unwrap();
        let rhs = test_function(&z, shifted).unwrap();
        assert!((lhs - rhs).abs() < 1e-14);
    }

    #[test]
    fn order_parameter_values() {
        // Segregated blocks: the centered terms cancel over the full ring,
        // leaving |Σ_{x∈B block} e^{2πix/N}|/N = sin(π/3)/(N·sin(π/N)).
        let z = SpeciesConfiguration::segregated(6).unwrap();
        let expected = (std::f64::consts::PI / 3.0).sin()
            / (6.0 * (std::f64::consts::PI / 6.0).sin());
        assert!((order_parameter(&z, 1) - expected).abs() < 1e-14);
        assert!((expected - 0.2887).abs() < 1e-4);
        // The striped state has no k=1 weight.
        let z = SpeciesConfiguration::striped(6).unwrap();
        assert!(order_parameter(&z, 1).abs() < 1e-14);
        // Modulus is translation invariant.
        let z = cfg("ACBBCAACB");
        for k in 0..9 {
            assert!(
                (order_parameter(&z.translate(k), 1) - order_parameter(&z, 1)).abs()
                    < 1e-12
            );
        }
    }

    #[test]
    fn autocorrelation_white_noise() {
        let mut rng = derive_stream(31, 0);
        let series: Vec<f64> = (0..100_000).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let tau = autocorrelation_time(&series, 1.0).unwrap();
        assert!((tau - 0.5).abs() < 0.1, "white-noise tau {tau}");
    }

    #[test]
    fn autocorrelation_two_state_chain() {
        // Two-state chain flipping at rate λ each way, sampled every Δ:
        // autocorrelation e^{−2λt}, integrated time 1/(2λ).
        let lambda = 1.0;
        let spacing = 0.1;
        let mut rng = derive_stream(77, 0);
        let mut state = 1.0f64;
        let mut t_next_flip = -(1.0 - rng.gen::<f64>()).ln() / lambda;
        let mut series = Vec::with_capacity(100_000);
        let mut t = 0.0;
        for _ in 0..100_000 {
            t += spacing;
            while t_next_flip < t {
                state = -state;
                t_next_flip += -(1.0 - rng.gen::<f64>()).ln() / lambda;
            }
            series.push(state);
        }
        let tau = autocorrelation_time(&series, spacing).unwrap();
        let expected = 1.0 / (2.0 * lambda);
        assert!(
            (tau - expected).abs() < 0.1 * expected,
            "tau {tau} vs {expected}"
        );
    }

    #[test]
    fn autocorrelation_rejects_short_series() {
        let series = vec![1.0; 100];
        assert!(autocorrelation_time(&series, 1.0).is_err());
    }

    #[test]
    fn sampled_series_has_requested_length() {
        let z0 = cfg("ABCABC");
        let mut rng = derive_stream(9, 0);
        let s = sample_series(
            &z0,
            1.0,
            Graph::Ring,
            0.5,
            200,
            |z| order_parameter(z, 1),
            &mut rng,
        );
        assert_eq!(s.len(), 200);
    }
}
