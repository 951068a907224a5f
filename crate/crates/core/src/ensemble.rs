//! Exhaustive enumeration of the equal-density state space, the Gibbs
//! measure with exact partition function, and exact expectations, variances
//! and i.i.d. sampling for system sizes small enough to enumerate.
//!
//! States are ordered lexicographically with A < B < C; ranks are computed
//! from multinomial coefficients so `rank` and `unrank` are exact inverses.
//! Boltzmann exponents are handled via the integer energy accumulator of
//! [`crate::lattice`], with a max-subtracted log-domain partition sum.

use crate::error::{Error, Result};
use crate::lattice::{SpeciesConfiguration, Species, SPECIES};
use rand::Rng;
use serde::Serialize;
use std::cell::OnceCell;

/// Memory budget for enumerated objects. Defaults to 2 GiB; callers opt in
/// to larger state spaces explicitly.
#[derive(Clone, Copy, Debug)]
pub struct MemoryBudget {
    pub bytes: u64,
}

impl Default for MemoryBudget {
    fn default() -> Self {
        Self {
            bytes: 2 * 1024 * 1024 * 1024,
        }
    }
}

impl MemoryBudget {
    pub fn gib(g: f64) -> Self {
        Self {
            bytes: (g * (1u64 << 30) as f64) as u64,
        }
    }

    pub fn check(&self, required: u64) -> Result<()> {
        if required > self.bytes {
            Err(Error::BudgetExceeded {
                required,
                budget: self.bytes,
            })
        } else {
            Ok(())
        }
    }
}

/// Rank/unrank contract between equal-density configurations on `n` sites
/// and the indices `0..total`, in lexicographic order with A < B < C.
#[derive(Clone, Debug)]
pub struct StateIndexing {
    n: usize,
    third: usize,
    total: u64,
    /// multinomial[(a·(k+1) + b)·(k+1) + c] = (a+b+c)!/(a!·b!·c!), k = n/3.
    multinomial: Vec<u64>,
}

impl StateIndexing {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || n % 3 != 0 {
            return Err(Error::BadSiteCount(n));
        }
        let third = n / 3;
        let k = third + 1;
        let mut multinomial = vec![0u64; k * k * k];
        for a in 0..k {
            for b in 0..k {
                for c in 0..k {
                    let idx = (a * k + b) * k + c;
                    multinomial[idx] = if a + b + c == 0 {
                        1
                    } else {
                        let mut v = 0u64;
                        if a > 0 {
                            v += multinomial[((a - 1) * k + b) * k + c];
                        }
                        if b > 0 {
                            v += multinomial[(a * k + (b - 1)) * k + c];
                        }
                        if c > 0 {
                            v += multinomial[(a * k + b) * k + (c - 1)];
                        }
                        v
                    };
                }
            }
        }
        let total = multinomial[(third * k + third) * k + third];
        Ok(Self {
            n,
            third,
            total,
            multinomial,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of equal-density states, N!/((N/3)!)³.
    pub fn total(&self) -> u64 {
        self.total
    }

    #[inline]
    fn m(&self, counts: [usize; 3]) -> u64 {
        let k = self.third + 1;
        self.multinomial[(counts[0] * k + counts[1]) * k + counts[2]]
    }

    /// Lexicographic rank of an equal-density configuration.
    pub fn rank(&self, z: &SpeciesConfiguration) -> u64 {
        assert_eq!(z.len(), self.n, "configuration size does not match");
        debug_assert!(z.is_equal_density());
        let mut remaining = [self.third; 3];
        let mut r = 0u64;
        for &s in z.sites() {
            for smaller in SPECIES.iter().take(s.index()) {
                if remaining[smaller.index()] > 0 {
                    let mut counts = remaining;
                    counts[smaller.index()] -= 1;
                    r += self.m(counts);
                }
            }
            remaining[s.index()] -= 1;
        }
        r
    }

    /// Configuration with the given lexicographic rank.
    pub fn unrank(&self, mut index: u64) -> SpeciesConfiguration {
        assert!(index < self.total, "rank {index} out of range");
        let mut remaining = [self.third; 3];
        let mut sites = Vec::with_capacity(self.n);
        for _ in 0..self.n {
            for &s in &SPECIES {
                if remaining[s.index()] == 0 {
                    continue;
                }
                let mut counts = remaining;
                counts[s.index()] -= 1;
                let block = self.m(counts);
                if index < block {
                    sites.push(s);
                    remaining = counts;
                    break;
                }
                index -= block;
            }
        }
        SpeciesConfiguration::new(sites).expect("unrank built a non-empty state")
    }

    /// Visit every state in rank order without materializing the state list.
    /// The configuration passed to the callback is a reused buffer.
    pub fn for_each(&self, mut f: impl FnMut(u64, &SpeciesConfiguration)) {
        let mut buf = SpeciesConfiguration::new(vec![Species::A; self.n]).unwrap();
        let mut remaining = [self.third; 3];
        let mut rank = 0u64;
        self.visit(&mut buf, &mut remaining, 0, &mut rank, &mut f);
        debug_assert_eq!(rank, self.total);
    }

    fn visit(
        &self,
        buf: &mut SpeciesConfiguration,
        remaining: &mut [usize; 3],
        pos: usize,
        rank: &mut u64,
        f: &mut impl FnMut(u64, &SpeciesConfiguration),
    ) {
        if pos == self.n {
            f(*rank, buf);
            *rank += 1;
            return;
        }
        for &s in &SPECIES {
            if remaining[s.index()] == 0 {
                continue;
            }
            buf.set_site(pos, s);
            remaining[s.index()] -= 1;
            self.visit(buf, remaining, pos + 1, rank, f);
            remaining[s.index()] += 1;
        }
    }
}

/// Summary record for JSON export; deliberately excludes the weight table.
#[derive(Debug, Serialize)]
pub struct EnsembleSummary {
    pub n: usize,
    pub beta: f64,
    pub total: u64,
    pub log_z: f64,
    pub min_energy: f64,
    pub max_energy: f64,
}

/// The Gibbs measure on the enumerated state space: per-state weights
/// proportional to exp{−βN·H(ζ)} and the exact partition function.
pub struct GibbsEnsemble {
    indexing: StateIndexing,
    beta: f64,
    /// Integer energy accumulator per state (Hamiltonian × N²).
    energies: Vec<u32>,
    min_energy: u32,
    max_energy: u32,
    log_z: f64,
    /// Normalized probabilities, summing to 1.
    weights: Vec<f64>,
    cumulative: OnceCell<Vec<f64>>,
}

impl GibbsEnsemble {
    pub fn build(indexing: StateIndexing, beta: f64) -> Result<Self> {
        Self::build_with_budget(indexing, beta, MemoryBudget::default())
    }

    pub fn build_with_budget(
        indexing: StateIndexing,
        beta: f64,
        budget: MemoryBudget,
    ) -> Result<Self> {
        if !(beta >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "beta must be nonnegative, got {beta}"
            )));
        }
        let total = indexing.total();
        // energies (u32) + weights (f64) + cumulative table built on demand.
        budget.check(total.saturating_mul(20))?;
        let mut energies = Vec::with_capacity(total as usize);
        indexing.for_each(|_, z| energies.push(z.energy_int() as u32));

        let min_energy = *energies.iter().min().expect("nonempty state space");
        let max_energy = *energies.iter().max().expect("nonempty state space");

        // βN·H = (β/N)·energy_int; shift by the minimum before exponentiating.
        let n = indexing.n() as f64;
        let scale = beta / n;
        let mut weights: Vec<f64> = energies
            .iter()
            .map(|&e| (-scale * (e - min_energy) as f64).exp())
            .collect();
        let shifted_z: f64 = weights.iter().sum();
        let log_z = shifted_z.ln() - scale * min_energy as f64;
        let inv = 1.0 / shifted_z;
        for w in &mut weights {
            *w *= inv;
        }

        Ok(Self {
            indexing,
            beta,
            energies,
            min_energy,
            max_energy,
            log_z,
            weights,
            cumulative: OnceCell::new(),
        })
    }

    pub fn indexing(&self) -> &StateIndexing {
        &self.indexing
    }

    pub fn n(&self) -> usize {
        self.indexing.n()
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn total(&self) -> u64 {
        self.indexing.total()
    }

    pub fn log_z(&self) -> f64 {
        self.log_z
    }

    /// Integer energy accumulator of state `i` (Hamiltonian × N²).
    #[inline]
    pub fn energy_int(&self, i: u64) -> i64 {
        self.energies[i as usize] as i64
    }

    pub fn hamiltonian_value(&self, i: u64) -> f64 {
        let n = self.n() as f64;
        self.energies[i as usize] as f64 / (n * n)
    }

    /// Normalized probability of state `i`.
    #[inline]
    pub fn weight(&self, i: u64) -> f64 {
        self.weights[i as usize]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn summary(&self) -> EnsembleSummary {
        let n2 = (self.n() * self.n()) as f64;
        EnsembleSummary {
            n: self.n(),
            beta: self.beta,
            total: self.total(),
            log_z: self.log_z,
            min_energy: self.min_energy as f64 / n2,
            max_energy: self.max_energy as f64 / n2,
        }
    }

    /// Exact expectation of an observable supplied as a callback over
    /// configurations.
    pub fn expectation(&self, mut f: impl FnMut(u64, &SpeciesConfiguration) -> f64) -> f64 {
        let mut acc = 0.0;
        self.indexing
            .for_each(|i, z| acc += self.weights[i as usize] * f(i, z));
        acc
    }

    /// Exact variance; nonnegative, exactly 0 for constants.
    pub fn variance(&self, mut f: impl FnMut(u64, &SpeciesConfiguration) -> f64) -> f64 {
        let mut values = Vec::with_capacity(self.weights.len());
        self.indexing.for_each(|i, z| values.push(f(i, z)));
        self.variance_of_values(&values)
    }

    /// Expectation of a state-indexed value table.
    pub fn expectation_of_values(&self, values: &[f64]) -> f64 {
        values
            .iter()
            .zip(&self.weights)
            .map(|(v, w)| v * w)
            .sum()
    }

    /// Variance of a state-indexed value table (two-pass, centered).
    /// Exactly 0 for constant observables.
    pub fn variance_of_values(&self, values: &[f64]) -> f64 {
        if values.windows(2).all(|w| w[0] == w[1]) {
            return 0.0;
        }
        let mean = self.expectation_of_values(values);
        values
            .iter()
            .zip(&self.weights)
            .map(|(v, w)| {
                let d = v - mean;
                w * d * d
            })
            .sum::<f64>()
            .max(0.0)
    }

    fn cumulative(&self) -> &[f64] {
        self.cumulative.get_or_init(|| {
            let mut acc = 0.0;
            let mut cum = Vec::with_capacity(self.weights.len());
            for &w in &self.weights {
                acc += w;
                cum.push(acc);
            }
            if let Some(last) = cum.last_mut() {
                *last = 1.0;
            }
            cum
        })
    }

    /// One i.i.d. draw from the normalized weights by CDF inversion.
    pub fn sample(&self, rng: &mut impl Rng) -> SpeciesConfiguration {
        let u: f64 = rng.gen();
        let cum = self.cumulative();
        let idx = cum.partition_point(|&c| c <= u).min(cum.len() - 1);
        self.indexing.unrank(idx as u64)
    }

    /// Rank of one i.i.d. draw; cheaper than materializing the state.
    pub fn sample_rank(&self, rng: &mut impl Rng) -> u64 {
        let u: f64 = rng.gen();
        let cum = self.cumulative();
        cum.partition_point(|&c| c <= u).min(cum.len() - 1) as u64
    }
}

/// Streaming Gibbs expectation over the equal-density states of `n` sites,
/// without materializing energies or weights: a single enumeration pass
/// with online max-shifted accumulation of the partition sum.
pub fn streaming_expectation(
    n: usize,
    beta: f64,
    mut f: impl FnMut(&SpeciesConfiguration) -> f64,
) -> Result<f64> {
    let indexing = StateIndexing::new(n)?;
    let scale = beta / n as f64;
    // Running exponent shift: accumulators hold Σ exp(shift − scale·E)·{1, f}.
    let mut shift = f64::NEG_INFINITY;
    let mut z_acc = 0.0f64;
    let mut f_acc = 0.0f64;
    indexing.for_each(|_, z| {
        let exponent = -scale * z.energy_int() as f64;
        if exponent > shift {
            if z_acc > 0.0 {
                let rescale = (shift - exponent).exp();
                z_acc *= rescale;
                f_acc *= rescale;
            }
            shift = exponent;
        }
        let w = (exponent - shift).exp();
        z_acc += w;
        f_acc += w * f(z);
    });
    Ok(f_acc / z_acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn state_counts() {
        assert_eq!(StateIndexing::new(3).unwrap().total(), 6);
        assert_eq!(StateIndexing::new(6).unwrap().total(), 90);
        assert_eq!(StateIndexing::new(12).unwrap().total(), 34650);
        assert!(StateIndexing::new(4).is_err());
        assert!(StateIndexing::new(0).is_err());
    }

    #[test]
    fn enumeration_is_lexicographic_and_counts_match() {
        let idx = StateIndexing::new(6).unwrap();
        let mut seen = Vec::new();
        idx.for_each(|i, z| {
            assert_eq!(i as usize, seen.len());
            seen.push(z.to_string());
        });
        assert_eq!(seen.len(), 90);
        let mut sorted = seen.clone();
        sorted.sort();
        assert_eq!(seen, sorted, "states must come out in lexicographic order");
        assert_eq!(seen[0], "AABBCC");
        assert_eq!(seen[89], "CCBBAA");
    }

    #[test]
    fn rank_unrank_bijection() {
        for n in [3usize, 6, 9] {
            let idx = StateIndexing::new(n).unwrap();
            idx.for_each(|i, z| {
                assert_eq!(idx.rank(z), i);
                assert_eq!(&idx.unrank(i), z);
            });
        }
    }

    #[test]
    fn uniform_measure_at_beta_zero() {
        let ens = GibbsEnsemble::build(StateIndexing::new(3).unwrap(), 0.0).unwrap();
        for i in 0..6 {
            assert!((ens.weight(i) - 1.0 / 6.0).abs() < 1e-15);
        }
        assert!((ens.log_z - 6f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn weight_ratio_matches_energy_difference() {
        // weight(ABC)/weight(ACB) = exp{−3β(1/9 − 2/9)} = e^{β/3}
        let beta = 1.7;
        let idx = StateIndexing::new(3).unwrap();
        let ens = GibbsEnsemble::build(idx, beta).unwrap();
        let low = ens.indexing().rank(&"ABC".parse().unwrap());
        let high = ens.indexing().rank(&"ACB".parse().unwrap());
        let ratio = ens.weight(low) / ens.weight(high);
        assert!((ratio - (beta / 3.0).exp()).abs() < 1e-13);
    }

    #[test]
    fn weights_normalize_and_are_translation_invariant() {
        for beta in [0.0, 1.0, 5.0, 15.0] {
            let ens = GibbsEnsemble::build(StateIndexing::new(6).unwrap(), beta).unwrap();
            let sum: f64 = ens.weights().iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
            ens.indexing().for_each(|i, z| {
                let j = ens.indexing().rank(&z.translate(1));
                assert_eq!(ens.weight(i), ens.weight(j), "beta={beta}");
            });
        }
    }

    #[test]
    fn partition_function_decreases_in_beta() {
        let grid = [0.0, 0.5, 1.0, 2.0, 5.0, 15.0];
        let mut last = f64::INFINITY;
        for &beta in &grid {
            let ens = GibbsEnsemble::build(StateIndexing::new(6).unwrap(), beta).unwrap();
            assert!(ens.log_z() <= last + 1e-12, "Z not monotone at beta={beta}");
            last = ens.log_z();
        }
    }

    #[test]
    fn expectation_and_variance_basics() {
        let ens = GibbsEnsemble::build(StateIndexing::new(3).unwrap(), 0.0).unwrap();
        let c = ens.expectation(|_, _| 4.25);
        assert!((c - 4.25).abs() < 1e-14);
        assert_eq!(ens.variance(|_, _| 4.25), 0.0);
        // Under the uniform measure, 2 of the 6 states hold A at site 0.
        let p = ens.expectation(|_, z| (z.site(0) == Species::A) as u64 as f64);
        assert!((p - 1.0 / 3.0).abs() < 1e-14);
        // Translating the observable does not change its mean.
        let h = |_: u64, z: &SpeciesConfiguration| z.energy_int() as f64;
        let ht = |_: u64, z: &SpeciesConfiguration| z.translate(2).energy_int() as f64;
        let ens5 = GibbsEnsemble::build(StateIndexing::new(6).unwrap(), 5.0).unwrap();
        assert!((ens5.expectation(h) - ens5.expectation(ht)).abs() < 1e-12);
    }

    #[test]
    fn streaming_matches_materialized() {
        let beta = 3.0;
        let ens = GibbsEnsemble::build(StateIndexing::new(9).unwrap(), beta).unwrap();
        let exact = ens.expectation(|_, z| z.hamiltonian().unwrap());
        let streamed = streaming_expectation(9, beta, |z| z.hamiltonian().unwrap()).unwrap();
        assert!((exact - streamed).abs() < 1e-13);
    }

    #[test]
    fn sampling_frequencies_converge() {
        let ens = GibbsEnsemble::build(StateIndexing::new(3).unwrap(), 0.0).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let draws = 600_000usize;
        let mut counts = [0usize; 6];
        for _ in 0..draws {
            counts[ens.sample_rank(&mut rng) as usize] += 1;
        }
        let p = 1.0 / 6.0;
        let se = (p * (1.0 - p) / draws as f64).sqrt();
        for (i, &c) in counts.iter().enumerate() {
            let freq = c as f64 / draws as f64;
            assert!(
                (freq - p).abs() < 5.0 * se,
                "state {i}: frequency {freq} vs {p} (5σ = {})",
                5.0 * se
            );
        }
    }

    #[test]
    fn sampled_energy_matches_exact_expectation() {
        let ens = GibbsEnsemble::build(StateIndexing::new(6).unwrap(), 5.0).unwrap();
        let exact = ens.expectation(|_, z| z.hamiltonian().unwrap());
        let var = ens.variance(|_, z| z.hamiltonian().unwrap());
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        let draws = 1_000_000usize;
        let mut acc = 0.0;
        let n2 = 36.0;
        for _ in 0..draws {
            acc += ens.energy_int(ens.sample_rank(&mut rng)) as f64 / n2;
        }
        let mean = acc / draws as f64;
        let se = (var / draws as f64).sqrt();
        assert!(
            (mean - exact).abs() < 4.0 * se,
            "MC mean {mean} vs exact {exact} (4σ = {})",
            4.0 * se
        );
    }

    #[test]
    fn budget_is_enforced() {
        let idx = StateIndexing::new(12).unwrap();
        let err = GibbsEnsemble::build_with_budget(idx, 1.0, MemoryBudget { bytes: 1000 });
        match err.err() {
            Some(Error::BudgetExceeded { required, budget }) => {
                assert!(required > budget);
            }
            other => panic!("expected budget error, got {other:?}"),
        }
    }
}
