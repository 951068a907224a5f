//! The perturbed interchange process on the complete graph: permutation
//! states, bounded-gradient energy oracles, the reversible generator on the
//! symmetric group, and the colorblind projection that maps it onto the
//! three-species complete-graph dynamics.
//!
//! The generic energy oracle is the module boundary: the zero oracle
//! recovers the pure random-transposition walk, while the colorblind
//! oracle lifts the lattice Hamiltonian through the mod-3 projection of
//! the labels and pushes the permutation Gibbs measure onto the
//! equal-density ensemble.

use crate::ensemble::{GibbsEnsemble, MemoryBudget};
use crate::error::{Error, Result};
use crate::generator::SparseGenerator;
use crate::lattice::{Species, SpeciesConfiguration};
use std::fmt;

/// A bijection of {1..N}, stored 0-based: `map[x]` is σ(x+1) − 1.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Permutation {
    map: Vec<u8>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Self {
            map: (0..n as u8).collect(),
        }
    }

    pub fn from_one_line(values: &[usize]) -> Result<Self> {
        let n = values.len();
        let mut seen = vec![false; n];
        for &v in values {
            if v == 0 || v > n || seen[v - 1] {
                return Err(Error::InvalidParameter(format!(
                    "{values:?} is not a permutation of 1..{n}"
                )));
            }
            seen[v - 1] = true;
        }
        Ok(Self {
            map: values.iter().map(|&v| (v - 1) as u8).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// σ(x) for 0-based x, 0-based result.
    #[inline]
    pub fn value(&self, x: usize) -> usize {
        self.map[x] as usize
    }

    /// Composition with the transposition of positions x and y.
    pub fn apply_transposition(&self, x: usize, y: usize) -> Self {
        assert!(x != y, "transposition needs two distinct positions");
        let mut map = self.map.clone();
        map.swap(x, y);
        Self { map }
    }

    pub(crate) fn swap_in_place(&mut self, x: usize, y: usize) {
        self.map.swap(x, y);
    }

    /// +1 for even permutations, −1 for odd ones.
    pub fn sign(&self) -> i32 {
        let mut seen = vec![false; self.map.len()];
        let mut transpositions = 0;
        for start in 0..self.map.len() {
            if seen[start] {
                continue;
            }
            let mut x = start;
            let mut cycle = 0;
            while !seen[x] {
                seen[x] = true;
                x = self.map[x] as usize;
                cycle += 1;
            }
            transpositions += cycle - 1;
        }
        if transpositions % 2 == 0 {
            1
        } else {
            -1
        }
    }
}

impl fmt::Debug for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let one_line: Vec<usize> = self.map.iter().map(|&v| v as usize + 1).collect();
        write!(f, "{one_line:?}")
    }
}

/// Rank/unrank over S_N in lexicographic one-line order, via the factorial
/// number system (Lehmer code).
#[derive(Clone, Debug)]
pub struct PermutationIndexing {
    n: usize,
    factorials: Vec<u64>,
}

impl PermutationIndexing {
    pub fn new(n: usize) -> Self {
        let mut factorials = vec![1u64; n + 1];
        for k in 1..=n {
            factorials[k] = factorials[k - 1] * k as u64;
        }
        Self { n, factorials }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn total(&self) -> u64 {
        self.factorials[self.n]
    }

    pub fn rank(&self, sigma: &Permutation) -> u64 {
        debug_assert_eq!(sigma.len(), self.n);
        let mut rank = 0u64;
        for x in 0..self.n {
            let v = sigma.value(x);
            let smaller_unused = (0..v)
                .filter(|&u| !(0..x).any(|prev| sigma.value(prev) == u))
                .count() as u64;
            rank += smaller_unused * self.factorials[self.n - 1 - x];
        }
        rank
    }

    pub fn unrank(&self, mut index: u64) -> Permutation {
        assert!(index < self.total());
        let mut available: Vec<u8> = (0..self.n as u8).collect();
        let mut map = Vec::with_capacity(self.n);
        for x in 0..self.n {
            let block = self.factorials[self.n - 1 - x];
            let pick = (index / block) as usize;
            index %= block;
            map.push(available.remove(pick));
        }
        Permutation { map }
    }

    pub fn for_each(&self, mut f: impl FnMut(u64, &Permutation)) {
        for i in 0..self.total() {
            let sigma = self.unrank(i);
            f(i, &sigma);
        }
    }
}

/// Energy function on permutations with uniformly bounded transposition
/// gradients.
pub trait EnergyOracle {
    fn energy(&self, sigma: &Permutation) -> f64;

    /// E(σ^{x,y}) − E(σ); the default recomputes both sides.
    fn gradient(&self, sigma: &Permutation, x: usize, y: usize) -> f64 {
        self.energy(&sigma.apply_transposition(x, y)) - self.energy(sigma)
    }

    /// Declared uniform bound on |gradient|.
    fn gradient_bound(&self) -> f64;

    /// Energy times N as an exact integer, when the oracle is rational
    /// with denominator N; enables exact detailed-balance accounting.
    fn energy_scaled_int(&self, _sigma: &Permutation) -> Option<i64> {
        None
    }
}

/// The unperturbed interchange process.
pub struct ZeroOracle;

impl EnergyOracle for ZeroOracle {
    fn energy(&self, _sigma: &Permutation) -> f64 {
        0.0
    }

    fn gradient(&self, _sigma: &Permutation, _x: usize, _y: usize) -> f64 {
        0.0
    }

    fn gradient_bound(&self) -> f64 {
        0.0
    }

    fn energy_scaled_int(&self, _sigma: &Permutation) -> Option<i64> {
        Some(0)
    }
}

/// Species of a 0-based label under the mod-3 projection: labels 1, 2, 3
/// (1-based) map to A, B, C and the pattern repeats.
#[inline]
fn label_species(v0: usize) -> Species {
    match v0 % 3 {
        0 => Species::A,
        1 => Species::B,
        _ => Species::C,
    }
}

/// Colorblind projection: resolve only the residue class mod 3 of each
/// label. The image of any permutation is equal-density.
pub fn colorblind_project(sigma: &Permutation) -> Result<SpeciesConfiguration> {
    let n = sigma.len();
    if n == 0 || n % 3 != 0 {
        return Err(Error::BadSiteCount(n));
    }
    SpeciesConfiguration::new((0..n).map(|x| label_species(sigma.value(x))).collect())
}

/// Energy oracle E(σ) = N·H(χ(σ)): the lattice Hamiltonian lifted through
/// the colorblind projection. Gradients inherit the arc locality of the
/// lattice Hamiltonian; |∇E| = N|∇H| ≤ (N−1)/N, declared bound 1.
pub struct ColorblindOracle {
    n: usize,
}

impl ColorblindOracle {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || n % 3 != 0 {
            return Err(Error::BadSiteCount(n));
        }
        Ok(Self { n })
    }
}

impl EnergyOracle for ColorblindOracle {
    fn energy(&self, sigma: &Permutation) -> f64 {
        let z = colorblind_project(sigma).expect("oracle is built for multiples of 3");
        z.energy_int() as f64 / self.n as f64
    }

    fn gradient(&self, sigma: &Permutation, x: usize, y: usize) -> f64 {
        let z = colorblind_project(sigma).expect("oracle is built for multiples of 3");
        z.bond_gradient_int(x, y) as f64 / self.n as f64
    }

    fn gradient_bound(&self) -> f64 {
        1.0
    }

    fn energy_scaled_int(&self, sigma: &Permutation) -> Option<i64> {
        let z = colorblind_project(sigma).expect("oracle is built for multiples of 3");
        Some(z.energy_int())
    }
}

/// Transposition rate (1/N)·exp{−(β/2)·∇_{x,y}E(σ)}.
pub fn transposition_rate(
    sigma: &Permutation,
    x: usize,
    y: usize,
    beta: f64,
    oracle: &impl EnergyOracle,
) -> f64 {
    let n = sigma.len() as f64;
    (-(beta / 2.0) * oracle.gradient(sigma, x, y)).exp() / n
}

/// The interchange generator over S_N together with its reversible measure.
pub struct InterchangeSystem {
    pub indexing: PermutationIndexing,
    pub beta: f64,
    pub generator: SparseGenerator,
    /// Normalized Gibbs weights π(σ) ∝ exp{−β·E(σ)}.
    pub weights: Vec<f64>,
    pub log_z: f64,
    /// N·E(σ) as exact integers, when the oracle provides them.
    pub energies_scaled_int: Option<Vec<i64>>,
}

/// Enumerate S_N and assemble the generator; default budget caps at N = 7,
/// larger systems need an explicit byte budget.
pub fn build_interchange_generator(
    n: usize,
    beta: f64,
    oracle: &impl EnergyOracle,
) -> Result<InterchangeSystem> {
    if n > 7 {
        return Err(Error::InvalidParameter(format!(
            "permutation spaces beyond N = 7 need an explicit budget, got N = {n}"
        )));
    }
    build_interchange_generator_with_budget(n, beta, oracle, MemoryBudget::default())
}

pub fn build_interchange_generator_with_budget(
    n: usize,
    beta: f64,
    oracle: &impl EnergyOracle,
    budget: MemoryBudget,
) -> Result<InterchangeSystem> {
    if n < 2 {
        return Err(Error::InvalidParameter(
            "the interchange process needs at least two labels".into(),
        ));
    }
    let indexing = PermutationIndexing::new(n);
    let total = indexing.total();
    let bonds = (n * (n - 1) / 2) as u64;
    budget.check(total.saturating_mul(bonds).saturating_mul(16))?;

    // Energies first: exact integers when offered, floats otherwise.
    let mut energies = Vec::with_capacity(total as usize);
    let mut energies_int: Option<Vec<i64>> = Some(Vec::with_capacity(total as usize));
    indexing.for_each(|_, sigma| {
        energies.push(oracle.energy(sigma));
        if let Some(store) = energies_int.as_mut() {
            match oracle.energy_scaled_int(sigma) {
                Some(e) => store.push(e),
                None => energies_int = None,
            }
        }
    });

    let nf = n as f64;
    let mut rows: Vec<Vec<(u32, f64, i32)>> = vec![Vec::new(); total as usize];
    indexing.for_each(|i, sigma| {
        let row = &mut rows[i as usize];
        let mut scratch = sigma.clone();
        for x in 0..n {
            for y in (x + 1)..n {
                scratch.swap_in_place(x, y);
                let j = indexing.rank(&scratch) as u32;
                scratch.swap_in_place(x, y);
                let (rate, de) = match &energies_int {
                    Some(store) => {
                        // ∇E in 1/N units; the rate exponent is exactly
                        // −β/(2N) times the integer increment.
                        let de = store[j as usize] - store[i as usize];
                        ((-(beta / (2.0 * nf)) * de as f64).exp() / nf, de as i32)
                    }
                    None => (
                        (-(beta / 2.0) * oracle.gradient(sigma, x, y)).exp() / nf,
                        0,
                    ),
                };
                row.push((j, rate, de));
            }
        }
    });
    let generator = SparseGenerator::from_rows(rows, "interchange");

    // Normalized weights by max-shifted exponentials.
    let min_e = energies.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut weights: Vec<f64> = energies.iter().map(|&e| (-beta * (e - min_e)).exp()).collect();
    let shifted: f64 = weights.iter().sum();
    let log_z = shifted.ln() - beta * min_e;
    for w in &mut weights {
        *w /= shifted;
    }

    Ok(InterchangeSystem {
        indexing,
        beta,
        generator,
        weights,
        log_z,
        energies_scaled_int: energies_int,
    })
}

/// Detailed-balance diagnostics, mirroring the lattice report: the integer
/// residual checks the assembled increments against the enumerated
/// energies (in 1/N units), the float residual bounds |π_i q_ij − π_j q_ji|.
#[derive(Clone, Copy, Debug, Default)]
pub struct InterchangeBalanceReport {
    pub max_int_residual: i64,
    pub max_float_residual: f64,
    pub missing_reverse: usize,
}

pub fn interchange_balance_report(sys: &InterchangeSystem) -> InterchangeBalanceReport {
    let mut report = InterchangeBalanceReport::default();
    let gen = &sys.generator;
    for i in 0..gen.dim() {
        for (j, q_ij, de) in gen.row(i) {
            if let Some(store) = &sys.energies_scaled_int {
                let residual = (store[i] + de as i64 - store[j]).abs();
                report.max_int_residual = report.max_int_residual.max(residual);
            }
            match gen.rate(j, i) {
                Some(q_ji) => {
                    let lhs = sys.weights[i] * q_ij;
                    let rhs = sys.weights[j] * q_ji;
                    report.max_float_residual =
                        report.max_float_residual.max((lhs - rhs).abs());
                }
                None => report.missing_reverse += 1,
            }
        }
    }
    report
}

/// Check the spectral characterization π[(𝒢f)²] ≥ k·ℰ(f,f) for one test
/// function at a claimed gap constant k.
#[derive(Clone, Copy, Debug)]
pub struct GapCharacterizationReport {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

pub fn gap_characterization_check(
    sys: &InterchangeSystem,
    f: &[f64],
    k: f64,
) -> GapCharacterizationReport {
    let gen = &sys.generator;
    let mut gf = vec![0.0; gen.dim()];
    gen.apply(f, &mut gf);
    let lhs: f64 = gf
        .iter()
        .zip(&sys.weights)
        .map(|(g, w)| w * g * g)
        .sum();
    let rhs = k * crate::generator::dirichlet_form(gen, &sys.weights, f).value();
    GapCharacterizationReport {
        lhs,
        rhs,
        holds: lhs >= rhs - 1e-12 * (1.0 + lhs.abs()),
    }
}

/// Push the permutation Gibbs measure through the colorblind projection
/// and compare with the equal-density ensemble, fiber by fiber.
#[derive(Clone, Copy, Debug)]
pub struct PushforwardReport {
    pub max_discrepancy: f64,
    /// Permutations per configuration fiber, ((N/3)!)³.
    pub fiber_size: u64,
}

pub fn pushforward_check(n: usize, beta: f64) -> Result<PushforwardReport> {
    let sys = build_interchange_generator(n, beta, &ColorblindOracle::new(n)?)?;
    let ens = GibbsEnsemble::build(crate::ensemble::StateIndexing::new(n)?, beta)?;
    let mut fiber_sums = vec![0.0f64; ens.total() as usize];
    let mut counts = vec![0u64; ens.total() as usize];
    sys.indexing.for_each(|i, sigma| {
        let z = colorblind_project(sigma).expect("multiple of 3");
        let idx = ens.indexing().rank(&z) as usize;
        fiber_sums[idx] += sys.weights[i as usize];
        counts[idx] += 1;
    });
    let mut max_discrepancy = 0.0f64;
    for i in 0..fiber_sums.len() {
        max_discrepancy = max_discrepancy.max((fiber_sums[i] - ens.weight(i as u64)).abs());
    }
    let expected_fiber = {
        let third = (n / 3) as u64;
        let fact = |k: u64| (1..=k).product::<u64>().max(1);
        fact(third).pow(3)
    };
    if counts.iter().any(|&c| c != expected_fiber) {
        return Err(Error::InvalidParameter(
            "colorblind fibers are not equally sized".into(),
        ));
    }
    Ok(PushforwardReport {
        max_discrepancy,
        fiber_size: expected_fiber,
    })
}
