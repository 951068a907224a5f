//! Sparse generator matrices for the ring dynamics and the complete-graph
//! dynamics on the enumerated equal-density state space, their Dirichlet
//! forms and Rayleigh quotients, and the comparison inequality between the
//! two forms.
//!
//! Off-diagonal rates are stored in compressed sparse rows, rows sorted by
//! column; the diagonal is implicit as the negative row sum. Exchanges of
//! equal species are no-ops for the dynamics and are not stored. Every
//! entry also records the integer energy increment of the jump, so detailed
//! balance can be verified in exact integer arithmetic.

use crate::ensemble::{GibbsEnsemble, MemoryBudget};
use crate::error::{Error, Result};
use crate::lattice::{pair_asymmetry, SpeciesConfiguration};
use std::io::Write;

/// Which exchange graph drives the dynamics.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Graph {
    Ring,
    Complete,
}

impl Graph {
    pub fn name(self) -> &'static str {
        match self {
            Graph::Ring => "ring",
            Graph::Complete => "complete",
        }
    }
}

/// Jump rate of the nearest-neighbour bond {x, x+1}: e^{−β/2N} when the
/// ordered pair (ζ(x), ζ(x+1)) is one of (A,B), (B,C), (C,A) — the
/// energy-raising exchanges — and e^{+β/2N} otherwise, including the no-op
/// equal-species pairs.
pub fn ring_rate(z: &SpeciesConfiguration, x: usize, beta: f64) -> f64 {
    let n = z.len() as f64;
    let s = z.site(x);
    let t = z.site(x + 1);
    // For distinct species the exponent sign is the integer energy change;
    // equal pairs take the fast branch by convention (the rate of a no-op).
    let sign = if s == t { -1 } else { pair_asymmetry(t, s) };
    (-(beta / (2.0 * n)) * sign as f64).exp()
}

/// Jump rate of an arbitrary bond {x, y} on the complete graph:
/// (1/N)·exp{−(βN/2)·[H(ζ^{x,y}) − H(ζ)]}.
///
/// For nearest-neighbour bonds with distinct species this satisfies
/// N·complete_rate = ring_rate up to one rounding of the 1/N prefactor.
pub fn complete_rate(z: &SpeciesConfiguration, x: usize, y: usize, beta: f64) -> f64 {
    let n = z.len() as f64;
    let g = z.bond_gradient_int(x, y);
    (-(beta / (2.0 * n)) * g as f64).exp() / n
}

/// Rate matrix of a continuous-time Markov chain on an enumerated state
/// space. `delta_e[k]` is the integer energy increment of entry `k`.
pub struct SparseGenerator {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    rates: Vec<f64>,
    delta_e: Vec<i32>,
    /// Total exit rate per row (the negated diagonal).
    exit_rates: Vec<f64>,
    pub graph_label: &'static str,
}

impl SparseGenerator {
    /// Assemble from per-row edge lists; rows are sorted by column and
    /// parallel transitions between the same pair of states are merged.
    pub(crate) fn from_rows(
        rows: Vec<Vec<(u32, f64, i32)>>,
        graph_label: &'static str,
    ) -> Self {
        let dim = rows.len();
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut rates = Vec::new();
        let mut delta_e = Vec::new();
        let mut exit_rates = Vec::with_capacity(dim);
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(c, _, _)| c);
            let mut exit = 0.0;
            let mut k = 0;
            while k < row.len() {
                let (c, mut r, de) = row[k];
                let mut kk = k + 1;
                while kk < row.len() && row[kk].0 == c {
                    r += row[kk].1;
                    debug_assert_eq!(row[kk].2, de);
                    kk += 1;
                }
                cols.push(c);
                rates.push(r);
                delta_e.push(de);
                exit += r;
                k = kk;
            }
            exit_rates.push(exit);
            row_ptr.push(cols.len());
        }
        Self {
            dim,
            row_ptr,
            cols,
            rates,
            delta_e,
            exit_rates,
            graph_label,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    /// Off-diagonal entries of row `i` as (column, rate, energy increment).
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64, i32)> + '_ {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        (lo..hi).map(move |k| (self.cols[k] as usize, self.rates[k], self.delta_e[k]))
    }

    /// Total exit rate of state `i` (the negated diagonal entry).
    pub fn exit_rate(&self, i: usize) -> f64 {
        self.exit_rates[i]
    }

    /// Stored rate of the transition i → j, if present.
    pub fn rate(&self, i: usize, j: usize) -> Option<f64> {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        let idx = self.cols[lo..hi].binary_search(&(j as u32)).ok()?;
        Some(self.rates[lo + idx])
    }

    /// Action of the generator: (Lf)(i) = Σ_j q_ij (f(j) − f(i)).
    pub fn apply(&self, f: &[f64], out: &mut [f64]) {
        assert_eq!(f.len(), self.dim);
        for i in 0..self.dim {
            let mut acc = -self.exit_rates[i] * f[i];
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.rates[k] * f[self.cols[k] as usize];
            }
            out[i] = acc;
        }
    }

    /// Coordinate text export: one "row col rate" triple per line, rows and
    /// columns in sorted order.
    pub fn write_coordinate_text(&self, mut w: impl Write) -> std::io::Result<()> {
        for i in 0..self.dim {
            for (j, q, _) in self.row(i) {
                writeln!(w, "{i} {j} {q:.17e}")?;
            }
        }
        Ok(())
    }
}

fn build_generator(
    ens: &GibbsEnsemble,
    graph: Graph,
    budget: MemoryBudget,
) -> Result<SparseGenerator> {
    let n = ens.n();
    let total = ens.total();
    let bonds_per_state = match graph {
        Graph::Ring => n as u64,
        Graph::Complete => (n * (n - 1) / 2) as u64,
    };
    // 16 bytes per stored entry plus the row index overhead.
    budget.check(total.saturating_mul(bonds_per_state).saturating_mul(16))?;

    let nf = n as f64;
    let kappa = ens.beta() / (2.0 * nf);
    let mut rows: Vec<Vec<(u32, f64, i32)>> = vec![Vec::new(); total as usize];
    let mut scratch: Option<SpeciesConfiguration> = None;
    ens.indexing().for_each(|i, z| {
        let scratch = scratch.get_or_insert_with(|| z.clone());
        scratch.clone_from(z);
        let row = &mut rows[i as usize];
        let mut push_bond = |x: usize, y: usize| {
            if z.site(x) == z.site(y) {
                return;
            }
            let g = z.bond_gradient_int(x, y);
            scratch.exchange_in_place(x, y);
            let j = ens.indexing().rank(scratch) as u32;
            scratch.exchange_in_place(x, y);
            let rate = match graph {
                Graph::Ring => (-kappa * g as f64).exp(),
                Graph::Complete => (-kappa * g as f64).exp() / nf,
            };
            row.push((j, rate, g as i32));
        };
        match graph {
            Graph::Ring => {
                for x in 0..n {
                    push_bond(x, (x + 1) % n);
                }
            }
            Graph::Complete => {
                for x in 0..n {
                    for y in (x + 1)..n {
                        push_bond(x, y);
                    }
                }
            }
        }
    });
    Ok(SparseGenerator::from_rows(rows, graph.name()))
}

/// Generator of the nearest-neighbour exchange dynamics.
pub fn build_ring_generator(ens: &GibbsEnsemble) -> Result<SparseGenerator> {
    build_generator(ens, Graph::Ring, MemoryBudget::default())
}

/// Generator of the all-pairs exchange dynamics.
pub fn build_complete_generator(ens: &GibbsEnsemble) -> Result<SparseGenerator> {
    build_generator(ens, Graph::Complete, MemoryBudget::default())
}

pub fn build_generator_with_budget(
    ens: &GibbsEnsemble,
    graph: Graph,
    budget: MemoryBudget,
) -> Result<SparseGenerator> {
    build_generator(ens, graph, budget)
}

/// Detailed-balance diagnostics for a generator paired with its ensemble.
#[derive(Clone, Copy, Debug, Default)]
pub struct BalanceReport {
    /// Max |(E_i + ΔE_ij) − E_j| over stored entries, in integer energy
    /// units. Zero means the assembled increments agree exactly with the
    /// independently enumerated state energies.
    pub max_int_residual: i64,
    /// Max |w_i q_ij − w_j q_ji| over stored entries, as floats.
    pub max_float_residual: f64,
    /// Entries whose reverse transition is missing (must be 0).
    pub missing_reverse: usize,
}

/// Check reversibility of `gen` with respect to the ensemble weights, in
/// exact integer-exponent arithmetic and as a floating-point product bound.
pub fn detailed_balance_report(gen: &SparseGenerator, ens: &GibbsEnsemble) -> BalanceReport {
    let mut report = BalanceReport::default();
    for i in 0..gen.dim() {
        let ei = ens.energy_int(i as u64);
        for (j, q_ij, de) in gen.row(i) {
            let ej = ens.energy_int(j as u64);
            let int_residual = (ei + de as i64 - ej).abs();
            report.max_int_residual = report.max_int_residual.max(int_residual);
            match gen.rate(j, i) {
                Some(q_ji) => {
                    let lhs = ens.weight(i as u64) * q_ij;
                    let rhs = ens.weight(j as u64) * q_ji;
                    report.max_float_residual =
                        report.max_float_residual.max((lhs - rhs).abs());
                }
                None => report.missing_reverse += 1,
            }
        }
    }
    report
}

/// Dirichlet form ν(f·(−L)f), computed both as the quadratic form and as
/// the weighted half-sum of squared gradients.
#[derive(Clone, Copy, Debug)]
pub struct DirichletValue {
    pub quadratic: f64,
    pub half_sum: f64,
}

impl DirichletValue {
    pub fn value(&self) -> f64 {
        self.half_sum
    }
}

/// Mean of a value table under a normalized weight vector.
pub fn weighted_mean(weights: &[f64], values: &[f64]) -> f64 {
    values.iter().zip(weights).map(|(v, w)| v * w).sum()
}

/// Centered two-pass weighted variance; exactly 0 for constants.
pub fn weighted_variance(weights: &[f64], values: &[f64]) -> f64 {
    if values.windows(2).all(|w| w[0] == w[1]) {
        return 0.0;
    }
    let mean = weighted_mean(weights, values);
    values
        .iter()
        .zip(weights)
        .map(|(v, w)| {
            let d = v - mean;
            w * d * d
        })
        .sum::<f64>()
        .max(0.0)
}

/// Both routes to the Dirichlet form; they agree to rounding error.
pub fn dirichlet_form(gen: &SparseGenerator, weights: &[f64], f: &[f64]) -> DirichletValue {
    assert_eq!(f.len(), gen.dim());
    let mut lf = vec![0.0; gen.dim()];
    gen.apply(f, &mut lf);
    let mut quadratic = 0.0;
    let mut half_sum = 0.0;
    for i in 0..gen.dim() {
        let w = weights[i];
        quadratic -= w * f[i] * lf[i];
        let mut acc = 0.0;
        for (j, q, _) in gen.row(i) {
            let d = f[j] - f[i];
            acc += q * d * d;
        }
        half_sum += 0.5 * w * acc;
    }
    DirichletValue { quadratic, half_sum }
}

/// Rayleigh quotient D(f,f)/Var(f); an upper bound for the spectral gap.
pub fn rayleigh_quotient(gen: &SparseGenerator, weights: &[f64], f: &[f64]) -> Result<f64> {
    let var = weighted_variance(weights, f);
    if var <= 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok(dirichlet_form(gen, weights, f).value() / var)
}

/// Outcome of the comparison between the complete-graph Dirichlet form and
/// the amplified ring form.
#[derive(Clone, Copy, Debug)]
pub struct ComparisonReport {
    /// Complete-graph form 𝒟(f,f).
    pub lhs: f64,
    /// 2·e^{3β}·N²·D(f,f) with D the ring form.
    pub rhs: f64,
    pub holds: bool,
}

/// Check 𝒟(f,f) ≤ 2e^{3β}N²·D(f,f) for one test function. The check exists
/// to falsify the implementation, not the inequality.
pub fn comparison_check(
    ring: &SparseGenerator,
    complete: &SparseGenerator,
    ens: &GibbsEnsemble,
    f: &[f64],
) -> ComparisonReport {
    let lhs = dirichlet_form(complete, ens.weights(), f).value();
    let n2 = (ens.n() * ens.n()) as f64;
    let rhs =
        2.0 * (3.0 * ens.beta()).exp() * n2 * dirichlet_form(ring, ens.weights(), f).value();
    ComparisonReport {
        lhs,
        rhs,
        holds: lhs <= rhs + 1e-12,
    }
}
