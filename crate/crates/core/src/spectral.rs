//! Spectral gaps of reversible generators.
//!
//! The generator is symmetrized as S = W^{1/2} L W^{−1/2} (W the diagonal of
//! invariant weights), which shares its spectrum with L. Off-diagonal
//! entries of S are computed as the geometric mean √(q_ij·q_ji), which is
//! exactly symmetric in floating point and equals the similarity transform
//! under detailed balance. The gap is |second largest eigenvalue|.
//!
//! Two methods: a dense symmetric eigensolve below a configurable state cap,
//! and a block steepest-descent/LOBPCG iteration on −S with the known
//! ground state W^{1/2}·1 deflated, for state spaces far beyond the dense
//! range.

use crate::error::{Error, Result};
use crate::generator::SparseGenerator;
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

/// Default cap on the dense eigensolve.
pub const DENSE_CAP: usize = 5000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GapMethod {
    Dense,
    Iterative,
    /// Dense below the cap, iterative above it.
    Auto,
}

#[derive(Clone, Copy, Debug)]
pub struct GapEstimate {
    pub gap: f64,
    pub method: &'static str,
    /// Eigenvalue residual ‖Av − λv‖ for the iterative method, |λ₀| for
    /// the dense one (how far the known zero mode is from 0).
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct IterativeOptions {
    /// Residual tolerance relative to the Gershgorin bound of the operator.
    pub tol: f64,
    pub max_iterations: usize,
    pub block: usize,
    pub seed: u64,
}

impl Default for IterativeOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iterations: 100_000,
            block: 4,
            seed: 0x5EED_0001,
        }
    }
}

/// The positive semidefinite operator A = −S in compressed sparse rows.
/// Row structure mirrors the generator; `diag` holds the exit rates.
pub struct SymmetrizedOperator {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
    diag: Vec<f64>,
    /// Gershgorin bound: max_i (diag_i + Σ_j |s_ij|).
    pub norm_bound: f64,
}

impl SymmetrizedOperator {
    pub fn from_generator(gen: &SparseGenerator) -> Self {
        let dim = gen.dim();
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        let mut diag = Vec::with_capacity(dim);
        let mut norm_bound = 0.0f64;
        row_ptr.push(0);
        for i in 0..dim {
            let mut abssum = 0.0;
            for (j, q_ij, _) in gen.row(i) {
                let q_ji = gen
                    .rate(j, i)
                    .expect("reversible generator must store both jump directions");
                let s = (q_ij * q_ji).sqrt();
                cols.push(j as u32);
                vals.push(-s);
                abssum += s;
            }
            diag.push(gen.exit_rate(i));
            norm_bound = norm_bound.max(gen.exit_rate(i) + abssum);
            row_ptr.push(cols.len());
        }
        Self {
            dim,
            row_ptr,
            cols,
            vals,
            diag,
            norm_bound,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// out = A·x.
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        for i in 0..self.dim {
            let mut acc = self.diag[i] * x[i];
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[k] * x[self.cols[k] as usize];
            }
            out[i] = acc;
        }
    }

    fn dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            m[(i, i)] = self.diag[i];
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                m[(i, self.cols[k] as usize)] = self.vals[k];
            }
        }
        m
    }
}

/// All eigenvalues of the generator (of −A, so they are ≤ 0), descending.
pub fn dense_spectrum(gen: &SparseGenerator, cap: usize) -> Result<Vec<f64>> {
    if gen.dim() > cap {
        return Err(Error::DenseCapExceeded {
            dim: gen.dim(),
            cap,
        });
    }
    let a = SymmetrizedOperator::from_generator(gen).dense();
    let eig = SymmetricEigen::new(a);
    let mut evals: Vec<f64> = eig.eigenvalues.iter().map(|&v| -v).collect();
    evals.sort_by(|p, q| q.partial_cmp(p).unwrap());
    Ok(evals)
}

/// Dense gap plus the eigenfunction of the gap eigenvalue in the original
/// (unsymmetrized) coordinates, f = W^{−1/2}·v.
pub fn dense_gap_with_eigenfunction(
    gen: &SparseGenerator,
    weights: &[f64],
    cap: usize,
) -> Result<(GapEstimate, Vec<f64>)> {
    if gen.dim() > cap {
        return Err(Error::DenseCapExceeded {
            dim: gen.dim(),
            cap,
        });
    }
    let a = SymmetrizedOperator::from_generator(gen).dense();
    let eig = SymmetricEigen::new(a);
    // A = −S is PSD: smallest eigenvalue ≈ 0 (the ground state), the next
    // one is the gap.
    let mut order: Vec<usize> = (0..gen.dim()).collect();
    order.sort_by(|&p, &q| eig.eigenvalues[p].partial_cmp(&eig.eigenvalues[q]).unwrap());
    let zero_mode = eig.eigenvalues[order[0]];
    let gap = eig.eigenvalues[order[1]];
    let v = eig.eigenvectors.column(order[1]);
    let f: Vec<f64> = (0..gen.dim())
        .map(|i| v[i] / weights[i].sqrt())
        .collect();
    Ok((
        GapEstimate {
            gap,
            method: "dense",
            residual: zero_mode.abs(),
            iterations: 0,
        },
        f,
    ))
}

pub fn dense_gap(gen: &SparseGenerator, weights: &[f64], cap: usize) -> Result<GapEstimate> {
    dense_gap_with_eigenfunction(gen, weights, cap).map(|(g, _)| g)
}

/// Spectral gap by the requested method. `weights` are the normalized
/// invariant weights the generator is reversible for.
pub fn spectral_gap(
    gen: &SparseGenerator,
    weights: &[f64],
    method: GapMethod,
) -> Result<GapEstimate> {
    match method {
        GapMethod::Dense => dense_gap(gen, weights, DENSE_CAP),
        GapMethod::Iterative => iterative_gap(gen, weights, &IterativeOptions::default()),
        GapMethod::Auto => {
            if gen.dim() <= DENSE_CAP {
                dense_gap(gen, weights, DENSE_CAP)
            } else {
                iterative_gap(gen, weights, &IterativeOptions::default())
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn scale(x: &mut [f64], s: f64) {
    for xi in x.iter_mut() {
        *xi *= s;
    }
}

/// Smallest eigenvalue of A = −S restricted to the complement of the known
/// ground state, by LOBPCG with the constraint vector deflated at every
/// orthogonalization.
pub fn iterative_gap(
    gen: &SparseGenerator,
    weights: &[f64],
    opts: &IterativeOptions,
) -> Result<GapEstimate> {
    let op = SymmetrizedOperator::from_generator(gen);
    let n = op.dim();
    // Tiny problems: the subspace machinery needs room to breathe.
    let block = opts.block.clamp(1, ((n.saturating_sub(2)) / 3).max(1));
    if n <= 3 * block + 2 || n < 8 {
        return dense_gap(gen, weights, n);
    }

    // Ground state of A: the square-rooted weights, normalized.
    let mut ground: Vec<f64> = weights.iter().map(|&w| w.sqrt()).collect();
    let gn = dot(&ground, &ground).sqrt();
    scale(&mut ground, 1.0 / gn);

    let project_ground = |v: &mut [f64]| {
        let c = dot(v, &ground);
        axpy(v, -c, &ground);
    };

    let mut rng = ChaCha12Rng::seed_from_u64(opts.seed ^ (n as u64) << 1);
    let mut x: Vec<Vec<f64>> = (0..block)
        .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    // Orthonormalize the start block against the ground state and itself.
    for k in 0..block {
        let (done, rest) = x.split_at_mut(k);
        let col = &mut rest[0];
        project_ground(col);
        for prev in done.iter() {
            let c = dot(col, prev);
            axpy(col, -c, prev);
        }
        let nrm = dot(col, col).sqrt();
        scale(col, 1.0 / nrm);
    }

    let matvec = |v: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; n];
        op.apply(v, &mut out);
        out
    };

    let mut ax: Vec<Vec<f64>> = x.iter().map(|c| matvec(c)).collect();
    let mut p: Vec<Vec<f64>> = Vec::new();
    let mut ap: Vec<Vec<f64>> = Vec::new();

    let tol_abs = opts.tol * op.norm_bound;
    let mut last_lambda = f64::INFINITY;
    let mut stall = 0usize;

    for iter in 0..opts.max_iterations {
        // Ritz values on the current orthonormal X block.
        let lambdas: Vec<f64> = (0..block).map(|k| dot(&x[k], &ax[k])).collect();
        // Residuals r_k = A x_k − λ_k x_k.
        let mut residuals: Vec<Vec<f64>> = Vec::with_capacity(block);
        for k in 0..block {
            let mut r = ax[k].clone();
            axpy(&mut r, -lambdas[k], &x[k]);
            residuals.push(r);
        }
        let r0 = dot(&residuals[0], &residuals[0]).sqrt();

        let lambda0 = lambdas[0];
        if r0 <= tol_abs {
            return Ok(GapEstimate {
                gap: lambda0,
                method: "iterative",
                residual: r0,
                iterations: iter,
            });
        }
        // Stall detection: the eigenvalue stopped moving at rounding level
        // while the residual is already small.
        if (last_lambda - lambda0).abs() <= 1e-15 * lambda0.abs().max(1e-300) {
            stall += 1;
            if stall >= 50 && r0 <= 1e5 * tol_abs {
                return Ok(GapEstimate {
                    gap: lambda0,
                    method: "iterative",
                    residual: r0,
                    iterations: iter,
                });
            }
        } else {
            stall = 0;
        }
        last_lambda = lambda0;

        // Assemble the trial basis Z = [X | R | P] with cached A-products,
        // orthonormalized by modified Gram-Schmidt; the ground state is
        // projected out of every column (A maps it to 0, so the cached
        // products need no correction).
        let mut z: Vec<Vec<f64>> = Vec::with_capacity(3 * block);
        let mut az: Vec<Vec<f64>> = Vec::with_capacity(3 * block);
        let push_col = |mut v: Vec<f64>, mut av: Vec<f64>,
                        z: &mut Vec<Vec<f64>>, az: &mut Vec<Vec<f64>>| {
            project_ground(&mut v);
            // two Gram-Schmidt passes keep the basis orthonormal to
            // rounding even when columns nearly coincide
            for _ in 0..2 {
                for (q, aq) in z.iter().zip(az.iter()) {
                    let c = dot(&v, q);
                    axpy(&mut v, -c, q);
                    axpy(&mut av, -c, aq);
                }
            }
            let nrm = dot(&v, &v).sqrt();
            if nrm > 1e-10 {
                scale(&mut v, 1.0 / nrm);
                scale(&mut av, 1.0 / nrm);
                z.push(v);
                az.push(av);
            }
        };
        for k in 0..block {
            push_col(x[k].clone(), ax[k].clone(), &mut z, &mut az);
        }
        for k in 0..block {
            let av = matvec(&residuals[k]);
            push_col(residuals[k].clone(), av, &mut z, &mut az);
        }
        for k in 0..p.len() {
            push_col(p[k].clone(), ap[k].clone(), &mut z, &mut az);
        }

        let m = z.len();
        if m < block {
            return Err(Error::EigNonConvergence {
                residual: r0,
                iterations: iter,
            });
        }
        // Rayleigh-Ritz on the subspace.
        let mut t = DMatrix::zeros(m, m);
        for a in 0..m {
            for b in a..m {
                let v = dot(&z[a], &az[b]);
                t[(a, b)] = v;
                t[(b, a)] = v;
            }
        }
        let eig = SymmetricEigen::new(t);
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());

        let keep = block.min(m);
        let mut new_x: Vec<Vec<f64>> = Vec::with_capacity(keep);
        let mut new_ax: Vec<Vec<f64>> = Vec::with_capacity(keep);
        let mut new_p: Vec<Vec<f64>> = Vec::with_capacity(keep);
        let mut new_ap: Vec<Vec<f64>> = Vec::with_capacity(keep);
        for &idx in order.iter().take(keep) {
            let y = eig.eigenvectors.column(idx);
            let mut xv = vec![0.0; n];
            let mut axv = vec![0.0; n];
            let mut pv = vec![0.0; n];
            let mut apv = vec![0.0; n];
            for j in 0..m {
                let c = y[j];
                if c == 0.0 {
                    continue;
                }
                axpy(&mut xv, c, &z[j]);
                axpy(&mut axv, c, &az[j]);
                if j >= block {
                    axpy(&mut pv, c, &z[j]);
                    axpy(&mut apv, c, &az[j]);
                }
            }
            new_x.push(xv);
            new_ax.push(axv);
            new_p.push(pv);
            new_ap.push(apv);
        }
        x = new_x;
        ax = new_ax;
        p = new_p;
        ap = new_ap;
    }

    let lambdas: Vec<f64> = (0..block).map(|k| dot(&x[k], &ax[k])).collect();
    let mut r = ax[0].clone();
    axpy(&mut r, -lambdas[0], &x[0]);
    Err(Error::EigNonConvergence {
        residual: dot(&r, &r).sqrt(),
        iterations: opts.max_iterations,
    })
}
