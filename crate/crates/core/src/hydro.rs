//! Deterministic integrator for the conservative drift-diffusion system on
//! the periodic grid,
//!
//!     ∂_t ρ_A + β ∇[ρ_A (ρ_C − ρ_B)] = Δρ_A,   and cyclically for B, C,
//!
//! with conservation and free-energy descent checks. The drift is
//! discretized in divergence form (face fluxes from averaged cell
//! products), so per-channel grid means are conserved to round-off; the
//! default scheme treats diffusion implicitly through a cyclic tridiagonal
//! solve and the drift explicitly.

use crate::error::{Error, Result};
use crate::functional::{free_energy, DensityProfile, ProfileKind};
use serde::Serialize;
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Scheme {
    Explicit,
    SemiImplicit,
}

#[derive(Clone, Copy, Debug)]
pub struct HydroOptions {
    pub scheme: Scheme,
    /// Time step; defaults to the largest stable step for the scheme.
    pub dt: Option<f64>,
    /// Record a trace point every this many steps.
    pub output_every: usize,
}

impl Default for HydroOptions {
    fn default() -> Self {
        Self {
            scheme: Scheme::SemiImplicit,
            dt: None,
            output_every: 64,
        }
    }
}

/// One record of the evolution trace.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TracePoint {
    pub t: f64,
    pub free_energy: f64,
    pub mass: [f64; 3],
    pub residual: f64,
    /// |k|-th Fourier amplitudes of the centered B channel, k = 1..4.
    pub modes: [f64; 4],
}

/// Largest admissible step for the scheme on grid spacing h at inverse
/// temperature β (drift speeds are bounded by β since |ρ_C − ρ_B| ≤ 1):
/// explicit needs the diffusive bound 0.4·h² and the advective h/(2β);
/// semi-implicit only the advective-against-diffusion bound 1.5/β².
pub fn stable_dt(scheme: Scheme, m: usize, beta: f64) -> f64 {
    let h = 1.0 / m as f64;
    let speed = beta.max(1e-12);
    match scheme {
        Scheme::Explicit => (0.4 * h * h).min(0.5 * h / speed),
        Scheme::SemiImplicit => h.min(1.5 / (speed * speed)),
    }
}

fn drift_products(a: &[f64], b: &[f64], c: &[f64]) -> [Vec<f64>; 3] {
    let m = a.len();
    let mut pa = vec![0.0; m];
    let mut pb = vec![0.0; m];
    let mut pc = vec![0.0; m];
    for j in 0..m {
        pa[j] = a[j] * (c[j] - b[j]);
        pb[j] = b[j] * (a[j] - c[j]);
        pc[j] = c[j] * (b[j] - a[j]);
    }
    [pa, pb, pc]
}

fn rhs_channel(rho: &[f64], product: &[f64], beta: f64, out: &mut [f64]) {
    let m = rho.len();
    let h = 1.0 / m as f64;
    for j in 0..m {
        let jp = (j + 1) % m;
        let jm = (j + m - 1) % m;
        let drift = -beta * (product[jp] - product[jm]) / (2.0 * h);
        let diffusion = (rho[jp] - 2.0 * rho[j] + rho[jm]) / (h * h);
        out[j] = drift + diffusion;
    }
}

/// Time derivative of the three channels at one instant.
pub fn hydro_rhs(p: &DensityProfile, beta: f64) -> [Vec<f64>; 3] {
    let m = p.grid_size();
    let products = drift_products(&p.a, &p.b, &p.c);
    let mut out = [vec![0.0; m], vec![0.0; m], vec![0.0; m]];
    rhs_channel(&p.a, &products[0], beta, &mut out[0]);
    rhs_channel(&p.b, &products[1], beta, &mut out[1]);
    rhs_channel(&p.c, &products[2], beta, &mut out[2]);
    out
}

/// Supremum norm of the time derivative: zero exactly at stationary points.
pub fn stationarity_residual(p: &DensityProfile, beta: f64) -> f64 {
    hydro_rhs(p, beta)
        .iter()
        .flat_map(|ch| ch.iter())
        .fold(0.0f64, |acc, &v| acc.max(v.abs()))
}

/// Solve (I − r·Δ_h)x = d on the periodic grid (Δ_h the 3-point stencil
/// without the 1/h² factor folded into r), by the Thomas algorithm with a
/// Sherman-Morrison correction for the periodic corners.
fn cyclic_tridiagonal_solve(r: f64, d: &[f64], x: &mut [f64]) {
    let m = d.len();
    let diag = 1.0 + 2.0 * r;
    let off = -r;
    if m == 1 {
        x[0] = d[0];
        return;
    }
    // B = tridiag(off, diag, off) with corners `off`; write B = T + u·vᵀ
    // with u = (γ, 0, …, 0, off)ᵀ, v = (1, 0, …, 0, off/γ)ᵀ.
    let gamma = -diag;
    let mut dd = vec![diag; m];
    dd[0] = diag - gamma;
    dd[m - 1] = diag - off * off / gamma;

    let thomas = |dd: &[f64], rhs: &[f64], out: &mut Vec<f64>| {
        let mut cp = vec![0.0; m];
        out.resize(m, 0.0);
        cp[0] = off / dd[0];
        out[0] = rhs[0] / dd[0];
        for i in 1..m {
            let denom = dd[i] - off * cp[i - 1];
            cp[i] = off / denom;
            out[i] = (rhs[i] - off * out[i - 1]) / denom;
        }
        for i in (0..m - 1).rev() {
            let next = out[i + 1];
            out[i] -= cp[i] * next;
        }
    };

    let mut y = Vec::new();
    thomas(&dd, d, &mut y);
    let mut u = vec![0.0; m];
    u[0] = gamma;
    u[m - 1] = off;
    let mut q = Vec::new();
    thomas(&dd, &u, &mut q);
    let vy = y[0] + off / gamma * y[m - 1];
    let vq = q[0] + off / gamma * q[m - 1];
    let factor = vy / (1.0 + vq);
    for i in 0..m {
        x[i] = y[i] - factor * q[i];
    }
}

/// Final state and trace of the evolution from `initial` to time `horizon`.
pub fn integrate_hydro(
    initial: &DensityProfile,
    beta: f64,
    horizon: f64,
    opts: &HydroOptions,
) -> Result<(DensityProfile, Vec<TracePoint>)> {
    let m = initial.grid_size();
    let bound = stable_dt(opts.scheme, m, beta);
    let dt = match opts.dt {
        Some(dt) => {
            if dt > bound * (1.0 + 1e-12) {
                return Err(Error::CflViolation {
                    dt,
                    bound,
                    scheme: match opts.scheme {
                        Scheme::Explicit => "explicit",
                        Scheme::SemiImplicit => "semi-implicit",
                    },
                });
            }
            dt
        }
        None => bound,
    };
    let steps = (horizon / dt).ceil() as usize;
    let dt = horizon / steps as f64;

    let mut a = initial.a.clone();
    let mut b = initial.b.clone();
    let mut c = initial.c.clone();
    let mut trace = Vec::new();
    let record =
        |t: f64, a: &[f64], b: &[f64], c: &[f64], trace: &mut Vec<TracePoint>| {
            let p = DensityProfile {
                kind: ProfileKind::SmoothSamples,
                a: a.to_vec(),
                b: b.to_vec(),
                c: c.to_vec(),
            };
            let mf = m as f64;
            let mut modes = [0.0f64; 4];
            for (ki, mode) in modes.iter_mut().enumerate() {
                let k = ki + 1;
                let (mut re, mut im) = (0.0, 0.0);
                for (j, &v) in b.iter().enumerate() {
                    let ang = 2.0 * PI * (k * j % m) as f64 / mf;
                    re += (v - 1.0 / 3.0) * ang.cos();
                    im += (v - 1.0 / 3.0) * ang.sin();
                }
                *mode = (re * re + im * im).sqrt() / mf;
            }
            trace.push(TracePoint {
                t,
                free_energy: free_energy(&p, beta),
                mass: p.means(),
                residual: stationarity_residual(&p, beta),
                modes,
            });
        };
    record(0.0, &a, &b, &c, &mut trace);

    let h = 1.0 / m as f64;
    let r = dt / (h * h);
    let mut rhs_buf = vec![0.0; m];
    let mut star = vec![0.0; m];
    for step in 1..=steps {
        let products = drift_products(&a, &b, &c);
        match opts.scheme {
            Scheme::Explicit => {
                for (channel, product) in
                    [(&mut a, &products[0]), (&mut b, &products[1]), (&mut c, &products[2])]
                {
                    rhs_channel(channel, product, beta, &mut rhs_buf);
                    for j in 0..m {
                        channel[j] += dt * rhs_buf[j];
                    }
                }
            }
            Scheme::SemiImplicit => {
                for (channel, product) in
                    [(&mut a, &products[0]), (&mut b, &products[1]), (&mut c, &products[2])]
                {
                    // Explicit divergence-form drift, implicit diffusion.
                    for j in 0..m {
                        let jp = (j + 1) % m;
                        let jm = (j + m - 1) % m;
                        star[j] = channel[j]
                            - dt * beta * (product[jp] - product[jm]) / (2.0 * h);
                    }
                    cyclic_tridiagonal_solve(r, &star, channel);
                }
            }
        }
        for (cell, vals) in a.iter().zip(b.iter().zip(c.iter())).enumerate() {
            let (va, (vb, vc)) = vals;
            if !(va.is_finite() && vb.is_finite() && vc.is_finite()) {
                return Err(Error::NonFinite { step, cell });
            }
        }
        if step % opts.output_every == 0 || step == steps {
            record(step as f64 * dt, &a, &b, &c, &mut trace);
        }
    }
    let p = DensityProfile::new(ProfileKind::SmoothSamples, a, b, c)?;
    Ok((p, trace))
}

/// Exponential growth rate of the k = 1 mode of a slightly perturbed
/// homogeneous profile: positive above the instability threshold, negative
/// below. Measured by regression of the log-amplitude over the window
/// after one wash-out window for the decaying branch.
pub fn mode_growth_rate(beta: f64, m: usize, window: f64) -> Result<f64> {
    let eps = 1e-7;
    let mut a = vec![0.0; m];
    let mut b = vec![0.0; m];
    let mut c = vec![0.0; m];
    for j in 0..m {
        let ang = (2.0 * PI * j as f64 / m as f64).cos();
        a[j] = 1.0 / 3.0 + 2.0 * eps * ang;
        b[j] = 1.0 / 3.0 - eps * ang;
        c[j] = 1.0 / 3.0 - eps * ang;
    }
    let p = DensityProfile::new(ProfileKind::SmoothSamples, a, b, c)?;
    let opts = HydroOptions {
        scheme: Scheme::SemiImplicit,
        dt: None,
        output_every: 1,
    };
    let (_, trace) = integrate_hydro(&p, beta, 2.0 * window, &opts)?;
    let pts: Vec<(f64, f64)> = trace
        .iter()
        .filter(|tp| tp.t >= window && tp.modes[0] > 0.0)
        .map(|tp| (tp.t, tp.modes[0].ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::InvalidParameter(
            "mode amplitude vanished during the growth-rate window".into(),
        ));
    }
    let n = pts.len() as f64;
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ym = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (t, y) in pts {
        num += (t - tm) * (y - ym);
        den += (t - tm) * (t - tm);
    }
    Ok(num / den)
}

/// Empirical instability threshold of the k = 1 mode: bisection of the
/// measured growth rate over β.
pub fn instability_threshold(m: usize, beta_lo: f64, beta_hi: f64, tol: f64) -> Result<f64> {
    let window = 0.15;
    let mut lo = beta_lo;
    let mut hi = beta_hi;
    let rate_lo = mode_growth_rate(lo, m, window)?;
    let rate_hi = mode_growth_rate(hi, m, window)?;
    if rate_lo >= 0.0 || rate_hi <= 0.0 {
        return Err(Error::BracketFailure(format!(
            "growth rates {rate_lo:.3e} / {rate_hi:.3e} do not bracket the threshold"
        )));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mode_growth_rate(mid, m, window)? > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
