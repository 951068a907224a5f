//! Log-log slope of the exact gap in the system size at fixed β, with the
//! slow-mode Rayleigh upper bound tracked alongside in the supercritical
//! regime.

use crate::{config, output, RunContext};
use abc_ring::dynamics::test_function;
use abc_ring::ensemble::{GibbsEnsemble, StateIndexing};
use abc_ring::generator::{build_generator_with_budget, rayleigh_quotient, Graph};
use abc_ring::spectral::{spectral_gap, GapMethod};
use anyhow::{bail, Result};
use clap::Args;
use serde::Serialize;

#[derive(Args, Debug, Clone, Serialize)]
pub struct ScalingArgs {
    /// System sizes (at least four multiples of 3).
    #[arg(long, value_delimiter = ',')]
    pub n: Vec<usize>,

    /// Fixed inverse temperature.
    #[arg(long)]
    pub beta: Option<f64>,

    /// Also compute the cos-mode Rayleigh upper bound per N.
    #[arg(long)]
    pub upper_bound: bool,
}

#[derive(Serialize)]
pub struct ScalingReport {
    pub beta: f64,
    pub n: Vec<usize>,
    pub gaps: Vec<f64>,
    pub slope: f64,
    pub slope_residual: f64,
    pub quotients: Option<Vec<f64>>,
    pub quotient_slope: Option<f64>,
}

/// Least squares fit of y against x; returns (slope, rms residual).
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let xm = xs.iter().sum::<f64>() / n;
    let ym = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - xm) * (x - xm);
        sxy += (x - xm) * (y - ym);
    }
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let mut ss = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        let r = y - (slope * x + intercept);
        ss += r * r;
    }
    (slope, (ss / n).sqrt())
}

pub fn cos_mode_quotient(ens: &GibbsEnsemble, gen_ring: &abc_ring::generator::SparseGenerator) -> Result<f64> {
    let phi = |r: f64| (2.0 * std::f64::consts::PI * r).cos();
    let mut f = Vec::with_capacity(ens.total() as usize);
    let mut err = None;
    ens.indexing().for_each(|_, z| match test_function(z, phi) {
        Ok(v) => f.push(v),
        Err(e) => err = Some(e),
    });
    if let Some(e) = err {
        return Err(e.into());
    }
    Ok(rayleigh_quotient(gen_ring, ens.weights(), &f)?)
}

pub fn run(ctx: &RunContext, args: &ScalingArgs) -> Result<()> {
    let table = ctx.config.table("scaling");
    let n_list = if args.n.is_empty() {
        config::merge(None, table, "n")?.unwrap_or_else(|| vec![6, 9, 12, 15])
    } else {
        args.n.clone()
    };
    let beta = config::merge(args.beta, table, "beta")?.unwrap_or(0.0);
    if n_list.len() < 4 {
        bail!("scaling needs at least 4 system sizes, got {}", n_list.len());
    }
    for &n in &n_list {
        if n == 0 || n % 3 != 0 {
            return Err(abc_ring::Error::BadSiteCount(n).into());
        }
    }

    let mut gaps = Vec::new();
    let mut quotients = Vec::new();
    let mut csv = ctx
        .out
        .csv("scaling.csv", "N,beta,gap,cos_mode_quotient")?;
    for &n in &n_list {
        let ens = GibbsEnsemble::build_with_budget(StateIndexing::new(n)?, beta, ctx.budget)?;
        let gen = build_generator_with_budget(&ens, Graph::Ring, ctx.budget)?;
        let est = spectral_gap(&gen, ens.weights(), GapMethod::Auto)?;
        gaps.push(est.gap);
        let q = if args.upper_bound {
            let q = cos_mode_quotient(&ens, &gen)?;
            quotients.push(q);
            format!("{q:.12e}")
        } else {
            String::new()
        };
        csv.row(&[
            n.to_string(),
            format!("{beta}"),
            format!("{:.12e}", est.gap),
            q,
        ])?;
    }
    csv.finish()?;

    let xs: Vec<f64> = n_list.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = gaps.iter().map(|g| g.ln()).collect();
    let (slope, slope_residual) = log_log_slope(&xs, &ys);
    let quotient_slope = if args.upper_bound {
        let qys: Vec<f64> = quotients.iter().map(|q| q.ln()).collect();
        Some(log_log_slope(&xs, &qys).0)
    } else {
        None
    };
    let report = ScalingReport {
        beta,
        n: n_list,
        gaps,
        slope,
        slope_residual,
        quotients: args.upper_bound.then_some(quotients),
        quotient_slope,
    };
    ctx.out.json("scaling_report.json", &report)?;
    ctx.out.text(
        "plot_scaling.py",
        "#!/usr/bin/env python3\n\
         # Log-log gap scaling plot for scaling.csv placed alongside.\n\
         import csv\n\
         import matplotlib.pyplot as plt\n\
         ns, gaps = [], []\n\
         with open('scaling.csv') as fh:\n\
             rows = [r for r in csv.reader(fh) if r and not r[0].startswith('#')]\n\
         for row in rows[1:]:\n\
             ns.append(float(row[0]))\n\
             gaps.append(float(row[2]))\n\
         plt.loglog(ns, gaps, 'o-')\n\
         plt.xlabel('N')\n\
         plt.ylabel('spectral gap')\n\
         plt.savefig('scaling.png', dpi=160)\n",
    )?;
    output::write_manifest(&ctx.out, "scaling", ctx.seed, args)?;
    println!(
        "slope {slope:.4} (residual {slope_residual:.2e}) over {} sizes",
        report.n.len()
    );
    Ok(())
}
