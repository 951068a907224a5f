//! Concentration probe for the k = 1 order parameter: near zero below the
//! transition, near the minimizer's Fourier amplitude above it.

use crate::{config, output, RunContext};
use abc_ring::dynamics::{derive_stream, order_parameter, sample_series};
use abc_ring::functional::{critical_beta, solve_minimizer, Minimizer, OrbitOptions};
use abc_ring::generator::Graph;
use abc_ring::lattice::SpeciesConfiguration;
use anyhow::Result;
use clap::Args;
use rayon::prelude::*;
use serde::Serialize;

#[derive(Args, Debug, Clone, Serialize)]
pub struct LlnArgs {
    /// System size.
    #[arg(long)]
    pub n: Option<usize>,

    /// Inverse temperatures (ideally straddling the transition).
    #[arg(long, value_delimiter = ',')]
    pub beta: Vec<f64>,

    /// Sampling horizon per replica, in units of N².
    #[arg(long, default_value_t = 3.0)]
    pub horizon_n2: f64,

    /// Independent replicas.
    #[arg(long, default_value_t = 4)]
    pub replicas: usize,
}

#[derive(Serialize)]
pub struct LlnPoint {
    pub beta: f64,
    pub n: usize,
    pub mean_modulus: f64,
    pub standard_error: f64,
    pub subcritical_bound: f64,
    /// |∫(ρ*_B − 1/3)e^{2πir}dr| from the minimizer, above the transition.
    pub target_amplitude: Option<f64>,
    pub samples: usize,
    /// What concentrates is the modulus, not the phase: the limiting
    /// measure mixes uniformly over translates of the segregated profile.
    pub note: &'static str,
}

pub fn probe(
    seed: u64,
    n: usize,
    beta: f64,
    horizon_n2: f64,
    replicas: usize,
) -> Result<LlnPoint> {
    // The modulus concentrates on the hydrodynamic time scale; replicas
    // start from the segregated block above the transition (close to the
    // typical shape) and from stripes below it.
    let supercritical = beta > critical_beta();
    let z0 = if supercritical {
        SpeciesConfiguration::segregated(n)?
    } else {
        SpeciesConfiguration::striped(n)?
    };
    let spacing = (n * n) as f64 / 200.0;
    let burn = (n * n) as f64;
    let count = ((horizon_n2 * (n * n) as f64 + burn) / spacing) as usize;
    let skip = (burn / spacing) as usize;

    let replica_means: Vec<f64> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let mut rng = derive_stream(seed, r as u64 + 1);
            let series = sample_series(
                &z0,
                beta,
                Graph::Ring,
                spacing,
                count,
                |z| order_parameter(z, 1),
                &mut rng,
            );
            series[skip..].iter().sum::<f64>() / (series.len() - skip) as f64
        })
        .collect();
    let mean = replica_means.iter().sum::<f64>() / replicas as f64;
    let se = if replicas > 1 {
        let ss: f64 = replica_means.iter().map(|m| (m - mean) * (m - mean)).sum();
        (ss / (replicas as f64 * (replicas - 1) as f64)).sqrt()
    } else {
        0.0
    };

    let target_amplitude = if supercritical {
        match solve_minimizer(beta, &OrbitOptions::default())? {
            Minimizer::Solution { record, .. } => Some(record.b_mode_amplitude),
            Minimizer::NoNontrivialSolution => None,
        }
    } else {
        None
    };

    Ok(LlnPoint {
        beta,
        n,
        mean_modulus: mean,
        standard_error: se,
        subcritical_bound: 3.0 / (n as f64).sqrt(),
        target_amplitude,
        samples: (count - skip) * replicas,
        note: "the modulus concentrates; the phase mixes uniformly over translates",
    })
}

pub fn run(ctx: &RunContext, args: &LlnArgs) -> Result<()> {
    let table = ctx.config.table("lln");
    let n = config::merge(args.n, table, "n")?.unwrap_or(120);
    let betas = if args.beta.is_empty() {
        config::merge(None, table, "beta")?.unwrap_or_else(|| vec![5.0, 15.0])
    } else {
        args.beta.clone()
    };

    let mut points = Vec::new();
    let mut csv = ctx.out.csv(
        "lln.csv",
        "beta,N,mean_modulus,standard_error,subcritical_bound,target_amplitude",
    )?;
    for &beta in &betas {
        let point = probe(ctx.seed, n, beta, args.horizon_n2, args.replicas)?;
        csv.row(&[
            format!("{beta}"),
            n.to_string(),
            format!("{:.8e}", point.mean_modulus),
            format!("{:.3e}", point.standard_error),
            format!("{:.6e}", point.subcritical_bound),
            point
                .target_amplitude
                .map(|a| format!("{a:.8e}"))
                .unwrap_or_default(),
        ])?;
        println!(
            "beta={beta}: modulus {:.5} (target {:?}); the modulus, not the phase, concentrates: \
             the measure mixes uniformly over translates",
            point.mean_modulus, point.target_amplitude
        );
        points.push(point);
    }
    csv.finish()?;
    ctx.out.json("lln_report.json", &points)?;
    output::write_manifest(&ctx.out, "lln", ctx.seed, args)?;
    Ok(())
}
