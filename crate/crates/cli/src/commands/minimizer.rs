//! Free-energy minimizer profiles from the periodic-orbit shooting solver.

use crate::{config, output, RunContext};
use abc_ring::functional::{solve_minimizer, Minimizer, OrbitOptions};
use anyhow::Result;
use clap::Args;
use serde::Serialize;

#[derive(Args, Debug, Clone, Serialize)]
pub struct MinimizerArgs {
    /// Inverse temperatures to solve at.
    #[arg(long, value_delimiter = ',')]
    pub beta: Vec<f64>,

    /// Profile samples over the period.
    #[arg(long)]
    pub samples: Option<usize>,
}

#[derive(Serialize)]
struct SolveOutcome<'a> {
    beta: f64,
    solution: &'a str,
    record: Option<&'a abc_ring::functional::MinimizerRecord>,
}

pub fn run(ctx: &RunContext, args: &MinimizerArgs) -> Result<()> {
    let table = ctx.config.table("minimizer");
    let betas = if args.beta.is_empty() {
        config::merge(None, table, "beta")?.unwrap_or_else(|| vec![15.0])
    } else {
        args.beta.clone()
    };
    let samples = config::merge(args.samples, table, "samples")?.unwrap_or(2048);
    let opts = OrbitOptions {
        samples,
        ..OrbitOptions::default()
    };

    let mut outcomes = Vec::new();
    for &beta in &betas {
        match solve_minimizer(beta, &opts)? {
            Minimizer::NoNontrivialSolution => {
                outcomes.push((beta, None));
                println!("beta={beta}: no nontrivial minimizer");
            }
            Minimizer::Solution { profile, record } => {
                let tag = beta_tag(beta);
                let mut csv = ctx
                    .out
                    .csv(&format!("minimizer_{tag}.csv"), "r,rho_A,rho_B,rho_C")?;
                let m = profile.grid_size();
                for j in 0..m {
                    csv.row(&[
                        format!("{:.10}", j as f64 / m as f64),
                        format!("{:.12e}", profile.a[j]),
                        format!("{:.12e}", profile.b[j]),
                        format!("{:.12e}", profile.c[j]),
                    ])?;
                }
                csv.finish()?;
                println!(
                    "beta={beta}: period residual {:.2e}, free energy {:.6} < {:.6}",
                    record.period_residual, record.free_energy, record.free_energy_homogeneous
                );
                outcomes.push((beta, Some(record)));
            }
        }
    }
    let records: Vec<SolveOutcome> = outcomes
        .iter()
        .map(|(beta, rec)| SolveOutcome {
            beta: *beta,
            solution: if rec.is_some() { "profile" } else { "none" },
            record: rec.as_ref(),
        })
        .collect();
    ctx.out.json("minimizer_records.json", &records)?;
    output::write_manifest(&ctx.out, "minimizer", ctx.seed, args)?;
    Ok(())
}

pub fn beta_tag(beta: f64) -> String {
    format!("{beta}").replace('.', "p")
}
