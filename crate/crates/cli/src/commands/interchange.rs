//! Interchange-process suite: generator spectra on the symmetric group,
//! detailed-balance residuals, and the colorblind projection checks.

use crate::{config, output, RunContext};
use abc_ring::interchange::{
    build_interchange_generator_with_budget, interchange_balance_report, pushforward_check,
    ColorblindOracle, EnergyOracle, ZeroOracle,
};
use abc_ring::spectral::{dense_spectrum, spectral_gap, GapMethod};
use anyhow::{bail, Result};
use clap::Args;
use serde::Serialize;

#[derive(Args, Debug, Clone, Serialize)]
pub struct InterchangeArgs {
    /// Number of labels (states are the N! permutations).
    #[arg(long)]
    pub n: Option<usize>,

    /// Inverse temperature.
    #[arg(long)]
    pub beta: Option<f64>,

    /// Energy oracle: zero or colorblind.
    #[arg(long, default_value = "zero")]
    pub oracle: String,

    /// Export the generator in coordinate text form.
    #[arg(long)]
    pub export_matrix: bool,
}

#[derive(Serialize)]
struct InterchangeReport {
    n: usize,
    beta: f64,
    oracle: String,
    states: u64,
    gap: f64,
    low_spectrum: Vec<f64>,
    balance_int_residual: i64,
    balance_float_residual: f64,
    pushforward_discrepancy: Option<f64>,
}

pub fn run(ctx: &RunContext, args: &InterchangeArgs) -> Result<()> {
    let table = ctx.config.table("interchange");
    let n = config::merge(args.n, table, "n")?.unwrap_or(3);
    let beta = config::merge(args.beta, table, "beta")?.unwrap_or(0.0);
    if n > 8 {
        bail!("permutation suites are capped at N = 8 ({} states)", 40320);
    }

    let sys = match args.oracle.as_str() {
        "zero" => build_interchange_generator_with_budget(n, beta, &ZeroOracle, ctx.budget)?,
        "colorblind" => {
            let oracle = ColorblindOracle::new(n)?;
            // The declared bound is part of the oracle contract.
            let _ = oracle.gradient_bound();
            build_interchange_generator_with_budget(n, beta, &oracle, ctx.budget)?
        }
        other => bail!("unknown oracle '{other}' (use zero or colorblind)"),
    };
    let balance = interchange_balance_report(&sys);
    let gap = if sys.generator.dim() <= abc_ring::spectral::DENSE_CAP {
        spectral_gap(&sys.generator, &sys.weights, GapMethod::Dense)?
    } else {
        spectral_gap(&sys.generator, &sys.weights, GapMethod::Iterative)?
    };
    let low_spectrum = if sys.generator.dim() <= 720 {
        dense_spectrum(&sys.generator, 720)?
            .into_iter()
            .take(8)
            .collect()
    } else {
        Vec::new()
    };
    let pushforward = if args.oracle == "colorblind" && n % 3 == 0 && n <= 7 {
        Some(pushforward_check(n, beta)?.max_discrepancy)
    } else {
        None
    };

    if args.export_matrix {
        let mut buf = Vec::new();
        sys.generator.write_coordinate_text(&mut buf)?;
        ctx.out.text(
            &format!("interchange_n{n}_matrix.txt"),
            &String::from_utf8(buf)?,
        )?;
    }

    let report = InterchangeReport {
        n,
        beta,
        oracle: args.oracle.clone(),
        states: sys.indexing.total(),
        gap: gap.gap,
        low_spectrum,
        balance_int_residual: balance.max_int_residual,
        balance_float_residual: balance.max_float_residual,
        pushforward_discrepancy: pushforward,
    };
    ctx.out.json("interchange_report.json", &report)?;
    output::write_manifest(&ctx.out, "interchange", ctx.seed, args)?;
    println!(
        "S_{n}: {} states, gap {:.8}, balance residual {}",
        report.states, report.gap, report.balance_int_residual
    );
    Ok(())
}
