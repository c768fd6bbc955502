use rayon::prelude::*;
use zktorus::observability::{assemble_gramian, observability_report, ObservabilityReport};
use zktorus::{NormWeight, Truncation};

use crate::commands::Env;
use crate::config::{ObserveConfig, SweepConfig};
use crate::error::{CliResult, Context};
use crate::output::fmt_f64;

const SWEEP_HEADER: [&str; 9] = [
    "maxM",
    "maxN",
    "excludeMZero",
    "modes",
    "C1",
    "C2",
    "C1KernelComplement",
    "kernelDim",
    "lambdaMin",
];

fn row(t: Truncation, r: &ObservabilityReport) -> Vec<String> {
    vec![
        t.max_m.to_string(),
        t.max_n.to_string(),
        t.exclude_m_zero.to_string(),
        t.mode_count().to_string(),
        fmt_f64(r.c1),
        fmt_f64(r.c2),
        r.c1_kernel_complement.map_or_else(String::new, fmt_f64),
        r.kernel_dim().to_string(),
        fmt_f64(r.lambda_min),
    ]
}

fn report(
    region: &zktorus::observability::ObservationRegion,
    t: Truncation,
    weight: NormWeight,
) -> CliResult<ObservabilityReport> {
    let g = assemble_gramian(region, t).context("assembling Gramian")?;
    observability_report(&g, weight).context("observability report")
}

pub fn observe(cfg: &ObserveConfig, env: &mut Env<'_>) -> CliResult<()> {
    let r = report(&cfg.region, cfg.truncation, cfg.weight)?;
    env.out.write_json("report.json", &r)?;
    env.out
        .write_csv("observe.csv", &SWEEP_HEADER, [row(cfg.truncation, &r)])?;
    env.out.scalar("C1", r.c1);
    env.out.scalar("C2", r.c2);
    env.out.scalar("lambdaMin", r.lambda_min);
    env.out.scalar("lambdaMax", r.lambda_max);
    env.out.scalar("kernelDim", r.kernel_dim() as f64);
    if let Some(c) = r.c1_kernel_complement {
        env.out.scalar("C1KernelComplement", c);
    }
    Ok(())
}

/// Sweep points run in parallel; rows keep the config order.
pub fn sweep(cfg: &SweepConfig, env: &mut Env<'_>) -> CliResult<()> {
    let list = cfg.truncation_list()?;
    let reports: Vec<ObservabilityReport> = list
        .par_iter()
        .map(|&t| report(&cfg.region, t, cfg.weight))
        .collect::<CliResult<_>>()?;
    env.out.write_csv(
        "sweep.csv",
        &SWEEP_HEADER,
        list.iter().zip(&reports).map(|(&t, r)| row(t, r)),
    )?;
    let c1: Vec<f64> = reports.iter().map(|r| r.c1).collect();
    env.out
        .scalar("minC1", c1.iter().cloned().fold(f64::INFINITY, f64::min));
    env.out.scalar(
        "maxC1",
        c1.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    );
    env.out.scalar("points", list.len() as f64);
    Ok(())
}
