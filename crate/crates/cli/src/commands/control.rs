use std::f64::consts::PI;

use zktorus::control::{
    build_feedback, full_torus_rate, simulate_closed_loop, synthesize_control, ControlProblem,
    FeedbackSummary,
};
use zktorus::observability::{ObservationRegion, SpatialSet};
use zktorus::Error;

use crate::commands::Env;
use crate::config::{ControlConfig, StabilizeConfig};
use crate::error::{CliError, CliResult, Context};
use crate::output::fmt_f64;

/// Writes the kernel certificate of a singular Gramian before failing.
fn singular<T>(env: &mut Env<'_>, what: &'static str, err: Error) -> CliResult<T> {
    if let Error::GramianSingular(cert) = &err {
        env.out
            .write_json("kernel_certificate.json", cert.as_ref())?;
    }
    Err(CliError::Core {
        context: what,
        source: err,
    })
}

/// Spatial sample points on the control support.
fn support_points(region: &ObservationRegion, per_axis: usize) -> Vec<(f64, f64)> {
    let k = per_axis.max(1);
    let grid = |a: f64, b: f64| -> Vec<f64> {
        (0..k)
            .map(|j| a + (b - a) * (j as f64 + 0.5) / k as f64)
            .collect()
    };
    match region {
        ObservationRegion::VerticalSegment { x0, .. } => {
            grid(0.0, 2.0 * PI).into_iter().map(|y| (*x0, y)).collect()
        }
        ObservationRegion::HorizontalSegments { segments } => segments
            .iter()
            .flat_map(|s| grid(0.0, 2.0 * PI).into_iter().map(move |x| (x, s.y)))
            .collect(),
        ObservationRegion::SpaceTimeSet { spatial, .. } => {
            let (xs, ys) = match *spatial {
                SpatialSet::Rectangle { x, y } => (grid(x[0], x[1]), grid(y[0], y[1])),
                SpatialSet::Disc { center, radius } => (
                    grid(center[0] - radius, center[0] + radius),
                    grid(center[1] - radius, center[1] + radius),
                ),
            };
            xs.iter()
                .flat_map(|&x| ys.iter().map(move |&y| (x, y)))
                .filter(|&(x, y)| spatial.contains(x, y))
                .collect()
        }
    }
}

pub fn control(cfg: &ControlConfig, env: &mut Env<'_>) -> CliResult<()> {
    let z0 = cfg.z0.build(cfg.truncation, &mut env.rng, env.base)?;
    let z_t = cfg.z_t.build(cfg.truncation, &mut env.rng, env.base)?;
    let problem = ControlProblem {
        region: cfg.region.clone(),
        horizon: cfg.horizon,
        truncation: cfg.truncation,
        z0,
        z_t,
    };
    let out = match synthesize_control(&problem) {
        Ok(o) => o,
        Err(e) => return singular(env, "synthesizing control", e),
    };
    let points = support_points(&out.signal.region, cfg.samples.space);
    let steps = cfg.samples.time.max(2);
    let mut rows = Vec::with_capacity(points.len() * steps);
    for k in 0..steps {
        let t = cfg.horizon * k as f64 / (steps - 1) as f64;
        for &(x, y) in &points {
            let v = out.signal.evaluate(x, y, t).context("sampling control")?;
            rows.push(vec![
                fmt_f64(t),
                fmt_f64(x),
                fmt_f64(y),
                fmt_f64(v.re),
                fmt_f64(v.im),
            ]);
        }
    }
    env.out
        .write_csv("control_samples.csv", &["t", "x", "y", "re", "im"], rows)?;
    env.out.write_json("control.json", &out)?;
    env.out.scalar("residual", out.residual);
    env.out.scalar("energy", out.energy);
    env.out.scalar("lambdaMin", out.lambda_min);
    env.out.scalar("lambdaMax", out.lambda_max);
    Ok(())
}

pub fn stabilize(cfg: &StabilizeConfig, env: &mut Env<'_>) -> CliResult<()> {
    let z0 = cfg.z0.build(cfg.truncation, &mut env.rng, env.base)?;
    let law = match build_feedback(&cfg.region, cfg.decay, cfg.horizon, cfg.truncation) {
        Ok(l) => l,
        Err(e) => return singular(env, "building feedback", e),
    };
    let max_omega = cfg.truncation.max_abs_omega().context("frequencies")? as f64;
    let dt = cfg.dt.unwrap_or(0.05 / (max_omega + law.feedback_norm));
    let trace = simulate_closed_loop(&law, &z0, cfg.t_end, dt).context("closed-loop simulation")?;
    let rate = trace.fitted_rate.map_or_else(String::new, fmt_f64);
    env.out.write_csv(
        "decay.csv",
        &["t", "norm", "fittedRate"],
        trace
            .times
            .iter()
            .zip(&trace.norms)
            .map(|(t, n)| vec![fmt_f64(*t), fmt_f64(*n), rate.clone()]),
    )?;
    env.out
        .write_json("feedback.json", &FeedbackSummary::from(&law))?;
    if let Some(r) = trace.fitted_rate {
        env.out.scalar("fittedRate", r);
    }
    if let ObservationRegion::SpaceTimeSet { spatial, .. } = &cfg.region {
        if *spatial == SpatialSet::full_torus() {
            env.out
                .scalar("closedFormRate", full_torus_rate(cfg.decay, cfg.horizon));
        }
    }
    env.out.scalar("decay", cfg.decay);
    env.out.scalar("dt", dt);
    env.out.scalar("feedbackNorm", law.feedback_norm);
    env.out.scalar("condition", law.condition());
    Ok(())
}
