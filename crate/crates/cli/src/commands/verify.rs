use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use rand::Rng;
use zktorus::control::{
    build_feedback, check_h2_operators, controllability_gramian, full_torus_rate,
    full_torus_region, reversed_observability_gramian, simulate_closed_loop,
    transposition_identity, verify_h2_bound, ControlSignal,
};
use zktorus::gap_sparse::{q_form, q_identity_56};
use zktorus::linalg::{hermitian_defect, hermitian_eigen};
use zktorus::observability::{
    assemble_gramian, HorizontalSegment, Interval, ObservationRegion, SpatialSet,
};
use zktorus::{omega, ModeIndex, SpectralState, Truncation, PARSEVAL};

use crate::commands::Env;
use crate::config::VerifyConfig;
use crate::error::{CliError, CliResult, Context};
use crate::quadrature::observed_energy;

fn rel_diff(a: &SpectralState, b: &SpectralState) -> f64 {
    let d: f64 = a
        .coeffs()
        .iter()
        .zip(b.coeffs())
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt();
    d / a.coeff_norm().max(f64::MIN_POSITIVE)
}

fn regions() -> Vec<(&'static str, ObservationRegion, Truncation)> {
    let long = Interval::new(0.0, 2.0 * PI);
    let short = Interval::new(0.0, 1.0);
    vec![
        (
            "vertical",
            ObservationRegion::vertical(1.1, long),
            Truncation::square(3),
        ),
        (
            "twoHorizontal",
            ObservationRegion::horizontal(vec![
                HorizontalSegment {
                    y: 0.3,
                    interval: long,
                },
                HorizontalSegment {
                    y: 0.3 + SQRT_2 * PI,
                    interval: long,
                },
            ]),
            Truncation::new(3, 3, true),
        ),
        (
            "rectangle",
            ObservationRegion::space_time(
                SpatialSet::Rectangle {
                    x: [0.5, 2.5],
                    y: [1.0, 4.0],
                },
                short,
            ),
            Truncation::square(2),
        ),
        (
            "disc",
            ObservationRegion::space_time(
                SpatialSet::Disc {
                    center: [3.0, 2.0],
                    radius: 1.0,
                },
                short,
            ),
            Truncation::square(2),
        ),
    ]
}

/// The invariant suite; every check is recorded in the manifest.
pub fn run(cfg: &VerifyConfig, env: &mut Env<'_>) -> CliResult<()> {
    let samples = cfg.samples.max(1);

    // Isometry and group law.
    let t = Truncation::square(5);
    let mut drift = 0.0f64;
    for _ in 0..samples {
        let z = SpectralState::random(t, &mut env.rng);
        let (a, b) = (
            env.rng.random_range(-10.0..10.0),
            env.rng.random_range(-10.0..10.0),
        );
        let za = z.evolve(a).context("evolve")?;
        drift = drift.max((za.coeff_norm() - z.coeff_norm()).abs() / z.coeff_norm());
        let two = za.evolve(b).context("evolve")?;
        drift = drift.max(rel_diff(&z.evolve(a + b).context("evolve")?, &two));
    }
    env.out.check(
        "isometryGroupLaw",
        drift < 1e-12,
        format!("max drift {drift:.3e}"),
    );

    // Frequency-difference form and its completed square.
    let (mut q_bad, mut id_bad) = (0, 0);
    for k in -6i64..=6 {
        for l in -6i64..=6 {
            for m in -6i64..=6 {
                for n in -6i64..=6 {
                    let diff = omega(ModeIndex::new(m + k, n + l)).context("omega")?
                        - omega(ModeIndex::new(m, n)).context("omega")?;
                    if q_form(k, l, m, n).context("Q")? != diff {
                        q_bad += 1;
                    }
                    if k != 0 && !q_identity_56(k, l, m, n).context("identity")?.holds() {
                        id_bad += 1;
                    }
                }
            }
        }
    }
    env.out.check(
        "qFormDifference",
        q_bad == 0,
        format!("{q_bad} mismatches on [-6,6]^4"),
    );
    env.out.check(
        "completedSquare",
        id_bad == 0,
        format!("{id_bad} failures on [-6,6]^4"),
    );

    // Gramians against brute-force quadrature.
    for (name, region, trunc) in regions() {
        let g = assemble_gramian(&region, trunc).context("assembling Gramian")?;
        let norm = g.matrix.norm();
        let psd = hermitian_defect(&g.matrix) <= 1e-14 * norm
            && hermitian_eigen(&g.matrix).context("eigen")?.min() >= -1e-10 * norm;
        let mut worst = 0.0f64;
        for _ in 0..samples.min(5) {
            let z = SpectralState::random(trunc, &mut env.rng);
            let form = g.energy(&z).context("energy")?;
            worst = worst.max((form - observed_energy(&region, &z)).abs() / form);
        }
        env.out.check(
            &format!("gramianQuadrature.{name}"),
            psd && worst < 1e-8,
            format!("hermitian psd {psd}, max relative deviation {worst:.3e}"),
        );
    }

    // Transposition identity and Gramian duality on a rectangle.
    let trunc = Truncation::new(2, 2, true);
    let horizon = 1.5;
    let rect = ObservationRegion::space_time(
        SpatialSet::Rectangle {
            x: [0.5, 2.5],
            y: [1.0, 4.0],
        },
        Interval::new(0.0, horizon),
    );
    let mut worst = 0.0f64;
    for _ in 0..samples.min(10) {
        let pieces = (0..3)
            .map(|_| SpectralState::random(trunc, &mut env.rng))
            .collect();
        let v = ControlSignal::piecewise(rect.clone(), horizon, pieces);
        let z0 = SpectralState::random(trunc, &mut env.rng);
        let u0 = SpectralState::random(trunc, &mut env.rng);
        let rep = transposition_identity(&z0, &v, &u0, horizon).context("transposition")?;
        worst = worst.max(rep.relative_residual);
    }
    env.out.check(
        "transpositionIdentity",
        worst < 1e-9,
        format!("max residual {worst:.3e}"),
    );
    let wc = controllability_gramian(&rect, horizon, trunc).context("controllability Gramian")?;
    let wo = reversed_observability_gramian(&rect, horizon, trunc).context("reversed Gramian")?
        / Complex64::from(PARSEVAL);
    let dual = (wc - wo).iter().fold(0.0f64, |a, z| a.max(z.norm()));
    env.out.check(
        "gramianDuality",
        dual < 1e-12,
        format!("max entry difference {dual:.3e}"),
    );

    // Full-torus stabilization against its closed-form rate.
    let tt = Truncation::new(2, 2, true);
    let law =
        build_feedback(&full_torus_region(2.0 * PI), 1.0, 2.0 * PI, tt).context("feedback")?;
    let z0 = SpectralState::random(tt, &mut env.rng);
    let dt = 0.05 / (tt.max_abs_omega().context("frequencies")? as f64 + law.feedback_norm);
    let fitted = simulate_closed_loop(&law, &z0, 4.0, dt)
        .context("closed loop")?
        .fitted_rate
        .unwrap_or(f64::NAN);
    let exact = full_torus_rate(1.0, 2.0 * PI);
    env.out.check(
        "fullTorusDecay",
        (fitted / exact - 1.0).abs() < 0.05,
        format!("fitted {fitted:.6}, closed form {exact:.6}"),
    );

    // Resolvent bound.
    let h2 = verify_h2_bound(Truncation::new(10_000, 100, false)).context("H2 sums")?;
    env.out.check(
        "h2Sum",
        h2.holds,
        format!("max sum + tail {:.6}", h2.max_total),
    );
    let ops =
        check_h2_operators(Truncation::square(4), samples, &mut env.rng).context("H2 operators")?;
    env.out.check(
        "h2Operators",
        ops.holds,
        format!(
            "worst ratio open {:.4}, vertical {:.4}",
            ops.open_set_worst_ratio, ops.vertical_worst_ratio
        ),
    );
    env.out.scalar("h2MaxTotal", h2.max_total);

    let failed = env.out.checks().iter().filter(|c| !c.passed).count();
    let total = env.out.checks().len();
    env.out.scalar("checksPassed", (total - failed) as f64);
    env.out.scalar("checksFailed", failed as f64);
    if failed > 0 {
        return Err(CliError::ChecksFailed { failed, total });
    }
    Ok(())
}
