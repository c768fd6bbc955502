//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p zktorus --test acceptance`.

mod common;

use std::f64::consts::{PI, SQRT_2};
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;
use zktorus::control::{
    build_feedback, check_h2_operators, full_torus_rate, full_torus_region, simulate_closed_loop,
    synthesize_control, transposition_identity, verify_h2_bound, ControlProblem, ControlSignal,
};
use zktorus::diophantine::{certify_bad_approx, IrrationalSpec};
use zktorus::gap_sparse::{
    build_sparse_cover, classify_b_set, enumerate_b_set, q_identity_56, truncated_cube_gap,
    CoverOptions, FrequencyFamily, PartKind,
};
use zktorus::linalg::hermitian_eigen;
use zktorus::observability::{
    assemble_gramian, horizontal_weighted_sweep, observability_report, HorizontalSegment, Interval,
    KernelKind, ObservationRegion, SpatialSet,
};
use zktorus::{omega, Error, ModeIndex, NormWeight, SpectralState, Truncation};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

type Check = fn() -> Outcome;

fn two_segments(gap: f64) -> Vec<HorizontalSegment> {
    let iv = Interval::new(0.0, 2.0 * PI);
    vec![
        HorizontalSegment {
            y: 0.3,
            interval: iv,
        },
        HorizontalSegment {
            y: 0.3 + gap,
            interval: iv,
        },
    ]
}

fn c01_frequency_differences() -> Outcome {
    let mut bad = 0;
    for m in -50..=50i64 {
        for n in -50..=50i64 {
            let lib =
                omega(ModeIndex::new(m + 1, n)).unwrap() - omega(ModeIndex::new(m, n)).unwrap();
            let oracle = omega_oracle(m + 1, n) - omega_oracle(m, n);
            let formula = 3 * m * (m + 1) + n * n;
            if lib as i128 != oracle || lib != formula {
                bad += 1;
            }
        }
    }
    outcome(bad == 0, format!("{bad} mismatches over 101^2 modes"))
}

fn c02_truncated_cube_gap() -> Outcome {
    let mut rows = Vec::new();
    let mut pass = true;
    for m in 1..=10u64 {
        let lib = truncated_cube_gap(m).unwrap();
        let cubes: Vec<i128> = (m as i64..=4 * m as i64)
            .flat_map(|k| [k, -k])
            .map(|k| (k as i128).pow(3))
            .collect();
        let oracle = sorted_gap(cubes).unwrap();
        let claimed = 3 * m * (m - 1) + 1;
        pass &= lib as i128 == oracle && lib == claimed;
        rows.push(format!("m={m}: enumerated {oracle}, claimed {claimed}"));
    }
    outcome(pass, rows.join("; "))
}

fn c03_completed_square_identity() -> Outcome {
    let (mut checked, mut bad) = (0, 0);
    for k in -10..=10i64 {
        if k == 0 {
            continue;
        }
        for l in -10..=10i64 {
            for m in -10..=10i64 {
                for n in -10..=10i64 {
                    let id = q_identity_56(k, l, m, n).unwrap();
                    let direct = 3 * k as i128 * (omega_oracle(m + k, n + l) - omega_oracle(m, n));
                    checked += 1;
                    if !id.holds() || id.lhs != direct.into() {
                        bad += 1;
                    }
                }
            }
        }
    }
    outcome(bad == 0, format!("{checked} tuples, {bad} failures"))
}

fn c04_sparse_cover() -> Outcome {
    let target = FrequencyFamily::zk(window(12)).unwrap();
    let cover = match build_sparse_cover(&target, 0.5, CoverOptions::default()) {
        Ok(c) => c,
        Err(e) => return outcome(false, format!("construction failed: {e}")),
    };
    let r = cover.r.unwrap();
    let mut uncovered = 0;
    let mut remainder = Vec::new();
    for p in &target.points {
        let mut hit = false;
        for part in &cover.parts {
            if part.contains(p).unwrap() {
                hit = true;
                if matches!(part.description, PartKind::Remainder { .. }) {
                    remainder.push(p.lifted);
                }
            }
        }
        if !hit {
            uncovered += 1;
        }
    }
    let remainder_gap = min_sq_distance(&remainder).map_or(f64::INFINITY, |d| (d as f64).sqrt());
    let pass = cover.gap_budget < 0.5 && uncovered == 0 && remainder_gap >= r;
    outcome(
        pass,
        format!(
            "budget {:.6}, parts {}, uncovered {uncovered}, remainder gap {remainder_gap:.3} vs R {r}",
            cover.gap_budget,
            cover.parts.len()
        ),
    )
}

fn c05_b_set_classification() -> Outcome {
    let window = window(100);
    let (mut points, mut missed) = (0usize, 0usize);
    for k in (-6..=6i64).filter(|k| *k != 0) {
        for l in (-6..=6i64).filter(|l| *l != 0) {
            for r in [3.0, 7.0, 15.0] {
                let class = classify_b_set(k, l, r).unwrap();
                for mode in window.modes() {
                    let q = omega_oracle(mode.m + k, mode.n + l) - omega_oracle(mode.m, mode.n);
                    if mode.m == 0 || (q.abs() as f64) >= r {
                        continue;
                    }
                    points += 1;
                    if class.captures(mode).is_none() {
                        missed += 1;
                    }
                }
            }
        }
    }
    // Figure geometry: the two strips of B(2,4,7).
    let fig = classify_b_set(2, 4, 7.0).unwrap();
    let strips = fig.asymptotes().map(|a| [a[0].alpha, a[1].alpha]);
    let geometry =
        strips.is_some_and(|a| (a[0] + 1.0 / 3.0).abs() < 1e-12 && (a[1] + 1.0).abs() < 1e-12);
    let csv = std::env::temp_dir().join("zktorus_acceptance_bset_2_4_7.csv");
    let mut text = String::from("m,n,capturedBy\n");
    for mode in enumerate_b_set(2, 4, 7.0, window).unwrap() {
        text += &format!("{},{},{:?}\n", mode.m, mode.n, fig.captures(mode));
    }
    let written = std::fs::write(&csv, text).is_ok();
    outcome(
        missed == 0 && geometry && written,
        format!(
            "{points} points, {missed} uncaptured, strips {strips:?}, csv {}",
            csv.display()
        ),
    )
}

fn c06_isometry_group_law() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let t = Truncation::square(6);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let z = SpectralState::random(t, &mut rng);
        let (t1, t2) = (rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0));
        let a = z.evolve(t1).unwrap();
        let norm = z.coeff_norm();
        worst = worst.max((a.coeff_norm() - norm).abs() / norm);
        let composed = a.evolve(t2).unwrap();
        let direct = z.evolve(t1 + t2).unwrap();
        let diff: f64 = composed
            .coeffs()
            .iter()
            .zip(direct.coeffs())
            .map(|(x, y)| (x - y).norm_sqr())
            .sum::<f64>()
            .sqrt();
        worst = worst.max(diff / norm);
    }
    outcome(worst < 1e-12, format!("worst relative drift {worst:.3e}"))
}

fn c07_gramian_quadrature() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let long = Interval::new(0.0, 2.0 * PI);
    let short = Interval::new(0.0, 1.0);
    let cases = [
        (
            "vertical",
            ObservationRegion::vertical(1.1, long),
            Truncation::square(4),
        ),
        (
            "two horizontal",
            ObservationRegion::horizontal(two_segments(SQRT_2 * PI)),
            Truncation::new(4, 4, true),
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
            Truncation::square(3),
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
            Truncation::square(3),
        ),
    ];
    let mut pass = true;
    let mut rows = Vec::new();
    for (name, region, t) in cases {
        let g = assemble_gramian(&region, t).unwrap();
        let mut worst = 0.0f64;
        for _ in 0..20 {
            let z = SpectralState::random(t, &mut rng);
            let form = g.energy(&z).unwrap();
            let quad = observed_energy_quadrature(&region, &z);
            worst = worst.max((form - quad).abs() / form);
        }
        pass &= worst < 1e-8;
        rows.push(format!("{name} {worst:.2e}"));
    }
    outcome(pass, rows.join(", "))
}

fn c08_horizontal_obstruction() -> Outcome {
    let y = 1.0;
    let single = ObservationRegion::horizontal(vec![HorizontalSegment {
        y,
        interval: Interval::new(0.0, 2.0 * PI),
    }]);
    let t = Truncation::new(2, 4, true);
    let g = assemble_gramian(&single, t).unwrap();
    let report = observability_report(&g, NormWeight::L2).unwrap();
    let lmax = report.lambda_max;
    let mut pairing_ok = true;
    let mut pairs = 0;
    for mode in t.modes().filter(|md| md.n > 0) {
        let mut c = vec![Complex64::new(0.0, 0.0); t.mode_count()];
        c[t.index_of(mode).unwrap()] = Complex64::cis(-(mode.n as f64) * y);
        c[t.index_of(ModeIndex::new(mode.m, -mode.n)).unwrap()] =
            -Complex64::cis(mode.n as f64 * y);
        let v = SpectralState::new(t, c).unwrap();
        let rayleigh = g.energy(&v).unwrap() / v.coeff_norm().powi(2);
        pairing_ok &= rayleigh < 1e-10 * lmax;
        pairs += 1;
    }
    pairing_ok &= report.kernel_dim() >= pairs;

    let mut irrational = Vec::new();
    for max_n in [4, 8, 16] {
        let region = ObservationRegion::horizontal(two_segments(SQRT_2 * PI));
        let g = assemble_gramian(&region, Truncation::new(2, max_n, true)).unwrap();
        let r = observability_report(&g, NormWeight::L2).unwrap();
        irrational.push((r.c1, r.kernel_dim()));
    }
    let irrational_ok = irrational.iter().all(|(c1, dim)| *c1 > 0.0 && *dim == 0);

    let rational = ObservationRegion::horizontal(two_segments(0.5 * PI));
    let g = assemble_gramian(&rational, Truncation::new(2, 4, true)).unwrap();
    let r = observability_report(&g, NormWeight::L2).unwrap();
    let exact = r.kernel_kinds.contains(&KernelKind::Exact);

    outcome(
        pairing_ok && irrational_ok && exact,
        format!(
            "single segment: {pairs} pairing directions, kernel dim {}; sqrt2 (C1, dim) {irrational:?}; rational exact zero {exact}",
            report.kernel_dim()
        ),
    )
}

fn c09_weighted_trend() -> Outcome {
    let segs = two_segments(SQRT_2 * PI);
    let ts: Vec<Truncation> = [4, 8, 16, 32]
        .iter()
        .map(|&n| Truncation::new(2, n, true))
        .collect();
    let weighted: Vec<f64> = horizontal_weighted_sweep(&segs, &ts, 1.0)
        .unwrap()
        .iter()
        .map(|r| r.c1)
        .collect();
    let plain: Vec<f64> = horizontal_weighted_sweep(&segs, &ts, 0.0)
        .unwrap()
        .iter()
        .map(|r| r.c1)
        .collect();
    let hi = weighted.iter().cloned().fold(f64::MIN, f64::max);
    let lo = weighted.iter().cloned().fold(f64::MAX, f64::min);
    let ratios: Vec<f64> = plain.windows(2).map(|w| w[1] / w[0]).collect();
    let pass = lo > 0.0 && hi / lo < 3.0 && ratios.iter().all(|r| (0.125..=0.5).contains(r));
    outcome(
        pass,
        format!(
            "s=1 C1 {weighted:.4?} (spread {:.3}); s=0 ratios {ratios:.4?}",
            hi / lo
        ),
    )
}

fn c10_diophantine() -> Outcome {
    let cert = certify_bad_approx(&IrrationalSpec::sqrt(2), 1.0, 1_000_000).unwrap();
    let (scan, at) = bad_approx_scan(SQRT_2, 1_000_000);
    let claimed = 1.0 / (2.0 + SQRT_2);
    let consistent = (cert.gamma2 - scan).abs() < 1e-9 && cert.minimizing_n == at;
    outcome(
        consistent && (cert.gamma2 - claimed).abs() < 1e-3,
        format!(
            "gamma2 {:.6} at n={} (float scan {scan:.6} at n={at}), claimed {claimed:.6}",
            cert.gamma2, cert.minimizing_n
        ),
    )
}

fn c11_hum_vertical() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let t = Truncation::square(4);
    let horizon = 2.0 * PI;
    let region = ObservationRegion::vertical(0.7, Interval::new(0.0, horizon));
    let mut worst_residual = 0.0f64;
    let mut failure = None;
    for _ in 0..10 {
        let p = ControlProblem {
            region: region.clone(),
            horizon,
            truncation: t,
            z0: SpectralState::random(t, &mut rng),
            z_t: SpectralState::random(t, &mut rng),
        };
        match synthesize_control(&p) {
            Ok(out) => worst_residual = worst_residual.max(out.residual),
            Err(e) => {
                let info = match &e {
                    Error::GramianSingular(cert) => format!(
                        "singular Gramian, lambda_min/lambda_max = {:.2e}, kernel dim {}",
                        cert.ratio(),
                        cert.kernel.len()
                    ),
                    other => other.to_string(),
                };
                failure = Some(info);
                break;
            }
        }
    }
    let mut worst_transposition = 0.0f64;
    for _ in 0..10 {
        let pieces = (0..4).map(|_| SpectralState::random(t, &mut rng)).collect();
        let v = ControlSignal::piecewise(region.clone(), horizon, pieces);
        let z0 = SpectralState::random(t, &mut rng);
        let u0 = SpectralState::random(t, &mut rng);
        let rep = transposition_identity(&z0, &v, &u0, horizon).unwrap();
        worst_transposition = worst_transposition.max(rep.relative_residual);
    }
    let pass = failure.is_none() && worst_residual < 1e-8 && worst_transposition < 1e-9;
    outcome(
        pass,
        format!(
            "synthesis: {}; transposition residual {worst_transposition:.2e}",
            failure.unwrap_or_else(|| format!("worst residual {worst_residual:.2e}"))
        ),
    )
}

fn c12_duality_grid() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let iv = Interval::new(0.0, 2.0 * PI);
    let single =
        |y: f64| ObservationRegion::horizontal(vec![HorizontalSegment { y, interval: iv }]);
    let rect = ObservationRegion::space_time(
        SpatialSet::Rectangle {
            x: [0.5, 2.5],
            y: [1.0, 4.0],
        },
        iv,
    );
    let disc = ObservationRegion::space_time(
        SpatialSet::Disc {
            center: [3.0, 2.0],
            radius: 1.0,
        },
        iv,
    );
    let cases = vec![
        (ObservationRegion::vertical(0.0, iv), Truncation::square(2)),
        (
            ObservationRegion::vertical(1.3, iv),
            Truncation::new(2, 2, true),
        ),
        (single(1.0), Truncation::new(2, 2, true)),
        (single(2.5), Truncation::new(2, 4, true)),
        (
            ObservationRegion::horizontal(two_segments(0.5 * PI)),
            Truncation::new(2, 4, true),
        ),
        (
            ObservationRegion::horizontal(two_segments(SQRT_2 * PI)),
            Truncation::new(2, 2, true),
        ),
        (
            ObservationRegion::horizontal(two_segments(SQRT_2 * PI)),
            Truncation::new(2, 4, true),
        ),
        (rect.clone(), Truncation::new(2, 2, true)),
        (rect, Truncation::new(3, 3, true)),
        (disc.clone(), Truncation::new(2, 2, true)),
        (disc, Truncation::new(3, 2, true)),
        (full_torus_region(2.0 * PI), Truncation::new(2, 2, true)),
    ];
    let mut agree = 0;
    let mut summary = Vec::new();
    for (region, t) in &cases {
        let g = assemble_gramian(region, *t).unwrap();
        let eig = hermitian_eigen(&g.matrix).unwrap();
        let observable = eig.min() > zktorus::control::SINGULAR * eig.max();
        let p = ControlProblem {
            region: region.clone(),
            horizon: 2.0 * PI,
            truncation: *t,
            z0: SpectralState::random(*t, &mut rng),
            z_t: SpectralState::random(*t, &mut rng),
        };
        let controllable = match synthesize_control(&p) {
            Ok(out) => out.residual < 1e-8,
            Err(Error::GramianSingular(_)) => false,
            Err(e) => {
                summary.push(format!("unexpected error {e}"));
                false
            }
        };
        if observable == controllable {
            agree += 1;
        }
        summary.push(format!("{}", if observable { 'O' } else { 'S' }));
    }
    outcome(
        agree == cases.len(),
        format!("{agree}/{} agree [{}]", cases.len(), summary.join("")),
    )
}

fn c13_stabilization() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let horizon = 2.0 * PI;
    let t = Truncation::square(3);
    let mut vertical = Vec::new();
    let mut vertical_ok = true;
    for decay in [0.5, 1.0] {
        let region = ObservationRegion::vertical(0.0, Interval::new(0.0, horizon));
        match build_feedback(&region, decay, horizon, t) {
            Ok(law) => {
                for _ in 0..5 {
                    let z0 = SpectralState::random(t, &mut rng);
                    let dt = 0.05 / (t.max_abs_omega().unwrap() as f64 + law.feedback_norm);
                    let rate = simulate_closed_loop(&law, &z0, 10.0, dt)
                        .ok()
                        .and_then(|tr| tr.fitted_rate);
                    vertical_ok &= rate.is_some_and(|r| r <= -0.9 * decay);
                    vertical.push(format!("{rate:?}"));
                }
            }
            Err(Error::GramianSingular(cert)) => {
                vertical_ok = false;
                vertical.push(format!(
                    "w={decay}: weighted Gramian singular (ratio {:.1e}, kernel dim {})",
                    cert.ratio(),
                    cert.kernel.len()
                ));
            }
            Err(e) => {
                vertical_ok = false;
                vertical.push(format!("w={decay}: {e}"));
            }
        }
    }
    let tt = Truncation::new(3, 3, true);
    let law = build_feedback(&full_torus_region(horizon), 1.0, horizon, tt).unwrap();
    let z0 = SpectralState::random(tt, &mut rng);
    let dt = 0.05 / (tt.max_abs_omega().unwrap() as f64 + law.feedback_norm);
    let fitted = simulate_closed_loop(&law, &z0, 5.0, dt)
        .unwrap()
        .fitted_rate
        .unwrap();
    let exact = full_torus_rate(1.0, horizon);
    let torus_ok = (fitted / exact - 1.0).abs() < 0.05 && fitted <= -1.0;
    outcome(
        vertical_ok && torus_ok,
        format!(
            "vertical: {}; full torus fitted {fitted:.6} vs closed form {exact:.6}",
            vertical.join(", ")
        ),
    )
}

fn c14_h2_bound() -> Outcome {
    let report = verify_h2_bound(Truncation::new(10_000, 100, false)).unwrap();
    let mut oracle_worst = 0.0f64;
    for n in -100..=100i64 {
        let s: f64 = (-10_000..=10_000i64)
            .map(|m| 1.0 / (1.0 + (omega_oracle(m, n) as f64).powi(2)))
            .sum();
        oracle_worst = oracle_worst.max(s + 2.0 / 10_000.0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let ops = check_h2_operators(Truncation::square(4), 100, &mut rng).unwrap();
    let consistent = (report.max_total - oracle_worst).abs() < 1e-12;
    outcome(
        report.holds && consistent && ops.holds && oracle_worst < 5.0,
        format!(
            "max sum+tail {:.6} (oracle {oracle_worst:.6}); worst |B*u|/|(I+A*)u| open {:.4}, vertical {:.4}",
            report.max_total, ops.open_set_worst_ratio, ops.vertical_worst_ratio
        ),
    )
}

fn main() {
    let checks: [(u8, &str, Duration, Check); 14] = [
        (
            1,
            "frequency differences",
            Duration::from_secs(1),
            c01_frequency_differences,
        ),
        (
            2,
            "truncated cube gap",
            Duration::from_secs(1),
            c02_truncated_cube_gap,
        ),
        (
            3,
            "completed-square identity",
            Duration::from_secs(10),
            c03_completed_square_identity,
        ),
        (
            4,
            "sparse cover soundness",
            Duration::from_secs(60),
            c04_sparse_cover,
        ),
        (
            5,
            "B-set classification",
            Duration::from_secs(60),
            c05_b_set_classification,
        ),
        (
            6,
            "isometry and group law",
            Duration::from_secs(5),
            c06_isometry_group_law,
        ),
        (
            7,
            "Gramian vs quadrature",
            Duration::from_secs(120),
            c07_gramian_quadrature,
        ),
        (
            8,
            "horizontal obstruction",
            Duration::from_secs(60),
            c08_horizontal_obstruction,
        ),
        (
            9,
            "weighted horizontal trend",
            Duration::from_secs(120),
            c09_weighted_trend,
        ),
        (
            10,
            "badly approximable sqrt2",
            Duration::from_secs(30),
            c10_diophantine,
        ),
        (
            11,
            "HUM on a vertical segment",
            Duration::from_secs(60),
            c11_hum_vertical,
        ),
        (
            12,
            "controllability iff observability",
            Duration::from_secs(120),
            c12_duality_grid,
        ),
        (
            13,
            "rapid stabilization",
            Duration::from_secs(120),
            c13_stabilization,
        ),
        (14, "H2 bound", Duration::from_secs(10), c14_h2_bound),
    ];
    let mut failed = Vec::new();
    for (id, name, budget, check) in checks {
        let start = Instant::now();
        let result = std::panic::catch_unwind(check).unwrap_or_else(|_| outcome(false, "panicked"));
        let elapsed = start.elapsed();
        let pass = result.pass && elapsed <= budget;
        println!(
            "criterion {id:02} {} {name} ({:.2}s / {}s): {}",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            budget.as_secs(),
            result.detail
        );
        if !pass {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all 14 criteria pass");
    } else {
        println!(
            "acceptance: {} of 14 criteria fail: {failed:?}",
            failed.len()
        );
        std::process::exit(1);
    }
}
