mod common;

use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::*;
use zktorus::diophantine::{dist_to_integers, IrrationalSpec};
use zktorus::gap_sparse::{
    build_sparse_cover, classify_b_set, q_form, q_identity_56, uniform_gap, CoverOptions,
    FrequencyFamily, GapNorm,
};
use zktorus::linalg::{hermitian_defect, hermitian_eigen};
use zktorus::observability::{assemble_gramian, Interval, ObservationRegion, SpatialSet};
use zktorus::{omega, ModeIndex, SpectralState, Truncation};

fn state(t: Truncation, seed: u64) -> SpectralState {
    SpectralState::random(t, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn relative_diff(a: &SpectralState, b: &SpectralState) -> f64 {
    let d: f64 = a
        .coeffs()
        .iter()
        .zip(b.coeffs())
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt();
    d / a.coeff_norm().max(f64::MIN_POSITIVE)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn evolution_is_isometric(seed in any::<u64>(), t in -50.0f64..50.0, max in 0u32..6) {
        let z = state(Truncation::square(max), seed);
        let norm = z.coeff_norm();
        let evolved = z.evolve(t).unwrap();
        prop_assert!((evolved.coeff_norm() - norm).abs() <= 1e-12 * norm);
        prop_assert!((evolved.l2_norm_physical() - z.l2_norm_physical()).abs()
            <= 1e-12 * z.l2_norm_physical());
    }

    #[test]
    fn evolution_group_law(seed in any::<u64>(), s in -20.0f64..20.0, t in -20.0f64..20.0) {
        let z = state(Truncation::square(5), seed);
        let two_steps = z.evolve(s).unwrap().evolve(t).unwrap();
        let one_step = z.evolve(s + t).unwrap();
        prop_assert!(relative_diff(&one_step, &two_steps) < 1e-12);
        let back = z.evolve(t).unwrap().evolve(-t).unwrap();
        prop_assert!(relative_diff(&z, &back) < 1e-12);
    }

    #[test]
    fn omega_parity(m in -10_000i64..10_000, n in -10_000i64..10_000) {
        let w = omega(ModeIndex::new(m, n)).unwrap();
        prop_assert_eq!(w as i128, omega_oracle(m, n));
        prop_assert_eq!(omega(ModeIndex::new(-m, n)).unwrap(), -w);
        prop_assert_eq!(omega(ModeIndex::new(m, -n)).unwrap(), w);
    }

    #[test]
    fn q_form_is_frequency_difference(
        k in -20i64..=20, l in -20i64..=20, m in -20i64..=20, n in -20i64..=20
    ) {
        let q = q_form(k, l, m, n).unwrap();
        prop_assert_eq!(q as i128, omega_oracle(m + k, n + l) - omega_oracle(m, n));
        if k != 0 {
            prop_assert!(q_identity_56(k, l, m, n).unwrap().holds());
        } else {
            prop_assert_eq!(q, m * l * (2 * n + l));
        }
    }

    #[test]
    fn uniform_gap_matches_all_pairs(
        points in proptest::collection::vec(proptest::array::uniform3(-40i64..40), 2..40)
    ) {
        let lib = uniform_gap(&points, GapNorm::Euclidean);
        let oracle = min_sq_distance(&points).map(|d| (d as f64).sqrt()).unwrap();
        prop_assert_eq!(lib, oracle);
    }

    #[test]
    fn b_set_points_are_captured(k in -5i64..=5, l in -5i64..=5, r in 1.0f64..20.0) {
        prop_assume!(k != 0 || l != 0);
        let class = classify_b_set(k, l, r).unwrap();
        for mode in window(40).modes() {
            let q = omega_oracle(mode.m + k, mode.n + l) - omega_oracle(mode.m, mode.n);
            if mode.m != 0 && (q.abs() as f64) < r {
                prop_assert!(class.captures(mode).is_some(), "{:?} escapes", mode);
            }
        }
    }

    #[test]
    fn surd_distance_matches_float(n in 1u64..1_000_000, c in 2i64..50) {
        prop_assume!(((c as f64).sqrt().round() as i64).pow(2) != c);
        let lib = dist_to_integers(&IrrationalSpec::sqrt(c), n).unwrap();
        let x = n as f64 * (c as f64).sqrt();
        prop_assert!((lib - (x - x.round()).abs()).abs() < 1e-9);
    }

    #[test]
    fn rectangle_gramian_is_hermitian_psd(
        x0 in 0.0f64..3.0, w in 0.2f64..3.0, y0 in 0.0f64..3.0, h in 0.2f64..3.0,
        len in 0.1f64..3.0
    ) {
        let region = ObservationRegion::space_time(
            SpatialSet::Rectangle { x: [x0, x0 + w], y: [y0, y0 + h] },
            Interval::new(0.0, len),
        );
        let g = assemble_gramian(&region, Truncation::square(2)).unwrap();
        let norm = g.matrix.norm();
        prop_assert!(hermitian_defect(&g.matrix) <= 1e-14 * norm);
        prop_assert!(hermitian_eigen(&g.matrix).unwrap().min() >= -1e-10 * norm);
    }

    #[test]
    fn vertical_phase_invariance(x0 in 0.0f64..(2.0 * PI), shift in 0.0f64..(2.0 * PI)) {
        let t = Truncation::square(3);
        let iv = Interval::new(0.0, 2.0);
        let a = assemble_gramian(&ObservationRegion::vertical(x0, iv), t).unwrap().eigen().unwrap();
        let b = assemble_gramian(&ObservationRegion::vertical(x0 + shift, iv), t)
            .unwrap()
            .eigen()
            .unwrap();
        for (p, q) in a.values.iter().zip(&b.values) {
            prop_assert!((p - q).abs() <= 1e-12 * a.max());
        }
    }
}

#[test]
fn cover_soundness_on_small_windows() {
    for (max, eps) in [(4u32, 2.0), (6, 1.0), (8, 0.75)] {
        let target = FrequencyFamily::zk(window(max)).unwrap();
        let cover = build_sparse_cover(&target, eps, CoverOptions::default()).unwrap();
        assert!(cover.gap_budget < eps);
        for p in &target.points {
            assert!(cover.parts.iter().any(|part| part.contains(p).unwrap()));
        }
        for part in &cover.parts {
            let members: Vec<[i64; 3]> = target
                .points
                .iter()
                .filter(|p| part.contains(p).unwrap())
                .map(|p| p.lifted)
                .collect();
            if let Some(d) = min_sq_distance(&members) {
                assert!((d as f64).sqrt() >= part.certified_gap * (1.0 - 1e-12));
            }
        }
    }
}

#[test]
fn physical_norm_matches_grid_sum() {
    let t = Truncation::square(3);
    let z = state(t, 42);
    let k = 2 * 3 + 2;
    let h = 2.0 * PI / k as f64;
    let mut sum = 0.0;
    for i in 0..k {
        for j in 0..k {
            let u: Complex64 = z.evaluate(h * i as f64, h * j as f64, 0.3).unwrap();
            sum += u.norm_sqr();
        }
    }
    let grid = h * h * sum;
    assert!((grid.sqrt() - z.l2_norm_physical()).abs() < 1e-12 * grid.sqrt());
}
