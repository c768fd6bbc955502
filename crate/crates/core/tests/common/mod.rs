//! Test-side oracles that recompute quantities without the library's
//! closed forms.
#![allow(dead_code)]

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use num_complex::Complex64;
use zktorus::observability::{ObservationRegion, SpatialSet};
use zktorus::{SpectralState, Truncation};

pub fn omega_oracle(m: i64, n: i64) -> i128 {
    let (m, n) = (m as i128, n as i128);
    m * m * m + m * n * n - m
}

/// Smallest difference between distinct sorted values (`None` for fewer than
/// two values).
pub fn sorted_gap(mut values: Vec<i128>) -> Option<i128> {
    values.sort_unstable();
    values.windows(2).map(|w| w[1] - w[0]).min()
}

/// Minimum squared euclidean distance by all-pairs comparison.
pub fn min_sq_distance(points: &[[i64; 3]]) -> Option<i128> {
    let mut best: Option<i128> = None;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            let d: i128 = (0..3).map(|c| (a[c] as i128 - b[c] as i128).pow(2)).sum();
            best = Some(best.map_or(d, |x| x.min(d)));
        }
    }
    best
}

/// Composite Gauss-Legendre nodes and weights on `[a, b]`.
pub fn gauss_nodes(a: f64, b: f64, panels: usize, order: usize) -> Vec<(f64, f64)> {
    let rule = GaussLegendre::new(NonZeroUsize::new(order).unwrap());
    let h = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let lo = a + h * p as f64;
        for &(x, w) in rule.as_node_weight_pairs() {
            out.push((lo + 0.5 * h * (x + 1.0), 0.5 * h * w));
        }
    }
    out
}

/// Periodic trapezoid nodes on `[0, 2 pi)`.
pub fn trapezoid_nodes(count: usize) -> Vec<(f64, f64)> {
    let h = 2.0 * PI / count as f64;
    (0..count).map(|j| (h * j as f64, h)).collect()
}

struct SpatialRule {
    points: Vec<(f64, f64, f64)>,
}

fn spatial_rule(set: &SpatialSet) -> SpatialRule {
    let mut points = Vec::new();
    match *set {
        SpatialSet::Rectangle { x, y } => {
            for &(px, wx) in &gauss_nodes(x[0], x[1], 2, 20) {
                for &(py, wy) in &gauss_nodes(y[0], y[1], 2, 20) {
                    points.push((px, py, wx * wy));
                }
            }
        }
        SpatialSet::Disc { center, radius } => {
            for &(r, wr) in &gauss_nodes(0.0, radius, 2, 20) {
                for &(th, wt) in &trapezoid_nodes(96) {
                    points.push((
                        center[0] + r * th.cos(),
                        center[1] + r * th.sin(),
                        r * wr * wt,
                    ));
                }
            }
        }
    }
    SpatialRule { points }
}

/// Weighted `(x, y, w)` points plus the time interval they are observed on.
type Piece = (Vec<(f64, f64, f64)>, f64, f64);

/// `int_region |u|^2` by brute-force quadrature: Gauss-Legendre in time and
/// on rectangle/disc coordinates, periodic trapezoid along segments.
pub fn observed_energy_quadrature(region: &ObservationRegion, state: &SpectralState) -> f64 {
    let t = state.truncation();
    let modes: Vec<(i64, i64)> = t.modes().map(|md| (md.m, md.n)).collect();
    let freqs: Vec<f64> = modes
        .iter()
        .map(|&(m, n)| omega_oracle(m, n) as f64)
        .collect();
    let spread = 2.0 * freqs.iter().fold(0.0f64, |a, w| a.max(w.abs())) + 1.0;

    let mut pieces: Vec<Piece> = Vec::new();
    match region {
        ObservationRegion::VerticalSegment { x0, interval } => {
            let pts = trapezoid_nodes(4 * t.max_n as usize + 4)
                .into_iter()
                .map(|(y, w)| (*x0, y, w))
                .collect();
            pieces.push((pts, interval.start, interval.end));
        }
        ObservationRegion::HorizontalSegments { segments } => {
            for s in segments {
                let pts = trapezoid_nodes(4 * t.max_m as usize + 4)
                    .into_iter()
                    .map(|(x, w)| (x, s.y, w))
                    .collect();
                pieces.push((pts, s.interval.start, s.interval.end));
            }
        }
        ObservationRegion::SpaceTimeSet { spatial, interval } => {
            pieces.push((spatial_rule(spatial).points, interval.start, interval.end));
        }
    }

    let coeffs = state.coeffs();
    let mut total = 0.0;
    for (pts, a, b) in pieces {
        let basis: Vec<Vec<Complex64>> = pts
            .iter()
            .map(|&(x, y, _)| {
                modes
                    .iter()
                    .map(|&(m, n)| Complex64::cis(m as f64 * x + n as f64 * y))
                    .collect()
            })
            .collect();
        let panels = (spread * (b - a) / PI).ceil() as usize + 1;
        for (tt, wt) in gauss_nodes(a, b, panels, 16) {
            let evolved: Vec<Complex64> = coeffs
                .iter()
                .zip(&freqs)
                .map(|(c, w)| c * Complex64::cis(w * tt))
                .collect();
            let mut slice = 0.0;
            for (row, &(_, _, ws)) in basis.iter().zip(&pts) {
                let u: Complex64 = row.iter().zip(&evolved).map(|(e, c)| e * c).sum();
                slice += ws * u.norm_sqr();
            }
            total += wt * slice;
        }
    }
    total
}

/// `n * dist(n theta, Z)` minimized over `1..=max_n` in plain floating point.
pub fn bad_approx_scan(theta: f64, max_n: u64) -> (f64, u64) {
    let mut best = (f64::INFINITY, 0);
    for n in 1..=max_n {
        let x = n as f64 * theta;
        let v = n as f64 * (x - x.round()).abs();
        if v < best.0 {
            best = (v, n);
        }
    }
    best
}

pub fn window(max: u32) -> Truncation {
    Truncation::new(max, max, false)
}
