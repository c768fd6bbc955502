//! Brute-force `int_region |u|^2` used by `verify` to cross-check Gramians.

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use num_complex::Complex64;
use zktorus::observability::{ObservationRegion, SpatialSet};
use zktorus::SpectralState;

fn gauss(a: f64, b: f64, panels: usize, order: usize) -> Vec<(f64, f64)> {
    let rule = GaussLegendre::new(NonZeroUsize::new(order).expect("positive order"));
    let h = (b - a) / panels as f64;
    (0..panels)
        .flat_map(|p| {
            let lo = a + h * p as f64;
            rule.as_node_weight_pairs()
                .iter()
                .map(move |&(x, w)| (lo + 0.5 * h * (x + 1.0), 0.5 * h * w))
                .collect::<Vec<_>>()
        })
        .collect()
}

fn periodic(count: usize) -> Vec<(f64, f64)> {
    let h = 2.0 * PI / count as f64;
    (0..count).map(|j| (h * j as f64, h)).collect()
}

/// Weighted `(x, y, w)` points plus the time interval they are observed on.
type Piece = (Vec<(f64, f64, f64)>, f64, f64);

/// Gauss-Legendre in time and across open sets, periodic trapezoid along
/// segment directions.
pub fn observed_energy(region: &ObservationRegion, state: &SpectralState) -> f64 {
    let t = state.truncation();
    let modes: Vec<(i64, i64)> = t.modes().map(|md| (md.m, md.n)).collect();
    let freqs: Vec<f64> = modes
        .iter()
        .map(|&(m, n)| (m * m * m + m * n * n - m) as f64)
        .collect();
    let spread = 2.0 * freqs.iter().fold(0.0f64, |a, w| a.max(w.abs())) + 1.0;
    let mut pieces: Vec<Piece> = Vec::new();
    match region {
        ObservationRegion::VerticalSegment { x0, interval } => pieces.push((
            periodic(4 * t.max_n as usize + 4)
                .into_iter()
                .map(|(y, w)| (*x0, y, w))
                .collect(),
            interval.start,
            interval.end,
        )),
        ObservationRegion::HorizontalSegments { segments } => {
            for s in segments {
                pieces.push((
                    periodic(4 * t.max_m as usize + 4)
                        .into_iter()
                        .map(|(x, w)| (x, s.y, w))
                        .collect(),
                    s.interval.start,
                    s.interval.end,
                ));
            }
        }
        ObservationRegion::SpaceTimeSet { spatial, interval } => {
            let pts = match *spatial {
                SpatialSet::Rectangle { x, y } => gauss(x[0], x[1], 2, 20)
                    .into_iter()
                    .flat_map(|(px, wx)| {
                        gauss(y[0], y[1], 2, 20)
                            .into_iter()
                            .map(move |(py, wy)| (px, py, wx * wy))
                    })
                    .collect(),
                SpatialSet::Disc { center, radius } => gauss(0.0, radius, 2, 20)
                    .into_iter()
                    .flat_map(|(r, wr)| {
                        periodic(96).into_iter().map(move |(th, wt)| {
                            (
                                center[0] + r * th.cos(),
                                center[1] + r * th.sin(),
                                r * wr * wt,
                            )
                        })
                    })
                    .collect(),
            };
            pieces.push((pts, interval.start, interval.end));
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
        for (tt, wt) in gauss(a, b, panels, 16) {
            let evolved: Vec<Complex64> = coeffs
                .iter()
                .zip(&freqs)
                .map(|(c, w)| c * Complex64::cis(w * tt))
                .collect();
            let slice: f64 = basis
                .iter()
                .zip(&pts)
                .map(|(row, p)| {
                    let u: Complex64 = row.iter().zip(&evolved).map(|(e, c)| e * c).sum();
                    p.2 * u.norm_sqr()
                })
                .sum();
            total += wt * slice;
        }
    }
    total
}
