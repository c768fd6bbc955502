//! Observability Gramians over a mode truncation.
//!
//! For a state `u = sum c_j exp(i(k_j . x + omega_j t))` and a region built
//! from pieces `(spatial set, time interval)`, the observed energy is
//! `c^* G c` with
//!
//! `G[i][j] = sum_pieces S(k_j - k_i) * K(omega_j - omega_i, interval)`,
//!
//! where `S(kappa)` integrates `exp(i kappa . x)` over the spatial set and
//! `K` is the closed-form time integral [`time_kernel`].

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen_blocks, CMatrix, HermitianEigen};
use crate::special::{j1_over_x, sinc};
use crate::spectrum::{
    phase, reduced_angle, ModeIndex, NormWeight, SpectralState, Truncation, PARSEVAL,
};

/// Eigenvalues below this fraction of the largest one span the kernel.
pub const KERNEL_THRESHOLD: f64 = 1e-10;

/// Kernel eigenvalues this small relative to the largest are exact zeros
/// up to rounding.
const STRUCTURAL_ZERO: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Interval {
    pub start: f64,
    pub end: f64,
}

impl Interval {
    pub const fn new(start: f64, end: f64) -> Self {
        Self { start, end }
    }

    pub fn length(&self) -> f64 {
        self.end - self.start
    }

    fn validate(&self) -> Result<()> {
        if !(self.start.is_finite() && self.end.is_finite() && self.end > self.start) {
            return Err(Error::InvalidArgument(format!(
                "interval ({}, {}) must have positive length",
                self.start, self.end
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HorizontalSegment {
    pub y: f64,
    pub interval: Interval,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "camelCase", deny_unknown_fields)]
pub enum SpatialSet {
    /// `[x.0, x.1] x [y.0, y.1]`.
    Rectangle {
        x: [f64; 2],
        y: [f64; 2],
    },
    Disc {
        center: [f64; 2],
        radius: f64,
    },
}

impl SpatialSet {
    pub fn full_torus() -> Self {
        Self::Rectangle {
            x: [0.0, 2.0 * PI],
            y: [0.0, 2.0 * PI],
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            SpatialSet::Rectangle { x, y } => {
                for (lo, hi) in [x, y].map(|r| (r[0], r[1])) {
                    Interval::new(lo, hi).validate()?;
                    if hi - lo > 2.0 * PI * (1.0 + 1e-15) {
                        return Err(Error::InvalidArgument(
                            "rectangle side longer than the torus".into(),
                        ));
                    }
                }
                Ok(())
            }
            SpatialSet::Disc { radius, center } => {
                if !(radius > 0.0 && radius < PI) || !center.iter().all(|c| c.is_finite()) {
                    return Err(Error::InvalidArgument(format!(
                        "disc radius {radius} must lie in (0, pi)"
                    )));
                }
                Ok(())
            }
        }
    }

    /// `int_set exp(i (dm x + dn y)) dx dy`.
    pub fn kernel(&self, dm: i64, dn: i64) -> Complex64 {
        match *self {
            SpatialSet::Rectangle { x, y } => {
                interval_kernel(dm, Interval::new(x[0], x[1]))
                    * interval_kernel(dn, Interval::new(y[0], y[1]))
            }
            SpatialSet::Disc { center, radius } => {
                let (fm, fn_) = (dm as f64, dn as f64);
                let k = fm.hypot(fn_);
                let shift = Complex64::cis(fm * center[0] + fn_ * center[1]);
                shift * (2.0 * PI * radius * radius * j1_over_x(radius * k))
            }
        }
    }

    /// Whether `(x, y)` (reduced to the fundamental domain) lies in the set.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let wrap = |v: f64, lo: f64| lo + (v - lo).rem_euclid(2.0 * PI);
        match *self {
            SpatialSet::Rectangle { x: xs, y: ys } => {
                wrap(x, xs[0]) <= xs[1] && wrap(y, ys[0]) <= ys[1]
            }
            SpatialSet::Disc { center, radius } => {
                let dx = wrap(x, center[0] - PI) - center[0];
                let dy = wrap(y, center[1] - PI) - center[1];
                dx.hypot(dy) < radius
            }
        }
    }
}

/// Where the solution is observed (or controlled).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase", deny_unknown_fields)]
pub enum ObservationRegion {
    /// `{x0} x T x interval`.
    #[serde(rename_all = "camelCase")]
    VerticalSegment { x0: f64, interval: Interval },
    /// `T x {y_j} x interval_j` for each segment.
    HorizontalSegments { segments: Vec<HorizontalSegment> },
    /// `spatial x interval`.
    SpaceTimeSet {
        spatial: SpatialSet,
        interval: Interval,
    },
}

/// One product piece of a region.
#[derive(Debug, Clone, Copy)]
enum Piece {
    Vertical { x0: f64 },
    Horizontal { y: f64 },
    Open(SpatialSet),
}

impl Piece {
    fn spatial(&self, dm: i64, dn: i64) -> Complex64 {
        match *self {
            Piece::Vertical { x0 } if dn == 0 => Complex64::cis(dm as f64 * x0) * (2.0 * PI),
            Piece::Horizontal { y } if dm == 0 => Complex64::cis(dn as f64 * y) * (2.0 * PI),
            Piece::Open(set) => set.kernel(dm, dn),
            _ => Complex64::new(0.0, 0.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum BlockStructure {
    /// No coupling between different `n`.
    PerN,
    /// No coupling between different `m`.
    PerM,
    Dense,
}

impl ObservationRegion {
    pub fn vertical(x0: f64, interval: Interval) -> Self {
        Self::VerticalSegment { x0, interval }
    }

    pub fn horizontal(segments: Vec<HorizontalSegment>) -> Self {
        Self::HorizontalSegments { segments }
    }

    pub fn space_time(spatial: SpatialSet, interval: Interval) -> Self {
        Self::SpaceTimeSet { spatial, interval }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::VerticalSegment { x0, interval } => {
                if !x0.is_finite() {
                    return Err(Error::InvalidArgument("x0 must be finite".into()));
                }
                interval.validate()
            }
            Self::HorizontalSegments { segments } => {
                if segments.is_empty() {
                    return Err(Error::InvalidArgument("no horizontal segments".into()));
                }
                segments.iter().try_for_each(|s| s.interval.validate())
            }
            Self::SpaceTimeSet { spatial, interval } => {
                spatial.validate()?;
                interval.validate()
            }
        }
    }

    pub fn block_structure(&self) -> BlockStructure {
        match self {
            Self::VerticalSegment { .. } => BlockStructure::PerN,
            Self::HorizontalSegments { .. } => BlockStructure::PerM,
            Self::SpaceTimeSet { .. } => BlockStructure::Dense,
        }
    }

    fn pieces(&self) -> Vec<(Piece, Interval)> {
        match self {
            Self::VerticalSegment { x0, interval } => {
                vec![(Piece::Vertical { x0: *x0 }, *interval)]
            }
            Self::HorizontalSegments { segments } => segments
                .iter()
                .map(|s| (Piece::Horizontal { y: s.y }, s.interval))
                .collect(),
            Self::SpaceTimeSet { spatial, interval } => vec![(Piece::Open(*spatial), *interval)],
        }
    }

    /// The same spatial support observed over `interval` instead.
    pub fn with_interval(&self, interval: Interval) -> Self {
        match self {
            Self::VerticalSegment { x0, .. } => Self::VerticalSegment { x0: *x0, interval },
            Self::HorizontalSegments { segments } => Self::HorizontalSegments {
                segments: segments
                    .iter()
                    .map(|s| HorizontalSegment { y: s.y, interval })
                    .collect(),
            },
            Self::SpaceTimeSet { spatial, .. } => Self::SpaceTimeSet {
                spatial: *spatial,
                interval,
            },
        }
    }

    /// Spatial kernel summed over pieces, ignoring time.
    pub fn spatial_kernel(&self, dm: i64, dn: i64) -> Complex64 {
        self.pieces().iter().map(|(p, _)| p.spatial(dm, dn)).sum()
    }
}

/// `int_I exp(i kappa s) ds` for an integer frequency.
fn interval_kernel(kappa: i64, interval: Interval) -> Complex64 {
    time_kernel(kappa, interval)
}

/// `int_a^b exp(i d t) dt = exp(i d (a+b)/2) (b-a) sinc(d (b-a)/2)`.
pub fn time_kernel(delta_omega: i64, interval: Interval) -> Complex64 {
    let len = interval.length();
    if delta_omega == 0 {
        return Complex64::new(len, 0.0);
    }
    let half = 0.5 * len;
    let x = delta_omega as f64 * half;
    let shape = if x.abs() < 1e-4 {
        sinc(x)
    } else {
        reduced_angle(delta_omega, half).sin() / x
    };
    phase_at_midpoint(delta_omega, interval) * (len * shape)
}

fn phase_at_midpoint(delta_omega: i64, interval: Interval) -> Complex64 {
    // (a+b)/2 may be large; evaluate the phase at a and at the half length.
    phase(delta_omega, interval.start) * phase(delta_omega, 0.5 * interval.length())
}

/// `int_0^T exp((i d - 2 w) s) ds`.
pub fn damped_time_kernel(delta_omega: i64, decay: f64, horizon: f64) -> Complex64 {
    let z = Complex64::new(-2.0 * decay, delta_omega as f64);
    let zt = z * horizon;
    if zt.norm() < 1e-6 {
        return horizon * (1.0 + zt / 2.0 + zt * zt / 6.0);
    }
    let end = phase(delta_omega, horizon) * (-2.0 * decay * horizon).exp();
    (end - 1.0) / z
}

/// Hermitian observability matrix: `c^* G c` is the observed energy.
#[derive(Debug, Clone)]
pub struct Gramian {
    pub truncation: Truncation,
    pub matrix: CMatrix,
    pub region: ObservationRegion,
    pub structure: BlockStructure,
}

impl Gramian {
    /// Index sets of the decoupled blocks, in truncation order.
    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let t = self.truncation;
        let key = |mode: ModeIndex| match self.structure {
            BlockStructure::PerN => mode.n,
            BlockStructure::PerM => mode.m,
            BlockStructure::Dense => 0,
        };
        let mut groups: std::collections::BTreeMap<i64, Vec<usize>> = Default::default();
        for (i, mode) in t.modes().enumerate() {
            groups.entry(key(mode)).or_default().push(i);
        }
        groups.into_values().collect()
    }

    /// `c^* G c` for a state on the same truncation.
    pub fn energy(&self, state: &SpectralState) -> Result<f64> {
        if state.truncation() != self.truncation {
            return Err(Error::TruncationMismatch(format!(
                "state on {} vs gramian on {}",
                state.truncation(),
                self.truncation
            )));
        }
        Ok(crate::linalg::quadratic_form(&self.matrix, state.coeffs()))
    }

    pub fn eigen(&self) -> Result<HermitianEigen> {
        hermitian_eigen_blocks(&self.matrix, &self.blocks())
    }

    /// Largest off-block entry magnitude; zero by construction.
    pub fn off_block_defect(&self) -> f64 {
        let blocks = self.blocks();
        let mut label = vec![0usize; self.truncation.mode_count()];
        for (b, idx) in blocks.iter().enumerate() {
            for &i in idx {
                label[i] = b;
            }
        }
        let n = label.len();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                if label[i] != label[j] {
                    worst = worst.max(self.matrix[(i, j)].norm());
                }
            }
        }
        worst
    }
}

/// Closed-form Gramian of `region` on `truncation`.
///
/// Horizontal-segment regions need a truncation without the `m = 0`
/// column: those modes are constant in `x` and invisible to the pairing
/// argument.
pub fn assemble_gramian(region: &ObservationRegion, truncation: Truncation) -> Result<Gramian> {
    region.validate()?;
    if matches!(region, ObservationRegion::HorizontalSegments { .. }) && !truncation.exclude_m_zero
    {
        return Err(Error::TruncationMismatch(
            "horizontal segments require excludeMZero".into(),
        ));
    }
    let pieces = region.pieces();
    let modes: Vec<ModeIndex> = truncation.modes().collect();
    let freqs = truncation.frequencies()?;
    let n = modes.len();
    let structure = region.block_structure();
    let rows: Vec<Vec<Complex64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .map(|j| {
                    let coupled = match structure {
                        BlockStructure::PerN => modes[i].n == modes[j].n,
                        BlockStructure::PerM => modes[i].m == modes[j].m,
                        BlockStructure::Dense => true,
                    };
                    if !coupled {
                        return Complex64::new(0.0, 0.0);
                    }
                    let (dm, dn) = (modes[j].m - modes[i].m, modes[j].n - modes[i].n);
                    let dw = freqs[j] - freqs[i];
                    pieces
                        .iter()
                        .map(|(p, iv)| p.spatial(dm, dn) * time_kernel(dw, *iv))
                        .sum()
                })
                .collect()
        })
        .collect();
    let matrix = CMatrix::from_fn(n, n, |i, j| rows[i][j]);
    Ok(Gramian {
        truncation,
        matrix,
        region: region.clone(),
        structure,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum KernelKind {
    /// Zero up to rounding (a symmetry or a rational phase coincidence).
    Exact,
    /// Below the threshold but visibly nonzero.
    Numerical,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ObservabilityReport {
    /// Extreme eigenvalues of the Gramian itself.
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// Extreme generalized eigenvalues of `G v = C (4 pi^2 W) v`.
    #[serde(rename = "C1")]
    pub c1: f64,
    #[serde(rename = "C2")]
    pub c2: f64,
    /// Smallest generalized eigenvalue above the kernel threshold.
    pub c1_kernel_complement: Option<f64>,
    pub threshold: f64,
    pub kernel_eigenvalues: Vec<f64>,
    pub kernel_kinds: Vec<KernelKind>,
    pub kernel_basis: Vec<SpectralState>,
    pub weight: NormWeight,
}

impl ObservabilityReport {
    pub fn kernel_dim(&self) -> usize {
        self.kernel_basis.len()
    }
}

/// Constants of `C1 |u0|^2 <= observed energy <= C2 |u0|^2`, where
/// `|u0|^2 = 4 pi^2 sum weight |c|^2`.
pub fn observability_report(g: &Gramian, weight: NormWeight) -> Result<ObservabilityReport> {
    let t = g.truncation;
    let scale: Vec<f64> = t
        .modes()
        .map(|mode| 1.0 / (PARSEVAL * weight.weight(mode)).sqrt())
        .collect();
    if scale.iter().any(|s| !s.is_finite()) {
        return Err(Error::InvalidArgument(
            "weight must be positive and finite".into(),
        ));
    }
    let n = scale.len();
    let scaled = CMatrix::from_fn(n, n, |i, j| g.matrix[(i, j)] * (scale[i] * scale[j]));
    let blocks = g.blocks();
    let raw = hermitian_eigen_blocks(&g.matrix, &blocks)?;
    let gen = hermitian_eigen_blocks(&scaled, &blocks)?;
    let c2 = gen.max();
    let threshold = KERNEL_THRESHOLD * c2.abs();
    let mut kernel_basis = Vec::new();
    let mut kernel_eigenvalues = Vec::new();
    let mut kernel_kinds = Vec::new();
    let mut complement = None;
    for (k, &value) in gen.values.iter().enumerate() {
        if value >= threshold {
            complement = Some(value);
            break;
        }
        let mut coeffs: Vec<Complex64> = gen
            .vectors
            .column(k)
            .iter()
            .zip(&scale)
            .map(|(v, s)| v * s)
            .collect();
        let norm = coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        coeffs.iter_mut().for_each(|c| *c /= norm);
        kernel_basis.push(SpectralState::new(t, coeffs)?);
        kernel_eigenvalues.push(value);
        kernel_kinds.push(if value.abs() <= STRUCTURAL_ZERO * c2.abs() {
            KernelKind::Exact
        } else {
            KernelKind::Numerical
        });
    }
    Ok(ObservabilityReport {
        lambda_min: raw.min(),
        lambda_max: raw.max(),
        c1: gen.min(),
        c2,
        c1_kernel_complement: complement,
        threshold,
        kernel_eigenvalues,
        kernel_kinds,
        kernel_basis,
        weight,
    })
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SweepRow {
    pub truncation: Truncation,
    #[serde(rename = "C1")]
    pub c1: f64,
    #[serde(rename = "C2")]
    pub c2: f64,
    pub c1_kernel_complement: Option<f64>,
    pub kernel_dim: usize,
}

fn sweep(
    region: &ObservationRegion,
    truncations: &[Truncation],
    weight: NormWeight,
) -> Result<Vec<SweepRow>> {
    truncations
        .par_iter()
        .map(|&t| {
            let g = assemble_gramian(region, t)?;
            let r = observability_report(&g, weight)?;
            Ok(SweepRow {
                truncation: t,
                c1: r.c1,
                c2: r.c2,
                c1_kernel_complement: r.c1_kernel_complement,
                kernel_dim: r.kernel_dim(),
            })
        })
        .collect()
}

/// Observability constants of the segment `{x0} x T x (0, L)` across
/// truncations, against the unit weight.
pub fn vertical_constant_sweep(
    x0: f64,
    interval_length: f64,
    truncations: &[Truncation],
) -> Result<Vec<SweepRow>> {
    let region = ObservationRegion::vertical(x0, Interval::new(0.0, interval_length));
    sweep(&region, truncations, NormWeight::L2)
}

/// Horizontal-segment constants against the weight `(1 + n^2)^(-s)`.
pub fn horizontal_weighted_sweep(
    segments: &[HorizontalSegment],
    truncations: &[Truncation],
    weight_exponent: f64,
) -> Result<Vec<SweepRow>> {
    let region = ObservationRegion::horizontal(segments.to_vec());
    sweep(
        &region,
        truncations,
        NormWeight::YSobolev {
            s: -weight_exponent,
        },
    )
}

/// Observed energy `int_region |u|^2` straight from the coefficients, via the
/// spatial kernel only (no time integration): `int_set |u(x, y)|^2`.
pub fn spatial_energy(region: &ObservationRegion, state: &SpectralState) -> Result<f64> {
    let modes: Vec<ModeIndex> = state.truncation().modes().collect();
    let c = state.coeffs();
    let mut total = Complex64::new(0.0, 0.0);
    for (i, mi) in modes.iter().enumerate() {
        for (j, mj) in modes.iter().enumerate() {
            let s = region.spatial_kernel(mj.m - mi.m, mj.n - mi.n);
            total += c[i].conj() * s * c[j];
        }
    }
    Ok(total.re)
}
