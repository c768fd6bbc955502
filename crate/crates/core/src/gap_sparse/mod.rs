//! Uniform gaps of lattice frequency families, the difference form `Q`,
//! near-resonance sets `B(k,l,R)` and certified sparse covers.
//!
//! All arithmetic on lattice points is exact (`i128` or big integers);
//! floating point only appears in reported distances and in the asymptote
//! slopes of the `B`-set classifier.

mod bset;
mod cover;
mod qform;

pub use bset::{
    classify_b_set, enumerate_b_set, scan_threshold, Asymptote, BSetClass, BSetClassification,
    CapturedBy, CoreBound,
};
pub use cover::{
    build_cube_cover, build_sparse_cover, CoverOptions, GapCertificate, PartKind, SparseCover,
    SubFamily,
};
pub use qform::{q_form, q_form_big, q_identity_56, Identity56};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::spectrum::{omega, ModeIndex, Truncation};

/// Brute force is used up to this many points; larger families use the
/// sorted sweep.
const BRUTE_FORCE_LIMIT: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum GapNorm {
    #[default]
    Euclidean,
    Sup,
}

/// A mode together with its lifted point `(m, n, omega(m, n))`.
///
/// Cube-family points `k^3` are stored on the third axis as `(0, 0, k^3)`
/// with mode `(k, 0)`, so both families share the same distance code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct FrequencyPoint {
    pub mode: ModeIndex,
    pub lifted: [i64; 3],
}

impl FrequencyPoint {
    pub fn zk(mode: ModeIndex) -> Result<Self> {
        Ok(Self {
            mode,
            lifted: [mode.m, mode.n, omega(mode)?],
        })
    }

    pub fn cube(k: i64) -> Result<Self> {
        let cube = k
            .checked_mul(k)
            .and_then(|x| x.checked_mul(k))
            .ok_or(Error::Overflow("k^3"))?;
        Ok(Self {
            mode: ModeIndex::new(k, 0),
            lifted: [0, 0, cube],
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum FamilyKind {
    /// `{(m, n, m^3 + m n^2 - m) : m != 0}`.
    Zk,
    /// `{k^3 : k in Z}` on the real line.
    Cube,
}

/// A finite window of a frequency family.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct FrequencyFamily {
    pub kind: FamilyKind,
    pub window: Truncation,
    pub points: Vec<FrequencyPoint>,
}

impl FrequencyFamily {
    /// The ZK family over the window; the `m = 0` column is never included.
    pub fn zk(window: Truncation) -> Result<Self> {
        let points = window
            .modes()
            .filter(|mode| mode.m != 0)
            .map(FrequencyPoint::zk)
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            kind: FamilyKind::Zk,
            window,
            points,
        })
    }

    /// `{k^3 : |k| <= max_k}`.
    pub fn cube(max_k: u32) -> Result<Self> {
        Self::cube_range(0, max_k)
    }

    /// `{k^3 : min_abs <= |k| <= max_abs}`.
    pub fn cube_range(min_abs: u32, max_abs: u32) -> Result<Self> {
        let max = max_abs as i64;
        let points = (-max..=max)
            .filter(|k| k.unsigned_abs() >= min_abs as u64)
            .map(FrequencyPoint::cube)
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            kind: FamilyKind::Cube,
            window: Truncation::new(max_abs, 0, false),
            points,
        })
    }

    pub fn from_points(
        kind: FamilyKind,
        window: Truncation,
        points: Vec<FrequencyPoint>,
    ) -> Result<Self> {
        let mut seen = std::collections::HashSet::with_capacity(points.len());
        for p in &points {
            if !seen.insert(p.mode) {
                return Err(Error::InvalidArgument(format!("duplicate mode {}", p.mode)));
            }
        }
        Ok(Self {
            kind,
            window,
            points,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn uniform_gap(&self, norm: GapNorm) -> f64 {
        let lifted: Vec<[i64; 3]> = self.points.iter().map(|p| p.lifted).collect();
        uniform_gap(&lifted, norm)
    }
}

/// Exact distance between lattice points: squared euclidean or sup.
pub(crate) fn lattice_distance(a: &[i64; 3], b: &[i64; 3], norm: GapNorm) -> u128 {
    let d = |i: usize| (a[i] as i128 - b[i] as i128).unsigned_abs();
    match norm {
        GapNorm::Euclidean => (0..3).map(|i| d(i) * d(i)).sum(),
        GapNorm::Sup => (0..3).map(d).max().unwrap_or(0),
    }
}

fn to_distance(raw: u128, norm: GapNorm) -> f64 {
    match norm {
        GapNorm::Euclidean => (raw as f64).sqrt(),
        GapNorm::Sup => raw as f64,
    }
}

/// `inf |p - q|` over distinct pairs; `+inf` for fewer than two points.
pub fn uniform_gap(points: &[[i64; 3]], norm: GapNorm) -> f64 {
    match min_distance_raw(points, norm) {
        Some(raw) => to_distance(raw, norm),
        None => f64::INFINITY,
    }
}

/// Exact minimum pairwise distance (squared for the euclidean norm).
pub fn min_distance_raw(points: &[[i64; 3]], norm: GapNorm) -> Option<u128> {
    if points.len() < 2 {
        return None;
    }
    if points.len() <= BRUTE_FORCE_LIMIT {
        min_distance_brute(points, norm)
    } else {
        min_distance_sweep(points, norm)
    }
}

pub(crate) fn min_distance_brute(points: &[[i64; 3]], norm: GapNorm) -> Option<u128> {
    let mut best: Option<u128> = None;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            let d = lattice_distance(a, b, norm);
            best = Some(best.map_or(d, |x| x.min(d)));
        }
    }
    best
}

/// Sort on the third coordinate and only compare pairs whose third
/// coordinates differ by less than the best distance so far. Exact.
pub(crate) fn min_distance_sweep(points: &[[i64; 3]], norm: GapNorm) -> Option<u128> {
    if points.len() < 2 {
        return None;
    }
    let mut sorted = points.to_vec();
    sorted.sort_unstable_by_key(|p| p[2]);
    let mut best = u128::MAX;
    for i in 0..sorted.len() {
        for j in i + 1..sorted.len() {
            let gap = (sorted[j][2] as i128 - sorted[i][2] as i128).unsigned_abs();
            let bound = match norm {
                GapNorm::Euclidean => gap.saturating_mul(gap),
                GapNorm::Sup => gap,
            };
            if bound >= best {
                break;
            }
            best = best.min(lattice_distance(&sorted[i], &sorted[j], norm));
        }
    }
    Some(best)
}

/// `3m(m-1) + 1`, the gap stated for the cube family with `|k| < m`
/// removed.
///
/// Enumeration shows this is the gap of the one-sided tail `{k^3 : k >= m-1}`;
/// the two-sided set `{k^3 : |k| >= m}` has gap [`cube_tail_gap_sharp`].
pub fn truncated_cube_gap(m: u64) -> Result<u64> {
    if m == 0 {
        return Err(Error::InvalidArgument(
            "truncated_cube_gap needs m >= 1".into(),
        ));
    }
    m.checked_mul(m - 1)
        .and_then(|x| x.checked_mul(3))
        .and_then(|x| x.checked_add(1))
        .ok_or(Error::Overflow("3m(m-1)+1"))
}

/// Exact gap of `{k^3 : |k| >= m}`: `min(3m^2 + 3m + 1, 2m^3)`.
///
/// The first term is the step `(m+1)^3 - m^3` inside one tail, the second
/// the jump `m^3 - (-m)^3` across the origin; the latter is smaller only for
/// `m <= 2`.
pub fn cube_tail_gap_sharp(m: u64) -> Result<u64> {
    if m == 0 {
        return Ok(1);
    }
    let step = m
        .checked_mul(m)
        .and_then(|x| x.checked_mul(3))
        .and_then(|x| x.checked_add(3 * m + 1))
        .ok_or(Error::Overflow("3m^2+3m+1"))?;
    let jump = m
        .checked_pow(3)
        .and_then(|x| x.checked_mul(2))
        .ok_or(Error::Overflow("2m^3"))?;
    Ok(step.min(jump))
}

/// One-sided tail step `(m+1)^3 - m^3 = 3m^2 + 3m + 1`.
pub fn cube_one_sided_gap(m: u64) -> Result<u64> {
    m.checked_mul(m)
        .and_then(|x| x.checked_mul(3))
        .and_then(|x| x.checked_add(3 * m + 1))
        .ok_or(Error::Overflow("3m^2+3m+1"))
}
