use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use super::bset::{classify_b_set, in_b_set, Asymptote, BSetClass, BSetClassification};
use super::{
    cube_one_sided_gap, min_distance_raw, FamilyKind, FrequencyFamily, FrequencyPoint, GapNorm,
};
use crate::error::{Error, Result};
use crate::spectrum::{ModeIndex, Truncation};

/// Rounding margin applied to floating-point gap bounds.
const ROUNDING: f64 = 1e-9;

/// Upper limit on the row searched for an asymptote tail start.
const MAX_TAIL_START: i64 = 10_000_000;

#[derive(Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CoverOptions {
    /// `R = safety * 2 / epsilon`; must exceed 1.
    pub safety: f64,
    pub norm: GapNorm,
}

impl Default for CoverOptions {
    fn default() -> Self {
        Self {
            safety: 1.25,
            norm: GapNorm::Euclidean,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum PartKind {
    FiniteList {
        points: Vec<ModeIndex>,
    },
    /// `{(m, n0) : |m| >= min_abs_m}`.
    #[serde(rename_all = "camelCase")]
    VerticalLine {
        n0: i64,
        min_abs_m: i64,
    },
    /// Points of `B(k,l,R)` with `|n| >= min_abs_n` within 1/2 of the
    /// asymptote `m = alpha n + beta`.
    #[serde(rename_all = "camelCase")]
    AsymptoteSequence {
        k: i64,
        l: i64,
        r: f64,
        branch: u8,
        alpha: f64,
        beta: f64,
        min_abs_n: i64,
    },
    /// `{k^3 : sign * k >= from}`.
    CubeTail {
        sign: i8,
        from: i64,
    },
    /// Modes outside every `B(k,l,R)` with `0 < max(|k|,|l|) < R`.
    Remainder {
        r: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum GapCertificate {
    /// A single point; the gap is infinite by convention.
    Singleton,
    /// A finite list whose gap was enumerated.
    Enumerated,
    /// `min(3M(M+1) + n0^2, 2M(M^2 + n0^2 - 1))` along a row.
    LineStep,
    /// Cubic step bound along an asymptote with tracked error constants.
    AsymptoteBound,
    /// `(m+1)^3 - m^3` on a one-sided cube tail.
    CubeStep,
    /// `|Q| >= R` off every near-resonance set.
    ResonanceBound,
    /// Only the window enumeration backs the gap.
    WindowOnly,
}

fn serialize_gap<S: Serializer>(gap: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if gap.is_infinite() {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(*gap)
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SubFamily {
    pub description: PartKind,
    #[serde(serialize_with = "serialize_gap")]
    pub certified_gap: f64,
    pub certificate: GapCertificate,
    pub window_members: usize,
    #[serde(serialize_with = "serialize_gap")]
    pub window_gap: f64,
}

impl SubFamily {
    fn singleton(point: &FrequencyPoint) -> Self {
        Self {
            description: PartKind::FiniteList {
                points: vec![point.mode],
            },
            certified_gap: f64::INFINITY,
            certificate: GapCertificate::Singleton,
            window_members: 1,
            window_gap: f64::INFINITY,
        }
    }

    /// Membership of a point in the (possibly infinite) described set.
    pub fn contains(&self, point: &FrequencyPoint) -> Result<bool> {
        let mode = point.mode;
        Ok(match &self.description {
            PartKind::FiniteList { points } => points.contains(&mode),
            PartKind::VerticalLine { n0, min_abs_m } => {
                mode.n == *n0 && mode.m != 0 && mode.m.abs() >= *min_abs_m
            }
            PartKind::AsymptoteSequence {
                k,
                l,
                r,
                alpha,
                beta,
                min_abs_n,
                ..
            } => {
                let strip = Asymptote {
                    branch: 0,
                    alpha: *alpha,
                    beta: *beta,
                };
                mode.n.abs() >= *min_abs_n
                    && strip.distance(mode) < 0.5
                    && in_b_set(*k, *l, *r, mode)?
            }
            PartKind::CubeTail { sign, from } => *sign as i64 * mode.m >= *from,
            PartKind::Remainder { r } => !in_lambda_prime(*r, mode)?,
        })
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SparseCover {
    pub family: FamilyKind,
    #[serde(serialize_with = "serialize_gap")]
    pub epsilon: f64,
    /// Resonance radius of the recipe, absent for cube covers.
    pub r: Option<f64>,
    pub norm: GapNorm,
    pub window: Truncation,
    pub window_points: usize,
    pub parts: Vec<SubFamily>,
    pub gap_budget: f64,
}

impl SparseCover {
    pub fn singleton_count(&self) -> usize {
        self.parts
            .iter()
            .filter(|p| p.certificate == GapCertificate::Singleton)
            .count()
    }

    pub fn remainder(&self) -> Option<&SubFamily> {
        self.parts
            .iter()
            .find(|p| matches!(p.description, PartKind::Remainder { .. }))
    }

    /// Re-checks coverage, certified gaps against window gaps and the
    /// budget; fills in the window statistics of each part.
    pub fn verify(&mut self, target: &FrequencyFamily) -> Result<()> {
        let mut covered = vec![false; target.points.len()];
        for part in &mut self.parts {
            let mut members = Vec::new();
            for (i, p) in target.points.iter().enumerate() {
                if part.contains(p)? {
                    covered[i] = true;
                    members.push(p.lifted);
                }
            }
            part.window_members = members.len();
            part.window_gap = match min_distance_raw(&members, self.norm) {
                Some(raw) => match self.norm {
                    GapNorm::Euclidean => (raw as f64).sqrt(),
                    GapNorm::Sup => raw as f64,
                },
                None => f64::INFINITY,
            };
            if part.certified_gap > part.window_gap * (1.0 + ROUNDING) {
                return Err(Error::CertificationFailed(format!(
                    "{:?}: certified gap {} exceeds window gap {}",
                    part.description, part.certified_gap, part.window_gap
                )));
            }
        }
        if let Some(i) = covered.iter().position(|c| !c) {
            return Err(Error::CertificationFailed(format!(
                "window point {} is not covered",
                target.points[i].mode
            )));
        }
        self.gap_budget = self.parts.iter().map(|p| 1.0 / p.certified_gap).sum();
        if !(self.gap_budget < self.epsilon) {
            return Err(Error::CertificationFailed(format!(
                "gap budget {} is not below epsilon {}",
                self.gap_budget, self.epsilon
            )));
        }
        Ok(())
    }
}

/// Pairs `(k, l) != 0` with `|k|, |l| < r`.
fn resonance_pairs(r: f64) -> Vec<(i64, i64)> {
    let reach = (r.ceil() as i64 - 1).max(0);
    let mut out = Vec::new();
    for k in -reach..=reach {
        for l in -reach..=reach {
            if (k, l) != (0, 0) {
                out.push((k, l));
            }
        }
    }
    out
}

fn in_lambda_prime(r: f64, mode: ModeIndex) -> Result<bool> {
    for (k, l) in resonance_pairs(r) {
        if in_b_set(k, l, r, mode)? {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Smallest `M >= 1` whose row tail gap reaches `target`, with that gap.
fn line_tail(n0: i64, target: f64) -> Result<(i64, f64)> {
    let n2 = (n0 as i128) * (n0 as i128);
    for m in 1..=MAX_TAIL_START as i128 {
        let step = 3 * m * (m + 1) + n2;
        let jump = 2 * m * (m * m + n2 - 1);
        let gap = step.min(jump);
        if gap as f64 >= target {
            return Ok((m as i64, gap as f64));
        }
    }
    Err(Error::CertificationFailed(format!(
        "no line tail start for n0 = {n0}"
    )))
}

/// First row `Nt` from which the asymptote tail provably has gap `>= target`.
///
/// Writing `m = m_j(n) + d` with `|d| < kappa / |n|`, the frequency is the
/// cubic `h(n) = omega(m_j(n), n)` up to an error `<= A|n| + B`. Consecutive
/// rows then differ by at least `Dq(n) - A(2n+1) - 2B`, rows on opposite
/// sides by at least `2|h(Nt) - h(-Nt)|/2 - 2(A Nt + B)`.
fn asymptote_tail(
    class: &BSetClassification,
    strip: &Asymptote,
    threshold: i64,
    target: f64,
) -> Option<(i64, f64)> {
    let (kf, lf) = (class.k as f64, class.l as f64);
    let slope = (lf * lf - 3.0 * kf * kf).sqrt();
    let c = 3.0 * kf.abs() * class.r + (0.75 * kf * kf * (kf * kf + lf * lf - 4.0)).abs();
    let kappa = 2.0 * c / (3.0 * kf.abs() * slope);
    let (a, b) = (strip.alpha, strip.beta);
    let a3 = a * a * a + a;
    let a2 = 3.0 * a * a * b + b;
    let a1 = 3.0 * a * b * b - a;
    let bp = b.abs() + 0.5;
    let err_slope = kappa * (3.0 * a * a + 1.0);
    let err_const = kappa * (6.0 * a.abs() * bp + 3.0 * bp * bp + 1.0);
    let lin = (3.0 * a3 + 2.0 * a2).abs();
    let cst = (a3 + a2 + a1).abs();
    let step_floor = |i: f64| 3.0 * a3.abs() * i * i - lin * i - cst;

    let start = [
        threshold + 1,
        class.l.abs(),
        1,
        ((lin + 2.0 * err_slope) / (6.0 * a3.abs())).ceil() as i64,
        // the two strips are at least 1 apart
        (1.5 * kf.abs() / slope + 0.5 * lf.abs()).ceil() as i64,
    ]
    .into_iter()
    .max()
    .unwrap_or(1);

    for nt in start..=MAX_TAIL_START {
        let n = nt as f64;
        let dq = step_floor(n);
        if dq <= err_slope {
            continue;
        }
        let odd = a3 * n * n * n + a1 * n;
        if odd.signum() != a3.signum() {
            continue;
        }
        let same_side = dq - err_slope * (2.0 * n + 1.0) - 2.0 * err_const;
        let cross = 2.0 * odd.abs() - 2.0 * (err_slope * n + err_const);
        let gap = same_side.min(cross) * (1.0 - ROUNDING);
        if gap >= target {
            return Some((nt, gap));
        }
    }
    None
}

/// Sparse cover of a ZK or cube window.
///
/// For the ZK family the recipe is: `R = safety * 2 / epsilon`; every
/// near-resonance set `B(k,l,R)` with `|k|, |l| < R` splits into a finite
/// core, a row tail or two asymptote tails. Tails start late enough that
/// their certified gaps share the budget `epsilon - 1/R`; leftover window
/// points of the resonance union become singletons; everything else forms
/// one part with gap `R`. Singleton parts are materialised for window
/// points only, the tail and remainder parts describe infinite sets.
pub fn build_sparse_cover(
    target: &FrequencyFamily,
    epsilon: f64,
    opts: CoverOptions,
) -> Result<SparseCover> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    if !(opts.safety > 1.0 && opts.safety.is_finite()) {
        return Err(Error::InvalidArgument("safety factor must exceed 1".into()));
    }
    if epsilon.is_infinite() {
        return single_part_cover(target, opts.norm);
    }
    match target.kind {
        FamilyKind::Cube => build_cube_cover(target, epsilon, None),
        FamilyKind::Zk => build_zk_cover(target, epsilon, opts),
    }
}

fn single_part_cover(target: &FrequencyFamily, norm: GapNorm) -> Result<SparseCover> {
    let gap = target.uniform_gap(norm);
    let mut cover = SparseCover {
        family: target.kind,
        epsilon: f64::INFINITY,
        r: None,
        norm,
        window: target.window,
        window_points: target.len(),
        parts: vec![SubFamily {
            description: PartKind::FiniteList {
                points: target.points.iter().map(|p| p.mode).collect(),
            },
            certified_gap: gap,
            certificate: if target.len() < 2 {
                GapCertificate::Singleton
            } else {
                GapCertificate::Enumerated
            },
            window_members: target.len(),
            window_gap: gap,
        }],
        gap_budget: 0.0,
    };
    cover.verify(target)?;
    Ok(cover)
}

fn build_zk_cover(
    target: &FrequencyFamily,
    epsilon: f64,
    opts: CoverOptions,
) -> Result<SparseCover> {
    let r = opts.safety * 2.0 / epsilon;
    let tail_budget = epsilon - 1.0 / r;
    let classes = resonance_pairs(r)
        .into_par_iter()
        .map(|(k, l)| classify_b_set(k, l, r))
        .collect::<Result<Vec<_>>>()?;

    let lines: BTreeSet<i64> = classes
        .iter()
        .filter_map(|c| match c.class {
            BSetClass::LineAndFinite { n0 } => Some(n0),
            _ => None,
        })
        .collect();
    let asymptote_classes: Vec<&BSetClassification> = classes
        .iter()
        .filter(|c| c.asymptotes().is_some())
        .collect();
    let tail_count = lines.len() + 2 * asymptote_classes.len();
    let target_gap = tail_count as f64 / tail_budget * (1.0 + 1e-6);

    let mut parts = Vec::new();
    for &n0 in &lines {
        let (min_abs_m, gap) = line_tail(n0, target_gap)?;
        parts.push(SubFamily {
            description: PartKind::VerticalLine { n0, min_abs_m },
            certified_gap: gap,
            certificate: GapCertificate::LineStep,
            window_members: 0,
            window_gap: f64::INFINITY,
        });
    }
    for class in &asymptote_classes {
        let BSetClass::AsymptotesAndFinite {
            asymptotes,
            threshold,
            ..
        } = &class.class
        else {
            continue;
        };
        for strip in asymptotes {
            let (start, gap, certificate) =
                match asymptote_tail(class, strip, *threshold, target_gap) {
                    Some((start, gap)) => (start, gap, GapCertificate::AsymptoteBound),
                    None => (*threshold + 1, target_gap, GapCertificate::WindowOnly),
                };
            parts.push(SubFamily {
                description: PartKind::AsymptoteSequence {
                    k: class.k,
                    l: class.l,
                    r,
                    branch: strip.branch,
                    alpha: strip.alpha,
                    beta: strip.beta,
                    min_abs_n: start,
                },
                certified_gap: gap,
                certificate,
                window_members: 0,
                window_gap: f64::INFINITY,
            });
        }
    }

    let tail_parts = parts.len();
    for point in &target.points {
        if !in_lambda_prime(r, point.mode)? {
            continue;
        }
        let mut in_tail = false;
        for part in &parts[..tail_parts] {
            if part.contains(point)? {
                in_tail = true;
                break;
            }
        }
        if !in_tail {
            parts.push(SubFamily::singleton(point));
        }
    }
    parts.push(SubFamily {
        description: PartKind::Remainder { r },
        certified_gap: r,
        certificate: GapCertificate::ResonanceBound,
        window_members: 0,
        window_gap: f64::INFINITY,
    });

    let mut cover = SparseCover {
        family: FamilyKind::Zk,
        epsilon,
        r: Some(r),
        norm: opts.norm,
        window: target.window,
        window_points: target.len(),
        parts,
        gap_budget: 0.0,
    };
    cover.verify(target)?;
    Ok(cover)
}

/// Two one-sided tails `{k^3 : +-k >= m}` plus singletons for `|k| < m`.
/// The default `m` is the least integer above `1 / (3 epsilon)`.
pub fn build_cube_cover(
    target: &FrequencyFamily,
    epsilon: f64,
    tail_start: Option<u64>,
) -> Result<SparseCover> {
    if target.kind != FamilyKind::Cube {
        return Err(Error::InvalidArgument(
            "cube cover needs a cube family".into(),
        ));
    }
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let m = match tail_start {
        Some(m) => m.max(1),
        None => (1.0 / (3.0 * epsilon)).floor() as u64 + 1,
    };
    let gap = cube_one_sided_gap(m)? as f64;
    let from = i64::try_from(m).map_err(|_| Error::Overflow("tail start"))?;
    let mut parts: Vec<SubFamily> = [1i8, -1]
        .into_iter()
        .map(|sign| SubFamily {
            description: PartKind::CubeTail { sign, from },
            certified_gap: gap,
            certificate: GapCertificate::CubeStep,
            window_members: 0,
            window_gap: f64::INFINITY,
        })
        .collect();
    for point in &target.points {
        if point.mode.m.abs() < from {
            parts.push(SubFamily::singleton(point));
        }
    }
    let mut cover = SparseCover {
        family: FamilyKind::Cube,
        epsilon,
        r: None,
        norm: GapNorm::Euclidean,
        window: target.window,
        window_points: target.len(),
        parts,
        gap_budget: 0.0,
    };
    cover.verify(target)?;
    Ok(cover)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cube_cover_matches_worked_example() {
        for m in 1..=6u32 {
            let fam = FrequencyFamily::cube(3 * m).unwrap();
            let cover = build_cube_cover(&fam, 1.0 / m as f64, Some(m as u64)).unwrap();
            assert_eq!(cover.singleton_count(), 2 * m as usize - 1);
            assert_eq!(cover.parts.len(), 2 * m as usize + 1);
            assert!(cover.gap_budget < 2.0 / (3.0 * (m * m) as f64));
        }
    }

    #[test]
    fn default_cube_tail_start_meets_budget() {
        let fam = FrequencyFamily::cube(40).unwrap();
        for eps in [1.0, 0.3, 0.05, 0.01] {
            let cover = build_cube_cover(&fam, eps, None).unwrap();
            assert!(cover.gap_budget < eps);
        }
    }

    #[test]
    fn infinite_epsilon_gives_one_part() {
        let fam = FrequencyFamily::zk(Truncation::square(4)).unwrap();
        let cover = build_sparse_cover(&fam, f64::INFINITY, CoverOptions::default()).unwrap();
        assert_eq!(cover.parts.len(), 1);
        assert!(cover.parts[0].certified_gap >= 1.0);
    }

    #[test]
    fn small_zk_cover_is_sound() {
        let fam = FrequencyFamily::zk(Truncation::square(6)).unwrap();
        let cover = build_sparse_cover(&fam, 1.0, CoverOptions::default()).unwrap();
        assert!(cover.gap_budget < 1.0);
        assert!(cover.remainder().unwrap().window_gap >= cover.r.unwrap());
    }

    #[test]
    fn line_tail_gap_formula_is_exact() {
        for n0 in [-3i64, -1, 1, 2] {
            let (m0, gap) = line_tail(n0, 50.0).unwrap();
            let pts: Vec<[i64; 3]> = (-200i64..=200)
                .filter(|m| m.abs() >= m0)
                .map(|m| [m, n0, m * m * m + m * n0 * n0 - m])
                .collect();
            let raw = min_distance_raw(&pts, GapNorm::Sup).unwrap();
            assert_eq!(raw as f64, gap, "n0 = {n0}");
        }
    }

    #[test]
    fn rejects_bad_epsilon() {
        let fam = FrequencyFamily::zk(Truncation::square(2)).unwrap();
        assert!(build_sparse_cover(&fam, 0.0, CoverOptions::default()).is_err());
        assert!(build_sparse_cover(&fam, -1.0, CoverOptions::default()).is_err());
    }
}
