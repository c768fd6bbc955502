use serde::Serialize;

use super::qform::q_form;
use crate::error::{Error, Result};
use crate::spectrum::{ModeIndex, Truncation};

/// Slack added to floating-point membership tests; every bound here is a
/// strict inequality derived from integers, so this only absorbs rounding.
const SLACK: f64 = 1e-9;

/// Consecutive clean rows required by [`scan_threshold`].
const SCAN_CLEAN_ROWS: i64 = 50;

/// The line `m = alpha * n + beta` in the `(n, m)` plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Asymptote {
    pub branch: u8,
    pub alpha: f64,
    pub beta: f64,
}

impl Asymptote {
    pub fn at(&self, n: i64) -> f64 {
        self.alpha * n as f64 + self.beta
    }

    pub fn distance(&self, mode: ModeIndex) -> f64 {
        (mode.m as f64 - self.at(mode.n)).abs()
    }
}

/// Explicit finite region containing every `B`-point not on a line or
/// asymptote strip.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum CoreBound {
    Empty,
    /// `|m + k/2| < m_radius` and `|n + l/2| < n_radius`.
    #[serde(rename_all = "camelCase")]
    Box {
        center_m: f64,
        center_n: f64,
        m_radius: f64,
        n_radius: f64,
    },
    /// Rows `|n| <= rows` with `y^2 < x^2 + c`, where
    /// `y = 3k(m + k/2) + l(n + l/2)` and `x = sqrt(l^2 - 3k^2)(n + l/2)`.
    #[serde(rename_all = "camelCase")]
    Hyperbolic {
        rows: i64,
        c: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum BSetClass {
    /// `3k^2 > l^2`, or `k = 0` with `l` odd.
    Finite,
    /// `k = 0`, `l` even: the row `n = n0` plus a finite set.
    #[serde(rename_all = "camelCase")]
    LineAndFinite { n0: i64 },
    /// `0 < 3k^2 < l^2`: two asymptote strips beyond row `threshold`.
    #[serde(rename_all = "camelCase")]
    AsymptotesAndFinite {
        asymptotes: [Asymptote; 2],
        /// Rows `|n| > threshold` are captured by a strip (proved bound).
        threshold: i64,
        /// Last row with an uncaptured point, found by scanning outward
        /// until 50 consecutive rows are clean.
        scanned_threshold: i64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum CapturedBy {
    Core,
    Line,
    Asymptote(u8),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct BSetClassification {
    pub k: i64,
    pub l: i64,
    pub r: f64,
    pub class: BSetClass,
    pub core: CoreBound,
}

struct Hyperbola {
    k: i64,
    l: i64,
    slope: f64,
    c: f64,
}

impl Hyperbola {
    fn new(k: i64, l: i64, r: f64) -> Self {
        let (kf, lf) = (k as f64, l as f64);
        let shift = 0.75 * kf * kf * (kf * kf + lf * lf - 4.0);
        Self {
            k,
            l,
            slope: (lf * lf - 3.0 * kf * kf).sqrt(),
            c: 3.0 * kf.abs() * r + shift.abs(),
        }
    }

    fn coords(&self, mode: ModeIndex) -> (f64, f64) {
        let (kf, lf) = (self.k as f64, self.l as f64);
        let xs = mode.n as f64 + 0.5 * lf;
        (
            self.slope * xs,
            3.0 * kf * (mode.m as f64 + 0.5 * kf) + lf * xs,
        )
    }

    /// Integer `m` candidates in row `n` that can satisfy `y^2 < x^2 + c`.
    fn row_candidates(&self, n: i64) -> std::ops::RangeInclusive<i64> {
        let (kf, lf) = (self.k as f64, self.l as f64);
        let xs = n as f64 + 0.5 * lf;
        let x = self.slope * xs;
        let reach = (x * x + self.c).sqrt();
        let a = (-reach - lf * xs) / (3.0 * kf) - 0.5 * kf;
        let b = (reach - lf * xs) / (3.0 * kf) - 0.5 * kf;
        (a.min(b).floor() as i64 - 1)..=(a.max(b).ceil() as i64 + 1)
    }

    /// Rows beyond this are within 1/2 of an asymptote:
    /// `min_j |m - m_j(n)| < c / (3|k| |x|)`.
    fn threshold(&self) -> i64 {
        let bound =
            2.0 * self.c / (3.0 * (self.k as f64).abs() * self.slope) + 0.5 * (self.l as f64).abs();
        bound.floor() as i64
    }
}

fn asymptotes(k: i64, l: i64) -> [Asymptote; 2] {
    let (kf, lf) = (k as f64, l as f64);
    let root = (lf * lf - 3.0 * kf * kf).sqrt();
    let make = |branch: u8, sign: f64| {
        let alpha = (sign * root - lf) / (3.0 * kf);
        Asymptote {
            branch,
            alpha,
            beta: (alpha * lf - kf) / 2.0,
        }
    };
    [make(1, 1.0), make(2, -1.0)]
}

fn check_pair(k: i64, l: i64, r: f64) -> Result<()> {
    if k == 0 && l == 0 {
        return Err(Error::InvalidArgument("(k, l) must be nonzero".into()));
    }
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "R must be positive, got {r}"
        )));
    }
    if k.unsigned_abs().max(l.unsigned_abs()) > 1 << 20 {
        return Err(Error::InvalidArgument("|k|, |l| must be below 2^20".into()));
    }
    Ok(())
}

/// `|Q(k,l,m,n)| < R` and `m != 0`.
pub(crate) fn in_b_set(k: i64, l: i64, r: f64, mode: ModeIndex) -> Result<bool> {
    Ok(mode.m != 0 && (q_form(k, l, mode.m, mode.n)?.unsigned_abs() as f64) < r)
}

/// Classifies `B(k,l,R) = {(m,n) : m != 0, |Q(k,l,m,n)| < R}`.
pub fn classify_b_set(k: i64, l: i64, r: f64) -> Result<BSetClassification> {
    check_pair(k, l, r)?;
    let (kf, lf) = (k as f64, l as f64);
    let (class, core) = if k == 0 {
        // Q = m l (2n + l); off the line |m| >= 1 and |2n + l| >= 1.
        let core = CoreBound::Box {
            center_m: 0.0,
            center_n: -0.5 * lf,
            m_radius: r / lf.abs(),
            n_radius: r / (2.0 * lf.abs()),
        };
        let class = if l % 2 == 0 {
            BSetClass::LineAndFinite { n0: -l / 2 }
        } else {
            BSetClass::Finite
        };
        (class, core)
    } else if 3 * k * k > l * l {
        // 3kQ = y^2 + (3k^2 - l^2)(n + l/2)^2 + shift with a definite form.
        let definite = 3.0 * kf * kf - lf * lf;
        let shift = 0.75 * kf * kf * (kf * kf + lf * lf - 4.0);
        let budget = 3.0 * kf.abs() * r - shift;
        let core = if budget <= 0.0 {
            CoreBound::Empty
        } else {
            let n_radius = (budget / definite).sqrt();
            CoreBound::Box {
                center_m: -0.5 * kf,
                center_n: -0.5 * lf,
                m_radius: (budget.sqrt() + lf.abs() * n_radius) / (3.0 * kf.abs()),
                n_radius,
            }
        };
        (BSetClass::Finite, core)
    } else {
        let hyp = Hyperbola::new(k, l, r);
        let threshold = hyp.threshold();
        let asymptotes = asymptotes(k, l);
        let scanned_threshold = scan_rows(&hyp, r, &asymptotes, threshold + SCAN_CLEAN_ROWS)?;
        (
            BSetClass::AsymptotesAndFinite {
                asymptotes,
                threshold,
                scanned_threshold,
            },
            CoreBound::Hyperbolic {
                rows: threshold,
                c: hyp.c,
            },
        )
    };
    Ok(BSetClassification {
        k,
        l,
        r,
        class,
        core,
    })
}

fn scan_rows(hyp: &Hyperbola, r: f64, strips: &[Asymptote; 2], max_row: i64) -> Result<i64> {
    let mut last_bad = 0;
    for row in 0..=max_row {
        if row - last_bad > SCAN_CLEAN_ROWS {
            break;
        }
        for n in [row, -row] {
            for m in hyp.row_candidates(n) {
                let mode = ModeIndex::new(m, n);
                if in_b_set(hyp.k, hyp.l, r, mode)?
                    && strips.iter().all(|a| a.distance(mode) >= 0.5)
                {
                    last_bad = row;
                }
            }
        }
    }
    Ok(last_bad)
}

/// The scanned asymptote threshold for `0 < 3k^2 < l^2`, `None` otherwise.
pub fn scan_threshold(k: i64, l: i64, r: f64) -> Result<Option<i64>> {
    match classify_b_set(k, l, r)?.class {
        BSetClass::AsymptotesAndFinite {
            scanned_threshold, ..
        } => Ok(Some(scanned_threshold)),
        _ => Ok(None),
    }
}

impl BSetClassification {
    /// Which declared piece contains `mode`, if any.
    pub fn captures(&self, mode: ModeIndex) -> Option<CapturedBy> {
        match &self.class {
            BSetClass::LineAndFinite { n0 } if mode.n == *n0 => return Some(CapturedBy::Line),
            BSetClass::AsymptotesAndFinite {
                asymptotes,
                threshold,
                ..
            } if mode.n.abs() > *threshold => {
                return asymptotes
                    .iter()
                    .find(|a| a.distance(mode) < 0.5 + SLACK)
                    .map(|a| CapturedBy::Asymptote(a.branch));
            }
            _ => {}
        }
        self.core_contains(mode).then_some(CapturedBy::Core)
    }

    pub fn core_contains(&self, mode: ModeIndex) -> bool {
        match self.core {
            CoreBound::Empty => false,
            CoreBound::Box {
                center_m,
                center_n,
                m_radius,
                n_radius,
            } => {
                (mode.m as f64 - center_m).abs() < m_radius + SLACK
                    && (mode.n as f64 - center_n).abs() < n_radius + SLACK
            }
            CoreBound::Hyperbolic { rows, c } => {
                let (x, y) = Hyperbola::new(self.k, self.l, self.r).coords(mode);
                mode.n.abs() <= rows && y * y < x * x + c + SLACK * (1.0 + c)
            }
        }
    }

    /// Asymptote constants, when the class has them.
    pub fn asymptotes(&self) -> Option<&[Asymptote; 2]> {
        match &self.class {
            BSetClass::AsymptotesAndFinite { asymptotes, .. } => Some(asymptotes),
            _ => None,
        }
    }

    /// Every point of the finite core, enumerated exactly.
    pub fn core_points(&self) -> Result<Vec<ModeIndex>> {
        let (k, l, r) = (self.k, self.l, self.r);
        let mut out = Vec::new();
        let mut push_row = |n: i64, ms: std::ops::RangeInclusive<i64>| -> Result<()> {
            for m in ms {
                let mode = ModeIndex::new(m, n);
                if in_b_set(k, l, r, mode)? && self.captures(mode) == Some(CapturedBy::Core) {
                    out.push(mode);
                }
            }
            Ok(())
        };
        match self.core {
            CoreBound::Empty => {}
            CoreBound::Box {
                center_m,
                center_n,
                m_radius,
                n_radius,
            } => {
                let m_lo = (center_m - m_radius).floor() as i64;
                let m_hi = (center_m + m_radius).ceil() as i64;
                let n_lo = (center_n - n_radius).floor() as i64;
                let n_hi = (center_n + n_radius).ceil() as i64;
                for n in n_lo..=n_hi {
                    push_row(n, m_lo..=m_hi)?;
                }
            }
            CoreBound::Hyperbolic { rows, .. } => {
                let hyp = Hyperbola::new(k, l, r);
                for n in -rows..=rows {
                    push_row(n, hyp.row_candidates(n))?;
                }
            }
        }
        Ok(out)
    }
}

/// All window modes with `m != 0` and `|Q(k,l,m,n)| < R`.
pub fn enumerate_b_set(k: i64, l: i64, r: f64, window: Truncation) -> Result<Vec<ModeIndex>> {
    check_pair(k, l, r)?;
    let mut out = Vec::new();
    for mode in window.modes() {
        if in_b_set(k, l, r, mode)? {
            out.push(mode);
        }
    }
    Ok(out)
}
