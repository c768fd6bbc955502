//! Fourier modes on the torus, the ZK dispersion relation and exact mode
//! evolution.
//!
//! A solution of `u_t + u_x + u_xxx + u_xyy = 0` is the series
//! `sum c[m,n] exp(i(m x + n y + omega(m,n) t))` with
//! `omega(m,n) = m^3 + m n^2 - m`. Everything here works on a finite
//! rectangle of modes ([`Truncation`]) and stores coefficients densely.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `||u||^2_{L^2(T x T)} = PARSEVAL * sum |c|^2`.
pub const PARSEVAL: f64 = 4.0 * PI * PI;

const TWO_PI_HI: f64 = 2.0 * PI;
const TWO_PI_LO: f64 = 2.449_293_598_294_706_4e-16;

/// Above this magnitude the phase `omega * t` is reduced modulo 2 pi in
/// double-double arithmetic before taking sin/cos.
const REDUCTION_THRESHOLD: f64 = 1024.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ModeIndex {
    pub m: i64,
    pub n: i64,
}

impl ModeIndex {
    pub const fn new(m: i64, n: i64) -> Self {
        Self { m, n }
    }
}

impl fmt::Display for ModeIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.m, self.n)
    }
}

/// `omega(m,n) = m^3 + m n^2 - m`, checked.
pub fn omega(mode: ModeIndex) -> Result<i64> {
    let m = mode.m as i128;
    let n = mode.n as i128;
    let overflow = || Error::Overflow("omega");
    let square_sum = m
        .checked_mul(m)
        .and_then(|mm| n.checked_mul(n).and_then(|nn| mm.checked_add(nn)))
        .ok_or_else(overflow)?;
    let value = m.checked_mul(square_sum - 1).ok_or_else(overflow)?;
    i64::try_from(value).map_err(|_| overflow())
}

/// The rectangle `|m| <= max_m, |n| <= max_n`, optionally without the
/// `m = 0` column (the space `L^2_x` of fields with no pure-`y` part).
///
/// Modes are enumerated lexicographically in `(m, n)`; every vector and
/// matrix in the crate is indexed in this order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Truncation {
    pub max_m: u32,
    pub max_n: u32,
    #[serde(default)]
    pub exclude_m_zero: bool,
}

impl Truncation {
    pub const fn new(max_m: u32, max_n: u32, exclude_m_zero: bool) -> Self {
        Self {
            max_m,
            max_n,
            exclude_m_zero,
        }
    }

    /// Square truncation on the full lattice.
    pub const fn square(max: u32) -> Self {
        Self::new(max, max, false)
    }

    fn column_count(&self) -> usize {
        let full = 2 * self.max_m as usize + 1;
        if self.exclude_m_zero {
            full - 1
        } else {
            full
        }
    }

    fn row_len(&self) -> usize {
        2 * self.max_n as usize + 1
    }

    pub fn mode_count(&self) -> usize {
        self.column_count() * self.row_len()
    }

    pub fn is_empty(&self) -> bool {
        self.mode_count() == 0
    }

    pub fn contains(&self, mode: ModeIndex) -> bool {
        self.index_of(mode).is_some()
    }

    pub fn index_of(&self, mode: ModeIndex) -> Option<usize> {
        let (mm, nn) = (self.max_m as i64, self.max_n as i64);
        if mode.m.abs() > mm || mode.n.abs() > nn || (self.exclude_m_zero && mode.m == 0) {
            return None;
        }
        let mut column = (mode.m + mm) as usize;
        if self.exclude_m_zero && mode.m > 0 {
            column -= 1;
        }
        Some(column * self.row_len() + (mode.n + nn) as usize)
    }

    pub fn mode_at(&self, index: usize) -> ModeIndex {
        let column = index / self.row_len();
        let row = index % self.row_len();
        let mut m = column as i64 - self.max_m as i64;
        if self.exclude_m_zero && m >= 0 {
            m += 1;
        }
        ModeIndex::new(m, row as i64 - self.max_n as i64)
    }

    pub fn modes(&self) -> impl Iterator<Item = ModeIndex> + '_ {
        (0..self.mode_count()).map(move |i| self.mode_at(i))
    }

    /// Dispersion frequencies in enumeration order.
    pub fn frequencies(&self) -> Result<Vec<i64>> {
        self.modes().map(omega).collect()
    }

    pub fn max_abs_omega(&self) -> Result<i64> {
        Ok(self
            .frequencies()?
            .into_iter()
            .map(i64::abs)
            .max()
            .unwrap_or(0))
    }
}

impl fmt::Display for Truncation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|m|<={}, |n|<={}", self.max_m, self.max_n)?;
        if self.exclude_m_zero {
            write!(f, ", m!=0")?;
        }
        Ok(())
    }
}

/// The anisotropic Sobolev weight `(1+m^2)^r + (1+n^2)^s`.
///
/// Note that `r = s = 0` gives weight 2, not 1: the sum form double counts
/// the `L^2` norm. [`NormWeight::L2`] is the unit weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SobolevWeight {
    pub r: f64,
    pub s: f64,
}

impl SobolevWeight {
    pub const fn new(r: f64, s: f64) -> Self {
        Self { r, s }
    }

    pub fn weight(&self, mode: ModeIndex) -> f64 {
        let (m, n) = (mode.m as f64, mode.n as f64);
        (1.0 + m * m).powf(self.r) + (1.0 + n * n).powf(self.s)
    }
}

/// Diagonal mode weights used on the right-hand side of observability
/// estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase", deny_unknown_fields)]
pub enum NormWeight {
    /// Unit weight (`L^2` up to the Parseval factor).
    L2,
    Sobolev {
        r: f64,
        s: f64,
    },
    /// `(1+n^2)^s`; with `s < 0` this is the `H^{0,s}`-type weight that
    /// decays in the `y`-frequency only.
    YSobolev {
        s: f64,
    },
}

impl NormWeight {
    pub fn weight(&self, mode: ModeIndex) -> f64 {
        match *self {
            NormWeight::L2 => 1.0,
            NormWeight::Sobolev { r, s } => SobolevWeight::new(r, s).weight(mode),
            NormWeight::YSobolev { s } => {
                let n = mode.n as f64;
                (1.0 + n * n).powf(s)
            }
        }
    }
}

impl From<SobolevWeight> for NormWeight {
    fn from(w: SobolevWeight) -> Self {
        NormWeight::Sobolev { r: w.r, s: w.s }
    }
}

/// `exp(i * omega * t)` with argument reduction for large `|omega t|`.
pub fn phase(omega: i64, t: f64) -> Complex64 {
    Complex64::cis(reduced_angle(omega, t))
}

/// `omega * t` reduced to (-pi, pi] when it is large. The product is
/// carried as an exact double-double before subtracting multiples of 2 pi.
pub fn reduced_angle(omega: i64, t: f64) -> f64 {
    let w = omega as f64;
    let p = w * t;
    if p.abs() <= REDUCTION_THRESHOLD || !p.is_finite() {
        return p;
    }
    let err = w.mul_add(t, -p);
    // `omega` itself may not be exact in f64 above 2^53; fold the rest in.
    let w_err = (omega - w as i64) as f64 * t;
    let k = (p / TWO_PI_HI).round();
    let r = (-k).mul_add(TWO_PI_HI, p);
    let r = (-k).mul_add(TWO_PI_LO, r) + err + w_err;
    r - TWO_PI_HI * (r / TWO_PI_HI).round()
}

/// Truncated Fourier coefficient array of a field on the torus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StateRepr", into = "StateRepr")]
pub struct SpectralState {
    truncation: Truncation,
    coeffs: Vec<Complex64>,
}

impl SpectralState {
    pub fn new(truncation: Truncation, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != truncation.mode_count() {
            return Err(Error::TruncationMismatch(format!(
                "{} coefficients for {} modes ({truncation})",
                coeffs.len(),
                truncation.mode_count()
            )));
        }
        Ok(Self { truncation, coeffs })
    }

    pub fn zeros(truncation: Truncation) -> Self {
        Self {
            truncation,
            coeffs: vec![Complex64::new(0.0, 0.0); truncation.mode_count()],
        }
    }

    /// Unit coefficient at `mode`, zero elsewhere.
    pub fn single(truncation: Truncation, mode: ModeIndex, value: Complex64) -> Result<Self> {
        let index = truncation.index_of(mode).ok_or_else(|| {
            Error::TruncationMismatch(format!("mode {mode} outside {truncation}"))
        })?;
        let mut state = Self::zeros(truncation);
        state.coeffs[index] = value;
        Ok(state)
    }

    /// Coefficients with independent real and imaginary parts uniform in
    /// `[-1, 1)`.
    pub fn random<R: Rng + ?Sized>(truncation: Truncation, rng: &mut R) -> Self {
        let coeffs = (0..truncation.mode_count())
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        Self { truncation, coeffs }
    }

    pub fn truncation(&self) -> Truncation {
        self.truncation
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn coeff(&self, mode: ModeIndex) -> Option<Complex64> {
        self.truncation.index_of(mode).map(|i| self.coeffs[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (ModeIndex, Complex64)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| (self.truncation.mode_at(i), *c))
    }

    /// Exact free evolution: every coefficient picks up `exp(i omega t)`.
    pub fn evolve(&self, t: f64) -> Result<Self> {
        let coeffs = self
            .iter()
            .map(|(mode, c)| Ok(c * phase(omega(mode)?, t)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            truncation: self.truncation,
            coeffs,
        })
    }

    /// `(sum weight(m,n) |c|^2)^(1/2)` without the Parseval factor.
    pub fn norm(&self, weight: &SobolevWeight) -> f64 {
        self.weighted_norm(&NormWeight::from(*weight))
    }

    pub fn weighted_norm(&self, weight: &NormWeight) -> f64 {
        self.iter()
            .map(|(mode, c)| weight.weight(mode) * c.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// `(sum |c|^2)^(1/2)`.
    pub fn coeff_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// The physical `L^2(T x T)` norm, `(4 pi^2 sum |c|^2)^(1/2)`.
    pub fn l2_norm_physical(&self) -> f64 {
        (PARSEVAL * self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>()).sqrt()
    }

    /// Pointwise value of the truncated series, Neumaier-compensated.
    pub fn evaluate(&self, x: f64, y: f64, t: f64) -> Result<Complex64> {
        let mut acc = CompensatedSum::default();
        for (mode, c) in self.iter() {
            if c == Complex64::new(0.0, 0.0) {
                continue;
            }
            let angle = mode.m as f64 * x + mode.n as f64 * y + reduced_angle(omega(mode)?, t);
            acc.add(c * Complex64::cis(angle));
        }
        Ok(acc.total())
    }

    /// Whether `c[-m,-n] = conj(c[m,n])` to `tol` (the field is real).
    pub fn is_real_field(&self, tol: f64) -> bool {
        let t = self.truncation;
        if t.exclude_m_zero && t.max_m == 0 {
            return true;
        }
        self.iter().all(
            |(mode, c)| match t.index_of(ModeIndex::new(-mode.m, -mode.n)) {
                Some(j) => (self.coeffs[j] - c.conj()).norm() <= tol,
                None => false,
            },
        )
    }

    /// Sets every coefficient in the `m = 0` column to zero.
    pub fn project_l2x(&self) -> Self {
        let coeffs = self
            .iter()
            .map(|(mode, c)| {
                if mode.m == 0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    c
                }
            })
            .collect();
        Self {
            truncation: self.truncation,
            coeffs,
        }
    }

    /// `<self, other>` in `L^2(T x T)` (Parseval-scaled, conjugate-linear in
    /// `other`).
    pub fn inner_l2(&self, other: &SpectralState) -> Result<Complex64> {
        if self.truncation != other.truncation {
            return Err(Error::TruncationMismatch(format!(
                "{} vs {}",
                self.truncation, other.truncation
            )));
        }
        let sum: Complex64 = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a * b.conj())
            .sum();
        Ok(sum * PARSEVAL)
    }
}

/// Neumaier summation, applied to the real and imaginary parts separately.
#[derive(Debug, Default, Clone, Copy)]
pub struct CompensatedSum {
    re: (f64, f64),
    im: (f64, f64),
}

impl CompensatedSum {
    fn step((sum, comp): (f64, f64), x: f64) -> (f64, f64) {
        let t = sum + x;
        let c = if sum.abs() >= x.abs() {
            (sum - t) + x
        } else {
            (x - t) + sum
        };
        (t, comp + c)
    }

    pub fn add(&mut self, z: Complex64) {
        self.re = Self::step(self.re, z.re);
        self.im = Self::step(self.im, z.im);
    }

    pub fn total(&self) -> Complex64 {
        Complex64::new(self.re.0 + self.re.1, self.im.0 + self.im.1)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct StateRepr {
    max_m: u32,
    max_n: u32,
    exclude_m_zero: bool,
    coeffs: Vec<[f64; 2]>,
}

impl TryFrom<StateRepr> for SpectralState {
    type Error = Error;

    fn try_from(repr: StateRepr) -> Result<Self> {
        let truncation = Truncation::new(repr.max_m, repr.max_n, repr.exclude_m_zero);
        let coeffs = repr
            .coeffs
            .into_iter()
            .map(|[re, im]| Complex64::new(re, im))
            .collect();
        SpectralState::new(truncation, coeffs)
    }
}

impl From<SpectralState> for StateRepr {
    fn from(state: SpectralState) -> Self {
        let t = state.truncation;
        StateRepr {
            max_m: t.max_m,
            max_n: t.max_n,
            exclude_m_zero: t.exclude_m_zero,
            coeffs: state.coeffs.iter().map(|c| [c.re, c.im]).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn unit(t: Truncation, m: i64, n: i64) -> SpectralState {
        SpectralState::single(t, ModeIndex::new(m, n), Complex64::new(1.0, 0.0)).unwrap()
    }

    #[test]
    fn omega_examples() {
        assert_eq!(omega(ModeIndex::new(1, 0)).unwrap(), 0);
        assert_eq!(omega(ModeIndex::new(0, 7)).unwrap(), 0);
        assert_eq!(omega(ModeIndex::new(2, 3)).unwrap(), 24);
        assert_eq!(omega(ModeIndex::new(-2, 3)).unwrap(), -24);
        assert!(omega(ModeIndex::new(i64::MAX, 1)).is_err());
    }

    #[test]
    fn evolve_examples() {
        let t = Truncation::square(3);
        let z = unit(t, 2, 3).evolve(PI / 24.0).unwrap();
        let c = z.coeff(ModeIndex::new(2, 3)).unwrap();
        assert!((c - Complex64::new(-1.0, 0.0)).norm() < 1e-15);
        let still = unit(t, 1, 0).evolve(123.4).unwrap();
        assert_eq!(
            still.coeff(ModeIndex::new(1, 0)).unwrap(),
            Complex64::new(1.0, 0.0)
        );
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let r = SpectralState::random(t, &mut rng);
        assert_eq!(r.evolve(0.0).unwrap().coeffs(), r.coeffs());
    }

    #[test]
    fn norm_examples() {
        let t = Truncation::square(3);
        assert_eq!(
            SpectralState::zeros(t).norm(&SobolevWeight::new(1.0, 1.0)),
            0.0
        );
        let a = unit(t, 1, 2).norm(&SobolevWeight::new(0.0, 0.0));
        assert!((a - 2f64.sqrt()).abs() < 1e-15);
        let b = unit(t, 3, 0).norm(&SobolevWeight::new(1.0, 0.0));
        assert!((b - 11f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn evaluate_examples() {
        let t = Truncation::square(2);
        let one = unit(t, 0, 0).evaluate(1.3, -0.4, 7.0).unwrap();
        assert!((one - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let r = SpectralState::random(t, &mut rng);
        let sum: Complex64 = r.coeffs().iter().sum();
        assert!((r.evaluate(0.0, 0.0, 0.0).unwrap() - sum).norm() < 1e-13);
    }

    #[test]
    fn l2x_projection_drops_m_zero() {
        let t = Truncation::square(2);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(6);
        let p = SpectralState::random(t, &mut rng).project_l2x();
        assert!(p
            .iter()
            .all(|(mode, c)| mode.m != 0 || c == Complex64::new(0.0, 0.0)));
    }

    #[test]
    fn json_round_trip() {
        let t = Truncation::new(2, 1, true);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let r = SpectralState::random(t, &mut rng);
        let text = serde_json::to_string(&r).unwrap();
        let back: SpectralState = serde_json::from_str(&text).unwrap();
        assert_eq!(back.truncation(), t);
        assert_eq!(back.coeffs(), r.coeffs());
    }

    #[test]
    fn truncation_indexing() {
        let t = Truncation::new(3, 2, true);
        assert_eq!(t.mode_count(), 6 * 5);
        for (i, mode) in t.modes().enumerate() {
            assert_eq!(t.index_of(mode), Some(i));
            assert_eq!(t.mode_at(i), mode);
        }
        assert!(!t.contains(ModeIndex::new(0, 1)));
    }
}
