//! Distances `dist(n theta, Z)` in scaled-integer arithmetic, continued
//! fractions of quadratic surds and bad-approximability certificates.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_integer::{Integer, Roots};
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `|e^{2 pi i theta} - 1| = 2|sin(pi theta)| >= 2 * CHORD_CONSTANT * dist(theta, Z)`,
/// sharp at `dist = 1/2`.
pub const CHORD_CONSTANT: f64 = 2.0;

pub const DEFAULT_GUARD_DIGITS: u32 = 50;

/// Target absolute accuracy of every distance, as a power of ten.
const TARGET_DIGITS: f64 = 30.0;

/// Continued-fraction terms used for the analytic infimum.
const CF_TERMS: usize = 400;

fn default_guard() -> u32 {
    DEFAULT_GUARD_DIGITS
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase", deny_unknown_fields)]
pub enum IrrationalSpec {
    /// `(a + b sqrt(c)) / d`.
    #[serde(rename_all = "camelCase")]
    QuadraticSurd {
        a: i64,
        b: i64,
        c: i64,
        d: i64,
        #[serde(default = "default_guard")]
        guard_digits: u32,
    },
    /// A decimal string whose first `guard_digits` fractional digits are
    /// correct. Strings with fewer fractional digits are taken as exact.
    #[serde(rename_all = "camelCase")]
    HighPrecisionReal {
        digits: String,
        #[serde(default = "default_guard")]
        guard_digits: u32,
    },
}

impl IrrationalSpec {
    pub fn surd(a: i64, b: i64, c: i64, d: i64) -> Self {
        Self::QuadraticSurd {
            a,
            b,
            c,
            d,
            guard_digits: DEFAULT_GUARD_DIGITS,
        }
    }

    pub fn sqrt(c: i64) -> Self {
        Self::surd(0, 1, c, 1)
    }

    /// `(sqrt 5 - 1) / 2`.
    pub fn golden_conjugate() -> Self {
        Self::surd(-1, 1, 5, 2)
    }

    pub fn decimal(digits: &str, guard_digits: u32) -> Self {
        Self::HighPrecisionReal {
            digits: digits.to_string(),
            guard_digits,
        }
    }

    pub fn guard_digits(&self) -> u32 {
        match self {
            Self::QuadraticSurd { guard_digits, .. }
            | Self::HighPrecisionReal { guard_digits, .. } => *guard_digits,
        }
    }

    pub fn to_f64(&self) -> Result<f64> {
        let s = ScaledReal::new(self)?;
        Ok(BigRational::new(s.value, s.unit.clone())
            .to_f64()
            .unwrap_or(f64::NAN))
    }
}

/// `theta ~ value / 10^scale` with `|theta - value/10^scale| <= error / 10^scale`.
#[derive(Debug, Clone)]
struct ScaledReal {
    value: BigInt,
    unit: BigInt,
    error: BigInt,
    guard: u32,
}

fn pow10(digits: u32) -> BigInt {
    BigInt::from(10u32).pow(digits)
}

impl ScaledReal {
    fn new(spec: &IrrationalSpec) -> Result<Self> {
        match spec {
            IrrationalSpec::QuadraticSurd {
                a,
                b,
                c,
                d,
                guard_digits,
            } => {
                check_surd(*c, *d)?;
                let unit = pow10(*guard_digits);
                let root_sq =
                    BigInt::from(*b) * BigInt::from(*b) * BigInt::from(*c) * &unit * &unit;
                let root = root_sq.sqrt();
                let signed_root = if *b < 0 { -root } else { root };
                let numerator = BigInt::from(*a) * &unit + signed_root;
                Ok(Self {
                    value: numerator.div_floor(&BigInt::from(*d)),
                    unit,
                    error: BigInt::from(2),
                    guard: *guard_digits,
                })
            }
            IrrationalSpec::HighPrecisionReal {
                digits,
                guard_digits,
            } => {
                let (int_part, frac) = parse_decimal(digits)?;
                let scale = (frac.len() as u32).max(*guard_digits);
                let unit = pow10(scale);
                let mut padded = frac.clone();
                padded.extend(std::iter::repeat_n('0', scale as usize - frac.len()));
                let frac_value = if padded.is_empty() {
                    BigInt::zero()
                } else {
                    padded
                        .parse::<BigInt>()
                        .map_err(|e| Error::InvalidArgument(e.to_string()))?
                };
                let negative = digits.trim().starts_with('-');
                let magnitude = int_part * &unit + frac_value;
                let exact = (frac.len() as u32) < *guard_digits;
                Ok(Self {
                    value: if negative { -magnitude } else { magnitude },
                    error: if exact {
                        BigInt::zero()
                    } else {
                        pow10(scale - guard_digits)
                    },
                    unit,
                    guard: if exact { u32::MAX } else { *guard_digits },
                })
            }
        }
    }

    /// Fails unless `n * error < 10^-30`.
    fn check_precision(&self, n: u64) -> Result<()> {
        if self.guard == u32::MAX {
            return Ok(());
        }
        let needed = TARGET_DIGITS + (n as f64).log10() + 2f64.log10();
        if (self.guard as f64) < needed {
            return Err(Error::PrecisionExhausted {
                guard_digits: self.guard,
                n,
            });
        }
        Ok(())
    }
}

fn check_surd(c: i64, d: i64) -> Result<()> {
    if d == 0 {
        return Err(Error::InvalidArgument("surd denominator is zero".into()));
    }
    if c <= 0 {
        return Err(Error::InvalidArgument(format!(
            "surd radicand {c} must be positive"
        )));
    }
    let r = (c as u64).sqrt();
    if r * r == c as u64 {
        return Err(Error::InvalidArgument(format!("{c} is a perfect square")));
    }
    Ok(())
}

fn parse_decimal(text: &str) -> Result<(BigInt, String)> {
    let t = text.trim();
    let body = t.strip_prefix(['-', '+']).unwrap_or(t);
    let (int_str, frac_str) = body.split_once('.').unwrap_or((body, ""));
    let valid = |s: &str| s.chars().all(|ch| ch.is_ascii_digit());
    if (int_str.is_empty() && frac_str.is_empty()) || !valid(int_str) || !valid(frac_str) {
        return Err(Error::InvalidArgument(format!(
            "not a decimal number: {text:?}"
        )));
    }
    let int_part = if int_str.is_empty() {
        BigInt::zero()
    } else {
        int_str
            .parse()
            .map_err(|e: num_bigint::ParseBigIntError| Error::InvalidArgument(e.to_string()))?
    };
    Ok((int_part, frac_str.to_string()))
}

/// Distance of `n theta mod 1` to the nearest integer, in units of the scale.
fn scaled_distance(residue: &BigInt, unit: &BigInt) -> BigInt {
    let other = unit - residue;
    if &other < residue {
        other
    } else {
        residue.clone()
    }
}

/// `min_p |n theta - p|`, accurate to `1e-30` before rounding to `f64`.
pub fn dist_to_integers(theta: &IrrationalSpec, n: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    let s = ScaledReal::new(theta)?;
    s.check_precision(n)?;
    let residue = (&s.value * BigInt::from(n)).mod_floor(&s.unit);
    let d = scaled_distance(&residue, &s.unit);
    Ok(BigRational::new(d, s.unit).to_f64().unwrap_or(f64::NAN))
}

/// Walks `n theta mod 1` for `n = 1..=max_n`, calling `visit(n, dist)`.
struct DistanceScan {
    s: ScaledReal,
    unit_f64: f64,
    frac: BigInt,
}

impl DistanceScan {
    fn new(theta: &IrrationalSpec, max_n: u64) -> Result<Self> {
        if max_n == 0 {
            return Err(Error::InvalidArgument("N must be at least 1".into()));
        }
        let s = ScaledReal::new(theta)?;
        s.check_precision(max_n)?;
        let frac = s.value.mod_floor(&s.unit);
        let unit_f64 = s.unit.to_f64().unwrap_or(f64::INFINITY);
        Ok(Self { s, unit_f64, frac })
    }

    fn run(&self, max_n: u64, mut visit: impl FnMut(u64, f64)) -> Result<()> {
        let mut residue = BigInt::zero();
        let mut slack = BigInt::zero();
        for n in 1..=max_n {
            residue += &self.frac;
            if residue >= self.s.unit {
                residue -= &self.s.unit;
            }
            slack += &self.s.error;
            let d = scaled_distance(&residue, &self.s.unit);
            if d <= slack {
                return Err(Error::DegenerateTheta { n });
            }
            visit(n, d.to_f64().unwrap_or(f64::NAN) / self.unit_f64);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ContinuedFraction {
    pub preperiod: Vec<i64>,
    pub period: Vec<i64>,
}

impl ContinuedFraction {
    pub fn term(&self, k: usize) -> i64 {
        if k < self.preperiod.len() {
            self.preperiod[k]
        } else {
            self.period[(k - self.preperiod.len()) % self.period.len()]
        }
    }
}

/// Complete quotient `(p + sqrt(disc)) / q` with `q | disc - p^2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct Quotient {
    p: i128,
    q: i128,
}

struct SurdExpansion {
    disc: i128,
    quotients: Vec<Quotient>,
    terms: Vec<i64>,
    preperiod: usize,
}

fn surd_expansion(a: i64, b: i64, c: i64, d: i64) -> Result<SurdExpansion> {
    check_surd(c, d)?;
    if b == 0 {
        return Err(Error::DegenerateTheta {
            n: d.unsigned_abs(),
        });
    }
    let overflow = || Error::Overflow("continued fraction");
    let sign = b.signum() as i128;
    let mut p = a as i128 * sign;
    let mut q = d as i128 * sign;
    let mut disc = (b as i128)
        .checked_mul(b as i128)
        .and_then(|x| x.checked_mul(c as i128))
        .ok_or_else(overflow)?;
    if (disc - p * p) % q != 0 {
        let qa = q.abs();
        p = p.checked_mul(qa).ok_or_else(overflow)?;
        disc = disc.checked_mul(q * q).ok_or_else(overflow)?;
        q = q.checked_mul(qa).ok_or_else(overflow)?;
    }
    let root_floor = (disc as u128).sqrt() as i128;
    let mut seen: HashMap<Quotient, usize> = HashMap::new();
    let mut quotients = Vec::new();
    let mut terms = Vec::new();
    loop {
        let cur = Quotient { p, q };
        if let Some(&start) = seen.get(&cur) {
            return Ok(SurdExpansion {
                disc,
                quotients,
                terms,
                preperiod: start,
            });
        }
        seen.insert(cur, quotients.len());
        quotients.push(cur);
        let term = if q > 0 {
            Integer::div_floor(&(p + root_floor), &q)
        } else {
            Integer::div_floor(&(-(p + root_floor + 1)), &(-q))
        };
        terms.push(i64::try_from(term).map_err(|_| overflow())?);
        p = term * q - p;
        q = (disc - p * p) / q;
        if quotients.len() > 100_000 {
            return Err(overflow());
        }
    }
}

/// Continued fraction of `(a + b sqrt c) / d`; eventually periodic.
pub fn surd_continued_fraction(a: i64, b: i64, c: i64, d: i64) -> Result<ContinuedFraction> {
    let e = surd_expansion(a, b, c, d)?;
    Ok(ContinuedFraction {
        preperiod: e.terms[..e.preperiod].to_vec(),
        period: e.terms[e.preperiod..].to_vec(),
    })
}

/// `inf_n n dist(n theta, Z)` from the convergents:
/// `q_k dist(q_k theta) = 1 / (theta_{k+1} + q_{k-1}/q_k)`.
///
/// Non-convergent denominators have `n dist >= 1/2`, so the value is exact
/// whenever it is below 1/2.
fn convergent_infimum(e: &SurdExpansion) -> f64 {
    let root = (e.disc as f64).sqrt();
    let complete = |k: usize| -> f64 {
        let idx = if k < e.quotients.len() {
            k
        } else {
            e.preperiod + (k - e.preperiod) % (e.quotients.len() - e.preperiod)
        };
        let qt = e.quotients[idx];
        (qt.p as f64 + root) / qt.q as f64
    };
    let term = |k: usize| -> f64 {
        let idx = if k < e.terms.len() {
            k
        } else {
            e.preperiod + (k - e.preperiod) % (e.terms.len() - e.preperiod)
        };
        e.terms[idx] as f64
    };
    let mut ratio = 0.0;
    let mut best = f64::INFINITY;
    for k in 0..CF_TERMS {
        best = best.min(1.0 / (complete(k + 1) + ratio));
        ratio = 1.0 / (term(k + 1) + ratio);
    }
    best
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct BadApproxCertificate {
    pub theta: IrrationalSpec,
    /// `min_{n <= N} n^s dist(n theta, Z)`.
    pub gamma2: f64,
    pub exponent: f64,
    pub checked_up_to: u64,
    pub minimizing_n: u64,
    /// Closed-form infimum over all `n` for quadratic surds with `s = 1`.
    pub analytic_infimum: Option<f64>,
    pub continued_fraction: Option<ContinuedFraction>,
}

/// Exhaustive scan of `n^s dist(n theta, Z)` for `1 <= n <= max_n`.
pub fn certify_bad_approx(
    theta: &IrrationalSpec,
    s: f64,
    max_n: u64,
) -> Result<BadApproxCertificate> {
    if !(s >= 1.0 && s.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "exponent must be >= 1, got {s}"
        )));
    }
    let scan = DistanceScan::new(theta, max_n)?;
    let (mut gamma, mut arg) = (f64::INFINITY, 0);
    scan.run(max_n, |n, dist| {
        let value = (n as f64).powf(s) * dist;
        if value < gamma {
            gamma = value;
            arg = n;
        }
    })?;
    let (analytic_infimum, continued_fraction) = match theta {
        IrrationalSpec::QuadraticSurd { a, b, c, d, .. } => {
            let e = surd_expansion(*a, *b, *c, *d)?;
            let cf = ContinuedFraction {
                preperiod: e.terms[..e.preperiod].to_vec(),
                period: e.terms[e.preperiod..].to_vec(),
            };
            let inf = (s == 1.0)
                .then(|| convergent_infimum(&e))
                .filter(|v| *v < 0.5);
            (inf, Some(cf))
        }
        IrrationalSpec::HighPrecisionReal { .. } => (None, None),
    };
    Ok(BadApproxCertificate {
        theta: theta.clone(),
        gamma2: gamma,
        exponent: s,
        checked_up_to: max_n,
        minimizing_n: arg,
        analytic_infimum,
        continued_fraction,
    })
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SimultaneousCertificate {
    pub thetas: Vec<IrrationalSpec>,
    /// `min_{n <= N} n^{1/L} max_j dist(n theta_j, Z)`.
    pub gamma: f64,
    pub exponent: f64,
    pub checked_up_to: u64,
    pub minimizing_n: u64,
}

pub fn simultaneous_bad_approx(
    thetas: &[IrrationalSpec],
    max_n: u64,
) -> Result<SimultaneousCertificate> {
    if thetas.is_empty() {
        return Err(Error::InvalidArgument("need at least one theta".into()));
    }
    let exponent = 1.0 / thetas.len() as f64;
    let mut worst = vec![0.0f64; max_n as usize];
    for theta in thetas {
        let scan = DistanceScan::new(theta, max_n)?;
        scan.run(max_n, |n, dist| {
            let slot = &mut worst[n as usize - 1];
            *slot = slot.max(dist);
        })?;
    }
    let (mut gamma, mut arg) = (f64::INFINITY, 0);
    for (i, d) in worst.iter().enumerate() {
        let n = (i + 1) as u64;
        let value = (n as f64).powf(exponent) * d;
        if value < gamma {
            gamma = value;
            arg = n;
        }
    }
    Ok(SimultaneousCertificate {
        thetas: thetas.to_vec(),
        gamma,
        exponent,
        checked_up_to: max_n,
        minimizing_n: arg,
    })
}

/// `|e^{2 pi i theta} - 1| / dist(theta, Z)` never drops below
/// `2 * CHORD_CONSTANT`.
pub fn chord_ratio(theta: f64) -> f64 {
    let dist = (theta - theta.round()).abs();
    let chord = 2.0 * (std::f64::consts::PI * theta).sin().abs();
    chord / dist
}

/// `BigInt` helper for callers that want the exact scaled residue.
pub fn scaled_residue(theta: &IrrationalSpec, n: u64) -> Result<(BigInt, BigInt)> {
    let s = ScaledReal::new(theta)?;
    s.check_precision(n.max(1))?;
    let residue = (&s.value * BigInt::from(n)).mod_floor(&s.unit);
    Ok((scaled_distance(&residue, &s.unit), s.unit))
}

impl Default for IrrationalSpec {
    fn default() -> Self {
        Self::sqrt(2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Signed;

    const SQRT2_MINUS_1: f64 = 0.414_213_562_373_095_1;

    #[test]
    fn distance_examples() {
        let r2 = IrrationalSpec::sqrt(2);
        assert!((dist_to_integers(&r2, 1).unwrap() - SQRT2_MINUS_1).abs() < 1e-15);
        assert!((dist_to_integers(&r2, 5).unwrap() - 0.071_067_811_865_475_24).abs() < 1e-15);
        let half = IrrationalSpec::decimal("0.5", 50);
        assert_eq!(dist_to_integers(&half, 2).unwrap(), 0.0);
        assert!(dist_to_integers(&r2, 0).is_err());
    }

    #[test]
    fn distance_is_exact_to_thirty_digits() {
        // 10^6 sqrt 2 = 1414213.56237309504880168872420969807856967...
        let (d, unit) = scaled_residue(&IrrationalSpec::sqrt(2), 1_000_000).unwrap();
        let expected: BigInt = "43762690495119831127579030192143032".parse().unwrap();
        let got = d * pow10(35) / unit;
        assert!((got - expected).abs() <= BigInt::from(1));
    }

    #[test]
    fn precision_exhaustion() {
        let short = IrrationalSpec::QuadraticSurd {
            a: 0,
            b: 1,
            c: 2,
            d: 1,
            guard_digits: 32,
        };
        assert!(dist_to_integers(&short, 10).is_ok());
        assert!(matches!(
            dist_to_integers(&short, 1000),
            Err(Error::PrecisionExhausted { .. })
        ));
    }

    #[test]
    fn continued_fractions() {
        let cf = surd_continued_fraction(0, 1, 2, 1).unwrap();
        assert_eq!(cf.preperiod, vec![1]);
        assert_eq!(cf.period, vec![2]);
        let golden = surd_continued_fraction(-1, 1, 5, 2).unwrap();
        assert_eq!(golden.preperiod, vec![0]);
        assert_eq!(golden.period, vec![1]);
        let neg = surd_continued_fraction(0, -1, 3, 1).unwrap();
        assert_eq!(neg.term(0), -2);
        let r7 = surd_continued_fraction(0, 1, 7, 1).unwrap();
        assert_eq!((r7.preperiod, r7.period), (vec![2], vec![1, 1, 1, 4]));
    }

    #[test]
    fn sqrt2_infimum_is_attained_at_two() {
        let cert = certify_bad_approx(&IrrationalSpec::sqrt(2), 1.0, 10_000).unwrap();
        let exact = 6.0 - 4.0 * 2f64.sqrt();
        assert!((cert.gamma2 - exact).abs() < 1e-14);
        assert_eq!(cert.minimizing_n, 2);
        assert!((cert.analytic_infimum.unwrap() - exact).abs() < 1e-12);
    }

    #[test]
    fn golden_conjugate_infimum() {
        let cert = certify_bad_approx(&IrrationalSpec::golden_conjugate(), 1.0, 10_000).unwrap();
        let exact = (3.0 - 5f64.sqrt()) / 2.0;
        assert!((cert.gamma2 - exact).abs() < 1e-14);
        assert!((cert.analytic_infimum.unwrap() - exact).abs() < 1e-12);
    }

    #[test]
    fn quadratic_exponent_is_attained_at_one() {
        let cert = certify_bad_approx(&IrrationalSpec::sqrt(2), 2.0, 10_000).unwrap();
        assert_eq!(cert.minimizing_n, 1);
        assert!((cert.gamma2 - SQRT2_MINUS_1).abs() < 1e-15);
    }

    #[test]
    fn rationals_are_degenerate() {
        let quarter = IrrationalSpec::decimal("0.25", 50);
        assert!(matches!(
            certify_bad_approx(&quarter, 1.0, 100),
            Err(Error::DegenerateTheta { n: 4 })
        ));
        let thetas = [IrrationalSpec::sqrt(2), IrrationalSpec::decimal("0.5", 50)];
        assert!(simultaneous_bad_approx(&thetas, 100).is_err());
    }

    #[test]
    fn single_theta_simultaneous_reduces_to_scalar() {
        let r2 = IrrationalSpec::sqrt(2);
        let a = simultaneous_bad_approx(std::slice::from_ref(&r2), 5000).unwrap();
        let b = certify_bad_approx(&r2, 1.0, 5000).unwrap();
        assert_eq!(a.gamma, b.gamma2);
        assert_eq!(a.minimizing_n, b.minimizing_n);
    }

    #[test]
    fn chord_constant_is_sharp() {
        for i in 1..1000 {
            let theta = i as f64 / 1000.0;
            assert!(chord_ratio(theta) >= 2.0 * CHORD_CONSTANT - 1e-12);
        }
        assert!((chord_ratio(0.5) - 2.0 * CHORD_CONSTANT).abs() < 1e-12);
    }

    #[test]
    fn spec_round_trips_through_json() {
        let spec = IrrationalSpec::golden_conjugate();
        let text = serde_json::to_string(&spec).unwrap();
        let back: IrrationalSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(spec, back);
        let parsed: IrrationalSpec =
            serde_json::from_str(r#"{"kind":"quadraticSurd","a":0,"b":1,"c":2,"d":1}"#).unwrap();
        assert_eq!(parsed, IrrationalSpec::sqrt(2));
    }
}
