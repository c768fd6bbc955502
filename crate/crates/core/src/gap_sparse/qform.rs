use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use crate::error::{Error, Result};

/// `Q(k,l,m,n) = k(3m^2+n^2) + 2lmn + (3k^2+l^2)m + k(2ln+k^2+l^2-1)`,
/// the frequency difference `omega(m+k, n+l) - omega(m, n)`.
pub fn q_form(k: i64, l: i64, m: i64, n: i64) -> Result<i64> {
    let value = q_form_big(k, l, m, n);
    i64::try_from(&value).map_err(|_| Error::Overflow("Q(k,l,m,n)"))
}

/// [`q_form`] without a width limit.
pub fn q_form_big(k: i64, l: i64, m: i64, n: i64) -> BigInt {
    let (k, l, m, n) = (
        BigInt::from(k),
        BigInt::from(l),
        BigInt::from(m),
        BigInt::from(n),
    );
    let three = BigInt::from(3);
    let two = BigInt::from(2);
    &k * (&three * &m * &m + &n * &n)
        + &two * &l * &m * &n
        + (&three * &k * &k + &l * &l) * &m
        + &k * (&two * &l * &n + &k * &k + &l * &l - 1)
}

/// Both sides of
/// `3kQ = (3k(m+k/2) + l(n+l/2))^2 - (l^2-3k^2)(n+l/2)^2 + (3k^2/4)(k^2+l^2-4)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Identity56 {
    pub lhs: BigInt,
    pub rhs: BigRational,
}

impl Identity56 {
    pub fn holds(&self) -> bool {
        BigRational::from_integer(self.lhs.clone()) == self.rhs
    }
}

/// Evaluates the completed-square form of `3kQ` exactly. Requires `k != 0`.
pub fn q_identity_56(k: i64, l: i64, m: i64, n: i64) -> Result<Identity56> {
    if k == 0 {
        return Err(Error::InvalidArgument(
            "the completed-square identity needs k != 0".into(),
        ));
    }
    let lhs = BigInt::from(3) * BigInt::from(k) * q_form_big(k, l, m, n);

    let int = |v: i64| BigRational::from_integer(BigInt::from(v));
    let half = BigRational::new(BigInt::from(1), BigInt::from(2));
    let (kr, lr, mr, nr) = (int(k), int(l), int(m), int(n));
    let shifted_m = &mr + &kr * &half;
    let shifted_n = &nr + &lr * &half;
    let linear = int(3) * &kr * shifted_m + &lr * &shifted_n;
    let discriminant = &lr * &lr - int(3) * &kr * &kr;
    let constant = int(3) * &kr * &kr / int(4) * (&kr * &kr + &lr * &lr - int(4));
    let rhs = &linear * &linear - discriminant * &shifted_n * &shifted_n + constant;
    debug_assert!(!rhs.denom().is_zero());
    Ok(Identity56 { lhs, rhs })
}
