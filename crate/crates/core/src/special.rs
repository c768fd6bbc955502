//! `sinc` and the Bessel function `J1`, the only special functions the
//! closed-form kernels need.

use std::f64::consts::PI;

/// Argument at which `J1` switches from its power series to the Hankel
/// asymptotic expansion.
pub const J1_SWITCH: f64 = 12.0;

/// `sin(x) / x`, with the Taylor series near zero.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 * (1.0 - x2 / 20.0)
    } else {
        x.sin() / x
    }
}

/// `J1(x) / x`, finite at the origin where it equals 1/2.
pub fn j1_over_x(x: f64) -> f64 {
    let ax = x.abs();
    if ax < J1_SWITCH {
        j1_over_x_series(ax)
    } else {
        j1_asymptotic(ax) / ax
    }
}

pub fn bessel_j1(x: f64) -> f64 {
    let ax = x.abs();
    let value = if ax < J1_SWITCH {
        ax * j1_over_x_series(ax)
    } else {
        j1_asymptotic(ax)
    };
    if x < 0.0 {
        -value
    } else {
        value
    }
}

fn j1_over_x_series(x: f64) -> f64 {
    // sum_k (-1)^k (x/2)^(2k) / (2 k! (k+1)!)
    let q = -0.25 * x * x;
    let mut term = 0.5;
    let mut sum = term;
    for k in 0..200 {
        let kk = k as f64;
        term *= q / ((kk + 1.0) * (kk + 2.0));
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}

fn j1_asymptotic(x: f64) -> f64 {
    // Hankel expansion with mu = 4 nu^2 = 4; stop at the smallest term.
    let mu = 4.0;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut a = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..60 {
        let odd = (2 * k - 1) as f64;
        a *= (mu - odd * odd) / (k as f64 * 8.0 * x);
        if a.abs() >= last {
            break;
        }
        last = a.abs();
        match k % 4 {
            1 => q += a,
            2 => p -= a,
            3 => q -= a,
            _ => p += a,
        }
    }
    let chi = x - 0.75 * PI;
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}
