//! Spectral toolkit for the linear Zakharov-Kuznetsov equation
//! `u_t + u_x + u_xxx + u_xyy = 0` on the torus: exact mode evolution,
//! observability Gramians, HUM control, rapid-stabilization feedback and the
//! gap, sparse-cover and Diophantine arithmetic behind them.

pub mod control;
pub mod diophantine;
pub mod error;
pub mod gap_sparse;
pub mod linalg;
pub mod observability;
pub mod special;
pub mod spectrum;

pub use error::{Error, Result};
pub use spectrum::{
    omega, ModeIndex, NormWeight, SobolevWeight, SpectralState, Truncation, PARSEVAL,
};
