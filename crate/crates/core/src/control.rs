//! Exact control by HUM and rapid-stabilization feedback on a truncation.
//!
//! The state `z` lives in the coefficient space with inner product
//! `<a, b> = 4 pi^2 sum a_i conj(b_i)` and evolves by `z' = A z + B v` with
//! `A = diag(i omega)`. The control operator `B` projects a field supported
//! on the region back onto the modes, so its adjoint `B^*` is restriction to
//! the region and `int_0^T exp(-As) B B^* exp(As) ds = G / 4 pi^2`, where `G`
//! is the observability Gramian of [`crate::observability`].

use std::f64::consts::PI;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    hermitian_eigen, hermitian_eigen_blocks, spectral_norm, CMatrix, HermitianEigen,
    KernelCertificate,
};
use crate::observability::{
    assemble_gramian, damped_time_kernel, time_kernel, BlockStructure, Gramian, Interval,
    ObservationRegion, SpatialSet,
};
use crate::spectrum::{omega, phase, ModeIndex, SpectralState, Truncation, PARSEVAL};

/// Synthesis and feedback refuse Gramians with `lambda_min <= SINGULAR * lambda_max`.
pub const SINGULAR: f64 = 1e-12;

/// Sub-intervals per control piece used when re-simulating.
const RESIMULATION_SPLITS: usize = 8;

/// Largest admissible `dt * (max|omega| + |BF|)`.
const STEP_LIMIT: f64 = 0.1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ControlProblem {
    /// Spatial support of the control; its time interval is replaced by
    /// `(0, horizon)`.
    pub region: ObservationRegion,
    pub horizon: f64,
    pub truncation: Truncation,
    pub z0: SpectralState,
    #[serde(rename = "zT")]
    pub z_t: SpectralState,
}

impl ControlProblem {
    pub fn control_region(&self) -> ObservationRegion {
        self.region.with_interval(Interval::new(0.0, self.horizon))
    }

    fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::InvalidArgument("horizon must be positive".into()));
        }
        for (name, s) in [("z0", &self.z0), ("zT", &self.z_t)] {
            if s.truncation() != self.truncation {
                return Err(Error::TruncationMismatch(format!(
                    "{name} is on {} but the problem uses {}",
                    s.truncation(),
                    self.truncation
                )));
            }
        }
        if matches!(self.region, ObservationRegion::SpaceTimeSet { .. })
            && !self.truncation.exclude_m_zero
        {
            return Err(Error::TruncationMismatch(
                "space-time control acts on L2_x data: set excludeMZero".into(),
            ));
        }
        Ok(())
    }
}

/// Piece of a control on a time sub-interval: the field
/// `v(x, t) = sum c_j exp(i(k_j . x + omega_j t))` restricted to the region.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ControlPiece {
    pub interval: Interval,
    pub coeffs: SpectralState,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ControlSignal {
    pub region: ObservationRegion,
    pub pieces: Vec<ControlPiece>,
}

impl ControlSignal {
    /// The HUM form `v = B^* exp(As) eta` over `(0, horizon)`.
    pub fn from_dual_state(region: ObservationRegion, horizon: f64, eta: SpectralState) -> Self {
        Self {
            region,
            pieces: vec![ControlPiece {
                interval: Interval::new(0.0, horizon),
                coeffs: eta,
            }],
        }
    }

    /// A piecewise control on `count` equal sub-intervals of `(0, horizon)`.
    pub fn piecewise(region: ObservationRegion, horizon: f64, coeffs: Vec<SpectralState>) -> Self {
        let count = coeffs.len().max(1) as f64;
        let pieces = coeffs
            .into_iter()
            .enumerate()
            .map(|(p, c)| ControlPiece {
                interval: Interval::new(
                    horizon * p as f64 / count,
                    horizon * (p + 1) as f64 / count,
                ),
                coeffs: c,
            })
            .collect();
        Self { region, pieces }
    }

    /// `v(x, y, t)`; the caller chooses `(x, y)` on the spatial support.
    pub fn evaluate(&self, x: f64, y: f64, t: f64) -> Result<Complex64> {
        for piece in &self.pieces {
            if t >= piece.interval.start && t <= piece.interval.end {
                return piece.coeffs.evaluate(x, y, t);
            }
        }
        Ok(Complex64::new(0.0, 0.0))
    }

    /// `|v|^2` in `L^2(region x (0, T))`.
    pub fn energy(&self) -> Result<f64> {
        let mut total = 0.0;
        for piece in &self.pieces {
            let g = assemble_gramian(
                &self.region.with_interval(piece.interval),
                piece.coeffs.truncation(),
            )?;
            total += g.energy(&piece.coeffs)?;
        }
        Ok(total)
    }

    /// `int <v, w>` over the region and time, `w` given piecewise on the
    /// same sub-intervals.
    fn inner(&self, other: &ControlSignal) -> Result<Complex64> {
        let mut total = Complex64::new(0.0, 0.0);
        for (a, b) in self.pieces.iter().zip(&other.pieces) {
            let g = assemble_gramian(
                &self.region.with_interval(a.interval),
                a.coeffs.truncation(),
            )?;
            let x = DVector::from_column_slice(a.coeffs.coeffs());
            let y = DVector::from_column_slice(b.coeffs.coeffs());
            total += (y.adjoint() * &g.matrix * x)[(0, 0)];
        }
        Ok(total)
    }
}

/// Region spatial kernel as a matrix, `S[i][j] = S(k_j - k_i)`.
fn spatial_matrix(region: &ObservationRegion, truncation: Truncation) -> CMatrix {
    let modes: Vec<ModeIndex> = truncation.modes().collect();
    let n = modes.len();
    let structure = region.block_structure();
    CMatrix::from_fn(n, n, |i, j| {
        let coupled = match structure {
            BlockStructure::PerN => modes[i].n == modes[j].n,
            BlockStructure::PerM => modes[i].m == modes[j].m,
            BlockStructure::Dense => true,
        };
        if coupled {
            region.spatial_kernel(modes[j].m - modes[i].m, modes[j].n - modes[i].n)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

fn blocks_of(region: &ObservationRegion, truncation: Truncation) -> Vec<Vec<usize>> {
    let key = |mode: ModeIndex| match region.block_structure() {
        BlockStructure::PerN => mode.n,
        BlockStructure::PerM => mode.m,
        BlockStructure::Dense => 0,
    };
    let mut groups: std::collections::BTreeMap<i64, Vec<usize>> = Default::default();
    for (i, mode) in truncation.modes().enumerate() {
        groups.entry(key(mode)).or_default().push(i);
    }
    groups.into_values().collect()
}

fn singular_certificate(eig: &HermitianEigen, truncation: Truncation) -> Result<Error> {
    let ratio = if eig.max() > 0.0 {
        eig.min() / eig.max()
    } else {
        0.0
    };
    let rel = (ratio.abs() * 1.5).max(1e-10);
    Ok(Error::GramianSingular(Box::new(
        KernelCertificate::from_eigen(eig, truncation, rel)?,
    )))
}

fn is_singular(eig: &HermitianEigen) -> bool {
    !(eig.min() > SINGULAR * eig.max())
}

/// `V diag(1/lambda) V^* rhs`.
fn eigen_solve(eig: &HermitianEigen, rhs: &[Complex64]) -> Vec<Complex64> {
    let b = DVector::from_column_slice(rhs);
    let proj = eig.vectors.adjoint() * b;
    let scaled = DVector::from_iterator(
        proj.len(),
        proj.iter().zip(&eig.values).map(|(p, l)| p / *l),
    );
    (&eig.vectors * scaled).iter().copied().collect()
}

fn eigen_inverse(eig: &HermitianEigen) -> CMatrix {
    let n = eig.values.len();
    let inv = CMatrix::from_fn(n, n, |i, j| {
        if i == j {
            Complex64::new(1.0 / eig.values[i], 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    &eig.vectors * inv * eig.vectors.adjoint()
}

/// Propagates `z` through the controlled dynamics driven by `signal`, using
/// the spatial kernel and sub-interval time kernels.
pub fn propagate(
    z0: &SpectralState,
    signal: &ControlSignal,
    horizon: f64,
) -> Result<SpectralState> {
    let t = z0.truncation();
    let freqs = t.frequencies()?;
    let s = spatial_matrix(&signal.region, t);
    let n = freqs.len();
    let mut z: Vec<Complex64> = z0.coeffs().to_vec();
    let mut now = 0.0;
    let mut events: Vec<(f64, f64, Option<&ControlPiece>)> = Vec::new();
    for piece in &signal.pieces {
        if piece.coeffs.truncation() != t {
            return Err(Error::TruncationMismatch("control piece truncation".into()));
        }
        if piece.interval.start > now {
            events.push((now, piece.interval.start, None));
        }
        let len = piece.interval.length();
        for k in 0..RESIMULATION_SPLITS {
            let a = piece.interval.start + len * k as f64 / RESIMULATION_SPLITS as f64;
            let b = piece.interval.start + len * (k + 1) as f64 / RESIMULATION_SPLITS as f64;
            events.push((a, b, Some(piece)));
        }
        now = piece.interval.end;
    }
    if horizon > now {
        events.push((now, horizon, None));
    }
    for (a, b, piece) in events {
        for i in 0..n {
            z[i] *= phase(freqs[i], b - a);
        }
        if let Some(piece) = piece {
            let c = piece.coeffs.coeffs();
            let iv = Interval::new(a, b);
            let mut forced = vec![Complex64::new(0.0, 0.0); n];
            for (i, f) in forced.iter_mut().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for j in 0..n {
                    let sij = s[(i, j)];
                    if sij == Complex64::new(0.0, 0.0) || c[j] == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    acc += sij * c[j] * time_kernel(freqs[j] - freqs[i], iv);
                }
                *f = acc * phase(freqs[i], b) / PARSEVAL;
            }
            for i in 0..n {
                z[i] += forced[i];
            }
        }
    }
    SpectralState::new(t, z)
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ControlOutcome {
    pub signal: ControlSignal,
    /// `|z(T) - zT| / max(|zT|, |z0|)` after re-simulation.
    pub residual: f64,
    pub energy: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub final_state: SpectralState,
}

/// HUM: `v = B^* exp(As) eta` with `G eta = 4 pi^2 (exp(-AT) zT - z0)`.
pub fn synthesize_control(p: &ControlProblem) -> Result<ControlOutcome> {
    p.validate()?;
    let region = p.control_region();
    let g = assemble_gramian(&region, p.truncation)?;
    let eig = g.eigen()?;
    if is_singular(&eig) {
        return Err(singular_certificate(&eig, p.truncation)?);
    }
    let rhs: Vec<Complex64> = p
        .z_t
        .evolve(-p.horizon)?
        .coeffs()
        .iter()
        .zip(p.z0.coeffs())
        .map(|(a, b)| (a - b) * PARSEVAL)
        .collect();
    let eta = SpectralState::new(p.truncation, eigen_solve(&eig, &rhs))?;
    let energy = g.energy(&eta)?;
    let signal = ControlSignal::from_dual_state(region, p.horizon, eta);
    let final_state = propagate(&p.z0, &signal, p.horizon)?;
    let scale = p.z_t.coeff_norm().max(p.z0.coeff_norm());
    let miss: f64 = final_state
        .coeffs()
        .iter()
        .zip(p.z_t.coeffs())
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt();
    Ok(ControlOutcome {
        signal,
        residual: if scale > 0.0 { miss / scale } else { 0.0 },
        energy,
        lambda_min: eig.min(),
        lambda_max: eig.max(),
        final_state,
    })
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct MinimalEnergyReport {
    /// `max |<v, w>| / (|v| |w|)` over a basis of zero-effect controls `w`.
    pub max_violation: f64,
    pub tested_directions: usize,
}

/// Tests `v` against controls on `pieces` equal sub-intervals whose net
/// effect on the state is zero.
pub fn minimal_energy_check(
    p: &ControlProblem,
    v: &ControlSignal,
    pieces: usize,
) -> Result<MinimalEnergyReport> {
    p.validate()?;
    let region = p.control_region();
    let pieces = pieces.max(2);
    let t = p.truncation;
    let n = t.mode_count();
    // Rescale v onto the common sub-interval grid.
    let bounds: Vec<Interval> = (0..pieces)
        .map(|k| {
            Interval::new(
                p.horizon * k as f64 / pieces as f64,
                p.horizon * (k + 1) as f64 / pieces as f64,
            )
        })
        .collect();
    let v_on_grid: Vec<SpectralState> = bounds
        .iter()
        .map(|iv| {
            let mid = 0.5 * (iv.start + iv.end);
            v.pieces
                .iter()
                .find(|pc| {
                    pc.interval.start <= iv.start + 1e-12 && pc.interval.end >= iv.end - 1e-12
                })
                .map(|pc| pc.coeffs.clone())
                .ok_or_else(|| {
                    Error::InvalidArgument(format!(
                        "control pieces do not align with the test grid at t = {mid}"
                    ))
                })
        })
        .collect::<Result<_>>()?;
    let v_grid = ControlSignal::piecewise(region.clone(), p.horizon, v_on_grid);

    // Net effect of piecewise w: sum_p G_p a_p; its kernel is the test set.
    let grams: Vec<Gramian> = bounds
        .iter()
        .map(|iv| assemble_gramian(&region.with_interval(*iv), t))
        .collect::<Result<_>>()?;
    let big = CMatrix::from_fn(n, n * pieces, |i, col| grams[col / n].matrix[(i, col % n)]);
    let normal = big.adjoint() * &big;
    let eig = hermitian_eigen(&normal)?;
    let cutoff = 1e-20 * eig.max();
    let v_norm = v_grid.energy()?.max(0.0).sqrt();
    let mut worst = 0.0f64;
    let mut tested = 0;
    for (k, &value) in eig.values.iter().enumerate() {
        if value > cutoff {
            break;
        }
        let col = eig.vectors.column(k);
        let coeffs: Vec<SpectralState> = (0..pieces)
            .map(|pc| SpectralState::new(t, col.iter().skip(pc * n).take(n).copied().collect()))
            .collect::<Result<_>>()?;
        let w = ControlSignal::piecewise(region.clone(), p.horizon, coeffs);
        let w_norm = w.energy()?.max(0.0).sqrt();
        if w_norm <= 1e-12 * (1.0 + v_norm) {
            continue;
        }
        tested += 1;
        if v_norm > 0.0 {
            worst = worst.max(v_grid.inner(&w)?.norm() / (v_norm * w_norm));
        }
    }
    Ok(MinimalEnergyReport {
        max_violation: worst,
        tested_directions: tested,
    })
}

/// A zero-effect perturbation of `v` on `pieces` sub-intervals, scaled to
/// `size` times the energy norm of `v` (for counter-tests).
pub fn perturb_with_null_control(
    p: &ControlProblem,
    v: &ControlSignal,
    pieces: usize,
    size: f64,
) -> Result<ControlSignal> {
    let region = p.control_region();
    let t = p.truncation;
    let n = t.mode_count();
    let bounds: Vec<Interval> = (0..pieces)
        .map(|k| {
            Interval::new(
                p.horizon * k as f64 / pieces as f64,
                p.horizon * (k + 1) as f64 / pieces as f64,
            )
        })
        .collect();
    let grams: Vec<Gramian> = bounds
        .iter()
        .map(|iv| assemble_gramian(&region.with_interval(*iv), t))
        .collect::<Result<_>>()?;
    let big = CMatrix::from_fn(n, n * pieces, |i, col| grams[col / n].matrix[(i, col % n)]);
    let eig = hermitian_eigen(&(big.adjoint() * &big))?;
    let col = eig.vectors.column(0);
    let base = v
        .pieces
        .first()
        .map(|pc| pc.coeffs.clone())
        .unwrap_or_else(|| SpectralState::zeros(t));
    let w = ControlSignal::piecewise(
        region.clone(),
        p.horizon,
        (0..pieces)
            .map(|pc| SpectralState::new(t, col.iter().skip(pc * n).take(n).copied().collect()))
            .collect::<Result<_>>()?,
    );
    let scale = size * v.energy()?.max(0.0).sqrt() / w.energy()?.max(1e-300).sqrt();
    let coeffs = w
        .pieces
        .iter()
        .map(|wp| {
            let c = wp
                .coeffs
                .coeffs()
                .iter()
                .zip(base.coeffs())
                .map(|(a, b)| b + a * scale)
                .collect();
            SpectralState::new(t, c)
        })
        .collect::<Result<_>>()?;
    Ok(ControlSignal::piecewise(region, p.horizon, coeffs))
}

#[derive(Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TranspositionReport {
    /// `<z(T), u(T)>`.
    pub lhs: Complex64,
    /// `<z0, u0> + int_0^T <v(s), B^* u(s)> ds`.
    pub rhs: Complex64,
    pub relative_residual: f64,
}

/// Both sides of the transposition identity for the control `v`, the
/// initial state `z0` and the dual datum `u0`.
pub fn transposition_identity(
    z0: &SpectralState,
    v: &ControlSignal,
    u0: &SpectralState,
    horizon: f64,
) -> Result<TranspositionReport> {
    let z_t = propagate(z0, v, horizon)?;
    let u_t = u0.evolve(horizon)?;
    let lhs = z_t.inner_l2(&u_t)?;
    let mut forcing = Complex64::new(0.0, 0.0);
    for piece in &v.pieces {
        let g = assemble_gramian(&v.region.with_interval(piece.interval), u0.truncation())?;
        let c = DVector::from_column_slice(piece.coeffs.coeffs());
        let u = DVector::from_column_slice(u0.coeffs());
        forcing += (u.adjoint() * &g.matrix * c)[(0, 0)];
    }
    let rhs = z0.inner_l2(u0)? + forcing;
    let scale = lhs.norm().max(rhs.norm()).max(f64::MIN_POSITIVE);
    Ok(TranspositionReport {
        lhs,
        rhs,
        relative_residual: (lhs - rhs).norm() / scale,
    })
}

/// `int_0^T exp(A(T-s)) B B^* exp(A^*(T-s)) ds` entrywise.
pub fn controllability_gramian(
    region: &ObservationRegion,
    horizon: f64,
    truncation: Truncation,
) -> Result<CMatrix> {
    let freqs = truncation.frequencies()?;
    let s = spatial_matrix(region, truncation);
    let iv = Interval::new(0.0, horizon);
    let n = freqs.len();
    Ok(CMatrix::from_fn(n, n, |i, j| {
        s[(i, j)] * time_kernel(freqs[i] - freqs[j], iv) / PARSEVAL
    }))
}

/// Observability Gramian of the time-reversed system (`omega -> -omega`).
pub fn reversed_observability_gramian(
    region: &ObservationRegion,
    horizon: f64,
    truncation: Truncation,
) -> Result<CMatrix> {
    let freqs = truncation.frequencies()?;
    let s = spatial_matrix(region, truncation);
    let iv = Interval::new(0.0, horizon);
    let n = freqs.len();
    Ok(CMatrix::from_fn(n, n, |i, j| {
        s[(i, j)] * time_kernel(-freqs[j] + freqs[i], iv)
    }))
}

#[derive(Debug, Clone)]
pub struct FeedbackLaw {
    pub decay: f64,
    pub horizon: f64,
    pub truncation: Truncation,
    pub region: ObservationRegion,
    /// `Lambda^-1` of the weighted Gramian.
    pub gramian_inverse: CMatrix,
    /// `-Lambda^-1`: the control is `v = B^*(gain z)`.
    pub gain: CMatrix,
    /// `diag(i omega) - (S / 4 pi^2) Lambda^-1`.
    pub closed_loop: CMatrix,
    /// Spectral norm of the feedback term `(S / 4 pi^2) Lambda^-1`.
    pub feedback_norm: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
}

impl FeedbackLaw {
    pub fn condition(&self) -> f64 {
        self.lambda_max / self.lambda_min
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct FeedbackSummary {
    pub decay: f64,
    pub horizon: f64,
    pub truncation: Truncation,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub condition: f64,
    pub feedback_norm: f64,
}

impl From<&FeedbackLaw> for FeedbackSummary {
    fn from(l: &FeedbackLaw) -> Self {
        Self {
            decay: l.decay,
            horizon: l.horizon,
            truncation: l.truncation,
            lambda_min: l.lambda_min,
            lambda_max: l.lambda_max,
            condition: l.condition(),
            feedback_norm: l.feedback_norm,
        }
    }
}

/// Weighted Gramian
/// `Lambda = int_0^T exp(-2 w s) exp(-As) B B^* exp(As) ds`
/// and the feedback `F = -B^* Lambda^-1`; the closed loop decays at rate
/// at least `w`.
pub fn build_feedback(
    region: &ObservationRegion,
    decay: f64,
    horizon: f64,
    truncation: Truncation,
) -> Result<FeedbackLaw> {
    region.validate()?;
    if !(decay > 0.0 && decay.is_finite()) {
        return Err(Error::InvalidArgument("decay rate must be positive".into()));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidArgument("horizon must be positive".into()));
    }
    if matches!(region, ObservationRegion::HorizontalSegments { .. }) && !truncation.exclude_m_zero
    {
        return Err(Error::TruncationMismatch(
            "horizontal segments require excludeMZero".into(),
        ));
    }
    let freqs = truncation.frequencies()?;
    let s = spatial_matrix(region, truncation);
    let n = freqs.len();
    let lambda = CMatrix::from_fn(n, n, |i, j| {
        if s[(i, j)] == Complex64::new(0.0, 0.0) {
            return s[(i, j)];
        }
        s[(i, j)] * damped_time_kernel(freqs[j] - freqs[i], decay, horizon) / PARSEVAL
    });
    let eig = hermitian_eigen_blocks(&lambda, &blocks_of(region, truncation))?;
    if is_singular(&eig) {
        return Err(singular_certificate(&eig, truncation)?);
    }
    let inverse = eigen_inverse(&eig);
    let feedback = &s * &inverse / Complex64::from(PARSEVAL);
    let mut closed_loop = -feedback.clone();
    for i in 0..n {
        closed_loop[(i, i)] += Complex64::new(0.0, freqs[i] as f64);
    }
    Ok(FeedbackLaw {
        decay,
        horizon,
        truncation,
        region: region.clone(),
        gain: -inverse.clone(),
        gramian_inverse: inverse,
        closed_loop,
        feedback_norm: spectral_norm(&feedback)?,
        lambda_min: eig.min(),
        lambda_max: eig.max(),
    })
}

/// Closed-form decay rate on the full torus, where
/// `Lambda = (1 - exp(-2wT)) / (2w) I`.
pub fn full_torus_rate(decay: f64, horizon: f64) -> f64 {
    -2.0 * decay / (1.0 - (-2.0 * decay * horizon).exp())
}

pub fn full_torus_region(horizon: f64) -> ObservationRegion {
    ObservationRegion::space_time(SpatialSet::full_torus(), Interval::new(0.0, horizon))
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct DecayTrace {
    pub times: Vec<f64>,
    pub norms: Vec<f64>,
    /// Least-squares slope of `ln |z|` over the second half of the trace.
    pub fitted_rate: Option<f64>,
}

/// Integrates `z' = M z` with Lawson RK4: exact `exp(At)` between stages,
/// classical RK4 on the feedback term.
pub fn simulate_closed_loop(
    law: &FeedbackLaw,
    z0: &SpectralState,
    t_end: f64,
    dt: f64,
) -> Result<DecayTrace> {
    if z0.truncation() != law.truncation {
        return Err(Error::TruncationMismatch("initial state truncation".into()));
    }
    if !(dt > 0.0 && t_end >= 0.0) {
        return Err(Error::InvalidArgument("need dt > 0 and t_end >= 0".into()));
    }
    let freqs = law.truncation.frequencies()?;
    let max_omega = freqs.iter().map(|w| w.unsigned_abs()).max().unwrap_or(0) as f64;
    let stiffness = dt * (max_omega + law.feedback_norm);
    if stiffness >= STEP_LIMIT {
        return Err(Error::StepSize(stiffness));
    }
    let n = freqs.len();
    let mut feedback = -law.closed_loop.clone();
    for i in 0..n {
        feedback[(i, i)] += Complex64::new(0.0, freqs[i] as f64);
    }
    let feedback = -feedback;
    let half: DVector<Complex64> =
        DVector::from_iterator(n, freqs.iter().map(|&w| phase(w, 0.5 * dt)));
    let full: DVector<Complex64> = DVector::from_iterator(n, freqs.iter().map(|&w| phase(w, dt)));
    let steps = (t_end / dt).round() as usize;
    let stride = (steps / 2000).max(1);
    let mut u = DVector::from_column_slice(z0.coeffs());
    let mut times = vec![0.0];
    let mut norms = vec![u.norm()];
    for step in 1..=steps {
        let k1 = &feedback * &u;
        let k2 = &feedback * (&u + &k1 * Complex64::from(0.5 * dt)).component_mul(&half);
        let k3 = &feedback * (u.component_mul(&half) + &k2 * Complex64::from(0.5 * dt));
        let k4 =
            &feedback * (u.component_mul(&full) + k3.component_mul(&half) * Complex64::from(dt));
        let incr =
            k1.component_mul(&full) + (&k2 + &k3).component_mul(&half) * Complex64::from(2.0) + k4;
        u = u.component_mul(&full) + incr * Complex64::from(dt / 6.0);
        if step % stride == 0 || step == steps {
            times.push(step as f64 * dt);
            norms.push(u.norm());
        }
    }
    let fitted_rate = fit_rate(&times, &norms);
    Ok(DecayTrace {
        times,
        norms,
        fitted_rate,
    })
}

fn fit_rate(times: &[f64], norms: &[f64]) -> Option<f64> {
    let start = times.len() / 2;
    let pts: Vec<(f64, f64)> = times[start..]
        .iter()
        .zip(&norms[start..])
        .filter(|(_, &v)| v > 0.0 && v.is_finite())
        .map(|(&t, &v)| (t, v.ln()))
        .collect();
    if pts.len() < 2 || pts.len() < times.len() - start {
        return None;
    }
    let k = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// `mu(m, n) = |1 + i m (m^2 + n^2 - 1)|`.
pub fn mu(mode: ModeIndex) -> Result<f64> {
    Ok((1.0 + (omega(mode)? as f64).powi(2)).sqrt())
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct H2Row {
    pub n: i64,
    pub partial_sum: f64,
    /// Bound on `sum_{|m| > maxM} 1/mu^2 <= 2 / maxM`.
    pub tail: f64,
    pub total: f64,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct H2Report {
    pub rows: Vec<H2Row>,
    pub max_total: f64,
    pub holds: bool,
}

/// `sum_m 1/mu(m,n)^2` plus the tail bound, for every `|n| <= maxN`.
pub fn verify_h2_bound(truncation: Truncation) -> Result<H2Report> {
    let max_m = truncation.max_m as i64;
    let tail = if max_m == 0 {
        f64::INFINITY
    } else {
        2.0 / max_m as f64
    };
    let mut rows = Vec::new();
    for n in -(truncation.max_n as i64)..=truncation.max_n as i64 {
        let mut partial = 0.0;
        // Ascending magnitude keeps the sum accurate.
        for m in (-max_m..=max_m).rev().filter(|m| *m >= 0).flat_map(|m| {
            if m == 0 {
                vec![0]
            } else {
                vec![m, -m]
            }
        }) {
            partial += mu(ModeIndex::new(m, n))?.powi(-2);
        }
        rows.push(H2Row {
            n,
            partial_sum: partial,
            tail,
            total: partial + tail,
        });
    }
    let max_total = rows.iter().map(|r| r.total).fold(0.0, f64::max);
    Ok(H2Report {
        holds: max_total < 5.0,
        rows,
        max_total,
    })
}

/// `(|B^* u|, |(I + A^*) u|)`: restriction to the region's spatial support
/// against the graph norm.
pub fn h2_operator_norms(region: &ObservationRegion, state: &SpectralState) -> Result<(f64, f64)> {
    let observed = crate::observability::spatial_energy(region, state)?
        .max(0.0)
        .sqrt();
    let mut graph = 0.0;
    for (mode, c) in state.iter() {
        graph += mu(mode)?.powi(2) * c.norm_sqr();
    }
    Ok((observed, (PARSEVAL * graph).sqrt()))
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct H2OperatorCheck {
    pub samples: usize,
    /// Worst `|B^* u| / |(I + A^*) u|` for an open set on `L2_x` data.
    pub open_set_worst_ratio: f64,
    /// Worst ratio for the vertical segment on the full lattice.
    pub vertical_worst_ratio: f64,
    pub holds: bool,
}

/// Random-state check of `|B^* u| <= |(I + A^*) u|` for both operator
/// choices: restriction to an open disc on `L2_x`, trace on `{x0} x T`.
pub fn check_h2_operators<R: Rng + ?Sized>(
    truncation: Truncation,
    samples: usize,
    rng: &mut R,
) -> Result<H2OperatorCheck> {
    let open = ObservationRegion::space_time(
        SpatialSet::Disc {
            center: [PI, PI],
            radius: 1.0,
        },
        Interval::new(0.0, 1.0),
    );
    let vertical = ObservationRegion::vertical(0.0, Interval::new(0.0, 1.0));
    let open_t = Truncation::new(truncation.max_m, truncation.max_n, true);
    let full_t = Truncation::new(truncation.max_m, truncation.max_n, false);
    let (mut worst_open, mut worst_vertical) = (0.0f64, 0.0f64);
    for _ in 0..samples {
        let u = SpectralState::random(open_t, rng);
        let (b, a) = h2_operator_norms(&open, &u)?;
        worst_open = worst_open.max(b / a);
        let u = SpectralState::random(full_t, rng);
        let (b, a) = h2_operator_norms(&vertical, &u)?;
        worst_vertical = worst_vertical.max(b / a);
    }
    Ok(H2OperatorCheck {
        samples,
        open_set_worst_ratio: worst_open,
        vertical_worst_ratio: worst_vertical,
        holds: worst_open <= 1.0 && worst_vertical <= 1.0,
    })
}
