//! Dense Hermitian helpers over `nalgebra` with optional block structure.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::spectrum::{SpectralState, Truncation};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Column `k` is the eigenvector for `values[k]`.
    pub vectors: CMatrix,
}

impl HermitianEigen {
    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(f64::NAN)
    }

    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(f64::NAN)
    }
}

/// Full Hermitian eigen-decomposition.
pub fn hermitian_eigen(matrix: &CMatrix) -> Result<HermitianEigen> {
    hermitian_eigen_blocks(matrix, &[(0..matrix.nrows()).collect()])
}

/// Eigen-decomposition that only couples indices inside each block.
///
/// `blocks` must partition `0..n`; entries outside the blocks are assumed
/// to be zero and are ignored.
pub fn hermitian_eigen_blocks(matrix: &CMatrix, blocks: &[Vec<usize>]) -> Result<HermitianEigen> {
    let n = matrix.nrows();
    if matrix.ncols() != n {
        return Err(Error::EigenFailure("matrix is not square".into()));
    }
    let covered: usize = blocks.iter().map(Vec::len).sum();
    if covered != n {
        return Err(Error::EigenFailure(format!(
            "blocks cover {covered} of {n} indices"
        )));
    }
    let mut pairs: Vec<(f64, CVector)> = Vec::with_capacity(n);
    for block in blocks {
        let k = block.len();
        if k == 0 {
            continue;
        }
        let sub = CMatrix::from_fn(k, k, |i, j| {
            let (a, b) = (matrix[(block[i], block[j])], matrix[(block[j], block[i])]);
            (a + b.conj()) * 0.5
        });
        let eig = SymmetricEigen::try_new(sub, f64::EPSILON, 10_000)
            .ok_or_else(|| Error::EigenFailure("QR iteration did not converge".into()))?;
        for c in 0..k {
            if !eig.eigenvalues[c].is_finite() {
                return Err(Error::EigenFailure("non-finite eigenvalue".into()));
            }
            let mut v = CVector::zeros(n);
            for (r, &row) in block.iter().enumerate() {
                v[row] = eig.eigenvectors[(r, c)];
            }
            pairs.push((eig.eigenvalues[c], v));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let values = pairs.iter().map(|p| p.0).collect();
    let vectors = CMatrix::from_columns(&pairs.into_iter().map(|p| p.1).collect::<Vec<_>>());
    Ok(HermitianEigen { values, vectors })
}

/// `x^* A x`, real part.
pub fn quadratic_form(matrix: &CMatrix, x: &[Complex64]) -> f64 {
    let v = CVector::from_column_slice(x);
    (v.adjoint() * matrix * &v)[(0, 0)].re
}

/// Max-abs of `A - A^*`.
pub fn hermitian_defect(matrix: &CMatrix) -> f64 {
    let n = matrix.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..=i {
            worst = worst.max((matrix[(i, j)] - matrix[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Cholesky factorisation of a Hermitian positive definite matrix.
pub fn cholesky(matrix: &CMatrix) -> Option<Cholesky<Complex64, nalgebra::Dyn>> {
    Cholesky::new(matrix.clone())
}

/// Spectral 2-norm of a general square matrix via `A^* A`.
pub fn spectral_norm(matrix: &CMatrix) -> Result<f64> {
    let gram = matrix.adjoint() * matrix;
    Ok(hermitian_eigen(&gram)?.max().max(0.0).sqrt())
}

/// Evidence that a Gramian is (numerically) singular: its extreme
/// eigenvalues and the eigenvectors below the threshold, as states.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct KernelCertificate {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub threshold: f64,
    pub kernel_eigenvalues: Vec<f64>,
    pub kernel: Vec<SpectralState>,
}

impl KernelCertificate {
    pub fn ratio(&self) -> f64 {
        if self.lambda_max > 0.0 {
            self.lambda_min / self.lambda_max
        } else {
            0.0
        }
    }

    /// Eigen-directions with eigenvalue `< rel_threshold * lambda_max`.
    pub fn from_eigen(
        eig: &HermitianEigen,
        truncation: Truncation,
        rel_threshold: f64,
    ) -> Result<Self> {
        let lambda_max = eig.max();
        let threshold = rel_threshold * lambda_max.abs();
        let mut kernel = Vec::new();
        let mut kernel_eigenvalues = Vec::new();
        for (k, &value) in eig.values.iter().enumerate() {
            if value >= threshold {
                break;
            }
            let coeffs = eig.vectors.column(k).iter().copied().collect();
            kernel.push(SpectralState::new(truncation, coeffs)?);
            kernel_eigenvalues.push(value);
        }
        Ok(Self {
            lambda_min: eig.min(),
            lambda_max,
            threshold,
            kernel_eigenvalues,
            kernel,
        })
    }
}
