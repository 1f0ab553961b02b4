//! Laplacian spectra and pseudoinverses. Also builds the grounding
//! projection onto the complement of `1ₙ`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::check_len;

/// Eigenvalues below `KERNEL_RTOL · λmax` count as zero.
pub const KERNEL_RTOL: f64 = 1e-9;

const SYMMETRY_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LaplacianSpectrum {
    /// Sorted ascending.
    pub eigenvalues: Vec<f64>,
    pub lambda2: f64,
    pub lambda_max: f64,
}

impl LaplacianSpectrum {
    /// Number of eigenvalues treated as zero.
    pub fn kernel_dimension(&self) -> usize {
        let cutoff = KERNEL_RTOL * self.lambda_max.max(f64::MIN_POSITIVE);
        self.eigenvalues.iter().filter(|&&l| l.abs() <= cutoff).count()
    }
}

/// Symmetric eigendecomposition with eigenpairs sorted by ascending eigenvalue.
pub(crate) fn sorted_eigen(m: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    check_symmetric(m)?;
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..m.nrows()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_columns(
        &order.iter().map(|&i| eig.eigenvectors.column(i)).collect::<Vec<_>>(),
    );
    Ok((values, vectors))
}

fn check_symmetric(m: &DMatrix<f64>) -> Result<()> {
    if !m.is_square() {
        return Err(Error::NotSquare(m.nrows(), m.ncols()));
    }
    let scale = m.amax().max(1.0);
    let asym = (m - m.transpose()).amax();
    if asym > SYMMETRY_RTOL * scale {
        return Err(Error::NotSymmetric(asym));
    }
    Ok(())
}

pub fn spectrum(l: &DMatrix<f64>) -> Result<LaplacianSpectrum> {
    let (eigenvalues, _) = sorted_eigen(l)?;
    if eigenvalues.len() < 2 {
        return Err(Error::TooFewVertices(eigenvalues.len()));
    }
    Ok(LaplacianSpectrum {
        lambda2: eigenvalues[1],
        lambda_max: *eigenvalues.last().unwrap(),
        eigenvalues,
    })
}

/// Moore–Penrose pseudoinverse of a connected-graph Laplacian (or of any
/// symmetric PSD matrix with a one-dimensional kernel).
pub fn pseudoinverse(l: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (values, vectors) = sorted_eigen(l)?;
    let lambda_max = values.last().copied().unwrap_or(0.0);
    let cutoff = KERNEL_RTOL * lambda_max.max(f64::MIN_POSITIVE);
    let kernel = values.iter().filter(|&&v| v.abs() <= cutoff).count();
    if kernel != 1 {
        return Err(Error::SingularBeyondKernel(kernel));
    }
    let n = l.nrows();
    let mut pinv = DMatrix::zeros(n, n);
    for (k, &lambda) in values.iter().enumerate().skip(1) {
        let v = vectors.column(k);
        pinv += (v * v.transpose()) / lambda;
    }
    Ok(symmetrized(pinv))
}

fn symmetrized(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// Induced infinity norm: largest absolute row sum.
pub fn inf_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|row| row.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Orthonormal basis `V` (N × N−1) of the subspace orthogonal to `1ₙ`.
///
/// Built from the Householder reflector `H` that sends `1ₙ/√N` to `e₁`;
/// `V` is `H` without its first column.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundingProjection {
    v: DMatrix<f64>,
}

impl GroundingProjection {
    pub fn n(&self) -> usize {
        self.v.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.v
    }

    /// Replaces `V` by `V·Q` for an orthogonal `Q`. Anything downstream must
    /// be invariant under this.
    pub fn rotated(&self, q: &DMatrix<f64>) -> Result<Self> {
        check_len(self.v.ncols(), q.nrows())?;
        Ok(Self { v: &self.v * q })
    }

    /// `θ̄ = Vᵀθ`.
    pub fn ground(&self, theta: &DVector<f64>) -> Result<DVector<f64>> {
        check_len(self.n(), theta.len())?;
        Ok(self.v.tr_mul(theta))
    }

    /// `Vθ̄`, the mean-zero representative.
    pub fn lift(&self, theta_bar: &DVector<f64>) -> Result<DVector<f64>> {
        check_len(self.n() - 1, theta_bar.len())?;
        Ok(&self.v * theta_bar)
    }

    /// `VᵀMV` for an `N × N` matrix.
    pub fn compress(&self, m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        check_len(self.n(), m.nrows())?;
        check_len(self.n(), m.ncols())?;
        Ok(self.v.tr_mul(m) * &self.v)
    }
}

pub fn grounding_projection(n: usize) -> Result<GroundingProjection> {
    if n < 2 {
        return Err(Error::TooFewVertices(n));
    }
    let mut u = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    u[0] -= 1.0;
    let h = DMatrix::identity(n, n) - (&u * u.transpose()) * (2.0 / u.norm_squared());
    Ok(GroundingProjection {
        v: h.columns(1, n - 1).into_owned(),
    })
}
