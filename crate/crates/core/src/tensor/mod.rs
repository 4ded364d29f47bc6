//! Dense linear algebra, decompositions and seeded sampling.

mod eigen;
mod matrix;
mod rng;
mod svd;

pub use eigen::{eigenvalues, Complex, EigenSpectrum};
pub use matrix::{frobenius_norm, matmul, DenseMatrix};
pub(crate) use matrix::gemm;
pub use rng::{gaussian_matrix, mix_seed, uniform_matrix, Rng};
pub use svd::{svd, SvdResult};

use crate::error::{LabError, Result};

/// `(Σ sᵢ) / (s₁ · n)` for a square matrix: the fraction of singular values
/// comparable to the largest one.
pub fn effective_rank_sv(a: &DenseMatrix) -> Result<f64> {
    require_square(a, "effective_rank_sv")?;
    let s = svd(a)?.s;
    let s1 = s[0];
    if s1 <= 0.0 {
        return Err(LabError::Degenerate("effective rank of an all-zero matrix".into()));
    }
    Ok(s.iter().sum::<f64>() / (s1 * a.rows() as f64))
}

/// `(Σ |λᵢ|) / (|λ₁| · n)`.
pub fn effective_rank_eig(a: &DenseMatrix) -> Result<f64> {
    require_square(a, "effective_rank_eig")?;
    let spectrum = eigenvalues(a)?;
    effective_rank_of_spectrum(&spectrum)
}

pub fn effective_rank_of_spectrum(spectrum: &EigenSpectrum) -> Result<f64> {
    let moduli = spectrum.moduli();
    let lead = moduli.first().copied().unwrap_or(0.0);
    if lead <= 0.0 {
        return Err(LabError::Degenerate("effective rank of a zero spectrum".into()));
    }
    Ok(moduli.iter().sum::<f64>() / (lead * moduli.len() as f64))
}

fn require_square(a: &DenseMatrix, op: &'static str) -> Result<()> {
    if !a.is_square() {
        return Err(LabError::Dimension {
            op,
            lhs: a.shape(),
            rhs: (a.cols(), a.rows()),
        });
    }
    Ok(())
}
