//! Student–teacher data for the two-layer linear network.

use crate::error::{LabError, Result};
use crate::tensor::{gaussian_matrix, svd, uniform_matrix, DenseMatrix, Rng};

#[derive(Clone, Debug)]
pub struct LinearTask {
    /// `d × m` inputs, one sample per column.
    pub x: DenseMatrix,
    /// `1 × m` targets, always `βᵀX`.
    pub y: DenseMatrix,
    pub beta: Vec<f64>,
    /// Feature modulation applied by the teacher.
    pub f: Option<DenseMatrix>,
    pub kappa: Option<f64>,
    /// Direction an aligned initialization should point along.
    pub align_target: Option<Vec<f64>>,
}

impl LinearTask {
    pub fn d(&self) -> usize {
        self.x.rows()
    }

    pub fn m(&self) -> usize {
        self.x.cols()
    }

    fn from_teacher(x: DenseMatrix, beta: Vec<f64>) -> LinearTask {
        let y = DenseMatrix::row_vector(&beta)
            .matmul(&x)
            .expect("teacher length equals input dimension");
        LinearTask {
            x,
            y,
            beta,
            f: None,
            kappa: None,
            align_target: None,
        }
    }
}

/// Replaces every nonzero singular value by 1 (`U Vᵀ` of the thin SVD).
pub fn whiten(x: &DenseMatrix) -> Result<DenseMatrix> {
    let s = svd(x)?;
    let tol = s.s.first().copied().unwrap_or(0.0) * 1e-12;
    let ones: Vec<f64> = s.s.iter().map(|&v| if v > tol { 1.0 } else { 0.0 }).collect();
    Ok(s.with_singular_values(&ones))
}

/// Haar-like orthogonal matrix: the polar factor of a Gaussian draw.
pub fn random_orthogonal(rng: &mut Rng, n: usize) -> Result<DenseMatrix> {
    let g = gaussian_matrix(rng, n, n, 1.0);
    let s = svd(&g)?;
    Ok(s.with_singular_values(&vec![1.0; n]))
}

/// Gaussian inputs (optionally whitened) and teacher `β ~ N(0, 1/d)`.
pub fn gen_linear_task(rng: &mut Rng, d: usize, m: usize, whiten_inputs: bool) -> Result<LinearTask> {
    if d == 0 || m == 0 {
        return Err(LabError::param("d", "input dimension and sample count must be positive"));
    }
    if whiten_inputs && m < d {
        return Err(LabError::param("m", format!("whitening needs m ≥ d, got m={m}, d={d}")));
    }
    let mut x = gaussian_matrix(rng, d, m, 1.0);
    if whiten_inputs {
        x = whiten(&x)?;
    }
    let beta = rng.normal_vec(d, (1.0 / d as f64).sqrt());
    Ok(LinearTask::from_teacher(x, beta))
}

/// Teacher `y = wᵀF x` with `F = U S Vᵀ`, `S = diag(κ,…,κ, 1,…,1)` and inputs
/// uniform on `[−2, 2]`. The effective teacher is `β = Fᵀw`; with `partial`
/// the alignment target is built from the rank-`d/2` truncation of `F`.
pub fn gen_feature_modulated_task(
    rng: &mut Rng,
    d: usize,
    m: usize,
    kappa: f64,
    w: &[f64],
    partial: bool,
) -> Result<LinearTask> {
    if d == 0 || d % 2 != 0 {
        return Err(LabError::param("d", format!("must be even and positive, got {d}")));
    }
    if !(kappa >= 1.0) {
        return Err(LabError::param("kappa", format!("must be ≥ 1, got {kappa}")));
    }
    if w.len() != d {
        return Err(LabError::Dimension {
            op: "gen_feature_modulated_task",
            lhs: (w.len(), 1),
            rhs: (d, 1),
        });
    }
    let u = random_orthogonal(rng, d)?;
    let v = random_orthogonal(rng, d)?;
    let mut s = vec![1.0; d];
    s[..d / 2].fill(kappa);
    let f = scale_cols(&u, &s).matmul_t(&v)?;
    let beta = f.t_matmul(&DenseMatrix::column(w))?.into_vec();
    let target = if partial {
        let mut s_r = s.clone();
        s_r[d / 2..].fill(0.0);
        let f_r = scale_cols(&u, &s_r).matmul_t(&v)?;
        f_r.t_matmul(&DenseMatrix::column(w))?.into_vec()
    } else {
        beta.clone()
    };
    let x = uniform_matrix(rng, d, m, -2.0, 2.0);
    let mut task = LinearTask::from_teacher(x, beta);
    task.f = Some(f);
    task.kappa = Some(kappa);
    task.align_target = Some(target);
    Ok(task)
}

fn scale_cols(a: &DenseMatrix, s: &[f64]) -> DenseMatrix {
    DenseMatrix::from_fn(a.rows(), a.cols(), |i, j| a[(i, j)] * s[j])
}
