//! Thin SVD by one-sided (Hestenes) Jacobi rotations.

use super::DenseMatrix;
use crate::error::{LabError, Result};

const MAX_SWEEPS: usize = 100;

/// `a = u · diag(s) · vt` with `k = min(rows, cols)` components.
#[derive(Clone, Debug)]
pub struct SvdResult {
    /// rows × k, orthonormal columns.
    pub u: DenseMatrix,
    /// Descending, nonnegative.
    pub s: Vec<f64>,
    /// k × cols, orthonormal rows.
    pub vt: DenseMatrix,
}

impl SvdResult {
    pub fn reconstruct(&self) -> DenseMatrix {
        let mut us = self.u.clone();
        for i in 0..us.rows() {
            for (j, &s) in self.s.iter().enumerate() {
                us[(i, j)] *= s;
            }
        }
        us.matmul(&self.vt).expect("svd factors are shape consistent")
    }

    /// Keeps the leading `r` components and rebuilds the matrix.
    pub fn truncated(&self, r: usize) -> DenseMatrix {
        let mut s = self.s.clone();
        for v in s.iter_mut().skip(r) {
            *v = 0.0;
        }
        SvdResult {
            u: self.u.clone(),
            s,
            vt: self.vt.clone(),
        }
        .reconstruct()
    }

    /// Rebuild with the singular values replaced.
    pub fn with_singular_values(&self, s: &[f64]) -> DenseMatrix {
        assert_eq!(s.len(), self.s.len());
        SvdResult {
            u: self.u.clone(),
            s: s.to_vec(),
            vt: self.vt.clone(),
        }
        .reconstruct()
    }
}

/// Singular value decomposition of a nonempty matrix.
///
/// Deterministic: the first entry of each left singular vector whose
/// magnitude exceeds `1e-10` is made positive.
pub fn svd(a: &DenseMatrix) -> Result<SvdResult> {
    if a.rows() == 0 || a.cols() == 0 {
        return Err(LabError::Degenerate("svd of an empty matrix".into()));
    }
    if !a.is_finite() {
        return Err(LabError::Degenerate("svd input has non-finite entries".into()));
    }
    let mut out = if a.rows() >= a.cols() {
        jacobi_tall(a)?
    } else {
        let t = jacobi_tall(&a.transpose())?;
        SvdResult {
            u: t.vt.transpose(),
            s: t.s,
            vt: t.u.transpose(),
        }
    };
    fix_signs(&mut out);
    Ok(out)
}

/// Jacobi on a matrix with rows ≥ cols. Works on the transpose so that each
/// column being rotated is a contiguous row.
fn jacobi_tall(a: &DenseMatrix) -> Result<SvdResult> {
    let (m, n) = a.shape();
    let mut w = a.transpose(); // n × m; row j is column j of a
    let mut v = DenseMatrix::identity(n); // row j is column j of V
    let tol = (m as f64) * f64::EPSILON;
    let tiny = f64::MIN_POSITIVE / f64::EPSILON;

    let mut converged = false;
    for _sweep in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let (alpha, beta, gamma) = {
                    let wp = w.row(p);
                    let wq = w.row(q);
                    let mut alpha = 0.0;
                    let mut beta = 0.0;
                    let mut gamma = 0.0;
                    for (&x, &y) in wp.iter().zip(wq) {
                        alpha += x * x;
                        beta += y * y;
                        gamma += x * y;
                    }
                    (alpha, beta, gamma)
                };
                if alpha < tiny || beta < tiny {
                    continue;
                }
                if gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_rows(&mut w, p, q, c, s);
                rotate_rows(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(LabError::NoConvergence {
            what: "one-sided Jacobi SVD",
            iterations: MAX_SWEEPS,
        });
    }

    let norms: Vec<f64> = (0..n)
        .map(|j| w.row(j).iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]).then(i.cmp(&j)));

    let smax = norms[order[0]];
    let zero_cut = smax * (m.max(n) as f64) * f64::EPSILON;
    let mut u = DenseMatrix::zeros(m, n);
    let mut vt = DenseMatrix::zeros(n, n);
    let mut s = Vec::with_capacity(n);
    let mut null_cols = Vec::new();
    for (k, &j) in order.iter().enumerate() {
        let sj = norms[j];
        vt.row_mut(k).copy_from_slice(v.row(j));
        if sj > zero_cut && sj > 0.0 {
            for (i, &x) in w.row(j).iter().enumerate() {
                u[(i, k)] = x / sj;
            }
            s.push(sj);
        } else {
            s.push(if sj > 0.0 { sj } else { 0.0 });
            null_cols.push(k);
        }
    }
    if !null_cols.is_empty() {
        complete_orthonormal(&mut u, &null_cols);
    }
    Ok(SvdResult { u, s, vt })
}

#[inline]
fn rotate_rows(m: &mut DenseMatrix, p: usize, q: usize, c: f64, s: f64) {
    let cols = m.cols();
    let data = m.as_mut_slice();
    let (head, tail) = data.split_at_mut(q * cols);
    let rp = &mut head[p * cols..(p + 1) * cols];
    let rq = &mut tail[..cols];
    for (x, y) in rp.iter_mut().zip(rq.iter_mut()) {
        let a = *x;
        let b = *y;
        *x = c * a - s * b;
        *y = s * a + c * b;
    }
}

/// Fills the listed columns of `u` with unit vectors orthogonal to every
/// other column, by Gram–Schmidt against the standard basis.
fn complete_orthonormal(u: &mut DenseMatrix, targets: &[usize]) {
    let m = u.rows();
    let mut filled: Vec<usize> = (0..u.cols()).filter(|c| !targets.contains(c)).collect();
    let mut candidate = 0;
    for &k in targets {
        loop {
            assert!(candidate < m, "ran out of basis candidates");
            let mut x = vec![0.0; m];
            x[candidate] = 1.0;
            candidate += 1;
            // Two passes of modified Gram–Schmidt.
            for _ in 0..2 {
                for &c in &filled {
                    let dot: f64 = (0..m).map(|i| u[(i, c)] * x[i]).sum();
                    for (i, xi) in x.iter_mut().enumerate() {
                        *xi -= dot * u[(i, c)];
                    }
                }
            }
            let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 1e-8 {
                for (i, xi) in x.iter().enumerate() {
                    u[(i, k)] = xi / norm;
                }
                filled.push(k);
                break;
            }
        }
    }
}

fn fix_signs(r: &mut SvdResult) {
    for k in 0..r.s.len() {
        let lead = (0..r.u.rows())
            .map(|i| r.u[(i, k)])
            .find(|v| v.abs() > 1e-10)
            .unwrap_or(0.0);
        if lead < 0.0 {
            for i in 0..r.u.rows() {
                r.u[(i, k)] = -r.u[(i, k)];
            }
            for x in r.vt.row_mut(k) {
                *x = -*x;
            }
        }
    }
}
