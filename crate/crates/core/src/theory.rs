//! Two-layer linear student `ŷ = W₂W₁x` trained by small-step gradient
//! descent, its closed-form tangent kernels, the expected kernel alignment
//! over random teachers, and a least-squares feasibility check for
//! recurrent networks with frozen recurrent weights.

use crate::error::{LabError, Result};
use crate::init::{make_aligned_rank1, InitKind, InitSpec};
use crate::metrics::{alignment, KernelMatrix};
use crate::task::{gen_feature_modulated_task, gen_linear_task, random_orthogonal, LinearTask};
use crate::tensor::{gaussian_matrix, svd, DenseMatrix, Rng};

#[derive(Clone, Debug, PartialEq)]
pub struct LinearNet {
    /// `N × d`.
    pub w1: DenseMatrix,
    /// `1 × N`.
    pub w2: DenseMatrix,
    pub sigma: f64,
}

fn random_w2(rng: &mut Rng, n: usize, sigma: f64) -> DenseMatrix {
    let g = gaussian_matrix(rng, 1, n, 1.0);
    g.scale(sigma / g.frobenius_norm())
}

impl LinearNet {
    /// `W₁ = U diag(s) Vᵀ` with random orthonormal `U` (`N × d`) and `V`;
    /// `W₂` a random direction. Requires `Σ s² = σ²` (relative 1e−8).
    pub fn with_singular_values(rng: &mut Rng, n: usize, d: usize, s: &[f64], sigma: f64) -> Result<Self> {
        check_norm_constraint(s, sigma)?;
        if s.len() != d || n < d {
            return Err(LabError::param("s", format!("need d={d} values and N ≥ d, got {} and N={n}", s.len())));
        }
        let u_full = random_orthogonal(rng, n)?;
        let v = random_orthogonal(rng, d)?;
        let us = DenseMatrix::from_fn(n, d, |i, j| u_full[(i, j)] * s[j]);
        let w1 = us.matmul_t(&v)?;
        let w2 = random_w2(rng, n, sigma);
        Ok(LinearNet { w1, w2, sigma })
    }

    /// All singular values equal to `σ/√d`.
    pub fn isotropic(rng: &mut Rng, n: usize, d: usize, sigma: f64) -> Result<Self> {
        LinearNet::with_singular_values(rng, n, d, &vec![sigma / (d as f64).sqrt(); d], sigma)
    }

    /// Rank one with a random direction.
    pub fn random_rank1(rng: &mut Rng, n: usize, d: usize, sigma: f64) -> Result<Self> {
        let mut s = vec![0.0; d];
        s[0] = sigma;
        LinearNet::with_singular_values(rng, n, d, &s, sigma)
    }

    /// `W₁ = σ[t̂ᵀ; 0; …; 0]` for a target direction `t`.
    pub fn aligned(rng: &mut Rng, n: usize, target: &[f64], sigma: f64) -> Result<Self> {
        let spec = InitSpec::new(InitKind::Gaussian, 1.0, n);
        let w1 = make_aligned_rank1(&spec, target, sigma)?;
        let w2 = random_w2(rng, n, sigma);
        Ok(LinearNet { w1, w2, sigma })
    }

    pub fn predictor(&self) -> DenseMatrix {
        self.w2.matmul(&self.w1).expect("W₂ columns equal W₁ rows")
    }
}

fn check_norm_constraint(s: &[f64], sigma: f64) -> Result<()> {
    if !(sigma > 0.0) {
        return Err(LabError::param("sigma", format!("must be positive, got {sigma}")));
    }
    let sum: f64 = s.iter().map(|v| v * v).sum();
    if ((sum - sigma * sigma) / (sigma * sigma)).abs() > 1e-8 {
        return Err(LabError::param("s", format!("Σs² = {sum:e} differs from σ² = {:e}", sigma * sigma)));
    }
    Ok(())
}

/// `K = Xᵀ(W₁ᵀW₁ + ‖W₂‖²I)X`.
pub fn ntk_closed_form(net: &LinearNet, x: &DenseMatrix) -> Result<KernelMatrix> {
    if x.rows() != net.w1.cols() {
        return Err(LabError::Dimension {
            op: "ntk_closed_form",
            lhs: net.w1.shape(),
            rhs: x.shape(),
        });
    }
    let mut m = net.w1.t_matmul(&net.w1)?;
    let w2sq = net.w2.frobenius_norm().powi(2);
    for i in 0..m.rows() {
        m[(i, i)] += w2sq;
    }
    KernelMatrix::new(x.t_matmul(&m.matmul(x)?)?)
}

/// Per-sample gradients of `ŷ(x_i)` with respect to `[W₁, W₂]`, flattened.
pub fn per_sample_gradients(net: &LinearNet, x: &DenseMatrix) -> Vec<Vec<f64>> {
    let (n, d) = net.w1.shape();
    let hidden = net.w1.matmul(x).expect("shapes checked by caller");
    (0..x.cols())
        .map(|i| {
            let mut g = Vec::with_capacity(n * d + n);
            for r in 0..n {
                for c in 0..d {
                    g.push(net.w2[(0, r)] * x[(c, i)]);
                }
            }
            g.extend((0..n).map(|r| hidden[(r, i)]));
            g
        })
        .collect()
}

/// Leading-order kernel after training: `‖β‖ Xᵀ(β̂β̂ᵀ + I)X`.
pub fn final_ntk_prediction(beta: &[f64], x: &DenseMatrix) -> Result<KernelMatrix> {
    let norm = beta.iter().map(|b| b * b).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(LabError::Degenerate("teacher vector is zero".into()));
    }
    let d = beta.len();
    let m = DenseMatrix::from_fn(d, d, |i, j| beta[i] * beta[j] / norm + if i == j { norm } else { 0.0 });
    KernelMatrix::new(x.t_matmul(&m.matmul(x)?)?)
}

/// `(1+c)(d+1) / √((d+3)(d+2+Σ(s_j/σ)⁴))` with `c = 1/d`.
pub fn expected_ka(s: &[f64], sigma: f64, d: usize) -> Result<f64> {
    check_norm_constraint(s, sigma)?;
    if d == 0 || s.len() > d {
        return Err(LabError::param("d", format!("need 1 ≤ len(s) ≤ d, got {} and {d}", s.len())));
    }
    let c = 1.0 / d as f64;
    let quartic: f64 = s.iter().map(|v| (v / sigma).powi(4)).sum();
    let d = d as f64;
    Ok((1.0 + c) * (d + 1.0) / ((d + 3.0) * (d + 2.0 + quartic)).sqrt())
}

/// Monte-Carlo estimates of `c_j = E[β_j²/‖β‖²]` for every `j`, `β ~ N(0, I_d)`.
pub fn c_coefficients_mc(rng: &mut Rng, d: usize, n_samples: usize) -> Result<Vec<f64>> {
    if n_samples < 1000 {
        return Err(LabError::param("n_samples", format!("need at least 1000, got {n_samples}")));
    }
    if d == 0 {
        return Err(LabError::param("d", "must be positive"));
    }
    let mut acc = vec![0.0; d];
    for _ in 0..n_samples {
        let b = rng.normal_vec(d, 1.0);
        let nn: f64 = b.iter().map(|v| v * v).sum();
        for (a, v) in acc.iter_mut().zip(&b) {
            *a += v * v / nn;
        }
    }
    Ok(acc.into_iter().map(|a| a / n_samples as f64).collect())
}

/// Monte-Carlo estimate of `c = c₁`.
pub fn c_constant_mc(rng: &mut Rng, d: usize, n_samples: usize) -> Result<f64> {
    Ok(c_coefficients_mc(rng, d, n_samples)?[0])
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowResult {
    pub net: LinearNet,
    pub steps: usize,
    /// `‖W₂W₁X − Y‖² / m` at the end.
    pub mse: f64,
    /// Loss `½‖W₂W₁X − Y‖²` sampled every 100 steps.
    pub loss_trace: Vec<f64>,
    /// No step increased the loss beyond rounding.
    pub monotone: bool,
}

/// Largest singular value of `X`, squared.
pub fn op_norm_sq(x: &DenseMatrix) -> Result<f64> {
    Ok(svd(x)?.s.first().copied().unwrap_or(0.0).powi(2))
}

const PLATEAU_WINDOW: usize = 1000;
const PLATEAU_REL: f64 = 1e-12;

/// Full-batch gradient descent on `½‖W₂W₁X − Y‖²`. Stops when the MSE
/// reaches `tol`, when the loss changes by at most 1e−12 (relative) over
/// 1000 steps, or after `max_steps`.
pub fn train_gradient_flow(net: &LinearNet, task: &LinearTask, eta: f64, max_steps: usize, tol: f64) -> Result<FlowResult> {
    let x = &task.x;
    let limit = 1e-2 / op_norm_sq(x)?;
    if !(eta > 0.0) || eta > limit * (1.0 + 1e-12) {
        return Err(LabError::param("eta", format!("must lie in (0, {limit:e}], got {eta:e}")));
    }
    let m = x.cols() as f64;
    let xxt = x.matmul_t(x)?;
    let yxt = task.y.matmul_t(x)?;
    let yy = task.y.frobenius_norm().powi(2);
    let mut w1 = net.w1.clone();
    let mut w2 = net.w2.clone();
    // ½‖PX − Y‖² = ½(P XXᵀ Pᵀ − 2 P XYᵀ + YYᵀ) with P = W₂W₁.
    let loss_of = |p: &DenseMatrix| -> Result<f64> {
        let pxx = p.matmul(&xxt)?;
        Ok(0.5 * (pxx.frobenius_dot(p)? - 2.0 * p.frobenius_dot(&yxt)? + yy).max(0.0))
    };
    let mut loss = loss_of(&w2.matmul(&w1)?)?;
    let mut loss_trace = vec![loss];
    let mut window_start = loss;
    let mut monotone = true;
    let mut steps = 0;
    while steps < max_steps && 2.0 * loss / m > tol {
        let p = w2.matmul(&w1)?;
        let e = p.matmul(&xxt)?.sub(&yxt)?;
        let g1 = w2.t_matmul(&e)?;
        let g2 = e.matmul_t(&w1)?;
        w1.axpy(-eta, &g1)?;
        w2.axpy(-eta, &g2)?;
        steps += 1;
        let next = loss_of(&w2.matmul(&w1)?)?;
        if !next.is_finite() {
            return Err(LabError::Numerical {
                iteration: steps,
                msg: "gradient-flow loss is not finite".into(),
            });
        }
        if next > loss * (1.0 + 1e-10) + 1e-300 {
            monotone = false;
        }
        loss = next;
        if steps % 100 == 0 {
            loss_trace.push(loss);
        }
        if steps % PLATEAU_WINDOW == 0 {
            if (window_start - loss).abs() <= PLATEAU_REL * window_start.max(f64::MIN_POSITIVE) {
                break;
            }
            window_start = loss;
        }
    }
    Ok(FlowResult {
        net: LinearNet {
            w1,
            w2,
            sigma: net.sigma,
        },
        steps,
        mse: 2.0 * loss / m,
        loss_trace,
        monotone,
    })
}

/// Step size used by the theory checks: the largest allowed, `1e−2/‖X‖²_op`.
pub fn default_eta(x: &DenseMatrix) -> Result<f64> {
    Ok(1e-2 / op_norm_sq(x)?)
}

const THEORY_MAX_STEPS: usize = 2_000_000;
const THEORY_TOL: f64 = 1e-10;

/// Alignment between the initial and trained closed-form kernels.
pub fn trained_ka(net: &LinearNet, task: &LinearTask) -> Result<(f64, FlowResult)> {
    let eta = default_eta(&task.x)?;
    let k0 = ntk_closed_form(net, &task.x)?;
    let flow = train_gradient_flow(net, task, eta, THEORY_MAX_STEPS, THEORY_TOL)?;
    let kf = ntk_closed_form(&flow.net, &task.x)?;
    Ok((alignment(&kf, &k0)?, flow))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExpectedKaCheck {
    pub empirical_mean: f64,
    pub formula: f64,
    /// One KA value per teacher draw.
    pub samples: Vec<f64>,
}

impl ExpectedKaCheck {
    pub fn standard_error(&self) -> f64 {
        let n = self.samples.len() as f64;
        let var = self.samples.iter().map(|v| (v - self.empirical_mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        (var / n).sqrt()
    }
}

/// Trains one student per fresh teacher `β ~ N(0, I/d)` on whitened data
/// (`m = max(2d, 10)`), each with a fresh initialization of the given
/// singular values, and averages the initial-vs-final kernel alignment.
pub fn verify_expected_ka(rng: &mut Rng, d: usize, sigma: f64, s: &[f64], n_tasks: usize, n: usize) -> Result<ExpectedKaCheck> {
    let formula = expected_ka(s, sigma, d)?;
    let m = (2 * d).max(10);
    let mut samples = Vec::with_capacity(n_tasks);
    for _ in 0..n_tasks {
        let task = gen_linear_task(rng, d, m, true)?;
        let net = LinearNet::with_singular_values(rng, n, d, s, sigma)?;
        samples.push(trained_ka(&net, &task)?.0);
    }
    let empirical_mean = samples.iter().sum::<f64>() / n_tasks.max(1) as f64;
    Ok(ExpectedKaCheck {
        empirical_mean,
        formula,
        samples,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AlignMode {
    /// Along the effective teacher `Fᵀw`.
    Full,
    /// Along the teacher built from the rank-`d/2` truncation of `F`.
    Partial,
    /// Rank one in a random direction.
    RandomRank1,
}

#[derive(Clone, Copy, Debug)]
pub struct AlignedSetup {
    pub n: usize,
    pub m: usize,
}

impl Default for AlignedSetup {
    fn default() -> Self {
        AlignedSetup { n: 1000, m: 50 }
    }
}

/// Kernel alignment under an aligned, partially aligned or random rank-one
/// initialization on a feature-modulated task with `w = 1`.
pub fn verify_aligned_init(rng: &mut Rng, d: usize, sigma: f64, kappa: f64, mode: AlignMode, setup: AlignedSetup) -> Result<f64> {
    if sigma > 1e-2 {
        return Err(LabError::param("sigma", format!("must be ≤ 1e-2, got {sigma}")));
    }
    let task = gen_feature_modulated_task(rng, d, setup.m, kappa, &vec![1.0; d], mode == AlignMode::Partial)?;
    let net = match mode {
        AlignMode::Full | AlignMode::Partial => {
            let target = task.align_target.as_ref().expect("feature-modulated tasks carry a target");
            LinearNet::aligned(rng, setup.n, target, sigma)?
        }
        AlignMode::RandomRank1 => LinearNet::random_rank1(rng, setup.n, d, sigma)?,
    };
    Ok(trained_ka(&net, &task)?.0)
}

/// `W_h = A B` with Gaussian `A` (`N × r`) and `B` (`r × N`), scaled by `1/√N`.
pub fn rank_r_matrix(rng: &mut Rng, n: usize, r: usize) -> Result<DenseMatrix> {
    if r == 0 {
        return Ok(DenseMatrix::zeros(n, n));
    }
    let a = gaussian_matrix(rng, n, r, 1.0);
    let b = gaussian_matrix(rng, r, n, 1.0 / (n as f64).sqrt());
    a.matmul(&b)
}

/// Best relative residual `‖Y − ŵH‖/‖Y‖` over readouts `ŵ`, for a linear RNN
/// with frozen recurrent weights of rank `rank_wh`, random projected inputs
/// `X_t` (`N × d`, `t = 1..T−1`) and random targets `Y` (`N_out × d`), where
/// `H = W_h Σ_t W_h^{T−t−1} X_t`.
pub fn frozen_recurrent_feasibility(rng: &mut Rng, n: usize, n_out: usize, d: usize, steps: usize, rank_wh: usize) -> Result<f64> {
    if n <= n_out || d <= n_out {
        return Err(LabError::param("n_out", "needs N > N_out and d > N_out"));
    }
    if steps < 2 {
        return Err(LabError::param("steps", "needs at least two steps"));
    }
    if rank_wh > n {
        return Err(LabError::param("rank_wh", format!("must be ≤ N={n}, got {rank_wh}")));
    }
    let w_h = rank_r_matrix(rng, n, rank_wh)?;
    let xs: Vec<DenseMatrix> = (1..steps).map(|_| gaussian_matrix(rng, n, d, 1.0)).collect();
    let y = gaussian_matrix(rng, n_out, d, 1.0);
    // Horner: S = Σ_{t=1}^{T−1} W_h^{T−t−1} X_t.
    let mut acc = xs[0].clone();
    for x in &xs[1..] {
        acc = w_h.matmul(&acc)?.add(x)?;
    }
    let h = w_h.matmul(&acc)?;
    let f = svd(&h)?;
    let smax = f.s.first().copied().unwrap_or(0.0);
    let tol = smax * (n.max(d) as f64) * f64::EPSILON;
    let keep: Vec<usize> = (0..f.s.len()).filter(|&k| f.s[k] > tol && smax > 0.0).collect();
    // Projection of Y's rows onto the row space of H.
    let mut proj = DenseMatrix::zeros(n_out, d);
    for &k in &keep {
        let v = f.vt.row(k);
        for o in 0..n_out {
            let coef: f64 = y.row(o).iter().zip(v).map(|(a, b)| a * b).sum();
            for (p, vv) in proj.row_mut(o).iter_mut().zip(v) {
                *p += coef * vv;
            }
        }
    }
    Ok(y.sub(&proj)?.frobenius_norm() / y.frobenius_norm())
}
