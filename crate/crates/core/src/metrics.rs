//! Weight change, representation and tangent-kernel alignment, task-kernel
//! alignments and kernel effective rank.
//!
//! The tangent kernel sums the per-output kernels of the final-step readout
//! over all outputs. Representations are post-activation final states.

use crate::error::{LabError, Result};
use crate::rnn::{backward_deltas, evaluate, forward, LogEntry, RnnParams, TrainHooks};
use crate::task::TaskBatch;
use crate::tensor::{effective_rank_eig, effective_rank_sv, gemm, DenseMatrix};

const POWER_TOL: f64 = 1e-10;
const POWER_MAX_ITERS: usize = 10_000;

/// Symmetric Gram-type matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelMatrix {
    k: DenseMatrix,
}

impl KernelMatrix {
    /// Accepts a square matrix that is symmetric to `1e−10·‖K‖_F` and stores
    /// its exact symmetric part.
    pub fn new(k: DenseMatrix) -> Result<Self> {
        if !k.is_square() {
            return Err(LabError::Dimension {
                op: "kernel",
                lhs: k.shape(),
                rhs: (k.rows(), k.rows()),
            });
        }
        let kt = k.transpose();
        let asym = k.sub(&kt)?.frobenius_norm();
        if asym > 1e-10 * k.frobenius_norm() {
            return Err(LabError::Consistency(format!("kernel asymmetry {asym:e} exceeds tolerance")));
        }
        let mut sym = k.add(&kt)?;
        sym.scale_in_place(0.5);
        Ok(KernelMatrix { k: sym })
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.k
    }

    pub fn size(&self) -> usize {
        self.k.rows()
    }

    pub fn scale(&self, c: f64) -> KernelMatrix {
        KernelMatrix { k: self.k.scale(c) }
    }

    pub fn trace(&self) -> f64 {
        self.k.trace()
    }
}

fn block_norm_sq(a: &DenseMatrix, b: &DenseMatrix) -> Result<f64> {
    let d = a.sub(b)?;
    let n = d.frobenius_norm();
    Ok(n * n)
}

/// Frobenius norm of the stacked difference `[ΔW_h ΔW_x Δwᵀ]`.
pub fn weight_change_norm(w0: &RnnParams, wf: &RnnParams) -> Result<f64> {
    let mut total = 0.0;
    for (a, b) in wf.blocks().iter().zip(w0.blocks()) {
        total += block_norm_sq(a, b)?;
    }
    Ok(total.sqrt())
}

/// `H Hᵀ` for the `m × N` post-activation final states of the probe.
pub fn rsm(params: &RnnParams, probe: &TaskBatch) -> Result<KernelMatrix> {
    let trace = forward(params, &probe.inputs)?;
    gram_rows(trace.final_activation())
}

fn gram_rows(h: &DenseMatrix) -> Result<KernelMatrix> {
    let mut r = DenseMatrix::zeros(h.rows(), h.rows());
    gemm(h, false, h, true, 1.0, 0.0, &mut r);
    KernelMatrix::new(r)
}

/// Gram matrix of explicit per-sample gradient vectors.
pub fn gram_of_gradients(grads: &[Vec<f64>]) -> Result<KernelMatrix> {
    let m = grads.len();
    let p = grads.first().map_or(0, Vec::len);
    if grads.iter().any(|g| g.len() != p) {
        return Err(LabError::Consistency("per-sample gradients differ in length".into()));
    }
    let flat: Vec<f64> = grads.iter().flatten().copied().collect();
    gram_rows(&DenseMatrix::from_vec(m, p, flat)?)
}

/// Tangent kernel of the final-step readout, summed over outputs:
/// `K_ij = Σ_o ⟨∇_W ŷ_o(x_i), ∇_W ŷ_o(x_j)⟩` over `W_h`, `W_x` and `w`.
///
/// The recurrent and input blocks contribute
/// `Σ_{s,s'} (δ_s^i·δ_{s'}^j)(a_{s−1}^i·a_{s'−1}^j + x_{s−1}^i·x_{s'−1}^j)`,
/// where `δ` is the backpropagated signal for one output.
pub fn ntk(params: &RnnParams, probe: &TaskBatch) -> Result<KernelMatrix> {
    let trace = forward(params, &probe.inputs)?;
    let steps = probe.steps();
    let (m, n) = (probe.batch_size(), params.n());

    // Input-side Gram blocks, shared by every output.
    let mut feature_gram = vec![vec![DenseMatrix::zeros(0, 0); steps + 1]; steps + 1];
    for s in 1..=steps {
        for s2 in s..=steps {
            let mut g = DenseMatrix::zeros(m, m);
            gemm(&trace.activations[s - 1], false, &trace.activations[s2 - 1], true, 1.0, 0.0, &mut g);
            gemm(&probe.inputs[s - 1], false, &probe.inputs[s2 - 1], true, 1.0, 1.0, &mut g);
            feature_gram[s][s2] = g;
        }
    }

    let h_t = &trace.hidden[steps];
    let a_t = trace.final_activation();
    let mut k = DenseMatrix::zeros(m, m);
    gemm(a_t, false, a_t, true, params.n_out() as f64, 0.0, &mut k);
    let mut direct = vec![DenseMatrix::zeros(m, n); steps + 1];
    let mut dd = DenseMatrix::zeros(m, m);
    for o in 0..params.n_out() {
        let w_o = params.w_out.row(o);
        direct[steps] = DenseMatrix::from_fn(m, n, |i, j| if h_t[(i, j)] > 0.0 { w_o[j] } else { 0.0 });
        let deltas = backward_deltas(params, &trace, &direct);
        for s in 1..=steps {
            for s2 in s..=steps {
                gemm(&deltas[s], false, &deltas[s2], true, 1.0, 0.0, &mut dd);
                let g = &feature_gram[s][s2];
                for i in 0..m {
                    for j in 0..m {
                        let v = dd[(i, j)] * g[(i, j)];
                        k[(i, j)] += v;
                        if s2 != s {
                            k[(j, i)] += v;
                        }
                    }
                }
            }
        }
    }
    KernelMatrix::new(k)
}

/// `Tr(K₁K₂) / (‖K₁‖_F ‖K₂‖_F)`.
pub fn alignment(k1: &KernelMatrix, k2: &KernelMatrix) -> Result<f64> {
    let n1 = k1.k.frobenius_norm();
    let n2 = k2.k.frobenius_norm();
    if n1 == 0.0 || n2 == 0.0 {
        return Err(LabError::Degenerate("alignment with an all-zero kernel".into()));
    }
    Ok(k1.k.frobenius_dot(&k2.k)? / (n1 * n2))
}

/// `yᵀKy / (‖y‖² Tr K)`.
pub fn task_kernel_alignment(k: &KernelMatrix, y: &[f64]) -> Result<f64> {
    let tr = k.trace();
    let yy: f64 = y.iter().map(|v| v * v).sum();
    if !(tr > 0.0) || yy == 0.0 {
        return Err(LabError::Degenerate("task alignment needs Tr K > 0 and y ≠ 0".into()));
    }
    let ky = k.k.matvec(y)?;
    Ok(y.iter().zip(&ky).map(|(a, b)| a * b).sum::<f64>() / (yy * tr))
}

fn center(a: &DenseMatrix) -> DenseMatrix {
    let m = a.rows();
    let row_means: Vec<f64> = (0..m).map(|i| a.row(i).iter().sum::<f64>() / m as f64).collect();
    let col_means: Vec<f64> = (0..m).map(|j| (0..m).map(|i| a[(i, j)]).sum::<f64>() / m as f64).collect();
    let grand = row_means.iter().sum::<f64>() / m as f64;
    DenseMatrix::from_fn(m, m, |i, j| a[(i, j)] - row_means[i] - col_means[j] + grand)
}

/// Alignment of the centered kernel with the centered one-hot label kernel.
pub fn centered_kernel_alignment(k: &KernelMatrix, labels: &[usize]) -> Result<f64> {
    let m = k.size();
    if labels.len() != m {
        return Err(LabError::Dimension {
            op: "centered_kernel_alignment",
            lhs: (labels.len(), 1),
            rhs: (m, 1),
        });
    }
    if m < 2 {
        return Err(LabError::Degenerate("CKA needs at least two samples".into()));
    }
    if labels.iter().all(|&l| l == labels[0]) {
        return Err(LabError::Degenerate("CKA of a single-class batch".into()));
    }
    let yy = DenseMatrix::from_fn(m, m, |i, j| f64::from(u8::from(labels[i] == labels[j])));
    let kc = KernelMatrix { k: center(&k.k) };
    let yc = KernelMatrix { k: center(&yy) };
    alignment(&kc, &yc)
}

/// Leading eigenvalue of a symmetric PSD matrix by power iteration from the
/// normalized all-ones vector. If the result falls below the largest diagonal
/// entry (a start orthogonal to the top eigenvector), the iteration restarts
/// from the corresponding basis vector.
pub fn power_iteration(k: &DenseMatrix) -> Result<f64> {
    let m = k.rows();
    let start_ones = vec![1.0 / (m as f64).sqrt(); m];
    let lambda = power_from(k, start_ones)?;
    let (imax, dmax) = (0..m).map(|i| (i, k[(i, i)])).fold((0, f64::NEG_INFINITY), |b, c| if c.1 > b.1 { c } else { b });
    if lambda < dmax * (1.0 - 1e-8) {
        let mut e = vec![0.0; m];
        e[imax] = 1.0;
        return power_from(k, e);
    }
    Ok(lambda)
}

fn power_from(k: &DenseMatrix, mut v: Vec<f64>) -> Result<f64> {
    let mut lambda = 0.0;
    for _ in 0..POWER_MAX_ITERS {
        let w = k.matvec(&v)?;
        let rayleigh: f64 = v.iter().zip(&w).map(|(a, b)| a * b).sum();
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Ok(0.0);
        }
        v = w.into_iter().map(|x| x / norm).collect();
        if (rayleigh - lambda).abs() <= POWER_TOL * rayleigh.abs() {
            return Ok(rayleigh);
        }
        lambda = rayleigh;
    }
    Err(LabError::NoConvergence {
        what: "power iteration",
        iterations: POWER_MAX_ITERS,
    })
}

/// `Tr K / λ_max`.
pub fn kernel_effective_rank(k: &KernelMatrix) -> Result<f64> {
    let lambda = power_iteration(&k.k)?;
    if !(lambda > 0.0) {
        return Err(LabError::Degenerate("effective rank of a zero kernel".into()));
    }
    Ok(k.trace() / lambda)
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunMetadata {
    pub seed: u64,
    pub task: String,
    pub init_kind: String,
    pub rank_param: Option<f64>,
    pub g: f64,
    pub norm_control: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LazinessReport {
    pub meta: RunMetadata,
    pub delta_w_norm: f64,
    pub ra: f64,
    pub ka: f64,
    pub final_loss: f64,
    pub final_accuracy: Option<f64>,
    pub eff_rank_sv_init: f64,
    pub eff_rank_eig_init: f64,
    /// Set when the run failed; numeric fields are then meaningless.
    pub error: Option<String>,
}

impl LazinessReport {
    pub fn failed(meta: RunMetadata, error: impl Into<String>) -> Self {
        LazinessReport {
            meta,
            delta_w_norm: f64::NAN,
            ra: f64::NAN,
            ka: f64::NAN,
            final_loss: f64::NAN,
            final_accuracy: None,
            eff_rank_sv_init: f64::NAN,
            eff_rank_eig_init: f64::NAN,
            error: Some(error.into()),
        }
    }
}

/// All laziness measures between `w0` and `wf` on one probe batch; final
/// loss and accuracy are evaluated on the probe as well.
pub fn measure_run(w0: &RnnParams, wf: &RnnParams, probe: &TaskBatch) -> Result<LazinessReport> {
    let ra = alignment(&rsm(wf, probe)?, &rsm(w0, probe)?)?;
    let ka = alignment(&ntk(wf, probe)?, &ntk(w0, probe)?)?;
    let eval = evaluate(wf, probe)?;
    Ok(LazinessReport {
        meta: RunMetadata::default(),
        delta_w_norm: weight_change_norm(w0, wf)?,
        ra,
        ka,
        final_loss: eval.loss,
        final_accuracy: eval.accuracy,
        eff_rank_sv_init: effective_rank_sv(&w0.w_h)?,
        eff_rank_eig_init: effective_rank_eig(&w0.w_h)?,
        error: None,
    })
}

/// Training hook recording kernel alignment with the initial tangent kernel
/// and the class-label CKA at every logged iteration.
pub struct KernelTracker {
    probe: TaskBatch,
    initial: Option<KernelMatrix>,
    /// `(iteration, KA to initial kernel, CKA)`.
    pub records: Vec<(usize, f64, Option<f64>)>,
}

impl KernelTracker {
    pub fn new(probe: TaskBatch) -> Self {
        KernelTracker {
            probe,
            initial: None,
            records: Vec::new(),
        }
    }
}

impl TrainHooks for KernelTracker {
    fn on_log(&mut self, entry: &LogEntry, params: &RnnParams) {
        let Ok(k) = ntk(params, &self.probe) else { return };
        let k0 = self.initial.get_or_insert_with(|| k.clone());
        let ka = alignment(&k, k0).unwrap_or(f64::NAN);
        let cka = self
            .probe
            .decision_labels()
            .and_then(|labels| centered_kernel_alignment(&k, &labels).ok());
        self.records.push((entry.iteration, ka, cka));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rnn::{loss_and_grads, random_instance};
    use crate::task::{gen_2af, LossKind, Targets};
    use crate::tensor::{gaussian_matrix, Rng};

    fn net(rng: &mut Rng, n: usize, n_in: usize, n_out: usize) -> RnnParams {
        RnnParams::new(
            gaussian_matrix(rng, n, n, 1.5 / (n as f64).sqrt()),
            gaussian_matrix(rng, n, n_in, 1.0),
            gaussian_matrix(rng, n_out, n, 1.0 / (n as f64).sqrt()),
            0.4,
        )
        .unwrap()
    }

    /// Per-sample gradient of `ŷ_o` at the final step, obtained from the
    /// public loss gradient: with a single MSE target `ŷ − (N_out/2)e_o` at
    /// the last step, `∂L/∂ŷ = e_o`.
    fn per_sample_gradient(params: &RnnParams, probe: &TaskBatch, i: usize, o: usize) -> Vec<f64> {
        let single = probe.select(&[i]);
        let trace = forward(params, &single.inputs).unwrap();
        let steps = single.steps();
        let n_out = params.n_out();
        let mut targets = trace.readouts.clone();
        targets[steps - 1][(0, o)] -= n_out as f64 / 2.0;
        let mut mask = vec![vec![false]; steps];
        mask[steps - 1][0] = true;
        let b = TaskBatch {
            targets: Targets::Values(targets),
            loss_mask: mask.clone(),
            decision_mask: mask,
            loss_kind: LossKind::Mse,
            ..single
        };
        let g = loss_and_grads(params, &b).unwrap();
        g.blocks().iter().flat_map(|m| m.as_slice().to_vec()).collect()
    }

    fn naive_ntk(params: &RnnParams, probe: &TaskBatch) -> DenseMatrix {
        let m = probe.batch_size();
        let mut k = DenseMatrix::zeros(m, m);
        for o in 0..params.n_out() {
            let grads: Vec<Vec<f64>> = (0..m).map(|i| per_sample_gradient(params, probe, i, o)).collect();
            for i in 0..m {
                for j in 0..m {
                    k[(i, j)] += grads[i].iter().zip(&grads[j]).map(|(a, b)| a * b).sum::<f64>();
                }
            }
        }
        k
    }

    #[test]
    fn weight_change_examples() {
        let mut rng = Rng::new(1);
        let w0 = net(&mut rng, 5, 3, 3);
        assert_eq!(weight_change_norm(&w0, &w0).unwrap(), 0.0);
        let mut wf = w0.clone();
        wf.w_out[(0, 0)] += 3.0;
        assert!((weight_change_norm(&w0, &wf).unwrap() - 3.0).abs() < 1e-12);
        let mut wr = w0.clone();
        let mut parts = 0.0;
        for b in wr.blocks_mut() {
            let e = gaussian_matrix(&mut rng, b.rows(), b.cols(), 0.1);
            parts += e.frobenius_norm().powi(2);
            b.axpy(1.0, &e).unwrap();
        }
        assert!((weight_change_norm(&w0, &wr).unwrap() - parts.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn rsm_examples() {
        let mut rng = Rng::new(2);
        let mut p = net(&mut rng, 6, 3, 3);
        let b = gen_2af(&mut rng, 4);
        let h = forward(&p, &b.inputs).unwrap().final_activation().clone();
        let r = rsm(&p, &b).unwrap();
        let n0: f64 = h.row(0).iter().map(|v| v * v).sum();
        assert!((r.matrix()[(0, 0)] - n0).abs() < 1e-12);
        let dup = b.select(&[1, 1, 2]);
        let rd = rsm(&p, &dup).unwrap();
        assert_eq!(rd.matrix().row(0), rd.matrix().row(1));
        p.w_x = DenseMatrix::zeros(6, 3);
        assert_eq!(rsm(&p, &b).unwrap().matrix().max_abs(), 0.0);
    }

    #[test]
    fn ntk_matches_naive_per_sample_gradients() {
        for seed in 0..6 {
            let kind = if seed % 2 == 0 { LossKind::CrossEntropy } else { LossKind::Mse };
            let (p, b) = random_instance(&mut Rng::new(100 + seed), kind);
            assert!(p.param_count() <= 500);
            let fast = ntk(&p, &b).unwrap();
            let slow = naive_ntk(&p, &b);
            let scale = slow.max_abs().max(1.0);
            let diff = fast.matrix().sub(&slow).unwrap().max_abs();
            assert!(diff <= 1e-10 * scale, "seed {seed}: {diff:e}");
        }
    }

    #[test]
    fn ntk_one_step_closed_form() {
        // ρ = 0, T = 1: h₁ = W_x x, ŷ = w f(h₁). Only W_x and w carry gradient.
        let mut rng = Rng::new(3);
        let mut p = net(&mut rng, 7, 4, 1);
        p.rho = 0.0;
        let probe = TaskBatch {
            inputs: vec![gaussian_matrix(&mut rng, 5, 4, 1.0)],
            targets: Targets::Values(vec![DenseMatrix::zeros(5, 1)]),
            loss_mask: vec![vec![true; 5]],
            decision_mask: vec![vec![true; 5]],
            loss_kind: LossKind::Mse,
            n_in: 4,
            n_out: 1,
        };
        let x = &probe.inputs[0];
        let h = x.matmul_t(&p.w_x).unwrap();
        let phi = h.map(|v| v.max(0.0));
        let w = p.w_out.row(0);
        let expect = DenseMatrix::from_fn(5, 5, |i, j| {
            let feat: f64 = (0..7).map(|n| phi[(i, n)] * phi[(j, n)]).sum();
            let gate: f64 = (0..7)
                .filter(|&n| h[(i, n)] > 0.0 && h[(j, n)] > 0.0)
                .map(|n| w[n] * w[n])
                .sum();
            let xx: f64 = (0..4).map(|c| x[(i, c)] * x[(j, c)]).sum();
            feat + gate * xx
        });
        let k = ntk(&p, &probe).unwrap();
        assert!(k.matrix().sub(&expect).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn ntk_is_symmetric_psd() {
        let mut rng = Rng::new(4);
        let p = net(&mut rng, 12, 3, 3);
        let k = ntk(&p, &gen_2af(&mut rng, 10)).unwrap();
        let m = k.matrix();
        assert_eq!(m, &m.transpose());
        let eig = crate::tensor::eigenvalues(m).unwrap();
        let floor = -1e-8 * m.frobenius_norm();
        assert!(eig.values.iter().all(|l| l.re >= floor && l.im.abs() < 1e-8));
    }

    #[test]
    fn alignment_examples() {
        let mut rng = Rng::new(5);
        let a = gaussian_matrix(&mut rng, 4, 6, 1.0);
        let k = KernelMatrix::new(a.matmul_t(&a).unwrap()).unwrap();
        assert!((alignment(&k, &k).unwrap() - 1.0).abs() < 1e-14);
        assert!((alignment(&k, &k.scale(3.7)).unwrap() - 1.0).abs() < 1e-14);
        let i2 = KernelMatrix::new(DenseMatrix::identity(2)).unwrap();
        let ones = KernelMatrix::new(DenseMatrix::filled(2, 2, 1.0)).unwrap();
        assert!((alignment(&i2, &ones).unwrap() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert_eq!(alignment(&i2, &ones).unwrap(), alignment(&ones, &i2).unwrap());
        let z = KernelMatrix::new(DenseMatrix::zeros(2, 2)).unwrap();
        assert!(matches!(alignment(&z, &i2), Err(LabError::Degenerate(_))));
    }

    #[test]
    fn task_alignment_examples() {
        let y = [1.0, -2.0, 0.5];
        let ny: f64 = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        let yh: Vec<f64> = y.iter().map(|v| v / ny).collect();
        let k = KernelMatrix::new(DenseMatrix::from_fn(3, 3, |i, j| yh[i] * yh[j])).unwrap();
        assert!((task_kernel_alignment(&k, &y).unwrap() - 1.0).abs() < 1e-14);
        let id = KernelMatrix::new(DenseMatrix::identity(3)).unwrap();
        assert!((task_kernel_alignment(&id, &y).unwrap() - 1.0 / 3.0).abs() < 1e-15);

        let mut rng = Rng::new(6);
        let a = gaussian_matrix(&mut rng, 5, 5, 1.0);
        let kr = KernelMatrix::new(a.matmul_t(&a).unwrap()).unwrap();
        let yv = rng.normal_vec(5, 1.0);
        let mut num = 0.0;
        for i in 0..5 {
            for j in 0..5 {
                num += yv[i] * kr.matrix()[(i, j)] * yv[j];
            }
        }
        let den = yv.iter().map(|v| v * v).sum::<f64>() * kr.trace();
        assert!((task_kernel_alignment(&kr, &yv).unwrap() - num / den).abs() < 1e-12);
    }

    #[test]
    fn cka_examples() {
        let labels = [0, 0, 1, 1];
        let yy = DenseMatrix::from_fn(4, 4, |i, j| f64::from(u8::from(labels[i] == labels[j])));
        let k = KernelMatrix::new(yy).unwrap();
        assert!((centered_kernel_alignment(&k, &labels).unwrap() - 1.0).abs() < 1e-14);
        let id = KernelMatrix::new(DenseMatrix::identity(4)).unwrap();
        let v = centered_kernel_alignment(&id, &labels).unwrap();
        assert!((v - 1.0 / 3f64.sqrt()).abs() < 1e-12);
        let shifted = KernelMatrix::new(DenseMatrix::identity(4).add(&DenseMatrix::filled(4, 4, 2.5)).unwrap()).unwrap();
        assert!((centered_kernel_alignment(&shifted, &labels).unwrap() - v).abs() < 1e-12);
        assert!(centered_kernel_alignment(&id, &[1, 1, 1, 1]).is_err());
    }

    #[test]
    fn kernel_effective_rank_examples() {
        let id = KernelMatrix::new(DenseMatrix::identity(6)).unwrap();
        assert!((kernel_effective_rank(&id).unwrap() - 6.0).abs() < 1e-12);
        let v = [1.0, -1.0, 2.0, -2.0];
        let r1 = KernelMatrix::new(DenseMatrix::from_fn(4, 4, |i, j| v[i] * v[j])).unwrap();
        assert!((kernel_effective_rank(&r1).unwrap() - 1.0).abs() < 1e-10);
        let d = KernelMatrix::new(DenseMatrix::diag(&[4.0, 2.0, 2.0])).unwrap();
        assert!((kernel_effective_rank(&d).unwrap() - 2.0).abs() < 1e-9);
        let z = KernelMatrix::new(DenseMatrix::zeros(3, 3)).unwrap();
        assert!(kernel_effective_rank(&z).is_err());
    }

    #[test]
    fn power_iteration_recovers_orthogonal_start() {
        // Top eigenvector (1, −1)/√2 is orthogonal to the all-ones start.
        let k = DenseMatrix::from_rows(&[[2.0, -1.5], [-1.5, 2.0]]);
        assert!((power_iteration(&k).unwrap() - 3.5).abs() < 1e-9);
    }

    #[test]
    fn measure_run_fixed_point_and_determinism() {
        let mut rng = Rng::new(7);
        let p = net(&mut rng, 10, 3, 3);
        let probe = gen_2af(&mut rng, 12);
        let r = measure_run(&p, &p, &probe).unwrap();
        assert_eq!(r.delta_w_norm, 0.0);
        assert!((r.ra - 1.0).abs() < 1e-14 && (r.ka - 1.0).abs() < 1e-14);
        let mut q = p.clone();
        q.w_h[(0, 1)] += 0.3;
        q.w_out[(2, 2)] -= 0.2;
        let a = measure_run(&p, &q, &probe).unwrap();
        assert_eq!(a, measure_run(&p, &q, &probe).unwrap());
        assert!((0.0..=1.0 + 1e-12).contains(&a.ka) && (0.0..=1.0 + 1e-12).contains(&a.ra));
        let k0 = ntk(&p, &probe).unwrap();
        let kf = ntk(&q, &probe).unwrap();
        let scaled = alignment(&kf.scale(5.0), &k0.scale(0.1)).unwrap();
        assert!((scaled - a.ka).abs() < 1e-14);
    }

    #[test]
    fn asymmetric_kernel_is_rejected() {
        let k = DenseMatrix::from_rows(&[[1.0, 0.5], [0.0, 1.0]]);
        assert!(KernelMatrix::new(k).is_err());
    }
}
