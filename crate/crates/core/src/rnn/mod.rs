//! Leaky ReLU recurrent network: forward simulation, backpropagation through
//! time, plain SGD and the training loop.
//!
//! ```text
//! h_{t+1} = ρ h_t + (1 − ρ)(W_h f(h_t) + W_x x_t),   ŷ_t = w f(h_{t+1}),   h_0 = 0
//! ```
//!
//! States are stored batch-major (`m × N` per step). The readout produced
//! after consuming input step `t` is compared with the target of step `t`.

mod gradcheck;
mod train;

pub use gradcheck::{gradcheck, gradcheck_suite, random_instance, GradcheckReport};
pub use train::{
    column_types, train, LogEntry, NoHooks, StopRule, TrainConfig, TrainHooks, TrainingLog,
    TrainOutcome,
};

use crate::error::{LabError, Result};
use crate::task::{TaskBatch, Targets};
use crate::tensor::{gemm, uniform_matrix, DenseMatrix, Rng};

/// `e^(−dt/τ)`.
pub fn leak_factor(dt: f64, tau: f64) -> f64 {
    (-dt / tau).exp()
}

#[inline]
fn relu(v: f64) -> f64 {
    if v > 0.0 {
        v
    } else {
        0.0
    }
}

#[inline]
fn relu_grad(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else {
        0.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RnnParams {
    /// `N × N`.
    pub w_h: DenseMatrix,
    /// `N × N_in`.
    pub w_x: DenseMatrix,
    /// `N_out × N`.
    pub w_out: DenseMatrix,
    pub rho: f64,
}

impl RnnParams {
    pub fn new(w_h: DenseMatrix, w_x: DenseMatrix, w_out: DenseMatrix, rho: f64) -> Result<Self> {
        let p = RnnParams { w_h, w_x, w_out, rho };
        p.validate()?;
        Ok(p)
    }

    /// Wraps a recurrent matrix with input and readout weights drawn from
    /// `U(±1/√fan_in)`, the usual dense-layer default.
    pub fn with_default_io(w_h: DenseMatrix, n_in: usize, n_out: usize, rho: f64, rng: &mut Rng) -> Result<Self> {
        let n = w_h.rows();
        let bx = 1.0 / (n_in as f64).sqrt();
        let bo = 1.0 / (n as f64).sqrt();
        let w_x = uniform_matrix(rng, n, n_in, -bx, bx);
        let w_out = uniform_matrix(rng, n_out, n, -bo, bo);
        RnnParams::new(w_h, w_x, w_out, rho)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.w_h.rows();
        if n == 0 || !self.w_h.is_square() {
            return Err(LabError::Dimension {
                op: "rnn_params.w_h",
                lhs: self.w_h.shape(),
                rhs: (n, n),
            });
        }
        if self.w_x.rows() != n || self.w_x.cols() == 0 {
            return Err(LabError::Dimension {
                op: "rnn_params.w_x",
                lhs: self.w_x.shape(),
                rhs: (n, self.w_x.cols()),
            });
        }
        if self.w_out.cols() != n || self.w_out.rows() == 0 {
            return Err(LabError::Dimension {
                op: "rnn_params.w_out",
                lhs: self.w_out.shape(),
                rhs: (self.w_out.rows(), n),
            });
        }
        if !(0.0..1.0).contains(&self.rho) {
            return Err(LabError::param("rho", format!("must lie in [0, 1), got {}", self.rho)));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.w_h.rows()
    }

    pub fn n_in(&self) -> usize {
        self.w_x.cols()
    }

    pub fn n_out(&self) -> usize {
        self.w_out.rows()
    }

    pub fn param_count(&self) -> usize {
        let n = self.n();
        n * (n + self.n_in() + self.n_out())
    }

    /// `[W_h, W_x, w]`, the trainable blocks in a fixed order.
    pub fn blocks(&self) -> [&DenseMatrix; 3] {
        [&self.w_h, &self.w_x, &self.w_out]
    }

    pub fn blocks_mut(&mut self) -> [&mut DenseMatrix; 3] {
        [&mut self.w_h, &mut self.w_x, &mut self.w_out]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ForwardTrace {
    /// `h_0 … h_T`.
    pub hidden: Vec<DenseMatrix>,
    /// `f(h_0) … f(h_T)`.
    pub activations: Vec<DenseMatrix>,
    /// `ŷ_0 … ŷ_{T−1}`, `ŷ_t = f(h_{t+1}) wᵀ`.
    pub readouts: Vec<DenseMatrix>,
}

impl ForwardTrace {
    pub fn final_activation(&self) -> &DenseMatrix {
        self.activations.last().expect("trace holds h_0")
    }
}

pub fn forward(params: &RnnParams, inputs: &[DenseMatrix]) -> Result<ForwardTrace> {
    let n = params.n();
    let m = inputs.first().map_or(0, DenseMatrix::rows);
    if inputs.is_empty() || m == 0 {
        return Err(LabError::Consistency("forward needs at least one step and one trial".into()));
    }
    for x in inputs {
        if x.shape() != (m, params.n_in()) {
            return Err(LabError::Dimension {
                op: "forward",
                lhs: x.shape(),
                rhs: (m, params.n_in()),
            });
        }
    }
    let rho = params.rho;
    let mut hidden = Vec::with_capacity(inputs.len() + 1);
    let mut activations = Vec::with_capacity(inputs.len() + 1);
    let mut readouts = Vec::with_capacity(inputs.len());
    hidden.push(DenseMatrix::zeros(m, n));
    activations.push(DenseMatrix::zeros(m, n));
    for x in inputs {
        let h = hidden.last().unwrap();
        let a = activations.last().unwrap();
        let mut drive = DenseMatrix::zeros(m, n);
        gemm(a, false, &params.w_h, true, 1.0, 0.0, &mut drive);
        gemm(x, false, &params.w_x, true, 1.0, 1.0, &mut drive);
        let mut next = h.scale(rho);
        next.axpy(1.0 - rho, &drive)?;
        let act = next.map(relu);
        let mut y = DenseMatrix::zeros(m, params.n_out());
        gemm(&act, false, &params.w_out, true, 1.0, 0.0, &mut y);
        hidden.push(next);
        activations.push(act);
        readouts.push(y);
    }
    Ok(ForwardTrace {
        hidden,
        activations,
        readouts,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub d_w_h: DenseMatrix,
    pub d_w_x: DenseMatrix,
    pub d_w_out: DenseMatrix,
    pub loss: f64,
}

impl Gradients {
    pub fn blocks(&self) -> [&DenseMatrix; 3] {
        [&self.d_w_h, &self.d_w_x, &self.d_w_out]
    }

    pub fn is_finite(&self) -> bool {
        self.loss.is_finite() && self.blocks().iter().all(|g| g.is_finite())
    }
}

fn check_batch(params: &RnnParams, batch: &TaskBatch) -> Result<()> {
    if batch.n_in != params.n_in() || batch.n_out != params.n_out() {
        return Err(LabError::Dimension {
            op: "batch vs params",
            lhs: (batch.n_in, batch.n_out),
            rhs: (params.n_in(), params.n_out()),
        });
    }
    if batch.mask_count() == 0 {
        return Err(LabError::Consistency("batch has no loss steps".into()));
    }
    Ok(())
}

fn log_sum_exp(z: &[f64]) -> f64 {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Mean masked loss and its gradient with respect to every readout.
fn loss_and_output_grads(trace: &ForwardTrace, batch: &TaskBatch) -> (f64, Vec<DenseMatrix>) {
    let count = batch.mask_count() as f64;
    let n_out = batch.n_out;
    let mut loss = 0.0;
    let mut grads: Vec<DenseMatrix> = trace.readouts.iter().map(|y| DenseMatrix::zeros(y.rows(), y.cols())).collect();
    for (t, y) in trace.readouts.iter().enumerate() {
        for i in 0..y.rows() {
            if !batch.loss_mask[t][i] {
                continue;
            }
            let z = y.row(i);
            let g = grads[t].row_mut(i);
            match &batch.targets {
                Targets::Labels(labels) => {
                    let c = labels[t][i];
                    let lse = log_sum_exp(z);
                    loss += lse - z[c];
                    for (k, gk) in g.iter_mut().enumerate() {
                        *gk = (z[k] - lse).exp() / count;
                    }
                    g[c] -= 1.0 / count;
                }
                Targets::Values(values) => {
                    let target = values[t].row(i);
                    for k in 0..n_out {
                        let r = z[k] - target[k];
                        loss += r * r / n_out as f64;
                        g[k] = 2.0 * r / (n_out as f64 * count);
                    }
                }
            }
        }
    }
    (loss / count, grads)
}

/// Backpropagates per-step gradients `direct[s] = ∂L/∂h_s` (explicit terms
/// only, `s = 1..=T`, index 0 unused) and returns `δ_s = (1 − ρ) ∂L/∂h_s`
/// for `s = 1..=T` (index 0 is zero).
pub(crate) fn backward_deltas(params: &RnnParams, trace: &ForwardTrace, direct: &[DenseMatrix]) -> Vec<DenseMatrix> {
    let steps = trace.readouts.len();
    let (m, n) = trace.hidden[0].shape();
    let rho = params.rho;
    let mut deltas = vec![DenseMatrix::zeros(m, n); steps + 1];
    let mut g = direct[steps].clone();
    for s in (1..=steps).rev() {
        let delta = g.scale(1.0 - rho);
        if s > 1 {
            let mut back = DenseMatrix::zeros(m, n);
            gemm(&delta, false, &params.w_h, false, 1.0, 0.0, &mut back);
            let h = &trace.hidden[s - 1];
            let mut prev = direct[s - 1].clone();
            let (pv, bv, hv, gv) = (prev.as_mut_slice(), back.as_slice(), h.as_slice(), g.as_slice());
            for k in 0..pv.len() {
                pv[k] += rho * gv[k] + relu_grad(hv[k]) * bv[k];
            }
            g = prev;
        }
        deltas[s] = delta;
    }
    deltas
}

/// Exact gradients of the mean masked loss.
pub fn loss_and_grads(params: &RnnParams, batch: &TaskBatch) -> Result<Gradients> {
    let trace = forward(params, &batch.inputs)?;
    grads_from_trace(params, batch, &trace, 0)
}

pub(crate) fn grads_from_trace(
    params: &RnnParams,
    batch: &TaskBatch,
    trace: &ForwardTrace,
    iteration: usize,
) -> Result<Gradients> {
    check_batch(params, batch)?;
    let (loss, out_grads) = loss_and_output_grads(trace, batch);
    if loss.is_nan() {
        return Err(LabError::Numerical {
            iteration,
            msg: "loss is NaN".into(),
        });
    }
    let steps = batch.steps();
    let (m, n) = (batch.batch_size(), params.n());
    let mut d_w_out = DenseMatrix::zeros(params.n_out(), n);
    let mut direct = vec![DenseMatrix::zeros(m, n); steps + 1];
    for t in 0..steps {
        gemm(&out_grads[t], true, &trace.activations[t + 1], false, 1.0, 1.0, &mut d_w_out);
        let d = &mut direct[t + 1];
        gemm(&out_grads[t], false, &params.w_out, false, 1.0, 0.0, d);
        for (dv, hv) in d.as_mut_slice().iter_mut().zip(trace.hidden[t + 1].as_slice()) {
            *dv *= relu_grad(*hv);
        }
    }
    let deltas = backward_deltas(params, trace, &direct);
    let mut d_w_h = DenseMatrix::zeros(n, n);
    let mut d_w_x = DenseMatrix::zeros(n, params.n_in());
    for s in 1..=steps {
        gemm(&deltas[s], true, &trace.activations[s - 1], false, 1.0, 1.0, &mut d_w_h);
        gemm(&deltas[s], true, &batch.inputs[s - 1], false, 1.0, 1.0, &mut d_w_x);
    }
    Ok(Gradients {
        d_w_h,
        d_w_x,
        d_w_out,
        loss,
    })
}

/// `params − η·grads`. With `dale` column types (`true` = excitatory), any
/// recurrent weight whose sign contradicts its column's type is set to zero.
pub fn sgd_step(params: &RnnParams, grads: &Gradients, eta: f64, dale: Option<&[bool]>) -> RnnParams {
    let mut next = params.clone();
    for (p, g) in next.blocks_mut().into_iter().zip(grads.blocks()) {
        for (pv, gv) in p.as_mut_slice().iter_mut().zip(g.as_slice()) {
            *pv -= eta * gv;
        }
    }
    if let Some(types) = dale {
        project_dale(&mut next.w_h, types);
    }
    next
}

pub(crate) fn project_dale(w_h: &mut DenseMatrix, types: &[bool]) {
    let n = w_h.cols();
    for i in 0..w_h.rows() {
        let row = w_h.row_mut(i);
        for j in 0..n {
            if (types[j] && row[j] < 0.0) || (!types[j] && row[j] > 0.0) {
                row[j] = 0.0;
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Evaluation {
    pub loss: f64,
    /// Fraction of decision steps whose argmax matches the label; `None` for
    /// regression batches.
    pub accuracy: Option<f64>,
}

pub fn accuracy_from_trace(trace: &ForwardTrace, batch: &TaskBatch) -> Option<f64> {
    let labels = batch.labels()?;
    let mut hits = 0usize;
    let mut total = 0usize;
    for (t, y) in trace.readouts.iter().enumerate() {
        for i in 0..y.rows() {
            if !batch.decision_mask[t][i] {
                continue;
            }
            let row = y.row(i);
            let argmax = (0..row.len())
                .fold(0, |best, k| if row[k] > row[best] { k } else { best });
            hits += usize::from(argmax == labels[t][i]);
            total += 1;
        }
    }
    (total > 0).then(|| hits as f64 / total as f64)
}

pub fn evaluate(params: &RnnParams, batch: &TaskBatch) -> Result<Evaluation> {
    check_batch(params, batch)?;
    let trace = forward(params, &batch.inputs)?;
    let (loss, _) = loss_and_output_grads(&trace, batch);
    Ok(Evaluation {
        loss,
        accuracy: accuracy_from_trace(&trace, batch),
    })
}

#[cfg(test)]
mod tests;
