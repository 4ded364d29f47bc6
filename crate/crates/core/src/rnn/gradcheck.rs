//! Central-difference check of the analytic BPTT gradients.
//!
//! Perturbations that flip any ReLU on/off state between the `+h` and `−h`
//! evaluations straddle a kink where the loss is not differentiable; those
//! coordinates are skipped and counted rather than compared.

use super::{forward, loss_and_grads, loss_and_output_grads, RnnParams};
use crate::error::Result;
use crate::task::{LossKind, TaskBatch, Targets};
use crate::tensor::{gaussian_matrix, DenseMatrix, Rng};

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct GradcheckReport {
    pub max_rel_error: f64,
    pub checked: usize,
    pub skipped_kinks: usize,
    pub instances: usize,
}

impl GradcheckReport {
    fn merge(&mut self, other: GradcheckReport) {
        self.max_rel_error = self.max_rel_error.max(other.max_rel_error);
        self.checked += other.checked;
        self.skipped_kinks += other.skipped_kinks;
        self.instances += other.instances;
    }
}

/// Small random network and batch: `N ≤ 10`, `T ≤ 6`, `m ≤ 4`.
pub fn random_instance(rng: &mut Rng, kind: LossKind) -> (RnnParams, TaskBatch) {
    let n = 2 + rng.below(9);
    let steps = 1 + rng.below(6);
    let m = 1 + rng.below(4);
    let n_in = 1 + rng.below(4);
    let n_out = 2 + rng.below(2);
    let rho = 0.9 * rng.uniform();
    let params = RnnParams {
        w_h: gaussian_matrix(rng, n, n, 1.5 / (n as f64).sqrt()),
        w_x: gaussian_matrix(rng, n, n_in, 1.0),
        w_out: gaussian_matrix(rng, n_out, n, 1.0 / (n as f64).sqrt()),
        rho,
    };
    let inputs: Vec<DenseMatrix> = (0..steps).map(|_| gaussian_matrix(rng, m, n_in, 1.0)).collect();
    let mut loss_mask: Vec<Vec<bool>> = (0..steps).map(|_| (0..m).map(|_| rng.bernoulli(0.6)).collect()).collect();
    for i in 0..m {
        if !(0..steps).any(|t| loss_mask[t][i]) {
            loss_mask[rng.below(steps)][i] = true;
        }
    }
    let targets = match kind {
        LossKind::CrossEntropy => Targets::Labels((0..steps).map(|_| (0..m).map(|_| rng.below(n_out)).collect()).collect()),
        LossKind::Mse => Targets::Values((0..steps).map(|_| gaussian_matrix(rng, m, n_out, 1.0)).collect()),
    };
    let batch = TaskBatch {
        inputs,
        targets,
        decision_mask: loss_mask.clone(),
        loss_mask,
        loss_kind: kind,
        n_in,
        n_out,
    };
    (params, batch)
}

fn loss_and_pattern(params: &RnnParams, batch: &TaskBatch) -> Result<(f64, Vec<bool>)> {
    let trace = forward(params, &batch.inputs)?;
    let pattern = trace.hidden.iter().flat_map(|h| h.as_slice().iter().map(|&v| v > 0.0)).collect();
    Ok((loss_and_output_grads(&trace, batch).0, pattern))
}

/// Relative error `|a − n| / max(|a|, |n|, 1e−8)` maximized over all
/// coordinates that do not straddle a ReLU kink.
pub fn gradcheck(params: &RnnParams, batch: &TaskBatch, h: f64) -> Result<GradcheckReport> {
    let analytic = loss_and_grads(params, batch)?;
    let mut report = GradcheckReport {
        instances: 1,
        ..Default::default()
    };
    for (b, grad) in analytic.blocks().iter().enumerate() {
        for k in 0..grad.as_slice().len() {
            let mut plus = params.clone();
            plus.blocks_mut()[b].as_mut_slice()[k] += h;
            let mut minus = params.clone();
            minus.blocks_mut()[b].as_mut_slice()[k] -= h;
            let (lp, pp) = loss_and_pattern(&plus, batch)?;
            let (lm, pm) = loss_and_pattern(&minus, batch)?;
            if pp != pm {
                report.skipped_kinks += 1;
                continue;
            }
            let numeric = (lp - lm) / (2.0 * h);
            let a = grad.as_slice()[k];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-8);
            report.max_rel_error = report.max_rel_error.max(rel);
            report.checked += 1;
        }
    }
    Ok(report)
}

/// Runs `instances` random checks alternating cross-entropy and MSE losses.
pub fn gradcheck_suite(seed: u64, instances: usize, h: f64) -> Result<GradcheckReport> {
    let mut rng = Rng::new(seed);
    let mut total = GradcheckReport::default();
    for k in 0..instances {
        let kind = if k % 2 == 0 { LossKind::CrossEntropy } else { LossKind::Mse };
        let (params, batch) = random_instance(&mut rng, kind);
        total.merge(gradcheck(&params, &batch, h)?);
    }
    Ok(total)
}
