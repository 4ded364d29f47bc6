//! Training and probe batches for the cognitive tasks, sequential MNIST and
//! the linear student–teacher setting.
//!
//! Recurrent batches are stored time-major with batch-major rows: step `t`
//! is an `m × N_in` matrix whose row `i` is the input of trial `i`.

mod cognitive;
mod linear;
mod mnist;

pub use cognitive::{
    cxt_from_trials, gen_2af, gen_2af_with, gen_cxt, gen_dms, gen_dms_with, gen_pattern,
    gen_pattern_with, CxtTrial, DmsParams, PatternSpec, TwoAfParams, COGNITIVE_STEPS, EVIDENCE_GAP,
    EVIDENCE_NOISE, FIXATION_CLASS,
};
pub use linear::{gen_feature_modulated_task, gen_linear_task, random_orthogonal, whiten, LinearTask};
pub use mnist::{load_smnist, parse_idx_images, parse_idx_labels, IdxImages, MnistDataset};

use crate::error::{LabError, Result};
use crate::tensor::DenseMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LossKind {
    CrossEntropy,
    Mse,
}

impl LossKind {
    pub fn name(self) -> &'static str {
        match self {
            LossKind::CrossEntropy => "cross_entropy",
            LossKind::Mse => "mse",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Targets {
    /// `labels[t][i]`, meaningful where the loss mask is set.
    Labels(Vec<Vec<usize>>),
    /// One `m × N_out` matrix per step.
    Values(Vec<DenseMatrix>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct TaskBatch {
    pub inputs: Vec<DenseMatrix>,
    pub targets: Targets,
    /// `loss_mask[t][i]`: the loss includes step `t` of trial `i`.
    pub loss_mask: Vec<Vec<bool>>,
    /// Steps scored for accuracy (the response period).
    pub decision_mask: Vec<Vec<bool>>,
    pub loss_kind: LossKind,
    pub n_in: usize,
    pub n_out: usize,
}

impl TaskBatch {
    pub fn steps(&self) -> usize {
        self.inputs.len()
    }

    pub fn batch_size(&self) -> usize {
        self.inputs.first().map_or(0, DenseMatrix::rows)
    }

    pub fn labels(&self) -> Option<&[Vec<usize>]> {
        match &self.targets {
            Targets::Labels(l) => Some(l),
            Targets::Values(_) => None,
        }
    }

    /// Label at the last decision step of each trial.
    pub fn decision_labels(&self) -> Option<Vec<usize>> {
        let labels = self.labels()?;
        (0..self.batch_size())
            .map(|i| {
                (0..self.steps())
                    .rev()
                    .find(|&t| self.decision_mask[t][i])
                    .map(|t| labels[t][i])
            })
            .collect()
    }

    /// Number of masked (step, trial) pairs.
    pub fn mask_count(&self) -> usize {
        self.loss_mask.iter().flatten().filter(|b| **b).count()
    }

    /// Checks shapes, label ranges and that every trial has a loss step.
    pub fn validate(&self) -> Result<()> {
        let t = self.steps();
        let m = self.batch_size();
        if t == 0 || m == 0 || self.n_in == 0 || self.n_out == 0 {
            return Err(LabError::Consistency("empty task batch".into()));
        }
        for x in &self.inputs {
            if x.shape() != (m, self.n_in) {
                return Err(LabError::Dimension {
                    op: "task_batch.inputs",
                    lhs: x.shape(),
                    rhs: (m, self.n_in),
                });
            }
        }
        for mask in [&self.loss_mask, &self.decision_mask] {
            if mask.len() != t || mask.iter().any(|row| row.len() != m) {
                return Err(LabError::Consistency("mask shape differs from inputs".into()));
            }
        }
        for i in 0..m {
            if !(0..t).any(|s| self.loss_mask[s][i]) {
                return Err(LabError::Consistency(format!("trial {i} has no loss step")));
            }
        }
        match &self.targets {
            Targets::Labels(l) => {
                if self.loss_kind != LossKind::CrossEntropy {
                    return Err(LabError::Consistency("labels require cross-entropy".into()));
                }
                if l.len() != t || l.iter().any(|row| row.len() != m) {
                    return Err(LabError::Consistency("label shape differs from inputs".into()));
                }
                if let Some(bad) = l.iter().flatten().find(|&&c| c >= self.n_out) {
                    return Err(LabError::Consistency(format!(
                        "label {bad} outside [0, {})",
                        self.n_out
                    )));
                }
            }
            Targets::Values(v) => {
                if self.loss_kind != LossKind::Mse {
                    return Err(LabError::Consistency("real targets require mse".into()));
                }
                if v.len() != t || v.iter().any(|y| y.shape() != (m, self.n_out)) {
                    return Err(LabError::Consistency("target shape differs from inputs".into()));
                }
            }
        }
        Ok(())
    }

    /// Sub-batch with the given trial indices, in order.
    pub fn select(&self, idx: &[usize]) -> TaskBatch {
        let pick_rows = |x: &DenseMatrix| {
            let mut out = DenseMatrix::zeros(idx.len(), x.cols());
            for (r, &i) in idx.iter().enumerate() {
                out.row_mut(r).copy_from_slice(x.row(i));
            }
            out
        };
        let pick = |mask: &Vec<Vec<bool>>| -> Vec<Vec<bool>> {
            mask.iter().map(|row| idx.iter().map(|&i| row[i]).collect()).collect()
        };
        TaskBatch {
            inputs: self.inputs.iter().map(pick_rows).collect(),
            targets: match &self.targets {
                Targets::Labels(l) => {
                    Targets::Labels(l.iter().map(|row| idx.iter().map(|&i| row[i]).collect()).collect())
                }
                Targets::Values(v) => Targets::Values(v.iter().map(pick_rows).collect()),
            },
            loss_mask: pick(&self.loss_mask),
            decision_mask: pick(&self.decision_mask),
            loss_kind: self.loss_kind,
            n_in: self.n_in,
            n_out: self.n_out,
        }
    }
}
