use super::{accuracy_from_trace, forward, grads_from_trace, sgd_step, RnnParams};
use crate::error::{LabError, Result};
use crate::task::TaskBatch;
use crate::tensor::DenseMatrix;

const DIVERGENCE_LOSS: f64 = 1e6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StopRule {
    FixedIters,
    /// Stop at the first logged evaluation whose accuracy reaches the value.
    AccuracyThreshold(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub lr: f64,
    pub iters: usize,
    pub batch_size: usize,
    pub stop: StopRule,
    pub dale_constrained: bool,
    pub log_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 3e-3,
            iters: 10_000,
            batch_size: 32,
            stop: StopRule::FixedIters,
            dale_constrained: false,
            log_every: 100,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0) || !self.lr.is_finite() {
            return Err(LabError::param("lr", format!("must be positive, got {}", self.lr)));
        }
        if self.batch_size == 0 {
            return Err(LabError::param("batch_size", "must be positive"));
        }
        if self.log_every == 0 {
            return Err(LabError::param("log_every", "must be positive"));
        }
        if let StopRule::AccuracyThreshold(a) = self.stop {
            if !(a > 0.0 && a <= 1.0) {
                return Err(LabError::param("accuracy_threshold", format!("must lie in (0, 1], got {a}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogEntry {
    pub iteration: usize,
    pub loss: f64,
    pub accuracy: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainingLog {
    pub entries: Vec<LogEntry>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainOutcome {
    pub params: RnnParams,
    pub log: TrainingLog,
    /// SGD steps actually applied.
    pub steps: usize,
    pub stopped_early: bool,
}

/// Observer called at every logged iteration with the parameters the entry
/// was measured on.
pub trait TrainHooks {
    fn on_log(&mut self, _entry: &LogEntry, _params: &RnnParams) {}
}

pub struct NoHooks;

impl TrainHooks for NoHooks {}

/// Column types for the Dale projection: a column is excitatory when its sum
/// is nonnegative.
pub fn column_types(w_h: &DenseMatrix) -> Vec<bool> {
    (0..w_h.cols()).map(|j| w_h.col_to_vec(j).iter().sum::<f64>() >= 0.0).collect()
}

/// Plain SGD. `next_batch(i)` supplies the batch for iteration `i`.
pub fn train(
    params: RnnParams,
    mut next_batch: impl FnMut(usize) -> Result<TaskBatch>,
    config: &TrainConfig,
    hooks: &mut dyn TrainHooks,
) -> Result<TrainOutcome> {
    config.validate()?;
    params.validate()?;
    let dale = config.dale_constrained.then(|| column_types(&params.w_h));
    let mut params = params;
    let mut log = TrainingLog::default();
    let mut last_good = None;
    for it in 0..config.iters {
        let batch = next_batch(it)?;
        let trace = forward(&params, &batch.inputs)?;
        let grads = grads_from_trace(&params, &batch, &trace, it)?;
        if !grads.loss.is_finite() || grads.loss > DIVERGENCE_LOSS || !grads.is_finite() {
            return Err(LabError::Diverged {
                iteration: it,
                loss: grads.loss,
                last_good,
            });
        }
        if it % config.log_every == 0 || it + 1 == config.iters {
            let entry = LogEntry {
                iteration: it,
                loss: grads.loss,
                accuracy: accuracy_from_trace(&trace, &batch),
            };
            log::debug!("iter {it}: loss {:.6} acc {:?}", entry.loss, entry.accuracy);
            hooks.on_log(&entry, &params);
            log.entries.push(entry);
            if let (StopRule::AccuracyThreshold(a), Some(acc)) = (config.stop, entry.accuracy) {
                if acc >= a {
                    return Ok(TrainOutcome {
                        params,
                        log,
                        steps: it,
                        stopped_early: true,
                    });
                }
            }
        }
        params = sgd_step(&params, &grads, config.lr, dale.as_deref());
        last_good = Some(it);
    }
    Ok(TrainOutcome {
        params,
        log,
        steps: config.iters,
        stopped_early: false,
    })
}
