//! Two-alternative forced choice, delayed match-to-sample, context-dependent
//! decision making and pattern generation.
//!
//! All cognitive tasks use 100 ms steps and eight steps per trial. Class 0 is
//! the fixation class; choices occupy classes 1 and 2. The loss covers every
//! step and accuracy is scored on the final (decision) step.

use std::f64::consts::PI;

use super::{LossKind, TaskBatch, Targets};
use crate::tensor::{DenseMatrix, Rng};

pub const COGNITIVE_STEPS: usize = 8;
pub const FIXATION_CLASS: usize = 0;
pub const EVIDENCE_NOISE: f64 = 0.1;
pub const EVIDENCE_GAP: f64 = 0.5;

const DECISION: usize = COGNITIVE_STEPS - 1;

fn empty_batch(m: usize, n_in: usize) -> (Vec<DenseMatrix>, Vec<Vec<usize>>) {
    (
        vec![DenseMatrix::zeros(m, n_in); COGNITIVE_STEPS],
        vec![vec![FIXATION_CLASS; m]; COGNITIVE_STEPS],
    )
}

fn classification(inputs: Vec<DenseMatrix>, labels: Vec<Vec<usize>>, n_in: usize) -> TaskBatch {
    let m = inputs[0].rows();
    let decision_mask = (0..COGNITIVE_STEPS).map(|t| vec![t == DECISION; m]).collect();
    TaskBatch {
        inputs,
        targets: Targets::Labels(labels),
        loss_mask: vec![vec![true; m]; COGNITIVE_STEPS],
        decision_mask,
        loss_kind: LossKind::CrossEntropy,
        n_in,
        n_out: 3,
    }
}

#[derive(Clone, Copy, Debug)]
pub struct TwoAfParams {
    pub noise_std: f64,
    pub mean_gap: f64,
}

impl Default for TwoAfParams {
    fn default() -> Self {
        TwoAfParams {
            noise_std: EVIDENCE_NOISE,
            mean_gap: EVIDENCE_GAP,
        }
    }
}

/// 700 ms stimulus, 100 ms decision. Inputs: fixation, evidence A, evidence B.
pub fn gen_2af(rng: &mut Rng, m: usize) -> TaskBatch {
    gen_2af_with(rng, m, &TwoAfParams::default())
}

pub fn gen_2af_with(rng: &mut Rng, m: usize, p: &TwoAfParams) -> TaskBatch {
    let (mut inputs, mut labels) = empty_batch(m, 3);
    for i in 0..m {
        let choice = rng.below(2);
        let (hi, lo) = (0.5 + p.mean_gap / 2.0, 0.5 - p.mean_gap / 2.0);
        let means = if choice == 0 { [hi, lo] } else { [lo, hi] };
        for x in inputs.iter_mut().take(DECISION) {
            let row = x.row_mut(i);
            row[0] = 1.0;
            row[1] = means[0] + p.noise_std * rng.normal();
            row[2] = means[1] + p.noise_std * rng.normal();
        }
        labels[DECISION][i] = 1 + choice;
    }
    classification(inputs, labels, 3)
}

#[derive(Clone, Copy, Debug)]
pub struct DmsParams {
    pub noise_std: f64,
    pub match_prob: f64,
}

impl Default for DmsParams {
    fn default() -> Self {
        DmsParams {
            noise_std: EVIDENCE_NOISE,
            match_prob: 0.5,
        }
    }
}

/// 100 ms sample, 500 ms delay, 100 ms test, 100 ms decision.
/// Inputs: fixation and two stimulus-identity channels. Label 1 = match.
pub fn gen_dms(rng: &mut Rng, m: usize) -> TaskBatch {
    gen_dms_with(rng, m, &DmsParams::default())
}

pub fn gen_dms_with(rng: &mut Rng, m: usize, p: &DmsParams) -> TaskBatch {
    const SAMPLE: usize = 0;
    const TEST: usize = 6;
    let (mut inputs, mut labels) = empty_batch(m, 3);
    for i in 0..m {
        let sample = rng.below(2);
        let is_match = rng.bernoulli(p.match_prob);
        let test = if is_match { sample } else { 1 - sample };
        for (t, x) in inputs.iter_mut().enumerate().take(DECISION) {
            let row = x.row_mut(i);
            row[0] = 1.0;
            let stim = match t {
                SAMPLE => Some(sample),
                TEST => Some(test),
                _ => None,
            };
            if let Some(s) = stim {
                row[1 + s] = 1.0;
                row[1] += p.noise_std * rng.normal();
                row[2] += p.noise_std * rng.normal();
            }
        }
        labels[DECISION][i] = if is_match { 1 } else { 2 };
    }
    classification(inputs, labels, 3)
}

/// One context-dependent trial. Coherences are signed evidence strengths in
/// `[-1, 1]`; a zero coherence leaves that modality's channels silent.
#[derive(Clone, Copy, Debug)]
pub struct CxtTrial {
    /// 0 attends modality 1, 1 attends modality 2.
    pub context: usize,
    pub coherence: [f64; 2],
}

impl CxtTrial {
    /// 1 when the attended modality points "up", 2 otherwise.
    pub fn label(&self) -> usize {
        if self.coherence[self.context] > 0.0 {
            1
        } else {
            2
        }
    }
}

/// 200 ms stimulus, 500 ms delay, 100 ms decision. Inputs: fixation, two
/// channels per modality, two context cues.
pub fn gen_cxt(rng: &mut Rng, m: usize) -> TaskBatch {
    let trials: Vec<CxtTrial> = (0..m)
        .map(|_| {
            let context = rng.below(2);
            let mut sign = || if rng.bernoulli(0.5) { 1.0 } else { -1.0 };
            CxtTrial {
                context,
                coherence: [sign(), sign()],
            }
        })
        .collect();
    cxt_from_trials(rng, &trials, EVIDENCE_NOISE)
}

/// Builds a context batch from explicit trials. Each modality's channel pair
/// carries `gap·max(c, 0)` and `gap·max(−c, 0)` plus noise during the stimulus.
pub fn cxt_from_trials(rng: &mut Rng, trials: &[CxtTrial], noise_std: f64) -> TaskBatch {
    const STIMULUS: usize = 2;
    let m = trials.len();
    let (mut inputs, mut labels) = empty_batch(m, 7);
    for (i, trial) in trials.iter().enumerate() {
        for (t, x) in inputs.iter_mut().enumerate().take(DECISION) {
            let row = x.row_mut(i);
            row[0] = 1.0;
            row[5 + trial.context] = 1.0;
            if t < STIMULUS {
                for (k, &c) in trial.coherence.iter().enumerate() {
                    if c == 0.0 {
                        continue;
                    }
                    row[1 + 2 * k] = EVIDENCE_GAP * c.max(0.0) + noise_std * rng.normal();
                    row[2 + 2 * k] = EVIDENCE_GAP * (-c).max(0.0) + noise_std * rng.normal();
                }
            }
        }
        labels[DECISION][i] = trial.label();
    }
    classification(inputs, labels, 7)
}

/// Sum of sinusoids `Σ_s a_s sin(2π f_s t/T + φ_{cue,s})`.
#[derive(Clone, Debug)]
pub struct PatternSpec {
    pub amplitudes: Vec<f64>,
    /// Cycles per trial.
    pub frequencies: Vec<f64>,
    /// `phases[cue][s]`.
    pub phases: [Vec<f64>; 2],
}

impl Default for PatternSpec {
    fn default() -> Self {
        PatternSpec {
            amplitudes: vec![0.5; 4],
            frequencies: vec![1.0, 2.0, 3.0, 5.0],
            phases: [vec![0.0; 4], vec![PI / 2.0; 4]],
        }
    }
}

impl PatternSpec {
    pub fn value(&self, cue: usize, t: usize, steps: usize) -> f64 {
        self.amplitudes
            .iter()
            .zip(&self.frequencies)
            .zip(&self.phases[cue])
            .map(|((a, f), phi)| a * (2.0 * PI * f * t as f64 / steps as f64 + phi).sin())
            .sum()
    }
}

/// Regression: a one-hot cue held for the whole trial selects one of two
/// fixed target patterns. Panics if `steps < 2`.
pub fn gen_pattern(rng: &mut Rng, m: usize, steps: usize) -> TaskBatch {
    gen_pattern_with(rng, m, steps, &PatternSpec::default())
}

pub fn gen_pattern_with(rng: &mut Rng, m: usize, steps: usize, spec: &PatternSpec) -> TaskBatch {
    assert!(steps >= 2, "pattern task needs at least two steps");
    let mut inputs = vec![DenseMatrix::zeros(m, 2); steps];
    let mut targets = vec![DenseMatrix::zeros(m, 1); steps];
    for i in 0..m {
        let cue = rng.below(2);
        for t in 0..steps {
            inputs[t][(i, cue)] = 1.0;
            targets[t][(i, 0)] = spec.value(cue, t, steps);
        }
    }
    TaskBatch {
        inputs,
        targets: Targets::Values(targets),
        loss_mask: vec![vec![true; m]; steps],
        decision_mask: vec![vec![true; m]; steps],
        loss_kind: LossKind::Mse,
        n_in: 2,
        n_out: 1,
    }
}
