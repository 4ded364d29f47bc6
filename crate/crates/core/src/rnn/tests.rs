use proptest::prelude::{any, prop_assert, prop_assert_eq, proptest, ProptestConfig};

use super::*;
use crate::init::{generate, InitKind, InitSpec};
use crate::task::{gen_2af, gen_pattern, LossKind};
use crate::tensor::gaussian_matrix;

fn small_params(rng: &mut Rng, n: usize, n_in: usize, n_out: usize, rho: f64) -> RnnParams {
    RnnParams::new(
        gaussian_matrix(rng, n, n, 1.5 / (n as f64).sqrt()),
        gaussian_matrix(rng, n, n_in, 1.0),
        gaussian_matrix(rng, n_out, n, 1.0 / (n as f64).sqrt()),
        rho,
    )
    .unwrap()
}

#[test]
fn zero_network_stays_at_rest() {
    let p = RnnParams::new(DenseMatrix::zeros(4, 4), DenseMatrix::zeros(4, 2), DenseMatrix::zeros(3, 4), 0.3).unwrap();
    let trace = forward(&p, &vec![DenseMatrix::zeros(5, 2); 6]).unwrap();
    assert!(trace.hidden.iter().chain(&trace.readouts).all(|m| m.max_abs() == 0.0));
}

#[test]
fn one_step_hand_computation() {
    let mut rng = Rng::new(1);
    let v = [0.5, 0.0, 2.0];
    let p = RnnParams::new(
        gaussian_matrix(&mut rng, 3, 3, 1.0),
        DenseMatrix::identity(3),
        DenseMatrix::identity(3),
        0.0,
    )
    .unwrap();
    let trace = forward(&p, &[DenseMatrix::row_vector(&v)]).unwrap();
    assert_eq!(trace.hidden[1].row(0), &v);
}

#[test]
fn leak_factor_for_equal_step_and_time_constant() {
    assert!((leak_factor(100.0, 100.0) - 0.367879).abs() < 1e-6);
}

#[test]
fn readouts_are_reproducible_from_states() {
    let mut rng = Rng::new(2);
    let p = small_params(&mut rng, 6, 3, 3, 0.4);
    let b = gen_2af(&mut rng, 5);
    let trace = forward(&p, &b.inputs).unwrap();
    for (t, y) in trace.readouts.iter().enumerate() {
        let again = trace.hidden[t + 1].map(relu).matmul_t(&p.w_out).unwrap();
        assert_eq!(&again, y);
    }
    assert_eq!(forward(&p, &b.inputs).unwrap(), trace);
}

#[test]
fn forward_rejects_wrong_input_width() {
    let p = small_params(&mut Rng::new(3), 4, 2, 2, 0.1);
    assert!(matches!(
        forward(&p, &[DenseMatrix::zeros(3, 5)]),
        Err(LabError::Dimension { .. })
    ));
}

#[test]
fn unmasked_targets_do_not_affect_gradients() {
    let mut rng = Rng::new(4);
    let p = small_params(&mut rng, 6, 3, 3, 0.5);
    let mut b = gen_2af(&mut rng, 4);
    b.loss_mask[2] = vec![false; 4];
    let g1 = loss_and_grads(&p, &b).unwrap();
    if let Targets::Labels(l) = &mut b.targets {
        l[2] = vec![2; 4];
    }
    assert_eq!(g1, loss_and_grads(&p, &b).unwrap());
}

#[test]
fn finite_differences_match_on_reference_shape() {
    for (seed, kind) in [(5, LossKind::CrossEntropy), (6, LossKind::Mse)] {
        let mut rng = Rng::new(seed);
        let (n_in, n_out) = (3, 3);
        let p = small_params(&mut rng, 8, n_in, n_out, 0.3);
        let b = TaskBatch {
            inputs: (0..5).map(|_| gaussian_matrix(&mut rng, 4, n_in, 1.0)).collect(),
            targets: match kind {
                LossKind::CrossEntropy => Targets::Labels((0..5).map(|t| (0..4).map(|i| (t + i) % 3).collect()).collect()),
                LossKind::Mse => Targets::Values((0..5).map(|_| gaussian_matrix(&mut rng, 4, n_out, 1.0)).collect()),
            },
            loss_mask: vec![vec![true; 4]; 5],
            decision_mask: vec![vec![true; 4]; 5],
            loss_kind: kind,
            n_in,
            n_out,
        };
        let r = gradcheck(&p, &b, 1e-5).unwrap();
        assert!(r.max_rel_error <= 1e-4, "{kind:?}: {r:?}");
        assert!(r.checked > 0);
    }
}

#[test]
fn exact_mse_fit_has_zero_loss_and_gradient() {
    let mut rng = Rng::new(7);
    let p = small_params(&mut rng, 5, 2, 1, 0.2);
    let b = gen_pattern(&mut rng, 3, 4);
    let trace = forward(&p, &b.inputs).unwrap();
    let fitted = TaskBatch {
        targets: Targets::Values(trace.readouts.clone()),
        ..b
    };
    let g = loss_and_grads(&p, &fitted).unwrap();
    assert_eq!(g.loss, 0.0);
    assert!(g.blocks().iter().all(|m| m.max_abs() == 0.0));
}

#[test]
fn sgd_zero_rate_is_identity() {
    let mut rng = Rng::new(8);
    let p = small_params(&mut rng, 4, 3, 3, 0.1);
    let g = loss_and_grads(&p, &gen_2af(&mut rng, 2)).unwrap();
    assert_eq!(sgd_step(&p, &g, 0.0, None), p);
}

#[test]
fn sgd_single_parameter_update() {
    let p = RnnParams::new(
        DenseMatrix::filled(1, 1, 0.5),
        DenseMatrix::filled(1, 1, 1.0),
        DenseMatrix::filled(1, 1, 2.0),
        0.0,
    )
    .unwrap();
    let g = Gradients {
        d_w_h: DenseMatrix::filled(1, 1, 0.25),
        d_w_x: DenseMatrix::filled(1, 1, -1.0),
        d_w_out: DenseMatrix::filled(1, 1, 4.0),
        loss: 1.0,
    };
    let q = sgd_step(&p, &g, 0.1, None);
    assert_eq!(q.w_h[(0, 0)], 0.5 - 0.1 * 0.25);
    assert_eq!(q.w_x[(0, 0)], 1.0 + 0.1);
    assert_eq!(q.w_out[(0, 0)], 2.0 - 0.1 * 4.0);
}

#[test]
fn dale_projection_clips_sign_violations() {
    let p = RnnParams::new(
        DenseMatrix::from_rows(&[[0.1, -0.1], [0.2, -0.2]]),
        DenseMatrix::zeros(2, 1),
        DenseMatrix::zeros(1, 2),
        0.0,
    )
    .unwrap();
    let g = Gradients {
        d_w_h: DenseMatrix::from_rows(&[[1.0, 0.0], [0.0, -1.0]]),
        d_w_x: DenseMatrix::zeros(2, 1),
        d_w_out: DenseMatrix::zeros(1, 2),
        loss: 0.0,
    };
    let q = sgd_step(&p, &g, 0.5, Some(&[true, false]));
    assert_eq!(q.w_h, DenseMatrix::from_rows(&[[0.0, -0.1], [0.2, 0.0]]));
}

fn two_af_params(n: usize, seed: u64, kind: InitKind) -> RnnParams {
    let mut rng = Rng::new(seed);
    let w_h = generate(&InitSpec::new(kind, 1.5, n), &mut rng).unwrap();
    RnnParams::with_default_io(w_h, 3, 3, leak_factor(100.0, 100.0), &mut rng).unwrap()
}

#[test]
fn zero_iterations_return_params_unchanged() {
    let p = two_af_params(10, 9, InitKind::Gaussian);
    let cfg = TrainConfig {
        iters: 0,
        ..Default::default()
    };
    let out = train(p.clone(), |_| unreachable!(), &cfg, &mut NoHooks).unwrap();
    assert_eq!(out.params, p);
    assert!(out.log.entries.is_empty());
}

fn short_run(seed: u64, dale: bool, hooks: &mut dyn TrainHooks) -> TrainOutcome {
    let kind = if dale { InitKind::Dale { frac_exc: 0.8 } } else { InitKind::Gaussian };
    let p = two_af_params(30, seed, kind);
    let mut rng = Rng::new(seed + 1000);
    let cfg = TrainConfig {
        iters: 200,
        log_every: 20,
        dale_constrained: dale,
        lr: 0.05,
        ..Default::default()
    };
    train(p, |_| Ok(gen_2af(&mut rng, 16)), &cfg, hooks).unwrap()
}

#[test]
fn training_is_bit_reproducible() {
    let a = short_run(10, false, &mut NoHooks);
    let b = short_run(10, false, &mut NoHooks);
    assert_eq!(a, b);
    assert_eq!(a.log.entries.len(), 11);
}

#[test]
fn dale_training_keeps_column_signs() {
    struct SignCheck(Vec<bool>, usize);
    impl TrainHooks for SignCheck {
        fn on_log(&mut self, _: &LogEntry, params: &RnnParams) {
            for i in 0..params.n() {
                for (j, &exc) in self.0.iter().enumerate() {
                    let v = params.w_h[(i, j)];
                    assert!(if exc { v >= 0.0 } else { v <= 0.0 });
                }
            }
            self.1 += 1;
        }
    }
    let types = column_types(&two_af_params(30, 11, InitKind::Dale { frac_exc: 0.8 }).w_h);
    let mut hook = SignCheck(types, 0);
    let out = short_run(11, true, &mut hook);
    assert_eq!(hook.1, out.log.entries.len());
}

#[test]
fn divergence_is_reported_with_last_good_iteration() {
    let p = two_af_params(20, 12, InitKind::Gaussian);
    let mut rng = Rng::new(13);
    let cfg = TrainConfig {
        iters: 500,
        lr: 1e4,
        ..Default::default()
    };
    let err = train(p, |_| Ok(gen_2af(&mut rng, 8)), &cfg, &mut NoHooks).unwrap_err();
    match err {
        LabError::Diverged { iteration, last_good, .. } => {
            assert!(iteration > 0);
            assert_eq!(last_good, Some(iteration - 1));
        }
        other => panic!("unexpected {other}"),
    }
}

#[test]
fn accuracy_threshold_stops_at_first_hit() {
    let p = two_af_params(40, 14, InitKind::Gaussian);
    let mut rng = Rng::new(15);
    let cfg = TrainConfig {
        iters: 3000,
        lr: 0.05,
        log_every: 10,
        stop: StopRule::AccuracyThreshold(0.97),
        ..Default::default()
    };
    let out = train(p, |_| Ok(gen_2af(&mut rng, 32)), &cfg, &mut NoHooks).unwrap();
    assert!(out.stopped_early);
    let last = out.log.entries.last().unwrap();
    assert!(last.accuracy.unwrap() >= 0.97);
    assert!(out.log.entries[..out.log.entries.len() - 1]
        .iter()
        .all(|e| e.accuracy.unwrap() < 0.97));
    assert_eq!(out.steps, last.iteration);
}

#[test]
fn small_network_learns_two_af() {
    let p = two_af_params(50, 16, InitKind::Gaussian);
    let mut rng = Rng::new(17);
    let cfg = TrainConfig {
        iters: 2000,
        lr: 0.02,
        ..Default::default()
    };
    let out = train(p, |_| Ok(gen_2af(&mut rng, 32)), &cfg, &mut NoHooks).unwrap();
    let eval = evaluate(&out.params, &gen_2af(&mut Rng::new(18), 1000)).unwrap();
    assert!(eval.accuracy.unwrap() >= 0.9, "{eval:?}");
}

#[test]
fn evaluate_accuracy_conventions() {
    // Zero readout weights give all-equal logits; ties resolve to class 0.
    let mut p = two_af_params(10, 19, InitKind::Gaussian);
    p.w_out = DenseMatrix::zeros(3, 10);
    let mut rng = Rng::new(20);
    let mut b = gen_2af(&mut rng, 9000);
    if let Targets::Labels(l) = &mut b.targets {
        for (i, c) in l[7].iter_mut().enumerate() {
            *c = i % 3;
        }
    }
    let e = evaluate(&p, &b).unwrap();
    assert!((e.accuracy.unwrap() - 1.0 / 3.0).abs() < 0.02);
    assert!((e.loss - 3f64.ln()).abs() < 1e-12);

    // Readouts equal to one-hot labels are scored perfectly.
    let trace = forward(&p, &b.inputs).unwrap();
    let perfect = ForwardTrace {
        readouts: (0..8)
            .map(|t| {
                DenseMatrix::from_fn(9000, 3, |i, k| if b.labels().unwrap()[t][i] == k { 1.0 } else { 0.0 })
            })
            .collect(),
        ..trace
    };
    assert_eq!(accuracy_from_trace(&perfect, &b), Some(1.0));

    let mut q = two_af_params(10, 21, InitKind::Gaussian);
    q.w_x = DenseMatrix::zeros(10, 2);
    q.w_out = DenseMatrix::zeros(1, 10);
    assert_eq!(evaluate(&q, &gen_pattern(&mut rng, 4, 5)).unwrap().accuracy, None);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn gradients_are_finite_and_forward_is_pure(seed in any::<u64>(), mse in any::<bool>()) {
        let kind = if mse { LossKind::Mse } else { LossKind::CrossEntropy };
        let (p, b) = random_instance(&mut Rng::new(seed), kind);
        let g = loss_and_grads(&p, &b).unwrap();
        prop_assert!(g.is_finite());
        prop_assert_eq!(forward(&p, &b.inputs).unwrap(), forward(&p, &b.inputs).unwrap());
        for (grad, param) in g.blocks().iter().zip(p.blocks()) {
            prop_assert_eq!(grad.shape(), param.shape());
        }
    }
}
