use approx::assert_relative_eq;
use nalgebra::DVector;
use partial_transfer::linalg::PinvOp;
use partial_transfer::model::{
    extend_truth, sample_dataset, CommonMode, ExtendedTruth, GroundTruth, LearnerConfig, Sacrifice, Task, TruthSpec,
};
use partial_transfer::pipeline::*;
use partial_transfer::Error;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn truth(mode: CommonMode, s: usize, sigma: f64, cfg: &LearnerConfig) -> ExtendedTruth {
    let gt = GroundTruth::from_spec(&TruthSpec {
        s,
        s1: 3,
        s2: 3,
        w1_norm: if s == 0 { 0.0 } else { 1.0 },
        mode,
        q1_norm: 0.8,
        q2_norm: 0.6,
        sigma1: sigma,
        sigma2: sigma,
    })
    .unwrap();
    extend_truth(&gt, cfg, &Sacrifice::none()).unwrap()
}

#[test]
fn noiseless_underparameterized_source_is_exact() {
    let cfg = LearnerConfig::new(5, 5, 5, 40, 30);
    let t = truth(CommonMode::Equal, 5, 0.0, &cfg);
    let (src, data) = train_source(&t, &cfg, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    assert_eq!(data.n(), 40);
    assert_relative_eq!(src.w_tilde, t.w1e.clone(), epsilon = 1e-10);
    assert_relative_eq!(src.q_tilde, t.q1e.clone(), epsilon = 1e-10);
    for method in [TransferMethod::OptionA, TransferMethod::OptionB] {
        let out = run_method(method, &t, &cfg, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert!(out.model_error < 1e-18, "{method:?}: {}", out.model_error);
        assert!(out.transfer_error < 1e-18);
    }
}

#[test]
fn option_a_keeps_source_common_part() {
    let cfg = LearnerConfig::new(8, 20, 12, 25, 30);
    let t = truth(CommonMode::Opposite, 5, 0.5, &cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (src, _) = train_source(&t, &cfg, &mut rng).unwrap();
    let out = transfer_option_a(&src, &t, &cfg, &mut rng).unwrap();
    assert_eq!(out.model.w_tilde, src.w_tilde);
    assert_eq!(out.model.task, Task::Target);
    let te = (&t.w2e - &src.w_tilde).norm_squared();
    assert_relative_eq!(out.transfer_error, te, epsilon = 1e-12);
    let me = te + (&out.model.q_tilde - &t.q2e).norm_squared();
    assert_relative_eq!(out.model_error, me, epsilon = 1e-12);
    assert_relative_eq!(out.model_error, model_error(&out.model, &t).unwrap(), epsilon = 1e-12);
    assert_relative_eq!(
        out.term("common_error").unwrap() + out.term("specific_error").unwrap(),
        out.model_error,
        epsilon = 1e-12
    );
}

#[test]
fn option_b_is_the_interpolator_closest_to_the_source() {
    let cfg = LearnerConfig::new(10, 20, 40, 25, 30);
    let t = truth(CommonMode::Equal, 5, 0.3, &cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (src, _) = train_source(&t, &cfg, &mut rng).unwrap();
    let replay = rng.clone();
    let out = transfer_option_b(&src, &t, &cfg, &mut rng).unwrap();
    let data = sample_dataset(&t, Task::Target, cfg.n2, &mut replay.clone()).unwrap();
    let u = data.stacked();
    let a = DVector::from_iterator(50, out.model.w_tilde.iter().chain(out.model.q_tilde.iter()).copied());
    assert_relative_eq!(u.tr_mul(&a), data.y.clone(), epsilon = 1e-9);
    let mut a0 = DVector::zeros(50);
    a0.rows_mut(0, 10).copy_from(&src.w_tilde);
    let step = &a - &a0;
    let op = PinvOp::new(&u).unwrap();
    assert_relative_eq!(op.project(&step).unwrap(), step, epsilon = 1e-9);
}

#[test]
fn options_coincide_without_common_features() {
    for p2 in [10, 60] {
        let cfg = LearnerConfig::new(0, 20, p2, 25, 30);
        let t = truth(CommonMode::Equal, 0, 0.4, &cfg);
        let a = run_method(TransferMethod::OptionA, &t, &cfg, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let b = run_method(TransferMethod::OptionB, &t, &cfg, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        assert_relative_eq!(a.model.q_tilde, b.model.q_tilde, epsilon = 1e-9);
        assert_relative_eq!(a.model_error, b.model_error, epsilon = 1e-9);
    }
}

#[test]
fn sample_transfer_decomposition_sums_to_model_error() {
    for (p, mode) in [(300, CommonMode::Offset { delta: 0.5 }), (20, CommonMode::Offset { delta: 0.5 }), (300, CommonMode::Equal)] {
        let cfg = LearnerConfig::new(p, 3, 3, 50, 50);
        let t = truth(mode, 5, 0.5, &cfg);
        let out = sample_transfer(&t, &cfg, &mut ChaCha8Rng::seed_from_u64(5), false).unwrap();
        let sum: f64 = ["k_bias", "k_noise", "k_similarity", "k_cross"].iter().map(|n| out.term(n).unwrap()).sum();
        assert_relative_eq!(sum, out.model_error, epsilon = 1e-9, max_relative = 1e-9);
        assert!(out.model.q_tilde.iter().all(|&x| x == 0.0));
        if mode == CommonMode::Equal {
            assert_eq!(out.term("k_similarity"), Some(0.0));
        }
    }
}

#[test]
fn fine_tuning_fits_the_target_residual() {
    let cfg = LearnerConfig::new(300, 3, 40, 50, 50);
    let t = truth(CommonMode::Equal, 5, 0.2, &cfg);
    let plain = sample_transfer(&t, &cfg, &mut ChaCha8Rng::seed_from_u64(6), false).unwrap();
    let tuned = sample_transfer(&t, &cfg, &mut ChaCha8Rng::seed_from_u64(6), true).unwrap();
    assert_eq!(plain.model.w_tilde, tuned.model.w_tilde);
    assert!(tuned.term("t_bias").is_some() && tuned.term("t_var").is_some());
    assert!(plain.term("t_bias").is_none());
    assert!(tuned.model.q_tilde.iter().any(|&x| x != 0.0));
}

#[test]
fn dimension_mismatches_are_reported() {
    let cfg = LearnerConfig::new(8, 20, 12, 25, 30);
    let t = truth(CommonMode::Equal, 5, 0.5, &cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut src, _) = train_source(&t, &cfg, &mut rng).unwrap();
    src.w_tilde = DVector::zeros(7);
    assert!(matches!(transfer_option_a(&src, &t, &cfg, &mut rng), Err(Error::DimensionMismatch { .. })));
    assert!(matches!(transfer_option_b(&src, &t, &cfg, &mut rng), Err(Error::DimensionMismatch { .. })));
    assert!(matches!(model_error(&src, &t), Err(Error::DimensionMismatch { .. })));
    let other = LearnerConfig::new(9, 20, 12, 25, 30);
    assert!(matches!(train_source(&t, &other, &mut rng), Err(Error::DimensionMismatch { .. })));
}

#[test]
fn method_names() {
    let names: Vec<_> = [
        TransferMethod::OptionA,
        TransferMethod::OptionB,
        TransferMethod::SampleTransfer,
        TransferMethod::SampleTransferFineTuned,
    ]
    .iter()
    .map(|m| m.as_str())
    .collect();
    assert_eq!(names, ["option_a", "option_b", "sample_transfer", "sample_transfer_fine_tuned"]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn replicates_are_reproducible(seed in any::<u64>(), p in 1usize..30, p2 in 3usize..60) {
        let cfg = LearnerConfig::new(p.max(5), 10, p2, 30, 25);
        let t = truth(CommonMode::Equal, 5, 0.5, &cfg);
        for m in [TransferMethod::OptionA, TransferMethod::OptionB] {
            let a = run_method(m, &t, &cfg, &mut ChaCha8Rng::seed_from_u64(seed));
            let b = run_method(m, &t, &cfg, &mut ChaCha8Rng::seed_from_u64(seed));
            match (a, b) {
                (Ok(a), Ok(b)) => {
                    prop_assert_eq!(a.model_error.to_bits(), b.model_error.to_bits());
                    prop_assert!(a.model_error >= 0.0);
                }
                (Err(_), Err(_)) => {}
                _ => prop_assert!(false, "nondeterministic outcome"),
            }
        }
    }
}
