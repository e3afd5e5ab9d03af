use sabnn_core::data::{gen_two_moons, Dataset};
use sabnn_core::eval::accuracy;
use sabnn_core::flatness::GeometryKind;
use sabnn_core::models::*;
use sabnn_core::rng::{seeded, standard_normal_vec};
use sabnn_core::trainers::*;
use sabnn_core::Error;

fn small_problem() -> (MlpSpec, Dataset) {
    // 40 rows in batches of 8 over 10 epochs: 50 updates
    let spec = MlpSpec::uniform(vec![2, 8, 8, 2], Activation::Tanh).unwrap();
    (spec, gen_two_moons(40, 0.2, 3).unwrap())
}

fn small_config(method: Method) -> TrainConfig {
    TrainConfig {
        epochs: 10,
        batch_size: 8,
        seed: 17,
        ensemble_size: 2,
        swag_rank: 3,
        ..TrainConfig::for_method(method)
    }
}

fn train_accuracy(spec: &MlpSpec, params: &FlatParams, ds: &Dataset) -> f64 {
    let probs = softmax_rows(&mlp_forward(spec, params, ds.features()).unwrap());
    accuracy(&probs, ds.labels()).unwrap()
}

#[test]
fn zero_radius_flat_runs_match_baselines() {
    let (spec, ds) = small_problem();
    for method in Method::ALL {
        let base = train(&small_config(method), &spec, &ds).unwrap().model;
        let flat0 = train(&TrainConfig { flat: true, rho: 0.0, ..small_config(method) }, &spec, &ds).unwrap().model;
        let (a, b) = (base.flatten(), flat0.flatten());
        assert_eq!(a.len(), b.len());
        let diff = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(diff <= 1e-12, "{method}: {diff}");
        assert!(base.matches(method));
        let flat = train(&TrainConfig { flat: true, rho: 0.05, ..small_config(method) }, &spec, &ds).unwrap().model;
        assert_ne!(flat.flatten(), a, "{method}: flat run should move off the baseline");
    }
}

#[test]
fn training_is_deterministic() {
    let (spec, ds) = small_problem();
    for method in Method::ALL {
        let c = TrainConfig { flat: true, ..small_config(method) };
        assert_eq!(train(&c, &spec, &ds).unwrap(), train(&c, &spec, &ds).unwrap(), "{method}");
    }
}

#[test]
fn noiseless_langevin_is_regularised_sgd() {
    let (spec, ds) = small_problem();
    let sgld = TrainConfig { sgld_temperature: Some(0.0), ..small_config(Method::Sgld) };
    let particles = train_sgld(&sgld, &spec, &ds).unwrap().model;
    let sgd = TrainConfig { ensemble_size: 1, ..small_config(Method::DeepEnsemble) };
    let member = &train_deep_ensemble(&sgd, &spec, &ds).unwrap().model[0];
    let last = &particles.particles().last().unwrap().params;
    assert!(last.values().iter().zip(member.values()).all(|(a, b)| (a - b).abs() <= 1e-12));
    assert_eq!(particles.len(), 5);
    assert_eq!(particles.particles()[0].step, 30);
}

#[test]
fn langevin_step_by_hand() {
    let z = standard_normal_vec(&mut seeded(99), 1);
    let temperature = 0.3;
    let mut theta = [1.0];
    sgld_update(&mut theta, &[2.0], 0.1, temperature, &z);
    assert!((theta[0] - (1.0 - 0.2 + (0.2 * temperature).sqrt() * z[0])).abs() < 1e-15);
}

#[test]
fn full_keep_dropout_without_penalty_is_plain_sgd() {
    let (spec, ds) = small_problem();
    let dropout = TrainConfig { keep_prob: 1.0, prior_tau: f64::INFINITY, ..small_config(Method::McDropout) };
    let a = train_mc_dropout(&dropout, &spec, &ds).unwrap().model;
    let sgd = TrainConfig { ensemble_size: 1, prior_tau: f64::INFINITY, ..small_config(Method::DeepEnsemble) };
    let b = &train_deep_ensemble(&sgd, &spec, &ds).unwrap().model[0];
    assert_eq!(a.values(), b.values());
}

#[test]
fn swag_moments_match_the_trajectory() {
    let (spec, ds) = small_problem();
    // zero-temperature SGLD keeps the same per-epoch snapshots SWAG collects
    let swag = TrainConfig { swag_start_epoch: Some(5), ..small_config(Method::Swag) };
    let stats = train_swag(&swag, &spec, &ds, false).unwrap().model;
    let sgld = TrainConfig { sgld_temperature: Some(0.0), ..small_config(Method::Sgld) };
    let snaps: Vec<Vec<f64>> =
        train_sgld(&sgld, &spec, &ds).unwrap().model.particles().iter().map(|p| p.params.values().to_vec()).collect();
    assert_eq!(stats.count(), snaps.len());
    let m = snaps.len() as f64;
    for j in 0..stats.mean().len() {
        let mean = snaps.iter().map(|s| s[j]).sum::<f64>() / m;
        let sq = snaps.iter().map(|s| s[j] * s[j]).sum::<f64>() / m;
        assert!((stats.mean()[j] - mean).abs() < 1e-10);
        assert!((stats.sq_mean()[j] - sq).abs() < 1e-10);
        assert!(stats.sq_mean()[j] + 1e-10 >= stats.mean()[j].powi(2));
    }
    assert_eq!(stats.deviations().len(), 3);
    let diag = train_swag(&swag, &spec, &ds, true).unwrap().model;
    assert!(diag.deviations().is_empty());
    assert_eq!(diag.mean(), stats.mean());
}

#[test]
fn streaming_moments_equal_batch_statistics() {
    let layout = MlpSpec::new(vec![3, 2], vec![]).unwrap().layout();
    let mut stats = SwagStats::new(layout, 4);
    let mut rng = seeded(5);
    let snaps: Vec<Vec<f64>> = (0..100).map(|_| standard_normal_vec(&mut rng, 8)).collect();
    for s in &snaps {
        stats.collect(s).unwrap();
    }
    for j in 0..8 {
        let mean = snaps.iter().map(|s| s[j]).sum::<f64>() / 100.0;
        let sq = snaps.iter().map(|s| s[j] * s[j]).sum::<f64>() / 100.0;
        assert!((stats.mean()[j] - mean).abs() < 1e-10 && (stats.sq_mean()[j] - sq).abs() < 1e-10);
    }
    assert_eq!(stats.deviations().len(), 4);
    assert!(stats.collect(&[0.0; 3]).is_err());
}

#[test]
fn swag_sampling() {
    let layout = MlpSpec::new(vec![1, 1], vec![]).unwrap().layout();
    let mut same = SwagStats::new(layout.clone(), 5);
    assert!(swag_sample(&same, &mut seeded(0), true).is_err());
    for _ in 0..4 {
        same.collect(&[0.3, -1.2]).unwrap();
    }
    for diag in [true, false] {
        assert_eq!(swag_sample(&same, &mut seeded(1), diag).unwrap().values(), &[0.3, -1.2]);
    }

    let mut spread = SwagStats::new(layout, 0);
    spread.collect(&[2.0, 2.0]).unwrap();
    spread.collect(&[-2.0, -2.0]).unwrap();
    let mut rng = seeded(2);
    let draws: Vec<f64> = (0..100_000).map(|_| swag_sample(&spread, &mut rng, true).unwrap().values()[0]).collect();
    let mean = draws.iter().sum::<f64>() / draws.len() as f64;
    let sd = (draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / draws.len() as f64).sqrt();
    assert!((sd - 2.0).abs() < 0.04, "sd {sd}");

    let a = swag_sample(&spread, &mut seeded(3), true).unwrap();
    assert_eq!(a, swag_sample(&spread, &mut seeded(3), true).unwrap());
}

#[test]
fn kl_only_objective_moves_to_the_prior() {
    let (spec, ds) = small_problem();
    let prior = PriorSpec::new(0.5).unwrap();
    let mut last = f64::INFINITY;
    for epochs in [1, 5, 20, 80, 300] {
        let c = TrainConfig {
            lambda: Some(0.0),
            prior_tau: 0.5,
            epochs,
            learning_rate: 0.05,
            ..small_config(Method::Sgvb)
        };
        let post = train_sgvb(&c, &spec, &ds, false).unwrap().model;
        let kl = kl_diag_gaussian(&post, &prior);
        assert!(kl < last || (kl == 0.0 && last == 0.0), "epochs {epochs}: {kl} ≥ {last}");
        last = kl;
        if epochs == 300 {
            assert!(post.mu().values().iter().all(|m| m.abs() < 1e-4));
            assert!(post.sigma().iter().all(|s| (s - 0.5).abs() < 1e-4));
        }
    }
}

#[test]
fn sgvb_reference_run_fits_two_moons() {
    // reference run: seed 0, 400 points at noise 0.2, 200 epochs, default config
    let spec = MlpSpec::uniform(vec![2, 16, 16, 2], Activation::Relu).unwrap();
    let ds = gen_two_moons(400, 0.2, 0).unwrap();
    for local_reparam in [false, true] {
        let post = train_sgvb(&TrainConfig::default(), &spec, &ds, local_reparam).unwrap().model;
        let acc = train_accuracy(&spec, post.mu(), &ds);
        assert!(acc >= 0.95, "local_reparam={local_reparam}: {acc}");
    }
}

#[test]
fn dropout_reference_run_fits_two_moons() {
    let spec = MlpSpec::uniform(vec![2, 16, 16, 2], Activation::Relu).unwrap();
    let ds = gen_two_moons(400, 0.2, 0).unwrap();
    for flat in [false, true] {
        let c = TrainConfig { flat, keep_prob: 0.9, ..TrainConfig::for_method(Method::McDropout) };
        let params = train_mc_dropout(&c, &spec, &ds).unwrap().model;
        assert!(train_accuracy(&spec, &params, &ds) >= 0.95);
    }
}

#[test]
fn geometry_and_multiple_samples_change_the_run() {
    let (spec, ds) = small_problem();
    let base = TrainConfig { flat: true, rho: 5e-3, ..small_config(Method::SgvbLrt) };
    let identity = train(&base, &spec, &ds).unwrap().model.flatten();
    let geometry = TrainConfig { geometry: GeometryKind::MuOverSigma, ..base.clone() };
    assert_ne!(train(&geometry, &spec, &ds).unwrap().model.flatten(), identity);
    let two = TrainConfig { mc_train_samples: 2, ..base };
    assert_ne!(train(&two, &spec, &ds).unwrap().model.flatten(), identity);
}

#[test]
fn ensemble_members_follow_their_seeds() {
    let (spec, ds) = small_problem();
    let three =
        train_deep_ensemble(&TrainConfig { ensemble_size: 3, ..small_config(Method::DeepEnsemble) }, &spec, &ds)
            .unwrap()
            .model;
    let shifted = TrainConfig { ensemble_size: 2, seed: 18, ..small_config(Method::DeepEnsemble) };
    let two = train_deep_ensemble(&shifted, &spec, &ds).unwrap().model;
    assert_eq!(&three[1..], &two[..]);
    assert_ne!(three[0], three[1]);
}

#[test]
fn divergence_reports_the_step() {
    let (spec, ds) = small_problem();
    let c = TrainConfig { learning_rate: 1e305, ..small_config(Method::DeepEnsemble) };
    assert!(matches!(train(&c, &spec, &ds), Err(Error::Diverged { .. })));
}

#[test]
fn invalid_configs_are_rejected() {
    let (spec, ds) = small_problem();
    let bad = [
        TrainConfig { rho: -1.0, ..small_config(Method::Sgvb) },
        TrainConfig { keep_prob: 0.0, ..small_config(Method::McDropout) },
        TrainConfig { ensemble_size: 0, ..small_config(Method::DeepEnsemble) },
        TrainConfig { swag_start_epoch: Some(10), ..small_config(Method::Swag) },
        TrainConfig { geometry: GeometryKind::MuOverSigma, ..small_config(Method::Swag) },
    ];
    for c in bad {
        assert!(train(&c, &spec, &ds).is_err(), "{c:?}");
    }
    let wrong_spec = MlpSpec::uniform(vec![3, 4, 2], Activation::Relu).unwrap();
    assert!(train(&small_config(Method::Sgvb), &wrong_spec, &ds).is_err());
}
