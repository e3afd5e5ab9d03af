use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use sabnn_core::data::gen_two_moons;
use sabnn_core::diffcore::Tensor;
use sabnn_core::eval::*;
use sabnn_core::models::*;
use sabnn_core::rng::seeded;
use sabnn_core::trainers::{train, Artifact, Method, TrainConfig};

fn random_probs(r: &mut impl Rng, n: usize, c: usize) -> Tensor {
    let mut data = Vec::with_capacity(n * c);
    for _ in 0..n {
        // occasionally sharp or tied rows
        let sharp = r.random_range(0.1..8.0);
        let row: Vec<f64> = (0..c).map(|_| (sharp * r.random::<f64>()).exp()).collect();
        let z: f64 = row.iter().sum();
        data.extend(row.iter().map(|v| v / z));
    }
    Tensor::matrix(n, c, data).unwrap()
}

/// Direct transcription of the definition: scan every example for every bin.
fn ece_oracle(probs: &Tensor, labels: &[usize], bins: usize) -> f64 {
    let n = labels.len();
    let mut total = 0.0;
    for b in 0..bins {
        let lo = b as f64 / bins as f64;
        let hi = (b + 1) as f64 / bins as f64;
        let (mut count, mut conf, mut hits) = (0usize, 0.0, 0usize);
        for (i, &y) in labels.iter().enumerate() {
            let row = probs.row(i);
            let mut pred = 0;
            for k in 1..row.len() {
                if row[k] > row[pred] {
                    pred = k;
                }
            }
            let c = row[pred];
            if (c > lo || (b == 0 && c >= 0.0)) && c <= hi {
                count += 1;
                conf += c;
                hits += usize::from(pred == y);
            }
        }
        if count > 0 {
            let k = count as f64;
            total += k / n as f64 * (hits as f64 / k - conf / k).abs();
        }
    }
    total
}

#[test]
fn ece_matches_the_enumeration_oracle() {
    let mut r = seeded(31);
    for _ in 0..100 {
        let n = r.random_range(1..=200);
        let c = r.random_range(2..=5);
        let probs = random_probs(&mut r, n, c);
        let labels: Vec<usize> = (0..n).map(|_| r.random_range(0..c)).collect();
        let (value, table) = ece(&probs, &labels, 20).unwrap();
        assert!((value - ece_oracle(&probs, &labels, 20)).abs() < 1e-12);
        assert_eq!(table.total(), n);
        assert!((0.0..=1.0).contains(&value));
    }
}

#[test]
fn worked_two_bin_example() {
    let conf = [0.9, 0.8, 0.6, 0.55];
    let correct = [true, true, false, true];
    let data: Vec<f64> = conf.iter().flat_map(|&c| [c, 1.0 - c]).collect();
    let probs = Tensor::matrix(4, 2, data).unwrap();
    let labels: Vec<usize> = correct.iter().map(|&ok| usize::from(!ok)).collect();
    let (value, table) = ece(&probs, &labels, 2).unwrap();
    assert!((value - 0.0375).abs() < 1e-12, "{value}");
    assert_eq!(table.rows[0].count, 0);
    assert_eq!(table.rows[1].count, 4);
    assert!((table.rows[1].mean_conf - 0.7125).abs() < 1e-12);
    assert_eq!(table.rows[1].accuracy, 0.75);
}

#[test]
fn ece_ignores_example_order() {
    let mut r = seeded(4);
    let probs = random_probs(&mut r, 50, 3);
    let labels: Vec<usize> = (0..50).map(|_| r.random_range(0..3)).collect();
    let order: Vec<usize> = (0..50).rev().collect();
    let shuffled = probs.select_rows(&order);
    let relabelled: Vec<usize> = order.iter().map(|&i| labels[i]).collect();
    let a = ece(&probs, &labels, 20).unwrap().0;
    let b = ece(&shuffled, &relabelled, 20).unwrap().0;
    assert!((a - b).abs() < 1e-15);
}

#[test]
fn calibrated_construction_has_tiny_ece() {
    let (bins, per) = (20, 1000);
    let mut data = Vec::new();
    let mut labels = Vec::new();
    for b in 0..bins {
        // two classes: confidences above one half only
        let conf = 0.5 + 0.5 * (b as f64 + 0.5) / bins as f64;
        let hits = (conf * per as f64).round() as usize;
        for i in 0..per {
            data.extend([conf, 1.0 - conf]);
            labels.push(usize::from(i >= hits));
        }
    }
    let probs = Tensor::matrix(labels.len(), 2, data).unwrap();
    let (value, _) = ece(&probs, &labels, bins).unwrap();
    assert!(value < 1.0 / (2.0 * per as f64), "{value}");
    let perfect = Tensor::matrix(3, 2, vec![1.0, 0.0, 0.0, 1.0, 1.0, 0.0]).unwrap();
    assert_eq!(ece(&perfect, &[0, 1, 0], 20).unwrap().0, 0.0);
}

#[test]
fn accuracy_and_nll_match_direct_sums() {
    let mut r = seeded(8);
    for _ in 0..20 {
        let n = r.random_range(1..100);
        let probs = random_probs(&mut r, n, 4);
        let labels: Vec<usize> = (0..n).map(|_| r.random_range(0..4)).collect();
        let mut hits = 0;
        let mut total = 0.0;
        for (i, &y) in labels.iter().enumerate() {
            let row = probs.row(i);
            if (0..4).all(|k| row[y] > row[k] || (row[y] == row[k] && y <= k)) {
                hits += 1;
            }
            total -= row[y].ln();
        }
        assert_eq!(accuracy(&probs, &labels).unwrap(), hits as f64 / n as f64);
        assert!((nll(&probs, &labels).unwrap() - total / n as f64).abs() < 1e-12);
    }
}

fn trained(method: Method) -> (MlpSpec, sabnn_core::data::Dataset, Artifact) {
    let spec = MlpSpec::uniform(vec![2, 8, 2], Activation::Tanh).unwrap();
    let ds = gen_two_moons(60, 0.2, 1).unwrap();
    let c =
        TrainConfig { epochs: 6, batch_size: 10, ensemble_size: 2, swag_rank: 3, ..TrainConfig::for_method(method) };
    let artifact = train(&c, &spec, &ds).unwrap().model;
    (spec, ds, artifact)
}

#[test]
fn predictions_are_distributions_for_every_method() {
    for method in Method::ALL {
        let (spec, ds, artifact) = trained(method);
        let probs = ensemble_predict(&artifact, &spec, ds.features(), 7, &mut seeded(0)).unwrap();
        for r in 0..probs.rows() {
            assert!(probs.row(r).iter().all(|&p| p >= 0.0));
            assert!((probs.row(r).iter().sum::<f64>() - 1.0).abs() < 1e-9, "{method}");
        }
        let again = ensemble_predict(&artifact, &spec, ds.features(), 7, &mut seeded(0)).unwrap();
        assert_eq!(probs, again);
        assert!(ensemble_predict(&artifact, &spec, ds.features(), 0, &mut seeded(0)).is_err());
    }
}

#[test]
fn ensemble_members_are_enumerated_and_averaged() {
    let (spec, ds, artifact) = trained(Method::DeepEnsemble);
    let Artifact::Ensemble { members } = &artifact else { panic!() };
    let p0 = softmax_rows(&mlp_forward(&spec, &members[0], ds.features()).unwrap());
    let p1 = softmax_rows(&mlp_forward(&spec, &members[1], ds.features()).unwrap());
    let probs = ensemble_predict(&artifact, &spec, ds.features(), 30, &mut seeded(1)).unwrap();
    for ((m, a), b) in probs.data().iter().zip(p0.data()).zip(p1.data()) {
        assert!((m - 0.5 * (a + b)).abs() < 1e-15);
    }
    let single = Artifact::Ensemble { members: vec![members[0].clone()] };
    assert_eq!(ensemble_predict(&single, &spec, ds.features(), 1, &mut seeded(1)).unwrap(), p0);
}

#[test]
fn report_is_consistent() {
    let (spec, ds, artifact) = trained(Method::Swag);
    let opts = EvalOptions {
        n_samples: 5,
        sharpness: Some(SharpnessOptions { samples: 3, ..Default::default() }),
        eigen: Some(EigenOptions { k: 3, iters: 50 }),
        ..Default::default()
    };
    let report = evaluate(&artifact, &spec, &ds, &opts).unwrap();
    assert_eq!(report.reliability.rows.len(), 20);
    assert_eq!(report.reliability.total(), ds.len());
    let s = report.sharpness_samples.as_ref().unwrap();
    assert_eq!(s.len(), 3);
    assert!(s.iter().all(|&v| v >= 0.0));
    assert!((report.sharpness.unwrap() - s.iter().sum::<f64>() / 3.0).abs() < 1e-15);
    let eig = report.eigenvalues.as_ref().unwrap();
    assert!(eig.values.windows(2).all(|w| w[0] >= w[1]));
    assert!(report.nll >= 0.0);
    assert_eq!(report, evaluate(&artifact, &spec, &ds, &opts).unwrap());
    let wrong = gen_two_moons(10, 0.1, 0).unwrap();
    let spec3 = MlpSpec::uniform(vec![2, 8, 3], Activation::Tanh).unwrap();
    assert!(evaluate(&artifact, &spec3, &wrong, &opts).is_err());
}

fn random_symmetric(r: &mut impl Rng, n: usize) -> DMatrix<f64> {
    let b = DMatrix::from_fn(n, n, |_, _| r.random_range(-1.0..1.0));
    b.transpose() * &b
}

fn dense_top(a: &DMatrix<f64>, k: usize) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(a.clone()).eigenvalues.iter().copied().collect();
    ev.sort_by(|x, y| y.total_cmp(x));
    ev.truncate(k);
    ev
}

#[test]
fn power_iteration_matches_dense_eigensolver() {
    let mut r = seeded(12);
    for trial in 0..10 {
        let a = random_symmetric(&mut r, 10);
        let expected = dense_top(&a, 5);
        let matvec = |v: &[f64]| Ok((&a * DMatrix::from_column_slice(10, 1, v)).as_slice().to_vec());
        let est = power_iteration(matvec, 10, 5, 5000, &mut seeded(trial)).unwrap();
        for (e, x) in est.values.iter().zip(&expected) {
            assert!((e - x).abs() / x.abs() < 1e-3, "trial {trial}: {:?} vs {expected:?}", est.values);
        }
        let ratio = expected[0] / expected[4];
        assert!((est.ratio - ratio).abs() / ratio < 1e-3);
    }
}

#[test]
fn hessian_spectrum_of_an_explicit_quadratic() {
    let mut r = seeded(13);
    let a = random_symmetric(&mut r, 10);
    let grad = |t: &[f64]| Ok((&a * DMatrix::from_column_slice(10, 1, t)).as_slice().to_vec());
    let theta: Vec<f64> = (0..10).map(|_| r.random_range(-1.0..1.0)).collect();
    let est = top_eigenvalues(grad, &theta, 5, 5000, &mut seeded(0)).unwrap();
    for (e, x) in est.values.iter().zip(dense_top(&a, 5)) {
        assert!((e - x).abs() / x.abs() < 1e-3);
    }
}
