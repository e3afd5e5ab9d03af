use sabnn_core::data::*;
use sabnn_core::Error;
use std::io::Write;

#[test]
fn noiseless_moons_lie_on_unit_circles() {
    let ds = gen_two_moons(200, 0.0, 1).unwrap();
    for (r, &y) in ds.labels().iter().enumerate() {
        let p = ds.features().row(r);
        let (cx, cy) = if y == 0 { (0.0, 0.0) } else { (1.0, 0.5) };
        assert!(((p[0] - cx).powi(2) + (p[1] - cy).powi(2) - 1.0).abs() < 1e-9);
    }
    assert_eq!(ds.labels().iter().filter(|&&y| y == 0).count(), 100);
    assert_eq!(ds.num_classes(), 2);
}

#[test]
fn generators_are_deterministic() {
    assert_eq!(gen_two_moons(64, 0.2, 9).unwrap(), gen_two_moons(64, 0.2, 9).unwrap());
    assert_ne!(gen_two_moons(64, 0.2, 9).unwrap(), gen_two_moons(64, 0.2, 10).unwrap());
    let centers = vec![vec![0.0, 0.0], vec![3.0, 1.0], vec![-2.0, 4.0]];
    assert_eq!(gen_gaussian_blobs(30, &centers, 0.5, 4).unwrap(), gen_gaussian_blobs(30, &centers, 0.5, 4).unwrap());
    assert!(gen_two_moons(7, 0.1, 0).is_err());
    assert!(gen_gaussian_blobs(31, &centers, 0.5, 4).is_err());
}

#[test]
fn blobs_concentrate_on_their_centers() {
    let centers = vec![vec![0.0, 0.0], vec![3.0, 1.0], vec![-2.0, 4.0]];
    let exact = gen_gaussian_blobs(9, &centers, 0.0, 1).unwrap();
    for (r, &y) in exact.labels().iter().enumerate() {
        assert_eq!(exact.features().row(r), centers[y].as_slice());
    }
    let (n, spread) = (30_000, 0.7);
    let ds = gen_gaussian_blobs(n, &centers, spread, 2).unwrap();
    let per = (n / 3) as f64;
    for (c, center) in centers.iter().enumerate() {
        let mut mean = [0.0; 2];
        for (r, _) in ds.labels().iter().enumerate().filter(|(_, &y)| y == c) {
            for (m, v) in mean.iter_mut().zip(ds.features().row(r)) {
                *m += v / per;
            }
        }
        for (m, t) in mean.iter().zip(center) {
            assert!((m - t).abs() < 3.0 * spread / per.sqrt());
        }
    }
}

#[test]
fn reads_the_basic_example() {
    let ds = read_csv("1.0,2.0,0\n3.0,4.0,1".as_bytes(), CsvOptions::default()).unwrap();
    assert_eq!(ds.features().shape(), &[2, 2]);
    assert_eq!(ds.features().data(), &[1.0, 2.0, 3.0, 4.0]);
    assert_eq!(ds.labels(), &[0, 1]);
    let opts = CsvOptions { has_header: true, ..Default::default() };
    let with_header = read_csv("a,b,label\n1.0,2.0,0\n3.0,4.0,1\n".as_bytes(), opts).unwrap();
    assert_eq!(with_header, ds);
    let first = CsvOptions { label_last: false, ..Default::default() };
    let label_first = read_csv("0,1.0,2.0\n1,3.0,4.0\n".as_bytes(), first).unwrap();
    assert_eq!(label_first, ds);
}

fn csv_error_row(text: &str, opts: CsvOptions) -> usize {
    match read_csv(text.as_bytes(), opts) {
        Err(Error::Csv { row, .. }) => row,
        other => panic!("expected a CSV error, got {other:?}"),
    }
}

#[test]
fn malformed_rows_report_their_row() {
    let d = CsvOptions::default();
    assert_eq!(csv_error_row("1,2,0\n1,0\n", d), 2);
    assert_eq!(csv_error_row("1,2,0\n1,x,1\n3,4,0\n", d), 2);
    assert_eq!(csv_error_row("1,2,0\n1,2,0\n1,2,-1\n", d), 3);
    assert_eq!(csv_error_row("1,2,0\n1,inf,1\n", d), 2);
    assert_eq!(csv_error_row("1,2,0\n1,2,0.5\n", d), 2);
    let declared = CsvOptions { num_classes: Some(2), has_header: true, ..d };
    assert_eq!(csv_error_row("x,y,l\n1,2,0\n1,2,2\n", declared), 3);
}

#[test]
fn csv_round_trip_through_a_file() {
    let ds = gen_two_moons(50, 0.3, 5).unwrap();
    let mut file = tempfile::NamedTempFile::new().unwrap();
    file.write_all(ds.to_canonical_csv().as_bytes()).unwrap();
    let back = load_csv(file.path(), CsvOptions::default()).unwrap();
    assert_eq!(back.labels(), ds.labels());
    for (a, b) in back.features().data().iter().zip(ds.features().data()) {
        assert!((a - b).abs() <= 1e-12);
    }
    assert_eq!(back.fingerprint(), ds.fingerprint());
}

#[test]
fn split_normalizes_with_train_statistics() {
    let ds = gen_two_moons(101 * 2, 0.2, 3).unwrap();
    let (train, test) = split_normalize(&ds, 0.7, 8).unwrap();
    assert_eq!(train.len() + test.len(), ds.len());
    let (n, d) = (train.len() as f64, train.dim());
    for j in 0..d {
        let col: Vec<f64> = (0..train.len()).map(|r| train.features().row(r)[j]).collect();
        let mean = col.iter().sum::<f64>() / n;
        let std = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        assert!(mean.abs() < 1e-10 && (std - 1.0).abs() < 1e-10);
    }
    assert_eq!(train.normalization(), test.normalization());
    let (again, _) = split_normalize(&ds, 0.7, 8).unwrap();
    assert_eq!(again, train);
    let (other, _) = split_normalize(&ds, 0.7, 9).unwrap();
    assert_ne!(other, train);
}

#[test]
fn split_rejects_empty_sides() {
    let ds = gen_two_moons(4, 0.1, 0).unwrap();
    assert!(split_normalize(&ds, 0.99, 0).is_err());
    assert!(split_normalize(&ds, 0.01, 0).is_err());
    assert!(split_normalize(&ds, 1.0, 0).is_err());
}
