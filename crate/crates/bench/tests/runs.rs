use std::fs;
use std::path::Path;

use spherelet::distance::{read_sgdm, DistanceKind, DistanceMatrix};
use spherelet::synth::{concentric_ellipses, euler_spiral_sampled, Sampling};
use spherelet_bench::config::{Fit, Manifold};
use spherelet_bench::experiments::{run_local_error, run_noisy_sweep};
use spherelet_bench::{run_experiment, Estimator, Experiment, ExperimentConfig, RunReport};

fn read_matrix(path: &Path, kind: DistanceKind) -> DistanceMatrix {
    read_sgdm(fs::File::open(path).unwrap(), kind).unwrap()
}

fn csv_rows(path: &Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(path).unwrap().records().map(Result::unwrap).collect()
}

#[test]
fn saved_matrices_reproduce_the_reported_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::preset(Experiment::GlobalError);
    cfg.n = 200;
    cfg.seeds = vec![4, 5];
    cfg.out = dir.path().to_path_buf();
    run_experiment(&cfg).unwrap();

    let gd = read_matrix(&dir.path().join("distances_GD.sgdm"), DistanceKind::Geodesic);
    let rows = csv_rows(&dir.path().join("errors.csv"));
    for (e, kind) in [
        ("D", DistanceKind::GlobalEuclidean),
        ("EG", DistanceKind::GraphEuclidean),
        ("SG", DistanceKind::GraphSpherical),
    ] {
        let m = read_matrix(&dir.path().join(format!("distances_{e}.sgdm")), kind);
        assert_eq!(m.len(), 200);
        let direct = gd.values().iter().zip(m.values()).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let row = rows
            .iter()
            .find(|r| &r[0] == "[0,1]" && &r[1] == "4" && &r[2] == e)
            .expect("row for the saved replication");
        let reported: f64 = row[7].parse().unwrap();
        assert!((direct - reported).abs() <= 1e-9 * (1.0 + reported), "{e}: {direct} vs {reported}");
    }
}

#[test]
fn manifest_describes_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::preset(Experiment::NoisySweep);
    cfg.seeds = vec![2];
    cfg.sweep.dense_n = 400;
    cfg.sweep.sizes = vec![40, 80];
    cfg.out = dir.path().to_path_buf();
    let summary = run_experiment(&cfg).unwrap();

    let text = fs::read_to_string(dir.path().join("manifest.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["experiment"], "noisy_sweep");
    assert_eq!(v["config_hash"], cfg.hash());
    assert_eq!(v["config_hash"].as_str().unwrap().len(), 64);
    assert_eq!(v["seeds"], serde_json::json!([2]));
    assert_eq!(v["config"]["sweep"]["sizes"], serde_json::json!([40, 80]));
    assert!(v["versions"]["spherelet_core"].is_string());
    assert!(v["wall_clock_seconds"].as_f64().unwrap() >= 0.0);
    let files: Vec<&str> = v["files"].as_array().unwrap().iter().map(|f| f.as_str().unwrap()).collect();
    for f in ["errors.csv", "errors_summary.csv", "distances_reference.sgdm", "distances_SG.sgdm"] {
        assert!(files.contains(&f), "{f} missing from {files:?}");
        assert!(dir.path().join(f).exists());
    }
    assert_eq!(summary.files.len(), files.len() + 1);

    // The output location does not change the hash.
    let mut moved = cfg.clone();
    moved.out = dir.path().join("elsewhere");
    assert_eq!(moved.hash(), cfg.hash());
    moved.n += 1;
    assert_ne!(moved.hash(), cfg.hash());
}

#[test]
fn circle_spherical_local_error_is_exact() {
    let mut cfg = ExperimentConfig::preset(Experiment::LocalError);
    cfg.manifold = Manifold::Circle { radius: 2.0 };
    cfg.n = 2000;
    cfg.local.base = 1.0;
    cfg.local.radius = 0.05;
    let report = run_local_error(&cfg).unwrap();
    assert!(report.pairs.len() >= 5);
    for p in &report.pairs {
        assert!(p.spherical <= 1e-10, "pair {}: {}", p.index, p.spherical);
        assert!(p.spherical_fitted <= 1e-8, "pair {}: {}", p.index, p.spherical_fitted);
        // Chord deficit on a circle of radius r is s³ / (24 r²) to leading order.
        let expected = p.gap.powi(3) / 96.0;
        assert!((p.euclidean - expected).abs() <= 0.01 * expected + 1e-15, "{} vs {expected}", p.euclidean);
    }
}

#[test]
fn full_subsample_of_clean_reference_has_zero_graph_error() {
    let mut cfg = ExperimentConfig::preset(Experiment::NoisySweep);
    cfg.noise_sigma = 0.0;
    cfg.seeds = vec![0, 1];
    cfg.estimators = vec![Estimator::EG];
    cfg.sweep.dense_n = 300;
    cfg.sweep.dense_k = 6;
    cfg.sweep.sizes = vec![300];
    cfg.sweep.k_fraction = 0.0;
    cfg.k = 6;
    let report = run_noisy_sweep(&cfg, None).unwrap();
    assert_eq!(report.errors.len(), 2);
    for e in &report.errors {
        assert_eq!(e.k, 6);
        assert!(e.frobenius.unwrap() <= 1e-9, "{:?}", e.frobenius);
    }
}

#[test]
fn clustering_from_csv_leaves_the_input_untouched() {
    let dir = tempfile::tempdir().unwrap();
    let e = concentric_ellipses(60, 3f64.sqrt() / 2.0, 0.0, 2.0, Sampling::Stratified, 3).unwrap();
    let labels = e.labels.unwrap();
    let mut text = String::from("id,x,y,shape\n");
    for (i, p) in e.cloud.points().enumerate() {
        let name = if labels[i] == 0 { "inner" } else { "outer" };
        text.push_str(&format!("{i},{:?},{:?},{name}\n", p[0], p[1]));
    }
    let input = dir.path().join("ellipses.csv");
    fs::write(&input, &text).unwrap();

    let mut cfg = ExperimentConfig::preset(Experiment::Clustering);
    cfg.input.path = Some(input.clone());
    cfg.input.label_column = Some("shape".into());
    cfg.input.ignore_columns = vec!["id".into()];
    cfg.seeds = vec![0, 1];
    cfg.estimators = vec![Estimator::D, Estimator::SG];
    cfg.out = dir.path().to_path_buf();
    let summary = run_experiment(&cfg).unwrap();

    assert_eq!(fs::read_to_string(&input).unwrap(), text);
    let RunReport::Apps(report) = summary.report else {
        panic!("clustering yields an application report")
    };
    assert!(report.metric(Estimator::SG, "ari").iter().all(|&a| (a - 1.0).abs() < 1e-12));
    assert!(report.metric(Estimator::D, "ari").iter().all(|&a| a < 0.5));
    let header = csv::Reader::from_path(dir.path().join("metrics.csv")).unwrap().headers().unwrap().clone();
    assert_eq!(&header[0], "replication");
    assert_eq!(&header[3], "ari");
    assert_eq!(&header[header.len() - 1], "flagged");
}

#[test]
fn input_named_like_an_output_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("metrics.csv");
    let text = "x,y,c\n0,0,a\n1,0,a\n0,1,b\n1,1,b\n";
    fs::write(&input, text).unwrap();
    let mut cfg = ExperimentConfig::preset(Experiment::Clustering);
    cfg.input.path = Some(input.clone());
    cfg.input.label_column = Some("c".into());
    cfg.estimators = vec![Estimator::D];
    cfg.seeds = vec![0];
    cfg.out = dir.path().to_path_buf();
    let err = run_experiment(&cfg).unwrap_err();
    assert_eq!(err.exit_code(), 1);
    assert_eq!(fs::read_to_string(&input).unwrap(), text);
}

#[test]
fn regression_from_csv_reports_rmse_per_estimator() {
    let dir = tempfile::tempdir().unwrap();
    let s = euler_spiral_sampled(200, 3.0, 4.0, Sampling::Stratified, 9).unwrap();
    let mut text = String::from("x,y,target\n");
    for (p, t) in s.cloud.points().zip(&s.params) {
        text.push_str(&format!("{:?},{:?},{:?}\n", p[0], p[1], (2.0 * t[0]).sin()));
    }
    let input = dir.path().join("curve.csv");
    fs::write(&input, &text).unwrap();

    let mut cfg = ExperimentConfig::preset(Experiment::Regression);
    cfg.input.path = Some(input);
    cfg.input.response_column = Some("target".into());
    cfg.fit = Fit::Centered;
    cfg.seeds = vec![0, 1, 2];
    cfg.out = dir.path().join("out");
    let summary = run_experiment(&cfg).unwrap();
    let RunReport::Apps(report) = summary.report else {
        panic!("regression yields an application report")
    };
    for e in Estimator::ALL {
        let rmse = report.metric(e, "rmse");
        assert_eq!(rmse.len(), 3, "{e}");
        assert!(rmse.iter().all(|r| r.is_finite() && *r < 0.5), "{e}: {rmse:?}");
    }
    assert!(cfg.out.join("metrics_summary.csv").exists());
}
