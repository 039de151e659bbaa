use super::*;

fn setup1(k: usize, p: Vec<f64>, lambdas: Vec<f64>) -> ExperimentConfig {
    ExperimentConfig::from_json(&format!(
        r#"{{"mode": "setup1", "n": 60, "k": {k}, "p": {p:?}, "lambdas": {lambdas:?}}}"#
    ))
    .unwrap()
}

#[test]
fn setup2_worked_example() {
    let p = derive_setup2_probs(4, 0.2, 0.05).unwrap();
    for (a, b) in p.iter().zip([0.275, 0.225, 0.175, 0.125]) {
        assert!((a - b).abs() < 1e-15, "{p:?}");
    }
    assert!((p.iter().sum::<f64>() + 0.2 - 1.0).abs() <= 1e-15);
}

#[test]
fn setup2_single_group_and_errors() {
    assert_eq!(derive_setup2_probs(1, 0.3, 0.7).unwrap(), vec![0.7]);
    assert!(derive_setup2_probs(4, 0.2, 0.2).is_err());
    assert!(derive_setup2_probs(0, 0.2, 0.0).is_err());
    assert!(derive_setup2_probs(2, 1.0, 0.0).is_err());
    assert!(matches!(
        derive_setup2_probs(3, 0.1, -0.1),
        Err(SyncError::Config(_))
    ));
}

#[test]
fn setup2_sums_exactly() {
    for k in 1..=6 {
        for &eta in &[0.0, 0.1, 0.3, 0.55, 0.7] {
            if let Ok(p) = derive_setup2_probs(k, eta, 0.01) {
                assert!(
                    (p.iter().sum::<f64>() + eta - 1.0).abs() <= 1e-15,
                    "{k} {eta}"
                );
            }
        }
    }
}

#[test]
fn equal_probabilities_are_skipped() {
    let cfg = ExperimentConfig::from_json(
        r#"{"mode": "setup2", "n": 20, "k": 2, "gamma": 0.0, "lambda": 1.0, "etas": [0.0]}"#,
    )
    .unwrap();
    let out = run_sweep(&cfg, Some(1)).unwrap();
    assert!(out.rows.is_empty());
    assert_eq!(out.meta.skipped.len(), 1);
}

#[test]
fn trivial_sweep_single_row() {
    let cfg = setup1(1, vec![1.0], vec![1.0]);
    let out = run_sweep(&cfg, Some(1)).unwrap();
    assert_eq!(out.rows.len(), 1);
    assert!((out.rows[0].mean_corr - 1.0).abs() < 1e-12);
    assert_eq!(out.rows[0].std_corr, 0.0);
}

#[test]
fn row_count_arithmetic() {
    let mut cfg = setup1(2, vec![0.5, 0.3], vec![0.5, 0.7, 0.9]);
    cfg.solvers = vec![Solver::EigH, Solver::EigR];
    cfg.mode = Mode::Compare;
    let out = run_sweep(&cfg, None).unwrap();
    assert_eq!(out.rows.len(), 3 * 2 * 2);
    assert_eq!(out.meta.diagnostics.len(), 3 * 2);
}

#[test]
fn csv_round_trip_and_header() {
    let cfg = setup1(2, vec![0.5, 0.3], vec![0.8]);
    let out = run_sweep(&cfg, Some(2)).unwrap();
    let mut buf = Vec::new();
    write_csv(&mut buf, &out.rows).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert!(text.starts_with(CSV_HEADER));
    assert!(text.lines().nth(1).unwrap().contains(",,"));
    assert_eq!(read_csv(&buf[..]).unwrap(), out.rows);
}

#[test]
fn config_errors_are_collected() {
    let bad =
        ExperimentConfig::from_json(r#"{"mode": "setup1", "n": 0, "k": 2, "p": [0.5]}"#).unwrap();
    let msg = bad.validate().unwrap_err().to_string();
    assert!(
        msg.contains("`n`") && msg.contains("lambdas") && msg.contains("`p`"),
        "{msg}"
    );
    assert!(ExperimentConfig::from_json(r#"{"mode": "setup1", "bogus": 1}"#).is_err());
    let inconsistent = ExperimentConfig::from_json(
        r#"{"mode": "setup1", "n": 10, "k": 1, "p": [0.5], "eta": 0.1, "lambdas": [1.0]}"#,
    )
    .unwrap();
    assert!(inconsistent.validate().is_err());
}

#[test]
fn config_json_round_trip() {
    let cfg = setup1(2, vec![0.5, 0.3], vec![0.8]);
    assert_eq!(ExperimentConfig::from_json(&cfg.to_json()).unwrap(), cfg);
}

fn row(solver: Solver, group: usize, lambda: f64, mean: f64) -> SweepRow {
    SweepRow {
        mode: "setup1".into(),
        solver,
        n: 10,
        k: 2,
        lambda,
        eta: 0.2,
        gamma: None,
        group,
        mean_corr: mean,
        std_corr: 0.05,
        trials: 4,
    }
}

#[test]
fn plot_polylines_and_markers() {
    let mut rows = Vec::new();
    for g in 1..=2 {
        for i in 0..5 {
            rows.push(row(
                Solver::EigH,
                g,
                0.2 * (i + 1) as f64,
                0.5 + 0.1 * i as f64 / g as f64,
            ));
        }
    }
    let svg = render_svg(&rows).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 2);
    assert_eq!(svg.matches("<polygon").count(), 2);
    for line in svg.lines().filter(|l| l.starts_with("<polyline")) {
        assert_eq!(
            line.split("points=\"")
                .nth(1)
                .unwrap()
                .split('"')
                .next()
                .unwrap()
                .split(' ')
                .count(),
            5
        );
    }
    assert!(svg.contains("±1 std"));
    assert_eq!(svg, render_svg(&rows).unwrap());

    let single = render_svg(&rows[..1]).unwrap();
    assert_eq!(single.matches("<circle").count(), 1);
    assert_eq!(single.matches("<polygon").count(), 0);

    assert!(render_svg(&[]).is_err());
    let mut mixed = rows.clone();
    mixed[0].mode = "setup2".into();
    assert!(render_svg(&mixed).is_err());
}
