use std::path::Path;
use std::process::{Command, Output};

fn graphon(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_graphon")).args(args).current_dir(dir).output().unwrap()
}

fn ok(out: &Output) -> String {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn sample_estimate_intervene() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&graphon(&["sample", "--model", "sbm", "--n", "120", "--rho", "1", "--seed", "3", "--out", "net"], d));
    assert!(d.join("net.edges").exists() && d.join("net.json").exists());

    ok(&graphon(&["estimate", "--network", "net", "--lambda", "experiment", "--out", "est.json"], d));
    let est: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("est.json")).unwrap()).unwrap();
    assert_eq!(est["n"], 120);
    assert!(est["rank"].as_u64().unwrap() >= 1);

    let fixed: serde_json::Value =
        serde_json::from_str(&ok(&graphon(&["estimate", "--network", "net", "--rank", "3"], d))).unwrap();
    assert_eq!(fixed["rank"], 3);

    let dense: serde_json::Value =
        serde_json::from_str(&ok(&graphon(&["intervene", "--network", "net", "--gamma", "0.5", "--budget", "4"], d)))
            .unwrap();
    let cg: serde_json::Value = serde_json::from_str(&ok(&graphon(
        &["intervene", "--network", "net", "--gamma", "0.5", "--budget", "4", "--cg"],
        d,
    )))
    .unwrap();
    let x: Vec<f64> = serde_json::from_value(dense["theta_hat"].clone()).unwrap();
    let y: Vec<f64> = serde_json::from_value(cg["theta_hat"].clone()).unwrap();
    assert_eq!(x.len(), 120);
    assert!((x.iter().map(|v| v * v).sum::<f64>() - 4.0).abs() < 1e-8);
    assert!(x.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt() < 1e-5);
}

#[test]
fn experiment_and_summary_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let args = ["experiment", "holder", "--n", "20,40", "--reps", "2", "--seed", "5"];
    let a = ok(&graphon(&args, d));
    assert_eq!(a, ok(&graphon(&args, d)));
    assert_eq!(a.lines().count(), 5);
    ok(&graphon(&[&args[..], &["--out", "runs/h.csv"]].concat(), d));
    assert_eq!(std::fs::read_to_string(d.join("runs/h.csv")).unwrap(), a);
    let s = ok(&graphon(&["summarize", "runs/h.csv"], d));
    assert!(s.starts_with("schema_version,experiment,method,n,count,median_gap"));
    assert_eq!(s.lines().count(), 3);
}

#[test]
fn config_file_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("c.json"),
        r#"{"experiment":"holder","n_grid":[20],"rho":{"rule":"fixed","value":1.0},"gamma":0.5,
            "budget":{"rule":"fixed","value":1.0},"lambda":{"rule":"experiment"},"replications":1,"base_seed":1}"#,
    )
    .unwrap();
    assert_eq!(ok(&graphon(&["experiment", "holder", "--config", "c.json"], d)).lines().count(), 2);

    let wrong = graphon(&["experiment", "sbm", "--config", "c.json"], d);
    assert_eq!(wrong.status.code(), Some(2));
    let bad = graphon(&["experiment", "holder", "--n", "40,20"], d);
    assert_eq!(bad.status.code(), Some(2));
    let unstable = graphon(&["experiment", "holder", "--n", "20", "--reps", "1", "--gamma", "5"], d);
    assert_eq!(unstable.status.code(), Some(3));
    let missing = graphon(&["estimate", "--network", "nothing"], d);
    assert_eq!(missing.status.code(), Some(1));
}
