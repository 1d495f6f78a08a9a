use std::process::{Command, Output};

fn pureid(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pureid"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> (i32, serde_json::Value) {
    let mut all = args.to_vec();
    all.push("--json");
    let out = pureid(&all);
    let v = serde_json::from_slice(&out.stdout).expect("valid json");
    (out.status.code().unwrap(), v)
}

fn close(v: &serde_json::Value, want: f64, tol: f64) -> bool {
    (v.as_f64().unwrap() - want).abs() <= tol
}

#[test]
fn dims_table() {
    let (code, r) = json(&["dims", "--d", "3"]);
    assert_eq!(code, 0);
    assert_eq!(r["values"]["dim_vs"], 10.0);
    assert_eq!(r["values"]["dim_va"], 1.0);
    assert_eq!(r["values"]["dim_vm"], 16.0);
    let (code, r) = json(&["dims", "--da", "2", "--db", "2"]);
    assert_eq!(code, 0);
    assert_eq!(r["values"]["split_residual"], 0.0);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(pureid(&["dims", "--d", "1"]).status.code(), Some(2));
    assert_eq!(
        pureid(&["minerr", "--d", "2", "--eta1", "1.5"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        pureid(&["minerr", "--d", "2", "--locc"]).status.code(),
        Some(2)
    );
    assert_eq!(pureid(&["dims", "--da", "2"]).status.code(), Some(2));
}

#[test]
fn minerr_values() {
    let (code, r) = json(&["minerr", "--d", "2", "--eta1", "0.5"]);
    assert_eq!(code, 0);
    assert!(close(&r["values"]["p_max"], 0.6443376, 1e-7));
    assert!(r["checks"][0]["diff"].as_f64().unwrap() < 1e-9);
    let (code, r) = json(&[
        "minerr",
        "--da",
        "2",
        "--db",
        "2",
        "--eta1",
        "0.3",
        "--locc",
        "--baseline",
    ]);
    assert_eq!(code, 0);
    assert!(close(&r["values"]["baseline_no_copies"], 0.7, 1e-15));
    let trace = r["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"].as_str().unwrap().starts_with("tr[E1_L"))
        .unwrap();
    assert!(trace["diff"].as_f64().unwrap() < 1e-9);
}

#[test]
fn unamb_values() {
    let (code, r) = json(&["unamb", "--da", "2", "--db", "2"]);
    assert_eq!(code, 0);
    assert!(close(&r["values"]["p_max"], 0.25, 1e-12));
    assert!(close(&r["values"]["p_max_locc"], 0.2375, 1e-12));
    assert!(close(&r["values"]["gap"], 0.0125, 1e-12));
    let (code, r) = json(&["unamb", "--da", "2", "--db", "3"]);
    assert_eq!(code, 0);
    assert!(close(&r["values"]["p_max"], 5.0 / 18.0, 1e-11));
    assert!(close(&r["values"]["p_max_locc"], 11.0 / 42.0, 1e-11));
}

#[test]
fn unamb_simulation_has_no_errors() {
    let (code, r) = json(&[
        "unamb",
        "--da",
        "2",
        "--db",
        "2",
        "--simulate",
        "--n",
        "20000",
        "--seed",
        "7",
    ]);
    assert_eq!(code, 0);
    assert_eq!(r["monte_carlo"]["errors"], 0);
    assert_eq!(r["monte_carlo"]["n_trials"], 20000);
}

#[test]
fn injected_fault_fails() {
    let out = pureid(&["unamb", "--da", "2", "--db", "2", "--inject-alpha", "0.7"]);
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("feasibility"), "{text}");
    assert!(text.contains("0.7"));
}

#[test]
fn same_seed_same_bytes_across_workers() {
    let base = [
        "minerr",
        "--da",
        "2",
        "--db",
        "2",
        "--locc",
        "--simulate",
        "--n",
        "5000",
        "--seed",
        "11",
        "--json",
    ];
    let run = |w: &str| {
        let mut args = base.to_vec();
        args.extend(["--workers", w]);
        pureid(&args).stdout
    };
    let one = run("1");
    assert!(!one.is_empty());
    assert_eq!(one, run("4"));
}

#[test]
fn csv_and_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.csv");
    let out = pureid(&[
        "unamb",
        "--d",
        "3",
        "--csv",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("name,relation,analytic,oracle,diff,tolerance,pass")
    );
    assert!(lines.all(|l| l.ends_with(",true")));
}
