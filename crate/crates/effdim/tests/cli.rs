//! End-to-end checks of the command-line interface: determinism, format
//! parity, exit codes, and a few pinned values.

use std::process::Command;

fn effdim(args: &[&str]) -> (String, String, i32) {
    let out = Command::new(env!("CARGO_BIN_EXE_effdim"))
        .args(args)
        .output()
        .expect("binary runs");
    (
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
        out.status.code().unwrap_or(-1),
    )
}

#[test]
fn identical_flags_give_identical_bytes() {
    for args in [
        vec!["table1", "--format", "csv"],
        vec!["table1", "--format", "json", "--mode", "strict"],
        vec!["bounds", "--weights", r#"{"kind":"product","eta":2}"#, "--eps", "0.01"],
        vec!["anova", "--fn", "gfunction", "--a", "0,0,3", "--method", "midpoint", "--n", "128"],
        vec!["meandim", "--fn", "linear_sum", "--d", "8", "--n", "2048"],
        vec!["mcqmc", "--fn", "linear_sum", "--d", "4", "--n", "256", "--replicates", "4"],
    ] {
        let (a, _, code_a) = effdim(&args);
        let (b, _, code_b) = effdim(&args);
        assert_eq!(code_a, 0, "{args:?} failed");
        assert_eq!(code_a, code_b);
        assert_eq!(a, b, "outputs differ for {args:?}");
    }
}

#[test]
fn thread_cap_does_not_change_results() {
    let args = [
        "anova", "--fn", "gfunction", "--a", "0,0,3", "--method", "midpoint", "--n", "200",
    ];
    let run_with = |threads: &str| {
        let out = Command::new(env!("CARGO_BIN_EXE_effdim"))
            .args(args)
            .env("EFFDIM_THREADS", threads)
            .output()
            .unwrap();
        String::from_utf8(out.stdout).unwrap()
    };
    let single = run_with("1");
    let multi = run_with("8");
    assert_eq!(single, multi, "chunked reduction must be thread-count invariant");
}

#[test]
fn csv_and_json_encode_the_same_table() {
    let (csv, _, _) = effdim(&["table1", "--format", "csv", "--mode", "nonstrict"]);
    let (json_text, _, _) = effdim(&["table1", "--format", "json", "--mode", "nonstrict"]);
    let parsed: serde_json::Value = serde_json::from_str(&json_text).unwrap();
    let rows = parsed["rows"].as_array().unwrap();

    let csv_rows: Vec<Vec<&str>> = csv
        .lines()
        .skip(1)
        .filter(|l| !l.is_empty())
        .map(|l| l.split(',').collect())
        .collect();
    assert_eq!(rows.len(), csv_rows.len());
    for (jr, cr) in rows.iter().zip(&csv_rows) {
        let eps_json = jr["epsilon"].as_f64().unwrap();
        let eps_csv: f64 = cr[0].parse().unwrap();
        assert!((eps_json - eps_csv).abs() <= 1e-12 * eps_json.abs());
        assert_eq!(jr["eta"].as_f64().unwrap(), cr[1].parse::<f64>().unwrap());
        assert_eq!(jr["trunc_nonstrict"].as_str().unwrap(), cr[2]);
        assert_eq!(jr["super_nonstrict"].as_str().unwrap(), cr[3]);
        assert_eq!(jr["trunc_boundary"].as_bool().unwrap().to_string(), cr[4]);
    }
}

#[test]
fn csv_and_json_encode_the_same_interactions() {
    let args_base = [
        "interactions",
        "--weights",
        r#"{"kind":"product","eta":2}"#,
        "--d",
        "10",
        "--eps",
        "0.001",
        "--max-order",
        "3",
    ];
    let (csv, _, _) = effdim(&[&args_base[..], &["--format", "csv"]].concat());
    let (json_text, _, _) = effdim(&[&args_base[..], &["--format", "json"]].concat());
    let parsed: serde_json::Value = serde_json::from_str(&json_text).unwrap();
    let subsets = parsed["subsets"].as_array().unwrap();
    // subset names are quoted and may contain commas; split at the last one
    let csv_rows: Vec<Vec<String>> = csv
        .lines()
        .skip(1)
        .filter(|l| !l.is_empty())
        .map(|l| {
            let (subset, bound) = l.rsplit_once(',').unwrap();
            vec![subset.trim_matches('"').to_string(), bound.to_string()]
        })
        .collect();
    assert_eq!(subsets.len(), csv_rows.len());
    for (js, cr) in subsets.iter().zip(&csv_rows) {
        assert_eq!(js["subset"].as_str().unwrap(), cr[0]);
        let bj = js["bound"].as_f64().unwrap();
        let bc: f64 = cr[1].parse().unwrap();
        assert!((bj - bc).abs() <= 1e-12 * bj.abs().max(1.0));
    }
    // sorted by bound descending
    let bounds: Vec<f64> = subsets.iter().map(|s| s["bound"].as_f64().unwrap()).collect();
    for w in bounds.windows(2) {
        assert!(w[0] >= w[1] - 1e-15);
    }
}

#[test]
fn bounds_pins_the_quadratic_decay_example() {
    let (out, _, code) = effdim(&[
        "bounds",
        "--weights",
        r#"{"kind":"product","eta":2}"#,
        "--eps",
        "0.01",
    ]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!((v["rho_star"].as_f64().unwrap() - std::f64::consts::PI).abs() < 1e-12);
    assert_eq!(v["argmin"].as_str().unwrap(), "{1}");
    assert_eq!(v["class"].as_str().unwrap(), "StronglyTractable");
    assert_eq!(v["nonstrict"]["trunc"].as_str().unwrap(), "10");
    assert_eq!(v["strict"]["trunc"].as_str().unwrap(), "9");
    assert!(v["nonstrict"]["trunc_boundary"].as_bool().unwrap());
    assert_eq!(v["nonstrict"]["super"].as_str().unwrap(), "2");
    assert_eq!(v["strict"]["super"].as_str().unwrap(), "2");
}

#[test]
fn infinity_serializes_as_inf_string() {
    let (out, _, _) = effdim(&[
        "bounds",
        "--weights",
        r#"{"kind":"product","eta":0}"#,
        "--eps",
        "0.1",
        "--mode",
        "nonstrict",
    ]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["nonstrict"]["trunc"].as_str().unwrap(), "inf");

    let (csv, _, _) = effdim(&["table1", "--format", "csv", "--mode", "nonstrict"]);
    assert!(csv.contains(",inf,"), "CSV should print inf for unbounded cells");
}

#[test]
fn usage_errors_exit_2() {
    let (_, err, code) = effdim(&["anova", "--fn", "nosuchfn"]);
    assert_eq!(code, 2);
    assert!(err.contains("unknown integrand"));

    let (_, _, code) = effdim(&["not-a-subcommand"]);
    assert_eq!(code, 2);

    let (_, err, code) = effdim(&["bounds", "--weights", r#"{"kind":"wat"}"#, "--eps", "0.1"]);
    assert_eq!(code, 2);
    assert!(err.contains("unknown weight kind"));
}

#[test]
fn numerical_errors_exit_1_with_error_json() {
    // POD weights violate the index condition, so the truncation bound
    // refuses to vouch for them
    let (_, err, code) = effdim(&[
        "bounds",
        "--weights",
        r#"{"kind":"pod","alpha":1,"beta":3}"#,
        "--eps",
        "0.01",
        "--d",
        "5",
    ]);
    assert_eq!(code, 1);
    let v: serde_json::Value = serde_json::from_str(err.trim()).unwrap();
    assert_eq!(v["error"]["kind"].as_str().unwrap(), "ConditionViolated");

    let (_, err, code) = effdim(&["asymptote", "--eps", "0.5", "--eta", "2"]);
    assert_eq!(code, 1);
    let v: serde_json::Value = serde_json::from_str(err.trim()).unwrap();
    assert_eq!(v["error"]["kind"].as_str().unwrap(), "DomainTooLarge");
}

#[test]
fn output_flag_writes_the_file() {
    let dir = std::env::temp_dir().join("effdim_cli_test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("table.csv");
    let (stdout, _, code) = effdim(&[
        "table1",
        "--format",
        "csv",
        "--mode",
        "strict",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert!(stdout.is_empty());
    let contents = std::fs::read_to_string(&path).unwrap();
    assert!(contents.starts_with("epsilon,eta,trunc,super"));
    assert_eq!(contents.lines().count(), 13);
    std::fs::remove_file(&path).unwrap();
}

#[test]
fn anova_json_reports_components_and_dimensions() {
    let (out, _, code) = effdim(&[
        "anova",
        "--fn",
        "gfunction",
        "--a",
        "0,0,3",
        "--method",
        "midpoint",
        "--n",
        "256",
    ]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!((v["mu"].as_f64().unwrap() - 1.0).abs() < 1e-3);
    let c1 = v["components"]["{1}"].as_f64().unwrap();
    assert!((c1 - 1.0 / 3.0).abs() < 1e-3);
    assert_eq!(v["superposition_dimension"].as_u64().unwrap(), 2);
    assert!(v["mean_dimension"].as_f64().unwrap() > 1.0);
}

#[test]
fn poincare_and_estimator_commands_run() {
    let (out, _, code) = effdim(&["poincare", "--fn", "sine_half_period"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let ratio = v["ratios"][0]["ratio"].as_f64().unwrap();
    assert!((ratio - std::f64::consts::PI.powi(2)).abs() < 1e-8);

    let (out, _, code) = effdim(&["poincare", "--format", "csv"]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().count(), 21, "header plus twenty functions");

    let (out, _, code) = effdim(&["sobol", "--fn", "prod_centered", "--d", "2", "--n", "4096"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["tau2"].as_array().unwrap().len(), 2);

    let (out, _, code) = effdim(&[
        "mcqmc",
        "--fn",
        "linear_sum",
        "--d",
        "8",
        "--n",
        "1024",
        "--replicates",
        "16",
    ]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!(v["rmse_qmc"].as_f64().unwrap() < v["rmse_mc"].as_f64().unwrap());
}
