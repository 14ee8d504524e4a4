use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tness"))
}

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json_close(a: &Value, b: &Value, path: &str) {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => {
            let (x, y) = (x.as_f64().unwrap(), y.as_f64().unwrap());
            assert!((x - y).abs() <= 1e-8 * y.abs().max(1.0), "{path}: {x} vs {y}");
        }
        (Value::Object(x), Value::Object(y)) => {
            assert_eq!(x.keys().collect::<Vec<_>>(), y.keys().collect::<Vec<_>>(), "{path}");
            for (k, v) in x {
                json_close(v, &y[k], &format!("{path}.{k}"));
            }
        }
        (Value::Array(x), Value::Array(y)) => {
            assert_eq!(x.len(), y.len(), "{path}");
            for (i, (u, v)) in x.iter().zip(y).enumerate() {
                json_close(u, v, &format!("{path}[{i}]"));
            }
        }
        _ => assert_eq!(a, b, "{path}"),
    }
}

#[test]
fn two_point_narrow_fit() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("two.txt");
    std::fs::write(&f, "0\n2\n").unwrap();
    let o = run(&["fit", f.to_str().unwrap(), "--model", "narrow"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["narrow"]["beta"][0], 1.0);
    assert_eq!(v["narrow"]["sigma"], 1.0);
    assert_eq!(v["narrow"]["m"], "inf");
}

#[test]
fn wide_fit_matches_golden() {
    let o = run(&["fit", data("normal_sample.txt").to_str().unwrap(), "--estimand", "quantile:0.75"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let got: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let want: Value = serde_json::from_str(&std::fs::read_to_string(data("normal_sample_fit.json")).unwrap()).unwrap();
    json_close(&got, &want, "$");
    // heavy enough tails to leave the corner, yet m is large
    assert!(got["wide"]["m"].as_f64().unwrap() > 10.0);
}

#[test]
fn reads_stdin() {
    use std::io::Write;
    let mut child = bin()
        .args(["fit", "-", "--model", "narrow", "--format", "text"])
        .stdin(std::process::Stdio::piped())
        .stdout(std::process::Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(b"1 2 3 4\n").unwrap();
    let o = child.wait_with_output().unwrap();
    assert!(o.status.success());
    assert!(stdout(&o).contains("beta = [2.500000]"));
}

#[test]
fn regression_fit() {
    let o = run(&["fit", "--regression", data("regression_sample.csv").to_str().unwrap()]);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["p"], 3);
    assert_eq!(v["coefficients"][1], "dose");
    let narrow = v["narrow"]["loglik"].as_f64().unwrap();
    assert!(v["wide"]["loglik"].as_f64().unwrap() >= narrow);
}

#[test]
fn empty_input_is_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("empty.txt");
    std::fs::write(&f, "").unwrap();
    let o = run(&["fit", f.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("insufficient data"));
}

#[test]
fn unknown_flag_and_rule_rejected() {
    assert_eq!(run(&["risk", "--bogus"]).status.code(), Some(2));
    let o = run(&["risk", "--rules", "nonsense"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    for name in ["narrow", "wide", "ratio", "eb", "vague", "pre", "lim"] {
        assert!(err.contains(name), "{err}");
    }
}

#[test]
fn help_lists_names() {
    let out = stdout(&run(&["--help"]));
    for name in tness::compromise::RULE_NAMES.iter().chain(tness::estimand::ESTIMAND_NAMES.iter()) {
        assert!(out.contains(name), "help lacks {name}");
    }
}

#[test]
fn narrow_risk_column_is_a_squared() {
    let o = run(&["risk", "--rules", "narrow"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut rows = 0;
    for line in text.lines().skip(1) {
        let (a, r) = line.split_once(',').unwrap();
        let a: f64 = a.parse().unwrap();
        assert_eq!(r, format!("{:.4}", a * a));
        rows += 1;
    }
    assert_eq!(rows, 101);
}

#[test]
fn mad_risk_cross_path() {
    let o = run(&["risk", "--estimand", "mad", "--sigma0", "1", "--rules", "wide,pre,eb"]);
    let cli = tness::risk::RiskTable::from_csv(&stdout(&o)).unwrap();
    let base = tness::risk::risk_table(&cli.a_grid, &[tness::compromise::ARule::Wide]).unwrap();
    for (i, r) in base.curves[0].values.iter().enumerate() {
        let want = (r / 12.0 + 1.0) / std::f64::consts::PI;
        assert!((cli.curves[0].values[i] - want).abs() <= 5e-5);
    }
}

#[test]
fn risk_csv_round_trip_and_svg() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("r.csv");
    let svg = dir.path().join("r.svg");
    let (csv_s, svg_s) = (csv.to_str().unwrap(), svg.to_str().unwrap());
    assert!(run(&["risk", "--out", csv_s, "--svg", svg_s]).status.success());
    let first = std::fs::read_to_string(&csv).unwrap();
    let o = run(&["risk", "--from", csv_s]);
    assert_eq!(stdout(&o), first);
    let plot = std::fs::read_to_string(&svg).unwrap();
    assert!(plot.starts_with("<svg") && plot.matches("<polyline").count() == 7);
    assert!(plot.contains("stroke-dasharray=\"2,4\"") && plot.contains("stroke-dasharray=\"8,5\""));
}

#[test]
fn tolerance_reports() {
    let t = stdout(&run(&["tolerance", "--n", "100", "--family", "t"]));
    assert!(t.contains("m_min = 14.58"), "{t}");
    let t1 = stdout(&run(&["tolerance", "--n", "1"]));
    assert!(t1.contains("m_min = 1.4581"), "{t1}");
    let mix = stdout(&run(&["tolerance", "--n", "100", "--family", "mixture", "--json"]));
    let v: Value = serde_json::from_str(&mix).unwrap();
    assert!((v["var_s_bound"].as_f64().unwrap() - 0.03429).abs() < 5e-6);
    let q = stdout(&run(&["tolerance", "--family", "quasi-t", "--json"]));
    let v: Value = serde_json::from_str(&q).unwrap();
    assert!((v["kappa"].as_f64().unwrap() - 1.895).abs() < 0.02);
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let outs: Vec<String> = (0..2)
        .map(|i| {
            let p = dir.path().join(format!("s{i}.json"));
            let o = run(&[
                "simulate", "--kind", "corner", "--n", "2000", "--delta", "0", "--replicates", "2000", "--seed", "42",
                "--out", p.to_str().unwrap(),
            ]);
            assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
            assert!(stdout(&o).starts_with("Corner"));
            std::fs::read_to_string(p).unwrap()
        })
        .collect();
    assert_eq!(outs[0], outs[1]);
    let v: Value = serde_json::from_str(&outs[0]).unwrap();
    let f = v["corner_freq"].as_f64().unwrap();
    assert!((0.45..=0.55).contains(&f), "{f}");
    for key in ["config", "per_rule", "corner_freq", "agreement", "coverage", "excluded", "seed"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn simulate_flag_conflicts() {
    let o = run(&["simulate", "--kind", "power", "--n", "100", "--delta", "1", "--m", "3"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["simulate", "--kind", "power", "--replicates", "0"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["simulate", "--kind", "sideways"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn simulate_power_at_threshold() {
    let o = run(&["simulate", "--kind", "power", "--n", "2000", "--a", "0.8399", "--replicates", "1000", "--seed", "3"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let r = v["rejection"].as_f64().unwrap();
    assert!((r - 0.21).abs() <= 0.04, "{r}");
}
