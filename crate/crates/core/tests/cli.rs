use std::path::PathBuf;
use std::process::{Command, Output};

use pdc_visibility::closed_form::v2_onoff;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pdc-visibility"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("pdc-visibility-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn data_lines(stdout: &[u8]) -> Vec<String> {
    String::from_utf8_lossy(stdout)
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(String::from)
        .collect()
}

#[test]
fn usage_errors_exit_with_two() {
    for args in [
        vec!["visibility", "--scheme", "bogus"],
        vec!["visibility", "--preset", "fig9"],
        vec!["visibility", "--preset", "fig3"],
        vec!["interference", "--preset", "fig2"],
        vec!["visibility", "--scheme", "hybrid"],
        vec!["visibility", "--scheme", "linear", "--k-steps", "1"],
        vec!["visibility", "--scheme", "linear", "--k-stop", "4"],
        vec!["visibility", "--scheme", "linear", "--format", "xml"],
        vec!["visibility", "--preset", "fig2", "--scheme", "onoff"],
        vec!["interference", "--scheme", "linear", "--k-start", "0", "--k-stop", "1", "--k-steps", "2"],
        vec!["validate", "--level", "slow"],
        vec!["frobnicate"],
        vec![],
    ] {
        let out = run(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty(), "{args:?}");
        assert!(out.stdout.is_empty(), "{args:?}");
    }
}

#[test]
fn help_succeeds() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn critical_report() {
    let out = run(&["critical"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("k_crit_linear,0.491101019116,"));
    assert!(text.contains("tau_crit,0.455089860562,"));
    let json: serde_json::Value = serde_json::from_slice(&run(&["critical", "--format", "json"]).stdout).unwrap();
    assert_eq!(json["values"][1]["name"], "k_crit_onoff");
}

#[test]
fn visibility_csv_and_out_file() {
    let path = scratch("onoff.csv");
    let out = run(&[
        "visibility", "--scheme", "onoff", "--k-start", "0", "--k-stop", "1", "--k-steps", "5", "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    let lines = data_lines(text.as_bytes());
    assert_eq!(lines[0], "K,onoff");
    assert_eq!(lines.len(), 6);
    let last: Vec<f64> = lines[5].split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(last[0], 1.0);
    assert!((last[1] - v2_onoff(1.0)).abs() < 1e-11);
    assert!(text.contains("# truncation_tail_bound: 0\n"));
}

#[test]
fn config_file_with_cli_override() {
    let cfg = scratch("sweep.conf");
    std::fs::write(&cfg, "# sweep\nscheme = multiport\nports = 2,3\nk_start = 0\nk-stop = 2\nk-steps = 3\nformat = json\n").unwrap();
    let out = run(&["visibility", "--config", cfg.to_str().unwrap(), "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let lines = data_lines(&out.stdout);
    assert_eq!(lines[0], "K,multiport_M=2,multiport_M=3");
    assert_eq!(lines.len(), 4);

    std::fs::write(&cfg, "scheme = onoff\ncolour = blue\n").unwrap();
    assert_eq!(run(&["visibility", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(run(&["visibility", "--config", "/nonexistent/file"]).status.code(), Some(2));
}

#[test]
fn interference_json_is_valid() {
    let out = run(&["interference", "--scheme", "hybrid", "--tau", "0.5", "--k-start", "0.5", "--k-stop", "1", "--k-steps", "2", "--delta-steps", "8", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["columns"][0], "delta");
    assert_eq!(json["columns"][2], "hybrid_tau=0.5_K=1");
    assert_eq!(json["rows"].as_array().unwrap().len(), 8);
    assert_eq!(json["rows"][0][1], 1.0);
    assert_eq!(json["metadata"]["method"], "closed");
}

#[test]
fn numeric_method_agrees_with_closed() {
    let args = ["visibility", "--scheme", "onoff", "--k-start", "0", "--k-stop", "0.6", "--k-steps", "3"];
    let closed = data_lines(&run(&args).stdout);
    let mut numeric_args = args.to_vec();
    numeric_args.extend(["--method", "numeric"]);
    let out = run(&numeric_args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    let bound: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("# truncation_tail_bound: "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(bound > 0.0 && bound < 1e-8);
    let numeric = data_lines(&out.stdout);
    for (c, n) in closed.iter().zip(&numeric).skip(1) {
        let c: Vec<f64> = c.split(',').map(|v| v.parse().unwrap()).collect();
        let n: Vec<f64> = n.split(',').map(|v| v.parse().unwrap()).collect();
        assert!((c[1] - n[1]).abs() < 1e-6);
    }
}

#[test]
fn n_max_requires_numeric_method() {
    assert_eq!(run(&["visibility", "--scheme", "onoff", "--n-max", "10"]).status.code(), Some(2));
}

#[test]
fn fast_validation_passes() {
    let out = run(&["validate", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let checks = json["checks"].as_array().unwrap();
    assert!(checks.len() >= 10);
    assert!(checks.iter().all(|c| c["passed"] == true));
}
