use std::path::PathBuf;
use std::process::{Command, Output};

fn sensbound(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sensbound"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("sensbound-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    std::fs::create_dir_all(&d).unwrap();
    d
}

/// First number after `key` in a text line.
fn value_after(text: &str, line_prefix: &str, key: &str) -> f64 {
    let line = text
        .lines()
        .find(|l| l.trim_start().starts_with(line_prefix))
        .unwrap_or_else(|| panic!("no line starting with {line_prefix}"));
    let rest = &line[line.find(key).unwrap() + key.len()..];
    rest.split_whitespace().next().unwrap().parse().unwrap()
}

#[test]
fn analyze_sopdt_contains_weighted_bound() {
    let o = sensbound(&[
        "analyze",
        "--case",
        "sopdt",
        "--controller",
        "sl2008",
        "--format",
        "json",
    ]);
    // the compensated loop's modified bound is inapplicable
    assert_eq!(
        o.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["schema_version"], 1);
    let bounds = v["data"]["loops"][0]["bounds"].as_array().unwrap();
    let split = bounds
        .iter()
        .find(|b| b["variant"] == "pj_at_nmp_zero" && b["source"] == "split")
        .unwrap();
    let b = split["result"]["ok"]["bound_nats"].as_f64().unwrap();
    assert!((b - 0.2267).abs() < 0.03 * 0.2267, "{b}");
}

#[test]
fn analyze_csv_is_a_sweep() {
    let o = sensbound(&["analyze", "--case", "foipdt", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("omega,mag,log_mag,kernel_weight"));
    let row: Vec<f64> = lines
        .next()
        .unwrap()
        .split(',')
        .map(|x| x.parse().unwrap())
        .collect();
    assert_eq!(row.len(), 4);
    assert!((row[2] - row[1].ln()).abs() < 1e-12);
}

#[test]
fn integral_poisson_residual_is_small() {
    let o = sensbound(&[
        "integral",
        "--case",
        "foipdt",
        "--controller",
        "luyben",
        "--kind",
        "poisson",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let r = value_after(&text, "poisson", "residual");
    assert!(r.abs() < 1e-3);
    assert!(!text.contains("bode "));
}

#[test]
fn mismatch_compensated_peak() {
    let o = sensbound(&[
        "mismatch",
        "--case",
        "sopdt",
        "--pct",
        "20",
        "--compensate",
        "--format",
        "csv",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let row = text.lines().find(|l| l.starts_with("20,")).unwrap();
    let cols: Vec<&str> = row.split(',').collect();
    let comp: f64 = cols[4].parse().unwrap();
    assert!((comp - 3.261).abs() < 0.1 * 3.261, "{comp}");
}

#[test]
fn bounds_cstr_flags_single_pole_discrepancy() {
    let o = sensbound(&["bounds", "--case", "cstr"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let line = text
        .lines()
        .find(|l| l.contains("pj_at_nmp_zero  [split]"))
        .unwrap();
    let b: f64 = line
        .split("bound ")
        .nth(1)
        .unwrap()
        .split_whitespace()
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert!((b - 0.146).abs() < 0.03 * 0.146, "{b}");
    assert!(text.contains("published weighted bound 7.660000e-2"));
    assert!(text.contains("single-pole sum"));
}

#[test]
fn case_file_round_trip_gives_identical_output() {
    let dir = scratch("roundtrip");
    let file = dir.join("foipdt.case");
    std::fs::write(
        &file,
        sensbound::report::write_case(&sensbound::casebook::load_case("foipdt").unwrap()),
    )
    .unwrap();
    let a = sensbound(&["bounds", "--case", "foipdt", "--format", "json"]);
    let b = sensbound(&[
        "bounds",
        "--file",
        file.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(stdout(&a), stdout(&b));
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn user_file_with_omega_l_override() {
    let dir = scratch("user");
    let file = dir.join("mycase.tf");
    std::fs::write(
        &file,
        "# first-order lag with delay under PI control\n\
         [case]\nname = mycase\n\n[plant]\nnum = 1\nden = 1, 2\ndead_time = 0.5\n\n\
         [controller pi]\nnum = 1, 2\nden = 0, 2\n\n[analysis]\nsingular_point = delay_heuristic\n",
    )
    .unwrap();
    let o = sensbound(&[
        "analyze",
        "--file",
        file.to_str().unwrap(),
        "--omega-l",
        "50",
        "--format",
        "json",
    ]);
    assert!(
        matches!(o.status.code(), Some(0) | Some(2)),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["data"]["omega_l"], 50.0);
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn malformed_file_reports_line() {
    let dir = scratch("bad");
    let file = dir.join("bad.case");
    std::fs::write(&file, "[case]\nname = x\n[plant]\nden = 1, oops\n").unwrap();
    let o = sensbound(&["analyze", "--file", file.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("line 4"), "{err}");
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn out_dir_and_determinism() {
    let dir = scratch("out");
    let run = || {
        let o = sensbound(&[
            "analyze",
            "--case",
            "cstr",
            "--format",
            "csv",
            "--out",
            dir.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0));
        std::fs::read(dir.join("cstr_rc2006_sweep.csv")).unwrap()
    };
    let first = run();
    assert_eq!(first, run());
    for f in ["cstr_bounds.csv", "cstr_integrals.csv", "cstr_mismatch.csv"] {
        assert!(dir.join(f).exists(), "{f}");
    }
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn text_and_json_agree() {
    let t = stdout(&sensbound(&[
        "bounds",
        "--case",
        "foipdt",
        "--controller",
        "pai",
    ]));
    let j = stdout(&sensbound(&[
        "bounds",
        "--case",
        "foipdt",
        "--controller",
        "pai",
        "--format",
        "json",
    ]));
    let v: serde_json::Value = serde_json::from_str(&j).unwrap();
    let s_max = v["data"]["loops"][0]["indices"]["s_max"].as_f64().unwrap();
    let printed = value_after(&t, "crossing", "s_max");
    assert_eq!(format!("{printed:.6e}"), format!("{s_max:.6e}"));
}

#[test]
fn unknown_inputs_fail() {
    assert_eq!(
        sensbound(&["analyze", "--case", "nope"]).status.code(),
        Some(1)
    );
    assert_eq!(
        sensbound(&["analyze", "--case", "foipdt", "--controller", "x"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        sensbound(&["analyze", "--case", "foipdt", "--sigma", "-1"])
            .status
            .code(),
        Some(1)
    );
}
