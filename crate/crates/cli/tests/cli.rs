use std::fs;
use std::path::Path;

use fracmeasure::{load_measure, CheckReport};
use fracmeasure_cli::{export_csv, run, EXIT_FAIL, EXIT_PASS, EXIT_USAGE};

fn cli(args: &[&str]) -> i32 {
    run(std::iter::once("fracmeasure").chain(args.iter().copied()))
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

fn uniform(dir: &Path, atoms: usize) -> String {
    let out = path(dir, &format!("u{atoms}.json"));
    let n = atoms.to_string();
    assert_eq!(cli(&["measure", "gen", "--kind", "uniform", "--atoms", &n, "--out", &out]), EXIT_PASS);
    out
}

#[test]
fn cantor_depth_ten_has_1024_atoms() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path(), "c.json");
    assert_eq!(cli(&["measure", "gen", "--kind", "cantor", "--depth", "10", "--out", &out]), EXIT_PASS);
    assert_eq!(load_measure(&out).unwrap().len(), 1024);
    assert_eq!(cli(&["measure", "info", "--measure", &out]), EXIT_PASS);
}

#[test]
fn hls_report_passes() {
    let dir = tempfile::tempdir().unwrap();
    let m = uniform(dir.path(), 1000);
    let r = path(dir.path(), "r.json");
    let code = cli(&[
        "check", "hls", "--measure", &m, "--alpha", "0.3333333333333333", "--p", "2", "--trials", "200", "--seed",
        "42", "--out", &r,
    ]);
    assert_eq!(code, EXIT_PASS);
    let text = fs::read_to_string(&r).unwrap();
    assert!(text.contains("\"check\": \"hls\""));
    let report = CheckReport::from_json(&text).unwrap();
    assert_eq!(report.levels.len(), 2);
    assert_eq!(report.levels[0].atoms, 250);
    assert_eq!(report.params["q"], 6.0);
}

#[test]
fn bad_ranges_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let m = uniform(dir.path(), 100);
    for (alpha, p, rho) in [("0.3", "0.5", "2"), ("1.5", "2", "2"), ("0.3", "2", "1")] {
        let args = ["check", "localpot", "--measure", &m, "--alpha", alpha, "--p", p, "--rho", rho];
        assert_eq!(cli(&args), EXIT_USAGE, "{args:?}");
    }
    assert_eq!(cli(&["check", "lemma21", "--measure", &m, "--gamma", "-1"]), EXIT_USAGE);
    assert_eq!(cli(&["check", "hls", "--measure", &m, "--alpha", "0.5", "--p", "3"]), EXIT_USAGE);
    assert_eq!(cli(&["check", "hls", "--measure", &m, "--alpha", "0.5"]), EXIT_USAGE);
    assert_eq!(cli(&["check", "hls", "--measure", &m, "--alpha", "0.25", "--p", "2", "--q", "5"]), EXIT_USAGE);
    assert_eq!(cli(&["check", "nosuch", "--measure", &m]), EXIT_USAGE);
    let missing = path(dir.path(), "missing.json");
    assert_eq!(cli(&["check", "hls", "--measure", &missing, "--alpha", "0.3", "--p", "2"]), EXIT_USAGE);
    assert_eq!(cli(&["--threads", "0", "measure", "info", "--measure", &m]), EXIT_USAGE);
}

#[test]
fn diagnostic_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let m = uniform(dir.path(), 100);
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_fracmeasure"))
        .args(["check", "hls", "--measure", &m, "--alpha", "0.3", "--p", "0.5"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(EXIT_USAGE));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert_eq!(stderr.lines().count(), 1, "{stderr}");
    assert!(stderr.contains("`p`"), "{stderr}");
}

#[test]
fn threads_env_var_is_read() {
    let dir = tempfile::tempdir().unwrap();
    let m = uniform(dir.path(), 100);
    let status = std::process::Command::new(env!("CARGO_BIN_EXE_fracmeasure"))
        .args(["measure", "info", "--measure", &m])
        .env("FRACMEASURE_THREADS", "0")
        .output()
        .unwrap()
        .status;
    assert_eq!(status.code(), Some(EXIT_USAGE));
}

#[test]
fn failing_check_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let p = path(dir.path(), "p.json");
    assert_eq!(
        cli(&["measure", "gen", "--kind", "power-density", "--exponent", "0.5", "--atoms", "2048", "--out", &p]),
        EXIT_PASS
    );
    let code = cli(&["check", "necessity", "--measure", &p, "--alpha", "0.3333333333333333", "--p", "1", "--max-centers", "2048"]);
    assert_eq!(code, EXIT_FAIL);
}

#[test]
fn csv_export_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let m = uniform(dir.path(), 400);
    let r = path(dir.path(), "r.json");
    let c = path(dir.path(), "r.csv");
    assert_eq!(cli(&["check", "localpot", "--measure", &m, "--alpha", "0.5", "--trials", "10", "--out", &r]), EXIT_PASS);
    assert_eq!(cli(&["export", "--report", &r, "--out", &c]), EXIT_PASS);
    let report = CheckReport::from_json(&fs::read_to_string(&r).unwrap()).unwrap();
    let text = fs::read_to_string(&c).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[0], "level,atoms,sup_ratio,pass");
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    for (row, level) in reader.records().zip(&report.levels) {
        let row = row.unwrap();
        assert_eq!(row[1].parse::<usize>().unwrap(), level.atoms);
        assert_eq!(row[2].parse::<f64>().unwrap(), level.sup_ratio);
    }
}

#[test]
fn csv_of_empty_report_is_header_only() {
    let mut report = CheckReport::new("growth", 0);
    report = report.finish(fracmeasure::Tolerance::bounded());
    assert_eq!(export_csv(&report), "level,atoms,sup_ratio,pass\n");
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let m = uniform(dir.path(), 300);
    let (a, b) = (path(dir.path(), "a.json"), path(dir.path(), "b.json"));
    for (out, threads) in [(&a, "1"), (&b, "3")] {
        let code = cli(&[
            "--threads", threads, "check", "rbmo-lip", "--measure", &m, "--alpha", "0.5", "--trials", "100", "--out", out,
        ]);
        assert_eq!(code, EXIT_PASS);
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn every_check_runs() {
    let dir = tempfile::tempdir().unwrap();
    let m = uniform(dir.path(), 256);
    let runs: [&[&str]; 12] = [
        &["growth"],
        &["lemma21", "--gamma", "0.5"],
        &["lemma22", "--gamma", "0.5"],
        &["necessity", "--alpha", "0.3333333333333333", "--p", "1"],
        &["geometry"],
        &["lip-image", "--alpha", "0.6", "--p", "4", "--trials", "10"],
        &["lip-preserve", "--alpha", "0.2", "--beta", "0.3", "--trials", "100"],
        &["rbmo-image", "--alpha", "0.5", "--trials", "5"],
        &["kernel-size", "--alpha", "0.5"],
        &["kernel-reg", "--alpha", "0.5", "--kernel", "modulated:0.5:3"],
        &["hls", "--alpha", "0.5", "--p", "1", "--format", "csv"],
        &["localpot", "--alpha", "0.5", "--levels", "1", "--trials", "5"],
    ];
    for extra in runs {
        let out = path(dir.path(), "out");
        let mut args = vec!["check"];
        args.push(extra[0]);
        args.extend(["--measure", m.as_str(), "--out", out.as_str()]);
        args.extend(&extra[1..]);
        let code = cli(&args);
        assert!(code == EXIT_PASS || code == EXIT_FAIL, "{extra:?} exited {code}");
        assert!(Path::new(&out).exists());
    }
}
