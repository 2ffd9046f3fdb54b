use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rotcocycle"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit status")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn cf_table_is_fibonacci() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["cf", "--alpha", "golden", "--depth", "10"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let mut r = csv::Reader::from_path(dir.path().join("cf.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = r.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 11);
    let (mut p, mut q) = (0u64, 1u64);
    let (mut pp, mut qp) = (1u64, 0u64);
    for (n, row) in rows.iter().enumerate() {
        assert_eq!(row[0].parse::<usize>().unwrap(), n);
        assert_eq!(row[2].parse::<u64>().unwrap(), p);
        assert_eq!(row[3].parse::<u64>().unwrap(), q);
        if n > 0 {
            assert_eq!(&row[1], "1");
        }
        (p, pp) = (p + pp, p);
        (q, qp) = (q + qp, q);
    }
    let j = read_json(&dir.path().join("cf.json"));
    assert_eq!(j["schema_version"], 1);
    assert_eq!(j["all_pass"], true);
}

#[test]
fn report_on_rational_step_is_regular() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["report", "--alpha", "golden", "--phi", "phi_d(1/2)"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let j = read_json(&dir.path().join("report.json"));
    assert_eq!(j["verdict"], "RegularEvidence");
    assert!(!j["generators"].as_array().unwrap().is_empty());
    for e in j["chain"].as_array().unwrap() {
        if let Some(p) = e["artifacts-path"].as_str() {
            assert!(dir.path().join(p).exists(), "{p}");
        }
    }
}

#[test]
fn witness_finds_returns_for_every_cell() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["witness", "--alpha", "golden", "--g", "0", "--phi", "indicator(1/3)", "--Nmax", "100"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let j = read_json(&dir.path().join("witness.json"));
    assert_eq!(j["all_witnessed"], true);
}

#[test]
fn artifacts_are_byte_identical_across_runs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["pushforward", "--alpha", "golden", "--sym", "b=2*alpha-1", "--phi", "concat(indicator(1/2),indicator(b))", "--n", "6"];
    assert_eq!(code(&run(a.path(), &args)), 0);
    assert_eq!(code(&run(b.path(), &args)), 0);
    let mut names: Vec<_> = fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 2);
    for n in names {
        assert_eq!(fs::read(a.path().join(&n)).unwrap(), fs::read(b.path().join(&n)).unwrap());
    }
}

#[test]
fn unknown_config_key_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("session.json");
    fs::write(&cfg, "{\n  \"alpha\": \"golden\",\n  \"colour\": 1\n}\n").unwrap();
    let o = run(dir.path(), &["cf", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
}

#[test]
fn config_file_drives_a_command() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("session.json");
    fs::write(
        &cfg,
        r#"{"schema_version": 1, "alpha": "sqrt2m1",
            "phi": {"d": 1, "pieces": [{"lo": "0", "hi": "1/2", "value": ["1/2"]}, {"lo": "1/2", "hi": "1", "value": ["-1/2"]}]}}"#,
    )
    .unwrap();
    let o = run(dir.path(), &["dk-audit", "--config", cfg.to_str().unwrap(), "--n", "1..=6"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(read_json(&dir.path().join("dk-audit.json"))["rows"].as_array().unwrap().len(), 6);
}

#[test]
fn diag_line_requires_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["diag-line", "--alpha", "golden", "--betas", "1/2", "--n", "5"];
    assert_eq!(code(&run(dir.path(), &args)), 1);
    let mut seeded = args.to_vec();
    seeded.extend(["--seed", "11"]);
    assert_eq!(code(&run(dir.path(), &seeded)), 0);
}

#[test]
fn hidden_equality_is_undecidable() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["separation", "--alpha", "golden", "--sym", "b=indep:cf:golden", "--beta", "b", "--cap-bits", "128"]);
    assert_eq!(code(&o), 3);
}

#[test]
fn bad_arguments_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(dir.path(), &["cf"])), 1);
    assert_eq!(code(&run(dir.path(), &["cf", "--alpha", "nonsense"])), 1);
    assert_eq!(code(&run(dir.path(), &["orbit", "--alpha", "golden"])), 1);
    assert_eq!(code(&run(dir.path(), &["cf", "--alpha", "golden", "--threads", "0"])), 1);
}

#[test]
fn ostrowski_digits_of_one_half() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["ostrowski", "--alpha", "golden", "--beta", "1/2", "--depth", "12"]);
    assert_eq!(code(&o), 0);
    let j = read_json(&dir.path().join("ostrowski.json"));
    let digits: Vec<u64> = j["expansion"]["digits"].as_array().unwrap().iter().map(|d| d.as_str().unwrap().parse().unwrap()).collect();
    assert!(digits.iter().all(|d| *d <= 1));
    assert!(digits.windows(2).all(|w| w[0] + w[1] < 2));
}
