use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use fwaffine::stepsize::StrategyKind;
use fwaffine_cli::config::{parse_config_str, ExperimentConfig, MapSpec, ProblemKind};
use fwaffine_cli::experiment::CSV_HEADER;
use serde_json::Value;

const PROJECTION: &str = "\
[problem]
kind = projection
dimension = 8
[map]
condition_numbers = identity, 1e6
[run]
strategies = affine-backtracking, exact
max_iters = 300
";

fn fwaffine(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fwaffine"))
        .args(args)
        .current_dir(dir)
        .env_remove("FW_AFFINE_SEED")
        .output()
        .unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("exp.cfg");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn summary_lines(dir: &Path) -> Vec<Value> {
    fs::read_to_string(dir.join("summary.jsonl")).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

#[test]
fn serialized_config_parses_back_to_itself() {
    let mut cfg = ExperimentConfig::new(ProblemKind::LogisticErm, vec![StrategyKind::Modified, StrategyKind::Exact]);
    cfg.maps = vec![MapSpec::Identity, MapSpec::Random { condition_number: 1e3 }];
    cfg.modified_constant = Some(3.5);
    cfg.gap_tol = 1e-8;
    cfg.seed = Some(11);
    assert_eq!(parse_config_str(&cfg.serialize()).unwrap(), cfg);
}

#[test]
fn empty_config_exits_with_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "");
    let out = fwaffine(&["run", &cfg], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("kind") && err.contains("strategies"), "{err}");
}

#[test]
fn duplicate_key_reports_line() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "[problem]\nkind = projection\nkind = projection\n");
    let out = fwaffine(&["run", &cfg], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
}

#[test]
fn dry_run_lists_cells_without_writing() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), PROJECTION);
    let out = fwaffine(&["run", &cfg, "--dry-run", "--output-dir", "res"], tmp.path());
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("4 cells"), "{text}");
    assert!(text.contains("projection_exact_cond1e6.csv"), "{text}");
    assert!(!tmp.path().join("res").exists());
}

#[test]
fn run_writes_traces_and_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), PROJECTION);
    let out = fwaffine(&["run", &cfg, "--output-dir", "res", "--seed", "4"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let res = tmp.path().join("res");

    let mut reader = csv::Reader::from_path(res.join("projection_affine-backtracking_identity.csv")).unwrap();
    assert_eq!(reader.headers().unwrap().iter().collect::<Vec<_>>(), CSV_HEADER);
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert!(rows.len() > 2);
    let gap = &rows[0][1];
    let mantissa = gap.split('e').next().unwrap();
    assert_eq!(mantissa.trim_start_matches('-').replace('.', "").len(), 17, "{gap}");
    let last = rows.last().unwrap();
    assert_eq!(&last[3], "");
    assert_eq!(&last[4], "");

    let lines = summary_lines(&res);
    assert_eq!(lines[0]["type"], "experiment");
    assert_eq!(lines[0]["seed"], 4);
    assert_eq!(lines[0]["config_sha256"].as_str().unwrap().len(), 64);
    assert_eq!(lines.last().unwrap()["type"], "result");
    assert_eq!(lines.last().unwrap()["passed"], true);
    assert_eq!(lines.iter().filter(|l| l["type"] == "cell").count(), 4);
}

#[test]
fn same_seed_gives_identical_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), PROJECTION);
    for (dir, jobs) in [("a", "1"), ("b", "3")] {
        let out = fwaffine(&["run", &cfg, "--output-dir", dir, "--seed", "9", "--jobs", jobs], tmp.path());
        assert!(out.status.success());
    }
    let mut names: Vec<_> = fs::read_dir(tmp.path().join("a")).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 5);
    for name in names {
        let a = fs::read(tmp.path().join("a").join(&name)).unwrap();
        let b = fs::read(tmp.path().join("b").join(&name)).unwrap();
        assert!(a == b, "{name:?} differs");
    }
}

#[test]
fn seed_falls_back_to_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), PROJECTION);
    let out = Command::new(env!("CARGO_BIN_EXE_fwaffine"))
        .args(["run", &cfg, "--dry-run"])
        .current_dir(tmp.path())
        .env("FW_AFFINE_SEED", "123")
        .output()
        .unwrap();
    assert!(String::from_utf8_lossy(&out.stdout).contains("seed 123"));

    let with_config_seed = write_config(tmp.path(), &format!("{PROJECTION}seed = 5\n"));
    let out = Command::new(env!("CARGO_BIN_EXE_fwaffine"))
        .args(["run", &with_config_seed, "--dry-run"])
        .current_dir(tmp.path())
        .env("FW_AFFINE_SEED", "123")
        .output()
        .unwrap();
    assert!(String::from_utf8_lossy(&out.stdout).contains("seed 5"));
}

#[test]
fn constants_prints_one_row_per_map() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), PROJECTION);
    let out = fwaffine(&["constants", &cfg], tmp.path());
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 3, "{text}");
    assert!(text.lines().nth(1).unwrap().starts_with("identity"));
}

#[test]
fn verify_geometry_passes_and_inflated_alpha_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let ok = fwaffine(&["verify", "geometry"], tmp.path());
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stdout));
    let bad = fwaffine(&["verify", "geometry", "--inflate-alpha", "4"], tmp.path());
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stdout).contains("VIOLATED"));
}

#[test]
fn missing_dataset_is_an_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg =
        write_config(tmp.path(), "[problem]\nkind = quadratic-erm\ndataset = nope.csv\n[run]\nstrategies = exact\n");
    let out = fwaffine(&["run", &cfg], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn quadratic_erm_reads_dataset_file() {
    let tmp = tempfile::tempdir().unwrap();
    let rows: String = (0..40)
        .map(|i| {
            let (a, b) = ((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos());
            format!("{a},{b},{}\n", 2.0 * a - b + 0.01 * (i % 3) as f64)
        })
        .collect();
    fs::write(tmp.path().join("data.csv"), format!("a,b,y\n{rows}")).unwrap();
    let cfg = write_config(
        tmp.path(),
        "[problem]\nkind = quadratic-erm\ndataset = data.csv\nhas_header = true\n[run]\nstrategies = affine-backtracking, exact\nmax_iters = 400\n",
    );
    let out = fwaffine(&["run", &cfg, "--output-dir", "res"], tmp.path());
    assert!(out.status.success(), "{}{}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr));
    let lines = summary_lines(&tmp.path().join("res"));
    assert_eq!(lines[0]["fstar_source"], "reference-run");
    assert!(lines[0]["problem"].as_str().unwrap().contains("d=2"), "{}", lines[0]);
}
