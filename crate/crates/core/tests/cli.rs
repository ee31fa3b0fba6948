use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tailsum::manifest::RunManifest;

fn tailsum(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tailsum"))
        .args(args)
        .arg("--output-dir")
        .arg(dir)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn csv_rows(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(String::from).collect())
        .collect();
    (header, rows)
}

fn column(header: &[String], rows: &[Vec<String>], name: &str) -> Vec<f64> {
    let i = header.iter().position(|h| h == name).unwrap();
    rows.iter().map(|r| r[i].parse().unwrap()).collect()
}

#[test]
fn functionals_exponential_c_column_is_one() {
    let d = tempfile::tempdir().unwrap();
    let o = tailsum(
        d.path(),
        &[
            "functionals",
            "--model",
            "exponential(1.0)",
            "--s-grid-start",
            "0.5",
            "--s-grid-ratio",
            "0.5",
            "--s-grid-count",
            "3",
            "--betas",
            "1,2",
        ],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (h, rows) = csv_rows(&d.path().join("functionals_exponential_1.csv"));
    assert_eq!(rows.len(), 3);
    assert_eq!(column(&h, &rows, "s"), vec![0.5, 0.25, 0.125]);
    for c in column(&h, &rows, "c") {
        assert!((c - 1.0).abs() < 1e-12, "{c}");
    }
    for c in column(&h, &rows, "c_beta_2") {
        assert!((c - 0.5).abs() < 1e-12, "{c}");
    }
    assert!(d.path().join("manifest_functionals.json").exists());
}

#[test]
fn functionals_pareto_warns_and_tracks_power_law() {
    let d = tempfile::tempdir().unwrap();
    let o = tailsum(
        d.path(),
        &["functionals", "--model", "pareto(2.0)", "--betas", "1"],
    );
    // σ² diverges logarithmically at index 2, so its column is flagged
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    assert!(stderr(&o).contains("sigma2"));
    let path = d.path().join("functionals_pareto_2.csv");
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text
        .lines()
        .any(|l| l.starts_with("# warning:") && l.contains("Gumbel")));
    let (h, rows) = csv_rows(&path);
    for (s, c) in column(&h, &rows, "s")
        .into_iter()
        .zip(column(&h, &rows, "c"))
    {
        assert!((c / s.powf(-0.5) - 1.0).abs() < 1e-9, "s={s} c={c}");
    }
}

#[test]
fn functionals_without_models_is_a_config_error() {
    let d = tempfile::tempdir().unwrap();
    let o = tailsum(d.path(), &["functionals"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("model"), "{}", stderr(&o));
}

#[test]
fn functionals_with_divergent_entries_exit_three_but_write_the_table() {
    let d = tempfile::tempdir().unwrap();
    let o = tailsum(d.path(), &["functionals", "--model", "pareto(1.5)"]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    assert!(d.path().join("functionals_pareto_1.5.csv").exists());
}

#[test]
fn lemmas_exponential_full_suite_passes() {
    let d = tempfile::tempdir().unwrap();
    let o = tailsum(d.path(), &["lemmas", "--model", "exponential(1.0)"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = std::fs::read_to_string(d.path().join("lemmas.csv")).unwrap();
    assert!(text.starts_with("check,lemma,model,s,value,target,error,tolerance,verdict\n"));
    for id in ["L1", "L2", "L3", "L4", "L5", "L6", "L7", "RC"] {
        assert!(text.contains(&format!(",{id},")), "{id} missing");
    }
    assert!(!text.contains(",fail\n"));
}

#[test]
fn lemmas_pareto_slow_variation_fails() {
    let d = tempfile::tempdir().unwrap();
    let o = tailsum(
        d.path(),
        &["lemmas", "--model", "pareto(2.0)", "--lemmas", "L2"],
    );
    assert_eq!(code(&o), 4);
    assert!(
        stderr(&o).contains("FAIL L2 beta=1 lambda=2 pareto(2)"),
        "{}",
        stderr(&o)
    );
    let m = RunManifest::load_verified(&d.path().join("manifest_lemmas.json")).unwrap();
    assert_eq!(m.exit_code, 4);
    assert!(m.failing().count() > 0);
}

#[test]
fn empty_lemma_selection_writes_only_the_header() {
    let d = tempfile::tempdir().unwrap();
    let o = tailsum(
        d.path(),
        &["lemmas", "--model", "exponential(1)", "--lemmas", ""],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(
        std::fs::read_to_string(d.path().join("lemmas.csv")).unwrap(),
        "check,lemma,model,s,value,target,error,tolerance,verdict\n"
    );
}

fn simulate(dir: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "simulate",
        "--model",
        "exponential(1)",
        "--n-values",
        "2000",
        "--master-seed",
        "3",
    ];
    args.extend_from_slice(extra);
    tailsum(dir, &args)
}

#[test]
fn single_replicate_is_insufficient() {
    let d = tempfile::tempdir().unwrap();
    let o = simulate(d.path(), &["--replicates", "1"]);
    assert_eq!(code(&o), 4);
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.path().join("normality.json")).unwrap())
            .unwrap();
    for s in json["models"][0]["cells"][0]["statistics"]
        .as_array()
        .unwrap()
    {
        assert_eq!(s["verdict"], "insufficient");
        assert!(s["var"].is_null());
    }
    assert!(stderr(&o).contains("variance undefined"));
}

#[test]
fn identical_reruns_have_identical_checksums() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        let o = simulate(d.path(), &["--replicates", "300", "--dump-samples"]);
        assert!(matches!(code(&o), 0 | 4), "{}", stderr(&o));
    }
    let ma = RunManifest::load_verified(&a.path().join("manifest_simulate.json")).unwrap();
    let mb = RunManifest::load_verified(&b.path().join("manifest_simulate.json")).unwrap();
    assert_eq!(ma.files.len(), 3);
    assert_eq!(ma.files, mb.files);
    assert_eq!(ma.checks, mb.checks);
}

#[test]
fn invalid_config_is_rejected_before_sampling() {
    let d = tempfile::tempdir().unwrap();
    let o = simulate(d.path(), &["--n-values", "3"]);
    assert_eq!(code(&o), 2);
    assert!(!d.path().join("normality.json").exists());

    let cfg = d.path().join("bad.json");
    std::fs::write(&cfg, r#"{"models": ["exponential(1)"], "replicats": 10}"#).unwrap();
    let o = tailsum(d.path(), &["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("replicats"), "{}", stderr(&o));

    let o = tailsum(
        d.path(),
        &["simulate", "--config", "/nonexistent/config.json"],
    );
    assert_eq!(code(&o), 2);
}

fn lemmas_run(dir: &Path, model: &str, lemma: &str) -> PathBuf {
    let o = tailsum(dir, &["lemmas", "--model", model, "--lemmas", lemma]);
    assert!(matches!(code(&o), 0 | 4), "{}", stderr(&o));
    dir.join("manifest_lemmas.json")
}

#[test]
fn report_with_one_passing_manifest() {
    let d = tempfile::tempdir().unwrap();
    let m = lemmas_run(d.path(), "exponential(1)", "L4");
    let o = Command::new(env!("CARGO_BIN_EXE_tailsum"))
        .arg("report")
        .arg(&m)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let summary = std::fs::read_to_string(d.path().join("summary.md")).unwrap();
    assert!(summary.contains("All checks pass."));
}

#[test]
fn report_lists_the_failing_cell() {
    let d = tempfile::tempdir().unwrap();
    let good = lemmas_run(&d.path().join("a"), "exponential(1)", "L4");
    let o = simulate(&d.path().join("b"), &["--replicates", "1"]);
    assert_eq!(code(&o), 4);
    let bad = d.path().join("b").join("manifest_simulate.json");
    let out = d.path().join("merged");
    let o = Command::new(env!("CARGO_BIN_EXE_tailsum"))
        .arg("report")
        .args([&good, &bad])
        .arg("--output-dir")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let summary = std::fs::read_to_string(out.join("summary.md")).unwrap();
    assert!(!summary.contains("All checks pass."));
    assert!(
        summary.contains("exponential(1) n=2000 k=21 T1"),
        "{summary}"
    );
}

#[test]
fn report_names_a_tampered_file() {
    let d = tempfile::tempdir().unwrap();
    let m = lemmas_run(d.path(), "exponential(1)", "L4");
    std::fs::write(d.path().join("lemmas.csv"), "tampered\n").unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_tailsum"))
        .arg("report")
        .arg(&m)
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("lemmas.csv"), "{}", stderr(&o));
    assert!(!d.path().join("summary.md").exists());
}

#[test]
fn report_rejects_missing_and_corrupt_manifests() {
    let d = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_tailsum"))
        .args(["report", "/nonexistent/m.json"])
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
    let p = d.path().join("m.json");
    std::fs::write(&p, "{not json").unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_tailsum"))
        .arg("report")
        .arg(&p)
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("m.json"));
}

#[test]
fn help_and_version_exit_zero() {
    for flag in ["--help", "--version"] {
        let o = Command::new(env!("CARGO_BIN_EXE_tailsum"))
            .arg(flag)
            .output()
            .unwrap();
        assert_eq!(code(&o), 0);
    }
    let o = Command::new(env!("CARGO_BIN_EXE_tailsum"))
        .arg("frobnicate")
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
}

#[test]
fn shipped_acceptance_config_passes() {
    let d = tempfile::tempdir().unwrap();
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/acceptance.json");
    let o = tailsum(d.path(), &["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let m = RunManifest::load_verified(&d.path().join("manifest_simulate.json")).unwrap();
    assert_eq!(m.config.master_seed, 7);
    assert_eq!(m.checks.len(), 4);
}
