use std::fs;
use std::path::{Path, PathBuf};

use proptest::prelude::*;
use sqg_cli::cli::dispatch;
use sqg_cli::manifest::spec_hash;
use sqg_cli::{parse_scenario, RunManifest, RunStatus};
use tempfile::TempDir;

struct Output {
    code: i32,
    stdout: String,
    stderr: String,
}

fn sqg(args: &[&str]) -> Output {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("sqg").chain(args.iter().copied());
    let code = dispatch(argv, &mut out, &mut err);
    Output {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

fn write_spec(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(format!("{name}.toml"));
    fs::write(&path, text).unwrap();
    path
}

fn single_mode(name: &str, checks: &str) -> String {
    format!(
        r#"name = "{name}"
n = 16
kappa = 1.0
t_final = 0.1
checks = [{checks}]

[dt]
policy = "fixed"
value = 1e-3

[forcing]
kind = "zero"

[initial]
kind = "modes"
modes = [{{ k = [1, 0], cos = 1.0 }}]

[sampling]
every = 10
"#
    )
}

fn forced_random(name: &str, n: usize, t_final: f64, checks: &str) -> String {
    format!(
        r#"name = "{name}"
n = {n}
kappa = 1.0
t_final = {t_final}
checks = [{checks}]

[dt]
policy = "fixed"
value = 1e-3

[forcing]
kind = "modes"
modes = [{{ k = [0, 1], cos = 0.1 }}]

[initial]
kind = "random"
seed = 3
kmax = 4
amplitude = 0.5
norm = "linf"

[sampling]
every = 5
snapshot_every = 1
"#
    )
}

fn run(spec: &Path, root: &Path) -> Output {
    sqg(&["run", spec.to_str().unwrap(), "--output-root", root.to_str().unwrap()])
}

fn csv_rows(path: &Path) -> usize {
    fs::read_to_string(path).unwrap().lines().count() - 1
}

#[test]
fn single_mode_run_passes_and_writes_artifacts() {
    let tmp = TempDir::new().unwrap();
    let spec = write_spec(tmp.path(), "one", &single_mode("one", r#""exact_decay", "energy_inequality", "decay_envelope""#));
    let out = run(&spec, tmp.path());
    assert_eq!(out.code, 0, "{} {}", out.stdout, out.stderr);
    assert!(out.stdout.contains("passed"));

    let dir = tmp.path().join("one");
    let manifest = RunManifest::read(&dir).unwrap();
    assert_eq!(manifest.status, RunStatus::Passed);
    for name in ["exact_decay", "energy_inequality", "decay_envelope_l2", "decay_envelope_linf"] {
        assert!(manifest.checks.iter().any(|c| c.name == name), "{name} missing");
    }
    for art in &manifest.artifacts {
        assert!(dir.join(art).exists(), "{art}");
    }
}

#[test]
fn manifest_hash_round_trips_through_stored_spec() {
    let tmp = TempDir::new().unwrap();
    let text = single_mode("hash", r#""exact_decay""#);
    let spec = write_spec(tmp.path(), "hash", &text);
    assert_eq!(run(&spec, tmp.path()).code, 0);
    let dir = tmp.path().join("hash");
    let stored = fs::read_to_string(dir.join("spec.toml")).unwrap();
    assert_eq!(stored, text);
    let manifest = RunManifest::read(&dir).unwrap();
    assert_eq!(manifest.spec_hash, spec_hash(&stored));
    // the hash covers the stored bytes, which still parse
    parse_scenario(&stored, None).unwrap();
    assert_eq!(spec_hash(&stored), spec_hash(&text));
}

#[test]
fn rerun_produces_identical_csv_bytes() {
    let tmp = TempDir::new().unwrap();
    let spec = write_spec(tmp.path(), "det", &forced_random("det", 16, 0.2, r#""energy_inequality""#));
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert_eq!(run(&spec, &a).code, 0);
    assert_eq!(run(&spec, &b).code, 0);
    let series = fs::read_dir(a.join("det/series")).unwrap();
    let mut compared = 0;
    for entry in series {
        let name = entry.unwrap().file_name();
        let x = fs::read(a.join("det/series").join(&name)).unwrap();
        let y = fs::read(b.join("det/series").join(&name)).unwrap();
        assert_eq!(x, y, "{name:?}");
        compared += 1;
    }
    assert!(compared >= 5);
    for file in ["samples.csv", "snapshots.bin", "checkpoints/final.ckpt", "report.txt"] {
        assert_eq!(fs::read(a.join("det").join(file)).unwrap(), fs::read(b.join("det").join(file)).unwrap(), "{file}");
    }
}

#[test]
fn csv_rows_match_sampling_cadence() {
    let tmp = TempDir::new().unwrap();
    // 0.2 / 1e-3 = 200 steps, every 5 → samples at steps 0, 5, ..., 200
    let spec = write_spec(tmp.path(), "rows", &forced_random("rows", 16, 0.2, ""));
    assert_eq!(run(&spec, tmp.path()).code, 0);
    let dir = tmp.path().join("rows");
    assert_eq!(csv_rows(&dir.join("samples.csv")), 41);
    for entry in fs::read_dir(dir.join("series")).unwrap() {
        assert_eq!(csv_rows(&entry.unwrap().path()), 41);
    }
}

#[test]
fn zero_data_passes_vacuously() {
    let tmp = TempDir::new().unwrap();
    let text = r#"name = "zero"
n = 16
kappa = 1.0
t_final = 0.05
checks = ["energy_inequality", "decay_envelope", "linf_estimate", "absorb_linf", "holder", "degiorgi", "absorb_h1", "dissipation_identity"]

[dt]
policy = "fixed"
value = 1e-3

[forcing]
kind = "zero"

[initial]
kind = "zero"
"#;
    let spec = write_spec(tmp.path(), "zero", text);
    let out = run(&spec, tmp.path());
    assert_eq!(out.code, 0, "{}{}", out.stdout, out.stderr);
    for entry in fs::read_dir(tmp.path().join("zero/series")).unwrap() {
        let body = fs::read_to_string(entry.unwrap().path()).unwrap();
        for line in body.lines().skip(1) {
            let v: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
            assert_eq!(v, 0.0, "{line}");
        }
    }
}

#[test]
fn configuration_errors_exit_two() {
    let tmp = TempDir::new().unwrap();
    let typo = single_mode("typo", "").replace("kappa", "kapa");
    let out = run(&write_spec(tmp.path(), "typo", &typo), tmp.path());
    assert_eq!(out.code, 2);
    assert!(out.stdout.contains("kapa"), "{}", out.stdout);

    let inviscid = single_mode("inv", r#""energy_inequality""#).replace("kappa = 1.0", "kappa = 0.0");
    let out = run(&write_spec(tmp.path(), "inv", &inviscid), tmp.path());
    assert_eq!(out.code, 2);
    assert!(out.stdout.contains("kappa"), "{}", out.stdout);

    let out = run(&tmp.path().join("missing.toml"), tmp.path());
    assert_eq!(out.code, 2);
}

#[test]
fn usage_errors_exit_nonzero() {
    let out = sqg(&["frobnicate"]);
    assert_ne!(out.code, 0);
    assert!(out.stderr.contains("Usage"), "{}", out.stderr);
    let out = sqg(&["envelope", "x.csv", "--asymptote", "0", "--bogus"]);
    assert_ne!(out.code, 0);
    assert_eq!(sqg(&["--help"]).code, 0);
}

#[test]
fn solver_abort_exits_three_and_keeps_partial_artifacts() {
    let tmp = TempDir::new().unwrap();
    let text = r#"name = "blow"
n = 32
kappa = 0.0
t_final = 5.0
checks = ["conservation"]

[dt]
policy = "fixed"
value = 0.05

[forcing]
kind = "zero"

[initial]
kind = "random"
seed = 1
kmax = 10
amplitude = 1000.0
"#;
    let out = run(&write_spec(tmp.path(), "blow", text), tmp.path());
    assert_eq!(out.code, 3, "{}{}", out.stdout, out.stderr);
    let dir = tmp.path().join("blow");
    assert!(dir.join("checkpoints/abort.ckpt").exists());
    assert!(dir.join("samples.csv").exists());
    assert_eq!(RunManifest::read(&dir).unwrap().status, RunStatus::Aborted);
}

#[test]
fn envelope_recovers_synthetic_rate_and_prefactor() {
    let tmp = TempDir::new().unwrap();
    let mut csv = String::from("t,value\n");
    for i in 0..=100 {
        let t = i as f64 * 0.02;
        csv.push_str(&format!("{t:.17e},{:.17e}\n", 2.0 * (-3.0 * t).exp()));
    }
    let path = tmp.path().join("series.csv");
    fs::write(&path, csv).unwrap();
    let out = sqg(&["envelope", path.to_str().unwrap(), "--asymptote", "0"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let field = |key: &str| -> f64 {
        out.stdout
            .split('\t')
            .find_map(|kv| kv.trim().strip_prefix(&format!("{key}=")))
            .unwrap()
            .parse()
            .unwrap()
    };
    assert!((field("lambda") - 3.0).abs() < 1e-9, "{}", out.stdout);
    assert!((field("prefactor") - 2.0).abs() < 1e-9, "{}", out.stdout);
}

#[test]
fn compare_identical_checkpoints_reports_unit_ratio() {
    let tmp = TempDir::new().unwrap();
    let spec = write_spec(tmp.path(), "cmp", &forced_random("cmp", 16, 0.05, ""));
    assert_eq!(run(&spec, tmp.path()).code, 0);
    let ckpt = tmp.path().join("cmp/checkpoints/final.ckpt");
    let c = ckpt.to_str().unwrap();
    let out = sqg(&["compare", c, c, "--T", "1"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert!(out.stdout.contains("final_ratio=1.0000000000e0"), "{}", out.stdout);
    assert!(out.stdout.contains("max_ratio=1.0000000000e0"), "{}", out.stdout);

    let initial = tmp.path().join("cmp/checkpoints/initial.ckpt");
    let out = sqg(&["compare", initial.to_str().unwrap(), c, "--T", "0.1", "--spec", spec.to_str().unwrap()]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert!(out.stdout.contains("lambda_l="));
}

#[test]
fn absorb_reports_never_entered_with_exit_one() {
    let tmp = TempDir::new().unwrap();
    // unforced: the L∞ ball has radius zero and the decaying mode never reaches it
    let spec = write_spec(tmp.path(), "never", &single_mode("never", ""));
    assert_eq!(run(&spec, tmp.path()).code, 0);
    let out = sqg(&["absorb", tmp.path().join("never").to_str().unwrap(), "--ball", "linf"]);
    assert_eq!(out.code, 1, "{}{}", out.stdout, out.stderr);
    assert!(out.stdout.starts_with("not entered"), "{}", out.stdout);
}

#[test]
fn stored_run_commands() {
    let tmp = TempDir::new().unwrap();
    let spec = write_spec(tmp.path(), "forced", &forced_random("forced", 16, 2.0, r#""energy_inequality", "absorb_linf""#));
    assert_eq!(run(&spec, tmp.path()).code, 0);
    let dir = tmp.path().join("forced");
    let d = dir.to_str().unwrap();

    let out = sqg(&["diagnose", d]);
    assert_eq!(out.code, 0, "{}{}", out.stdout, out.stderr);
    assert_eq!(out.stdout, fs::read_to_string(dir.join("report.txt")).unwrap());

    let out = sqg(&["diagnose", d, "--checks", "energy_inequality,dissipation_identity"]);
    assert_eq!(out.code, 0, "{}{}", out.stdout, out.stderr);
    assert!(out.stdout.contains("check=dissipation_identity\tstatus=pass"));

    let out = sqg(&["absorb", d, "--ball", "linf"]);
    assert_eq!(out.code, 0, "{}{}", out.stdout, out.stderr);
    assert!(out.stdout.starts_with("entered at t="));

    let out = sqg(&["degiorgi", d, "--M", "auto", "--t0", "0.5"]);
    assert!(out.stdout.starts_with("k\teta\ttau\tQ"), "{}{}", out.stdout, out.stderr);
    assert_eq!(out.stdout.lines().filter(|l| l.starts_with(char::is_numeric)).count(), 11);

    let out = sqg(&["holder", d, "--alpha", "0.25", "--xi0", "0.5"]);
    assert!(out.stdout.starts_with("t\tpsi"), "{}{}", out.stdout, out.stderr);
    assert!(out.stdout.contains("alpha=2.5000000000e-1"), "{}", out.stdout);

    let out = sqg(&["diagnose", d, "--checks", "no_such_check"]);
    assert_ne!(out.code, 0);
}

#[test]
fn parallel_jobs_keep_input_order() {
    let tmp = TempDir::new().unwrap();
    let a = write_spec(tmp.path(), "ja", &single_mode("ja", r#""exact_decay""#));
    let b = write_spec(tmp.path(), "jb", &forced_random("jb", 16, 0.05, r#""energy_inequality""#));
    let root = tmp.path().join("out");
    let out = sqg(&[
        "run",
        a.to_str().unwrap(),
        b.to_str().unwrap(),
        "--jobs",
        "2",
        "--output-root",
        root.to_str().unwrap(),
    ]);
    assert_eq!(out.code, 0, "{}{}", out.stdout, out.stderr);
    let lines: Vec<&str> = out.stdout.lines().collect();
    assert!(lines[0].contains("ja.toml") && lines[1].contains("jb.toml"), "{lines:?}");
    assert!(root.join("ja/manifest.json").exists() && root.join("jb/manifest.json").exists());
}

#[test]
fn output_root_from_environment() {
    let tmp = TempDir::new().unwrap();
    let spec = write_spec(tmp.path(), "env", &single_mode("env", r#""exact_decay""#));
    let root = tmp.path().join("from_env");
    std::env::set_var(sqg_cli::cli::OUTPUT_ROOT_ENV, &root);
    let out = sqg(&["run", spec.to_str().unwrap()]);
    std::env::remove_var(sqg_cli::cli::OUTPUT_ROOT_ENV);
    assert_eq!(out.code, 0, "{}{}", out.stdout, out.stderr);
    assert!(root.join("env/manifest.json").exists());
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn spec_hash_is_stable_and_text_sensitive(kappa in 0.01f64..=1.0, n_pow in 3u32..8) {
        let text = single_mode("p", r#""exact_decay""#)
            .replace("n = 16", &format!("n = {}", 1usize << n_pow))
            .replace("kappa = 1.0", &format!("kappa = {kappa:?}"));
        let spec = parse_scenario(&text, None).unwrap();
        prop_assert_eq!(spec.n, 1usize << n_pow);
        prop_assert_eq!(spec.kappa, kappa);
        prop_assert_eq!(spec_hash(&text), spec_hash(&text.clone()));
        prop_assert_ne!(spec_hash(&text), spec_hash(&format!("{text}\n")));
    }
}
