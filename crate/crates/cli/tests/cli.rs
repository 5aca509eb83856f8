use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mimo_decay::decay_oracle::{read_decay_csv, write_decay_csv, BoundReport, DecaySample};
use mimo_decay::lattice_codes::random_ensemble;
use mimo_decay::{brute_force_decay, LatticeSpec, Witness};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mimo-decay")).args(args).output().unwrap()
}

fn gen_spec(dir: &Path) -> PathBuf {
    let spec = dir.join("spec.json");
    let out = run(&["gen", "--U", "2", "--n", "1", "--k", "2", "--seed", "1", "--out", spec.to_str().unwrap()]);
    assert!(out.status.success());
    spec
}

#[test]
fn gen_then_decay_matches_library_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let spec = gen_spec(dir.path());
    let out = run(&["decay", "--spec", spec.to_str().unwrap(), "--N", "1,2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = read_decay_csv(out.stdout.as_slice()).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows[1].value <= rows[0].value);

    let e = random_ensemble(2, 1, 2, 1).unwrap();
    for (row, bound) in rows.iter().zip([1u64, 2]) {
        let direct = brute_force_decay(&e.with_uniform_bound(bound).unwrap(), u64::MAX).unwrap();
        assert_eq!(row, &direct);
    }
}

#[test]
fn generator_flags_and_spec_file_agree() {
    let dir = tempfile::tempdir().unwrap();
    let spec = gen_spec(dir.path());
    let from_file = run(&["decay", "--spec", spec.to_str().unwrap(), "--N", "1"]);
    let from_flags = run(&["decay", "--U", "2", "--n", "1", "--k", "2", "--seed", "1", "--N", "1"]);
    assert!(from_file.status.success() && from_flags.status.success());
    assert_eq!(from_file.stdout, from_flags.stdout);
}

#[test]
fn verify_lemmas_reports_full_pass_counts() {
    let out = run(&["verify-lemmas", "--trials", "1000", "--seed", "0"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("row reduction identity: 1000/1000 passed"), "{text}");
    assert!(text.contains("projected basis bound: 1000/1000 passed"), "{text}");
}

#[test]
fn budget_refusal_names_required_count() {
    let out = run(&["decay", "--U", "2", "--n", "1", "--k", "2", "--seed", "1", "--N", "1,3", "--budget", "100000"]);
    assert_eq!(out.status.code(), Some(4));
    let err = String::from_utf8(out.stderr).unwrap();
    // (7^4 - 1)^2 tuples at N = 3
    assert!(err.contains("N=3") && err.contains("5760000"), "{err}");
}

#[test]
fn input_source_must_be_unique() {
    let dir = tempfile::tempdir().unwrap();
    let spec = gen_spec(dir.path());
    let both = run(&["decay", "--spec", spec.to_str().unwrap(), "--U", "2", "--N", "1"]);
    assert_eq!(both.status.code(), Some(2));
    let partial = run(&["decay", "--U", "2", "--n", "1", "--N", "1"]);
    assert_eq!(partial.status.code(), Some(2));
    let no_grid = run(&["decay", "--spec", spec.to_str().unwrap()]);
    assert_eq!(no_grid.status.code(), Some(2));
    let zero = run(&["decay", "--spec", spec.to_str().unwrap(), "--N", "0"]);
    assert_eq!(zero.status.code(), Some(2));
}

#[test]
fn schema_and_io_errors_have_their_own_codes() {
    let dir = tempfile::tempdir().unwrap();
    let spec = gen_spec(dir.path());
    let mut doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(&spec).unwrap()).unwrap();
    doc["users"][1]["basis"].as_array_mut().unwrap().pop();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, doc.to_string()).unwrap();
    let out = run(&["decay", "--spec", bad.to_str().unwrap(), "--N", "1"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8(out.stderr).unwrap().contains("users[1].basis"));

    let missing = dir.path().join("missing.json");
    let out = run(&["decay", "--spec", missing.to_str().unwrap(), "--N", "1"]);
    assert_eq!(out.status.code(), Some(5));

    let out = run(&["gen", "--U", "2", "--n", "1", "--k", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn outputs_round_trip_through_their_schemas() {
    let dir = tempfile::tempdir().unwrap();
    let spec = gen_spec(dir.path());
    let s = spec.to_str().unwrap();

    let text = fs::read_to_string(&spec).unwrap();
    let again = LatticeSpec::from_json(&text).unwrap();
    again.to_ensemble().unwrap();
    assert_eq!(again.to_json().unwrap() + "\n", text);

    let csv_path = dir.path().join("d.csv");
    assert!(run(&["decay", "--spec", s, "--N", "1,2", "--out", csv_path.to_str().unwrap()]).status.success());
    let bytes = fs::read(&csv_path).unwrap();
    let mut rewritten = Vec::new();
    write_decay_csv(&read_decay_csv(bytes.as_slice()).unwrap(), &mut rewritten).unwrap();
    assert_eq!(rewritten, bytes);

    let json_path = dir.path().join("d.json");
    assert!(run(&["decay", "--spec", s, "--N", "1,2", "--out", json_path.to_str().unwrap()]).status.success());
    let text = fs::read_to_string(&json_path).unwrap();
    let samples: Vec<DecaySample> = serde_json::from_str(&text).unwrap();
    assert_eq!(samples, read_decay_csv(bytes.as_slice()).unwrap());
    assert_eq!(serde_json::to_string_pretty(&samples).unwrap() + "\n", text);

    let w_path = dir.path().join("w.json");
    assert!(run(&["witness", "--spec", s, "--N", "1,4", "--out", w_path.to_str().unwrap()]).status.success());
    let text = fs::read_to_string(&w_path).unwrap();
    let ws: Vec<Witness> = serde_json::from_str(&text).unwrap();
    assert_eq!(ws.len(), 2);
    for w in &ws {
        w.validate().unwrap();
        assert!(w.identity_pass);
    }
    assert_eq!(serde_json::to_string_pretty(&ws).unwrap() + "\n", text);

    let r_path = dir.path().join("r.json");
    assert!(run(&["report", "--spec", s, "--N", "1,2", "--out", r_path.to_str().unwrap()]).status.success());
    let text = fs::read_to_string(&r_path).unwrap();
    let r = BoundReport::from_json(&text).unwrap();
    assert_eq!(r.all_feasible, Some(true));
    assert_eq!(r.to_json().unwrap() + "\n", text);
}

#[test]
fn report_table_and_oracle_only_mode() {
    let out = run(&["report", "--U", "2", "--n", "1", "--k", "2", "--seed", "1", "--N", "1,2"]);
    assert!(out.status.success());
    let table = String::from_utf8(out.stdout).unwrap();
    assert!(table.contains("feasible") && table.contains("pass"), "{table}");

    let out = run(&["report", "--U", "2", "--n", "1", "--k", "2", "--seed", "1", "--N", "1,2", "--oracle-only"]);
    assert!(out.status.success());
    let table = String::from_utf8(out.stdout).unwrap();
    assert!(table.contains("oracle only"), "{table}");
    assert!(!table.contains("pass"), "{table}");
}

#[test]
fn repeated_runs_are_byte_identical() {
    let args = ["witness", "--U", "3", "--n", "1", "--k", "3", "--seed", "7", "--N", "1,2"];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}
