use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_e8jacobi"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn with_cache(dir: &Path, args: &[&str]) -> Output {
    let mut all = vec!["--cache-dir", dir.to_str().unwrap()];
    all.extend_from_slice(args);
    run(&all)
}

#[test]
fn rank_and_delta_tables() {
    let o = run(&["tables", "ranks", "--max", "8"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let row = text.lines().nth(1).unwrap();
    let values: Vec<&str> = row.split('|').nth(1).unwrap().split_whitespace().collect();
    assert_eq!(values, ["1", "3", "5", "10", "15", "27", "39", "63"]);

    let o = run(&["--format", "json", "tables", "delta", "--range", "1..6"]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["values"], serde_json::json!([0, 2, 5, 13, 23, 52]));
    assert_eq!(v["columns"], serde_json::json!([1, 2, 3, 4, 5, 6]));
}

#[test]
fn norms_table_as_csv() {
    let o = run(&["--format", "csv", "tables", "norms", "--max", "5"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[1].ends_with(",1,1,1,2,1"), "{}", rows[1]);
}

#[test]
fn expand_theta() {
    let o = run(&["--no-cache", "expand", "A1", "2"]);
    assert!(o.status.success());
    assert_eq!(
        stdout(&o),
        "A1 (weight 4, index 1) = 1 + q*O_{1,240}^{[00000001]} + q^2*O_{2,2160}^{[10000000]} + O(q^3)\n"
    );
}

#[test]
fn json_output_is_canonical() {
    let args = [
        "--no-cache",
        "--format",
        "json",
        "expand",
        "A1^2 - A2*E4",
        "2",
        "--eval-zero",
    ];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let v: Value = serde_json::from_slice(&a.stdout).unwrap();
    let again = format!("{}\n", serde_json::to_string_pretty(&v).unwrap());
    assert_eq!(stdout(&a), again);
    assert_eq!(v["expansion"]["weight"], 8);
    assert_eq!(v["expansion"]["index"], 2);
    // A1^2 - A2 E4 = 0 at z = 0.
    assert!(v["eval_zero"].as_array().unwrap().iter().all(|c| c == "0"));
}

#[test]
fn cache_hit_matches_miss() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["--format", "json", "expand", "B4", "3"];
    let miss = with_cache(dir.path(), &args);
    let stored = fs::read_dir(dir.path().join("v1")).unwrap().count();
    assert!(stored >= 12, "{stored} entries");
    let hit = with_cache(dir.path(), &args);
    let none = run(&["--no-cache", "--format", "json", "expand", "B4", "3"]);
    assert!(miss.status.success() && hit.status.success());
    assert_eq!(miss.stdout, hit.stdout);
    assert_eq!(miss.stdout, none.stdout);
}

#[test]
fn singular_index_seven() {
    let o = run(&["--no-cache", "--format", "json", "basis", "singular", "7"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["dimension"], 2);
    let phi = &v["phi"][0]["form"]["levels"][1][0];
    assert_eq!(phi["orbit"], serde_json::json!([0, 0, 0, 0, 0, 0, 1, 1]));
    assert_eq!(phi["coefficient"], "1/56");
}

#[test]
fn generator_weights() {
    let o = run(&["--no-cache", "generators", "3"]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("P^w_3 = x^-8 + x^-6 + x^-4 + x^-2 + 1\nrank 5\n"));
}

#[test]
fn verify_passes() {
    let o = run(&["--no-cache", "verify", "lemma62"]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("lemma62: PASS"));
}

#[test]
fn usage_errors_exit_3() {
    for args in [
        &["tables", "bogus"][..],
        &["--no-cache", "expand", "A1^2 + A2"],
        &["--no-cache", "expand", "A1^"],
        &["basis", "weak", "4"],
        &["tables", "ranks", "--range", "5..2"],
    ] {
        let o = run(args);
        assert_eq!(o.status.code(), Some(3), "{args:?}");
    }
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn resource_errors_exit_2() {
    let o = run(&["--no-cache", "--max-shell-norm", "3", "expand", "A1", "4"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["--no-cache", "--order", "3", "basis", "singular", "9"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("needs generator expansions"));

    let dir = tempfile::tempdir().unwrap();
    let v1 = dir.path().join("v1");
    fs::create_dir_all(&v1).unwrap();
    fs::write(v1.join("E4.n3.json"), "{").unwrap();
    let o = with_cache(dir.path(), &["expand", "A1", "2"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn tampered_cache_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    assert!(
        with_cache(dir.path(), &["--order", "2", "verify", "lemma31"])
            .status
            .success()
    );
    let path = dir.path().join("v1").join("B5hat.n3.json");
    let mut entry: Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    entry["payload"]["levels"][1][0][1] = serde_json::json!(["7", "1"]);
    fs::write(&path, entry.to_string()).unwrap();
    let o = with_cache(dir.path(), &["--order", "2", "verify", "lemma31"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).starts_with("lemma31: FAIL"));
}
