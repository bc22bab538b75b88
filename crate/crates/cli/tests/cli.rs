use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn coxdes(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coxdes"))
        .args(args)
        .env_remove("COXDES_CACHE_DIR")
        .output()
        .expect("binary runs")
}

fn stdout_ok(args: &[&str]) -> String {
    let out = coxdes(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn json_ok(args: &[&str]) -> Value {
    serde_json::from_str(&stdout_ok(args)).unwrap()
}

fn spec(name: &str) -> String {
    root().join("specs").join(name).to_str().unwrap().to_string()
}

fn assert_schema(schema: &str, doc: &Value) {
    let text = std::fs::read_to_string(root().join("schemas").join(schema)).unwrap();
    let schema: Value = serde_json::from_str(&text).unwrap();
    let compiled = jsonschema::JSONSchema::compile(&schema).unwrap();
    let msgs: Vec<String> = match compiled.validate(doc) {
        Ok(()) => Vec::new(),
        Err(errors) => errors.map(|e| format!("{} at {}", e, e.instance_path)).collect(),
    };
    assert!(msgs.is_empty(), "{} rejects output: {msgs:?}", schema["title"]);
}

#[test]
fn dist_a2_joint_counts() {
    let v = json_ok(&["dist", "--group", "A:2"]);
    assert_eq!(v["joint"]["counts"], serde_json::json!([["1", "0", "0"], ["0", "4", "0"], ["0", "0", "1"]]));
    assert_eq!(v["t_pmf"]["counts"], serde_json::json!(["1", "0", "4", "0", "1"]));
    assert_eq!(v["exact"], true);
    assert_schema("dist_output.schema.json", &v);
}

#[test]
fn dist_dihedral_csv_has_three_rows() {
    let out = stdout_ok(&["dist", "--group", "I2:5", "--format", "csv"]);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines, ["des,ides,count,exact", "0,0,1,true", "1,1,8,true", "2,2,1,true"]);
}

#[test]
fn dist_large_d_is_flagged_approximate() {
    let v = json_ok(&["dist", "--group", "D:40"]);
    assert_eq!(v["exact"], false);
    assert_eq!(v["factors"][0]["source"], "surrogate");
    assert_schema("dist_output.schema.json", &v);
}

#[test]
fn moments_u4_column_matches_formula() {
    let v = json_ok(&["moments", "--family", "A", "--n", "3..10", "--key", "U4"]);
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 8);
    for row in rows {
        let n = row["n"].as_i64().unwrap();
        // (n+2)(5n+8)/240, reduced
        let (mut p, mut q) = ((n + 2) * (5 * n + 8), 240i64);
        let g = gcd(p, q);
        p /= g;
        q /= g;
        let want = if q == 1 { p.to_string() } else { format!("{p}/{q}") };
        assert_eq!(row["closed_form"], want.as_str(), "n = {n}");
        assert_eq!(row["recursion"], want.as_str());
        assert_eq!(row["pmf"], want.as_str());
        assert_eq!(row["equal"], true);
    }
    assert_schema("moments_output.schema.json", &v);
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

#[test]
fn moments_of_a_product() {
    let v = json_ok(&["moments", "--group", "A:3 x I2:4", "--key", "varT"]);
    assert_eq!(v[0]["additive"], "31/12");
    assert_eq!(v[0]["pmf"], "31/12");
    assert_schema("moments_output.schema.json", &v);
}

#[test]
fn moments_csv_for_b4() {
    let out = stdout_ok(&["moments", "--family", "B", "--n", "4", "--key", "T4c", "--format", "csv"]);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "family,n,key,exact_value_numerator,exact_value_denominator,source");
    assert_eq!(&lines[1..], ["B,4,T4c,259,48,closed_form", "B,4,T4c,259,48,recursion", "B,4,T4c,259,48,pmf"]);
}

#[test]
fn sequence_dihedral_squares_is_bounded() {
    let v = json_ok(&["sequence", "--spec", &spec("dihedral_squares.json")]);
    assert!(v["verdict"].as_str().unwrap().starts_with("criterion bounded"));
    let basel = std::f64::consts::PI.powi(2) / 6.0;
    for r in v["records"].as_array().unwrap() {
        assert!(r["criterion_value"].as_f64().unwrap() < basel);
    }
    assert_schema("analysis_report.schema.json", &v);
}

#[test]
fn sequence_a_n_criterion_is_n() {
    let v = json_ok(&["sequence", "--spec", &spec("a_n.json"), "--n", "5..9", "--profile", "1"]);
    for r in v["records"].as_array().unwrap() {
        assert_eq!(r["criterion"], r["n"].to_string().as_str());
    }
    assert!(v["verdict"].as_str().unwrap().starts_with("criterion grows"));
    assert_schema("analysis_report.schema.json", &v);
}

#[test]
fn sequence_mixed_grows_linearly() {
    let v = json_ok(&["sequence", "--spec", &spec("mixed.json"), "--n", "10,20,40"]);
    let c: Vec<f64> = v["records"].as_array().unwrap().iter().map(|r| r["criterion_value"].as_f64().unwrap()).collect();
    // 3n + 5n from the A and D blocks plus 1/n^2 from the dihedral factor
    for (n, c) in [10.0, 20.0, 40.0].iter().zip(&c) {
        assert!((c - (8.0 * n + 1.0 / (n * n))).abs() < 1e-9);
    }
    assert!(v["verdict"].as_str().unwrap().starts_with("criterion grows"));
}

#[test]
fn sequence_csv_header_is_stable() {
    let out = stdout_ok(&["sequence", "--spec", &spec("halving.json"), "--n", "8,16", "--format", "csv"]);
    assert_eq!(
        out.lines().next().unwrap(),
        "n,group_rank,k_n,m_n,criterion,criterion_value,variance,variance_exact,max_ratio,\
         lindeberg_1/10,lindeberg_1/4,lindeberg_1/2,lindeberg_1,ks_plain,ks_corrected,exact,error"
    );
    assert_eq!(out.lines().count(), 3);
}

#[test]
fn complex_a3_all_checks_pass() {
    let v = json_ok(&["complex", "--group", "A:3", "--check", "all"]);
    for (name, ok) in v["checks"].as_object().unwrap() {
        assert_eq!(ok, true, "{name}");
    }
    assert_eq!(v["h_vector"], v["t_tally"]);
    assert_schema("complex_report.schema.json", &v);
}

#[test]
fn simulate_is_stable_across_seeds() {
    let a = json_ok(&["simulate", "--group", "A:100", "--samples", "100000", "--seed", "7"]);
    let b = json_ok(&["simulate", "--group", "A:100", "--samples", "100000", "--seed", "8"]);
    let ka = a["ks_mc"]["corrected"].as_f64().unwrap();
    let kb = b["ks_mc"]["corrected"].as_f64().unwrap();
    assert!((ka - kb).abs() <= 0.01, "{ka} vs {kb}");
    assert_schema("simulate_output.schema.json", &a);
}

#[test]
fn same_seed_same_bytes() {
    let args = ["simulate", "--group", "B:12 x I2:9", "--samples", "30000", "--seed", "42"];
    assert_eq!(stdout_ok(&args), stdout_ok(&args));
}

#[test]
fn shipped_specs_validate() {
    for entry in std::fs::read_dir(root().join("specs")).unwrap() {
        let path = entry.unwrap().path();
        let doc: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        assert_schema("sequence_spec.schema.json", &doc);
    }
}

#[test]
fn exit_codes() {
    let code = |args: &[&str]| coxdes(args).status.code();
    assert_eq!(code(&["dist", "--group", "A:x"]), Some(2));
    assert_eq!(code(&["dist", "--group", "I2:2"]), Some(2));
    assert_eq!(code(&["moments", "--family", "D", "--n", "4"]), Some(2));
    assert_eq!(code(&["complex", "--group", "A:3", "--check", "nonsense"]), Some(2));
    assert_eq!(code(&["sequence", "--spec", "/nonexistent.json"]), Some(2));
    assert_eq!(code(&["complex", "--group", "A:8"]), Some(3));
    assert_eq!(code(&["dist", "--group", "A:50", "--exact-rank-limit", "10"]), Some(3));
}

#[test]
fn cache_directory_is_used() {
    let dir = std::env::temp_dir().join(format!("coxdes-cli-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_coxdes"))
            .args(["dist", "--group", "B:6"])
            .env("COXDES_CACHE_DIR", &dir)
            .output()
            .unwrap()
    };
    let first = run();
    assert!(first.status.success());
    let files: Vec<_> = std::fs::read_dir(&dir).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(files.len(), 1, "{files:?}");
    assert!(files[0].to_str().unwrap().starts_with("B6-v"));
    assert_eq!(run().stdout, first.stdout);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn schemas_reject_malformed_output() {
    let text = std::fs::read_to_string(root().join("schemas/dist_output.schema.json")).unwrap();
    let schema: Value = serde_json::from_str(&text).unwrap();
    let compiled = jsonschema::JSONSchema::compile(&schema).unwrap();
    let mut v = json_ok(&["dist", "--group", "A:2"]);
    assert!(compiled.is_valid(&v));
    v["t_pmf"]["counts"][0] = serde_json::json!(1);
    assert!(!compiled.is_valid(&v));
}
