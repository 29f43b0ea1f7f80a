use std::path::Path;
use std::process::{Command, Output};

fn falsify(args: &[&str], dir: &Path, seed: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_falsify"));
    cmd.args(args).current_dir(dir).env_remove("FALSIFY_SEED");
    if let Some(s) = seed {
        cmd.env("FALSIFY_SEED", s);
    }
    cmd.output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL: &str = r#"
name = "small"
spec = "G[0,4] (y < 9.5)"
model = "stateless_map"
horizon = 4
dt = 0.25
control_points = 2
n_trials = 4
seed = 5
algorithm = "ts"
optimizer = "sa"
[staging]
n_init = 3
n_opt = 5
"#;

#[test]
fn spec_listing_and_lookup() {
    let dir = tempfile::tempdir().unwrap();
    let list = falsify(&["spec", "--list"], dir.path(), None);
    assert!(list.status.success());
    let text = String::from_utf8(list.stdout).unwrap();
    for name in ["S1", "S2", "S3_easy", "S3_hard", "S4_easy", "S4_mid", "S4_hard", "S_init", "S_stable", "powertrain_ceiling", "stateless_reach"] {
        assert!(text.lines().any(|l| l.starts_with(name)), "{name} missing");
    }
    let one = falsify(&["spec", "S3_hard"], dir.path(), None);
    assert_eq!(String::from_utf8(one.stdout).unwrap(), "F[10,30] (v <= 53 | v >= 57)\n");
    let bad = falsify(&["spec", "S9"], dir.path(), None);
    assert_eq!(bad.status.code(), Some(2));
    assert!(stderr(&bad).contains("S_stable"));
}

#[test]
fn run_writes_deterministic_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("small.toml"), SMALL).unwrap();
    let mut summaries = Vec::new();
    for out in ["a", "b"] {
        let o = falsify(&["run", "small.toml", "--out", out], dir.path(), None);
        assert!(o.status.success(), "{}", stderr(&o));
        let d = dir.path().join(out);
        for f in ["records.json", "summary.csv", "timing.csv", "best.svg", "best_input.csv", "best_output.csv"] {
            assert!(d.join(f).is_file(), "{f} missing");
        }
        summaries.push((std::fs::read(d.join("summary.csv")).unwrap(), std::fs::read(d.join("records.json")).unwrap()));
    }
    assert_eq!(summaries[0], summaries[1]);
    let csv = String::from_utf8(summaries[0].0.clone()).unwrap();
    assert!(csv.starts_with("config,model,spec,algorithm,optimizer,successes,"));
    assert!(csv.lines().nth(1).unwrap().starts_with("small,stateless_map,custom,ts,sa,"));
}

#[test]
fn seed_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("small.toml"), SMALL).unwrap();
    let o = falsify(&["run", "small.toml", "--out", "env"], dir.path(), Some("77"));
    assert!(o.status.success(), "{}", stderr(&o));
    let records: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("env/records.json")).unwrap()).unwrap();
    assert_eq!(records["seed"], 77);
    assert_eq!(records["trials"].as_array().unwrap().len(), 4);

    let bad = falsify(&["run", "small.toml"], dir.path(), Some("soon"));
    assert_eq!(bad.status.code(), Some(2));
    assert!(stderr(&bad).contains("FALSIFY_SEED"));
}

#[test]
fn config_errors_exit_with_two_and_name_the_key() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.toml"), SMALL.replace("[staging]", "[staging]\nn_stuk = 2")).unwrap();
    let o = falsify(&["run", "bad.toml"], dir.path(), None);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("staging.n_stuk"), "{}", stderr(&o));

    std::fs::write(dir.path().join("grid.toml"), SMALL.replace("control_points = 2", "control_points = 3")).unwrap();
    let o = falsify(&["run", "grid.toml"], dir.path(), None);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("control_points"));

    let o = falsify(&["run", "missing.toml"], dir.path(), None);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn runtime_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("small.toml"), SMALL).unwrap();
    std::fs::write(dir.path().join("taken"), "").unwrap();
    let o = falsify(&["run", "small.toml", "--out", "taken"], dir.path(), None);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
}

#[test]
fn matrix_rows_follow_input_order() {
    let dir = tempfile::tempdir().unwrap();
    let body = SMALL.replace("name = \"small\"\n", "");
    let exp = |name: &str, alg: &str| format!("[[experiment]]\nname = \"{name}\"\n{}", body.replace("\"ts\"", &format!("\"{alg}\"")).replace("[staging]", "[experiment.staging]"));
    let text = [exp("z_plain", "plain"), exp("a_ats", "ats"), exp("m_ts", "ts")].join("\n");
    std::fs::write(dir.path().join("m.toml"), text).unwrap();
    let o = falsify(&["matrix", "m.toml", "--out", "mx"], dir.path(), None);
    assert!(o.status.success(), "{}", stderr(&o));
    let matrix = std::fs::read_to_string(dir.path().join("mx/matrix.csv")).unwrap();
    let names: Vec<&str> = matrix.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(names, ["z_plain", "a_ats", "m_ts"]);
    let table = std::fs::read_to_string(dir.path().join("mx/table.csv")).unwrap();
    assert_eq!(table.lines().next().unwrap(), "model,spec,algorithm,optimizer,time,successes");
    assert_eq!(table.lines().count(), 4);
    assert!(dir.path().join("mx/a_ats/summary.csv").is_file());

    std::fs::write(dir.path().join("empty.toml"), "").unwrap();
    let o = falsify(&["matrix", "empty.toml", "--out", "none"], dir.path(), None);
    assert!(o.status.success());
    assert_eq!(std::fs::read_to_string(dir.path().join("none/matrix.csv")).unwrap().lines().count(), 1);
}

#[test]
fn theory_check_reports_json() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"
        [[check]]
        kind = "statelessness"
        model = "stateless_map"
        triples = 50
        sampler = { prefix_horizon = 1.0, prefix_segments = 2, suffix_horizon = 1.0, suffix_segments = 2, dt = 0.25 }

        [[check]]
        kind = "time_monotonicity"
        model = "oscillator"
        spec = "G (x < 0.8)"
        triples = 200
        sampler = { prefix_horizon = 4.0, prefix_segments = 4, suffix_horizon = 4.0, suffix_segments = 4, dt = 0.25 }
    "#;
    std::fs::write(dir.path().join("t.toml"), text).unwrap();
    let o = falsify(&["theory-check", "t.toml", "--out", "report.json"], dir.path(), None);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report[0]["kind"], "statelessness");
    assert_eq!(report[0]["passed"], true);
    assert_eq!(report[1]["passed"], false);
    assert!(!report[1]["report"]["violations"].as_array().unwrap().is_empty());
    assert_eq!(std::fs::read(dir.path().join("report.json")).unwrap(), o.stdout);

    std::fs::write(dir.path().join("bad.toml"), "[[check]]\nkind = \"proof\"\n").unwrap();
    assert_eq!(falsify(&["theory-check", "bad.toml"], dir.path(), None).status.code(), Some(2));
}

#[test]
fn shipped_configs_load() {
    use falsify_cli::config::{read_toml, ExperimentConfig, MatrixConfig};
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for f in ["s3_hard_gnm_ts.toml", "custom_powertrain.toml"] {
        read_toml::<ExperimentConfig>(&root.join(f)).unwrap().resolve().unwrap();
    }
    let table = read_toml::<MatrixConfig>(&root.join("table.toml")).unwrap().resolve().unwrap();
    assert_eq!(table.len(), 81);
    let dir = tempfile::tempdir().unwrap();
    let o = falsify(&["theory-check", root.join("theory.toml").to_str().unwrap()], dir.path(), None);
    assert!(o.status.success(), "{}", stderr(&o));
}
