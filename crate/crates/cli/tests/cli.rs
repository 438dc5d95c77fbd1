use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn spgeq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spgeq"))
        .args(args)
        .current_dir(root())
        .env_remove("SPGEQ_FORMAT")
        .output()
        .expect("spgeq runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn goldens_match() {
    let manifest: Value = serde_json::from_str(
        &std::fs::read_to_string(root().join("fixtures/manifest.json")).unwrap(),
    )
    .unwrap();
    let entries = manifest.as_array().unwrap();
    assert!(entries.len() >= 20);
    for e in entries {
        let args: Vec<&str> = e["args"]
            .as_array()
            .unwrap()
            .iter()
            .map(|a| a.as_str().unwrap())
            .collect();
        let o = spgeq(&args);
        assert_eq!(
            o.status.code(),
            Some(e["exit"].as_i64().unwrap() as i32),
            "{args:?}: {}",
            stderr(&o)
        );
        let golden = root()
            .join("fixtures/golden")
            .join(e["golden"].as_str().unwrap());
        assert_eq!(
            stdout(&o),
            std::fs::read_to_string(&golden).unwrap(),
            "{}",
            golden.display()
        );
    }
}

#[test]
fn every_fixture_is_listed() {
    let manifest = std::fs::read_to_string(root().join("fixtures/manifest.json")).unwrap();
    for entry in std::fs::read_dir(root().join("fixtures")).unwrap() {
        let name = entry.unwrap().file_name().into_string().unwrap();
        if name.ends_with(".json") && name != "manifest.json" {
            assert!(manifest.contains(&format!("fixtures/{name}")), "{name}");
        }
    }
}

#[test]
fn two_level_csv_rows() {
    let o = spgeq(&["solve", "fixtures/two_level.json", "--format", "csv"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.starts_with("record,id,flow,throughput,price,active\n"));
    assert!(out.lines().any(|l| l == "arc,s->j1,5/46,,,true"));
    assert!(out.lines().any(|l| l == "node,v1,,3/92,39/23,true"));
    assert!(out.lines().any(|l| l == "node,j2,,3/46,3/2,true"));
}

#[test]
fn bridge_is_not_series_parallel() {
    let o = spgeq(&["validate", "fixtures/bridge.json"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("not series-parallel"));
}

#[test]
fn two_market_prefers_high() {
    let o = spgeq(&[
        "two-market",
        "--cost",
        "7",
        "--a1",
        "20",
        "--b1",
        "1",
        "--a2",
        "12",
        "--b2",
        "1",
    ]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("preferred: high"));
    // (20 - 7)^2 / 8
    let pi = (20.0f64 - 7.0).powi(2) / 8.0;
    assert!(out.contains(&format!("source_utility: {pi}")), "{out}");
}

#[test]
fn decimals_on_request() {
    let o = spgeq(&[
        "solve",
        "fixtures/two_level.json",
        "--format",
        "csv",
        "--decimal",
    ]);
    let out = stdout(&o);
    let want = format!("{:.12}", 5.0f64 / 46.0);
    assert!(out.contains(&want[..14]), "{out}");
    assert!(!out.contains("5/46"));
}

#[test]
fn json_parses_and_keeps_fractions() {
    let o = spgeq(&["solve", "fixtures/diamond.json", "--format", "json"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let rows = v["rows"].as_array().unwrap();
    let su = rows.iter().find(|r| r["id"] == "s->u").unwrap();
    assert_eq!(su["flow"], "1");
    assert_eq!(su["active"], true);
    assert_eq!(v["notes"]["inflow"], "2");
}

#[test]
fn format_from_environment() {
    let o = Command::new(env!("CARGO_BIN_EXE_spgeq"))
        .args(["solve", "fixtures/line.json"])
        .current_dir(root())
        .env("SPGEQ_FORMAT", "csv")
        .output()
        .unwrap();
    assert!(stdout(&o).starts_with("record,id,flow"));
}

#[test]
fn identical_requests_identical_bytes() {
    for args in [
        &["analyze", "fixtures/merging.json", "--format", "json"][..],
        &[
            "oracle", "--count", "15", "--budget", "9", "--format", "csv",
        ][..],
        &["demo", "dag"][..],
    ] {
        assert_eq!(spgeq(args).stdout, spgeq(args).stdout, "{args:?}");
    }
}

#[test]
fn output_file() {
    let path = std::env::temp_dir().join(format!("spgeq-out-{}.csv", std::process::id()));
    let o = spgeq(&[
        "solve",
        "fixtures/line.json",
        "--format",
        "csv",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let written = std::fs::read_to_string(&path).unwrap();
    std::fs::remove_file(&path).unwrap();
    assert!(written.contains("node,v,,2,5,true"));
}

#[test]
fn exit_codes() {
    let dir = std::env::temp_dir().join(format!("spgeq-exit-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let write = |name: &str, text: &str| {
        let p = dir.join(name);
        std::fs::write(&p, text).unwrap();
        p.to_str().unwrap().to_string()
    };
    let broken = write("broken.json", "{");
    let cyclic = write(
        "cycle.json",
        r#"{"nodes":["s","a","b","t"],"source":{"id":"s","cost":1},"sink":{"id":"t","demand":5,"slope":1},
           "arcs":[["s","a"],["a","b"],["b","a"],["b","t"]]}"#,
    );
    let cheap = write(
        "cheap.json",
        r#"{"nodes":["s","t"],"source":{"id":"s","cost":5},"sink":{"id":"t","demand":5,"slope":1},"arcs":[["s","t"]]}"#,
    );
    assert_eq!(spgeq(&["solve", &broken]).status.code(), Some(2));
    assert_eq!(spgeq(&["solve", &cyclic]).status.code(), Some(2));
    assert_eq!(
        spgeq(&["solve", "fixtures/missing.json"]).status.code(),
        Some(2)
    );
    assert_eq!(
        spgeq(&["solve", "fixtures/crossed_dag.json"]).status.code(),
        Some(3)
    );
    assert_eq!(spgeq(&["solve", &cheap]).status.code(), Some(4));
    assert_eq!(
        spgeq(&["solve", "fixtures/two_sources.json"]).status.code(),
        Some(4)
    );
    assert_eq!(spgeq(&["oracle", "--budget", "2"]).status.code(), Some(4));
    let swapped = spgeq(&[
        "two-market",
        "--cost",
        "7",
        "--a1",
        "10",
        "--b1",
        "1",
        "--a2",
        "12",
        "--b2",
        "1",
    ]);
    assert_eq!(swapped.status.code(), Some(4));
    assert_eq!(
        spgeq(&["swap", "fixtures/two_level.json", "--at", "s"])
            .status
            .code(),
        Some(4)
    );
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn swap_keeps_invariants() {
    let o = spgeq(&[
        "swap",
        "fixtures/merging.json",
        "--at",
        "h",
        "--format",
        "csv",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let invariants: Vec<&str> = out
        .lines()
        .filter(|l| l.starts_with("invariant,"))
        .collect();
    assert_eq!(invariants.len(), 4);
    assert!(invariants.iter().all(|l| l.ends_with(",true")));
}

#[test]
fn sweep_is_monotone() {
    let o = spgeq(&[
        "sweep",
        "fixtures/diamond.json",
        "--parameter",
        "cost",
        "--from",
        "0.5",
        "--to",
        "6",
        "--step",
        "0.5",
        "--format",
        "csv",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(
        out.lines().next().unwrap(),
        "cost,inflow,welfare,utility:s,utility:u,utility:v"
    );
    assert_eq!(out.lines().count(), 1 + 12 + 1);
    assert!(out.ends_with("monotone,true,,,,\n"));
}

#[test]
fn msspg_demo_trace() {
    let o = spgeq(&["demo", "msspg", "--rounds", "20", "--format", "json"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 20);
    assert_eq!(rows[0]["to"], "149/100");
    assert_eq!(rows[19]["to"], "13/10");
    assert_eq!(v["notes"]["strictly_decreasing"], true);
}

#[test]
fn dag_demo_reports_the_finding() {
    let o = spgeq(&["demo", "dag", "--format", "json"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let rows = v["rows"].as_array().unwrap();
    let get = |rec: &str, id: &str| {
        rows.iter()
            .find(|r| r["record"] == rec && r["id"] == id)
            .unwrap()["value"]
            .clone()
    };
    assert_eq!(get("case_utility", "both"), "10");
    assert_eq!(get("price", "a->c"), "8");
    assert_eq!(get("competition", "gain"), "1/4");
    assert_eq!(v["notes"]["no_improving_deviation"], false);
}
