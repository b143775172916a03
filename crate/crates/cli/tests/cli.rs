use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use nvm_core::oracles::closed_forms_complete;

fn nvm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nvm"))
        .args(args)
        .env_remove("THREADS")
        .output()
        .expect("spawn nvm")
}

fn nvm_in(dir: &Path, args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_nvm"));
    cmd.current_dir(dir).args(args).env_remove("THREADS");
    if let Some(t) = threads {
        cmd.env("THREADS", t);
    }
    cmd.output().expect("spawn nvm")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn oracle_prints_the_complete_graph_closed_form() {
    let o = nvm(&[
        "oracle", "--family", "complete", "--n", "5", "--eps", "0.3", "--d", "2",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let mut lines = out.lines();
    assert_eq!(
        lines.next(),
        Some("graph,epsilon,d,value,source,pair_chain,abs_diff")
    );
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let value: f64 = row[3].parse().unwrap();
    let (_, p2) = closed_forms_complete(5, 0.3).unwrap();
    assert_eq!(value, p2);
    assert_eq!(row[4], "closed_form");
    let chain: f64 = row[5].parse().unwrap();
    assert!((chain - p2).abs() < 1e-12);
    assert!(stderr(&o).starts_with("p2 = "));
}

#[test]
fn simulate_twice_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "simulate", "--family", "complete", "--n", "2", "--eps", "1.0", "--t", "1000", "--seed",
        "1", "--out",
    ];
    for out in ["a", "b"] {
        let mut a = args.to_vec();
        a.push(out);
        let o = nvm_in(dir.path(), &a, None);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for f in ["trace.bits", "trace.json"] {
        let a = fs::read(dir.path().join("a").join(f)).unwrap();
        let b = fs::read(dir.path().join("b").join(f)).unwrap();
        assert!(!a.is_empty());
        assert_eq!(a, b, "{f}");
    }
    // 1001 observations pack into 126 bytes.
    assert_eq!(
        fs::read(dir.path().join("a/trace.bits")).unwrap().len(),
        126
    );
}

#[test]
fn manifest_reruns_reproduce_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let o = nvm_in(
        dir.path(),
        &[
            "stats", "--family", "cycle:5", "--eps", "0.4", "--t", "50000", "--seed", "9", "--out",
            "first",
        ],
        None,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let manifest = fs::read_to_string(dir.path().join("first/manifest.json")).unwrap();
    assert!(
        manifest.contains("\"d\": 2"),
        "defaults are recorded: {manifest}"
    );
    let o = nvm_in(
        dir.path(),
        &[
            "stats",
            "--config",
            "first/manifest.json",
            "--out",
            "second",
        ],
        Some("3"),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(
        fs::read(dir.path().join("first/stats.csv")).unwrap(),
        fs::read(dir.path().join("second/stats.csv")).unwrap()
    );
}

#[test]
fn flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("c.json"),
        r#"{"family": "complete:4", "eps": 0.5, "d": 1}"#,
    )
    .unwrap();
    let o = nvm_in(
        dir.path(),
        &["oracle", "--config", "c.json", "--eps", "0.3"],
        None,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let (p1, _) = closed_forms_complete(4, 0.3).unwrap();
    let row = stdout(&o).lines().nth(1).unwrap().to_string();
    assert_eq!(row.split(',').nth(3).unwrap().parse::<f64>().unwrap(), p1);
}

#[test]
fn complete_three_versus_five_sweep_flags_no_sign_change() {
    // The two curves never cross on (0, 1), so nothing is flagged.
    let o = nvm(&[
        "sweep",
        "--a",
        "complete:3",
        "--b",
        "complete:5",
        "--d",
        "2",
        "--grid",
        "0.05:0.95:0.05",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let rows: Vec<&str> = out.lines().skip(1).collect();
    assert_eq!(rows.len(), 19);
    assert!(rows.iter().all(|r| r.ends_with(",false")));
    assert!(stderr(&o).contains("0 sign change(s)"));
}

#[test]
fn jsonl_output() {
    let o = nvm(&[
        "sweep",
        "--a",
        "bipartite:3,1",
        "--b",
        "bipartite:2,2",
        "--grid",
        "0.1:0.9:0.4",
        "--format",
        "jsonl",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let lines: Vec<serde_json::Value> = stdout(&o)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[0]["epsilon"], 0.1);
}

#[test]
fn exit_codes() {
    let validation: &[&[&str]] = &[
        &["oracle", "--family", "complete", "--n", "1", "--eps", "0.3"],
        &["oracle", "--family", "complete", "--n", "4", "--eps", "1.5"],
        &["oracle", "--family", "cycle", "--eps", "0.3"],
        &["gen", "--family", "cycle:4", "--grid", "0.1:0.2:0.1"],
        &["gen", "--family", "lattice:2"],
        &[
            "sweep",
            "--a",
            "complete:3",
            "--b",
            "complete:5",
            "--grid",
            "0.5:0.1:0.1",
        ],
        &[
            "simulate", "--family", "cycle:4", "--eps", "0.3", "--t", "10",
        ],
        &["verify", "--only", "99"],
        &[
            "oracle",
            "--family",
            "complete:4",
            "--eps",
            "0.3",
            "--format",
            "xml",
        ],
        &["oracle", "--bogus"],
    ];
    for args in validation {
        let o = nvm(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
    }
    let o = nvm(&["oracle", "--family", "cycle:300", "--eps", "0.3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = nvm(&[
        "sweep",
        "--a",
        "complete:3",
        "--b",
        "complete:5",
        "--grid",
        "0.0001:0.9:0.0000001",
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("c.json"),
        r#"{"family": "complete:4", "epsilon": 0.5}"#,
    )
    .unwrap();
    let o = nvm_in(dir.path(), &["oracle", "--config", "c.json"], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("epsilon"));
}

#[test]
fn gen_round_trips_through_edges() {
    let dir = tempfile::tempdir().unwrap();
    let o = nvm_in(
        dir.path(),
        &[
            "gen", "--family", "tree", "--k", "2", "--h", "2", "--out", "g",
        ],
        None,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let value = |o: &Output| -> f64 {
        assert!(o.status.success(), "{}", stderr(o));
        let row: serde_json::Value = serde_json::from_str(stdout(o).trim()).unwrap();
        row["value"].as_f64().unwrap()
    };
    let from_edges = value(&nvm_in(
        dir.path(),
        &[
            "oracle",
            "--edges",
            "g/graph.edges",
            "--eps",
            "0.3",
            "--format",
            "jsonl",
        ],
        None,
    ));
    let from_family = value(&nvm(&[
        "oracle", "--family", "tree:2,2", "--eps", "0.3", "--format", "jsonl",
    ]));
    assert_eq!(from_edges, from_family);
}

#[test]
fn stats_reads_simulated_traces() {
    let dir = tempfile::tempdir().unwrap();
    let o = nvm_in(
        dir.path(),
        &[
            "simulate",
            "--family",
            "complete:5",
            "--eps",
            "0.3",
            "--t",
            "100000",
            "--seed",
            "4",
            "--out",
            "s",
        ],
        None,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let from_file = nvm_in(dir.path(), &["stats", "--trace", "s/trace"], None);
    let inline = nvm_in(
        dir.path(),
        &[
            "stats",
            "--family",
            "complete:5",
            "--eps",
            "0.3",
            "--t",
            "100000",
            "--seed",
            "4",
        ],
        None,
    );
    assert!(from_file.status.success(), "{}", stderr(&from_file));
    assert_eq!(stdout(&from_file), stdout(&inline));
}

#[test]
fn verify_subset_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    for (out, threads) in [("a", "1"), ("b", "2")] {
        let o = nvm_in(
            dir.path(),
            &["verify", "--only", "1,2,5", "--out", out],
            Some(threads),
        );
        assert!(o.status.success(), "{}", stderr(&o));
        assert_eq!(stdout(&o).lines().count(), 3);
        assert!(stdout(&o).lines().all(|l| l.starts_with("[PASS]")));
    }
    let names: Vec<_> = fs::read_dir(dir.path().join("a"))
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    assert!(names.len() >= 2);
    for name in names {
        if name == "manifest.json" {
            continue;
        }
        let a = fs::read(dir.path().join("a").join(&name)).unwrap();
        let b = fs::read(dir.path().join("b").join(&name)).unwrap();
        assert_eq!(a, b, "{name:?}");
    }
}

#[test]
fn verify_fails_on_known_unattainable_criteria() {
    let o = nvm(&["verify", "--only", "9"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("[known unattainable]"));
}
