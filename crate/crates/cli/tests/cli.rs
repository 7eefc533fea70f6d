use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fracmap(args: &[&str]) -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_fracmap"));
    c.args(args).env_remove("FRACMAP_SEED").env_remove("FRACMAP_THREADS");
    c
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Output directory printed on the first stdout line.
fn out_dir(o: &Output) -> PathBuf {
    PathBuf::from(stdout(o).lines().next().expect("directory line"))
}

fn results(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("results.json")).unwrap()).unwrap()
}

const QUICK: &[&str] = &[
    "--resolution",
    "64",
    "--modes",
    "4",
    "--restarts",
    "1",
    "--max-iters",
    "200",
];

fn with(base: &[&str], extra: &[&str]) -> Vec<String> {
    base.iter().chain(extra).map(|s| s.to_string()).collect()
}

#[test]
fn energy_of_identity_is_four_pi_squared() {
    let o = run(&mut fracmap(&["energy", "--map", "power:1", "--grid", "256"]));
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let e = v["energy"]["value"].as_f64().unwrap();
    assert!((e - 4.0 * std::f64::consts::PI.powi(2)).abs() < 1e-9);
    assert_eq!(v["degree"], 1);
    assert!(v["spectral"]["value"].is_number());
}

#[test]
fn degree_reports_both_routes() {
    let o = run(&mut fracmap(&["degree", "--map", "zigzag:8:0.7", "--grid", "512"]));
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["winding_degree"], 1);
    assert_eq!(v["fourier"]["fourier_degree"], 1);
}

#[test]
fn bad_map_spec_is_a_config_error() {
    let o = run(&mut fracmap(&["energy", "--map", "spiral:3"]));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("map"));
}

#[test]
fn invalid_fields_abort_with_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(fracmap(&["dist", "--d1", "0"]).current_dir(tmp.path()));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`d1`"), "{}", stderr(&o));
    assert!(!tmp.path().join("out").exists());

    let cfg = tmp.path().join("bad.toml");
    std::fs::write(&cfg, "resolutoin = 64\n").unwrap();
    let o = run(&mut fracmap(&["sigma", "--config", cfg.to_str().unwrap()]));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("resolutoin"));

    let o = run(&mut fracmap(&["sigma", "--p", "0.9"]));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bad_thread_count_is_a_config_error() {
    let o = run(fracmap(&["sigma", "--d", "0"]).env("FRACMAP_THREADS", "many"));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("FRACMAP_THREADS"));
}

#[test]
fn sigma_run_writes_the_bundle() {
    let tmp = tempfile::tempdir().unwrap();
    let args = with(
        &["sigma", "--d", "0,1,2", "--output-dir", tmp.path().to_str().unwrap()],
        QUICK,
    );
    let o = run(&mut fracmap(&args.iter().map(String::as_str).collect::<Vec<_>>()));
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    let dir = out_dir(&o);
    assert!(dir.starts_with(tmp.path().join("sigma")));
    for f in ["table.csv", "results.json", "plot.svg", "log.txt"] {
        assert!(dir.join(f).exists(), "{f}");
    }
    let v = results(&dir);
    assert_eq!(v["schema_version"], 1);
    let hash = v["config_hash"].as_str().unwrap();
    assert!(dir.ends_with(hash));
    let csv = std::fs::read_to_string(dir.join("table.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().ends_with("config_hash,seed"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r.ends_with(&format!("{hash},0"))));
    assert!(rows[0].starts_with("0,2,0,"));
}

#[test]
fn reruns_are_bit_for_bit_single_threaded() {
    let tables: Vec<String> = (0..2)
        .map(|_| {
            let tmp = tempfile::tempdir().unwrap();
            let args = with(
                &[
                    "sigma",
                    "--d",
                    "1,2",
                    "--p",
                    "1.5",
                    "--output-dir",
                    tmp.path().to_str().unwrap(),
                ],
                QUICK,
            );
            let o = run(fracmap(&args.iter().map(String::as_str).collect::<Vec<_>>()).env("FRACMAP_THREADS", "1"));
            assert!(o.status.code().is_some_and(|c| c == 0 || c == 3));
            std::fs::read_to_string(out_dir(&o).join("table.csv")).unwrap()
        })
        .collect();
    assert_eq!(tables[0], tables[1]);
}

#[test]
fn seed_variable_overrides_config() {
    let tmp = tempfile::tempdir().unwrap();
    let base = with(
        &[
            "dist-zero",
            "--d1",
            "0",
            "--d2",
            "1",
            "--n-values",
            "4,8",
            "--resolution",
            "128",
            "--output-dir",
            tmp.path().to_str().unwrap(),
        ],
        &[],
    );
    let args: Vec<&str> = base.iter().map(String::as_str).collect();
    let a = run(&mut fracmap(&args));
    let b = run(fracmap(&args).env("FRACMAP_SEED", "42"));
    assert!(a.status.success() && b.status.success());
    assert_ne!(out_dir(&a), out_dir(&b));
    assert_eq!(results(&out_dir(&b))["seed"], 42);
}

#[test]
fn flags_win_unless_config_has_priority() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.toml");
    std::fs::write(&cfg, "p = 3.0\nd1 = 0\nd2 = 1\nn_values = [4, 8]\nresolution = 128\n").unwrap();
    let out = tmp.path().to_str().unwrap();
    let c = cfg.to_str().unwrap();
    let a = run(&mut fracmap(&[
        "dist-zero",
        "--config",
        c,
        "--p",
        "2",
        "--output-dir",
        out,
    ]));
    assert!(a.status.success(), "{}", stderr(&a));
    assert_eq!(results(&out_dir(&a))["config"]["p"], 2.0);
    let b = run(&mut fracmap(&[
        "dist-zero",
        "--config",
        c,
        "--p",
        "2",
        "--config-priority",
        "--output-dir",
        out,
    ]));
    assert!(b.status.success());
    assert_eq!(results(&out_dir(&b))["config"]["p"], 3.0);
    assert_eq!(results(&out_dir(&b))["config"]["output_dir"], out);
}

#[test]
fn dist_zero_assertion_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&mut fracmap(&[
        "dist-zero",
        "--d1",
        "0",
        "--d2",
        "1",
        "--p",
        "1.5",
        "--n-values",
        "4,8,16",
        "--resolution",
        "256",
        "--output-dir",
        tmp.path().to_str().unwrap(),
    ]));
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("status: pass"));
}

#[test]
fn same_class_distance_is_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&mut fracmap(&[
        "dist",
        "--d1",
        "1",
        "--d2",
        "1",
        "--n-values",
        "4,8",
        "--resolution",
        "128",
        "--map-grid",
        "256",
        "--modes",
        "4",
        "--restarts",
        "1",
        "--output-dir",
        tmp.path().to_str().unwrap(),
    ]));
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let v = results(&out_dir(&o));
    for row in v["rows"].as_array().unwrap() {
        assert!(row[5].as_f64().unwrap() <= 1e-9);
    }
}

#[test]
fn iteration_cap_reports_non_convergence() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&mut fracmap(&[
        "dist",
        "--d1",
        "1",
        "--d2",
        "2",
        "--p",
        "3",
        "--n-values",
        "8",
        "--resolution",
        "128",
        "--map-grid",
        "256",
        "--modes",
        "4",
        "--restarts",
        "1",
        "--max-iters",
        "1",
        "--output-dir",
        tmp.path().to_str().unwrap(),
    ]));
    assert_eq!(o.status.code(), Some(3), "{}", stdout(&o));
    let v = results(&out_dir(&o));
    assert_eq!(v["status"]["kind"], "non-convergence");
}

#[test]
fn lemma_subset_writes_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&mut fracmap(&[
        "lemma",
        "--lemmas",
        "tangent,chord",
        "--output-dir",
        tmp.path().to_str().unwrap(),
    ]));
    assert_eq!(o.status.code(), Some(0));
    let jsonl = std::fs::read_to_string(out_dir(&o).join("reports.jsonl")).unwrap();
    let names: Vec<String> = jsonl
        .lines()
        .map(|l| {
            serde_json::from_str::<Value>(l).unwrap()["lemma"]
                .as_str()
                .unwrap()
                .to_string()
        })
        .collect();
    assert_eq!(names, ["tangent", "chord"]);
    let o = run(&mut fracmap(&["lemma", "--lemmas", "nope"]));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn audit_names_the_io_section_for_a_corrupt_map() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("broken.fmap");
    std::fs::write(&bad, b"FMAP\x01 not a map").unwrap();
    let o = run(&mut fracmap(&[
        "audit",
        "--resolution",
        "64",
        "--lemmas",
        "tangent",
        "--map-file",
        bad.to_str().unwrap(),
        "--output-dir",
        tmp.path().to_str().unwrap(),
    ]));
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));
    assert!(stdout(&o).contains("section io"));
    let v = results(&out_dir(&o));
    let sections = v["results"]["sections"].as_array().unwrap();
    let quad = sections.iter().find(|s| s["name"] == "quadrature").unwrap();
    assert!(quad["failures"].as_array().unwrap().is_empty());
    assert!(!quad["warnings"].as_array().unwrap().is_empty());
}
