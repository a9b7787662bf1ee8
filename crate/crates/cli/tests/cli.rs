use std::fs;
use std::path::Path;
use std::process::Command;

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_combwalk"))
}

fn path_graph(n: usize) -> String {
    let mut s = format!("custom {n} {}\n", n - 1);
    for i in 1..n {
        s += &format!("{} {i}\n", i - 1);
    }
    s
}

fn write_config(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn run(config: &Path, out: &Path, extra: &[&str]) -> std::process::Output {
    bin().arg("--config").arg(config).arg("--out").arg(out).args(extra).output().unwrap()
}

#[test]
fn kernel_on_hundred_vertex_comb() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("path33.txt"), path_graph(33)).unwrap();
    let cfg = write_config(
        dir.path(),
        "kernel.json",
        r#"{
            "command": "kernel",
            "masterSeed": 1,
            "graph": {"kind": "file", "path": "path33.txt"},
            "profile": {"family": "logarithmic", "gamma": 1.0},
            "horizon": 32
        }"#,
    );
    let out = dir.path().join("out");
    let res = run(&cfg, &out, &[]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let vertices = fs::read_to_string(out.join("vertices.csv")).unwrap();
    assert_eq!(vertices.lines().count(), 1 + 100);
    let kernel = fs::read_to_string(out.join("kernel.csv")).unwrap();
    let lines: Vec<&str> = kernel.lines().collect();
    assert_eq!(lines[0], "t,vertexId,value,normalization");
    assert_eq!(lines.len(), 1 + 33 * 100);
    assert_eq!(lines[1], "0,0,1.0000000000000000e0,degree-normalized");
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["normalization"], "degree-normalized");
    assert_eq!(manifest["logBase"], "natural");
    assert_eq!(manifest["masterSeed"], 1);
    assert!(manifest["truncationRadii"]["kernel"].is_null());
    assert_eq!(manifest["configSha256"].as_str().unwrap().len(), 64);
}

#[test]
fn same_config_gives_identical_outputs() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "exp.json",
        r#"{
            "command": "experiment",
            "masterSeed": 11,
            "graph": {"kind": "z-segment", "n": 300},
            "profile": {"family": "polynomial", "gamma": 1.0},
            "gammas": [0.5, 2.0],
            "horizon": 256,
            "trials": 40
        }"#,
    );
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(run(&cfg, &a, &["--threads", "2"]).status.success());
    assert!(run(&cfg, &b, &[]).status.success());
    for name in ["curve.csv", "windows.csv", "manifest.json"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
    let curve = fs::read_to_string(a.join("curve.csv")).unwrap();
    assert_eq!(curve.lines().next().unwrap(), "gamma,checkpoint,mean,ciLow,ciHigh,trials,seed");
    // 2 exponents × checkpoints 1, 2, 4, ..., 256
    assert_eq!(curve.lines().count(), 1 + 2 * 9);

    let c = dir.path().join("c");
    assert!(run(&cfg, &c, &["--seed", "12"]).status.success());
    assert_ne!(fs::read(a.join("curve.csv")).unwrap(), fs::read(c.join("curve.csv")).unwrap());
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(c.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["masterSeed"], 12);
}

#[test]
fn empty_gamma_list_is_a_validation_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "exp.json",
        r#"{
            "command": "experiment",
            "masterSeed": 11,
            "graph": {"kind": "z-segment", "n": 300},
            "profile": {"family": "polynomial", "gamma": 1.0},
            "gammas": [],
            "horizon": 256,
            "trials": 40
        }"#,
    );
    let out = dir.path().join("out");
    let res = run(&cfg, &out, &[]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("gammas"));
    assert!(!out.exists());
}

#[test]
fn unknown_keys_and_missing_seed_are_rejected() {
    let dir = TempDir::new().unwrap();
    let typo = write_config(
        dir.path(),
        "typo.json",
        r#"{"command": "build", "masterSeed": 1, "graph": {"kind": "gasket", "level": 2}, "horizn": 4}"#,
    );
    assert_eq!(run(&typo, &dir.path().join("o1"), &[]).status.code(), Some(2));
    let no_seed = write_config(dir.path(), "noseed.json", r#"{"command": "build", "graph": {"kind": "gasket", "level": 2}}"#);
    assert_eq!(run(&no_seed, &dir.path().join("o2"), &[]).status.code(), Some(2));
}

#[test]
fn runtime_failure_leaves_nothing_behind() {
    let dir = TempDir::new().unwrap();
    // p = 0 isolates the origin, so conditioning on a large origin cluster
    // cannot succeed.
    let cfg = write_config(
        dir.path(),
        "perc.json",
        r#"{
            "command": "build",
            "masterSeed": 5,
            "graph": {"kind": "percolation", "n": 4, "p": 0.0, "maxAttempts": 3}
        }"#,
    );
    let out = dir.path().join("out");
    let res = run(&cfg, &out, &[]);
    assert_eq!(res.status.code(), Some(3), "{}", String::from_utf8_lossy(&res.stderr));
    assert!(!out.exists());
}

#[test]
fn horizon_past_the_window_is_rejected() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "walk.json",
        r#"{
            "command": "walk",
            "masterSeed": 5,
            "graph": {"kind": "z2-box", "n": 10},
            "profile": {"family": "logarithmic", "gamma": 1.0},
            "horizon": 11,
            "trials": 3
        }"#,
    );
    assert_eq!(run(&cfg, &dir.path().join("out"), &[]).status.code(), Some(2));
}

#[test]
fn other_commands_write_their_tables() {
    let dir = TempDir::new().unwrap();
    let cases = [
        (
            "build",
            r#"{"command": "build", "masterSeed": 1, "graph": {"kind": "gasket", "level": 2},
                "profile": {"family": "polynomial", "gamma": 1.0}}"#,
            vec!["graph.txt", "summary.csv", "teeth.csv"],
        ),
        (
            "resistance",
            r#"{"command": "resistance", "masterSeed": 1, "graph": {"kind": "z-segment", "n": 40},
                "profile": {"family": "polynomial", "gamma": 1.0}, "radii": [4, 8]}"#,
            vec!["resistance.csv"],
        ),
        (
            "walk",
            r#"{"command": "walk", "masterSeed": 1, "graph": {"kind": "z-segment", "n": 100},
                "profile": {"family": "polynomial", "gamma": 1.0}, "exitRadius": 5, "trials": 20}"#,
            vec!["walks.csv"],
        ),
        (
            "collide",
            r#"{"command": "collide", "masterSeed": 1, "graph": {"kind": "z2-box", "n": 70},
                "profile": {"family": "logarithmic", "gamma": 2.0}, "horizon": 64, "trials": 10, "kmax": 6}"#,
            vec!["collisions.csv", "regions.csv"],
        ),
        (
            "percolation",
            r#"{"command": "percolation", "masterSeed": 1, "graph": {"kind": "percolation", "n": 8, "p": 0.6},
                "samples": 5}"#,
            vec!["percolation.csv", "sample.txt"],
        ),
    ];
    for (name, body, files) in cases {
        let cfg = write_config(dir.path(), &format!("{name}.json"), body);
        let out = dir.path().join(name);
        let res = run(&cfg, &out, &[]);
        assert!(res.status.success(), "{name}: {}", String::from_utf8_lossy(&res.stderr));
        for f in files {
            assert!(out.join(f).exists(), "{name}/{f}");
        }
        assert!(out.join("manifest.json").exists());
    }
    let resistance = fs::read_to_string(dir.path().join("resistance/resistance.csv")).unwrap();
    let row: Vec<&str> = resistance.lines().nth(1).unwrap().split(',').collect();
    // R(0, {|x| > 4}) on ℤ is two resistors of 5 in parallel
    assert!((row[1].parse::<f64>().unwrap() - 2.5).abs() < 1e-12);
    assert!((row[2].parse::<f64>().unwrap() - 2.5).abs() < 1e-12);
    let walks = fs::read_to_string(dir.path().join("walk/walks.csv")).unwrap();
    assert_eq!(walks.lines().count(), 21);
}
