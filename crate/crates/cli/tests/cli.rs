use std::fs;
use std::path::Path;
use std::process::Command;

use qnet_cli::{cli_main, EXIT_AMBIGUOUS, EXIT_BELOW_THRESHOLD, EXIT_OK, EXIT_USAGE};
use tempfile::TempDir;

const SMALL: &str = "lattice.size = 8\nexperiment.k_patterns = 2\nexperiment.n_seeds = 2\nseed = 3\n";

fn setup(extra: &str) -> (TempDir, String) {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, format!("{SMALL}{extra}")).unwrap();
    fs::write(dir.path().join("a.txt"), "L 8\n10110010\n01101100\n11100001\n00010111\n10101010\n01010101\n11001100\n00110011\n").unwrap();
    fs::write(dir.path().join("b.txt"), "L 8\n11110000\n00001111\n10011001\n01100110\n11111111\n00000000\n10000001\n01111110\n").unwrap();
    (dir, cfg.to_string_lossy().into_owned())
}

fn p(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> i32 {
    cli_main(std::iter::once("qnet").chain(args.iter().copied()))
}

fn write(dir: &TempDir, cfg: &str, pattern: &str) -> i32 {
    run(&["write", "--config", cfg, "--pattern", &p(dir, pattern), "--store", &p(dir, "store.json")])
}

#[test]
fn write_then_recall() {
    let (dir, cfg) = setup("");
    assert_eq!(write(&dir, &cfg, "a.txt"), EXIT_OK);
    assert_eq!(write(&dir, &cfg, "b.txt"), EXIT_OK);
    let store: serde_json::Value = serde_json::from_str(&fs::read_to_string(p(&dir, "store.json")).unwrap()).unwrap();
    assert_eq!(store["records"].as_array().unwrap().len(), 2);
    assert_eq!(store["provenance"]["seed"], 3);

    let code = run(&["recall", "--config", &cfg, "--cue", &p(&dir, "a.txt"), "--store", &p(&dir, "store.json"), "--out", &p(&dir, "r.json")]);
    assert_eq!(code, EXIT_OK);
    let result: serde_json::Value = serde_json::from_str(&fs::read_to_string(p(&dir, "r.json")).unwrap()).unwrap();
    assert_eq!(result["selected"], 0);
    assert_eq!(result["pattern"][0], "10110010");
    let traj = fs::read_to_string(p(&dir, "r.trajectory.csv")).unwrap();
    let mut lines = traj.lines();
    assert!(lines.next().unwrap().starts_with("# qnet "));
    assert_eq!(lines.next().unwrap(), "t,M,norm,mx,my,mz");
    assert_eq!(lines.count(), 52);
}

#[test]
fn gate_and_ambiguity_exit_codes() {
    let (dir, cfg) = setup("");
    assert_eq!(write(&dir, &cfg, "a.txt"), EXIT_OK);
    let store = p(&dir, "store.json");

    let (_weak_dir, weak) = setup("recall.cue_strength = 0\n");
    let code = run(&["recall", "--config", &weak, "--cue", &p(&dir, "a.txt"), "--store", &store, "--out", &p(&dir, "r.json")]);
    assert_eq!(code, EXIT_BELOW_THRESHOLD);

    assert_eq!(write(&dir, &cfg, "a.txt"), EXIT_OK);
    let code = run(&["recall", "--config", &cfg, "--cue", &p(&dir, "a.txt"), "--store", &store, "--out", &p(&dir, "r.json")]);
    assert_eq!(code, EXIT_AMBIGUOUS);
}

#[test]
fn validation_errors_exit_2() {
    let (dir, _) = setup("");
    let bad = p(&dir, "bad.cfg");
    fs::write(&bad, "anneal.alpha = 1.5\n").unwrap();
    assert_eq!(write(&dir, &bad, "a.txt"), EXIT_USAGE);
    let unknown = p(&dir, "unknown.cfg");
    fs::write(&unknown, "lattice.shape = 3\n").unwrap();
    assert_eq!(write(&dir, &unknown, "a.txt"), EXIT_USAGE);
    let (_cfg_dir, cfg) = setup("");
    fs::write(p(&dir, "c.txt"), "L 8\n1011\n").unwrap();
    assert_eq!(write(&dir, &cfg, "c.txt"), EXIT_USAGE);
    assert_eq!(run(&["experiment", "nonsense", "--config", &cfg]), EXIT_USAGE);
    assert_eq!(run(&["sweep", "--param", "anneal.alpha", "--values", "0.5,3", "--config", &cfg]), EXIT_USAGE);
}

#[test]
fn experiment_writes_reports() {
    let (dir, cfg) = setup("");
    let out = p(&dir, "exp");
    assert_eq!(run(&["experiment", "overprinting", "--config", &cfg, "--out", &out]), EXIT_OK);
    let csv = fs::read_to_string(Path::new(&out).join("results.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert!(lines[0].contains("seed=3") && lines[0].contains("config="));
    assert_eq!(lines[1], "kind,seed,grid_param,grid_value,memory_index,selected,overlap,M_code,success,wall_ms");
    assert_eq!(lines.len(), 2 + 2 * 2 * 2);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(Path::new(&out).join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["kind"], "overprinting");
    assert_eq!(summary["provenance"]["seed"], 3);
    assert_eq!(summary["audit"][0]["writes"], 2);
    assert_eq!(summary["audit"][0]["recalls"], 4);
}

#[test]
fn reruns_reproduce_numeric_columns() {
    let (dir, cfg) = setup("");
    let strip = |path: &str| -> Vec<String> {
        fs::read_to_string(Path::new(path).join("results.csv"))
            .unwrap()
            .lines()
            .map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head).to_string())
            .collect()
    };
    for name in ["s1", "s2"] {
        let code = run(&["sweep", "--param", "noise", "--values", "0,0.2", "--config", &cfg, "--out", &p(&dir, name), "--jobs", "1"]);
        assert_eq!(code, EXIT_OK);
    }
    assert_eq!(strip(&p(&dir, "s1")), strip(&p(&dir, "s2")));
}

#[test]
fn default_overprinting_experiment() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    let code = run(&["experiment", "overprinting", "--out", out.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    assert!(out.join("results.csv").is_file());
    assert!(out.join("summary.json").is_file());
}

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qnet"))
}

#[test]
fn unknown_subcommand_prints_usage() {
    let out = binary().arg("frobnicate").output().unwrap();
    assert_eq!(out.status.code(), Some(EXIT_USAGE));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn seed_precedence_in_binary() {
    let (dir, cfg) = setup("");
    let args = ["write", "--config", &cfg, "--pattern", &p(&dir, "a.txt"), "--store", &p(&dir, "s.json")];
    let out = binary().args(args).env("QNET_SEED", "77").output().unwrap();
    assert!(String::from_utf8_lossy(&out.stdout).contains("seed = 77"));
    let out = binary().args(args).arg("--seed").arg("5").env("QNET_SEED", "77").output().unwrap();
    assert!(String::from_utf8_lossy(&out.stdout).contains("seed = 5"));
    let out = binary().args(args).env_remove("QNET_SEED").output().unwrap();
    assert!(String::from_utf8_lossy(&out.stdout).contains("seed = 3"));
}
