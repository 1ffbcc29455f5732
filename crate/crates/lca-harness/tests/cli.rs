//! End-to-end CLI checks: exit codes, manifest emission, bitmap output,
//! and the verify-core self-test.

use std::fs;
use std::path::Path;
use std::process::Command;

fn run(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_lca-harness"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn space_time_emits_a_sierpinski_bitmap() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "st.toml",
        r#"
kind = "space-time"
seed = 1
[space_time]
width = 128
steps = 64
impulses = [64]
"#,
    );
    let out = dir.path().join("st.pbm").to_string_lossy().into_owned();
    let status = run(&["space-time", "--config", &config, "--out", &out]);
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));

    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("P1"));
    assert_eq!(lines.next(), Some("128 65"));
    let rows: Vec<Vec<u8>> = lines
        .map(|l| l.split(' ').map(|c| c.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 65);
    // power-of-two rows have exactly two live cells (L(2^k) = {0, 2^k})
    for k in [1usize, 2, 4, 8, 16, 32, 64] {
        let live: u32 = rows[k].iter().map(|&b| b as u32).sum();
        assert_eq!(live, 2, "row {k}");
    }
    // determinism: a rerun produces byte-identical bitmap bytes
    let out2 = dir.path().join("st2.pbm").to_string_lossy().into_owned();
    run(&["space-time", "--config", &config, "--out", &out2]);
    assert_eq!(fs::read(&out).unwrap(), fs::read(out2).unwrap());

    // manifest written beside the data file
    let manifest = fs::read_to_string(dir.path().join("st.pbm.manifest.toml")).unwrap();
    assert!(manifest.contains("config_digest"));
    assert!(manifest.contains("master_seed = 1"));
}

#[test]
fn verify_core_passes_and_mutation_mode_is_caught() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "v.toml", "kind = \"verify-core\"\nseed = 11\n");
    let out = dir.path().join("verify.txt").to_string_lossy().into_owned();
    let result = run(&["verify-core", "--config", &config, "--out", &out]);
    assert!(result.status.success());
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.contains("PASS lucas-equivalence"));
    assert!(!text.contains("FAIL"));
    assert!(text.contains("# verdict: PASS"));

    // self-test of the tester: a deliberately corrupted power must be
    // reported as a failure with exit code 2
    let config = write(dir.path(), "m.toml", "kind = \"verify-core\"\nseed = 11\nmutate = true\n");
    let result = run(&["verify-core", "--config", &config, "--out", &out]);
    assert_eq!(result.status.code(), Some(2));
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.contains("FAIL power-vs-iterate"), "{text}");
}

#[test]
fn validation_failures_exit_1_and_io_failures_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv").to_string_lossy().into_owned();

    // kind/subcommand mismatch
    let config = write(dir.path(), "k.toml", "kind = \"spectrum\"\nseed = 1\n");
    let result = run(&["verify-core", "--config", &config, "--out", &out]);
    assert_eq!(result.status.code(), Some(1));

    // invariant violation (depth/tolerance mismatch)
    let config = write(
        dir.path(),
        "bad.toml",
        r#"
kind = "entropy-scan"
seed = 1
[measure]
type = "hierarchical"
depth = 6
tolerance = 1e-3
[iterates]
start = 1
end = 3
"#,
    );
    let result = run(&["entropy-scan", "--config", &config, "--out", &out]);
    assert_eq!(result.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&result.stderr).contains("tail bound"));

    // unreadable config
    let result = run(&["verify-core", "--config", "/nonexistent.toml", "--out", &out]);
    assert_eq!(result.status.code(), Some(3));
}

#[test]
fn seed_flag_overrides_config_seed() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "s.toml",
        r#"
kind = "spectrum"
seed = 5
character = [1]
[measure]
type = "bernoulli"
p = 0.5
[iterates]
start = 1
end = 8
"#,
    );
    let a = dir.path().join("a.csv").to_string_lossy().into_owned();
    let b = dir.path().join("b.csv").to_string_lossy().into_owned();
    let c = dir.path().join("c.csv").to_string_lossy().into_owned();
    run(&["spectrum", "--config", &config, "--out", &a]);
    run(&["spectrum", "--config", &config, "--seed", "6", "--out", &b]);
    run(&["spectrum", "--config", &config, "--seed", "5", "--out", &c]);
    let (a, b, c) = (fs::read(a).unwrap(), fs::read(b).unwrap(), fs::read(c).unwrap());
    assert_ne!(a, b, "different seeds must change Monte-Carlo output");
    assert_eq!(a, c, "explicit seed equal to the config seed must not");
    let header = String::from_utf8_lossy(&a).lines().next().unwrap().to_string();
    assert_eq!(header, "n,value,stderr,rank,diam");
}
