use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tradenet::experiment::output::{sha256_hex, LOCK_FILE, MANIFEST_FILE, TIMINGS_FILE};
use tradenet::experiment::{LOSS_FILE, MODEL_FILE};

const SMALL: &str = r#"
seed = 5
[gen]
dims = { dealers = 6, assets = 1, days = 2 }
topology = { kind = "er", p_edge = 0.6 }
true_params = { beta_x = [1.0], beta_y = [1.0], eta = [1.0] }
[train]
epochs = 17
[bootstrap]
replicates = 6
"#;

fn tradenet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tradenet"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("run tradenet")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("exp.toml");
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn bundle(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != TIMINGS_FILE)
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn configuration_errors_exit_with_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let out = out.to_str().unwrap();
    let bad = write_config(tmp.path(), "seed = 1\nbogus = true\n");
    for args in [
        vec!["generate", "--config", bad.as_str(), "--out", out],
        vec!["generate", "--preset", "medium", "--out", out],
        vec!["generate", "--out", out],
        vec!["reproduce", "dense", "--preset", "sparse", "--out", out],
        vec!["generate", "--preset", "dense", "--jobs", "0", "--out", out],
    ] {
        let r = tradenet(&args);
        assert_eq!(code(&r), 2, "{args:?}: {}", String::from_utf8_lossy(&r.stderr));
    }
}

#[test]
fn missing_data_exits_with_3() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out = tmp.path().join("empty");
    let r = tradenet(&["train", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&r), 3, "{}", String::from_utf8_lossy(&r.stderr));
}

#[test]
fn divergent_training_exits_with_4() {
    let tmp = tempfile::tempdir().unwrap();
    let text = SMALL.replace("epochs = 17", "epochs = 50\nlr = 1e6\noptimizer = { kind = \"gradient-descent\" }");
    let cfg = write_config(tmp.path(), &text);
    let out = tmp.path().join("out");
    let out = out.to_str().unwrap();
    assert_eq!(code(&tradenet(&["generate", "--config", &cfg, "--out", out])), 0);
    let r = tradenet(&["train", "--config", &cfg, "--out", out]);
    assert_eq!(code(&r), 4, "{}", String::from_utf8_lossy(&r.stderr));
}

#[test]
fn stages_chain_and_loss_curve_has_one_row_per_epoch() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out = tmp.path().join("out");
    let o = out.to_str().unwrap();
    for stage in ["generate", "solve", "train", "bootstrap", "compare"] {
        let r = tradenet(&[stage, "--config", &cfg, "--out", o]);
        assert_eq!(code(&r), 0, "{stage}: {}", String::from_utf8_lossy(&r.stderr));
        assert!(!String::from_utf8_lossy(&r.stdout).trim().is_empty(), "{stage} listed no files");
    }
    let loss = fs::read_to_string(out.join(LOSS_FILE)).unwrap();
    assert_eq!(loss.lines().count(), 1 + 17);
    assert!(out.join(MODEL_FILE).exists());
    assert!(!out.join(LOCK_FILE).exists());
}

#[test]
fn reproduce_is_byte_identical_across_runs_and_thread_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let c = tmp.path().join("c");
    for (dir, jobs) in [(&a, "4"), (&b, "4"), (&c, "1")] {
        let r = tradenet(&["reproduce", "dense", "--seed", "7", "--jobs", jobs, "--out", dir.to_str().unwrap()]);
        assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    }
    let first = bundle(&a);
    assert!(first.len() > 10);
    assert_eq!(first, bundle(&b));
    assert_eq!(first, bundle(&c));
}

#[test]
fn manifest_lists_every_file_with_its_checksum() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out = tmp.path().join("out");
    let r = tradenet(&["reproduce", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let manifest = fs::read_to_string(out.join(MANIFEST_FILE)).unwrap();
    let mut listed: Vec<String> = Vec::new();
    for line in manifest.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        let path = out.join(fields[0]);
        if fields[0] == TIMINGS_FILE {
            assert_eq!(fields[1..], ["", ""]);
        } else {
            assert_eq!(fields[1], fs::metadata(&path).unwrap().len().to_string());
            assert_eq!(fields[2], sha256_hex(&path).unwrap());
        }
        listed.push(fields[0].to_string());
    }
    let mut on_disk: Vec<String> = fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n != MANIFEST_FILE)
        .collect();
    on_disk.sort();
    listed.sort();
    assert_eq!(listed, on_disk);
}

#[test]
fn locked_directory_is_refused() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    fs::create_dir_all(&out).unwrap();
    fs::write(out.join(LOCK_FILE), b"").unwrap();
    let r = tradenet(&["generate", "--preset", "sparse", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&r), 3);
    assert!(String::from_utf8_lossy(&r.stderr).contains("locked"));
    // A run that finds no lock leaves none behind.
    fs::remove_file(out.join(LOCK_FILE)).unwrap();
    assert_eq!(code(&tradenet(&["generate", "--preset", "sparse", "--out", out.to_str().unwrap()])), 0);
    assert!(!out.join(LOCK_FILE).exists());
}
