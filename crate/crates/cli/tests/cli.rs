use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::tempdir;

fn coseg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coseg"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn gen(out: &Path, extra: &[&str]) {
    let mut args = vec!["gen-synthetic", "--out", path(out)];
    args.extend_from_slice(extra);
    let o = coseg(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

fn count_files(dir: &Path) -> usize {
    fs::read_dir(dir).unwrap().filter(|e| e.as_ref().unwrap().path().is_file()).count()
}

#[test]
fn gen_synthetic_writes_the_fixture() {
    let dir = tempdir().unwrap();
    gen(dir.path(), &["--group-size", "3"]);
    let images = dir.path().join("dataset/synthetic");
    assert_eq!(count_files(&images), 3);
    assert_eq!(count_files(&images.join("GT")), 3);
    let maps: usize = (1..=4).map(|j| count_files(&dir.path().join(format!("saliency/src{j}")))).sum();
    assert_eq!(maps, 12);
    assert!(dir.path().join("pairs.txt").is_file());
    assert!(dir.path().join("coseg.conf").is_file());
}

#[test]
fn evaluate_perfect_masks_scores_one() {
    let dir = tempdir().unwrap();
    gen(dir.path(), &["--group-size", "2"]);
    let preds = dir.path().join("preds");
    fs::create_dir(&preds).unwrap();
    for id in ["img00", "img01"] {
        fs::copy(
            dir.path().join(format!("dataset/synthetic/GT/{id}.png")),
            preds.join(format!("{id}.png")),
        )
        .unwrap();
    }
    let o = coseg(&["evaluate", "--dataset", path(&dir.path().join("dataset")), "--predictions", path(&preds)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let lines = fs::read_to_string(preds.join("scores.txt")).unwrap();
    assert!(lines.lines().any(|l| l == "OVERALL 1.000000 1.000000"), "{lines}");

    fs::remove_file(preds.join("img01.png")).unwrap();
    let o = coseg(&["evaluate", "--dataset", path(&dir.path().join("dataset")), "--predictions", path(&preds)]);
    assert_eq!(o.status.code(), Some(1));
    let lines = fs::read_to_string(preds.join("scores.txt")).unwrap();
    assert!(lines.contains("MISSING synthetic img01"), "{lines}");
}

#[test]
fn staged_commands_match_run() {
    let dir = tempdir().unwrap();
    gen(dir.path(), &["--group-size", "4", "--corrupt", "2", "--shift", "2,-1", "--seed", "3"]);
    let conf = dir.path().join("coseg.conf");
    let whole = dir.path().join("whole");
    let staged = dir.path().join("staged");
    let common = |out: &Path| vec!["--config".to_string(), path(&conf).into(), "--output-dir".into(), path(out).into(), "--seed".into(), "5".into()];
    let run = |cmd: &str, out: &Path| {
        let mut args = vec![cmd.to_string()];
        args.extend(common(out));
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let o = coseg(&args);
        assert!(o.status.success(), "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
    };
    run("run", &whole);
    for cmd in ["cluster", "fuse", "segment"] {
        run(cmd, &staged);
    }
    let mut compared = 0;
    for entry in fs::read_dir(&whole).unwrap() {
        let p = entry.unwrap().path();
        if p.is_file() {
            let name = p.file_name().unwrap();
            assert_eq!(fs::read(&p).unwrap(), fs::read(staged.join(name)).unwrap(), "{name:?}");
            compared += 1;
        }
    }
    assert_eq!(compared, 4 + 2);
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let o = coseg(&["run", "--no-such-flag"]);
    assert_eq!(o.status.code(), Some(2));
    let o = coseg(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_saliency_fails_before_any_output() {
    let dir = tempdir().unwrap();
    gen(dir.path(), &["--group-size", "2"]);
    let victim = dir.path().join("saliency/src3/img00.png");
    fs::remove_file(&victim).unwrap();
    let out = dir.path().join("out");
    let o = coseg(&["run", "--config", path(&dir.path().join("coseg.conf")), "--output-dir", path(&out)]);
    assert_eq!(o.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&o.stderr);
    assert!(stderr.contains(path(&victim)), "{stderr}");
    assert!(!out.exists());
}

#[test]
fn flags_work_without_a_config_file() {
    let dir = tempdir().unwrap();
    gen(dir.path(), &["--group-size", "1", "--sources", "1"]);
    let out = dir.path().join("out");
    let o = coseg(&[
        "run",
        "--input-dir",
        path(&dir.path().join("dataset/synthetic")),
        "--saliency-dirs",
        path(&dir.path().join("saliency/src1")),
        "--output-dir",
        path(&out),
        "--gc-iters",
        "3",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("img00.png").is_file());
    assert_eq!(fs::read_to_string(out.join("grouping.txt")).unwrap(), "K 1\nSUBGROUP 1 KEY img00\nMEMBER 1 img00\n");
}
