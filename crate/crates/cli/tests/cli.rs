use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn refgame(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_refgame"))
        .args(args)
        .env_remove("REFGAME_FIXTURES")
        .output()
        .unwrap()
}

fn fixture(name: &str) -> String {
    fixtures().join(name).to_str().unwrap().to_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn run_writes_reports_and_transcripts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let o = refgame(&["run", &fixture("sort_competition.json"), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for f in ["report.txt", "report.json", "board.txt"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(json["conserved"], true);
    let n = std::fs::read_dir(out.join("transcripts")).unwrap().count();
    assert!(n >= 1);
}

#[test]
fn rerun_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = refgame(&["run", &fixture("incentive_mix.json"), "--seed", "9", "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    for f in ["report.txt", "report.json", "board.txt"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn run_without_out_prints_the_report() {
    let o = refgame(&["run", &fixture("gcd_incentive.json")]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("conserved"));
}

#[test]
fn missing_instance_file_exits_2_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(fixtures().join("sort_competition.json")).unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, text).unwrap();
    // the fixtures directory defaults to the config's own directory
    let o = refgame(&["run", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("task.instance_file"), "{}", stderr(&o));
}

#[test]
fn fixtures_env_overrides_the_config_directory() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(fixtures().join("sort_competition.json")).unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, text).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_refgame"))
        .args(["run", cfg.to_str().unwrap()])
        .env("REFGAME_FIXTURES", fixtures())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn invalid_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(fixtures().join("sort_competition.json")).unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, text.replace(r#""rate": 1.0"#, r#""rate": -1"#)).unwrap();
    let o = refgame(&["run", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("agents[4].rate"), "{}", stderr(&o));
}

#[test]
fn batch_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.txt");
    let b = dir.path().join("b.txt");
    for out in [&a, &b] {
        let o = refgame(&[
            "batch",
            &fixture("incentive_mix.json"),
            "--runs",
            "1",
            "--seed-base",
            "4",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let table = std::fs::read_to_string(&a).unwrap();
    assert!(table.starts_with("role|policy|runs|mean_net|var_net"));
    assert_eq!(table, std::fs::read_to_string(&b).unwrap());
    let o = refgame(&["batch", &fixture("incentive_mix.json"), "--runs", "20"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("|20|"));
}

#[test]
fn batch_rejects_zero_runs() {
    let o = refgame(&["batch", &fixture("incentive_mix.json"), "--runs", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_confirms_refutes_and_rejects() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let o = refgame(&["run", &fixture("sort_competition.json"), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let tdir = out.join("transcripts");
    let first = std::fs::read_dir(&tdir).unwrap().next().unwrap().unwrap().path();
    let o = refgame(&["verify", first.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "confirmed");

    let text = std::fs::read_to_string(&first).unwrap();
    let flipped = if text.contains("verdict|challenger") {
        text.replace("verdict|challenger", "verdict|prover")
    } else {
        text.replace("verdict|prover", "verdict|challenger")
    };
    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, flipped).unwrap();
    let o = refgame(&["verify", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).starts_with("refuted"), "{}", stdout(&o));

    let cut = dir.path().join("cut.txt");
    std::fs::write(&cut, &text[..text.len() / 3]).unwrap();
    let o = refgame(&["verify", cut.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stdout(&o));
}

#[test]
fn gen_prints_a_task_file() {
    let o = refgame(&["gen", "sort", "--size", "5", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let again = refgame(&["gen", "sort", "--size", "5", "--seed", "1"]);
    assert_eq!(o.stdout, again.stdout);
    assert!(!o.stdout.is_empty());
}
