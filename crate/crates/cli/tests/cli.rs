use std::path::Path;
use std::process::{Command, Output};

fn trtrack(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trtrack")).current_dir(dir).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn read(p: impl AsRef<Path>) -> Vec<u8> {
    std::fs::read(p).unwrap()
}

#[test]
fn simulate_estimate_track() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&trtrack(d, &["simulate", "--length", "12", "--seed", "4", "--out", "sim"])), 0);
    for f in ["cirs.bin", "imu.csv", "truth.csv", "floorplan.json"] {
        assert!(d.join("sim").join(f).exists(), "{f}");
    }

    let o = trtrack(d, &["estimate-distance", "sim/cirs.bin", "--out", "est"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(read(d.join("est/distance.csv"))).unwrap();
    let last = text.lines().last().unwrap();
    let total: f64 = last.split(',').nth(3).unwrap().parse().unwrap();
    assert!((total - 12.0).abs() < 1.2, "estimated {total} m for a 12 m walk");

    let o = trtrack(d, &["track", "sim/cirs.bin", "sim/imu.csv", "--plan", "sim/floorplan.json", "--out", "trk"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let trace = String::from_utf8(read(d.join("trk/trace.csv"))).unwrap();
    assert!(trace.starts_with("timestamp,x,y,heading,cum_distance,dominant_scale"));
    let end: Vec<f64> = trace.lines().last().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    // the first 12 m of the route run along y = 0 to the corner at x = 13
    assert!((end[1] - 12.0).abs() < 1.5 && end[2].abs() < 1.5, "ended at ({}, {})", end[1], end[2]);
}

#[test]
fn simulate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for out in ["a", "b"] {
        assert_eq!(code(&trtrack(d, &["simulate", "--length", "3", "--seed", "9", "--format", "jsonl", "--out", out])), 0);
    }
    for f in ["cirs.jsonl", "imu.jsonl", "truth.jsonl"] {
        assert_eq!(read(d.join("a").join(f)), read(d.join("b").join(f)), "{f}");
    }
    trtrack(d, &["simulate", "--length", "3", "--seed", "10", "--format", "jsonl", "--out", "c"]);
    assert_ne!(read(d.join("a/cirs.jsonl")), read(d.join("c/cirs.jsonl")));
}

#[test]
fn convert_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    trtrack(d, &["simulate", "--length", "2", "--out", "sim"]);
    assert_eq!(code(&trtrack(d, &["convert", "sim/cirs.bin", "--out", "j"])), 0);
    assert!(d.join("j/cirs.jsonl").exists());
    assert_eq!(code(&trtrack(d, &["convert", "j/cirs.jsonl", "back.bin", "--format", "binary"])), 0);
    assert_eq!(read(d.join("back.bin")), read(d.join("sim/cirs.bin")));

    assert_eq!(code(&trtrack(d, &["convert", "sim/imu.csv", "imu.bin", "--format", "binary"])), 0);
    assert_eq!(code(&trtrack(d, &["convert", "imu.bin", "imu.csv", "--format", "csv"])), 0);
    assert_eq!(read(d.join("imu.csv")), read(d.join("sim/imu.csv")));

    std::fs::write(d.join("empty.jsonl"), "").unwrap();
    assert_eq!(code(&trtrack(d, &["convert", "empty.jsonl", "empty.bin", "--format", "binary"])), 0);
}

#[test]
fn truncated_trace_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    trtrack(d, &["simulate", "--length", "1", "--out", "sim"]);
    let bytes = read(d.join("sim/cirs.bin"));
    std::fs::write(d.join("cut.bin"), &bytes[..bytes.len() - 7]).unwrap();
    let o = trtrack(d, &["convert", "cut.bin", "cut.jsonl"]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("malformed record"));

    std::fs::write(d.join("junk.jsonl"), "{\"taps\":[[1,0]],\"timestamp\":0}\nnot json\n").unwrap();
    let o = trtrack(d, &["estimate-distance", "junk.jsonl"]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("record 1"));
}

#[test]
fn configuration_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&trtrack(d, &["experiment", "no_such_scenario"])), 2);
    assert_eq!(code(&trtrack(d, &["experiment", "train_loop", "--config", "missing.toml"])), 2);
    std::fs::write(d.join("bad.toml"), "seeds = []\n").unwrap();
    assert_eq!(code(&trtrack(d, &["experiment", "train_loop", "--config", "bad.toml"])), 2);
    std::fs::write(d.join("typo.toml"), "[train_loop]\nloop_lenght = 8.0\n").unwrap();
    assert_eq!(code(&trtrack(d, &["experiment", "train_loop", "--config", "typo.toml"])), 2);
    std::fs::write(d.join("neg.toml"), "[walk]\nspeeds = [1.0, -1.0]\n").unwrap();
    assert_eq!(code(&trtrack(d, &["experiment", "walk_distance", "--config", "neg.toml"])), 2);
    assert_eq!(code(&trtrack(d, &["track", "a", "b", "--start", "1,2"])), 2);
    assert_eq!(code(&trtrack(d, &["bogus-verb"])), 2);
}

#[test]
fn experiment_outputs_are_reproducible_and_flags_override_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("exp.toml"), "scenario = \"trrs_vs_distance\"\nseeds = [1, 2, 3]\noutput_dir = \"from_file\"\n").unwrap();
    for out in ["r1", "r2"] {
        let o = trtrack(d, &["experiment", "trrs_vs_distance", "--config", "exp.toml", "--seed", "5", "--out", out]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert!(!d.join("from_file").exists());
    for f in ["report.json", "trrs_vs_distance.csv", "trrs_map.csv"] {
        assert_eq!(read(d.join("r1").join(f)), read(d.join("r2").join(f)), "{f}");
    }
    let report: serde_json::Value = serde_json::from_slice(&read(d.join("r1/report.json"))).unwrap();
    assert_eq!(report["seeds"], serde_json::json!([5, 6, 7]));

    let o = trtrack(d, &["experiment", "trrs_vs_distance", "--config", "exp.toml", "--format", "jsonl"]);
    assert_eq!(code(&o), 0);
    let line = String::from_utf8(read(d.join("from_file/trrs_vs_distance.jsonl"))).unwrap();
    let first: serde_json::Value = serde_json::from_str(line.lines().next().unwrap()).unwrap();
    assert!(first.is_object());
}
