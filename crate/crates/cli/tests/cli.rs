use std::process::Command;

fn nftrack() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nftrack"))
}

#[test]
fn benchmark_writes_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m.csv");
    let status = nftrack()
        .args(["benchmark", "--frames", "20", "--blackout", "10..12", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let csv = std::fs::read_to_string(&out).unwrap();
    assert_eq!(csv.lines().count(), 21);
    assert!(csv.starts_with(nftrack::harness::METRICS_HEADER));
}

#[test]
fn render_then_replay_poses() {
    let dir = tempfile::tempdir().unwrap();
    let frames = dir.path().join("frames");
    let out = nftrack().args(["render", "--frames", "4", "--out-dir"]).arg(&frames).output().unwrap();
    assert!(out.status.success());
    assert!(frames.join("frame_0003.pgm").exists());
    let metrics = dir.path().join("m.csv");
    let out = nftrack()
        .args(["benchmark", "--trajectory"])
        .arg(frames.join("poses.csv"))
        .arg("--out")
        .arg(&metrics)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(std::fs::read_to_string(&metrics).unwrap().lines().count(), 5);
}

#[test]
fn bad_arguments_fail_cleanly() {
    let out = nftrack().args(["benchmark", "--intrinsics", "1,2,3"]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("intrinsics"));
    let out = nftrack().args(["benchmark", "--blackout", "nonsense"]).output().unwrap();
    assert!(!out.status.success());
}

#[test]
fn pattern_dump_has_256_pairs() {
    let out = nftrack().arg("dump-pattern").output().unwrap();
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 257);
}
