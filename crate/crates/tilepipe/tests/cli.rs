//! End-to-end tests through the actual binary: exit codes, file outputs,
//! determinism, and the PGM + annotations dataset path.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tilepipe::annotations::{save_annotations, AnnotationRecord, GtTable};
use tilepipe::geom::FrameDims;
use tilepipe::pgm::write_pgm;
use tilepipe::sim::{generate_scene, rasterize, SceneSpec};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tilepipe"))
}

fn run_ok(args: &[&str]) -> Output {
    let out = bin().args(args).output().expect("spawn tilepipe");
    assert!(
        out.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

const SIM_CONFIG: &str = "\
[run]
mode = simulate
stages = 1-3-5
platform = rpi3
seed = 11

[scene]
width = 512
height = 384
objects = 4
frames = 18
";

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let path = dir.join("run.conf");
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn run_writes_report_files() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SIM_CONFIG);
    let out_dir = dir.path().join("out");
    run_ok(&[
        "run",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--plot",
    ]);
    assert!(out_dir.join("frames.csv").exists());
    assert!(out_dir.join("summary.csv").exists());
    assert!(out_dir.join("run.svg").exists());
    let frames = fs::read_to_string(out_dir.join("frames.csv")).unwrap();
    assert_eq!(frames.lines().count(), 1 + 18 + 1);
}

#[test]
fn identical_seed_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SIM_CONFIG);
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out in [&out_a, &out_b] {
        run_ok(&[
            "run",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--seed",
            "99",
        ]);
    }
    for name in ["frames.csv", "summary.csv"] {
        let a = fs::read(out_a.join(name)).unwrap();
        let b = fs::read(out_b.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }
}

#[test]
fn sweep_writes_combined_and_per_config_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SIM_CONFIG);
    let out_dir = dir.path().join("sweep");
    let out = run_ok(&[
        "sweep",
        "--configs",
        "1-1-1,1-3-5,1-10-5",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--plot",
    ]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("1-1-1:") && stdout.contains("1-10-5:"));
    let csv = fs::read_to_string(out_dir.join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(out_dir.join("sweep.svg").exists());
    for sub in ["1-1-1", "1-3-5", "1-10-5"] {
        assert!(out_dir.join(sub).join("summary.csv").exists());
    }
}

#[test]
fn bad_config_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "[run]\nmode = simulate\n"); // no stages, no scene
    let out = bin().args(["run", "--config", config.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn missing_config_file_exits_one() {
    let out = bin().args(["run", "--config", "/nonexistent/x.conf"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn unknown_platform_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SIM_CONFIG);
    let out = bin()
        .args(["run", "--config", config.to_str().unwrap(), "--platform", "abacus"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bad_usage_exits_one() {
    let out = bin().args(["run"]).output().unwrap(); // missing --config
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn dataset_mode_runs_exported_frames() {
    let dir = tempfile::tempdir().unwrap();
    let dims = FrameDims::new(384, 288);
    let mut spec = SceneSpec::new(dims, 3, 12, 21);
    spec.size_range = (18, 24);
    spec.speed_range = (0.5, 1.5);
    let traj = generate_scene(&spec).unwrap();

    let frames_dir = dir.path().join("frames");
    fs::create_dir(&frames_dir).unwrap();
    let mut table = GtTable::default();
    for t in 0..12 {
        write_pgm(&rasterize(&traj, t, dims), &frames_dir.join(format!("{t:05}.pgm"))).unwrap();
        for b in traj.ground_truth(t) {
            table.insert(AnnotationRecord {
                frame: t,
                object_id: b.object_id.unwrap(),
                box_: b,
            });
        }
    }
    save_annotations(&table, &dir.path().join("gt.txt")).unwrap();

    let config = write_config(
        dir.path(),
        "\
[run]
mode = dataset
stages = 1-2-3
seed = 5

[dataset]
frames_dir = frames
annotations = gt.txt
",
    );
    let out_dir = dir.path().join("out");
    let out = run_ok(&[
        "run",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("sen"), "stdout: {stdout}");
    let summary = fs::read_to_string(out_dir.join("summary.csv")).unwrap();
    assert!(summary.contains("mode,dataset"));
    assert!(summary.contains("frames,12"));
}
