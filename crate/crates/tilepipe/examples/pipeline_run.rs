//! One full pipeline run on a simulated scene: per-frame stage, cost, and
//! matching, then the aggregate report.
//!
//! ```bash
//! cargo run --example pipeline_run
//! ```

use tilepipe::geom::FrameDims;
use tilepipe::metrics::PlatformProfile;
use tilepipe::pipeline::{run, RunOptions};
use tilepipe::pool::default_pool;
use tilepipe::sim::{generate_scene, OracleDetector, OracleModel, SceneSpec, SimSource};

fn main() {
    let mut spec = SceneSpec::new(FrameDims::new(1024, 768), 5, 27, 42);
    spec.size_range = (22, 30);
    spec.entries = vec![(10, 4)]; // object 4 enters mid-run
    let traj = generate_scene(&spec).unwrap();

    let detector = OracleDetector::new(traj.clone(), OracleModel::with_seed(42));
    let source = SimSource::new(traj);
    let pool = default_pool();
    let platform = PlatformProfile::builtin("odroid").unwrap();
    let stages = "1-3-5".parse().unwrap();

    let report =
        run(&source, &detector, &pool, &stages, &platform, &RunOptions::default()).unwrap();

    println!("{:>5} {:>5} {:>4} {:>4} {:>4} {:>11} {:>8}", "frame", "stage", "tp", "fn", "fp", "time (s)", "tiles");
    for rec in &report.frames {
        let r = &rec.result;
        println!(
            "{:>5} {:>5} {:>4} {:>4} {:>4} {:>11.6} {:>8}",
            r.frame_index,
            r.stage.to_string(),
            rec.matched.tp,
            rec.matched.fn_,
            rec.matched.fp,
            r.model_time,
            r.tiles_used.len()
        );
    }
    let (s1, s2, s3) = report.stage_histogram;
    println!("\nstages: {s1} S1, {s2} S2, {s3} S3");
    println!("sen {:.4}", report.sen.unwrap());
    println!("apt {:.6} s/frame", report.apt);
    println!("apc {:.3} W on {}", report.apc, report.meta.platform);
}
