//! Modeled power draw of the pipeline against single-shot baselines on
//! every built-in platform profile.
//!
//! ```bash
//! cargo run --example platform_power
//! ```

use tilepipe::geom::FrameDims;
use tilepipe::metrics::PlatformProfile;
use tilepipe::pipeline::{run, RunOptions};
use tilepipe::pool::{default_pool, CnnPool, CnnProfile, ProfileRole};
use tilepipe::sim::{generate_scene, OracleDetector, OracleModel, SceneSpec, SimSource};

/// Stage-1 profile doubled in latency and energy: a heavier single-shot
/// detector baseline.
fn heavy_pool() -> CnnPool {
    let base = default_pool();
    let s1 = base.stage1();
    let mut heavy =
        CnnProfile::new("heavy-512", s1.input_size, s1.latency * 2.0, ProfileRole::Stage1Full);
    for (platform, joules) in &s1.energy {
        heavy = heavy.with_energy(platform, joules * 2.0);
    }
    CnnPool::new(heavy, base.tile_profiles().to_vec()).unwrap()
}

fn main() {
    let mut spec = SceneSpec::new(FrameDims::new(1024, 768), 5, 60, 88);
    spec.size_range = (22, 30);
    let traj = generate_scene(&spec).unwrap();
    let oracle = OracleModel::with_seed(12);
    let opts = RunOptions::default();

    println!(
        "{:>8} {:>18} {:>18} {:>18}",
        "platform", "pipeline 1-3-5 (W)", "all full-frame (W)", "heavy detector (W)"
    );
    for platform in PlatformProfile::builtins() {
        let mut apc = Vec::new();
        for (pool, stages) in
            [(default_pool(), "1-3-5"), (default_pool(), "1-0-0"), (heavy_pool(), "1-0-0")]
        {
            let detector = OracleDetector::new(traj.clone(), oracle.clone());
            let source = SimSource::new(traj.clone());
            let report = run(
                &source,
                &detector,
                &pool,
                &stages.parse().unwrap(),
                &platform,
                &opts,
            )
            .unwrap();
            apc.push(report.apc);
        }
        println!("{:>8} {:>18.3} {:>18.3} {:>18.3}", platform.id, apc[0], apc[1], apc[2]);
    }
    println!("\n(values are modeled from the energy tables; only the ordering is meaningful)");
}
