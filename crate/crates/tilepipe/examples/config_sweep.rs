//! Compare stage configurations on one identical sequence and emit the
//! combined CSV + SVG scatter, like `tilepipe sweep` does.
//!
//! ```bash
//! cargo run --example config_sweep
//! ```

use std::path::Path;

use tilepipe::config::{execute_sweep, parse_config, RunConfig};
use tilepipe::pipeline::StageConfig;
use tilepipe::report::write_sweep;

const CONFIG: &str = "\
[run]
mode = simulate
stages = 1-3-5
platform = cpu
seed = 616

[scene]
width = 1024
height = 768
objects = 8
frames = 120
min_size = 26
max_size = 34
entry = 30 4
entry = 60 5
entry = 80 6
entry = 100 7
";

fn main() {
    let base =
        RunConfig::from_raw(&parse_config(CONFIG, Path::new("inline.conf")).unwrap()).unwrap();
    let configs: Vec<StageConfig> = ["1-1-1", "1-3-5", "1-5-5", "1-10-5"]
        .iter()
        .map(|s| s.parse().unwrap())
        .collect();

    let sweep = execute_sweep(&configs, &base).unwrap();
    println!("{:>8} {:>8} {:>12} {:>10}", "config", "sen", "apt (s)", "apc (W)");
    for e in &sweep.entries {
        println!(
            "{:>8} {:>8.4} {:>12.6} {:>10.3}",
            e.stages.to_string(),
            e.report.sen.unwrap(),
            e.report.apt,
            e.report.apc
        );
    }

    let out = Path::new("out/sweep-example");
    let files = write_sweep(&sweep, out, true, None).unwrap();
    println!("\nwrote:");
    for f in files {
        println!("  {}", f.display());
    }
}
