//! Export a simulated scene as a PGM frame sequence plus a plain-text
//! annotation file — a dataset consumable by `tilepipe run` in dataset
//! mode.
//!
//! ```bash
//! cargo run --example export_dataset
//! tilepipe run --config out/dataset-example/run.conf
//! ```

use std::fs;
use std::path::Path;

use tilepipe::annotations::{save_annotations, AnnotationRecord, GtTable};
use tilepipe::geom::FrameDims;
use tilepipe::pgm::write_pgm;
use tilepipe::sim::{generate_scene, rasterize, SceneSpec};

fn main() {
    let out = Path::new("out/dataset-example");
    let frames_dir = out.join("frames");
    fs::create_dir_all(&frames_dir).unwrap();

    let dims = FrameDims::new(640, 480);
    let mut spec = SceneSpec::new(dims, 4, 30, 7);
    spec.size_range = (20, 28);
    let traj = generate_scene(&spec).unwrap();

    let mut table = GtTable::default();
    for t in 0..traj.frames() {
        let img = rasterize(&traj, t, dims);
        write_pgm(&img, &frames_dir.join(format!("{t:05}.pgm"))).unwrap();
        for b in traj.ground_truth(t) {
            table.insert(AnnotationRecord { frame: t, object_id: b.object_id.unwrap(), box_: b });
        }
    }
    save_annotations(&table, &out.join("gt.txt")).unwrap();

    fs::write(
        out.join("run.conf"),
        "\
[run]
mode = dataset
stages = 1-3-5
seed = 7

[dataset]
frames_dir = frames
annotations = gt.txt
",
    )
    .unwrap();

    println!("wrote {} frames to {}", traj.frames(), frames_dir.display());
    println!("wrote annotations to {}", out.join("gt.txt").display());
    println!("wrote a ready-to-run config to {}", out.join("run.conf").display());
}
