//! Tile proposal, scoring, and plan selection on a four-object scene.
//!
//! ```bash
//! cargo run --example tile_selection
//! ```

use tilepipe::geom::{BoundingBox, FrameDims};
use tilepipe::pool::default_pool;
use tilepipe::tiles::{propose_tiles, score_candidate, select_tiles};

fn main() {
    let pool = default_pool();
    let dims = FrameDims::new(1024, 768);

    println!("profile pool:");
    println!("  stage 1: {} ({} px, {} s)", pool.stage1().name, pool.stage1().input_size, pool.stage1().latency);
    for p in pool.tile_profiles() {
        println!("  tile:    {} ({} px, {} s)", p.name, p.input_size, p.latency);
    }

    // four pedestrians, pairwise far apart
    let objects = [
        BoundingBox::new(80, 90, 24, 30),
        BoundingBox::new(600, 120, 28, 28),
        BoundingBox::new(150, 560, 30, 26),
        BoundingBox::new(700, 580, 26, 30),
    ];

    println!("\ncandidates for object 0 (one per corner anchor and usable size):");
    for tile in propose_tiles(&objects[0], &pool.tile_sizes(), dims) {
        let cand = score_candidate(&tile, &objects, &pool).unwrap();
        println!(
            "  {:>3} px tile at ({:>4},{:>4})  covers {:?}  ept {:.4} s/object",
            tile.size, tile.x, tile.y, cand.covered, cand.ept
        );
    }

    let plan = select_tiles(&objects, &pool, dims);
    println!("\nselected plan:");
    for tile in &plan.tiles {
        println!("  {:>3} px tile at ({:>4},{:>4})", tile.size, tile.x, tile.y);
    }
    println!(
        "plan latency {} s vs full-frame pass {} s ({}x cheaper)",
        plan.total_latency,
        pool.stage1().latency,
        pool.stage1().latency / plan.total_latency
    );
}
