//! Pyramidal Lucas-Kanade tracking of one textured object across a
//! synthetic sequence.
//!
//! ```bash
//! cargo run --example track_blob
//! ```

use tilepipe::flow::{track_objects, TrackState, TrackerParams};
use tilepipe::geom::{BoundingBox, Detection, DetectionSource, FrameDims};
use tilepipe::sim::{rasterize, Trajectories};

fn main() {
    let dims = FrameDims::new(256, 256);
    let start = BoundingBox::with_id(60, 50, 24, 24, 0);
    let velocity = (2.0, 3.0);
    let frames = 12;
    let traj = Trajectories::linear(dims, start, velocity, frames);
    let params = TrackerParams::default();

    // frame 0: pretend the detector found the object exactly
    let det = Detection::new(start, 0.95, DetectionSource::Stage1);
    let mut state =
        TrackState::from_detections(&[det], &rasterize(&traj, 0, dims), &params).unwrap();

    println!("true velocity ({}, {}) px/frame", velocity.0, velocity.1);
    println!("{:>5} {:>12} {:>12} {:>8}", "frame", "tracked x", "tracked y", "err px");
    for t in 1..frames {
        state = track_objects(state, &rasterize(&traj, t, dims), &params).unwrap();
        let p = state.points()[0];
        let truth = traj.track(0)[t].unwrap();
        let (tx, ty) = truth.center();
        let err = ((p.x - tx).powi(2) + (p.y - ty).powi(2)).sqrt();
        println!("{t:>5} {:>12.3} {:>12.3} {err:>8.3}", p.x, p.y);
    }
}
