//! tilepipe — a three-stage detection pipeline engine for high-resolution
//! video on a modeled compute budget.
//!
//! The pipeline alternates between three kinds of frame processing:
//!
//! 1. **Full-frame detection** — a single detector pass over the resized
//!    frame produces initial object positions.
//! 2. **Tile detection** — square sub-regions (tiles) are proposed around
//!    the known objects, scored by effective processing time, selected and
//!    pruned to a minimal covering plan, then each tile is processed by a
//!    size-matched detector profile from a pool.
//! 3. **Tracking** — pyramidal Lucas-Kanade optical flow advances the box
//!    centers between consecutive frames without any detector call.
//!
//! How many consecutive frames each stage owns is set by a `N1-N2-N3`
//! cycle ([`pipeline::StageConfig`]). Latency and energy are modeled from
//! per-profile tables so runs are deterministic and platform-independent;
//! sensitivity, average processing time, and average power are aggregated
//! per run ([`metrics`]).
//!
//! A seeded scene simulator and a resolution-aware oracle detector
//! ([`sim`]) stand in for trained networks: the oracle's recall degrades
//! with the apparent object size after the virtual resize implied by the
//! processed region, which is exactly the effect that makes tiling pay off.
//!
//! See the `examples/` directory for one runnable program per capability,
//! and the `tilepipe` binary for the `run`/`sweep` command-line front end.

pub mod annotations;
pub mod config;
pub mod flow;
pub mod geom;
pub mod gray;
pub mod metrics;
pub mod pgm;
pub mod pipeline;
pub mod pool;
pub mod report;
pub mod sim;
pub mod tiles;

pub use geom::{BoundingBox, Detection, DetectionSource, FrameDims, Tile, TileAnchor};
pub use gray::{Frame, GrayImage};
pub use pipeline::{FrameResult, FrameSource, RunOptions, Stage, StageConfig};
pub use pool::{CnnPool, CnnProfile, Detector, ProfileRole};
