//! Synthetic scenes and the oracle detector that stands in for trained
//! networks.
//!
//! Scenes are seeded trajectories of textured rectangles bouncing around a
//! high-resolution canvas. The oracle "detects" ground-truth objects inside
//! a region with a recall that depends on the object's *apparent* size
//! after the virtual resize implied by the processed region: an object of
//! 20 px seen through a full 1024 px frame resized to a 512 px input
//! appears as 10 px and is detected less reliably than the same object
//! seen through a 128 px tile processed at native resolution. That
//! resolution effect is what makes tile selection worth its cost.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::geom::{BoundingBox, Detection, DetectionSource, FrameDims, Tile};
use crate::gray::{Frame, GrayImage};
use crate::pipeline::{FrameSource, SourceError};
use crate::pool::{CnnProfile, Detector, DetectorError};

/// How object centers move between frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MotionModel {
    /// Constant velocity, reflecting off frame borders.
    Linear,
    /// Constant speed with a per-frame random heading perturbation.
    RandomWalk,
}

/// Declarative description of a synthetic scene.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub dims: FrameDims,
    pub n_objects: usize,
    /// Inclusive object side range, pixels.
    pub size_range: (u32, u32),
    pub motion: MotionModel,
    /// Inclusive speed range, pixels per frame.
    pub speed_range: (f64, f64),
    /// Objects absent until their entry frame: (frame, object index).
    pub entries: Vec<(usize, usize)>,
    pub frames: usize,
    pub seed: u64,
}

impl SceneSpec {
    /// A reasonable mid-density default: callers override what they need.
    pub fn new(dims: FrameDims, n_objects: usize, frames: usize, seed: u64) -> Self {
        Self {
            dims,
            n_objects,
            size_range: (16, 32),
            motion: MotionModel::Linear,
            speed_range: (1.0, 3.0),
            entries: Vec::new(),
            frames,
            seed,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("invalid scene spec: {0}")]
    InvalidSpec(String),
}

/// Ground-truth trajectory table: per object, one optional box per frame
/// (absent before the object's entry frame).
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectories {
    dims: FrameDims,
    frames: usize,
    tracks: Vec<Vec<Option<BoundingBox>>>,
}

impl Trajectories {
    pub fn dims(&self) -> FrameDims {
        self.dims
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn n_objects(&self) -> usize {
        self.tracks.len()
    }

    pub fn track(&self, object: usize) -> &[Option<BoundingBox>] {
        &self.tracks[object]
    }

    /// Ground-truth boxes present at frame `t`, object ids filled in.
    pub fn ground_truth(&self, t: usize) -> Vec<BoundingBox> {
        self.tracks.iter().filter_map(|track| track[t]).collect()
    }

    /// Single-object constant-velocity trajectory; exact while the object
    /// stays away from the borders.
    pub fn linear(
        dims: FrameDims,
        start: BoundingBox,
        velocity: (f64, f64),
        frames: usize,
    ) -> Self {
        let (w, h) = (start.w, start.h);
        let (mut cx, mut cy) = start.center();
        let (mut vx, mut vy) = velocity;
        let mut track = Vec::with_capacity(frames);
        for _ in 0..frames {
            track.push(Some(box_at(cx, cy, w, h, start.object_id.unwrap_or(0))));
            step_reflect(&mut cx, &mut vx, w, dims.width);
            step_reflect(&mut cy, &mut vy, h, dims.height);
        }
        Self { dims, frames, tracks: vec![track] }
    }

    /// Build a table from per-frame annotation boxes keyed by object id.
    pub fn from_ground_truth(
        dims: FrameDims,
        frames: usize,
        per_frame: &[Vec<BoundingBox>],
    ) -> Self {
        assert_eq!(per_frame.len(), frames);
        let mut ids: Vec<u64> = per_frame
            .iter()
            .flatten()
            .filter_map(|b| b.object_id)
            .collect();
        ids.sort_unstable();
        ids.dedup();
        let tracks = ids
            .iter()
            .map(|&id| {
                (0..frames)
                    .map(|t| {
                        per_frame[t]
                            .iter()
                            .find(|b| b.object_id == Some(id))
                            .copied()
                    })
                    .collect()
            })
            .collect();
        Self { dims, frames, tracks }
    }
}

fn box_at(cx: f64, cy: f64, w: u32, h: u32, id: u64) -> BoundingBox {
    BoundingBox {
        x: (cx - w as f64 / 2.0).round() as i32,
        y: (cy - h as f64 / 2.0).round() as i32,
        w,
        h,
        object_id: Some(id),
    }
}

/// Advance one axis and reflect the center so the box stays in frame.
fn step_reflect(pos: &mut f64, vel: &mut f64, side: u32, extent: u32) {
    let lo = side as f64 / 2.0;
    let hi = extent as f64 - side as f64 / 2.0;
    let mut p = *pos + *vel;
    if hi <= lo {
        *pos = (lo + hi) / 2.0;
        return;
    }
    while p < lo || p > hi {
        if p < lo {
            p = 2.0 * lo - p;
            *vel = -*vel;
        } else {
            p = 2.0 * hi - p;
            *vel = -*vel;
        }
    }
    *pos = p;
}

/// Roll the seeded trajectories for a scene spec.
pub fn generate_scene(spec: &SceneSpec) -> Result<Trajectories, SimError> {
    validate_spec(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut entry = vec![0usize; spec.n_objects];
    for &(frame, object) in &spec.entries {
        entry[object] = frame;
    }

    struct Body {
        cx: f64,
        cy: f64,
        vx: f64,
        vy: f64,
        heading: f64,
        speed: f64,
        w: u32,
        h: u32,
    }

    let mut bodies: Vec<Body> = (0..spec.n_objects)
        .map(|_| {
            let w = rng.gen_range(spec.size_range.0..=spec.size_range.1);
            let h = rng.gen_range(spec.size_range.0..=spec.size_range.1);
            let speed = rng.gen_range(spec.speed_range.0..=spec.speed_range.1);
            let heading = rng.gen_range(0.0..std::f64::consts::TAU);
            let cx = rng.gen_range(w as f64 / 2.0..=(spec.dims.width - w) as f64 + w as f64 / 2.0 - w as f64);
            let cy = rng.gen_range(h as f64 / 2.0..=(spec.dims.height - h) as f64 + h as f64 / 2.0 - h as f64);
            Body {
                cx,
                cy,
                vx: speed * heading.cos(),
                vy: speed * heading.sin(),
                heading,
                speed,
                w,
                h,
            }
        })
        .collect();

    let mut tracks: Vec<Vec<Option<BoundingBox>>> =
        vec![Vec::with_capacity(spec.frames); spec.n_objects];
    for t in 0..spec.frames {
        for (i, body) in bodies.iter_mut().enumerate() {
            tracks[i].push(
                (t >= entry[i]).then(|| box_at(body.cx, body.cy, body.w, body.h, i as u64)),
            );
            if spec.motion == MotionModel::RandomWalk {
                body.heading += rng.gen_range(-0.5..0.5);
                body.vx = body.speed * body.heading.cos();
                body.vy = body.speed * body.heading.sin();
            }
            step_reflect(&mut body.cx, &mut body.vx, body.w, spec.dims.width);
            step_reflect(&mut body.cy, &mut body.vy, body.h, spec.dims.height);
        }
    }
    Ok(Trajectories { dims: spec.dims, frames: spec.frames, tracks })
}

fn validate_spec(spec: &SceneSpec) -> Result<(), SimError> {
    let err = |m: &str| Err(SimError::InvalidSpec(m.to_string()));
    if spec.frames == 0 {
        return err("frames must be >= 1");
    }
    if spec.size_range.0 == 0 || spec.size_range.0 > spec.size_range.1 {
        return err("size range must be positive and ordered");
    }
    if spec.size_range.1 > spec.dims.width || spec.size_range.1 > spec.dims.height {
        return err("object size exceeds frame dimensions");
    }
    if spec.speed_range.0 < 0.0 || spec.speed_range.0 > spec.speed_range.1 {
        return err("speed range must be non-negative and ordered");
    }
    for &(frame, object) in &spec.entries {
        if object >= spec.n_objects {
            return err("entry schedule names an unknown object");
        }
        if frame >= spec.frames {
            return err("entry frame beyond end of run");
        }
    }
    Ok(())
}

/// Render frame `t`: a low-amplitude smooth background with one
/// high-contrast textured patch per visible object. Texture phase is tied
/// to object-local coordinates so the pattern travels with the object.
pub fn rasterize(traj: &Trajectories, t: usize, dims: FrameDims) -> GrayImage {
    let w = dims.width as usize;
    let h = dims.height as usize;
    // separable background: one table per axis
    let col: Vec<f32> = (0..w).map(|x| (0.13 * x as f64).sin() as f32).collect();
    let row: Vec<f32> = (0..h).map(|y| (0.11 * y as f64).cos() as f32).collect();
    let mut img = GrayImage::from_raw(
        w,
        h,
        (0..w * h).map(|i| 0.35 + 0.04 * col[i % w] * row[i / w]).collect(),
    );
    for (id, track) in traj.tracks.iter().enumerate() {
        let Some(b) = track[t] else { continue };
        let phase_a = (id as f64 * 1.7).sin() * 2.0;
        let phase_b = (id as f64 * 2.3).cos() * 2.0;
        let x0 = b.x.max(0) as usize;
        let y0 = b.y.max(0) as usize;
        let x1 = (b.right().min(w as i64)) as usize;
        let y1 = (b.bottom().min(h as i64)) as usize;
        for y in y0..y1 {
            for x in x0..x1 {
                let lx = (x as i32 - b.x) as f64;
                let ly = (y as i32 - b.y) as f64;
                let v = 0.55
                    + 0.35 * (0.9 * lx + phase_a).sin() * (0.8 * ly + phase_b).cos();
                img.set(x, y, v.clamp(0.0, 1.0) as f32);
            }
        }
    }
    img
}

/// Recall model of the stand-in detector.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleModel {
    /// Recall for objects at adequate apparent resolution.
    pub base_recall: f64,
    /// Apparent size (pixels after virtual resize) below which recall
    /// degrades linearly toward zero.
    pub min_apparent_size: f64,
    /// Expected spurious detections per full-frame inference; tiles see a
    /// share proportional to their area.
    pub false_positive_rate: f64,
    pub seed: u64,
}

impl Default for OracleModel {
    fn default() -> Self {
        Self { base_recall: 0.97, min_apparent_size: 12.0, false_positive_rate: 0.05, seed: 0 }
    }
}

impl OracleModel {
    pub fn with_seed(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }

    /// Perfect detector: every covered object found, no noise, no jitter.
    pub fn perfect() -> Self {
        Self { base_recall: 1.0, min_apparent_size: 0.0, false_positive_rate: 0.0, seed: 0 }
    }

    /// Probability of detecting an object of the given pixel size when the
    /// region is resized to the profile's input size.
    pub fn detection_probability(&self, object_size: u32, region_size: u32, input_size: u32) -> f64 {
        let apparent = object_size as f64 * input_size as f64 / region_size as f64;
        if apparent >= self.min_apparent_size {
            self.base_recall
        } else {
            self.base_recall * apparent / self.min_apparent_size
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stable per-call seed so detection outcomes depend only on
/// (seed, frame, region, input size), never on evaluation order.
fn call_seed(model_seed: u64, t: usize, region: &Tile, input_size: u32) -> u64 {
    [t as u64, region.x as u64, region.y as u64, region.size as u64, input_size as u64]
        .iter()
        .fold(splitmix64(model_seed), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

fn sample_poisson(rng: &mut ChaCha8Rng, lambda: f64) -> u32 {
    if lambda <= 0.0 {
        return 0;
    }
    let limit = (-lambda).exp();
    let mut k = 0u32;
    let mut p = 1.0f64;
    loop {
        p *= rng.gen::<f64>();
        if p <= limit {
            return k;
        }
        k += 1;
    }
}

/// True when the object is visible to a detector processing the region:
/// its center lies inside the region. Full containment implies this;
/// objects hanging over a tile edge are still seen, the way a real
/// detector reports partially visible objects at region borders.
fn visible_in_region(b: &BoundingBox, region: &Tile) -> bool {
    let (cx, cy) = b.center();
    cx >= region.x as f64
        && cx <= region.right() as f64
        && cy >= region.y as f64
        && cy <= region.bottom() as f64
}

/// Detect ground-truth objects visible inside `region` at frame `t`,
/// in region-local coordinates (the detector contract).
///
/// Each visible object is reported with probability given by the
/// apparent-size law, its box jittered by up to 2 px; seeded Poisson false
/// positives are added at a rate proportional to the region's share of the
/// frame area.
pub fn oracle_detect(
    traj: &Trajectories,
    t: usize,
    region: &Tile,
    profile: &CnnProfile,
    model: &OracleModel,
) -> Vec<Detection> {
    let dims = traj.dims();
    let mut rng = ChaCha8Rng::seed_from_u64(call_seed(model.seed, t, region, profile.input_size));
    let mut out = Vec::new();

    for gt in traj.ground_truth(t) {
        if !visible_in_region(&gt, region) {
            continue;
        }
        let p = model.detection_probability(gt.long_side(), region.size, profile.input_size);
        let roll: f64 = rng.gen();
        let jx: i32 = rng.gen_range(-2..=2);
        let jy: i32 = rng.gen_range(-2..=2);
        let score = 0.75 + 0.2 * rng.gen::<f64>();
        if roll >= p {
            continue;
        }
        let local = BoundingBox {
            x: gt.x - region.x + jx,
            y: gt.y - region.y + jy,
            ..gt
        };
        out.push(Detection::new(clamp_local(local, region, dims), score, source_for(region)));
    }

    // spurious detections, proportional to the region's frame-area share
    let frame_area = dims.width as f64 * dims.height as f64;
    let region_area = if region.is_full_frame() {
        frame_area
    } else {
        (region.size as f64).powi(2)
    };
    let lambda = model.false_positive_rate * region_area / frame_area;
    let n_fp = sample_poisson(&mut rng, lambda);
    let local_w = if region.is_full_frame() { dims.width } else { region.size };
    let local_h = if region.is_full_frame() { dims.height } else { region.size };
    for _ in 0..n_fp {
        let w = rng.gen_range(10..=30).min(local_w);
        let h = rng.gen_range(10..=30).min(local_h);
        let x = rng.gen_range(0..=(local_w - w)) as i32;
        let y = rng.gen_range(0..=(local_h - h)) as i32;
        let score = 0.3 + 0.3 * rng.gen::<f64>();
        out.push(Detection::new(
            BoundingBox { x, y, w, h, object_id: None },
            score,
            source_for(region),
        ));
    }
    out
}

fn source_for(region: &Tile) -> DetectionSource {
    if region.is_full_frame() {
        DetectionSource::Stage1
    } else {
        DetectionSource::Stage2Tile
    }
}

/// Keep a region-local box inside the region's in-frame extent.
fn clamp_local(b: BoundingBox, region: &Tile, dims: FrameDims) -> BoundingBox {
    let max_x = (region.right().min(dims.width as i64) - region.x as i64) as i32;
    let max_y = (region.bottom().min(dims.height as i64) - region.y as i64) as i32;
    BoundingBox {
        x: b.x.clamp(0, (max_x - b.w as i32).max(0)),
        y: b.y.clamp(0, (max_y - b.h as i32).max(0)),
        ..b
    }
}

/// The oracle wrapped as a pluggable detection backend over a trajectory
/// table (synthetic or loaded from annotations).
pub struct OracleDetector {
    traj: Trajectories,
    model: OracleModel,
}

impl OracleDetector {
    pub fn new(traj: Trajectories, model: OracleModel) -> Self {
        Self { traj, model }
    }

    pub fn trajectories(&self) -> &Trajectories {
        &self.traj
    }
}

impl Detector for OracleDetector {
    fn detect(
        &self,
        frame: &Frame,
        region: &Tile,
        profile: &CnnProfile,
    ) -> Result<Vec<Detection>, DetectorError> {
        Ok(oracle_detect(&self.traj, frame.index, region, profile, &self.model))
    }
}

/// A complete simulated sequence: trajectories plus on-demand rendering.
pub struct SimSource {
    traj: Trajectories,
}

impl SimSource {
    pub fn new(traj: Trajectories) -> Self {
        Self { traj }
    }

    pub fn from_spec(spec: &SceneSpec) -> Result<Self, SimError> {
        Ok(Self::new(generate_scene(spec)?))
    }

    pub fn trajectories(&self) -> &Trajectories {
        &self.traj
    }
}

impl FrameSource for SimSource {
    fn dims(&self) -> FrameDims {
        self.traj.dims()
    }

    fn len(&self) -> usize {
        self.traj.frames()
    }

    fn frame(&self, t: usize) -> Result<Frame, SourceError> {
        Ok(Frame { index: t, image: rasterize(&self.traj, t, self.traj.dims()) })
    }

    fn ground_truth(&self, t: usize) -> Vec<BoundingBox> {
        self.traj.ground_truth(t)
    }
}
