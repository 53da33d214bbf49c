//! The frame-cycle scheduler: dispatch each frame to full-frame detection
//! (S1), tile detection (S2), or tracking (S3), carry object state across
//! frames, and account modeled latency and energy.
//!
//! A cycle of `n1 + n2 + n3` frames runs `n1` S1 frames, then `n2` S2
//! frames, then `n3` S3 frames, repeating. Whenever the pipeline holds no
//! detections (start of run, or every object lost), the frame is forced to
//! S1 regardless of cycle position: there is nothing to tile or track.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::flow::{track_objects, FlowError, TrackState, TrackerParams};
use crate::geom::{BoundingBox, Detection, FrameDims, Tile};
use crate::gray::Frame;
use crate::metrics::{
    apc, apt, match_frame, sensitivity, MatchResult, MetricsError, PlatformProfile,
    DEFAULT_FRAME_PERIOD, DEFAULT_MATCH_IOU,
};
use crate::pool::{run_detector, CnnPool, Detector, DetectorError, PoolError};
use crate::tiles::{merge_tile_detections, select_tiles};

/// Which stage processed a frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    S1,
    S2,
    S3,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Stage::S1 => write!(f, "S1"),
            Stage::S2 => write!(f, "S2"),
            Stage::S3 => write!(f, "S3"),
        }
    }
}

/// Frame allocation of the process loop, written `n1-n2-n3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StageConfig {
    n1: u32,
    n2: u32,
    n3: u32,
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("stage cycle needs n1 >= 1 (got {0}-{1}-{2})")]
    NoStageOne(u32, u32, u32),
    #[error("malformed stage config {0:?}, expected like 1-3-5")]
    Malformed(String),
}

impl StageConfig {
    pub fn new(n1: u32, n2: u32, n3: u32) -> Result<Self, ConfigError> {
        if n1 == 0 {
            return Err(ConfigError::NoStageOne(n1, n2, n3));
        }
        Ok(Self { n1, n2, n3 })
    }

    pub fn n1(&self) -> u32 {
        self.n1
    }

    pub fn n2(&self) -> u32 {
        self.n2
    }

    pub fn n3(&self) -> u32 {
        self.n3
    }

    pub fn cycle_len(&self) -> u32 {
        self.n1 + self.n2 + self.n3
    }

    /// The stage the cycle assigns to absolute frame index `k`.
    pub fn stage_for_frame(&self, k: usize) -> Stage {
        let p = (k as u64 % self.cycle_len() as u64) as u32;
        if p < self.n1 {
            Stage::S1
        } else if p < self.n1 + self.n2 {
            Stage::S2
        } else {
            Stage::S3
        }
    }
}

impl fmt::Display for StageConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}-{}", self.n1, self.n2, self.n3)
    }
}

impl FromStr for StageConfig {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.trim().split('-').collect();
        if parts.len() != 3 {
            return Err(ConfigError::Malformed(s.to_string()));
        }
        let nums: Result<Vec<u32>, _> = parts.iter().map(|p| p.trim().parse()).collect();
        match nums {
            Ok(v) => StageConfig::new(v[0], v[1], v[2]),
            Err(_) => Err(ConfigError::Malformed(s.to_string())),
        }
    }
}

/// Per-frame output of one scheduler step.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameResult {
    pub frame_index: usize,
    pub stage: Stage,
    /// Detections in global frame coordinates.
    pub detections: Vec<Detection>,
    /// Modeled seconds spent on this frame.
    pub model_time: f64,
    /// Modeled joules spent on this frame.
    pub model_energy: f64,
    /// Tiles processed; empty unless this was an S2 frame.
    pub tiles_used: Vec<Tile>,
    /// Tracker-vs-detector agreement (mean best IoU) on detection frames,
    /// present only when verification is enabled and prior state existed.
    pub agreement: Option<f64>,
}

/// State carried across frames.
#[derive(Debug, Clone, Default)]
pub struct PipelineState {
    pub last_detections: Vec<Detection>,
    pub track: TrackState,
    pub frame_index: usize,
    /// Per-frame modeled (seconds, joules), one entry per processed frame.
    pub cost_ledger: Vec<(f64, f64)>,
}

impl PipelineState {
    pub fn new() -> Self {
        Self::default()
    }
}

/// Failure to deliver a frame from a lazy source (disk error, mid-sequence
/// dimension change).
#[derive(Debug, Error, PartialEq, Eq)]
#[error("frame source failed at frame {index}: {message}")]
pub struct SourceError {
    pub index: usize,
    pub message: String,
}

/// A sequence of frames with ground truth, delivered lazily.
pub trait FrameSource {
    fn dims(&self) -> FrameDims;
    fn len(&self) -> usize;
    fn frame(&self, t: usize) -> Result<Frame, SourceError>;
    fn ground_truth(&self, t: usize) -> Vec<BoundingBox>;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Run-wide knobs beyond the stage cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    /// IoU threshold for counting a detection as a true positive.
    pub iou_threshold: f64,
    /// Seconds per frame for energy-to-power conversion.
    pub frame_period: f64,
    pub tracker: TrackerParams,
    /// Modeled seconds per tracked (S3) frame.
    pub tracker_cost: f64,
    /// Also advance the tracker on detection frames and log its agreement
    /// with the fresh detections. Diagnostic only: it never gates results
    /// and adds no modeled cost.
    pub track_agreement: bool,
    /// Echoed into reports; not used by the engine.
    pub seed: Option<u64>,
    /// Echoed into reports; not used by the engine.
    pub mode: Option<String>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            iou_threshold: DEFAULT_MATCH_IOU,
            frame_period: DEFAULT_FRAME_PERIOD,
            tracker: TrackerParams::default(),
            tracker_cost: 0.001,
            track_agreement: false,
            seed: None,
            mode: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("sequence has no frames")]
    EmptySequence,
    #[error("tracker cost {tracker_cost} exceeds cheapest tile latency {min_tile_latency}; stage 3 must not cost more than detection")]
    TrackerCostTooHigh { tracker_cost: f64, min_tile_latency: f64 },
    #[error(transparent)]
    Detector(#[from] DetectorError),
    #[error(transparent)]
    Pool(#[from] PoolError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Source(#[from] SourceError),
}

/// One frame plus its ground-truth matching tallies.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameRecord {
    pub result: FrameResult,
    pub matched: MatchResult,
}

/// Configuration echo carried into reports.
#[derive(Debug, Clone, PartialEq)]
pub struct RunMeta {
    pub stages: StageConfig,
    pub platform: String,
    pub iou_threshold: f64,
    pub frame_period: f64,
    pub seed: Option<u64>,
    pub mode: Option<String>,
    pub dims: FrameDims,
    pub n_frames: usize,
}

/// Aggregated outcome of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub frames: Vec<FrameRecord>,
    /// Sensitivity; absent when the sequence carries no ground truth.
    pub sen: Option<f64>,
    /// Average modeled processing time, seconds per frame.
    pub apt: f64,
    /// Average modeled power consumption, watts.
    pub apc: f64,
    /// Frames executed per stage (S1, S2, S3).
    pub stage_histogram: (usize, usize, usize),
    /// Mean tracker/detector agreement over frames where it was measured.
    pub mean_agreement: Option<f64>,
    pub meta: RunMeta,
}

impl RunReport {
    pub fn results(&self) -> Vec<&FrameResult> {
        self.frames.iter().map(|f| &f.result).collect()
    }
}

/// Mean over tracked boxes of the best IoU against any fresh detection.
fn agreement_score(tracked: &[Detection], detected: &[Detection]) -> Option<f64> {
    if tracked.is_empty() || detected.is_empty() {
        return None;
    }
    let total: f64 = tracked
        .iter()
        .map(|t| {
            detected
                .iter()
                .map(|d| crate::geom::iou(&t.box_, &d.box_))
                .fold(0.0, f64::max)
        })
        .sum();
    Some(total / tracked.len() as f64)
}

/// On detection frames with verification enabled, advance a copy of the
/// tracker into the current frame so its prediction can be compared with
/// what the detector actually found.
fn verification_boxes(
    state: &PipelineState,
    frame: &Frame,
    opts: &RunOptions,
) -> Option<Vec<Detection>> {
    if !opts.track_agreement || state.track.is_empty() {
        return None;
    }
    track_objects(state.track.clone(), &frame.image, &opts.tracker)
        .ok()
        .map(|advanced| advanced.detections())
}

/// Process one frame: pick the stage, run it, update state, account cost.
pub fn step(
    state: &mut PipelineState,
    frame: &Frame,
    detector: &dyn Detector,
    pool: &CnnPool,
    cfg: &StageConfig,
    platform: &PlatformProfile,
    opts: &RunOptions,
) -> Result<FrameResult, PipelineError> {
    let dims = FrameDims::new(frame.image.width() as u32, frame.image.height() as u32);
    // Empty-state override: with nothing to tile or track, only a
    // full-frame pass can make progress.
    let stage = if state.last_detections.is_empty() {
        Stage::S1
    } else {
        cfg.stage_for_frame(state.frame_index)
    };

    let result = match stage {
        Stage::S1 => {
            let tracked = verification_boxes(state, frame, opts);
            let region = Tile::full_frame(dims);
            let detections = run_detector(detector, frame, &region, pool.stage1())?;
            let agreement =
                tracked.and_then(|t| agreement_score(&t, &detections));
            state.track = TrackState::from_detections(&detections, &frame.image, &opts.tracker)?;
            state.last_detections = detections.clone();
            FrameResult {
                frame_index: frame.index,
                stage: Stage::S1,
                detections,
                model_time: pool.stage1().latency,
                model_energy: pool.stage1().energy_for(&platform.id)?,
                tiles_used: Vec::new(),
                agreement,
            }
        }
        Stage::S2 => {
            let tracked = verification_boxes(state, frame, opts);
            let boxes: Vec<BoundingBox> =
                state.last_detections.iter().map(|d| d.box_).collect();
            let plan = select_tiles(&boxes, pool, dims);
            let mut per_tile = Vec::with_capacity(plan.tiles.len());
            let mut energy = 0.0;
            for tile in &plan.tiles {
                let profile = pool.profile_for(tile)?;
                per_tile.push(run_detector(detector, frame, tile, profile)?);
                energy += profile.energy_for(&platform.id)?;
            }
            let detections = merge_tile_detections(per_tile);
            let agreement =
                tracked.and_then(|t| agreement_score(&t, &detections));
            state.track = TrackState::from_detections(&detections, &frame.image, &opts.tracker)?;
            state.last_detections = detections.clone();
            FrameResult {
                frame_index: frame.index,
                stage: Stage::S2,
                detections,
                model_time: plan.total_latency,
                model_energy: energy,
                tiles_used: plan.tiles,
                agreement,
            }
        }
        Stage::S3 => {
            state.track =
                track_objects(std::mem::take(&mut state.track), &frame.image, &opts.tracker)?;
            let detections = state.track.detections();
            state.last_detections = detections.clone();
            FrameResult {
                frame_index: frame.index,
                stage: Stage::S3,
                detections,
                model_time: opts.tracker_cost,
                model_energy: platform.tracker_energy,
                tiles_used: Vec::new(),
                agreement: None,
            }
        }
    };
    state.cost_ledger.push((result.model_time, result.model_energy));
    state.frame_index += 1;
    Ok(result)
}

/// Fold [`step`] over a whole sequence and aggregate run metrics.
pub fn run(
    source: &dyn FrameSource,
    detector: &dyn Detector,
    pool: &CnnPool,
    cfg: &StageConfig,
    platform: &PlatformProfile,
    opts: &RunOptions,
) -> Result<RunReport, PipelineError> {
    if source.is_empty() {
        return Err(PipelineError::EmptySequence);
    }
    pool.validate_platform(platform)?;
    if opts.tracker_cost > pool.min_tile_latency() {
        return Err(PipelineError::TrackerCostTooHigh {
            tracker_cost: opts.tracker_cost,
            min_tile_latency: pool.min_tile_latency(),
        });
    }

    let mut state = PipelineState::new();
    let mut frames = Vec::with_capacity(source.len());
    let mut hist = (0usize, 0usize, 0usize);
    for t in 0..source.len() {
        let frame = source.frame(t)?;
        let result = step(&mut state, &frame, detector, pool, cfg, platform, opts)?;
        match result.stage {
            Stage::S1 => hist.0 += 1,
            Stage::S2 => hist.1 += 1,
            Stage::S3 => hist.2 += 1,
        }
        let matched = match_frame(&result.detections, &source.ground_truth(t), opts.iou_threshold);
        frames.push(FrameRecord { result, matched });
    }

    let results: Vec<FrameResult> = frames.iter().map(|f| f.result.clone()).collect();
    let matches: Vec<MatchResult> = frames.iter().map(|f| f.matched).collect();
    let sen = match sensitivity(&matches) {
        Ok(v) => Some(v),
        Err(MetricsError::NoGroundTruth) => None,
        Err(e) => return Err(e.into()),
    };
    let agreements: Vec<f64> = results.iter().filter_map(|r| r.agreement).collect();
    let mean_agreement = (!agreements.is_empty())
        .then(|| agreements.iter().sum::<f64>() / agreements.len() as f64);
    Ok(RunReport {
        sen,
        apt: apt(&results)?,
        apc: apc(&results, platform, opts.frame_period)?,
        stage_histogram: hist,
        mean_agreement,
        meta: RunMeta {
            stages: *cfg,
            platform: platform.id.clone(),
            iou_threshold: opts.iou_threshold,
            frame_period: opts.frame_period,
            seed: opts.seed,
            mode: opts.mode.clone(),
            dims: source.dims(),
            n_frames: source.len(),
        },
        frames,
    })
}
