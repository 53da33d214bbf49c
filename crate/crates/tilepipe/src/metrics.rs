//! Run-level evaluation: sensitivity, average processing time, and average
//! power consumption, plus the IoU-based matching that feeds them.

use thiserror::Error;

use crate::geom::{iou, BoundingBox, Detection};
use crate::pipeline::FrameResult;

/// Default IoU threshold for counting a prediction as a true positive.
pub const DEFAULT_MATCH_IOU: f64 = 0.5;

/// Default frame period (seconds) for converting per-frame energy to power.
pub const DEFAULT_FRAME_PERIOD: f64 = 1.0 / 30.0;

/// Per-frame matching tallies.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MatchResult {
    pub tp: u32,
    pub fn_: u32,
    pub fp: u32,
}

impl MatchResult {
    pub fn ground_truth_count(&self) -> u32 {
        self.tp + self.fn_
    }
}

/// Power and energy characteristics of one execution platform.
///
/// `active_power` is the modeled average draw while a detector executes;
/// it is only used to derive the default per-inference energies in the
/// built-in pool. All values are placeholders calibrated to preserve
/// cross-platform orderings, not measured watts.
#[derive(Debug, Clone, PartialEq)]
pub struct PlatformProfile {
    pub id: String,
    /// Watts drawn with no work scheduled.
    pub idle_power: f64,
    /// Joules per tracked frame.
    pub tracker_energy: f64,
    /// Watts drawn while inference runs (for default energy derivation).
    pub active_power: f64,
}

impl PlatformProfile {
    pub fn new(id: &str, idle_power: f64, tracker_energy: f64, active_power: f64) -> Self {
        assert!(idle_power >= 0.0 && tracker_energy >= 0.0 && active_power >= 0.0);
        Self { id: id.to_string(), idle_power, tracker_energy, active_power }
    }

    /// The built-in platform set: a laptop-class CPU and two embedded
    /// ARM boards.
    pub fn builtins() -> Vec<PlatformProfile> {
        vec![
            PlatformProfile::new("cpu", 6.0, 0.012, 12.0),
            PlatformProfile::new("odroid", 1.5, 0.0035, 3.5),
            PlatformProfile::new("rpi3", 1.2, 0.0028, 2.8),
        ]
    }

    pub fn builtin(id: &str) -> Option<PlatformProfile> {
        Self::builtins().into_iter().find(|p| p.id == id)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("no ground-truth objects in any frame")]
    NoGroundTruth,
    #[error("metric requires at least one frame result")]
    EmptyRun,
}

/// Greedy one-to-one matching of predictions against ground truth.
///
/// Predictions are visited in descending score order (ties keep input
/// order); each takes the unmatched ground-truth box with the highest IoU,
/// provided that IoU reaches the threshold. IoU ties between ground-truth
/// boxes are broken by box coordinates so the result does not depend on
/// ground-truth ordering.
pub fn match_frame(pred: &[Detection], gt: &[BoundingBox], iou_thresh: f64) -> MatchResult {
    assert!(iou_thresh > 0.0 && iou_thresh < 1.0, "IoU threshold must be in (0,1)");
    let mut order: Vec<usize> = (0..pred.len()).collect();
    order.sort_by(|&a, &b| pred[b].score.total_cmp(&pred[a].score));

    let mut taken = vec![false; gt.len()];
    let mut tp = 0u32;
    for &pi in &order {
        let mut best: Option<(f64, usize)> = None;
        for (gi, g) in gt.iter().enumerate() {
            if taken[gi] {
                continue;
            }
            let v = iou(&pred[pi].box_, g);
            if v < iou_thresh {
                continue;
            }
            let better = match best {
                None => true,
                Some((bv, bgi)) => {
                    v > bv || (v == bv && gt_key(g) < gt_key(&gt[bgi]))
                }
            };
            if better {
                best = Some((v, gi));
            }
        }
        if let Some((_, gi)) = best {
            taken[gi] = true;
            tp += 1;
        }
    }
    MatchResult { tp, fn_: gt.len() as u32 - tp, fp: pred.len() as u32 - tp }
}

fn gt_key(g: &BoundingBox) -> (i32, i32, u32, u32, Option<u64>) {
    (g.y, g.x, g.w, g.h, g.object_id)
}

/// Sensitivity over a run: total true positives over total ground truth.
pub fn sensitivity(ms: &[MatchResult]) -> Result<f64, MetricsError> {
    let tp: u64 = ms.iter().map(|m| m.tp as u64).sum();
    let total: u64 = ms.iter().map(|m| m.ground_truth_count() as u64).sum();
    if total == 0 {
        return Err(MetricsError::NoGroundTruth);
    }
    Ok(tp as f64 / total as f64)
}

/// Average processing time: mean modeled latency per frame.
pub fn apt(results: &[FrameResult]) -> Result<f64, MetricsError> {
    if results.is_empty() {
        return Err(MetricsError::EmptyRun);
    }
    Ok(results.iter().map(|r| r.model_time).sum::<f64>() / results.len() as f64)
}

/// Average power consumption: mean over frames of
/// `idle + energy / frame_period`, in watts.
pub fn apc(
    results: &[FrameResult],
    platform: &PlatformProfile,
    frame_period: f64,
) -> Result<f64, MetricsError> {
    if results.is_empty() {
        return Err(MetricsError::EmptyRun);
    }
    assert!(frame_period > 0.0, "frame period must be positive");
    let sum: f64 = results
        .iter()
        .map(|r| platform.idle_power + r.model_energy / frame_period)
        .sum();
    Ok(sum / results.len() as f64)
}
