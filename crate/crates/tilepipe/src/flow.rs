//! Stage 3: sparse pyramidal Lucas-Kanade optical flow on object box
//! centers between consecutive frames.
//!
//! One point per live object is advanced by solving the 2x2 spatial
//! gradient normal equations coarse-to-fine; the object's box is then
//! rigidly translated to the new center (size preserved). Points whose
//! gradient matrix is near-singular, whose aligned residual stays high,
//! or which drift out of frame are marked lost and dropped from the state.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::geom::{BoundingBox, Detection, DetectionSource, FrameDims};
use crate::gray::GrayImage;

/// Track ids synthesized for detections that carry no object id live in a
/// high range so they cannot collide with ground-truth labels.
const SYNTHETIC_ID_BASE: u64 = 1 << 48;

/// Pyramidal LK tuning. Defaults are the usual sparse-LK choices; all of
/// them are plumbed through the public API.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackerParams {
    /// Square integration window side, pixels (odd).
    pub window: usize,
    /// Pyramid levels; level 0 is the input resolution.
    pub levels: usize,
    /// Newton iterations per level.
    pub max_iters: usize,
    /// Convergence threshold on the per-iteration step, pixels.
    pub epsilon: f64,
    /// Minimum eigenvalue of the normal matrix, normalized by window
    /// pixel count, below which a point is lost.
    pub min_eigenvalue: f64,
    /// Mean absolute post-alignment residual above which a point is lost.
    pub max_residual: f64,
}

impl Default for TrackerParams {
    fn default() -> Self {
        Self {
            window: 15,
            levels: 3,
            max_iters: 10,
            epsilon: 0.01,
            min_eigenvalue: 1e-4,
            max_residual: 0.25,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointStatus {
    Ok,
    Lost,
}

/// A tracked sub-pixel location tied to one object.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackPoint {
    pub x: f64,
    pub y: f64,
    pub object_id: u64,
    pub status: PointStatus,
}

/// Tracker state carried between frames: one point per live object, the
/// last known box (kept center-consistent with the point), and the cached
/// pyramid of the frame the points refer to.
#[derive(Debug, Clone)]
pub struct TrackState {
    points: Vec<TrackPoint>,
    boxes: Vec<BoundingBox>,
    scores: Vec<f64>,
    prev_pyramid: Option<Vec<GrayImage>>,
}

#[derive(Debug, Error, PartialEq)]
pub enum FlowError {
    #[error("image {width}x{height} too small for {levels} pyramid levels with window {window}")]
    ImageTooSmall { width: usize, height: usize, levels: usize, window: usize },
}

const DOWNSAMPLE_KERNEL: [f32; 5] = [1.0 / 16.0, 4.0 / 16.0, 6.0 / 16.0, 4.0 / 16.0, 1.0 / 16.0];

fn downsample(img: &GrayImage) -> GrayImage {
    let (w, h) = (img.width(), img.height());
    let ow = w.div_ceil(2);
    let oh = h.div_ceil(2);
    // horizontal low-pass, subsampled in x
    let mut tmp = vec![0.0f32; ow * h];
    for y in 0..h {
        for ox in 0..ow {
            let cx = 2 * ox as i64;
            let mut acc = 0.0f32;
            for (i, &k) in DOWNSAMPLE_KERNEL.iter().enumerate() {
                acc += k * img.get_clamped(cx + i as i64 - 2, y as i64);
            }
            tmp[y * ow + ox] = acc;
        }
    }
    // vertical low-pass, subsampled in y
    let mut out = GrayImage::new(ow, oh);
    for oy in 0..oh {
        let cy = 2 * oy as i64;
        for ox in 0..ow {
            let mut acc = 0.0f32;
            for (j, &k) in DOWNSAMPLE_KERNEL.iter().enumerate() {
                let yy = (cy + j as i64 - 2).clamp(0, h as i64 - 1) as usize;
                acc += k * tmp[yy * ow + ox];
            }
            out.set(ox, oy, acc);
        }
    }
    out
}

/// Build an image pyramid: level 0 is the input, each further level is a
/// 2x downsample through a 5-tap binomial low-pass filter.
pub fn build_pyramid(img: &GrayImage, levels: usize) -> Result<Vec<GrayImage>, FlowError> {
    build_pyramid_checked(img, levels, TrackerParams::default().window)
}

fn build_pyramid_checked(
    img: &GrayImage,
    levels: usize,
    window: usize,
) -> Result<Vec<GrayImage>, FlowError> {
    assert!(levels >= 1, "pyramid needs at least one level");
    let coarse_w = img.width() >> (levels - 1);
    let coarse_h = img.height() >> (levels - 1);
    if coarse_w < window || coarse_h < window {
        return Err(FlowError::ImageTooSmall {
            width: img.width(),
            height: img.height(),
            levels,
            window,
        });
    }
    let mut pyr = Vec::with_capacity(levels);
    pyr.push(img.clone());
    for _ in 1..levels {
        let next = downsample(pyr.last().unwrap());
        pyr.push(next);
    }
    Ok(pyr)
}

/// One Lucas-Kanade solve: the displacement carrying `point` from the
/// previous frame (pyramid `prev_pyr`) into the current one (`cur_pyr`),
/// or `Lost` when the point is untrackable.
pub fn lk_step(
    prev_pyr: &[GrayImage],
    cur_pyr: &[GrayImage],
    point: &TrackPoint,
    params: &TrackerParams,
) -> ((f64, f64), PointStatus) {
    assert_eq!(prev_pyr.len(), cur_pyr.len(), "pyramid depth mismatch");
    assert!(point.status == PointStatus::Ok, "lk_step requires an OK point");
    let levels = prev_pyr.len();
    let hw = (params.window / 2) as i64;
    let n_pixels = (params.window * params.window) as f64;

    let mut dx = 0.0f64;
    let mut dy = 0.0f64;

    let mut patch = vec![0.0f64; params.window * params.window];
    let mut grad_x = vec![0.0f64; params.window * params.window];
    let mut grad_y = vec![0.0f64; params.window * params.window];

    for lvl in (0..levels).rev() {
        let scale = 1.0 / (1u64 << lvl) as f64;
        let px = point.x * scale;
        let py = point.y * scale;
        if lvl < levels - 1 {
            dx *= 2.0;
            dy *= 2.0;
        }
        let prev = &prev_pyr[lvl];
        let cur = &cur_pyr[lvl];

        // template patch and gradients from the previous frame
        let mut a = 0.0f64;
        let mut b = 0.0f64;
        let mut c = 0.0f64;
        let mut idx = 0usize;
        for wy in -hw..=hw {
            for wx in -hw..=hw {
                let qx = px + wx as f64;
                let qy = py + wy as f64;
                let v = prev.sample_bilinear(qx, qy);
                let gx = (prev.sample_bilinear(qx + 1.0, qy)
                    - prev.sample_bilinear(qx - 1.0, qy))
                    / 2.0;
                let gy = (prev.sample_bilinear(qx, qy + 1.0)
                    - prev.sample_bilinear(qx, qy - 1.0))
                    / 2.0;
                patch[idx] = v;
                grad_x[idx] = gx;
                grad_y[idx] = gy;
                a += gx * gx;
                b += gx * gy;
                c += gy * gy;
                idx += 1;
            }
        }

        let trace = a + c;
        let delta = a - c;
        let lambda_min = (trace - (delta * delta + 4.0 * b * b).sqrt()) / 2.0;
        if lambda_min / n_pixels < params.min_eigenvalue {
            return ((0.0, 0.0), PointStatus::Lost);
        }
        let det = a * c - b * b;
        if det.abs() < 1e-12 {
            return ((0.0, 0.0), PointStatus::Lost);
        }

        for _ in 0..params.max_iters {
            let mut bx = 0.0f64;
            let mut by = 0.0f64;
            let mut idx = 0usize;
            for wy in -hw..=hw {
                for wx in -hw..=hw {
                    let qx = px + wx as f64 + dx;
                    let qy = py + wy as f64 + dy;
                    let diff = patch[idx] - cur.sample_bilinear(qx, qy);
                    bx += grad_x[idx] * diff;
                    by += grad_y[idx] * diff;
                    idx += 1;
                }
            }
            let step_x = (c * bx - b * by) / det;
            let step_y = (a * by - b * bx) / det;
            dx += step_x;
            dy += step_y;
            if step_x * step_x + step_y * step_y < params.epsilon * params.epsilon {
                break;
            }
        }
    }

    // residual and bounds checks at full resolution
    let cur0 = &cur_pyr[0];
    let prev0 = &prev_pyr[0];
    let mut residual = 0.0f64;
    for wy in -hw..=hw {
        for wx in -hw..=hw {
            let template = prev0.sample_bilinear(point.x + wx as f64, point.y + wy as f64);
            let warped = cur0.sample_bilinear(point.x + dx + wx as f64, point.y + dy + wy as f64);
            residual += (template - warped).abs();
        }
    }
    residual /= n_pixels;
    if residual > params.max_residual {
        return ((dx, dy), PointStatus::Lost);
    }

    let nx = point.x + dx;
    let ny = point.y + dy;
    let margin = hw as f64;
    if nx < margin
        || ny < margin
        || nx > (cur0.width() - 1) as f64 - margin
        || ny > (cur0.height() - 1) as f64 - margin
    {
        return ((dx, dy), PointStatus::Lost);
    }

    ((dx, dy), PointStatus::Ok)
}

/// Center points for a detection list. Detections without an object id
/// receive synthetic ids from a range disjoint from ground-truth labels.
pub fn centers_from_boxes(detections: &[Detection]) -> Vec<TrackPoint> {
    detections
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let (cx, cy) = d.box_.center();
            TrackPoint {
                x: cx,
                y: cy,
                object_id: d.box_.object_id.unwrap_or(SYNTHETIC_ID_BASE + i as u64),
                status: PointStatus::Ok,
            }
        })
        .collect()
}

impl TrackState {
    /// Empty state with no cached pyramid.
    pub fn new() -> Self {
        Self { points: Vec::new(), boxes: Vec::new(), scores: Vec::new(), prev_pyramid: None }
    }

    /// Initialize from fresh detections on the given frame: one center
    /// point per detection, pyramid cached for the next tracking step.
    pub fn from_detections(
        detections: &[Detection],
        image: &GrayImage,
        params: &TrackerParams,
    ) -> Result<Self, FlowError> {
        let points = centers_from_boxes(detections);
        let mut seen = BTreeSet::new();
        let mut dedup_points = Vec::new();
        let mut boxes = Vec::new();
        let mut scores = Vec::new();
        for (p, d) in points.into_iter().zip(detections) {
            // one point per live object id
            if seen.insert(p.object_id) {
                dedup_points.push(p);
                boxes.push(d.box_);
                scores.push(d.score);
            }
        }
        let pyramid = build_pyramid_checked(image, params.levels, params.window)?;
        Ok(Self {
            points: dedup_points,
            boxes,
            scores,
            prev_pyramid: Some(pyramid),
        })
    }

    pub fn points(&self) -> &[TrackPoint] {
        &self.points
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn has_pyramid(&self) -> bool {
        self.prev_pyramid.is_some()
    }

    /// Current boxes as stage-3 detections.
    pub fn detections(&self) -> Vec<Detection> {
        self.boxes
            .iter()
            .zip(&self.scores)
            .map(|(b, &s)| Detection::new(*b, s, DetectionSource::Stage3Track))
            .collect()
    }
}

impl Default for TrackState {
    fn default() -> Self {
        Self::new()
    }
}

/// Advance every tracked point into the current frame. Boxes translate
/// rigidly with their center point (size preserved, clamped into frame);
/// lost points drop out of the state. The current frame's pyramid becomes
/// the cache for the next call.
pub fn track_objects(
    state: TrackState,
    cur: &GrayImage,
    params: &TrackerParams,
) -> Result<TrackState, FlowError> {
    let cur_pyr = build_pyramid_checked(cur, params.levels, params.window)?;
    let dims = FrameDims::new(cur.width() as u32, cur.height() as u32);
    let mut next = TrackState::new();
    if let Some(prev_pyr) = &state.prev_pyramid {
        for ((p, b), &score) in state.points.iter().zip(&state.boxes).zip(&state.scores) {
            if p.status != PointStatus::Ok {
                continue;
            }
            let ((dx, dy), status) = lk_step(prev_pyr, &cur_pyr, p, params);
            if status != PointStatus::Ok {
                continue;
            }
            let nx = p.x + dx;
            let ny = p.y + dy;
            // re-derive the box from the sub-pixel center so rounding
            // error does not accumulate
            let moved = BoundingBox {
                x: (nx - b.w as f64 / 2.0).round() as i32,
                y: (ny - b.h as f64 / 2.0).round() as i32,
                ..*b
            }
            .clamp_into(dims);
            next.points.push(TrackPoint { x: nx, y: ny, ..*p });
            next.boxes.push(moved);
            next.scores.push(score);
        }
    }
    next.prev_pyramid = Some(cur_pyr);
    Ok(next)
}
