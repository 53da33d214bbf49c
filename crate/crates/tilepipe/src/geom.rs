//! Geometry primitives shared by every pipeline stage: axis-aligned boxes,
//! square tiles, frame dimensions, and detection records.
//!
//! Coordinates are integer pixels. Boxes and tiles may sit at negative
//! coordinates transiently (e.g. a tile anchored past the frame border
//! before clamping) but every value that crosses a module boundary is
//! expected to lie inside the frame.

use thiserror::Error;

/// Frame width and height in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameDims {
    pub width: u32,
    pub height: u32,
}

impl FrameDims {
    pub fn new(width: u32, height: u32) -> Self {
        Self { width, height }
    }

    /// Side of the square that circumscribes the frame; this is the region
    /// extent a full-frame resize is judged against.
    pub fn long_side(&self) -> u32 {
        self.width.max(self.height)
    }

    pub fn short_side(&self) -> u32 {
        self.width.min(self.height)
    }
}

/// Axis-aligned rectangle in frame pixel coordinates, `(x, y)` top-left.
///
/// Width and height are strictly positive. `object_id` carries an optional
/// identity label (ground-truth id, track id) through the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundingBox {
    pub x: i32,
    pub y: i32,
    pub w: u32,
    pub h: u32,
    pub object_id: Option<u64>,
}

impl BoundingBox {
    pub fn new(x: i32, y: i32, w: u32, h: u32) -> Self {
        assert!(w > 0 && h > 0, "bounding box sides must be positive");
        Self { x, y, w, h, object_id: None }
    }

    pub fn with_id(x: i32, y: i32, w: u32, h: u32, id: u64) -> Self {
        Self { object_id: Some(id), ..Self::new(x, y, w, h) }
    }

    pub fn right(&self) -> i64 {
        self.x as i64 + self.w as i64
    }

    pub fn bottom(&self) -> i64 {
        self.y as i64 + self.h as i64
    }

    pub fn area(&self) -> u64 {
        self.w as u64 * self.h as u64
    }

    /// Box center in sub-pixel coordinates.
    pub fn center(&self) -> (f64, f64) {
        (self.x as f64 + self.w as f64 / 2.0, self.y as f64 + self.h as f64 / 2.0)
    }

    /// The larger of the two sides; drives tile-size filtering and the
    /// oracle's apparent-size law.
    pub fn long_side(&self) -> u32 {
        self.w.max(self.h)
    }

    /// True when the box lies fully inside the frame.
    pub fn in_frame(&self, dims: FrameDims) -> bool {
        self.x >= 0
            && self.y >= 0
            && self.right() <= dims.width as i64
            && self.bottom() <= dims.height as i64
    }

    /// Translate so the box lies inside the frame, preserving size.
    /// Panics if the box is larger than the frame.
    pub fn clamp_into(&self, dims: FrameDims) -> Self {
        assert!(self.w <= dims.width && self.h <= dims.height, "box larger than frame");
        Self {
            x: self.x.clamp(0, (dims.width - self.w) as i32),
            y: self.y.clamp(0, (dims.height - self.h) as i32),
            ..*self
        }
    }
}

/// Which object corner a candidate tile was anchored on, or the whole
/// frame for the stage-1 fallback region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum TileAnchor {
    TopLeft,
    TopRight,
    BottomLeft,
    BottomRight,
    FullFrame,
}

/// Square sub-region of the frame processed by a size-matched detector
/// profile. A `FullFrame` tile stands for the whole frame resized through
/// the stage-1 profile; its `size` is the frame's long side so that
/// apparent-resolution math stays uniform.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Tile {
    pub x: i32,
    pub y: i32,
    pub size: u32,
    pub anchor: TileAnchor,
}

impl Tile {
    pub fn new(x: i32, y: i32, size: u32, anchor: TileAnchor) -> Self {
        assert!(size > 0, "tile size must be positive");
        Self { x, y, size, anchor }
    }

    /// The pseudo-tile denoting the entire frame.
    pub fn full_frame(dims: FrameDims) -> Self {
        Self { x: 0, y: 0, size: dims.long_side(), anchor: TileAnchor::FullFrame }
    }

    pub fn is_full_frame(&self) -> bool {
        self.anchor == TileAnchor::FullFrame
    }

    pub fn right(&self) -> i64 {
        self.x as i64 + self.size as i64
    }

    pub fn bottom(&self) -> i64 {
        self.y as i64 + self.size as i64
    }

    /// Key that ignores the anchor, for deduplicating clamp collisions.
    pub fn geometry(&self) -> (i32, i32, u32) {
        (self.x, self.y, self.size)
    }
}

/// Pipeline stage a detection came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectionSource {
    Stage1,
    Stage2Tile,
    Stage3Track,
}

/// One detected object: box in global frame coordinates plus a confidence
/// score in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub box_: BoundingBox,
    pub score: f64,
    pub source: DetectionSource,
}

impl Detection {
    pub fn new(box_: BoundingBox, score: f64, source: DetectionSource) -> Self {
        assert!((0.0..=1.0).contains(&score), "detection score must be in [0,1]");
        Self { box_, score, source }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GeomError {
    #[error("tile of size {size} does not fit in {width}x{height} frame")]
    TileLargerThanFrame { size: u32, width: u32, height: u32 },
}

/// Intersection-over-union of two boxes. Total: disjoint boxes give 0,
/// identical boxes give 1.
pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let ix = (a.right().min(b.right()) - (a.x.max(b.x)) as i64).max(0) as u64;
    let iy = (a.bottom().min(b.bottom()) - (a.y.max(b.y)) as i64).max(0) as u64;
    let inter = ix * iy;
    if inter == 0 {
        return 0.0;
    }
    let union = a.area() + b.area() - inter;
    inter as f64 / union as f64
}

/// Coverage predicate: the box lies entirely inside the tile, edges
/// inclusive. Full-frame tiles cover every in-frame box by construction.
pub fn contains(t: &Tile, b: &BoundingBox) -> bool {
    t.x <= b.x && t.y <= b.y && b.right() <= t.right() && b.bottom() <= t.bottom()
}

/// Translate a tile (never resize it) so it lies fully inside the frame.
///
/// Full-frame tiles pass through unchanged; they are anchored at the
/// origin and denote the whole frame. Errors when a square tile exceeds
/// either frame dimension.
pub fn clamp_tile(t: &Tile, dims: FrameDims) -> Result<Tile, GeomError> {
    if t.is_full_frame() {
        return Ok(*t);
    }
    if t.size > dims.width || t.size > dims.height {
        return Err(GeomError::TileLargerThanFrame {
            size: t.size,
            width: dims.width,
            height: dims.height,
        });
    }
    Ok(Tile {
        x: t.x.clamp(0, (dims.width - t.size) as i32),
        y: t.y.clamp(0, (dims.height - t.size) as i32),
        ..*t
    })
}
