//! Plain-text ground-truth annotations: one record per line,
//! `frame_index object_id x y w h`, whitespace-separated, `#` comments.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::geom::{BoundingBox, FrameDims};

/// One annotation line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AnnotationRecord {
    pub frame: usize,
    pub object_id: u64,
    pub box_: BoundingBox,
}

/// Ground-truth boxes keyed by frame index.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GtTable {
    by_frame: BTreeMap<usize, Vec<BoundingBox>>,
}

impl GtTable {
    pub fn boxes_at(&self, frame: usize) -> Vec<BoundingBox> {
        self.by_frame.get(&frame).cloned().unwrap_or_default()
    }

    pub fn last_frame(&self) -> Option<usize> {
        self.by_frame.keys().next_back().copied()
    }

    pub fn records(&self) -> Vec<AnnotationRecord> {
        self.by_frame
            .iter()
            .flat_map(|(&frame, boxes)| {
                boxes.iter().map(move |b| AnnotationRecord {
                    frame,
                    object_id: b.object_id.unwrap_or(0),
                    box_: *b,
                })
            })
            .collect()
    }

    pub fn insert(&mut self, rec: AnnotationRecord) {
        let mut b = rec.box_;
        b.object_id = Some(rec.object_id);
        self.by_frame.entry(rec.frame).or_default().push(b);
    }

    /// Dense per-frame view over `0..n_frames`.
    pub fn per_frame(&self, n_frames: usize) -> Vec<Vec<BoundingBox>> {
        (0..n_frames).map(|t| self.boxes_at(t)).collect()
    }
}

#[derive(Debug, Error)]
pub enum AnnotationError {
    #[error("{path}:{line}: parse error: {reason}")]
    Parse { path: PathBuf, line: usize, reason: String },
    #[error("{path}:{line}: box ({x},{y},{w},{h}) outside {width}x{height} frame")]
    OutOfBounds {
        path: PathBuf,
        line: usize,
        x: i32,
        y: i32,
        w: u32,
        h: u32,
        width: u32,
        height: u32,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Parse annotation text against the sequence dimensions.
pub fn parse_annotations(
    text: &str,
    dims: FrameDims,
    path: &Path,
) -> Result<GtTable, AnnotationError> {
    let perr = |line: usize, reason: &str| AnnotationError::Parse {
        path: path.to_path_buf(),
        line,
        reason: reason.to_string(),
    };
    let mut table = GtTable::default();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        if fields.len() != 6 {
            return Err(perr(line_no, &format!("expected 6 fields, got {}", fields.len())));
        }
        let frame: usize =
            fields[0].parse().map_err(|_| perr(line_no, "bad frame index"))?;
        let object_id: u64 =
            fields[1].parse().map_err(|_| perr(line_no, "bad object id"))?;
        let nums: Result<Vec<i64>, _> = fields[2..6].iter().map(|f| f.parse()).collect();
        let nums = nums.map_err(|_| perr(line_no, "bad box coordinate"))?;
        let (x, y, w, h) = (nums[0], nums[1], nums[2], nums[3]);
        if w <= 0 || h <= 0 {
            return Err(perr(line_no, "box sides must be positive"));
        }
        let b = BoundingBox {
            x: x as i32,
            y: y as i32,
            w: w as u32,
            h: h as u32,
            object_id: Some(object_id),
        };
        if !b.in_frame(dims) {
            return Err(AnnotationError::OutOfBounds {
                path: path.to_path_buf(),
                line: line_no,
                x: b.x,
                y: b.y,
                w: b.w,
                h: b.h,
                width: dims.width,
                height: dims.height,
            });
        }
        table.insert(AnnotationRecord { frame, object_id, box_: b });
    }
    Ok(table)
}

pub fn load_annotations(path: &Path, dims: FrameDims) -> Result<GtTable, AnnotationError> {
    let text = fs::read_to_string(path)
        .map_err(|source| AnnotationError::Io { path: path.to_path_buf(), source })?;
    parse_annotations(&text, dims, path)
}

/// Serialize a table back to the line format; loading the result yields
/// the identical table.
pub fn format_annotations(table: &GtTable) -> String {
    let mut out = String::from("# frame object_id x y w h\n");
    for rec in table.records() {
        writeln!(
            out,
            "{} {} {} {} {} {}",
            rec.frame, rec.object_id, rec.box_.x, rec.box_.y, rec.box_.w, rec.box_.h
        )
        .expect("string write");
    }
    out
}

pub fn save_annotations(table: &GtTable, path: &Path) -> Result<(), AnnotationError> {
    fs::write(path, format_annotations(table))
        .map_err(|source| AnnotationError::Io { path: path.to_path_buf(), source })
}
