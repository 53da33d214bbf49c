//! Registry of per-input-size detector profiles and the pluggable detector
//! contract.
//!
//! Each profile models one network variant: its input size, per-inference
//! latency, and per-inference energy on each supported platform. The pool
//! pairs one full-frame stage-1 profile with an ascending ladder of tile
//! profiles whose input size equals the tile size, so a tile is processed
//! at native resolution.
//!
//! Latency and energy are *modeled* from these tables, never measured, so
//! pipeline cost accounting is deterministic and platform-independent.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::geom::{BoundingBox, Detection, FrameDims, Tile};
use crate::gray::Frame;
use crate::metrics::PlatformProfile;

/// Whether a profile processes the resized full frame or a native tile.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileRole {
    Stage1Full,
    Tile,
}

/// One detector variant: name, input size, modeled cost.
#[derive(Debug, Clone, PartialEq)]
pub struct CnnProfile {
    pub name: String,
    pub input_size: u32,
    /// Seconds per inference.
    pub latency: f64,
    /// Joules per inference, keyed by platform id.
    pub energy: BTreeMap<String, f64>,
    pub role: ProfileRole,
}

impl CnnProfile {
    pub fn new(name: &str, input_size: u32, latency: f64, role: ProfileRole) -> Self {
        assert!(input_size > 0 && latency > 0.0);
        Self { name: name.to_string(), input_size, latency, energy: BTreeMap::new(), role }
    }

    pub fn with_energy(mut self, platform: &str, joules: f64) -> Self {
        assert!(joules >= 0.0);
        self.energy.insert(platform.to_string(), joules);
        self
    }

    pub fn energy_for(&self, platform: &str) -> Result<f64, PoolError> {
        self.energy.get(platform).copied().ok_or_else(|| PoolError::MissingEnergy {
            profile: self.name.clone(),
            platform: platform.to_string(),
        })
    }
}

/// The profile pool: one stage-1 full-frame profile plus tile profiles
/// with strictly increasing input sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct CnnPool {
    stage1: CnnProfile,
    tiles: Vec<CnnProfile>,
}

#[derive(Debug, Error, PartialEq)]
pub enum PoolError {
    #[error("no tile profile registered for size {0}")]
    UnknownTileSize(u32),
    #[error("tile profile sizes must be strictly increasing (got {prev} then {next})")]
    NonIncreasingSizes { prev: u32, next: u32 },
    #[error("pool needs at least one tile profile")]
    NoTileProfiles,
    #[error("profile {0} has role {1:?}, expected the opposite")]
    WrongRole(String, ProfileRole),
    #[error("profile {profile} has no energy entry for platform {platform}")]
    MissingEnergy { profile: String, platform: String },
}

#[derive(Debug, Error)]
pub enum DetectorError {
    #[error("detector backend failure: {0}")]
    Backend(String),
}

impl CnnPool {
    pub fn new(stage1: CnnProfile, tiles: Vec<CnnProfile>) -> Result<Self, PoolError> {
        if stage1.role != ProfileRole::Stage1Full {
            return Err(PoolError::WrongRole(stage1.name, stage1.role));
        }
        if tiles.is_empty() {
            return Err(PoolError::NoTileProfiles);
        }
        for pair in tiles.windows(2) {
            if pair[1].input_size <= pair[0].input_size {
                return Err(PoolError::NonIncreasingSizes {
                    prev: pair[0].input_size,
                    next: pair[1].input_size,
                });
            }
        }
        if let Some(bad) = tiles.iter().find(|p| p.role != ProfileRole::Tile) {
            return Err(PoolError::WrongRole(bad.name.clone(), bad.role));
        }
        Ok(Self { stage1, tiles })
    }

    pub fn stage1(&self) -> &CnnProfile {
        &self.stage1
    }

    pub fn tile_profiles(&self) -> &[CnnProfile] {
        &self.tiles
    }

    /// Tile sizes in ascending order.
    pub fn tile_sizes(&self) -> Vec<u32> {
        self.tiles.iter().map(|p| p.input_size).collect()
    }

    pub fn min_tile_latency(&self) -> f64 {
        self.tiles.iter().map(|p| p.latency).fold(f64::INFINITY, f64::min)
    }

    /// The tile profile matching a tile size exactly.
    pub fn lookup(&self, tile_size: u32) -> Result<&CnnProfile, PoolError> {
        self.tiles
            .iter()
            .find(|p| p.input_size == tile_size)
            .ok_or(PoolError::UnknownTileSize(tile_size))
    }

    /// Profile charged for a tile: full-frame tiles bill the stage-1
    /// profile, square tiles their size-matched pool entry.
    pub fn profile_for(&self, tile: &Tile) -> Result<&CnnProfile, PoolError> {
        if tile.is_full_frame() {
            Ok(&self.stage1)
        } else {
            self.lookup(tile.size)
        }
    }

    /// True when every profile (and the given tracker energy) has an
    /// energy entry for the platform.
    pub fn validate_platform(&self, platform: &PlatformProfile) -> Result<(), PoolError> {
        self.stage1.energy_for(&platform.id)?;
        for p in &self.tiles {
            p.energy_for(&platform.id)?;
        }
        Ok(())
    }
}

/// Built-in profile pool: a 512-input full-frame detector plus tile
/// detectors at 512/416/352/256/128, with default per-platform energies
/// derived as latency times the platform's modeled active power.
pub fn default_pool() -> CnnPool {
    let platforms = PlatformProfile::builtins();
    let energize = |mut p: CnnProfile| {
        for plat in &platforms {
            let joules = p.latency * plat.active_power;
            p = p.with_energy(&plat.id, joules);
        }
        p
    };
    let stage1 = energize(CnnProfile::new("fullframe-512", 512, 0.08, ProfileRole::Stage1Full));
    let tiles = vec![
        energize(CnnProfile::new("tile-128", 128, 0.002, ProfileRole::Tile)),
        energize(CnnProfile::new("tile-256", 256, 0.008, ProfileRole::Tile)),
        energize(CnnProfile::new("tile-352", 352, 0.014, ProfileRole::Tile)),
        energize(CnnProfile::new("tile-416", 416, 0.02, ProfileRole::Tile)),
        energize(CnnProfile::new("tile-512", 512, 0.03, ProfileRole::Tile)),
    ];
    CnnPool::new(stage1, tiles).expect("built-in pool is valid")
}

/// The pluggable detection backend.
///
/// Implementations return detections in *region-local* coordinates and
/// must be deterministic given (region, profile, seed). They never emit
/// boxes outside the region.
pub trait Detector {
    fn detect(
        &self,
        frame: &Frame,
        region: &Tile,
        profile: &CnnProfile,
    ) -> Result<Vec<Detection>, DetectorError>;
}

/// Run a detector over one region and translate its region-local results
/// into global frame coordinates, clamped into the region's in-frame
/// bounds. The modeled cost of this call is `profile.latency`; the caller
/// accounts it.
pub fn run_detector(
    detector: &dyn Detector,
    frame: &Frame,
    region: &Tile,
    profile: &CnnProfile,
) -> Result<Vec<Detection>, DetectorError> {
    let dims = FrameDims::new(frame.image.width() as u32, frame.image.height() as u32);
    let local = detector.detect(frame, region, profile)?;
    Ok(local
        .into_iter()
        .map(|d| {
            let global = BoundingBox {
                x: d.box_.x + region.x,
                y: d.box_.y + region.y,
                ..d.box_
            };
            Detection { box_: clamp_box_into_region(global, region, dims), ..d }
        })
        .collect())
}

/// Clamp a global-coordinate box into the intersection of the region and
/// the frame, preserving size where possible.
fn clamp_box_into_region(b: BoundingBox, region: &Tile, dims: FrameDims) -> BoundingBox {
    let rx0 = region.x.max(0);
    let ry0 = region.y.max(0);
    let rx1 = region.right().min(dims.width as i64) as i32;
    let ry1 = region.bottom().min(dims.height as i64) as i32;
    let w = b.w.min((rx1 - rx0) as u32);
    let h = b.h.min((ry1 - ry0) as u32);
    BoundingBox {
        x: b.x.clamp(rx0, rx1 - w as i32),
        y: b.y.clamp(ry0, ry1 - h as i32),
        w,
        h,
        object_id: b.object_id,
    }
}

// clamp_tile is re-exported here for callers that think in pool terms.
pub use crate::geom::clamp_tile as clamp_region;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{contains, DetectionSource, TileAnchor};
    use crate::gray::GrayImage;

    #[test]
    fn default_pool_matches_profile_table() {
        let pool = default_pool();
        assert_eq!(pool.stage1().input_size, 512);
        assert_eq!(pool.stage1().latency, 0.08);
        let expect = [(128, 0.002), (256, 0.008), (352, 0.014), (416, 0.02), (512, 0.03)];
        for (size, latency) in expect {
            assert_eq!(pool.lookup(size).unwrap().latency, latency, "size {size}");
        }
    }

    #[test]
    fn lookup_rejects_unregistered_size() {
        let pool = default_pool();
        assert_eq!(pool.lookup(100).unwrap_err(), PoolError::UnknownTileSize(100));
    }

    #[test]
    fn pool_requires_increasing_sizes() {
        let s1 = CnnProfile::new("s1", 512, 0.08, ProfileRole::Stage1Full);
        let tiles = vec![
            CnnProfile::new("a", 256, 0.008, ProfileRole::Tile),
            CnnProfile::new("b", 128, 0.002, ProfileRole::Tile),
        ];
        assert!(matches!(
            CnnPool::new(s1, tiles),
            Err(PoolError::NonIncreasingSizes { prev: 256, next: 128 })
        ));
    }

    #[test]
    fn modeled_cost_is_additive_over_tiles() {
        let pool = default_pool();
        let four_small = 4.0 * pool.lookup(128).unwrap().latency;
        assert_eq!(four_small, 0.008);
        let sum = pool.lookup(128).unwrap().latency
            + pool.lookup(128).unwrap().latency
            + pool.lookup(128).unwrap().latency
            + pool.lookup(128).unwrap().latency;
        assert_eq!(sum, 0.008);
    }

    struct FixedDetector {
        local: Vec<Detection>,
    }

    impl Detector for FixedDetector {
        fn detect(
            &self,
            _frame: &Frame,
            _region: &Tile,
            _profile: &CnnProfile,
        ) -> Result<Vec<Detection>, DetectorError> {
            Ok(self.local.clone())
        }
    }

    fn test_frame() -> Frame {
        Frame { index: 0, image: GrayImage::new(1024, 768) }
    }

    #[test]
    fn run_detector_translates_to_global_coordinates() {
        let det = FixedDetector {
            local: vec![Detection::new(
                BoundingBox::new(5, 5, 10, 10),
                0.9,
                DetectionSource::Stage2Tile,
            )],
        };
        let region = Tile::new(100, 200, 128, TileAnchor::TopLeft);
        let profile = default_pool().lookup(128).unwrap().clone();
        let out = run_detector(&det, &test_frame(), &region, &profile).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!((out[0].box_.x, out[0].box_.y), (105, 205));
    }

    #[test]
    fn run_detector_empty_region_content() {
        let det = FixedDetector { local: vec![] };
        let region = Tile::new(0, 0, 128, TileAnchor::TopLeft);
        let profile = default_pool().lookup(128).unwrap().clone();
        assert!(run_detector(&det, &test_frame(), &region, &profile).unwrap().is_empty());
    }

    #[test]
    fn run_detector_clamps_into_region_bounds() {
        // backend misbehaves: box pokes past the region edge
        let det = FixedDetector {
            local: vec![Detection::new(
                BoundingBox::new(120, 120, 20, 20),
                0.5,
                DetectionSource::Stage2Tile,
            )],
        };
        let region = Tile::new(100, 200, 128, TileAnchor::TopLeft);
        let profile = default_pool().lookup(128).unwrap().clone();
        let out = run_detector(&det, &test_frame(), &region, &profile).unwrap();
        assert!(contains(&region, &out[0].box_));
    }

    #[test]
    fn missing_platform_energy_is_reported() {
        let pool = CnnPool::new(
            CnnProfile::new("s1", 512, 0.08, ProfileRole::Stage1Full),
            vec![CnnProfile::new("t", 128, 0.002, ProfileRole::Tile)],
        )
        .unwrap();
        let platform = PlatformProfile::builtins().into_iter().next().unwrap();
        assert!(matches!(
            pool.validate_platform(&platform),
            Err(PoolError::MissingEnergy { .. })
        ));
    }
}
