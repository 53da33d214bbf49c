//! Tile proposal, scoring, selection, and pruning — the stage-2 machinery
//! that decides which image regions are worth a detector invocation.
//!
//! For every known object, candidate tiles are generated by anchoring the
//! object at each of the four tile corners, once per pool size that can
//! contain it. Candidates are scored by effective processing time (EPT):
//! the profile latency divided by the number of objects the tile covers,
//! i.e. seconds per covered object. Each object keeps its minimum-EPT
//! candidate; a greedy pass in ascending EPT order then drops candidates
//! that cover no new object. Objects too large for the biggest tile force
//! a single full-frame fallback plan billed at the stage-1 profile.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::geom::{clamp_tile, contains, iou, BoundingBox, Detection, FrameDims, Tile, TileAnchor};
use crate::pool::CnnPool;

/// IoU threshold above which two detections from overlapping tiles are
/// considered duplicates of one physical object.
pub const DEFAULT_NMS_IOU: f64 = 0.45;

/// A scored candidate tile. `covered` holds indices into the object slice
/// the candidate was scored against; `ept` is seconds per covered object.
#[derive(Debug, Clone, PartialEq)]
pub struct TileCandidate {
    pub tile: Tile,
    pub covered: BTreeSet<usize>,
    pub latency: f64,
    pub ept: f64,
}

impl TileCandidate {
    /// Ordering key: ascending EPT, ties to the smaller tile, then the
    /// smaller (y, x) position.
    fn sort_key(&self) -> (f64, u32, i32, i32) {
        (self.ept, self.tile.size, self.tile.y, self.tile.x)
    }
}

fn candidate_cmp(a: &TileCandidate, b: &TileCandidate) -> std::cmp::Ordering {
    let (ae, as_, ay, ax) = a.sort_key();
    let (be, bs, by, bx) = b.sort_key();
    ae.total_cmp(&be).then(as_.cmp(&bs)).then(ay.cmp(&by)).then(ax.cmp(&bx))
}

/// The selected set of tiles for one stage-2 frame.
#[derive(Debug, Clone, PartialEq)]
pub struct TilePlan {
    pub tiles: Vec<Tile>,
    /// Sum of the kept profiles' latencies, seconds.
    pub total_latency: f64,
    /// Indices of the input objects the plan covers.
    pub covered: BTreeSet<usize>,
}

impl TilePlan {
    pub fn empty() -> Self {
        Self { tiles: Vec::new(), total_latency: 0.0, covered: BTreeSet::new() }
    }

    /// True when the plan fell back to processing the whole frame.
    pub fn is_full_frame_fallback(&self) -> bool {
        self.tiles.iter().any(Tile::is_full_frame)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum TileError {
    #[error("tile covers no objects")]
    ZeroCoverage,
    #[error("no candidate tile covers object {0}")]
    NoCoveringTile(usize),
    #[error(transparent)]
    Pool(#[from] crate::pool::PoolError),
}

/// Corner-anchored candidate tiles for one object: four anchors per pool
/// size that both contains the object and fits the frame, clamped inward
/// and deduplicated. Empty when no size can hold the object.
pub fn propose_tiles(obj: &BoundingBox, sizes: &[u32], dims: FrameDims) -> Vec<Tile> {
    let mut out: Vec<Tile> = Vec::new();
    for &size in sizes {
        if size < obj.long_side() || size > dims.short_side() {
            continue;
        }
        let s = size as i32;
        let anchors = [
            (TileAnchor::TopLeft, obj.x, obj.y),
            (TileAnchor::TopRight, obj.x + obj.w as i32 - s, obj.y),
            (TileAnchor::BottomLeft, obj.x, obj.y + obj.h as i32 - s),
            (TileAnchor::BottomRight, obj.x + obj.w as i32 - s, obj.y + obj.h as i32 - s),
        ];
        for (anchor, x, y) in anchors {
            let tile = clamp_tile(&Tile::new(x, y, size, anchor), dims)
                .expect("size filtered to fit frame");
            if !out.iter().any(|t| t.geometry() == tile.geometry()) {
                out.push(tile);
            }
        }
    }
    out
}

/// Score one clamped tile against the full object list.
pub fn score_candidate(
    tile: &Tile,
    objects: &[BoundingBox],
    pool: &CnnPool,
) -> Result<TileCandidate, TileError> {
    let covered: BTreeSet<usize> = objects
        .iter()
        .enumerate()
        .filter(|(_, b)| contains(tile, b))
        .map(|(i, _)| i)
        .collect();
    if covered.is_empty() {
        return Err(TileError::ZeroCoverage);
    }
    let latency = pool.profile_for(tile)?.latency;
    let ept = latency / covered.len() as f64;
    Ok(TileCandidate { tile: *tile, covered, latency, ept })
}

/// The minimum-EPT candidate covering the given object, ties broken by
/// smaller size then smaller (y, x).
pub fn select_per_object(
    obj_index: usize,
    candidates: &[TileCandidate],
) -> Result<TileCandidate, TileError> {
    candidates
        .iter()
        .filter(|c| c.covered.contains(&obj_index))
        .min_by(|a, b| candidate_cmp(a, b))
        .cloned()
        .ok_or(TileError::NoCoveringTile(obj_index))
}

/// Greedy redundancy pruning: walk candidates in ascending EPT order,
/// keep one only if it covers an object nothing kept so far covers, then
/// discard (most expensive first) any kept tile whose objects the rest of
/// the plan already covers. The second pass is needed because a tile kept
/// early can be made redundant by tiles kept after it.
pub fn prune_redundant(selected: &[TileCandidate]) -> TilePlan {
    let mut ordered: Vec<&TileCandidate> = selected.iter().collect();
    ordered.sort_by(|a, b| candidate_cmp(a, b));
    ordered.dedup_by(|a, b| a.tile.geometry() == b.tile.geometry());

    let mut kept: Vec<&TileCandidate> = Vec::new();
    let mut covered: BTreeSet<usize> = BTreeSet::new();
    for cand in ordered {
        if cand.covered.iter().any(|i| !covered.contains(i)) {
            covered.extend(cand.covered.iter().copied());
            kept.push(cand);
        }
    }

    // Backward elimination, highest EPT first. Removing a tile never makes
    // another more removable, so one pass reaches a minimal plan.
    let mut idx = kept.len();
    while idx > 0 {
        idx -= 1;
        let rest: BTreeSet<usize> = kept
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != idx)
            .flat_map(|(_, c)| c.covered.iter().copied())
            .collect();
        if kept[idx].covered.is_subset(&rest) {
            kept.remove(idx);
        }
    }

    let mut plan = TilePlan::empty();
    for cand in kept {
        plan.tiles.push(cand.tile);
        plan.total_latency += cand.latency;
        plan.covered.extend(cand.covered.iter().copied());
    }
    plan
}

/// Full stage-2 selection: propose per object, score against all objects,
/// keep each object's minimum-EPT candidate, prune redundancy.
///
/// Any object no pool tile can contain collapses the plan to a single
/// full-frame tile billed at the stage-1 profile, which covers everything.
pub fn select_tiles(objects: &[BoundingBox], pool: &CnnPool, dims: FrameDims) -> TilePlan {
    if objects.is_empty() {
        return TilePlan::empty();
    }
    let sizes = pool.tile_sizes();

    let mut picks: Vec<TileCandidate> = Vec::new();
    for (i, obj) in objects.iter().enumerate() {
        let proposals = propose_tiles(obj, &sizes, dims);
        if proposals.is_empty() {
            // Oversized object: one full-frame pass covers every object.
            let tile = Tile::full_frame(dims);
            return TilePlan {
                tiles: vec![tile],
                total_latency: pool.stage1().latency,
                covered: (0..objects.len()).collect(),
            };
        }
        let scored: Vec<TileCandidate> = proposals
            .iter()
            .filter_map(|t| score_candidate(t, objects, pool).ok())
            .collect();
        // A proposal for this object always covers it, so selection
        // cannot fail here.
        picks.push(select_per_object(i, &scored).expect("own proposal covers object"));
    }
    prune_redundant(&picks)
}

/// Greedy non-maximum suppression by descending score.
pub fn nms(mut detections: Vec<Detection>, iou_thresh: f64) -> Vec<Detection> {
    detections.sort_by(|a, b| b.score.total_cmp(&a.score));
    let mut kept: Vec<Detection> = Vec::new();
    'outer: for d in detections {
        for k in &kept {
            if iou(&d.box_, &k.box_) > iou_thresh {
                continue 'outer;
            }
        }
        kept.push(d);
    }
    kept
}

/// Merge per-tile detections (already in global coordinates) from
/// overlapping tiles into one detection per physical object.
pub fn merge_tile_detections(per_tile: Vec<Vec<Detection>>) -> Vec<Detection> {
    nms(per_tile.into_iter().flatten().collect(), DEFAULT_NMS_IOU)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::DetectionSource;
    use crate::pool::default_pool;
    use proptest::prelude::*;
    use std::collections::BTreeMap;

    const DIMS: FrameDims = FrameDims { width: 1024, height: 768 };

    fn bb(x: i32, y: i32, w: u32, h: u32) -> BoundingBox {
        BoundingBox::new(x, y, w, h)
    }

    #[test]
    fn mid_frame_object_yields_twenty_candidates() {
        let obj = bb(500, 400, 20, 20);
        let tiles = propose_tiles(&obj, &default_pool().tile_sizes(), DIMS);
        assert_eq!(tiles.len(), 20);
        for t in &tiles {
            assert!(contains(t, &obj), "candidate must cover its object");
        }
    }

    #[test]
    fn large_object_skips_small_sizes() {
        let obj = bb(400, 300, 300, 300);
        let tiles = propose_tiles(&obj, &default_pool().tile_sizes(), DIMS);
        // only 352, 416, 512 can contain a 300px object
        assert!(tiles.iter().all(|t| t.size >= 352));
        assert!(tiles.len() <= 12);
    }

    #[test]
    fn corner_object_candidates_collapse_by_clamping() {
        let obj = bb(0, 0, 20, 20);
        let tiles = propose_tiles(&obj, &default_pool().tile_sizes(), DIMS);
        // all four anchors clamp to (0,0) per size
        assert_eq!(tiles.len(), 5);
        assert!(tiles.iter().all(|t| (t.x, t.y) == (0, 0)));
    }

    #[test]
    fn oversized_object_proposes_nothing() {
        let obj = bb(100, 100, 600, 600);
        assert!(propose_tiles(&obj, &default_pool().tile_sizes(), DIMS).is_empty());
    }

    #[test]
    fn score_single_object_small_tile() {
        let pool = default_pool();
        let objects = [bb(10, 10, 20, 20)];
        let tile = Tile::new(0, 0, 128, TileAnchor::TopLeft);
        let c = score_candidate(&tile, &objects, &pool).unwrap();
        assert_eq!(c.ept, 0.002);
        assert_eq!(c.covered.len(), 1);
    }

    #[test]
    fn score_shared_tile_divides_latency() {
        let pool = default_pool();
        let objects =
            [bb(10, 10, 20, 20), bb(60, 10, 20, 20), bb(10, 60, 20, 20), bb(60, 60, 20, 20)];
        let tile = Tile::new(0, 0, 256, TileAnchor::TopLeft);
        let c = score_candidate(&tile, &objects, &pool).unwrap();
        assert_eq!(c.covered.len(), 4);
        assert_eq!(c.ept, 0.008 / 4.0);
        assert_eq!(c.ept, 0.002);
    }

    #[test]
    fn score_empty_tile_is_zero_coverage() {
        let pool = default_pool();
        let objects = [bb(900, 700, 20, 20)];
        let tile = Tile::new(0, 0, 512, TileAnchor::TopLeft);
        assert_eq!(score_candidate(&tile, &objects, &pool).unwrap_err(), TileError::ZeroCoverage);
    }

    #[test]
    fn lone_object_selects_smallest_tile() {
        let pool = default_pool();
        let objects = [bb(500, 400, 20, 20)];
        let cands: Vec<TileCandidate> = propose_tiles(&objects[0], &pool.tile_sizes(), DIMS)
            .iter()
            .filter_map(|t| score_candidate(t, &objects, &pool).ok())
            .collect();
        let pick = select_per_object(0, &cands).unwrap();
        assert_eq!(pick.tile.size, 128);
        assert_eq!(pick.ept, 0.002);
    }

    #[test]
    fn two_adjacent_objects_still_prefer_own_small_tiles() {
        let pool = default_pool();
        // both fit one 256 tile (ept 0.004), but own 128 tiles have ept 0.002
        let objects = [bb(100, 100, 20, 20), bb(200, 100, 20, 20)];
        for i in 0..2 {
            let cands: Vec<TileCandidate> = propose_tiles(&objects[i], &pool.tile_sizes(), DIMS)
                .iter()
                .filter_map(|t| score_candidate(t, &objects, &pool).ok())
                .collect();
            let pick = select_per_object(i, &cands).unwrap();
            assert_eq!(pick.tile.size, 128, "object {i}");
        }
    }

    #[test]
    fn four_clustered_objects_tie_breaks_to_smaller_tile() {
        let pool = default_pool();
        // four objects inside one 256 tile: shared ept 0.008/4 = 0.002 ties
        // the individual 128 tiles at 0.002; smaller size wins the tie.
        let objects =
            [bb(10, 10, 20, 20), bb(80, 10, 20, 20), bb(10, 80, 20, 20), bb(80, 80, 20, 20)];
        for i in 0..4 {
            let cands: Vec<TileCandidate> = propose_tiles(&objects[i], &pool.tile_sizes(), DIMS)
                .iter()
                .filter_map(|t| score_candidate(t, &objects, &pool).ok())
                .collect();
            let pick = select_per_object(i, &cands).unwrap();
            assert_eq!(pick.tile.size, 128, "object {i}");
        }
    }

    #[test]
    fn select_rejects_uncovered_object() {
        assert_eq!(select_per_object(3, &[]).unwrap_err(), TileError::NoCoveringTile(3));
    }

    #[test]
    fn prune_keeps_four_separated_tiles() {
        let pool = default_pool();
        let objects =
            [bb(50, 50, 20, 20), bb(500, 50, 20, 20), bb(50, 500, 20, 20), bb(500, 500, 20, 20)];
        let plan = select_tiles(&objects, &pool, DIMS);
        assert_eq!(plan.tiles.len(), 4);
        assert_eq!(plan.total_latency, 0.008);
        assert!(plan.tiles.iter().all(|t| t.size == 128));
    }

    #[test]
    fn prune_merges_identical_picks() {
        let pool = default_pool();
        let objects = [bb(10, 10, 20, 20), bb(40, 40, 20, 20)];
        let tile = Tile::new(0, 0, 128, TileAnchor::TopLeft);
        let cand = score_candidate(&tile, &objects, &pool).unwrap();
        let plan = prune_redundant(&[cand.clone(), cand]);
        assert_eq!(plan.tiles.len(), 1);
        assert_eq!(plan.total_latency, 0.002);
    }

    #[test]
    fn prune_drops_subset_coverage() {
        let pool = default_pool();
        let objects = [bb(10, 10, 20, 20), bb(60, 60, 20, 20)];
        let both = score_candidate(&Tile::new(0, 0, 128, TileAnchor::TopLeft), &objects, &pool)
            .unwrap();
        // 256 tile covering only object 1 (higher ept, subset after the fact)
        let one = score_candidate(&Tile::new(30, 30, 256, TileAnchor::TopLeft), &objects, &pool)
            .unwrap();
        assert!(one.ept > both.ept);
        let plan = prune_redundant(&[both.clone(), one]);
        assert_eq!(plan.tiles, vec![both.tile]);
    }

    #[test]
    fn empty_objects_give_empty_plan() {
        let plan = select_tiles(&[], &default_pool(), DIMS);
        assert_eq!(plan, TilePlan::empty());
    }

    #[test]
    fn frame_smaller_than_every_tile_forces_full_frame() {
        let pool = default_pool();
        let dims = FrameDims::new(100, 100);
        let plan = select_tiles(&[bb(10, 10, 20, 20)], &pool, dims);
        assert!(plan.is_full_frame_fallback());
        assert_eq!(plan.total_latency, pool.stage1().latency);
    }

    #[test]
    fn oversized_object_forces_full_frame_plan() {
        let pool = default_pool();
        let objects = [bb(10, 10, 20, 20), bb(100, 100, 600, 600)];
        let plan = select_tiles(&objects, &pool, DIMS);
        assert!(plan.is_full_frame_fallback());
        assert_eq!(plan.tiles.len(), 1);
        assert_eq!(plan.total_latency, pool.stage1().latency);
        assert_eq!(plan.covered.len(), 2);
    }

    #[test]
    fn plan_latency_beats_full_frame_for_separated_scene() {
        let pool = default_pool();
        let objects =
            [bb(50, 50, 20, 20), bb(500, 50, 20, 20), bb(50, 500, 20, 20), bb(500, 500, 20, 20)];
        let plan = select_tiles(&objects, &pool, DIMS);
        assert!(plan.total_latency < pool.stage1().latency);
        assert_eq!(plan.total_latency, 0.008);
    }

    fn det(x: i32, y: i32, w: u32, h: u32, score: f64) -> Detection {
        Detection::new(bb(x, y, w, h), score, DetectionSource::Stage2Tile)
    }

    #[test]
    fn merge_collapses_duplicates_from_two_tiles() {
        let a = det(100, 100, 20, 20, 0.9);
        let b = det(100, 100, 20, 20, 0.8);
        let merged = merge_tile_detections(vec![vec![a], vec![b]]);
        assert_eq!(merged.len(), 1);
        assert_eq!(merged[0].score, 0.9);
    }

    #[test]
    fn merge_keeps_disjoint_detections() {
        let a = det(0, 0, 20, 20, 0.9);
        let b = det(500, 500, 20, 20, 0.6);
        let merged = merge_tile_detections(vec![vec![a], vec![b]]);
        assert_eq!(merged.len(), 2);
    }

    #[test]
    fn merge_suppresses_high_overlap_keeping_best_score() {
        // IoU = 80/120 = 0.667 > 0.45
        let a = det(0, 0, 10, 10, 0.9);
        let b = det(0, 2, 10, 10, 0.8);
        let merged = merge_tile_detections(vec![vec![a, b]]);
        assert_eq!(merged.len(), 1);
        assert_eq!(merged[0].score, 0.9);
    }

    /// Exact minimum-latency cover by dynamic programming over object
    /// subsets; independent of the greedy implementation.
    fn optimal_cover_latency(candidates: &[TileCandidate], n_objects: usize) -> Option<f64> {
        assert!(n_objects <= 16);
        // cheapest candidate per distinct coverage mask
        let mut group: BTreeMap<u32, f64> = BTreeMap::new();
        for c in candidates {
            let mask = c.covered.iter().fold(0u32, |m, &i| m | (1 << i));
            let e = group.entry(mask).or_insert(f64::INFINITY);
            if c.latency < *e {
                *e = c.latency;
            }
        }
        let full: u32 = if n_objects == 32 { u32::MAX } else { (1 << n_objects) - 1 };
        let mut best = vec![f64::INFINITY; (full as usize) + 1];
        best[0] = 0.0;
        for state in 0..=full {
            if best[state as usize].is_infinite() {
                continue;
            }
            for (&mask, &cost) in &group {
                let next = (state | mask) as usize;
                if best[state as usize] + cost < best[next] {
                    best[next] = best[state as usize] + cost;
                }
            }
        }
        best[full as usize].is_finite().then(|| best[full as usize])
    }

    #[test]
    fn greedy_plan_matches_cover_oracle_on_random_scenes() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(20863);
        let pool = default_pool();
        let sizes = [128u32, 256, 352];
        for _ in 0..60 {
            let n = rng.gen_range(1..=6);
            let objects: Vec<BoundingBox> = (0..n)
                .map(|_| {
                    let w = rng.gen_range(8..=100);
                    let h = rng.gen_range(8..=100);
                    bb(
                        rng.gen_range(0..=(1024 - w) as i32),
                        rng.gen_range(0..=(768 - h) as i32),
                        w,
                        h,
                    )
                })
                .collect();
            let mut all: Vec<TileCandidate> = Vec::new();
            for obj in &objects {
                for t in propose_tiles(obj, &sizes, DIMS) {
                    if let Ok(c) = score_candidate(&t, &objects, &pool) {
                        all.push(c);
                    }
                }
            }
            let picks: Vec<TileCandidate> =
                (0..n).map(|i| select_per_object(i, &all).unwrap()).collect();
            let plan = prune_redundant(&picks);
            assert_eq!(plan.covered.len(), n, "plan must cover all objects");
            let optimal = optimal_cover_latency(&all, n).unwrap();
            assert!(
                plan.total_latency <= 2.0 * optimal + 1e-12,
                "greedy {} vs optimal {}",
                plan.total_latency,
                optimal
            );
        }
    }

    proptest! {
        #[test]
        fn candidate_count_bounded_by_four_per_size(
            x in 0i32..1000, y in 0i32..740, w in 5u32..120, h in 5u32..120
        ) {
            let obj = bb(x.min(1024 - w as i32), y.min(768 - h as i32), w, h);
            let sizes = default_pool().tile_sizes();
            let tiles = propose_tiles(&obj, &sizes, DIMS);
            prop_assert!(tiles.len() <= 4 * sizes.len());
            for t in &tiles {
                prop_assert!(t.x >= 0 && t.y >= 0);
                prop_assert!(t.right() <= 1024 && t.bottom() <= 768);
                prop_assert!(contains(t, &obj));
            }
        }

        #[test]
        fn plan_is_minimal_and_complete(
            objs in proptest::collection::vec((0i32..980, 0i32..720, 8u32..40, 8u32..40), 1..7)
        ) {
            let pool = default_pool();
            let objects: Vec<BoundingBox> = objs
                .iter()
                .map(|&(x, y, w, h)| {
                    bb(x.min(1024 - w as i32), y.min(768 - h as i32), w, h)
                })
                .collect();
            let plan = select_tiles(&objects, &pool, DIMS);
            // complete
            prop_assert_eq!(plan.covered.len(), objects.len());
            // minimal: dropping any tile uncovers at least one object
            for skip in 0..plan.tiles.len() {
                let mut covered = BTreeSet::new();
                for (ti, t) in plan.tiles.iter().enumerate() {
                    if ti == skip {
                        continue;
                    }
                    for (oi, o) in objects.iter().enumerate() {
                        if contains(t, o) {
                            covered.insert(oi);
                        }
                    }
                }
                prop_assert!(covered.len() < objects.len(), "tile {} is redundant", skip);
            }
        }

        #[test]
        fn sharing_never_increases_cost(
            objs in proptest::collection::vec((0i32..980, 0i32..720, 8u32..40, 8u32..40), 1..7)
        ) {
            let pool = default_pool();
            let objects: Vec<BoundingBox> = objs
                .iter()
                .map(|&(x, y, w, h)| {
                    bb(x.min(1024 - w as i32), y.min(768 - h as i32), w, h)
                })
                .collect();
            let sizes = pool.tile_sizes();
            let mut per_object_sum = 0.0;
            for (i, obj) in objects.iter().enumerate() {
                let cands: Vec<TileCandidate> = propose_tiles(obj, &sizes, DIMS)
                    .iter()
                    .filter_map(|t| score_candidate(t, &objects, &pool).ok())
                    .collect();
                per_object_sum += select_per_object(i, &cands).unwrap().latency;
            }
            let plan = select_tiles(&objects, &pool, DIMS);
            prop_assert!(plan.total_latency <= per_object_sum + 1e-12);
        }
    }
}
