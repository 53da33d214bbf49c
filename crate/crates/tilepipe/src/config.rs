//! Plain-text configuration files and the assembly of runnable inputs.
//!
//! The format is sectioned key-value text:
//!
//! ```text
//! # comment
//! [run]
//! mode = simulate
//! stages = 1-3-5
//! ```
//!
//! Sections may repeat (`[profile]` in pool files, one per profile).
//! Repeated keys inside a section are kept in order (`entry` lines in a
//! scene). Everything after `#` on a line is ignored.

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::annotations::{load_annotations, GtTable};
use crate::geom::{BoundingBox, FrameDims};
use crate::gray::Frame;
use crate::metrics::{PlatformProfile, DEFAULT_FRAME_PERIOD, DEFAULT_MATCH_IOU};
use crate::pgm::{read_pgm, sequence_paths};
use crate::pipeline::{
    run, FrameSource, PipelineError, RunOptions, RunReport, SourceError, StageConfig,
};
use crate::pool::{default_pool, CnnPool, CnnProfile, ProfileRole};
use crate::sim::{
    generate_scene, MotionModel, OracleDetector, OracleModel, SceneSpec, SimSource, Trajectories,
};

#[derive(Debug, Error)]
pub enum ConfigFileError {
    #[error("{path}:{line}: {reason}")]
    Parse { path: PathBuf, line: usize, reason: String },
    #[error("{path}: section [{section}]: {reason}")]
    Invalid { path: PathBuf, section: String, reason: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// One `[section]` with its key-value pairs in file order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Section {
    pub name: String,
    pub line: usize,
    entries: Vec<(String, String)>,
}

impl Section {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn get_all(&self, key: &str) -> Vec<&str> {
        self.entries.iter().filter(|(k, _)| k == key).map(|(_, v)| v.as_str()).collect()
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }
}

/// Parsed file: ordered sections, possibly repeated names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawConfig {
    pub path: PathBuf,
    pub sections: Vec<Section>,
}

impl RawConfig {
    pub fn section(&self, name: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.name == name)
    }

    pub fn sections_named(&self, name: &str) -> Vec<&Section> {
        self.sections.iter().filter(|s| s.name == name).collect()
    }

    fn invalid(&self, section: &str, reason: String) -> ConfigFileError {
        ConfigFileError::Invalid { path: self.path.clone(), section: section.to_string(), reason }
    }
}

/// Parse sectioned key-value text.
pub fn parse_config(text: &str, path: &Path) -> Result<RawConfig, ConfigFileError> {
    let mut sections: Vec<Section> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if content.starts_with('[') {
            if !content.ends_with(']') || content.len() < 3 {
                return Err(ConfigFileError::Parse {
                    path: path.to_path_buf(),
                    line: line_no,
                    reason: "malformed section header".to_string(),
                });
            }
            sections.push(Section {
                name: content[1..content.len() - 1].trim().to_string(),
                line: line_no,
                entries: Vec::new(),
            });
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigFileError::Parse {
                path: path.to_path_buf(),
                line: line_no,
                reason: "expected `key = value`".to_string(),
            });
        };
        let Some(section) = sections.last_mut() else {
            return Err(ConfigFileError::Parse {
                path: path.to_path_buf(),
                line: line_no,
                reason: "key-value pair before any [section]".to_string(),
            });
        };
        section.entries.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(RawConfig { path: path.to_path_buf(), sections })
}

pub fn load_config_file(path: &Path) -> Result<RawConfig, ConfigFileError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| ConfigFileError::Io { path: path.to_path_buf(), source })?;
    parse_config(&text, path)
}

fn parse_field<T: std::str::FromStr>(
    raw: &RawConfig,
    section: &Section,
    key: &str,
    value: &str,
) -> Result<T, ConfigFileError> {
    value
        .parse()
        .map_err(|_| raw.invalid(&section.name, format!("bad value for {key}: {value:?}")))
}

fn get_parsed<T: std::str::FromStr>(
    raw: &RawConfig,
    section: &Section,
    key: &str,
) -> Result<Option<T>, ConfigFileError> {
    match section.get(key) {
        Some(v) => Ok(Some(parse_field(raw, section, key, v)?)),
        None => Ok(None),
    }
}

fn require<T: std::str::FromStr>(
    raw: &RawConfig,
    section: &Section,
    key: &str,
) -> Result<T, ConfigFileError> {
    match section.get(key) {
        Some(v) => parse_field(raw, section, key, v),
        None => Err(raw.invalid(&section.name, format!("missing required key {key}"))),
    }
}

/// Where the frames and ground truth come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunMode {
    Simulate,
    Dataset,
}

impl std::fmt::Display for RunMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunMode::Simulate => write!(f, "simulate"),
            RunMode::Dataset => write!(f, "dataset"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetPaths {
    pub frames_dir: PathBuf,
    pub annotations: PathBuf,
}

/// Fully resolved run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub mode: RunMode,
    pub stages: StageConfig,
    pub platform: String,
    pub iou_threshold: f64,
    pub frame_period: f64,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub tracker_cost: f64,
    pub track_agreement: bool,
    pub pool: CnnPool,
    pub custom_platform: Option<PlatformProfile>,
    pub scene: Option<SceneSpec>,
    pub dataset: Option<DatasetPaths>,
    pub oracle: OracleModel,
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigFileError> {
        let raw = load_config_file(path)?;
        Self::from_raw(&raw)
    }

    pub fn from_raw(raw: &RawConfig) -> Result<Self, ConfigFileError> {
        let run = raw
            .section("run")
            .ok_or_else(|| raw.invalid("run", "missing [run] section".to_string()))?;

        let mode = match run.get("mode") {
            Some("simulate") => RunMode::Simulate,
            Some("dataset") => RunMode::Dataset,
            Some(other) => {
                return Err(raw.invalid("run", format!("unknown mode {other:?}")));
            }
            None => return Err(raw.invalid("run", "missing required key mode".to_string())),
        };
        let stages: StageConfig = {
            let s: String = require(raw, run, "stages")?;
            s.parse().map_err(|e| raw.invalid("run", format!("{e}")))?
        };
        let platform: String = get_parsed(raw, run, "platform")?.unwrap_or_else(|| "cpu".into());
        let iou_threshold =
            get_parsed(raw, run, "iou_threshold")?.unwrap_or(DEFAULT_MATCH_IOU);
        if !(0.0..1.0).contains(&iou_threshold) || iou_threshold == 0.0 {
            return Err(raw.invalid("run", format!("iou_threshold {iou_threshold} not in (0,1)")));
        }
        let frame_period =
            get_parsed(raw, run, "frame_period")?.unwrap_or(DEFAULT_FRAME_PERIOD);
        if frame_period <= 0.0 {
            return Err(raw.invalid("run", "frame_period must be positive".to_string()));
        }
        let seed: u64 = get_parsed(raw, run, "seed")?.unwrap_or(0);
        let out_dir: PathBuf =
            get_parsed::<String>(raw, run, "out")?.unwrap_or_else(|| "out".into()).into();
        let tracker_cost: f64 = get_parsed(raw, run, "tracker_cost")?.unwrap_or(0.001);
        let track_agreement: bool = get_parsed(raw, run, "track_agreement")?.unwrap_or(false);

        let base_dir = raw.path.parent().map(Path::to_path_buf).unwrap_or_default();
        let pool = match run.get("pool_file") {
            Some(rel) => load_pool_file(&base_dir.join(rel))?,
            None => match raw.sections_named("profile").is_empty() {
                true => default_pool(),
                false => pool_from_raw(raw)?,
            },
        };

        let custom_platform = match raw.section("platform") {
            Some(s) => Some(PlatformProfile::new(
                &require::<String>(raw, s, "id")?,
                require(raw, s, "idle_power")?,
                require(raw, s, "tracker_energy")?,
                get_parsed(raw, s, "active_power")?.unwrap_or(0.0),
            )),
            None => None,
        };

        let scene = match raw.section("scene") {
            Some(s) => Some(scene_from_section(raw, s, seed)?),
            None => None,
        };
        let dataset = match raw.section("dataset") {
            Some(s) => Some(DatasetPaths {
                frames_dir: base_dir.join(require::<String>(raw, s, "frames_dir")?),
                annotations: base_dir.join(require::<String>(raw, s, "annotations")?),
            }),
            None => None,
        };
        match mode {
            RunMode::Simulate if scene.is_none() => {
                return Err(raw.invalid("scene", "simulate mode needs a [scene] section".into()));
            }
            RunMode::Simulate if dataset.is_some() => {
                return Err(raw.invalid("dataset", "simulate mode excludes [dataset]".into()));
            }
            RunMode::Dataset if dataset.is_none() => {
                return Err(raw.invalid("dataset", "dataset mode needs a [dataset] section".into()));
            }
            RunMode::Dataset if scene.is_some() => {
                return Err(raw.invalid("scene", "dataset mode excludes [scene]".into()));
            }
            _ => {}
        }

        let oracle = match raw.section("oracle") {
            Some(s) => OracleModel {
                base_recall: get_parsed(raw, s, "base_recall")?.unwrap_or(0.97),
                min_apparent_size: get_parsed(raw, s, "min_apparent_size")?.unwrap_or(12.0),
                false_positive_rate: get_parsed(raw, s, "false_positive_rate")?.unwrap_or(0.05),
                seed: derive_oracle_seed(seed),
            },
            None => OracleModel { seed: derive_oracle_seed(seed), ..OracleModel::default() },
        };

        Ok(Self {
            mode,
            stages,
            platform,
            iou_threshold,
            frame_period,
            seed,
            out_dir,
            tracker_cost,
            track_agreement,
            pool,
            custom_platform,
            scene,
            dataset,
            oracle,
        })
    }

    /// Re-seed the run (CLI `--seed` override): scene and oracle follow.
    pub fn apply_seed(&mut self, seed: u64) {
        self.seed = seed;
        if let Some(scene) = &mut self.scene {
            scene.seed = seed;
        }
        self.oracle.seed = derive_oracle_seed(seed);
    }

    /// Resolve the platform id against the custom section or built-ins.
    pub fn platform_profile(&self) -> Result<PlatformProfile, ExecError> {
        if let Some(custom) = &self.custom_platform {
            if custom.id == self.platform {
                return Ok(custom.clone());
            }
        }
        PlatformProfile::builtin(&self.platform)
            .ok_or_else(|| ExecError::Config(format!("unknown platform {:?}", self.platform)))
    }
}

fn derive_oracle_seed(seed: u64) -> u64 {
    // decorrelate the oracle stream from the scene stream
    seed ^ 0x6F72_6163_6C65_5F31
}

fn scene_from_section(
    raw: &RawConfig,
    s: &Section,
    seed: u64,
) -> Result<SceneSpec, ConfigFileError> {
    let dims = FrameDims::new(require(raw, s, "width")?, require(raw, s, "height")?);
    let motion = match s.get("motion") {
        None | Some("linear") => MotionModel::Linear,
        Some("random_walk") => MotionModel::RandomWalk,
        Some(other) => {
            return Err(raw.invalid("scene", format!("unknown motion {other:?}")));
        }
    };
    let mut entries = Vec::new();
    for value in s.get_all("entry") {
        let parts: Vec<&str> = value.split_whitespace().collect();
        let parsed: Option<(usize, usize)> = (parts.len() == 2)
            .then(|| Some((parts[0].parse().ok()?, parts[1].parse().ok()?)))
            .flatten();
        match parsed {
            Some(pair) => entries.push(pair),
            None => {
                return Err(raw.invalid(
                    "scene",
                    format!("entry must be `FRAME OBJECT`, got {value:?}"),
                ));
            }
        }
    }
    Ok(SceneSpec {
        dims,
        n_objects: require(raw, s, "objects")?,
        size_range: (
            get_parsed(raw, s, "min_size")?.unwrap_or(16),
            get_parsed(raw, s, "max_size")?.unwrap_or(32),
        ),
        motion,
        speed_range: (
            get_parsed(raw, s, "min_speed")?.unwrap_or(1.0),
            get_parsed(raw, s, "max_speed")?.unwrap_or(3.0),
        ),
        entries,
        frames: require(raw, s, "frames")?,
        seed,
    })
}

/// Build a pool from `[profile]` sections.
pub fn pool_from_raw(raw: &RawConfig) -> Result<CnnPool, ConfigFileError> {
    let mut stage1: Option<CnnProfile> = None;
    let mut tiles: Vec<CnnProfile> = Vec::new();
    for s in raw.sections_named("profile") {
        let name: String = require(raw, s, "name")?;
        let size: u32 = require(raw, s, "size")?;
        let latency: f64 = require(raw, s, "latency")?;
        if latency <= 0.0 {
            return Err(raw.invalid("profile", format!("{name}: latency must be positive")));
        }
        let role = match s.get("role") {
            Some("stage1") => ProfileRole::Stage1Full,
            None | Some("tile") => ProfileRole::Tile,
            Some(other) => {
                return Err(raw.invalid("profile", format!("unknown role {other:?}")));
            }
        };
        let mut profile = CnnProfile::new(&name, size, latency, role);
        for (key, value) in s.entries() {
            if let Some(platform) = key.strip_prefix("energy.") {
                let joules: f64 = value.parse().map_err(|_| {
                    raw.invalid("profile", format!("{name}: bad energy value {value:?}"))
                })?;
                if joules < 0.0 {
                    return Err(
                        raw.invalid("profile", format!("{name}: energy must be >= 0"))
                    );
                }
                profile = profile.with_energy(platform, joules);
            }
        }
        match role {
            ProfileRole::Stage1Full => {
                if stage1.is_some() {
                    return Err(raw.invalid("profile", "more than one stage1 profile".into()));
                }
                stage1 = Some(profile);
            }
            ProfileRole::Tile => tiles.push(profile),
        }
    }
    let stage1 = stage1
        .ok_or_else(|| raw.invalid("profile", "pool needs exactly one stage1 profile".into()))?;
    tiles.sort_by_key(|p| p.input_size);
    CnnPool::new(stage1, tiles).map_err(|e| raw.invalid("profile", e.to_string()))
}

pub fn load_pool_file(path: &Path) -> Result<CnnPool, ConfigFileError> {
    pool_from_raw(&load_config_file(path)?)
}

/// Disk-backed frame source: PGM paths resolved up front, pixels loaded
/// per frame; ground truth from the annotation table.
pub struct DatasetSource {
    paths: Vec<PathBuf>,
    dims: FrameDims,
    gt: GtTable,
}

impl DatasetSource {
    pub fn open(paths: &DatasetPaths) -> Result<Self, ExecError> {
        let files = sequence_paths(&paths.frames_dir)
            .map_err(|e| ExecError::Config(e.to_string()))?;
        let first = read_pgm(&files[0]).map_err(|e| ExecError::Config(e.to_string()))?;
        let dims = FrameDims::new(first.width() as u32, first.height() as u32);
        let gt = load_annotations(&paths.annotations, dims)
            .map_err(|e| ExecError::Config(e.to_string()))?;
        Ok(Self { paths: files, dims, gt })
    }

    pub fn ground_truth_table(&self) -> &GtTable {
        &self.gt
    }
}

impl FrameSource for DatasetSource {
    fn dims(&self) -> FrameDims {
        self.dims
    }

    fn len(&self) -> usize {
        self.paths.len()
    }

    fn frame(&self, t: usize) -> Result<Frame, SourceError> {
        let image = read_pgm(&self.paths[t])
            .map_err(|e| SourceError { index: t, message: e.to_string() })?;
        if (image.width() as u32, image.height() as u32) != (self.dims.width, self.dims.height) {
            return Err(SourceError {
                index: t,
                message: format!(
                    "{}: mixed dimensions {}x{}, sequence is {}x{}",
                    self.paths[t].display(),
                    image.width(),
                    image.height(),
                    self.dims.width,
                    self.dims.height
                ),
            });
        }
        Ok(Frame { index: t, image })
    }

    fn ground_truth(&self, t: usize) -> Vec<BoundingBox> {
        self.gt.boxes_at(t)
    }
}

/// Errors split along the CLI exit-code boundary.
#[derive(Debug, Error)]
pub enum ExecError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("runtime error: {0}")]
    Runtime(String),
}

impl From<ConfigFileError> for ExecError {
    fn from(e: ConfigFileError) -> Self {
        ExecError::Config(e.to_string())
    }
}

impl From<PipelineError> for ExecError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::EmptySequence | PipelineError::TrackerCostTooHigh { .. } => {
                ExecError::Config(e.to_string())
            }
            other => ExecError::Runtime(other.to_string()),
        }
    }
}

/// Execute one configured run end to end.
pub fn execute_run(cfg: &RunConfig) -> Result<RunReport, ExecError> {
    let platform = cfg.platform_profile()?;
    cfg.pool
        .validate_platform(&platform)
        .map_err(|e| ExecError::Config(e.to_string()))?;
    let opts = RunOptions {
        iou_threshold: cfg.iou_threshold,
        frame_period: cfg.frame_period,
        tracker_cost: cfg.tracker_cost,
        track_agreement: cfg.track_agreement,
        seed: Some(cfg.seed),
        mode: Some(cfg.mode.to_string()),
        ..Default::default()
    };
    match cfg.mode {
        RunMode::Simulate => {
            let scene = cfg.scene.as_ref().expect("validated: simulate has a scene");
            let traj =
                generate_scene(scene).map_err(|e| ExecError::Config(e.to_string()))?;
            let detector = OracleDetector::new(traj.clone(), cfg.oracle.clone());
            let source = SimSource::new(traj);
            Ok(run(&source, &detector, &cfg.pool, &cfg.stages, &platform, &opts)?)
        }
        RunMode::Dataset => {
            let paths = cfg.dataset.as_ref().expect("validated: dataset has paths");
            let source = DatasetSource::open(paths)?;
            let per_frame = source.ground_truth_table().per_frame(source.len());
            let traj = Trajectories::from_ground_truth(source.dims(), source.len(), &per_frame);
            let detector = OracleDetector::new(traj, cfg.oracle.clone());
            Ok(run(&source, &detector, &cfg.pool, &cfg.stages, &platform, &opts)?)
        }
    }
}

/// One sweep point: the stage config it ran and its report.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepEntry {
    pub stages: StageConfig,
    pub report: RunReport,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepReport {
    pub entries: Vec<SweepEntry>,
}

/// A sweep abort: the configs completed so far plus the failure.
#[derive(Debug, Error)]
#[error("sweep aborted at config {failed}: {source} ({} of {total} runs completed)", partial.entries.len())]
pub struct SweepError {
    pub partial: SweepReport,
    pub failed: StageConfig,
    pub total: usize,
    #[source]
    pub source: ExecError,
}

/// Run every stage configuration against the identical sequence and seed.
pub fn execute_sweep(
    stage_configs: &[StageConfig],
    base: &RunConfig,
) -> Result<SweepReport, SweepError> {
    assert!(!stage_configs.is_empty(), "sweep needs at least one config");
    let mut sweep = SweepReport::default();
    for &stages in stage_configs {
        let cfg = RunConfig { stages, ..base.clone() };
        match execute_run(&cfg) {
            Ok(report) => sweep.entries.push(SweepEntry { stages, report }),
            Err(source) => {
                return Err(SweepError {
                    partial: sweep,
                    failed: stages,
                    total: stage_configs.len(),
                    source,
                });
            }
        }
    }
    Ok(sweep)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> RawConfig {
        parse_config(text, Path::new("test.conf")).unwrap()
    }

    const BASE: &str = "\
[run]
mode = simulate
stages = 1-3-5
seed = 9

[scene]
width = 512
height = 384
objects = 3
frames = 12
";

    #[test]
    fn sections_and_keys_parse() {
        let raw = parse("# hi\n[a]\nx = 1\ny = two words # tail\n[b]\nx = 3\n");
        assert_eq!(raw.sections.len(), 2);
        assert_eq!(raw.section("a").unwrap().get("x"), Some("1"));
        assert_eq!(raw.section("a").unwrap().get("y"), Some("two words"));
        assert_eq!(raw.section("b").unwrap().get("x"), Some("3"));
    }

    #[test]
    fn key_before_section_is_an_error() {
        assert!(parse_config("x = 1\n", Path::new("t")).is_err());
    }

    #[test]
    fn run_config_loads_with_defaults() {
        let cfg = RunConfig::from_raw(&parse(BASE)).unwrap();
        assert_eq!(cfg.mode, RunMode::Simulate);
        assert_eq!(cfg.stages.to_string(), "1-3-5");
        assert_eq!(cfg.platform, "cpu");
        assert_eq!(cfg.iou_threshold, DEFAULT_MATCH_IOU);
        assert_eq!(cfg.seed, 9);
        let scene = cfg.scene.unwrap();
        assert_eq!(scene.seed, 9);
        assert_eq!(scene.dims, FrameDims::new(512, 384));
    }

    #[test]
    fn simulate_mode_requires_scene() {
        let err =
            RunConfig::from_raw(&parse("[run]\nmode = simulate\nstages = 1-1-1\n")).unwrap_err();
        assert!(err.to_string().contains("scene"));
    }

    #[test]
    fn mode_exclusivity_is_enforced() {
        let text = format!("{BASE}\n[dataset]\nframes_dir = x\nannotations = y\n");
        let err = RunConfig::from_raw(&parse(&text)).unwrap_err();
        assert!(err.to_string().contains("excludes"));
    }

    #[test]
    fn seed_override_reseeds_scene_and_oracle() {
        let mut cfg = RunConfig::from_raw(&parse(BASE)).unwrap();
        let oracle_before = cfg.oracle.seed;
        cfg.apply_seed(1234);
        assert_eq!(cfg.seed, 1234);
        assert_eq!(cfg.scene.as_ref().unwrap().seed, 1234);
        assert_ne!(cfg.oracle.seed, oracle_before);
    }

    #[test]
    fn inline_pool_profiles_override_default() {
        let text = format!(
            "{BASE}
[profile]
name = s1
role = stage1
size = 512
latency = 0.05
energy.cpu = 0.5

[profile]
name = t128
size = 128
latency = 0.003
energy.cpu = 0.03
"
        );
        let cfg = RunConfig::from_raw(&parse(&text)).unwrap();
        assert_eq!(cfg.pool.stage1().latency, 0.05);
        assert_eq!(cfg.pool.lookup(128).unwrap().latency, 0.003);
        assert!(cfg.pool.lookup(256).is_err());
    }

    #[test]
    fn pool_requires_one_stage1() {
        let text = format!("{BASE}\n[profile]\nname = t\nsize = 128\nlatency = 0.002\n");
        assert!(RunConfig::from_raw(&parse(&text)).is_err());
    }

    #[test]
    fn pool_file_reference_is_loaded_relative_to_config() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join("pool.conf"),
            "\
[profile]
name = s1
role = stage1
size = 512
latency = 0.06
energy.cpu = 0.6

[profile]
name = t128
size = 128
latency = 0.001
energy.cpu = 0.01
",
        )
        .unwrap();
        let cfg_path = dir.path().join("run.conf");
        std::fs::write(
            &cfg_path,
            "\
[run]
mode = simulate
stages = 1-3-5
seed = 9
pool_file = pool.conf

[scene]
width = 512
height = 384
objects = 3
frames = 12
",
        )
        .unwrap();
        let cfg = RunConfig::from_file(&cfg_path).unwrap();
        assert_eq!(cfg.pool.stage1().latency, 0.06);
        assert_eq!(cfg.pool.lookup(128).unwrap().latency, 0.001);
    }

    #[test]
    fn unknown_platform_is_a_config_error() {
        let mut cfg = RunConfig::from_raw(&parse(BASE)).unwrap();
        cfg.platform = "toaster".into();
        assert!(matches!(cfg.platform_profile(), Err(ExecError::Config(_))));
    }

    #[test]
    fn custom_platform_section_resolves() {
        let text = format!(
            "{BASE}
[platform]
id = board9
idle_power = 0.5
tracker_energy = 0.001
active_power = 2.0
"
        );
        let mut cfg = RunConfig::from_raw(&parse(&text)).unwrap();
        cfg.platform = "board9".into();
        let p = cfg.platform_profile().unwrap();
        assert_eq!(p.idle_power, 0.5);
    }

    #[test]
    fn entry_lines_feed_the_scene_schedule() {
        let text = format!("{BASE}entry = 4 1\nentry = 7 2\n");
        let cfg = RunConfig::from_raw(&parse(&text)).unwrap();
        assert_eq!(cfg.scene.unwrap().entries, vec![(4, 1), (7, 2)]);
    }

    #[test]
    fn execute_run_simulate_produces_report() {
        let cfg = RunConfig::from_raw(&parse(BASE)).unwrap();
        let report = execute_run(&cfg).unwrap();
        assert_eq!(report.frames.len(), 12);
        assert_eq!(report.meta.seed, Some(9));
    }

    #[test]
    fn sweep_runs_every_config_and_duplicates_agree() {
        let cfg = RunConfig::from_raw(&parse(BASE)).unwrap();
        let configs: Vec<StageConfig> =
            ["1-1-1", "1-3-5", "1-1-1"].iter().map(|s| s.parse().unwrap()).collect();
        let sweep = execute_sweep(&configs, &cfg).unwrap();
        assert_eq!(sweep.entries.len(), 3);
        // identical configs give identical points
        assert_eq!(sweep.entries[0].report.sen, sweep.entries[2].report.sen);
        assert_eq!(sweep.entries[0].report.apt, sweep.entries[2].report.apt);
    }
}
