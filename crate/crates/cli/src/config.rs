//! Declarative run configuration. A TOML file holds one optional table per
//! subcommand; command-line flags override it.

use std::path::{Path, PathBuf};

use anchorkit::lenskit::{NormMode, RegionMode};
use anchorkit::probekit::Aggregation;
use anchorkit::scorer::ReportFormat;
use anchorkit::shapegen::Family;
use anchorkit::taskforge::{NameSetKind, NameTeachingConfig, TaskConfig};
use serde::{Deserialize, Serialize};

use crate::failure::{Failure, FailureKind};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: Option<u32>,
    pub gen_shapes: Option<GenShapesConfig>,
    pub gen_tasks: Option<GenTasksConfig>,
    pub gen_finetune: Option<GenFinetuneConfig>,
    pub probe: Option<ProbeConfig>,
    pub lens: Option<LensConfig>,
    pub score: Option<ScoreConfig>,
    pub report: Option<ReportConfig>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::new(FailureKind::Path, format!("{}: {e}", path.display())))?;
        let cfg: RunConfig = toml::from_str(&text)
            .map_err(|e| Failure::new(FailureKind::Config, format!("{}: {e}", path.display())))?;
        match cfg.version {
            None | Some(CONFIG_VERSION) => Ok(cfg),
            Some(v) => Err(Failure::new(
                FailureKind::Config,
                format!("{}: config version {v} is not supported (expected {CONFIG_VERSION})", path.display()),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GenShapesConfig {
    pub family: Family,
    /// Complexity values; ignored for known shapes.
    pub complexity: Vec<u32>,
    pub count: u64,
    pub seed: u64,
    pub canvas_px: u32,
    pub supersample_factor: u32,
    pub known_shapes: Vec<String>,
}

impl Default for GenShapesConfig {
    fn default() -> Self {
        Self {
            family: Family::Squiggle,
            complexity: vec![30],
            count: 10,
            seed: 0,
            canvas_px: 256,
            supersample_factor: 4,
            known_shapes: anchorkit::shapegen::DEFAULT_KNOWN_SHAPES.iter().map(|s| s.to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GenTasksConfig {
    pub family: Family,
    pub complexity: Vec<u32>,
    pub count: u64,
    pub seed: u64,
    /// Emit the 1000-pair squiggle training set instead of evaluation instances.
    pub task_finetune: bool,
    pub task: TaskConfig,
}

impl Default for GenTasksConfig {
    fn default() -> Self {
        Self {
            family: Family::Squiggle,
            complexity: vec![30],
            count: 100,
            seed: 0,
            task_finetune: false,
            task: TaskConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GenFinetuneConfig {
    pub name_set: NameSetKind,
    pub seed: u64,
    pub teaching: NameTeachingConfig,
}

impl Default for GenFinetuneConfig {
    fn default() -> Self {
        Self {
            name_set: NameSetKind::Ordinary,
            seed: 0,
            teaching: NameTeachingConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProbeConfig {
    pub bundles: Option<PathBuf>,
    pub manifest: Option<PathBuf>,
    pub aggregation: Aggregation,
    /// Row labels used when the probe result enters a report.
    pub subset: String,
    pub task: String,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            bundles: None,
            manifest: None,
            aggregation: Aggregation::Mean,
            subset: "all".into(),
            task: "all".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LensConfig {
    pub bundles: Option<PathBuf>,
    pub manifest: Option<PathBuf>,
    pub unembedding: Option<PathBuf>,
    pub norm_mode: NormMode,
    pub region_mode: RegionMode,
    /// Half-open layer range; all layers when absent.
    pub layers: Option<[usize; 2]>,
    /// `instance_id:image:row:col` cells whose per-layer top-1 token is dumped.
    pub trajectory: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScoreConfig {
    pub responses: Vec<PathBuf>,
    /// Filled into records that carry no model_id.
    pub model_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReportConfig {
    pub direct: Vec<PathBuf>,
    pub cot: Vec<PathBuf>,
    pub probe: Vec<PathBuf>,
    pub model_id: Option<String>,
    pub format: ReportFormat,
}

impl Default for ReportConfig {
    fn default() -> Self {
        Self {
            direct: Vec::new(),
            cot: Vec::new(),
            probe: Vec::new(),
            model_id: None,
            format: ReportFormat::Markdown,
        }
    }
}
