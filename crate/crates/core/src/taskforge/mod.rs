//! Correspondence MC-VQA instances and finetune datasets.

mod finetune;
mod instance;
mod layout;
mod names;
mod prompts;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{Point, Rect};
use crate::options::OptionLetter;
use crate::shapegen::{Family, Label, Rgb, ShapeError, ShapeProvenance, DEFAULT_KNOWN_SHAPES};
pub use crate::tensorstore::RegionBox;

pub use finetune::{
    build_name_teaching_set, FinetuneExample, FinetuneLine, FinetuneRecord, NameTeachingConfig,
    TaskKind, Augmentation,
};
pub use instance::{
    build_correspondence_instance, build_task_finetune_set, image_path_for, train_seeds, BuiltInstance,
    TASK_FINETUNE_COMPLEXITY, TASK_FINETUNE_COUNT, TRAIN_SEED_BIT,
};
pub use names::{describe_name, NameSet, NameSetKind};
pub use prompts::{
    assistant_prefix, emit_prompts, PromptBundle, PromptMode, COT_SUFFIX, DIRECT_ANSWER_PREFIX,
    QUESTION_TEMPLATE,
};

#[derive(Debug, Error)]
pub enum TaskError {
    #[error(transparent)]
    Shape(#[from] ShapeError),
    #[error("layout failed after {attempts} attempts: {reason}")]
    Layout { attempts: u32, reason: String },
    #[error("unknown name set {0:?} (random, human, ordinary)")]
    UnknownNameSet(String),
    #[error("invalid task config: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, TaskError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Eval,
    Train,
}

impl Split {
    pub fn of_seed(seed: u64) -> Self {
        if seed & TRAIN_SEED_BIT != 0 {
            Split::Train
        } else {
            Split::Eval
        }
    }
}

/// Generation parameters for correspondence instances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TaskConfig {
    /// Anchor count for squiggles, grid size for mazes; ignored for known shapes.
    pub complexity_n: u32,
    pub canvas_px: [u32; 2],
    pub scale_range_px: [f64; 2],
    pub margin_px: f64,
    pub supersample_factor: u32,
    pub region_side_px: u32,
    /// Relative scale jitter of the re-posed ground-truth entity.
    pub gt_scale_jitter: f64,
    /// Give the ground-truth entity a new color in the target image.
    pub recolor_gt: bool,
    pub annotations_rendered: bool,
    pub max_layout_retries: u32,
    pub known_shapes: Vec<String>,
}

impl Default for TaskConfig {
    fn default() -> Self {
        Self {
            complexity_n: 30,
            canvas_px: [512, 512],
            scale_range_px: [90.0, 130.0],
            margin_px: 16.0,
            supersample_factor: 4,
            region_side_px: crate::tensorstore::DEFAULT_REGION_SIDE_PX,
            gt_scale_jitter: 0.15,
            recolor_gt: false,
            annotations_rendered: true,
            max_layout_retries: 400,
            known_shapes: DEFAULT_KNOWN_SHAPES.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl TaskConfig {
    pub fn with_complexity(n: u32) -> Self {
        Self {
            complexity_n: n,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let [lo, hi] = self.scale_range_px;
        if !(lo > 0.0 && lo <= hi) {
            return Err(TaskError::Config(format!("scale_range_px {lo}..{hi} is empty or non-positive")));
        }
        if self.supersample_factor == 0 {
            return Err(TaskError::Config("supersample_factor must be at least 1".into()));
        }
        if self.known_shapes.len() < 4 {
            return Err(TaskError::Config("need at least 4 known shapes".into()));
        }
        if !(0.0..1.0).contains(&self.gt_scale_jitter) {
            return Err(TaskError::Config("gt_scale_jitter must be in [0, 1)".into()));
        }
        let side = self.region_side_px;
        if side == 0 || side * 2 > self.canvas_px[0].min(self.canvas_px[1]) {
            return Err(TaskError::Config(format!("region_side_px {side} does not fit the canvas")));
        }
        Ok(())
    }
}

/// Where and how one entity was drawn, without pixel data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityDescriptor {
    pub role: Label,
    /// 0 for the reference image, 1 for the target image.
    pub image_idx: u32,
    pub provenance: ShapeProvenance,
    pub center_px: Point,
    pub scale_px: f64,
    pub rotation_rad: f64,
    pub fill_color: Rgb,
    pub bbox_px: Rect,
    pub centroid_px: Point,
}

/// One multiple-choice correspondence question over two images.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrespondenceInstance {
    pub instance_id: String,
    pub family: Family,
    pub complexity_n: u32,
    pub seed: u64,
    pub split: Split,
    pub canvas_px: [u32; 2],
    pub ref_image: String,
    pub target_image: String,
    pub ref_region: RegionBox,
    pub option_regions: BTreeMap<OptionLetter, RegionBox>,
    pub ground_truth: OptionLetter,
    pub entity_descriptors: Vec<EntityDescriptor>,
    pub prompt_bundle: PromptBundle,
    pub annotations_rendered: bool,
}

impl CorrespondenceInstance {
    pub fn reference(&self) -> Option<&EntityDescriptor> {
        self.entity_descriptors.iter().find(|e| e.role == Label::Ref)
    }

    pub fn option(&self, letter: OptionLetter) -> Option<&EntityDescriptor> {
        let label = option_label(letter);
        self.entity_descriptors.iter().find(|e| e.role == label && e.image_idx == 1)
    }

    /// Target-image options whose shape provenance equals the reference's.
    pub fn provenance_matches(&self) -> Vec<OptionLetter> {
        let Some(r) = self.reference() else { return Vec::new() };
        OptionLetter::ALL
            .into_iter()
            .filter(|&l| self.option(l).is_some_and(|e| e.provenance == r.provenance))
            .collect()
    }

    /// Checks the structural invariants of an instance.
    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.option_regions.len() != 4 {
            return Err(format!("{} option regions, expected 4", self.option_regions.len()));
        }
        let matches = self.provenance_matches();
        if matches != [self.ground_truth] {
            return Err(format!(
                "provenance matches {matches:?}, expected exactly [{}]",
                self.ground_truth
            ));
        }
        let [w, h] = self.canvas_px;
        let bounds = Rect::new(0.0, 0.0, w as f64, h as f64);
        for r in std::iter::once(&self.ref_region).chain(self.option_regions.values()) {
            if !bounds.contains_rect(&r.rect()) {
                return Err(format!("region {r:?} leaves the image"));
            }
        }
        if !self.prompt_bundle.is_well_formed() {
            return Err("malformed prompt bundle".into());
        }
        Ok(())
    }
}

pub fn option_label(letter: OptionLetter) -> Label {
    match letter {
        OptionLetter::A => Label::A,
        OptionLetter::B => Label::B,
        OptionLetter::C => Label::C,
        OptionLetter::D => Label::D,
    }
}
