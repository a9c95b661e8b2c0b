use std::f64::consts::TAU;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::instance::image_path_for;
use super::layout::{grid_areas, place_entities};
use super::names::{describe_name, NameSet, NameSetKind};
use super::{Result, TaskError};
use crate::rng::SplitMix64;
use crate::shapegen::{generate_squiggle, EntityPlacement, Label, Rgb, SceneSpec, PALETTE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Naming,
    YesNo,
    Choice,
    Comparison,
    Description,
}

impl TaskKind {
    pub const ALL: [TaskKind; 5] = [
        TaskKind::Naming,
        TaskKind::YesNo,
        TaskKind::Choice,
        TaskKind::Comparison,
        TaskKind::Description,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::Naming => "naming",
            TaskKind::YesNo => "yes_no",
            TaskKind::Choice => "choice",
            TaskKind::Comparison => "comparison",
            TaskKind::Description => "description",
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Pose and color applied to one shape of a finetune image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Augmentation {
    pub rotation_rad: f64,
    pub scale_px: f64,
    pub base_color: Rgb,
    /// Per-channel offset added to `base_color` before clamping.
    pub color_jitter: [i16; 3],
}

impl Augmentation {
    pub fn fill_color(&self) -> Rgb {
        let mut c = self.base_color;
        for (ch, d) in c.iter_mut().zip(self.color_jitter) {
            *ch = (*ch as i16 + d).clamp(0, 255) as u8;
        }
        c
    }
}

/// One name-teaching example.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinetuneRecord {
    /// Always exactly one image.
    pub images: Vec<String>,
    pub task_kind: TaskKind,
    pub prompt: String,
    pub target: String,
    /// One entry per shape in the image.
    pub augmentation: Vec<Augmentation>,
    pub name_set: NameSetKind,
    pub squiggle_seed: u64,
    pub render_seed: u64,
}

/// Wire form of a finetune record: exactly the four consumer-facing fields.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FinetuneLine {
    pub images: Vec<String>,
    pub prompt: String,
    pub target: String,
    pub task_kind: TaskKind,
}

impl FinetuneRecord {
    pub fn line(&self) -> FinetuneLine {
        FinetuneLine {
            images: self.images.clone(),
            prompt: self.prompt.clone(),
            target: self.target.clone(),
            task_kind: self.task_kind,
        }
    }
}

/// A record together with the scene its image is rendered from.
#[derive(Debug, Clone, PartialEq)]
pub struct FinetuneExample {
    pub record: FinetuneRecord,
    pub scene: SceneSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NameTeachingConfig {
    /// The ten squiggles that receive names.
    pub squiggle_seeds: Vec<u64>,
    pub complexity_n: u32,
    /// Records emitted per squiggle and task kind.
    pub records_per_task: u32,
    pub canvas_px: [u32; 2],
    pub scale_range_px: [f64; 2],
    pub color_jitter: i16,
    pub margin_px: f64,
    pub supersample_factor: u32,
    pub max_layout_retries: u32,
}

impl Default for NameTeachingConfig {
    fn default() -> Self {
        Self {
            squiggle_seeds: (0..10).map(|i| 0x4E41_4D45_0000 + i).collect(),
            complexity_n: 30,
            records_per_task: 8,
            canvas_px: [512, 512],
            scale_range_px: [60.0, 200.0],
            color_jitter: 40,
            margin_px: 16.0,
            supersample_factor: 4,
            max_layout_retries: 400,
        }
    }
}

fn template(config: &NameTeachingConfig, draw_labels: bool) -> SceneSpec {
    let mut spec = SceneSpec::empty(config.canvas_px[0], config.canvas_px[1]);
    spec.margin_px = config.margin_px;
    spec.supersample_factor = config.supersample_factor;
    spec.label_style.draw = draw_labels;
    spec
}

fn augment(config: &NameTeachingConfig, rng: &mut SplitMix64) -> Augmentation {
    let [lo, hi] = config.scale_range_px;
    let j = config.color_jitter as i64;
    let rotation_rad = rng.uniform(0.0, TAU);
    let scale_px = rng.uniform(lo, hi);
    let base_color = PALETTE[rng.below(PALETTE.len() as u64) as usize];
    let mut color_jitter = [0i16; 3];
    for c in &mut color_jitter {
        *c = (rng.below((2 * j + 1) as u64) as i64 - j) as i16;
    }
    Augmentation {
        rotation_rad,
        scale_px,
        base_color,
        color_jitter,
    }
}

/// Emits `records_per_task` records of every task kind for every named
/// squiggle. Images hold one shape, or two labeled A and B for the
/// comparison task; no record pairs two images.
pub fn build_name_teaching_set(kind: NameSetKind, seed: u64, config: &NameTeachingConfig) -> Result<Vec<FinetuneExample>> {
    let names = NameSet::assign(kind, &config.squiggle_seeds, seed)?;
    let [lo, hi] = config.scale_range_px;
    if !(lo > 0.0 && lo <= hi) || config.color_jitter < 0 {
        return Err(TaskError::Config("invalid augmentation ranges".into()));
    }
    let shapes = config
        .squiggle_seeds
        .iter()
        .map(|&s| generate_squiggle(s, config.complexity_n))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let mut rng = SplitMix64::derive(seed, 0x4654 ^ kind as u64);
    let mut out = Vec::new();
    let single = grid_areas(config.canvas_px, config.margin_px, 1, 1);

    for si in 0..shapes.len() {
        let squiggle_seed = config.squiggle_seeds[si];
        let name = names.name_of(squiggle_seed).expect("every squiggle is named").to_string();
        for task_kind in TaskKind::ALL {
            for _ in 0..config.records_per_task {
                let render_seed = rng.next_u64();
                let other = {
                    let k = rng.below(shapes.len() as u64 - 1) as usize;
                    if k >= si { k + 1 } else { k }
                };
                let other_name = names.name_of(config.squiggle_seeds[other]).expect("named").to_string();
                let aug = augment(config, &mut rng);
                let entity = |a: &Augmentation, idx: usize, label: Label| EntityPlacement {
                    geometry: shapes[idx].clone(),
                    center_px: [0.0, 0.0],
                    scale_px: a.scale_px,
                    rotation_rad: a.rotation_rad,
                    fill_color: a.fill_color(),
                    label,
                };

                let (prompt, target, entities, augs, areas, labels) = match task_kind {
                    TaskKind::Naming => (
                        "What is this shape called?".to_string(),
                        name.clone(),
                        vec![entity(&aug, si, Label::None)],
                        vec![aug],
                        single.clone(),
                        false,
                    ),
                    TaskKind::YesNo => {
                        let yes = rng.below(2) == 0;
                        let asked = if yes { &name } else { &other_name };
                        (
                            format!("Is this a {asked}?"),
                            if yes { "Yes." } else { "No." }.to_string(),
                            vec![entity(&aug, si, Label::None)],
                            vec![aug],
                            single.clone(),
                            false,
                        )
                    }
                    TaskKind::Choice => {
                        let mut pool: Vec<&str> = names.names.iter().map(String::as_str).filter(|n| *n != name).collect();
                        rng.shuffle(&mut pool);
                        let mut choices = vec![name.as_str(), pool[0], pool[1], pool[2]];
                        rng.shuffle(&mut choices);
                        (
                            format!("Which of the following: {}?", choices.join(", ")),
                            name.clone(),
                            vec![entity(&aug, si, Label::None)],
                            vec![aug],
                            single.clone(),
                            false,
                        )
                    }
                    TaskKind::Comparison => {
                        let aug2 = augment(config, &mut rng);
                        let named_is_a = rng.below(2) == 0;
                        let (la, lb) = if named_is_a { (Label::A, Label::B) } else { (Label::B, Label::A) };
                        let mut areas = grid_areas(config.canvas_px, config.margin_px, 2, 1);
                        rng.shuffle(&mut areas);
                        (
                            format!("Which object is the {name}, A or B?"),
                            if named_is_a { "A" } else { "B" }.to_string(),
                            vec![entity(&aug, si, la), entity(&aug2, other, lb)],
                            vec![aug, aug2],
                            areas,
                            true,
                        )
                    }
                    TaskKind::Description => (
                        format!("Can you describe the shape called {name}?"),
                        describe_name(&name),
                        vec![entity(&aug, si, Label::None)],
                        vec![aug],
                        single.clone(),
                        false,
                    ),
                };
                let scene = place_entities(&template(config, labels), entities, &areas, &mut rng, config.max_layout_retries)?;
                let record = FinetuneRecord {
                    images: vec![image_path_for(&scene, render_seed)],
                    task_kind,
                    prompt,
                    target,
                    augmentation: augs,
                    name_set: kind,
                    squiggle_seed,
                    render_seed,
                };
                out.push(FinetuneExample { record, scene });
            }
        }
    }
    Ok(out)
}
