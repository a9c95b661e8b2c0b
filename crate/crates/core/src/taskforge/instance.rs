use std::collections::BTreeMap;
use std::f64::consts::TAU;

use super::layout::{grid_areas, place_entities};
use super::{
    option_label, CorrespondenceInstance, EntityDescriptor, PromptBundle, RegionBox, Result, Split,
    TaskConfig, TaskError,
};
use crate::options::OptionLetter;
use crate::rng::SplitMix64;
use crate::shapegen::{
    generate_maze, generate_squiggle, EntityPlacement, Family, KnownShapeRegistry, Label, SceneSpec,
    ShapeGeometry, PALETTE,
};

/// Seeds with this bit set belong to the training split; evaluation seeds
/// must leave it clear.
pub const TRAIN_SEED_BIT: u64 = 1 << 63;
pub const TASK_FINETUNE_COUNT: u64 = 1000;
pub const TASK_FINETUNE_COMPLEXITY: u32 = 30;

/// An instance plus the two scenes it is rendered from.
#[derive(Debug, Clone, PartialEq)]
pub struct BuiltInstance {
    pub instance: CorrespondenceInstance,
    pub ref_scene: SceneSpec,
    pub target_scene: SceneSpec,
}

/// Relative PNG path for a scene, addressed by the digest of its `SceneSpec`
/// and render seed (which fully determine the pixels).
pub fn image_path_for(scene: &SceneSpec, seed: u64) -> String {
    let d = crate::shapegen::scene_digest(scene, seed);
    format!("images/{:02x}/{d:016x}.png", d >> 56)
}

fn family_tag(f: Family) -> u64 {
    match f {
        Family::Known => 1,
        Family::Squiggle => 2,
        Family::Maze => 3,
    }
}

fn instance_id(family: Family, n: u32, seed: u64) -> String {
    let prefix = match Split::of_seed(seed) {
        Split::Eval => "",
        Split::Train => "train-",
    };
    format!("{prefix}{}-n{n}-{seed:016x}", family.as_str())
}

/// Four distinct shapes of one family; the first is the reference.
fn draw_shapes(family: Family, config: &TaskConfig, rng: &mut SplitMix64) -> Result<Vec<ShapeGeometry>> {
    match family {
        Family::Known => {
            let registry = KnownShapeRegistry::with_names(&config.known_shapes)?;
            let names = registry.names();
            rng.choose_distinct(names.len(), 4)
                .into_iter()
                .map(|i| registry.get(names[i]).map_err(TaskError::from))
                .collect()
        }
        Family::Squiggle | Family::Maze => {
            let mut seeds: Vec<u64> = Vec::with_capacity(4);
            while seeds.len() < 4 {
                let s = rng.next_u64();
                if !seeds.contains(&s) {
                    seeds.push(s);
                }
            }
            seeds
                .into_iter()
                .map(|s| match family {
                    Family::Squiggle => generate_squiggle(s, config.complexity_n),
                    _ => generate_maze(s, config.complexity_n),
                })
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(TaskError::from)
        }
    }
}

fn scene_template(config: &TaskConfig) -> SceneSpec {
    let mut spec = SceneSpec::empty(config.canvas_px[0], config.canvas_px[1]);
    spec.supersample_factor = config.supersample_factor;
    spec.margin_px = config.margin_px;
    spec.label_style.draw = config.annotations_rendered;
    spec
}

fn descriptor(e: &EntityPlacement, image_idx: u32) -> EntityDescriptor {
    EntityDescriptor {
        role: e.label,
        image_idx,
        provenance: e.geometry.provenance(),
        center_px: e.center_px,
        scale_px: e.scale_px,
        rotation_rad: e.rotation_rad,
        fill_color: e.fill_color,
        bbox_px: e.bbox_px(),
        centroid_px: e.centroid_px(),
    }
}

fn region_at(e: &EntityPlacement, config: &TaskConfig) -> RegionBox {
    let half = config.region_side_px as f64 * 0.5;
    let [cx, cy] = e.centroid_px();
    let clamp = |v: f64, len: u32| v.round().clamp(half, len as f64 - half);
    RegionBox::new(
        [clamp(cx, config.canvas_px[0]), clamp(cy, config.canvas_px[1])],
        config.region_side_px,
    )
}

/// Builds one correspondence instance.
///
/// The reference image shows the reference shape alone, labeled REF. The
/// target image shows it again, re-posed (new position, rotation uniform in
/// `[0, 2pi)`, scale jittered by `gt_scale_jitter`), among three distractors
/// of the same family and complexity, labeled A-D with the ground-truth
/// letter drawn uniformly. Regions are centered on entity centroids.
pub fn build_correspondence_instance(family: Family, seed: u64, config: &TaskConfig) -> Result<BuiltInstance> {
    config.validate()?;
    let mut rng = SplitMix64::derive(seed, family_tag(family));
    let shapes = draw_shapes(family, config, &mut rng)?;
    let colors = rng.choose_distinct(PALETTE.len(), 5);
    let ground_truth = OptionLetter::ALL[rng.below(4) as usize];
    let [smin, smax] = config.scale_range_px;
    let template = scene_template(config);

    let ref_scale = rng.uniform(smin, smax);
    let ref_entity = EntityPlacement {
        geometry: shapes[0].clone(),
        center_px: [0.0, 0.0],
        scale_px: ref_scale,
        rotation_rad: rng.uniform(0.0, TAU),
        fill_color: PALETTE[colors[0]],
        label: Label::Ref,
    };
    let full = grid_areas(config.canvas_px, config.margin_px, 1, 1);
    let ref_scene = place_entities(&template, vec![ref_entity], &full, &mut rng, config.max_layout_retries)?;

    let j = config.gt_scale_jitter;
    let mut distractors = shapes[1..].iter().zip(&colors[1..4]);
    let mut target_entities = Vec::with_capacity(4);
    for letter in OptionLetter::ALL {
        let e = if letter == ground_truth {
            EntityPlacement {
                geometry: shapes[0].clone(),
                center_px: [0.0, 0.0],
                scale_px: ref_scale * rng.uniform(1.0 - j, 1.0 + j),
                rotation_rad: rng.uniform(0.0, TAU),
                fill_color: PALETTE[if config.recolor_gt { colors[4] } else { colors[0] }],
                label: option_label(letter),
            }
        } else {
            let (geometry, &color) = distractors.next().expect("three distractors");
            EntityPlacement {
                geometry: geometry.clone(),
                center_px: [0.0, 0.0],
                scale_px: rng.uniform(smin, smax),
                rotation_rad: rng.uniform(0.0, TAU),
                fill_color: PALETTE[color],
                label: option_label(letter),
            }
        };
        target_entities.push(e);
    }
    let mut quadrants = grid_areas(config.canvas_px, config.margin_px, 2, 2);
    rng.shuffle(&mut quadrants);
    let target_scene = place_entities(&template, target_entities, &quadrants, &mut rng, config.max_layout_retries)?;

    let ref_placed = &ref_scene.entities[0];
    let option_regions: BTreeMap<OptionLetter, RegionBox> = OptionLetter::ALL
        .into_iter()
        .zip(&target_scene.entities)
        .map(|(l, e)| (l, region_at(e, config)))
        .collect();
    let mut entity_descriptors = vec![descriptor(ref_placed, 0)];
    entity_descriptors.extend(target_scene.entities.iter().map(|e| descriptor(e, 1)));

    let complexity_n = match family {
        Family::Known => 0,
        _ => config.complexity_n,
    };
    let instance = CorrespondenceInstance {
        instance_id: instance_id(family, complexity_n, seed),
        family,
        complexity_n,
        seed,
        split: Split::of_seed(seed),
        canvas_px: config.canvas_px,
        ref_image: image_path_for(&ref_scene, seed),
        target_image: image_path_for(&target_scene, seed),
        ref_region: region_at(ref_placed, config),
        option_regions,
        ground_truth,
        entity_descriptors,
        prompt_bundle: PromptBundle::standard(),
        annotations_rendered: config.annotations_rendered,
    };
    Ok(BuiltInstance {
        instance,
        ref_scene,
        target_scene,
    })
}

/// The 1000-pair squiggle training set at complexity 30. Instance seeds
/// carry [`TRAIN_SEED_BIT`], so they never collide with evaluation seeds.
pub fn build_task_finetune_set(seed: u64, config: &TaskConfig) -> Result<Vec<BuiltInstance>> {
    let config = TaskConfig {
        complexity_n: TASK_FINETUNE_COMPLEXITY,
        ..config.clone()
    };
    train_seeds(seed)
        .map(|s| build_correspondence_instance(Family::Squiggle, s, &config))
        .collect()
}

/// Instance seeds of the training set for a given dataset seed.
pub fn train_seeds(seed: u64) -> impl Iterator<Item = u64> {
    (0..TASK_FINETUNE_COUNT)
        .map(move |i| TRAIN_SEED_BIT | (seed.wrapping_mul(TASK_FINETUNE_COUNT).wrapping_add(i) & !TRAIN_SEED_BIT))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn squiggle_instance_structure() {
        let b = build_correspondence_instance(Family::Squiggle, 42, &TaskConfig::with_complexity(30)).unwrap();
        let inst = &b.instance;
        inst.validate().unwrap();
        assert_eq!(b.ref_scene.entities.len(), 1);
        assert_eq!(b.target_scene.entities.len(), 4);
        assert_eq!(inst.provenance_matches(), vec![inst.ground_truth]);
        let provs: BTreeSet<u64> = inst.entity_descriptors[1..].iter().map(|e| e.provenance.seed).collect();
        assert_eq!(provs.len(), 4);
        assert!(inst
            .entity_descriptors
            .iter()
            .all(|e| e.provenance.family == Family::Squiggle && e.provenance.complexity_n == 30));
        assert_eq!(inst.split, Split::Eval);
    }

    #[test]
    fn known_instance_uses_four_distinct_names() {
        let b = build_correspondence_instance(Family::Known, 5, &TaskConfig::default()).unwrap();
        let inst = &b.instance;
        let names: BTreeSet<_> = inst.entity_descriptors[1..]
            .iter()
            .map(|e| e.provenance.canonical_name.clone().unwrap())
            .collect();
        assert_eq!(names.len(), 4);
        let gt = inst.option(inst.ground_truth).unwrap();
        assert_eq!(gt.provenance.canonical_name, inst.reference().unwrap().provenance.canonical_name);
        assert_eq!(inst.complexity_n, 0);
    }

    #[test]
    fn maze_instance_builds() {
        for n in [3, 10] {
            let b = build_correspondence_instance(Family::Maze, 1, &TaskConfig::with_complexity(n)).unwrap();
            b.instance.validate().unwrap();
        }
    }

    #[test]
    fn regions_centered_on_centroids() {
        let b = build_correspondence_instance(Family::Squiggle, 7, &TaskConfig::default()).unwrap();
        for letter in OptionLetter::ALL {
            let r = b.instance.option_regions[&letter];
            let c = b.instance.option(letter).unwrap().centroid_px;
            assert!((r.center_px[0] - c[0]).abs() <= 2.0 && (r.center_px[1] - c[1]).abs() <= 2.0);
        }
    }

    #[test]
    fn gt_color_preserved_unless_recolored() {
        let cfg = TaskConfig::default();
        let b = build_correspondence_instance(Family::Squiggle, 3, &cfg).unwrap();
        let i = &b.instance;
        assert_eq!(i.option(i.ground_truth).unwrap().fill_color, i.reference().unwrap().fill_color);
        let cfg = TaskConfig { recolor_gt: true, ..cfg };
        let b = build_correspondence_instance(Family::Squiggle, 3, &cfg).unwrap();
        let i = &b.instance;
        assert_ne!(i.option(i.ground_truth).unwrap().fill_color, i.reference().unwrap().fill_color);
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let cfg = TaskConfig::default();
        let a = build_correspondence_instance(Family::Squiggle, 11, &cfg).unwrap();
        let b = build_correspondence_instance(Family::Squiggle, 11, &cfg).unwrap();
        assert_eq!(a, b);
        let c = build_correspondence_instance(Family::Squiggle, 12, &cfg).unwrap();
        assert_ne!(a.instance.ref_image, c.instance.ref_image);
    }

    #[test]
    fn train_seeds_are_disjoint_from_eval() {
        let seeds: Vec<u64> = train_seeds(0).collect();
        assert_eq!(seeds.len(), 1000);
        assert!(seeds.iter().all(|s| Split::of_seed(*s) == Split::Train));
        assert!(seeds.iter().all(|s| !(0..1_000_000u64).contains(s)));
        assert_eq!(seeds.iter().collect::<BTreeSet<_>>().len(), 1000);
    }

    #[test]
    fn gt_scale_within_jitter() {
        let cfg = TaskConfig::default();
        for seed in 0..20 {
            let b = build_correspondence_instance(Family::Squiggle, seed, &cfg).unwrap();
            let i = &b.instance;
            let r = i.reference().unwrap().scale_px;
            let g = i.option(i.ground_truth).unwrap().scale_px;
            // Layout may shrink every target entity by 10% steps.
            let ratio = g / r;
            assert!(ratio <= 1.15 + 1e-9, "seed {seed}: {ratio}");
        }
    }
}
