//! gen-shapes, gen-tasks and gen-finetune.

use anchorkit::shapegen::{
    generate_maze, generate_squiggle, render_scene, EntityPlacement, Family, KnownShapeRegistry, Label, SceneSpec,
    ShapeGeometry, ShapeProvenance, PALETTE,
};
use anchorkit::taskforge::{
    build_correspondence_instance, build_name_teaching_set, image_path_for, train_seeds, NameSet,
    TASK_FINETUNE_COMPLEXITY,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{GenFinetuneConfig, GenShapesConfig, GenTasksConfig};
use crate::failure::Failure;
use crate::output::OutDir;

fn render_to(out: &OutDir, scene: &SceneSpec, seed: u64) -> Result<String, Failure> {
    let rel = image_path_for(scene, seed);
    let png = render_scene(scene, seed)?.to_png()?;
    out.write(&rel, png)?;
    Ok(rel)
}

#[derive(Serialize)]
struct ShapeLine {
    provenance: ShapeProvenance,
    image: String,
}

pub fn gen_shapes(cfg: &GenShapesConfig, out: &OutDir) -> Result<usize, Failure> {
    let shapes: Vec<ShapeGeometry> = match cfg.family {
        Family::Known => {
            let registry = KnownShapeRegistry::with_names(&cfg.known_shapes)?;
            registry
                .names()
                .into_iter()
                .map(|n| registry.get(n))
                .collect::<Result<_, _>>()?
        }
        family => {
            let jobs: Vec<(u32, u64)> = cfg
                .complexity
                .iter()
                .flat_map(|&n| (0..cfg.count).map(move |i| (n, cfg.seed.wrapping_add(i))))
                .collect();
            jobs.par_iter()
                .map(|&(n, s)| match family {
                    Family::Maze => generate_maze(s, n),
                    _ => generate_squiggle(s, n),
                })
                .collect::<Result<_, _>>()?
        }
    };
    let c = cfg.canvas_px as f64;
    let lines: Vec<ShapeLine> = shapes
        .par_iter()
        .enumerate()
        .map(|(i, g)| {
            let mut scene = SceneSpec::empty(cfg.canvas_px, cfg.canvas_px);
            scene.supersample_factor = cfg.supersample_factor;
            scene.entities.push(EntityPlacement {
                geometry: g.clone(),
                center_px: [c / 2.0, c / 2.0],
                scale_px: 0.75 * c,
                rotation_rad: 0.0,
                fill_color: PALETTE[i % PALETTE.len()],
                label: Label::None,
            });
            let image = render_to(out, &scene, g.seed)?;
            Ok(ShapeLine {
                provenance: g.provenance(),
                image,
            })
        })
        .collect::<Result<_, Failure>>()?;
    out.write_jsonl("shapes.jsonl", &lines)?;
    Ok(lines.len())
}

pub fn gen_tasks(cfg: &GenTasksConfig, out: &OutDir) -> Result<usize, Failure> {
    let jobs: Vec<(Family, u32, u64)> = if cfg.task_finetune {
        train_seeds(cfg.seed)
            .map(|s| (Family::Squiggle, TASK_FINETUNE_COMPLEXITY, s))
            .collect()
    } else {
        let complexities = match cfg.family {
            Family::Known => vec![cfg.task.complexity_n],
            _ => cfg.complexity.clone(),
        };
        if complexities.is_empty() {
            return Err(Failure::config("no complexity values given"));
        }
        complexities
            .into_iter()
            .flat_map(|n| (0..cfg.count).map(move |i| (cfg.family, n, cfg.seed.wrapping_add(i))))
            .collect()
    };
    let instances = jobs
        .par_iter()
        .map(|&(family, n, seed)| {
            let mut task = cfg.task.clone();
            task.complexity_n = n;
            let built = build_correspondence_instance(family, seed, &task)?;
            render_to(out, &built.ref_scene, seed)?;
            render_to(out, &built.target_scene, seed)?;
            Ok(built.instance)
        })
        .collect::<Result<Vec<_>, Failure>>()?;
    out.write_jsonl("manifest.jsonl", &instances)?;
    Ok(instances.len())
}

pub fn gen_finetune(cfg: &GenFinetuneConfig, out: &OutDir) -> Result<usize, Failure> {
    let examples = build_name_teaching_set(cfg.name_set, cfg.seed, &cfg.teaching)?;
    examples
        .par_iter()
        .map(|e| render_to(out, &e.scene, e.record.render_seed).map(|_| ()))
        .collect::<Result<Vec<()>, Failure>>()?;
    out.write_jsonl("finetune.jsonl", examples.iter().map(|e| e.record.line()))?;
    out.write_jsonl("finetune_records.jsonl", examples.iter().map(|e| &e.record))?;
    let names = NameSet::assign(cfg.name_set, &cfg.teaching.squiggle_seeds, cfg.seed)?;
    out.write_json("name_set.json", &names)?;
    Ok(examples.len())
}
