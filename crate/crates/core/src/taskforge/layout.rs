use crate::geom::Rect;
use crate::rng::SplitMix64;
use crate::shapegen::{layout_labels, EntityPlacement, SceneSpec};

use super::{Result, TaskError};

/// Failed attempts between each 10% shrink of every entity.
const SHRINK_EVERY: u32 = 50;

/// Splits the area inside the margin into `cols x rows` equal cells.
pub(crate) fn grid_areas(canvas: [u32; 2], margin: f64, cols: usize, rows: usize) -> Vec<Rect> {
    let inner = Rect::new(margin, margin, canvas[0] as f64 - margin, canvas[1] as f64 - margin);
    let (cw, ch) = (inner.width() / cols as f64, inner.height() / rows as f64);
    let mut out = Vec::with_capacity(cols * rows);
    for r in 0..rows {
        for c in 0..cols {
            let x0 = inner.x0 + c as f64 * cw;
            let y0 = inner.y0 + r as f64 * ch;
            out.push(Rect::new(x0, y0, x0 + cw, y0 + ch));
        }
    }
    out
}

/// Positions each entity uniformly inside its area so that the scene
/// validates and every label finds room. Entity scales shrink by 10% after
/// every `SHRINK_EVERY` failed attempts.
pub(crate) fn place_entities(
    template: &SceneSpec,
    entities: Vec<EntityPlacement>,
    areas: &[Rect],
    rng: &mut SplitMix64,
    max_attempts: u32,
) -> Result<SceneSpec> {
    assert_eq!(entities.len(), areas.len());
    let base_scales: Vec<f64> = entities.iter().map(|e| e.scale_px).collect();
    let mut last_reason = String::from("no attempts");
    let mut scene = template.clone();
    scene.entities = entities;

    for attempt in 0..max_attempts {
        let shrink = 0.9f64.powi((attempt / SHRINK_EVERY) as i32);
        let mut ok = true;
        for (i, e) in scene.entities.iter_mut().enumerate() {
            e.scale_px = base_scales[i] * shrink;
            e.center_px = [0.0, 0.0];
            let b = e.bbox_px();
            let area = &areas[i];
            let (xlo, xhi) = (area.x0 - b.x0, area.x1 - b.x1);
            let (ylo, yhi) = (area.y0 - b.y0, area.y1 - b.y1);
            // Draw both coordinates even on failure to keep the stream aligned.
            let (ux, uy) = (rng.next_f64(), rng.next_f64());
            if xlo > xhi || ylo > yhi {
                ok = false;
                last_reason = format!("entity {i} does not fit its area");
                continue;
            }
            e.center_px = [xlo + (xhi - xlo) * ux, ylo + (yhi - ylo) * uy];
        }
        if !ok {
            continue;
        }
        match scene.validate().and_then(|_| layout_labels(&scene)) {
            Ok(_) => return Ok(scene),
            Err(e) => last_reason = e.to_string(),
        }
    }
    Err(TaskError::Layout {
        attempts: max_attempts,
        reason: last_reason,
    })
}
