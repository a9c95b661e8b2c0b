use std::f64::consts::TAU;

use super::spline::sample_closed;
use super::{Family, Result, ShapeError, ShapeGeometry, SAMPLES_PER_SPAN};
use crate::rng::SplitMix64;

pub const MIN_SQUIGGLE_ANCHORS: u32 = 4;
pub const SQUIGGLE_RADIUS_MIN: f64 = 0.2;
pub const SQUIGGLE_RADIUS_MAX: f64 = 0.5;

/// Closed star-convex blob through `n_anchors` random anchors.
///
/// Anchors are drawn one at a time as (angle in `[0, 2pi)`, radius in
/// `[0.2, 0.5]`) pairs around the canvas center, then ordered by angle and
/// joined by a periodic cubic spline. If the spline overshoots the unit
/// square the whole curve is shrunk uniformly about the center.
pub fn generate_squiggle(seed: u64, n_anchors: u32) -> Result<ShapeGeometry> {
    if n_anchors < MIN_SQUIGGLE_ANCHORS {
        return Err(ShapeError::InvalidParameter {
            name: "n_anchors",
            value: n_anchors as u64,
            min: MIN_SQUIGGLE_ANCHORS as u64,
        });
    }
    let mut rng = SplitMix64::new(seed);
    let mut polar: Vec<(f64, f64)> = (0..n_anchors)
        .map(|_| {
            let angle = rng.uniform(0.0, TAU);
            let radius = rng.uniform(SQUIGGLE_RADIUS_MIN, SQUIGGLE_RADIUS_MAX);
            (angle, radius)
        })
        .collect();
    polar.sort_by(|a, b| a.0.total_cmp(&b.0));
    let anchors: Vec<_> = polar
        .iter()
        .map(|&(a, r)| [0.5 + r * a.cos(), 0.5 + r * a.sin()])
        .collect();

    let mut outline = sample_closed(&anchors, SAMPLES_PER_SPAN);
    let max_dev = outline
        .iter()
        .flat_map(|p| [(p[0] - 0.5).abs(), (p[1] - 0.5).abs()])
        .fold(0.0f64, f64::max);
    if max_dev > 0.5 {
        let f = 0.5 / max_dev;
        for p in &mut outline {
            p[0] = (0.5 + (p[0] - 0.5) * f).clamp(0.0, 1.0);
            p[1] = (0.5 + (p[1] - 0.5) * f).clamp(0.0, 1.0);
        }
    }

    Ok(ShapeGeometry {
        family: Family::Squiggle,
        canonical_name: None,
        seed,
        complexity_n: n_anchors,
        outline,
        closed: true,
        wall_segments: Vec::new(),
    })
}
