use std::f64::consts::{FRAC_PI_2, TAU};

use super::{Family, Result, ShapeError, ShapeGeometry};
use crate::geom::Point;

pub const DEFAULT_KNOWN_SHAPES: [&str; 10] = [
    "square", "circle", "star", "triangle", "pentagon", "hexagon", "heart", "cross", "diamond",
    "arrow",
];

const CIRCLE_SAMPLES: usize = 128;
const HEART_SAMPLES: usize = 128;

/// Named closed outlines. The default registry holds the ten built-in
/// shapes; callers may restrict it or register additional outlines.
#[derive(Debug, Clone)]
pub struct KnownShapeRegistry {
    shapes: Vec<(String, Vec<Point>)>,
}

impl Default for KnownShapeRegistry {
    fn default() -> Self {
        Self {
            shapes: DEFAULT_KNOWN_SHAPES
                .iter()
                .map(|&name| (name.to_string(), builtin_outline(name).expect("builtin")))
                .collect(),
        }
    }
}

impl KnownShapeRegistry {
    /// Built-in shapes restricted to (and ordered as) `names`.
    pub fn with_names<S: AsRef<str>>(names: &[S]) -> Result<Self> {
        let mut shapes = Vec::with_capacity(names.len());
        for name in names {
            let name = name.as_ref();
            let outline = builtin_outline(name).ok_or_else(|| ShapeError::UnknownShape {
                name: name.to_string(),
                valid: DEFAULT_KNOWN_SHAPES.iter().map(|s| s.to_string()).collect(),
            })?;
            shapes.push((name.to_string(), outline));
        }
        Ok(Self { shapes })
    }

    /// Adds or replaces a named outline. Points are closed automatically.
    pub fn register(&mut self, name: &str, mut outline: Vec<Point>) {
        if outline.first() != outline.last() {
            if let Some(&p) = outline.first() {
                outline.push(p);
            }
        }
        match self.shapes.iter_mut().find(|(n, _)| n == name) {
            Some(slot) => slot.1 = outline,
            None => self.shapes.push((name.to_string(), outline)),
        }
    }

    pub fn names(&self) -> Vec<&str> {
        self.shapes.iter().map(|(n, _)| n.as_str()).collect()
    }

    pub fn len(&self) -> usize {
        self.shapes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shapes.is_empty()
    }

    pub fn get(&self, name: &str) -> Result<ShapeGeometry> {
        let (_, outline) = self
            .shapes
            .iter()
            .find(|(n, _)| n == name)
            .ok_or_else(|| ShapeError::UnknownShape {
                name: name.to_string(),
                valid: self.names().iter().map(|s| s.to_string()).collect(),
            })?;
        Ok(ShapeGeometry {
            family: Family::Known,
            canonical_name: Some(name.to_string()),
            seed: 0,
            complexity_n: 0,
            outline: outline.clone(),
            closed: true,
            wall_segments: Vec::new(),
        })
    }
}

/// Canonical outline of one of the ten built-in shapes.
pub fn known_shape(name: &str) -> Result<ShapeGeometry> {
    match builtin_outline(name) {
        Some(outline) => Ok(ShapeGeometry {
            family: Family::Known,
            canonical_name: Some(name.to_string()),
            seed: 0,
            complexity_n: 0,
            outline,
            closed: true,
            wall_segments: Vec::new(),
        }),
        None => Err(ShapeError::UnknownShape {
            name: name.to_string(),
            valid: DEFAULT_KNOWN_SHAPES.iter().map(|s| s.to_string()).collect(),
        }),
    }
}

fn close(mut pts: Vec<Point>) -> Vec<Point> {
    pts.push(pts[0]);
    pts
}

/// Regular polygon of circumradius 0.5 about the center, first vertex up.
fn regular(sides: usize) -> Vec<Point> {
    close(
        (0..sides)
            .map(|k| {
                let a = -FRAC_PI_2 + TAU * k as f64 / sides as f64;
                [0.5 + 0.5 * a.cos(), 0.5 + 0.5 * a.sin()]
            })
            .collect(),
    )
}

fn builtin_outline(name: &str) -> Option<Vec<Point>> {
    let third = 1.0 / 3.0;
    let two_thirds = 2.0 / 3.0;
    let pts = match name {
        "square" => close(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]),
        "circle" => close(
            (0..CIRCLE_SAMPLES)
                .map(|k| {
                    let a = TAU * k as f64 / CIRCLE_SAMPLES as f64;
                    [0.5 + 0.5 * a.cos(), 0.5 + 0.5 * a.sin()]
                })
                .collect(),
        ),
        "star" => close(
            (0..10)
                .map(|k| {
                    let r = if k % 2 == 0 { 0.5 } else { 0.2 };
                    let a = -FRAC_PI_2 + TAU * k as f64 / 10.0;
                    [0.5 + r * a.cos(), 0.5 + r * a.sin()]
                })
                .collect(),
        ),
        "triangle" => regular(3),
        "pentagon" => regular(5),
        "hexagon" => regular(6),
        "heart" => heart(),
        "cross" => close(vec![
            [third, 0.0],
            [two_thirds, 0.0],
            [two_thirds, third],
            [1.0, third],
            [1.0, two_thirds],
            [two_thirds, two_thirds],
            [two_thirds, 1.0],
            [third, 1.0],
            [third, two_thirds],
            [0.0, two_thirds],
            [0.0, third],
            [third, third],
        ]),
        "diamond" => close(vec![[0.5, 0.0], [0.85, 0.5], [0.5, 1.0], [0.15, 0.5]]),
        "arrow" => close(vec![
            [0.0, 0.35],
            [0.55, 0.35],
            [0.55, 0.1],
            [1.0, 0.5],
            [0.55, 0.9],
            [0.55, 0.65],
            [0.0, 0.65],
        ]),
        _ => return None,
    };
    Some(pts)
}

/// Classic parametric heart, flipped to y-down and fitted to the unit square.
fn heart() -> Vec<Point> {
    let raw: Vec<Point> = (0..HEART_SAMPLES)
        .map(|k| {
            let t = TAU * k as f64 / HEART_SAMPLES as f64;
            let x = 16.0 * t.sin().powi(3);
            let y = 13.0 * t.cos() - 5.0 * (2.0 * t).cos() - 2.0 * (3.0 * t).cos() - (4.0 * t).cos();
            [x, -y]
        })
        .collect();
    let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
    for [x, y] in &raw {
        x0 = x0.min(*x);
        y0 = y0.min(*y);
        x1 = x1.max(*x);
        y1 = y1.max(*y);
    }
    let s = 1.0 / (x1 - x0).max(y1 - y0);
    let (ox, oy) = ((1.0 - (x1 - x0) * s) * 0.5, (1.0 - (y1 - y0) * s) * 0.5);
    close(
        raw.iter()
            .map(|[x, y]| {
                [
                    ((x - x0) * s + ox).clamp(0.0, 1.0),
                    ((y - y0) * s + oy).clamp(0.0, 1.0),
                ]
            })
            .collect(),
    )
}
