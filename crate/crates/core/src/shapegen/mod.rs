//! Procedural shapes (known shapes, squiggles, mazes) and the supersampled
//! scene rasterizer.

mod font;
mod known;
mod maze;
mod raster;
mod scene;
pub mod spline;
mod squiggle;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{polygon_centroid, Point, Segment};

pub use known::{known_shape, KnownShapeRegistry, DEFAULT_KNOWN_SHAPES};
pub use maze::{generate_maze, maze_passages};
pub use raster::{maze_stroke_px, render_scene, render_scene_with_labels, scene_digest, RasterImage};
pub use scene::{
    layout_labels, EntityPlacement, Label, LabelBox, LabelSide, LabelStyle, Rgb, SceneSpec,
    PALETTE,
};
pub use squiggle::{
    generate_squiggle, MIN_SQUIGGLE_ANCHORS, SQUIGGLE_RADIUS_MAX, SQUIGGLE_RADIUS_MIN,
};

/// Spline samples per anchor interval for squiggle outlines.
pub const SAMPLES_PER_SPAN: usize = 16;

#[derive(Debug, Error)]
pub enum ShapeError {
    #[error("invalid parameter {name}={value}: must be at least {min}")]
    InvalidParameter {
        name: &'static str,
        value: u64,
        min: u64,
    },
    #[error("unknown shape {name:?}; valid names: {}", valid.join(", "))]
    UnknownShape { name: String, valid: Vec<String> },
    #[error("layout error (entities {entities:?}): {reason}")]
    Layout { entities: Vec<usize>, reason: String },
    #[error("png encoding failed: {0}")]
    Png(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, ShapeError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Known,
    Squiggle,
    Maze,
}

impl Family {
    pub fn as_str(&self) -> &'static str {
        match self {
            Family::Known => "known",
            Family::Squiggle => "squiggle",
            Family::Maze => "maze",
        }
    }
}

impl std::str::FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "known" => Ok(Family::Known),
            "squiggle" => Ok(Family::Squiggle),
            "maze" => Ok(Family::Maze),
            other => Err(format!("unknown family {other:?} (known, squiggle, maze)")),
        }
    }
}

/// Resolution-independent shape in unit-square canonical coordinates.
///
/// Closed outlines repeat their first point as the last one. Mazes carry no
/// outline; their geometry is entirely in `wall_segments`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeGeometry {
    pub family: Family,
    pub canonical_name: Option<String>,
    pub seed: u64,
    pub complexity_n: u32,
    pub outline: Vec<Point>,
    pub closed: bool,
    pub wall_segments: Vec<Segment>,
}

/// What identifies a shape up to pose: two entities showing the same
/// provenance show the same shape.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ShapeProvenance {
    pub family: Family,
    pub canonical_name: Option<String>,
    pub seed: u64,
    pub complexity_n: u32,
}

impl ShapeProvenance {
    /// Regenerates the geometry with the built-in registry.
    pub fn generate(&self) -> Result<ShapeGeometry> {
        match self.family {
            Family::Squiggle => generate_squiggle(self.seed, self.complexity_n),
            Family::Maze => generate_maze(self.seed, self.complexity_n),
            Family::Known => known_shape(self.canonical_name.as_deref().unwrap_or("")),
        }
    }
}

impl ShapeGeometry {
    pub fn provenance(&self) -> ShapeProvenance {
        ShapeProvenance {
            family: self.family,
            canonical_name: self.canonical_name.clone(),
            seed: self.seed,
            complexity_n: self.complexity_n,
        }
    }

    /// Spline anchors of a squiggle (every `SAMPLES_PER_SPAN`-th outline point).
    pub fn anchors(&self) -> Vec<Point> {
        match self.family {
            Family::Squiggle => self
                .outline
                .iter()
                .step_by(SAMPLES_PER_SPAN)
                .take(self.complexity_n as usize)
                .copied()
                .collect(),
            _ => Vec::new(),
        }
    }

    /// Every point that contributes to the drawn extent.
    pub fn extent_points(&self) -> Vec<Point> {
        let mut pts = self.outline.clone();
        for [a, b] in &self.wall_segments {
            pts.push(*a);
            pts.push(*b);
        }
        pts
    }

    pub fn centroid(&self) -> Point {
        match self.family {
            Family::Maze => [0.5, 0.5],
            _ => {
                let ring = match self.outline.split_last() {
                    Some((last, rest)) if self.closed && Some(last) == rest.first() => rest,
                    _ => &self.outline[..],
                };
                polygon_centroid(ring).unwrap_or([0.5, 0.5])
            }
        }
    }
}
