use serde::{Deserialize, Serialize};

use super::font::{GLYPH_H, GLYPH_W};
use super::raster::maze_stroke_px;
use super::{Family, Result, ShapeError, ShapeGeometry};
use crate::geom::{Point, Rect};

pub type Rgb = [u8; 3];

/// High-saturation entity colors, assigned without repetition per image.
pub const PALETTE: [Rgb; 10] = [
    [230, 25, 75],
    [60, 180, 75],
    [0, 110, 220],
    [245, 130, 48],
    [145, 30, 180],
    [0, 170, 200],
    [240, 50, 230],
    [220, 180, 0],
    [0, 128, 128],
    [128, 0, 0],
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "REF")]
    Ref,
    A,
    B,
    C,
    D,
    #[serde(rename = "none")]
    None,
}

impl Label {
    pub fn text(&self) -> &'static str {
        match self {
            Label::Ref => "REF",
            Label::A => "A",
            Label::B => "B",
            Label::C => "C",
            Label::D => "D",
            Label::None => "",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelStyle {
    /// Font pixel to image pixel factor.
    pub glyph_scale: u32,
    pub padding_px: u32,
    /// Distance between the entity box and the badge; holds the leader dot.
    pub gap_px: u32,
    pub dot_diameter_px: f64,
    pub badge_fill: Rgb,
    pub ink: Rgb,
    /// When false the layout is still computed but nothing is drawn.
    pub draw: bool,
}

impl Default for LabelStyle {
    fn default() -> Self {
        Self {
            glyph_scale: 2,
            padding_px: 3,
            gap_px: 6,
            dot_diameter_px: 3.0,
            badge_fill: [255, 255, 255],
            ink: [0, 0, 0],
            draw: true,
        }
    }
}

impl LabelStyle {
    pub fn badge_size(&self, text: &str) -> (u32, u32) {
        let n = text.chars().count() as u32;
        let gs = self.glyph_scale;
        let w = n * GLYPH_W * gs + n.saturating_sub(1) * gs + 2 * self.padding_px;
        let h = GLYPH_H * gs + 2 * self.padding_px;
        (w, h)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityPlacement {
    pub geometry: ShapeGeometry,
    pub center_px: Point,
    /// Canonical unit to pixel factor.
    pub scale_px: f64,
    pub rotation_rad: f64,
    pub fill_color: Rgb,
    pub label: Label,
}

impl EntityPlacement {
    /// Maps a canonical point to image pixels: the canonical center lands on
    /// `center_px`, rotated by `rotation_rad` and scaled by `scale_px`.
    pub fn to_pixel(&self, p: Point) -> Point {
        let (s, c) = self.rotation_rad.sin_cos();
        let dx = (p[0] - 0.5) * self.scale_px;
        let dy = (p[1] - 0.5) * self.scale_px;
        [
            self.center_px[0] + c * dx - s * dy,
            self.center_px[1] + s * dx + c * dy,
        ]
    }

    pub fn outline_px(&self) -> Vec<Point> {
        self.geometry.outline.iter().map(|&p| self.to_pixel(p)).collect()
    }

    /// Drawn extent in pixels, including the maze stroke width.
    pub fn bbox_px(&self) -> Rect {
        let pts = self.geometry.extent_points();
        let r = Rect::bounding(pts.into_iter().map(|p| self.to_pixel(p)))
            .unwrap_or_else(|| Rect::new(self.center_px[0], self.center_px[1], self.center_px[0], self.center_px[1]));
        match self.geometry.family {
            Family::Maze => r.inflate(maze_stroke_px(self) * std::f64::consts::FRAC_1_SQRT_2 + 0.5),
            _ => r,
        }
    }

    pub fn centroid_px(&self) -> Point {
        self.to_pixel(self.geometry.centroid())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub canvas_px: (u32, u32),
    pub entities: Vec<EntityPlacement>,
    pub background_color: Rgb,
    pub supersample_factor: u32,
    pub margin_px: f64,
    pub label_style: LabelStyle,
}

impl SceneSpec {
    pub fn empty(width: u32, height: u32) -> Self {
        Self {
            canvas_px: (width, height),
            entities: Vec::new(),
            background_color: [255, 255, 255],
            supersample_factor: 4,
            margin_px: 16.0,
            label_style: LabelStyle::default(),
        }
    }

    pub fn canvas_rect(&self) -> Rect {
        Rect::new(0.0, 0.0, self.canvas_px.0 as f64, self.canvas_px.1 as f64)
    }

    /// Checks the supersample factor, entity scales, margins and pairwise
    /// disjointness of entity boxes.
    pub fn validate(&self) -> Result<()> {
        if self.supersample_factor == 0 {
            return Err(ShapeError::InvalidParameter {
                name: "supersample_factor",
                value: 0,
                min: 1,
            });
        }
        let inner = self.canvas_rect().inflate(-self.margin_px);
        let boxes: Vec<Rect> = self.entities.iter().map(|e| e.bbox_px()).collect();
        for (i, e) in self.entities.iter().enumerate() {
            if !(e.scale_px > 0.0 && e.scale_px.is_finite()) {
                return Err(ShapeError::Layout {
                    entities: vec![i],
                    reason: format!("scale_px must be positive, got {}", e.scale_px),
                });
            }
            if !inner.contains_rect(&boxes[i]) {
                return Err(ShapeError::Layout {
                    entities: vec![i],
                    reason: format!("entity box {:?} leaves the canvas margin", boxes[i]),
                });
            }
        }
        for i in 0..boxes.len() {
            for j in i + 1..boxes.len() {
                if boxes[i].intersects(&boxes[j]) {
                    return Err(ShapeError::Layout {
                        entities: vec![i, j],
                        reason: "entity boxes overlap".into(),
                    });
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelSide {
    Top,
    Bottom,
    Left,
    Right,
}

/// Resolved position of one label badge, in integer image pixels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelBox {
    pub entity: usize,
    pub label: Label,
    pub side: LabelSide,
    pub badge: Rect,
    pub dot_center: Point,
}

impl LabelBox {
    /// Badge plus leader dot.
    pub fn footprint(&self, dot_radius: f64) -> Rect {
        let d = &self.dot_center;
        self.badge.union(&Rect::new(
            d[0] - dot_radius,
            d[1] - dot_radius,
            d[0] + dot_radius,
            d[1] + dot_radius,
        ))
    }
}

/// Places a badge for every labeled entity on the side of its box that faces
/// the nearest canvas edge, falling back to the other sides in order of edge
/// distance. A badge may not touch any entity box, another badge, or leave
/// the canvas.
pub fn layout_labels(spec: &SceneSpec) -> Result<Vec<LabelBox>> {
    let style = &spec.label_style;
    let (w, h) = (spec.canvas_px.0 as f64, spec.canvas_px.1 as f64);
    let canvas = spec.canvas_rect();
    let boxes: Vec<Rect> = spec.entities.iter().map(|e| e.bbox_px()).collect();
    let gap = style.gap_px as f64;
    let dot_r = style.dot_diameter_px * 0.5;
    let mut placed: Vec<LabelBox> = Vec::new();

    for (i, e) in spec.entities.iter().enumerate() {
        if e.label == Label::None {
            continue;
        }
        let b = boxes[i];
        let (bw, bh) = style.badge_size(e.label.text());
        let (bw, bh) = (bw as f64, bh as f64);
        let mut sides = [
            (b.y0, LabelSide::Top),
            (h - b.y1, LabelSide::Bottom),
            (b.x0, LabelSide::Left),
            (w - b.x1, LabelSide::Right),
        ];
        sides.sort_by(|a, b| a.0.total_cmp(&b.0));
        let [cx, cy] = b.center();
        let clamp_x = |x: f64| x.round().clamp(0.0, (w - bw).max(0.0));
        let clamp_y = |y: f64| y.round().clamp(0.0, (h - bh).max(0.0));

        let mut chosen = None;
        for &(_, side) in &sides {
            let (x0, y0, dot) = match side {
                LabelSide::Top => {
                    let x0 = clamp_x(cx - bw * 0.5);
                    let y0 = (b.y0 - gap).floor() - bh;
                    (x0, y0, [x0 + bw * 0.5, y0 + bh + gap * 0.5])
                }
                LabelSide::Bottom => {
                    let x0 = clamp_x(cx - bw * 0.5);
                    let y0 = (b.y1 + gap).ceil();
                    (x0, y0, [x0 + bw * 0.5, y0 - gap * 0.5])
                }
                LabelSide::Left => {
                    let y0 = clamp_y(cy - bh * 0.5);
                    let x0 = (b.x0 - gap).floor() - bw;
                    (x0, y0, [x0 + bw + gap * 0.5, y0 + bh * 0.5])
                }
                LabelSide::Right => {
                    let y0 = clamp_y(cy - bh * 0.5);
                    let x0 = (b.x1 + gap).ceil();
                    (x0, y0, [x0 - gap * 0.5, y0 + bh * 0.5])
                }
            };
            let candidate = LabelBox {
                entity: i,
                label: e.label,
                side,
                badge: Rect::new(x0, y0, x0 + bw, y0 + bh),
                dot_center: dot,
            };
            let fp = candidate.footprint(dot_r);
            let fits = canvas.contains_rect(&fp)
                && boxes.iter().all(|other| !other.intersects(&fp))
                && placed.iter().all(|p| !p.footprint(dot_r).intersects(&fp));
            if fits {
                chosen = Some(candidate);
                break;
            }
        }
        match chosen {
            Some(lb) => placed.push(lb),
            None => {
                return Err(ShapeError::Layout {
                    entities: vec![i],
                    reason: format!("no room for the {:?} label", e.label.text()),
                })
            }
        }
    }
    Ok(placed)
}
