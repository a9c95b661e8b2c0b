//! Scanline rasterizer: even-odd polygon fill at `supersample_factor`x
//! resolution followed by a box downsample.

use std::path::Path;

use super::font::{glyph, lit_cells, GLYPH_W};
use super::scene::{layout_labels, EntityPlacement, LabelBox, Rgb, SceneSpec};
use super::{Family, Result, ShapeError};
use crate::digest::fnv1a64;
use crate::geom::Point;

/// Rendered 8-bit RGB image, rows top to bottom.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RasterImage {
    pub width: u32,
    pub height: u32,
    pub pixels: Vec<u8>,
    /// FNV-1a digest of the `SceneSpec` and seed that produced the image.
    pub provenance: u64,
}

impl RasterImage {
    pub fn pixel(&self, x: u32, y: u32) -> Rgb {
        let i = ((y * self.width + x) * 3) as usize;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    pub fn to_png(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        {
            let mut enc = png::Encoder::new(&mut out, self.width, self.height);
            enc.set_color(png::ColorType::Rgb);
            enc.set_depth(png::BitDepth::Eight);
            let mut w = enc.write_header().map_err(|e| ShapeError::Png(e.to_string()))?;
            w.write_image_data(&self.pixels)
                .map_err(|e| ShapeError::Png(e.to_string()))?;
        }
        Ok(out)
    }

    pub fn write_png(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_png()?)?;
        Ok(())
    }
}

/// Maze wall width in image pixels.
pub fn maze_stroke_px(e: &EntityPlacement) -> f64 {
    let n = e.geometry.complexity_n.max(1) as f64;
    (0.12 * e.scale_px / n).max(1.5)
}

struct Canvas {
    w: usize,
    h: usize,
    data: Vec<u8>,
}

impl Canvas {
    fn new(w: usize, h: usize, bg: Rgb) -> Self {
        let mut data = Vec::with_capacity(w * h * 3);
        for _ in 0..w * h {
            data.extend_from_slice(&bg);
        }
        Self { w, h, data }
    }

    #[inline]
    fn set(&mut self, x: usize, y: usize, c: Rgb) {
        let i = (y * self.w + x) * 3;
        self.data[i..i + 3].copy_from_slice(&c);
    }

    /// Even-odd fill; a pixel is inside when its center is.
    fn fill_polygon(&mut self, pts: &[Point], color: Rgb) {
        if pts.len() < 3 {
            return;
        }
        let mut edges: Vec<(Point, Point)> = pts.windows(2).map(|w| (w[0], w[1])).collect();
        if pts.first() != pts.last() {
            edges.push((pts[pts.len() - 1], pts[0]));
        }
        let (mut ymin, mut ymax) = (f64::MAX, f64::MIN);
        for p in pts {
            ymin = ymin.min(p[1]);
            ymax = ymax.max(p[1]);
        }
        let row0 = (ymin.floor().max(0.0)) as usize;
        let row1 = (ymax.ceil().min(self.h as f64)).max(0.0) as usize;
        let mut xs: Vec<f64> = Vec::new();
        for y in row0..row1 {
            let yc = y as f64 + 0.5;
            xs.clear();
            for (a, b) in &edges {
                if (a[1] <= yc && yc < b[1]) || (b[1] <= yc && yc < a[1]) {
                    xs.push(a[0] + (yc - a[1]) * (b[0] - a[0]) / (b[1] - a[1]));
                }
            }
            xs.sort_by(f64::total_cmp);
            for pair in xs.chunks_exact(2) {
                let start = (pair[0] - 0.5).ceil().max(0.0) as usize;
                let end = ((pair[1] - 0.5).ceil().min(self.w as f64)).max(0.0) as usize;
                for x in start..end {
                    self.set(x, y, color);
                }
            }
        }
    }

    fn fill_rect(&mut self, x0: f64, y0: f64, x1: f64, y1: f64, color: Rgb) {
        let cx0 = x0.round().clamp(0.0, self.w as f64) as usize;
        let cx1 = x1.round().clamp(0.0, self.w as f64) as usize;
        let cy0 = y0.round().clamp(0.0, self.h as f64) as usize;
        let cy1 = y1.round().clamp(0.0, self.h as f64) as usize;
        for y in cy0..cy1 {
            for x in cx0..cx1 {
                self.set(x, y, color);
            }
        }
    }

    fn fill_disc(&mut self, c: Point, r: f64, color: Rgb) {
        let y0 = (c[1] - r).floor().max(0.0) as usize;
        let y1 = ((c[1] + r).ceil().min(self.h as f64)).max(0.0) as usize;
        let x0 = (c[0] - r).floor().max(0.0) as usize;
        let x1 = ((c[0] + r).ceil().min(self.w as f64)).max(0.0) as usize;
        for y in y0..y1 {
            for x in x0..x1 {
                let dx = x as f64 + 0.5 - c[0];
                let dy = y as f64 + 0.5 - c[1];
                if dx * dx + dy * dy <= r * r {
                    self.set(x, y, color);
                }
            }
        }
    }

    fn downsample(&self, factor: usize) -> Vec<u8> {
        let (ow, oh) = (self.w / factor, self.h / factor);
        let n = (factor * factor) as u32;
        let mut out = vec![0u8; ow * oh * 3];
        for oy in 0..oh {
            for ox in 0..ow {
                let mut sum = [0u32; 3];
                for sy in 0..factor {
                    let row = (oy * factor + sy) * self.w;
                    for sx in 0..factor {
                        let i = (row + ox * factor + sx) * 3;
                        sum[0] += self.data[i] as u32;
                        sum[1] += self.data[i + 1] as u32;
                        sum[2] += self.data[i + 2] as u32;
                    }
                }
                let o = (oy * ow + ox) * 3;
                for ch in 0..3 {
                    out[o + ch] = ((sum[ch] + n / 2) / n) as u8;
                }
            }
        }
        out
    }
}

fn draw_entity(canvas: &mut Canvas, e: &EntityPlacement, ss: f64) {
    let to_hi = |p: Point| {
        let q = e.to_pixel(p);
        [q[0] * ss, q[1] * ss]
    };
    match e.geometry.family {
        Family::Maze => {
            let hw = maze_stroke_px(e) * ss * 0.5;
            for [a, b] in &e.geometry.wall_segments {
                let (a, b) = (to_hi(*a), to_hi(*b));
                let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
                let len = (dx * dx + dy * dy).sqrt();
                if len == 0.0 {
                    continue;
                }
                let (ux, uy) = (dx / len * hw, dy / len * hw);
                let (nx, ny) = (-uy, ux);
                let a2 = [a[0] - ux, a[1] - uy];
                let b2 = [b[0] + ux, b[1] + uy];
                let quad = [
                    [a2[0] + nx, a2[1] + ny],
                    [b2[0] + nx, b2[1] + ny],
                    [b2[0] - nx, b2[1] - ny],
                    [a2[0] - nx, a2[1] - ny],
                ];
                canvas.fill_polygon(&quad, e.fill_color);
            }
        }
        _ => {
            let pts: Vec<Point> = e.geometry.outline.iter().map(|&p| to_hi(p)).collect();
            canvas.fill_polygon(&pts, e.fill_color);
        }
    }
}

fn draw_label(canvas: &mut Canvas, spec: &SceneSpec, lb: &LabelBox, ss: f64) {
    let st = &spec.label_style;
    let b = &lb.badge;
    canvas.fill_rect(b.x0 * ss, b.y0 * ss, b.x1 * ss, b.y1 * ss, st.ink);
    canvas.fill_rect(
        (b.x0 + 1.0) * ss,
        (b.y0 + 1.0) * ss,
        (b.x1 - 1.0) * ss,
        (b.y1 - 1.0) * ss,
        st.badge_fill,
    );
    let gs = st.glyph_scale as f64;
    let pad = st.padding_px as f64;
    for (k, ch) in lb.label.text().chars().enumerate() {
        let Some(rows) = glyph(ch) else { continue };
        let ox = b.x0 + pad + k as f64 * (GLYPH_W as f64 + 1.0) * gs;
        let oy = b.y0 + pad;
        for (c, r) in lit_cells(rows) {
            let x = ox + c as f64 * gs;
            let y = oy + r as f64 * gs;
            canvas.fill_rect(x * ss, y * ss, (x + gs) * ss, (y + gs) * ss, st.ink);
        }
    }
    canvas.fill_disc(
        [lb.dot_center[0] * ss, lb.dot_center[1] * ss],
        st.dot_diameter_px * 0.5 * ss,
        st.ink,
    );
}

/// Renders a validated scene. Equal `(spec, seed)` give byte-identical output.
pub fn render_scene(spec: &SceneSpec, seed: u64) -> Result<RasterImage> {
    render_scene_with_labels(spec, seed).map(|(img, _)| img)
}

/// Like [`render_scene`], also returning where each label badge went.
pub fn render_scene_with_labels(spec: &SceneSpec, seed: u64) -> Result<(RasterImage, Vec<LabelBox>)> {
    spec.validate()?;
    let labels = layout_labels(spec)?;
    let ss = spec.supersample_factor as usize;
    let (w, h) = (spec.canvas_px.0 as usize, spec.canvas_px.1 as usize);
    let mut canvas = Canvas::new(w * ss, h * ss, spec.background_color);
    for e in &spec.entities {
        draw_entity(&mut canvas, e, ss as f64);
    }
    if spec.label_style.draw {
        for lb in &labels {
            draw_label(&mut canvas, spec, lb, ss as f64);
        }
    }
    let pixels = canvas.downsample(ss);
    let provenance = scene_digest(spec, seed);
    Ok((
        RasterImage {
            width: spec.canvas_px.0,
            height: spec.canvas_px.1,
            pixels,
            provenance,
        },
        labels,
    ))
}

/// FNV-1a digest of the serialized `(spec, seed)` pair; also the image provenance.
pub fn scene_digest(spec: &SceneSpec, seed: u64) -> u64 {
    let bytes = serde_json::to_vec(&(spec, seed)).expect("scene spec serializes");
    fnv1a64(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapegen::{generate_maze, known_shape, Label};

    fn single(name: &str, center: Point, scale: f64, color: Rgb) -> SceneSpec {
        let mut spec = SceneSpec::empty(512, 512);
        spec.entities.push(EntityPlacement {
            geometry: known_shape(name).unwrap(),
            center_px: center,
            scale_px: scale,
            rotation_rad: 0.0,
            fill_color: color,
            label: Label::None,
        });
        spec
    }

    #[test]
    fn empty_scene_is_uniform_background() {
        let mut spec = SceneSpec::empty(64, 48);
        spec.background_color = [10, 20, 30];
        let img = render_scene(&spec, 0).unwrap();
        assert_eq!(img.pixels.len(), 64 * 48 * 3);
        assert!(img.pixels.chunks(3).all(|p| p == [10, 20, 30]));
    }

    #[test]
    fn black_square_interior_and_exterior() {
        let spec = single("square", [256.0, 256.0], 100.0, [0, 0, 0]);
        let img = render_scene(&spec, 0).unwrap();
        assert_eq!(img.pixel(256, 256), [0, 0, 0]);
        assert_eq!(img.pixel(10, 10), [255, 255, 255]);
        // Square spans [206, 306) exactly on pixel boundaries.
        assert_eq!(img.pixel(206, 256), [0, 0, 0]);
        assert_eq!(img.pixel(305, 256), [0, 0, 0]);
        assert_eq!(img.pixel(205, 256), [255, 255, 255]);
        assert_eq!(img.pixel(306, 256), [255, 255, 255]);
    }

    #[test]
    fn half_pixel_offset_square_edge_is_grey() {
        // Left edge at x = 206.5: the edge column is half covered.
        let spec = single("square", [256.5, 256.0], 100.0, [0, 0, 0]);
        let img = render_scene(&spec, 0).unwrap();
        assert_eq!(img.pixel(206, 256), [128, 128, 128]);
    }

    #[test]
    fn rendering_is_deterministic() {
        let mut spec = single("star", [200.0, 220.0], 120.0, [230, 25, 75]);
        spec.entities[0].label = Label::Ref;
        spec.entities[0].rotation_rad = 0.3;
        let a = render_scene(&spec, 5).unwrap();
        let b = render_scene(&spec, 5).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_png().unwrap(), b.to_png().unwrap());
    }

    #[test]
    fn maze_renders_walls() {
        let mut spec = SceneSpec::empty(256, 256);
        spec.entities.push(EntityPlacement {
            geometry: generate_maze(1, 4).unwrap(),
            center_px: [128.0, 128.0],
            scale_px: 120.0,
            rotation_rad: 0.0,
            fill_color: [0, 0, 0],
            label: Label::None,
        });
        let img = render_scene(&spec, 0).unwrap();
        // Outer wall at x = 68 passes through the left border.
        assert_eq!(img.pixel(68, 128), [0, 0, 0]);
        let dark = img.pixels.chunks(3).filter(|p| p[0] < 128).count();
        assert!(dark > 400);
    }

    #[test]
    fn png_roundtrip_decodes() {
        let spec = single("circle", [100.0, 100.0], 80.0, [0, 110, 220]);
        let img = render_scene(&spec, 0).unwrap();
        let bytes = img.to_png().unwrap();
        let dec = png::Decoder::new(std::io::Cursor::new(bytes));
        let mut reader = dec.read_info().unwrap();
        let mut buf = vec![0; reader.output_buffer_size()];
        let info = reader.next_frame(&mut buf).unwrap();
        assert_eq!((info.width, info.height), (512, 512));
        assert_eq!(&buf[..info.buffer_size()], &img.pixels[..]);
    }
}
