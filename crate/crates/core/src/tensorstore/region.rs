use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{Result, StoreError, TokenGridGeometry};
use crate::geom::{Point, Rect};

pub const DEFAULT_REGION_SIDE_PX: u32 = 30;

/// Square probe region centered on a point of interest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionBox {
    pub center_px: Point,
    pub side_px: u32,
}

impl RegionBox {
    pub fn new(center_px: Point, side_px: u32) -> Self {
        Self { center_px, side_px }
    }

    /// Half-open pixel rectangle `[cx - s/2, cx + s/2)` on both axes.
    pub fn rect(&self) -> Rect {
        let h = self.side_px as f64 * 0.5;
        let [cx, cy] = self.center_px;
        Rect::new(cx - h, cy - h, cx + h, cy + h)
    }
}

/// Grid cells `(row, col)` whose patch rectangle intersects the region.
pub fn region_to_tokens(region: &RegionBox, grid: &TokenGridGeometry) -> Result<BTreeSet<(u32, u32)>> {
    rect_to_tokens(&region.rect(), grid)
}

/// Grid cells whose half-open patch `[c*p, (c+1)*p) x [r*p, (r+1)*p)`
/// intersects the half-open rectangle. Touching edges do not count.
pub fn rect_to_tokens(rect: &Rect, grid: &TokenGridGeometry) -> Result<BTreeSet<(u32, u32)>> {
    let (w, h) = (grid.image_w_px as f64, grid.image_h_px as f64);
    if !(rect.x0 >= 0.0 && rect.y0 >= 0.0 && rect.x1 <= w && rect.y1 <= h) {
        return Err(StoreError::RegionOutOfBounds {
            rect: *rect,
            width: grid.image_w_px,
            height: grid.image_h_px,
        });
    }
    let mut out = BTreeSet::new();
    if rect.x1 <= rect.x0 || rect.y1 <= rect.y0 {
        return Ok(out);
    }
    let p = grid.patch_px as f64;
    let span = |lo: f64, hi: f64, n: u32| {
        let first = ((lo / p).floor() as i64).max(0);
        let last = ((hi / p).ceil() as i64 - 1).min(n as i64 - 1);
        first..=last
    };
    for r in span(rect.y0, rect.y1, grid.grid_rows) {
        for c in span(rect.x0, rect.x1, grid.grid_cols) {
            out.insert((r as u32, c as u32));
        }
    }
    Ok(out)
}

/// Rescales a rectangle given in `from` image pixels to the grid's image
/// size, for models that resize their input.
pub fn rescale_rect(rect: &Rect, from: (u32, u32), grid: &TokenGridGeometry) -> Rect {
    if from == (grid.image_w_px, grid.image_h_px) {
        return *rect;
    }
    let sx = grid.image_w_px as f64 / from.0 as f64;
    let sy = grid.image_h_px as f64 / from.1 as f64;
    Rect::new(rect.x0 * sx, rect.y0 * sy, rect.x1 * sx, rect.y1 * sy)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid37() -> TokenGridGeometry {
        TokenGridGeometry {
            image_idx: 0,
            patch_px: 14,
            grid_rows: 37,
            grid_cols: 37,
            image_w_px: 512,
            image_h_px: 512,
        }
    }

    fn brute(rect: &Rect, g: &TokenGridGeometry) -> BTreeSet<(u32, u32)> {
        let p = g.patch_px as f64;
        let mut s = BTreeSet::new();
        for r in 0..g.grid_rows {
            for c in 0..g.grid_cols {
                let patch = Rect::new(c as f64 * p, r as f64 * p, (c + 1) as f64 * p, (r + 1) as f64 * p);
                if patch.intersects(rect) {
                    s.insert((r, c));
                }
            }
        }
        s
    }

    #[test]
    fn corner_region_covers_three_by_three() {
        let cells = region_to_tokens(&RegionBox::new([15.0, 15.0], 30), &grid37()).unwrap();
        let expected = brute(&Rect::new(0.0, 0.0, 30.0, 30.0), &grid37());
        assert_eq!(expected.len(), 9);
        assert_eq!(cells, expected);
        assert_eq!(cells.iter().next(), Some(&(0, 0)));
        assert_eq!(cells.iter().last(), Some(&(2, 2)));
    }

    #[test]
    fn small_region_inside_one_patch() {
        // Patch (5,5) covers [70, 84); a 10 px box centered at 77 stays inside.
        let cells = region_to_tokens(&RegionBox::new([77.0, 77.0], 10), &grid37()).unwrap();
        assert_eq!(cells, BTreeSet::from([(5, 5)]));
    }

    #[test]
    fn full_image_region_covers_grid() {
        let cells = region_to_tokens(&RegionBox::new([256.0, 256.0], 512), &grid37()).unwrap();
        assert_eq!(cells.len(), 37 * 37);
    }

    #[test]
    fn edge_touch_excluded() {
        // [14, 28) touches patch 0 at x = 14 and patch 2 at x = 28 only.
        let cells = rect_to_tokens(&Rect::new(14.0, 14.0, 28.0, 28.0), &grid37()).unwrap();
        assert_eq!(cells, BTreeSet::from([(1, 1)]));
    }

    #[test]
    fn outside_image_rejected() {
        let err = region_to_tokens(&RegionBox::new([5.0, 100.0], 30), &grid37());
        assert!(matches!(err, Err(StoreError::RegionOutOfBounds { .. })));
    }

    #[test]
    fn rescaling_to_smaller_grid_image() {
        let mut g = grid37();
        g.image_w_px = 256;
        g.image_h_px = 256;
        let r = rescale_rect(&Rect::new(0.0, 0.0, 30.0, 30.0), (512, 512), &g);
        assert_eq!(r, Rect::new(0.0, 0.0, 15.0, 15.0));
    }
}
