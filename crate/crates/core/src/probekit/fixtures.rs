//! Synthetic bundles and instances with known probe outcomes.

use std::collections::BTreeMap;

use crate::options::OptionLetter;
use crate::rng::SplitMix64;
use crate::shapegen::Family;
use crate::taskforge::{CorrespondenceInstance, PromptBundle, RegionBox, Split};
use crate::tensorstore::{HiddenStateBundle, Matrix, TokenGridGeometry, VisualToken};

/// Two square images split into a small token grid. The REF region covers
/// exactly `ref_cell` of image 0 and option X covers exactly
/// `option_cell(X)` of image 1.
#[derive(Debug, Clone, PartialEq)]
pub struct FixtureLayout {
    pub image_px: u32,
    pub patch_px: u32,
    pub hidden_dim: usize,
    pub ref_cell: (u32, u32),
    pub option_cells: [(u32, u32); 4],
}

impl Default for FixtureLayout {
    fn default() -> Self {
        Self {
            image_px: 64,
            patch_px: 16,
            hidden_dim: 8,
            ref_cell: (1, 1),
            option_cells: [(0, 0), (0, 3), (3, 0), (3, 3)],
        }
    }
}

impl FixtureLayout {
    pub fn grid_n(&self) -> u32 {
        self.image_px / self.patch_px
    }

    pub fn option_cell(&self, letter: OptionLetter) -> (u32, u32) {
        self.option_cells[letter.index()]
    }

    /// A region of half a patch centered in `cell`.
    pub fn region(&self, cell: (u32, u32)) -> RegionBox {
        let p = self.patch_px as f64;
        RegionBox::new([(cell.1 as f64 + 0.5) * p, (cell.0 as f64 + 0.5) * p], self.patch_px / 2)
    }

    fn grid(&self, image_idx: u32) -> TokenGridGeometry {
        TokenGridGeometry {
            image_idx,
            patch_px: self.patch_px,
            grid_rows: self.grid_n(),
            grid_cols: self.grid_n(),
            image_w_px: self.image_px,
            image_h_px: self.image_px,
        }
    }
}

/// A bundle whose hidden state at `(layer, image, row, col)` is `f(...)`.
pub fn fixture_bundle(
    layout: &FixtureLayout,
    instance_id: &str,
    layer_count: usize,
    f: impl Fn(usize, u32, u32, u32) -> Vec<f32>,
) -> HiddenStateBundle {
    let n = layout.grid_n();
    let mut index = Vec::new();
    for img in 0..2 {
        for r in 0..n {
            for c in 0..n {
                let seq_pos = 5 + index.len() as u64;
                index.push(VisualToken { image_idx: img, row: r, col: c, seq_pos });
            }
        }
    }
    let layers = (0..layer_count)
        .map(|l| {
            let rows: Vec<Vec<f32>> = index.iter().map(|t| f(l, t.image_idx, t.row, t.col)).collect();
            Matrix::from_rows(layout.hidden_dim, &rows)
        })
        .collect();
    HiddenStateBundle::new(
        "fixture",
        instance_id,
        layout.hidden_dim,
        vec![layout.grid(0), layout.grid(1)],
        index,
        layers,
    )
    .expect("fixture bundle is consistent")
}

/// An instance over the fixture layout with the given ground truth.
pub fn fixture_instance(layout: &FixtureLayout, instance_id: &str, ground_truth: OptionLetter) -> CorrespondenceInstance {
    let option_regions: BTreeMap<OptionLetter, RegionBox> = OptionLetter::ALL
        .into_iter()
        .map(|l| (l, layout.region(layout.option_cell(l))))
        .collect();
    CorrespondenceInstance {
        instance_id: instance_id.to_string(),
        family: Family::Squiggle,
        complexity_n: 30,
        seed: 0,
        split: Split::Eval,
        canvas_px: [layout.image_px, layout.image_px],
        ref_image: String::new(),
        target_image: String::new(),
        ref_region: layout.region(layout.ref_cell),
        option_regions,
        ground_truth,
        entity_descriptors: Vec::new(),
        prompt_bundle: PromptBundle::standard(),
        annotations_rendered: true,
    }
}

fn one_hot(dim: usize, k: usize, scale: f32) -> Vec<f32> {
    let mut v = vec![0.0; dim];
    v[k] = scale;
    v
}

/// Instances where the ground-truth option's tokens duplicate the REF
/// tokens and every other option is orthogonal to them, at every layer.
pub fn orthogonal_suite(n: usize, layer_count: usize, seed: u64) -> Vec<(HiddenStateBundle, CorrespondenceInstance)> {
    let layout = FixtureLayout::default();
    let d = layout.hidden_dim;
    let mut rng = SplitMix64::derive(seed, 0x0F);
    (0..n)
        .map(|i| {
            let gt = OptionLetter::ALL[rng.below(4) as usize];
            let id = format!("orth-{seed}-{i}");
            let bundle = fixture_bundle(&layout, &id, layer_count, |layer, img, r, c| {
                let s = (layer + 1) as f32;
                if img == 0 && (r, c) == layout.ref_cell {
                    return one_hot(d, 0, s);
                }
                if img == 1 {
                    if let Some(l) = OptionLetter::ALL.into_iter().find(|&l| layout.option_cell(l) == (r, c)) {
                        return if l == gt { one_hot(d, 0, s) } else { one_hot(d, 1 + l.index(), s) };
                    }
                }
                one_hot(d, 5 + ((r + c) as usize % 3), s)
            });
            (bundle, fixture_instance(&layout, &id, gt))
        })
        .collect()
}

fn gaussian_unit(rng: &mut SplitMix64, dim: usize) -> Vec<f32> {
    let v: Vec<f64> = (0..dim)
        .map(|_| {
            let u1 = 1.0 - rng.next_f64();
            let u2 = rng.next_f64();
            (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
        })
        .collect();
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| (x / n) as f32).collect()
}

/// Single-layer instances whose tokens are independent random unit vectors,
/// so the probe is at chance.
pub fn random_suite(n: usize, seed: u64) -> Vec<(HiddenStateBundle, CorrespondenceInstance)> {
    let layout = FixtureLayout {
        hidden_dim: 64,
        ..FixtureLayout::default()
    };
    let mut rng = SplitMix64::derive(seed, 0x1F);
    (0..n)
        .map(|i| {
            let gt = OptionLetter::ALL[rng.below(4) as usize];
            let id = format!("rand-{seed}-{i}");
            let cells = 2 * (layout.grid_n() * layout.grid_n()) as usize;
            let vectors: Vec<Vec<f32>> = (0..cells).map(|_| gaussian_unit(&mut rng, layout.hidden_dim)).collect();
            let g = layout.grid_n();
            let bundle = fixture_bundle(&layout, &id, 1, |_, img, r, c| {
                vectors[(img * g * g + r * g + c) as usize].clone()
            });
            (bundle, fixture_instance(&layout, &id, gt))
        })
        .collect()
}

/// The same bundle with every hidden value multiplied by `k`.
pub fn scale_bundle(bundle: &HiddenStateBundle, k: f32) -> HiddenStateBundle {
    let layers = (0..bundle.layer_count())
        .map(|l| bundle.layer(l).expect("layer in range").map(|v| v * k))
        .collect();
    HiddenStateBundle::new(
        bundle.model_id(),
        bundle.instance_id(),
        bundle.hidden_dim(),
        bundle.token_grids().to_vec(),
        bundle.visual_token_index().to_vec(),
        layers,
    )
    .expect("scaling keeps dimensions")
}
