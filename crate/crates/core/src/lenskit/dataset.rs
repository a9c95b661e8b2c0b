use std::collections::BTreeSet;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::jaccard::{EntityLens, ImageLensSets};
use super::{decode_tokens, LensError, NormMode, Result};
use crate::geom::Rect;
use crate::options::OptionLetter;
use crate::taskforge::CorrespondenceInstance;
use crate::tensorstore::{rect_to_tokens, rescale_rect, Cell, HiddenStateBundle, Unembedding};

/// Which pixels stand for an entity in lens analysis.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionMode {
    /// The entity's full bounding box.
    #[default]
    Bbox,
    /// The square probe region around the centroid.
    Probe,
}

impl std::str::FromStr for RegionMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "bbox" => Ok(RegionMode::Bbox),
            "probe" => Ok(RegionMode::Probe),
            other => Err(format!("unknown region mode {other:?} (bbox, probe)")),
        }
    }
}

/// Target-image cells covered by option `letter`.
pub fn entity_cells(
    bundle: &HiddenStateBundle,
    instance: &CorrespondenceInstance,
    letter: OptionLetter,
    mode: RegionMode,
) -> Result<BTreeSet<Cell>> {
    let missing = || LensError::MissingEntity(instance.instance_id.clone(), letter.to_string());
    let [w, h] = instance.canvas_px;
    let rect = match mode {
        RegionMode::Bbox => {
            let b = instance.option(letter).ok_or_else(missing)?.bbox_px;
            Rect::new(b.x0.max(0.0), b.y0.max(0.0), b.x1.min(w as f64), b.y1.min(h as f64))
        }
        RegionMode::Probe => instance.option_regions.get(&letter).ok_or_else(missing)?.rect(),
    };
    let grid = bundle
        .grid(1)
        .ok_or_else(|| LensError::MissingTargetGrid(instance.instance_id.clone()))?;
    let rect = rescale_rect(&rect, (w, h), grid);
    Ok(rect_to_tokens(&rect, grid)?.into_iter().map(|(r, c)| (1, r, c)).collect())
}

/// Decoded token sets of the four target-image entities over `layers`.
/// An entity whose region covers no token gets empty sets.
pub fn lens_instance(
    bundle: &HiddenStateBundle,
    instance: &CorrespondenceInstance,
    unembedding: &Unembedding,
    norm_mode: NormMode,
    region_mode: RegionMode,
    layers: Range<usize>,
) -> Result<ImageLensSets> {
    if bundle.instance_id() != instance.instance_id {
        return Err(LensError::InstanceMismatch {
            bundle: bundle.instance_id().to_string(),
            instance: instance.instance_id.clone(),
        });
    }
    let mut entities = Vec::with_capacity(4);
    for letter in OptionLetter::ALL {
        let cells = entity_cells(bundle, instance, letter, region_mode)?;
        let per_layer = layers
            .clone()
            .map(|l| {
                if cells.is_empty() {
                    Ok(BTreeSet::new())
                } else {
                    decode_tokens(bundle, l, &cells, unembedding, norm_mode)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        entities.push(EntityLens {
            entity_id: format!("{}/{letter}", instance.instance_id),
            per_layer,
        });
    }
    Ok(ImageLensSets {
        image_id: instance.target_image.clone(),
        first_layer: layers.start,
        entities,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lenskit::mean_jaccard;
    use crate::lenskit::test_support::identity_unembedding;
    use crate::probekit::fixtures::{fixture_bundle, fixture_instance, FixtureLayout};

    #[test]
    fn probe_regions_decode_to_option_ids() {
        let layout = FixtureLayout::default();
        let d = layout.hidden_dim;
        let b = fixture_bundle(&layout, "x", 2, |_, _img, r, c| {
            let mut v = vec![0.0; d];
            v[((r * 4 + c) % 8) as usize] = 1.0;
            v
        });
        let inst = fixture_instance(&layout, "x", OptionLetter::A);
        let u = identity_unembedding(d);
        let sets = lens_instance(&b, &inst, &u, NormMode::None, RegionMode::Probe, 0..2).unwrap();
        assert_eq!(sets.entities.len(), 4);
        // Option cells (0,0), (0,3), (3,0), (3,3) -> ids 0, 3, 4, 7.
        let ids: Vec<u32> = sets.entities.iter().map(|e| *e.per_layer[1].iter().next().unwrap()).collect();
        assert_eq!(ids, [0, 3, 4, 7]);
        let curve = mean_jaccard(&[sets], 0..2, NormMode::None).unwrap();
        assert!(curve.layers.iter().all(|l| l.mean_jaccard == Some(1.0)));
    }

    #[test]
    fn bbox_mode_needs_descriptors() {
        let layout = FixtureLayout::default();
        let b = fixture_bundle(&layout, "x", 1, |_, _, _, _| vec![1.0; layout.hidden_dim]);
        let inst = fixture_instance(&layout, "x", OptionLetter::A);
        assert!(matches!(
            entity_cells(&b, &inst, OptionLetter::A, RegionMode::Bbox),
            Err(LensError::MissingEntity(..))
        ));
    }

    #[test]
    fn bbox_mode_on_generated_instance() {
        use crate::shapegen::Family;
        use crate::taskforge::{build_correspondence_instance, TaskConfig};
        use crate::tensorstore::{Matrix, TokenGridGeometry, VisualToken};

        let built = build_correspondence_instance(Family::Squiggle, 1, &TaskConfig::default()).unwrap();
        let inst = built.instance;
        let grids: Vec<TokenGridGeometry> = (0..2)
            .map(|i| TokenGridGeometry {
                image_idx: i,
                patch_px: 32,
                grid_rows: 16,
                grid_cols: 16,
                image_w_px: 512,
                image_h_px: 512,
            })
            .collect();
        let index: Vec<VisualToken> = (0..512u32)
            .map(|k| VisualToken { image_idx: k / 256, row: (k % 256) / 16, col: k % 16, seq_pos: k as u64 })
            .collect();
        let layer = Matrix::from_rows(2, &vec![[1.0f32, 0.0]; 512]);
        let b = HiddenStateBundle::new("m", &inst.instance_id, 2, grids, index, vec![layer]).unwrap();
        for letter in OptionLetter::ALL {
            let bbox = entity_cells(&b, &inst, letter, RegionMode::Bbox).unwrap();
            let probe = entity_cells(&b, &inst, letter, RegionMode::Probe).unwrap();
            assert!(!probe.is_empty());
            assert!(probe.is_subset(&bbox), "{letter}");
        }
    }
}
