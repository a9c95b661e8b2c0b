use std::collections::BTreeSet;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::{LensError, NormMode, Result};

/// `1 - |A n B| / |A u B|`. Undefined when both sets are empty.
pub fn jaccard_distance(a: &BTreeSet<u32>, b: &BTreeSet<u32>) -> Result<f64> {
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    if union == 0 {
        return Err(LensError::UndefinedPair);
    }
    Ok(1.0 - inter as f64 / union as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JaccardScore {
    pub pair: (String, String),
    pub layer: usize,
    pub value: f64,
}

/// Decoded token sets of one entity, one set per analyzed layer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityLens {
    pub entity_id: String,
    pub per_layer: Vec<BTreeSet<u32>>,
}

/// The four entities of one image.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageLensSets {
    pub image_id: String,
    /// First analyzed layer; `per_layer[i]` belongs to layer `first_layer + i`.
    pub first_layer: usize,
    pub entities: Vec<EntityLens>,
}

impl ImageLensSets {
    /// Scores of all six entity pairs at `layer_offset`. Pairs with an empty
    /// set are returned as `None`.
    pub fn pair_scores(&self, layer_offset: usize) -> Vec<Option<JaccardScore>> {
        let e = &self.entities;
        let mut out = Vec::with_capacity(6);
        for i in 0..e.len() {
            for j in i + 1..e.len() {
                let (a, b) = (&e[i].per_layer[layer_offset], &e[j].per_layer[layer_offset]);
                out.push(if a.is_empty() || b.is_empty() {
                    None
                } else {
                    jaccard_distance(a, b).ok().map(|value| JaccardScore {
                        pair: (e[i].entity_id.clone(), e[j].entity_id.clone()),
                        layer: self.first_layer + layer_offset,
                        value,
                    })
                });
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerJaccard {
    pub layer: usize,
    /// `None` when every pair at this layer was excluded.
    pub mean_jaccard: Option<f64>,
    pub pair_count: usize,
    pub excluded_pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanJaccardCurve {
    pub norm_mode: NormMode,
    pub layers: Vec<LayerJaccard>,
}

impl MeanJaccardCurve {
    /// `layer,mean_jaccard,pair_count,excluded_pairs`; an undefined mean is
    /// left blank.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["layer", "mean_jaccard", "pair_count", "excluded_pairs"])
            .expect("in-memory write");
        for l in &self.layers {
            w.write_record([
                l.layer.to_string(),
                l.mean_jaccard.map(|m| m.to_string()).unwrap_or_default(),
                l.pair_count.to_string(),
                l.excluded_pairs.to_string(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush to memory")).expect("ascii csv")
    }
}

/// Mean Jaccard distance over all `C(4,2) = 6` entity pairs of every image,
/// per layer in `layers`. Every image must hold exactly four entities with
/// sets for every layer in the range. Pairs involving an empty set are
/// excluded and counted.
pub fn mean_jaccard(images: &[ImageLensSets], layers: Range<usize>, norm_mode: NormMode) -> Result<MeanJaccardCurve> {
    if images.is_empty() {
        return Err(LensError::NoImages);
    }
    for img in images {
        if img.entities.len() != 4 {
            return Err(LensError::EntityCount {
                image_id: img.image_id.clone(),
                found: img.entities.len(),
            });
        }
        for e in &img.entities {
            let covered = img.first_layer..img.first_layer + e.per_layer.len();
            if layers.start < covered.start || layers.end > covered.end {
                return Err(LensError::LayerCount {
                    image_id: img.image_id.clone(),
                    expected: layers.end,
                    found: covered.end,
                });
            }
        }
    }
    let mut out = Vec::with_capacity(layers.len());
    for layer in layers {
        let (mut sum, mut count, mut excluded) = (0.0, 0usize, 0usize);
        for img in images {
            let scores = img.pair_scores(layer - img.first_layer);
            debug_assert_eq!(scores.len(), 6);
            for s in scores {
                match s {
                    Some(s) => {
                        sum += s.value;
                        count += 1;
                    }
                    None => excluded += 1,
                }
            }
        }
        out.push(LayerJaccard {
            layer,
            mean_jaccard: (count > 0).then(|| sum / count as f64),
            pair_count: count,
            excluded_pairs: excluded,
        });
    }
    Ok(MeanJaccardCurve { norm_mode, layers: out })
}
