//! Logit Lens decoding of visual tokens and the Jaccard-distance measure of
//! how semantically distinct the decoded entities are.

mod dataset;
mod jaccard;
mod trajectory;

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tensorstore::{Cell, HiddenStateBundle, StoreError, Unembedding};

pub use dataset::{entity_cells, lens_instance, RegionMode};
pub use jaccard::{
    jaccard_distance, mean_jaccard, EntityLens, ImageLensSets, JaccardScore, LayerJaccard,
    MeanJaccardCurve,
};
pub use trajectory::{trajectory, trajectory_csv, TrajectoryRow};

#[derive(Debug, Error)]
pub enum LensError {
    #[error("hidden dim {hidden} does not match unembedding dim {unembed}")]
    DimMismatch { hidden: usize, unembed: usize },
    #[error("no cells to decode")]
    EmptyCells,
    #[error("Jaccard distance of two empty sets is undefined")]
    UndefinedPair,
    #[error("image {image_id} has {found} entities, expected 4")]
    EntityCount { image_id: String, found: usize },
    #[error("image {image_id} has lens sets for {found} layers, expected {expected}")]
    LayerCount { image_id: String, expected: usize, found: usize },
    #[error("unknown norm_mode {0:?} (none, final_norm)")]
    UnknownNormMode(String),
    #[error("norm_mode final_norm needs a final normalization in the unembedding file")]
    MissingFinalNorm,
    #[error("instance {0} has no descriptor for option {1}")]
    MissingEntity(String, String),
    #[error("bundle for {0} has no target-image token grid")]
    MissingTargetGrid(String),
    #[error("bundle {bundle} does not belong to instance {instance}")]
    InstanceMismatch { bundle: String, instance: String },
    #[error("empty dataset")]
    NoImages,
    #[error(transparent)]
    Store(#[from] StoreError),
}

pub type Result<T> = std::result::Result<T, LensError>;

/// Whether the model's final normalization runs before unembedding.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormMode {
    None,
    #[default]
    FinalNorm,
}

impl NormMode {
    pub fn as_str(self) -> &'static str {
        match self {
            NormMode::None => "none",
            NormMode::FinalNorm => "final_norm",
        }
    }
}

impl std::str::FromStr for NormMode {
    type Err = LensError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(NormMode::None),
            "final_norm" => Ok(NormMode::FinalNorm),
            other => Err(LensError::UnknownNormMode(other.to_string())),
        }
    }
}

/// Vocabulary logits of one hidden vector.
pub fn logits(h: &[f32], unembedding: &Unembedding, mode: NormMode) -> Result<Vec<f64>> {
    if h.len() != unembedding.hidden_dim() {
        return Err(LensError::DimMismatch {
            hidden: h.len(),
            unembed: unembedding.hidden_dim(),
        });
    }
    let x: Vec<f64> = match mode {
        NormMode::None => h.iter().map(|&v| v as f64).collect(),
        NormMode::FinalNorm => unembedding.final_norm().ok_or(LensError::MissingFinalNorm)?.apply(h),
    };
    Ok(unembedding
        .matrix()
        .iter_rows()
        .map(|w| w.iter().zip(&x).map(|(&a, b)| a as f64 * b).sum())
        .collect())
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Top-1 token id of one hidden vector.
pub fn top1(h: &[f32], unembedding: &Unembedding, mode: NormMode) -> Result<u32> {
    Ok(argmax(&logits(h, unembedding, mode)?) as u32)
}

/// Top-1 decoded token ids of the visual tokens in `cells`, at `layer`.
pub fn decode_tokens(
    bundle: &HiddenStateBundle,
    layer: usize,
    cells: &BTreeSet<Cell>,
    unembedding: &Unembedding,
    mode: NormMode,
) -> Result<BTreeSet<u32>> {
    if cells.is_empty() {
        return Err(LensError::EmptyCells);
    }
    if bundle.hidden_dim() != unembedding.hidden_dim() {
        return Err(LensError::DimMismatch {
            hidden: bundle.hidden_dim(),
            unembed: unembedding.hidden_dim(),
        });
    }
    let m = bundle.layer(layer)?;
    let rows: Vec<usize> = cells
        .iter()
        .map(|&c| {
            bundle.row_of(c).ok_or(StoreError::MissingCell {
                image_idx: c.0,
                row: c.1,
                col: c.2,
            })
        })
        .collect::<std::result::Result<_, _>>()?;
    rows.par_iter()
        .map(|&r| top1(m.row(r), unembedding, mode))
        .collect::<Result<BTreeSet<u32>>>()
}

/// The decoded token set of one entity at one layer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogitLensSet {
    pub instance_id: String,
    pub entity_id: String,
    pub layer: usize,
    pub token_ids: BTreeSet<u32>,
}

#[cfg(test)]
pub(crate) mod test_support {
    use crate::tensorstore::{FinalNorm, HiddenStateBundle, Matrix, NormKind, TokenGridGeometry, Unembedding, VisualToken};

    pub fn identity_unembedding(n: usize) -> Unembedding {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        let strings = (0..n).map(|i| format!("tok{i}")).collect();
        let norm = FinalNorm {
            kind: NormKind::RmsNorm,
            eps: 1e-6,
            scale: vec![1.0; n],
            shift: None,
        };
        Unembedding::new(Matrix::new(n, n, data), Some(norm), strings).unwrap()
    }

    /// One 2x2-token image whose layer-`l` vector at cell `(r, c)` is `f(l, r, c)`.
    pub fn grid_bundle(dim: usize, layers: usize, f: impl Fn(usize, u32, u32) -> Vec<f32>) -> HiddenStateBundle {
        let grid = TokenGridGeometry {
            image_idx: 0,
            patch_px: 8,
            grid_rows: 2,
            grid_cols: 2,
            image_w_px: 16,
            image_h_px: 16,
        };
        let index: Vec<VisualToken> = (0..4)
            .map(|i| VisualToken { image_idx: 0, row: i / 2, col: i % 2, seq_pos: i as u64 })
            .collect();
        let mats = (0..layers)
            .map(|l| {
                let rows: Vec<Vec<f32>> = index.iter().map(|t| f(l, t.row, t.col)).collect();
                Matrix::from_rows(dim, &rows)
            })
            .collect();
        HiddenStateBundle::new("m", "i", dim, vec![grid], index, mats).unwrap()
    }
}
