use serde::{Deserialize, Serialize};

use super::{argmax, logits, NormMode, Result};
use crate::tensorstore::{Cell, HiddenStateBundle, StoreError, Unembedding};

/// Top-1 Logit Lens token of one visual token at one layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub layer: usize,
    pub token_id: u32,
    pub token_string: String,
    pub top1_prob: f64,
}

/// The top-1 token of `cell` at every layer, with its softmax probability.
pub fn trajectory(
    bundle: &HiddenStateBundle,
    cell: Cell,
    unembedding: &Unembedding,
    mode: NormMode,
) -> Result<Vec<TrajectoryRow>> {
    let row = bundle.row_of(cell).ok_or(StoreError::MissingCell {
        image_idx: cell.0,
        row: cell.1,
        col: cell.2,
    })?;
    (0..bundle.layer_count())
        .map(|layer| {
            let z = logits(bundle.layer(layer)?.row(row), unembedding, mode)?;
            let id = argmax(&z);
            let top = z[id];
            let denom: f64 = z.iter().map(|v| (v - top).exp()).sum();
            Ok(TrajectoryRow {
                layer,
                token_id: id as u32,
                token_string: unembedding.token_string(id as u32).unwrap_or_default().to_string(),
                top1_prob: 1.0 / denom,
            })
        })
        .collect()
}

/// `layer,token_id,token_string,top1_prob` with standard CSV quoting.
pub fn trajectory_csv(rows: &[TrajectoryRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("in-memory write");
    }
    if rows.is_empty() {
        w.write_record(["layer", "token_id", "token_string", "top1_prob"])
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush to memory")).expect("utf-8 tokens")
}
