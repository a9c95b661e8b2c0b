//! MaxSim representation probing: which option region's hidden states are
//! most similar to the REF region's, per layer, and the resulting accuracy
//! curve over layers.

pub mod fixtures;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::options::OptionLetter;
use crate::taskforge::{CorrespondenceInstance, RegionBox};
use crate::tensorstore::{rect_to_tokens, rescale_rect, slice_tokens, Cell, HiddenStateBundle, Matrix, StoreError};

/// Added to the product of norms in every cosine.
pub const COSINE_EPS: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum ProbeError {
    #[error("region {region} of instance {instance_id} maps to no visual tokens")]
    EmptyRegion { instance_id: String, region: String },
    #[error("empty token matrix")]
    EmptyMatrix,
    #[error("hidden dims differ: {0} vs {1}")]
    DimMismatch(usize, usize),
    #[error("bundle for {instance_id} has no token grid for image {image_idx}")]
    MissingImage { instance_id: String, image_idx: u32 },
    #[error("bundle {bundle} does not belong to instance {instance}")]
    InstanceMismatch { bundle: String, instance: String },
    #[error("bundle for {instance_id} has {found} layers, expected {expected}")]
    LayerCountMismatch { instance_id: String, expected: usize, found: usize },
    #[error("no instance for bundle {0}")]
    UnknownInstance(String),
    #[error("no instances left to score")]
    NoInstances,
    #[error(transparent)]
    Store(#[from] StoreError),
}

pub type Result<T> = std::result::Result<T, ProbeError>;

/// How per-REF-token maxima are combined.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    #[default]
    Mean,
    Sum,
}

impl std::str::FromStr for Aggregation {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "mean" => Ok(Aggregation::Mean),
            "sum" => Ok(Aggregation::Sum),
            other => Err(format!("unknown aggregation {other:?} (mean, sum)")),
        }
    }
}

fn norm(v: &[f32]) -> f64 {
    v.iter().map(|&x| (x as f64) * (x as f64)).sum::<f64>().sqrt()
}

fn dot(a: &[f32], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| x as f64 * y as f64).sum()
}

/// Cosine similarity with [`COSINE_EPS`] in the denominator, in f64.
pub fn cosine(a: &[f32], b: &[f32]) -> f64 {
    dot(a, b) / (norm(a) * norm(b) + COSINE_EPS)
}

/// Mean over rows of `reference` of the best cosine against any row of
/// `candidate`. Not symmetric: the REF tokens always go first.
pub fn maxsim(reference: &Matrix, candidate: &Matrix) -> Result<f64> {
    maxsim_with(reference, candidate, Aggregation::Mean)
}

pub fn maxsim_with(reference: &Matrix, candidate: &Matrix, agg: Aggregation) -> Result<f64> {
    if reference.is_empty() || candidate.is_empty() {
        return Err(ProbeError::EmptyMatrix);
    }
    if reference.cols() != candidate.cols() {
        return Err(ProbeError::DimMismatch(reference.cols(), candidate.cols()));
    }
    let cand_norms: Vec<f64> = candidate.iter_rows().map(norm).collect();
    let mut total = 0.0;
    for r in reference.iter_rows() {
        let rn = norm(r);
        let best = candidate
            .iter_rows()
            .zip(&cand_norms)
            .map(|(c, &cn)| dot(r, c) / (rn * cn + COSINE_EPS))
            .fold(f64::NEG_INFINITY, f64::max);
        total += best.clamp(-1.0, 1.0);
    }
    Ok(match agg {
        Aggregation::Mean => total / reference.rows() as f64,
        Aggregation::Sum => total,
    })
}

/// Option with the highest score; ties go to the alphabetically first.
pub fn argmax_option(scores: &BTreeMap<OptionLetter, f64>) -> Option<OptionLetter> {
    let mut best: Option<(OptionLetter, f64)> = None;
    for (&l, &s) in scores {
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((l, s));
        }
    }
    best.map(|(l, _)| l)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbePrediction {
    pub instance_id: String,
    pub layer: usize,
    pub scores: BTreeMap<OptionLetter, f64>,
    pub predicted: OptionLetter,
    pub correct: bool,
}

/// Visual-token cells covered by every region of an instance.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionCells {
    pub reference: BTreeSet<Cell>,
    pub options: BTreeMap<OptionLetter, BTreeSet<Cell>>,
}

fn cells_for(
    bundle: &HiddenStateBundle,
    instance: &CorrespondenceInstance,
    region: &RegionBox,
    image_idx: u32,
    name: &str,
) -> Result<BTreeSet<Cell>> {
    let grid = bundle.grid(image_idx).ok_or_else(|| ProbeError::MissingImage {
        instance_id: instance.instance_id.clone(),
        image_idx,
    })?;
    let [w, h] = instance.canvas_px;
    let rect = rescale_rect(&region.rect(), (w, h), grid);
    let cells: BTreeSet<Cell> = rect_to_tokens(&rect, grid)?
        .into_iter()
        .map(|(r, c)| (image_idx, r, c))
        .collect();
    if cells.is_empty() {
        return Err(ProbeError::EmptyRegion {
            instance_id: instance.instance_id.clone(),
            region: name.to_string(),
        });
    }
    Ok(cells)
}

/// Maps the REF region onto image 0 and the option regions onto image 1.
pub fn region_cells(bundle: &HiddenStateBundle, instance: &CorrespondenceInstance) -> Result<RegionCells> {
    if bundle.instance_id() != instance.instance_id {
        return Err(ProbeError::InstanceMismatch {
            bundle: bundle.instance_id().to_string(),
            instance: instance.instance_id.clone(),
        });
    }
    let reference = cells_for(bundle, instance, &instance.ref_region, 0, "REF")?;
    let mut options = BTreeMap::new();
    for (&letter, region) in &instance.option_regions {
        options.insert(letter, cells_for(bundle, instance, region, 1, &letter.to_string())?);
    }
    Ok(RegionCells { reference, options })
}

fn predict(
    bundle: &HiddenStateBundle,
    instance: &CorrespondenceInstance,
    cells: &RegionCells,
    layer: usize,
    agg: Aggregation,
) -> Result<ProbePrediction> {
    let reference = slice_tokens(bundle, layer, &cells.reference)?;
    let mut scores = BTreeMap::new();
    for (&letter, c) in &cells.options {
        let cand = slice_tokens(bundle, layer, c)?;
        scores.insert(letter, maxsim_with(&reference, &cand, agg)?);
    }
    let predicted = argmax_option(&scores).ok_or(ProbeError::NoInstances)?;
    Ok(ProbePrediction {
        instance_id: instance.instance_id.clone(),
        layer,
        scores,
        predicted,
        correct: predicted == instance.ground_truth,
    })
}

/// Probes one instance at one layer with mean aggregation.
pub fn probe_instance(bundle: &HiddenStateBundle, instance: &CorrespondenceInstance, layer: usize) -> Result<ProbePrediction> {
    probe_instance_with(bundle, instance, layer, Aggregation::Mean)
}

pub fn probe_instance_with(
    bundle: &HiddenStateBundle,
    instance: &CorrespondenceInstance,
    layer: usize,
    agg: Aggregation,
) -> Result<ProbePrediction> {
    let cells = region_cells(bundle, instance)?;
    predict(bundle, instance, &cells, layer, agg)
}

/// Predictions at every layer of the bundle.
pub fn probe_all_layers(
    bundle: &HiddenStateBundle,
    instance: &CorrespondenceInstance,
    agg: Aggregation,
) -> Result<Vec<ProbePrediction>> {
    let cells = region_cells(bundle, instance)?;
    (0..bundle.layer_count())
        .map(|l| predict(bundle, instance, &cells, l, agg))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerAccuracy {
    pub layer: usize,
    pub accuracy: f64,
    pub correct: usize,
    pub n: usize,
}

/// Probe accuracy per layer. The reported probe accuracy is `best_accuracy`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerAccuracyCurve {
    pub layers: Vec<LayerAccuracy>,
    pub best_layer: usize,
    pub best_accuracy: f64,
    /// Instances left out of every layer because a region had no tokens.
    pub excluded: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSummary {
    pub best_layer: usize,
    pub best_accuracy: f64,
    pub best_correct: usize,
    pub layer_count: usize,
    pub n: usize,
    pub excluded: usize,
}

impl LayerAccuracyCurve {
    /// Builds the curve from one prediction vector (one entry per layer) per
    /// instance. Ties for the best layer go to the lowest index.
    pub fn from_predictions(per_instance: &[Vec<ProbePrediction>], excluded: Vec<String>) -> Result<Self> {
        let Some(first) = per_instance.first() else {
            return Err(ProbeError::NoInstances);
        };
        let layer_count = first.len();
        let mut correct = vec![0usize; layer_count];
        for preds in per_instance {
            if preds.len() != layer_count {
                return Err(ProbeError::LayerCountMismatch {
                    instance_id: preds.first().map(|p| p.instance_id.clone()).unwrap_or_default(),
                    expected: layer_count,
                    found: preds.len(),
                });
            }
            for p in preds {
                correct[p.layer] += p.correct as usize;
            }
        }
        let n = per_instance.len();
        let layers: Vec<LayerAccuracy> = correct
            .iter()
            .enumerate()
            .map(|(layer, &c)| LayerAccuracy {
                layer,
                accuracy: c as f64 / n as f64,
                correct: c,
                n,
            })
            .collect();
        let best = layers
            .iter()
            .fold(&layers[0], |b, l| if l.correct > b.correct { l } else { b });
        Ok(Self {
            best_layer: best.layer,
            best_accuracy: best.accuracy,
            layers,
            excluded,
        })
    }

    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }

    pub fn n(&self) -> usize {
        self.layers.first().map_or(0, |l| l.n)
    }

    /// `layer,accuracy,n` with one row per layer.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("layer,accuracy,n\n");
        for l in &self.layers {
            writeln!(out, "{},{},{}", l.layer, l.accuracy, l.n).expect("write to string");
        }
        out
    }

    pub fn summary(&self) -> CurveSummary {
        CurveSummary {
            best_layer: self.best_layer,
            best_accuracy: self.best_accuracy,
            best_correct: self.layers[self.best_layer].correct,
            layer_count: self.layer_count(),
            n: self.n(),
            excluded: self.excluded.len(),
        }
    }
}

/// Probes every instance at every layer and reduces to an accuracy curve.
/// Bundles are matched to instances by instance id. Instances whose regions
/// map to no tokens are excluded from every layer.
pub fn layer_sweep(bundles: &[HiddenStateBundle], instances: &[CorrespondenceInstance]) -> Result<LayerAccuracyCurve> {
    layer_sweep_with(bundles, instances, Aggregation::Mean)
}

pub fn layer_sweep_with(
    bundles: &[HiddenStateBundle],
    instances: &[CorrespondenceInstance],
    agg: Aggregation,
) -> Result<LayerAccuracyCurve> {
    let Some(first) = bundles.first() else {
        return Err(ProbeError::NoInstances);
    };
    let layer_count = first.layer_count();
    if let Some(b) = bundles.iter().find(|b| b.layer_count() != layer_count) {
        return Err(ProbeError::LayerCountMismatch {
            instance_id: b.instance_id().to_string(),
            expected: layer_count,
            found: b.layer_count(),
        });
    }
    let by_id: HashMap<&str, &CorrespondenceInstance> =
        instances.iter().map(|i| (i.instance_id.as_str(), i)).collect();
    let results: Vec<Result<Option<Vec<ProbePrediction>>>> = bundles
        .par_iter()
        .map(|b| {
            let inst = by_id
                .get(b.instance_id())
                .ok_or_else(|| ProbeError::UnknownInstance(b.instance_id().to_string()))?;
            match probe_all_layers(b, inst, agg) {
                Ok(p) => Ok(Some(p)),
                Err(ProbeError::EmptyRegion { .. }) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect();
    let mut kept = Vec::with_capacity(results.len());
    let mut excluded = Vec::new();
    for (b, r) in bundles.iter().zip(results) {
        match r? {
            Some(p) => kept.push(p),
            None => excluded.push(b.instance_id().to_string()),
        }
    }
    LayerAccuracyCurve::from_predictions(&kept, excluded)
}
