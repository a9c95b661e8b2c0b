//! probe and lens over exported hidden-state bundles.

use std::collections::HashMap;
use std::fs;
use std::io::BufRead;
use std::path::{Path, PathBuf};

use anchorkit::lenskit::{lens_instance, mean_jaccard, trajectory, trajectory_csv, NormMode, RegionMode};
use anchorkit::probekit::{probe_all_layers, Aggregation, CurveSummary, LayerAccuracyCurve, ProbeError, ProbePrediction};
use anchorkit::taskforge::CorrespondenceInstance;
use anchorkit::tensorstore::{read_bundle, read_unembedding};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{LensConfig, ProbeConfig};
use crate::failure::{Failure, FailureKind};
use crate::output::OutDir;

pub const PROBE_SUMMARY_FILE: &str = "probe_summary.json";

pub fn read_manifest(path: &Path) -> Result<Vec<CorrespondenceInstance>, Failure> {
    let file = fs::File::open(path).map_err(|e| Failure::from(e).context(path.display()))?;
    let mut out = Vec::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let inst = serde_json::from_str(&line)
            .map_err(|e| Failure::from(e).context(format!("{} line {}", path.display(), i + 1)))?;
        out.push(inst);
    }
    Ok(out)
}

/// `*.anch1` files of a directory, sorted by name.
pub fn list_bundles(dir: &Path) -> Result<Vec<PathBuf>, Failure> {
    let entries = fs::read_dir(dir).map_err(|e| Failure::from(e).context(dir.display()))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "anch1"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Failure::new(FailureKind::Path, format!("{}: no .anch1 bundles", dir.display())));
    }
    Ok(files)
}

fn required<'a>(v: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path, Failure> {
    v.as_deref().ok_or_else(|| Failure::config(format!("--{flag} is required")))
}

fn instances_by_id(instances: &[CorrespondenceInstance]) -> HashMap<&str, &CorrespondenceInstance> {
    instances.iter().map(|i| (i.instance_id.as_str(), i)).collect()
}

fn single_model(ids: impl IntoIterator<Item = String>) -> Result<String, Failure> {
    let mut ids: Vec<String> = ids.into_iter().collect();
    ids.sort();
    ids.dedup();
    match ids.len() {
        1 => Ok(ids.remove(0)),
        _ => Err(Failure::new(FailureKind::Format, format!("bundles come from several models: {ids:?}"))),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbeSummaryFile {
    pub model_id: String,
    pub subset: String,
    pub task: String,
    pub aggregation: Aggregation,
    #[serde(flatten)]
    pub curve: CurveSummary,
}

pub fn probe(cfg: &ProbeConfig, out: &OutDir) -> Result<usize, Failure> {
    let instances = read_manifest(required(&cfg.manifest, "manifest")?)?;
    let files = list_bundles(required(&cfg.bundles, "bundles")?)?;
    let by_id = instances_by_id(&instances);
    let results = files
        .par_iter()
        .map(|path| {
            let bundle = read_bundle(path).map_err(|e| Failure::from(e).context(path.display()))?;
            let inst = by_id.get(bundle.instance_id()).ok_or_else(|| {
                Failure::new(
                    FailureKind::Format,
                    format!("{}: instance {} is not in the manifest", path.display(), bundle.instance_id()),
                )
            })?;
            let preds = match probe_all_layers(&bundle, inst, cfg.aggregation) {
                Ok(p) => Some(p),
                Err(ProbeError::EmptyRegion { .. }) => None,
                Err(e) => return Err(Failure::from(e).context(path.display())),
            };
            Ok((bundle.model_id().to_string(), bundle.instance_id().to_string(), preds))
        })
        .collect::<Result<Vec<_>, Failure>>()?;
    let model_id = single_model(results.iter().map(|r| r.0.clone()))?;
    let mut kept: Vec<Vec<ProbePrediction>> = Vec::new();
    let mut excluded = Vec::new();
    for (_, id, preds) in results {
        match preds {
            Some(p) => kept.push(p),
            None => excluded.push(id),
        }
    }
    let curve = LayerAccuracyCurve::from_predictions(&kept, excluded)?;
    out.write("probe_curve.csv", curve.to_csv())?;
    out.write_json(
        PROBE_SUMMARY_FILE,
        &ProbeSummaryFile {
            model_id,
            subset: cfg.subset.clone(),
            task: cfg.task.clone(),
            aggregation: cfg.aggregation,
            curve: curve.summary(),
        },
    )?;
    out.write_jsonl("predictions.jsonl", kept.iter().flatten())?;
    if !curve.excluded.is_empty() {
        out.write_jsonl("excluded.jsonl", &curve.excluded)?;
    }
    Ok(kept.len())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrajectorySpec {
    pub instance_id: String,
    pub cell: (u32, u32, u32),
}

impl std::str::FromStr for TrajectorySpec {
    type Err = String;

    /// `instance_id:image:row:col`; the id itself may contain colons.
    fn from_str(s: &str) -> Result<Self, String> {
        let err = || format!("trajectory {s:?} is not instance_id:image:row:col");
        let mut parts = s.rsplitn(4, ':');
        let col = parts.next().and_then(|v| v.parse().ok()).ok_or_else(err)?;
        let row = parts.next().and_then(|v| v.parse().ok()).ok_or_else(err)?;
        let img = parts.next().and_then(|v| v.parse().ok()).ok_or_else(err)?;
        let id = parts.next().filter(|v| !v.is_empty()).ok_or_else(err)?;
        Ok(Self {
            instance_id: id.to_string(),
            cell: (img, row, col),
        })
    }
}

#[derive(Serialize)]
struct LensSummary {
    model_id: String,
    unembedding_model_id: String,
    norm_mode: NormMode,
    region_mode: RegionMode,
    layers: [usize; 2],
    images: usize,
}

pub fn lens(cfg: &LensConfig, out: &OutDir) -> Result<usize, Failure> {
    let specs: Vec<TrajectorySpec> = cfg
        .trajectory
        .iter()
        .map(|s| s.parse().map_err(Failure::config))
        .collect::<Result<_, _>>()?;
    let instances = read_manifest(required(&cfg.manifest, "manifest")?)?;
    let files = list_bundles(required(&cfg.bundles, "bundles")?)?;
    let upath = required(&cfg.unembedding, "unembedding")?;
    let (unembed_model, unembedding) = read_unembedding(upath).map_err(|e| Failure::from(e).context(upath.display()))?;
    let by_id = instances_by_id(&instances);

    let results = files
        .par_iter()
        .map(|path| {
            let bundle = read_bundle(path).map_err(|e| Failure::from(e).context(path.display()))?;
            let inst = by_id.get(bundle.instance_id()).ok_or_else(|| {
                Failure::new(
                    FailureKind::Format,
                    format!("{}: instance {} is not in the manifest", path.display(), bundle.instance_id()),
                )
            })?;
            let [a, b] = cfg.layers.unwrap_or([0, bundle.layer_count()]);
            if a >= b || b > bundle.layer_count() {
                return Err(Failure::config(format!(
                    "layer range {a}..{b} does not fit the {} layers of {}",
                    bundle.layer_count(),
                    path.display()
                )));
            }
            let sets = lens_instance(&bundle, inst, &unembedding, cfg.norm_mode, cfg.region_mode, a..b)
                .map_err(|e| Failure::from(e).context(path.display()))?;
            let mut traj = Vec::new();
            for (k, spec) in specs.iter().enumerate() {
                if spec.instance_id == bundle.instance_id() {
                    let rows = trajectory(&bundle, spec.cell, &unembedding, cfg.norm_mode)?;
                    traj.push((k, trajectory_csv(&rows)));
                }
            }
            Ok((bundle.model_id().to_string(), [a, b], sets, traj))
        })
        .collect::<Result<Vec<_>, Failure>>()?;

    let model_id = single_model(results.iter().map(|r| r.0.clone()))?;
    let range = results[0].1;
    if results.iter().any(|r| r.1 != range) {
        return Err(Failure::new(FailureKind::Format, "bundles have different layer counts"));
    }
    let images: Vec<_> = results.iter().map(|r| r.2.clone()).collect();
    let curve = mean_jaccard(&images, range[0]..range[1], cfg.norm_mode)?;
    out.write("jaccard_curve.csv", curve.to_csv())?;
    let mut found = vec![false; specs.len()];
    for (_, _, _, traj) in &results {
        for (k, csv) in traj {
            found[*k] = true;
            out.write(&format!("trajectory_{k}.csv"), csv)?;
        }
    }
    if let Some(k) = found.iter().position(|f| !f) {
        return Err(Failure::config(format!("no bundle for trajectory instance {}", specs[k].instance_id)));
    }
    out.write_json(
        "lens_summary.json",
        &LensSummary {
            model_id,
            unembedding_model_id: unembed_model,
            norm_mode: cfg.norm_mode,
            region_mode: cfg.region_mode,
            layers: range,
            images: images.len(),
        },
    )?;
    Ok(images.len())
}
