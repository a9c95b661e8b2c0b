//! score and report: response records and probe summaries into tables.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anchorkit::scorer::{
    emit_report, read_records, score_run, with_parsed, Counts, ReportTable, ResponseRecord, RowKey, Tenths,
};
use anchorkit::taskforge::PromptMode;
use serde::Serialize;

use crate::analyze::{ProbeSummaryFile, PROBE_SUMMARY_FILE};
use crate::config::{ReportConfig, ScoreConfig};
use crate::failure::{Failure, FailureKind};
use crate::output::OutDir;

fn load_records(paths: &[PathBuf], model_id: Option<&str>) -> Result<Vec<ResponseRecord>, Failure> {
    let mut all = Vec::new();
    for p in paths {
        let file = fs::File::open(p).map_err(|e| Failure::from(e).context(p.display()))?;
        let recs = read_records(std::io::BufReader::new(file)).map_err(|e| Failure::from(e).context(p.display()))?;
        all.extend(recs);
    }
    if let Some(m) = model_id {
        for r in &mut all {
            r.model_id.get_or_insert_with(|| m.to_string());
        }
    }
    Ok(all)
}

#[derive(Serialize)]
struct GroupScore<'a> {
    #[serde(flatten)]
    key: &'a RowKey,
    #[serde(flatten)]
    counts: Counts,
    accuracy: Tenths,
}

#[derive(Serialize)]
struct ScoreFile<'a> {
    mode: PromptMode,
    overall: Counts,
    accuracy: Tenths,
    groups: Vec<GroupScore<'a>>,
}

pub fn score(cfg: &ScoreConfig, out: &OutDir) -> Result<usize, Failure> {
    if cfg.responses.is_empty() {
        return Err(Failure::config("at least one --responses file is required"));
    }
    let records = load_records(&cfg.responses, cfg.model_id.as_deref())?;
    let run = score_run(&records)?;
    let groups = run
        .by_group
        .iter()
        .map(|(key, c)| GroupScore {
            key,
            counts: *c,
            accuracy: c.accuracy(),
        })
        .collect();
    out.write_json(
        "score.json",
        &ScoreFile {
            mode: run.mode,
            overall: run.overall,
            accuracy: run.accuracy,
            groups,
        },
    )?;
    out.write_jsonl("parsed.jsonl", with_parsed(&records))?;
    Ok(records.len())
}

fn grouped(paths: &[PathBuf], model_id: Option<&str>, mode: PromptMode) -> Result<BTreeMap<RowKey, Counts>, Failure> {
    if paths.is_empty() {
        return Ok(BTreeMap::new());
    }
    let records = load_records(paths, model_id)?;
    let run = score_run(&records)?;
    if run.mode != mode {
        return Err(Failure::new(
            FailureKind::Format,
            format!("expected {mode:?} records, found {:?}", run.mode),
        ));
    }
    Ok(run.by_group)
}

/// A probe output directory or its summary file.
fn read_probe_summary(path: &Path) -> Result<ProbeSummaryFile, Failure> {
    let path = if path.is_dir() { path.join(PROBE_SUMMARY_FILE) } else { path.to_path_buf() };
    let path = path.as_path();
    let text = fs::read_to_string(path).map_err(|e| Failure::from(e).context(path.display()))?;
    serde_json::from_str(&text).map_err(|e| Failure::from(e).context(path.display()))
}

/// Probe summaries keyed like response groups; `model_id` overrides the
/// bundle's model id when given.
fn probe_groups(paths: &[PathBuf], model_id: Option<&str>) -> Result<BTreeMap<RowKey, Counts>, Failure> {
    let mut map = BTreeMap::new();
    for p in paths {
        let s = read_probe_summary(p)?;
        let key = RowKey {
            model_id: model_id.map_or(s.model_id, str::to_string),
            subset: s.subset,
            task: s.task,
        };
        let counts = Counts {
            n: s.curve.n as u64,
            correct: s.curve.best_correct as u64,
            invalid: 0,
        };
        if map.insert(key.clone(), counts).is_some() {
            return Err(Failure::config(format!(
                "two probe summaries for {}/{}/{}",
                key.model_id, key.subset, key.task
            )));
        }
    }
    Ok(map)
}

pub fn report(cfg: &ReportConfig, out: &OutDir) -> Result<usize, Failure> {
    if cfg.direct.is_empty() && cfg.cot.is_empty() && cfg.probe.is_empty() {
        return Err(Failure::config("report needs --direct, --cot or --probe inputs"));
    }
    let m = cfg.model_id.as_deref();
    let direct = grouped(&cfg.direct, m, PromptMode::Direct)?;
    let cot = grouped(&cfg.cot, m, PromptMode::Cot)?;
    let probe = probe_groups(&cfg.probe, m)?;
    let table = ReportTable::assemble(&direct, &cot, &probe);
    table.validate()?;
    let text = emit_report(&table, cfg.format)?;
    out.write(&format!("report.{}", cfg.format.extension()), text)?;
    Ok(table.rows.len())
}
