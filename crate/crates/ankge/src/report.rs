use std::path::Path;

use ankge_core::eval::Metrics;
use ankge_core::{EvalReport, TripleStore};

use crate::container::write_atomic;
use crate::error::{Error, Result};

/// Digests and labels written alongside the metrics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunInfo {
    pub split: String,
    pub config: String,
    pub dataset: String,
    pub base: String,
    pub analogy: Option<String>,
}

/// `key = value` lines, metrics with 6 decimal places.
pub fn metrics_text(report: &EvalReport, info: &RunInfo) -> String {
    let mut out = String::new();
    let mut line = |k: &str, v: &dyn std::fmt::Display| out.push_str(&format!("{k} = {v}\n"));
    let m = |x: f64| format!("{x:.6}");
    let fields = |r: &Metrics| [m(r.mrr), m(r.hits1), m(r.hits3), m(r.hits10)];
    for (k, v) in ["mrr", "hits1", "hits3", "hits10"].iter().zip(fields(&report.metrics)) {
        line(k, &v);
    }
    for (k, v) in ["base_mrr", "base_hits1", "base_hits3", "base_hits10"].iter().zip(fields(&report.base)) {
        line(k, &v);
    }
    line("queries", &report.ranks.len());
    line("split", &info.split);
    line("config_sha256", &info.config);
    line("dataset_sha256", &info.dataset);
    line("base_sha256", &info.base);
    line("analogy_sha256", &info.analogy.as_deref().unwrap_or("none"));
    out
}

pub fn write_metrics(path: &Path, report: &EvalReport, info: &RunInfo) -> Result<()> {
    write_atomic(path, metrics_text(report, info).as_bytes())
}

/// One row per query: names, both ranks and the three weights.
pub fn write_ranks_csv(path: &Path, report: &EvalReport, store: &TripleStore) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["head", "relation", "tail", "base_rank", "ankge_rank", "lambda_e", "lambda_r", "lambda_t"])?;
    let ent = |id: u32| store.entities.name(id).unwrap_or_default().to_string();
    for r in &report.ranks {
        let t = r.triple;
        w.write_record([
            ent(t.head),
            store.relations.name(t.relation).unwrap_or_default().to_string(),
            ent(t.tail),
            r.base_rank.to_string(),
            r.enhanced_rank.to_string(),
            r.lambda[0].to_string(),
            r.lambda[1].to_string(),
            r.lambda[2].to_string(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::io(path, e.into_error()))?;
    write_atomic(path, &bytes)
}
