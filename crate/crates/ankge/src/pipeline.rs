//! The four pipeline stages. Each stage reads its inputs, checks their
//! recorded digests against each other, and writes its artifacts into the
//! output directory.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use ankge_core::eval::rank_tail;
use ankge_core::retriever::retrieve_entry;
use ankge_core::{
    AnalogyCache, AnalogyParams, EmbeddingModel, EvalReport, InferenceConfig, RetrieverConfig, TripleStore,
};
use rayon::prelude::*;

use crate::artifacts::{self, AnalogyMeta, BaseMeta};
use crate::config::{EvalSplit, RunConfig};
use crate::container::write_atomic;
use crate::digest::{sha256_hex, store_digest};
use crate::error::{Error, Result};
use crate::io;
use crate::report::{self, RunInfo};

pub const BASE_FILE: &str = "base.ckpt";
pub const CACHE_FILE: &str = "cache.bin";
pub const ANALOGY_FILE: &str = "ankge.ckpt";
pub const METRICS_FILE: &str = "metrics.txt";
pub const RANKS_FILE: &str = "ranks.csv";

pub fn default_path(cfg: &RunConfig, file: &str) -> PathBuf {
    cfg.out.join(file)
}

/// Runs `f` on a pool capped at `threads` workers (0 = all cores).
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Usage(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Writes the effective config for `stage` and returns its digest.
fn echo_config(cfg: &RunConfig, stage: &str) -> Result<String> {
    let text = cfg.to_toml();
    write_atomic(&cfg.out.join(format!("{stage}.config.toml")), text.as_bytes())?;
    Ok(sha256_hex(text.as_bytes()))
}

fn prepare(cfg: &RunConfig) -> Result<(TripleStore, String)> {
    let store = io::load_store(&cfg.dataset, cfg.reverse)?;
    let digest = store_digest(&store);
    std::fs::create_dir_all(&cfg.out).map_err(|e| Error::io(&cfg.out, e))?;
    Ok((store, digest))
}

fn require_exists(paths: &[&Path]) -> Result<()> {
    for p in paths {
        if !p.exists() {
            return Err(Error::io(p, std::io::Error::new(std::io::ErrorKind::NotFound, "no such file")));
        }
    }
    Ok(())
}

fn load_base(path: &Path, dataset: &str) -> Result<(EmbeddingModel, BaseMeta)> {
    let (model, meta) = artifacts::load_model(path)?;
    if meta.dataset != dataset {
        return Err(Error::Mismatch(format!(
            "{} was trained on dataset {}, but the configured dataset has digest {dataset}",
            path.display(),
            meta.dataset
        )));
    }
    Ok((model, meta))
}

/// Per-epoch log: `epoch<TAB>loss<TAB>seconds`.
struct TrainLog {
    file: BufWriter<File>,
    start: Instant,
    path: PathBuf,
}

impl TrainLog {
    fn create(path: PathBuf) -> Result<Self> {
        let mut file = BufWriter::new(File::create(&path).map_err(|e| Error::io(&path, e))?);
        writeln!(file, "epoch\tloss\tseconds").map_err(|e| Error::io(&path, e))?;
        Ok(TrainLog { file, start: Instant::now(), path })
    }

    fn epoch(&mut self, epoch: usize, loss: f64) -> std::io::Result<()> {
        let secs = self.start.elapsed().as_secs_f64();
        println!("epoch {epoch} loss {loss:.6} ({secs:.1}s)");
        writeln!(self.file, "{epoch}\t{loss}\t{secs:.3}")?;
        self.file.flush()
    }
}

pub struct BaseOutcome {
    pub checkpoint: PathBuf,
    pub digest: String,
}

pub fn train_base(cfg: &RunConfig) -> Result<BaseOutcome> {
    let (store, dataset) = prepare(cfg)?;
    let config_digest = echo_config(cfg, "train-base")?;
    io::write_vocab(&cfg.out, &store)?;
    log::info!(
        "{} entities, {} relations, {} training triples, config {config_digest}",
        store.num_entities(),
        store.num_relations(),
        store.train.len()
    );
    let mut log = TrainLog::create(cfg.out.join("train-base.log"))?;
    let mut log_err = None;
    let model = ankge_core::train::train_base(&store, cfg.family()?, &cfg.base_config(), |s| {
        if let Err(e) = log.epoch(s.epoch, s.mean_loss) {
            log_err.get_or_insert(e);
        }
    })?;
    if let Some(e) = log_err {
        return Err(Error::io(&log.path, e));
    }
    let checkpoint = default_path(cfg, BASE_FILE);
    let digest = artifacts::save_model(&checkpoint, &model, cfg.seed, &dataset)?;
    println!("wrote {} ({digest})", checkpoint.display());
    Ok(BaseOutcome { checkpoint, digest })
}

/// Retrieval for every training triple, in parallel, in training order.
pub fn build_cache(model: &EmbeddingModel, store: &TripleStore, config: &RetrieverConfig) -> Result<AnalogyCache> {
    config.validate()?;
    let entries = store
        .train
        .par_iter()
        .map(|t| retrieve_entry(model, t, config))
        .collect::<ankge_core::Result<Vec<_>>>()?;
    Ok(AnalogyCache { config: config.clone(), entries })
}

pub fn retrieve(cfg: &RunConfig, base: &Path) -> Result<PathBuf> {
    require_exists(&[base])?;
    let (store, dataset) = prepare(cfg)?;
    echo_config(cfg, "retrieve")?;
    let (model, meta) = load_base(base, &dataset)?;
    let config = cfg.retriever_config();
    let cache = with_threads(cfg.threads, || build_cache(&model, &store, &config))??;
    let path = default_path(cfg, CACHE_FILE);
    let digest = artifacts::save_cache(&path, &cache, &meta.digest, &dataset)?;
    println!("wrote {} ({digest})", path.display());
    Ok(path)
}

pub fn train_ankge(cfg: &RunConfig, base: &Path, cache_path: &Path) -> Result<PathBuf> {
    require_exists(&[base, cache_path])?;
    let (store, dataset) = prepare(cfg)?;
    echo_config(cfg, "train-ankge")?;
    let (model, base_meta) = load_base(base, &dataset)?;
    let (cache, cache_meta) = artifacts::load_cache(cache_path)?;
    if cache_meta.base != base_meta.digest || cache_meta.dataset != dataset {
        return Err(Error::Mismatch(format!(
            "{} was built from another base checkpoint or dataset",
            cache_path.display()
        )));
    }
    let frozen = artifacts::base_tables_digest(&model);
    let config = cfg.analogy_config()?;
    let mut log = TrainLog::create(cfg.out.join("train-ankge.log"))?;
    let mut log_err = None;
    let params = ankge_core::analogy::train_analogy(&model, &store, &cache, &config, |epoch, loss| {
        if let Err(e) = log.epoch(epoch, loss) {
            log_err.get_or_insert(e);
        }
    })?;
    if let Some(e) = log_err {
        return Err(Error::io(&log.path, e));
    }
    assert_eq!(frozen, artifacts::base_tables_digest(&model), "base tables changed during analogy training");
    let meta = AnalogyMeta {
        base: base_meta.digest,
        cache: cache_meta.digest,
        dataset,
        similarity: config.similarity,
        gamma: config.gamma,
        digest: String::new(),
    };
    let path = default_path(cfg, ANALOGY_FILE);
    let digest = artifacts::save_analogy(&path, &model, &params, &meta)?;
    println!("wrote {} ({digest})", path.display());
    Ok(path)
}

/// Filtered tail ranking of `queries`, in parallel, in query order.
pub fn evaluate_queries(
    model: &EmbeddingModel,
    params: Option<&AnalogyParams>,
    store: &TripleStore,
    queries: &[ankge_core::Triple],
    config: &InferenceConfig,
) -> Result<EvalReport> {
    config.validate()?;
    if queries.is_empty() {
        return Err(ankge_core::Error::EmptyInput.into());
    }
    let filter = store.filter_index();
    let counts = store.count_index();
    let ranks = queries
        .par_iter()
        .map(|t| rank_tail(model, params, t, &filter, &counts, config))
        .collect::<ankge_core::Result<Vec<_>>>()?;
    Ok(EvalReport::from_ranked(ranks))
}

pub fn evaluate(cfg: &RunConfig, base: &Path, analogy: Option<&Path>) -> Result<EvalReport> {
    require_exists(&[base])?;
    if let Some(a) = analogy {
        require_exists(&[a])?;
    }
    let (store, dataset) = prepare(cfg)?;
    let config_digest = echo_config(cfg, "evaluate")?;
    let (model, base_meta) = load_base(base, &dataset)?;
    let params = match analogy {
        Some(path) => {
            let (p, meta) = artifacts::load_analogy(path, &model, &base_meta.digest)?;
            if meta.dataset != dataset {
                return Err(Error::Mismatch(format!("{} was trained on another dataset", path.display())));
            }
            Some((p, meta.digest))
        }
        None => None,
    };
    let queries = match cfg.eval_split {
        EvalSplit::Valid => &store.valid,
        EvalSplit::Test => &store.test,
    };
    let config = cfg.inference_config();
    let report = with_threads(cfg.threads, || {
        evaluate_queries(&model, params.as_ref().map(|p| &p.0), &store, queries, &config)
    })??;
    let info = RunInfo {
        split: format!("{:?}", cfg.eval_split).to_lowercase(),
        config: config_digest,
        dataset,
        base: base_meta.digest,
        analogy: params.map(|p| p.1),
    };
    report::write_metrics(&default_path(cfg, METRICS_FILE), &report, &info)?;
    report::write_ranks_csv(&default_path(cfg, RANKS_FILE), &report, &store)?;
    let m = &report.metrics;
    println!(
        "mrr {:.6} hits@1 {:.6} hits@3 {:.6} hits@10 {:.6} (base mrr {:.6})",
        m.mrr, m.hits1, m.hits3, m.hits10, report.base.mrr
    );
    Ok(report)
}
