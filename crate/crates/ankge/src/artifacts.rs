//! Checkpoints and the analogy cache on top of the [`container`](crate::container) format.

use std::path::Path;

use ankge_core::analogy::Similarity;
use ankge_core::{AnalogyCache, AnalogyParams, CacheEntry, EmbeddingModel, ModelFamily, RetrieverConfig};

use crate::container::{self, Manifest, PayloadReader, PayloadWriter};
use crate::digest::tables_digest;
use crate::error::{Error, Result};

pub const BASE_KIND: &str = "base-model";
pub const ANALOGY_KIND: &str = "analogy-params";
pub const CACHE_KIND: &str = "analogy-cache";

/// Upstream information recorded with a base checkpoint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BaseMeta {
    pub seed: u64,
    pub dataset: String,
    /// sha256 of the checkpoint file, filled in on load and save.
    pub digest: String,
}

pub fn base_tables_digest(model: &EmbeddingModel) -> String {
    tables_digest(&[model.entity_table(), model.relation_table(), model.mix_weight()])
}

pub fn save_model(path: &Path, model: &EmbeddingModel, seed: u64, dataset: &str) -> Result<String> {
    let mut m = Manifest::new(BASE_KIND);
    m.set("family", model.family());
    m.set("entities", model.num_entities());
    m.set("relations", model.num_relations());
    m.set("dim", model.dim());
    m.set("seed", seed);
    m.set("dataset_sha256", dataset);
    m.set("tables_sha256", base_tables_digest(model));
    let mut p = PayloadWriter::default();
    p.f64s(model.entity_table());
    p.f64s(model.relation_table());
    p.f64s(model.mix_weight());
    container::write(path, &m, &p.into_bytes())
}

pub fn load_model(path: &Path) -> Result<(EmbeddingModel, BaseMeta)> {
    let a = container::read(path)?;
    let m = &a.manifest;
    m.expect_kind(path, BASE_KIND)?;
    let family: ModelFamily = m.parse(path, "family")?;
    let ne: usize = m.parse(path, "entities")?;
    let nr: usize = m.parse(path, "relations")?;
    let k: usize = m.parse(path, "dim")?;
    let sizes = [ne * family.entity_dim(k), nr * family.relation_dim(k), family.mix_dim(k)];
    let expected: usize = sizes.iter().sum::<usize>() * 8;
    if a.payload.len() != expected {
        return Err(Error::format(
            path,
            format!(
                "payload has {} bytes but a {family} model with {ne} entities, {nr} relations and dim {k} needs {expected}",
                a.payload.len()
            ),
        ));
    }
    let mut r = PayloadReader::new(path, &a.payload);
    let ents = r.f64s(sizes[0])?;
    let rels = r.f64s(sizes[1])?;
    let mix = r.f64s(sizes[2])?;
    r.finish()?;
    let model = EmbeddingModel::from_parts(family, k, ne, nr, ents, rels, mix)
        .map_err(|source| Error::Data { path: path.to_path_buf(), source })?;
    if m.require(path, "tables_sha256")? != base_tables_digest(&model) {
        return Err(Error::format(path, "embedding tables do not match their recorded digest"));
    }
    let meta = BaseMeta {
        seed: m.parse(path, "seed")?,
        dataset: m.require(path, "dataset_sha256")?.to_string(),
        digest: a.digest,
    };
    Ok((model, meta))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalogyMeta {
    pub base: String,
    pub cache: String,
    pub dataset: String,
    pub similarity: Similarity,
    pub gamma: f64,
    pub digest: String,
}

pub fn save_analogy(path: &Path, model: &EmbeddingModel, params: &AnalogyParams, meta: &AnalogyMeta) -> Result<String> {
    let mut m = Manifest::new(ANALOGY_KIND);
    m.set("family", model.family());
    m.set("entities", params.num_entities());
    m.set("relations", params.num_relations());
    m.set("entity_dim", params.entity_dim());
    m.set("relation_dim", params.relation_dim());
    m.set("ent_rel_weight", params.ent_rel_weight);
    m.set("similarity", meta.similarity.name());
    m.set("gamma", meta.gamma);
    m.set("base_sha256", &meta.base);
    m.set("cache_sha256", &meta.cache);
    m.set("dataset_sha256", &meta.dataset);
    let mut p = PayloadWriter::default();
    p.f64s(&params.v_entity);
    p.f64s(&params.v_relation);
    p.f64s(&params.transform);
    container::write(path, &m, &p.into_bytes())
}

/// Loads analogy parameters built for `model`, whose checkpoint digest is
/// `base_digest`.
pub fn load_analogy(path: &Path, model: &EmbeddingModel, base_digest: &str) -> Result<(AnalogyParams, AnalogyMeta)> {
    let a = container::read(path)?;
    let m = &a.manifest;
    m.expect_kind(path, ANALOGY_KIND)?;
    let base = m.require(path, "base_sha256")?;
    if base != base_digest {
        return Err(Error::Mismatch(format!(
            "{} was trained on base checkpoint {base}, not {base_digest}",
            path.display()
        )));
    }
    let family: ModelFamily = m.parse(path, "family")?;
    let de: usize = m.parse(path, "entity_dim")?;
    let dr: usize = m.parse(path, "relation_dim")?;
    let ne: usize = m.parse(path, "entities")?;
    let nr: usize = m.parse(path, "relations")?;
    if family != model.family() || de != model.entity_dim() || dr != model.relation_dim() || ne != model.num_entities() || nr != model.num_relations() {
        return Err(Error::format(path, "analogy parameters do not fit the base model"));
    }
    let mut r = PayloadReader::new(path, &a.payload);
    let ve = r.f64s(ne * de)?;
    let vr = r.f64s(nr * dr)?;
    let tr = r.f64s(de * dr)?;
    r.finish()?;
    let params = AnalogyParams::from_parts(model, ve, vr, tr, m.parse(path, "ent_rel_weight")?)
        .map_err(|source| Error::Data { path: path.to_path_buf(), source })?;
    let meta = AnalogyMeta {
        base: base.to_string(),
        cache: m.require(path, "cache_sha256")?.to_string(),
        dataset: m.require(path, "dataset_sha256")?.to_string(),
        similarity: m.parse(path, "similarity")?,
        gamma: m.parse(path, "gamma")?,
        digest: a.digest,
    };
    Ok((params, meta))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CacheMeta {
    pub base: String,
    pub dataset: String,
    pub digest: String,
}

/// Each record stores `N_e` entity candidates `(u32 id, f64 score)`, then
/// `N_r` relation candidates, then `N_t` pair candidates
/// `(u32 entity, u32 relation, f64 score)`.
pub fn save_cache(path: &Path, cache: &AnalogyCache, base: &str, dataset: &str) -> Result<String> {
    let c = &cache.config;
    let mut m = Manifest::new(CACHE_KIND);
    m.set("base_sha256", base);
    m.set("dataset_sha256", dataset);
    m.set("triples", cache.len());
    m.set("entity_candidates", c.entity_candidates);
    m.set("relation_candidates", c.relation_candidates);
    m.set("triple_candidates", c.triple_candidates);
    m.set("preselect_entities", c.preselect_entities);
    m.set("preselect_relations", c.preselect_relations);
    m.set("exclude_original", c.exclude_original);
    let mut p = PayloadWriter::default();
    for e in &cache.entries {
        assert_eq!(e.entities.len(), c.entity_candidates);
        assert_eq!(e.relations.len(), c.relation_candidates);
        assert_eq!(e.pairs.len(), c.triple_candidates);
        for (id, s) in e.entities.iter().chain(&e.relations) {
            p.u32(*id);
            p.f64(*s);
        }
        for ((ent, rel), s) in &e.pairs {
            p.u32(*ent);
            p.u32(*rel);
            p.f64(*s);
        }
    }
    container::write(path, &m, &p.into_bytes())
}

pub fn load_cache(path: &Path) -> Result<(AnalogyCache, CacheMeta)> {
    let a = container::read(path)?;
    let m = &a.manifest;
    m.expect_kind(path, CACHE_KIND)?;
    let config = RetrieverConfig {
        entity_candidates: m.parse(path, "entity_candidates")?,
        relation_candidates: m.parse(path, "relation_candidates")?,
        triple_candidates: m.parse(path, "triple_candidates")?,
        preselect_entities: m.parse(path, "preselect_entities")?,
        preselect_relations: m.parse(path, "preselect_relations")?,
        exclude_original: m.parse(path, "exclude_original")?,
    };
    let n: usize = m.parse(path, "triples")?;
    let record = 12 * (config.entity_candidates + config.relation_candidates) + 16 * config.triple_candidates;
    if a.payload.len() != n * record {
        return Err(Error::format(path, format!("payload does not hold {n} records")));
    }
    let mut r = PayloadReader::new(path, &a.payload);
    let mut entries = Vec::with_capacity(n);
    for _ in 0..n {
        let mut single = |count: usize| -> Result<Vec<(u32, f64)>> {
            (0..count).map(|_| Ok((r.u32()?, r.f64()?))).collect()
        };
        let entities = single(config.entity_candidates)?;
        let relations = single(config.relation_candidates)?;
        let pairs = (0..config.triple_candidates)
            .map(|_| Ok(((r.u32()?, r.u32()?), r.f64()?)))
            .collect::<Result<_>>()?;
        entries.push(CacheEntry { entities, relations, pairs });
    }
    r.finish()?;
    let meta = CacheMeta {
        base: m.require(path, "base_sha256")?.to_string(),
        dataset: m.require(path, "dataset_sha256")?.to_string(),
        digest: a.digest,
    };
    Ok((AnalogyCache { config, entries }, meta))
}
