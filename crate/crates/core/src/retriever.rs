//! Analogical object retrieval by top-k score search.
//!
//! For a training triple `(h, r, t)`:
//! - entity level ranks `f(e, r, t)` over all entities `e`,
//! - relation level ranks `f(h, r', t)` over all relations `r'`,
//! - triple level pre-selects the top `m` entities and top `n` relations
//!   from the two lists above, then ranks `f(e, r', t)` over their product.
//!
//! Lists are ordered by score descending, ties by ascending id (pairs by
//! entity id, then relation id).

use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{Error, Result};
use crate::model::{EmbeddingModel, Scorer};
use crate::store::{Triple, TripleStore};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RetrieverConfig {
    /// `N_e`
    pub entity_candidates: usize,
    /// `N_r`
    pub relation_candidates: usize,
    /// `N_t`
    pub triple_candidates: usize,
    /// `m`: entities kept for pair search (clamped to `|E|`).
    pub preselect_entities: usize,
    /// `n`: relations kept for pair search (clamped to `|R|`).
    pub preselect_relations: usize,
    pub exclude_original: bool,
}

impl Default for RetrieverConfig {
    fn default() -> Self {
        RetrieverConfig {
            entity_candidates: 1,
            relation_candidates: 1,
            triple_candidates: 5,
            preselect_entities: 50,
            preselect_relations: 50,
            exclude_original: true,
        }
    }
}

impl RetrieverConfig {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("entity_candidates", self.entity_candidates),
            ("relation_candidates", self.relation_candidates),
            ("triple_candidates", self.triple_candidates),
            ("preselect_entities", self.preselect_entities),
            ("preselect_relations", self.preselect_relations),
        ];
        for (name, v) in fields {
            if v == 0 {
                return Err(Error::InvalidConfig(alloc::format!("{name} must be positive")));
            }
        }
        if self.triple_candidates > self.preselect_entities * self.preselect_relations {
            return Err(Error::InvalidConfig(alloc::format!(
                "triple_candidates {} exceeds m·n = {}",
                self.triple_candidates,
                self.preselect_entities * self.preselect_relations
            )));
        }
        Ok(())
    }
}

pub type Candidate<K> = (K, f64);

/// Retrieved analogical objects of one training triple.
#[derive(Debug, Clone, PartialEq)]
pub struct CacheEntry {
    pub entities: Vec<Candidate<u32>>,
    pub relations: Vec<Candidate<u32>>,
    pub pairs: Vec<Candidate<(u32, u32)>>,
}

/// One [`CacheEntry`] per training triple, in training order.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalogyCache {
    pub config: RetrieverConfig,
    pub entries: Vec<CacheEntry>,
}

impl AnalogyCache {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn by_score_then_key<K: Ord>(a: &Candidate<K>, b: &Candidate<K>) -> Ordering {
    b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0))
}

/// Keeps the `k` best candidates, sorted.
pub fn top_k<K: Ord>(mut cands: Vec<Candidate<K>>, k: usize) -> Vec<Candidate<K>> {
    if k < cands.len() {
        cands.select_nth_unstable_by(k, by_score_then_key);
        cands.truncate(k);
    }
    cands.sort_unstable_by(by_score_then_key);
    cands
}

fn check_ids(model: &EmbeddingModel, triple: &Triple) -> Result<()> {
    model.check_entity(triple.h())?;
    model.check_relation(triple.r())?;
    model.check_entity(triple.t())
}

fn entity_scores(model: &EmbeddingModel, triple: &Triple) -> Vec<Candidate<u32>> {
    let r = model.relation(triple.r());
    let t = model.entity(triple.t());
    let mut scorer = Scorer::new(model);
    (0..model.num_entities())
        .map(|e| (e as u32, scorer.score(model.entity(e), &r, t)))
        .collect()
}

fn relation_scores(model: &EmbeddingModel, triple: &Triple) -> Vec<Candidate<u32>> {
    let h = model.entity(triple.h());
    let t = model.entity(triple.t());
    let mut r = alloc::vec![0.0; model.relation_dim()];
    let mut scorer = Scorer::new(model);
    (0..model.num_relations())
        .map(|rel| {
            model.relation_into(rel, &mut r);
            (rel as u32, scorer.score(h, &r, t))
        })
        .collect()
}

fn exclude_and_take(
    mut cands: Vec<Candidate<u32>>,
    original: u32,
    exclude: bool,
    k: usize,
) -> Result<Vec<Candidate<u32>>> {
    if exclude {
        cands.retain(|c| c.0 != original);
    }
    if k > cands.len() {
        return Err(Error::NotEnoughCandidates {
            requested: k,
            available: cands.len(),
        });
    }
    Ok(top_k(cands, k))
}

/// `Top(f(e, r, t) : e ∈ E)_{N_e}`.
pub fn retrieve_entity_level(
    model: &EmbeddingModel,
    triple: &Triple,
    config: &RetrieverConfig,
) -> Result<Vec<Candidate<u32>>> {
    check_ids(model, triple)?;
    exclude_and_take(
        entity_scores(model, triple),
        triple.head,
        config.exclude_original,
        config.entity_candidates,
    )
}

/// `Top(f(h, r', t) : r' ∈ R)_{N_r}`.
pub fn retrieve_relation_level(
    model: &EmbeddingModel,
    triple: &Triple,
    config: &RetrieverConfig,
) -> Result<Vec<Candidate<u32>>> {
    check_ids(model, triple)?;
    exclude_and_take(
        relation_scores(model, triple),
        triple.relation,
        config.exclude_original,
        config.relation_candidates,
    )
}

fn pair_search(
    model: &EmbeddingModel,
    triple: &Triple,
    config: &RetrieverConfig,
    entity_pool: Vec<Candidate<u32>>,
    relation_pool: Vec<Candidate<u32>>,
) -> Result<Vec<Candidate<(u32, u32)>>> {
    let m = config.preselect_entities.min(model.num_entities());
    let n = config.preselect_relations.min(model.num_relations());
    let heads = top_k(entity_pool, m);
    let rels = top_k(relation_pool, n);
    let t = model.entity(triple.t());
    let mut scorer = Scorer::new(model);
    let mut r = alloc::vec![0.0; model.relation_dim()];
    let mut pairs = Vec::with_capacity(m * n);
    for &(rel, _) in &rels {
        model.relation_into(rel as usize, &mut r);
        for &(e, _) in &heads {
            if config.exclude_original && e == triple.head && rel == triple.relation {
                continue;
            }
            pairs.push(((e, rel), scorer.score(model.entity(e as usize), &r, t)));
        }
    }
    if config.triple_candidates > pairs.len() {
        return Err(Error::NotEnoughCandidates {
            requested: config.triple_candidates,
            available: pairs.len(),
        });
    }
    Ok(top_k(pairs, config.triple_candidates))
}

/// `Top(f(e, r', t) : (e, r') ∈ E_m × R_n)_{N_t}`.
pub fn retrieve_triple_level(
    model: &EmbeddingModel,
    triple: &Triple,
    config: &RetrieverConfig,
) -> Result<Vec<Candidate<(u32, u32)>>> {
    config.validate()?;
    check_ids(model, triple)?;
    pair_search(
        model,
        triple,
        config,
        entity_scores(model, triple),
        relation_scores(model, triple),
    )
}

/// All three levels for one triple, sharing the entity and relation sweeps.
pub fn retrieve_entry(
    model: &EmbeddingModel,
    triple: &Triple,
    config: &RetrieverConfig,
) -> Result<CacheEntry> {
    check_ids(model, triple)?;
    let ent = entity_scores(model, triple);
    let rel = relation_scores(model, triple);
    let pairs = pair_search(model, triple, config, ent.clone(), rel.clone())?;
    Ok(CacheEntry {
        entities: exclude_and_take(ent, triple.head, config.exclude_original, config.entity_candidates)?,
        relations: exclude_and_take(
            rel,
            triple.relation,
            config.exclude_original,
            config.relation_candidates,
        )?,
        pairs,
    })
}

/// Retrieves analogical objects for every training triple, in order.
pub fn build_cache(
    model: &EmbeddingModel,
    store: &TripleStore,
    config: &RetrieverConfig,
) -> Result<AnalogyCache> {
    config.validate()?;
    let entries = store
        .train
        .iter()
        .map(|t| retrieve_entry(model, t, config))
        .collect::<Result<_>>()?;
    Ok(AnalogyCache {
        config: config.clone(),
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelFamily;
    use alloc::vec;

    fn cfg(ne: usize, nr: usize, nt: usize, m: usize, n: usize) -> RetrieverConfig {
        RetrieverConfig {
            entity_candidates: ne,
            relation_candidates: nr,
            triple_candidates: nt,
            preselect_entities: m,
            preselect_relations: n,
            exclude_original: true,
        }
    }

    #[test]
    fn duplicated_entity_is_top_analogy() {
        // b = a, c far away.
        let m = EmbeddingModel::from_parts(
            ModelFamily::TransE,
            2,
            4,
            1,
            vec![0.1, 0.2, 0.1, 0.2, 5.0, 5.0, 0.3, 0.1],
            vec![0.2, -0.1],
            vec![],
        )
        .unwrap();
        let got = retrieve_entity_level(&m, &Triple::new(0, 0, 3), &cfg(1, 1, 1, 4, 1)).unwrap();
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].0, 1);
    }

    #[test]
    fn duplicated_relation_is_top_analogy() {
        let m = EmbeddingModel::from_parts(
            ModelFamily::TransE,
            1,
            2,
            3,
            vec![0.0, 1.0],
            vec![1.0, 1.0, -4.0],
            vec![],
        )
        .unwrap();
        let got = retrieve_relation_level(&m, &Triple::new(0, 0, 1), &cfg(1, 1, 1, 2, 3)).unwrap();
        assert_eq!(got, vec![(1, 0.0)]);
    }

    #[test]
    fn too_many_requested_is_an_error() {
        let m = EmbeddingModel::init(ModelFamily::TransE, 3, 2, 2, 0).unwrap();
        let t = Triple::new(0, 0, 1);
        assert_eq!(
            retrieve_entity_level(&m, &t, &cfg(3, 1, 1, 3, 2)),
            Err(Error::NotEnoughCandidates { requested: 3, available: 2 })
        );
        assert!(retrieve_relation_level(&m, &t, &cfg(1, 2, 1, 3, 2)).is_err());
        assert!(retrieve_triple_level(&m, &t, &cfg(1, 1, 6, 3, 2)).is_err());
        assert!(retrieve_triple_level(&m, &t, &cfg(1, 1, 7, 3, 2)).is_err());
        assert_eq!(retrieve_triple_level(&m, &t, &cfg(1, 1, 5, 3, 2)).unwrap().len(), 5);
    }

    #[test]
    fn keeping_the_original_allows_it_to_win() {
        let m = EmbeddingModel::init(ModelFamily::TransE, 6, 2, 3, 1).unwrap();
        let mut c = cfg(6, 2, 12, 6, 2);
        c.exclude_original = false;
        let t = Triple::new(2, 1, 4);
        assert_eq!(retrieve_entity_level(&m, &t, &c).unwrap().len(), 6);
        assert_eq!(retrieve_triple_level(&m, &t, &c).unwrap().len(), 12);
    }

    #[test]
    fn top_k_orders_ties_by_id() {
        let got = top_k(vec![(3u32, 1.0), (1, 2.0), (2, 1.0), (0, 1.0)], 3);
        assert_eq!(got, vec![(1, 2.0), (0, 1.0), (2, 1.0)]);
    }

    #[test]
    fn cache_has_one_full_entry_per_train_triple() {
        use crate::store::RawTriple;
        let raw: Vec<RawTriple> = [("a", "r", "b"), ("b", "r", "c"), ("c", "s", "a"), ("d", "s", "b")]
            .iter()
            .map(|(h, r, t)| RawTriple::new(h, r, t))
            .collect();
        let store = TripleStore::build_augmented(&raw, &[], &[]).unwrap();
        let m = EmbeddingModel::init(ModelFamily::RotatE, 4, 4, 3, 2).unwrap();
        let c = cfg(2, 2, 3, 4, 4);
        let cache = build_cache(&m, &store, &c).unwrap();
        assert_eq!(cache.len(), 8);
        for e in &cache.entries {
            assert_eq!((e.entities.len(), e.relations.len(), e.pairs.len()), (2, 2, 3));
        }
        assert_eq!(cache, build_cache(&m, &store, &c).unwrap());
    }
}
