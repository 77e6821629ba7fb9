//! Retrievers against an exhaustive sort over every replacement.

mod common;

use ankge_core::model::{EmbeddingModel, ModelFamily};
use ankge_core::retriever::{
    retrieve_entity_level, retrieve_relation_level, retrieve_triple_level, RetrieverConfig,
};
use ankge_core::Triple;
use common::*;
use rand::Rng;

/// Full sort: score descending, then key ascending.
fn oracle_sort<K: Ord + Copy>(mut all: Vec<(K, f64)>) -> Vec<(K, f64)> {
    all.sort_by(|a, b| {
        if a.1 > b.1 {
            std::cmp::Ordering::Less
        } else if a.1 < b.1 {
            std::cmp::Ordering::Greater
        } else {
            a.0.cmp(&b.0)
        }
    });
    all
}

fn f(m: &EmbeddingModel, h: u32, r: u32, t: u32) -> f64 {
    m.score_triple_ids(h as usize, r as usize, t as usize).unwrap()
}

fn oracle_entities(m: &EmbeddingModel, tr: &Triple, k: usize, exclude: bool) -> Vec<(u32, f64)> {
    let all = (0..m.num_entities() as u32)
        .filter(|&e| !(exclude && e == tr.head))
        .map(|e| (e, f(m, e, tr.relation, tr.tail)))
        .collect();
    oracle_sort(all).into_iter().take(k).collect()
}

fn oracle_relations(m: &EmbeddingModel, tr: &Triple, k: usize, exclude: bool) -> Vec<(u32, f64)> {
    let all = (0..m.num_relations() as u32)
        .filter(|&r| !(exclude && r == tr.relation))
        .map(|r| (r, f(m, tr.head, r, tr.tail)))
        .collect();
    oracle_sort(all).into_iter().take(k).collect()
}

fn oracle_pairs(m: &EmbeddingModel, tr: &Triple, cfg: &RetrieverConfig) -> Vec<((u32, u32), f64)> {
    let heads = oracle_entities(m, tr, cfg.preselect_entities, false);
    let rels = oracle_relations(m, tr, cfg.preselect_relations, false);
    let mut all = Vec::new();
    for &(e, _) in &heads {
        for &(r, _) in &rels {
            if cfg.exclude_original && e == tr.head && r == tr.relation {
                continue;
            }
            all.push(((e, r), f(m, e, r, tr.tail)));
        }
    }
    oracle_sort(all).into_iter().take(cfg.triple_candidates).collect()
}

fn exhaustive_pairs(m: &EmbeddingModel, tr: &Triple, k: usize, exclude: bool) -> Vec<((u32, u32), f64)> {
    let mut all = Vec::new();
    for e in 0..m.num_entities() as u32 {
        for r in 0..m.num_relations() as u32 {
            if exclude && e == tr.head && r == tr.relation {
                continue;
            }
            all.push(((e, r), f(m, e, r, tr.tail)));
        }
    }
    oracle_sort(all).into_iter().take(k).collect()
}

pub fn retrievers_match_exhaustive_oracle_on_random_models() {
    let mut tie_hits = 0;
    for seed in 0..50u64 {
        let mut g = rng(seed);
        let family = ModelFamily::ALL[seed as usize % 4];
        let ne = g.gen_range(10..=200);
        let nr = g.gen_range(3..=20);
        let k = g.gen_range(1..=6);
        let m = random_model_with_ties(family, ne, nr, k, seed);
        let cfg = RetrieverConfig {
            entity_candidates: g.gen_range(1..=5),
            relation_candidates: g.gen_range(1..=nr.min(5) - 1).max(1),
            triple_candidates: g.gen_range(1..=10),
            preselect_entities: g.gen_range(4..=12),
            preselect_relations: g.gen_range(2..=nr),
            exclude_original: seed % 5 != 0,
        };
        for _ in 0..5 {
            let tr = Triple::new(g.gen_range(0..ne as u32), g.gen_range(0..nr as u32), g.gen_range(0..ne as u32));
            let ent = retrieve_entity_level(&m, &tr, &cfg).unwrap();
            assert_eq!(ent, oracle_entities(&m, &tr, cfg.entity_candidates, cfg.exclude_original));
            let rel = retrieve_relation_level(&m, &tr, &cfg).unwrap();
            assert_eq!(rel, oracle_relations(&m, &tr, cfg.relation_candidates, cfg.exclude_original));
            let pairs = retrieve_triple_level(&m, &tr, &cfg).unwrap();
            assert_eq!(pairs, oracle_pairs(&m, &tr, &cfg));
            tie_hits += ent.windows(2).filter(|w| w[0].1 == w[1].1).count();
            tie_hits += pairs.windows(2).filter(|w| w[0].1 == w[1].1).count();
        }
    }
    assert!(tie_hits > 0, "tie construction never produced a tie");
}

pub fn unpruned_triple_level_equals_exhaustive_pair_search() {
    for seed in 0..50u64 {
        let mut g = rng(1000 + seed);
        let family = ModelFamily::ALL[seed as usize % 4];
        let ne = g.gen_range(5..=60);
        let nr = g.gen_range(2..=12);
        let m = random_model_with_ties(family, ne, nr, g.gen_range(1..=5), seed);
        let cfg = RetrieverConfig {
            entity_candidates: 1,
            relation_candidates: 1,
            triple_candidates: g.gen_range(1..=ne * nr - 1),
            preselect_entities: ne,
            preselect_relations: nr,
            exclude_original: true,
        };
        let tr = Triple::new(g.gen_range(0..ne as u32), g.gen_range(0..nr as u32), g.gen_range(0..ne as u32));
        let got = retrieve_triple_level(&m, &tr, &cfg).unwrap();
        assert_eq!(got, exhaustive_pairs(&m, &tr, cfg.triple_candidates, true));
    }
}

pub fn pruned_search_agrees_when_winners_survive_preselection() {
    let mut agreed = 0;
    for seed in 0..40u64 {
        let m = EmbeddingModel::init(ModelFamily::TransE, 50, 10, 4, seed).unwrap();
        let cfg = RetrieverConfig {
            entity_candidates: 1,
            relation_candidates: 1,
            triple_candidates: 3,
            preselect_entities: 5,
            preselect_relations: 3,
            exclude_original: true,
        };
        let tr = Triple::new(seed as u32 % 50, seed as u32 % 10, (seed as u32 * 7) % 50);
        let got = retrieve_triple_level(&m, &tr, &cfg).unwrap();
        let full = exhaustive_pairs(&m, &tr, 3, true);
        let heads: Vec<u32> = oracle_entities(&m, &tr, 5, false).iter().map(|c| c.0).collect();
        let rels: Vec<u32> = oracle_relations(&m, &tr, 3, false).iter().map(|c| c.0).collect();
        let survive = full.iter().all(|((e, r), _)| heads.contains(e) && rels.contains(r));
        if survive {
            assert_eq!(got, full);
            agreed += 1;
        }
        // Every pruned result is a genuine candidate pair with its true score.
        for ((e, r), s) in &got {
            assert_eq!(*s, f(&m, *e, *r, tr.tail));
        }
    }
    assert!(agreed > 0);
}

#[cfg(test)]
mod tests {
    #[test]
    fn retrievers_match_exhaustive_oracle_on_random_models() {
        super::retrievers_match_exhaustive_oracle_on_random_models();
    }

    #[test]
    fn unpruned_triple_level_equals_exhaustive_pair_search() {
        super::unpruned_triple_level_equals_exhaustive_pair_search();
    }

    #[test]
    fn pruned_search_agrees_when_winners_survive_preselection() {
        super::pruned_search_agrees_when_winners_survive_preselection();
    }
}
