//! Filtered ranking against a pointwise brute-force reranker.

mod common;

use ankge_core::analogy::AnalogyParams;
use ankge_core::eval::{ankge_score, evaluate, rank_tail, InferenceConfig, Metrics};
use ankge_core::model::{EmbeddingModel, ModelFamily};
use ankge_core::store::{CountIndex, FilterIndex, RawTriple, TripleStore};
use ankge_core::Triple;
use common::*;
use rand::Rng;

/// Sorts every surviving candidate and returns the mean 1-based position of
/// the tie group holding the gold tail.
fn brute_force_rank(scores: &[(u32, f64)], gold: u32) -> f64 {
    let mut sorted = scores.to_vec();
    sorted.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
    let gold_score = scores.iter().find(|c| c.0 == gold).unwrap().1;
    let first = sorted.iter().position(|c| c.1 == gold_score).unwrap() + 1;
    let last = sorted.iter().rposition(|c| c.1 == gold_score).unwrap() + 1;
    (first + last) as f64 / 2.0
}

fn random_store(g: &mut impl Rng, ne: usize, nr: usize, n: usize) -> TripleStore {
    let mut make = |count: usize| -> Vec<RawTriple> {
        (0..count)
            .map(|_| {
                RawTriple::new(
                    &format!("e{}", g.gen_range(0..ne)),
                    &format!("r{}", g.gen_range(0..nr)),
                    &format!("e{}", g.gen_range(0..ne)),
                )
            })
            .collect()
    };
    let (train, valid, test) = (make(n), make(n / 5 + 1), make(n / 5 + 1));
    TripleStore::build_augmented(&train, &valid, &test).unwrap()
}

pub fn rank_tail_matches_brute_force_reranker() {
    let mut checked = 0;
    for seed in 0..100u64 {
        let mut g = rng(seed);
        let (ne, nr) = (g.gen_range(5..=200), g.gen_range(1..=6));
        let store = random_store(&mut g, ne, nr, 120);
        let filter = FilterIndex::build(&store);
        let counts = CountIndex::build(&store.train);
        let family = ModelFamily::ALL[seed as usize % 4];
        let k = g.gen_range(1..=5);
        let mut model = random_model_with_ties(family, store.num_entities(), store.num_relations(), k, seed);
        if seed % 10 == 0 {
            // Fully tied scores.
            let (e, _, _) = model.tables_mut();
            e.iter_mut().for_each(|x| *x = 0.25);
        }
        let mut params = AnalogyParams::identity(&model, 1.0);
        params.v_entity.iter_mut().for_each(|x| *x += g.gen_range(-0.5..0.5));
        params.v_relation.iter_mut().for_each(|x| *x += g.gen_range(-0.5..0.5));
        params.transform.iter_mut().for_each(|x| *x = g.gen_range(-0.1..0.1));
        let cfg = InferenceConfig {
            alpha: [g.gen_range(0.0..0.3), g.gen_range(0.0..0.3), g.gen_range(0.0..0.3)],
            candidates: [g.gen_range(1..4), g.gen_range(1..4), g.gen_range(1..6)],
            adaptive: seed % 7 != 0,
        };
        for tr in store.test.iter().take(10) {
            let got = rank_tail(&model, Some(&params), tr, &filter, &counts, &cfg).unwrap();
            let survivors = |score: &dyn Fn(u32) -> f64| -> Vec<(u32, f64)> {
                (0..store.num_entities() as u32)
                    .filter(|&c| c == tr.tail || !filter.contains(tr.head, tr.relation, c))
                    .map(|c| (c, score(c)))
                    .collect()
            };
            let base = survivors(&|c| model.score_triple_ids(tr.h(), tr.r(), c as usize).unwrap());
            let lambda = got.lambda;
            let enh = survivors(&|c| {
                ankge_score(&model, &params, &Triple::new(tr.head, tr.relation, c), lambda).unwrap()
            });
            assert_eq!(got.base_rank, brute_force_rank(&base, tr.tail), "seed {seed}");
            assert_eq!(got.enhanced_rank, brute_force_rank(&enh, tr.tail), "seed {seed}");
            checked += 1;
        }
    }
    assert!(checked >= 1000, "only {checked} instances");
}

pub fn evaluate_aggregates_ranks_in_test_order() {
    let mut g = rng(77);
    let store = random_store(&mut g, 30, 3, 80);
    let model = EmbeddingModel::init(ModelFamily::TransE, store.num_entities(), store.num_relations(), 4, 1).unwrap();
    let filter = FilterIndex::build(&store);
    let counts = CountIndex::build(&store.train);
    let report = evaluate(&model, None, &store.test, &filter, &counts, &InferenceConfig::default()).unwrap();
    assert_eq!(report.ranks.len(), store.test.len());
    for (r, t) in report.ranks.iter().zip(&store.test) {
        assert_eq!(r.triple, *t);
        assert_eq!(r.base_rank, r.enhanced_rank);
    }
    let n = report.ranks.len() as f64;
    let mrr: f64 = report.ranks.iter().map(|r| 1.0 / r.base_rank).sum::<f64>() / n;
    assert!((report.metrics.mrr - mrr).abs() < 1e-12);
    let m = report.metrics;
    assert!(m.hits1 <= m.hits3 && m.hits3 <= m.hits10);
    assert!(m.mrr >= 1.0 / store.num_entities() as f64 && m.mrr <= 1.0);
}

pub fn metrics_for_hand_ranks() {
    let m = Metrics::from_ranks([1.0, 2.0, 4.0]);
    assert!((m.mrr - 0.583333).abs() < 1e-6);
    assert!((m.mrr - 1.75 / 3.0).abs() < 1e-9);
}

#[cfg(test)]
mod tests {
    #[test]
    fn rank_tail_matches_brute_force_reranker() {
        super::rank_tail_matches_brute_force_reranker();
    }

    #[test]
    fn evaluate_aggregates_ranks_in_test_order() {
        super::evaluate_aggregates_ranks_in_test_order();
    }

    #[test]
    fn metrics_for_hand_ranks() {
        super::metrics_for_hand_ranks();
    }
}
