mod common;

use ankge_core::analogy::{aggregate, beta_from_scores, train_analogy, AnalogyParams, AnalogyTrainConfig, AnalogyTrainer, Similarity};
use ankge_core::eval::{adaptive_weights, ankge_score, evaluate, InferenceConfig};
use ankge_core::model::{EmbeddingModel, ModelFamily};
use ankge_core::retriever::{build_cache, retrieve_entry, RetrieverConfig};
use ankge_core::store::{CountIndex, FilterIndex, RawTriple, TripleStore};
use ankge_core::train::{BaseTrainConfig, BaseTrainer};
use ankge_core::Triple;
use proptest::prelude::*;

fn family() -> impl Strategy<Value = ModelFamily> {
    prop::sample::select(ModelFamily::ALL.to_vec())
}

fn raw_triples(ne: usize, nr: usize, max: usize) -> impl Strategy<Value = Vec<RawTriple>> {
    prop::collection::vec((0..ne, 0..nr, 0..ne), 1..max).prop_map(|v| {
        v.into_iter()
            .map(|(h, r, t)| RawTriple::new(&format!("e{h}"), &format!("r{r}"), &format!("e{t}")))
            .collect()
    })
}

fn toy_store() -> TripleStore {
    let mut train = Vec::new();
    for i in 0..12 {
        train.push(RawTriple::new(&format!("a{i}"), "likes", &format!("b{}", i % 4)));
        train.push(RawTriple::new(&format!("b{}", i % 4), "near", &format!("c{}", i % 3)));
        train.push(RawTriple::new(&format!("a{i}"), "visits", &format!("c{}", i % 3)));
    }
    let test = vec![RawTriple::new("a0", "visits", "c0"), RawTriple::new("a5", "likes", "b1")];
    TripleStore::build_augmented(&train, &[], &test).unwrap()
}

fn small_base(store: &TripleStore, family: ModelFamily, seed: u64) -> EmbeddingModel {
    let cfg = BaseTrainConfig {
        negative_samples: 4,
        batch_size: 16,
        learning_rate: 0.05,
        epochs: 3,
        dim: 4,
        seed,
        margin: 3.0,
        ..BaseTrainConfig::default()
    };
    let mut trainer = BaseTrainer::new(store, family, cfg).unwrap();
    for _ in 0..3 {
        trainer.run_epoch().unwrap();
    }
    trainer.into_model()
}

fn small_retriever() -> RetrieverConfig {
    RetrieverConfig {
        entity_candidates: 2,
        relation_candidates: 2,
        triple_candidates: 3,
        preselect_entities: 4,
        preselect_relations: 3,
        exclude_original: true,
    }
}

fn assert_family_invariants(m: &EmbeddingModel) {
    let k = m.dim();
    for r in 0..m.num_relations() {
        let row = m.relation(r);
        match m.family() {
            ModelFamily::RotatE => {
                for &phase in &row {
                    let (s, c) = phase.sin_cos();
                    assert!(((c * c + s * s).sqrt() - 1.0).abs() < 1e-12);
                }
            }
            ModelFamily::Hake => assert!(row[..k].iter().all(|&x| x > 0.0)),
            _ => {}
        }
        assert!(row.iter().all(|x| x.is_finite()));
    }
    assert!(m.entity_table().iter().all(|x| x.is_finite()));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // Spreads beyond ~36 saturate the sum to 1.0 in f64.
    fn beta_weights_sum_below_one(s in prop::array::uniform4(-15.0f64..15.0)) {
        let b = beta_from_scores(s[0], s[1], s[2], s[3]);
        prop_assert!(b.iter().all(|&x| x > 0.0 && x < 1.0));
        prop_assert!(b.iter().sum::<f64>() < 1.0);
    }

    fn beta_weights_equal_scores(s in -50.0f64..50.0) {
        let b = beta_from_scores(s, s, s, s);
        prop_assert!((b.iter().sum::<f64>() - 0.75).abs() < 1e-15);
    }

    fn augmentation_doubles_train(train in raw_triples(8, 3, 40), test in raw_triples(8, 3, 5)) {
        let plain = TripleStore::build(&train, &[], &test);
        let aug = TripleStore::build_augmented(&train, &[], &test).unwrap();
        prop_assert_eq!(aug.train.len(), 2 * plain.train.len());
        prop_assert_eq!(aug.num_entities(), plain.num_entities());
        prop_assert_eq!(aug.num_relations(), 2 * plain.num_relations());
        let n = plain.train.len();
        for (i, t) in plain.train.iter().enumerate() {
            prop_assert_eq!(aug.train[i], *t);
            let rev = aug.train[n + i];
            prop_assert_eq!((rev.head, rev.relation, rev.tail), (t.tail, aug.reverse_of(t.relation), t.head));
        }
        let filter = FilterIndex::build(&aug);
        for t in &aug.test {
            prop_assert!(filter.contains(t.head, t.relation, t.tail));
        }
        let counts = CountIndex::build(&aug.train);
        let total = aug.train.len() as u64;
        prop_assert_eq!(counts.totals(), (total, total, total));
    }

    fn retrieval_lists_are_monotone_and_exclusive(fam in family(), seed in 0u64..1000, h in 0u32..30, r in 0u32..6, t in 0u32..30) {
        let m = common::random_model_with_ties(fam, 30, 6, 3, seed);
        let tr = Triple::new(h, r, t);
        let entry = retrieve_entry(&m, &tr, &small_retriever()).unwrap();
        prop_assert!(entry.entities.windows(2).all(|w| w[0].1 >= w[1].1));
        prop_assert!(entry.relations.windows(2).all(|w| w[0].1 >= w[1].1));
        prop_assert!(entry.pairs.windows(2).all(|w| w[0].1 >= w[1].1));
        prop_assert!(entry.entities.iter().all(|c| c.0 != h));
        prop_assert!(entry.relations.iter().all(|c| c.0 != r));
        prop_assert!(entry.pairs.iter().all(|c| c.0 != (h, r)));
    }

    fn aggregates_lie_in_candidate_hull(fam in family(), seed in 0u64..1000, h in 0u32..30, r in 0u32..6, t in 0u32..30) {
        let m = common::random_model_with_ties(fam, 30, 6, 3, seed);
        let entry = retrieve_entry(&m, &Triple::new(h, r, t), &small_retriever()).unwrap();
        let agg = aggregate(&entry, &m).unwrap();
        let within = |value: &[f64], rows: Vec<Vec<f64>>| {
            value.iter().enumerate().all(|(i, &v)| {
                let lo = rows.iter().map(|row| row[i]).fold(f64::INFINITY, f64::min);
                let hi = rows.iter().map(|row| row[i]).fold(f64::NEG_INFINITY, f64::max);
                v >= lo - 1e-12 && v <= hi + 1e-12
            })
        };
        prop_assert!(within(&agg.entity, entry.entities.iter().map(|c| m.entity(c.0 as usize).to_vec()).collect()));
        prop_assert!(within(&agg.relation, entry.relations.iter().map(|c| m.relation(c.0 as usize)).collect()));
        prop_assert!(within(&agg.triple.entity, entry.pairs.iter().map(|c| m.entity(c.0 .0 as usize).to_vec()).collect()));
        prop_assert!(within(&agg.triple.relation, entry.pairs.iter().map(|c| m.relation(c.0 .1 as usize)).collect()));
    }

    fn adaptive_weights_bounded_by_alpha(train in raw_triples(6, 2, 30), a in prop::array::uniform3(0.0f64..1.0), n in prop::array::uniform3(1usize..6)) {
        let store = TripleStore::build(&train, &[], &[]);
        let counts = CountIndex::build(&store.train);
        let cfg = InferenceConfig { alpha: a, candidates: n, adaptive: true };
        for t in &store.train {
            let l = adaptive_weights(&counts, t, &cfg);
            for i in 0..3 {
                prop_assert!(l[i] >= 0.0 && l[i] <= a[i]);
            }
        }
    }

    fn identity_params_scale_base_score(fam in family(), seed in 0u64..1000, l in prop::array::uniform3(0.0f64..1.0), h in 0u32..20, r in 0u32..5, t in 0u32..20) {
        let m = EmbeddingModel::init(fam, 20, 5, 3, seed).unwrap();
        let p = AnalogyParams::identity(&m, 1.0);
        let tr = Triple::new(h, r, t);
        let base = m.score_triple_ids(tr.h(), tr.r(), tr.t()).unwrap();
        let s = ankge_score(&m, &p, &tr, l).unwrap();
        prop_assert!((s - (1.0 + l[0] + l[1] + l[2]) * base).abs() <= 1e-12 * base.abs().max(1.0));
        prop_assert_eq!(ankge_score(&m, &p, &tr, [0.0; 3]).unwrap(), base);
    }
}

pub fn family_invariants_hold_after_every_step() {
    let store = toy_store();
    for family in [ModelFamily::RotatE, ModelFamily::Hake] {
        let cfg = BaseTrainConfig {
            negative_samples: 8,
            batch_size: 8,
            learning_rate: 0.5,
            epochs: 5,
            dim: 4,
            seed: 3,
            ..BaseTrainConfig::default()
        };
        let mut trainer = BaseTrainer::new(&store, family, cfg).unwrap();
        assert_family_invariants(trainer.model());
        let mut steps = 0;
        for _ in 0..5 {
            trainer
                .run_epoch_with(|m| {
                    assert_family_invariants(m);
                    steps += 1;
                })
                .unwrap();
        }
        assert!(steps >= 5 * (store.train.len() / 8));
    }
}

pub fn analogy_training_leaves_base_untouched_and_lowers_loss() {
    let store = toy_store();
    for family in ModelFamily::ALL {
        let model = small_base(&store, family, 5);
        let snapshot = model.clone();
        let cache = build_cache(&model, &store, &small_retriever()).unwrap();
        let cfg = AnalogyTrainConfig {
            epochs: 30,
            batch_size: 16,
            learning_rate: 0.01,
            similarity: Similarity::Euclidean,
            ..AnalogyTrainConfig::default()
        };
        let mut trainer = AnalogyTrainer::new(&model, &store, &cache, cfg).unwrap();
        let first = trainer.run_epoch().unwrap();
        let mut last = first;
        for _ in 1..30 {
            last = trainer.run_epoch().unwrap();
        }
        assert!(last < first, "{family}: {first} -> {last}");
        assert_eq!(model.entity_table(), snapshot.entity_table());
        assert_eq!(model.relation_table(), snapshot.relation_table());
        assert_eq!(model.mix_weight(), snapshot.mix_weight());
    }
}

pub fn seeded_pipeline_is_deterministic() {
    let store = toy_store();
    let run = || {
        let model = small_base(&store, ModelFamily::PairRE, 9);
        let cache = build_cache(&model, &store, &small_retriever()).unwrap();
        let cfg = AnalogyTrainConfig {
            epochs: 3,
            batch_size: 10,
            seed: 4,
            ..AnalogyTrainConfig::default()
        };
        let params = train_analogy(&model, &store, &cache, &cfg, |_, _| {}).unwrap();
        (model, cache, params)
    };
    let (m1, c1, p1) = run();
    let (m2, c2, p2) = run();
    assert_eq!(m1.entity_table(), m2.entity_table());
    assert_eq!(m1.relation_table(), m2.relation_table());
    assert_eq!(c1, c2);
    assert_eq!(p1.v_entity, p2.v_entity);
    assert_eq!(p1.v_relation, p2.v_relation);
    assert_eq!(p1.transform, p2.transform);
}

pub fn zero_alpha_evaluation_matches_base_exactly() {
    let store = toy_store();
    let model = small_base(&store, ModelFamily::Hake, 1);
    let cache = build_cache(&model, &store, &small_retriever()).unwrap();
    let params = train_analogy(&model, &store, &cache, &AnalogyTrainConfig { epochs: 2, ..Default::default() }, |_, _| {}).unwrap();
    let filter = FilterIndex::build(&store);
    let counts = CountIndex::build(&store.train);
    let zero = InferenceConfig { alpha: [0.0; 3], ..Default::default() };
    let with = evaluate(&model, Some(&params), &store.test, &filter, &counts, &zero).unwrap();
    let without = evaluate(&model, None, &store.test, &filter, &counts, &zero).unwrap();
    assert_eq!(with.metrics, without.metrics);
    for (a, b) in with.ranks.iter().zip(&without.ranks) {
        assert_eq!(a.enhanced_rank, b.base_rank);
    }
}

#[allow(dead_code)]
pub fn beta_properties() {
    beta_weights_sum_below_one();
    beta_weights_equal_scores();
}

#[allow(dead_code)]
pub fn aggregate_properties() {
    aggregates_lie_in_candidate_hull();
}

#[allow(dead_code)]
pub fn identity_properties() {
    identity_params_scale_base_score();
}

#[cfg(test)]
mod tests {
    #[test]
    fn beta_weights_sum_below_one() {
        super::beta_weights_sum_below_one();
    }

    #[test]
    fn beta_weights_equal_scores() {
        super::beta_weights_equal_scores();
    }

    #[test]
    fn augmentation_doubles_train() {
        super::augmentation_doubles_train();
    }

    #[test]
    fn retrieval_lists_are_monotone_and_exclusive() {
        super::retrieval_lists_are_monotone_and_exclusive();
    }

    #[test]
    fn aggregates_lie_in_candidate_hull() {
        super::aggregates_lie_in_candidate_hull();
    }

    #[test]
    fn adaptive_weights_bounded_by_alpha() {
        super::adaptive_weights_bounded_by_alpha();
    }

    #[test]
    fn identity_params_scale_base_score() {
        super::identity_params_scale_base_score();
    }

    #[test]
    fn family_invariants_hold_after_every_step() {
        super::family_invariants_hold_after_every_step();
    }

    #[test]
    fn analogy_training_leaves_base_untouched_and_lowers_loss() {
        super::analogy_training_leaves_base_untouched_and_lowers_loss();
    }

    #[test]
    fn seeded_pipeline_is_deterministic() {
        super::seeded_pipeline_is_deterministic();
    }

    #[test]
    fn zero_alpha_evaluation_matches_base_exactly() {
        super::zero_alpha_evaluation_matches_base_exactly();
    }
}
