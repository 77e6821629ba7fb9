//! Sweeps analogy-training settings on the synthetic KG and reports the
//! test MRR change at interpolation weights chosen on the valid split.
//!
//! Environment: FAM, SEEDS, PEOPLE, DIM, EP, NEG, LR, MARGIN, NT, ANLR, W,
//! AEPS (list), ANEP (list).
//!
//! ```text
//! FAM=PairRE SEEDS=0,1,2 cargo run --release --example synth_sweep
//! ```

use ankge::synth::{generate, SynthConfig};
use ankge_core::analogy::{train_analogy, AnalogyTrainConfig};
use ankge_core::eval::{evaluate, InferenceConfig};
use ankge_core::model::ModelFamily;
use ankge_core::retriever::{build_cache, RetrieverConfig};
use ankge_core::train::{train_base, BaseTrainConfig};
use ankge_core::TripleStore;

fn env<T: std::str::FromStr>(k: &str, d: T) -> T {
    std::env::var(k).ok().and_then(|v| v.parse().ok()).unwrap_or(d)
}
fn list<T: std::str::FromStr>(k: &str, d: &str) -> Vec<T> where T::Err: std::fmt::Debug {
    env(k, d.to_string()).split(',').map(|x| x.parse().unwrap()).collect()
}

fn main() {
    let family: ModelFamily = env("FAM", "TransE".to_string()).parse().unwrap();
    let seeds: Vec<u64> = list("SEEDS", "0,1,2");
    let epss: Vec<f64> = list("AEPS", "1e-8,0");
    let eps_list: Vec<usize> = list("ANEP", "10,30");
    let mut deltas = std::collections::BTreeMap::new();
    for &seed in &seeds {
        let d = generate(&SynthConfig { seed, people: env("PEOPLE", 1200), ..SynthConfig::default() });
        let store = TripleStore::build_augmented(&d.train, &d.valid, &d.test).unwrap();
        let cfg = BaseTrainConfig { dim: env("DIM", 32), epochs: env("EP", 60), negative_samples: env("NEG", 32), batch_size: 256, learning_rate: env("LR", 0.01), margin: env("MARGIN", 6.0), seed, ..Default::default() };
        let model = train_base(&store, family, &cfg, |_| {}).unwrap();
        let cache = build_cache(&model, &store, &RetrieverConfig { triple_candidates: env("NT", 5), ..Default::default() }).unwrap();
        let filter = store.filter_index();
        let counts = store.count_index();
        for &aeps in &epss {
            for &ep in &eps_list {
                let ac = AnalogyTrainConfig { epochs: ep, learning_rate: env("ANLR", 1e-3), batch_size: 256, seed, adam_epsilon: aeps, ent_rel_weight: env("W", 1.0), ..Default::default() };
                let params = train_analogy(&model, &store, &cache, &ac, |_, _| {}).unwrap();
                let levels = [0.0, 0.05, 0.1, 0.3];
                let mut best = (f64::MIN, [0.0; 3]);
                for a in levels { for b in levels { for c in levels {
                    let ic = InferenceConfig { alpha: [a, b, c], ..Default::default() };
                    let v = evaluate(&model, Some(&params), &store.valid, &filter, &counts, &ic).unwrap();
                    if v.metrics.mrr > best.0 + 1e-12 { best = (v.metrics.mrr, [a, b, c]); }
                }}}
                let ic = InferenceConfig { alpha: best.1, ..Default::default() };
                let t = evaluate(&model, Some(&params), &store.test, &filter, &counts, &ic).unwrap();
                let delta = t.metrics.mrr - t.base.mrr;
                println!("{family} seed {seed} eps {aeps:e} ep {ep}: alpha {:?} test {:.4} -> {:.4} ({delta:+.4})", best.1, t.base.mrr, t.metrics.mrr);
                deltas.entry(format!("eps {aeps:e} ep {ep}")).or_insert_with(Vec::new).push(delta);
            }
        }
    }
    for (k, mut v) in deltas {
        v.sort_by(f64::total_cmp);
        println!("{family} {k}: deltas {v:?} median {:+.4}", v[v.len() / 2]);
    }
}
