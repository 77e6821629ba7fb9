//! Analogy functions and their training against aggregated analogical
//! objects. Base model parameters are read-only here.
//!
//! - `r_a = v_R[r] ∘ r`
//! - `h_a = v_E[h] ∘ h + w · M (v_R[r] ∘ r)`
//! - `z_a = g(h_a, r_a)`
//!
//! Each level is pulled towards a softmax-weighted mix of its retrieved
//! objects with `log σ(γ · dist(X_a, X⁺) − f(analogy triple))`, and the three
//! levels are weighted by `β`, a softmax over the scores of the aggregated
//! triples and the original triple.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::math::{dot, exp, l2_norm, log_sigmoid, sigmoid, softmax};
use crate::model::EmbeddingModel;
use crate::optim::Adam;
use crate::retriever::{AnalogyCache, CacheEntry};
use crate::store::{Triple, TripleStore};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Similarity {
    Euclidean,
    Cosine,
}

impl Similarity {
    pub fn name(self) -> &'static str {
        match self {
            Similarity::Euclidean => "euclidean",
            Similarity::Cosine => "cosine",
        }
    }
}

impl core::str::FromStr for Similarity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean" => Ok(Similarity::Euclidean),
            "cosine" => Ok(Similarity::Cosine),
            _ => Err(Error::InvalidConfig(alloc::format!("unknown similarity {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalogyTrainConfig {
    /// Distance weight `γ` of the level loss.
    pub gamma: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub similarity: Similarity,
    /// Weight `w` of the relation term in the entity analogy function.
    pub ent_rel_weight: f64,
    /// `ε` of the Adam update.
    pub adam_epsilon: f64,
}

impl Default for AnalogyTrainConfig {
    fn default() -> Self {
        AnalogyTrainConfig {
            gamma: 10.0,
            learning_rate: 1e-3,
            epochs: 10,
            batch_size: 1024,
            seed: 0,
            similarity: Similarity::Euclidean,
            ent_rel_weight: 1.0,
            adam_epsilon: 1e-8,
        }
    }
}

impl AnalogyTrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0) {
            return Err(Error::InvalidConfig("gamma must be positive".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::InvalidConfig("learning_rate must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be positive".into()));
        }
        if !(self.adam_epsilon >= 0.0) || !self.adam_epsilon.is_finite() {
            return Err(Error::InvalidConfig("adam_epsilon must be finite and >= 0".into()));
        }
        if !self.ent_rel_weight.is_finite() {
            return Err(Error::InvalidConfig("ent_rel_weight must be finite".into()));
        }
        Ok(())
    }
}

/// Trainable projection vectors and the transformation matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalogyParams {
    num_entities: usize,
    num_relations: usize,
    entity_dim: usize,
    relation_dim: usize,
    /// `|E| × d_e`
    pub v_entity: Vec<f64>,
    /// `|R| × d_r`
    pub v_relation: Vec<f64>,
    /// `d_e × d_r`, row-major.
    pub transform: Vec<f64>,
    pub ent_rel_weight: f64,
}

/// Gradients for [`AnalogyParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct AnalogyGrads {
    pub v_entity: Vec<f64>,
    pub v_relation: Vec<f64>,
    pub transform: Vec<f64>,
}

impl AnalogyGrads {
    fn zero(&mut self) {
        self.v_entity.iter_mut().for_each(|x| *x = 0.0);
        self.v_relation.iter_mut().for_each(|x| *x = 0.0);
        self.transform.iter_mut().for_each(|x| *x = 0.0);
    }
}

impl AnalogyParams {
    /// `v_E = v_R = 1`, `M = 0`: every analogy function starts as the identity.
    pub fn identity(model: &EmbeddingModel, ent_rel_weight: f64) -> Self {
        let de = model.entity_dim();
        let dr = model.relation_dim();
        AnalogyParams {
            num_entities: model.num_entities(),
            num_relations: model.num_relations(),
            entity_dim: de,
            relation_dim: dr,
            v_entity: vec![1.0; model.num_entities() * de],
            v_relation: vec![1.0; model.num_relations() * dr],
            transform: vec![0.0; de * dr],
            ent_rel_weight,
        }
    }

    pub fn from_parts(
        model: &EmbeddingModel,
        v_entity: Vec<f64>,
        v_relation: Vec<f64>,
        transform: Vec<f64>,
        ent_rel_weight: f64,
    ) -> Result<Self> {
        let de = model.entity_dim();
        let dr = model.relation_dim();
        for (expected, got) in [
            (model.num_entities() * de, v_entity.len()),
            (model.num_relations() * dr, v_relation.len()),
            (de * dr, transform.len()),
        ] {
            if expected != got {
                return Err(Error::DimensionMismatch { expected, got });
            }
        }
        Ok(AnalogyParams {
            num_entities: model.num_entities(),
            num_relations: model.num_relations(),
            entity_dim: de,
            relation_dim: dr,
            v_entity,
            v_relation,
            transform,
            ent_rel_weight,
        })
    }

    pub fn entity_dim(&self) -> usize {
        self.entity_dim
    }

    pub fn relation_dim(&self) -> usize {
        self.relation_dim
    }

    pub fn num_entities(&self) -> usize {
        self.num_entities
    }

    pub fn num_relations(&self) -> usize {
        self.num_relations
    }

    pub fn zero_grads(&self) -> AnalogyGrads {
        AnalogyGrads {
            v_entity: vec![0.0; self.v_entity.len()],
            v_relation: vec![0.0; self.v_relation.len()],
            transform: vec![0.0; self.transform.len()],
        }
    }

    /// Checks that these parameters were built for `model`'s layout.
    pub fn check_model(&self, model: &EmbeddingModel) -> Result<()> {
        for (expected, got) in [
            (model.entity_dim(), self.entity_dim),
            (model.relation_dim(), self.relation_dim),
            (model.num_entities(), self.num_entities),
            (model.num_relations(), self.num_relations),
        ] {
            if expected != got {
                return Err(Error::DimensionMismatch { expected, got });
            }
        }
        Ok(())
    }

    fn v_e(&self, h: usize) -> &[f64] {
        &self.v_entity[h * self.entity_dim..(h + 1) * self.entity_dim]
    }

    fn v_r(&self, r: usize) -> &[f64] {
        &self.v_relation[r * self.relation_dim..(r + 1) * self.relation_dim]
    }

    fn check_ids(&self, h: Option<usize>, r: usize) -> Result<()> {
        if let Some(h) = h {
            if h >= self.num_entities {
                return Err(Error::entity(h, self.num_entities));
            }
        }
        if r >= self.num_relations {
            return Err(Error::relation(r, self.num_relations));
        }
        Ok(())
    }

    /// `r_a = v_R[r] ∘ r`.
    pub fn f_rel(&self, model: &EmbeddingModel, r: usize) -> Result<Vec<f64>> {
        self.check_ids(None, r)?;
        Ok(self.relation_analogy(&model.relation(r), r))
    }

    /// `h_a = v_E[h] ∘ h + w · M (v_R[r] ∘ r)`.
    pub fn f_ent(&self, model: &EmbeddingModel, h: usize, r: usize) -> Result<Vec<f64>> {
        self.check_ids(Some(h), r)?;
        let r_a = self.relation_analogy(&model.relation(r), r);
        Ok(self.entity_analogy(model.entity(h), h, &r_a))
    }

    /// `z_a = g(h_a, r_a)`.
    pub fn f_trp(&self, model: &EmbeddingModel, h: usize, r: usize) -> Result<Vec<f64>> {
        self.check_ids(Some(h), r)?;
        let (h_a, r_a) = self.analogy_rows(model, h, r);
        model.compose(&h_a, &r_a)
    }

    fn relation_analogy(&self, r_row: &[f64], r: usize) -> Vec<f64> {
        self.v_r(r).iter().zip(r_row).map(|(v, x)| v * x).collect()
    }

    fn entity_analogy(&self, h_row: &[f64], h: usize, r_a: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = self.v_e(h).iter().zip(h_row).map(|(v, x)| v * x).collect();
        if self.ent_rel_weight != 0.0 {
            let dr = self.relation_dim;
            for (i, o) in out.iter_mut().enumerate() {
                let row = &self.transform[i * dr..(i + 1) * dr];
                *o += self.ent_rel_weight * dot(row, r_a);
            }
        }
        out
    }

    /// `(h_a, r_a)` for a head and relation id (unchecked).
    pub fn analogy_rows(&self, model: &EmbeddingModel, h: usize, r: usize) -> (Vec<f64>, Vec<f64>) {
        let r_a = self.relation_analogy(&model.relation(r), r);
        let h_a = self.entity_analogy(model.entity(h), h, &r_a);
        (h_a, r_a)
    }
}

fn weighted_sum<'a>(rows: impl Iterator<Item = &'a [f64]>, weights: &[f64], len: usize) -> Vec<f64> {
    let mut out = vec![0.0; len];
    for (row, &w) in rows.zip(weights) {
        for (o, x) in out.iter_mut().zip(row) {
            *o += w * x;
        }
    }
    out
}

fn scores_of<K>(cands: &[(K, f64)]) -> Vec<f64> {
    cands.iter().map(|c| c.1).collect()
}

/// `h⁺ = Σ_i softmax(s)_i · h_i` over the cached entity candidates.
pub fn aggregate_entity(entry: &CacheEntry, model: &EmbeddingModel) -> Result<Vec<f64>> {
    if entry.entities.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    for c in &entry.entities {
        model.check_entity(c.0 as usize)?;
    }
    let w = softmax(&scores_of(&entry.entities));
    Ok(weighted_sum(
        entry.entities.iter().map(|c| model.entity(c.0 as usize)),
        &w,
        model.entity_dim(),
    ))
}

/// `r⁺ = Σ_i softmax(s)_i · r_i` over the cached relation candidates.
pub fn aggregate_relation(entry: &CacheEntry, model: &EmbeddingModel) -> Result<Vec<f64>> {
    if entry.relations.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    for c in &entry.relations {
        model.check_relation(c.0 as usize)?;
    }
    let w = softmax(&scores_of(&entry.relations));
    let rows: Vec<Vec<f64>> = entry.relations.iter().map(|c| model.relation(c.0 as usize)).collect();
    Ok(weighted_sum(rows.iter().map(Vec::as_slice), &w, model.relation_dim()))
}

/// Triple-level aggregate: one softmax over the pair scores weights both
/// the entity sum `z_e⁺` and the relation sum `z_r⁺`; `z⁺ = g(z_e⁺, z_r⁺)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TripleAggregate {
    pub entity: Vec<f64>,
    pub relation: Vec<f64>,
    pub composed: Vec<f64>,
}

pub fn aggregate_triple(entry: &CacheEntry, model: &EmbeddingModel) -> Result<TripleAggregate> {
    if entry.pairs.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    for c in &entry.pairs {
        model.check_entity(c.0 .0 as usize)?;
        model.check_relation(c.0 .1 as usize)?;
    }
    let w = softmax(&scores_of(&entry.pairs));
    let entity = weighted_sum(
        entry.pairs.iter().map(|c| model.entity(c.0 .0 as usize)),
        &w,
        model.entity_dim(),
    );
    let rel_rows: Vec<Vec<f64>> = entry.pairs.iter().map(|c| model.relation(c.0 .1 as usize)).collect();
    let relation = weighted_sum(rel_rows.iter().map(Vec::as_slice), &w, model.relation_dim());
    let composed = model.compose(&entity, &relation)?;
    Ok(TripleAggregate {
        entity,
        relation,
        composed,
    })
}

/// All aggregated targets of one training triple.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregates {
    pub entity: Vec<f64>,
    pub relation: Vec<f64>,
    pub triple: TripleAggregate,
}

pub fn aggregate(entry: &CacheEntry, model: &EmbeddingModel) -> Result<Aggregates> {
    Ok(Aggregates {
        entity: aggregate_entity(entry, model)?,
        relation: aggregate_relation(entry, model)?,
        triple: aggregate_triple(entry, model)?,
    })
}

/// Distance between an analogy embedding and its target, plus its gradient
/// with respect to the analogy embedding.
fn distance_with_grad(xa: &[f64], target: &[f64], similarity: Similarity) -> (f64, Vec<f64>) {
    match similarity {
        Similarity::Euclidean => {
            let diff: Vec<f64> = xa.iter().zip(target).map(|(a, b)| a - b).collect();
            let d = l2_norm(&diff);
            let grad = if d > 0.0 {
                diff.iter().map(|x| x / d).collect()
            } else {
                vec![0.0; diff.len()]
            };
            (d, grad)
        }
        Similarity::Cosine => {
            let na = l2_norm(xa);
            let nb = l2_norm(target);
            if na == 0.0 || nb == 0.0 {
                return (1.0, vec![0.0; xa.len()]);
            }
            let c = dot(xa, target) / (na * nb);
            let grad = xa
                .iter()
                .zip(target)
                .map(|(a, b)| -(b / (na * nb) - c * a / (na * na)))
                .collect();
            (1.0 - c, grad)
        }
    }
}

fn distance(xa: &[f64], target: &[f64], similarity: Similarity) -> f64 {
    distance_with_grad(xa, target, similarity).0
}

/// `log σ(γ · dist − s)` where `dist` is the euclidean distance or the
/// cosine distance `1 − cos`.
pub fn level_loss(xa: &[f64], target: &[f64], analogy_score: f64, gamma: f64, similarity: Similarity) -> Result<f64> {
    if xa.len() != target.len() {
        return Err(Error::DimensionMismatch {
            expected: target.len(),
            got: xa.len(),
        });
    }
    Ok(level_loss_from_distance(distance(xa, target, similarity), analogy_score, gamma))
}

pub fn level_loss_from_distance(dist: f64, analogy_score: f64, gamma: f64) -> f64 {
    log_sigmoid(gamma * dist - analogy_score)
}

/// `β = (e^{s_E}, e^{s_R}, e^{s_T}) / (e^{s_E} + e^{s_R} + e^{s_T} + e^{s_0})`.
pub fn beta_from_scores(entity: f64, relation: f64, triple: f64, original: f64) -> [f64; 3] {
    let max = entity.max(relation).max(triple).max(original);
    let e = [exp(entity - max), exp(relation - max), exp(triple - max)];
    let total = e[0] + e[1] + e[2] + exp(original - max);
    [e[0] / total, e[1] / total, e[2] / total]
}

/// Scores the three aggregated triples and the original, then applies
/// [`beta_from_scores`].
pub fn beta_weights(model: &EmbeddingModel, triple: &Triple, agg: &Aggregates) -> Result<[f64; 3]> {
    let h = model.entity(triple.h());
    let r = model.relation(triple.r());
    let t = model.entity(triple.t());
    let s_e = model.score(&agg.entity, &r, t)?;
    let s_r = model.score(h, &agg.relation, t)?;
    let s_t = model.score(&agg.triple.entity, &agg.triple.relation, t)?;
    let s_0 = model.score(h, &r, t)?;
    Ok(beta_from_scores(s_e, s_r, s_t, s_0))
}

/// Per-level breakdown of one triple's analogy loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    pub total: f64,
    pub levels: [f64; 3],
    pub beta: [f64; 3],
}

/// Weighted three-level loss for one triple, adding `scale · ∂L/∂θ` into `grads`.
/// `beta` overrides the computed weights when given.
#[allow(clippy::too_many_arguments)]
pub fn accumulate_total_loss(
    model: &EmbeddingModel,
    params: &AnalogyParams,
    entry: &CacheEntry,
    triple: &Triple,
    config: &AnalogyTrainConfig,
    beta: Option<[f64; 3]>,
    scale: f64,
    grads: Option<&mut AnalogyGrads>,
) -> Result<LossBreakdown> {
    params.check_model(model)?;
    params.check_ids(Some(triple.h()), triple.r())?;
    model.check_entity(triple.t())?;
    let agg = aggregate(entry, model)?;
    let beta = match beta {
        Some(b) => b,
        None => beta_weights(model, triple, &agg)?,
    };
    let gamma = config.gamma;
    let sim = config.similarity;
    let (hi, ri) = (triple.h(), triple.r());
    let h = model.entity(hi);
    let r = model.relation(ri);
    let t = model.entity(triple.t());
    let (h_a, r_a) = params.analogy_rows(model, hi, ri);
    let z_a = model.compose(&h_a, &r_a)?;

    let de = model.entity_dim();
    let dr = model.relation_dim();
    let mut g_ha = vec![0.0; de];
    let mut g_ra = vec![0.0; dr];
    let mut sink_e = vec![0.0; de];
    let mut sink_r = vec![0.0; dr];
    let mut sink_t = vec![0.0; de];
    let mut sink_mix = vec![0.0; model.mix_weight().len()];

    // Entity level: X_a = h_a, analogy triple (h_a, r, t).
    let (d_e, dd_e) = distance_with_grad(&h_a, &agg.entity, sim);
    let s_e = model.score_unchecked(&h_a, &r, t);
    let l_e = level_loss_from_distance(d_e, s_e, gamma);
    let u_e = beta[0] * sigmoid(-(gamma * d_e - s_e)) * scale;

    // Relation level: X_a = r_a, analogy triple (h, r_a, t).
    let (d_r, dd_r) = distance_with_grad(&r_a, &agg.relation, sim);
    let s_r = model.score_unchecked(h, &r_a, t);
    let l_r = level_loss_from_distance(d_r, s_r, gamma);
    let u_r = beta[1] * sigmoid(-(gamma * d_r - s_r)) * scale;

    // Triple level: X_a = g(h_a, r_a), analogy triple (h_a, r_a, t).
    let (d_t, dd_t) = distance_with_grad(&z_a, &agg.triple.composed, sim);
    let s_t = model.score_unchecked(&h_a, &r_a, t);
    let l_t = level_loss_from_distance(d_t, s_t, gamma);
    let u_t = beta[2] * sigmoid(-(gamma * d_t - s_t)) * scale;

    let total = beta[0] * l_e + beta[1] * l_r + beta[2] * l_t;

    if let Some(grads) = grads {
        // ∂/∂h_a and ∂/∂r_a of every level.
        for (g, d) in g_ha.iter_mut().zip(&dd_e) {
            *g += u_e * gamma * d;
        }
        model.score_grad(&h_a, &r, t, -u_e, &mut g_ha, &mut sink_r, &mut sink_t, &mut sink_mix);

        for (g, d) in g_ra.iter_mut().zip(&dd_r) {
            *g += u_r * gamma * d;
        }
        model.score_grad(h, &r_a, t, -u_r, &mut sink_e, &mut g_ra, &mut sink_t, &mut sink_mix);

        let up: Vec<f64> = dd_t.iter().map(|d| u_t * gamma * d).collect();
        model.compose_vjp(&h_a, &r_a, &up, &mut g_ha, &mut g_ra);
        model.score_grad(&h_a, &r_a, t, -u_t, &mut g_ha, &mut g_ra, &mut sink_t, &mut sink_mix);

        // h_a = v_E[h] ∘ h + w · M r_a
        let w = params.ent_rel_weight;
        for (j, (g, x)) in grads.v_entity[hi * de..(hi + 1) * de].iter_mut().zip(h).enumerate() {
            *g += g_ha[j] * x;
        }
        if w != 0.0 {
            for i in 0..de {
                let gi = w * g_ha[i];
                if gi == 0.0 {
                    continue;
                }
                let row = &params.transform[i * dr..(i + 1) * dr];
                let grow = &mut grads.transform[i * dr..(i + 1) * dr];
                for j in 0..dr {
                    grow[j] += gi * r_a[j];
                    g_ra[j] += gi * row[j];
                }
            }
        }
        // r_a = v_R[r] ∘ r
        for (j, (g, x)) in grads.v_relation[ri * dr..(ri + 1) * dr].iter_mut().zip(&r).enumerate() {
            *g += g_ra[j] * x;
        }
    }

    Ok(LossBreakdown {
        total,
        levels: [l_e, l_r, l_t],
        beta,
    })
}

/// Loss and gradients of one triple with freshly computed `β`.
pub fn total_loss(
    model: &EmbeddingModel,
    params: &AnalogyParams,
    entry: &CacheEntry,
    triple: &Triple,
    config: &AnalogyTrainConfig,
) -> Result<(f64, AnalogyGrads)> {
    let mut grads = params.zero_grads();
    let out = accumulate_total_loss(model, params, entry, triple, config, None, 1.0, Some(&mut grads))?;
    Ok((out.total, grads))
}

/// Mean total loss over all training triples.
pub fn mean_total_loss(
    model: &EmbeddingModel,
    params: &AnalogyParams,
    store: &TripleStore,
    cache: &AnalogyCache,
    config: &AnalogyTrainConfig,
) -> Result<f64> {
    check_cache(store, cache)?;
    let mut sum = 0.0;
    for (t, e) in store.train.iter().zip(&cache.entries) {
        sum += accumulate_total_loss(model, params, e, t, config, None, 1.0, None)?.total;
    }
    Ok(sum / store.train.len().max(1) as f64)
}

fn check_cache(store: &TripleStore, cache: &AnalogyCache) -> Result<()> {
    if cache.len() != store.train.len() {
        return Err(Error::InvalidConfig(alloc::format!(
            "cache has {} entries for {} training triples",
            cache.len(),
            store.train.len()
        )));
    }
    Ok(())
}

/// Mini-batch Adam over `v_E`, `v_R` and `M`, starting from the identity.
pub struct AnalogyTrainer<'a> {
    model: &'a EmbeddingModel,
    store: &'a TripleStore,
    cache: &'a AnalogyCache,
    config: AnalogyTrainConfig,
    params: AnalogyParams,
    grads: AnalogyGrads,
    opt: [Adam; 3],
    /// `β` per training triple; constant because the base model is frozen.
    betas: Vec<[f64; 3]>,
    order: Vec<usize>,
    rng: ChaCha8Rng,
    epoch: usize,
}

impl<'a> AnalogyTrainer<'a> {
    pub fn new(
        model: &'a EmbeddingModel,
        store: &'a TripleStore,
        cache: &'a AnalogyCache,
        config: AnalogyTrainConfig,
    ) -> Result<Self> {
        config.validate()?;
        check_cache(store, cache)?;
        let params = AnalogyParams::identity(model, config.ent_rel_weight);
        let betas = store
            .train
            .iter()
            .zip(&cache.entries)
            .map(|(t, e)| beta_weights(model, t, &aggregate(e, model)?))
            .collect::<Result<Vec<_>>>()?;
        let lr = config.learning_rate;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(2);
        Ok(AnalogyTrainer {
            grads: params.zero_grads(),
            opt: [
                Adam::with_epsilon(params.v_entity.len(), lr, config.adam_epsilon),
                Adam::with_epsilon(params.v_relation.len(), lr, config.adam_epsilon),
                Adam::with_epsilon(params.transform.len(), lr, config.adam_epsilon),
            ],
            order: (0..store.train.len()).collect(),
            params,
            betas,
            model,
            store,
            cache,
            config,
            rng,
            epoch: 0,
        })
    }

    pub fn params(&self) -> &AnalogyParams {
        &self.params
    }

    pub fn into_params(self) -> AnalogyParams {
        self.params
    }

    /// One pass over the training triples; returns the mean batch loss.
    pub fn run_epoch(&mut self) -> Result<f64> {
        self.order.shuffle(&mut self.rng);
        let mut total = 0.0;
        let mut steps = 0usize;
        for (step, batch) in self.order.chunks(self.config.batch_size).enumerate() {
            self.grads.zero();
            let scale = 1.0 / batch.len() as f64;
            let mut loss = 0.0;
            for &i in batch {
                loss += accumulate_total_loss(
                    self.model,
                    &self.params,
                    &self.cache.entries[i],
                    &self.store.train[i],
                    &self.config,
                    Some(self.betas[i]),
                    scale,
                    Some(&mut self.grads),
                )?
                .total;
            }
            let mean = loss * scale;
            if !mean.is_finite() {
                return Err(Error::NonFiniteLoss {
                    epoch: self.epoch,
                    step,
                    loss: mean,
                });
            }
            let [oe, or, om] = &mut self.opt;
            oe.step(&mut self.params.v_entity, &self.grads.v_entity);
            or.step(&mut self.params.v_relation, &self.grads.v_relation);
            if self.params.ent_rel_weight != 0.0 {
                om.step(&mut self.params.transform, &self.grads.transform);
            }
            total += mean;
            steps += 1;
        }
        self.epoch += 1;
        Ok(if steps == 0 { 0.0 } else { total / steps as f64 })
    }
}

/// Trains analogy parameters for `config.epochs` epochs. `on_epoch`
/// receives `(epoch, mean loss)`.
pub fn train_analogy(
    model: &EmbeddingModel,
    store: &TripleStore,
    cache: &AnalogyCache,
    config: &AnalogyTrainConfig,
    mut on_epoch: impl FnMut(usize, f64),
) -> Result<AnalogyParams> {
    let mut trainer = AnalogyTrainer::new(model, store, cache, config.clone())?;
    for epoch in 0..config.epochs {
        let loss = trainer.run_epoch()?;
        on_epoch(epoch, loss);
    }
    Ok(trainer.into_params())
}
