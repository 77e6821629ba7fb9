//! Base-model training: tail-corrupting negative sampling, the
//! self-adversarial negative sampling loss, and the mini-batch Adam loop.
//!
//! The minimised per-triple loss is
//!
//! ```text
//! L = -log σ(γ_m + f(h, r, t)) - Σ_i p_i · log σ(-f(h, r, t'_i) - γ_m)
//! p = softmax(α_temp · f(h, r, t'_·))      (held constant)
//! ```
//!
//! which is the usual margin form written with distances `d = -f`.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::math::{log_sigmoid, sigmoid, softmax};
use crate::model::{EmbeddingModel, ModelFamily, ModelGrads};
use crate::optim::Adam;
use crate::store::{Triple, TripleStore};

#[derive(Debug, Clone, PartialEq)]
pub struct BaseTrainConfig {
    pub margin: f64,
    pub adversarial_temperature: f64,
    pub negative_samples: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub dim: usize,
    pub seed: u64,
}

impl Default for BaseTrainConfig {
    fn default() -> Self {
        BaseTrainConfig {
            margin: 9.0,
            adversarial_temperature: 1.0,
            negative_samples: 256,
            batch_size: 1024,
            learning_rate: 1e-3,
            epochs: 100,
            dim: 500,
            seed: 0,
        }
    }
}

impl BaseTrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidConfig(alloc::format!("{what} must be positive")));
        if !(self.margin > 0.0) {
            return bad("margin");
        }
        if !(self.adversarial_temperature > 0.0) {
            return bad("adversarial_temperature");
        }
        if self.negative_samples == 0 {
            return bad("negative_samples");
        }
        if self.batch_size == 0 {
            return bad("batch_size");
        }
        if !(self.learning_rate > 0.0) {
            return bad("learning_rate");
        }
        if self.dim == 0 {
            return bad("dim");
        }
        Ok(())
    }
}

/// Replaces the tail of `triple` with `n` entity ids drawn uniformly.
/// The gold tail is not filtered out.
pub fn sample_negatives<R: Rng + ?Sized>(
    num_entities: usize,
    triple: Triple,
    n: usize,
    rng: &mut R,
) -> Vec<Triple> {
    (0..n)
        .map(|_| Triple::new(triple.head, triple.relation, rng.gen_range(0..num_entities) as u32))
        .collect()
}

/// Self-adversarial weights `softmax(α_temp · f)` over negative scores.
pub fn adversarial_weights(negative_scores: &[f64], temperature: f64) -> Vec<f64> {
    let scaled: Vec<f64> = negative_scores.iter().map(|&s| temperature * s).collect();
    softmax(&scaled)
}

/// Loss value from precomputed scores (no gradients).
pub fn self_adversarial_value(
    positive_score: f64,
    negative_scores: &[f64],
    margin: f64,
    temperature: f64,
) -> Result<f64> {
    if negative_scores.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    let p = adversarial_weights(negative_scores, temperature);
    let neg: f64 = p
        .iter()
        .zip(negative_scores)
        .map(|(w, &s)| w * log_sigmoid(-s - margin))
        .sum();
    Ok(-log_sigmoid(margin + positive_score) - neg)
}

/// Computes the loss for one positive and its negatives, and adds
/// `scale · ∂L/∂θ` into `grads`.
pub fn accumulate_self_adversarial(
    model: &EmbeddingModel,
    positive: Triple,
    negatives: &[Triple],
    margin: f64,
    temperature: f64,
    scale: f64,
    grads: &mut ModelGrads,
) -> Result<f64> {
    if negatives.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    for t in core::iter::once(&positive).chain(negatives) {
        model.check_entity(t.h())?;
        model.check_relation(t.r())?;
        model.check_entity(t.t())?;
    }
    let pos_score = model.score_triple_ids(positive.h(), positive.r(), positive.t())?;
    let neg_scores: Vec<f64> = negatives
        .iter()
        .map(|t| model.score_triple_ids(t.h(), t.r(), t.t()))
        .collect::<Result<_>>()?;
    let p = adversarial_weights(&neg_scores, temperature);
    let loss = {
        let neg: f64 = p
            .iter()
            .zip(&neg_scores)
            .map(|(w, &s)| w * log_sigmoid(-s - margin))
            .sum();
        -log_sigmoid(margin + pos_score) - neg
    };

    let mut terms = Vec::with_capacity(negatives.len() + 1);
    terms.push((positive, -sigmoid(-(margin + pos_score))));
    for ((t, &w), &s) in negatives.iter().zip(&p).zip(&neg_scores) {
        terms.push((*t, w * sigmoid(s + margin)));
    }
    let mut buf = TripleGradBuf::new(model);
    for (t, dl_df) in terms {
        buf.add_score_grad(model, t, dl_df * scale, grads);
    }
    Ok(loss)
}

/// Convenience form returning the loss and a fresh gradient set.
pub fn self_adversarial_loss(
    model: &EmbeddingModel,
    positive: Triple,
    negatives: &[Triple],
    margin: f64,
    temperature: f64,
) -> Result<(f64, ModelGrads)> {
    let mut grads = model.zero_grads();
    let loss =
        accumulate_self_adversarial(model, positive, negatives, margin, temperature, 1.0, &mut grads)?;
    Ok((loss, grads))
}

/// Scratch buffers for scattering one triple's score gradient into tables.
struct TripleGradBuf {
    gh: Vec<f64>,
    gr: Vec<f64>,
    gt: Vec<f64>,
}

impl TripleGradBuf {
    fn new(model: &EmbeddingModel) -> Self {
        TripleGradBuf {
            gh: vec![0.0; model.entity_dim()],
            gr: vec![0.0; model.relation_dim()],
            gt: vec![0.0; model.entity_dim()],
        }
    }

    fn add_score_grad(&mut self, model: &EmbeddingModel, t: Triple, scale: f64, grads: &mut ModelGrads) {
        let de = model.entity_dim();
        let dr = model.relation_dim();
        self.gh.iter_mut().for_each(|x| *x = 0.0);
        self.gr.iter_mut().for_each(|x| *x = 0.0);
        self.gt.iter_mut().for_each(|x| *x = 0.0);
        let r = model.relation(t.r());
        model.score_grad(
            model.entity(t.h()),
            &r,
            model.entity(t.t()),
            scale,
            &mut self.gh,
            &mut self.gr,
            &mut self.gt,
            &mut grads.mix,
        );
        model.relation_grad_to_raw(t.r(), &mut self.gr);
        for (g, d) in grads.entities[t.h() * de..(t.h() + 1) * de].iter_mut().zip(&self.gh) {
            *g += d;
        }
        for (g, d) in grads.entities[t.t() * de..(t.t() + 1) * de].iter_mut().zip(&self.gt) {
            *g += d;
        }
        for (g, d) in grads.relations[t.r() * dr..(t.r() + 1) * dr].iter_mut().zip(&self.gr) {
            *g += d;
        }
    }
}

/// Summary of one training epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub mean_loss: f64,
    pub steps: usize,
}

/// Stateful base trainer. Parameter updates are applied once per mini-batch.
pub struct BaseTrainer<'a> {
    store: &'a TripleStore,
    config: BaseTrainConfig,
    model: EmbeddingModel,
    rng: ChaCha8Rng,
    opt_entities: Adam,
    opt_relations: Adam,
    opt_mix: Adam,
    grads: ModelGrads,
    order: Vec<usize>,
    epoch: usize,
}

impl<'a> BaseTrainer<'a> {
    pub fn new(store: &'a TripleStore, family: ModelFamily, config: BaseTrainConfig) -> Result<Self> {
        config.validate()?;
        let model = EmbeddingModel::init(
            family,
            store.num_entities(),
            store.num_relations(),
            config.dim,
            config.seed,
        )?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(1);
        let lr = config.learning_rate;
        Ok(BaseTrainer {
            store,
            opt_entities: Adam::new(model.entities.len(), lr),
            opt_relations: Adam::new(model.relations.len(), lr),
            opt_mix: Adam::new(model.mix.len(), lr),
            grads: model.zero_grads(),
            order: (0..store.train.len()).collect(),
            model,
            rng,
            config,
            epoch: 0,
        })
    }

    pub fn model(&self) -> &EmbeddingModel {
        &self.model
    }

    pub fn into_model(self) -> EmbeddingModel {
        self.model
    }

    /// Runs one epoch; `on_step` sees the model after every parameter update.
    pub fn run_epoch_with(&mut self, mut on_step: impl FnMut(&EmbeddingModel)) -> Result<EpochStats> {
        let cfg = &self.config;
        self.order.shuffle(&mut self.rng);
        let mut total = 0.0;
        let mut steps = 0;
        let ne = self.store.num_entities();
        for (step, batch) in self.order.chunks(cfg.batch_size).enumerate() {
            self.grads.entities.iter_mut().for_each(|g| *g = 0.0);
            self.grads.relations.iter_mut().for_each(|g| *g = 0.0);
            self.grads.mix.iter_mut().for_each(|g| *g = 0.0);
            let scale = 1.0 / batch.len() as f64;
            let mut batch_loss = 0.0;
            for &i in batch {
                let pos = self.store.train[i];
                let negs = sample_negatives(ne, pos, cfg.negative_samples, &mut self.rng);
                batch_loss += accumulate_self_adversarial(
                    &self.model,
                    pos,
                    &negs,
                    cfg.margin,
                    cfg.adversarial_temperature,
                    scale,
                    &mut self.grads,
                )?;
            }
            let mean = batch_loss * scale;
            if !mean.is_finite() {
                return Err(Error::NonFiniteLoss {
                    epoch: self.epoch,
                    step,
                    loss: mean,
                });
            }
            self.opt_entities.step(&mut self.model.entities, &self.grads.entities);
            self.opt_relations.step(&mut self.model.relations, &self.grads.relations);
            self.opt_mix.step(&mut self.model.mix, &self.grads.mix);
            on_step(&self.model);
            total += mean;
            steps += 1;
        }
        let stats = EpochStats {
            epoch: self.epoch,
            mean_loss: if steps == 0 { 0.0 } else { total / steps as f64 },
            steps,
        };
        self.epoch += 1;
        Ok(stats)
    }

    pub fn run_epoch(&mut self) -> Result<EpochStats> {
        self.run_epoch_with(|_| {})
    }
}

/// Trains a base model for `config.epochs` epochs, reporting each epoch
/// to `on_epoch`.
pub fn train_base(
    store: &TripleStore,
    family: ModelFamily,
    config: &BaseTrainConfig,
    mut on_epoch: impl FnMut(&EpochStats),
) -> Result<EmbeddingModel> {
    let mut trainer = BaseTrainer::new(store, family, config.clone())?;
    for _ in 0..config.epochs {
        let stats = trainer.run_epoch()?;
        on_epoch(&stats);
    }
    Ok(trainer.into_model())
}
