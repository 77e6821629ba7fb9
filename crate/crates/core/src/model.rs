//! The four base KGE families, their score function `f(h, r, t)`,
//! composition `g(h, r)`, and hand-derived gradients.
//!
//! Physical row layouts for embedding dimension `k`:
//!
//! | family | entity row            | relation row (effective)      |
//! |--------|-----------------------|-------------------------------|
//! | TransE | `k` reals             | `k` reals                     |
//! | RotatE | `re[k] ++ im[k]`      | `k` phase angles              |
//! | HAKE   | `mod[k] ++ phase[k]`  | `mod[k] ++ phase[k]`          |
//! | PairRE | `k` reals             | `head[k] ++ tail[k]`          |
//!
//! HAKE relation moduli are stored unconstrained and passed through
//! softplus when read, so the effective modulus is always positive.
//! RotatE relations are stored as phases, so `|r_i| = 1` always holds.
//! Every composed representation `g(h, r)` has the entity row length.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;
use core::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::math::{cos, sign, sin, softplus, softplus_inv, sqrt};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelFamily {
    TransE,
    RotatE,
    Hake,
    PairRE,
}

impl ModelFamily {
    pub const ALL: [ModelFamily; 4] = [
        ModelFamily::TransE,
        ModelFamily::RotatE,
        ModelFamily::Hake,
        ModelFamily::PairRE,
    ];

    pub fn entity_dim(self, k: usize) -> usize {
        match self {
            ModelFamily::TransE | ModelFamily::PairRE => k,
            ModelFamily::RotatE | ModelFamily::Hake => 2 * k,
        }
    }

    pub fn relation_dim(self, k: usize) -> usize {
        match self {
            ModelFamily::TransE | ModelFamily::RotatE => k,
            ModelFamily::Hake | ModelFamily::PairRE => 2 * k,
        }
    }

    pub fn mix_dim(self, k: usize) -> usize {
        match self {
            ModelFamily::Hake => k,
            _ => 0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelFamily::TransE => "TransE",
            ModelFamily::RotatE => "RotatE",
            ModelFamily::Hake => "HAKE",
            ModelFamily::PairRE => "PairRE",
        }
    }
}

impl fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "transe" => Ok(ModelFamily::TransE),
            "rotate" => Ok(ModelFamily::RotatE),
            "hake" => Ok(ModelFamily::Hake),
            "pairre" => Ok(ModelFamily::PairRE),
            _ => Err(Error::InvalidConfig(alloc::format!("unknown model family {s:?}"))),
        }
    }
}

/// Entity and relation tables plus family-specific extras.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel {
    family: ModelFamily,
    dim: usize,
    num_entities: usize,
    num_relations: usize,
    pub(crate) entities: Vec<f64>,
    /// Stored relation parameters. For HAKE the modulus half is pre-softplus.
    pub(crate) relations: Vec<f64>,
    /// HAKE's per-dimension phase mixing weight; empty for other families.
    pub(crate) mix: Vec<f64>,
}

/// Gradient buffers matching an [`EmbeddingModel`]'s parameter tables.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelGrads {
    pub entities: Vec<f64>,
    pub relations: Vec<f64>,
    pub mix: Vec<f64>,
}

impl EmbeddingModel {
    /// Samples a model from a seeded generator. Entity coordinates are
    /// uniform in `±1/√k`, angles uniform in `[0, 2π)`, HAKE relation moduli
    /// uniform in `[0.5, 1.5]`, PairRE relation vectors uniform in `[-1, 1]`.
    pub fn init(
        family: ModelFamily,
        num_entities: usize,
        num_relations: usize,
        dim: usize,
        seed: u64,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidConfig("dimension must be positive".into()));
        }
        if num_entities == 0 || num_relations == 0 {
            return Err(Error::InvalidConfig(
                "model needs at least one entity and one relation".into(),
            ));
        }
        let k = dim;
        let bound = 1.0 / sqrt(k as f64);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let de = family.entity_dim(k);
        let dr = family.relation_dim(k);

        let mut entities = vec![0.0; num_entities * de];
        for row in entities.chunks_exact_mut(de) {
            match family {
                ModelFamily::Hake => {
                    let (m, p) = row.split_at_mut(k);
                    m.iter_mut().for_each(|x| *x = rng.gen_range(-bound..bound));
                    p.iter_mut().for_each(|x| *x = rng.gen_range(0.0..2.0 * PI));
                }
                _ => row.iter_mut().for_each(|x| *x = rng.gen_range(-bound..bound)),
            }
        }

        let mut relations = vec![0.0; num_relations * dr];
        for row in relations.chunks_exact_mut(dr) {
            match family {
                ModelFamily::TransE => row.iter_mut().for_each(|x| *x = rng.gen_range(-bound..bound)),
                ModelFamily::RotatE => row.iter_mut().for_each(|x| *x = rng.gen_range(0.0..2.0 * PI)),
                ModelFamily::Hake => {
                    let (m, p) = row.split_at_mut(k);
                    m.iter_mut()
                        .for_each(|x| *x = softplus_inv(rng.gen_range(0.5..1.5)));
                    p.iter_mut().for_each(|x| *x = rng.gen_range(0.0..2.0 * PI));
                }
                ModelFamily::PairRE => row.iter_mut().for_each(|x| *x = rng.gen_range(-1.0..1.0)),
            }
        }

        let mix = vec![0.5; family.mix_dim(k)];
        Ok(EmbeddingModel {
            family,
            dim,
            num_entities,
            num_relations,
            entities,
            relations,
            mix,
        })
    }

    /// Reassembles a model from raw tables, checking every length.
    pub fn from_parts(
        family: ModelFamily,
        dim: usize,
        num_entities: usize,
        num_relations: usize,
        entities: Vec<f64>,
        relations: Vec<f64>,
        mix: Vec<f64>,
    ) -> Result<Self> {
        if dim == 0 || num_entities == 0 || num_relations == 0 {
            return Err(Error::InvalidConfig("empty model dimensions".into()));
        }
        let check = |expected: usize, got: usize| {
            if expected == got {
                Ok(())
            } else {
                Err(Error::DimensionMismatch { expected, got })
            }
        };
        check(num_entities * family.entity_dim(dim), entities.len())?;
        check(num_relations * family.relation_dim(dim), relations.len())?;
        check(family.mix_dim(dim), mix.len())?;
        Ok(EmbeddingModel {
            family,
            dim,
            num_entities,
            num_relations,
            entities,
            relations,
            mix,
        })
    }

    pub fn family(&self) -> ModelFamily {
        self.family
    }

    /// Semantic dimension `k`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_entities(&self) -> usize {
        self.num_entities
    }

    pub fn num_relations(&self) -> usize {
        self.num_relations
    }

    /// Physical entity row length `d_e`.
    pub fn entity_dim(&self) -> usize {
        self.family.entity_dim(self.dim)
    }

    /// Effective relation row length `d_r`.
    pub fn relation_dim(&self) -> usize {
        self.family.relation_dim(self.dim)
    }

    pub fn entity_table(&self) -> &[f64] {
        &self.entities
    }

    pub fn relation_table(&self) -> &[f64] {
        &self.relations
    }

    pub fn mix_weight(&self) -> &[f64] {
        &self.mix
    }

    /// Mutable access to all three parameter tables, in storage order.
    pub fn tables_mut(&mut self) -> (&mut [f64], &mut [f64], &mut [f64]) {
        (&mut self.entities, &mut self.relations, &mut self.mix)
    }

    pub fn zero_grads(&self) -> ModelGrads {
        ModelGrads {
            entities: vec![0.0; self.entities.len()],
            relations: vec![0.0; self.relations.len()],
            mix: vec![0.0; self.mix.len()],
        }
    }

    pub fn check_entity(&self, id: usize) -> Result<()> {
        if id < self.num_entities {
            Ok(())
        } else {
            Err(Error::entity(id, self.num_entities))
        }
    }

    pub fn check_relation(&self, id: usize) -> Result<()> {
        if id < self.num_relations {
            Ok(())
        } else {
            Err(Error::relation(id, self.num_relations))
        }
    }

    /// Entity row. Panics if `id` is out of range.
    #[inline]
    pub fn entity(&self, id: usize) -> &[f64] {
        let de = self.entity_dim();
        &self.entities[id * de..(id + 1) * de]
    }

    /// Stored relation row (HAKE moduli before softplus).
    #[inline]
    pub fn relation_raw(&self, id: usize) -> &[f64] {
        let dr = self.relation_dim();
        &self.relations[id * dr..(id + 1) * dr]
    }

    /// Effective relation row as used by the score function.
    pub fn relation(&self, id: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.relation_dim()];
        self.relation_into(id, &mut out);
        out
    }

    pub fn relation_into(&self, id: usize, out: &mut [f64]) {
        let raw = self.relation_raw(id);
        out.copy_from_slice(raw);
        if self.family == ModelFamily::Hake {
            for x in &mut out[..self.dim] {
                *x = softplus(*x);
            }
        }
    }

    fn check_lengths(&self, h: &[f64], r: &[f64], t: Option<&[f64]>) -> Result<()> {
        let de = self.entity_dim();
        let dr = self.relation_dim();
        for len in [h.len()].into_iter().chain(t.map(<[f64]>::len)) {
            if len != de {
                return Err(Error::DimensionMismatch { expected: de, got: len });
            }
        }
        if r.len() != dr {
            return Err(Error::DimensionMismatch { expected: dr, got: r.len() });
        }
        Ok(())
    }

    /// `f(h, r, t)`; higher is more plausible.
    pub fn score(&self, h: &[f64], r: &[f64], t: &[f64]) -> Result<f64> {
        self.check_lengths(h, r, Some(t))?;
        Ok(self.score_unchecked(h, r, t))
    }

    #[inline]
    pub fn score_unchecked(&self, h: &[f64], r: &[f64], t: &[f64]) -> f64 {
        let mut query = vec![0.0; self.query_len()];
        self.prepare_query(h, r, &mut query);
        self.query_score(&query, t)
    }

    /// Length of the per-query buffer used by [`Self::prepare_query`].
    pub fn query_len(&self) -> usize {
        match self.family {
            ModelFamily::TransE => self.dim,
            _ => 2 * self.dim,
        }
    }

    /// Precomputes the part of `f(h, r, ·)` that does not depend on the tail.
    /// [`Self::query_score`] on the result is bitwise equal to `score`.
    pub fn prepare_query(&self, h: &[f64], r: &[f64], out: &mut [f64]) {
        let k = self.dim;
        match self.family {
            ModelFamily::TransE => {
                for i in 0..k {
                    out[i] = h[i] + r[i];
                }
            }
            ModelFamily::RotatE => {
                for i in 0..k {
                    let (c, s) = (cos(r[i]), sin(r[i]));
                    out[i] = h[i] * c - h[k + i] * s;
                    out[k + i] = h[i] * s + h[k + i] * c;
                }
            }
            ModelFamily::Hake => {
                for i in 0..k {
                    out[i] = h[i] * r[i];
                    out[k + i] = h[k + i] + r[k + i];
                }
            }
            ModelFamily::PairRE => {
                for i in 0..k {
                    out[i] = h[i] * r[i];
                    out[k + i] = r[k + i];
                }
            }
        }
    }

    #[inline]
    pub fn query_score(&self, q: &[f64], t: &[f64]) -> f64 {
        let k = self.dim;
        match self.family {
            ModelFamily::TransE => {
                let mut d = 0.0;
                for i in 0..k {
                    d += (q[i] - t[i]).abs();
                }
                -d
            }
            ModelFamily::RotatE => {
                let mut d = 0.0;
                for i in 0..k {
                    let a = q[i] - t[i];
                    let b = q[k + i] - t[k + i];
                    d += a * a + b * b;
                }
                -sqrt(d)
            }
            ModelFamily::Hake => {
                let mut dm = 0.0;
                let mut dp = 0.0;
                for i in 0..k {
                    let a = q[i] - t[i];
                    dm += a * a;
                    dp += self.mix[i] * sin((q[k + i] - t[k + i]) / 2.0).abs();
                }
                -sqrt(dm) - dp
            }
            ModelFamily::PairRE => {
                let mut d = 0.0;
                for i in 0..k {
                    d += (q[i] - t[i] * q[k + i]).abs();
                }
                -d
            }
        }
    }

    /// Adds `scale · ∂f/∂(h, r, t, mix)` into the given buffers and returns `f`.
    /// Gradients with respect to `r` are taken on the effective relation row.
    #[allow(clippy::too_many_arguments)]
    pub fn score_grad(
        &self,
        h: &[f64],
        r: &[f64],
        t: &[f64],
        scale: f64,
        gh: &mut [f64],
        gr: &mut [f64],
        gt: &mut [f64],
        gmix: &mut [f64],
    ) -> f64 {
        let k = self.dim;
        let f = self.score_unchecked(h, r, t);
        match self.family {
            ModelFamily::TransE => {
                for i in 0..k {
                    let s = sign(h[i] + r[i] - t[i]) * scale;
                    gh[i] -= s;
                    gr[i] -= s;
                    gt[i] += s;
                }
            }
            ModelFamily::RotatE => {
                let dist = -f;
                if dist > 0.0 {
                    for i in 0..k {
                        let (c, s) = (cos(r[i]), sin(r[i]));
                        let re = h[i] * c - h[k + i] * s;
                        let im = h[i] * s + h[k + i] * c;
                        let a = (re - t[i]) / dist * scale;
                        let b = (im - t[k + i]) / dist * scale;
                        gh[i] -= a * c + b * s;
                        gh[k + i] -= -a * s + b * c;
                        gr[i] -= -a * im + b * re;
                        gt[i] += a;
                        gt[k + i] += b;
                    }
                }
            }
            ModelFamily::Hake => {
                let mut dm = 0.0;
                for i in 0..k {
                    let a = h[i] * r[i] - t[i];
                    dm += a * a;
                }
                let dm = sqrt(dm);
                for i in 0..k {
                    if dm > 0.0 {
                        let a = (h[i] * r[i] - t[i]) / dm * scale;
                        gh[i] -= a * r[i];
                        gr[i] -= a * h[i];
                        gt[i] += a;
                    }
                    let half = (h[k + i] + r[k + i] - t[k + i]) / 2.0;
                    let sv = sin(half);
                    let d = self.mix[i] * sign(sv) * cos(half) / 2.0 * scale;
                    gh[k + i] -= d;
                    gr[k + i] -= d;
                    gt[k + i] += d;
                    gmix[i] -= sv.abs() * scale;
                }
            }
            ModelFamily::PairRE => {
                for i in 0..k {
                    let s = sign(h[i] * r[i] - t[i] * r[k + i]) * scale;
                    gh[i] -= s * r[i];
                    gr[i] -= s * h[i];
                    gr[k + i] += s * t[i];
                    gt[i] += s * r[k + i];
                }
            }
        }
        f
    }

    /// `g(h, r)`: the predicted tail-space representation.
    pub fn compose(&self, h: &[f64], r: &[f64]) -> Result<Vec<f64>> {
        self.check_lengths(h, r, None)?;
        let mut out = vec![0.0; self.entity_dim()];
        self.compose_into(h, r, &mut out);
        Ok(out)
    }

    pub fn compose_into(&self, h: &[f64], r: &[f64], out: &mut [f64]) {
        let k = self.dim;
        match self.family {
            ModelFamily::TransE => {
                for i in 0..k {
                    out[i] = h[i] + r[i];
                }
            }
            ModelFamily::RotatE => {
                for i in 0..k {
                    let (c, s) = (cos(r[i]), sin(r[i]));
                    out[i] = h[i] * c - h[k + i] * s;
                    out[k + i] = h[i] * s + h[k + i] * c;
                }
            }
            ModelFamily::Hake => {
                for i in 0..k {
                    out[i] = h[i] * r[i];
                    out[k + i] = self.mix[i] * sin((h[k + i] + r[k + i]) / 2.0);
                }
            }
            ModelFamily::PairRE => {
                for i in 0..k {
                    out[i] = h[i] * r[i];
                }
            }
        }
    }

    /// Vector-Jacobian product of [`Self::compose_into`]: adds
    /// `upstreamᵀ · ∂g/∂h` into `gh` and `upstreamᵀ · ∂g/∂r` into `gr`.
    pub fn compose_vjp(&self, h: &[f64], r: &[f64], up: &[f64], gh: &mut [f64], gr: &mut [f64]) {
        let k = self.dim;
        match self.family {
            ModelFamily::TransE => {
                for i in 0..k {
                    gh[i] += up[i];
                    gr[i] += up[i];
                }
            }
            ModelFamily::RotatE => {
                for i in 0..k {
                    let (c, s) = (cos(r[i]), sin(r[i]));
                    let re = h[i] * c - h[k + i] * s;
                    let im = h[i] * s + h[k + i] * c;
                    gh[i] += up[i] * c + up[k + i] * s;
                    gh[k + i] += -up[i] * s + up[k + i] * c;
                    gr[i] += -up[i] * im + up[k + i] * re;
                }
            }
            ModelFamily::Hake => {
                for i in 0..k {
                    gh[i] += up[i] * r[i];
                    gr[i] += up[i] * h[i];
                    let d = up[k + i] * self.mix[i] * cos((h[k + i] + r[k + i]) / 2.0) / 2.0;
                    gh[k + i] += d;
                    gr[k + i] += d;
                }
            }
            ModelFamily::PairRE => {
                for i in 0..k {
                    gh[i] += up[i] * r[i];
                    gr[i] += up[i] * h[i];
                }
            }
        }
    }

    /// Converts a gradient on effective relation rows into one on stored
    /// parameters (chain rule through softplus for HAKE moduli).
    pub fn relation_grad_to_raw(&self, id: usize, grad: &mut [f64]) {
        if self.family == ModelFamily::Hake {
            let raw = self.relation_raw(id);
            for i in 0..self.dim {
                grad[i] *= crate::math::sigmoid(raw[i]);
            }
        }
    }

    pub fn score_triple_ids(&self, h: usize, r: usize, t: usize) -> Result<f64> {
        self.check_entity(h)?;
        self.check_relation(r)?;
        self.check_entity(t)?;
        Ok(self.score_unchecked(self.entity(h), &self.relation(r), self.entity(t)))
    }

    /// One score per candidate tail, equal to individual
    /// [`Self::score_triple_ids`] calls.
    pub fn score_candidates(&self, h: usize, r: usize, tails: &[u32]) -> Result<Vec<f64>> {
        self.check_entity(h)?;
        self.check_relation(r)?;
        for &t in tails {
            self.check_entity(t as usize)?;
        }
        let mut q = vec![0.0; self.query_len()];
        self.prepare_query(self.entity(h), &self.relation(r), &mut q);
        Ok(tails
            .iter()
            .map(|&t| self.query_score(&q, self.entity(t as usize)))
            .collect())
    }

    /// Scores `(h, r, e)` for every entity `e`.
    pub fn score_all_tails(&self, h: usize, r: usize) -> Result<Vec<f64>> {
        self.check_entity(h)?;
        self.check_relation(r)?;
        Ok(self.score_all_tails_with(self.entity(h), &self.relation(r)))
    }

    /// Scores `(h, r, e)` for every entity `e` given explicit head and
    /// relation rows (which need not belong to the tables).
    pub fn score_all_tails_with(&self, h: &[f64], r: &[f64]) -> Vec<f64> {
        let mut q = vec![0.0; self.query_len()];
        self.prepare_query(h, r, &mut q);
        self.entities
            .chunks_exact(self.entity_dim())
            .map(|t| self.query_score(&q, t))
            .collect()
    }
}

/// Reusable scratch space for scoring many triples without reallocating.
pub struct Scorer<'m> {
    model: &'m EmbeddingModel,
    query: Vec<f64>,
}

impl<'m> Scorer<'m> {
    pub fn new(model: &'m EmbeddingModel) -> Self {
        Scorer {
            model,
            query: vec![0.0; model.query_len()],
        }
    }

    /// Same value as [`EmbeddingModel::score_unchecked`].
    #[inline]
    pub fn score(&mut self, h: &[f64], r: &[f64], t: &[f64]) -> f64 {
        self.model.prepare_query(h, r, &mut self.query);
        self.model.query_score(&self.query, t)
    }
}
