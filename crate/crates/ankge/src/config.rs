//! Run configuration: a flat TOML table layered over per-dataset presets.
//!
//! Resolution order: preset defaults for the chosen family, then keys from
//! the config file, then `--set key=value` overrides and dedicated flags.

use std::path::{Path, PathBuf};

use ankge_core::analogy::Similarity;
use ankge_core::{AnalogyTrainConfig, BaseTrainConfig, InferenceConfig, ModelFamily, RetrieverConfig};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    #[serde(rename = "fb15k-237")]
    Fb15k237,
    Wn18rr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalSplit {
    Valid,
    Test,
}

/// Every key a config file may set. Unknown keys are rejected.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    dataset: Option<PathBuf>,
    out: Option<PathBuf>,
    preset: Option<Preset>,
    family: Option<String>,
    seed: Option<u64>,
    threads: Option<usize>,
    reverse: Option<bool>,
    dim: Option<usize>,
    margin: Option<f64>,
    adversarial_temperature: Option<f64>,
    negative_samples: Option<usize>,
    batch_size: Option<usize>,
    learning_rate: Option<f64>,
    epochs: Option<usize>,
    entity_candidates: Option<usize>,
    relation_candidates: Option<usize>,
    triple_candidates: Option<usize>,
    preselect_entities: Option<usize>,
    preselect_relations: Option<usize>,
    exclude_original: Option<bool>,
    gamma: Option<f64>,
    analogy_learning_rate: Option<f64>,
    analogy_epochs: Option<usize>,
    analogy_batch_size: Option<usize>,
    analogy_adam_epsilon: Option<f64>,
    similarity: Option<String>,
    ent_rel_weight: Option<f64>,
    alpha_entity: Option<f64>,
    alpha_relation: Option<f64>,
    alpha_triple: Option<f64>,
    adaptive: Option<bool>,
    eval_split: Option<EvalSplit>,
}

/// Fully resolved settings for every stage.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub dataset: PathBuf,
    pub out: PathBuf,
    pub preset: Preset,
    pub family: String,
    pub seed: u64,
    /// Worker threads; 0 uses every available core.
    pub threads: usize,
    /// Adds a reverse relation for every relation.
    pub reverse: bool,
    pub dim: usize,
    pub margin: f64,
    pub adversarial_temperature: f64,
    pub negative_samples: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub entity_candidates: usize,
    pub relation_candidates: usize,
    pub triple_candidates: usize,
    pub preselect_entities: usize,
    pub preselect_relations: usize,
    pub exclude_original: bool,
    pub gamma: f64,
    pub analogy_learning_rate: f64,
    pub analogy_epochs: usize,
    pub analogy_batch_size: usize,
    pub analogy_adam_epsilon: f64,
    pub similarity: String,
    pub ent_rel_weight: f64,
    pub alpha_entity: f64,
    pub alpha_relation: f64,
    pub alpha_triple: f64,
    pub adaptive: bool,
    pub eval_split: EvalSplit,
}

struct BaseRow {
    dim: usize,
    margin: f64,
    temperature: f64,
    negatives: usize,
    batch: usize,
}

struct AnalogyRow {
    candidates: [usize; 3],
    alpha: [f64; 3],
}

fn base_row(preset: Preset, family: ModelFamily) -> BaseRow {
    use ModelFamily::*;
    let (dim, margin, temperature, negatives, batch) = match (preset, family) {
        (Preset::Fb15k237, TransE) => (500, 9.0, 1.0, 256, 1024),
        (Preset::Fb15k237, RotatE) => (500, 9.0, 1.0, 256, 1024),
        (Preset::Fb15k237, Hake) => (1000, 9.0, 1.0, 512, 1024),
        (Preset::Fb15k237, PairRE) => (1500, 6.0, 1.0, 256, 1024),
        (Preset::Wn18rr, TransE) => (500, 6.0, 1.0, 256, 2048),
        (Preset::Wn18rr, _) => (500, 6.0, 0.5, 1024, 512),
    };
    BaseRow { dim, margin, temperature, negatives, batch }
}

fn analogy_row(preset: Preset, family: ModelFamily) -> AnalogyRow {
    use ModelFamily::*;
    let (candidates, alpha) = match (preset, family) {
        (Preset::Fb15k237, TransE) => ([1, 1, 3], [0.01, 0.2, 0.02]),
        (Preset::Fb15k237, RotatE) => ([1, 1, 5], [0.01, 0.2, 0.05]),
        (Preset::Fb15k237, Hake) => ([1, 1, 5], [0.05, 0.3, 0.1]),
        (Preset::Fb15k237, PairRE) => ([1, 1, 3], [0.01, 0.3, 0.05]),
        (Preset::Wn18rr, TransE) => ([1, 1, 20], [0.01, 0.3, 0.3]),
        (Preset::Wn18rr, RotatE) => ([1, 1, 3], [0.1, 0.05, 0.1]),
        (Preset::Wn18rr, Hake) => ([1, 1, 3], [0.1, 0.05, 0.1]),
        (Preset::Wn18rr, PairRE) => ([1, 1, 3], [0.1, 0.05, 0.2]),
    };
    AnalogyRow { candidates, alpha }
}

impl RunConfig {
    /// Defaults for `family` under `preset`.
    pub fn preset(preset: Preset, family: ModelFamily) -> Self {
        let base = base_row(preset, family);
        let analogy = analogy_row(preset, family);
        let exception = preset == Preset::Wn18rr && family == ModelFamily::TransE;
        let base_defaults = BaseTrainConfig::default();
        let analogy_defaults = AnalogyTrainConfig::default();
        let retriever_defaults = RetrieverConfig::default();
        RunConfig {
            dataset: PathBuf::from("data"),
            out: PathBuf::from("runs"),
            preset,
            family: family.name().to_string(),
            seed: 0,
            threads: 0,
            reverse: true,
            dim: base.dim,
            margin: base.margin,
            adversarial_temperature: base.temperature,
            negative_samples: base.negatives,
            batch_size: base.batch,
            learning_rate: base_defaults.learning_rate,
            epochs: base_defaults.epochs,
            entity_candidates: analogy.candidates[0],
            relation_candidates: analogy.candidates[1],
            triple_candidates: analogy.candidates[2],
            preselect_entities: retriever_defaults.preselect_entities,
            preselect_relations: retriever_defaults.preselect_relations,
            exclude_original: retriever_defaults.exclude_original,
            gamma: analogy_defaults.gamma,
            analogy_learning_rate: analogy_defaults.learning_rate,
            analogy_epochs: analogy_defaults.epochs,
            analogy_batch_size: analogy_defaults.batch_size,
            analogy_adam_epsilon: analogy_defaults.adam_epsilon,
            similarity: if exception { Similarity::Cosine } else { Similarity::Euclidean }.name().to_string(),
            ent_rel_weight: if preset == Preset::Fb15k237 { 1.0 } else { 0.0 },
            alpha_entity: analogy.alpha[0],
            alpha_relation: analogy.alpha[1],
            alpha_triple: analogy.alpha[2],
            adaptive: !exception,
            eval_split: EvalSplit::Test,
        }
    }

    /// Resolves a parsed TOML table (file contents plus overrides).
    pub fn from_table(table: toml::Table) -> Result<Self> {
        let raw: RawConfig = table.try_into().map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
        let preset = raw.preset.unwrap_or(Preset::Fb15k237);
        let family: ModelFamily = raw
            .family
            .as_deref()
            .unwrap_or("TransE")
            .parse()
            .map_err(|e: ankge_core::Error| Error::Config(e.to_string()))?;
        let mut c = RunConfig::preset(preset, family);
        macro_rules! take {
            ($($f:ident),*) => { $( if let Some(v) = raw.$f { c.$f = v; } )* };
        }
        take!(
            dataset, out, seed, threads, reverse, dim, margin, adversarial_temperature,
            negative_samples, batch_size, learning_rate, epochs, entity_candidates,
            relation_candidates, triple_candidates, preselect_entities, preselect_relations,
            exclude_original, gamma, analogy_learning_rate, analogy_epochs, analogy_batch_size,
            analogy_adam_epsilon, similarity, ent_rel_weight, alpha_entity, alpha_relation, alpha_triple, adaptive,
            eval_split
        );
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut table = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                text.parse::<toml::Table>()
                    .map_err(|e| Error::Config(format!("{}: {}", p.display(), e.message())))?
            }
            None => toml::Table::new(),
        };
        for o in overrides {
            let (k, v) = parse_override(o)?;
            table.insert(k, v);
        }
        Self::from_table(table)
    }

    pub fn validate(&self) -> Result<()> {
        self.family()?;
        self.similarity()?;
        self.base_config().validate()?;
        self.retriever_config().validate()?;
        self.analogy_config()?.validate()?;
        self.inference_config().validate()?;
        Ok(())
    }

    pub fn family(&self) -> Result<ModelFamily> {
        self.family.parse().map_err(|e: ankge_core::Error| Error::Config(e.to_string()))
    }

    pub fn similarity(&self) -> Result<Similarity> {
        self.similarity.parse().map_err(|e: ankge_core::Error| Error::Config(e.to_string()))
    }

    pub fn base_config(&self) -> BaseTrainConfig {
        BaseTrainConfig {
            margin: self.margin,
            adversarial_temperature: self.adversarial_temperature,
            negative_samples: self.negative_samples,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            epochs: self.epochs,
            dim: self.dim,
            seed: self.seed,
        }
    }

    pub fn retriever_config(&self) -> RetrieverConfig {
        RetrieverConfig {
            entity_candidates: self.entity_candidates,
            relation_candidates: self.relation_candidates,
            triple_candidates: self.triple_candidates,
            preselect_entities: self.preselect_entities,
            preselect_relations: self.preselect_relations,
            exclude_original: self.exclude_original,
        }
    }

    pub fn analogy_config(&self) -> Result<AnalogyTrainConfig> {
        Ok(AnalogyTrainConfig {
            gamma: self.gamma,
            learning_rate: self.analogy_learning_rate,
            epochs: self.analogy_epochs,
            batch_size: self.analogy_batch_size,
            seed: self.seed,
            similarity: self.similarity()?,
            ent_rel_weight: self.ent_rel_weight,
            adam_epsilon: self.analogy_adam_epsilon,
        })
    }

    pub fn inference_config(&self) -> InferenceConfig {
        InferenceConfig {
            alpha: [self.alpha_entity, self.alpha_relation, self.alpha_triple],
            candidates: [self.entity_candidates, self.relation_candidates, self.triple_candidates],
            adaptive: self.adaptive,
        }
    }

    /// The effective configuration as a TOML document that [`RunConfig::load`]
    /// reads back to an identical value.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

/// `key=value`, where the value is read as a TOML value and falls back to
/// a plain string.
fn parse_override(s: &str) -> Result<(String, toml::Value)> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| Error::Usage(format!("override {s:?} is not key=value")))?;
    let (k, v) = (k.trim(), v.trim());
    let value = format!("v = {v}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(v.to_string()));
    Ok((k.to_string(), value))
}
