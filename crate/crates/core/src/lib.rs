//! Knowledge graph embedding with analogical inference.
//!
//! The crate is `no_std` and only needs `alloc`. It covers the whole numeric
//! pipeline:
//!
//! - [`store`]: triple vocabularies, reverse augmentation, filter and count indexes.
//! - [`model`]: the TransE, RotatE, HAKE and PairRE families with analytic gradients.
//! - [`train`]: self-adversarial negative sampling and Adam-based base training.
//! - [`retriever`]: entity, relation and triple level analogical object retrieval.
//! - [`analogy`]: analogy functions, aggregated targets and their training loop.
//! - [`eval`]: adaptive-weight interpolated scoring and filtered ranking metrics.
//!
//! File formats, checkpoints and the command-line driver live in the `ankge` crate.

#![cfg_attr(not(any(feature = "std", test)), no_std)]

extern crate alloc;

pub mod analogy;
pub mod error;
pub mod eval;
pub mod math;
pub mod model;
pub mod optim;
pub mod retriever;
pub mod store;
pub mod train;

pub use analogy::{AnalogyParams, AnalogyTrainConfig, Similarity};
pub use error::{Error, Result};
pub use eval::{EvalReport, InferenceConfig, RankedTriple};
pub use model::{EmbeddingModel, ModelFamily};
pub use retriever::{AnalogyCache, CacheEntry, RetrieverConfig};
pub use store::{CountIndex, FilterIndex, RawTriple, Triple, TripleStore};
pub use train::BaseTrainConfig;
