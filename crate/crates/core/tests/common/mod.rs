#![allow(dead_code)]

use ankge_core::model::{EmbeddingModel, ModelFamily};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FD_STEP: f64 = 1e-5;

/// Central difference of `f` with respect to `x[i]`, restoring `x[i]`.
pub fn central_diff(x: &mut Vec<f64>, i: usize, f: &mut dyn FnMut(&[f64]) -> f64) -> f64 {
    let orig = x[i];
    x[i] = orig + FD_STEP;
    let up = f(x);
    x[i] = orig - FD_STEP;
    let down = f(x);
    x[i] = orig;
    (up - down) / (2.0 * FD_STEP)
}

/// `‖a − b‖ / max(‖a‖, ‖b‖)`, zero when both vanish.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let scale = norm(a).max(norm(b));
    if scale == 0.0 {
        0.0
    } else {
        norm(&diff) / scale
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random model whose entity and relation rows are partly duplicated so
/// that score ties actually occur.
pub fn random_model_with_ties(
    family: ModelFamily,
    ne: usize,
    nr: usize,
    k: usize,
    seed: u64,
) -> EmbeddingModel {
    let mut m = EmbeddingModel::init(family, ne, nr, k, seed).unwrap();
    let mut g = rng(seed ^ 0x5eed);
    let de = m.entity_dim();
    let dr = m.relation_dim();
    let (ents, rels, _) = m.tables_mut();
    for _ in 0..ne / 4 {
        let (a, b) = (g.gen_range(0..ne), g.gen_range(0..ne));
        let row: Vec<f64> = ents[a * de..(a + 1) * de].to_vec();
        ents[b * de..(b + 1) * de].copy_from_slice(&row);
    }
    if nr > 2 {
        let (a, b) = (g.gen_range(0..nr), g.gen_range(0..nr));
        let row: Vec<f64> = rels[a * dr..(a + 1) * dr].to_vec();
        rels[b * dr..(b + 1) * dr].copy_from_slice(&row);
    }
    m
}

pub fn naive_log_sigmoid(x: f64) -> f64 {
    (1.0 / (1.0 + (-x).exp())).ln()
}
