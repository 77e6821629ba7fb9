//! Interpolated scoring with adaptive weights and filtered tail ranking.

use alloc::vec;
use alloc::vec::Vec;

use crate::analogy::AnalogyParams;
use crate::error::{Error, Result};
use crate::model::EmbeddingModel;
use crate::store::{CountIndex, FilterIndex, Triple};

#[derive(Debug, Clone, PartialEq)]
pub struct InferenceConfig {
    /// Basic weights `(α_E, α_R, α_T)`.
    pub alpha: [f64; 3],
    /// `(N_e, N_r, N_t)`, the denominators of the adaptive weights.
    pub candidates: [usize; 3],
    /// `false` uses `λ = α` for every query.
    pub adaptive: bool,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        InferenceConfig {
            alpha: [0.05, 0.3, 0.1],
            candidates: [1, 1, 5],
            adaptive: true,
        }
    }
}

impl InferenceConfig {
    pub fn validate(&self) -> Result<()> {
        if self.candidates.contains(&0) {
            return Err(Error::InvalidConfig("candidate counts must be positive".into()));
        }
        if self.alpha.iter().any(|a| !(*a >= 0.0) || !a.is_finite()) {
            return Err(Error::InvalidConfig("alpha weights must be finite and >= 0".into()));
        }
        Ok(())
    }
}

/// `λ_E = min(|{(h_i, r, t)}| / N_e, 1) α_E`, and likewise `λ_R` with
/// `(h, ·, t)` counts and `λ_T` with tail counts, all over the training set.
pub fn adaptive_weights(counts: &CountIndex, triple: &Triple, config: &InferenceConfig) -> [f64; 3] {
    if !config.adaptive {
        return config.alpha;
    }
    let c = [
        counts.rt_count(triple.relation, triple.tail),
        counts.ht_count(triple.head, triple.tail),
        counts.t_count(triple.tail),
    ];
    let mut out = [0.0; 3];
    for i in 0..3 {
        let ratio = c[i] as f64 / config.candidates[i] as f64;
        out[i] = ratio.min(1.0) * config.alpha[i];
    }
    out
}

/// `f(h,r,t) + λ_E f(h_a,r,t) + λ_R f(h,r_a,t) + λ_T f(h_a,r_a,t)`.
/// Terms with a zero weight are skipped, so `λ = 0` reproduces `f` exactly.
pub fn ankge_score(
    model: &EmbeddingModel,
    params: &AnalogyParams,
    triple: &Triple,
    lambda: [f64; 3],
) -> Result<f64> {
    params.check_model(model)?;
    let (h, r, t) = (triple.h(), triple.r(), triple.t());
    model.check_entity(h)?;
    model.check_relation(r)?;
    model.check_entity(t)?;
    let h_row = model.entity(h);
    let r_row = model.relation(r);
    let t_row = model.entity(t);
    let (h_a, r_a) = params.analogy_rows(model, h, r);
    let terms = [
        (&h_a[..], &r_row[..]),
        (h_row, &r_a[..]),
        (&h_a[..], &r_a[..]),
    ];
    let mut s = model.score_unchecked(h_row, &r_row, t_row);
    for (l, (hh, rr)) in lambda.iter().zip(terms) {
        if *l != 0.0 {
            s += l * model.score_unchecked(hh, rr, t_row);
        }
    }
    Ok(s)
}

/// Tail scores of one query under the base model and the interpolated score.
pub fn query_scores(
    model: &EmbeddingModel,
    params: Option<&AnalogyParams>,
    head: usize,
    relation: usize,
    lambda: [f64; 3],
) -> Result<(Vec<f64>, Vec<f64>)> {
    model.check_entity(head)?;
    model.check_relation(relation)?;
    let h_row = model.entity(head);
    let r_row = model.relation(relation);
    let base = model.score_all_tails_with(h_row, &r_row);
    let mut enhanced = base.clone();
    if let Some(params) = params {
        params.check_model(model)?;
        let (h_a, r_a) = params.analogy_rows(model, head, relation);
        let terms = [
            (&h_a[..], &r_row[..]),
            (h_row, &r_a[..]),
            (&h_a[..], &r_a[..]),
        ];
        for (l, (hh, rr)) in lambda.iter().zip(terms) {
            if *l != 0.0 {
                let extra = model.score_all_tails_with(hh, rr);
                for (s, x) in enhanced.iter_mut().zip(extra) {
                    *s += l * x;
                }
            }
        }
    }
    Ok((base, enhanced))
}

/// 1-based rank of `gold` among candidates not in `filtered` (other than
/// `gold` itself). Ties count half: `1 + #greater + #equal / 2`.
pub fn filtered_rank(scores: &[f64], gold: usize, filtered: &[u32]) -> f64 {
    let mut skip = vec![false; scores.len()];
    for &t in filtered {
        if let Some(s) = skip.get_mut(t as usize) {
            *s = true;
        }
    }
    let target = scores[gold];
    let mut greater = 0usize;
    let mut equal = 0usize;
    for (i, &s) in scores.iter().enumerate() {
        if i == gold || skip[i] {
            continue;
        }
        if s > target {
            greater += 1;
        } else if s == target {
            equal += 1;
        }
    }
    1.0 + greater as f64 + equal as f64 / 2.0
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankedTriple {
    pub triple: Triple,
    pub base_rank: f64,
    pub enhanced_rank: f64,
    pub lambda: [f64; 3],
}

/// Filtered ranks of the gold tail of `triple` under the base and the
/// interpolated score. One `λ` per query, from the gold triple's counts.
pub fn rank_tail(
    model: &EmbeddingModel,
    params: Option<&AnalogyParams>,
    triple: &Triple,
    filter: &FilterIndex,
    counts: &CountIndex,
    config: &InferenceConfig,
) -> Result<RankedTriple> {
    model.check_entity(triple.t())?;
    let lambda = match params {
        Some(_) => adaptive_weights(counts, triple, config),
        None => [0.0; 3],
    };
    let (base, enhanced) = query_scores(model, params, triple.h(), triple.r(), lambda)?;
    let known = filter.tails(triple.head, triple.relation);
    Ok(RankedTriple {
        triple: *triple,
        base_rank: filtered_rank(&base, triple.t(), known),
        enhanced_rank: filtered_rank(&enhanced, triple.t(), known),
        lambda,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub mrr: f64,
    pub hits1: f64,
    pub hits3: f64,
    pub hits10: f64,
}

impl Metrics {
    pub fn from_ranks(ranks: impl IntoIterator<Item = f64>) -> Self {
        let mut n = 0usize;
        let (mut rr, mut h1, mut h3, mut h10) = (0.0, 0usize, 0usize, 0usize);
        for r in ranks {
            n += 1;
            rr += 1.0 / r;
            h1 += (r <= 1.0) as usize;
            h3 += (r <= 3.0) as usize;
            h10 += (r <= 10.0) as usize;
        }
        let n = n.max(1) as f64;
        Metrics {
            mrr: rr / n,
            hits1: h1 as f64 / n,
            hits3: h3 as f64 / n,
            hits10: h10 as f64 / n,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    /// Interpolated scoring (equal to `base` without analogy parameters).
    pub metrics: Metrics,
    pub base: Metrics,
    pub ranks: Vec<RankedTriple>,
}

impl EvalReport {
    pub fn from_ranked(ranks: Vec<RankedTriple>) -> Self {
        EvalReport {
            metrics: Metrics::from_ranks(ranks.iter().map(|r| r.enhanced_rank)),
            base: Metrics::from_ranks(ranks.iter().map(|r| r.base_rank)),
            ranks,
        }
    }
}

/// Filtered tail prediction over `queries`, in order.
pub fn evaluate(
    model: &EmbeddingModel,
    params: Option<&AnalogyParams>,
    queries: &[Triple],
    filter: &FilterIndex,
    counts: &CountIndex,
    config: &InferenceConfig,
) -> Result<EvalReport> {
    config.validate()?;
    if queries.is_empty() {
        return Err(Error::EmptyInput);
    }
    let ranks = queries
        .iter()
        .map(|t| rank_tail(model, params, t, filter, counts, config))
        .collect::<Result<_>>()?;
    Ok(EvalReport::from_ranked(ranks))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelFamily;

    #[test]
    fn zero_counts_give_zero_weights() {
        let c = CountIndex::build(&[]);
        assert_eq!(adaptive_weights(&c, &Triple::new(0, 0, 1), &InferenceConfig::default()), [0.0; 3]);
    }

    #[test]
    fn weights_saturate_at_alpha() {
        let train: Vec<Triple> = (0..4).map(|h| Triple::new(h, 0, 9)).collect();
        let c = CountIndex::build(&train);
        let cfg = InferenceConfig {
            alpha: [0.2, 0.3, 0.4],
            candidates: [4, 1, 2],
            adaptive: true,
        };
        let l = adaptive_weights(&c, &Triple::new(0, 0, 9), &cfg);
        assert_eq!(l, [0.2, 0.3, 0.4]);
    }

    #[test]
    fn fixed_weights_bypass_counts() {
        let c = CountIndex::build(&[]);
        let cfg = InferenceConfig {
            adaptive: false,
            ..InferenceConfig::default()
        };
        assert_eq!(adaptive_weights(&c, &Triple::new(0, 0, 0), &cfg), cfg.alpha);
    }

    #[test]
    fn tie_rule_and_filtering() {
        assert_eq!(filtered_rank(&[1.0, 0.5, 0.2], 0, &[]), 1.0);
        assert_eq!(filtered_rank(&[1.0, 1.0, 0.2], 0, &[]), 1.5);
        assert_eq!(filtered_rank(&[0.1, 1.0, 0.2], 0, &[1, 2]), 1.0);
        assert_eq!(filtered_rank(&[0.1, 1.0, 0.2], 0, &[0]), 3.0);
    }

    #[test]
    fn metric_arithmetic() {
        let m = Metrics::from_ranks([1.0, 2.0, 4.0]);
        assert!((m.mrr - 0.583_333_333_333_333_3).abs() < 1e-12);
        assert_eq!((m.hits1, m.hits3, m.hits10), (1.0 / 3.0, 2.0 / 3.0, 1.0));
        let perfect = Metrics::from_ranks([1.0; 5]);
        assert_eq!((perfect.mrr, perfect.hits1, perfect.hits10), (1.0, 1.0, 1.0));
    }

    #[test]
    fn zero_lambda_is_the_base_score() {
        let m = EmbeddingModel::init(ModelFamily::PairRE, 5, 2, 4, 3).unwrap();
        let mut p = AnalogyParams::identity(&m, 1.0);
        p.v_entity.iter_mut().enumerate().for_each(|(i, v)| *v = 0.5 + i as f64 * 0.01);
        let t = Triple::new(1, 1, 3);
        assert_eq!(ankge_score(&m, &p, &t, [0.0; 3]).unwrap(), m.score_triple_ids(1, 1, 3).unwrap());
    }

    #[test]
    fn identity_params_scale_the_base_score() {
        let m = EmbeddingModel::init(ModelFamily::RotatE, 5, 2, 4, 3).unwrap();
        let p = AnalogyParams::identity(&m, 1.0);
        let t = Triple::new(2, 0, 4);
        let l = [0.1, 0.2, 0.3];
        let base = m.score_triple_ids(2, 0, 4).unwrap();
        let got = ankge_score(&m, &p, &t, l).unwrap();
        assert!((got - 1.6 * base).abs() <= 1e-12 * base.abs());
    }

    #[test]
    fn vectorised_scores_match_pointwise_scoring() {
        let m = EmbeddingModel::init(ModelFamily::Hake, 6, 3, 4, 9).unwrap();
        let mut p = AnalogyParams::identity(&m, 1.0);
        p.transform.iter_mut().enumerate().for_each(|(i, x)| *x = (i as f64 * 0.37).sin() * 0.1);
        let l = [0.05, 0.3, 0.06];
        let (_, enhanced) = query_scores(&m, Some(&p), 4, 2, l).unwrap();
        for (tail, &s) in enhanced.iter().enumerate() {
            assert_eq!(s, ankge_score(&m, &p, &Triple::new(4, 2, tail as u32), l).unwrap());
        }
    }
}
