//! Skip-gram with negative sampling.
//!
//! For every (center, context) pair inside the window the trainer ascends
//!
//! ```text
//! log sigmoid(u_ctx . v_ctr) + sum_i log sigmoid(-u_neg_i . v_ctr)
//! ```
//!
//! with negatives drawn from the unigram distribution raised to 0.75.
//! Input vectors start uniform in [-0.5/dim, 0.5/dim], output vectors at
//! zero; only input vectors are kept. All randomness (initialization,
//! per-epoch sequence shuffling, negative draws) comes from one seeded
//! ChaCha stream, so training is bit-reproducible.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::embedding::{EmbeddingConfig, EmbeddingSpace};
use crate::error::{RecError, Result};

/// Slots in the negative-sampling table, built once per training run.
const NEGATIVE_TABLE_SIZE: usize = 1_000_000;

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Numerically stable log sigmoid.
fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

/// The SGNS objective for one (center, context, negatives) step.
pub fn pair_objective(center: &[f64], context: &[f64], negatives: &[&[f64]]) -> f64 {
    let mut obj = log_sigmoid(dot(center, context));
    for neg in negatives {
        obj += log_sigmoid(-dot(center, neg));
    }
    obj
}

/// Analytic gradients of [`pair_objective`] with respect to every parameter,
/// evaluated at the current values (ascent direction).
#[derive(Clone, Debug)]
pub struct PairGradients {
    pub center: Vec<f64>,
    pub context: Vec<f64>,
    pub negatives: Vec<Vec<f64>>,
}

pub fn pair_gradients(center: &[f64], context: &[f64], negatives: &[&[f64]]) -> PairGradients {
    let dim = center.len();
    let mut grad_center = vec![0.0; dim];

    // d/dx log sigmoid(x) = 1 - sigmoid(x), applied to the positive pair.
    let g_pos = 1.0 - sigmoid(dot(center, context));
    let grad_context: Vec<f64> = center.iter().map(|c| g_pos * c).collect();
    for (gc, u) in grad_center.iter_mut().zip(context) {
        *gc += g_pos * u;
    }

    // d/dx log sigmoid(-x) = -sigmoid(x), applied to each negative.
    let mut grad_negatives = Vec::with_capacity(negatives.len());
    for neg in negatives {
        let g_neg = -sigmoid(dot(center, neg));
        grad_negatives.push(center.iter().map(|c| g_neg * c).collect());
        for (gc, u) in grad_center.iter_mut().zip(*neg) {
            *gc += g_neg * u;
        }
    }

    PairGradients {
        center: grad_center,
        context: grad_context,
        negatives: grad_negatives,
    }
}

struct Vocab {
    tokens: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, usize>,
}

fn build_vocab(sequences: &[Vec<String>], min_count: u64) -> Vocab {
    let mut raw: HashMap<&str, u64> = HashMap::new();
    for seq in sequences {
        for token in seq {
            *raw.entry(token).or_insert(0) += 1;
        }
    }
    let mut tokens: Vec<String> = raw
        .iter()
        .filter(|&(_, &c)| c >= min_count)
        .map(|(&t, _)| t.to_string())
        .collect();
    tokens.sort_unstable();
    let counts = tokens.iter().map(|t| raw[t.as_str()]).collect();
    let index = tokens
        .iter()
        .enumerate()
        .map(|(i, t)| (t.clone(), i))
        .collect();
    Vocab {
        tokens,
        counts,
        index,
    }
}

/// Unigram^0.75 sampling table, word2vec style: token `i` owns a stretch of
/// slots proportional to `count_i^0.75`.
fn build_negative_table(counts: &[u64]) -> Vec<u32> {
    let total: f64 = counts.iter().map(|&c| (c as f64).powf(0.75)).sum();
    let mut table = vec![0u32; NEGATIVE_TABLE_SIZE];
    let mut token = 0usize;
    let mut cumulative = (counts[0] as f64).powf(0.75) / total;
    for (slot, entry) in table.iter_mut().enumerate() {
        *entry = token as u32;
        if (slot + 1) as f64 / NEGATIVE_TABLE_SIZE as f64 > cumulative && token + 1 < counts.len()
        {
            token += 1;
            cumulative += (counts[token] as f64).powf(0.75) / total;
        }
    }
    table
}

/// Trains an embedding space over the token sequences.
///
/// Errors when the effective vocabulary is empty, when no sequence keeps at
/// least two tokens after `min_count` filtering, or when training produces a
/// non-finite value.
pub fn train_skipgram(sequences: &[Vec<String>], config: &EmbeddingConfig) -> Result<EmbeddingSpace> {
    config.validate()?;
    let vocab = build_vocab(sequences, config.min_count);
    if vocab.tokens.is_empty() {
        return Err(RecError::Embedding(
            "empty effective vocabulary after min_count filtering".into(),
        ));
    }

    let interned: Vec<Vec<u32>> = sequences
        .iter()
        .map(|seq| {
            seq.iter()
                .filter_map(|t| vocab.index.get(t).map(|&i| i as u32))
                .collect::<Vec<u32>>()
        })
        .filter(|seq| seq.len() >= 2)
        .collect();
    if interned.is_empty() {
        return Err(RecError::Embedding(
            "no sequence of length >= 2 after min_count filtering".into(),
        ));
    }

    let dim = config.dim;
    let n = vocab.tokens.len();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut input: Vec<f64> = (0..n * dim)
        .map(|_| (rng.random::<f64>() - 0.5) / dim as f64)
        .collect();
    let mut output = vec![0.0f64; n * dim];
    let table = build_negative_table(&vocab.counts);

    let pairs_per_epoch: usize = interned
        .iter()
        .map(|seq| {
            let len = seq.len();
            (0..len)
                .map(|c| {
                    let lo = c.saturating_sub(config.window);
                    let hi = (c + config.window).min(len - 1);
                    hi - lo // window positions minus the center itself
                })
                .sum::<usize>()
        })
        .sum();
    let total_pairs = (pairs_per_epoch * config.epochs) as f64;

    let mut order: Vec<usize> = (0..interned.len()).collect();
    let mut processed = 0usize;
    let mut negatives: Vec<u32> = Vec::with_capacity(config.negatives);

    for _epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        for &seq_idx in &order {
            let seq = &interned[seq_idx];
            for center_pos in 0..seq.len() {
                let lo = center_pos.saturating_sub(config.window);
                let hi = (center_pos + config.window).min(seq.len() - 1);
                for context_pos in lo..=hi {
                    if context_pos == center_pos {
                        continue;
                    }
                    let center = seq[center_pos] as usize;
                    let context = seq[context_pos] as usize;

                    // Negatives colliding with the positive context are
                    // skipped rather than redrawn.
                    negatives.clear();
                    for _ in 0..config.negatives {
                        let neg = table[rng.random_range(0..NEGATIVE_TABLE_SIZE)];
                        if neg as usize != context {
                            negatives.push(neg);
                        }
                    }

                    let lr = config.lr_start
                        + (config.lr_end - config.lr_start) * (processed as f64 / total_pairs);
                    processed += 1;

                    let center_vec = &input[center * dim..(center + 1) * dim];
                    let context_vec = &output[context * dim..(context + 1) * dim];
                    let neg_vecs: Vec<&[f64]> = negatives
                        .iter()
                        .map(|&i| &output[i as usize * dim..(i as usize + 1) * dim])
                        .collect();
                    let grads = pair_gradients(center_vec, context_vec, &neg_vecs);

                    for (x, g) in input[center * dim..(center + 1) * dim]
                        .iter_mut()
                        .zip(&grads.center)
                    {
                        *x += lr * g;
                    }
                    for (x, g) in output[context * dim..(context + 1) * dim]
                        .iter_mut()
                        .zip(&grads.context)
                    {
                        *x += lr * g;
                    }
                    for (&neg, grad) in negatives.iter().zip(&grads.negatives) {
                        let neg = neg as usize;
                        for (x, g) in output[neg * dim..(neg + 1) * dim].iter_mut().zip(grad) {
                            *x += lr * g;
                        }
                    }
                }
            }
        }
    }

    if input.iter().any(|x| !x.is_finite()) {
        return Err(RecError::Embedding(
            "non-finite value encountered during training; \
             lower the learning rate or check the corpus"
                .into(),
        ));
    }
    let space = EmbeddingSpace::from_parts(dim, vocab.tokens, input, vocab.counts)?;
    for token in space.tokens() {
        let norm: f64 = space
            .vector(token)
            .unwrap()
            .iter()
            .map(|x| x * x)
            .sum::<f64>();
        if norm == 0.0 {
            return Err(RecError::Embedding(format!(
                "token {token:?} trained to a zero vector"
            )));
        }
    }
    Ok(space)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Central finite differences of the pair objective, used to check the
    /// analytic gradients on a tiny 5-token setup.
    fn finite_diff(center: &[f64], context: &[f64], negatives: &[Vec<f64>]) -> PairGradients {
        let h = 1e-5;
        let eval = |c: &[f64], ctx: &[f64], ns: &[Vec<f64>]| {
            let refs: Vec<&[f64]> = ns.iter().map(Vec::as_slice).collect();
            pair_objective(c, ctx, &refs)
        };
        let dim = center.len();
        let mut grads = PairGradients {
            center: vec![0.0; dim],
            context: vec![0.0; dim],
            negatives: vec![vec![0.0; dim]; negatives.len()],
        };
        for d in 0..dim {
            let mut plus = center.to_vec();
            let mut minus = center.to_vec();
            plus[d] += h;
            minus[d] -= h;
            grads.center[d] = (eval(&plus, context, &negatives.to_vec())
                - eval(&minus, context, &negatives.to_vec()))
                / (2.0 * h);

            let mut plus = context.to_vec();
            let mut minus = context.to_vec();
            plus[d] += h;
            minus[d] -= h;
            grads.context[d] =
                (eval(center, &plus, &negatives.to_vec()) - eval(center, &minus, &negatives.to_vec()))
                    / (2.0 * h);

            for (i, neg) in negatives.iter().enumerate() {
                let mut plus = negatives.to_vec();
                let mut minus = negatives.to_vec();
                plus[i][d] = neg[d] + h;
                minus[i][d] = neg[d] - h;
                grads.negatives[i][d] =
                    (eval(center, context, &plus) - eval(center, context, &minus)) / (2.0 * h);
            }
        }
        grads
    }

    fn assert_close(analytic: &[f64], numeric: &[f64], what: &str) {
        for (i, (a, n)) in analytic.iter().zip(numeric).enumerate() {
            let rel = (a - n).abs() / a.abs().max(n.abs()).max(1e-12);
            assert!(rel < 1e-4, "{what}[{i}]: analytic {a} vs numeric {n}");
        }
    }

    #[test]
    fn analytic_gradient_matches_finite_differences() {
        // Five tokens: one center, one context, three negatives.
        let center = vec![0.3, -0.2, 0.5, 0.1];
        let context = vec![-0.4, 0.25, 0.05, -0.3];
        let negatives = vec![
            vec![0.2, 0.1, -0.15, 0.35],
            vec![-0.1, -0.3, 0.4, 0.2],
            vec![0.05, 0.45, -0.25, -0.1],
        ];
        let neg_refs: Vec<&[f64]> = negatives.iter().map(Vec::as_slice).collect();
        let analytic = pair_gradients(&center, &context, &neg_refs);
        let numeric = finite_diff(&center, &context, &negatives);
        assert_close(&analytic.center, &numeric.center, "center");
        assert_close(&analytic.context, &numeric.context, "context");
        for i in 0..negatives.len() {
            assert_close(&analytic.negatives[i], &numeric.negatives[i], "negative");
        }
    }

    #[test]
    fn log_sigmoid_is_stable_at_extremes() {
        assert!(log_sigmoid(800.0).abs() < 1e-12);
        assert!((log_sigmoid(-800.0) + 800.0).abs() < 1e-9);
    }

    #[test]
    fn negative_table_covers_all_tokens() {
        let table = build_negative_table(&[10, 5, 1]);
        let mut seen = [false; 3];
        for &t in &table {
            seen[t as usize] = true;
        }
        assert!(seen.iter().all(|&s| s));
        // Most slots belong to the most frequent token.
        let head = table.iter().filter(|&&t| t == 0).count();
        assert!(head > NEGATIVE_TABLE_SIZE / 2);
    }
}
