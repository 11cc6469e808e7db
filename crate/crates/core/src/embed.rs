//! Skip-gram token embeddings with negative sampling, and padded sequence
//! matrices.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ast::TokenSequence;

pub const UNK: &str = "<unk>";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EmbedError {
    #[error("cannot train embeddings on an empty corpus")]
    EmptyCorpus,
    #[error("invalid embedding parameters: {0}")]
    InvalidParams(String),
    #[error("sequence of {len} tokens does not fit in {pad_to} rows")]
    PadTooShort { len: usize, pad_to: usize },
    #[error("cosine similarity is undefined for a zero vector")]
    ZeroVector,
    #[error("vectors have different dimensions ({0} vs {1})")]
    DimensionMismatch(usize, usize),
    #[error("embedding table line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedParams {
    pub dim: usize,
    pub window: usize,
    pub min_freq: usize,
    pub epochs: usize,
    pub negatives: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for EmbedParams {
    fn default() -> Self {
        EmbedParams {
            dim: 300,
            window: 4,
            min_freq: 1,
            epochs: 15,
            negatives: 5,
            learning_rate: 0.025,
            seed: 1,
        }
    }
}

impl EmbedParams {
    fn validate(&self) -> Result<(), EmbedError> {
        let bad = |what: &str| {
            Err(EmbedError::InvalidParams(format!(
                "{what} must be positive"
            )))
        };
        if self.dim == 0 {
            return bad("dim");
        }
        if self.window == 0 {
            return bad("window");
        }
        if self.min_freq == 0 {
            return bad("min_freq");
        }
        if self.epochs == 0 {
            return bad("epochs");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate");
        }
        Ok(())
    }
}

/// Token vectors. Index 0 is always the unknown-token vector.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    tokens: Vec<String>,
    index: BTreeMap<String, usize>,
    vectors: Vec<f64>,
}

impl EmbeddingTable {
    fn from_parts(dim: usize, tokens: Vec<String>, vectors: Vec<f64>) -> Self {
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        EmbeddingTable {
            dim,
            tokens,
            index,
            vectors,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Vocabulary size including the unknown token.
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.len() <= 1
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn contains(&self, token: &str) -> bool {
        token != UNK && self.index.contains_key(token)
    }

    pub fn index_of(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(0)
    }

    /// Vector of `token`, or the unknown vector for out-of-vocabulary tokens.
    pub fn vector(&self, token: &str) -> &[f64] {
        let i = self.index_of(token);
        &self.vectors[i * self.dim..(i + 1) * self.dim]
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.dim, self.tokens.len());
        for (i, token) in self.tokens.iter().enumerate() {
            out.push_str(&serde_json::to_string(token).expect("strings serialize"));
            for v in &self.vectors[i * self.dim..(i + 1) * self.dim] {
                write!(out, " {v}").expect("writing to a string");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, EmbedError> {
        let err = |line: usize, message: &str| EmbedError::Parse {
            line,
            message: message.to_string(),
        };
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| err(1, "missing header"))?;
        let nums: Vec<usize> = header
            .split_whitespace()
            .map(|s| {
                s.parse()
                    .map_err(|_| err(1, "header must be `dim vocab_size`"))
            })
            .collect::<Result<_, _>>()?;
        let [dim, size] = nums[..] else {
            return Err(err(1, "header must be `dim vocab_size`"));
        };
        let mut tokens = Vec::with_capacity(size);
        let mut vectors = Vec::with_capacity(size * dim);
        for (n, line) in lines.enumerate() {
            let lineno = n + 2;
            let mut stream = serde_json::Deserializer::from_str(line).into_iter::<String>();
            let token = match stream.next() {
                Some(Ok(t)) => t,
                _ => return Err(err(lineno, "expected a quoted token")),
            };
            let rest = &line[stream.byte_offset()..];
            let before = vectors.len();
            for field in rest.split_whitespace() {
                let v: f64 = field.parse().map_err(|_| err(lineno, "bad number"))?;
                if !v.is_finite() {
                    return Err(err(lineno, "non-finite entry"));
                }
                vectors.push(v);
            }
            if vectors.len() - before != dim {
                return Err(err(lineno, "wrong vector dimension"));
            }
            tokens.push(token);
        }
        if tokens.len() != size {
            return Err(err(1, "vocabulary size does not match the header"));
        }
        if tokens.first().map(String::as_str) != Some(UNK) {
            return Err(err(2, "first entry must be the unknown token"));
        }
        Ok(EmbeddingTable::from_parts(dim, tokens, vectors))
    }
}

/// Sigmoid clamped away from the saturated range.
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x.clamp(-30.0, 30.0)).exp())
}

/// Train skip-gram vectors with negative sampling.
///
/// Every pair of tokens at distance at most `window` in a sequence is a
/// training pair; negatives are drawn from the unigram distribution raised to
/// 0.75. Deterministic for a given corpus order and seed.
pub fn train_embeddings(
    sequences: &[TokenSequence],
    params: &EmbedParams,
) -> Result<EmbeddingTable, EmbedError> {
    params.validate()?;
    if sequences.iter().all(|s| s.tokens.is_empty()) {
        return Err(EmbedError::EmptyCorpus);
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for s in sequences {
        for t in &s.tokens {
            *counts.entry(t.as_str()).or_default() += 1;
        }
    }
    let mut kept: Vec<(&str, usize)> = counts
        .iter()
        .filter(|(t, c)| **c >= params.min_freq && **t != UNK)
        .map(|(t, c)| (*t, *c))
        .collect();
    kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let mut tokens = vec![UNK.to_string()];
    tokens.extend(kept.iter().map(|(t, _)| t.to_string()));
    let index: BTreeMap<&str, usize> = tokens
        .iter()
        .enumerate()
        .map(|(i, t)| (t.as_str(), i))
        .collect();

    let ids: Vec<Vec<usize>> = sequences
        .iter()
        .map(|s| {
            s.tokens
                .iter()
                .map(|t| index.get(t.as_str()).copied().unwrap_or(0))
                .collect()
        })
        .collect();
    let mut freq = vec![0usize; tokens.len()];
    for seq in &ids {
        for &i in seq {
            freq[i] += 1;
        }
    }
    let mut cumulative = Vec::with_capacity(freq.len());
    let mut acc = 0.0;
    for &f in &freq {
        acc += (f as f64).powf(0.75);
        cumulative.push(acc);
    }

    let dim = params.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut input: Vec<f64> = (0..tokens.len() * dim)
        .map(|_| (rng.random::<f64>() - 0.5) / dim as f64)
        .collect();
    let mut output = vec![0.0; tokens.len() * dim];

    let pairs_per_epoch: usize = ids
        .iter()
        .map(|s| {
            (0..s.len())
                .map(|i| s.len().min(i + params.window + 1) - i.saturating_sub(params.window) - 1)
                .sum::<usize>()
        })
        .sum();
    let total = (pairs_per_epoch * params.epochs).max(1) as f64;
    let mut processed = 0usize;
    let mut grad = vec![0.0; dim];
    for _ in 0..params.epochs {
        for seq in &ids {
            for (i, &center) in seq.iter().enumerate() {
                let lo = i.saturating_sub(params.window);
                let hi = seq.len().min(i + params.window + 1);
                for (j, &context) in seq.iter().enumerate().take(hi).skip(lo) {
                    if j == i {
                        continue;
                    }
                    let lr = params.learning_rate * (1.0 - processed as f64 / total).max(1e-4);
                    processed += 1;
                    grad.iter_mut().for_each(|g| *g = 0.0);
                    for k in 0..=params.negatives {
                        let (target, label) = if k == 0 {
                            (context, 1.0)
                        } else {
                            let r = rng.random::<f64>() * acc;
                            let t = cumulative
                                .partition_point(|&c| c <= r)
                                .min(tokens.len() - 1);
                            if t == context {
                                continue;
                            }
                            (t, 0.0)
                        };
                        let (inp, out) = (
                            &input[center * dim..(center + 1) * dim],
                            &mut output[target * dim..(target + 1) * dim],
                        );
                        let dot: f64 = inp.iter().zip(out.iter()).map(|(a, b)| a * b).sum();
                        let g = (label - sigmoid(dot)) * lr;
                        for d in 0..dim {
                            grad[d] += g * out[d];
                            out[d] += g * inp[d];
                        }
                    }
                    for (v, g) in input[center * dim..(center + 1) * dim]
                        .iter_mut()
                        .zip(&grad)
                    {
                        *v += g;
                    }
                }
            }
        }
    }
    Ok(EmbeddingTable::from_parts(dim, tokens, input))
}

/// Row-major `rows × dim` matrix of token vectors followed by zero padding.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedMatrix {
    pub rows: usize,
    pub dim: usize,
    /// Number of rows holding token vectors.
    pub length: usize,
    pub data: Vec<f64>,
}

impl EmbeddedMatrix {
    pub fn zeros(rows: usize, dim: usize) -> Self {
        EmbeddedMatrix {
            rows,
            dim,
            length: 0,
            data: vec![0.0; rows * dim],
        }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }
}

pub fn embed_sequence(
    tokens: &[String],
    table: &EmbeddingTable,
    pad_to: usize,
) -> Result<EmbeddedMatrix, EmbedError> {
    if pad_to < tokens.len() {
        return Err(EmbedError::PadTooShort {
            len: tokens.len(),
            pad_to,
        });
    }
    let mut m = EmbeddedMatrix::zeros(pad_to, table.dim());
    for (i, t) in tokens.iter().enumerate() {
        m.data[i * table.dim()..(i + 1) * table.dim()].copy_from_slice(table.vector(t));
    }
    m.length = tokens.len();
    Ok(m)
}

pub fn cosine_similarity(u: &[f64], v: &[f64]) -> Result<f64, EmbedError> {
    if u.len() != v.len() {
        return Err(EmbedError::DimensionMismatch(u.len(), v.len()));
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return Err(EmbedError::ZeroVector);
    }
    Ok((dot / (nu * nv)).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(tokens: &[&str]) -> TokenSequence {
        TokenSequence {
            tokens: tokens.iter().map(|t| t.to_string()).collect(),
        }
    }

    fn small() -> EmbedParams {
        EmbedParams {
            dim: 8,
            epochs: 3,
            ..EmbedParams::default()
        }
    }

    #[test]
    fn vocabulary_order_and_unk() {
        let t = train_embeddings(&[seq(&["b", "a", "b", "c"])], &small()).unwrap();
        assert_eq!(t.tokens(), [UNK, "b", "a", "c"]);
        assert_eq!(t.index_of("zzz"), 0);
        assert!(!t.contains(UNK));
    }

    #[test]
    fn single_token_corpus() {
        let t = train_embeddings(&[seq(&["x"])], &small()).unwrap();
        assert_eq!(t.tokens(), [UNK, "x"]);
        assert!(t.vector("x").iter().all(|v| v.is_finite()));
    }

    #[test]
    fn empty_corpus_is_an_error() {
        assert_eq!(
            train_embeddings(&[], &small()),
            Err(EmbedError::EmptyCorpus)
        );
        assert_eq!(
            train_embeddings(&[seq(&[])], &small()),
            Err(EmbedError::EmptyCorpus)
        );
    }

    #[test]
    fn min_freq_maps_rare_tokens_to_unk() {
        let params = EmbedParams {
            min_freq: 2,
            ..small()
        };
        let t = train_embeddings(&[seq(&["a", "a", "b"])], &params).unwrap();
        assert_eq!(t.tokens(), [UNK, "a"]);
        assert_eq!(t.vector("b"), t.vector(UNK));
    }

    #[test]
    fn text_round_trip_is_exact() {
        let t = train_embeddings(&[seq(&["a b", "\"q\"", "c"])], &small()).unwrap();
        assert_eq!(EmbeddingTable::from_text(&t.to_text()).unwrap(), t);
    }

    #[test]
    fn padding_and_errors() {
        let t = train_embeddings(&[seq(&["a", "b"])], &small()).unwrap();
        let toks = vec!["a".to_string(), "b".to_string()];
        let m = embed_sequence(&toks, &t, 4).unwrap();
        assert_eq!(m.row(0), t.vector("a"));
        assert_eq!(m.row(1), t.vector("b"));
        assert!(m.row(2).iter().chain(m.row(3)).all(|v| *v == 0.0));
        assert_eq!(embed_sequence(&[], &t, 3).unwrap().data, vec![0.0; 24]);
        assert_eq!(
            embed_sequence(&toks, &t, 1),
            Err(EmbedError::PadTooShort { len: 2, pad_to: 1 })
        );
    }

    #[test]
    fn cosine_basics() {
        assert!((cosine_similarity(&[1.0, 2.0], &[1.0, 2.0]).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert!((cosine_similarity(&[1.0, 2.0], &[-1.0, -2.0]).unwrap() + 1.0).abs() < 1e-12);
        assert_eq!(
            cosine_similarity(&[0.0, 0.0], &[1.0, 0.0]),
            Err(EmbedError::ZeroVector)
        );
    }
}
