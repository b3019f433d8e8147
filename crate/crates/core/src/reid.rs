//! Appearance-feature math: temporal-attention clip aggregation,
//! trajectory pooling, and the training losses (batch-sample triplet
//! plus cross-entropy) as numeric operations with analytic gradients.

use alloc::vec::Vec;
use core::fmt;

use crate::embedding::{EmbeddingError, EmbeddingVector};
use crate::fmath;
use crate::track::Tracklet;

#[derive(Debug, Clone, PartialEq)]
pub enum ReidError {
    EmptyClip,
    LengthMismatch { frames: usize, scores: usize },
    Embedding(EmbeddingError),
    InvalidProbability { at: usize },
}

impl fmt::Display for ReidError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReidError::EmptyClip => write!(f, "clip must contain at least one frame"),
            ReidError::LengthMismatch { frames, scores } => {
                write!(f, "{frames} frames but {scores} attention scores")
            }
            ReidError::Embedding(e) => write!(f, "{e}"),
            ReidError::InvalidProbability { at } => {
                write!(f, "probability out of (0, 1] at index {at}")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for ReidError {}

impl From<EmbeddingError> for ReidError {
    fn from(e: EmbeddingError) -> Self {
        ReidError::Embedding(e)
    }
}

/// Clip-level feature with the frame span it was pooled from.
#[derive(Debug, Clone, PartialEq)]
pub struct ClipFeature {
    pub values: EmbeddingVector,
    pub span: (u32, u32),
}

/// Per-frame attention scores for one clip.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionScores {
    pub scores: Vec<f64>,
}

impl AttentionScores {
    pub fn uniform(len: usize) -> Self {
        Self {
            scores: alloc::vec![0.0; len],
        }
    }
}

/// How attention scores turn into frame weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AttentionMode {
    /// Softmax-normalized convex combination (default).
    #[default]
    Softmax,
    /// Use the raw scores as weights without normalization.
    Raw,
}

pub(crate) fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|&s| fmath::exp(s - max)).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Weight the frame-level features into one clip-level feature.
pub fn aggregate_clip(
    frames: &[EmbeddingVector],
    att: &AttentionScores,
    mode: AttentionMode,
    span: (u32, u32),
) -> Result<ClipFeature, ReidError> {
    if frames.is_empty() {
        return Err(ReidError::EmptyClip);
    }
    if frames.len() != att.scores.len() {
        return Err(ReidError::LengthMismatch {
            frames: frames.len(),
            scores: att.scores.len(),
        });
    }
    let weights = match mode {
        AttentionMode::Softmax => softmax(&att.scores),
        AttentionMode::Raw => att.scores.clone(),
    };
    let dim = frames[0].dim();
    let mut acc = alloc::vec![0.0; dim];
    for (frame, &w) in frames.iter().zip(&weights) {
        if frame.dim() != dim {
            return Err(EmbeddingError::DimensionMismatch {
                left: dim,
                right: frame.dim(),
            }
            .into());
        }
        for (a, v) in acc.iter_mut().zip(frame.values()) {
            *a += w * v;
        }
    }
    Ok(ClipFeature {
        values: EmbeddingVector::new(acc)?,
        span,
    })
}

/// Average pooling of clip features into one trajectory-level feature.
pub fn trajectory_feature(clips: &[ClipFeature]) -> Result<EmbeddingVector, ReidError> {
    if clips.is_empty() {
        return Err(ReidError::EmptyClip);
    }
    Ok(EmbeddingVector::mean(clips.iter().map(|c| &c.values))?)
}

/// Chunk a tracklet's per-frame embeddings into consecutive clips of
/// `clip_length` frames (the last clip may be short) and aggregate each
/// with uniform attention, which reproduces average pooling.
pub fn tracklet_clips(t: &Tracklet, clip_length: usize) -> Result<Vec<ClipFeature>, ReidError> {
    let framed: Vec<(u32, &EmbeddingVector)> = t
        .observations()
        .iter()
        .filter_map(|o| o.embedding.as_ref().map(|e| (o.frame, e)))
        .collect();
    if framed.is_empty() {
        return Err(ReidError::EmptyClip);
    }
    let mut clips = Vec::new();
    for chunk in framed.chunks(clip_length.max(1)) {
        let frames: Vec<EmbeddingVector> = chunk.iter().map(|(_, e)| (*e).clone()).collect();
        let span = (chunk[0].0, chunk[chunk.len() - 1].0);
        clips.push(aggregate_clip(
            &frames,
            &AttentionScores::uniform(frames.len()),
            AttentionMode::Softmax,
            span,
        )?);
    }
    Ok(clips)
}

/// Trajectory-level appearance feature of a tracklet.
pub fn tracklet_feature(t: &Tracklet, clip_length: usize) -> Result<EmbeddingVector, ReidError> {
    trajectory_feature(&tracklet_clips(t, clip_length)?)
}

/// One anchor's distance rows, split into positives and negatives.
#[derive(Debug, Clone, PartialEq)]
pub struct AnchorRow {
    pub positives: Vec<f64>,
    pub negatives: Vec<f64>,
}

/// A minibatch for the batch-sample triplet loss.
#[derive(Debug, Clone, PartialEq)]
pub struct TripletBatch {
    pub anchors: Vec<AnchorRow>,
    pub margin: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TripletMode {
    /// Weights are the multinomial probabilities themselves: softmax
    /// over +D for positives, -D for negatives (hard samples dominate).
    Expectation,
    /// Draw one positive and one negative index per anchor from the
    /// same distributions.
    Sampled { seed: u64 },
}

/// Per-anchor gradient of the loss with respect to the distances.
#[derive(Debug, Clone, PartialEq)]
pub struct AnchorGradient {
    pub d_positives: Vec<f64>,
    pub d_negatives: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TripletLossResult {
    pub loss: f64,
    pub gradients: Vec<AnchorGradient>,
    /// Anchors skipped for lacking positives or negatives.
    pub skipped: usize,
}

// splitmix64; enough for reproducible one-hot sampling without pulling
// an RNG crate into the no_std core
struct SplitMix64(u64);

impl SplitMix64 {
    fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }
}

fn sample_index(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// Batch-sample triplet loss over a minibatch of distance rows, with
/// the analytic gradient with respect to every distance.
pub fn bs_triplet_loss(batch: &TripletBatch, mode: TripletMode) -> TripletLossResult {
    let mut total = 0.0;
    let mut gradients = Vec::with_capacity(batch.anchors.len());
    let mut skipped = 0;
    let mut rng = match mode {
        TripletMode::Sampled { seed } => Some(SplitMix64(seed)),
        TripletMode::Expectation => None,
    };
    for anchor in &batch.anchors {
        let np = anchor.positives.len();
        let nn = anchor.negatives.len();
        if np == 0 || nn == 0 {
            skipped += 1;
            gradients.push(AnchorGradient {
                d_positives: alloc::vec![0.0; np],
                d_negatives: alloc::vec![0.0; nn],
            });
            continue;
        }
        let wp_probs = softmax(&anchor.positives);
        let neg_scores: Vec<f64> = anchor.negatives.iter().map(|d| -d).collect();
        let wn_probs = softmax(&neg_scores);

        let (wp, wn): (Vec<f64>, Vec<f64>) = match &mut rng {
            None => (wp_probs.clone(), wn_probs.clone()),
            Some(rng) => {
                let pi = sample_index(&wp_probs, rng.next_f64());
                let ni = sample_index(&wn_probs, rng.next_f64());
                let mut wp = alloc::vec![0.0; np];
                let mut wn = alloc::vec![0.0; nn];
                wp[pi] = 1.0;
                wn[ni] = 1.0;
                (wp, wn)
            }
        };

        let pos_term: f64 = wp.iter().zip(&anchor.positives).map(|(w, d)| w * d).sum();
        let neg_term: f64 = wn.iter().zip(&anchor.negatives).map(|(w, d)| w * d).sum();
        let inner = batch.margin + pos_term - neg_term;
        let active = inner > 0.0;
        total += inner.max(0.0);

        let mut d_positives = alloc::vec![0.0; np];
        let mut d_negatives = alloc::vec![0.0; nn];
        if active {
            match mode {
                TripletMode::Expectation => {
                    // weights depend on the distances, so the softmax
                    // Jacobian enters the gradient
                    for k in 0..np {
                        d_positives[k] = wp_probs[k] * (1.0 + anchor.positives[k] - pos_term);
                    }
                    for k in 0..nn {
                        d_negatives[k] =
                            -wn_probs[k] * (1.0 + neg_term - anchor.negatives[k]);
                    }
                }
                TripletMode::Sampled { .. } => {
                    for k in 0..np {
                        d_positives[k] = wp[k];
                    }
                    for k in 0..nn {
                        d_negatives[k] = -wn[k];
                    }
                }
            }
        }
        gradients.push(AnchorGradient {
            d_positives,
            d_negatives,
        });
    }
    TripletLossResult {
        loss: total,
        gradients,
        skipped,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct XentResult {
    pub loss: f64,
    pub gradient: Vec<f64>,
    /// True when the true-class probability had to be clamped at 1e-12.
    pub clamped: bool,
}

const XENT_EPS: f64 = 1e-12;

/// Cross-entropy loss `-(1/N) sum q(i) log prob(i)` over N identities,
/// with the gradient with respect to the probabilities.
pub fn xent_loss(prob: &[f64], truth: &[f64]) -> Result<XentResult, ReidError> {
    if prob.is_empty() || prob.len() != truth.len() {
        return Err(ReidError::LengthMismatch {
            frames: prob.len(),
            scores: truth.len(),
        });
    }
    for (i, &p) in prob.iter().enumerate() {
        if !(p >= 0.0 && p <= 1.0 + 1e-9) {
            return Err(ReidError::InvalidProbability { at: i });
        }
    }
    let n = prob.len() as f64;
    let mut loss = 0.0;
    let mut gradient = alloc::vec![0.0; prob.len()];
    let mut clamped = false;
    for i in 0..prob.len() {
        if truth[i] == 0.0 {
            continue;
        }
        let mut p = prob[i];
        if p < XENT_EPS {
            p = XENT_EPS;
            clamped = true;
        }
        loss -= truth[i] * fmath::ln(p) / n;
        gradient[i] = -truth[i] / (p * n);
    }
    Ok(XentResult {
        loss,
        gradient,
        clamped,
    })
}

/// Weighted sum of the two loss terms.
pub fn combined_loss(triplet: f64, xent: f64, lambda1: f64, lambda2: f64) -> f64 {
    lambda1 * triplet + lambda2 * xent
}
