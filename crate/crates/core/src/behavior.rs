//! Behavior descriptors: turning a duel trace into a [`BehaviorVector`].

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::archive::{ArchiveError, BehaviorVector, DistanceKind};
use crate::domains::{DuelOutcome, Side};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DescribeError {
    #[error("video is empty")]
    EmptyVideo,
    #[error("cannot take {wanted} frames from a video of {len}")]
    TooFewFrames { wanted: usize, len: usize },
    #[error("pool size must be positive and at most {max}, got {got}")]
    BadPool { got: usize, max: usize },
    #[error("trace has no {0} channel")]
    MissingChannel(&'static str),
    #[error("evaluation key {0:#018x} not found in external embeddings")]
    MissingKey(u64),
    #[error("external embeddings not loaded")]
    NoExternalTable,
    #[error(transparent)]
    Behavior(#[from] ArchiveError),
}

/// Single-channel image with intensities in `[0, 1]`, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<f64>,
}

impl Frame {
    pub fn blank(width: usize, height: usize) -> Self {
        Self { width, height, pixels: vec![0.0; width * height] }
    }

    pub fn uniform(width: usize, height: usize, value: f64) -> Self {
        Self { width, height, pixels: vec![value; width * height] }
    }

    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        if x < self.width && y < self.height {
            self.pixels[y * self.width + x] = v;
        }
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.width + x]
    }
}

/// Frame indices picked from a video of `len` frames: `round(j (len-1) / (f-1))`
/// with halves rounded away from zero, or just the last frame when `f == 1`.
pub fn subsample_indices(len: usize, f: usize) -> Result<Vec<usize>, DescribeError> {
    if len == 0 {
        return Err(DescribeError::EmptyVideo);
    }
    if f == 0 || f > len {
        return Err(DescribeError::TooFewFrames { wanted: f, len });
    }
    if f == 1 {
        return Ok(vec![len - 1]);
    }
    let (span, steps) = (len - 1, f - 1);
    Ok((0..f).map(|j| (2 * j * span + steps) / (2 * steps)).collect())
}

pub fn subsample_frames(video: &[Frame], f: usize) -> Result<Vec<Frame>, DescribeError> {
    Ok(subsample_indices(video.len(), f)?.into_iter().map(|i| video[i].clone()).collect())
}

/// Average-pools the frame on a `d x d` grid and L2-normalizes the result.
/// An all-zero frame maps to the first basis vector.
pub fn pool_embed(frame: &Frame, d: usize) -> Result<Vec<f64>, DescribeError> {
    let max = frame.width.min(frame.height);
    if d == 0 || d > max {
        return Err(DescribeError::BadPool { got: d, max });
    }
    let mut out = Vec::with_capacity(d * d);
    for r in 0..d {
        let (y0, y1) = (r * frame.height / d, (r + 1) * frame.height / d);
        for c in 0..d {
            let (x0, x1) = (c * frame.width / d, (c + 1) * frame.width / d);
            let mut sum = 0.0;
            for y in y0..y1 {
                sum += frame.pixels[y * frame.width + x0..y * frame.width + x1].iter().sum::<f64>();
            }
            out.push(sum / ((y1 - y0) * (x1 - x0)) as f64);
        }
    }
    let norm = out.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        out[0] = 1.0;
    } else {
        out.iter_mut().for_each(|v| *v /= norm);
    }
    Ok(out)
}

/// Which behavior descriptor a run uses.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DescriptorSpec {
    /// Pooled embeddings of `frames` evenly spaced frames, concatenated.
    FrameEmbedding { pool: usize, frames: usize },
    /// Coordinates of the evaluated side's units at evenly spaced timesteps.
    Positions { timesteps: usize },
    /// Mean remaining health of the evaluated side and completion time.
    Handcrafted,
    /// Mean and population standard deviation of the genome's integer values.
    GenomeStats,
    /// Precomputed embeddings keyed by evaluation key.
    External { path: String },
}

impl Default for DescriptorSpec {
    fn default() -> Self {
        DescriptorSpec::FrameEmbedding { pool: 8, frames: 5 }
    }
}

impl DescriptorSpec {
    pub fn distance_kind(&self) -> DistanceKind {
        match self {
            DescriptorSpec::FrameEmbedding { .. } | DescriptorSpec::Positions { .. } | DescriptorSpec::External { .. } => {
                DistanceKind::Cosine
            }
            DescriptorSpec::Handcrafted | DescriptorSpec::GenomeStats => DistanceKind::Euclidean,
        }
    }

    /// A random point of the descriptor's value domain, used to lay out
    /// tessellations before any evaluation exists.
    pub fn random_behavior<R: Rng>(&self, info: &DescriptorDomain, rng: &mut R) -> Result<BehaviorVector, ArchiveError> {
        let values = match self {
            DescriptorSpec::FrameEmbedding { pool, frames } => {
                let mut v = Vec::with_capacity(pool * pool * frames);
                for _ in 0..*frames {
                    let block: Vec<f64> = (0..pool * pool).map(|_| rng.gen::<f64>()).collect();
                    let n = block.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
                    v.extend(block.iter().map(|x| x / n));
                }
                v
            }
            DescriptorSpec::Positions { timesteps } => {
                (0..timesteps * info.units_per_side * 2).map(|_| rng.gen::<f64>()).collect()
            }
            DescriptorSpec::Handcrafted => vec![rng.gen(), rng.gen()],
            DescriptorSpec::GenomeStats => {
                let (lo, hi) = info.gene_range;
                vec![rng.gen_range(lo..=hi), rng.gen_range(0.0..=(hi - lo) / 2.0)]
            }
            DescriptorSpec::External { .. } => (0..info.external_dim.max(1)).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        };
        BehaviorVector::new(values, self.distance_kind())
    }
}

/// Domain facts some descriptors need.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DescriptorDomain {
    pub units_per_side: usize,
    pub gene_range: (f64, f64),
    pub external_dim: usize,
}

/// Precomputed behavior vectors keyed by evaluation key.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct EmbeddingTable {
    pub dim: usize,
    pub vectors: BTreeMap<u64, Vec<f32>>,
}

/// Everything `describe` needs beyond the trace itself.
pub struct DescribeContext<'a> {
    /// The side whose behavior is being described.
    pub side: Side,
    /// Integer genome of the evaluated side's solution.
    pub genome: &'a [f64],
    pub key: u64,
    pub external: Option<&'a EmbeddingTable>,
}

pub fn describe(outcome: &DuelOutcome, spec: &DescriptorSpec, ctx: &DescribeContext<'_>) -> Result<BehaviorVector, DescribeError> {
    let kind = spec.distance_kind();
    let values = match spec {
        DescriptorSpec::FrameEmbedding { pool, frames } => {
            let idx = subsample_indices(outcome.video.len(), *frames)?;
            let mut v = Vec::with_capacity(pool * pool * frames);
            for i in idx {
                v.extend(pool_embed(&outcome.video.frame(i), *pool)?);
            }
            v
        }
        DescriptorSpec::Positions { timesteps } => {
            let len = outcome.video.len();
            if len == 0 {
                return Err(DescribeError::EmptyVideo);
            }
            let mut v = Vec::new();
            for j in 1..=*timesteps {
                let t = (2 * j * outcome.max_steps as usize + timesteps) / (2 * timesteps);
                let pos = outcome
                    .video
                    .positions(ctx.side, t.min(len - 1))
                    .ok_or(DescribeError::MissingChannel("positions"))?;
                for (x, y) in pos {
                    v.push(x);
                    v.push(y);
                }
            }
            v
        }
        DescriptorSpec::Handcrafted => vec![
            outcome.health_remaining[ctx.side.index()],
            outcome.completion_step as f64 / outcome.max_steps.max(1) as f64,
        ],
        DescriptorSpec::GenomeStats => {
            if ctx.genome.is_empty() {
                return Err(DescribeError::MissingChannel("genome"));
            }
            let (mean, std) = mean_std(ctx.genome);
            vec![mean, std]
        }
        DescriptorSpec::External { .. } => {
            let table = ctx.external.ok_or(DescribeError::NoExternalTable)?;
            let v = table.vectors.get(&ctx.key).ok_or(DescribeError::MissingKey(ctx.key))?;
            v.iter().map(|&x| x as f64).collect()
        }
    };
    Ok(BehaviorVector::new(values, kind)?)
}

/// Mean and population standard deviation (two-pass).
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}
