//! Elite archives.
//!
//! [`GrowingArchive`] is an unstructured archive with a fixed number of cells
//! whose centroids move toward novel behaviors; [`FixedCvtArchive`] keeps the
//! centroids it was built with. Both place a behavior in the cell of its
//! nearest centroid and keep the best solution seen per cell.

mod cvt;
mod growing;

pub use cvt::{make_fixed_cvt, FixedCvtArchive};
pub use growing::{Cell, GrowingArchive};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fitness::Fitness;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ArchiveError {
    #[error("behavior dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("distance kind mismatch: archive uses {expected:?}, behavior uses {got:?}")]
    KindMismatch { expected: DistanceKind, got: DistanceKind },
    #[error("behavior has non-finite entry at index {0}")]
    NonFinite(usize),
    #[error("zero vector has no cosine distance")]
    ZeroVector,
    #[error("empty behavior vector")]
    Empty,
    #[error("fitness must be finite, got {0}")]
    NonFiniteFitness(f64),
    #[error("archive is empty")]
    EmptyArchive,
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("archive capacity must be positive")]
    ZeroCapacity,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DistanceKind {
    Cosine,
    Euclidean,
}

/// A validated behavior descriptor. Its Euclidean norm is cached so cosine
/// distances cost a single dot product.
#[derive(Clone, Debug, PartialEq)]
pub struct BehaviorVector {
    values: Vec<f64>,
    kind: DistanceKind,
    norm: f64,
}

impl BehaviorVector {
    pub fn new(values: Vec<f64>, kind: DistanceKind) -> Result<Self, ArchiveError> {
        if values.is_empty() {
            return Err(ArchiveError::Empty);
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(ArchiveError::NonFinite(i));
        }
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if kind == DistanceKind::Cosine && norm == 0.0 {
            return Err(ArchiveError::ZeroVector);
        }
        Ok(Self { values, kind, norm })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn kind(&self) -> DistanceKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// Cosine distance `1 - cos(a, b)` clamped to `[0, 2]`, or the L2 distance.
pub fn distance(a: &BehaviorVector, b: &BehaviorVector) -> Result<f64, ArchiveError> {
    if a.kind != b.kind {
        return Err(ArchiveError::KindMismatch { expected: a.kind, got: b.kind });
    }
    if a.len() != b.len() {
        return Err(ArchiveError::DimensionMismatch { expected: a.len(), got: b.len() });
    }
    Ok(raw_distance(a, b))
}

/// Distance without the compatibility checks; callers guarantee them.
pub(crate) fn raw_distance(a: &BehaviorVector, b: &BehaviorVector) -> f64 {
    match a.kind {
        DistanceKind::Cosine => {
            let dot: f64 = a.values.iter().zip(&b.values).map(|(x, y)| x * y).sum();
            let d = (1.0 - dot / (a.norm * b.norm)).clamp(0.0, 2.0);
            // rounding in the norms can leave a residue for identical inputs
            if d < 1e-12 && a.values == b.values {
                0.0
            } else {
                d
            }
        }
        DistanceKind::Euclidean => a
            .values
            .iter()
            .zip(&b.values)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt(),
    }
}

pub type SolutionId = u64;

/// A stored solution together with its evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct Elite<S> {
    pub id: SolutionId,
    pub solution: S,
    pub fitness: Fitness,
    pub behavior: BehaviorVector,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UpdateResult {
    /// The candidate occupies a cell that did not hold an elite before.
    AddedNewCell { cell: usize },
    /// The candidate became a new centroid in place of the removed one.
    GrewReplacedCell { removed: usize },
    ReplacedElite { cell: usize },
    Rejected,
}

/// One archive of a multi-task archive.
#[derive(Clone, Debug, PartialEq)]
pub enum TaskArchive<S> {
    Growing(GrowingArchive<S>),
    Cvt(FixedCvtArchive<S>),
}

impl<S: Clone> TaskArchive<S> {
    pub fn update(&mut self, elite: Elite<S>) -> Result<UpdateResult, ArchiveError> {
        match self {
            TaskArchive::Growing(a) => a.update(elite),
            TaskArchive::Cvt(a) => a.update(elite),
        }
    }

    pub fn elites(&self) -> Vec<&Elite<S>> {
        match self {
            TaskArchive::Growing(a) => a.cells().iter().map(|c| &c.elite).collect(),
            TaskArchive::Cvt(a) => a.elites().iter().flatten().collect(),
        }
    }

    pub fn elite_count(&self) -> usize {
        match self {
            TaskArchive::Growing(a) => a.len(),
            TaskArchive::Cvt(a) => a.filled(),
        }
    }

    pub fn check_invariants(&self) -> Vec<String> {
        match self {
            TaskArchive::Growing(a) => a.check_invariants(),
            TaskArchive::Cvt(a) => a.check_invariants(),
        }
    }
}

pub(crate) fn check_compatible(
    b: &BehaviorVector,
    kind: DistanceKind,
    dim: Option<usize>,
) -> Result<(), ArchiveError> {
    if b.kind != kind {
        return Err(ArchiveError::KindMismatch { expected: kind, got: b.kind });
    }
    match dim {
        Some(d) if d != b.len() => Err(ArchiveError::DimensionMismatch { expected: d, got: b.len() }),
        _ => Ok(()),
    }
}

/// Index of the nearest centroid; ties go to the lowest index.
pub(crate) fn nearest(centroids: &[&BehaviorVector], b: &BehaviorVector) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, c) in centroids.iter().enumerate() {
        let d = raw_distance(c, b);
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((i, d));
        }
    }
    best
}
