use std::cmp::Ordering;

use super::{check_compatible, raw_distance, ArchiveError, BehaviorVector, DistanceKind, Elite, UpdateResult};
use crate::fitness::{compare_fitness, FitnessMode};

/// A cell of a growing archive.
///
/// `backup` is the solution whose behavior defined `centroid`; it is put back
/// as the elite when a relocated centroid steals the current elite.
#[derive(Clone, Debug, PartialEq)]
pub struct Cell<S> {
    pub centroid: BehaviorVector,
    pub elite: Elite<S>,
    pub backup: Elite<S>,
}

/// Unstructured archive with at most `capacity` cells whose centroids are
/// repositioned when a behavior farther from every centroid than the closest
/// centroid pair arrives.
#[derive(Clone, Debug)]
pub struct GrowingArchive<S> {
    capacity: usize,
    kind: DistanceKind,
    mode: FitnessMode,
    cells: Vec<Cell<S>>,
    distance_calls: u64,
}

/// Equality of archive state; the distance-call counter is not compared.
impl<S: PartialEq> PartialEq for GrowingArchive<S> {
    fn eq(&self, other: &Self) -> bool {
        self.capacity == other.capacity && self.kind == other.kind && self.mode == other.mode && self.cells == other.cells
    }
}

impl<S: Clone> GrowingArchive<S> {
    pub fn new(capacity: usize, kind: DistanceKind, mode: FitnessMode) -> Result<Self, ArchiveError> {
        if capacity == 0 {
            return Err(ArchiveError::ZeroCapacity);
        }
        Ok(Self { capacity, kind, mode, cells: Vec::with_capacity(capacity), distance_calls: 0 })
    }

    /// Rebuilds an archive from stored parts without checking invariants.
    /// Pair with [`GrowingArchive::check_invariants`].
    pub fn from_parts_unchecked(
        capacity: usize,
        kind: DistanceKind,
        mode: FitnessMode,
        cells: Vec<Cell<S>>,
    ) -> Self {
        Self { capacity, kind, mode, cells, distance_calls: 0 }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn kind(&self) -> DistanceKind {
        self.kind
    }

    pub fn mode(&self) -> FitnessMode {
        self.mode
    }

    pub fn cells(&self) -> &[Cell<S>] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.cells.first().map(|c| c.centroid.len())
    }

    /// Total number of distance evaluations performed by `update` so far.
    pub fn distance_calls(&self) -> u64 {
        self.distance_calls
    }

    /// Index of the centroid closest to `b`, lowest index on ties.
    pub fn find_cell(&self, b: &BehaviorVector) -> Result<usize, ArchiveError> {
        if self.cells.is_empty() {
            return Err(ArchiveError::EmptyArchive);
        }
        check_compatible(b, self.kind, self.dim())?;
        let mut best = (0, f64::INFINITY);
        for (i, c) in self.cells.iter().enumerate() {
            let d = raw_distance(&c.centroid, b);
            if d < best.1 {
                best = (i, d);
            }
        }
        Ok(best.0)
    }

    /// Smallest distance between two centroids, `None` below two cells.
    pub fn min_centroid_distance(&self) -> Option<f64> {
        let mut best: Option<f64> = None;
        for i in 0..self.cells.len() {
            for j in i + 1..self.cells.len() {
                let d = raw_distance(&self.cells[i].centroid, &self.cells[j].centroid);
                if best.is_none_or(|b| d < b) {
                    best = Some(d);
                }
            }
        }
        best
    }

    pub fn update(&mut self, elite: Elite<S>) -> Result<UpdateResult, ArchiveError> {
        check_compatible(&elite.behavior, self.kind, self.dim())?;
        if !elite.fitness.value.is_finite() {
            return Err(ArchiveError::NonFiniteFitness(elite.fitness.value));
        }
        if self.cells.is_empty() {
            self.push_cell(elite);
            return Ok(UpdateResult::AddedNewCell { cell: 0 });
        }

        let n = self.cells.len();
        let to_b: Vec<f64> = self.cells.iter().map(|c| raw_distance(&c.centroid, &elite.behavior)).collect();
        self.distance_calls += n as u64;
        let (c_id, d) = argmin(&to_b);

        if n < self.capacity {
            // A behavior coinciding with an existing centroid competes for
            // that cell instead of opening a duplicate one; duplicate
            // centroids would leave cells that no behavior can map to.
            if d > 0.0 {
                self.push_cell(elite);
                self.repair_holes(n);
                return Ok(UpdateResult::AddedNewCell { cell: n });
            }
            return Ok(self.compete(c_id, elite));
        }

        // Pairwise centroid distances, kept for the nearest-neighbour lookups.
        let mut pair = vec![0.0; n * n];
        let mut d_min = f64::INFINITY;
        let mut closest = (0, 0);
        for i in 0..n {
            for j in i + 1..n {
                let dij = raw_distance(&self.cells[i].centroid, &self.cells[j].centroid);
                pair[i * n + j] = dij;
                pair[j * n + i] = dij;
                if dij < d_min {
                    d_min = dij;
                    closest = (i, j);
                }
            }
        }
        self.distance_calls += (n * (n - 1) / 2) as u64;

        if d > d_min {
            let (j, k) = closest;
            let nearest_other = |x: usize| {
                (0..n).filter(|&i| i != x).map(|i| pair[x * n + i]).fold(f64::INFINITY, f64::min)
            };
            // Remove whichever pair member is closer to the rest. Both
            // members have the pair itself as nearest neighbour, so the two
            // values are equal and slot k is the one overwritten; slot j only
            // goes when strictly closer.
            let slot = if nearest_other(j) < nearest_other(k) { j } else { k };
            self.cells[slot] = Cell { centroid: elite.behavior.clone(), backup: elite.clone(), elite };
            self.repair_holes(slot);
            return Ok(UpdateResult::GrewReplacedCell { removed: slot });
        }
        Ok(self.compete(c_id, elite))
    }

    fn push_cell(&mut self, elite: Elite<S>) {
        self.cells.push(Cell { centroid: elite.behavior.clone(), backup: elite.clone(), elite });
    }

    fn compete(&mut self, cell: usize, elite: Elite<S>) -> UpdateResult {
        if compare_fitness(&elite.fitness, &self.cells[cell].elite.fitness, self.mode) == Ordering::Greater {
            self.cells[cell].elite = elite;
            UpdateResult::ReplacedElite { cell }
        } else {
            UpdateResult::Rejected
        }
    }

    /// Restores the backup of every cell whose elite now maps to the centroid
    /// at `changed`. Before the change every elite mapped to its own cell, so
    /// only the new centroid can capture it.
    fn repair_holes(&mut self, changed: usize) {
        let (head, tail) = self.cells.split_at_mut(changed);
        let (new_cell, tail) = tail.split_first_mut().expect("changed index in range");
        let new_centroid = &new_cell.centroid;
        let mut calls = 0u64;
        for (i, cell) in head.iter_mut().enumerate().chain(tail.iter_mut().enumerate().map(|(i, c)| (i + changed + 1, c))) {
            let to_new = raw_distance(&cell.elite.behavior, new_centroid);
            let to_own = raw_distance(&cell.elite.behavior, &cell.centroid);
            calls += 2;
            if to_new < to_own || (to_new == to_own && changed < i) {
                cell.elite = cell.backup.clone();
            }
        }
        self.distance_calls += calls;
    }

    /// Lists every violated archive invariant; empty when the archive is sound.
    pub fn check_invariants(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.cells.len() > self.capacity {
            out.push(format!("{} cells exceed capacity {}", self.cells.len(), self.capacity));
        }
        let dim = self.dim();
        for (i, c) in self.cells.iter().enumerate() {
            for (what, b) in [("centroid", &c.centroid), ("elite", &c.elite.behavior), ("backup", &c.backup.behavior)] {
                if let Err(e) = check_compatible(b, self.kind, dim) {
                    out.push(format!("cell {i}: {what}: {e}"));
                }
            }
            if c.backup.behavior != c.centroid {
                out.push(format!("cell {i}: backup behavior differs from centroid"));
            }
        }
        if !out.is_empty() {
            return out;
        }
        for (i, c) in self.cells.iter().enumerate() {
            match self.find_cell(&c.elite.behavior) {
                Ok(j) if j == i => {}
                Ok(j) => out.push(format!("cell {i}: elite {} maps to cell {j} (hole)", c.elite.id)),
                Err(e) => out.push(format!("cell {i}: {e}")),
            }
        }
        out
    }
}

fn argmin(xs: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, &x) in xs.iter().enumerate() {
        if x < best.1 {
            best = (i, x);
        }
    }
    best
}
