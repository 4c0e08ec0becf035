use std::cmp::Ordering;

use super::{check_compatible, nearest, ArchiveError, BehaviorVector, DistanceKind, Elite, UpdateResult};
use crate::cluster;
use crate::fitness::{compare_fitness, FitnessMode};

/// Archive over a Voronoi tessellation that is frozen at construction.
#[derive(Clone, Debug, PartialEq)]
pub struct FixedCvtArchive<S> {
    centroids: Vec<BehaviorVector>,
    elites: Vec<Option<Elite<S>>>,
    mode: FitnessMode,
}

impl<S: Clone> FixedCvtArchive<S> {
    pub fn new(centroids: Vec<BehaviorVector>, mode: FitnessMode) -> Result<Self, ArchiveError> {
        let first = centroids.first().ok_or(ArchiveError::ZeroCapacity)?;
        let (kind, dim) = (first.kind(), first.len());
        for c in &centroids {
            check_compatible(c, kind, Some(dim))?;
        }
        let elites = vec![None; centroids.len()];
        Ok(Self { centroids, elites, mode })
    }

    pub fn from_parts_unchecked(
        centroids: Vec<BehaviorVector>,
        elites: Vec<Option<Elite<S>>>,
        mode: FitnessMode,
    ) -> Self {
        Self { centroids, elites, mode }
    }

    pub fn centroids(&self) -> &[BehaviorVector] {
        &self.centroids
    }

    pub fn elites(&self) -> &[Option<Elite<S>>] {
        &self.elites
    }

    pub fn mode(&self) -> FitnessMode {
        self.mode
    }

    pub fn kind(&self) -> DistanceKind {
        self.centroids[0].kind()
    }

    pub fn filled(&self) -> usize {
        self.elites.iter().filter(|e| e.is_some()).count()
    }

    pub fn find_cell(&self, b: &BehaviorVector) -> Result<usize, ArchiveError> {
        check_compatible(b, self.kind(), Some(self.centroids[0].len()))?;
        let refs: Vec<&BehaviorVector> = self.centroids.iter().collect();
        Ok(nearest(&refs, b).expect("non-empty tessellation").0)
    }

    pub fn update(&mut self, elite: Elite<S>) -> Result<UpdateResult, ArchiveError> {
        if !elite.fitness.value.is_finite() {
            return Err(ArchiveError::NonFiniteFitness(elite.fitness.value));
        }
        let cell = self.find_cell(&elite.behavior)?;
        let slot = &mut self.elites[cell];
        match slot {
            None => {
                *slot = Some(elite);
                Ok(UpdateResult::AddedNewCell { cell })
            }
            Some(cur) if compare_fitness(&elite.fitness, &cur.fitness, self.mode) == Ordering::Greater => {
                *slot = Some(elite);
                Ok(UpdateResult::ReplacedElite { cell })
            }
            Some(_) => Ok(UpdateResult::Rejected),
        }
    }

    pub fn check_invariants(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.centroids.is_empty() {
            return vec!["tessellation has no centroids".into()];
        }
        if self.centroids.len() != self.elites.len() {
            out.push(format!("{} centroids but {} elite slots", self.centroids.len(), self.elites.len()));
            return out;
        }
        let (kind, dim) = (self.kind(), self.centroids[0].len());
        for (i, c) in self.centroids.iter().enumerate() {
            if let Err(e) = check_compatible(c, kind, Some(dim)) {
                out.push(format!("centroid {i}: {e}"));
            }
        }
        if !out.is_empty() {
            return out;
        }
        for (i, e) in self.elites.iter().enumerate() {
            if let Some(e) = e {
                match self.find_cell(&e.behavior) {
                    Ok(j) if j == i => {}
                    Ok(j) => out.push(format!("cell {i}: elite {} maps to cell {j}", e.id)),
                    Err(err) => out.push(format!("cell {i}: {err}")),
                }
            }
        }
        out
    }
}

/// Builds a frozen tessellation from `n_cell`-means of the samples.
/// Cosine behaviors are clustered on the unit sphere.
pub fn make_fixed_cvt<S: Clone>(
    samples: &[BehaviorVector],
    n_cell: usize,
    seed: u64,
    mode: FitnessMode,
) -> Result<FixedCvtArchive<S>, ArchiveError> {
    if n_cell == 0 {
        return Err(ArchiveError::ZeroCapacity);
    }
    if samples.len() < n_cell {
        return Err(ArchiveError::TooFewSamples { needed: n_cell, got: samples.len() });
    }
    let kind = samples[0].kind();
    for s in samples {
        check_compatible(s, kind, Some(samples[0].len()))?;
    }
    let points: Vec<Vec<f64>> = samples.iter().map(|s| s.values().to_vec()).collect();
    let km = cluster::kmeans(&points, n_cell, seed, kind == DistanceKind::Cosine);
    let centroids = km
        .centroids
        .into_iter()
        .map(|c| BehaviorVector::new(c, kind))
        .collect::<Result<Vec<_>, _>>()?;
    FixedCvtArchive::new(centroids, mode)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fitness::Fitness;

    fn ev(v: &[f64]) -> BehaviorVector {
        BehaviorVector::new(v.to_vec(), DistanceKind::Euclidean).unwrap()
    }

    #[test]
    fn k_equals_samples_reproduces_samples() {
        let samples = vec![ev(&[0.0, 0.0]), ev(&[5.0, 1.0]), ev(&[-2.0, 3.0])];
        let a: FixedCvtArchive<u8> = make_fixed_cvt(&samples, 3, 1, FitnessMode::SingleObjective).unwrap();
        let mut got: Vec<Vec<f64>> = a.centroids().iter().map(|c| c.values().to_vec()).collect();
        let mut want: Vec<Vec<f64>> = samples.iter().map(|c| c.values().to_vec()).collect();
        got.sort_by(|a, b| a.partial_cmp(b).unwrap());
        want.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(got, want);
    }

    #[test]
    fn two_clouds_get_one_centroid_each() {
        let mut samples = Vec::new();
        for i in 0..20 {
            let t = i as f64 * 0.1;
            samples.push(ev(&[t.sin() * 0.3, t.cos() * 0.3]));
            samples.push(ev(&[20.0 + t.cos() * 0.3, 20.0 + t.sin() * 0.3]));
        }
        let a: FixedCvtArchive<u8> = make_fixed_cvt(&samples, 2, 4, FitnessMode::SingleObjective).unwrap();
        let mut xs: Vec<f64> = a.centroids().iter().map(|c| c.values()[0]).collect();
        xs.sort_by(f64::total_cmp);
        // Lloyd fixed point: the cloud means
        let mean = |off: f64| (0..20).map(|i| off + (i as f64 * 0.1).sin() * 0.3).sum::<f64>() / 20.0;
        let mean_b = (0..20).map(|i| 20.0 + (i as f64 * 0.1).cos() * 0.3).sum::<f64>() / 20.0;
        assert!((xs[0] - mean(0.0)).abs() < 1e-12);
        assert!((xs[1] - mean_b).abs() < 1e-12);
    }

    #[test]
    fn too_few_samples() {
        let r = make_fixed_cvt::<u8>(&[ev(&[0.0])], 2, 0, FitnessMode::SingleObjective);
        assert_eq!(r.unwrap_err(), ArchiveError::TooFewSamples { needed: 2, got: 1 });
    }

    #[test]
    fn map_elites_replacement_rule() {
        let mut a: FixedCvtArchive<u8> =
            FixedCvtArchive::new(vec![ev(&[0.0, 0.0]), ev(&[10.0, 0.0])], FitnessMode::SingleObjective).unwrap();
        let e = |id, f, x| Elite { id, solution: 0u8, fitness: Fitness::new(f, 1), behavior: ev(&[x, 0.0]) };
        assert_eq!(a.update(e(0, 0.5, 1.0)).unwrap(), UpdateResult::AddedNewCell { cell: 0 });
        assert_eq!(a.update(e(1, 0.4, 2.0)).unwrap(), UpdateResult::Rejected);
        assert_eq!(a.elites()[0].as_ref().unwrap().id, 0);
        assert_eq!(a.update(e(2, 0.9, 2.0)).unwrap(), UpdateResult::ReplacedElite { cell: 0 });
        assert_eq!(a.filled(), 1);
        let before: Vec<_> = a.centroids().to_vec();
        a.update(e(3, 0.1, 9.0)).unwrap();
        assert_eq!(a.centroids(), &before[..]);
        assert!(a.check_invariants().is_empty());
    }
}
