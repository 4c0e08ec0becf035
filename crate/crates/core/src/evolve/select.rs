use std::cmp::Ordering;

use rand::Rng;

use super::Task;
use crate::archive::{DistanceKind, Elite, TaskArchive};
use crate::cluster::kmeans;
use crate::fitness::{compare_fitness, FitnessMode};
use crate::rng;

/// Picks the next generation's tasks: k-means over the behaviors of every
/// elite of every archive, then the fittest member of each cluster (ties to
/// the lowest id). Missing tasks are filled with random elites whose
/// behavior differs from everything picked so far, then by repeating the
/// picks in order.
///
/// Returns `None` when the archives hold no elite.
pub fn select_tasks<S: Clone>(
    archives: &[TaskArchive<S>],
    n_task: usize,
    mode: FitnessMode,
    seed: u64,
) -> Option<Vec<Task<S>>> {
    let elites: Vec<&Elite<S>> = archives.iter().flat_map(|a| a.elites()).collect();
    let first = elites.first()?;
    let spherical = first.behavior.kind() == DistanceKind::Cosine;
    let points: Vec<Vec<f64>> = elites.iter().map(|e| e.behavior.values().to_vec()).collect();
    let km = kmeans(&points, n_task, seed, spherical);

    let better = |a: &Elite<S>, b: &Elite<S>| match compare_fitness(&a.fitness, &b.fitness, mode) {
        Ordering::Equal => a.id < b.id,
        o => o == Ordering::Greater,
    };
    let mut best: Vec<Option<usize>> = vec![None; n_task];
    for (i, &c) in km.assignments.iter().enumerate() {
        match best[c] {
            Some(b) if !better(elites[i], elites[b]) => {}
            _ => best[c] = Some(i),
        }
    }
    let mut picked: Vec<usize> = best.into_iter().flatten().collect();

    let mut rng = rng::stream(seed, &[0x66696c6c]);
    while picked.len() < n_task {
        let fresh: Vec<usize> = (0..elites.len())
            .filter(|&i| picked.iter().all(|&p| elites[p].behavior.values() != elites[i].behavior.values()))
            .collect();
        if fresh.is_empty() {
            break;
        }
        picked.push(fresh[rng.gen_range(0..fresh.len())]);
    }
    let distinct = picked.len();
    for i in distinct..n_task {
        picked.push(picked[(i - distinct) % distinct]);
    }
    Some(picked.into_iter().map(|i| Task { id: elites[i].id, solution: elites[i].solution.clone() }).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::archive::{BehaviorVector, GrowingArchive};
    use crate::fitness::Fitness;

    fn elite(id: u64, f: f64, b: &[f64]) -> Elite<u64> {
        Elite {
            id,
            solution: id,
            fitness: Fitness::new(f, 1),
            behavior: BehaviorVector::new(b.to_vec(), DistanceKind::Euclidean).unwrap(),
        }
    }

    fn archive(elites: Vec<Elite<u64>>) -> TaskArchive<u64> {
        let mut a = GrowingArchive::new(elites.len().max(1), DistanceKind::Euclidean, FitnessMode::SingleObjective).unwrap();
        for e in elites {
            a.update(e).unwrap();
        }
        TaskArchive::Growing(a)
    }

    #[test]
    fn one_shared_behavior_duplicates_the_best() {
        let archives: Vec<_> = (0..4).map(|i| archive(vec![elite(i, i as f64 * 0.1, &[1.0, 1.0])])).collect();
        let t = select_tasks(&archives, 4, FitnessMode::SingleObjective, 3).unwrap();
        assert_eq!(t.iter().map(|t| t.id).collect::<Vec<_>>(), vec![3, 3, 3, 3]);
    }

    #[test]
    fn every_elite_once_when_counts_match() {
        let archives = vec![
            archive(vec![elite(0, 0.1, &[0.0, 0.0]), elite(1, 0.2, &[5.0, 0.0])]),
            archive(vec![elite(2, 0.3, &[0.0, 5.0]), elite(3, 0.4, &[5.0, 5.0])]),
        ];
        let t = select_tasks(&archives, 4, FitnessMode::SingleObjective, 1).unwrap();
        let mut ids: Vec<u64> = t.iter().map(|t| t.id).collect();
        ids.sort();
        assert_eq!(ids, vec![0, 1, 2, 3]);
    }

    #[test]
    fn best_of_each_cluster() {
        // three tight groups with hand-assigned fitnesses; best are 2, 4 and 6
        let archives = vec![
            archive(vec![elite(0, 0.1, &[0.0, 0.0]), elite(1, 0.3, &[0.1, 0.0]), elite(2, 0.9, &[0.0, 0.1])]),
            archive(vec![elite(3, 0.5, &[10.0, 0.0]), elite(4, 0.6, &[10.1, 0.1]), elite(5, 0.2, &[10.0, 0.2])]),
            archive(vec![elite(6, 0.7, &[0.0, 10.0]), elite(7, 0.7, &[0.1, 10.0]), elite(8, 0.1, &[0.2, 10.1])]),
        ];
        let t = select_tasks(&archives, 3, FitnessMode::SingleObjective, 9).unwrap();
        let mut ids: Vec<u64> = t.iter().map(|t| t.id).collect();
        ids.sort();
        assert_eq!(ids, vec![2, 4, 6]);
    }

    #[test]
    fn deficit_prefers_new_behaviors() {
        let archives = vec![archive(vec![elite(0, 0.5, &[0.0]), elite(1, 0.4, &[3.0])])];
        let t = select_tasks(&archives, 5, FitnessMode::SingleObjective, 2).unwrap();
        let ids: Vec<u64> = t.iter().map(|t| t.id).collect();
        assert_eq!(ids.len(), 5);
        assert!(ids.contains(&0) && ids.contains(&1));
    }

    #[test]
    fn empty_union() {
        let archives: Vec<TaskArchive<u64>> = vec![];
        assert!(select_tasks(&archives, 3, FitnessMode::SingleObjective, 0).is_none());
    }
}
