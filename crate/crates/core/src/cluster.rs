//! k-means with k-means++ seeding and Lloyd iterations.

use rand::Rng;

use crate::rng;

pub const MAX_ITERATIONS: usize = 100;

#[derive(Clone, Debug, PartialEq)]
pub struct KMeans {
    /// Cluster index of every input point.
    pub assignments: Vec<usize>,
    /// `k` centroids; clusters that ended up empty keep a duplicate of
    /// another centroid.
    pub centroids: Vec<Vec<f64>>,
    pub iterations: usize,
}

impl KMeans {
    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.centroids.len()];
        for &a in &self.assignments {
            sizes[a] += 1;
        }
        sizes
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(centroids: &[Vec<f64>], p: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centroids.iter().enumerate() {
        let d = sq_dist(c, p);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

/// L2-normalizes each point; zero points are left as they are.
pub fn normalize_rows(points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    points
        .iter()
        .map(|p| {
            let n = p.iter().map(|v| v * v).sum::<f64>().sqrt();
            if n > 0.0 {
                p.iter().map(|v| v / n).collect()
            } else {
                p.clone()
            }
        })
        .collect()
}

/// Clusters `points` into `k` groups. With `spherical` set the points are
/// L2-normalized first, which makes Euclidean k-means rank by cosine
/// similarity.
///
/// Panics if `k == 0` or `points` is empty.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64, spherical: bool) -> KMeans {
    assert!(k >= 1, "k must be positive");
    assert!(!points.is_empty(), "no points to cluster");
    let normalized;
    let pts: &[Vec<f64>] = if spherical {
        normalized = normalize_rows(points);
        &normalized
    } else {
        points
    };
    let n = pts.len();
    let mut rng = rng::stream(seed, &[0x6b6d65616e73]);

    // k-means++ seeding. Once every point coincides with a chosen centre
    // the remaining slots duplicate the first centre and stay empty.
    let mut centroids: Vec<Vec<f64>> = vec![pts[rng.gen_range(0..n)].clone()];
    let mut d2: Vec<f64> = pts.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        if total <= 0.0 {
            break;
        }
        let mut target = rng.gen::<f64>() * total;
        let mut pick = n - 1;
        for (i, &w) in d2.iter().enumerate() {
            if w > 0.0 && target < w {
                pick = i;
                break;
            }
            target -= w;
        }
        if d2[pick] <= 0.0 {
            // rounding walked off the end; take the last positive weight
            pick = d2.iter().rposition(|&w| w > 0.0).expect("positive total");
        }
        let c = pts[pick].clone();
        for (i, p) in pts.iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(p, &c));
        }
        centroids.push(c);
    }
    while centroids.len() < k {
        centroids.push(centroids[0].clone());
    }

    let dim = pts[0].len();
    let mut assignments: Vec<usize> = pts.iter().map(|p| nearest(&centroids, p).0).collect();
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &a) in pts.iter().zip(&assignments) {
            counts[a] += 1;
            for (s, v) in sums[a].iter_mut().zip(p) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centroids[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
        // Re-seed empty clusters with the point farthest from its centroid.
        let mut far: Vec<f64> = pts.iter().zip(&assignments).map(|(p, &a)| sq_dist(p, &centroids[a])).collect();
        for c in 0..k {
            if counts[c] > 0 {
                continue;
            }
            let (idx, d) = far.iter().enumerate().fold((0, 0.0), |acc, (i, &d)| if d > acc.1 { (i, d) } else { acc });
            if d > 0.0 {
                centroids[c] = pts[idx].clone();
                far[idx] = 0.0;
            }
        }
        let next: Vec<usize> = pts.iter().map(|p| nearest(&centroids, p).0).collect();
        if next == assignments {
            break;
        }
        assignments = next;
    }
    KMeans { assignments, centroids, iterations }
}
