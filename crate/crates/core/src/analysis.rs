//! Post-hoc measures: tournaments and ELO ratings, a two-component PCA with
//! grid coverage, ranking novelty, Spearman correlation, action entropy and
//! lineage chains.

use std::collections::{HashMap, HashSet};
use std::hash::Hash;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::archive::SolutionId;
use crate::domains::{Domain, Side};
use crate::evolve::{play_matrix, EvalError, Judge, LineageRecord, Operator, Task, TournamentMatrix};
use crate::rng::{self, purpose};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("tournament duel {index}: {source}")]
    Evaluation { index: usize, source: EvalError },
    #[error("empty input")]
    Empty,
    #[error("need at least {needed} items, got {got}")]
    TooFew { needed: usize, got: usize },
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("ranks have zero variance")]
    ZeroVariance,
    #[error("unknown solution id {0}")]
    UnknownId(SolutionId),
}

/// Every row solution against every column solution, rows playing `row_side`.
pub fn round_robin<D: Domain>(
    judge: &Judge<'_, D>,
    row_side: Side,
    rows: &[Task<D::Solution>],
    cols: &[Task<D::Solution>],
) -> Result<TournamentMatrix, AnalysisError> {
    if rows.is_empty() || cols.is_empty() {
        return Err(AnalysisError::Empty);
    }
    play_matrix(judge, row_side, rows, cols).map_err(|(index, source)| AnalysisError::Evaluation { index, source })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EloConfig {
    pub initial: f64,
    pub k: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for EloConfig {
    fn default() -> Self {
        Self { initial: 1000.0, k: 32.0, epochs: 10, seed: 1 }
    }
}

/// A played match: `score` is 1 when `a` won, 0.5 for a draw, 0 when `b` won.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Match {
    pub a: usize,
    pub b: usize,
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EloTable {
    pub ratings: Vec<f64>,
    pub matches: Vec<u32>,
}

/// Win for the higher fitness, draw on an exact tie.
pub fn match_score(fa: f64, fb: f64) -> f64 {
    if fa > fb {
        1.0
    } else if fa < fb {
        0.0
    } else {
        0.5
    }
}

/// Matches of a tournament matrix; rows are players `0..rows`, columns
/// follow as `rows..rows + cols`.
pub fn matrix_matches(m: &TournamentMatrix) -> Vec<Match> {
    let mut out = Vec::with_capacity(m.entries.len());
    for r in 0..m.rows() {
        for c in 0..m.cols() {
            let f = m.get(r, c).fitness;
            out.push(Match { a: r, b: m.rows() + c, score: match_score(f[0], f[1]) });
        }
    }
    out
}

/// Standard ELO updates over `epochs` passes, each over the matches in a
/// freshly shuffled order.
pub fn elo(players: usize, matches: &[Match], cfg: &EloConfig) -> EloTable {
    let mut ratings = vec![cfg.initial; players];
    let mut count = vec![0u32; players];
    let mut order: Vec<usize> = (0..matches.len()).collect();
    for epoch in 0..cfg.epochs {
        let mut rng = rng::stream(cfg.seed, &[purpose::ELO, epoch as u64]);
        order.sort_unstable();
        order.shuffle(&mut rng);
        for &i in &order {
            let Match { a, b, score } = matches[i];
            let expected = 1.0 / (1.0 + 10f64.powf((ratings[b] - ratings[a]) / 400.0));
            let delta = cfg.k * (score - expected);
            ratings[a] += delta;
            ratings[b] -= delta;
            count[a] += 1;
            count[b] += 1;
        }
    }
    EloTable { ratings, matches: count }
}

pub fn matrix_elo(m: &TournamentMatrix, cfg: &EloConfig) -> EloTable {
    elo(m.rows() + m.cols(), &matrix_matches(m), cfg)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PcaProjection {
    pub mean: Vec<f64>,
    pub components: [Vec<f64>; 2],
    /// Fraction of the total variance along each component.
    pub explained: [f64; 2],
    /// Coordinates of the fitted behaviors.
    pub coords: Vec<[f64; 2]>,
    /// Set when the data has no variance; the components are then an
    /// arbitrary orthonormal pair.
    pub degenerate: bool,
}

impl PcaProjection {
    pub fn project(&self, b: &[f64]) -> [f64; 2] {
        let centred: Vec<f64> = b.iter().zip(&self.mean).map(|(x, m)| x - m).collect();
        [dot(&centred, &self.components[0]), dot(&centred, &self.components[1])]
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = dot(v, v).sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

/// Remove the part of `v` along each (unit) vector in `basis`.
fn orthogonalize(v: &mut [f64], basis: &[Vec<f64>]) {
    for u in basis {
        let p = dot(v, u);
        v.iter_mut().zip(u).for_each(|(x, y)| *x -= p * y);
    }
}

const PCA_TOL: f64 = 1e-10;
const PCA_MAX_ITER: usize = 1000;

/// Top two principal components by power iteration with deflation. The
/// covariance is never formed: each product costs one pass over the data.
pub fn pca2(behaviors: &[Vec<f64>], seed: u64) -> Result<PcaProjection, AnalysisError> {
    if behaviors.len() < 3 {
        return Err(AnalysisError::TooFew { needed: 3, got: behaviors.len() });
    }
    let dim = behaviors[0].len();
    if let Some(b) = behaviors.iter().find(|b| b.len() != dim) {
        return Err(AnalysisError::LengthMismatch(dim, b.len()));
    }
    if dim < 2 {
        return Err(AnalysisError::TooFew { needed: 2, got: dim });
    }
    let n = behaviors.len() as f64;
    let mut mean = vec![0.0; dim];
    for b in behaviors {
        mean.iter_mut().zip(b).for_each(|(m, x)| *m += x);
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let centred: Vec<Vec<f64>> = behaviors.iter().map(|b| b.iter().zip(&mean).map(|(x, m)| x - m).collect()).collect();
    let total: f64 = centred.iter().map(|c| dot(c, c)).sum::<f64>() / n;

    let cov_times = |v: &[f64]| {
        let mut out = vec![0.0; dim];
        for c in &centred {
            let p = dot(c, v);
            out.iter_mut().zip(c).for_each(|(o, x)| *o += p * x);
        }
        out.iter_mut().for_each(|o| *o /= n);
        out
    };

    let mut found: Vec<Vec<f64>> = Vec::with_capacity(2);
    let mut variances = [0.0; 2];
    let degenerate = total <= 0.0;
    for (i, variance) in variances.iter_mut().enumerate() {
        let mut r = rng::stream(seed, &[purpose::PCA, i as u64]);
        let mut v: Vec<f64> = (0..dim).map(|_| r.gen_range(-1.0..1.0)).collect();
        orthogonalize(&mut v, &found);
        normalize(&mut v);
        if !degenerate {
            for _ in 0..PCA_MAX_ITER {
                let mut w = cov_times(&v);
                orthogonalize(&mut w, &found);
                if normalize(&mut w) <= f64::EPSILON * total {
                    // no variance left outside the components found so far
                    break;
                }
                let change = v.iter().zip(&w).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                v = w;
                if change < PCA_TOL {
                    break;
                }
            }
        }
        orthogonalize(&mut v, &found);
        normalize(&mut v);
        *variance = dot(&v, &cov_times(&v)).max(0.0);
        found.push(v);
    }
    if degenerate {
        found = unit_pair(dim);
    }
    let explained = if total > 0.0 { [variances[0] / total, variances[1] / total] } else { [0.0, 0.0] };
    let components = [found[0].clone(), found[1].clone()];
    let coords = centred.iter().map(|c| [dot(c, &components[0]), dot(c, &components[1])]).collect();
    Ok(PcaProjection { mean, components, explained, coords, degenerate })
}

fn unit_pair(dim: usize) -> Vec<Vec<f64>> {
    (0..2)
        .map(|i| {
            let mut e = vec![0.0; dim];
            e[i] = 1.0;
            e
        })
        .collect()
}

/// Axis-aligned rectangle a grid is laid over.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl Bounds {
    pub fn of(points: &[[f64; 2]]) -> Option<Self> {
        let first = points.first()?;
        let mut b = Bounds { min: *first, max: *first };
        for p in points {
            for (a, &x) in p.iter().enumerate() {
                b.min[a] = b.min[a].min(x);
                b.max[a] = b.max[a].max(x);
            }
        }
        Some(b)
    }

    /// Grid bin of `p`; points outside the rectangle go to the border bins.
    pub fn bin(&self, p: [f64; 2], grid_n: usize) -> (usize, usize) {
        let axis = |a: usize| {
            let span = self.max[a] - self.min[a];
            if span <= 0.0 {
                return 0;
            }
            let t = ((p[a] - self.min[a]) / span * grid_n as f64).floor();
            (t.max(0.0) as usize).min(grid_n - 1)
        };
        (axis(0), axis(1))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Coverage {
    /// Non-empty bins over all bins.
    pub coverage: f64,
    /// Mean over non-empty bins of the best fitness in the bin.
    pub qd_score: f64,
    pub filled: usize,
}

/// Coverage and QD-score of points on a `grid_n` x `grid_n` grid over
/// `bounds`, or over the points' own bounding box.
pub fn coverage_qdscore(
    coords: &[[f64; 2]],
    fitness: &[f64],
    grid_n: usize,
    bounds: Option<Bounds>,
) -> Result<Coverage, AnalysisError> {
    if coords.len() != fitness.len() {
        return Err(AnalysisError::LengthMismatch(coords.len(), fitness.len()));
    }
    if coords.is_empty() || grid_n == 0 {
        return Err(AnalysisError::Empty);
    }
    let bounds = bounds.or_else(|| Bounds::of(coords)).ok_or(AnalysisError::Empty)?;
    let mut best: HashMap<(usize, usize), f64> = HashMap::new();
    for (p, &f) in coords.iter().zip(fitness) {
        let e = best.entry(bounds.bin(*p, grid_n)).or_insert(f);
        *e = e.max(f);
    }
    // sum in bin order so the result does not depend on input order
    let mut bins: Vec<_> = best.into_iter().collect();
    bins.sort_by_key(|a| a.0);
    let filled = bins.len();
    let qd_score = bins.iter().map(|(_, f)| f).sum::<f64>() / filled as f64;
    Ok(Coverage { coverage: filled as f64 / (grid_n * grid_n) as f64, qd_score, filled })
}

/// Opponent indices ordered by the fitness obtained against them, best
/// first; ties keep the lower index first.
pub fn ranking_vector(fitness: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..fitness.len()).collect();
    idx.sort_by(|&a, &b| fitness[b].total_cmp(&fitness[a]).then(a.cmp(&b)));
    idx
}

/// Fraction of each generation's ranking vectors absent from the previous
/// generation. The first generation is compared with itself.
pub fn ranking_novelty(generations: &[Vec<Vec<usize>>]) -> Result<Vec<f64>, AnalysisError> {
    let width = generations.iter().flatten().map(Vec::len).next();
    if let Some(w) = width {
        if let Some(r) = generations.iter().flatten().find(|r| r.len() != w) {
            return Err(AnalysisError::LengthMismatch(w, r.len()));
        }
    }
    let mut out = Vec::with_capacity(generations.len());
    for (g, cur) in generations.iter().enumerate() {
        if cur.is_empty() {
            out.push(0.0);
            continue;
        }
        let prev: HashSet<&Vec<usize>> = generations[g.saturating_sub(1)].iter().collect();
        let new = cur.iter().filter(|r| !prev.contains(r)).count();
        out.push(new as f64 / cur.len() as f64);
    }
    Ok(out)
}

/// Ranks starting at 1, tied values sharing their average rank.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman's rank correlation: Pearson correlation of average ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64, AnalysisError> {
    if x.len() != y.len() {
        return Err(AnalysisError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(AnalysisError::TooFew { needed: 2, got: x.len() });
    }
    let (rx, ry) = (average_ranks(x), average_ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(AnalysisError::ZeroVariance);
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// Shannon entropy in bits of the empirical distribution of `items`.
pub fn action_entropy<T: Eq + Hash>(items: &[T]) -> f64 {
    let mut counts: HashMap<&T, usize> = HashMap::new();
    for a in items {
        *counts.entry(a).or_default() += 1;
    }
    let n = items.len() as f64;
    let mut c: Vec<usize> = counts.into_values().collect();
    c.sort_unstable();
    -c.iter().map(|&k| k as f64 / n).map(|p| p * p.log2()).sum::<f64>() + 0.0
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainLink {
    pub id: SolutionId,
    pub generation: usize,
    pub operator: Operator,
    /// Other parent of a crossover child.
    pub second_parent: Option<SolutionId>,
}

/// Ancestors of `id` from itself back to its random root, following the
/// first parent at each crossover.
pub fn lineage_chain<'a>(
    records: impl IntoIterator<Item = &'a LineageRecord>,
    id: SolutionId,
) -> Result<Vec<ChainLink>, AnalysisError> {
    let by_id: HashMap<SolutionId, &LineageRecord> = records.into_iter().map(|r| (r.id, r)).collect();
    let mut out = Vec::new();
    let mut cur = id;
    loop {
        let r = by_id.get(&cur).ok_or(AnalysisError::UnknownId(cur))?;
        out.push(ChainLink { id: r.id, generation: r.generation, operator: r.operator, second_parent: r.parents.get(1).copied() });
        match r.parents.first() {
            Some(&p) => cur = p,
            None => return Ok(out),
        }
    }
}

/// Median of a non-empty slice; mean of the two middle values for even
/// lengths.
pub fn median(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { (v[m - 1] + v[m]) / 2.0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn elo_single_win_gains_half_k() {
        let t = elo(2, &[Match { a: 0, b: 1, score: 1.0 }], &EloConfig { epochs: 1, ..Default::default() });
        assert_eq!(t.ratings, vec![1016.0, 984.0]);
        assert_eq!(t.matches, vec![1, 1]);
    }

    #[test]
    fn elo_draws_change_nothing() {
        let m: Vec<Match> = (0..3).flat_map(|a| (0..3).filter(move |&b| b != a).map(move |b| Match { a, b, score: 0.5 })).collect();
        assert_eq!(elo(3, &m, &EloConfig::default()).ratings, vec![1000.0; 3]);
    }

    #[test]
    fn elo_is_transitive_and_zero_sum() {
        let m = [Match { a: 0, b: 1, score: 1.0 }, Match { a: 1, b: 2, score: 1.0 }, Match { a: 0, b: 2, score: 1.0 }];
        let t = elo(3, &m, &EloConfig::default());
        assert!(t.ratings[0] > t.ratings[1] && t.ratings[1] > t.ratings[2]);
        assert!((t.ratings.iter().sum::<f64>() / 3.0 - 1000.0).abs() < 1e-6);
        let shifted = elo(3, &m, &EloConfig { initial: 1500.0, ..Default::default() });
        assert!(shifted.ratings[0] > shifted.ratings[1] && shifted.ratings[1] > shifted.ratings[2]);
    }

    #[test]
    fn spearman_cases() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(spearman(&x, &x).unwrap(), 1.0);
        assert_eq!(spearman(&x, &[4.0, 3.0, 2.0, 1.0]).unwrap(), -1.0);
        // ranks differ by one in two places: 1 - 6*2/(4*15)
        assert!((spearman(&x, &[1.0, 3.0, 2.0, 4.0]).unwrap() - 0.8).abs() < 1e-12);
        assert_eq!(spearman(&x, &[1.0; 4]), Err(AnalysisError::ZeroVariance));
        assert_eq!(average_ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn entropy_cases() {
        assert_eq!(action_entropy(&[0; 10]), 0.0);
        assert_eq!(action_entropy(&[0, 1, 2, 3, 0, 1, 2, 3]), 2.0);
        assert_eq!(action_entropy(&[0, 1, 0, 1]), 1.0);
    }

    #[test]
    fn coverage_cases() {
        let c = coverage_qdscore(&[[1.0, 1.0]; 5], &[0.1; 5], 100, None).unwrap();
        assert_eq!(c.coverage, 1.0 / 10_000.0);
        let corners = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]];
        let c = coverage_qdscore(&corners, &[0.1, 0.2, 0.3, 0.4], 2, None).unwrap();
        assert_eq!(c.coverage, 1.0);
        assert!((c.qd_score - 0.25).abs() < 1e-15);
        assert!(coverage_qdscore(&[], &[], 2, None).is_err());
    }

    #[test]
    fn ranking_vectors_and_novelty() {
        assert_eq!(ranking_vector(&[0.2, 0.9, 0.2, 0.5]), vec![1, 3, 0, 2]);
        let g1 = vec![vec![0, 1, 2, 3], vec![1, 0, 2, 3], vec![2, 1, 0, 3], vec![0, 2, 1, 3], vec![1, 2, 0, 3]];
        let g2 = vec![vec![0, 1, 2, 3], vec![1, 0, 2, 3], vec![3, 2, 1, 0], vec![3, 0, 1, 2], vec![2, 3, 0, 1]];
        let n = ranking_novelty(&[g1.clone(), g1.clone(), g2]).unwrap();
        assert_eq!(n, vec![0.0, 0.0, 0.6]);
        assert!(ranking_novelty(&[vec![vec![0, 1]], vec![vec![0, 1, 2]]]).is_err());
    }

    #[test]
    fn lineage_walks_first_parents() {
        let rec = |id, parents: Vec<u64>, op| LineageRecord { id, parents, generation: 1, operator: op };
        let mut records = vec![rec(0, vec![], Operator::Random), rec(9, vec![], Operator::Random)];
        for i in 1..=5 {
            records.push(rec(i, vec![i - 1], Operator::Mutation));
        }
        records.push(rec(6, vec![5, 9], Operator::Crossover));
        assert_eq!(lineage_chain(&records, 0).unwrap().len(), 1);
        assert_eq!(lineage_chain(&records, 5).unwrap().len(), 6);
        let c = lineage_chain(&records, 6).unwrap();
        assert_eq!(c[0].second_parent, Some(9));
        assert_eq!(c.iter().map(|l| l.id).collect::<Vec<_>>(), vec![6, 5, 4, 3, 2, 1, 0]);
        assert_eq!(lineage_chain(&records, 42), Err(AnalysisError::UnknownId(42)));
    }

    #[test]
    fn median_cases() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(&[]), None);
    }
}
