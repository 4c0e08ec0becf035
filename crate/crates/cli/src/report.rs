//! Measures computed from finished logs: per-generation metrics, pooled
//! projections and tournaments between runs.

use std::collections::{BTreeMap, HashMap};

use game_core::analysis::{
    action_entropy, coverage_qdscore, matrix_elo, pca2, ranking_novelty, ranking_vector, round_robin, Bounds,
    EloConfig, PcaProjection,
};
use game_core::archive::{Elite, SolutionId};
use game_core::behavior::EmbeddingTable;
use game_core::domains::{evaluation_key, Domain, Side};
use game_core::evolve::{GameConfig, GenerationRecord, GenerationsLog, Judge, Task, TournamentMatrix};
use game_core::io::metrics::MetricRow;

use crate::CliError;

/// Bins per axis of the coverage grid.
pub const DEFAULT_GRID: usize = 20;
pub const PCA_SEED: u64 = 1;

pub const METRIC_NAMES: [&str; 8] = [
    "elite_count",
    "mean_fitness",
    "solution_size",
    "coverage",
    "qd_score",
    "action_entropy",
    "ranking_novelty",
    "task_fitness",
];

/// An archive elite flattened out of a log.
#[derive(Clone, Debug)]
pub struct EliteView {
    pub generation: usize,
    pub side: Side,
    pub task: usize,
    pub id: SolutionId,
    pub fitness: f64,
    pub key: u64,
    pub behavior: Vec<f64>,
}

/// Every elite of every archive, in generation, task and cell order.
pub fn elites<D: Domain>(domain: &D, log: &GenerationsLog<D::Solution>) -> Vec<EliteView> {
    let mut out = Vec::new();
    for g in &log.generations {
        for (t, a) in g.archives.iter().enumerate() {
            let task = domain.encode(&g.tasks[t].solution);
            for e in a.elites() {
                let me = domain.encode(&e.solution);
                let key = match g.side {
                    Side::Red => evaluation_key(Side::Red, &me, &task, domain.duel_seed()),
                    Side::Blue => evaluation_key(Side::Blue, &task, &me, domain.duel_seed()),
                };
                out.push(EliteView {
                    generation: g.generation,
                    side: g.side,
                    task: t,
                    id: e.id,
                    fitness: e.fitness.value,
                    key,
                    behavior: e.behavior.values().to_vec(),
                });
            }
        }
    }
    out
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

fn analysis_judge<'a, D: Domain>(domain: &'a D, config: &'a GameConfig, external: Option<&'a EmbeddingTable>) -> Judge<'a, D> {
    Judge { domain, descriptor: &config.descriptor, external, diversity_only: false }
}

/// Ranking vectors of `players` (playing `side`) over the tasks `reference`.
fn ranking_vectors<D: Domain>(
    judge: &Judge<'_, D>,
    side: Side,
    players: &[Task<D::Solution>],
    reference: &[Task<D::Solution>],
) -> Result<Vec<Vec<usize>>, CliError> {
    let m = round_robin(judge, side, players, reference)?;
    Ok((0..m.rows()).map(|r| ranking_vector(&(0..m.cols()).map(|c| m.get(r, c).fitness[0]).collect::<Vec<_>>())).collect())
}

fn stored_vectors(m: &TournamentMatrix) -> Vec<Vec<usize>> {
    (0..m.rows()).map(|r| ranking_vector(&(0..m.cols()).map(|c| m.get(r, c).fitness[0]).collect::<Vec<_>>())).collect()
}

/// Entropy of the elites' own actions in their duels against their task,
/// averaged over the elites of one generation.
fn generation_entropy<D: Domain>(domain: &D, g: &GenerationRecord<D::Solution>) -> Result<f64, CliError> {
    let mut total = Vec::new();
    for (t, a) in g.archives.iter().enumerate() {
        let task = &g.tasks[t].solution;
        for e in a.elites() {
            let o = match g.side {
                Side::Red => domain.evaluate(&e.solution, task),
                Side::Blue => domain.evaluate(task, &e.solution),
            }?;
            let actions = &o.actions[g.side.index()];
            total.push(if actions.is_empty() { 0.0 } else { action_entropy(actions) });
        }
    }
    Ok(mean(total.into_iter()))
}

/// Per-generation metrics of one run, in generation order and then in
/// [`METRIC_NAMES`] order. Coverage uses one PCA fitted to all of the
/// run's elites and the bounding box of their projections.
pub fn run_metrics<D: Domain>(
    run_id: &str,
    domain: &D,
    config: &GameConfig,
    external: Option<&EmbeddingTable>,
    log: &GenerationsLog<D::Solution>,
    grid: usize,
) -> Result<Vec<MetricRow>, CliError> {
    let all = elites(domain, log);
    let (pca, bounds) = fit_projection(&all.iter().map(|e| e.behavior.clone()).collect::<Vec<_>>())?;
    let judge = analysis_judge(domain, config, external);
    let mut rows = Vec::new();
    for g in &log.generations {
        let mine: Vec<&EliteView> = all.iter().filter(|e| e.generation == g.generation).collect();
        let coords: Vec<[f64; 2]> = mine.iter().map(|e| pca.project(&e.behavior)).collect();
        let fit: Vec<f64> = mine.iter().map(|e| e.fitness).collect();
        let cov = coverage_qdscore(&coords, &fit, grid, Some(bounds))?;
        let sizes = g.archives.iter().flat_map(|a| a.elites()).map(|e| domain.solution_size(&e.solution) as f64);
        let current = stored_vectors(&g.tournament);
        let novelty = match g.generation.checked_sub(2).filter(|&p| p >= 1) {
            Some(p) => {
                let prev = &log.generations[p - 1];
                let before = ranking_vectors(&judge, g.side, &prev.selected, &g.tasks)?;
                ranking_novelty(&[before, current])?[1]
            }
            None => ranking_novelty(&[current])?[0],
        };
        let values = [
            mine.len() as f64,
            mean(fit.iter().copied()),
            mean(sizes),
            cov.coverage,
            cov.qd_score,
            generation_entropy(domain, g)?,
            novelty,
            mean(g.tournament.entries.iter().map(|e| e.fitness[0])),
        ];
        for (name, value) in METRIC_NAMES.iter().zip(values) {
            rows.push(MetricRow { run_id: run_id.into(), generation: g.generation, metric: (*name).into(), value });
        }
    }
    Ok(rows)
}

/// PCA over `behaviors` and the bounding box of their projections.
pub fn fit_projection(behaviors: &[Vec<f64>]) -> Result<(PcaProjection, Bounds), CliError> {
    let pca = pca2(behaviors, PCA_SEED)?;
    let bounds = Bounds::of(&pca.coords).ok_or_else(|| CliError::Runtime("no behaviors to project".into()))?;
    Ok((pca, bounds))
}

/// A tournament participant.
#[derive(Clone, Debug)]
pub struct Player<S> {
    pub run: usize,
    pub side: Side,
    pub generation: usize,
    pub task: Task<S>,
}

/// Every side's task sets across generations: red generations' selected
/// tasks and the initial blue tasks plus blue generations' selected tasks.
pub fn intergenerational_players<S: Clone>(run: usize, log: &GenerationsLog<S>) -> Vec<Player<S>> {
    let mut out: Vec<Player<S>> = log
        .initial_tasks
        .iter()
        .map(|t| Player { run, side: Side::Blue, generation: 0, task: t.clone() })
        .collect();
    for g in &log.generations {
        out.extend(g.selected.iter().map(|t| Player { run, side: g.side, generation: g.generation, task: t.clone() }));
    }
    out
}

/// The `k` fittest distinct elites per side from the last generation of
/// each side. Returns the players and whether any side had fewer than `k`.
pub fn top_k_players<S: Clone>(run: usize, log: &GenerationsLog<S>, k: usize) -> (Vec<Player<S>>, bool) {
    let mut out = Vec::new();
    let mut clipped = false;
    for side in [Side::Red, Side::Blue] {
        let Some(g) = log.generations.iter().rev().find(|g| g.side == side) else {
            clipped = true;
            continue;
        };
        let mut best: BTreeMap<SolutionId, &Elite<S>> = BTreeMap::new();
        for e in g.archives.iter().flat_map(|a| a.elites()) {
            let slot = best.entry(e.id).or_insert(e);
            if e.fitness.value > slot.fitness.value {
                *slot = e;
            }
        }
        let mut ranked: Vec<_> = best.into_values().collect();
        ranked.sort_by(|a, b| b.fitness.value.total_cmp(&a.fitness.value).then(a.id.cmp(&b.id)));
        clipped |= ranked.len() < k;
        out.extend(ranked.into_iter().take(k).map(|e| Player {
            run,
            side,
            generation: g.generation,
            task: Task { id: e.id, solution: e.solution.clone() },
        }));
    }
    (out, clipped)
}

/// Result of a red-versus-blue round robin.
pub struct Tournament<S> {
    pub red: Vec<Player<S>>,
    pub blue: Vec<Player<S>>,
    pub matrix: TournamentMatrix,
    /// Ratings of the red players followed by the blue players.
    pub ratings: Vec<f64>,
    pub matches: Vec<u32>,
}

pub fn play_tournament<D: Domain>(
    judge: &Judge<'_, D>,
    players: Vec<Player<D::Solution>>,
    elo: &EloConfig,
) -> Result<Tournament<D::Solution>, CliError> {
    let (red, blue): (Vec<_>, Vec<_>) = players.into_iter().partition(|p| p.side == Side::Red);
    if red.is_empty() || blue.is_empty() {
        return Err(CliError::Runtime("tournament needs players on both sides".into()));
    }
    let rows: Vec<_> = red.iter().map(|p| p.task.clone()).collect();
    let cols: Vec<_> = blue.iter().map(|p| p.task.clone()).collect();
    let matrix = round_robin(judge, Side::Red, &rows, &cols)?;
    let table = matrix_elo(&matrix, elo);
    Ok(Tournament { red, blue, matrix, ratings: table.ratings, matches: table.matches })
}

impl<S> Tournament<S> {
    pub fn players(&self) -> impl Iterator<Item = &Player<S>> {
        self.red.iter().chain(&self.blue)
    }

    /// Mean rating of each run's players, keyed by run index.
    pub fn mean_rating_by_run(&self) -> HashMap<usize, f64> {
        let mut acc: HashMap<usize, (f64, usize)> = HashMap::new();
        for (p, r) in self.players().zip(&self.ratings) {
            let e = acc.entry(p.run).or_default();
            e.0 += r;
            e.1 += 1;
        }
        acc.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect()
    }
}
