//! The coevolution loop: alternating sides, multi-task MAP-Elites against a
//! frozen task set, task selection and the bootstrap tournament.

mod config;
mod judge;
mod select;

pub use config::{ArchiveMode, GameConfig, OpponentMode, SearchMode};
pub use judge::{play_matrix, EvalError, Judge, Judged, MatrixEntry, Task, TournamentMatrix};
pub use select::select_tasks;

pub use crate::fitness::compare_fitness;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::archive::{make_fixed_cvt, ArchiveError, BehaviorVector, Elite, GrowingArchive, SolutionId, TaskArchive, UpdateResult};
use crate::behavior::{DescriptorDomain, EmbeddingTable};
use crate::domains::{Domain, Side};
use crate::fitness::Fitness;
use crate::rng::{self, purpose};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvolveError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("generation {generation}, evaluation {index}: {source}")]
    Evaluation { generation: usize, index: usize, source: EvalError },
    #[error("generation {generation}, tournament duel {index}: {source}")]
    Tournament { generation: usize, index: usize, source: EvalError },
    #[error("generation {generation}: {source}")]
    Archive { generation: usize, source: ArchiveError },
    #[error("generation {0}: archives hold no elite to select tasks from")]
    NoElites(usize),
    #[error("log does not continue this configuration: {0}")]
    Resume(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Operator {
    Random,
    Mutation,
    Crossover,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineageRecord {
    pub id: SolutionId,
    pub parents: Vec<SolutionId>,
    pub generation: usize,
    pub operator: Operator,
}

/// An old task evaluated against new task `task`, offered to that task's
/// archive in the next generation.
#[derive(Clone, Debug, PartialEq)]
pub struct BootstrapRecord<S> {
    pub task: usize,
    pub id: SolutionId,
    pub solution: S,
    pub fitness: Fitness,
    pub behavior: BehaviorVector,
}

/// One inner-loop evaluation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvalRecord {
    pub id: SolutionId,
    pub task: usize,
    /// Raw duel fitness, `[red, blue]`.
    pub fitness: [f64; 2],
    pub key: u64,
    pub result: UpdateResult,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GenerationRecord<S> {
    /// 1-based.
    pub generation: usize,
    pub side: Side,
    /// Opponents of this generation, all of the other side.
    pub tasks: Vec<Task<S>>,
    pub archives: Vec<TaskArchive<S>>,
    /// Tasks for the next generation, drawn from `archives`.
    pub selected: Vec<Task<S>>,
    /// `selected` (rows) against `tasks` (columns).
    pub tournament: TournamentMatrix,
    /// Input for the next generation's archives; empty without bootstrapping.
    pub bootstrap: Vec<BootstrapRecord<S>>,
    /// Every id issued in this generation.
    pub lineage: Vec<LineageRecord>,
    pub evaluations: Vec<EvalRecord>,
    pub evaluation_count: u64,
    /// First id not yet issued after this generation.
    pub next_id: SolutionId,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GenerationsLog<S> {
    /// Random Blue opponents of the first generation.
    pub initial_tasks: Vec<Task<S>>,
    pub initial_lineage: Vec<LineageRecord>,
    pub generations: Vec<GenerationRecord<S>>,
}

impl<S> GenerationsLog<S> {
    pub fn lineage(&self) -> impl Iterator<Item = &LineageRecord> {
        self.initial_lineage.iter().chain(self.generations.iter().flat_map(|g| g.lineage.iter()))
    }

    pub fn next_id(&self) -> SolutionId {
        self.generations.last().map_or(self.initial_tasks.len() as SolutionId, |g| g.next_id)
    }
}

/// Side evolved in 1-based generation `g`: Red first, then alternating.
pub fn side_of_generation(g: usize) -> Side {
    if g % 2 == 1 {
        Side::Red
    } else {
        Side::Blue
    }
}

/// Everything one generation's inner loop needs.
pub struct Context<'a, D: Domain> {
    pub config: &'a GameConfig,
    pub domain: &'a D,
    pub external: Option<&'a EmbeddingTable>,
}

impl<'a, D: Domain> Context<'a, D> {
    pub fn new(config: &'a GameConfig, domain: &'a D) -> Self {
        Self { config, domain, external: None }
    }

    pub fn judge(&self) -> Judge<'a, D> {
        Judge {
            domain: self.domain,
            descriptor: &self.config.descriptor,
            external: self.external,
            diversity_only: self.config.diversity_only,
        }
    }

    fn descriptor_domain(&self) -> DescriptorDomain {
        DescriptorDomain { external_dim: self.external.map_or(0, |t| t.dim), ..self.domain.descriptor_domain() }
    }
}

fn random_tasks<D: Domain>(
    domain: &D,
    side: Side,
    n: usize,
    rng: &mut rand_chacha::ChaCha8Rng,
    generation: usize,
    next_id: &mut SolutionId,
    lineage: &mut Vec<LineageRecord>,
) -> Vec<Task<D::Solution>> {
    (0..n)
        .map(|_| {
            let id = *next_id;
            *next_id += 1;
            lineage.push(LineageRecord { id, parents: vec![], generation, operator: Operator::Random });
            Task { id, solution: domain.random_solution(side, rng) }
        })
        .collect()
}

/// Empty archives for one generation.
pub fn new_archives<D: Domain>(ctx: &Context<'_, D>, generation: usize) -> Result<Vec<TaskArchive<D::Solution>>, ArchiveError> {
    let c = ctx.config;
    let kind = c.descriptor.distance_kind();
    let template = match c.archive_mode {
        ArchiveMode::Growing => TaskArchive::Growing(GrowingArchive::new(c.n_cell, kind, c.fitness_mode)?),
        ArchiveMode::FixedCvt => {
            let info = ctx.descriptor_domain();
            let mut rng = rng::stream(c.master_seed, &[generation as u64, purpose::CVT]);
            let samples = (0..c.cvt_samples)
                .map(|_| c.descriptor.random_behavior(&info, &mut rng))
                .collect::<Result<Vec<_>, _>>()?;
            let seed = rng::derive_seed(c.master_seed, &[generation as u64, purpose::CVT, 1]);
            TaskArchive::Cvt(make_fixed_cvt(&samples, c.n_cell, seed, c.fitness_mode)?)
        }
    };
    Ok(vec![template; c.n_task])
}

/// Output of one inner loop.
pub struct MtmbResult<S> {
    pub archives: Vec<TaskArchive<S>>,
    pub lineage: Vec<LineageRecord>,
    pub evaluations: Vec<EvalRecord>,
    pub next_id: SolutionId,
}

struct Candidate<S> {
    task: usize,
    solution: S,
    operator: Operator,
    parents: Vec<SolutionId>,
}

/// Multi-task MAP-Elites for one side against fixed tasks. Bootstrap
/// records are replayed into the archives first. The first
/// `N_init - (elites after replay)` candidates are random; later ones are
/// variations of two elites drawn uniformly from all archives. Each batch
/// is generated from the archive state at its start, evaluated (possibly in
/// parallel) and inserted in index order.
pub fn run_mtmb<D: Domain>(
    ctx: &Context<'_, D>,
    generation: usize,
    side: Side,
    tasks: &[Task<D::Solution>],
    bootstrap: &[BootstrapRecord<D::Solution>],
    first_id: SolutionId,
) -> Result<MtmbResult<D::Solution>, EvolveError> {
    let c = ctx.config;
    let archive_err = |source| EvolveError::Archive { generation, source };
    let mut archives = new_archives(ctx, generation).map_err(archive_err)?;
    for r in bootstrap {
        let elite = Elite { id: r.id, solution: r.solution.clone(), fitness: r.fitness, behavior: r.behavior.clone() };
        archives[r.task].update(elite).map_err(archive_err)?;
    }
    let initial_elites: usize = archives.iter().map(|a| a.elite_count()).sum();
    let judge = ctx.judge();
    let mut lineage = Vec::with_capacity(c.n_budget);
    let mut evaluations = Vec::with_capacity(c.n_budget);

    let mut start = 0;
    while start < c.n_budget {
        let batch = c.batch_size.min(c.n_budget - start);
        let candidates: Vec<Candidate<D::Solution>> = {
            let pool: Vec<&Elite<D::Solution>> = archives.iter().flat_map(|a| a.elites()).collect();
            (start..start + batch)
                .map(|index| {
                    let mut rng = rng::stream(c.master_seed, &[generation as u64, purpose::EVALUATION, index as u64]);
                    let task = rng.gen_range(0..tasks.len());
                    let random =
                        c.search == SearchMode::RandomOnly || initial_elites + index < c.n_init || pool.is_empty();
                    if random {
                        let solution = ctx.domain.random_solution(side, &mut rng);
                        return Candidate { task, solution, operator: Operator::Random, parents: vec![] };
                    }
                    let a = pool[rng.gen_range(0..pool.len())];
                    let b = pool[rng.gen_range(0..pool.len())];
                    let off = ctx.domain.vary(&a.solution, &b.solution, &mut rng);
                    if off.crossover {
                        Candidate { task, solution: off.solution, operator: Operator::Crossover, parents: vec![a.id, b.id] }
                    } else {
                        Candidate { task, solution: off.solution, operator: Operator::Mutation, parents: vec![a.id] }
                    }
                })
                .collect()
        };
        let judged = candidates
            .par_iter()
            .enumerate()
            .map(|(k, cand)| {
                judge
                    .one_side(side, &cand.solution, &tasks[cand.task].solution)
                    .map_err(|source| EvolveError::Evaluation { generation, index: start + k, source })
            })
            .collect::<Result<Vec<_>, _>>()?;
        for (k, (cand, (j, fitness))) in candidates.into_iter().zip(judged).enumerate() {
            let id = first_id + (start + k) as SolutionId;
            lineage.push(LineageRecord { id, parents: cand.parents, generation, operator: cand.operator });
            let elite = Elite { id, solution: cand.solution, fitness: j.fitness, behavior: j.behavior };
            let result = archives[cand.task].update(elite).map_err(archive_err)?;
            evaluations.push(EvalRecord { id, task: cand.task, fitness, key: j.key, result });
        }
        start += batch;
    }
    Ok(MtmbResult { archives, lineage, evaluations, next_id: first_id + c.n_budget as SolutionId })
}

type Bootstrapped<S> = (TournamentMatrix, Vec<BootstrapRecord<S>>);

/// Plays the new tasks (rows) against the previous tasks (columns). With
/// `bootstrap` set, every previous task becomes a candidate elite for every
/// new task's archive in the next generation.
pub fn bootstrap_tournament<D: Domain>(
    ctx: &Context<'_, D>,
    generation: usize,
    new_side: Side,
    new_tasks: &[Task<D::Solution>],
    old_tasks: &[Task<D::Solution>],
    bootstrap: bool,
) -> Result<Bootstrapped<D::Solution>, EvolveError> {
    let judge = ctx.judge();
    let matrix = play_matrix(&judge, new_side, new_tasks, old_tasks)
        .map_err(|(index, source)| EvolveError::Tournament { generation, index, source })?;
    let mut records = Vec::new();
    if bootstrap {
        for j in 0..new_tasks.len() {
            for (k, old) in old_tasks.iter().enumerate() {
                let e = matrix.get(j, k);
                let value = if ctx.config.diversity_only { 0.0 } else { e.fitness[1] };
                records.push(BootstrapRecord {
                    task: j,
                    id: old.id,
                    solution: old.solution.clone(),
                    fitness: Fitness::new(value, ctx.domain.solution_size(&old.solution)),
                    behavior: e.behaviors[1].clone(),
                });
            }
        }
    }
    Ok((matrix, records))
}

/// Starts a log: the random Blue tasks of the first generation.
pub fn start_log<D: Domain>(ctx: &Context<'_, D>) -> GenerationsLog<D::Solution> {
    let mut rng = rng::stream(ctx.config.master_seed, &[0, purpose::INITIAL_TASKS]);
    let mut next_id = 0;
    let mut lineage = Vec::new();
    let initial_tasks = random_tasks(ctx.domain, Side::Blue, ctx.config.n_task, &mut rng, 0, &mut next_id, &mut lineage);
    GenerationsLog { initial_tasks, initial_lineage: lineage, generations: Vec::new() }
}

/// Runs the next generation and appends it to the log.
pub fn step_generation<D: Domain>(ctx: &Context<'_, D>, log: &mut GenerationsLog<D::Solution>) -> Result<(), EvolveError> {
    let c = ctx.config;
    let g = log.generations.len() + 1;
    let side = side_of_generation(g);
    let mut next_id = log.next_id();
    let mut lineage = Vec::new();
    let prev = log.generations.last();
    let tasks = match (c.opponents, prev) {
        (_, None) => log.initial_tasks.clone(),
        (OpponentMode::Coevolve, Some(p)) => p.selected.clone(),
        (OpponentMode::FixedRandom, Some(_)) => {
            let mut rng = rng::stream(c.master_seed, &[g as u64, purpose::OPPONENTS]);
            random_tasks(ctx.domain, side.opposite(), c.n_task, &mut rng, g, &mut next_id, &mut lineage)
        }
    };
    let bootstrap: &[BootstrapRecord<D::Solution>] = match prev {
        Some(p) if c.bootstrap_enabled => &p.bootstrap,
        _ => &[],
    };
    let inner = run_mtmb(ctx, g, side, &tasks, bootstrap, next_id)?;
    lineage.extend(inner.lineage);
    let seed = rng::derive_seed(c.master_seed, &[g as u64, purpose::SELECT_TASKS]);
    let selected = select_tasks(&inner.archives, c.n_task, c.fitness_mode, seed).ok_or(EvolveError::NoElites(g))?;
    let (tournament, bootstrap) = bootstrap_tournament(ctx, g, side, &selected, &tasks, c.bootstrap_enabled)?;
    log.generations.push(GenerationRecord {
        generation: g,
        side,
        tasks,
        archives: inner.archives,
        selected,
        tournament,
        bootstrap,
        lineage,
        evaluations: inner.evaluations,
        evaluation_count: c.evaluations_per_generation(),
        next_id: inner.next_id,
    });
    Ok(())
}

/// Runs generations until the log holds `until` of them.
pub fn continue_game<D: Domain>(
    ctx: &Context<'_, D>,
    log: &mut GenerationsLog<D::Solution>,
    until: usize,
    mut on_generation: impl FnMut(&GenerationsLog<D::Solution>),
) -> Result<(), EvolveError> {
    ctx.config.validate().map_err(EvolveError::Config)?;
    if log.initial_tasks.len() != ctx.config.n_task {
        return Err(EvolveError::Resume(format!(
            "log has {} initial tasks, configuration wants {}",
            log.initial_tasks.len(),
            ctx.config.n_task
        )));
    }
    while log.generations.len() < until.min(ctx.config.n_gen) {
        step_generation(ctx, log)?;
        on_generation(log);
    }
    Ok(())
}

/// The whole game: `N_gen` generations from fresh random tasks.
pub fn run_game<D: Domain>(ctx: &Context<'_, D>) -> Result<GenerationsLog<D::Solution>, EvolveError> {
    ctx.config.validate().map_err(EvolveError::Config)?;
    let mut log = start_log(ctx);
    continue_game(ctx, &mut log, ctx.config.n_gen, |_| {})?;
    Ok(log)
}
