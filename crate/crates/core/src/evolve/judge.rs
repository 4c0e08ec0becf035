use rayon::prelude::*;
use thiserror::Error;

use crate::archive::{BehaviorVector, SolutionId};
use crate::behavior::{describe, DescribeContext, DescribeError, DescriptorSpec, EmbeddingTable};
use crate::domains::{evaluation_key, Domain, DomainError, DuelOutcome, Side};
use crate::fitness::Fitness;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Describe(#[from] DescribeError),
}

/// One side's view of an evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct Judged {
    /// Archive fitness; forced to zero in diversity-only runs.
    pub fitness: Fitness,
    pub behavior: BehaviorVector,
    pub key: u64,
}

/// Runs duels and turns them into archive-ready fitness and behavior.
pub struct Judge<'a, D: Domain> {
    pub domain: &'a D,
    pub descriptor: &'a DescriptorSpec,
    pub external: Option<&'a EmbeddingTable>,
    pub diversity_only: bool,
}

impl<'a, D: Domain> Judge<'a, D> {
    pub fn new(domain: &'a D, descriptor: &'a DescriptorSpec) -> Self {
        Self { domain, descriptor, external: None, diversity_only: false }
    }

    fn side_view(
        &self,
        outcome: &DuelOutcome,
        side: Side,
        me: &D::Solution,
        payloads: (&str, &str),
    ) -> Result<Judged, EvalError> {
        let genome = if matches!(self.descriptor, DescriptorSpec::GenomeStats) {
            self.domain.genome_values(me)
        } else {
            Vec::new()
        };
        let key = evaluation_key(side, payloads.0, payloads.1, self.domain.duel_seed());
        let ctx = DescribeContext { side, genome: &genome, key, external: self.external };
        let behavior = describe(outcome, self.descriptor, &ctx)?;
        let value = if self.diversity_only { 0.0 } else { outcome.fitness_of(side) };
        Ok(Judged { fitness: Fitness::new(value, self.domain.solution_size(me)), behavior, key })
    }

    /// Evaluates `me` on `side` against `opponent`; also returns the raw
    /// fitnesses of both sides as `[red, blue]`.
    pub fn one_side(&self, side: Side, me: &D::Solution, opponent: &D::Solution) -> Result<(Judged, [f64; 2]), EvalError> {
        let (red, blue) = if side == Side::Red { (me, opponent) } else { (opponent, me) };
        let outcome = self.domain.evaluate(red, blue)?;
        let (pr, pb) = (self.domain.encode(red), self.domain.encode(blue));
        Ok((self.side_view(&outcome, side, me, (&pr, &pb))?, outcome.fitness))
    }

    /// One evaluation described from both perspectives, `[red, blue]`.
    pub fn both_sides(&self, red: &D::Solution, blue: &D::Solution) -> Result<([Judged; 2], [f64; 2]), EvalError> {
        let outcome = self.domain.evaluate(red, blue)?;
        let (pr, pb) = (self.domain.encode(red), self.domain.encode(blue));
        let r = self.side_view(&outcome, Side::Red, red, (&pr, &pb))?;
        let b = self.side_view(&outcome, Side::Blue, blue, (&pr, &pb))?;
        Ok(([r, b], outcome.fitness))
    }
}

/// A solution with its identity.
#[derive(Clone, Debug, PartialEq)]
pub struct Task<S> {
    pub id: SolutionId,
    pub solution: S,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MatrixEntry {
    /// Raw duel fitness of the row and column solution.
    pub fitness: [f64; 2],
    pub keys: [u64; 2],
    pub behaviors: [BehaviorVector; 2],
}

/// Results of every row solution against every column solution.
#[derive(Clone, Debug, PartialEq)]
pub struct TournamentMatrix {
    pub row_side: Side,
    pub row_ids: Vec<SolutionId>,
    pub col_ids: Vec<SolutionId>,
    /// Row-major.
    pub entries: Vec<MatrixEntry>,
}

impl TournamentMatrix {
    pub fn rows(&self) -> usize {
        self.row_ids.len()
    }

    pub fn cols(&self) -> usize {
        self.col_ids.len()
    }

    pub fn get(&self, r: usize, c: usize) -> &MatrixEntry {
        &self.entries[r * self.cols() + c]
    }
}

/// Evaluates every `(row, col)` pair; rows play `row_side`. Errors carry
/// the row-major index of the failing pair.
pub fn play_matrix<D: Domain>(
    judge: &Judge<'_, D>,
    row_side: Side,
    rows: &[Task<D::Solution>],
    cols: &[Task<D::Solution>],
) -> Result<TournamentMatrix, (usize, EvalError)> {
    let n = rows.len() * cols.len();
    let entries = (0..n)
        .into_par_iter()
        .map(|i| {
            let (r, c) = (&rows[i / cols.len()], &cols[i % cols.len()]);
            let (red, blue) = if row_side == Side::Red { (r, c) } else { (c, r) };
            let ([jr, jb], fit) = judge.both_sides(&red.solution, &blue.solution).map_err(|e| (i, e))?;
            let (row, col, f) = if row_side == Side::Red { (jr, jb, fit) } else { (jb, jr, [fit[1], fit[0]]) };
            Ok(MatrixEntry { fitness: f, keys: [row.key, col.key], behaviors: [row.behavior, col.behavior] })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(TournamentMatrix {
        row_side,
        row_ids: rows.iter().map(|t| t.id).collect(),
        col_ids: cols.iter().map(|t| t.id).collect(),
        entries,
    })
}
