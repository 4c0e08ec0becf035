//! Binary snapshots of a run: one file for the initial opponents and one
//! per generation. Solutions are stored as the domain's text payloads.

use std::path::{Path, PathBuf};

use super::wire::{Reader, Writer};
use super::{read_file, write_file, IoError};
use crate::archive::{Cell, Elite, FixedCvtArchive, GrowingArchive, TaskArchive, UpdateResult};
use crate::domains::{Domain, Side};
use crate::evolve::{
    BootstrapRecord, EvalRecord, GenerationRecord, GenerationsLog, LineageRecord, MatrixEntry, Operator, Task,
    TournamentMatrix,
};
use crate::fitness::{Fitness, FitnessMode};

pub const MAGIC: &[u8; 4] = b"GSNP";
pub const VERSION: u32 = 1;
pub const INITIAL_FILE: &str = "initial.gsnp";

const KIND_INITIAL: u8 = 0;
const KIND_GENERATION: u8 = 1;

pub fn generation_file(g: usize) -> String {
    format!("gen_{g:04}.gsnp")
}

#[derive(Clone, Debug, PartialEq)]
pub enum Snapshot<S> {
    Initial { tasks: Vec<Task<S>>, lineage: Vec<LineageRecord> },
    Generation(Box<GenerationRecord<S>>),
}

struct Enc<'a, D: Domain> {
    w: Writer,
    domain: &'a D,
}

impl<D: Domain> Enc<'_, D> {
    fn side(&mut self, s: Side) {
        self.w.u8(s.index() as u8);
    }

    fn fitness(&mut self, f: &Fitness) {
        self.w.f64(f.value);
        self.w.u32(f.size);
    }

    fn solution(&mut self, s: &D::Solution) {
        let text = self.domain.encode(s);
        self.w.str(&text);
    }

    fn tasks(&mut self, tasks: &[Task<D::Solution>]) {
        self.w.len(tasks.len());
        for t in tasks {
            self.w.u64(t.id);
            self.solution(&t.solution);
        }
    }

    fn elite(&mut self, e: &Elite<D::Solution>) {
        self.w.u64(e.id);
        self.solution(&e.solution);
        self.fitness(&e.fitness);
        self.w.behavior(&e.behavior);
    }

    fn mode(&mut self, m: FitnessMode) {
        self.w.u8(match m {
            FitnessMode::SingleObjective => 0,
            FitnessMode::Lexicographic => 1,
        });
    }

    fn archive(&mut self, a: &TaskArchive<D::Solution>) {
        match a {
            TaskArchive::Growing(g) => {
                self.w.u8(0);
                self.w.len(g.capacity());
                self.w.u8(g.kind() as u8);
                self.mode(g.mode());
                self.w.len(g.len());
                for c in g.cells() {
                    self.w.behavior(&c.centroid);
                    self.elite(&c.elite);
                    self.elite(&c.backup);
                }
            }
            TaskArchive::Cvt(c) => {
                self.w.u8(1);
                self.mode(c.mode());
                self.w.len(c.centroids().len());
                for (centroid, e) in c.centroids().iter().zip(c.elites()) {
                    self.w.behavior(centroid);
                    match e {
                        None => self.w.u8(0),
                        Some(e) => {
                            self.w.u8(1);
                            self.elite(e);
                        }
                    }
                }
            }
        }
    }

    fn lineage(&mut self, records: &[LineageRecord]) {
        self.w.len(records.len());
        for r in records {
            self.w.u64(r.id);
            self.w.len(r.parents.len());
            for &p in &r.parents {
                self.w.u64(p);
            }
            self.w.len(r.generation);
            self.w.u8(match r.operator {
                Operator::Random => 0,
                Operator::Mutation => 1,
                Operator::Crossover => 2,
            });
        }
    }

    fn ids(&mut self, ids: &[u64]) {
        self.w.len(ids.len());
        for &i in ids {
            self.w.u64(i);
        }
    }

    fn matrix(&mut self, m: &TournamentMatrix) {
        self.side(m.row_side);
        self.ids(&m.row_ids);
        self.ids(&m.col_ids);
        self.w.len(m.entries.len());
        for e in &m.entries {
            for i in 0..2 {
                self.w.f64(e.fitness[i]);
                self.w.u64(e.keys[i]);
                self.w.behavior(&e.behaviors[i]);
            }
        }
    }

    fn result(&mut self, r: &UpdateResult) {
        let (tag, idx) = match *r {
            UpdateResult::AddedNewCell { cell } => (0, cell),
            UpdateResult::GrewReplacedCell { removed } => (1, removed),
            UpdateResult::ReplacedElite { cell } => (2, cell),
            UpdateResult::Rejected => (3, 0),
        };
        self.w.u8(tag);
        self.w.len(idx);
    }

    fn header(&mut self, kind: u8) {
        self.w.str(self.domain.name());
        self.w.u8(kind);
    }
}

pub fn encode_initial<D: Domain>(domain: &D, tasks: &[Task<D::Solution>], lineage: &[LineageRecord]) -> Vec<u8> {
    let mut e = Enc { w: Writer::new(MAGIC, VERSION), domain };
    e.header(KIND_INITIAL);
    e.tasks(tasks);
    e.lineage(lineage);
    e.w.finish()
}

pub fn encode_generation<D: Domain>(domain: &D, g: &GenerationRecord<D::Solution>) -> Vec<u8> {
    let mut e = Enc { w: Writer::new(MAGIC, VERSION), domain };
    e.header(KIND_GENERATION);
    e.w.len(g.generation);
    e.side(g.side);
    e.tasks(&g.tasks);
    e.w.len(g.archives.len());
    for a in &g.archives {
        e.archive(a);
    }
    e.tasks(&g.selected);
    e.matrix(&g.tournament);
    e.w.len(g.bootstrap.len());
    for b in &g.bootstrap {
        e.w.len(b.task);
        e.w.u64(b.id);
        e.solution(&b.solution);
        e.fitness(&b.fitness);
        e.w.behavior(&b.behavior);
    }
    e.lineage(&g.lineage);
    e.w.len(g.evaluations.len());
    for r in &g.evaluations {
        e.w.u64(r.id);
        e.w.len(r.task);
        e.w.f64(r.fitness[0]);
        e.w.f64(r.fitness[1]);
        e.w.u64(r.key);
        e.result(&r.result);
    }
    e.w.u64(g.evaluation_count);
    e.w.u64(g.next_id);
    e.w.finish()
}

struct Dec<'a, 'b, D: Domain> {
    r: Reader<'b>,
    domain: &'a D,
}

impl<D: Domain> Dec<'_, '_, D> {
    fn usize(&mut self) -> Result<usize, IoError> {
        let at = self.r.pos();
        usize::try_from(self.r.u64()?).map_err(|_| IoError::Format { at, what: "count out of range".into() })
    }

    fn side(&mut self) -> Result<Side, IoError> {
        match self.r.u8()? {
            0 => Ok(Side::Red),
            1 => Ok(Side::Blue),
            s => Err(self.r.bad(format!("unknown side {s}"))),
        }
    }

    fn fitness(&mut self) -> Result<Fitness, IoError> {
        Ok(Fitness { value: self.r.f64()?, size: self.r.u32()? })
    }

    fn solution(&mut self) -> Result<D::Solution, IoError> {
        let at = self.r.pos();
        let text = self.r.str()?;
        self.domain.decode(&text).map_err(|e| IoError::Format { at, what: e.to_string() })
    }

    fn tasks(&mut self) -> Result<Vec<Task<D::Solution>>, IoError> {
        let n = self.r.len(16)?;
        (0..n).map(|_| Ok(Task { id: self.r.u64()?, solution: self.solution()? })).collect()
    }

    fn elite(&mut self) -> Result<Elite<D::Solution>, IoError> {
        Ok(Elite { id: self.r.u64()?, solution: self.solution()?, fitness: self.fitness()?, behavior: self.r.behavior()? })
    }

    fn mode(&mut self) -> Result<FitnessMode, IoError> {
        match self.r.u8()? {
            0 => Ok(FitnessMode::SingleObjective),
            1 => Ok(FitnessMode::Lexicographic),
            m => Err(self.r.bad(format!("unknown fitness mode {m}"))),
        }
    }

    fn archive(&mut self) -> Result<TaskArchive<D::Solution>, IoError> {
        match self.r.u8()? {
            0 => {
                let capacity = self.usize()?;
                let kind = match self.r.u8()? {
                    0 => crate::archive::DistanceKind::Cosine,
                    1 => crate::archive::DistanceKind::Euclidean,
                    k => return Err(self.r.bad(format!("unknown distance kind {k}"))),
                };
                let mode = self.mode()?;
                let n = self.r.len(1)?;
                let cells = (0..n)
                    .map(|_| Ok(Cell { centroid: self.r.behavior()?, elite: self.elite()?, backup: self.elite()? }))
                    .collect::<Result<Vec<_>, IoError>>()?;
                Ok(TaskArchive::Growing(GrowingArchive::from_parts_unchecked(capacity, kind, mode, cells)))
            }
            1 => {
                let mode = self.mode()?;
                let n = self.r.len(1)?;
                let mut centroids = Vec::with_capacity(n);
                let mut elites = Vec::with_capacity(n);
                for _ in 0..n {
                    centroids.push(self.r.behavior()?);
                    elites.push(match self.r.u8()? {
                        0 => None,
                        1 => Some(self.elite()?),
                        t => return Err(self.r.bad(format!("bad cell tag {t}"))),
                    });
                }
                Ok(TaskArchive::Cvt(FixedCvtArchive::from_parts_unchecked(centroids, elites, mode)))
            }
            t => Err(self.r.bad(format!("unknown archive tag {t}"))),
        }
    }

    fn lineage(&mut self) -> Result<Vec<LineageRecord>, IoError> {
        let n = self.r.len(8)?;
        (0..n)
            .map(|_| {
                let id = self.r.u64()?;
                let np = self.r.len(8)?;
                let parents = (0..np).map(|_| self.r.u64()).collect::<Result<Vec<_>, _>>()?;
                let generation = self.usize()?;
                let operator = match self.r.u8()? {
                    0 => Operator::Random,
                    1 => Operator::Mutation,
                    2 => Operator::Crossover,
                    o => return Err(self.r.bad(format!("unknown operator {o}"))),
                };
                Ok(LineageRecord { id, parents, generation, operator })
            })
            .collect()
    }

    fn ids(&mut self) -> Result<Vec<u64>, IoError> {
        let n = self.r.len(8)?;
        (0..n).map(|_| self.r.u64()).collect()
    }

    fn matrix(&mut self) -> Result<TournamentMatrix, IoError> {
        let row_side = self.side()?;
        let row_ids = self.ids()?;
        let col_ids = self.ids()?;
        let n = self.r.len(32)?;
        let mut entries = Vec::with_capacity(n);
        for _ in 0..n {
            let (f0, k0, b0) = (self.r.f64()?, self.r.u64()?, self.r.behavior()?);
            let (f1, k1, b1) = (self.r.f64()?, self.r.u64()?, self.r.behavior()?);
            entries.push(MatrixEntry { fitness: [f0, f1], keys: [k0, k1], behaviors: [b0, b1] });
        }
        Ok(TournamentMatrix { row_side, row_ids, col_ids, entries })
    }

    fn result(&mut self) -> Result<UpdateResult, IoError> {
        let tag = self.r.u8()?;
        let idx = self.usize()?;
        Ok(match tag {
            0 => UpdateResult::AddedNewCell { cell: idx },
            1 => UpdateResult::GrewReplacedCell { removed: idx },
            2 => UpdateResult::ReplacedElite { cell: idx },
            3 => UpdateResult::Rejected,
            t => return Err(self.r.bad(format!("unknown update result {t}"))),
        })
    }

    fn generation(&mut self) -> Result<GenerationRecord<D::Solution>, IoError> {
        let generation = self.usize()?;
        let side = self.side()?;
        let tasks = self.tasks()?;
        let n = self.r.len(1)?;
        let archives = (0..n).map(|_| self.archive()).collect::<Result<Vec<_>, _>>()?;
        let selected = self.tasks()?;
        let tournament = self.matrix()?;
        let n = self.r.len(1)?;
        let mut bootstrap = Vec::with_capacity(n);
        for _ in 0..n {
            bootstrap.push(BootstrapRecord {
                task: self.usize()?,
                id: self.r.u64()?,
                solution: self.solution()?,
                fitness: self.fitness()?,
                behavior: self.r.behavior()?,
            });
        }
        let lineage = self.lineage()?;
        let n = self.r.len(41)?;
        let mut evaluations = Vec::with_capacity(n);
        for _ in 0..n {
            evaluations.push(EvalRecord {
                id: self.r.u64()?,
                task: self.usize()?,
                fitness: [self.r.f64()?, self.r.f64()?],
                key: self.r.u64()?,
                result: self.result()?,
            });
        }
        Ok(GenerationRecord {
            generation,
            side,
            tasks,
            archives,
            selected,
            tournament,
            bootstrap,
            lineage,
            evaluations,
            evaluation_count: self.r.u64()?,
            next_id: self.r.u64()?,
        })
    }
}

/// Domain name recorded in a snapshot, after checking its checksum.
pub fn snapshot_domain(bytes: &[u8]) -> Result<String, IoError> {
    Reader::open(bytes, MAGIC, VERSION)?.str()
}

/// Decodes without checking archive invariants; see [`check_generation`].
pub fn decode_snapshot_unchecked<D: Domain>(domain: &D, bytes: &[u8]) -> Result<Snapshot<D::Solution>, IoError> {
    let mut d = Dec { r: Reader::open(bytes, MAGIC, VERSION)?, domain };
    let name = d.r.str()?;
    if name != domain.name() {
        return Err(IoError::DomainMismatch { expected: domain.name().into(), found: name });
    }
    let snap = match d.r.u8()? {
        KIND_INITIAL => Snapshot::Initial { tasks: d.tasks()?, lineage: d.lineage()? },
        KIND_GENERATION => Snapshot::Generation(Box::new(d.generation()?)),
        k => return Err(d.r.bad(format!("unknown snapshot kind {k}"))),
    };
    if !d.r.at_end() {
        return Err(d.r.bad("trailing bytes"));
    }
    Ok(snap)
}

/// Decodes and rejects any snapshot whose archives or tables are unsound.
pub fn decode_snapshot<D: Domain>(domain: &D, bytes: &[u8]) -> Result<Snapshot<D::Solution>, IoError> {
    let snap = decode_snapshot_unchecked(domain, bytes)?;
    if let Snapshot::Generation(g) = &snap {
        let bad = check_generation(g);
        if !bad.is_empty() {
            return Err(IoError::Invariants(bad));
        }
    }
    Ok(snap)
}

/// Every structural or archive violation in a generation record, each
/// prefixed with its location.
pub fn check_generation<S: Clone>(g: &GenerationRecord<S>) -> Vec<String> {
    let mut out = Vec::new();
    if g.archives.len() != g.tasks.len() {
        out.push(format!("{} archives for {} tasks", g.archives.len(), g.tasks.len()));
    }
    for (i, a) in g.archives.iter().enumerate() {
        out.extend(a.check_invariants().into_iter().map(|v| format!("archive {i}: {v}")));
    }
    let t = &g.tournament;
    if t.entries.len() != t.rows() * t.cols() {
        out.push(format!("tournament has {} entries for {}x{}", t.entries.len(), t.rows(), t.cols()));
    }
    if let Some(r) = g.bootstrap.iter().find(|r| r.task >= g.selected.len()) {
        out.push(format!("bootstrap record for task {} of {}", r.task, g.selected.len()));
    }
    if let Some(e) = g.evaluations.iter().find(|e| e.task >= g.tasks.len()) {
        out.push(format!("evaluation {} against task {} of {}", e.id, e.task, g.tasks.len()));
    }
    out
}

/// Writes the whole log into `dir`; returns the paths in write order.
pub fn save_log<D: Domain>(domain: &D, log: &GenerationsLog<D::Solution>, dir: &Path) -> Result<Vec<PathBuf>, IoError> {
    let mut paths = vec![dir.join(INITIAL_FILE)];
    write_file(&paths[0], &encode_initial(domain, &log.initial_tasks, &log.initial_lineage))?;
    for g in &log.generations {
        let p = dir.join(generation_file(g.generation));
        write_file(&p, &encode_generation(domain, g))?;
        paths.push(p);
    }
    Ok(paths)
}

pub fn save_generation<D: Domain>(domain: &D, g: &GenerationRecord<D::Solution>, dir: &Path) -> Result<PathBuf, IoError> {
    let p = dir.join(generation_file(g.generation));
    write_file(&p, &encode_generation(domain, g))?;
    Ok(p)
}

pub fn save_initial<D: Domain>(domain: &D, log: &GenerationsLog<D::Solution>, dir: &Path) -> Result<PathBuf, IoError> {
    let p = dir.join(INITIAL_FILE);
    write_file(&p, &encode_initial(domain, &log.initial_tasks, &log.initial_lineage))?;
    Ok(p)
}

/// Loads the initial file and consecutive generation files `gen_0001`,
/// `gen_0002`, ... until the first missing one.
pub fn load_log<D: Domain>(domain: &D, dir: &Path) -> Result<GenerationsLog<D::Solution>, IoError> {
    let (initial_tasks, initial_lineage) = match decode_snapshot(domain, &read_file(&dir.join(INITIAL_FILE))?)? {
        Snapshot::Initial { tasks, lineage } => (tasks, lineage),
        Snapshot::Generation(_) => return Err(IoError::Manifest(format!("{INITIAL_FILE} holds a generation"))),
    };
    let mut generations = Vec::new();
    loop {
        let p = dir.join(generation_file(generations.len() + 1));
        if !p.exists() {
            break;
        }
        match decode_snapshot(domain, &read_file(&p)?)? {
            Snapshot::Generation(g) if g.generation == generations.len() + 1 => generations.push(*g),
            _ => return Err(IoError::Manifest(format!("{} is not generation {}", p.display(), generations.len() + 1))),
        }
    }
    Ok(GenerationsLog { initial_tasks, initial_lineage, generations })
}
