//! Subcommands of the `game` binary.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};

use clap::{Args, Parser, Subcommand, ValueEnum};
use game_core::analysis::{coverage_qdscore, EloConfig};
use game_core::archive::SolutionId;
use game_core::domains::{Domain, Pusher, Side, Skirmish};
use game_core::evolve::{continue_game, start_log, Context, GenerationsLog, Judge};
use game_core::io::embeddings::decode_embeddings;
use game_core::io::manifest::{DomainParams, RunManifest};
use game_core::io::metrics::{export_metrics, export_projection, export_table, format_real, ProjectionRow};
use game_core::io::snapshot::{decode_snapshot, save_generation, save_initial, snapshot_domain};
use game_core::io::trace::DuelTrace;
use game_core::io::{read_file, write_file, IoError};

use crate::report::{self, Player, DEFAULT_GRID};
use crate::rundir::{self, RunDir, COMPLETE, MANIFEST, METRICS};
use crate::{presets, with_domain, CliError};

#[derive(Parser, Debug)]
#[command(name = "game", version, about = "Generational adversarial MAP-Elites")]
pub struct Cli {
    /// Suppress progress messages on stderr.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Start a run from a manifest or a shipped preset.
    Run(RunArgs),
    /// Continue an interrupted run from its snapshots.
    Resume(ResumeArgs),
    /// Round-robin tournament between the tasks or elites of runs.
    Tournament(TournamentArgs),
    /// Recompute per-generation metrics.
    Metrics(MetricsArgs),
    /// Fit one PCA over several runs and project each of them.
    Project(ProjectArgs),
    /// Replay one duel between two logged solutions and save its trace.
    Replay(ReplayArgs),
    /// Check a manifest, snapshot, embedding file or run directory.
    Validate(ValidateArgs),
    /// Print a preset manifest.
    Preset(PresetArgs),
}

#[derive(Args, Debug, Clone)]
pub struct Jobs {
    /// Worker threads for evaluation batches; never changes results.
    #[arg(long, env = "GAME_JOBS")]
    pub jobs: Option<usize>,
}

#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub preset: Option<String>,
    /// Override a manifest value, e.g. `evolve.n_gen=2`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Parent directory of the run directory.
    #[arg(long, default_value = "runs")]
    pub out: PathBuf,
    #[command(flatten)]
    pub jobs: Jobs,
    /// Stop after this many generations; `resume` finishes the run.
    #[arg(long)]
    pub stop_after: Option<usize>,
    /// Replace an existing run directory holding a different manifest.
    #[arg(long)]
    pub force: bool,
}

#[derive(Args, Debug, Clone)]
pub struct ResumeArgs {
    #[arg(long)]
    pub run: PathBuf,
    #[command(flatten)]
    pub jobs: Jobs,
    #[arg(long)]
    pub stop_after: Option<usize>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum TournamentMode {
    /// Every task set of every generation against the opposing ones.
    Intergenerational,
    /// The best K elites per side of each run.
    TopK,
}

#[derive(Args, Debug, Clone)]
pub struct TournamentArgs {
    #[arg(long = "run", required = true)]
    pub runs: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "intergenerational")]
    pub mode: TournamentMode,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    /// Replaces the duel seed of stochastic domains.
    #[arg(long)]
    pub duel_seed: Option<u64>,
    #[arg(long, default_value_t = 1)]
    pub elo_seed: u64,
    /// Directory receiving matrix.csv and elo.csv.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub jobs: Jobs,
}

#[derive(Args, Debug, Clone)]
pub struct MetricsArgs {
    #[arg(long = "run", required = true)]
    pub runs: Vec<PathBuf>,
    /// Combined CSV; without it each run's metrics.csv is rewritten.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_GRID)]
    pub grid: usize,
    #[command(flatten)]
    pub jobs: Jobs,
}

#[derive(Args, Debug, Clone)]
pub struct ProjectArgs {
    #[arg(long = "run", required = true)]
    pub runs: Vec<PathBuf>,
    /// Directory receiving projection.csv and coverage.csv.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_GRID)]
    pub grid: usize,
}

#[derive(Args, Debug, Clone)]
pub struct ReplayArgs {
    #[arg(long)]
    pub run: PathBuf,
    #[arg(long)]
    pub red: SolutionId,
    #[arg(long)]
    pub blue: SolutionId,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct ValidateArgs {
    pub path: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct PresetArgs {
    /// Preset name; lists the names when omitted.
    pub name: Option<String>,
}

/// Machine-readable result: printed as one `key=value` line on stdout.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct Status {
    pub fields: Vec<(String, String)>,
    /// Extra lines printed before the status line.
    pub lines: Vec<String>,
    /// Validation problems; a non-empty list exits with code 3.
    pub violations: Vec<String>,
}

impl Status {
    fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.fields.push((key.into(), value.to_string()));
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.fields.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for l in &self.lines {
            let _ = writeln!(s, "{l}");
        }
        let state = if self.violations.is_empty() { "ok" } else { "invalid" };
        let _ = write!(s, "status={state}");
        for (k, v) in &self.fields {
            let _ = write!(s, " {k}={}", quote(v));
        }
        s.push('\n');
        s
    }
}

/// Quotes values containing spaces, quotes or `=`.
pub fn quote(v: &str) -> String {
    if v.is_empty() || v.contains([' ', '"', '=', '\n']) {
        format!("{v:?}")
    } else {
        v.to_owned()
    }
}

pub fn error_line(e: &CliError) -> String {
    format!("status=error code={} kind={} message={}\n", e.code(), e.kind(), quote(e.message()))
}

static QUIET: AtomicBool = AtomicBool::new(false);

/// Silences progress messages for the rest of the process.
pub fn set_quiet(quiet: bool) {
    QUIET.store(quiet, Ordering::Relaxed);
}

fn progress(msg: impl AsRef<str>) {
    if !QUIET.load(Ordering::Relaxed) {
        eprintln!("{}", msg.as_ref());
    }
}

fn warn(msg: impl AsRef<str>) {
    eprintln!("warning: {}", msg.as_ref());
}

fn in_pool<T: Send>(jobs: &Jobs, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    match jobs.jobs {
        None => Ok(f()),
        Some(0) => Err(CliError::Usage("--jobs must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Runtime(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

pub fn execute(cmd: Command) -> Result<Status, CliError> {
    match cmd {
        Command::Run(a) => {
            let jobs = a.jobs.clone();
            in_pool(&jobs, || run(&a))?
        }
        Command::Resume(a) => {
            let jobs = a.jobs.clone();
            in_pool(&jobs, || resume(&a))?
        }
        Command::Tournament(a) => {
            let jobs = a.jobs.clone();
            in_pool(&jobs, || tournament(&a))?
        }
        Command::Metrics(a) => {
            let jobs = a.jobs.clone();
            in_pool(&jobs, || metrics(&a))?
        }
        Command::Project(a) => project(&a),
        Command::Replay(a) => replay(&a),
        Command::Validate(a) => validate(&a.path),
        Command::Preset(a) => preset(&a),
    }
}

fn load_manifest(a: &RunArgs) -> Result<RunManifest, CliError> {
    let base = match (&a.manifest, &a.preset) {
        (Some(p), _) => RunManifest::read(p)?,
        (None, Some(name)) => presets::preset(name).ok_or_else(|| {
            CliError::Usage(format!("unknown preset {name:?}; known: {}", presets::NAMES.join(", ")))
        })?,
        (None, None) => return Err(CliError::Usage("give --manifest or --preset".into())),
    };
    let m = base.with_overrides(&a.overrides)?;
    m.validate()?;
    Ok(m)
}

fn same_run(a: &RunManifest, b: &RunManifest) -> bool {
    RunManifest { created: None, ..a.clone() } == RunManifest { created: None, ..b.clone() }
}

fn now_rfc3339() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

pub fn run(a: &RunArgs) -> Result<Status, CliError> {
    let mut m = load_manifest(a)?;
    let dir = a.out.join(&m.run_id);
    let manifest_path = dir.join(MANIFEST);
    if manifest_path.exists() {
        match RunManifest::read(&manifest_path) {
            Ok(old) if same_run(&old, &m) => m.created = old.created,
            _ if a.force => {}
            _ => {
                return Err(CliError::Validation(format!(
                    "{} holds a different run; pass --force to replace it",
                    dir.display()
                )))
            }
        }
    }
    if m.created.is_none() {
        m.created = Some(now_rfc3339());
    }
    for stale in [dir.join(rundir::SNAPSHOTS), dir.join(COMPLETE), dir.join(METRICS)] {
        let removed = if stale.is_dir() { std::fs::remove_dir_all(&stale) } else { std::fs::remove_file(&stale) };
        if let Err(e) = removed {
            if e.kind() != std::io::ErrorKind::NotFound {
                return Err(CliError::Runtime(format!("{}: {e}", stale.display())));
            }
        }
    }
    m.write(&manifest_path)?;
    let rd = RunDir { path: dir, manifest: m };
    with_domain!(&rd.manifest.domain, |d| advance(&rd, &d, None, a.stop_after))
}

pub fn resume(a: &ResumeArgs) -> Result<Status, CliError> {
    let rd = RunDir::open(&a.run)?;
    rd.manifest.validate()?;
    with_domain!(&rd.manifest.domain, |d| {
        let log = rd.load(&d)?;
        advance(&rd, &d, Some(log), a.stop_after)
    })
}

/// Runs or continues `rd` up to `stop_after` (or the configured number of)
/// generations, saving each one. A finished run also gets its metrics and
/// completion marker.
fn advance<D: Domain>(
    rd: &RunDir,
    domain: &D,
    log: Option<GenerationsLog<D::Solution>>,
    stop_after: Option<usize>,
) -> Result<Status, CliError> {
    let cfg = &rd.manifest.evolve;
    let external = rundir::external_table(&rd.manifest)?;
    let ctx = Context { config: cfg, domain, external: external.as_ref() };
    let snaps = rd.snapshots();
    let mut log = match log {
        Some(l) => l,
        None => {
            let l = start_log(&ctx);
            save_initial(domain, &l, &snaps)?;
            l
        }
    };
    let until = stop_after.unwrap_or(cfg.n_gen).min(cfg.n_gen);
    let mut failure = None;
    continue_game(&ctx, &mut log, until, |l| {
        let g = l.generations.last().expect("a generation was just added");
        if failure.is_none() {
            if let Err(e) = save_generation(domain, g, &snaps) {
                failure = Some(e);
            }
        }
        progress(format!("{}: generation {}/{} ({}) done", rd.id(), g.generation, cfg.n_gen, g.side.name()));
    })?;
    if let Some(e) = failure {
        return Err(e.into());
    }
    let done = log.generations.len();
    let status = Status::default()
        .with("command", "run")
        .with("run_id", rd.id())
        .with("run_dir", rd.path.display())
        .with("generations", done);
    if done < cfg.n_gen {
        return Ok(status.with("complete", false));
    }
    let rows = report::run_metrics(rd.id(), domain, cfg, external.as_ref(), &log, DEFAULT_GRID)?;
    export_metrics(&rd.path.join(METRICS), &rows)?;
    let sums = rundir::snapshot_checksums(&snaps)?;
    write_file(&rd.path.join(COMPLETE), rundir::checksum_report(&sums).as_bytes())?;
    Ok(status.with("complete", true).with("snapshots", sums.len()))
}

fn open_runs(paths: &[PathBuf]) -> Result<Vec<RunDir>, CliError> {
    let runs = paths.iter().map(|p| RunDir::open(p)).collect::<Result<Vec<_>, _>>()?;
    let first = &runs[0].manifest.domain;
    for r in &runs[1..] {
        if &r.manifest.domain != first {
            return Err(CliError::Validation(format!(
                "domain of {} differs from {}",
                r.path.display(),
                runs[0].path.display()
            )));
        }
    }
    Ok(runs)
}

fn reseeded(params: &DomainParams, seed: Option<u64>) -> DomainParams {
    match (params, seed) {
        (DomainParams::Skirmish(p), Some(s)) => DomainParams::Skirmish(game_core::domains::SkirmishParams { seed: s, ..p.clone() }),
        (DomainParams::Pusher(_), Some(_)) => {
            warn("pusher duels are deterministic; --duel-seed has no effect");
            params.clone()
        }
        _ => params.clone(),
    }
}

pub fn tournament(a: &TournamentArgs) -> Result<Status, CliError> {
    let runs = open_runs(&a.runs)?;
    let params = reseeded(&runs[0].manifest.domain, a.duel_seed);
    let first = &runs[0].manifest;
    let external = rundir::external_table(first)?;
    with_domain!(&params, |d| {
        let judge = Judge { domain: &d, descriptor: &first.evolve.descriptor, external: external.as_ref(), diversity_only: false };
        let mut players = Vec::new();
        let mut clipped = false;
        for (i, r) in runs.iter().enumerate() {
            let log = r.load(&d)?;
            if log.generations.is_empty() {
                return Err(CliError::Validation(format!("{} has no generations", r.path.display())));
            }
            match a.mode {
                TournamentMode::Intergenerational => players.extend(report::intergenerational_players(i, &log)),
                TournamentMode::TopK => {
                    let (p, c) = report::top_k_players(i, &log, a.k);
                    clipped |= c;
                    players.extend(p);
                }
            }
        }
        if clipped {
            warn(format!("fewer than {} elites on some side; using all available", a.k));
        }
        progress(format!("tournament: {} players", players.len()));
        let elo = EloConfig { seed: a.elo_seed, ..EloConfig::default() };
        let t = report::play_tournament(&judge, players, &elo)?;
        write_tournament(&runs, &t, &d, &a.out)?;
        let mut status = Status::default()
            .with("command", "tournament")
            .with("players", t.ratings.len())
            .with("duels", t.matrix.entries.len())
            .with("clipped", clipped);
        let means = t.mean_rating_by_run();
        for (i, r) in runs.iter().enumerate() {
            if let Some(m) = means.get(&i) {
                status.lines.push(format!("run_elo run_id={} mean={}", quote(r.id()), format_real(*m)));
            }
        }
        Ok(status.with("out", a.out.display()))
    })
}

fn write_tournament<D: Domain>(
    runs: &[RunDir],
    t: &report::Tournament<D::Solution>,
    domain: &D,
    out: &Path,
) -> Result<(), CliError> {
    let name = |p: &Player<D::Solution>| runs[p.run].id().to_owned();
    let mut matrix = Vec::with_capacity(t.matrix.entries.len());
    for (r, red) in t.red.iter().enumerate() {
        for (c, blue) in t.blue.iter().enumerate() {
            let e = t.matrix.get(r, c);
            matrix.push(vec![
                name(red),
                red.generation.to_string(),
                red.task.id.to_string(),
                name(blue),
                blue.generation.to_string(),
                blue.task.id.to_string(),
                format_real(e.fitness[0]),
                format_real(e.fitness[1]),
            ]);
        }
    }
    export_table(
        &out.join("matrix.csv"),
        &["red_run", "red_generation", "red_id", "blue_run", "blue_generation", "blue_id", "red_fitness", "blue_fitness"],
        &matrix,
    )?;
    let elo: Vec<Vec<String>> = t
        .players()
        .zip(&t.ratings)
        .zip(&t.matches)
        .map(|((p, r), n)| {
            vec![
                name(p),
                p.side.name().to_owned(),
                p.generation.to_string(),
                p.task.id.to_string(),
                domain.encode(&p.task.solution),
                format_real(*r),
                n.to_string(),
            ]
        })
        .collect();
    export_table(&out.join("elo.csv"), &["run_id", "side", "generation", "id", "solution", "rating", "matches"], &elo)?;
    Ok(())
}

pub fn metrics(a: &MetricsArgs) -> Result<Status, CliError> {
    let mut all = Vec::new();
    for p in &a.runs {
        let rd = RunDir::open(p)?;
        let external = rundir::external_table(&rd.manifest)?;
        let rows = with_domain!(&rd.manifest.domain, |d| {
            let log = rd.load(&d)?;
            if log.generations.is_empty() {
                return Err(CliError::Validation(format!("{} has no generations", rd.path.display())));
            }
            report::run_metrics(rd.id(), &d, &rd.manifest.evolve, external.as_ref(), &log, a.grid)?
        });
        if a.out.is_none() {
            export_metrics(&rd.path.join(METRICS), &rows)?;
        }
        all.extend(rows);
    }
    if let Some(out) = &a.out {
        export_metrics(out, &all)?;
    }
    Ok(Status::default().with("command", "metrics").with("rows", all.len()))
}

pub fn project(a: &ProjectArgs) -> Result<Status, CliError> {
    let runs = open_runs(&a.runs)?;
    let mut views = Vec::new();
    for r in &runs {
        views.push(with_domain!(&r.manifest.domain, |d| report::elites(&d, &r.load(&d)?)));
    }
    let behaviors: Vec<Vec<f64>> = views.iter().flatten().map(|e| e.behavior.clone()).collect();
    let (pca, bounds) = report::fit_projection(&behaviors)?;
    let mut rows = Vec::with_capacity(behaviors.len());
    let mut coverage = Vec::new();
    for (r, v) in runs.iter().zip(&views) {
        let coords: Vec<[f64; 2]> = v.iter().map(|e| pca.project(&e.behavior)).collect();
        let fit: Vec<f64> = v.iter().map(|e| e.fitness).collect();
        rows.extend(v.iter().zip(&coords).map(|(e, c)| ProjectionRow {
            run_id: r.id().into(),
            behavior_key: e.key,
            pc: *c,
            fitness: e.fitness,
        }));
        let cov = coverage_qdscore(&coords, &fit, a.grid, Some(bounds))?;
        coverage.push(vec![r.id().into(), format_real(cov.coverage), format_real(cov.qd_score), cov.filled.to_string()]);
    }
    export_projection(&a.out.join("projection.csv"), &rows)?;
    export_table(&a.out.join("coverage.csv"), &["run_id", "coverage", "qd_score", "filled"], &coverage)?;
    let components: Vec<Vec<String>> = (0..pca.mean.len())
        .map(|i| vec![i.to_string(), format_real(pca.mean[i]), format_real(pca.components[0][i]), format_real(pca.components[1][i])])
        .collect();
    export_table(&a.out.join("components.csv"), &["dim", "mean", "pc1", "pc2"], &components)?;
    let mut status = Status::default().with("command", "project").with("points", rows.len());
    for c in &coverage {
        status.lines.push(format!("run_coverage run_id={} coverage={} qd_score={}", quote(&c[0]), c[1], c[2]));
    }
    Ok(status
        .with("explained_pc1", format_real(pca.explained[0]))
        .with("explained_pc2", format_real(pca.explained[1]))
        .with("out", a.out.display()))
}

/// Every solution named anywhere in a log, by id.
fn solutions_by_id<S: Clone>(log: &GenerationsLog<S>) -> HashMap<SolutionId, S> {
    let mut out = HashMap::new();
    for t in &log.initial_tasks {
        out.entry(t.id).or_insert_with(|| t.solution.clone());
    }
    for g in &log.generations {
        for t in g.tasks.iter().chain(&g.selected) {
            out.entry(t.id).or_insert_with(|| t.solution.clone());
        }
        for e in g.archives.iter().flat_map(|a| a.elites()) {
            out.entry(e.id).or_insert_with(|| e.solution.clone());
        }
    }
    out
}

pub fn replay(a: &ReplayArgs) -> Result<Status, CliError> {
    let rd = RunDir::open(&a.run)?;
    with_domain!(&rd.manifest.domain, |d| {
        let all = solutions_by_id(&rd.load(&d)?);
        let find = |id| all.get(&id).ok_or_else(|| CliError::Validation(format!("solution {id} is not in the log")));
        let (red, blue) = (find(a.red)?, find(a.blue)?);
        let o = d.evaluate(red, blue)?;
        let trace = DuelTrace::new(&d, red, blue, &o);
        trace.write(&a.out)?;
        Ok(Status::default()
            .with("command", "replay")
            .with("fitness_red", format_real(o.fitness[0]))
            .with("fitness_blue", format_real(o.fitness[1]))
            .with("winner", o.winner.map_or("none", Side::name))
            .with("frames", trace.frames.len())
            .with("out", a.out.display()))
    })
}

fn violations_of(path: &Path, e: CliError) -> Vec<String> {
    match e {
        CliError::Validation(m) | CliError::Runtime(m) | CliError::Usage(m) => vec![format!("{}: {m}", path.display())],
    }
}

fn check_snapshot_bytes<D: Domain>(domain: &D, path: &Path, bytes: &[u8]) -> Vec<String> {
    match decode_snapshot(domain, bytes) {
        Ok(_) => vec![],
        Err(IoError::Invariants(v)) => v.into_iter().map(|m| format!("{}: {m}", path.display())).collect(),
        Err(e) => violations_of(path, e.into()),
    }
}

/// Domain parameters for a snapshot: from the run's manifest when the
/// file sits in a run directory, else the defaults of the named domain.
fn snapshot_params(path: &Path, name: &str) -> Result<DomainParams, CliError> {
    let manifest = path.parent().and_then(Path::parent).map(|d| d.join(MANIFEST));
    if let Some(m) = manifest.filter(|m| m.exists()) {
        return Ok(RunManifest::read(&m)?.domain);
    }
    match name {
        "skirmish" => Ok(DomainParams::Skirmish(Default::default())),
        "pusher" => Ok(DomainParams::Pusher(Default::default())),
        other => Err(CliError::Validation(format!("unknown domain {other:?}"))),
    }
}

fn check_snapshot(path: &Path) -> Result<Vec<String>, CliError> {
    let bytes = read_file(path)?;
    let name = match snapshot_domain(&bytes) {
        Ok(n) => n,
        Err(e) => return Ok(violations_of(path, e.into())),
    };
    let params = snapshot_params(path, &name)?;
    if params.name() != name {
        return Ok(vec![format!("{}: snapshot domain {name} differs from the manifest's {}", path.display(), params.name())]);
    }
    Ok(match &params {
        DomainParams::Skirmish(p) => check_snapshot_bytes(&Skirmish::new(p.clone())?, path, &bytes),
        DomainParams::Pusher(p) => check_snapshot_bytes(&Pusher::new(p.clone())?, path, &bytes),
    })
}

fn check_manifest(path: &Path) -> Vec<String> {
    match RunManifest::read(path).and_then(|m| m.validate()) {
        Ok(()) => vec![],
        Err(e) => violations_of(path, e.into()),
    }
}

fn check_run_dir(dir: &Path) -> Result<Vec<String>, CliError> {
    let manifest = dir.join(MANIFEST);
    let mut out = check_manifest(&manifest);
    let snaps = dir.join(rundir::SNAPSHOTS);
    if !snaps.is_dir() {
        out.push(format!("{}: missing", snaps.display()));
        return Ok(out);
    }
    let sums = rundir::snapshot_checksums(&snaps)?;
    for (name, _) in &sums {
        out.extend(check_snapshot(&snaps.join(name))?);
    }
    let marker = dir.join(COMPLETE);
    if marker.exists() {
        let recorded = String::from_utf8_lossy(&read_file(&marker)?).into_owned();
        if recorded != rundir::checksum_report(&sums) {
            out.push(format!("{}: snapshot checksums differ from the completion record", marker.display()));
        }
    }
    Ok(out)
}

pub fn validate(path: &Path) -> Result<Status, CliError> {
    if !path.exists() {
        return Err(CliError::Usage(format!("{} does not exist", path.display())));
    }
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
    let (kind, violations) = if path.is_dir() {
        ("run", check_run_dir(path)?)
    } else {
        match ext {
            "json" => ("manifest", check_manifest(path)),
            "gsnp" => ("snapshot", check_snapshot(path)?),
            "gemb" => ("embeddings", match decode_embeddings(&read_file(path)?) {
                Ok(_) => vec![],
                Err(e) => violations_of(path, e.into()),
            }),
            _ => return Err(CliError::Usage(format!("cannot tell what {} is; expected .json, .gsnp, .gemb or a run directory", path.display()))),
        }
    };
    let mut status = Status::default().with("command", "validate").with("kind", kind).with("violations", violations.len());
    status.lines = violations.iter().map(|v| format!("violation {}", quote(v))).collect();
    status.violations = violations;
    Ok(status)
}

pub fn preset(a: &PresetArgs) -> Result<Status, CliError> {
    match &a.name {
        None => {
            let mut s = Status::default().with("command", "preset");
            s.lines = presets::NAMES.iter().map(|n| n.to_string()).collect();
            Ok(s)
        }
        Some(n) => {
            let m = presets::preset(n).ok_or_else(|| CliError::Usage(format!("unknown preset {n:?}")))?;
            let mut s = Status::default().with("command", "preset").with("name", n);
            s.lines.push(m.to_json().trim_end().to_owned());
            Ok(s)
        }
    }
}
