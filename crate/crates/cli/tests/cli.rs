use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use game_core::archive::{Cell, GrowingArchive, TaskArchive};
use game_core::domains::{Pusher, PusherParams};
use game_core::io::snapshot::{encode_generation, load_log};

fn game(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_game")).args(args).env_remove("GAME_JOBS").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn status_line(o: &Output) -> String {
    stdout(o).lines().last().unwrap_or_default().to_owned()
}

fn small_run(out: &Path, id: &str, extra: &[&str]) -> PathBuf {
    let out_s = out.to_str().unwrap();
    let run_id = format!("run_id={id}");
    let mut args = vec!["run", "--preset", "pusher_desk", "--set", "evolve.N_gen=2", "--set", &run_id, "--out", out_s];
    args.extend_from_slice(extra);
    let o = game(&args);
    assert!(o.status.success(), "{}\n{}", stdout(&o), String::from_utf8_lossy(&o.stderr));
    out.join(id)
}

fn file(p: &Path) -> Vec<u8> {
    std::fs::read(p).unwrap()
}

#[test]
fn run_writes_the_run_directory() {
    let t = tempfile::tempdir().unwrap();
    let dir = small_run(t.path(), "r", &[]);
    let snaps: Vec<_> = std::fs::read_dir(dir.join("snapshots")).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(snaps.len(), 3);
    assert!(dir.join("snapshots/gen_0002.gsnp").exists());
    assert!(!dir.join("snapshots/gen_0003.gsnp").exists());
    let complete = String::from_utf8(file(&dir.join("COMPLETE"))).unwrap();
    assert_eq!(complete.lines().count(), 3);
    let metrics = String::from_utf8(file(&dir.join("metrics.csv"))).unwrap();
    assert_eq!(metrics.lines().count(), 1 + 2 * game_cli::report::METRIC_NAMES.len());
    assert!(metrics.starts_with("run_id,generation,metric,value\n"));
}

#[test]
fn outputs_do_not_depend_on_jobs_or_repetition() {
    let t = tempfile::tempdir().unwrap();
    let a = small_run(&t.path().join("a"), "r", &["--jobs", "1"]);
    let b = small_run(&t.path().join("b"), "r", &["--jobs", "4"]);
    for f in ["COMPLETE", "metrics.csv", "snapshots/gen_0002.gsnp"] {
        assert_eq!(file(&a.join(f)), file(&b.join(f)), "{f}");
    }
    let before: Vec<_> = ["manifest.json", "COMPLETE", "metrics.csv"].iter().map(|f| file(&a.join(f))).collect();
    small_run(&t.path().join("a"), "r", &[]);
    let after: Vec<_> = ["manifest.json", "COMPLETE", "metrics.csv"].iter().map(|f| file(&a.join(f))).collect();
    assert_eq!(before, after);
}

#[test]
fn conflicting_run_directory_needs_force() {
    let t = tempfile::tempdir().unwrap();
    small_run(t.path(), "r", &[]);
    let out = t.path().to_str().unwrap();
    let o = game(&["run", "--preset", "pusher_desk", "--set", "run_id=r", "--set", "evolve.master_seed=9", "--out", out, "--stop-after", "1"]);
    assert_eq!(o.status.code(), Some(3));
    let o = game(&[
        "run", "--preset", "pusher_desk", "--set", "run_id=r", "--set", "evolve.master_seed=9", "--out", out, "--stop-after", "1", "--force",
    ]);
    assert!(o.status.success());
    assert!(!t.path().join("r/COMPLETE").exists());
    assert!(!t.path().join("r/snapshots/gen_0002.gsnp").exists());
}

#[test]
fn errors_map_to_exit_codes() {
    let t = tempfile::tempdir().unwrap();
    let out = t.path().to_str().unwrap();
    let o = game(&["run", "--preset", "pusher_desk", "--set", "evolve.no_such_key=1", "--out", out]);
    assert_eq!(o.status.code(), Some(3));
    let line = status_line(&o);
    assert!(line.starts_with("status=error code=3 kind=validation message="), "{line}");
    assert!(line.contains("no_such_key"));

    let o = game(&["run", "--bogus-flag"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(status_line(&o).starts_with("status=error code=2"));

    let o = game(&["run", "--preset", "nope", "--out", out]);
    assert_eq!(o.status.code(), Some(2));

    let o = game(&["resume", "--run", t.path().join("missing").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn resume_finishes_an_interrupted_run_identically() {
    let t = tempfile::tempdir().unwrap();
    let full = small_run(&t.path().join("full"), "r", &[]);
    let part = small_run(&t.path().join("part"), "r", &["--stop-after", "1"]);
    assert!(!part.join("COMPLETE").exists());
    let o = game(&["resume", "--run", part.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(status_line(&o).contains("complete=true"));
    for f in ["COMPLETE", "metrics.csv", "snapshots/initial.gsnp", "snapshots/gen_0001.gsnp", "snapshots/gen_0002.gsnp"] {
        assert_eq!(file(&full.join(f)), file(&part.join(f)), "{f}");
    }
}

#[test]
fn validate_reports_damage() {
    let t = tempfile::tempdir().unwrap();
    let dir = small_run(t.path(), "r", &[]);
    let v = |p: &Path| game(&["validate", p.to_str().unwrap()]);
    for p in [dir.clone(), dir.join("manifest.json"), dir.join("snapshots/gen_0001.gsnp")] {
        let o = v(&p);
        assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    }

    let snap = dir.join("snapshots/gen_0001.gsnp");
    let pristine = file(&snap);
    let mut flipped = pristine.clone();
    flipped[pristine.len() / 2] ^= 0x04;
    std::fs::write(&snap, &flipped).unwrap();
    let o = v(&snap);
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o).contains("checksum"), "{}", stdout(&o));
    let o = v(&dir);
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o).contains("completion record"));
    std::fs::write(&snap, &pristine).unwrap();

    // move one elite onto another cell's centroid
    let pusher = Pusher::new(PusherParams::default()).unwrap();
    let mut log = load_log(&pusher, &dir.join("snapshots")).unwrap();
    let g = &mut log.generations[0];
    let TaskArchive::Growing(a) = &g.archives[2] else { panic!() };
    let mut cells: Vec<Cell<_>> = a.cells().to_vec();
    cells[0].elite = cells[1].backup.clone();
    g.archives[2] = TaskArchive::Growing(GrowingArchive::from_parts_unchecked(a.capacity(), a.kind(), a.mode(), cells));
    std::fs::write(&snap, encode_generation(&pusher, g)).unwrap();
    let o = v(&snap);
    assert_eq!(o.status.code(), Some(3));
    let text = stdout(&o);
    assert!(text.contains("archive 2: cell 0") && text.contains("hole"), "{text}");
    assert!(status_line(&o).starts_with("status=invalid"));

    let bad = t.path().join("bad.json");
    std::fs::write(&bad, r#"{"schema_version": 7}"#).unwrap();
    let o = v(&bad);
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o).contains("schema_version 7"));
}

#[test]
fn tournament_writes_matrix_and_ratings() {
    let t = tempfile::tempdir().unwrap();
    let a = small_run(t.path(), "a", &["--set", "evolve.N_task=5"]);
    let b = small_run(t.path(), "b", &["--set", "evolve.N_task=5", "--set", "evolve.master_seed=2"]);
    let out = t.path().join("tour");
    let o = game(&["tournament", "--run", a.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stdout(&o));
    // red: generation 1; blue: initial tasks and generation 2
    assert!(status_line(&o).contains("duels=50"));
    let matrix = String::from_utf8(file(&out.join("matrix.csv"))).unwrap();
    assert_eq!(matrix.lines().count(), 51);
    let elo = String::from_utf8(file(&out.join("elo.csv"))).unwrap();
    assert_eq!(elo.lines().count(), 16);

    let o = game(&[
        "tournament", "--mode", "top-k", "--k", "1000", "--run", a.to_str().unwrap(), "--run", b.to_str().unwrap(), "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(status_line(&o).contains("clipped=true"));
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning"));
    assert_eq!(stdout(&o).lines().filter(|l| l.starts_with("run_elo")).count(), 2);

    let sk = t.path().join("sk");
    let o = game(&[
        "run", "--preset", "skirmish_desk", "--set", "evolve.N_gen=1", "--set", "evolve.N_budget=20", "--set", "evolve.N_task=2",
        "--set", "evolve.N_init=4", "--out", sk.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stdout(&o));
    let o = game(&[
        "tournament", "--run", a.to_str().unwrap(), "--run", sk.join("skirmish_desk").to_str().unwrap(), "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(status_line(&o).contains("domain"));
}

#[test]
fn metrics_project_and_replay() {
    let t = tempfile::tempdir().unwrap();
    let runs: Vec<PathBuf> = (1..=3).map(|s| small_run(t.path(), &format!("s{s}"), &["--set", &format!("evolve.master_seed={s}")])).collect();
    let mut args = vec!["metrics".to_string()];
    for r in &runs {
        args.extend(["--run".into(), r.to_str().unwrap().into()]);
    }
    let combined = t.path().join("all.csv");
    args.extend(["--out".into(), combined.to_str().unwrap().into()]);
    let argv: Vec<&str> = args.iter().map(String::as_str).collect();
    assert!(game(&argv).status.success());
    let first = file(&combined);
    assert_eq!(String::from_utf8_lossy(&first).lines().count(), 1 + 3 * 2 * 8);
    assert!(game(&argv).status.success());
    assert_eq!(file(&combined), first);
    // the per-run file matches what `run` wrote
    let own = file(&runs[0].join("metrics.csv"));
    assert!(game(&["metrics", "--run", runs[0].to_str().unwrap()]).status.success());
    assert_eq!(file(&runs[0].join("metrics.csv")), own);

    let proj = t.path().join("proj");
    let mut args = vec!["project".to_string()];
    for r in &runs {
        args.extend(["--run".into(), r.to_str().unwrap().into()]);
    }
    args.extend(["--out".into(), proj.to_str().unwrap().into()]);
    let argv: Vec<&str> = args.iter().map(String::as_str).collect();
    let o = game(&argv);
    assert!(o.status.success(), "{}", stdout(&o));
    assert_eq!(stdout(&o).lines().filter(|l| l.starts_with("run_coverage")).count(), 3);
    let coverage = String::from_utf8(file(&proj.join("coverage.csv"))).unwrap();
    assert_eq!(coverage.lines().count(), 4);
    let projection = String::from_utf8(file(&proj.join("projection.csv"))).unwrap();
    assert!(projection.starts_with("run_id,behavior_key,pc1,pc2,fitness\n"));
    for id in ["s1", "s2", "s3"] {
        assert!(projection.lines().any(|l| l.starts_with(&format!("{id},"))));
    }

    let trace = t.path().join("trace.json");
    let o = game(&["replay", "--run", runs[0].to_str().unwrap(), "--red", "0", "--blue", "1", "--out", trace.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stdout(&o));
    let parsed = game_core::io::trace::DuelTrace::read(&trace).unwrap();
    assert_eq!(parsed.domain, "pusher");
    assert_eq!(parsed.fitness[0] + parsed.fitness[1], 1.0);
    let o = game(&["replay", "--run", runs[0].to_str().unwrap(), "--red", "999999", "--blue", "1", "--out", trace.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn presets_print_as_manifests() {
    let o = game(&["preset"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), game_cli::presets::NAMES.len() + 1);
    let o = game(&["preset", "one_sided"]);
    let text = stdout(&o);
    let json = &text[..text.rfind("status=").unwrap()];
    let m = game_core::io::manifest::RunManifest::from_json(json).unwrap();
    assert_eq!(m, game_cli::presets::preset("one_sided").unwrap());
}
