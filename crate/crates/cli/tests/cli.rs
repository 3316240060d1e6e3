use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name).to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ttrecon")).args(args).output().expect("binary runs")
}

fn text(o: &Output) -> String {
    format!("{}{}", String::from_utf8_lossy(&o.stdout), String::from_utf8_lossy(&o.stderr))
}

struct Workdir {
    dir: TempDir,
}

impl Workdir {
    fn new() -> Self {
        Workdir { dir: TempDir::new().unwrap() }
    }

    fn path(&self, name: &str) -> String {
        self.dir.path().join(name).to_string_lossy().into_owned()
    }

    fn models(&self) -> Vec<String> {
        vec![
            "--tasks".into(),
            fixture("tasks.csv"),
            "--messages".into(),
            fixture("messages.csv"),
            "--platform".into(),
            fixture("six_es_platform.txt"),
        ]
    }

    fn cmd(&self, sub: &str, extra: &[&str]) -> Output {
        let mut args: Vec<String> = vec![sub.into()];
        args.extend(self.models());
        args.extend(extra.iter().map(|s| s.to_string()));
        run(&args.iter().map(String::as_str).collect::<Vec<_>>())
    }

    fn schedule(&self) -> Output {
        self.cmd("schedule", &["--out", &self.path("s.txt"), "--out-log", &self.path("s.log")])
    }
}

#[test]
fn schedule_fixture_is_valid() {
    let f = Workdir::new();
    let o = f.schedule();
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    assert!(text(&o).contains("safety check: 0 violation(s)"));
    let v = f.cmd("validate", &["--schedule", &f.path("s.txt")]);
    assert_eq!(v.status.code(), Some(0), "{}", text(&v));

    let o = run(&[
        "schedule",
        "--tasks",
        &fixture("tasks.csv"),
        "--messages",
        &fixture("messages.csv"),
        "--platform",
        &fixture("sample_routes_platform.txt"),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("TASKS:"));
}

#[test]
fn missing_tasks_file_names_the_path() {
    let o = run(&["schedule", "--tasks", "/nonexistent/tasks.csv", "--platform", &fixture("six_es_platform.txt")]);
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o).contains("/nonexistent/tasks.csv"));
}

#[test]
fn corrupt_priorities_rejected() {
    let f = Workdir::new();
    let p = f.path("prio.txt");
    std::fs::write(&p, "TEMPORAL:\n1\n3\n3\n2\n5\n4\n").unwrap();
    let o = f.cmd("schedule", &["--priorities", &p]);
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o).contains("more than once"), "{}", text(&o));
    std::fs::write(&p, "TEMPORAL:\n1\n3\n2\n5\n").unwrap();
    let o = f.cmd("schedule", &["--priorities", &p]);
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o).contains("do not cover task 4"), "{}", text(&o));
}

#[test]
fn external_priorities_are_followed() {
    let f = Workdir::new();
    let p = f.path("prio.txt");
    std::fs::write(&p, "TEMPORAL:\n1\n2\n3\n4\n5\nSPATIAL:\n1,1\n2,1\n3,1\n4,1\n5,1\n").unwrap();
    let o = f.cmd("schedule", &["--priorities", &p, "--out", &f.path("s.txt")]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    let s = std::fs::read_to_string(f.path("s.txt")).unwrap();
    assert!(s.contains("2,1,10,25,0") && s.contains("makespan,100"), "{s}");
}

#[test]
fn es3_failure_recovery() {
    let f = Workdir::new();
    assert_eq!(f.schedule().status.code(), Some(0));
    let o = f.cmd(
        "recover",
        &[
            "--schedule",
            &f.path("s.txt"),
            "--log",
            &f.path("s.log"),
            "--context",
            &fixture("es3_failure_context.csv"),
            "--out",
            &f.path("r.txt"),
            "--out-log",
            &f.path("r.log"),
        ],
    );
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    assert!(text(&o).contains("makespan 81 ->"), "{}", text(&o));
    let r = std::fs::read_to_string(f.path("r.txt")).unwrap();
    assert!(r.contains("1,1,0,10,1"), "{r}");
    let v = f.cmd("validate", &["--schedule", &f.path("r.txt"), "--context", &fixture("es3_failure_context.csv")]);
    assert_eq!(v.status.code(), Some(0), "{}", text(&v));
    // the original schedule still uses ES3 after it fails
    let v = f.cmd("validate", &["--schedule", &f.path("s.txt"), "--context", &fixture("es3_failure_context.csv")]);
    assert_eq!(v.status.code(), Some(2));
    assert!(text(&v).contains("runs on ES3 after it failed at 9"), "{}", text(&v));
}

#[test]
fn slack_equal_to_wcet_changes_nothing() {
    let f = Workdir::new();
    f.schedule();
    let ctx = f.path("ctx.csv");
    std::fs::write(&ctx, "time,kind,payload\n10,slack,1:10\n").unwrap();
    let o = f.cmd(
        "recover",
        &["--schedule", &f.path("s.txt"), "--log", &f.path("s.log"), "--context", &ctx, "--out", &f.path("r.txt")],
    );
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    assert_eq!(std::fs::read(f.path("r.txt")).unwrap(), std::fs::read(f.path("s.txt")).unwrap());
}

#[test]
fn slack_and_mode_events() {
    let f = Workdir::new();
    f.schedule();
    let ctx = f.path("ctx.csv");
    std::fs::write(&ctx, "time,kind,payload\n6,slack,1:6\n").unwrap();
    let o = f.cmd(
        "recover",
        &["--schedule", &f.path("s.txt"), "--log", &f.path("s.log"), "--context", &ctx, "--out", &f.path("r.txt")],
    );
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    assert!(std::fs::read_to_string(f.path("r.txt")).unwrap().contains("1,1,0,6,1"));

    let mt = f.path("modes.csv");
    std::fs::write(&mt, "mode,wcet_mult,active_mult,idle_mult,profile\nslow,2,1,1,energy\n").unwrap();
    std::fs::write(&ctx, "time,kind,payload\n0,mode,slow\n").unwrap();
    let o = f.cmd(
        "recover",
        &["--schedule", &f.path("s.txt"), "--log", &f.path("s.log"), "--context", &ctx, "--mode-table", &mt],
    );
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    assert!(text(&o).contains("1,1,0,20,0"), "{}", text(&o));
    assert!(text(&o).contains("energy,"), "{}", text(&o));
}

#[test]
fn unknown_event_kind_rejected() {
    let f = Workdir::new();
    f.schedule();
    let o = f.cmd(
        "recover",
        &["--schedule", &f.path("s.txt"), "--log", &f.path("s.log"), "--context", &fixture("bad_kind_context.csv")],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o).contains("meteor"));
}

#[test]
fn missing_snapshot_rejected() {
    let f = Workdir::new();
    f.schedule();
    // header of a log with no records
    let full = std::fs::read(f.path("s.log")).unwrap();
    assert!(full.len() > 16);
    let ctx = f.path("ctx.csv");
    std::fs::write(&ctx, "time,kind,payload\n9,failure,ES3\n").unwrap();
    let empty = f.path("empty.log");
    let mut header = full[..16].to_vec();
    header[12..16].copy_from_slice(&0u32.to_le_bytes());
    std::fs::write(&empty, header).unwrap();
    let o = f.cmd("recover", &["--schedule", &f.path("s.txt"), "--log", &empty, "--context", &ctx]);
    assert_eq!(o.status.code(), Some(1), "{}", text(&o));
    assert!(text(&o).contains("no snapshot"), "{}", text(&o));
}

#[test]
fn validate_reports_overlap() {
    let f = Workdir::new();
    f.schedule();
    let s = std::fs::read_to_string(f.path("s.txt")).unwrap();
    // move task 2 onto ES1 during task 1
    let mut moved = false;
    let edited: String = s
        .lines()
        .map(|l| {
            if !moved && l.starts_with("2,") {
                moved = true;
                "2,1,5,20,0".to_string()
            } else {
                l.to_string()
            }
        })
        .collect::<Vec<_>>()
        .join("\n");
    let p = f.path("bad.txt");
    std::fs::write(&p, edited).unwrap();
    let o = f.cmd("validate", &["--schedule", &p]);
    assert_eq!(o.status.code(), Some(2));
    let out = text(&o);
    assert_eq!(out.matches("overlap on ES1").count(), 1, "{out}");
}

#[test]
fn bench_small_and_config_errors() {
    let dir = TempDir::new().unwrap();
    let out: PathBuf = dir.path().join("bench.csv");
    let o = run(&["bench", "--counts", "5,15", "--reps", "2", "--workers", "2", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    let csv = std::fs::read_to_string(&out).unwrap();
    assert_eq!(csv.lines().next(), Some("task_count,profile,mean_runtime_s,log_bytes,recovery_s,workers,wall_s"));
    assert_eq!(csv.lines().count(), 7);

    let o = run(&["bench", "--reps", "0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o).contains("repetitions"));
}
