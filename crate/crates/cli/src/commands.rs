use std::io::Write;

use anyhow::{anyhow, Context};
use ttrecon::bench::{run_bench, to_csv, BenchConfig};
use ttrecon::context::{apply_events, ordered_events};
use ttrecon::{
    apply_failure, apply_mode, apply_slack, built_in_temporal, evaluate, ingest_priorities, reconstruct_full,
    reconstruct_temporal, recover_failure, safety_check, ApplicationModel, ContextEvent, Error, EventKind,
    PlatformModel, Profile, RecoveryLog, Schedule, SpatialPriorities, TemporalPriorities,
};

use crate::{load, BenchArgs, RecoverArgs, ScheduleArgs, ValidateArgs};

pub enum Failure {
    /// Bad input or an engine error: exit 1.
    Load(anyhow::Error),
    /// The schedule violates the models: exit 2.
    Invalid(usize),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Load(e)
    }
}

type Outcome = Result<(), Failure>;

/// Engine errors are input problems, except a failed safety check.
fn engine<T>(r: ttrecon::Result<T>) -> Result<T, Failure> {
    match r {
        Ok(v) => Ok(v),
        Err(Error::Unsafe { count, first }) => {
            eprintln!("engine produced an unsafe schedule: {first}");
            Err(Failure::Invalid(count))
        }
        Err(e) => Err(Failure::Load(e.into())),
    }
}

/// Report goes to stdout unless the schedule itself does.
fn report(to_stdout: bool, text: &str) {
    if to_stdout {
        print!("{text}");
    } else {
        eprint!("{text}");
    }
}

fn safety_report(s: &Schedule, am: &ApplicationModel, pm: &PlatformModel) -> (usize, String) {
    let violations = safety_check(s, am, pm);
    let mut text = format!("safety check: {} violation(s)\n", violations.len());
    for v in &violations {
        text.push_str(&format!("  {v}\n"));
    }
    (violations.len(), text)
}

fn priorities(
    path: Option<&std::path::Path>,
    am: &ApplicationModel,
    pm: &PlatformModel,
) -> anyhow::Result<(TemporalPriorities, SpatialPriorities)> {
    match path {
        Some(p) => {
            ingest_priorities(&load::read(p)?, am, pm).with_context(|| format!("invalid priorities {}", p.display()))
        }
        None => Ok((built_in_temporal(am)?, SpatialPriorities::LeastLoaded)),
    }
}

fn emit_schedule(out: Option<&std::path::Path>, s: &Schedule) -> anyhow::Result<()> {
    match out {
        Some(p) => load::write(p, s.to_text()),
        None => {
            std::io::stdout().write_all(s.to_text().as_bytes())?;
            Ok(())
        }
    }
}

pub fn schedule(a: ScheduleArgs) -> Outcome {
    let (mut am, mut pm) = load::models(&a.models)?;
    let mt = load::mode_table(a.mode_table.as_deref())?;
    let mut profile = Profile::Makespan;
    if let Some(p) = load::profile(a.profile.as_deref())? {
        profile = p;
        if let Some(mode) = mt.for_profile(p) {
            let e = ContextEvent::mode(0, &mode.0);
            (am, pm, profile) = apply_mode(&am, &pm, &e, &mt).map_err(anyhow::Error::from)?;
        }
    }
    let (tp, sp) = priorities(a.priorities.as_deref(), &am, &pm)?;
    let (s, log) = engine(reconstruct_full(&am, &pm, &tp, &sp))?;

    emit_schedule(a.out.as_deref(), &s)?;
    if let Some(p) = &a.out_log {
        load::write(p, log.to_bytes())?;
    }
    let (n, text) = safety_report(&s, &am, &pm);
    let eval = evaluate(&s, &am, &pm, profile);
    let to_stdout = a.out.is_some();
    report(to_stdout, &text);
    report(to_stdout, &format!("{}\n{}\n", ttrecon::Evaluation::CSV_HEADER, eval.csv_record()));
    if n > 0 {
        return Err(Failure::Invalid(n));
    }
    Ok(())
}

pub fn recover(a: RecoverArgs) -> Outcome {
    let (mut am, mut pm) = load::models(&a.models)?;
    let mt = load::mode_table(a.mode_table.as_deref())?;
    let mut profile = load::profile(a.profile.as_deref())?.unwrap_or(Profile::Makespan);
    let mut current = load::schedule(&a.schedule)?;
    let mut log = load::log(&a.log)?;
    let events = load::context(&a.context)?;
    let to_stdout = a.out.is_some();

    for e in ordered_events(&events) {
        let before = current.makespan;
        let (next_am, next_pm, next_profile) = match &e.kind {
            EventKind::Slack { .. } => (apply_slack(&am, &e).map_err(anyhow::Error::from)?, pm.clone(), profile),
            EventKind::Failure { .. } => (am.clone(), apply_failure(&pm, &e).map_err(anyhow::Error::from)?, profile),
            EventKind::ModeChange { .. } => apply_mode(&am, &pm, &e, &mt).map_err(anyhow::Error::from)?,
        };
        profile = next_profile;
        if next_am == am && next_pm == pm {
            report(to_stdout, &format!("{e}: models unchanged, makespan {before}\n"));
            continue;
        }
        (am, pm) = (next_am, next_pm);
        current = match &e.kind {
            EventKind::Slack { .. } => {
                let (tp, _) = priorities(a.priorities.as_deref(), &am, &pm)?;
                engine(reconstruct_temporal(&am, &pm, &current, &tp, e.time))?.0
            }
            EventKind::Failure { .. } => engine(recover_failure(&am, &pm, &log, e.time, &e.kind))?.0,
            EventKind::ModeChange { .. } => {
                let (tp, sp) = priorities(a.priorities.as_deref(), &am, &pm)?;
                engine(reconstruct_full(&am, &pm, &tp, &sp))?.0
            }
        };
        log = RecoveryLog::from_schedule(&current, pm.es_ids());
        report(to_stdout, &format!("{e}: makespan {before} -> {}\n", current.makespan));
    }

    emit_schedule(a.out.as_deref(), &current)?;
    if let Some(p) = &a.out_log {
        load::write(p, log.to_bytes())?;
    }
    let (n, text) = safety_report(&current, &am, &pm);
    report(to_stdout, &text);
    let eval = evaluate(&current, &am, &pm, profile);
    report(to_stdout, &format!("{}\n{}\n", ttrecon::Evaluation::CSV_HEADER, eval.csv_record()));
    if n > 0 {
        return Err(Failure::Invalid(n));
    }
    Ok(())
}

pub fn validate(a: ValidateArgs) -> Outcome {
    let (mut am, mut pm) = load::models(&a.models)?;
    let s = load::schedule(&a.schedule)?;
    if let Some(path) = &a.context {
        let events = load::context(path)?;
        let mt = load::mode_table(a.mode_table.as_deref())?;
        (am, pm, _) = apply_events(&am, &pm, &events, &mt, Profile::Makespan).map_err(anyhow::Error::from)?;
    }
    let (n, text) = safety_report(&s, &am, &pm);
    print!("{text}");
    if n > 0 {
        return Err(Failure::Invalid(n));
    }
    Ok(())
}

pub fn bench(a: BenchArgs) -> Outcome {
    let profiles = match load::profile(a.profile.as_deref())? {
        Some(p) => vec![p],
        None => Profile::ALL.to_vec(),
    };
    let cfg = BenchConfig { task_counts: a.counts, reps: a.reps, seed: a.seed, profiles, workers: a.workers };
    let records = run_bench(&cfg).map_err(|e| anyhow!(e))?;
    let csv = to_csv(&records);
    match &a.out {
        Some(p) => load::write(p, csv)?,
        None => print!("{csv}"),
    }
    Ok(())
}
