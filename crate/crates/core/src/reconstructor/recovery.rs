//! Full reconstruction and the two recovery paths.

use std::collections::BTreeMap;

use super::engine::{message_route, Engine};
use super::log::{snapshot_restore_at, RecoveryLog};
use super::safety::safety_check;
use super::schedule::{MessageEntry, Reservation, Schedule, TaskEntry};
use super::state::{transmission_duration, Snapshot};
use crate::context::EventKind;
use crate::error::{Error, Result};
use crate::ids::{Link, TaskId, Time};
use crate::models::{ApplicationModel, PlatformModel};
use crate::priorities::{built_in_temporal, SpatialPriorities, TemporalPriorities};

fn ensure_safe(s: &Schedule, am: &ApplicationModel, pm: &PlatformModel) -> Result<()> {
    let violations = safety_check(s, am, pm);
    match violations.first() {
        None => Ok(()),
        Some(first) => Err(Error::Unsafe { count: violations.len(), first: first.to_string() }),
    }
}

/// Builds a schedule from scratch and logs the engine state along the way.
pub fn reconstruct_full(
    am: &ApplicationModel,
    pm: &PlatformModel,
    tp: &TemporalPriorities,
    sp: &SpatialPriorities,
) -> Result<(Schedule, RecoveryLog)> {
    let mut engine = Engine::new(am, pm, tp, sp, 0, Snapshot::new(pm.es_ids()))?.with_log();
    engine.run()?;
    let (schedule, log) = engine.into_parts();
    ensure_safe(&schedule, am, pm)?;
    Ok((schedule, log.expect("log enabled")))
}

/// State of a fresh [`reconstruct_full`] run stopped as soon as nothing more
/// can start at or before `halt`, projected to `halt`.
pub fn reconstruct_until(
    am: &ApplicationModel,
    pm: &PlatformModel,
    tp: &TemporalPriorities,
    sp: &SpatialPriorities,
    halt: Time,
) -> Result<Snapshot> {
    let mut engine = Engine::new(am, pm, tp, sp, 0, Snapshot::new(pm.es_ids()))?;
    engine.run_until(Some(halt))?;
    Ok(engine.state().project(halt))
}

/// Splits recorded entries at `t` into the part that stays: finished entries
/// verbatim, and tasks already running on a live end system with their end
/// recomputed. Both come back locked. Messages are kept only into kept tasks.
fn keep_past<'a>(
    am: &ApplicationModel,
    pm: &PlatformModel,
    tasks: impl IntoIterator<Item = &'a TaskEntry>,
    messages: impl IntoIterator<Item = &'a MessageEntry>,
    t: Time,
) -> Result<Snapshot> {
    let mut kept = Snapshot::new(pm.es_ids());
    for e in tasks {
        let duration = am.effective_duration(e.task).ok_or(Error::UnknownTask(e.task))?;
        if e.end <= t {
            kept.commit_task(TaskEntry { locked: true, ..*e });
        } else if e.start < t && pm.is_live(e.es) {
            kept.commit_task(TaskEntry { end: e.start + duration, locked: true, ..*e });
        }
    }
    for m in messages {
        if kept.task_entries.contains_key(&m.rx) {
            kept.commit_message(m.clone());
        }
    }
    Ok(kept)
}

/// Reschedules everything not yet under way at `event_time`, placing by
/// least-loaded only. When plain list scheduling would end later than an
/// order-preserving compaction of `prior`, the compaction is returned.
pub fn reconstruct_temporal(
    am: &ApplicationModel,
    pm: &PlatformModel,
    prior: &Schedule,
    tp: &TemporalPriorities,
    event_time: Time,
) -> Result<(Schedule, Time)> {
    let kept = keep_past(am, pm, &prior.task_entries, &prior.message_entries, event_time)?;
    let sp = SpatialPriorities::LeastLoaded;
    let mut engine = Engine::new(am, pm, tp, &sp, event_time, kept.clone())?;
    engine.run()?;
    let (mut best, _) = engine.into_parts();
    if let Some(compact) = compact(am, pm, prior, &kept, event_time) {
        if compact.makespan < best.makespan && safety_check(&compact, am, pm).is_empty() {
            best = compact;
        }
    }
    ensure_safe(&best, am, pm)?;
    let makespan = best.makespan;
    Ok((best, makespan))
}

/// Restores the latest snapshot at or before `event_time` and fires an
/// intermediate schedule from there, with built-in priorities over the live
/// end systems of `pm`.
pub fn recover_failure(
    am: &ApplicationModel,
    pm: &PlatformModel,
    log: &RecoveryLog,
    event_time: Time,
    event: &EventKind,
) -> Result<(Schedule, Time)> {
    if let EventKind::Failure { es } = event {
        if pm.end_system(*es).is_none() {
            return Err(Error::UnknownEs(*es));
        }
    }
    let (_, snap) = snapshot_restore_at(log, event_time)?;
    let kept = keep_past(am, pm, snap.task_entries.values(), snap.message_entries.values(), event_time)?;
    let tp = built_in_temporal(am)?;
    let sp = SpatialPriorities::LeastLoaded;
    let mut engine = Engine::new(am, pm, &tp, &sp, event_time, kept)?;
    engine.run()?;
    let (schedule, _) = engine.into_parts();
    ensure_safe(&schedule, am, pm)?;
    let makespan = schedule.makespan;
    Ok((schedule, makespan))
}

/// Something with a start time that waits on other items.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Item {
    Task(TaskId),
    Hop(TaskId, TaskId, usize),
}

/// Pulls every not-yet-started entry of `prior` as early as its resource
/// order and data dependencies allow, keeping ES, routes and the order on
/// every end system and link. With durations no longer than in `prior`,
/// nothing ends later than before. `None` when the prior placement is no
/// longer usable (failed end system or changed route).
fn compact(am: &ApplicationModel, pm: &PlatformModel, prior: &Schedule, kept: &Snapshot, t: Time) -> Option<Schedule> {
    let moving: Vec<&TaskEntry> =
        prior.task_entries.iter().filter(|e| !kept.task_entries.contains_key(&e.task)).collect();
    if moving.len() + kept.task_entries.len() != am.len() || moving.iter().any(|e| !pm.is_live(e.es)) {
        return None;
    }
    let by_task: BTreeMap<TaskId, &TaskEntry> = prior.task_entries.iter().map(|e| (e.task, e)).collect();

    // messages already on the wire at t stay as they are
    let mut fixed = kept.clone();
    let mut resend: Vec<&MessageEntry> = Vec::new();
    for m in &prior.message_entries {
        if kept.message_entries.contains_key(&(m.tx, m.rx)) {
            continue;
        }
        if m.departure().is_some_and(|d| d < t) {
            fixed.commit_message(m.clone());
            continue;
        }
        let (tx, rx) = (by_task.get(&m.tx)?, by_task.get(&m.rx)?);
        let route = message_route(pm, tx.es, rx.es).ok()?;
        let links: Vec<Link> = m.reservations.iter().map(|r| r.link).collect();
        let size = am.message(m.tx, m.rx)?.size;
        if transmission_duration(size, pm.link_bandwidth()) > 0 && links != route {
            return None;
        }
        resend.push(m);
    }

    // resource predecessors in prior order; finished and running tasks precede t
    let mut prev: BTreeMap<Item, Item> = BTreeMap::new();
    let mut es_floor: BTreeMap<Item, Time> = BTreeMap::new();
    let mut per_es: BTreeMap<_, Vec<(Time, TaskId)>> = BTreeMap::new();
    for e in &moving {
        per_es.entry(e.es).or_default().push((e.start, e.task));
    }
    for (es, mut list) in per_es {
        list.sort();
        es_floor.insert(Item::Task(list[0].1), fixed.es_busy_until.get(&es).copied().unwrap_or(0));
        for w in list.windows(2) {
            prev.insert(Item::Task(w[1].1), Item::Task(w[0].1));
        }
    }
    // hops of messages still on the wire at t keep their slot in the link order
    let mut start: BTreeMap<Item, Time> = BTreeMap::new();
    let mut per_link: BTreeMap<Link, Vec<(Time, Item)>> = BTreeMap::new();
    for m in fixed.message_entries.values().filter(|m| !kept.message_entries.contains_key(&(m.tx, m.rx))) {
        for (i, r) in m.reservations.iter().enumerate() {
            let item = Item::Hop(m.tx, m.rx, i);
            start.insert(item, r.start);
            per_link.entry(r.link).or_default().push((r.start, item));
        }
    }
    for m in &resend {
        for (i, r) in m.reservations.iter().enumerate() {
            per_link.entry(r.link).or_default().push((r.start, Item::Hop(m.tx, m.rx, i)));
        }
    }
    for (_, mut list) in per_link {
        list.sort();
        for w in list.windows(2) {
            prev.insert(w[1].1, w[0].1);
        }
    }

    let mut order: Vec<(Time, Item)> = moving.iter().map(|e| (e.start, Item::Task(e.task))).collect();
    for m in &resend {
        order.extend(m.reservations.iter().enumerate().map(|(i, r)| (r.start, Item::Hop(m.tx, m.rx, i))));
    }
    order.sort();

    let bw = pm.link_bandwidth();
    let duration = |item: Item| match item {
        Item::Task(task) => am.effective_duration(task).expect("known task"),
        Item::Hop(tx, rx, _) => transmission_duration(am.message(tx, rx).expect("edge").size, bw),
    };
    let task_end = |start: &BTreeMap<Item, Time>, task: TaskId| -> Time {
        match fixed.task_entries.get(&task) {
            Some(e) => e.end,
            None => start.get(&Item::Task(task)).copied().unwrap_or(0) + duration(Item::Task(task)),
        }
    };
    let arrival = |start: &BTreeMap<Item, Time>, tx: TaskId, rx: TaskId| -> Time {
        if let Some(m) = fixed.message_entries.get(&(tx, rx)) {
            return m.arrival;
        }
        let hops = by_task_hops(prior, tx, rx);
        if hops == 0 {
            task_end(start, tx).max(t)
        } else {
            start.get(&Item::Hop(tx, rx, hops - 1)).copied().unwrap_or(0) + duration(Item::Hop(tx, rx, 0))
        }
    };

    // least fixpoint from below; converges within one pass per chain link
    let mut settled = false;
    for _ in 0..=order.len() + 1 {
        let mut changed = false;
        for &(_, item) in &order {
            let mut s = t.max(es_floor.get(&item).copied().unwrap_or(0));
            if let Some(p) = prev.get(&item) {
                s = s.max(start.get(p).copied().unwrap_or(0) + duration(*p));
            }
            match item {
                Item::Task(task) => {
                    for p in &am.task(task).expect("known task").parents {
                        s = s.max(arrival(&start, *p, task));
                    }
                }
                Item::Hop(tx, _, 0) => s = s.max(task_end(&start, tx)),
                Item::Hop(tx, rx, i) => {
                    s = s.max(start.get(&Item::Hop(tx, rx, i - 1)).copied().unwrap_or(0) + duration(item))
                }
            }
            if start.get(&item) != Some(&s) {
                start.insert(item, s);
                changed = true;
            }
        }
        if !changed {
            settled = true;
            break;
        }
    }
    if !settled {
        return None;
    }

    let mut tasks: Vec<TaskEntry> = fixed.task_entries.values().copied().collect();
    tasks.extend(moving.iter().map(|e| {
        let s = start[&Item::Task(e.task)];
        TaskEntry { start: s, end: s + duration(Item::Task(e.task)), locked: false, ..**e }
    }));
    let mut messages: Vec<MessageEntry> = fixed.message_entries.values().cloned().collect();
    for m in &resend {
        let reservations: Vec<Reservation> = m
            .reservations
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let s = start[&Item::Hop(m.tx, m.rx, i)];
                Reservation { link: r.link, start: s, end: s + duration(Item::Hop(m.tx, m.rx, i)) }
            })
            .collect();
        messages.push(MessageEntry { tx: m.tx, rx: m.rx, reservations, arrival: arrival(&start, m.tx, m.rx) });
    }
    Some(Schedule::new(tasks, messages))
}

fn by_task_hops(prior: &Schedule, tx: TaskId, rx: TaskId) -> usize {
    prior.message(tx, rx).map_or(0, |m| m.reservations.len())
}
