//! Independent validation of a finished schedule.

use std::collections::BTreeMap;
use std::fmt;

use super::schedule::{MessageEntry, Schedule, TaskEntry};
use super::state::transmission_duration;
use crate::ids::{EsId, Link, TaskId, Time};
use crate::models::{ApplicationModel, PlatformModel};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    MissingTask(TaskId),
    DuplicateTask(TaskId),
    UnknownTask(TaskId),
    UnknownEs {
        task: TaskId,
        es: EsId,
    },
    MissingMessage {
        tx: TaskId,
        rx: TaskId,
    },
    /// Child starts before the message from its parent has arrived.
    Precedence {
        tx: TaskId,
        rx: TaskId,
        arrival: Time,
        start: Time,
    },
    /// Message leaves (or arrives) before its sender has finished.
    EarlyDeparture {
        tx: TaskId,
        rx: TaskId,
        departure: Time,
        sender_end: Time,
    },
    /// Reservations do not follow the route, are not store-and-forward, or
    /// have the wrong length.
    BadTransmission {
        tx: TaskId,
        rx: TaskId,
        reason: String,
    },
    EsOverlap {
        es: EsId,
        first: TaskId,
        second: TaskId,
    },
    Collision {
        link: Link,
        first: (TaskId, TaskId),
        second: (TaskId, TaskId),
    },
    FailedEs {
        task: TaskId,
        es: EsId,
        failed_at: Time,
    },
    FailedLink {
        tx: TaskId,
        rx: TaskId,
        link: Link,
        failed_at: Time,
    },
    DurationMismatch {
        task: TaskId,
        expected: Time,
        actual: Time,
    },
    Makespan {
        declared: Time,
        actual: Time,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            MissingTask(t) => write!(f, "task {t} is not scheduled"),
            DuplicateTask(t) => write!(f, "task {t} is scheduled more than once"),
            UnknownTask(t) => write!(f, "task {t} is not part of the application"),
            UnknownEs { task, es } => write!(f, "task {task} runs on undeclared {es}"),
            MissingMessage { tx, rx } => write!(f, "message {tx}->{rx} is not allocated"),
            Precedence { tx, rx, arrival, start } => {
                write!(f, "precedence: task {rx} starts at {start} before message from {tx} arrives at {arrival}")
            }
            EarlyDeparture { tx, rx, departure, sender_end } => {
                write!(f, "precedence: message {tx}->{rx} leaves at {departure} before {tx} ends at {sender_end}")
            }
            BadTransmission { tx, rx, reason } => write!(f, "message {tx}->{rx}: {reason}"),
            EsOverlap { es, first, second } => write!(f, "overlap on {es}: tasks {first} and {second}"),
            Collision { link, first, second } => {
                write!(f, "collision on {link}: messages {}->{} and {}->{}", first.0, first.1, second.0, second.1)
            }
            FailedEs { task, es, failed_at } => write!(f, "task {task} runs on {es} after it failed at {failed_at}"),
            FailedLink { tx, rx, link, failed_at } => {
                write!(f, "message {tx}->{rx} uses {link} after its end system failed at {failed_at}")
            }
            DurationMismatch { task, expected, actual } => {
                write!(f, "task {task} occupies {actual} time units, expected {expected}")
            }
            Makespan { declared, actual } => write!(f, "makespan {declared} differs from the task entries ({actual})"),
        }
    }
}

/// Every violation found in `s` against the models; empty iff valid.
pub fn safety_check(s: &Schedule, am: &ApplicationModel, pm: &PlatformModel) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut entries: BTreeMap<TaskId, &TaskEntry> = BTreeMap::new();
    for e in &s.task_entries {
        if !am.contains(e.task) {
            out.push(Violation::UnknownTask(e.task));
        } else if entries.insert(e.task, e).is_some() {
            out.push(Violation::DuplicateTask(e.task));
        }
    }
    for t in am.task_ids() {
        if !entries.contains_key(&t) {
            out.push(Violation::MissingTask(t));
        }
    }

    for e in entries.values() {
        if pm.end_system(e.es).is_none() {
            out.push(Violation::UnknownEs { task: e.task, es: e.es });
            continue;
        }
        if let Some(failed_at) = pm.failure_time(e.es) {
            if e.end > failed_at {
                out.push(Violation::FailedEs { task: e.task, es: e.es, failed_at });
            }
        }
        if !e.locked {
            let expected = am.effective_duration(e.task).expect("known task");
            if e.end < e.start || e.end - e.start != expected {
                out.push(Violation::DurationMismatch { task: e.task, expected, actual: e.end.saturating_sub(e.start) });
            }
        }
    }

    let messages: BTreeMap<(TaskId, TaskId), &MessageEntry> =
        s.message_entries.iter().map(|m| ((m.tx, m.rx), m)).collect();
    for rec in am.messages() {
        let (Some(tx), Some(rx)) = (entries.get(&rec.tx), entries.get(&rec.rx)) else {
            continue;
        };
        let Some(m) = messages.get(&(rec.tx, rec.rx)) else {
            out.push(Violation::MissingMessage { tx: rec.tx, rx: rec.rx });
            continue;
        };
        check_message(m, rec.size, tx, rx, pm, &mut out);
    }

    let mut per_es: BTreeMap<EsId, Vec<(Time, Time, TaskId)>> = BTreeMap::new();
    for e in entries.values() {
        per_es.entry(e.es).or_default().push((e.start, e.end, e.task));
    }
    for (es, list) in per_es {
        for (first, second) in overlaps(list) {
            out.push(Violation::EsOverlap { es, first, second });
        }
    }

    type Edge = (TaskId, TaskId);
    let mut per_link: BTreeMap<Link, Vec<(Time, Time, Edge)>> = BTreeMap::new();
    for m in &s.message_entries {
        for r in &m.reservations {
            per_link.entry(r.link).or_default().push((r.start, r.end, (m.tx, m.rx)));
        }
    }
    for (link, list) in per_link {
        for (first, second) in overlaps(list) {
            out.push(Violation::Collision { link, first, second });
        }
    }

    let actual = entries.values().map(|e| e.end).max().unwrap_or(0);
    if s.makespan != actual {
        out.push(Violation::Makespan { declared: s.makespan, actual });
    }
    out
}

fn check_message(
    m: &MessageEntry,
    size: u64,
    tx: &TaskEntry,
    rx: &TaskEntry,
    pm: &PlatformModel,
    out: &mut Vec<Violation>,
) {
    let bad = |reason: String| Violation::BadTransmission { tx: m.tx, rx: m.rx, reason };
    if rx.start < m.arrival {
        out.push(Violation::Precedence { tx: m.tx, rx: m.rx, arrival: m.arrival, start: rx.start });
    }
    let departure = m.departure().unwrap_or(m.arrival);
    if departure < tx.end {
        out.push(Violation::EarlyDeparture { tx: m.tx, rx: m.rx, departure, sender_end: tx.end });
    }
    if let Some(last) = m.reservations.last() {
        if m.arrival < last.end {
            out.push(bad(format!("arrival {} precedes the last hop end {}", m.arrival, last.end)));
        }
    }

    let duration = transmission_duration(size, pm.link_bandwidth());
    let full = pm.route_ignoring_failures(tx.es, rx.es).ok();
    let expected: Vec<Vec<Link>> = match full {
        _ if duration == 0 => vec![Vec::new()],
        None => Vec::new(),
        Some(full) if pm.is_live(tx.es) || full.is_empty() => vec![full],
        // sender failed: sent before the failure, or re-sent from its egress router
        Some(full) => vec![full[1..].to_vec(), full],
    };
    let links: Vec<Link> = m.reservations.iter().map(|r| r.link).collect();
    if !expected.contains(&links) {
        out.push(bad(format!("links [{}] do not follow the route {} -> {}", join(&links), tx.es, rx.es)));
    }
    let mut prev_end = None;
    for r in &m.reservations {
        if r.end < r.start || r.end - r.start != duration {
            out.push(bad(format!(
                "reservation on {} lasts {} instead of {duration}",
                r.link,
                r.end.saturating_sub(r.start)
            )));
        }
        if prev_end.is_some_and(|p| r.start < p) {
            out.push(bad(format!("hop on {} starts before the previous hop ends", r.link)));
        }
        prev_end = Some(r.end);
    }

    for (es, failed_at) in pm.failed() {
        for r in &m.reservations {
            if r.link.touches_es(es) && r.start >= failed_at {
                out.push(Violation::FailedLink { tx: m.tx, rx: m.rx, link: r.link, failed_at });
            }
        }
    }
}

fn join(links: &[Link]) -> String {
    links.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(", ")
}

/// Pairs of overlapping half-open intervals. Empty intervals never overlap.
fn overlaps<K: Copy + Ord>(mut list: Vec<(Time, Time, K)>) -> Vec<(K, K)> {
    list.retain(|&(s, e, _)| e > s);
    list.sort();
    let mut out = Vec::new();
    let mut active: Vec<(Time, K)> = Vec::new();
    for (s, e, k) in list {
        active.retain(|&(end, _)| end > s);
        for &(_, other) in &active {
            out.push((other, k));
        }
        active.push((e, k));
    }
    out
}
