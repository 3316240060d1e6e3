use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ids::{EsId, Link, TaskId, Time};
use crate::text::{self, parse_num};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskEntry {
    pub task: TaskId,
    pub es: EsId,
    pub start: Time,
    pub end: Time,
    /// Executed before a context event and carried over unchanged.
    pub locked: bool,
}

/// Half-open occupation `[start, end)` of one link.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reservation {
    pub link: Link,
    pub start: Time,
    pub end: Time,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MessageEntry {
    pub tx: TaskId,
    pub rx: TaskId,
    /// In route order, store-and-forward.
    pub reservations: Vec<Reservation>,
    pub arrival: Time,
}

impl MessageEntry {
    pub fn departure(&self) -> Option<Time> {
        self.reservations.first().map(|r| r.start)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    /// Sorted by task id.
    pub task_entries: Vec<TaskEntry>,
    /// Sorted by (tx, rx).
    pub message_entries: Vec<MessageEntry>,
    pub makespan: Time,
}

const TASKS_HEADER: &str = "task,es,start,end,locked";
const MESSAGES_HEADER: &str = "tx,rx,link,start,end";

impl Schedule {
    pub fn new(mut task_entries: Vec<TaskEntry>, mut message_entries: Vec<MessageEntry>) -> Self {
        task_entries.sort_by_key(|e| e.task);
        message_entries.sort_by_key(|m| (m.tx, m.rx));
        let makespan = task_entries.iter().map(|e| e.end).max().unwrap_or(0);
        Schedule { task_entries, message_entries, makespan }
    }

    pub fn entry(&self, task: TaskId) -> Option<&TaskEntry> {
        self.task_entries.binary_search_by_key(&task, |e| e.task).ok().map(|i| &self.task_entries[i])
    }

    pub fn message(&self, tx: TaskId, rx: TaskId) -> Option<&MessageEntry> {
        self.message_entries.binary_search_by_key(&(tx, rx), |m| (m.tx, m.rx)).ok().map(|i| &self.message_entries[i])
    }

    /// Schedule file: `TASKS:` then `MESSAGES:` (one line per reservation;
    /// messages without reservations use link `-` and their arrival as both
    /// times), then `makespan,<value>`.
    pub fn to_text(&self) -> String {
        let mut out = format!("TASKS:\n{TASKS_HEADER}\n");
        for e in &self.task_entries {
            let _ = writeln!(out, "{},{},{},{},{}", e.task, e.es.0, e.start, e.end, u8::from(e.locked));
        }
        let _ = writeln!(out, "MESSAGES:\n{MESSAGES_HEADER}");
        for m in &self.message_entries {
            if m.reservations.is_empty() {
                let _ = writeln!(out, "{},{},-,{},{}", m.tx, m.rx, m.arrival, m.arrival);
            }
            for r in &m.reservations {
                let _ = writeln!(out, "{},{},{},{},{}", m.tx, m.rx, r.link, r.start, r.end);
            }
        }
        let _ = writeln!(out, "makespan,{}", self.makespan);
        out
    }

    pub fn from_text(src: &str) -> Result<Self> {
        let mut tasks = Vec::new();
        let mut messages: BTreeMap<(TaskId, TaskId), MessageEntry> = BTreeMap::new();
        let mut declared_makespan = None;
        for sec in text::sections(src) {
            match sec.name.as_deref() {
                None if sec.rows.is_empty() => {}
                None => return Err(sec.rows[0].err("row outside of any section")),
                Some("TASKS") => {
                    for row in sec.body(TASKS_HEADER) {
                        let f = row.expect(5)?;
                        let locked = match f[4] {
                            "1" | "true" => true,
                            "0" | "false" => false,
                            other => return Err(row.err(format!("invalid locked flag `{other}`"))),
                        };
                        tasks.push(TaskEntry {
                            task: TaskId(parse_num(row, f[0], "task id")?),
                            es: f[1].parse().map_err(|e: Error| e.at_line(row.line))?,
                            start: parse_num(row, f[2], "start")?,
                            end: parse_num(row, f[3], "end")?,
                            locked,
                        });
                    }
                }
                Some("MESSAGES") => {
                    for row in sec.body(MESSAGES_HEADER) {
                        let f = row.fields();
                        if f.len() == 2 && f[0] == "makespan" {
                            declared_makespan = Some(parse_num::<Time>(row, f[1], "makespan")?);
                            continue;
                        }
                        let f = row.expect(5)?;
                        let tx = TaskId(parse_num(row, f[0], "task id")?);
                        let rx = TaskId(parse_num(row, f[1], "task id")?);
                        let start: Time = parse_num(row, f[3], "start")?;
                        let end: Time = parse_num(row, f[4], "end")?;
                        let entry = messages.entry((tx, rx)).or_insert(MessageEntry {
                            tx,
                            rx,
                            reservations: Vec::new(),
                            arrival: 0,
                        });
                        if f[2] == "-" {
                            entry.arrival = end;
                        } else {
                            let link: Link = f[2].parse().map_err(|e: Error| e.at_line(row.line))?;
                            entry.reservations.push(Reservation { link, start, end });
                            entry.arrival = end;
                        }
                    }
                }
                Some(other) => return Err(Error::parse(format!("unknown schedule section `{other}:`"))),
            }
        }
        let schedule = Schedule::new(tasks, messages.into_values().collect());
        if let Some(m) = declared_makespan {
            if m != schedule.makespan {
                return Err(Error::Consistency(format!(
                    "declared makespan {m} differs from the task entries ({})",
                    schedule.makespan
                )));
            }
        }
        Ok(schedule)
    }
}
