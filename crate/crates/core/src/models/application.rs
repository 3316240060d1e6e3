use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ids::{TaskId, Time};
use crate::text::{self, parse_num, Row};

const TASKS_HEADER: &str = "task_id,parents,children,wcet,message_size";
const MESSAGES_HEADER: &str = "tx,rx,size";

/// One node of the task graph.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Task {
    pub id: TaskId,
    pub parents: BTreeSet<TaskId>,
    pub children: BTreeSet<TaskId>,
    pub wcet: Time,
    /// Payload in KB sent to each child unless an explicit message record says otherwise.
    pub message_size: u64,
}

impl Task {
    pub fn new(id: u32, parents: &[u32], children: &[u32], wcet: Time, message_size: u64) -> Self {
        Task {
            id: TaskId(id),
            parents: parents.iter().copied().map(TaskId).collect(),
            children: children.iter().copied().map(TaskId).collect(),
            wcet,
            message_size,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MessageRecord {
    pub tx: TaskId,
    pub rx: TaskId,
    /// KB.
    pub size: u64,
}

#[derive(Serialize, Deserialize)]
struct RawApplication {
    tasks: Vec<Task>,
    messages: Vec<MessageRecord>,
    #[serde(default)]
    actual_execution: BTreeMap<TaskId, Time>,
}

/// A validated, acyclic task graph with one message record per edge.
///
/// Immutable once built; context operators return modified copies.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawApplication", into = "RawApplication")]
pub struct ApplicationModel {
    tasks: Vec<Task>,
    index: BTreeMap<TaskId, usize>,
    messages: BTreeMap<(TaskId, TaskId), MessageRecord>,
    actual_execution: BTreeMap<TaskId, Time>,
}

impl TryFrom<RawApplication> for ApplicationModel {
    type Error = Error;

    fn try_from(raw: RawApplication) -> Result<Self> {
        let mut am = ApplicationModel::new(raw.tasks, raw.messages)?;
        for (task, actual) in raw.actual_execution {
            am.set_actual(task, actual)?;
        }
        Ok(am)
    }
}

impl From<ApplicationModel> for RawApplication {
    fn from(am: ApplicationModel) -> Self {
        RawApplication {
            messages: am.messages.values().copied().collect(),
            tasks: am.tasks,
            actual_execution: am.actual_execution,
        }
    }
}

impl ApplicationModel {
    /// Validates the graph and fills in a message record for every edge that
    /// has no explicit one, using the sender's `message_size`.
    pub fn new(tasks: Vec<Task>, explicit: Vec<MessageRecord>) -> Result<Self> {
        let mut index = BTreeMap::new();
        for (i, t) in tasks.iter().enumerate() {
            if index.insert(t.id, i).is_some() {
                return Err(Error::Consistency(format!("duplicate task id {}", t.id)));
            }
        }
        for t in &tasks {
            for p in &t.parents {
                let parent = index
                    .get(p)
                    .map(|&i| &tasks[i])
                    .ok_or_else(|| Error::Consistency(format!("task {} lists unknown parent {p}", t.id)))?;
                if !parent.children.contains(&t.id) {
                    return Err(Error::Consistency(format!(
                        "task {} lists parent {p}, but {p} does not list it as a child",
                        t.id
                    )));
                }
            }
            for c in &t.children {
                let child = index
                    .get(c)
                    .map(|&i| &tasks[i])
                    .ok_or_else(|| Error::Consistency(format!("task {} lists unknown child {c}", t.id)))?;
                if !child.parents.contains(&t.id) {
                    return Err(Error::Consistency(format!(
                        "task {} lists child {c}, but {c} does not list it as a parent",
                        t.id
                    )));
                }
            }
        }

        let mut messages = BTreeMap::new();
        for m in explicit {
            let is_edge = index.get(&m.tx).is_some_and(|&i| tasks[i].children.contains(&m.rx));
            if !is_edge {
                return Err(Error::Consistency(format!("message {}->{} is not an edge of the task graph", m.tx, m.rx)));
            }
            if messages.insert((m.tx, m.rx), m).is_some() {
                return Err(Error::Consistency(format!("duplicate message {}->{}", m.tx, m.rx)));
            }
        }
        for t in &tasks {
            for &c in &t.children {
                messages.entry((t.id, c)).or_insert(MessageRecord { tx: t.id, rx: c, size: t.message_size });
            }
        }

        let am = ApplicationModel { tasks, index, messages, actual_execution: BTreeMap::new() };
        am.topological_order()?;
        Ok(am)
    }

    pub fn empty() -> Self {
        ApplicationModel {
            tasks: Vec::new(),
            index: BTreeMap::new(),
            messages: BTreeMap::new(),
            actual_execution: BTreeMap::new(),
        }
    }

    /// Parses the `tasks` file and, when given, the `messages` file.
    pub fn from_csv(tasks: &str, messages: Option<&str>) -> Result<Self> {
        let table = text::table(tasks)?;
        let parsed = table.body(TASKS_HEADER).iter().map(parse_task_row).collect::<Result<Vec<_>>>()?;
        let explicit = match messages {
            Some(src) => {
                let table = text::table(src)?;
                table.body(MESSAGES_HEADER).iter().map(parse_message_row).collect::<Result<Vec<_>>>()?
            }
            None => Vec::new(),
        };
        ApplicationModel::new(parsed, explicit)
    }

    /// Canonical `tasks` file.
    pub fn tasks_csv(&self) -> String {
        let mut out = String::from(TASKS_HEADER);
        out.push('\n');
        let list = |ids: &BTreeSet<TaskId>| {
            if ids.is_empty() {
                "-".to_string()
            } else {
                ids.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(";")
            }
        };
        for t in &self.tasks {
            let _ = writeln!(out, "{},{},{},{},{}", t.id, list(&t.parents), list(&t.children), t.wcet, t.message_size);
        }
        out
    }

    /// Canonical `messages` file (explicit and synthesized records alike).
    pub fn messages_csv(&self) -> String {
        let mut out = String::from(MESSAGES_HEADER);
        out.push('\n');
        for m in self.messages.values() {
            let _ = writeln!(out, "{},{},{}", m.tx, m.rx, m.size);
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("application model serializes")
    }

    pub fn from_json(src: &str) -> Result<Self> {
        serde_json::from_str(src).map_err(|e| Error::parse(e.to_string()))
    }

    pub fn tasks(&self) -> &[Task] {
        &self.tasks
    }

    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    pub fn task(&self, id: TaskId) -> Option<&Task> {
        self.index.get(&id).map(|&i| &self.tasks[i])
    }

    pub fn contains(&self, id: TaskId) -> bool {
        self.index.contains_key(&id)
    }

    pub fn task_ids(&self) -> impl Iterator<Item = TaskId> + '_ {
        self.tasks.iter().map(|t| t.id)
    }

    pub fn messages(&self) -> impl Iterator<Item = &MessageRecord> {
        self.messages.values()
    }

    pub fn message(&self, tx: TaskId, rx: TaskId) -> Option<&MessageRecord> {
        self.messages.get(&(tx, rx))
    }

    pub fn actual_execution(&self, id: TaskId) -> Option<Time> {
        self.actual_execution.get(&id).copied()
    }

    /// Duration a placement of `id` occupies: the recorded actual execution
    /// when present, the wcet otherwise.
    pub fn effective_duration(&self, id: TaskId) -> Option<Time> {
        let task = self.task(id)?;
        Some(self.actual_execution.get(&id).copied().unwrap_or(task.wcet))
    }

    pub(crate) fn set_actual(&mut self, id: TaskId, actual: Time) -> Result<()> {
        let wcet = self.task(id).ok_or(Error::UnknownTask(id))?.wcet;
        if actual > wcet {
            return Err(Error::Overrun { task: id, actual, wcet });
        }
        if actual == wcet {
            self.actual_execution.remove(&id);
        } else {
            self.actual_execution.insert(id, actual);
        }
        Ok(())
    }

    /// Rewrites every wcet and recorded actual execution through `f`.
    pub(crate) fn map_durations(&mut self, f: impl Fn(Time) -> Time) {
        for t in &mut self.tasks {
            t.wcet = f(t.wcet);
        }
        for v in self.actual_execution.values_mut() {
            *v = f(*v);
        }
    }

    /// Kahn's algorithm; among simultaneously available tasks the smallest id
    /// comes first.
    pub fn topological_order(&self) -> Result<Vec<TaskId>> {
        let mut indegree: BTreeMap<TaskId, usize> = self.tasks.iter().map(|t| (t.id, t.parents.len())).collect();
        let mut ready: BTreeSet<TaskId> = indegree.iter().filter(|(_, &d)| d == 0).map(|(&id, _)| id).collect();
        let mut order = Vec::with_capacity(self.tasks.len());
        while let Some(id) = ready.pop_first() {
            order.push(id);
            for c in &self.task(id).expect("indexed").children {
                let d = indegree.get_mut(c).expect("validated child");
                *d -= 1;
                if *d == 0 {
                    ready.insert(*c);
                }
            }
        }
        if order.len() != self.tasks.len() {
            return Err(Error::Cycle);
        }
        Ok(order)
    }
}

fn parse_id_list(row: &Row<'_>, field: &str) -> Result<Vec<u32>> {
    let field = field.trim();
    if field == "-" || field.is_empty() {
        return Ok(Vec::new());
    }
    field.split(';').map(|s| parse_num(row, s.trim(), "task id")).collect()
}

fn parse_task_row(row: &Row<'_>) -> Result<Task> {
    let f = row.expect(5)?;
    Ok(Task::new(
        parse_num(row, f[0], "task id")?,
        &parse_id_list(row, f[1])?,
        &parse_id_list(row, f[2])?,
        parse_num(row, f[3], "wcet")?,
        parse_num(row, f[4], "message size")?,
    ))
}

fn parse_message_row(row: &Row<'_>) -> Result<MessageRecord> {
    let f = row.expect(3)?;
    Ok(MessageRecord {
        tx: TaskId(parse_num(row, f[0], "task id")?),
        rx: TaskId(parse_num(row, f[1], "task id")?),
        size: parse_num(row, f[2], "message size")?,
    })
}
