//! Temporal (dispatch order) and spatial (end-system choice) priorities:
//! the built-in bottom-level and least-loaded algorithms plus ingestion of
//! externally produced priority files.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::ids::{EsId, TaskId, Time};
use crate::models::{ApplicationModel, PlatformModel};
use crate::text::{self, parse_num};

/// Total dispatch order over the task set, highest priority first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TemporalPriorities {
    pub order: Vec<TaskId>,
    /// b-level scores when the order came from [`temporal_order`].
    pub values: Option<BTreeMap<TaskId, Time>>,
}

impl TemporalPriorities {
    pub fn from_order(order: Vec<TaskId>) -> Self {
        TemporalPriorities { order, values: None }
    }

    /// Position of every task in the order (0 = highest priority).
    pub(crate) fn ranks(&self) -> BTreeMap<TaskId, usize> {
        self.order.iter().enumerate().map(|(i, &t)| (t, i)).collect()
    }

    pub(crate) fn covers(&self, am: &ApplicationModel) -> Result<()> {
        let mut seen = BTreeSet::new();
        for &t in &self.order {
            if !am.contains(t) {
                return Err(Error::UnknownTask(t));
            }
            if !seen.insert(t) {
                return Err(Error::DuplicateTask(t));
            }
        }
        match am.task_ids().find(|t| !seen.contains(t)) {
            Some(missing) => Err(Error::MissingTask(missing)),
            None => Ok(()),
        }
    }
}

/// Where each task runs. Tasks without an assignment are placed on the least
/// loaded live end system when they are dispatched.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub enum SpatialPriorities {
    #[default]
    LeastLoaded,
    Assigned(BTreeMap<TaskId, EsId>),
}

impl SpatialPriorities {
    pub fn assignment(&self, task: TaskId) -> Option<EsId> {
        match self {
            SpatialPriorities::LeastLoaded => None,
            SpatialPriorities::Assigned(map) => map.get(&task).copied(),
        }
    }
}

/// Bottom level of every task: its own wcet plus the largest bottom level
/// among its children. Communication does not contribute.
pub fn b_level(am: &ApplicationModel) -> Result<BTreeMap<TaskId, Time>> {
    let order = am.topological_order()?;
    let mut levels = BTreeMap::new();
    for &id in order.iter().rev() {
        let task = am.task(id).expect("ordered task exists");
        let tail = task.children.iter().map(|c| levels[c]).max().unwrap_or(0);
        levels.insert(id, task.wcet + tail);
    }
    Ok(levels)
}

/// Descending score, ascending id on ties.
pub fn temporal_order(levels: &BTreeMap<TaskId, Time>) -> TemporalPriorities {
    let mut order: Vec<TaskId> = levels.keys().copied().collect();
    order.sort_by(|a, b| levels[b].cmp(&levels[a]).then(a.cmp(b)));
    TemporalPriorities { order, values: Some(levels.clone()) }
}

/// Built-in temporal priorities for `am`.
pub fn built_in_temporal(am: &ApplicationModel) -> Result<TemporalPriorities> {
    Ok(temporal_order(&b_level(am)?))
}

/// End system with the smallest load; lowest id on ties.
pub fn least_loaded(loads: &BTreeMap<EsId, Time>) -> Result<EsId> {
    loads.iter().min_by(|a, b| a.1.cmp(b.1).then(a.0.cmp(b.0))).map(|(&es, _)| es).ok_or(Error::EmptyPlatform)
}

/// Reads a priority file (`TEMPORAL:` one task id per line, `SPATIAL:` lines
/// `task_id,es_id`). A missing section falls back to the built-in algorithm.
pub fn ingest_priorities(
    src: &str,
    am: &ApplicationModel,
    pm: &PlatformModel,
) -> Result<(TemporalPriorities, SpatialPriorities)> {
    let mut temporal: Option<Vec<TaskId>> = None;
    let mut spatial: Option<BTreeMap<TaskId, EsId>> = None;
    for sec in text::sections(src) {
        match sec.name.as_deref() {
            None if sec.rows.is_empty() => {}
            None => return Err(sec.rows[0].err("row outside of any section")),
            Some("TEMPORAL") => {
                let order = temporal.get_or_insert_with(Vec::new);
                for row in sec.body("task_id") {
                    let f = row.expect(1)?;
                    order.push(TaskId(parse_num(row, f[0], "task id")?));
                }
            }
            Some("SPATIAL") => {
                let map = spatial.get_or_insert_with(BTreeMap::new);
                for row in sec.body("task_id,es_id") {
                    let f = row.expect(2)?;
                    let task = TaskId(parse_num(row, f[0], "task id")?);
                    let es: EsId = f[1].parse().map_err(|e: Error| e.at_line(row.line))?;
                    if !am.contains(task) {
                        return Err(Error::UnknownTask(task));
                    }
                    if pm.end_system(es).is_none() {
                        return Err(Error::UnknownEs(es));
                    }
                    if map.insert(task, es).is_some() {
                        return Err(Error::DuplicateTask(task));
                    }
                }
            }
            Some(other) => return Err(Error::parse(format!("unknown priority section `{other}:`"))),
        }
    }
    let temporal = match temporal {
        Some(order) => {
            let tp = TemporalPriorities::from_order(order);
            tp.covers(am)?;
            tp
        }
        None => built_in_temporal(am)?,
    };
    let spatial = spatial.map_or(SpatialPriorities::LeastLoaded, SpatialPriorities::Assigned);
    Ok((temporal, spatial))
}
