//! The placement loop shared by every reconstructor.

use std::collections::{BTreeMap, BTreeSet};

use super::log::RecoveryLog;
use super::schedule::{Schedule, TaskEntry};
use super::state::Snapshot;
use crate::error::{Error, Result};
use crate::ids::{EsId, Link, TaskId, Time};
use crate::models::{ApplicationModel, PlatformModel};
use crate::priorities::{least_loaded, SpatialPriorities, TemporalPriorities};

/// Links a message from a task on `src` takes to `dst`. A sender whose end
/// system has failed is served from its egress router, so the first hop is
/// dropped.
pub(crate) fn message_route(pm: &PlatformModel, src: EsId, dst: EsId) -> Result<Vec<Link>> {
    if pm.is_live(src) {
        pm.route_lookup(src, dst)
    } else {
        if !pm.is_live(dst) {
            return Err(Error::DeadEndpoint(dst));
        }
        let mut links = pm.route_ignoring_failures(src, dst)?;
        if !links.is_empty() {
            links.remove(0);
        }
        Ok(links)
    }
}

pub(crate) struct Engine<'a> {
    am: &'a ApplicationModel,
    pm: &'a PlatformModel,
    sp: &'a SpatialPriorities,
    ranks: BTreeMap<TaskId, usize>,
    floor: Time,
    state: Snapshot,
    pending: BTreeSet<TaskId>,
    ready: BTreeSet<(usize, TaskId)>,
    log: Option<LogBuilder>,
}

struct LogBuilder {
    log: RecoveryLog,
    times: BTreeSet<Time>,
}

impl<'a> Engine<'a> {
    /// `kept` entries are treated as already placed; every other task of `am`
    /// is placed with start >= `floor`.
    pub fn new(
        am: &'a ApplicationModel,
        pm: &'a PlatformModel,
        tp: &'a TemporalPriorities,
        sp: &'a SpatialPriorities,
        floor: Time,
        kept: Snapshot,
    ) -> Result<Self> {
        tp.covers(am)?;
        let mut state = kept;
        for es in pm.es_ids() {
            state.es_busy_until.entry(es).or_insert(0);
        }
        let pending: BTreeSet<TaskId> = am.task_ids().filter(|t| !state.task_entries.contains_key(t)).collect();
        let ranks = tp.ranks();
        let mut engine = Engine { am, pm, sp, ranks, floor, state, pending, ready: BTreeSet::new(), log: None };
        let initially_ready: Vec<TaskId> = engine.pending.iter().copied().filter(|&t| engine.is_ready(t)).collect();
        for t in initially_ready {
            engine.ready.insert((engine.ranks[&t], t));
        }
        Ok(engine)
    }

    pub fn with_log(mut self) -> Self {
        self.log = Some(LogBuilder { log: RecoveryLog::new(), times: BTreeSet::from([self.floor]) });
        self
    }

    fn is_ready(&self, t: TaskId) -> bool {
        let task = self.am.task(t).expect("pending task exists");
        task.parents.iter().all(|p| self.state.task_entries.contains_key(p))
    }

    pub fn run(&mut self) -> Result<()> {
        self.run_until(None)
    }

    /// Places tasks until every remaining placement is certain to start after
    /// `halt`, or until all tasks are placed.
    pub fn run_until(&mut self, halt: Option<Time>) -> Result<()> {
        self.flush_log();
        while !self.pending.is_empty() {
            if halt.is_some_and(|h| self.horizon() > h) {
                break;
            }
            let &(rank, task) = self.ready.first().ok_or(Error::Deadlock { remaining: self.pending.len() })?;
            self.ready.remove(&(rank, task));
            self.place(task)?;
            self.flush_log();
        }
        Ok(())
    }

    fn candidates(&self, parents: &[TaskEntry]) -> Result<Vec<EsId>> {
        let reachable = |es: EsId| parents.iter().all(|p| message_route(self.pm, p.es, es).is_ok());
        let live: Vec<EsId> = self.pm.live_es().collect();
        if live.is_empty() {
            return Err(Error::EmptyPlatform);
        }
        let found: Vec<EsId> = live.iter().copied().filter(|&es| reachable(es)).collect();
        if found.is_empty() {
            // surface the first failing lookup as the error
            let p = parents.first().expect("unreachable only with parents");
            message_route(self.pm, p.es, live[0])?;
            return Err(Error::NoRoute { from: p.es, to: live[0] });
        }
        Ok(found)
    }

    fn place(&mut self, task: TaskId) -> Result<()> {
        let spec = self.am.task(task).expect("pending task exists");
        let parents: Vec<TaskEntry> = spec.parents.iter().map(|p| self.state.task_entries[p]).collect();

        let target = match self.sp.assignment(task) {
            Some(es) => {
                if self.pm.end_system(es).is_none() {
                    return Err(Error::UnknownEs(es));
                }
                if !self.pm.is_live(es) {
                    return Err(Error::DeadEndpoint(es));
                }
                for p in &parents {
                    message_route(self.pm, p.es, es)?;
                }
                es
            }
            None => {
                let loads: BTreeMap<EsId, Time> = self
                    .candidates(&parents)?
                    .into_iter()
                    .map(|es| (es, self.state.es_busy_until[&es].max(self.floor)))
                    .collect();
                least_loaded(&loads)?
            }
        };

        let mut data_ready = 0;
        let mut departures = Vec::new();
        for p in &parents {
            let msg = self.am.message(p.task, task).expect("every edge has a message record");
            let route = message_route(self.pm, p.es, target)?;
            let ready = p.end.max(self.floor);
            let entry = self.state.allocate_message(msg, &route, ready, self.pm.link_bandwidth());
            data_ready = data_ready.max(entry.arrival);
            departures.extend(entry.departure());
        }
        let start = self.state.es_busy_until[&target].max(self.floor).max(data_ready);
        let duration = self.am.effective_duration(task).expect("task exists");
        self.state.commit_task(TaskEntry { task, es: target, start, end: start + duration, locked: false });

        self.pending.remove(&task);
        for c in &spec.children {
            if self.pending.contains(c) && self.is_ready(*c) {
                self.ready.insert((self.ranks[c], *c));
            }
        }
        if let Some(builder) = &mut self.log {
            builder.times.insert(start);
            builder.times.insert(start + duration);
            builder.times.extend(departures);
        }
        Ok(())
    }

    /// Lower bound on the start of anything placed from now on.
    fn horizon(&self) -> Time {
        if self.pending.is_empty() {
            return Time::MAX;
        }
        let min_avail =
            self.pm.live_es().map(|es| self.state.es_busy_until[&es].max(self.floor)).min().unwrap_or(Time::MAX);
        let min_departure = self
            .pending
            .iter()
            .flat_map(|t| self.am.task(*t).expect("pending task exists").parents.iter())
            .filter_map(|p| self.state.task_entries.get(p))
            .map(|e| e.end.max(self.floor))
            .min()
            .unwrap_or(Time::MAX);
        min_avail.min(min_departure)
    }

    fn flush_log(&mut self) {
        if self.log.is_none() {
            return;
        }
        let h = self.horizon();
        let builder = self.log.as_mut().expect("checked");
        while let Some(&ts) = builder.times.first() {
            if ts >= h {
                break;
            }
            builder.times.pop_first();
            builder.log.push(ts, self.state.project(ts)).expect("timestamps come out of an ordered set");
        }
    }

    pub fn state(&self) -> &Snapshot {
        &self.state
    }

    pub fn into_parts(self) -> (Schedule, Option<RecoveryLog>) {
        (self.state.to_schedule(), self.log.map(|b| b.log))
    }
}
