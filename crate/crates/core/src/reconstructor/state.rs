//! Reconstructor state: per-ES busy-until times, per-link collision lists,
//! and the entries committed so far. The same type is what the recovery log
//! stores.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::schedule::{MessageEntry, Reservation, Schedule, TaskEntry};
use crate::ids::{EsId, Link, TaskId, Time};
use crate::models::MessageRecord;

/// Transmission time of one hop: `ceil(size / bandwidth)`, zero for empty payloads.
pub fn transmission_duration(size: u64, bandwidth: u64) -> Time {
    size.div_ceil(bandwidth.max(1))
}

/// Sorted, pairwise disjoint half-open intervals per link.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollisionLists(BTreeMap<Link, Vec<(Time, Time)>>);

impl CollisionLists {
    pub fn get(&self, link: &Link) -> &[(Time, Time)] {
        self.0.get(link).map_or(&[], Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Link, &[(Time, Time)])> {
        self.0.iter().map(|(l, v)| (l, v.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Earliest `s >= ready` with `[s, s + duration)` free on `link`.
    pub fn earliest_fit(&self, link: &Link, ready: Time, duration: Time) -> Time {
        let busy = self.get(link);
        // intervals are disjoint and sorted, so ends are sorted too
        let first = busy.partition_point(|&(_, end)| end <= ready);
        let mut candidate = ready;
        for &(start, end) in &busy[first..] {
            if candidate + duration <= start {
                break;
            }
            candidate = candidate.max(end);
        }
        candidate
    }

    /// Panics if the interval overlaps an existing reservation.
    pub fn insert(&mut self, link: Link, start: Time, end: Time) {
        if start == end {
            return;
        }
        let list = self.0.entry(link).or_default();
        let pos = list.partition_point(|&(s, _)| s < start);
        assert!(pos == 0 || list[pos - 1].1 <= start, "collision on {link} at [{start},{end})");
        assert!(pos == list.len() || end <= list[pos].0, "collision on {link} at [{start},{end})");
        list.insert(pos, (start, end));
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Snapshot {
    pub es_busy_until: BTreeMap<EsId, Time>,
    /// The router collision lists.
    pub link_reservations: CollisionLists,
    pub completed: BTreeSet<TaskId>,
    /// Dispatched but not finished at the snapshot time.
    pub started: BTreeSet<TaskId>,
    pub task_entries: BTreeMap<TaskId, TaskEntry>,
    pub message_entries: BTreeMap<(TaskId, TaskId), MessageEntry>,
}

impl Snapshot {
    pub fn new(es: impl IntoIterator<Item = EsId>) -> Self {
        Snapshot { es_busy_until: es.into_iter().map(|e| (e, 0)).collect(), ..Default::default() }
    }

    /// Reserves every link of `route` at the earliest collision-free time,
    /// hop after hop, starting no earlier than `ready`. An empty route or an
    /// empty payload arrives at `ready` without reservations.
    pub fn allocate_message(
        &mut self,
        msg: &MessageRecord,
        route: &[Link],
        ready: Time,
        bandwidth: u64,
    ) -> MessageEntry {
        let duration = transmission_duration(msg.size, bandwidth);
        let mut reservations = Vec::with_capacity(route.len());
        let mut arrival = ready;
        if duration > 0 {
            for &link in route {
                let start = self.link_reservations.earliest_fit(&link, arrival, duration);
                self.link_reservations.insert(link, start, start + duration);
                reservations.push(Reservation { link, start, end: start + duration });
                arrival = start + duration;
            }
        }
        let entry = MessageEntry { tx: msg.tx, rx: msg.rx, reservations, arrival };
        self.message_entries.insert((msg.tx, msg.rx), entry.clone());
        entry
    }

    pub(crate) fn commit_task(&mut self, entry: TaskEntry) {
        let busy = self.es_busy_until.entry(entry.es).or_insert(0);
        *busy = (*busy).max(entry.end);
        self.completed.insert(entry.task);
        self.task_entries.insert(entry.task, entry);
    }

    /// Adds an already-timed message (its reservations must be free).
    pub(crate) fn commit_message(&mut self, entry: MessageEntry) {
        for r in &entry.reservations {
            self.link_reservations.insert(r.link, r.start, r.end);
        }
        self.message_entries.insert((entry.tx, entry.rx), entry);
    }

    /// State as of time `ts`: tasks dispatched at or before `ts`, messages
    /// into those tasks or already transmitting, and the resource occupation
    /// they imply.
    pub fn project(&self, ts: Time) -> Snapshot {
        project_entries(
            self.es_busy_until.keys().copied(),
            self.task_entries.values(),
            self.message_entries.values(),
            ts,
        )
    }

    pub fn to_schedule(&self) -> Schedule {
        Schedule::new(self.task_entries.values().copied().collect(), self.message_entries.values().cloned().collect())
    }
}

pub(crate) fn project_entries<'a>(
    es: impl IntoIterator<Item = EsId>,
    tasks: impl IntoIterator<Item = &'a TaskEntry>,
    messages: impl IntoIterator<Item = &'a MessageEntry>,
    ts: Time,
) -> Snapshot {
    let mut snap = Snapshot::new(es);
    for e in tasks.into_iter().filter(|e| e.start <= ts) {
        let busy = snap.es_busy_until.entry(e.es).or_insert(0);
        *busy = (*busy).max(e.end);
        if e.end <= ts {
            snap.completed.insert(e.task);
        } else {
            snap.started.insert(e.task);
        }
        snap.task_entries.insert(e.task, *e);
    }
    for m in messages {
        let rx_in = snap.task_entries.contains_key(&m.rx);
        if rx_in || m.departure().is_some_and(|d| d <= ts) {
            snap.commit_message(m.clone());
        }
    }
    snap
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ids::{Node, RouterId};

    fn links() -> (Link, Link) {
        (
            Link::new(Node::Es(EsId(1)), Node::Router(RouterId(1))),
            Link::new(Node::Router(RouterId(1)), Node::Es(EsId(2))),
        )
    }

    fn msg(size: u64) -> MessageRecord {
        MessageRecord { tx: TaskId(1), rx: TaskId(2), size }
    }

    #[test]
    fn store_and_forward_on_free_links() {
        let (l1, l2) = links();
        let mut s = Snapshot::new([EsId(1), EsId(2)]);
        let m = s.allocate_message(&msg(2), &[l1, l2], 5, 1);
        assert_eq!(
            m.reservations,
            vec![Reservation { link: l1, start: 5, end: 7 }, Reservation { link: l2, start: 7, end: 9 }]
        );
        assert_eq!(m.arrival, 9);
    }

    #[test]
    fn shifts_past_occupied_interval() {
        let (l1, l2) = links();
        let mut s = Snapshot::new([EsId(1), EsId(2)]);
        s.link_reservations.insert(l1, 5, 7);
        let m = s.allocate_message(&msg(2), &[l1, l2], 5, 1);
        assert_eq!(
            m.reservations,
            vec![Reservation { link: l1, start: 7, end: 9 }, Reservation { link: l2, start: 9, end: 11 }]
        );
        assert_eq!(m.arrival, 11);
    }

    #[test]
    fn intra_es_and_empty_payload() {
        let (l1, _) = links();
        let mut s = Snapshot::default();
        let m = s.allocate_message(&msg(2), &[], 5, 1);
        assert!(m.reservations.is_empty());
        assert_eq!(m.arrival, 5);
        let m = s.allocate_message(&msg(0), &[l1], 5, 1);
        assert!(m.reservations.is_empty());
        assert_eq!(m.arrival, 5);
        assert!(s.link_reservations.is_empty());
    }

    #[test]
    fn earliest_fit_uses_gaps() {
        let (l1, _) = links();
        let mut c = CollisionLists::default();
        c.insert(l1, 0, 4);
        c.insert(l1, 6, 10);
        assert_eq!(c.earliest_fit(&l1, 0, 2), 4);
        assert_eq!(c.earliest_fit(&l1, 0, 3), 10);
        assert_eq!(c.earliest_fit(&l1, 5, 1), 5);
        assert_eq!(c.earliest_fit(&l1, 11, 3), 11);
    }

    #[test]
    #[should_panic(expected = "collision")]
    fn overlapping_insert_panics() {
        let (l1, _) = links();
        let mut c = CollisionLists::default();
        c.insert(l1, 0, 4);
        c.insert(l1, 3, 5);
    }

    #[test]
    fn bandwidth_rounding() {
        assert_eq!(transmission_duration(0, 1), 0);
        assert_eq!(transmission_duration(1, 4), 1);
        assert_eq!(transmission_duration(5, 2), 3);
    }
}
