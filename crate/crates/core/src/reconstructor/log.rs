//! Recovery log: snapshots of the reconstructor state keyed by time, and its
//! binary serialization.
//!
//! Byte layout (all integers little-endian):
//!
//! ```text
//! header   : magic b"TTRLOG\0\0" | version u16 (=1) | reserved u16 (=0) | record count u32
//! record   : payload length u32 | payload
//! payload  : timestamp u64
//!            es count u32,        { es u32, busy_until u64 }
//!            link count u32,      { link, interval count u32, { start u64, end u64 } }
//!            completed count u32, { task u32 }
//!            started count u32,   { task u32 }
//!            task count u32,      { task u32, es u32, start u64, end u64, locked u8 }
//!            message count u32,   { tx u32, rx u32, arrival u64,
//!                                   reservation count u32, { link, start u64, end u64 } }
//! link     : from node | to node
//! node     : kind u8 (0 = end system, 1 = router) | id u32
//! ```

use std::collections::BTreeSet;

use super::schedule::{MessageEntry, Reservation, Schedule, TaskEntry};
use super::state::{project_entries, Snapshot};
use crate::error::{Error, Result};
use crate::ids::{EsId, Link, Node, RouterId, TaskId, Time};

const MAGIC: &[u8; 8] = b"TTRLOG\0\0";
const VERSION: u16 = 1;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RecoveryLog {
    records: Vec<(Time, Snapshot)>,
}

impl RecoveryLog {
    pub fn new() -> Self {
        RecoveryLog::default()
    }

    /// Timestamps must be strictly increasing.
    pub fn push(&mut self, ts: Time, snapshot: Snapshot) -> Result<()> {
        if let Some(&(last, _)) = self.records.last() {
            if ts <= last {
                return Err(Error::CorruptLog(format!("timestamp {ts} does not follow {last}")));
            }
        }
        self.records.push((ts, snapshot));
        Ok(())
    }

    pub fn records(&self) -> &[(Time, Snapshot)] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn timestamps(&self) -> impl Iterator<Item = Time> + '_ {
        self.records.iter().map(|(t, _)| *t)
    }

    /// The log of a finished schedule: one snapshot at 0, at every task
    /// start and end, and at every message departure.
    pub fn from_schedule(schedule: &Schedule, es: impl IntoIterator<Item = EsId>) -> Self {
        let es: Vec<EsId> = es.into_iter().collect();
        let mut times: BTreeSet<Time> = BTreeSet::from([0]);
        for e in &schedule.task_entries {
            times.insert(e.start);
            times.insert(e.end);
        }
        times.extend(schedule.message_entries.iter().filter_map(|m| m.departure()));
        let records = times
            .into_iter()
            .map(|ts| {
                let snap = project_entries(es.iter().copied(), &schedule.task_entries, &schedule.message_entries, ts);
                (ts, snap)
            })
            .collect();
        RecoveryLog { records }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&0u16.to_le_bytes());
        put_u32(&mut out, self.records.len());
        let mut payload = Vec::new();
        for (ts, snap) in &self.records {
            payload.clear();
            encode_snapshot(&mut payload, *ts, snap);
            put_u32(&mut out, payload.len());
            out.extend_from_slice(&payload);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { buf: bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(Error::CorruptLog("bad magic".into()));
        }
        let version = r.u16()?;
        if version != VERSION {
            return Err(Error::CorruptLog(format!("unsupported version {version}")));
        }
        r.u16()?;
        let count = r.u32()?;
        let mut log = RecoveryLog::new();
        for _ in 0..count {
            let len = r.u32()? as usize;
            let mut rec = Reader { buf: r.take(len)?, pos: 0 };
            let (ts, snap) = decode_snapshot(&mut rec)?;
            if rec.pos != rec.buf.len() {
                return Err(Error::CorruptLog("trailing bytes in record".into()));
            }
            log.push(ts, snap)?;
        }
        if r.pos != bytes.len() {
            return Err(Error::CorruptLog("trailing bytes after last record".into()));
        }
        Ok(log)
    }
}

/// Snapshot with the greatest timestamp not after `t`.
pub fn snapshot_restore(log: &RecoveryLog, t: i64) -> Result<&Snapshot> {
    if t < 0 {
        return Err(Error::NoSnapshot(t));
    }
    let idx = log.records.partition_point(|(ts, _)| *ts <= t as Time);
    match idx {
        0 => Err(Error::NoSnapshot(t)),
        i => Ok(&log.records[i - 1].1),
    }
}

/// Like [`snapshot_restore`] but also returns the snapshot's timestamp.
pub fn snapshot_restore_at(log: &RecoveryLog, t: Time) -> Result<(Time, &Snapshot)> {
    let idx = log.records.partition_point(|(ts, _)| *ts <= t);
    match idx {
        0 => Err(Error::NoSnapshot(t.min(i64::MAX as u64) as i64)),
        i => Ok((log.records[i - 1].0, &log.records[i - 1].1)),
    }
}

fn put_u32(out: &mut Vec<u8>, v: usize) {
    out.extend_from_slice(&u32::try_from(v).expect("count fits in u32").to_le_bytes());
}

fn put_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_node(out: &mut Vec<u8>, n: Node) {
    let (kind, id) = match n {
        Node::Es(es) => (0u8, es.0),
        Node::Router(r) => (1u8, r.0),
    };
    out.push(kind);
    out.extend_from_slice(&id.to_le_bytes());
}

fn put_link(out: &mut Vec<u8>, l: &Link) {
    put_node(out, l.from);
    put_node(out, l.to);
}

fn encode_snapshot(out: &mut Vec<u8>, ts: Time, s: &Snapshot) {
    put_u64(out, ts);
    put_u32(out, s.es_busy_until.len());
    for (es, busy) in &s.es_busy_until {
        out.extend_from_slice(&es.0.to_le_bytes());
        put_u64(out, *busy);
    }
    put_u32(out, s.link_reservations.len());
    for (link, intervals) in s.link_reservations.iter() {
        put_link(out, link);
        put_u32(out, intervals.len());
        for &(a, b) in intervals {
            put_u64(out, a);
            put_u64(out, b);
        }
    }
    for set in [&s.completed, &s.started] {
        put_u32(out, set.len());
        for t in set {
            out.extend_from_slice(&t.0.to_le_bytes());
        }
    }
    put_u32(out, s.task_entries.len());
    for e in s.task_entries.values() {
        out.extend_from_slice(&e.task.0.to_le_bytes());
        out.extend_from_slice(&e.es.0.to_le_bytes());
        put_u64(out, e.start);
        put_u64(out, e.end);
        out.push(u8::from(e.locked));
    }
    put_u32(out, s.message_entries.len());
    for m in s.message_entries.values() {
        out.extend_from_slice(&m.tx.0.to_le_bytes());
        out.extend_from_slice(&m.rx.0.to_le_bytes());
        put_u64(out, m.arrival);
        put_u32(out, m.reservations.len());
        for r in &m.reservations {
            put_link(out, &r.link);
            put_u64(out, r.start);
            put_u64(out, r.end);
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| Error::CorruptLog("unexpected end of data".into()))?;
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn node(&mut self) -> Result<Node> {
        let kind = self.u8()?;
        let id = self.u32()?;
        match kind {
            0 => Ok(Node::Es(EsId(id))),
            1 => Ok(Node::Router(RouterId(id))),
            k => Err(Error::CorruptLog(format!("unknown node kind {k}"))),
        }
    }

    fn link(&mut self) -> Result<Link> {
        Ok(Link::new(self.node()?, self.node()?))
    }
}

fn decode_snapshot(r: &mut Reader<'_>) -> Result<(Time, Snapshot)> {
    let ts = r.u64()?;
    let mut s = Snapshot::default();
    for _ in 0..r.u32()? {
        let es = EsId(r.u32()?);
        s.es_busy_until.insert(es, r.u64()?);
    }
    for _ in 0..r.u32()? {
        let link = r.link()?;
        for _ in 0..r.u32()? {
            let (a, b) = (r.u64()?, r.u64()?);
            if b < a {
                return Err(Error::CorruptLog(format!("inverted interval on {link}")));
            }
            if let Some(&(_, prev_end)) = s.link_reservations.get(&link).last() {
                if a < prev_end {
                    return Err(Error::CorruptLog(format!("overlapping intervals on {link}")));
                }
            }
            s.link_reservations.insert(link, a, b);
        }
    }
    for set in [&mut s.completed, &mut s.started] {
        for _ in 0..r.u32()? {
            set.insert(TaskId(r.u32()?));
        }
    }
    for _ in 0..r.u32()? {
        let e = TaskEntry {
            task: TaskId(r.u32()?),
            es: EsId(r.u32()?),
            start: r.u64()?,
            end: r.u64()?,
            locked: r.u8()? != 0,
        };
        s.task_entries.insert(e.task, e);
    }
    for _ in 0..r.u32()? {
        let tx = TaskId(r.u32()?);
        let rx = TaskId(r.u32()?);
        let arrival = r.u64()?;
        let n = r.u32()?;
        let mut reservations = Vec::with_capacity(n.min(1024) as usize);
        for _ in 0..n {
            reservations.push(Reservation { link: r.link()?, start: r.u64()?, end: r.u64()? });
        }
        s.message_entries.insert((tx, rx), MessageEntry { tx, rx, reservations, arrival });
    }
    Ok((ts, s))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn log_at(times: &[Time]) -> RecoveryLog {
        let mut log = RecoveryLog::new();
        for &t in times {
            let mut s = Snapshot::new([EsId(1)]);
            s.es_busy_until.insert(EsId(1), t);
            log.push(t, s).unwrap();
        }
        log
    }

    #[test]
    fn floor_lookup() {
        let log = log_at(&[0, 5, 10]);
        assert_eq!(snapshot_restore(&log, 9).unwrap().es_busy_until[&EsId(1)], 5);
        assert_eq!(snapshot_restore(&log, 0).unwrap().es_busy_until[&EsId(1)], 0);
        assert_eq!(snapshot_restore(&log, 100).unwrap().es_busy_until[&EsId(1)], 10);
        assert_eq!(snapshot_restore(&log, -1), Err(Error::NoSnapshot(-1)));
        assert_eq!(snapshot_restore(&log_at(&[3]), 2), Err(Error::NoSnapshot(2)));
        assert_eq!(snapshot_restore(&RecoveryLog::new(), 2), Err(Error::NoSnapshot(2)));
    }

    #[test]
    fn timestamps_strictly_increase() {
        let mut log = log_at(&[0, 5]);
        assert!(log.push(5, Snapshot::default()).is_err());
        assert!(log.push(4, Snapshot::default()).is_err());
    }

    #[test]
    fn bytes_round_trip_and_reject_corruption() {
        let log = log_at(&[0, 5, 10]);
        let bytes = log.to_bytes();
        assert_eq!(&bytes[..8], MAGIC);
        assert_eq!(RecoveryLog::from_bytes(&bytes).unwrap(), log);
        assert!(RecoveryLog::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[8] = 9;
        assert!(matches!(RecoveryLog::from_bytes(&bad), Err(Error::CorruptLog(_))));
        let mut extra = bytes;
        extra.push(0);
        assert!(RecoveryLog::from_bytes(&extra).is_err());
    }
}
