use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ids::{EsId, Link, Node, RouterId, Time};
use crate::text::{self, parse_num, Row};

pub const DEFAULT_ACTIVE_POWER: f64 = 1.0;
pub const DEFAULT_IDLE_POWER: f64 = 0.1;
/// KB per time unit.
pub const DEFAULT_BANDWIDTH: u64 = 1;

const ES_HEADER: &str = "id,active_power,idle_power";
const ROUTES_HEADER: &str = "sender,receiver,route";
const FAILED_HEADER: &str = "es,time";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EndSystem {
    pub id: EsId,
    /// Energy per busy time unit.
    pub active_power: f64,
    /// Energy per idle time unit.
    pub idle_power: f64,
}

impl EndSystem {
    pub fn new(id: u32) -> Self {
        EndSystem { id: EsId(id), active_power: DEFAULT_ACTIVE_POWER, idle_power: DEFAULT_IDLE_POWER }
    }
}

#[derive(Serialize, Deserialize)]
struct RawPlatform {
    end_systems: Vec<EndSystem>,
    routers: BTreeSet<RouterId>,
    routes: Vec<RawRoute>,
    link_bandwidth: u64,
    #[serde(default)]
    failed: BTreeMap<EsId, Time>,
}

#[derive(Serialize, Deserialize)]
struct RawRoute {
    sender: EsId,
    receiver: EsId,
    routers: Vec<RouterId>,
}

/// End systems, routers and the directed route table between end systems.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPlatform", into = "RawPlatform")]
pub struct PlatformModel {
    end_systems: BTreeMap<EsId, EndSystem>,
    routers: BTreeSet<RouterId>,
    routes: BTreeMap<(EsId, EsId), Vec<RouterId>>,
    link_bandwidth: u64,
    failed: BTreeMap<EsId, Time>,
}

impl TryFrom<RawPlatform> for PlatformModel {
    type Error = Error;

    fn try_from(raw: RawPlatform) -> Result<Self> {
        let routes = raw.routes.into_iter().map(|r| ((r.sender, r.receiver), r.routers)).collect::<Vec<_>>();
        let mut pm = PlatformModel::new(raw.end_systems, Some(raw.routers), routes, raw.link_bandwidth)?;
        for (es, at) in raw.failed {
            pm.mark_failed(es, at)?;
        }
        Ok(pm)
    }
}

impl From<PlatformModel> for RawPlatform {
    fn from(pm: PlatformModel) -> Self {
        RawPlatform {
            end_systems: pm.end_systems.into_values().collect(),
            routers: pm.routers,
            routes: pm
                .routes
                .into_iter()
                .map(|((sender, receiver), routers)| RawRoute { sender, receiver, routers })
                .collect(),
            link_bandwidth: pm.link_bandwidth,
            failed: pm.failed,
        }
    }
}

impl PlatformModel {
    /// `routers = None` infers the router set from the routes.
    pub fn new(
        end_systems: Vec<EndSystem>,
        routers: Option<BTreeSet<RouterId>>,
        routes: Vec<((EsId, EsId), Vec<RouterId>)>,
        link_bandwidth: u64,
    ) -> Result<Self> {
        if link_bandwidth == 0 {
            return Err(Error::Consistency("link bandwidth must be positive".into()));
        }
        let mut es_map = BTreeMap::new();
        for es in end_systems {
            let ok = |p: f64| p.is_finite() && p >= 0.0;
            if !ok(es.active_power) || !ok(es.idle_power) {
                return Err(Error::Consistency(format!("{}: power attributes must be finite and non-negative", es.id)));
            }
            if es_map.insert(es.id, es).is_some() {
                return Err(Error::Consistency(format!("duplicate end system {}", es.id)));
            }
        }
        let routers = routers.unwrap_or_else(|| routes.iter().flat_map(|(_, r)| r.iter().copied()).collect());
        let mut table = BTreeMap::new();
        for ((from, to), path) in routes {
            for es in [from, to] {
                if !es_map.contains_key(&es) {
                    return Err(Error::Consistency(format!("route {from}->{to} names undeclared end system {es}")));
                }
            }
            if from == to {
                return Err(Error::Consistency(format!("route {from}->{to}: intra-ES routes are implicit")));
            }
            if path.is_empty() {
                return Err(Error::Consistency(format!("route {from}->{to} has no routers")));
            }
            if let Some(r) = path.iter().find(|r| !routers.contains(r)) {
                return Err(Error::Consistency(format!("route {from}->{to} names undeclared router {r}")));
            }
            if table.insert((from, to), path).is_some() {
                return Err(Error::Consistency(format!("duplicate route {from}->{to}")));
            }
        }
        Ok(PlatformModel { end_systems: es_map, routers, routes: table, link_bandwidth, failed: BTreeMap::new() })
    }

    pub fn from_text(src: &str) -> Result<Self> {
        let mut end_systems = Vec::new();
        let mut routers: Option<BTreeSet<RouterId>> = None;
        let mut routes = Vec::new();
        let mut bandwidth = DEFAULT_BANDWIDTH;
        let mut failed = Vec::new();
        for sec in text::sections(src) {
            match sec.name.as_deref() {
                None if sec.rows.is_empty() => {}
                None => return Err(sec.rows[0].err("row outside of any section")),
                Some("ES") => {
                    for row in sec.body(ES_HEADER) {
                        end_systems.push(parse_es_row(row)?);
                    }
                }
                Some("ROUTERS") => {
                    let set = routers.get_or_insert_with(BTreeSet::new);
                    for row in &sec.rows {
                        for f in row.fields().into_iter().filter(|f| !f.is_empty()) {
                            set.insert(f.parse().map_err(|e: Error| e.at_line(row.line))?);
                        }
                    }
                }
                Some("ROUTES") => {
                    for row in sec.body(ROUTES_HEADER) {
                        routes.push(parse_route_row(row)?);
                    }
                }
                Some("BANDWIDTH") => {
                    for row in &sec.rows {
                        bandwidth = parse_num(row, row.text, "bandwidth")?;
                    }
                }
                Some("FAILED") => {
                    for row in sec.body(FAILED_HEADER) {
                        let f = row.expect(2)?;
                        let es: EsId = f[0].parse().map_err(|e: Error| e.at_line(row.line))?;
                        failed.push((es, parse_num::<Time>(row, f[1], "time")?));
                    }
                }
                Some(other) => return Err(Error::parse(format!("unknown platform section `{other}:`"))),
            }
        }
        let mut pm = PlatformModel::new(end_systems, routers, routes, bandwidth)?;
        for (es, at) in failed {
            pm.mark_failed(es, at)?;
        }
        Ok(pm)
    }

    /// Canonical platform file.
    pub fn to_text(&self) -> String {
        let mut out = format!("ES:\n{ES_HEADER}\n");
        for es in self.end_systems.values() {
            let _ = writeln!(out, "{},{},{}", es.id.0, es.active_power, es.idle_power);
        }
        out.push_str("ROUTERS:\n");
        for r in &self.routers {
            let _ = writeln!(out, "{r}");
        }
        let _ = writeln!(out, "ROUTES:\n{ROUTES_HEADER}");
        for ((from, to), path) in &self.routes {
            let path = path.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(";");
            let _ = writeln!(out, "{},{},{}", from.0, to.0, path);
        }
        let _ = writeln!(out, "BANDWIDTH:\n{}", self.link_bandwidth);
        if !self.failed.is_empty() {
            let _ = writeln!(out, "FAILED:\n{FAILED_HEADER}");
            for (es, at) in &self.failed {
                let _ = writeln!(out, "{},{}", es.0, at);
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("platform model serializes")
    }

    pub fn from_json(src: &str) -> Result<Self> {
        serde_json::from_str(src).map_err(|e| Error::parse(e.to_string()))
    }

    pub fn end_systems(&self) -> impl Iterator<Item = &EndSystem> {
        self.end_systems.values()
    }

    pub fn end_system(&self, id: EsId) -> Option<&EndSystem> {
        self.end_systems.get(&id)
    }

    pub fn es_ids(&self) -> impl Iterator<Item = EsId> + '_ {
        self.end_systems.keys().copied()
    }

    pub fn live_es(&self) -> impl Iterator<Item = EsId> + '_ {
        self.end_systems.keys().copied().filter(|es| !self.failed.contains_key(es))
    }

    pub fn is_live(&self, es: EsId) -> bool {
        self.end_systems.contains_key(&es) && !self.failed.contains_key(&es)
    }

    pub fn failure_time(&self, es: EsId) -> Option<Time> {
        self.failed.get(&es).copied()
    }

    pub fn failed(&self) -> impl Iterator<Item = (EsId, Time)> + '_ {
        self.failed.iter().map(|(&es, &t)| (es, t))
    }

    pub fn routers(&self) -> &BTreeSet<RouterId> {
        &self.routers
    }

    pub fn routes(&self) -> impl Iterator<Item = ((EsId, EsId), &[RouterId])> {
        self.routes.iter().map(|(&k, v)| (k, v.as_slice()))
    }

    pub fn link_bandwidth(&self) -> u64 {
        self.link_bandwidth
    }

    /// Expanded link sequence from `sender` to `receiver`; empty when they
    /// coincide. Both endpoints must be live.
    pub fn route_lookup(&self, sender: EsId, receiver: EsId) -> Result<Vec<Link>> {
        for es in [sender, receiver] {
            if !self.end_systems.contains_key(&es) {
                return Err(Error::UnknownEs(es));
            }
            if self.failed.contains_key(&es) {
                return Err(Error::DeadEndpoint(es));
            }
        }
        self.route_ignoring_failures(sender, receiver)
    }

    /// Route table lookup that does not consult the failure set.
    pub(crate) fn route_ignoring_failures(&self, sender: EsId, receiver: EsId) -> Result<Vec<Link>> {
        if sender == receiver {
            return Ok(Vec::new());
        }
        let path = self.routes.get(&(sender, receiver)).ok_or(Error::NoRoute { from: sender, to: receiver })?;
        let mut nodes = Vec::with_capacity(path.len() + 2);
        nodes.push(Node::Es(sender));
        nodes.extend(path.iter().copied().map(Node::Router));
        nodes.push(Node::Es(receiver));
        Ok(nodes.windows(2).map(|w| Link::new(w[0], w[1])).collect())
    }

    pub fn has_route(&self, sender: EsId, receiver: EsId) -> bool {
        sender == receiver || self.routes.contains_key(&(sender, receiver))
    }

    pub(crate) fn mark_failed(&mut self, es: EsId, at: Time) -> Result<()> {
        if !self.end_systems.contains_key(&es) {
            return Err(Error::UnknownEs(es));
        }
        if self.failed.insert(es, at).is_some() {
            return Err(Error::AlreadyFailed(es));
        }
        Ok(())
    }

    pub(crate) fn scale_power(&mut self, active: f64, idle: f64) {
        for es in self.end_systems.values_mut() {
            es.active_power *= active;
            es.idle_power *= idle;
        }
    }
}

fn parse_es_row(row: &Row<'_>) -> Result<EndSystem> {
    let f = row.fields();
    if f.is_empty() || f.len() > 3 {
        return Err(row.err("expected id[,active_power[,idle_power]]"));
    }
    let id: EsId = f[0].parse().map_err(|e: Error| e.at_line(row.line))?;
    let power = |i: usize, default: f64| -> Result<f64> {
        match f.get(i) {
            Some(s) if !s.is_empty() => parse_num(row, s, "power"),
            _ => Ok(default),
        }
    };
    Ok(EndSystem { id, active_power: power(1, DEFAULT_ACTIVE_POWER)?, idle_power: power(2, DEFAULT_IDLE_POWER)? })
}

fn parse_route_row(row: &Row<'_>) -> Result<((EsId, EsId), Vec<RouterId>)> {
    let f = row.expect(3)?;
    let from: EsId = f[0].parse().map_err(|e: Error| e.at_line(row.line))?;
    let to: EsId = f[1].parse().map_err(|e: Error| e.at_line(row.line))?;
    let path = f[2]
        .replace('→', ";")
        .replace("->", ";")
        .split(|c: char| c == ';' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<RouterId>())
        .collect::<Result<Vec<_>>>()
        .map_err(|e| e.at_line(row.line))?;
    Ok(((from, to), path))
}
