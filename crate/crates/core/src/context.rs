//! Context events and the operators that derive modified models from them.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::evaluator::Profile;
use crate::ids::{EsId, TaskId, Time};
use crate::models::{ApplicationModel, PlatformModel};
use crate::text::{self, parse_num, Row};

/// Name of an operating mode, looked up in a [`ModeTable`].
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ModeId(pub String);

impl fmt::Display for ModeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EventKind {
    /// Task finished after `actual` time units instead of its wcet.
    Slack {
        task: TaskId,
        actual: Time,
    },
    Failure {
        es: EsId,
    },
    ModeChange {
        mode: ModeId,
    },
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::Slack { .. } => "slack",
            EventKind::Failure { .. } => "failure",
            EventKind::ModeChange { .. } => "mode",
        }
    }

    /// Rank among simultaneous events: failures, then mode changes, then slack.
    fn rank(&self) -> u8 {
        match self {
            EventKind::Failure { .. } => 0,
            EventKind::ModeChange { .. } => 1,
            EventKind::Slack { .. } => 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContextEvent {
    pub time: Time,
    pub kind: EventKind,
}

impl ContextEvent {
    pub fn slack(time: Time, task: u32, actual: Time) -> Self {
        ContextEvent { time, kind: EventKind::Slack { task: TaskId(task), actual } }
    }

    pub fn failure(time: Time, es: u32) -> Self {
        ContextEvent { time, kind: EventKind::Failure { es: EsId(es) } }
    }

    pub fn mode(time: Time, mode: &str) -> Self {
        ContextEvent { time, kind: EventKind::ModeChange { mode: ModeId(mode.to_string()) } }
    }

    fn sort_key(&self) -> (Time, u8, u32, &str) {
        let (id, name) = match &self.kind {
            EventKind::Slack { task, .. } => (task.0, ""),
            EventKind::Failure { es } => (es.0, ""),
            EventKind::ModeChange { mode } => (0, mode.0.as_str()),
        };
        (self.time, self.kind.rank(), id, name)
    }
}

impl fmt::Display for ContextEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            EventKind::Slack { task, actual } => write!(f, "{},slack,{}:{}", self.time, task, actual),
            EventKind::Failure { es } => write!(f, "{},failure,{}", self.time, es),
            EventKind::ModeChange { mode } => write!(f, "{},mode,{}", self.time, mode),
        }
    }
}

/// Parses a context file: lines `time,kind,payload`, e.g. `9,failure,ES3`,
/// `4,slack,1:6`, `12,mode,energy`.
pub fn parse_context(src: &str) -> Result<Vec<ContextEvent>> {
    let table = text::table(src)?;
    table.body("time,kind,payload").iter().map(parse_event_row).collect()
}

fn parse_event_row(row: &Row<'_>) -> Result<ContextEvent> {
    let f = row.expect(3)?;
    let time: Time = parse_num(row, f[0], "time")?;
    let kind = match f[1].to_ascii_lowercase().as_str() {
        "slack" => {
            let (task, actual) = f[2].split_once(':').ok_or_else(|| row.err("slack payload must be task:actual"))?;
            EventKind::Slack {
                task: TaskId(parse_num(row, task.trim(), "task id")?),
                actual: parse_num(row, actual.trim(), "duration")?,
            }
        }
        "failure" => EventKind::Failure { es: f[2].parse().map_err(|e: Error| e.at_line(row.line))? },
        "mode" | "mode_change" => {
            if f[2].is_empty() {
                return Err(row.err("mode payload is empty"));
            }
            EventKind::ModeChange { mode: ModeId(f[2].to_string()) }
        }
        other => return Err(row.err(format!("unknown event kind `{other}`"))),
    };
    Ok(ContextEvent { time, kind })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModeSpec {
    pub wcet_mult: f64,
    pub active_mult: f64,
    pub idle_mult: f64,
    pub profile: Profile,
}

/// Per-mode multipliers and the evaluation profile each mode activates.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeTable {
    modes: BTreeMap<ModeId, ModeSpec>,
}

const MODE_HEADER: &str = "mode,wcet_mult,active_mult,idle_mult,profile";

impl Default for ModeTable {
    /// The three modes with identity multipliers.
    fn default() -> Self {
        let identity = |profile| ModeSpec { wcet_mult: 1.0, active_mult: 1.0, idle_mult: 1.0, profile };
        ModeTable {
            modes: [
                ("performance", identity(Profile::Makespan)),
                ("workload_balance", identity(Profile::Workload)),
                ("energy", identity(Profile::Energy)),
            ]
            .into_iter()
            .map(|(name, spec)| (ModeId(name.to_string()), spec))
            .collect(),
        }
    }
}

impl ModeTable {
    pub fn new(modes: impl IntoIterator<Item = (String, ModeSpec)>) -> Result<Self> {
        let mut table = BTreeMap::new();
        for (name, spec) in modes {
            let ok = |m: f64| m.is_finite() && m > 0.0;
            if !ok(spec.wcet_mult) || !ok(spec.active_mult) || !ok(spec.idle_mult) {
                return Err(Error::Consistency(format!("mode `{name}`: multipliers must be positive")));
            }
            if table.insert(ModeId(name.clone()), spec).is_some() {
                return Err(Error::Consistency(format!("duplicate mode `{name}`")));
            }
        }
        Ok(ModeTable { modes: table })
    }

    pub fn from_text(src: &str) -> Result<Self> {
        let table = text::table(src)?;
        let rows = table
            .body(MODE_HEADER)
            .iter()
            .map(|row| {
                let f = row.expect(5)?;
                let spec = ModeSpec {
                    wcet_mult: parse_num(row, f[1], "multiplier")?,
                    active_mult: parse_num(row, f[2], "multiplier")?,
                    idle_mult: parse_num(row, f[3], "multiplier")?,
                    profile: f[4].parse().map_err(|e: Error| e.at_line(row.line))?,
                };
                Ok((f[0].to_string(), spec))
            })
            .collect::<Result<Vec<_>>>()?;
        ModeTable::new(rows)
    }

    pub fn get(&self, mode: &ModeId) -> Option<&ModeSpec> {
        self.modes.get(mode)
    }

    /// First mode, by name, that activates `profile`.
    pub fn for_profile(&self, profile: Profile) -> Option<&ModeId> {
        self.modes.iter().find(|(_, spec)| spec.profile == profile).map(|(id, _)| id)
    }
}

/// Records the actual execution of the slack event's task. The task graph is
/// untouched.
pub fn apply_slack(am: &ApplicationModel, e: &ContextEvent) -> Result<ApplicationModel> {
    let EventKind::Slack { task, actual } = e.kind else {
        return Err(Error::Config(format!("apply_slack given a {} event", e.kind.name())));
    };
    let mut out = am.clone();
    out.set_actual(task, actual)?;
    Ok(out)
}

/// Marks the failed end system; routes touching it stop resolving.
pub fn apply_failure(pm: &PlatformModel, e: &ContextEvent) -> Result<PlatformModel> {
    let EventKind::Failure { es } = e.kind else {
        return Err(Error::Config(format!("apply_failure given a {} event", e.kind.name())));
    };
    let mut out = pm.clone();
    out.mark_failed(es, e.time)?;
    Ok(out)
}

/// Scales durations (rounded up to whole time units) and power attributes by
/// the mode's multipliers and returns the profile the mode activates.
pub fn apply_mode(
    am: &ApplicationModel,
    pm: &PlatformModel,
    e: &ContextEvent,
    mt: &ModeTable,
) -> Result<(ApplicationModel, PlatformModel, Profile)> {
    let EventKind::ModeChange { mode } = &e.kind else {
        return Err(Error::Config(format!("apply_mode given a {} event", e.kind.name())));
    };
    let spec = mt.get(mode).ok_or_else(|| Error::UnknownMode(mode.0.clone()))?;
    let mut am2 = am.clone();
    if spec.wcet_mult != 1.0 {
        am2.map_durations(|d| scale_duration(d, spec.wcet_mult));
    }
    let mut pm2 = pm.clone();
    pm2.scale_power(spec.active_mult, spec.idle_mult);
    Ok((am2, pm2, spec.profile))
}

fn scale_duration(d: Time, mult: f64) -> Time {
    // guard so that e.g. 10 * 1.1 does not round up to 12
    (d as f64 * mult - 1e-9).ceil().max(0.0) as Time
}

/// Applies several events in a fixed order: ascending time, then failure,
/// mode change, slack, then payload id.
pub fn apply_events(
    am: &ApplicationModel,
    pm: &PlatformModel,
    events: &[ContextEvent],
    mt: &ModeTable,
    current: Profile,
) -> Result<(ApplicationModel, PlatformModel, Profile)> {
    let mut ordered: Vec<&ContextEvent> = events.iter().collect();
    ordered.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    let (mut am, mut pm, mut profile) = (am.clone(), pm.clone(), current);
    for e in ordered {
        match &e.kind {
            EventKind::Slack { .. } => am = apply_slack(&am, e)?,
            EventKind::Failure { .. } => pm = apply_failure(&pm, e)?,
            EventKind::ModeChange { .. } => (am, pm, profile) = apply_mode(&am, &pm, e, mt)?,
        }
    }
    Ok((am, pm, profile))
}

/// Events in the order [`apply_events`] applies them.
pub fn ordered_events(events: &[ContextEvent]) -> Vec<ContextEvent> {
    let mut out = events.to_vec();
    out.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    out
}
