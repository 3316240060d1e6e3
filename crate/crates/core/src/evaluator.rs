//! The evaluation block: makespan, workload balance and energy of a schedule.
//! Switching profile changes only which metric becomes the scalar objective.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::ids::{EsId, Time};
use crate::models::{ApplicationModel, PlatformModel};
use crate::reconstructor::Schedule;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    Makespan,
    Workload,
    Energy,
}

impl Profile {
    pub const ALL: [Profile; 3] = [Profile::Makespan, Profile::Workload, Profile::Energy];

    pub fn name(self) -> &'static str {
        match self {
            Profile::Makespan => "makespan",
            Profile::Workload => "workload",
            Profile::Energy => "energy",
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.trim().to_ascii_lowercase().as_str() {
            "makespan" | "performance" => Ok(Profile::Makespan),
            "workload" | "workload_balance" => Ok(Profile::Workload),
            "energy" => Ok(Profile::Energy),
            other => Err(Error::parse(format!("unknown profile `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub makespan: Time,
    pub per_es_utilization: BTreeMap<EsId, f64>,
    /// Population standard deviation of the utilizations.
    pub workload_spread: f64,
    pub energy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub profile: Profile,
    pub objective: f64,
    pub metrics: Metrics,
}

impl Evaluation {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("evaluation serializes")
    }

    pub const CSV_HEADER: &'static str = "profile,objective,makespan,workload_spread,energy";

    pub fn csv_record(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.profile, self.objective, self.metrics.makespan, self.metrics.workload_spread, self.metrics.energy
        )
    }
}

pub fn makespan(s: &Schedule) -> Time {
    s.task_entries.iter().map(|e| e.end).max().unwrap_or(0)
}

fn busy_time(s: &Schedule, pm: &PlatformModel) -> BTreeMap<EsId, Time> {
    let mut busy: BTreeMap<EsId, Time> = pm.live_es().map(|es| (es, 0)).collect();
    for e in &s.task_entries {
        if let Some(b) = busy.get_mut(&e.es) {
            *b += e.end - e.start;
        }
    }
    busy
}

/// Utilization of every live end system over the makespan and their spread.
pub fn workload(s: &Schedule, pm: &PlatformModel) -> (BTreeMap<EsId, f64>, f64) {
    let horizon = makespan(s);
    let util: BTreeMap<EsId, f64> = busy_time(s, pm)
        .into_iter()
        .map(|(es, b)| (es, if horizon == 0 { 0.0 } else { b as f64 / horizon as f64 }))
        .collect();
    if util.is_empty() {
        return (util, 0.0);
    }
    let n = util.len() as f64;
    let mean = util.values().sum::<f64>() / n;
    let var = util.values().map(|u| (u - mean).powi(2)).sum::<f64>() / n;
    (util, var.sqrt())
}

/// Linear active/idle power model over the schedule horizon, live end systems only.
pub fn energy(s: &Schedule, pm: &PlatformModel) -> f64 {
    let horizon = makespan(s);
    busy_time(s, pm)
        .into_iter()
        .map(|(es, busy)| {
            let spec = pm.end_system(es).expect("live es is declared");
            spec.active_power * busy as f64 + spec.idle_power * (horizon - busy.min(horizon)) as f64
        })
        .sum()
}

pub fn evaluate(s: &Schedule, _am: &ApplicationModel, pm: &PlatformModel, profile: Profile) -> Evaluation {
    let (per_es_utilization, workload_spread) = workload(s, pm);
    let metrics = Metrics { makespan: makespan(s), per_es_utilization, workload_spread, energy: energy(s, pm) };
    let objective = match profile {
        Profile::Makespan => metrics.makespan as f64,
        Profile::Workload => metrics.workload_spread,
        Profile::Energy => metrics.energy,
    };
    Evaluation { profile, objective, metrics }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ids::TaskId;
    use crate::reconstructor::TaskEntry;

    fn entry(task: u32, es: u32, start: Time, end: Time) -> TaskEntry {
        TaskEntry { task: TaskId(task), es: EsId(es), start, end, locked: false }
    }

    fn schedule(entries: Vec<TaskEntry>) -> Schedule {
        Schedule::new(entries, vec![])
    }

    fn platform(n: u32) -> PlatformModel {
        let es: String = (1..=n).map(|i| format!("{i}\n")).collect();
        PlatformModel::from_text(&format!("ES:\n{es}")).unwrap()
    }

    #[test]
    fn makespan_examples() {
        assert_eq!(makespan(&schedule(vec![])), 0);
        assert_eq!(makespan(&schedule(vec![entry(1, 1, 0, 10)])), 10);
    }

    #[test]
    fn workload_examples() {
        let (u, spread) = workload(&schedule(vec![entry(1, 1, 0, 10)]), &platform(1));
        assert_eq!(u[&EsId(1)], 1.0);
        assert_eq!(spread, 0.0);

        let (u, spread) = workload(&schedule(vec![entry(1, 1, 0, 10)]), &platform(2));
        assert_eq!((u[&EsId(1)], u[&EsId(2)]), (1.0, 0.0));
        assert_eq!(spread, 0.5);

        let (u, spread) = workload(&schedule(vec![]), &platform(3));
        assert!(u.values().all(|&x| x == 0.0));
        assert_eq!(spread, 0.0);
    }

    #[test]
    fn energy_examples() {
        let one = schedule(vec![entry(1, 1, 0, 10)]);
        assert!((energy(&one, &platform(1)) - 10.0).abs() < 1e-12);
        assert!((energy(&one, &platform(2)) - 11.0).abs() < 1e-12);
        assert_eq!(energy(&schedule(vec![]), &platform(2)), 0.0);
    }

    #[test]
    fn profile_selects_objective_only() {
        let am = ApplicationModel::empty();
        let s = schedule(vec![entry(1, 1, 0, 10)]);
        let pm = platform(2);
        let evals: Vec<_> = Profile::ALL.iter().map(|&p| evaluate(&s, &am, &pm, p)).collect();
        assert_eq!(evals[0].objective, 10.0);
        assert_eq!(evals[1].objective, 0.5);
        assert!((evals[2].objective - 11.0).abs() < 1e-12);
        assert!(evals.windows(2).all(|w| w[0].metrics == w[1].metrics));
    }

    #[test]
    fn single_task_makespan_profile() {
        let am = ApplicationModel::empty();
        let e = evaluate(&schedule(vec![entry(1, 1, 0, 10)]), &am, &platform(1), Profile::Makespan);
        assert_eq!(e.objective, 10.0);
        assert!(e.csv_record().starts_with("makespan,10,10,0,"));
        assert!(e.to_json().contains("\"per_es_utilization\""));
    }

    #[test]
    fn failed_es_is_excluded() {
        let mut pm = platform(2);
        pm.mark_failed(EsId(2), 0).unwrap();
        let (u, _) = workload(&schedule(vec![entry(1, 1, 0, 10)]), &pm);
        assert_eq!(u.len(), 1);
    }

    #[test]
    fn profile_names_parse() {
        for p in Profile::ALL {
            assert_eq!(p.name().parse::<Profile>().unwrap(), p);
        }
        assert!("turbo".parse::<Profile>().is_err());
    }
}
