use proptest::prelude::*;
use ttrecon::context::{apply_failure, apply_slack, ContextEvent, EventKind};
use ttrecon::reconstructor::snapshot_restore_at;
use ttrecon::{
    built_in_temporal, generate_instance, generate_workload, reconstruct_full, reconstruct_temporal, reconstruct_until,
    recover_failure, safety_check, snapshot_restore, ApplicationModel, EsId, PlatformModel, RecoveryLog, Schedule,
    SpatialPriorities, TaskEntry, TaskId,
};

fn full(am: &ApplicationModel, pm: &PlatformModel) -> (Schedule, RecoveryLog) {
    let tp = built_in_temporal(am).unwrap();
    reconstruct_full(am, pm, &tp, &SpatialPriorities::LeastLoaded).unwrap()
}

fn key(e: &TaskEntry) -> (TaskId, EsId, u64, u64) {
    (e.task, e.es, e.start, e.end)
}

fn assert_past_kept(prior: &Schedule, after: &Schedule, t: u64) -> Result<(), TestCaseError> {
    for e in prior.task_entries.iter().filter(|e| e.end <= t) {
        let now = after.entry(e.task).unwrap();
        prop_assert_eq!(key(now), key(e));
        prop_assert!(now.locked);
    }
    Ok(())
}

/// Slack on task number `pick` (mod n), finishing `cut` units early.
fn slack_case(am: &ApplicationModel, prior: &Schedule, pick: usize, cut: u64) -> (ApplicationModel, u64) {
    let e = prior.task_entries[pick % prior.task_entries.len()];
    let wcet = e.end - e.start;
    let actual = wcet - cut % wcet;
    let t = e.start + actual;
    (apply_slack(am, &ContextEvent::slack(t, e.task.0, actual)).unwrap(), t)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn slack_recovery(n in 2usize..40, es in 2usize..7, seed in any::<u64>(), pick in any::<usize>(), cut in any::<u64>()) {
        let (am, pm) = generate_instance(n, es, seed).unwrap();
        let (prior, _) = full(&am, &pm);
        let (am2, t) = slack_case(&am, &prior, pick, cut);
        let tp = built_in_temporal(&am2).unwrap();
        let (s, makespan) = reconstruct_temporal(&am2, &pm, &prior, &tp, t).unwrap();
        prop_assert!(safety_check(&s, &am2, &pm).is_empty());
        prop_assert_eq!(makespan, s.makespan);
        prop_assert!(makespan <= prior.makespan);
        assert_past_kept(&prior, &s, t)?;
        let (again, _) = reconstruct_temporal(&am2, &pm, &prior, &tp, t).unwrap();
        prop_assert_eq!(again.to_text(), s.to_text());
    }

    #[test]
    fn failure_recovery(n in 2usize..40, es in 2usize..7, seed in any::<u64>(), which in any::<u32>(), frac in 0.0f64..1.2) {
        let (am, pm) = generate_instance(n, es, seed).unwrap();
        let (prior, log) = full(&am, &pm);
        let t = (prior.makespan as f64 * frac) as u64;
        let event = ContextEvent::failure(t, which % es as u32 + 1);
        let pm2 = apply_failure(&pm, &event).unwrap();
        let (s, makespan) = recover_failure(&am, &pm2, &log, t, &event.kind).unwrap();
        prop_assert!(safety_check(&s, &am, &pm2).is_empty(), "{:?}", safety_check(&s, &am, &pm2));
        prop_assert_eq!(makespan, s.makespan);
        assert_past_kept(&prior, &s, t)?;
        let EventKind::Failure { es: dead } = event.kind else { unreachable!() };
        prop_assert!(s.task_entries.iter().all(|e| e.es != dead || e.start < t));
    }

    #[test]
    fn snapshot_matches_halted_run(n in 1usize..40, es in 1usize..7, seed in any::<u64>(), frac in 0.0f64..1.1) {
        let (am, pm) = generate_instance(n, es, seed).unwrap();
        let (prior, log) = full(&am, &pm);
        let t = (prior.makespan as f64 * frac) as u64;
        let tp = built_in_temporal(&am).unwrap();
        let halted = reconstruct_until(&am, &pm, &tp, &SpatialPriorities::LeastLoaded, t).unwrap();
        prop_assert_eq!(snapshot_restore(&log, t as i64).unwrap(), &halted);
    }

    #[test]
    fn log_is_projection_of_final_schedule(n in 1usize..40, es in 1usize..7, seed in any::<u64>()) {
        let (am, pm) = generate_instance(n, es, seed).unwrap();
        let (s, log) = full(&am, &pm);
        prop_assert_eq!(&log, &RecoveryLog::from_schedule(&s, pm.es_ids()));
        prop_assert_eq!(&RecoveryLog::from_bytes(&log.to_bytes()).unwrap(), &log);
    }

    #[test]
    fn failure_at_zero_is_full_rebuild(n in 1usize..40, es in 2usize..7, seed in any::<u64>(), which in any::<u32>()) {
        let (am, pm) = generate_instance(n, es, seed).unwrap();
        let (_, log) = full(&am, &pm);
        let event = ContextEvent::failure(0, which % es as u32 + 1);
        let pm2 = apply_failure(&pm, &event).unwrap();
        let (s, _) = recover_failure(&am, &pm2, &log, 0, &event.kind).unwrap();
        prop_assert_eq!(s.to_text(), full(&am, &pm2).0.to_text());
    }
}

#[test]
fn temporal_at_zero_is_full_rebuild() {
    for seed in 0..20 {
        let (am, pm) = generate_workload(20, seed).unwrap();
        let (prior, _) = full(&am, &pm);
        let tp = built_in_temporal(&am).unwrap();
        let (s, _) = reconstruct_temporal(&am, &pm, &prior, &tp, 0).unwrap();
        assert_eq!(s.to_text(), prior.to_text());
    }
}

#[test]
fn event_after_completion_changes_nothing() {
    let (am, pm) = generate_workload(25, 3).unwrap();
    let (prior, log) = full(&am, &pm);
    let tp = built_in_temporal(&am).unwrap();
    let t = prior.makespan + 4;
    let (s, m) = reconstruct_temporal(&am, &pm, &prior, &tp, t).unwrap();
    assert_eq!(m, prior.makespan);
    assert!(s.task_entries.iter().all(|e| e.locked));
    assert_eq!(
        s.task_entries.iter().map(key).collect::<Vec<_>>(),
        prior.task_entries.iter().map(key).collect::<Vec<_>>()
    );
    assert_eq!(s.message_entries, prior.message_entries);

    let event = ContextEvent::failure(t, 2);
    let pm2 = apply_failure(&pm, &event).unwrap();
    let (f, fm) = recover_failure(&am, &pm2, &log, t, &event.kind).unwrap();
    assert_eq!(fm, prior.makespan);
    assert_eq!(
        f.task_entries.iter().map(key).collect::<Vec<_>>(),
        prior.task_entries.iter().map(key).collect::<Vec<_>>()
    );
}

#[test]
fn slack_equal_to_wcet_is_identity() {
    let (am, pm) = generate_workload(15, 9).unwrap();
    let (prior, _) = full(&am, &pm);
    let e = prior.task_entries[3];
    let am2 = apply_slack(&am, &ContextEvent::slack(e.end, e.task.0, e.end - e.start)).unwrap();
    let tp = built_in_temporal(&am2).unwrap();
    let (s, _) = reconstruct_temporal(&am2, &pm, &prior, &tp, e.end).unwrap();
    assert_eq!(
        s.task_entries.iter().map(key).collect::<Vec<_>>(),
        prior.task_entries.iter().map(key).collect::<Vec<_>>()
    );
}

#[test]
fn slack_shortens_a_chain() {
    // task 1 at (0,10) finishes at 6
    let am = ApplicationModel::from_csv("task_id,parents,children,wcet,message_size\n1,-,2,10,1\n2,1,-,5,1\n", None)
        .unwrap();
    let pm = PlatformModel::from_text("ES:\n1\n").unwrap();
    let (prior, _) = full(&am, &pm);
    assert_eq!(prior.makespan, 15);
    let am2 = apply_slack(&am, &ContextEvent::slack(6, 1, 6)).unwrap();
    let tp = built_in_temporal(&am2).unwrap();
    let (s, m) = reconstruct_temporal(&am2, &pm, &prior, &tp, 6).unwrap();
    assert_eq!(m, 11);
    assert_eq!(key(s.entry(TaskId(1)).unwrap()), (TaskId(1), EsId(1), 0, 6));
    assert_eq!(key(s.entry(TaskId(2)).unwrap()), (TaskId(2), EsId(1), 6, 11));
}

#[test]
fn restore_is_floor_lookup() {
    let (am, pm) = generate_workload(10, 5).unwrap();
    let (_, log) = full(&am, &pm);
    let times: Vec<u64> = log.timestamps().collect();
    assert_eq!(times[0], 0);
    assert!(times.windows(2).all(|w| w[0] < w[1]));
    let probe = times[2] + 1;
    let (ts, _) = snapshot_restore_at(&log, probe).unwrap();
    assert!(ts <= probe && times.iter().all(|&x| x <= ts || x > probe));
    assert!(snapshot_restore(&log, -1).is_err());
}

#[test]
fn no_slack_never_worsens_with_hops_in_flight() {
    // a message still crossing links at t shares a link with re-sent ones
    let (am, pm) = generate_instance(32, 6, 15318107594128001989).unwrap();
    let (prior, _) = full(&am, &pm);
    let e = *prior.entry(TaskId(21)).unwrap();
    let am2 = apply_slack(&am, &ContextEvent::slack(e.end, 21, e.end - e.start)).unwrap();
    let tp = built_in_temporal(&am2).unwrap();
    let (_, m) = reconstruct_temporal(&am2, &pm, &prior, &tp, e.end).unwrap();
    assert!(m <= prior.makespan);
}

#[test]
fn slack_monotone_over_many_seeds() {
    for seed in 0..400u64 {
        let (am, pm) = generate_instance(5 + (seed as usize * 7) % 46, 2 + seed as usize % 5, seed).unwrap();
        let (prior, _) = full(&am, &pm);
        for pick in [seed as usize, seed as usize * 3 + 1] {
            let (am2, t) = slack_case(&am, &prior, pick, seed.wrapping_mul(31));
            let tp = built_in_temporal(&am2).unwrap();
            let (_, m) = reconstruct_temporal(&am2, &pm, &prior, &tp, t).unwrap();
            assert!(m <= prior.makespan, "seed {seed} pick {pick}: {m} > {}", prior.makespan);
        }
    }
}
