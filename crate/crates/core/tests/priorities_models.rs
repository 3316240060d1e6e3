use std::collections::BTreeMap;

use proptest::prelude::*;
use ttrecon::{b_level, generate_workload, temporal_order, ApplicationModel, PlatformModel, Task, TaskId};

/// Random DAG: edges only from lower to higher ids.
fn dag() -> impl Strategy<Value = ApplicationModel> {
    (1usize..=12)
        .prop_flat_map(|n| (Just(n), prop::collection::vec(any::<bool>(), n * n), prop::collection::vec(0u64..40, n)))
        .prop_map(|(n, edges, wcet)| {
            let edge = |i: usize, j: usize| i < j && edges[i * n + j];
            let tasks = (0..n)
                .map(|i| {
                    let parents: Vec<u32> = (0..n).filter(|&p| edge(p, i)).map(|p| p as u32 + 1).collect();
                    let children: Vec<u32> = (0..n).filter(|&c| edge(i, c)).map(|c| c as u32 + 1).collect();
                    Task::new(i as u32 + 1, &parents, &children, wcet[i], 1)
                })
                .collect();
            ApplicationModel::new(tasks, vec![]).unwrap()
        })
}

/// Every path out of `id`, summed; the maximum is the oracle.
fn all_path_lengths(am: &ApplicationModel, id: TaskId, acc: u64, out: &mut Vec<u64>) {
    let t = am.task(id).unwrap();
    let acc = acc + t.wcet;
    if t.children.is_empty() {
        out.push(acc);
    }
    for &c in &t.children {
        all_path_lengths(am, c, acc, out);
    }
}

#[test]
fn sample_levels() {
    let am = ApplicationModel::from_csv(
        "task_id,parents,children,wcet,message_size\n1,-,2;3,10,2\n2,1,4,15,4\n3,1,5,20,3\n4,2,-,25,6\n5,3,-,30,5\n",
        None,
    )
    .unwrap();
    let levels = b_level(&am).unwrap();
    let expected: BTreeMap<TaskId, u64> =
        [(4, 25), (5, 30), (2, 40), (3, 50), (1, 60)].map(|(t, v)| (TaskId(t), v)).into();
    assert_eq!(levels, expected);
    assert_eq!(temporal_order(&levels).order, [1, 3, 2, 5, 4].map(TaskId));
}

proptest! {
    #[test]
    fn b_level_is_longest_path(am in dag()) {
        let levels = b_level(&am).unwrap();
        for t in am.tasks() {
            let mut lengths = Vec::new();
            all_path_lengths(&am, t.id, 0, &mut lengths);
            prop_assert_eq!(levels[&t.id], *lengths.iter().max().unwrap());
            for c in &t.children {
                prop_assert!(levels[&t.id] >= levels[c] + t.wcet);
            }
        }
    }

    #[test]
    fn temporal_order_respects_precedence_for_positive_wcet(am in dag()) {
        let order = temporal_order(&b_level(&am).unwrap()).order;
        let pos: BTreeMap<TaskId, usize> = order.iter().enumerate().map(|(i, &t)| (t, i)).collect();
        for t in am.tasks().iter().filter(|t| t.wcet > 0) {
            for c in &t.children {
                prop_assert!(pos[&t.id] < pos[c]);
            }
        }
    }

    #[test]
    fn application_round_trips(n in 1usize..60, seed in any::<u64>()) {
        let (am, pm) = generate_workload(n, seed).unwrap();
        let csv = ApplicationModel::from_csv(&am.tasks_csv(), Some(&am.messages_csv())).unwrap();
        prop_assert_eq!(&csv, &am);
        prop_assert_eq!(&ApplicationModel::from_json(&am.to_json()).unwrap(), &am);
        prop_assert_eq!(&PlatformModel::from_text(&pm.to_text()).unwrap(), &pm);
        prop_assert_eq!(&PlatformModel::from_json(&pm.to_json()).unwrap(), &pm);
    }
}
