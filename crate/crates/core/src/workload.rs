//! Seeded synthetic workloads for tests and benchmarks.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::ids::{EsId, RouterId};
use crate::models::{ApplicationModel, EndSystem, PlatformModel, Task, DEFAULT_BANDWIDTH};

const EDGE_PROBABILITY: f64 = 0.3;

/// A random layered DAG of `n` tasks on the six end system platform.
pub fn generate_workload(n: usize, seed: u64) -> Result<(ApplicationModel, PlatformModel)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let am = random_dag(n, &mut rng)?;
    Ok((am, chain_platform(6)?))
}

/// Like [`generate_workload`] but on `es_count` end systems.
pub fn generate_instance(n: usize, es_count: usize, seed: u64) -> Result<(ApplicationModel, PlatformModel)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let am = random_dag(n, &mut rng)?;
    Ok((am, chain_platform(es_count)?))
}

/// End systems attached in pairs to a chain of routers (ES1, ES2 on R1;
/// ES3, ES4 on R2; ...) with a route between every ordered pair.
pub fn chain_platform(es_count: usize) -> Result<PlatformModel> {
    if es_count == 0 {
        return Err(Error::EmptyPlatform);
    }
    let router = |es: u32| es.div_ceil(2);
    let ids: Vec<u32> = (1..=es_count as u32).collect();
    let mut routes = Vec::new();
    for &a in &ids {
        for &b in &ids {
            if a == b {
                continue;
            }
            let (ra, rb) = (router(a), router(b));
            let path: Vec<RouterId> =
                if ra <= rb { (ra..=rb).map(RouterId).collect() } else { (rb..=ra).rev().map(RouterId).collect() };
            routes.push(((EsId(a), EsId(b)), path));
        }
    }
    let routers = (1..=router(es_count as u32)).map(RouterId).collect();
    PlatformModel::new(ids.into_iter().map(EndSystem::new).collect(), Some(routers), routes, DEFAULT_BANDWIDTH)
}

fn random_dag(n: usize, rng: &mut ChaCha8Rng) -> Result<ApplicationModel> {
    if n == 0 {
        return Err(Error::InvalidCount(n));
    }
    let layers = ((n as f64).sqrt().round() as usize).clamp(1, n);
    let mut sizes = vec![1usize; layers];
    for _ in layers..n {
        sizes[rng.gen_range(0..layers)] += 1;
    }

    let mut by_layer: Vec<Vec<u32>> = Vec::with_capacity(layers);
    let mut next = 1u32;
    for size in sizes {
        by_layer.push((next..next + size as u32).collect());
        next += size as u32;
    }

    let mut parents: Vec<Vec<u32>> = vec![Vec::new(); n + 1];
    let mut children: Vec<Vec<u32>> = vec![Vec::new(); n + 1];
    for pair in by_layer.windows(2) {
        let (upper, lower) = (&pair[0], &pair[1]);
        for &c in lower {
            for &p in upper {
                if rng.gen_bool(EDGE_PROBABILITY) {
                    parents[c as usize].push(p);
                }
            }
            if parents[c as usize].is_empty() {
                parents[c as usize].push(*upper.choose(rng).expect("layers are non-empty"));
            }
            for &p in &parents[c as usize] {
                children[p as usize].push(c);
            }
        }
    }

    let tasks = (1..=n as u32)
        .map(|id| {
            let wcet = rng.gen_range(5..=30);
            let size = rng.gen_range(1..=8);
            Task::new(id, &parents[id as usize], &children[id as usize], wcet, size)
        })
        .collect();
    ApplicationModel::new(tasks, Vec::new())
}
