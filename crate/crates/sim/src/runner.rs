//! Replications on worker threads.

use std::num::NonZeroUsize;
use std::thread;

use mcp_core::engine::{replication_seeds, run_with_seed, EngineError, Replicated};
use mcp_core::{Aggregate, RunResult, Scenario, SimConfig};

pub fn default_workers() -> usize {
    thread::available_parallelism().map_or(1, NonZeroUsize::get)
}

/// Runs every replication of `config`, `workers` at a time. Results come
/// back in replication order and match a sequential run exactly.
pub fn run_parallel(config: &SimConfig, scenario: &Scenario, workers: usize) -> Result<Replicated, EngineError> {
    let seeds = replication_seeds(config);
    let workers = workers.clamp(1, seeds.len().max(1));
    let mut slots: Vec<Option<Result<RunResult, EngineError>>> = vec![None; seeds.len()];
    thread::scope(|s| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let seeds = &seeds;
                s.spawn(move || {
                    (w..seeds.len())
                        .step_by(workers)
                        .map(|k| (k, run_with_seed(config, scenario, seeds[k])))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            for (k, r) in h.join().expect("replication thread panicked") {
                slots[k] = Some(r);
            }
        }
    });
    let runs = slots
        .into_iter()
        .map(|r| r.expect("every replication ran"))
        .collect::<Result<Vec<_>, _>>()?;
    let aggregate = Aggregate::new(&runs);
    Ok(Replicated { runs, aggregate })
}
