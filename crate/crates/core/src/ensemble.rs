//! Seeded ensembles of independent runs.
//!
//! Runs share only immutable inputs. With the `parallel` feature (default)
//! they are spread over the rayon pool; [`Execution::Sequential`], or a build
//! without the feature, runs them in index order on the calling thread. Both
//! paths produce identical results because run `k` always draws from its own
//! stream seeded with `derive_seed(base_seed, k)`.

use crate::engine::{simulate_complete, simulate_network_from_type, SimConfig};
use crate::error::{Error, Result};
use crate::game::Game;
use crate::rng::derive_seed;
use crate::rules::ImitationRule;
use crate::simplex::PopulationType;
use crate::topology::Graph;
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    #[default]
    Parallel,
    Sequential,
}

/// Maps `f` over `0..count`, preserving order.
pub fn map_indexed<T, F>(count: usize, exec: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Send + Sync,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..count).into_par_iter().map(f).collect()
        }
        _ => (0..count).map(f).collect(),
    }
}

/// Everything needed to launch one run except its seed.
#[derive(Debug, Clone)]
pub struct RunSpec {
    pub game: Game,
    pub rule: ImitationRule,
    /// `None` selects the exact type-chain engine on the complete graph.
    pub graph: Option<Graph>,
    pub x0: PopulationType,
    pub sim: SimConfig,
}

impl RunSpec {
    pub fn complete(game: Game, rule: ImitationRule, x0: PopulationType, sim: SimConfig) -> Self {
        RunSpec {
            game,
            rule,
            graph: None,
            x0,
            sim,
        }
    }

    pub fn network(
        graph: Graph,
        game: Game,
        rule: ImitationRule,
        x0: PopulationType,
        sim: SimConfig,
    ) -> Self {
        RunSpec {
            game,
            rule,
            graph: Some(graph),
            x0,
            sim,
        }
    }

    /// Runs once with `seed` in place of the configured one.
    pub fn run(&self, seed: u64) -> Result<Trajectory> {
        let cfg = SimConfig {
            seed,
            ..self.sim.clone()
        };
        match &self.graph {
            None => simulate_complete(&self.game, &self.rule, &self.x0, &cfg),
            Some(g) => simulate_network_from_type(g, &self.game, &self.rule, &self.x0, &cfg),
        }
    }
}

/// Runs `num_runs` seeded replicas and applies `f` to each trajectory as
/// soon as it finishes, so large ensembles need not be held in memory.
pub fn ensemble_map<T, F>(
    spec: &RunSpec,
    num_runs: usize,
    base_seed: u64,
    exec: Execution,
    f: F,
) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, Trajectory) -> T + Send + Sync,
{
    if num_runs == 0 {
        return Err(Error::InvalidArgument("an ensemble needs at least one run".into()));
    }
    map_indexed(num_runs, exec, |k| {
        spec.run(derive_seed(base_seed, k as u64)).map(|traj| f(k, traj))
    })
    .into_iter()
    .collect()
}

pub fn ensemble(
    spec: &RunSpec,
    num_runs: usize,
    base_seed: u64,
    exec: Execution,
) -> Result<Vec<Trajectory>> {
    ensemble_map(spec, num_runs, base_seed, exec, |_, t| t)
}
