//! Exact simulation of the imitation jump process.
//!
//! On the complete graph with self-loops the type `X(t)` is itself a Markov
//! chain with jump rates `n * lambda * x_i * x_j * f_ij(x)`, and
//! [`simulate_complete`] runs the Gillespie direct method on it. On any other
//! graph [`simulate_network`] tracks the per-node configuration: activations
//! arrive at total rate `n * lambda`, the ringing node picks a uniform
//! neighbor, and copies it with probability `f_ij` evaluated at the current
//! global type.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::Game;
use crate::rng::{exponential, rng_from_seed, SimRng};
use crate::rules::ImitationRule;
use crate::simplex::{Configuration, PopulationType};
use crate::topology::Graph;
use crate::trajectory::{RunMeta, Trajectory};
use rand::Rng;

/// Every jump is recorded until this many records exist; after that the
/// complete-graph engine falls back to stride recording.
pub const MAX_RECORDED_EVENTS: usize = 10_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    pub horizon: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_stride")]
    pub record_stride: f64,
    #[serde(default = "default_true")]
    pub stop_on_absorption: bool,
}

fn default_lambda() -> f64 {
    1.0
}

fn default_stride() -> f64 {
    0.1
}

fn default_true() -> bool {
    true
}

impl SimConfig {
    pub fn new(lambda: f64, horizon: f64, seed: u64) -> Self {
        SimConfig {
            lambda,
            horizon,
            seed,
            record_stride: default_stride(),
            stop_on_absorption: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("lambda", self.lambda),
            ("horizon", self.horizon),
            ("record_stride", self.record_stride),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftRates {
    pub q_plus: f64,
    pub q_minus: f64,
}

fn check_dims(game: &Game, rule: &ImitationRule, m: usize) -> Result<()> {
    if game.m() != m {
        return Err(Error::DimensionMismatch {
            expected: game.m(),
            got: m,
        });
    }
    if let Some(k) = rule.dimension() {
        if k != m {
            return Err(Error::DimensionMismatch { expected: m, got: k });
        }
    }
    Ok(())
}

/// Row-major `m x m` matrix of jump rates `i -> j`; the diagonal is zero.
pub fn transition_rates(
    game: &Game,
    rule: &ImitationRule,
    x: &PopulationType,
    lambda: f64,
) -> Result<Vec<Vec<f64>>> {
    check_dims(game, rule, x.m())?;
    let m = x.m();
    let xf = x.fractions();
    let r = game.rewards(&xf);
    let scale = x.n() as f64 * lambda;
    let mut out = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in 0..m {
            if i != j {
                out[i][j] = scale * xf[i] * xf[j] * rule.prob(i, j, &r);
            }
        }
    }
    Ok(out)
}

/// Rates at which a jump raises (`q_plus`) or lowers (`q_minus`) the
/// potential: a jump `i -> j` counts as raising iff `r_j > r_i`. Ties count
/// in neither.
pub fn potential_drift_rates(
    game: &Game,
    rule: &ImitationRule,
    x: &PopulationType,
    lambda: f64,
) -> Result<DriftRates> {
    if !game.has_potential() {
        return Err(Error::NoPotential(game.id().to_string()));
    }
    check_dims(game, rule, x.m())?;
    let xf = x.fractions();
    let r = game.rewards(&xf);
    let scale = x.n() as f64 * lambda;
    let mut q = DriftRates {
        q_plus: 0.0,
        q_minus: 0.0,
    };
    for i in 0..x.m() {
        for j in 0..x.m() {
            let rate = scale * xf[i] * xf[j] * rule.prob(i, j, &r);
            if r[j] > r[i] {
                q.q_plus += rate;
            } else if r[j] < r[i] {
                q.q_minus += rate;
            }
        }
    }
    Ok(q)
}

fn meta(cfg: &SimConfig, n: u32, game: &Game, rule: &ImitationRule, topology: String) -> RunMeta {
    RunMeta {
        seed: cfg.seed,
        n,
        lambda: cfg.lambda,
        rule_id: rule.id(),
        game_id: game.id().to_string(),
        topology_id: topology,
    }
}

/// Gillespie simulation of the type chain on the complete graph.
pub fn simulate_complete(
    game: &Game,
    rule: &ImitationRule,
    x0: &PopulationType,
    cfg: &SimConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    check_dims(game, rule, x0.m())?;
    let mut rng = rng_from_seed(cfg.seed);
    Ok(run_complete(game, rule, x0, cfg, &mut rng))
}

fn run_complete(
    game: &Game,
    rule: &ImitationRule,
    x0: &PopulationType,
    cfg: &SimConfig,
    rng: &mut SimRng,
) -> Trajectory {
    let m = x0.m();
    let n = x0.n();
    let nf = n as f64;
    let max_total = nf * cfg.lambda * (1.0 + 1e-12);
    let mut traj = Trajectory::new(m, n, meta(cfg, n, game, rule, format!("complete(n={n})")));
    let mut state = x0.clone();
    traj.push(0.0, state.counts());
    if let Some(a) = state.pure_action() {
        traj.absorbed_at = Some(0.0);
        traj.absorbing_action = Some(a);
        if cfg.stop_on_absorption {
            return traj;
        }
    }

    let mut x = vec![0.0; m];
    let mut r = vec![0.0; m];
    let mut rates = vec![0.0; m * m];
    let mut t = 0.0;
    let mut stride_from: Option<f64> = None;
    loop {
        let counts = state.counts();
        for (xi, &c) in x.iter_mut().zip(counts) {
            *xi = c as f64 / nf;
        }
        game.rewards_into(&x, &mut r);
        let mut total = 0.0;
        for i in 0..m {
            for j in 0..m {
                let rate = if i != j && counts[i] > 0 && counts[j] > 0 {
                    cfg.lambda * counts[i] as f64 * counts[j] as f64 / nf * rule.prob(i, j, &r)
                } else {
                    0.0
                };
                rates[i * m + j] = rate;
                total += rate;
            }
        }
        assert!(
            total <= max_total,
            "total jump rate {total} exceeds n * lambda = {}",
            nf * cfg.lambda
        );
        let dt = exponential(rng, total);
        if !(t + dt <= cfg.horizon) {
            break;
        }
        t += dt;
        let target = rng.gen::<f64>() * total;
        let mut acc = 0.0;
        let mut pick = None;
        for (k, &rate) in rates.iter().enumerate() {
            if rate > 0.0 {
                acc += rate;
                pick = Some(k);
                if target < acc {
                    break;
                }
            }
        }
        let k = pick.expect("positive total rate has a positive entry");
        state.apply_jump(k / m, k % m);
        traj.event_count += 1;
        traj.activations += 1;

        let absorbed = state.pure_action();
        match stride_from {
            _ if absorbed.is_some() => traj.push(t, state.counts()),
            None if traj.len() < MAX_RECORDED_EVENTS => traj.push(t, state.counts()),
            None => {
                log::warn!("record cap reached at t = {t}; switching to stride recording");
                stride_from = Some(t);
                traj.push(t, state.counts());
            }
            Some(last) if t - last >= cfg.record_stride => {
                stride_from = Some(t);
                traj.push(t, state.counts());
            }
            Some(_) => {}
        }
        if let Some(a) = absorbed {
            traj.absorbed_at = Some(t);
            traj.absorbing_action = Some(a);
            if cfg.stop_on_absorption {
                return traj;
            }
        }
    }
    if traj.last_time() < cfg.horizon {
        traj.push(cfg.horizon, state.counts());
    }
    traj
}

/// Outcome of one clock ring on a general graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Activation {
    pub node: usize,
    pub contact: usize,
    pub from: usize,
    pub to: usize,
    pub switched: bool,
}

/// Configuration-level chain on an arbitrary graph, advanced one clock ring
/// at a time.
pub struct NetworkChain<'a> {
    graph: &'a Graph,
    game: &'a Game,
    rule: &'a ImitationRule,
    actions: Vec<usize>,
    state: PopulationType,
    x: Vec<f64>,
    rewards: Vec<f64>,
    rewards_stale: bool,
}

impl<'a> NetworkChain<'a> {
    pub fn new(
        graph: &'a Graph,
        game: &'a Game,
        rule: &'a ImitationRule,
        y0: &Configuration,
    ) -> Result<Self> {
        if graph.n() != y0.len() {
            return Err(Error::DimensionMismatch {
                expected: graph.n(),
                got: y0.len(),
            });
        }
        check_dims(game, rule, y0.m())?;
        let m = y0.m();
        Ok(NetworkChain {
            graph,
            game,
            rule,
            actions: y0.actions().to_vec(),
            state: y0.population_type(),
            x: vec![0.0; m],
            rewards: vec![0.0; m],
            rewards_stale: true,
        })
    }

    pub fn state(&self) -> &PopulationType {
        &self.state
    }

    pub fn actions(&self) -> &[usize] {
        &self.actions
    }

    pub fn activate<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Activation {
        let node = rng.gen_range(0..self.graph.n());
        let contact = self.graph.sample_neighbor(node, rng);
        let from = self.actions[node];
        let to = self.actions[contact];
        let mut switched = false;
        if from != to {
            if self.rewards_stale {
                let nf = self.state.n() as f64;
                for (xi, &c) in self.x.iter_mut().zip(self.state.counts()) {
                    *xi = c as f64 / nf;
                }
                self.game.rewards_into(&self.x, &mut self.rewards);
                self.rewards_stale = false;
            }
            if rng.gen::<f64>() < self.rule.prob(from, to, &self.rewards) {
                self.actions[node] = to;
                self.state.apply_jump(from, to);
                self.rewards_stale = true;
                switched = true;
            }
        }
        Activation {
            node,
            contact,
            from,
            to,
            switched,
        }
    }
}

/// Event-driven simulation on a general graph; the type is recorded every
/// `record_stride` time units and at absorption.
pub fn simulate_network(
    graph: &Graph,
    game: &Game,
    rule: &ImitationRule,
    y0: &Configuration,
    cfg: &SimConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    let mut chain = NetworkChain::new(graph, game, rule, y0)?;
    let mut rng = rng_from_seed(cfg.seed);
    Ok(run_network(&mut chain, cfg, &mut rng))
}

fn run_network(chain: &mut NetworkChain<'_>, cfg: &SimConfig, rng: &mut SimRng) -> Trajectory {
    let n = chain.state.n();
    let m = chain.state.m();
    let topology = chain.graph.id().to_string();
    let mut traj = Trajectory::new(m, n, meta(cfg, n, chain.game, chain.rule, topology));
    traj.push(0.0, chain.state.counts());
    if let Some(a) = chain.state.pure_action() {
        traj.absorbed_at = Some(0.0);
        traj.absorbing_action = Some(a);
        if cfg.stop_on_absorption {
            return traj;
        }
    }
    let total_rate = n as f64 * cfg.lambda;
    let mut t = 0.0;
    let mut next_slot: u64 = 1;
    loop {
        let t_next = t + exponential(rng, total_rate);
        loop {
            let slot = next_slot as f64 * cfg.record_stride;
            if slot > t_next || slot > cfg.horizon {
                break;
            }
            if slot > traj.last_time() {
                traj.push(slot, chain.state.counts());
            }
            next_slot += 1;
        }
        if t_next > cfg.horizon {
            break;
        }
        t = t_next;
        traj.activations += 1;
        if chain.activate(rng).switched {
            traj.event_count += 1;
            if let Some(a) = chain.state.pure_action() {
                if traj.absorbed_at.is_none() {
                    traj.push(t, chain.state.counts());
                    traj.absorbed_at = Some(t);
                    traj.absorbing_action = Some(a);
                }
                if cfg.stop_on_absorption {
                    return traj;
                }
            }
        }
    }
    if traj.last_time() < cfg.horizon {
        traj.push(cfg.horizon, chain.state.counts());
    }
    traj
}

/// Runs the network engine from an initial type, spreading it uniformly at
/// random over the nodes with the run's own stream.
pub fn simulate_network_from_type(
    graph: &Graph,
    game: &Game,
    rule: &ImitationRule,
    x0: &PopulationType,
    cfg: &SimConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    if graph.n() != x0.n() as usize {
        return Err(Error::DimensionMismatch {
            expected: graph.n(),
            got: x0.n() as usize,
        });
    }
    let mut rng = rng_from_seed(cfg.seed);
    let y0 = Configuration::shuffled(x0, &mut rng);
    let mut chain = NetworkChain::new(graph, game, rule, &y0)?;
    Ok(run_network(&mut chain, cfg, &mut rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{example4_game, make_congestion_game, Polynomial};
    use crate::rules::{arctan_uniform, custom_rule};
    use approx::assert_abs_diff_eq;

    fn ty(counts: &[u32]) -> PopulationType {
        PopulationType::from_counts(counts.to_vec()).unwrap()
    }

    #[test]
    fn rates_vanish_at_vertices() {
        let game = example4_game();
        let rule = arctan_uniform(2, 1.0).unwrap();
        let q = transition_rates(&game, &rule, &ty(&[0, 100]), 1.0).unwrap();
        assert!(q.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn rates_at_the_midpoint() {
        let flat = make_congestion_game(vec![Polynomial::constant(1.0); 2]).unwrap();
        let half = custom_rule("half", 2, |i, j, _| if i == j { 1.0 } else { 0.5 });
        let q = transition_rates(&flat, &half, &ty(&[50, 50]), 1.0).unwrap();
        assert_abs_diff_eq!(q[0][1], 12.5, epsilon = 1e-12);
        assert_abs_diff_eq!(q[1][0], 12.5, epsilon = 1e-12);
        assert_eq!(q[0][0], 0.0);

        let q = transition_rates(&example4_game(), &arctan_uniform(2, 1.0).unwrap(), &ty(&[50, 50]), 1.0)
            .unwrap();
        assert_abs_diff_eq!(q[1][0], 18.75, epsilon = 1e-12);
        assert_abs_diff_eq!(q[0][1], 6.25, epsilon = 1e-12);
    }

    #[test]
    fn drift_rates_examples() {
        let rule = arctan_uniform(2, 1.0).unwrap();
        let d = potential_drift_rates(&example4_game(), &rule, &ty(&[50, 50]), 1.0).unwrap();
        assert_abs_diff_eq!(d.q_plus, 18.75, epsilon = 1e-12);
        assert_abs_diff_eq!(d.q_minus, 6.25, epsilon = 1e-12);

        let flat = make_congestion_game(vec![Polynomial::constant(2.0); 3]).unwrap();
        let d = potential_drift_rates(&flat, &arctan_uniform(3, 1.0).unwrap(), &ty(&[3, 3, 4]), 1.0)
            .unwrap();
        assert_eq!(d, DriftRates { q_plus: 0.0, q_minus: 0.0 });

        let plain = Game::custom("plain", 2, |_, r| r.fill(0.0)).unwrap();
        assert!(matches!(
            potential_drift_rates(&plain, &rule, &ty(&[1, 1]), 1.0),
            Err(Error::NoPotential(_))
        ));
    }

    #[test]
    fn pure_start_is_absorbed_immediately() {
        let game = example4_game();
        let rule = arctan_uniform(2, 1.0).unwrap();
        let cfg = SimConfig::new(1.0, 10.0, 1);
        let traj = simulate_complete(&game, &rule, &ty(&[10, 0]), &cfg).unwrap();
        assert_eq!(traj.len(), 1);
        assert_eq!(traj.absorbed_at, Some(0.0));
        assert_eq!(traj.absorbing_action, Some(0));

        let g = Graph::square_lattice(3, true).unwrap();
        let y0 = Configuration::new(vec![1; 9], 2).unwrap();
        let traj = simulate_network(&g, &game, &rule, &y0, &cfg).unwrap();
        assert_eq!(traj.absorbed_at, Some(0.0));
        assert_eq!(traj.len(), 1);
    }

    #[test]
    fn jumps_move_exactly_one_individual() {
        let game = example4_game();
        let rule = arctan_uniform(2, 1.0).unwrap();
        let cfg = SimConfig::new(1.0, 20.0, 5);
        let traj = simulate_complete(&game, &rule, &ty(&[30, 70]), &cfg).unwrap();
        assert!(traj.len() > 100);
        for k in 1..traj.len() - 1 {
            let a = traj.counts_at(k - 1);
            let b = traj.counts_at(k);
            let moved: i64 = a.iter().zip(b).map(|(&p, &q)| (p as i64 - q as i64).abs()).sum();
            assert_eq!(moved, 2, "record {k}");
            assert!(traj.time(k) > traj.time(k - 1));
        }
        assert_eq!(traj.last_time(), 20.0);
    }

    #[test]
    fn absorption_is_a_trap() {
        // drifts to action 1 and stays there
        let game = Game::custom("tilt", 2, |_, r| {
            r[0] = 0.0;
            r[1] = 5.0;
        })
        .unwrap();
        let rule = arctan_uniform(2, 5.0).unwrap();
        let mut cfg = SimConfig::new(1.0, 200.0, 2);
        cfg.stop_on_absorption = false;
        let traj = simulate_complete(&game, &rule, &ty(&[5, 5]), &cfg).unwrap();
        let tau = traj.absorbed_at.expect("absorbed");
        assert_eq!(traj.absorbing_action, Some(1));
        let k = traj.index_at(tau);
        for j in k..traj.len() {
            assert_eq!(traj.counts_at(j), &[0, 10]);
        }
        assert_eq!(traj.last_time(), 200.0);
    }

    #[test]
    fn network_mismatch_rejected() {
        let g = Graph::complete(4).unwrap();
        let y0 = Configuration::new(vec![0, 1, 0], 2).unwrap();
        let game = example4_game();
        let rule = arctan_uniform(2, 1.0).unwrap();
        assert!(matches!(
            simulate_network(&g, &game, &rule, &y0, &SimConfig::new(1.0, 1.0, 0)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn network_records_on_stride() {
        let g = Graph::square_lattice(10, true).unwrap();
        let game = example4_game();
        let rule = arctan_uniform(2, 1.0).unwrap();
        let mut cfg = SimConfig::new(1.0, 5.0, 3);
        cfg.record_stride = 0.5;
        let x0 = ty(&[40, 60]);
        let traj = simulate_network_from_type(&g, &game, &rule, &x0, &cfg).unwrap();
        assert_eq!(traj.times(), &[0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0]);
        assert!(traj.activations > 0);
    }

    #[test]
    fn same_seed_same_path() {
        let game = example4_game();
        let rule = arctan_uniform(2, 1.0).unwrap();
        let cfg = SimConfig::new(1.0, 10.0, 99);
        let a = simulate_complete(&game, &rule, &ty(&[60, 40]), &cfg).unwrap();
        let b = simulate_complete(&game, &rule, &ty(&[60, 40]), &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn invalid_config_rejected() {
        let mut cfg = SimConfig::new(1.0, 10.0, 0);
        cfg.lambda = 0.0;
        assert!(cfg.validate().is_err());
        cfg.lambda = 1.0;
        cfg.record_stride = -1.0;
        assert!(cfg.validate().is_err());
    }
}
