//! JSON experiment configuration shared by every CLI subcommand.
//!
//! Parsing is strict (unknown fields are rejected) and every error carries
//! the line and column it refers to, so a bad file can be fixed without
//! guessing. Semantic errors point at the line of the offending key.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::engine::SimConfig;
use crate::ensemble::RunSpec;
use crate::error::{Error, Result};
use crate::game::{example4_game, make_congestion_game, Game, Polynomial};
use crate::meanfield::{DEFAULT_DT, DEFAULT_MAX_T, DEFAULT_TOL};
use crate::rules::{arctan_rule, replicator_for, replicator_rule, ImitationRule};
use crate::simplex::{PopulationType, SimplexPoint};
use crate::topology::Graph;

/// Off-simplex slack accepted for `initial.x` before it is renormalized.
pub const INITIAL_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum GameSpec {
    Example4,
    /// `rewards[i]` holds the coefficients of `r_i(x_i)`, constant term first.
    Congestion { rewards: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum RuleSpec {
    Arctan {
        /// Gain matrix; all ones when omitted.
        #[serde(rename = "K", default)]
        k: Option<Vec<Vec<f64>>>,
    },
    Replicator {
        #[serde(default = "default_eps_margin")]
        eps_margin: f64,
        /// `[r_lo, r_hi]`; derived from the game when omitted.
        #[serde(default)]
        bounds: Option<[f64; 2]>,
    },
}

fn default_eps_margin() -> f64 {
    1e-6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum TopologySpec {
    Complete {
        n: usize,
    },
    Er {
        n: usize,
        p: f64,
        #[serde(default)]
        seed: u64,
    },
    Lattice {
        side: usize,
        #[serde(default = "default_true")]
        periodic: bool,
    },
    File {
        path: PathBuf,
        #[serde(default)]
        n: Option<usize>,
    },
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSpec {
    /// Fractions; rounded to counts by largest remainder.
    X(Vec<f64>),
    Counts(Vec<u32>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSpec {
    #[serde(default = "one")]
    pub runs: usize,
    #[serde(default)]
    pub base_seed: u64,
}

fn one() -> usize {
    1
}

impl Default for EnsembleSpec {
    fn default() -> Self {
        EnsembleSpec { runs: 1, base_seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OdeSpec {
    /// Length of the written ODE trajectory; the simulation horizon when omitted.
    pub t_end: Option<f64>,
    pub dt: f64,
    pub tol: f64,
    pub max_t: f64,
}

impl Default for OdeSpec {
    fn default() -> Self {
        OdeSpec {
            t_end: None,
            dt: DEFAULT_DT,
            tol: DEFAULT_TOL,
            max_t: DEFAULT_MAX_T,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LandscapeSpec {
    pub grid: usize,
    pub refine_tol: f64,
    pub starts: usize,
    pub step_tol: f64,
    pub seed: u64,
}

impl Default for LandscapeSpec {
    fn default() -> Self {
        LandscapeSpec {
            grid: 1000,
            refine_tol: 1e-12,
            starts: 64,
            step_tol: 1e-4,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisSpec {
    pub gammas: Vec<f64>,
    pub deltas: Vec<f64>,
    pub drift_exclusion: f64,
    /// Whether `compare` computes the stochastic-vs-ODE deviation.
    pub kurtz: bool,
    /// Window `[0, kurtz_t]` of the deviation; the horizon when omitted.
    pub kurtz_t: Option<f64>,
    /// Population sizes swept by `metastability` and `compare`.
    pub n_sweep: Vec<usize>,
}

impl Default for AnalysisSpec {
    fn default() -> Self {
        AnalysisSpec {
            gammas: vec![0.05],
            deltas: vec![0.1],
            drift_exclusion: 0.05,
            kurtz: true,
            kurtz_t: None,
            n_sweep: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub game: GameSpec,
    pub rule: RuleSpec,
    pub topology: TopologySpec,
    pub initial: InitialSpec,
    pub sim: SimConfig,
    #[serde(default)]
    pub ensemble: EnsembleSpec,
    #[serde(default)]
    pub ode: OdeSpec,
    #[serde(default)]
    pub landscape: LandscapeSpec,
    #[serde(default)]
    pub analysis: AnalysisSpec,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

impl ExperimentConfig {
    /// Reads and validates a config file. Relative edge-list paths are
    /// resolved against the config's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let src = std::fs::read_to_string(path)?;
        let mut cfg = Self::parse(&src)?;
        if let TopologySpec::File { path: edges, .. } = &mut cfg.topology {
            if edges.is_relative() {
                if let Some(dir) = path.parent() {
                    *edges = dir.join(&*edges);
                }
            }
        }
        Ok(cfg)
    }

    pub fn parse(src: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(src).map_err(|e| {
            // the position is reported separately
            let text = e.to_string();
            let msg = match text.rfind(" at line ") {
                Some(i) => text[..i].to_string(),
                None => text,
            };
            Error::Config {
                line: e.line(),
                column: e.column(),
                msg,
            }
        })?;
        cfg.validate().map_err(|(key, msg)| {
            let (line, column) = locate(src, key);
            Error::Config { line, column, msg }
        })?;
        Ok(cfg)
    }

    /// Cross-field checks. Failures name the JSON key they concern.
    fn validate(&self) -> std::result::Result<(), (&'static str, String)> {
        let game = self.build_game().map_err(|e| ("game", e.to_string()))?;
        let m = game.m();
        if let RuleSpec::Arctan { k: Some(k) } = &self.rule {
            if k.len() != m || k.iter().any(|row| row.len() != m) {
                return Err(("K", format!("K must be {m}x{m} to match the game")));
            }
        }
        self.build_rule(&game).map_err(|e| ("rule", e.to_string()))?;
        self.sim.validate().map_err(|e| ("sim", e.to_string()))?;
        match &self.initial {
            InitialSpec::X(x) => {
                if x.len() != m {
                    return Err(("initial", format!("initial.x has {} entries, game has {m} actions", x.len())));
                }
                SimplexPoint::with_tolerance(x.clone(), INITIAL_TOLERANCE)
                    .map_err(|e| ("initial", e.to_string()))?;
            }
            InitialSpec::Counts(c) => {
                if c.len() != m {
                    return Err(("initial", format!("initial.counts has {} entries, game has {m} actions", c.len())));
                }
                let total: u64 = c.iter().map(|&v| v as u64).sum();
                if let Some(n) = self.topology_n() {
                    if total != n as u64 {
                        return Err(("initial", format!("initial.counts sum to {total}, topology has {n} nodes")));
                    }
                }
                if !self.analysis.n_sweep.is_empty() {
                    return Err(("n_sweep", "n_sweep needs initial.x, not fixed counts".into()));
                }
            }
        }
        match &self.topology {
            TopologySpec::Complete { n } | TopologySpec::Er { n, .. } if *n < 2 => {
                return Err(("topology", format!("need at least 2 nodes, got {n}")));
            }
            TopologySpec::Er { p, .. } if !(*p > 0.0 && *p <= 1.0) => {
                return Err(("p", format!("p must be in (0, 1], got {p}")));
            }
            TopologySpec::Lattice { side, .. } if *side < 2 => {
                return Err(("side", format!("side must be at least 2, got {side}")));
            }
            TopologySpec::Lattice { .. } | TopologySpec::File { .. } if !self.analysis.n_sweep.is_empty() => {
                return Err(("n_sweep", "n_sweep is only supported for complete and er topologies".into()));
            }
            _ => {}
        }
        if self.analysis.n_sweep.iter().any(|&n| n < 2) {
            return Err(("n_sweep", "every swept n must be at least 2".into()));
        }
        if self.ensemble.runs == 0 {
            return Err(("runs", "runs must be at least 1".into()));
        }
        let a = &self.analysis;
        if a.gammas.iter().chain(&a.deltas).any(|v| !(*v > 0.0)) {
            return Err(("analysis", "gammas and deltas must be positive".into()));
        }
        let o = &self.ode;
        if !(o.dt > 0.0 && o.tol > 0.0 && o.max_t > 0.0) || o.t_end.is_some_and(|t| !(t > 0.0)) {
            return Err(("ode", "ode dt, tol, max_t and t_end must be positive".into()));
        }
        let l = &self.landscape;
        if l.grid < 2 || l.starts == 0 || !(l.refine_tol > 0.0 && l.step_tol > 0.0) {
            return Err(("landscape", "landscape needs grid >= 2, starts >= 1 and positive tolerances".into()));
        }
        Ok(())
    }

    pub fn build_game(&self) -> Result<Game> {
        match &self.game {
            GameSpec::Example4 => Ok(example4_game()),
            GameSpec::Congestion { rewards } => {
                make_congestion_game(rewards.iter().cloned().map(Polynomial::new).collect())
            }
        }
    }

    pub fn build_rule(&self, game: &Game) -> Result<ImitationRule> {
        match &self.rule {
            RuleSpec::Arctan { k } => {
                let m = game.m();
                arctan_rule(k.clone().unwrap_or_else(|| vec![vec![1.0; m]; m]))
            }
            RuleSpec::Replicator { eps_margin, bounds: Some([lo, hi]) } => replicator_rule(*lo, *hi, *eps_margin),
            RuleSpec::Replicator { eps_margin, bounds: None } => replicator_for(game, *eps_margin),
        }
    }

    /// Node count fixed by the topology, if it can be known without I/O.
    fn topology_n(&self) -> Option<usize> {
        match &self.topology {
            TopologySpec::Complete { n } | TopologySpec::Er { n, .. } => Some(*n),
            TopologySpec::Lattice { side, .. } => Some(side * side),
            TopologySpec::File { n, .. } => *n,
        }
    }

    /// The configured population size.
    pub fn n(&self) -> Result<usize> {
        match self.topology_n() {
            Some(n) => Ok(n),
            None => Ok(self.build_graph(None)?.map_or(0, |g| g.n())),
        }
    }

    /// Population sizes to run: the sweep when given, else the configured n.
    pub fn sizes(&self) -> Result<Vec<usize>> {
        if self.analysis.n_sweep.is_empty() {
            Ok(vec![self.n()?])
        } else {
            Ok(self.analysis.n_sweep.clone())
        }
    }

    /// The interaction graph at size `n` (the configured size when `None`);
    /// `None` for the complete graph, which needs no adjacency.
    pub fn build_graph(&self, n: Option<usize>) -> Result<Option<Graph>> {
        Ok(match &self.topology {
            TopologySpec::Complete { .. } => None,
            TopologySpec::Er { n: n0, p, seed } => Some(Graph::erdos_renyi(n.unwrap_or(*n0), *p, *seed)?),
            TopologySpec::Lattice { side, periodic } => Some(Graph::square_lattice(*side, *periodic)?),
            TopologySpec::File { path, n } => Some(Graph::from_edge_list(path, *n)?),
        })
    }

    /// Initial state as a simplex point, renormalized within tolerance.
    pub fn initial_point(&self) -> Result<SimplexPoint> {
        match &self.initial {
            InitialSpec::X(x) => SimplexPoint::with_tolerance(x.clone(), INITIAL_TOLERANCE),
            InitialSpec::Counts(c) => Ok(PopulationType::from_counts(c.clone())?.to_simplex()),
        }
    }

    pub fn initial_type(&self, n: usize) -> Result<PopulationType> {
        match &self.initial {
            InitialSpec::Counts(c) => {
                let ty = PopulationType::from_counts(c.clone())?;
                if ty.n() as usize != n {
                    return Err(Error::InvalidArgument(format!("initial counts sum to {}, need {n}", ty.n())));
                }
                Ok(ty)
            }
            InitialSpec::X(_) => {
                let n = u32::try_from(n).map_err(|_| Error::InvalidArgument(format!("n = {n} is too large")))?;
                PopulationType::from_fractions(self.initial_point()?.as_slice(), n)
            }
        }
    }

    pub fn run_spec(&self, n: usize) -> Result<RunSpec> {
        let game = self.build_game()?;
        let rule = self.build_rule(&game)?;
        let graph = self.build_graph(Some(n))?;
        let n = graph.as_ref().map_or(n, Graph::n);
        let x0 = self.initial_type(n)?;
        Ok(RunSpec {
            game,
            rule,
            graph,
            x0,
            sim: self.sim.clone(),
        })
    }
}

/// Line and column of the first occurrence of `"key"` in `src`, or (1, 1).
fn locate(src: &str, key: &str) -> (usize, usize) {
    let needle = format!("\"{key}\"");
    src.lines()
        .enumerate()
        .find_map(|(i, line)| line.find(&needle).map(|c| (i + 1, c + 1)))
        .unwrap_or((1, 1))
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIG2: &str = r#"{
  "game": {"type": "example4"},
  "rule": {"type": "arctan", "K": [[1, 1], [1, 1]]},
  "topology": {"type": "complete", "n": 2500},
  "initial": {"x": [0.001, 0.999]},
  "sim": {"lambda": 1.0, "horizon": 200.0},
  "ensemble": {"runs": 3, "base_seed": 7}
}"#;

    fn config_error(src: &str) -> (usize, String) {
        match ExperimentConfig::parse(src) {
            Err(Error::Config { line, msg, .. }) => (line, msg),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn parses_with_defaults() {
        let cfg = ExperimentConfig::parse(FIG2).unwrap();
        assert_eq!(cfg.n().unwrap(), 2500);
        assert_eq!(cfg.ensemble.runs, 3);
        assert_eq!(cfg.analysis.gammas, vec![0.05]);
        assert_eq!(cfg.output_dir, PathBuf::from("out"));
        let spec = cfg.run_spec(2500).unwrap();
        assert_eq!(spec.x0.counts(), &[3, 2497]);
        assert!(spec.graph.is_none());
    }

    #[test]
    fn syntax_errors_carry_lines() {
        let broken = FIG2.replace("\"n\": 2500}", "\"n\": 2500");
        let (line, _) = config_error(&broken);
        assert!(line >= 4);
        let (line, msg) = config_error(&FIG2.replace("\"horizon\"", "\"horizn\""));
        assert_eq!(line, 6);
        assert!(msg.contains("horizn"), "{msg}");
    }

    #[test]
    fn semantic_errors_point_at_key() {
        let (line, msg) = config_error(&FIG2.replace("[0.001, 0.999]", "[0.2, 0.9]"));
        assert_eq!(line, 5);
        assert!(msg.contains("simplex"), "{msg}");
        let (line, _) = config_error(&FIG2.replace("[[1, 1], [1, 1]]", "[[1, 1, 1]]"));
        assert_eq!(line, 3);
        let (_, msg) = config_error(&FIG2.replace("[0.001, 0.999]", "[0.5, 0.25, 0.25]"));
        assert!(msg.contains("3 entries"), "{msg}");
        let counts = FIG2.replace("\"x\": [0.001, 0.999]", "\"counts\": [10, 20]");
        let (_, msg) = config_error(&counts);
        assert!(msg.contains("2500"), "{msg}");
    }

    #[test]
    fn small_off_simplex_renormalized() {
        let cfg = ExperimentConfig::parse(&FIG2.replace("[0.001, 0.999]", "[0.3, 0.7000005]")).unwrap();
        let x = cfg.initial_point().unwrap();
        assert!((x.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sweep_rules() {
        let sweep = FIG2.replace("\"ensemble\"", "\"analysis\": {\"n_sweep\": [100, 400]},\n  \"ensemble\"");
        let cfg = ExperimentConfig::parse(&sweep).unwrap();
        assert_eq!(cfg.sizes().unwrap(), vec![100, 400]);
        assert_eq!(cfg.run_spec(100).unwrap().x0.n(), 100);
        let lattice = sweep.replace(
            "{\"type\": \"complete\", \"n\": 2500}",
            "{\"type\": \"lattice\", \"side\": 50}",
        );
        let (_, msg) = config_error(&lattice);
        assert!(msg.contains("n_sweep"), "{msg}");
    }

    #[test]
    fn replicator_and_congestion() {
        let src = r#"{
  "game": {"type": "congestion", "rewards": [[2, -1], [1, -1]]},
  "rule": {"type": "replicator", "eps_margin": 0.01},
  "topology": {"type": "er", "n": 200, "p": 0.1, "seed": 3},
  "initial": {"x": [0.5, 0.5]},
  "sim": {"horizon": 5}
}"#;
        let cfg = ExperimentConfig::parse(src).unwrap();
        let spec = cfg.run_spec(200).unwrap();
        assert_eq!(spec.graph.as_ref().unwrap().n(), 200);
        assert!(spec.rule.replicator_slope().is_some());
    }
}
