//! Subcommand implementations behind the `imitodyn` binary.
//!
//! Each command validates everything it can before touching the output
//! directory, so an invalid config leaves no files behind. Errors are split
//! into usage errors (exit code 2) and runtime failures (exit code 1).

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::ensemble::{ensemble, ensemble_map, Execution};
use crate::error::Error;
use crate::game::Game;
use crate::landscape::{find_critical_points_2action, find_critical_points_multi, CriticalPoint, Landscape};
use crate::meanfield::{find_limit, integrate, kurtz_deviation, Limit};
use crate::metrics::{metastability_report, quantile, MetastabilityReport, ReportOptions};
use crate::simplex::SimplexPoint;
use crate::trajectory::RunSummary;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Ode,
    Landscape,
    Metastability,
    Compare,
}

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub runs: Option<usize>,
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub msg: String,
}

impl CliError {
    fn usage(msg: impl Into<String>) -> Self {
        CliError { code: 2, msg: msg.into() }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError { code: 1, msg: e.to_string() }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Loads the config and dispatches. Returns the files written.
pub fn run(cmd: Command, config: &Path, ov: &Overrides, exec: Execution) -> CliResult<Vec<PathBuf>> {
    let mut cfg = ExperimentConfig::load(config).map_err(|e| match e {
        Error::Config { .. } => CliError::usage(format!("{}: {e}", config.display())),
        other => CliError::usage(format!("cannot read {}: {other}", config.display())),
    })?;
    if let Some(seed) = ov.seed {
        cfg.ensemble.base_seed = seed;
    }
    if let Some(out) = &ov.out {
        cfg.output_dir = out.clone();
    }
    if let Some(runs) = ov.runs {
        if runs == 0 {
            return Err(CliError::usage("--runs must be at least 1"));
        }
        cfg.ensemble.runs = runs;
    }
    match cmd {
        Command::Simulate => simulate(&cfg, exec),
        Command::Ode => ode(&cfg),
        Command::Landscape => landscape_cmd(&cfg),
        Command::Metastability => metastability(&cfg, exec),
        Command::Compare => compare(&cfg, exec),
    }
}

fn create(dir: &Path, name: &str) -> CliResult<(PathBuf, BufWriter<File>)> {
    fs::create_dir_all(dir).map_err(Error::from)?;
    let path = dir.join(name);
    let file = File::create(&path).map_err(Error::from)?;
    Ok((path, BufWriter::new(file)))
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> CliResult<PathBuf> {
    let (path, mut w) = create(dir, name)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::Io(e.to_string()))?;
    writeln!(w).and_then(|_| w.flush()).map_err(Error::from)?;
    Ok(path)
}

#[derive(Serialize)]
struct SimulateSummary<'a> {
    base_seed: u64,
    n: usize,
    topology: String,
    runs: &'a [RunSummary],
}

fn simulate(cfg: &ExperimentConfig, exec: Execution) -> CliResult<Vec<PathBuf>> {
    let n = cfg.n()?;
    let spec = cfg.run_spec(n)?;
    let dir = cfg.output_dir.clone();
    let written = ensemble_map(&spec, cfg.ensemble.runs, cfg.ensemble.base_seed, exec, |k, traj| {
        let name = format!("run_{k:04}.csv");
        let (path, mut w) = create(&dir, &name)?;
        traj.write_csv(&mut w)
            .and_then(|_| w.flush())
            .map_err(Error::from)?;
        Ok::<_, CliError>((path, traj.summary(), traj.meta.topology_id.clone()))
    })?
    .into_iter()
    .collect::<CliResult<Vec<_>>>()?;
    let summaries: Vec<RunSummary> = written.iter().map(|(_, s, _)| s.clone()).collect();
    let summary = SimulateSummary {
        base_seed: cfg.ensemble.base_seed,
        n,
        topology: written[0].2.clone(),
        runs: &summaries,
    };
    let mut files: Vec<PathBuf> = written.into_iter().map(|(p, _, _)| p).collect();
    files.push(write_json(&dir, "summary.json", &summary)?);
    Ok(files)
}

#[derive(Serialize)]
struct LimitFile<'a> {
    x0: &'a SimplexPoint,
    limit: &'a Limit,
    lambda: f64,
    dt: f64,
    tol: f64,
    guard_activations: usize,
}

fn ode(cfg: &ExperimentConfig) -> CliResult<Vec<PathBuf>> {
    let game = cfg.build_game()?;
    let rule = cfg.build_rule(&game)?;
    let x0 = cfg.initial_point()?;
    let (o, lambda) = (&cfg.ode, cfg.sim.lambda);
    let t_end = o.t_end.unwrap_or(cfg.sim.horizon);
    let traj = integrate(&game, &rule, &x0, t_end, o.dt, lambda)?;
    let limit = find_limit(&game, &rule, &x0, o.tol, o.max_t, o.dt, lambda)?;
    let (csv, mut w) = create(&cfg.output_dir, "ode.csv")?;
    traj.write_csv(&mut w).and_then(|_| w.flush()).map_err(Error::from)?;
    let file = LimitFile {
        x0: &x0,
        limit: &limit,
        lambda,
        dt: o.dt,
        tol: o.tol,
        guard_activations: traj.guard_activations,
    };
    Ok(vec![csv, write_json(&cfg.output_dir, "limit.json", &file)?])
}

fn compute_landscape(cfg: &ExperimentConfig, game: &Game) -> CliResult<Landscape> {
    if !game.has_potential() {
        return Err(CliError::usage("landscape requires a potential"));
    }
    let l = &cfg.landscape;
    Ok(if game.m() == 2 {
        find_critical_points_2action(game, l.grid, l.refine_tol)?
    } else {
        find_critical_points_multi(game, l.starts, l.step_tol, l.seed)?
    })
}

#[derive(Serialize)]
struct LandscapeFile<'a> {
    game: &'a str,
    critical_points: &'a [CriticalPoint],
    ess: Vec<&'a SimplexPoint>,
    warnings: &'a [String],
}

fn landscape_cmd(cfg: &ExperimentConfig) -> CliResult<Vec<PathBuf>> {
    let game = cfg.build_game()?;
    let land = compute_landscape(cfg, &game)?;
    let file = LandscapeFile {
        game: game.id(),
        critical_points: &land.critical_points,
        ess: land.ess().into_iter().map(|p| &p.location).collect(),
        warnings: &land.warnings,
    };
    Ok(vec![write_json(&cfg.output_dir, "landscape.json", &file)?])
}

#[derive(Serialize)]
struct SweepEntry {
    n: usize,
    report: MetastabilityReport,
}

#[derive(Serialize)]
struct Trend {
    n: Vec<usize>,
    absorbed_fraction: Vec<f64>,
    /// Censored fraction of exits from the first ESS at the first delta.
    ess_exit_censored_fraction: Vec<f64>,
    censoring_monotone: bool,
}

#[derive(Serialize)]
struct MetastabilityFile {
    base_seed: u64,
    runs: usize,
    sweep: Vec<SweepEntry>,
    trend: Trend,
}

fn metastability(cfg: &ExperimentConfig, exec: Execution) -> CliResult<Vec<PathBuf>> {
    let x0 = cfg.initial_point()?;
    if x0.support().len() < x0.dim() {
        return Err(CliError::usage(format!(
            "precondition: initial condition {:?} is not in the interior of the simplex",
            x0.as_slice()
        )));
    }
    let game = cfg.build_game()?;
    let rule = cfg.build_rule(&game)?;
    let land = compute_landscape(cfg, &game)?;
    let opts = ReportOptions {
        gammas: cfg.analysis.gammas.clone(),
        deltas: cfg.analysis.deltas.clone(),
        drift_exclusion: cfg.analysis.drift_exclusion,
        lambda: cfg.sim.lambda,
        ..ReportOptions::default()
    };
    let ess_index = land.critical_points.iter().position(|p| p.is_ess);
    let mut sweep = Vec::new();
    for n in cfg.sizes()? {
        let spec = cfg.run_spec(n)?;
        if spec.x0.is_pure() {
            return Err(CliError::usage(format!(
                "precondition: initial condition rounds to a pure state at n = {n}"
            )));
        }
        let runs = ensemble(&spec, cfg.ensemble.runs, cfg.ensemble.base_seed, exec)?;
        let report = metastability_report(&runs, &land, &game, &rule, &opts, exec)?;
        sweep.push(SweepEntry { n: spec.x0.n() as usize, report });
    }
    let censored: Vec<f64> = sweep
        .iter()
        .map(|s| match ess_index {
            Some(i) => s
                .report
                .aggregates
                .exits
                .iter()
                .find(|e| e.point == i)
                .map_or(0.0, |e| e.censored_fraction),
            None => 0.0,
        })
        .collect();
    let trend = Trend {
        n: sweep.iter().map(|s| s.n).collect(),
        absorbed_fraction: sweep.iter().map(|s| s.report.aggregates.absorbed_fraction).collect(),
        censoring_monotone: censored.windows(2).all(|w| w[0] <= w[1]),
        ess_exit_censored_fraction: censored,
    };
    let file = MetastabilityFile {
        base_seed: cfg.ensemble.base_seed,
        runs: cfg.ensemble.runs,
        sweep,
        trend,
    };
    Ok(vec![write_json(&cfg.output_dir, "metastability.json", &file)?])
}

#[derive(Serialize)]
struct DeviationRow {
    n: usize,
    runs: usize,
    median: Option<f64>,
    q10: Option<f64>,
    q90: Option<f64>,
}

#[derive(Serialize)]
struct CompareFile {
    t_end: f64,
    base_seed: u64,
    table: Vec<DeviationRow>,
}

fn compare(cfg: &ExperimentConfig, exec: Execution) -> CliResult<Vec<PathBuf>> {
    if !cfg.analysis.kurtz {
        return Err(CliError::usage("compare requires analysis.kurtz = true"));
    }
    let t_end = cfg.analysis.kurtz_t.unwrap_or(cfg.sim.horizon);
    if t_end > cfg.sim.horizon {
        return Err(CliError::usage(format!(
            "analysis.kurtz_t = {t_end} exceeds the simulation horizon {}",
            cfg.sim.horizon
        )));
    }
    let game = cfg.build_game()?;
    let rule = cfg.build_rule(&game)?;
    let ode = integrate(&game, &rule, &cfg.initial_point()?, t_end, cfg.ode.dt, cfg.sim.lambda)?;
    let mut rows = Vec::new();
    let mut table = Vec::new();
    for n in cfg.sizes()? {
        let spec = cfg.run_spec(n)?;
        let devs = ensemble_map(&spec, cfg.ensemble.runs, cfg.ensemble.base_seed, exec, |_, traj| {
            kurtz_deviation(&traj, &ode, t_end).map(|d| (traj.meta.seed, d))
        })?
        .into_iter()
        .collect::<Result<Vec<_>, Error>>()?;
        let n = spec.x0.n() as usize;
        let values: Vec<f64> = devs.iter().map(|d| d.1).collect();
        table.push(DeviationRow {
            n,
            runs: values.len(),
            median: quantile(&values, 0.5),
            q10: quantile(&values, 0.1),
            q90: quantile(&values, 0.9),
        });
        rows.extend(devs.into_iter().enumerate().map(|(k, (seed, d))| (n, k, seed, d)));
    }
    let (csv, mut w) = create(&cfg.output_dir, "compare.csv")?;
    let mut body = || -> std::io::Result<()> {
        writeln!(w, "n,run,seed,deviation")?;
        for (n, k, seed, d) in &rows {
            writeln!(w, "{n},{k},{seed},{d}")?;
        }
        w.flush()
    };
    body().map_err(Error::from)?;
    let file = CompareFile {
        t_end,
        base_seed: cfg.ensemble.base_seed,
        table,
    };
    Ok(vec![csv, write_json(&cfg.output_dir, "compare.json", &file)?])
}
