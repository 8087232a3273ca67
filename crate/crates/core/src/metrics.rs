//! Long-run statistics of simulated paths: absorption, fraction of time
//! spent near a set of targets, exit times from neighborhoods of critical
//! points, and empirical checks of the potential drift inequality.

use std::collections::{BTreeMap, HashSet};

use serde::Serialize;

use crate::engine::potential_drift_rates;
use crate::ensemble::{map_indexed, Execution};
use crate::error::{Error, Result};
use crate::game::Game;
use crate::landscape::{CriticalPoint, Landscape};
use crate::rules::ImitationRule;
use crate::simplex::{dist_inf, dist_l2, PopulationType, SimplexPoint};
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Norm {
    #[default]
    Euclidean,
    Sup,
}

impl Norm {
    pub fn dist(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Norm::Euclidean => dist_l2(a, b),
            Norm::Sup => dist_inf(a, b),
        }
    }
}

/// Fraction of `[0, t_last]` during which the path is within `gamma` of
/// some target, computed exactly from the dwell intervals.
pub fn time_near_set(
    traj: &Trajectory,
    targets: &[SimplexPoint],
    gamma: f64,
    norm: Norm,
) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidArgument(format!("gamma must be positive, got {gamma}")));
    }
    if traj.is_empty() {
        return Err(Error::InvalidArgument("empty trajectory".into()));
    }
    let near = |k: usize| {
        let x = traj.fractions_at(k);
        targets.iter().any(|c| norm.dist(&x, c.as_slice()) < gamma)
    };
    let total = traj.last_time();
    if total == 0.0 {
        return Ok(if near(0) { 1.0 } else { 0.0 });
    }
    let mut inside = 0.0;
    for k in 0..traj.len() - 1 {
        if near(k) {
            inside += traj.time(k + 1) - traj.time(k);
        }
    }
    Ok(inside / total)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ExitTime {
    Observed { entry: f64, exit: f64 },
    Censored { entry: Option<f64> },
}

impl ExitTime {
    /// Time between entering the inner ball and leaving the outer one.
    pub fn duration(&self) -> Option<f64> {
        match self {
            ExitTime::Observed { entry, exit } => Some(exit - entry),
            ExitTime::Censored { .. } => None,
        }
    }

    pub fn is_censored(&self) -> bool {
        matches!(self, ExitTime::Censored { .. })
    }
}

/// First entry into `{||x - center|| < delta / 2}`, then the first later
/// time with `||x - center|| >= delta`.
pub fn exit_time(traj: &Trajectory, center: &SimplexPoint, delta: f64, norm: Norm) -> Result<ExitTime> {
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument(format!("delta must be positive, got {delta}")));
    }
    if center.dim() != traj.m() {
        return Err(Error::DimensionMismatch {
            expected: traj.m(),
            got: center.dim(),
        });
    }
    let dist = |k: usize| norm.dist(&traj.fractions_at(k), center.as_slice());
    let Some(k_in) = (0..traj.len()).find(|&k| dist(k) < delta / 2.0) else {
        return Ok(ExitTime::Censored { entry: None });
    };
    let entry = traj.time(k_in);
    Ok(match (k_in + 1..traj.len()).find(|&k| dist(k) >= delta) {
        Some(k_out) => ExitTime::Observed {
            entry,
            exit: traj.time(k_out),
        },
        None => ExitTime::Censored { entry: Some(entry) },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DriftCheck {
    pub checked: usize,
    pub violations: usize,
    /// Smallest observed `q_plus / q_minus` among states with `q_minus > 0`.
    pub min_ratio: Option<f64>,
}

impl DriftCheck {
    fn merge(self, other: DriftCheck) -> DriftCheck {
        let min_ratio = match (self.min_ratio, other.min_ratio) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        DriftCheck {
            checked: self.checked + other.checked,
            violations: self.violations + other.violations,
            min_ratio,
        }
    }
}

/// Counts states with `q_plus < q_minus` among those farther than
/// `exclusion` (sup norm) from every fixed point.
pub fn drift_check<I>(
    game: &Game,
    rule: &ImitationRule,
    states: I,
    lambda: f64,
    fixed_points: &[Vec<f64>],
    exclusion: f64,
) -> Result<DriftCheck>
where
    I: IntoIterator<Item = PopulationType>,
{
    let mut out = DriftCheck {
        checked: 0,
        violations: 0,
        min_ratio: None,
    };
    for x in states {
        let xf = x.fractions();
        if fixed_points.iter().any(|c| dist_inf(&xf, c) <= exclusion) {
            continue;
        }
        let q = potential_drift_rates(game, rule, &x, lambda)?;
        out.checked += 1;
        if q.q_plus < q.q_minus {
            out.violations += 1;
        }
        if q.q_minus > 0.0 {
            let ratio = q.q_plus / q.q_minus;
            out.min_ratio = Some(out.min_ratio.map_or(ratio, |r: f64| r.min(ratio)));
        }
    }
    Ok(out)
}

/// All two-action types with population `n`.
pub fn two_action_states(n: u32) -> impl Iterator<Item = PopulationType> {
    (0..=n).map(move |c| PopulationType::from_counts(vec![c, n - c]).unwrap())
}

/// Linear-interpolation quantile of a nonempty sample.
pub fn quantile(values: &[f64], q: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    Some(v[lo] + (pos - lo as f64) * (v[hi] - v[lo]))
}

pub fn median(values: &[f64]) -> Option<f64> {
    quantile(values, 0.5)
}

/// Median when censored observations are known only to exceed every
/// observed value; `None` once half or more of the sample is censored.
pub fn censored_median(observed: &[f64], censored: usize) -> Option<f64> {
    let total = observed.len() + censored;
    if total == 0 || 2 * censored >= total {
        return None;
    }
    let mut v = observed.to_vec();
    v.sort_by(f64::total_cmp);
    v.extend(std::iter::repeat_n(f64::INFINITY, censored));
    let mid = (total - 1) as f64 / 2.0;
    let (lo, hi) = (mid.floor() as usize, mid.ceil() as usize);
    let m = 0.5 * (v[lo] + v[hi]);
    m.is_finite().then_some(m)
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportOptions {
    pub gammas: Vec<f64>,
    pub deltas: Vec<f64>,
    /// Distance from fixed points below which the drift inequality is not checked.
    pub drift_exclusion: f64,
    pub lambda: f64,
    pub t_gamma_norm: Norm,
    pub exit_norm: Norm,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions {
            gammas: vec![0.05],
            deltas: vec![0.1],
            drift_exclusion: 0.05,
            lambda: 1.0,
            t_gamma_norm: Norm::Euclidean,
            exit_norm: Norm::Sup,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TimeNear {
    pub gamma: f64,
    /// Index into the ESS list, or `None` for the union of all ESS.
    pub ess: Option<usize>,
    pub fraction: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExitRecord {
    pub point: usize,
    pub delta: f64,
    pub exit: ExitTime,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub seed: u64,
    pub n: u32,
    pub initial_state: Vec<f64>,
    pub tau: Option<f64>,
    pub absorbing_action: Option<usize>,
    pub horizon: f64,
    pub t_gamma: Vec<TimeNear>,
    pub exits: Vec<ExitRecord>,
    pub drift: DriftCheck,
}

#[derive(Debug, Clone, Serialize)]
pub struct Quantiles {
    pub q10: Option<f64>,
    pub median: Option<f64>,
    pub q90: Option<f64>,
}

impl Quantiles {
    fn of(v: &[f64]) -> Self {
        Quantiles {
            q10: quantile(v, 0.1),
            median: median(v),
            q90: quantile(v, 0.9),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExitAggregate {
    pub point: usize,
    pub delta: f64,
    pub observed: usize,
    pub censored: usize,
    pub censored_fraction: f64,
    pub observed_quantiles: Quantiles,
    pub censored_median: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Aggregates {
    pub runs: usize,
    pub absorbed_fraction: f64,
    pub tau: Quantiles,
    /// Keyed by `gamma` formatted with `{}`; union over the ESS set.
    pub t_gamma: BTreeMap<String, Quantiles>,
    pub exits: Vec<ExitAggregate>,
    pub drift: DriftCheck,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportMeta {
    pub t_gamma_norm: Norm,
    pub exit_norm: Norm,
    pub note: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct MetastabilityReport {
    pub critical_points: Vec<CriticalPoint>,
    pub per_run: Vec<RunReport>,
    pub aggregates: Aggregates,
    pub warnings: Vec<String>,
    pub meta: ReportMeta,
}

/// Summarizes an ensemble against a classified landscape. Runs that start on
/// the boundary are reported (with a warning), not rejected; callers that
/// need interior starts enforce it themselves.
pub fn metastability_report(
    runs: &[Trajectory],
    landscape: &Landscape,
    game: &Game,
    rule: &ImitationRule,
    opts: &ReportOptions,
    exec: Execution,
) -> Result<MetastabilityReport> {
    if runs.is_empty() {
        return Err(Error::InvalidArgument("no runs to report on".into()));
    }
    if opts.gammas.iter().chain(&opts.deltas).any(|v| !(*v > 0.0)) {
        return Err(Error::InvalidArgument("gammas and deltas must be positive".into()));
    }
    let ess: Vec<SimplexPoint> = landscape.ess().iter().map(|p| p.location.clone()).collect();
    let fixed: Vec<Vec<f64>> = landscape
        .critical_points
        .iter()
        .map(|p| p.location.as_slice().to_vec())
        .collect();
    let mut warnings = landscape.warnings.clone();
    for p in landscape.ess() {
        if p.location.is_vertex() {
            warnings.push(format!(
                "vertex maximum: {:?} is a local maximum of the potential",
                p.location.as_slice()
            ));
        }
    }
    let boundary_starts = runs.iter().filter(|t| t.state(0).support().len() < t.m()).count();
    if boundary_starts > 0 {
        warnings.push(format!(
            "boundary start: {boundary_starts} run(s) start outside the interior of the simplex"
        ));
    }

    let per_run: Vec<Result<RunReport>> = map_indexed(runs.len(), exec, |k| {
        let traj = &runs[k];
        let mut t_gamma = Vec::new();
        for &gamma in &opts.gammas {
            t_gamma.push(TimeNear {
                gamma,
                ess: None,
                fraction: time_near_set(traj, &ess, gamma, opts.t_gamma_norm)?,
            });
            for (i, c) in ess.iter().enumerate() {
                t_gamma.push(TimeNear {
                    gamma,
                    ess: Some(i),
                    fraction: time_near_set(traj, std::slice::from_ref(c), gamma, opts.t_gamma_norm)?,
                });
            }
        }
        let mut exits = Vec::new();
        for (i, p) in landscape.critical_points.iter().enumerate() {
            for &delta in &opts.deltas {
                exits.push(ExitRecord {
                    point: i,
                    delta,
                    exit: exit_time(traj, &p.location, delta, opts.exit_norm)?,
                });
            }
        }
        let visited: HashSet<&[u32]> = (0..traj.len()).map(|j| traj.counts_at(j)).collect();
        let states = visited
            .into_iter()
            .map(|c| PopulationType::from_counts(c.to_vec()).unwrap());
        let drift = drift_check(game, rule, states, opts.lambda, &fixed, opts.drift_exclusion)?;
        Ok(RunReport {
            seed: traj.meta.seed,
            n: traj.n(),
            initial_state: traj.fractions_at(0),
            tau: traj.absorbed_at,
            absorbing_action: traj.absorbing_action,
            horizon: traj.last_time(),
            t_gamma,
            exits,
            drift,
        })
    });
    let per_run: Vec<RunReport> = per_run.into_iter().collect::<Result<_>>()?;

    let taus: Vec<f64> = per_run.iter().filter_map(|r| r.tau).collect();
    let mut t_gamma = BTreeMap::new();
    for &gamma in &opts.gammas {
        let v: Vec<f64> = per_run
            .iter()
            .flat_map(|r| r.t_gamma.iter())
            .filter(|t| t.gamma == gamma && t.ess.is_none())
            .map(|t| t.fraction)
            .collect();
        t_gamma.insert(format!("{gamma}"), Quantiles::of(&v));
    }
    let mut exits = Vec::new();
    for i in 0..landscape.critical_points.len() {
        for &delta in &opts.deltas {
            let all: Vec<&ExitTime> = per_run
                .iter()
                .flat_map(|r| r.exits.iter())
                .filter(|e| e.point == i && e.delta == delta)
                .map(|e| &e.exit)
                .collect();
            let observed: Vec<f64> = all.iter().filter_map(|e| e.duration()).collect();
            let censored = all.len() - observed.len();
            exits.push(ExitAggregate {
                point: i,
                delta,
                observed: observed.len(),
                censored,
                censored_fraction: censored as f64 / all.len() as f64,
                observed_quantiles: Quantiles::of(&observed),
                censored_median: censored_median(&observed, censored),
            });
        }
    }
    let drift = per_run
        .iter()
        .map(|r| r.drift)
        .fold(DriftCheck { checked: 0, violations: 0, min_ratio: None }, DriftCheck::merge);
    let aggregates = Aggregates {
        runs: per_run.len(),
        absorbed_fraction: taus.len() as f64 / per_run.len() as f64,
        tau: Quantiles::of(&taus),
        t_gamma,
        exits,
        drift,
    };
    Ok(MetastabilityReport {
        critical_points: landscape.critical_points.clone(),
        per_run,
        aggregates,
        warnings,
        meta: ReportMeta {
            t_gamma_norm: opts.t_gamma_norm,
            exit_norm: opts.exit_norm,
            note: "T_gamma distances use the configured norm (Euclidean by default); \
                   exit times use the sup norm by default; drift min_ratio is an observed, \
                   uncertified margin"
                .into(),
        },
    })
}
