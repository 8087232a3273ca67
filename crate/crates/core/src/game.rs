//! Population games: reward evaluators over the simplex, optional potential,
//! congestion games and the built-in quartic reference game.

use std::fmt;
use std::sync::Arc;

use rand::SeedableRng;
use rand_pcg::Pcg64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simplex::{grid_points, sample_interior, ActionSet};

/// Step of the central differences used when a potential has no analytic gradient.
pub const FD_STEP: f64 = 1e-6;
/// Boundary points are pulled this far toward the barycenter before differencing.
pub const FD_BOUNDARY_SHIFT: f64 = 1e-5;

/// Dense polynomial, coefficients in ascending degree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Polynomial {
    coefficients: Vec<f64>,
}

impl Polynomial {
    pub fn new(coefficients: Vec<f64>) -> Self {
        Polynomial { coefficients }
    }

    pub fn constant(c: f64) -> Self {
        Polynomial::new(vec![c])
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coefficients.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn derivative(&self) -> Polynomial {
        Polynomial::new(
            self.coefficients
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| k as f64 * c)
                .collect(),
        )
    }

    /// Antiderivative with zero constant term.
    pub fn antiderivative(&self) -> Polynomial {
        let mut c = Vec::with_capacity(self.coefficients.len() + 1);
        c.push(0.0);
        c.extend(
            self.coefficients
                .iter()
                .enumerate()
                .map(|(k, &a)| a / (k + 1) as f64),
        );
        Polynomial::new(c)
    }
}

pub type RewardFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;
pub type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type GradientFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

#[derive(Clone)]
enum Rewards {
    /// `r_i(x) = P_i(x_i)`
    Congestion(Vec<Polynomial>),
    Custom(RewardFn),
}

#[derive(Clone)]
enum Potential {
    /// `Phi(x) = sum_i Psi_i(x_i)`
    Separable(Vec<Polynomial>),
    Custom {
        value: ScalarFn,
        gradient: Option<GradientFn>,
    },
}

/// A population game. Evaluators are pure and the value is immutable, so a
/// `Game` can be shared freely between ensemble workers.
#[derive(Clone)]
pub struct Game {
    id: String,
    actions: ActionSet,
    rewards: Rewards,
    potential: Option<Potential>,
}

impl fmt::Debug for Game {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Game")
            .field("id", &self.id)
            .field("m", &self.m())
            .field("has_potential", &self.has_potential())
            .finish()
    }
}

impl Game {
    /// A game with arbitrary rewards and no potential attached.
    pub fn custom<F>(id: impl Into<String>, m: usize, rewards: F) -> Result<Self>
    where
        F: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    {
        Ok(Game {
            id: id.into(),
            actions: ActionSet::new(m)?,
            rewards: Rewards::Custom(Arc::new(rewards)),
            potential: None,
        })
    }

    /// Attaches a potential. Without `gradient`, derivatives are taken by
    /// central differences; the value function must then accept points
    /// slightly off the simplex.
    pub fn with_potential<P>(mut self, value: P, gradient: Option<GradientFn>) -> Self
    where
        P: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        self.potential = Some(Potential::Custom {
            value: Arc::new(value),
            gradient,
        });
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn m(&self) -> usize {
        self.actions.len()
    }

    pub fn actions(&self) -> ActionSet {
        self.actions
    }

    pub fn rewards_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.m());
        match &self.rewards {
            Rewards::Congestion(polys) => {
                for ((o, p), &xi) in out.iter_mut().zip(polys).zip(x) {
                    *o = p.eval(xi);
                }
            }
            Rewards::Custom(f) => f(x, out),
        }
    }

    pub fn rewards(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.m()];
        self.rewards_into(x, &mut out);
        out
    }

    pub fn has_potential(&self) -> bool {
        self.potential.is_some()
    }

    pub fn has_analytic_gradient(&self) -> bool {
        matches!(
            self.potential,
            Some(Potential::Separable(_)) | Some(Potential::Custom { gradient: Some(_), .. })
        )
    }

    pub fn potential(&self, x: &[f64]) -> Result<f64> {
        match &self.potential {
            None => Err(Error::NoPotential(self.id.clone())),
            Some(Potential::Separable(psi)) => Ok(psi.iter().zip(x).map(|(p, &xi)| p.eval(xi)).sum()),
            Some(Potential::Custom { value, .. }) => Ok(value(x)),
        }
    }

    pub fn potential_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut g = vec![0.0; self.m()];
        match &self.potential {
            None => return Err(Error::NoPotential(self.id.clone())),
            Some(Potential::Separable(psi)) => {
                for ((gi, p), &xi) in g.iter_mut().zip(psi).zip(x) {
                    *gi = p.derivative().eval(xi);
                }
            }
            Some(Potential::Custom {
                gradient: Some(grad),
                ..
            }) => grad(x, &mut g),
            Some(Potential::Custom {
                value,
                gradient: None,
            }) => {
                let m = x.len() as f64;
                let mut base = x.to_vec();
                if x.iter().any(|&v| v < FD_BOUNDARY_SHIFT) {
                    for v in base.iter_mut() {
                        *v += FD_BOUNDARY_SHIFT * (1.0 / m - *v);
                    }
                }
                let mut probe = base.clone();
                for i in 0..g.len() {
                    probe[i] = base[i] + FD_STEP;
                    let up = value(&probe);
                    probe[i] = base[i] - FD_STEP;
                    let down = value(&probe);
                    probe[i] = base[i];
                    g[i] = (up - down) / (2.0 * FD_STEP);
                }
            }
        }
        Ok(g)
    }
}

/// Congestion game `r_i(x) = P_i(x_i)` with potential `sum_i Psi_i(x_i)`,
/// `Psi_i` the antiderivative of `P_i` vanishing at zero.
pub fn make_congestion_game(reward_polys: Vec<Polynomial>) -> Result<Game> {
    let actions = ActionSet::new(reward_polys.len())?;
    let psi = reward_polys.iter().map(Polynomial::antiderivative).collect();
    Ok(Game {
        id: "congestion".into(),
        actions,
        rewards: Rewards::Congestion(reward_polys),
        potential: Some(Potential::Separable(psi)),
    })
}

/// Coefficients of `r_1(x) = 9 - (4x - 3)(4x - 1)^2`.
pub const EXAMPLE4_R1: [f64; 4] = [12.0, -28.0, 80.0, -64.0];
/// Coefficients of the closed-form potential in `x_1`.
pub const EXAMPLE4_PHI: [f64; 5] = [9.0, 3.0, -14.0, 80.0 / 3.0, -16.0];

/// Two-action congestion game with a saddle of the potential at `x_1 = 1/4`
/// and its global maximum at `x_1 = 3/4`. The potential is the closed-form
/// quartic in `x_1` (it coincides with the antiderivative sum on the simplex).
pub fn example4_game() -> Game {
    Game {
        id: "example4".into(),
        actions: ActionSet::new(2).unwrap(),
        rewards: Rewards::Congestion(vec![
            Polynomial::new(EXAMPLE4_R1.to_vec()),
            Polynomial::constant(9.0),
        ]),
        potential: Some(Potential::Separable(vec![
            Polynomial::new(EXAMPLE4_PHI.to_vec()),
            Polynomial::constant(0.0),
        ])),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyReport {
    pub max_violation: f64,
    pub pass: bool,
}

/// Checks `r_j - r_i = dPhi/dx_j - dPhi/dx_i` at uniformly sampled interior points.
pub fn check_potential_consistency(
    game: &Game,
    num_samples: usize,
    tol: f64,
    seed: u64,
) -> Result<ConsistencyReport> {
    if !game.has_potential() {
        return Err(Error::NoPotential(game.id().to_string()));
    }
    if num_samples == 0 {
        return Err(Error::InvalidArgument("num_samples must be at least 1".into()));
    }
    let mut rng = Pcg64::seed_from_u64(seed);
    let m = game.m();
    let mut r = vec![0.0; m];
    let mut max_violation: f64 = 0.0;
    for _ in 0..num_samples {
        let x = sample_interior(m, &mut rng);
        game.rewards_into(&x, &mut r);
        let g = game.potential_gradient(&x)?;
        for i in 0..m {
            for j in (i + 1)..m {
                let v = ((r[j] - r[i]) - (g[j] - g[i])).abs();
                max_violation = max_violation.max(v);
            }
        }
    }
    Ok(ConsistencyReport {
        max_violation,
        pass: max_violation < tol,
    })
}

/// Range of all rewards over a simplex grid, widened by 1% so that affine
/// normalizations land strictly inside the unit interval.
pub fn reward_bounds(game: &Game, grid_resolution: usize) -> Result<(f64, f64)> {
    if grid_resolution < 2 {
        return Err(Error::InvalidArgument(format!(
            "grid resolution must be at least 2, got {grid_resolution}"
        )));
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut r = vec![0.0; game.m()];
    for x in grid_points(game.m(), grid_resolution) {
        game.rewards_into(&x, &mut r);
        for &v in &r {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidArgument("rewards are not finite on the grid".into()));
    }
    let pad = 0.01 * (hi - lo) + 1e-9;
    Ok((lo - 0.01 * lo.abs() - pad, hi + 0.01 * hi.abs() + pad))
}
