//! Deterministic mean-field dynamics
//! `x_i' = lambda * x_i * sum_j (f_ji(x) - f_ij(x)) * x_j`
//! integrated with fixed-step RK4.

use std::io::{self, Write};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::Game;
use crate::rules::ImitationRule;
use crate::simplex::{dist_inf, SimplexPoint};
use crate::trajectory::{write_csv_rows, Trajectory};

pub const DEFAULT_DT: f64 = 0.01;
pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_T: f64 = 1e4;
/// Largest simplex violation the drift guard will repair.
pub const GUARD_LIMIT: f64 = 1e-6;
/// Guard repairs allowed per integration before it is aborted.
pub const MAX_GUARD_ACTIVATIONS: usize = 1000;

struct Field<'a> {
    game: &'a Game,
    rule: &'a ImitationRule,
    lambda: f64,
    r: Vec<f64>,
    f: Vec<f64>,
}

impl<'a> Field<'a> {
    fn new(game: &'a Game, rule: &'a ImitationRule, lambda: f64) -> Self {
        let m = game.m();
        Field {
            game,
            rule,
            lambda,
            r: vec![0.0; m],
            f: vec![0.0; m * m],
        }
    }

    fn eval(&mut self, x: &[f64], out: &mut [f64]) {
        let m = x.len();
        self.game.rewards_into(x, &mut self.r);
        self.rule.matrix_into(&self.r, &mut self.f);
        for i in 0..m {
            let mut acc = 0.0;
            for j in 0..m {
                acc += (self.f[j * m + i] - self.f[i * m + j]) * x[j];
            }
            out[i] = self.lambda * x[i] * acc;
        }
    }
}

fn check_dims(game: &Game, rule: &ImitationRule, m: usize) -> Result<()> {
    if game.m() != m {
        return Err(Error::DimensionMismatch {
            expected: game.m(),
            got: m,
        });
    }
    match rule.dimension() {
        Some(k) if k != m => Err(Error::DimensionMismatch { expected: m, got: k }),
        _ => Ok(()),
    }
}

/// `lambda * diag(x) * (F^T - F) * x`.
pub fn mean_field_rhs(game: &Game, rule: &ImitationRule, x: &[f64], lambda: f64) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    Field::new(game, rule, lambda).eval(x, &mut out);
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OdeTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub converged_to: Option<SimplexPoint>,
    pub guard_activations: usize,
}

impl OdeTrajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last_time(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// Linear interpolation between recorded steps, clamped to the ends.
    pub fn state_at(&self, t: f64) -> Vec<f64> {
        let k = self.times.partition_point(|&s| s <= t);
        if k == 0 {
            return self.states[0].clone();
        }
        if k == self.times.len() {
            return self.states[k - 1].clone();
        }
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let w = (t - t0) / (t1 - t0);
        self.states[k - 1]
            .iter()
            .zip(&self.states[k])
            .map(|(a, b)| a + w * (b - a))
            .collect()
    }

    /// Same schema as the stochastic trajectories.
    pub fn write_csv<W: Write>(&self, w: W) -> io::Result<()> {
        let m = self.states.first().map_or(0, Vec::len);
        write_csv_rows(
            w,
            m,
            self.times.iter().copied().zip(self.states.iter().cloned()),
        )
    }
}

struct Stepper<'a> {
    field: Field<'a>,
    k: [Vec<f64>; 4],
    tmp: Vec<f64>,
    guard_activations: usize,
}

impl<'a> Stepper<'a> {
    fn new(game: &'a Game, rule: &'a ImitationRule, lambda: f64) -> Self {
        let m = game.m();
        Stepper {
            field: Field::new(game, rule, lambda),
            k: std::array::from_fn(|_| vec![0.0; m]),
            tmp: vec![0.0; m],
            guard_activations: 0,
        }
    }

    fn rk4(&mut self, x: &mut [f64], dt: f64, t: f64) -> Result<()> {
        let m = x.len();
        let [k1, k2, k3, k4] = &mut self.k;
        self.field.eval(x, k1);
        for i in 0..m {
            self.tmp[i] = x[i] + 0.5 * dt * k1[i];
        }
        self.field.eval(&self.tmp, k2);
        for i in 0..m {
            self.tmp[i] = x[i] + 0.5 * dt * k2[i];
        }
        self.field.eval(&self.tmp, k3);
        for i in 0..m {
            self.tmp[i] = x[i] + dt * k3[i];
        }
        self.field.eval(&self.tmp, k4);
        for i in 0..m {
            x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        self.guard(x, t + dt)
    }

    /// Clips small negative entries and renormalizes.
    fn guard(&mut self, x: &mut [f64], t: f64) -> Result<()> {
        let sum: f64 = x.iter().sum();
        let worst = x.iter().copied().fold(f64::INFINITY, f64::min);
        if !sum.is_finite() || (sum - 1.0).abs() > GUARD_LIMIT || worst < -GUARD_LIMIT {
            return Err(Error::SimplexGuard {
                t,
                msg: format!("state {x:?} left the simplex (sum {sum}, min {worst})"),
            });
        }
        if worst < 0.0 {
            self.guard_activations += 1;
            log::debug!("simplex guard clipped {worst} at t = {t}");
            if self.guard_activations > MAX_GUARD_ACTIVATIONS {
                return Err(Error::SimplexGuard {
                    t,
                    msg: format!("more than {MAX_GUARD_ACTIVATIONS} guard activations"),
                });
            }
            x.iter_mut().for_each(|v| *v = v.max(0.0));
        }
        let s: f64 = x.iter().sum();
        x.iter_mut().for_each(|v| *v /= s);
        Ok(())
    }
}

fn rhs_norm(stepper: &mut Stepper<'_>, x: &[f64]) -> f64 {
    let mut out = vec![0.0; x.len()];
    stepper.field.eval(x, &mut out);
    out.iter().fold(0.0, |a, v| a.max(v.abs()))
}

/// Integrates on `[0, t_end]` recording every step. `converged_to` is set if
/// the final point is stationary to within [`DEFAULT_TOL`].
pub fn integrate(
    game: &Game,
    rule: &ImitationRule,
    x0: &SimplexPoint,
    t_end: f64,
    dt: f64,
    lambda: f64,
) -> Result<OdeTrajectory> {
    check_dims(game, rule, x0.dim())?;
    if !(dt > 0.0) || !(t_end > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need dt > 0 and T > 0, got dt = {dt}, T = {t_end}"
        )));
    }
    let steps = (t_end / dt).round().max(1.0) as usize;
    let mut stepper = Stepper::new(game, rule, lambda);
    let mut x = x0.as_slice().to_vec();
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    times.push(0.0);
    states.push(x.clone());
    for k in 0..steps {
        let t = k as f64 * dt;
        stepper.rk4(&mut x, dt, t)?;
        times.push((k + 1) as f64 * dt);
        states.push(x.clone());
    }
    let converged_to = if rhs_norm(&mut stepper, &x) < DEFAULT_TOL {
        Some(SimplexPoint::with_tolerance(x, 1e-9)?)
    } else {
        None
    };
    Ok(OdeTrajectory {
        times,
        states,
        converged_to,
        guard_activations: stepper.guard_activations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Limit {
    pub point: SimplexPoint,
    pub converged: bool,
    pub time: f64,
    pub rhs_norm: f64,
}

/// Integrates until `||rhs||_inf < tol` or `max_t`.
pub fn find_limit(
    game: &Game,
    rule: &ImitationRule,
    x0: &SimplexPoint,
    tol: f64,
    max_t: f64,
    dt: f64,
    lambda: f64,
) -> Result<Limit> {
    check_dims(game, rule, x0.dim())?;
    if !(tol > 0.0) || !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need tol > 0 and dt > 0, got tol = {tol}, dt = {dt}"
        )));
    }
    let mut stepper = Stepper::new(game, rule, lambda);
    let mut x = x0.as_slice().to_vec();
    let mut t = 0.0;
    let mut k: u64 = 0;
    loop {
        let norm = rhs_norm(&mut stepper, &x);
        if norm < tol || t >= max_t {
            return Ok(Limit {
                point: SimplexPoint::with_tolerance(x, 1e-9)?,
                converged: norm < tol,
                time: t,
                rhs_norm: norm,
            });
        }
        stepper.rk4(&mut x, dt, t)?;
        k += 1;
        t = k as f64 * dt;
    }
}

/// Sup over `[0, t_end]` of `||X(t) - x(t)||_inf`, with `X` piecewise
/// constant and `x` linearly interpolated. Both interpolants are affine
/// between consecutive grid times, so checking every grid time (and the left
/// limit of `X` at its jumps) gives the exact supremum.
pub fn kurtz_deviation(stoch: &Trajectory, ode: &OdeTrajectory, t_end: f64) -> Result<f64> {
    if stoch.absorbed_at.is_none() && stoch.last_time() < t_end {
        return Err(Error::Coverage {
            needed: t_end,
            covered: stoch.last_time(),
        });
    }
    if ode.is_empty() || ode.last_time() < t_end - 1e-9 {
        return Err(Error::Coverage {
            needed: t_end,
            covered: if ode.is_empty() { 0.0 } else { ode.last_time() },
        });
    }
    if ode.states[0].len() != stoch.m() {
        return Err(Error::DimensionMismatch {
            expected: stoch.m(),
            got: ode.states[0].len(),
        });
    }
    let mut sup: f64 = 0.0;
    let mut check = |k: usize, t: f64| {
        let xs = stoch.fractions_at(k);
        sup = sup.max(dist_inf(&xs, &ode.state_at(t)));
    };
    for (k, &t) in stoch.times().iter().enumerate() {
        if t > t_end {
            break;
        }
        check(k, t);
        if k > 0 {
            check(k - 1, t);
        }
    }
    for &t in ode.times.iter().take_while(|&&t| t <= t_end) {
        check(stoch.index_at(t), t);
    }
    check(stoch.index_at(t_end), t_end);
    Ok(sup)
}
