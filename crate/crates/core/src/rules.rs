//! Pairwise copying probabilities `f_ij`: the chance that an individual
//! playing `i` adopts action `j` after contacting someone who plays `j`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::SeedableRng;
use rand_pcg::Pcg64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::{reward_bounds, Game};
use crate::simplex::sample_interior;

/// Custom rule evaluator: `(i, j, rewards) -> f_ij`.
pub type CopyFn = Arc<dyn Fn(usize, usize, &[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum ImitationRule {
    /// `f_ij = 1/2 + arctan(K_ij (r_j - r_i)) / pi`
    Arctan { k: Vec<Vec<f64>> },
    /// Affine in the reward of the copied action, clamped to
    /// `[eps_margin, 1 - eps_margin]`.
    Replicator {
        r_lo: f64,
        r_hi: f64,
        eps_margin: f64,
    },
    Custom { id: String, m: usize, f: CopyFn },
}

impl fmt::Debug for ImitationRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ImitationRule::Arctan { k } => f.debug_struct("Arctan").field("k", k).finish(),
            ImitationRule::Replicator {
                r_lo,
                r_hi,
                eps_margin,
            } => f
                .debug_struct("Replicator")
                .field("r_lo", r_lo)
                .field("r_hi", r_hi)
                .field("eps_margin", eps_margin)
                .finish(),
            ImitationRule::Custom { id, m, .. } => {
                f.debug_struct("Custom").field("id", id).field("m", m).finish()
            }
        }
    }
}

/// Arctan rule with gain matrix `k`; all entries must be positive.
pub fn arctan_rule(k: Vec<Vec<f64>>) -> Result<ImitationRule> {
    let m = k.len();
    if m < 2 {
        return Err(Error::InvalidArgument("K must be at least 2x2".into()));
    }
    for (i, row) in k.iter().enumerate() {
        if row.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: row.len(),
            });
        }
        for (j, &v) in row.iter().enumerate() {
            if i != j && !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "K[{i}][{j}] = {v} must be positive"
                )));
            }
        }
    }
    Ok(ImitationRule::Arctan { k })
}

/// Arctan rule with every gain equal to `gain`.
pub fn arctan_uniform(m: usize, gain: f64) -> Result<ImitationRule> {
    arctan_rule(vec![vec![gain; m]; m])
}

pub fn replicator_rule(r_lo: f64, r_hi: f64, eps_margin: f64) -> Result<ImitationRule> {
    if !(r_lo < r_hi) || !r_lo.is_finite() || !r_hi.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "degenerate reward interval [{r_lo}, {r_hi}]"
        )));
    }
    if !(0.0..0.5).contains(&eps_margin) {
        return Err(Error::InvalidArgument(format!(
            "eps_margin must lie in [0, 1/2), got {eps_margin}"
        )));
    }
    Ok(ImitationRule::Replicator {
        r_lo,
        r_hi,
        eps_margin,
    })
}

/// Replicator rule whose reward interval is derived from the game.
pub fn replicator_for(game: &Game, eps_margin: f64) -> Result<ImitationRule> {
    // keep the grid below ~2e5 points for larger action sets
    let grid_len = |res: usize| {
        (1..game.m()).fold(1f64, |acc, k| acc * (res + k) as f64 / k as f64)
    };
    let mut res = 200;
    while res > 2 && grid_len(res) > 2e5 {
        res /= 2;
    }
    let (lo, hi) = reward_bounds(game, res)?;
    replicator_rule(lo, hi, eps_margin)
}

pub fn custom_rule<F>(id: impl Into<String>, m: usize, f: F) -> ImitationRule
where
    F: Fn(usize, usize, &[f64]) -> f64 + Send + Sync + 'static,
{
    ImitationRule::Custom {
        id: id.into(),
        m,
        f: Arc::new(f),
    }
}

impl ImitationRule {
    pub fn id(&self) -> String {
        match self {
            ImitationRule::Arctan { .. } => "arctan".into(),
            ImitationRule::Replicator { .. } => "replicator".into(),
            ImitationRule::Custom { id, .. } => id.clone(),
        }
    }

    /// Number of actions the rule is defined for, if it is fixed.
    pub fn dimension(&self) -> Option<usize> {
        match self {
            ImitationRule::Arctan { k } => Some(k.len()),
            ImitationRule::Replicator { .. } => None,
            ImitationRule::Custom { m, .. } => Some(*m),
        }
    }

    /// Slope `c` of the unclamped replicator map, `f_ij - f_ji = c (r_j - r_i)`.
    pub fn replicator_slope(&self) -> Option<f64> {
        match self {
            ImitationRule::Replicator {
                r_lo,
                r_hi,
                eps_margin,
            } => Some((1.0 - 2.0 * eps_margin) / (r_hi - r_lo)),
            _ => None,
        }
    }

    /// Unchecked `f_ij`; `i == j` yields 1.
    #[inline]
    pub fn prob(&self, i: usize, j: usize, rewards: &[f64]) -> f64 {
        if i == j {
            return 1.0;
        }
        match self {
            ImitationRule::Arctan { k } => 0.5 + (k[i][j] * (rewards[j] - rewards[i])).atan() / PI,
            ImitationRule::Replicator {
                r_lo,
                r_hi,
                eps_margin,
            } => {
                let raw = eps_margin
                    + (1.0 - 2.0 * eps_margin) * (rewards[j] - r_lo) / (r_hi - r_lo);
                let clamped = raw.clamp(*eps_margin, 1.0 - eps_margin);
                if clamped != raw {
                    log::trace!("replicator rule clamped f_{i}{j} from {raw} to {clamped}");
                }
                clamped
            }
            ImitationRule::Custom { f, .. } => f(i, j, rewards),
        }
    }

    pub fn copy_prob(&self, i: usize, j: usize, rewards: &[f64]) -> Result<f64> {
        let m = self.dimension().unwrap_or(rewards.len());
        if rewards.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: rewards.len(),
            });
        }
        for a in [i, j] {
            if a >= m {
                return Err(Error::ActionOutOfRange { action: a, m });
            }
        }
        if rewards.iter().any(|r| !r.is_finite()) {
            return Err(Error::InvalidArgument("rewards must be finite".into()));
        }
        Ok(self.prob(i, j, rewards))
    }

    /// Fills the row-major matrix `F_ij = f_ij`.
    pub fn matrix_into(&self, rewards: &[f64], out: &mut [f64]) {
        let m = rewards.len();
        for i in 0..m {
            for j in 0..m {
                out[i * m + j] = self.prob(i, j, rewards);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignViolation {
    pub x: Vec<f64>,
    pub i: usize,
    pub j: usize,
    pub magnitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignReport {
    pub violations: usize,
    pub worst: Option<SignViolation>,
}

/// Tolerance on `|f_ij - f_ji|` when `r_i = r_j`.
pub const TIE_TOL: f64 = 1e-12;

/// Samples interior points and checks `sgn(f_ij - f_ji) = sgn(r_j - r_i)`
/// for every ordered pair.
pub fn verify_sign_condition(
    rule: &ImitationRule,
    game: &Game,
    num_samples: usize,
    seed: u64,
) -> Result<SignReport> {
    if num_samples == 0 {
        return Err(Error::InvalidArgument("num_samples must be at least 1".into()));
    }
    let m = game.m();
    let mut rng = Pcg64::seed_from_u64(seed);
    let mut r = vec![0.0; m];
    let mut report = SignReport {
        violations: 0,
        worst: None,
    };
    for _ in 0..num_samples {
        let x = sample_interior(m, &mut rng);
        game.rewards_into(&x, &mut r);
        for i in 0..m {
            for j in 0..m {
                if i == j {
                    continue;
                }
                let diff = rule.prob(i, j, &r) - rule.prob(j, i, &r);
                let gap = r[j] - r[i];
                let magnitude = if gap == 0.0 {
                    if diff.abs() < TIE_TOL {
                        continue;
                    }
                    diff.abs()
                } else if diff.signum() == gap.signum() && diff != 0.0 {
                    continue;
                } else {
                    diff.abs()
                };
                report.violations += 1;
                if report.worst.as_ref().is_none_or(|w| magnitude > w.magnitude) {
                    report.worst = Some(SignViolation {
                        x: x.clone(),
                        i,
                        j,
                        magnitude,
                    });
                }
            }
        }
    }
    Ok(report)
}
