//! State spaces of the population: the continuous simplex, the discrete
//! type grid `{0, 1/n, ..., 1}^m` and per-node configurations.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SUM_TOL: f64 = 1e-12;

/// Number of available actions, labelled `0..m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ActionSet(usize);

impl ActionSet {
    pub fn new(m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidArgument(format!(
                "an action set needs at least 2 actions, got {m}"
            )));
        }
        Ok(ActionSet(m))
    }

    pub fn len(&self) -> usize {
        self.0
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn check(&self, action: usize) -> Result<()> {
        if action < self.0 {
            Ok(())
        } else {
            Err(Error::ActionOutOfRange { action, m: self.0 })
        }
    }
}

/// A point of the unit simplex: nonnegative entries summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct SimplexPoint(Vec<f64>);

impl SimplexPoint {
    pub fn new(x: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(x, SUM_TOL)
    }

    /// Accepts `x` if it is within `tol` of the simplex and renormalizes it.
    pub fn with_tolerance(mut x: Vec<f64>, tol: f64) -> Result<Self> {
        if x.len() < 2 {
            return Err(Error::NotOnSimplex(format!(
                "need at least 2 coordinates, got {}",
                x.len()
            )));
        }
        if let Some(v) = x.iter().find(|v| !v.is_finite() || **v < -tol) {
            return Err(Error::NotOnSimplex(format!("entry {v} is negative or not finite")));
        }
        let sum: f64 = x.iter().sum();
        if (sum - 1.0).abs() > tol {
            return Err(Error::NotOnSimplex(format!("entries sum to {sum}")));
        }
        if tol > SUM_TOL || x.iter().any(|v| *v < 0.0) {
            x.iter_mut().for_each(|v| *v = v.max(0.0));
            let s: f64 = x.iter().sum();
            x.iter_mut().for_each(|v| *v /= s);
        }
        Ok(SimplexPoint(x))
    }

    /// The vertex `delta^(i)` of an `m`-simplex.
    pub fn vertex(m: usize, i: usize) -> Result<Self> {
        ActionSet::new(m)?.check(i)?;
        let mut x = vec![0.0; m];
        x[i] = 1.0;
        Ok(SimplexPoint(x))
    }

    /// Barycenter `(1/m, ..., 1/m)`.
    pub fn uniform(m: usize) -> Result<Self> {
        ActionSet::new(m)?;
        Ok(SimplexPoint(vec![1.0 / m as f64; m]))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn support(&self) -> Vec<usize> {
        support_of(&self.0)
    }

    /// True iff every nonzero entry exceeds `eps`; zero entries are exempt.
    pub fn is_interior(&self, eps: f64) -> Result<bool> {
        if !(eps > 0.0) {
            return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
        }
        Ok(self.0.iter().all(|&v| v == 0.0 || v > eps))
    }

    pub fn is_vertex(&self) -> bool {
        self.support().len() == 1
    }
}

impl TryFrom<Vec<f64>> for SimplexPoint {
    type Error = Error;

    fn try_from(x: Vec<f64>) -> Result<Self> {
        SimplexPoint::new(x)
    }
}

impl From<SimplexPoint> for Vec<f64> {
    fn from(p: SimplexPoint) -> Self {
        p.0
    }
}

impl AsRef<[f64]> for SimplexPoint {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

pub fn support_of(x: &[f64]) -> Vec<usize> {
    x.iter()
        .enumerate()
        .filter(|(_, v)| **v > 0.0)
        .map(|(i, _)| i)
        .collect()
}

/// A point of the type grid, stored as integer action counts so that grid
/// membership and vertex detection are exact.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PopulationType {
    counts: Vec<u32>,
    n: u32,
}

impl PopulationType {
    pub fn from_counts(counts: Vec<u32>) -> Result<Self> {
        ActionSet::new(counts.len())?;
        let n: u64 = counts.iter().map(|&c| c as u64).sum();
        if n == 0 {
            return Err(Error::InvalidArgument("population must be nonempty".into()));
        }
        let n = u32::try_from(n)
            .map_err(|_| Error::InvalidArgument(format!("population size {n} too large")))?;
        Ok(PopulationType { counts, n })
    }

    /// Rounds `x * n` onto the grid with the largest-remainder rule, so the
    /// counts always sum to exactly `n`.
    pub fn from_fractions(x: &[f64], n: u32) -> Result<Self> {
        let p = SimplexPoint::with_tolerance(x.to_vec(), 1e-6)?;
        if n == 0 {
            return Err(Error::InvalidArgument("population must be nonempty".into()));
        }
        let scaled: Vec<f64> = p.as_slice().iter().map(|v| v * n as f64).collect();
        let mut counts: Vec<u32> = scaled.iter().map(|v| v.floor() as u32).collect();
        let assigned: u32 = counts.iter().sum();
        let mut order: Vec<usize> = (0..counts.len()).collect();
        // stable sort keeps ties in index order
        order.sort_by(|&a, &b| {
            let ra = scaled[a] - scaled[a].floor();
            let rb = scaled[b] - scaled[b].floor();
            rb.partial_cmp(&ra).unwrap()
        });
        for &i in order.iter().take((n - assigned) as usize) {
            counts[i] += 1;
        }
        PopulationType::from_counts(counts)
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn m(&self) -> usize {
        self.counts.len()
    }

    pub fn fraction(&self, i: usize) -> f64 {
        self.counts[i] as f64 / self.n as f64
    }

    pub fn fractions(&self) -> Vec<f64> {
        let n = self.n as f64;
        self.counts.iter().map(|&c| c as f64 / n).collect()
    }

    pub fn to_simplex(&self) -> SimplexPoint {
        SimplexPoint(self.fractions())
    }

    pub fn support(&self) -> Vec<usize> {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, c)| **c > 0)
            .map(|(i, _)| i)
            .collect()
    }

    /// The action everybody plays, if the type is a vertex.
    pub fn pure_action(&self) -> Option<usize> {
        self.counts.iter().position(|&c| c == self.n)
    }

    pub fn is_pure(&self) -> bool {
        self.pure_action().is_some()
    }

    /// Moves one individual from action `from` to action `to`.
    pub fn apply_jump(&mut self, from: usize, to: usize) {
        debug_assert!(self.counts[from] > 0);
        self.counts[from] -= 1;
        self.counts[to] += 1;
    }
}

/// Per-node action assignment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Configuration {
    actions: Vec<usize>,
    m: usize,
}

impl Configuration {
    pub fn new(actions: Vec<usize>, m: usize) -> Result<Self> {
        let set = ActionSet::new(m)?;
        if actions.is_empty() {
            return Err(Error::InvalidArgument("configuration must be nonempty".into()));
        }
        for &a in &actions {
            set.check(a)?;
        }
        Ok(Configuration { actions, m })
    }

    /// A uniformly random arrangement of the given type over the nodes.
    pub fn shuffled<R: Rng + ?Sized>(ty: &PopulationType, rng: &mut R) -> Self {
        let mut actions = Vec::with_capacity(ty.n() as usize);
        for (i, &c) in ty.counts().iter().enumerate() {
            actions.extend(std::iter::repeat_n(i, c as usize));
        }
        actions.shuffle(rng);
        Configuration { actions, m: ty.m() }
    }

    pub fn actions(&self) -> &[usize] {
        &self.actions
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn population_type(&self) -> PopulationType {
        let mut counts = vec![0u32; self.m];
        for &a in &self.actions {
            counts[a] += 1;
        }
        PopulationType::from_counts(counts).expect("nonempty configuration")
    }
}

/// Uniform sample from the open simplex (flat Dirichlet).
pub fn sample_interior<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let mut x: Vec<f64> = (0..m).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
        let s: f64 = x.iter().sum();
        x.iter_mut().for_each(|v| *v /= s);
        if x.iter().all(|v| *v > 0.0) {
            return x;
        }
    }
}

/// All points of the simplex with coordinates in `{0, 1/res, ..., 1}`.
pub fn grid_points(m: usize, res: usize) -> Vec<Vec<f64>> {
    fn rec(m: usize, left: usize, res: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        if cur.len() == m - 1 {
            cur.push(left);
            out.push(cur.iter().map(|&c| c as f64 / res as f64).collect());
            cur.pop();
            return;
        }
        for c in 0..=left {
            cur.push(c);
            rec(m, left - c, res, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(m, res, res, &mut Vec::with_capacity(m), &mut out);
    out
}

/// Euclidean projection onto the unit simplex.
pub fn project(y: &[f64]) -> Vec<f64> {
    let mut u = y.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (k, &v) in u.iter().enumerate() {
        cum += v;
        let t = (cum - 1.0) / (k + 1) as f64;
        if v - t > 0.0 {
            theta = t;
        }
    }
    y.iter().map(|&v| (v - theta).max(0.0)).collect()
}

pub fn dist_inf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn dist_l2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;

    #[test]
    fn support_examples() {
        assert_eq!(SimplexPoint::new(vec![1.0, 0.0]).unwrap().support(), vec![0]);
        assert_eq!(SimplexPoint::new(vec![0.3, 0.7]).unwrap().support(), vec![0, 1]);
        let ty = PopulationType::from_counts(vec![0, 5, 5]).unwrap();
        assert_eq!(ty.n(), 10);
        assert_eq!(ty.support(), vec![1, 2]);
    }

    #[test]
    fn interior_examples() {
        let p = |v: Vec<f64>| SimplexPoint::new(v).unwrap();
        assert!(p(vec![0.5, 0.5]).is_interior(0.1).unwrap());
        assert!(!p(vec![0.001, 0.999]).is_interior(0.01).unwrap());
        assert!(p(vec![0.0, 1.0]).is_interior(0.01).unwrap());
        assert!(p(vec![0.5, 0.5]).is_interior(0.0).is_err());
        assert!(p(vec![0.5, 0.5]).is_interior(-1.0).is_err());
    }

    #[test]
    fn rejects_off_simplex() {
        assert!(SimplexPoint::new(vec![0.5, 0.6]).is_err());
        assert!(SimplexPoint::new(vec![-0.1, 1.1]).is_err());
        assert!(SimplexPoint::new(vec![1.0]).is_err());
        assert!(ActionSet::new(1).is_err());
    }

    #[test]
    fn rounding_keeps_population_size() {
        let ty = PopulationType::from_fractions(&[0.001, 0.999], 2500).unwrap();
        assert_eq!(ty.counts(), &[3, 2497]);
        let ty = PopulationType::from_fractions(&[1.0 / 3.0; 3], 100).unwrap();
        assert_eq!(ty.counts().iter().sum::<u32>(), 100);
    }

    #[test]
    fn grid_size_is_binomial() {
        // C(res + m - 1, m - 1)
        assert_eq!(grid_points(2, 10).len(), 11);
        assert_eq!(grid_points(3, 4).len(), 15);
        for p in grid_points(3, 4) {
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn shuffled_configuration_has_requested_type() {
        let ty = PopulationType::from_counts(vec![3, 7]).unwrap();
        let mut rng = rand_pcg::Pcg64::seed_from_u64(1);
        let y = Configuration::shuffled(&ty, &mut rng);
        assert_eq!(y.population_type(), ty);
    }

    proptest! {
        #[test]
        fn projection_lands_on_simplex(y in proptest::collection::vec(-3.0f64..3.0, 2..6)) {
            let x = project(&y);
            prop_assert!(x.iter().all(|v| *v >= 0.0));
            prop_assert!((x.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn projection_fixes_simplex_points(seed in any::<u64>(), m in 2usize..6) {
            let mut rng = rand_pcg::Pcg64::seed_from_u64(seed);
            let x = sample_interior(m, &mut rng);
            prop_assert!(dist_inf(&project(&x), &x) < 1e-12);
        }
    }
}
