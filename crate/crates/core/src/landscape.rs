//! Critical points of the potential on the simplex and their classification
//! into local maxima (the evolutionarily stable states), local minima and
//! saddles.
//!
//! Classification never uses second derivatives: degenerate critical points
//! (double roots of the reduced derivative) are common in practice, so
//! points are classified from the sign pattern of the reduced derivative
//! (two actions) or from potential values sampled on a small sphere
//! (any number of actions).

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand::Rng;
use rand_distr::StandardNormal;
use rand_pcg::Pcg64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::Game;
use crate::simplex::{dist_inf, project, sample_interior, SimplexPoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PointClass {
    LocalMax,
    LocalMin,
    SaddleOrDegenerate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalPoint {
    pub location: SimplexPoint,
    pub phi: f64,
    pub class: PointClass,
    pub is_ne: bool,
    pub is_ess: bool,
    pub on_boundary: bool,
    pub isolated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Landscape {
    pub critical_points: Vec<CriticalPoint>,
    pub warnings: Vec<String>,
}

impl Landscape {
    pub fn ess(&self) -> Vec<&CriticalPoint> {
        self.critical_points.iter().filter(|p| p.is_ess).collect()
    }

    pub fn ne(&self) -> Vec<&CriticalPoint> {
        self.critical_points.iter().filter(|p| p.is_ne).collect()
    }
}

/// Values of the reduced derivative below this count as zero.
pub const ZERO_DERIVATIVE: f64 = 1e-9;

fn require_potential(game: &Game) -> Result<()> {
    if game.has_potential() {
        Ok(())
    } else {
        Err(Error::NoPotential(game.id().to_string()))
    }
}

/// Every action in the support earns the best available reward.
fn is_nash(game: &Game, x: &[f64]) -> bool {
    let r = game.rewards(x);
    let best = r.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tol = 1e-6 * best.abs().max(1.0);
    x.iter().zip(&r).all(|(&xi, &ri)| xi <= 0.0 || ri >= best - tol)
}

fn make_point(game: &Game, x: Vec<f64>, class: PointClass, isolated: bool) -> Result<CriticalPoint> {
    let location = SimplexPoint::with_tolerance(x, 1e-9)?;
    let phi = game.potential(location.as_slice())?;
    let is_ne = is_nash(game, location.as_slice());
    let on_boundary = location.support().len() < location.dim();
    Ok(CriticalPoint {
        phi,
        class,
        is_ne,
        is_ess: isolated && is_ne && class == PointClass::LocalMax,
        on_boundary,
        isolated,
        location,
    })
}

/// `dPhi/dx_1 - dPhi/dx_2` along the edge of a two-action game.
fn reduced_derivative(game: &Game, x1: f64) -> Result<f64> {
    let g = game.potential_gradient(&[x1, 1.0 - x1])?;
    Ok(g[0] - g[1])
}

fn sign(v: f64) -> i8 {
    if v > 1e-14 {
        1
    } else if v < -1e-14 {
        -1
    } else {
        0
    }
}

/// Scans the reduced derivative on `grid` cells, bisects sign changes to
/// `refine_tol`, and finds tangential zeros by minimizing `|g|` around its
/// local minima. Both vertices are always reported.
pub fn find_critical_points_2action(game: &Game, grid: usize, refine_tol: f64) -> Result<Landscape> {
    require_potential(game)?;
    if game.m() != 2 {
        return Err(Error::InvalidArgument(format!(
            "the 1-D scanner needs exactly 2 actions, game has {}",
            game.m()
        )));
    }
    if grid < 4 || !(refine_tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need grid >= 4 and refine_tol > 0, got {grid} and {refine_tol}"
        )));
    }
    let g = |x: f64| reduced_derivative(game, x);
    let xs: Vec<f64> = (0..=grid).map(|k| k as f64 / grid as f64).collect();
    let gs: Vec<f64> = xs.iter().map(|&x| g(x)).collect::<Result<_>>()?;
    let mut warnings = Vec::new();

    let flat: Vec<bool> = gs.iter().map(|v| v.abs() < ZERO_DERIVATIVE).collect();
    let flat_runs = (1..grid).filter(|&k| flat[k] && (flat[k - 1] || flat[k + 1])).count();
    if flat_runs > 0 {
        warnings.push(format!(
            "non-isolated critical set: reduced derivative vanishes on {flat_runs} adjacent grid points"
        ));
    }

    let mut roots: Vec<f64> = Vec::new();
    for k in 1..grid {
        if flat[k] && (flat[k - 1] || flat[k + 1]) {
            continue;
        }
        if gs[k] == 0.0 {
            roots.push(xs[k]);
        }
    }
    for k in 0..grid {
        if gs[k] * gs[k + 1] < 0.0 {
            let (mut lo, mut hi) = (xs[k], xs[k + 1]);
            let s_lo = gs[k].signum();
            while hi - lo > refine_tol {
                let mid = 0.5 * (lo + hi);
                if g(mid)?.signum() == s_lo {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
    }
    for k in 1..grid {
        let a = gs[k].abs();
        let no_change = gs[k - 1] * gs[k] > 0.0 && gs[k] * gs[k + 1] > 0.0;
        if no_change && a <= gs[k - 1].abs() && a <= gs[k + 1].abs() {
            let x = golden_min(|x| g(x).map(f64::abs), xs[k - 1], xs[k + 1], 1e-13)?;
            if g(x)?.abs() < ZERO_DERIVATIVE {
                roots.push(x);
            }
        }
    }
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let merge = (10.0 * refine_tol).max(1e-12);
    roots.dedup_by(|b, a| (*b - *a).abs() < merge);
    roots.retain(|&r| r > merge && r < 1.0 - merge);

    let h = 0.25 / grid as f64;
    let mut points = Vec::new();
    let left_end = match sign(g(h)?) {
        1 => PointClass::LocalMin,
        -1 => PointClass::LocalMax,
        _ => PointClass::SaddleOrDegenerate,
    };
    points.push(make_point(game, vec![0.0, 1.0], left_end, !flat[0] || !flat[1])?);
    for &r in &roots {
        let class = match (sign(g(r - h)?), sign(g(r + h)?)) {
            (1, -1) => PointClass::LocalMax,
            (-1, 1) => PointClass::LocalMin,
            _ => PointClass::SaddleOrDegenerate,
        };
        points.push(make_point(game, vec![r, 1.0 - r], class, true)?);
    }
    if flat_runs > 0 {
        for k in 1..grid {
            if flat[k] && (flat[k - 1] || flat[k + 1]) {
                points.push(make_point(
                    game,
                    vec![xs[k], 1.0 - xs[k]],
                    PointClass::SaddleOrDegenerate,
                    false,
                )?);
            }
        }
    }
    let right_end = match sign(g(1.0 - h)?) {
        -1 => PointClass::LocalMin,
        1 => PointClass::LocalMax,
        _ => PointClass::SaddleOrDegenerate,
    };
    points.push(make_point(game, vec![1.0, 0.0], right_end, !flat[grid] || !flat[grid - 1])?);
    points.sort_by(|a, b| b.location.as_slice()[1].partial_cmp(&a.location.as_slice()[1]).unwrap());
    Ok(Landscape {
        critical_points: points,
        warnings,
    })
}

/// Golden-section minimization of a unimodal function on `[a, b]`.
fn golden_min<F>(f: F, mut a: f64, mut b: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while b - a > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    Ok(0.5 * (a + b))
}

/// Gradient of the potential restricted to the face spanned by `face`,
/// in the coordinates `e_{face[k]} - e_{face[last]}`.
fn face_gradient(game: &Game, x: &[f64], face: &[usize]) -> Result<Vec<f64>> {
    let g = game.potential_gradient(x)?;
    let last = *face.last().unwrap();
    Ok(face[..face.len() - 1].iter().map(|&i| g[i] - g[last]).collect())
}

fn move_on_face(x: &[f64], face: &[usize], dz: &[f64]) -> Vec<f64> {
    let mut y = x.to_vec();
    let last = *face.last().unwrap();
    for (&i, &d) in face.iter().zip(dz) {
        y[i] += d;
        y[last] -= d;
    }
    y
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Newton iterations on the face gradient, with a finite-difference
/// Jacobian and a pseudo-inverse so singular (degenerate) points still
/// converge, linearly.
fn polish(game: &Game, x: &[f64]) -> Result<Vec<f64>> {
    let face: Vec<usize> = (0..x.len()).filter(|&i| x[i] > 1e-10).collect();
    if face.len() < 2 {
        return Ok(x.to_vec());
    }
    let d = face.len() - 1;
    let h = 1e-6;
    let mut x = x.to_vec();
    let mut gx = face_gradient(game, &x, &face)?;
    for _ in 0..200 {
        let gnorm = norm(&gx);
        if gnorm < 1e-15 {
            break;
        }
        let mut jac = DMatrix::zeros(d, d);
        for l in 0..d {
            let mut dz = vec![0.0; d];
            dz[l] = h;
            let up = face_gradient(game, &move_on_face(&x, &face, &dz), &face)?;
            dz[l] = -h;
            let down = face_gradient(game, &move_on_face(&x, &face, &dz), &face)?;
            for k in 0..d {
                jac[(k, l)] = (up[k] - down[k]) / (2.0 * h);
            }
        }
        let rhs = DVector::from_iterator(d, gx.iter().map(|v| -v));
        let step = match jac.svd(true, true).solve(&rhs, 1e-12) {
            Ok(s) => s,
            Err(_) => break,
        };
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let dz: Vec<f64> = step.iter().map(|v| v * scale).collect();
            let y = move_on_face(&x, &face, &dz);
            if face.iter().all(|&i| y[i] >= 0.0) {
                let gy = face_gradient(game, &y, &face)?;
                if norm(&gy) < gnorm {
                    x = y;
                    gx = gy;
                    accepted = true;
                    break;
                }
            }
            scale *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    Ok(x)
}

/// Projected-gradient ascent (`dir = 1`) or descent (`dir = -1`) with step
/// halving; stops when the gradient mapping drops below `step_tol`.
fn climb(game: &Game, start: &[f64], dir: f64, step_tol: f64) -> Result<Vec<f64>> {
    let mut x = start.to_vec();
    let mut phi = dir * game.potential(&x)?;
    let mut s = 0.1;
    for _ in 0..200_000 {
        let g = game.potential_gradient(&x)?;
        let y = project(&x.iter().zip(&g).map(|(a, b)| a + dir * s * b).collect::<Vec<_>>());
        let mapping = norm(&y.iter().zip(&x).map(|(a, b)| (a - b) / s).collect::<Vec<_>>());
        if mapping < step_tol {
            break;
        }
        let phi_y = dir * game.potential(&y)?;
        if phi_y > phi {
            x = y;
            phi = phi_y;
            s = (s * 1.5).min(1.0);
        } else {
            s *= 0.5;
            if s < 1e-14 {
                break;
            }
        }
    }
    Ok(x)
}

/// Samples the potential on a sphere around `x`, clipped to the simplex.
/// The edge directions `e_j - e_i` are always included: at a vertex they are
/// the extreme rays of the feasible cone, where random draws rarely land.
fn classify_by_sphere(game: &Game, x: &[f64], radius: f64, rng: &mut Pcg64) -> Result<PointClass> {
    let m = x.len();
    let wanted = 2 * m * m;
    let phi0 = game.potential(x)?;
    let flat = 1e-12 * phi0.abs().max(1.0);
    let (mut higher, mut lower, mut level) = (0, 0, 0);
    let mut tally = |d: &[f64]| -> Result<bool> {
        let len = norm(d);
        if len == 0.0 {
            return Ok(false);
        }
        let y: Vec<f64> = x.iter().zip(d).map(|(a, b)| a + radius * b / len).collect();
        if y.iter().any(|v| *v < 0.0) {
            return Ok(false);
        }
        let diff = game.potential(&y)? - phi0;
        if diff > flat {
            higher += 1;
        } else if diff < -flat {
            lower += 1;
        } else {
            level += 1;
        }
        Ok(true)
    };
    for i in 0..m {
        for j in (0..m).filter(|&j| j != i) {
            let mut d = vec![0.0; m];
            d[i] = -1.0;
            d[j] = 1.0;
            tally(&d)?;
        }
    }
    let mut taken = 0;
    for _ in 0..wanted * 200 {
        if taken == wanted {
            break;
        }
        let mut d: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
        let mean = d.iter().sum::<f64>() / m as f64;
        d.iter_mut().for_each(|v| *v -= mean);
        if tally(&d)? {
            taken += 1;
        }
    }
    Ok(match (higher, lower, level) {
        (0, l, 0) if l > 0 => PointClass::LocalMax,
        (h, 0, 0) if h > 0 => PointClass::LocalMin,
        _ => PointClass::SaddleOrDegenerate,
    })
}

/// Multi-start projected-gradient search for any number of actions. All
/// vertices are always reported. Candidates closer than `10 * step_tol` are merged, and each survivor is
/// classified by sampling the potential on a sphere of radius `10 * step_tol`.
pub fn find_critical_points_multi(
    game: &Game,
    starts: usize,
    step_tol: f64,
    seed: u64,
) -> Result<Landscape> {
    require_potential(game)?;
    if starts == 0 || !(step_tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need starts >= 1 and step_tol > 0, got {starts} and {step_tol}"
        )));
    }
    let m = game.m();
    let mut rng = Pcg64::seed_from_u64(seed);
    let merge = 10.0 * step_tol;
    // vertices are rest points of every imitation flow, reached or not
    let mut found: Vec<Vec<f64>> = (0..m)
        .map(|i| (0..m).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for _ in 0..starts {
        let start = sample_interior(m, &mut rng);
        let mut candidates = Vec::with_capacity(3);
        for dir in [1.0, -1.0] {
            candidates.push(polish(game, &climb(game, &start, dir, step_tol)?)?);
        }
        // saddles repel both climbs; Newton from the start can still land on them
        let direct = polish(game, &start)?;
        let face: Vec<usize> = (0..m).filter(|&i| direct[i] > 1e-10).collect();
        if face.len() >= 2 && norm(&face_gradient(game, &direct, &face)?) < step_tol {
            candidates.push(direct);
        }
        for x in candidates {
            if !found.iter().any(|f| dist_inf(f, &x) < merge) {
                found.push(x);
            }
        }
    }
    let mut points = Vec::with_capacity(found.len());
    for x in found {
        let class = classify_by_sphere(game, &x, merge, &mut rng)?;
        points.push(make_point(game, x, class, true)?);
    }
    points.sort_by(|a, b| {
        a.location
            .as_slice()
            .partial_cmp(b.location.as_slice())
            .unwrap()
            .reverse()
    });
    Ok(Landscape {
        critical_points: points,
        warnings: Vec::new(),
    })
}

/// Isolated local maxima that are equilibria. Vertices among them violate
/// the interior-maximum assumption and are flagged, not dropped.
pub fn ess_set(points: &[CriticalPoint]) -> (Vec<CriticalPoint>, Vec<String>) {
    let mut warnings = Vec::new();
    let ess: Vec<CriticalPoint> = points
        .iter()
        .filter(|p| p.class == PointClass::LocalMax && p.isolated && p.is_ne)
        .cloned()
        .collect();
    for p in &ess {
        if p.location.is_vertex() {
            warnings.push(format!(
                "vertex maximum: {:?} is a local maximum of the potential",
                p.location.as_slice()
            ));
        }
    }
    if ess.is_empty() {
        warnings.push("no isolated local maximum of the potential was found".into());
    }
    (ess, warnings)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{example4_game, make_congestion_game, Polynomial};
    use std::sync::Arc;

    fn x1s(l: &Landscape) -> Vec<f64> {
        l.critical_points.iter().map(|p| p.location.as_slice()[0]).collect()
    }

    #[test]
    fn quartic_game_scan() {
        let l = find_critical_points_2action(&example4_game(), 1000, 1e-12).unwrap();
        let xs = x1s(&l);
        assert_eq!(xs.len(), 4, "{l:#?}");
        for (got, want) in xs.iter().zip([0.0, 0.25, 0.75, 1.0]) {
            assert!((got - want).abs() < 1e-6, "{xs:?}");
        }
        let classes: Vec<_> = l.critical_points.iter().map(|p| p.class).collect();
        assert_eq!(
            classes,
            vec![
                PointClass::LocalMin,
                PointClass::SaddleOrDegenerate,
                PointClass::LocalMax,
                PointClass::LocalMin
            ]
        );
        let ne: Vec<bool> = l.critical_points.iter().map(|p| p.is_ne).collect();
        assert_eq!(ne, vec![false, true, true, false]);
        let (ess, warnings) = ess_set(&l.critical_points);
        assert_eq!(ess.len(), 1);
        assert!((ess[0].location.as_slice()[0] - 0.75).abs() < 1e-6);
        assert!(warnings.is_empty());
    }

    #[test]
    fn scan_finds_saddle_off_grid() {
        // 7 cells: 1/4 and 3/4 are not grid points
        let l = find_critical_points_2action(&example4_game(), 7, 1e-12).unwrap();
        let xs = x1s(&l);
        assert_eq!(xs.len(), 4, "{xs:?}");
        assert!((xs[1] - 0.25).abs() < 1e-6 && (xs[2] - 0.75).abs() < 1e-9);
    }

    #[test]
    fn concave_congestion_game_has_single_ess() {
        let g = make_congestion_game(vec![
            Polynomial::new(vec![1.0, -2.0]),
            Polynomial::new(vec![0.0, -1.0]),
        ])
        .unwrap();
        // r_1 = 1 - 2 x_1 equals r_2 = -(1 - x_1) at x_1 = 2/3
        let l = find_critical_points_2action(&g, 500, 1e-12).unwrap();
        let (ess, _) = ess_set(&l.critical_points);
        assert_eq!(ess.len(), 1);
        assert!((ess[0].location.as_slice()[0] - 2.0 / 3.0).abs() < 1e-9);
        assert_eq!(l.ne().len(), 1);
    }

    #[test]
    fn constant_potential_is_degenerate() {
        let g = make_congestion_game(vec![Polynomial::constant(1.0); 2]).unwrap();
        let l = find_critical_points_2action(&g, 20, 1e-10).unwrap();
        assert!(l.warnings.iter().any(|w| w.contains("non-isolated")));
        assert!(l.critical_points.iter().all(|p| !p.is_ess));
        assert!(l.critical_points.iter().all(|p| p.class == PointClass::SaddleOrDegenerate));
        let (ess, warnings) = ess_set(&l.critical_points);
        assert!(ess.is_empty());
        assert!(!warnings.is_empty());
    }

    #[test]
    fn scanner_rejects_bad_input() {
        let g3 = make_congestion_game(vec![Polynomial::constant(1.0); 3]).unwrap();
        assert!(find_critical_points_2action(&g3, 100, 1e-9).is_err());
        let plain = Game::custom("plain", 2, |_, r| r.fill(0.0)).unwrap();
        assert!(matches!(
            find_critical_points_2action(&plain, 100, 1e-9),
            Err(Error::NoPotential(_))
        ));
        assert!(matches!(
            find_critical_points_multi(&plain, 4, 1e-4, 0),
            Err(Error::NoPotential(_))
        ));
    }

    #[test]
    fn multistart_matches_scanner_on_two_actions() {
        let game = example4_game();
        let scan = find_critical_points_2action(&game, 1000, 1e-12).unwrap();
        let multi = find_critical_points_multi(&game, 20, 1e-4, 3).unwrap();
        let mut a = x1s(&scan);
        let mut b = x1s(&multi);
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        assert_eq!(a.len(), b.len(), "{b:?}");
        for (p, q) in a.iter().zip(&b) {
            assert!((p - q).abs() < 1e-6, "{a:?} vs {b:?}");
        }
        let classes = |l: &Landscape| {
            let mut v: Vec<(i64, PointClass)> = l
                .critical_points
                .iter()
                .map(|p| ((p.location.as_slice()[0] * 1e4).round() as i64, p.class))
                .collect();
            v.sort_by_key(|e| e.0);
            v
        };
        assert_eq!(classes(&scan), classes(&multi));
    }

    #[test]
    fn symmetric_three_action_congestion() {
        let g = make_congestion_game(vec![Polynomial::new(vec![0.0, -1.0]); 3]).unwrap();
        let l = find_critical_points_multi(&g, 10, 1e-4, 1).unwrap();
        let maxima: Vec<_> = l
            .critical_points
            .iter()
            .filter(|p| p.class == PointClass::LocalMax)
            .collect();
        assert_eq!(maxima.len(), 1, "{l:#?}");
        assert!(dist_inf(maxima[0].location.as_slice(), &[1.0 / 3.0; 3]) < 1e-8);
        assert!(maxima[0].is_ess);
    }

    /// `u^2 - w^2 + u^4` with `u = x0 - x1`, `w = x0 + x1 - 2 x2`.
    fn saddle_game() -> Game {
        let phi = |x: &[f64]| {
            let u = x[0] - x[1];
            let w = x[0] + x[1] - 2.0 * x[2];
            u * u - w * w + u.powi(4)
        };
        let grad = |x: &[f64], g: &mut [f64]| {
            let u = x[0] - x[1];
            let w = x[0] + x[1] - 2.0 * x[2];
            let du = 2.0 * u + 4.0 * u.powi(3);
            let dw = -2.0 * w;
            g[0] = du + dw;
            g[1] = -du + dw;
            g[2] = -2.0 * dw;
        };
        Game::custom("saddle3", 3, grad)
            .unwrap()
            .with_potential(phi, Some(Arc::new(grad)))
    }

    #[test]
    fn interior_saddle_detected() {
        let game = saddle_game();
        // dense grid oracle: the barycenter has both higher and lower neighbors
        let c = [1.0 / 3.0; 3];
        let phi_c = game.potential(&c).unwrap();
        let (mut up, mut down) = (false, false);
        for p in crate::simplex::grid_points(3, 300) {
            if dist_inf(&p, &c) < 0.02 && dist_inf(&p, &c) > 0.0 {
                let v = game.potential(&p).unwrap();
                up |= v > phi_c;
                down |= v < phi_c;
            }
        }
        assert!(up && down);

        let l = find_critical_points_multi(&game, 30, 1e-4, 9).unwrap();
        let center = l
            .critical_points
            .iter()
            .find(|p| dist_inf(p.location.as_slice(), &c) < 1e-6)
            .expect("barycenter found");
        assert_eq!(center.class, PointClass::SaddleOrDegenerate);
        assert!(!center.is_ess);
    }

    #[test]
    fn flat_vertex_edges_are_not_minima() {
        // r = (3 - 2x, 2 - x, 1 - x/2): maximum at (2/3, 1/3, 0); from e1 and
        // e2 the potential is first-order flat but decreasing toward e3
        let game = make_congestion_game(vec![
            Polynomial::new(vec![3.0, -2.0]),
            Polynomial::new(vec![2.0, -1.0]),
            Polynomial::new(vec![1.0, -0.5]),
        ])
        .unwrap();
        let land = find_critical_points_multi(&game, 32, 1e-4, 3).unwrap();
        let class_at = |x: [f64; 3]| {
            land.critical_points
                .iter()
                .find(|p| dist_inf(p.location.as_slice(), &x) < 1e-3)
                .map(|p| p.class)
        };
        assert_eq!(land.critical_points.len(), 4);
        assert_eq!(class_at([1.0, 0.0, 0.0]), Some(PointClass::SaddleOrDegenerate));
        assert_eq!(class_at([0.0, 1.0, 0.0]), Some(PointClass::SaddleOrDegenerate));
        assert_eq!(class_at([0.0, 0.0, 1.0]), Some(PointClass::LocalMin));
        assert_eq!(class_at([2.0 / 3.0, 1.0 / 3.0, 0.0]), Some(PointClass::LocalMax));
        assert_eq!(land.ess().len(), 1);
    }

    #[test]
    fn ess_flags_vertex_maxima() {
        // r_1 = 1, r_2 = 0: the vertex of action 0 maximizes the potential
        let g = make_congestion_game(vec![Polynomial::constant(1.0), Polynomial::constant(0.0)])
            .unwrap();
        let l = find_critical_points_2action(&g, 50, 1e-10).unwrap();
        let (ess, warnings) = ess_set(&l.critical_points);
        assert_eq!(ess.len(), 1);
        assert!(ess[0].location.is_vertex());
        assert!(warnings.iter().any(|w| w.starts_with("vertex maximum")));
    }
}
