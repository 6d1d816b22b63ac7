//! Quadratic vector equations for the limiting Stieltjes transform.
//!
//! For a step graphon the solution `a(z, .)` of
//! `a(z,x)^{-1} = z - int W(x,y) a(z,y) dy` is constant per block, so the
//! equation reduces to a d-dimensional fixed point which we solve by damped
//! iteration. The transform convention is `s(z) = int 1/(z-x) dmu`, which
//! maps the upper half plane into the lower one, so `Im a < 0` for
//! `Im z > 0`. (The QVE literature often uses the opposite sign.)
//!
//! The Gram variant solves the nested self-consistent equation for
//! `b(z, .)` on the left blocks of a bipartite kernel and recovers
//! `s(z) = (1+y)/y * int_left b(z,u) du`.

use crate::graphon::StepGraphon;
use crate::homdensity::{self, MomentSource, MomentTable};
use crate::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Default residual tolerance.
pub const DEFAULT_TOL: f64 = 1e-12;
/// Default iteration budget.
pub const DEFAULT_MAX_ITER: usize = 100_000;
/// Fixed damping of the iteration `a <- (1-theta) a + theta f(a)`.
pub const DAMPING: f64 = 0.5;

/// Solution of the quadratic vector equation at one point `z`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QveSolution {
    pub z: Complex64,
    /// Per-block values of `a(z, .)`.
    pub a: Vec<Complex64>,
    /// `s(z) = sum_i fractions[i] * a_i`.
    pub s: Complex64,
    /// Max over blocks of `|a_i (z - (Wa)_i) - 1|`.
    pub residual: f64,
    pub iterations: usize,
}

/// Solution of the Gram quadratic vector equation at one point `z`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GramQveSolution {
    pub z: Complex64,
    /// Per-left-block values of `b(z, .)`.
    pub b: Vec<Complex64>,
    pub s: Complex64,
    pub residual: f64,
    pub iterations: usize,
    pub aspect: f64,
}

/// Smoothed spectral density on a grid, from Stieltjes inversion
/// `rho(E) = -Im s(E + i eta) / pi`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DensityCurve {
    /// `(E, rho(E))` pairs.
    pub grid: Vec<(f64, f64)>,
    pub eta: f64,
}

impl DensityCurve {
    /// Trapezoid integral over the grid.
    pub fn mass(&self) -> f64 {
        self.grid
            .windows(2)
            .map(|w| 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0))
            .sum()
    }
}

/// Measure-weighted block operator on complex vectors:
/// `(Wv)_i = sum_j weights[i][j] * fractions[j] * v_j`.
fn apply_complex(w: &StepGraphon, v: &[Complex64]) -> Vec<Complex64> {
    w.weights()
        .iter()
        .map(|row| {
            row.iter()
                .zip(w.fractions())
                .zip(v)
                .map(|((wij, a), x)| x * (wij * a))
                .sum()
        })
        .collect()
}

fn qve_residual(w: &StepGraphon, z: Complex64, a: &[Complex64]) -> f64 {
    let wa = apply_complex(w, a);
    a.iter()
        .zip(&wa)
        .map(|(ai, wai)| (ai * (z - wai) - 1.0).norm())
        .fold(0.0, f64::max)
}

fn check_upper_half_plane(z: Complex64) -> Result<()> {
    if z.im <= 0.0 {
        return Err(Error::NotUpperHalfPlane { im: z.im });
    }
    Ok(())
}

/// Solves the QVE at `z` by damped fixed-point iteration from `a_i = 1/z`.
pub fn solve_qve(
    w: &StepGraphon,
    z: Complex64,
    tol: f64,
    max_iter: usize,
) -> Result<QveSolution> {
    check_upper_half_plane(z)?;
    let init = vec![z.inv(); w.block_count()];
    solve_qve_from(w, z, &init, tol, max_iter)
}

/// As [`solve_qve`] but warm-started from `init` (used by grid sweeps).
pub fn solve_qve_from(
    w: &StepGraphon,
    z: Complex64,
    init: &[Complex64],
    tol: f64,
    max_iter: usize,
) -> Result<QveSolution> {
    check_upper_half_plane(z)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    let mut a = init.to_vec();
    let mut residual = qve_residual(w, z, &a);
    let mut iterations = 0;
    while residual > tol {
        if iterations >= max_iter {
            return Err(Error::NonConvergence {
                residual,
                iterations,
            });
        }
        let wa = apply_complex(w, &a);
        for (ai, wai) in a.iter_mut().zip(&wa) {
            let target = (z - wai).inv();
            *ai = (1.0 - DAMPING) * *ai + DAMPING * target;
        }
        residual = qve_residual(w, z, &a);
        iterations += 1;
    }
    let s = a
        .iter()
        .zip(w.fractions())
        .map(|(ai, &alpha)| ai * alpha)
        .sum();
    Ok(QveSolution {
        z,
        a,
        s,
        residual,
        iterations,
    })
}

/// Solves the Gram QVE at `z` for a bipartite kernel with aspect ratio `y`.
pub fn solve_gram_qve(
    w: &StepGraphon,
    y: f64,
    z: Complex64,
    tol: f64,
    max_iter: usize,
) -> Result<GramQveSolution> {
    check_upper_half_plane(z)?;
    let (left, _right) = homdensity::check_bipartite(w, y)?;
    let init = vec![z.inv(); left.len()];
    solve_gram_qve_from(w, y, z, &init, tol, max_iter)
}

/// As [`solve_gram_qve`] but warm-started from `init`.
pub fn solve_gram_qve_from(
    w: &StepGraphon,
    y: f64,
    z: Complex64,
    init: &[Complex64],
    tol: f64,
    max_iter: usize,
) -> Result<GramQveSolution> {
    check_upper_half_plane(z)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    let (left, right) = homdensity::check_bipartite(w, y)?;
    let alpha = w.fractions();
    // b lives on the left blocks; the map is
    //   f(b)_u = 1 / (z - sum_{v in R} alpha_v W_uv / D_v),
    //   D_v    = (1+y)^{-1} - sum_{t in L} W_vt alpha_t b_t.
    let map = |b: &[Complex64]| -> Vec<Complex64> {
        let denominators: Vec<Complex64> = right
            .iter()
            .map(|&v| {
                let inner: Complex64 = left
                    .iter()
                    .zip(b)
                    .map(|(&t, bt)| bt * (w.weight(v, t) * alpha[t]))
                    .sum();
                Complex64::new(1.0 / (1.0 + y), 0.0) - inner
            })
            .collect();
        left.iter()
            .map(|&u| {
                let outer: Complex64 = right
                    .iter()
                    .zip(&denominators)
                    .map(|(&v, dv)| w.weight(u, v) * alpha[v] / dv)
                    .sum();
                z - outer
            })
            .collect()
    };
    let residual_of = |b: &[Complex64]| -> f64 {
        map(b)
            .iter()
            .zip(b)
            .map(|(inv_target, bu)| (bu * inv_target - 1.0).norm())
            .fold(0.0, f64::max)
    };
    let mut b = init.to_vec();
    let mut residual = residual_of(&b);
    let mut iterations = 0;
    while residual > tol {
        if iterations >= max_iter {
            return Err(Error::NonConvergence {
                residual,
                iterations,
            });
        }
        let inv_targets = map(&b);
        for (bu, inv_target) in b.iter_mut().zip(&inv_targets) {
            *bu = (1.0 - DAMPING) * *bu + DAMPING * inv_target.inv();
        }
        residual = residual_of(&b);
        iterations += 1;
    }
    let s = b
        .iter()
        .zip(left.iter())
        .map(|(bu, &u)| bu * alpha[u])
        .sum::<Complex64>()
        * ((1.0 + y) / y);
    Ok(GramQveSolution {
        z,
        b,
        s,
        residual,
        iterations,
        aspect: y,
    })
}

/// Stieltjes inversion on a uniform grid, warm-starting each point from the
/// previous one. Solver failures are annotated with the failing energy.
pub fn density_curve(
    w: &StepGraphon,
    e_min: f64,
    e_max: f64,
    points: usize,
    eta: f64,
    gram_aspect: Option<f64>,
) -> Result<DensityCurve> {
    if points < 2 {
        return Err(Error::InvalidArgument("need at least 2 grid points".into()));
    }
    if !(eta > 0.0) {
        return Err(Error::InvalidArgument("eta must be positive".into()));
    }
    if !(e_max > e_min) {
        return Err(Error::InvalidArgument("empty energy range".into()));
    }
    let step = (e_max - e_min) / (points - 1) as f64;
    let mut grid = Vec::with_capacity(points);
    let mut warm: Option<Vec<Complex64>> = None;
    for p in 0..points {
        let energy = e_min + step * p as f64;
        let z = Complex64::new(energy, eta);
        let s = match gram_aspect {
            None => {
                let init = warm.unwrap_or_else(|| vec![z.inv(); w.block_count()]);
                let sol = solve_qve_from(w, z, &init, DEFAULT_TOL, DEFAULT_MAX_ITER)
                    .map_err(|e| annotate_grid_failure(e, energy))?;
                warm = Some(sol.a.clone());
                sol.s
            }
            Some(y) => {
                let left = homdensity::check_bipartite(w, y)?.0.len();
                let init = warm.unwrap_or_else(|| vec![z.inv(); left]);
                let sol = solve_gram_qve_from(w, y, z, &init, DEFAULT_TOL, DEFAULT_MAX_ITER)
                    .map_err(|e| annotate_grid_failure(e, energy))?;
                warm = Some(sol.b.clone());
                sol.s
            }
        };
        grid.push((energy, (-s.im / std::f64::consts::PI).max(0.0)));
    }
    Ok(DensityCurve { grid, eta })
}

fn annotate_grid_failure(e: Error, energy: f64) -> Error {
    match e {
        Error::NonConvergence {
            residual,
            iterations,
        } => Error::InvalidArgument(format!(
            "QVE sweep failed at E = {energy}: residual {residual:.3e} after {iterations} iterations"
        )),
        other => other,
    }
}

/// Moment table assembled from the power-series expansion of `a(z, .)`:
/// `beta_{2k}` for tree orders `k <= max_k`, labeled as the series route.
pub fn series_moments(w: &StepGraphon, max_k: usize) -> Result<MomentTable> {
    let mut entries = Vec::with_capacity(2 * max_k + 1);
    for order in 0..=2 * max_k {
        let value = if order % 2 == 0 {
            homdensity::wigner_moment(order / 2, w)?
        } else {
            0.0
        };
        entries.push((order, value));
    }
    Ok(MomentTable::new(entries, MomentSource::QveSeries, 2 * max_k))
}

/// Partial sum `sum_{k<=max_k} beta_{2k} / z^{2k+1}` of the transform series.
pub fn stieltjes_series(w: &StepGraphon, max_k: usize, z: Complex64) -> Result<Complex64> {
    let mut sum = Complex64::new(0.0, 0.0);
    let z2 = z * z;
    let mut power = z.inv(); // 1/z^{2k+1}
    for k in 0..=max_k {
        let beta = homdensity::wigner_moment(k, w)?;
        sum += beta * power;
        power /= z2;
    }
    Ok(sum)
}

/// Gram transform assembled from the Wigner QVE on the symmetrized kernel
/// via the change of variables
/// `s(z) = (1/(2y)) * zeta^{-1} * m(zeta) + (y-1)/(2yz)`, `zeta = sqrt(z/(1+y))`.
pub fn gram_transform_via_wigner(
    w: &StepGraphon,
    y: f64,
    z: Complex64,
    tol: f64,
    max_iter: usize,
) -> Result<Complex64> {
    check_upper_half_plane(z)?;
    homdensity::check_bipartite(w, y)?;
    let zeta = (z / (1.0 + y)).sqrt();
    let m = solve_qve(w, zeta, tol, max_iter)?.s;
    Ok(m / zeta / (2.0 * y) + (y - 1.0) / (2.0 * y) / z)
}

/// Closed-form reference transforms used to validate the solver.
pub mod reference {
    use num_complex::Complex64;

    /// Stieltjes transform of the semicircle law on `[-2, 2]` in the
    /// `s(z) = int 1/(z-x) dmu` convention: the root of `s^2 - zs + 1 = 0`
    /// decaying at infinity.
    pub fn semicircle_stieltjes(z: Complex64) -> Complex64 {
        let mut w = (z * z - 4.0).sqrt();
        if (w * z.conj()).re < 0.0 {
            w = -w;
        }
        (z - w) / 2.0
    }

    /// Semicircle transform for variance `c`: `s_c(z) = s(z/sqrt(c))/sqrt(c)`.
    pub fn semicircle_stieltjes_scaled(z: Complex64, c: f64) -> Complex64 {
        let r = c.sqrt();
        semicircle_stieltjes(z / r) / r
    }

    /// Stieltjes transform of the Marchenko-Pastur law with aspect ratio 1
    /// (the Catalan generating function route): `s(z) = (1 - sqrt(1 - 4/z))/2`.
    pub fn marchenko_pastur_unit_stieltjes(z: Complex64) -> Complex64 {
        (1.0 - (1.0 - 4.0 / z).sqrt()) / 2.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use reference::*;

    fn constant(c: f64) -> StepGraphon {
        StepGraphon::constant(c).unwrap()
    }

    fn mp_bipartite(y: f64) -> StepGraphon {
        let left = y / (1.0 + y);
        StepGraphon::new(
            vec![left, 1.0 - left],
            vec![vec![0.0, 1.0], vec![1.0, 0.0]],
        )
        .unwrap()
    }

    fn random_graphon(d: usize, seed: u64, max_weight: f64) -> StepGraphon {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut fractions: Vec<f64> = (0..d).map(|_| rng.random::<f64>() + 0.05).collect();
        let total: f64 = fractions.iter().sum();
        fractions.iter_mut().for_each(|f| *f /= total);
        let mut weights = vec![vec![0.0; d]; d];
        for i in 0..d {
            for j in 0..=i {
                let v = rng.random::<f64>() * max_weight;
                weights[i][j] = v;
                weights[j][i] = v;
            }
        }
        StepGraphon::new(fractions, weights).unwrap()
    }

    #[test]
    fn semicircle_point_values() {
        let z = Complex64::new(3.0, 1e-9);
        let sol = solve_qve(&constant(1.0), z, 1e-13, DEFAULT_MAX_ITER).unwrap();
        assert!((sol.s.re - (3.0 - 5.0f64.sqrt()) / 2.0).abs() < 1e-9);
        assert!(sol.residual <= 1e-13);

        let z = Complex64::new(0.0, 2.0);
        let sol = solve_qve(&constant(1.0), z, 1e-13, DEFAULT_MAX_ITER).unwrap();
        let oracle = semicircle_stieltjes(z);
        assert!((sol.s - oracle).norm() < 1e-10);
        // i(1 - sqrt(2)) in closed form
        assert!((sol.s - Complex64::new(0.0, 1.0 - 2.0f64.sqrt())).norm() < 1e-10);
    }

    #[test]
    fn constant_scaling_symmetry() {
        let c = 2.7;
        for &(re, im) in &[(1.0, 0.5), (-2.0, 0.1), (0.3, 3.0)] {
            let z = Complex64::new(re, im);
            let sol = solve_qve(&constant(c), z, 1e-13, DEFAULT_MAX_ITER).unwrap();
            let oracle = semicircle_stieltjes_scaled(z, c);
            assert!((sol.s - oracle).norm() < 1e-10);
        }
    }

    #[test]
    fn domain_and_convergence_errors() {
        let w = constant(1.0);
        assert!(matches!(
            solve_qve(&w, Complex64::new(1.0, 0.0), 1e-12, 100),
            Err(Error::NotUpperHalfPlane { .. })
        ));
        let err = solve_qve(&w, Complex64::new(0.0, 0.01), 1e-15, 3).unwrap_err();
        match err {
            Error::NonConvergence {
                residual,
                iterations,
            } => {
                assert!(residual > 0.0);
                assert_eq!(iterations, 3);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn herglotz_sign_and_z_symmetry() {
        let w = random_graphon(4, 21, 2.0);
        for &(re, im) in &[(0.7, 0.05), (-1.3, 0.2), (2.5, 1.0)] {
            let z = Complex64::new(re, im);
            let sol = solve_qve(&w, z, 1e-12, DEFAULT_MAX_ITER).unwrap();
            assert!(sol.a.iter().all(|ai| ai.im < 0.0));
            assert!(sol.s.im < 0.0);
            // s = sum_i alpha_i a_i
            let s2: Complex64 = sol
                .a
                .iter()
                .zip(w.fractions())
                .map(|(a, &f)| a * f)
                .sum();
            assert!((sol.s - s2).norm() < 1e-12);
            // a(-conj z) = -conj a(z)
            let mirrored = solve_qve(&w, Complex64::new(-re, im), 1e-12, DEFAULT_MAX_ITER).unwrap();
            for (am, az) in mirrored.a.iter().zip(&sol.a) {
                assert!((am + az.conj()).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn large_z_asymptotics() {
        let w = random_graphon(3, 8, 3.0);
        let z = Complex64::new(600.0, 800.0); // |z| = 1000
        let sol = solve_qve(&w, z, 1e-14, DEFAULT_MAX_ITER).unwrap();
        let bound = 2.0 * w.sup_norm() / 1e9;
        assert!((sol.s - z.inv()).norm() <= bound);
    }

    #[test]
    fn series_matches_solver_at_moderate_z() {
        let w = random_graphon(2, 33, 2.0);
        let z = Complex64::new(6.0, 8.0); // |z| = 10
        let sol = solve_qve(&w, z, 1e-13, DEFAULT_MAX_ITER).unwrap();
        let series = stieltjes_series(&w, 12, z).unwrap();
        assert!((sol.s - series).norm() < 1e-6);
        let table = series_moments(&w, 3).unwrap();
        assert_eq!(table.source, MomentSource::QveSeries);
        assert_eq!(table.get(0), Some(1.0));
        assert_eq!(table.get(1), Some(0.0));
    }

    #[test]
    fn unique_solution_from_random_initializations() {
        use rand::{Rng, SeedableRng};
        let w = random_graphon(3, 55, 1.5);
        let z = Complex64::new(0.4, 0.05);
        let base = solve_qve(&w, z, 1e-12, DEFAULT_MAX_ITER).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for _ in 0..5 {
            let init: Vec<Complex64> = (0..w.block_count())
                .map(|_| Complex64::new(rng.random::<f64>() - 0.5, -rng.random::<f64>() - 0.01))
                .collect();
            let sol = solve_qve_from(&w, z, &init, 1e-12, DEFAULT_MAX_ITER).unwrap();
            for (a, b) in sol.a.iter().zip(&base.a) {
                assert!((a - b).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn gram_matches_marchenko_pastur() {
        let w = mp_bipartite(1.0);
        let z = Complex64::new(5.0, 1e-9);
        let sol = solve_gram_qve(&w, 1.0, z, 1e-13, DEFAULT_MAX_ITER).unwrap();
        assert!((sol.s.re - 0.2763932).abs() < 1e-6);
        let oracle = marchenko_pastur_unit_stieltjes(z);
        assert!((sol.s - oracle).norm() < 1e-10);

        for &(re, im) in &[(2.0, 0.3), (1.0, 0.05), (-0.5, 0.5)] {
            let z = Complex64::new(re, im);
            let sol = solve_gram_qve(&w, 1.0, z, 1e-13, DEFAULT_MAX_ITER).unwrap();
            let oracle = marchenko_pastur_unit_stieltjes(z);
            assert!((sol.s - oracle).norm() < 1e-10, "z={z}");
        }
    }

    #[test]
    fn gram_series_consistency() {
        // moments extracted from the large-|z| series of s match gram_moment
        let w = mp_bipartite(1.0);
        let y = 1.0;
        let z = Complex64::new(60.0, 1.0);
        let sol = solve_gram_qve(&w, y, z, 1e-14, DEFAULT_MAX_ITER).unwrap();
        let mut series = Complex64::new(0.0, 0.0);
        let mut power = z.inv();
        for k in 0..=8usize {
            let gamma = homdensity::gram_moment(k, &w, y).unwrap();
            series += gamma * power;
            power /= z;
        }
        assert!((sol.s - series).norm() < 1e-6, "{} vs {series}", sol.s);
    }

    #[test]
    fn gram_change_of_variables_identity() {
        for (seed, y) in [(1u64, 0.5f64), (2, 1.0), (3, 2.0)] {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            // bipartite kernel: 2 left blocks, 2 right blocks
            let left = y / (1.0 + y);
            let fractions = vec![left * 0.4, left * 0.6, (1.0 - left) * 0.5, (1.0 - left) * 0.5];
            let mut weights = vec![vec![0.0; 4]; 4];
            for i in 0..2 {
                for j in 2..4 {
                    let v = rng.random::<f64>() * 2.0 + 0.1;
                    weights[i][j] = v;
                    weights[j][i] = v;
                }
            }
            let w = StepGraphon::new(fractions, weights).unwrap();
            for &(re, im) in &[(3.0, 0.2), (1.5, 0.05), (6.0, 1.0)] {
                let z = Complex64::new(re, im);
                let direct = solve_gram_qve(&w, y, z, 1e-13, DEFAULT_MAX_ITER)
                    .unwrap()
                    .s;
                let via = gram_transform_via_wigner(&w, y, z, 1e-13, DEFAULT_MAX_ITER).unwrap();
                assert!(
                    (direct - via).norm() < 1e-8,
                    "y={y} z={z}: {direct} vs {via}"
                );
            }
        }
    }

    #[test]
    fn density_curve_semicircle() {
        let w = constant(1.0);
        let curve = density_curve(&w, -3.0, 3.0, 301, 0.01, None).unwrap();
        let at = |e: f64| {
            curve
                .grid
                .iter()
                .min_by(|a, b| {
                    (a.0 - e).abs().partial_cmp(&(b.0 - e).abs()).unwrap()
                })
                .unwrap()
                .1
        };
        let rho0 = at(0.0);
        assert!((rho0 - 1.0 / std::f64::consts::PI).abs() < 0.02 / std::f64::consts::PI);
        assert!(at(2.5) < 0.02);
        assert!(at(-2.5) < 0.02);
        // symmetry
        for p in 0..curve.grid.len() {
            let (e, rho) = curve.grid[p];
            let (em, rhom) = curve.grid[curve.grid.len() - 1 - p];
            assert!((e + em).abs() < 1e-12);
            assert!((rho - rhom).abs() < 1e-9);
        }
        // trapezoid mass close to 1
        assert!(curve.mass() > 0.95 && curve.mass() <= 1.0 + 1e-9);
    }

    #[test]
    fn density_curve_argument_errors() {
        let w = constant(1.0);
        assert!(density_curve(&w, -1.0, 1.0, 1, 0.1, None).is_err());
        assert!(density_curve(&w, -1.0, 1.0, 10, 0.0, None).is_err());
        assert!(density_curve(&w, 1.0, -1.0, 10, 0.1, None).is_err());
    }
}
