//! Symmetric eigensolver: Householder tridiagonalization followed by
//! implicit-shift QL iteration, eigenvalues only. The reflectors are kept so
//! that spot-check eigenvectors can be recovered by inverse iteration on the
//! tridiagonal form plus back-transformation, giving a residual certificate
//! `||A v - lambda v||` measured against the original matrix.

use crate::matrix::SquareMatrix;
use crate::par;
use crate::{Error, Result};

const QL_MAX_SWEEPS: usize = 50;

pub(crate) struct Tridiagonal {
    /// Diagonal of T.
    pub d: Vec<f64>,
    /// Subdiagonal of T; `e[i]` couples `i` and `i+1`, `e[n-1]` unused.
    pub e: Vec<f64>,
    /// Householder scalars; `tau[k]` belongs to the reflector stored in
    /// column `k` below the subdiagonal.
    tau: Vec<f64>,
    /// Working matrix whose strictly lower triangle (below the first
    /// subdiagonal) stores the reflector vectors with implicit leading 1.
    reflectors: SquareMatrix,
}

/// Reduces a symmetric matrix to tridiagonal form, `T = Q^T A Q`.
pub(crate) fn tridiagonalize(a: &SquareMatrix) -> Tridiagonal {
    let n = a.dim();
    let mut work = a.clone();
    let mut d = vec![0.0f64; n];
    let mut e = vec![0.0f64; n];
    let mut tau = vec![0.0f64; n];
    let mut v = vec![0.0f64; n];
    let mut w = vec![0.0f64; n];
    for k in 0..n.saturating_sub(2) {
        // Householder vector for the column below the diagonal; read from
        // row k by symmetry.
        let x0 = work.get(k + 1, k);
        let sigma: f64 = (k + 2..n).map(|i| work.get(i, k).powi(2)).sum();
        let (beta, v0, new_sub);
        if sigma == 0.0 {
            beta = 0.0;
            v0 = 1.0;
            new_sub = x0;
        } else {
            // v = x - mu e1 with the cancellation-free v0; then H x = mu e1
            let mu = (x0 * x0 + sigma).sqrt();
            let raw_v0 = if x0 <= 0.0 { x0 - mu } else { -sigma / (x0 + mu) };
            beta = 2.0 * raw_v0 * raw_v0 / (sigma + raw_v0 * raw_v0);
            v0 = raw_v0;
            new_sub = mu;
        }
        // v normalized to v[k+1] = 1
        v[k + 1] = 1.0;
        for i in k + 2..n {
            v[i] = work.get(i, k) / v0;
        }
        if beta != 0.0 {
            // p = beta * A_sub v over the trailing block
            let p: Vec<f64> = par::map_range(n - k - 1, |r| {
                let i = k + 1 + r;
                let row = work.row(i);
                let mut acc = 0.0;
                for j in k + 1..n {
                    acc += row[j] * v[j];
                }
                beta * acc
            });
            let pv: f64 = (k + 1..n).map(|i| p[i - k - 1] * v[i]).sum();
            let half = 0.5 * beta * pv;
            for i in k + 1..n {
                w[i] = p[i - k - 1] - half * v[i];
            }
            // A_sub <- A_sub - v w^T - w v^T
            let (vs, ws) = (&v, &w);
            par::for_each_row(work.data_mut(), n, |i, row| {
                if i <= k {
                    return;
                }
                let (vi, wi) = (vs[i], ws[i]);
                for j in k + 1..n {
                    row[j] -= vi * ws[j] + wi * vs[j];
                }
            });
        }
        d[k] = work.get(k, k);
        e[k] = new_sub;
        // stash the reflector below the subdiagonal of column k
        tau[k] = beta;
        for i in k + 2..n {
            work.set(i, k, v[i]);
        }
        // keep T's subdiagonal explicit for the next step
        work.set(k + 1, k, new_sub);
        work.set(k, k + 1, new_sub);
    }
    if n >= 2 {
        d[n - 2] = work.get(n - 2, n - 2);
        e[n - 2] = work.get(n - 1, n - 2);
    }
    if n >= 1 {
        d[n - 1] = work.get(n - 1, n - 1);
    }
    Tridiagonal {
        d,
        e,
        tau,
        reflectors: work,
    }
}

impl Tridiagonal {
    /// Applies `Q` to a vector: `Q y = H_0 (H_1 (... (H_{n-3} y)))`.
    pub(crate) fn back_transform(&self, y: &mut [f64]) {
        let n = y.len();
        for k in (0..n.saturating_sub(2)).rev() {
            let beta = self.tau[k];
            if beta == 0.0 {
                continue;
            }
            // v has implicit v[k+1] = 1
            let mut dot = y[k + 1];
            for i in k + 2..n {
                dot += self.reflectors.get(i, k) * y[i];
            }
            let scaled = beta * dot;
            y[k + 1] -= scaled;
            for i in k + 2..n {
                y[i] -= scaled * self.reflectors.get(i, k);
            }
        }
    }
}

/// All eigenvalues of a symmetric tridiagonal matrix by implicit-shift QL
/// with Wilkinson-style shifts. Unsorted.
pub(crate) fn ql_implicit_eigenvalues(d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    e[n - 1] = 0.0;
    // absolute deflation floor: clusters at zero never satisfy a purely
    // relative test
    let anorm = d
        .iter()
        .zip(e.iter())
        .fold(0.0f64, |m, (&di, &ei)| m.max(di.abs() + ei.abs()));
    let floor = f64::EPSILON * anorm;
    for l in 0..n {
        let mut sweeps = 0usize;
        loop {
            // deflation point: first negligible subdiagonal at or after l
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd || e[m].abs() <= floor {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            sweeps += 1;
            if sweeps > QL_MAX_SWEEPS {
                return Err(Error::NonConvergence {
                    residual: e[l].abs(),
                    iterations: sweeps,
                });
            }
            // shift from the 2x2 at l
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            // plane rotations chasing the bulge from m-1 down to l
            let (mut s, mut c) = (1.0f64, 1.0f64);
            let mut p = 0.0f64;
            let mut underflow = false;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                f = (d[i] - g) * s + 2.0 * c * b;
                p = s * f;
                d[i + 1] = g + p;
                g = c * f - b;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// One inverse-iteration eigenvector of the tridiagonal (d, e) near
/// `lambda`, via LU with partial pivoting on the shifted matrix.
pub(crate) fn tridiagonal_inverse_iteration(
    d: &[f64],
    e: &[f64],
    lambda: f64,
    start_seed: u64,
) -> Vec<f64> {
    let n = d.len();
    if n == 1 {
        return vec![1.0];
    }
    // small shift keeps the solve well defined at exact eigenvalues
    let scale = d.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
    let shifted: Vec<f64> = d
        .iter()
        .map(|&x| x - lambda - 1e-12 * scale.max(1.0))
        .collect();
    let mut state = start_seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) | 1;
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    let mut y: Vec<f64> = (0..n).map(|_| next()).collect();
    for _ in 0..2 {
        y = solve_shifted_tridiagonal(&shifted, e, &y);
        let norm = y.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            // re-randomize on breakdown
            y = (0..n).map(|_| next()).collect();
            continue;
        }
        y.iter_mut().for_each(|x| *x /= norm);
    }
    y
}

/// Solves `T y = b` for tridiagonal `T` with main diagonal `a` and
/// sub/super-diagonal `e`, by Gaussian elimination with partial pivoting
/// (one superdiagonal of fill-in).
fn solve_shifted_tridiagonal(a: &[f64], e: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len();
    let mut dd = a.to_vec();
    let mut du = vec![0.0f64; n]; // first superdiagonal
    let mut du2 = vec![0.0f64; n]; // fill-in second superdiagonal
    du[..n - 1].copy_from_slice(&e[..n - 1]);
    let mut rhs = b.to_vec();
    for i in 0..n - 1 {
        let dl = e[i]; // subdiagonal entry of the untouched row i+1
        if dd[i].abs() >= dl.abs() {
            let pivot = if dd[i] == 0.0 { 1e-300 } else { dd[i] };
            let fact = dl / pivot;
            dd[i + 1] -= fact * du[i];
            rhs[i + 1] -= fact * rhs[i];
            // du2[i] stays 0
        } else {
            // interchange rows i and i+1
            let fact = dd[i] / dl;
            let old_diag_next = dd[i + 1];
            dd[i] = dl;
            dd[i + 1] = du[i] - fact * old_diag_next;
            if i + 1 < n - 1 {
                du2[i] = du[i + 1];
                du[i + 1] *= -fact;
            }
            du[i] = old_diag_next;
            rhs.swap(i, i + 1);
            rhs[i + 1] -= fact * rhs[i];
        }
    }
    // back substitution
    let mut y = vec![0.0f64; n];
    for i in (0..n).rev() {
        let mut acc = rhs[i];
        if i + 1 < n {
            acc -= du[i] * y[i + 1];
        }
        if i + 2 < n {
            acc -= du2[i] * y[i + 2];
        }
        let pivot = if dd[i] == 0.0 { 1e-300 } else { dd[i] };
        y[i] = acc / pivot;
    }
    y
}

/// Eigenvalue list with certificate data.
pub(crate) struct EigenOutput {
    pub eigenvalues: Vec<f64>,
    /// Worst certified residual `||A v - lambda v||_2` over the spot checks.
    pub max_residual: f64,
}

/// Computes all eigenvalues (ascending) and certifies a deterministic set of
/// `spots` of them by inverse iteration.
pub(crate) fn symmetric_eigenvalues_certified(
    a: &SquareMatrix,
    spots: usize,
) -> Result<EigenOutput> {
    let n = a.dim();
    if n == 0 {
        return Err(Error::InvalidArgument("empty matrix".into()));
    }
    if n == 1 {
        return Ok(EigenOutput {
            eigenvalues: vec![a.get(0, 0)],
            max_residual: 0.0,
        });
    }
    let tri = tridiagonalize(a);
    let mut d = tri.d.clone();
    let mut e = tri.e.clone();
    ql_implicit_eigenvalues(&mut d, &mut e)?;
    let mut eigenvalues = d;
    eigenvalues.sort_by(|x, y| x.partial_cmp(y).unwrap());
    // deterministic spot checks spread over the sorted spectrum
    let spots = spots.min(n).max(1);
    let mut max_residual = 0.0f64;
    for s in 0..spots {
        // fixed low-discrepancy positions plus a seed-free scramble
        let idx = ((s * n) / spots + (s * 2654435761) % (n / spots).max(1)) % n;
        let lambda = eigenvalues[idx];
        let mut y = tridiagonal_inverse_iteration(&tri.d, &tri.e, lambda, idx as u64 + 1);
        tri.back_transform(&mut y);
        let norm = y.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        y.iter_mut().for_each(|x| *x /= norm);
        let av = a.matvec(&y);
        let residual: f64 = av
            .iter()
            .zip(&y)
            .map(|(avi, yi)| (avi - lambda * yi).powi(2))
            .sum::<f64>()
            .sqrt();
        max_residual = max_residual.max(residual);
    }
    Ok(EigenOutput {
        eigenvalues,
        max_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_symmetric(n: usize, seed: u64) -> SquareMatrix {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut a = SquareMatrix::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                let v: f64 = rng.random::<f64>() * 2.0 - 1.0;
                a.set(i, j, v);
                a.set(j, i, v);
            }
        }
        a
    }

    #[test]
    fn tridiagonal_preserves_trace_and_frobenius() {
        let a = random_symmetric(40, 3);
        let tri = tridiagonalize(&a);
        let trace_t: f64 = tri.d.iter().sum();
        assert!((trace_t - a.trace()).abs() < 1e-10);
        let frob_t: f64 = tri.d.iter().map(|x| x * x).sum::<f64>()
            + 2.0 * tri.e[..39].iter().map(|x| x * x).sum::<f64>();
        assert!((frob_t - a.frobenius_sq()).abs() < 1e-9);
    }

    #[test]
    fn known_small_spectra() {
        let a = SquareMatrix::from_rows(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let out = symmetric_eigenvalues_certified(&a, 2).unwrap();
        assert!((out.eigenvalues[0] + 1.0).abs() < 1e-14);
        assert!((out.eigenvalues[1] - 1.0).abs() < 1e-14);

        let a = SquareMatrix::from_rows(vec![
            vec![3.0, 0.0, 0.0],
            vec![0.0, -1.0, 0.0],
            vec![0.0, 0.0, 2.0],
        ])
        .unwrap();
        let out = symmetric_eigenvalues_certified(&a, 3).unwrap();
        assert_eq!(out.eigenvalues.len(), 3);
        assert!((out.eigenvalues[0] + 1.0).abs() < 1e-14);
        assert!((out.eigenvalues[1] - 2.0).abs() < 1e-14);
        assert!((out.eigenvalues[2] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn matches_nalgebra_on_random_matrices() {
        for seed in 0..3u64 {
            let n = 60;
            let a = random_symmetric(n, seed);
            let out = symmetric_eigenvalues_certified(&a, 10).unwrap();
            let na = nalgebra::DMatrix::from_fn(n, n, |i, j| a.get(i, j));
            let mut reference: Vec<f64> = na.symmetric_eigen().eigenvalues.iter().copied().collect();
            reference.sort_by(|x, y| x.partial_cmp(y).unwrap());
            for (ours, theirs) in out.eigenvalues.iter().zip(&reference) {
                assert!(
                    (ours - theirs).abs() < 1e-10,
                    "seed {seed}: {ours} vs {theirs}"
                );
            }
            assert!(out.max_residual < 1e-10 * n as f64);
        }
    }

    #[test]
    fn repeated_eigenvalues() {
        let n = 20;
        let mut a = SquareMatrix::zeros(n);
        for i in 0..n {
            a.set(i, i, 1.0);
        }
        let out = symmetric_eigenvalues_certified(&a, 5).unwrap();
        for v in out.eigenvalues {
            assert!((v - 1.0).abs() < 1e-14);
        }
    }
}
