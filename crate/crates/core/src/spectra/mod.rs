//! Empirical spectra: eigenvalues with a residual certificate, ESD moments,
//! empirical Stieltjes transforms, histograms, and exact Kolmogorov / Levy
//! distances between empirical CDFs.

mod eigen;

use crate::homdensity::{MomentSource, MomentTable};
use crate::matrix::SquareMatrix;
use crate::qve::DensityCurve;
use crate::{Error, Result};
use num_complex::Complex64;

/// Dense eigensolver size cap.
pub const DESK_CAP: usize = 8192;
/// Relative symmetry tolerance of the eigensolver input.
pub const SYMMETRY_REL_TOL: f64 = 1e-9;
/// Residual certificate: `max ||A v - lambda v|| <= 1e-8 * n * max|a_ij|`.
pub const CERTIFICATE_FACTOR: f64 = 1e-8;
const CERTIFICATE_SPOTS: usize = 10;

/// Sorted eigenvalue list.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
    /// Worst spot-checked eigenpair residual recorded at creation; zero for
    /// spectra built directly from values.
    pub certificate_residual: f64,
}

impl Spectrum {
    /// Wraps known eigenvalues (sorted on construction).
    pub fn from_values(mut values: Vec<f64>) -> Self {
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Self {
            eigenvalues: values,
            certificate_residual: 0.0,
        }
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Empirical CDF at `x`.
    pub fn cdf(&self, x: f64) -> f64 {
        let count = self.eigenvalues.partition_point(|&v| v <= x);
        count as f64 / self.eigenvalues.len() as f64
    }
}

/// All eigenvalues of a dense symmetric matrix, certified: ten eigenpairs
/// spread over the spectrum are reconstructed by inverse iteration and the
/// residual `||A v - lambda v||` is checked against
/// `1e-8 * n * max|a_ij|`.
pub fn eigenvalues_symmetric(a: &SquareMatrix) -> Result<Spectrum> {
    let n = a.dim();
    if n > DESK_CAP {
        return Err(Error::DimensionCap { n, cap: DESK_CAP });
    }
    if n == 0 {
        return Err(Error::InvalidArgument("empty matrix".into()));
    }
    let scale = a.max_abs();
    let tolerance = SYMMETRY_REL_TOL * scale;
    let asymmetry = a.asymmetry();
    if asymmetry > tolerance {
        return Err(Error::NotSymmetric {
            asymmetry,
            tolerance,
        });
    }
    let out = eigen::symmetric_eigenvalues_certified(a, CERTIFICATE_SPOTS)?;
    let bound = CERTIFICATE_FACTOR * n as f64 * scale.max(f64::MIN_POSITIVE);
    if out.max_residual > bound {
        return Err(Error::CertificateFailed {
            residual: out.max_residual,
            bound,
        });
    }
    Ok(Spectrum {
        eigenvalues: out.eigenvalues,
        certificate_residual: out.max_residual,
    })
}

/// Empirical moments `(1/n) sum lambda_i^k` for `k = 0..=max_order`.
pub fn esd_moments(sp: &Spectrum, max_order: usize) -> MomentTable {
    let n = sp.len() as f64;
    let mut entries = Vec::with_capacity(max_order + 1);
    let mut powers: Vec<f64> = vec![1.0; sp.len()];
    for order in 0..=max_order {
        if order > 0 {
            powers
                .iter_mut()
                .zip(sp.eigenvalues())
                .for_each(|(p, l)| *p *= l);
        }
        entries.push((order, powers.iter().sum::<f64>() / n));
    }
    MomentTable::new(entries, MomentSource::Empirical, max_order)
}

/// Empirical Stieltjes transform `(1/n) sum 1/(z - lambda_i)`.
pub fn empirical_stieltjes(sp: &Spectrum, z: Complex64) -> Result<Complex64> {
    if z.im == 0.0 {
        return Err(Error::InvalidArgument(
            "empirical Stieltjes transform needs Im z != 0".into(),
        ));
    }
    let sum: Complex64 = sp.eigenvalues().iter().map(|&l| (z - l).inv()).sum();
    Ok(sum / sp.len() as f64)
}

/// Exact sup distance between the two empirical step CDFs.
pub fn kolmogorov_distance(a: &Spectrum, b: &Spectrum) -> f64 {
    let (xs, ys) = (a.eigenvalues(), b.eigenvalues());
    let (n, m) = (xs.len() as f64, ys.len() as f64);
    let mut best = 0.0f64;
    let (mut i, mut j) = (0usize, 0usize);
    while i < xs.len() || j < ys.len() {
        let x = match (xs.get(i), ys.get(j)) {
            (Some(&a), Some(&b)) => a.min(b),
            (Some(&a), None) => a,
            (None, Some(&b)) => b,
            (None, None) => break,
        };
        while i < xs.len() && xs[i] <= x {
            i += 1;
        }
        while j < ys.len() && ys[j] <= x {
            j += 1;
        }
        best = best.max((i as f64 / n - j as f64 / m).abs());
    }
    best
}

/// Smallest `t` with `G(t) + t >= c` for the empirical CDF `G` of `ys`.
/// `G(t) + t` is strictly increasing and piecewise linear with jumps at the
/// atoms, so the threshold is found segment by segment.
fn shifted_cdf_inverse(ys: &[f64], c: f64) -> f64 {
    let m = ys.len() as f64;
    // segment j (0..=len): t in [lo_j, hi_j) with G = j/m
    // binary search the first segment whose supremum value reaches c
    let seg_value_lo = |j: usize| -> f64 {
        if j == 0 {
            f64::NEG_INFINITY
        } else {
            j as f64 / m + ys[j - 1]
        }
    };
    let (mut lo, mut hi) = (0usize, ys.len() + 1);
    // find largest j with seg_value_lo(j) <= c, i.e. the segment where the
    // crossing can happen first
    while lo < hi {
        let mid = (lo + hi) / 2;
        if seg_value_lo(mid) <= c {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    // candidate segments: the one before the partition point may contain the
    // crossing inside; earlier segments cannot reach c
    let j = lo.saturating_sub(1);
    let g = j as f64 / m;
    let t = c - g;
    let lower = if j == 0 { f64::NEG_INFINITY } else { ys[j - 1] };
    let upper = if j < ys.len() { ys[j] } else { f64::INFINITY };
    if t < lower {
        lower
    } else if t <= upper {
        t
    } else {
        // crossing happens at the jump into the next segment
        upper
    }
}

/// Exact Levy distance between two empirical CDFs:
/// `inf { eps : F(x-eps)-eps <= G(x) <= F(x+eps)+eps  for all x }`.
///
/// For each atom `a` of `F` the smallest feasible eps for
/// `F(a) <= G(a+eps)+eps` is `max(0, inv_G(F(a)+a) - a)` where `inv_G`
/// inverts the increasing function `G(t)+t`; the distance is the maximum
/// over both constraint families.
pub fn levy_distance(a: &Spectrum, b: &Spectrum) -> f64 {
    let one_sided = |xs: &[f64], ys: &[f64]| -> f64 {
        let n = xs.len() as f64;
        let mut worst = 0.0f64;
        let mut i = 0usize;
        while i < xs.len() {
            // skip to the last duplicate so F(a) is the full jump value
            let mut k = i;
            while k + 1 < xs.len() && xs[k + 1] == xs[i] {
                k += 1;
            }
            let atom = xs[i];
            let f_at = (k + 1) as f64 / n;
            let t = shifted_cdf_inverse(ys, f_at + atom);
            worst = worst.max(t - atom);
            i = k + 1;
        }
        worst
    };
    one_sided(a.eigenvalues(), b.eigenvalues())
        .max(one_sided(b.eigenvalues(), a.eigenvalues()))
        .max(0.0)
}

/// Right side of the Levy cube bound: `(1/n) tr((A-B)(A-B)^T)`. The caller
/// compares `levy_distance(...)^3` against it.
pub fn levy_cube_bound(a: &SquareMatrix, b: &SquareMatrix) -> Result<f64> {
    let diff = a.sub(b)?;
    Ok(diff.frobenius_sq() / a.dim() as f64)
}

/// Histogram of a spectrum, normalized so that the in-range mass integrates
/// to one. Bins are right-closed, the first bin closed on both ends.
pub fn histogram_density(sp: &Spectrum, bins: usize, range: (f64, f64)) -> Result<DensityCurve> {
    let (lo, hi) = range;
    if bins == 0 {
        return Err(Error::InvalidArgument("need at least one bin".into()));
    }
    if !(hi > lo) {
        return Err(Error::InvalidArgument(format!(
            "empty histogram range [{lo}, {hi}]"
        )));
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    let mut total = 0usize;
    for &v in sp.eigenvalues() {
        if v < lo || v > hi {
            continue;
        }
        let idx = (((v - lo) / width).ceil() as isize - 1).clamp(0, bins as isize - 1) as usize;
        counts[idx] += 1;
        total += 1;
    }
    let norm = if total > 0 {
        1.0 / (total as f64 * width)
    } else {
        0.0
    };
    let grid = counts
        .iter()
        .enumerate()
        .map(|(i, &c)| (lo + (i as f64 + 0.5) * width, c as f64 * norm))
        .collect();
    Ok(DensityCurve { grid, eta: 0.0 })
}

/// L1 distance between a histogram and a reference density evaluated at the
/// same midpoints, both weighted by the bin width.
pub fn l1_density_distance(histogram: &DensityCurve, reference: impl Fn(f64) -> f64) -> f64 {
    if histogram.grid.len() < 2 {
        return 0.0;
    }
    let width = histogram.grid[1].0 - histogram.grid[0].0;
    histogram
        .grid
        .iter()
        .map(|&(e, rho)| (rho - reference(e)).abs() * width)
        .sum()
}

/// Predicted CDF from a density curve: trapezoid integral normalized to unit
/// total mass, evaluated by linear interpolation (clamped outside the grid).
pub struct CurveCdf {
    xs: Vec<f64>,
    cdf: Vec<f64>,
}

impl CurveCdf {
    pub fn new(curve: &DensityCurve) -> Self {
        let xs: Vec<f64> = curve.grid.iter().map(|&(e, _)| e).collect();
        let mut cdf = Vec::with_capacity(xs.len());
        let mut acc = 0.0;
        cdf.push(0.0);
        for pair in curve.grid.windows(2) {
            acc += 0.5 * (pair[0].1 + pair[1].1) * (pair[1].0 - pair[0].0);
            cdf.push(acc);
        }
        let total = acc.max(f64::MIN_POSITIVE);
        cdf.iter_mut().for_each(|c| *c /= total);
        Self { xs, cdf }
    }

    pub fn evaluate(&self, x: f64) -> f64 {
        if x <= self.xs[0] {
            return 0.0;
        }
        if x >= *self.xs.last().unwrap() {
            return 1.0;
        }
        let idx = self.xs.partition_point(|&v| v <= x);
        let (x0, x1) = (self.xs[idx - 1], self.xs[idx]);
        let (c0, c1) = (self.cdf[idx - 1], self.cdf[idx]);
        c0 + (c1 - c0) * (x - x0) / (x1 - x0)
    }
}

/// Exact sup distance between an empirical CDF and a piecewise-linear
/// predicted CDF: checked at every eigenvalue (both CDF sides) and every
/// grid node.
pub fn ks_to_curve(sp: &Spectrum, cdf: &CurveCdf) -> f64 {
    let n = sp.len() as f64;
    let mut best = 0.0f64;
    for (i, &l) in sp.eigenvalues().iter().enumerate() {
        let pred = cdf.evaluate(l);
        best = best.max((pred - i as f64 / n).abs());
        best = best.max((pred - (i + 1) as f64 / n).abs());
    }
    for (&x, &c) in cdf.xs.iter().zip(&cdf.cdf) {
        best = best.max((sp.cdf(x) - c).abs());
    }
    best
}
