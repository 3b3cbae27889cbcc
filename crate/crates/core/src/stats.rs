//! Goodness-of-fit distances and log-log exponent fits.

use serde::Serialize;

use crate::error::{domain, Result};
use crate::grid::DensityGrid;
use crate::numeric::compensated_sum;

/// A probability law on the line, described by its distribution function.
pub trait Law {
    /// `F(x) = P{X ≤ x}`, right-continuous.
    fn cdf(&self, x: f64) -> f64;
    /// `F(x⁻) = P{X < x}`; differs from [`Law::cdf`] only at atoms.
    fn cdf_left(&self, x: f64) -> f64;
}

/// Adapts a pair of closures into a [`Law`].
pub struct FnLaw<F, G> {
    pub cdf: F,
    pub cdf_left: G,
}

impl<F: Fn(f64) -> f64, G: Fn(f64) -> f64> Law for FnLaw<F, G> {
    fn cdf(&self, x: f64) -> f64 {
        (self.cdf)(x)
    }
    fn cdf_left(&self, x: f64) -> f64 {
        (self.cdf_left)(x)
    }
}

/// Kolmogorov-Smirnov statistic `sup |F_n − F|` of sorted samples against a law.
///
/// At each distinct sample value both one-sided limits are compared, so a law
/// with atoms reproduced exactly by the sample gives a zero statistic.
pub fn ks_distance<L: Law + ?Sized>(sorted: &[f64], law: &L) -> Result<f64> {
    if sorted.is_empty() {
        return domain("KS distance needs at least one sample");
    }
    if sorted.windows(2).any(|p| p[1] < p[0]) {
        return domain("samples must be sorted ascending");
    }
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let x = sorted[i];
        let mut j = i;
        while j < sorted.len() && sorted[j] == x {
            j += 1;
        }
        let below = i as f64 / n;
        let upto = j as f64 / n;
        d = d.max((law.cdf_left(x) - below).abs());
        d = d.max((law.cdf(x) - upto).abs());
        i = j;
    }
    Ok(d)
}

/// Two-sample Kolmogorov-Smirnov statistic of two sorted samples.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return domain("two-sample KS needs nonempty samples");
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// Least-squares line through transformed points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitResult {
    /// Slope: the power-law exponent for log-log fits.
    pub exponent: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Standard error of the slope.
    pub stderr: f64,
}

fn ols(xs: &[f64], ys: &[f64]) -> FitResult {
    let n = xs.len() as f64;
    let mx = compensated_sum(xs) / n;
    let my = compensated_sum(ys) / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r_squared = if syy > 0.0 {
        (1.0 - sse / syy).clamp(0.0, 1.0)
    } else {
        1.0
    };
    let stderr = if xs.len() > 2 {
        (sse / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    FitResult {
        exponent: slope,
        intercept,
        r_squared,
        stderr,
    }
}

fn check_points(points: &[(f64, f64)], need_positive_value: bool) -> Result<()> {
    if points.len() < 3 {
        return domain("a fit needs at least three points");
    }
    for &(t, v) in points {
        if !(t > 0.0) || (need_positive_value && !(v > 0.0)) || !t.is_finite() || !v.is_finite() {
            return domain(format!("fit points must be positive and finite, got ({t}, {v})"));
        }
    }
    let first = points[0].0;
    if points.iter().all(|p| p.0 == first) {
        return domain("fit abscissae must not all coincide");
    }
    Ok(())
}

/// OLS fit of `log value = intercept + exponent · log t`.
pub fn fit_exponent(points: &[(f64, f64)]) -> Result<FitResult> {
    check_points(points, true)?;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    Ok(ols(&xs, &ys))
}

/// OLS fit of `value = intercept + exponent · log t` (logarithmic growth).
pub fn fit_semilog(points: &[(f64, f64)]) -> Result<FitResult> {
    check_points(points, false)?;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    Ok(ols(&xs, &ys))
}

/// L¹ distance between two laws tabulated on the same grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct L1Report {
    /// `Σ |p₁ − p₂| Δx` over the cells.
    pub density: f64,
    /// `Σ |m₁ − m₂|` over atoms matched by position.
    pub atoms: f64,
}

impl L1Report {
    pub fn total(&self) -> f64 {
        self.density + self.atoms
    }
}

/// Cellwise L¹ distance, with atoms compared separately.
///
/// Atoms are matched when they sit in the same cell; unmatched atoms count
/// their full mass.
pub fn l1_distance(g1: &DensityGrid, g2: &DensityGrid) -> Result<L1Report> {
    if g1.len() != g2.len() || g1.is_empty() {
        return domain("L1 distance needs two grids with the same cells");
    }
    let scale = g1.dx().max(f64::MIN_POSITIVE);
    if g1
        .centers
        .iter()
        .zip(&g2.centers)
        .any(|(a, b)| (a - b).abs() > 1e-9 * scale)
    {
        return domain("grids have different cell centers");
    }
    let dx = g1.dx();
    let diffs: Vec<f64> = g1
        .values
        .iter()
        .zip(&g2.values)
        .map(|(a, b)| (a - b).abs() * dx)
        .collect();
    let density = compensated_sum(&diffs);

    let mut by_cell: std::collections::BTreeMap<usize, (f64, f64)> = Default::default();
    for a in &g1.atoms {
        by_cell.entry(g1.cell_of(a.position)).or_default().0 += a.mass;
    }
    for a in &g2.atoms {
        by_cell.entry(g2.cell_of(a.position)).or_default().1 += a.mass;
    }
    let atoms = by_cell.values().map(|(m1, m2)| (m1 - m2).abs()).sum();
    Ok(L1Report { density, atoms })
}

/// Mean and standard error of a sample, evaluated in sample order with
/// compensated sums.
pub fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = compensated_sum(xs) / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let dev: Vec<f64> = xs.iter().map(|x| (x - mean).powi(2)).collect();
    let var = compensated_sum(&dev) / (n - 1.0);
    (mean, (var / n).sqrt())
}
