//! Space-fractional variant: the Laplacian in the telegraph equation is
//! replaced by the Riesz derivative of order `2α`, whose Fourier symbol is
//! `−|k|^{2α}`. With `λ(t) = λ₀w(t)` the transform `p̂(k, τ)` solves
//!
//! ```text
//! p̂'' + 2λ₀ p̂' + c₀²|k|^{2α} p̂ = 0,   p̂(k,0) = 1,  p̂'(k,0) = 0
//! ```
//!
//! in the clock `τ`. With `μ = λ₀² − c₀²|k|^{2α}` its solution is
//! `e^{−λ₀τ}[cosh(√μ τ) + λ₀ sinh(√μ τ)/√μ]`, continued to
//! `e^{−λ₀τ}[cos(ωτ) + λ₀ sin(ωτ)/ω]` with `ω = √(−μ)` when `μ < 0`.
//!
//! Only the Fourier symbol is used; the real-space kernel is never formed.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::analytic::{density_ac_at_tau, law_at_time, TelegraphParams};
use crate::error::{domain, Error, Result};
use crate::grid::DensityGrid;
use crate::numeric;
use crate::profiles::TimeProfile;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FractionalParams {
    /// Half-order of the Riesz derivative, `0 < α ≤ 1`.
    pub alpha: f64,
    pub base: TelegraphParams,
}

impl FractionalParams {
    pub fn new(alpha: f64, base: TelegraphParams) -> Result<Self> {
        let fp = Self { alpha, base };
        fp.validate()?;
        Ok(fp)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return domain(format!("alpha must lie in (0, 1], got {}", self.alpha));
        }
        self.base.validate()
    }
}

/// `sinh(x)/x`.
fn sinhc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 + x * x / 6.0
    } else {
        x.sinh() / x
    }
}

/// `sin(x)/x`.
fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Real characteristic function of `X − x₀` at clock value `tau`.
pub fn charfun_centered(fp: &FractionalParams, k: f64, tau: f64) -> Result<f64> {
    fp.validate()?;
    if !k.is_finite() || !(tau >= 0.0) || !tau.is_finite() {
        return domain("wavenumber and clock value must be finite, clock nonnegative");
    }
    let TelegraphParams { c0, lambda0, .. } = fp.base;
    let u = lambda0 * tau;
    let q = c0 * c0 * k.abs().powf(2.0 * fp.alpha);
    let mu = lambda0 * lambda0 - q;
    if mu > 0.0 {
        let s = mu.sqrt();
        let x = s * tau;
        if x < 1.0 {
            Ok((-u).exp() * (x.cosh() + u * sinhc(x)))
        } else {
            // e^{(s−λ₀)τ} with s − λ₀ = −q/(s + λ₀), free of cancellation.
            let grow = (-q / (s + lambda0) * tau).exp();
            let decay = (-(s + lambda0) * tau).exp();
            Ok(0.5 * ((1.0 + lambda0 / s) * grow + (1.0 - lambda0 / s) * decay))
        }
    } else if mu < 0.0 {
        let x = (-mu).sqrt() * tau;
        Ok((-u).exp() * (x.cos() + u * sinc(x)))
    } else {
        Ok((-u).exp() * (1.0 + u))
    }
}

/// `E[e^{ikX(t)}]` for the space-fractional process started at `x₀`.
pub fn charfun(fp: &FractionalParams, profile: &TimeProfile, k: f64, t: f64) -> Result<Complex64> {
    if !t.is_finite() {
        return domain("time must be finite");
    }
    let tau = profile.tau(t)?;
    let real = charfun_centered(fp, k, tau)?;
    Ok(Complex64::from_polar(1.0, k * fp.base.x0) * real)
}

/// Wavenumber where `μ = 0`, i.e. `|k| = (λ₀/c₀)^{1/α}`.
pub fn branch_point(fp: &FractionalParams) -> f64 {
    (fp.base.lambda0 / fp.base.c0).powf(1.0 / fp.alpha)
}

/// Relative residual of the clock ODE for `p̂(k, ·)` at `tau`, using central
/// differences with step `h`.
pub fn ode_residual(fp: &FractionalParams, k: f64, tau: f64, h: f64) -> Result<f64> {
    if !(tau > h) {
        return domain("residual needs tau > h");
    }
    let f = |s: f64| charfun_centered(fp, k, s);
    let (fm, f0, fp_) = (f(tau - h)?, f(tau)?, f(tau + h)?);
    let second = (fp_ - 2.0 * f0 + fm) / (h * h);
    let first = (fp_ - fm) / (2.0 * h);
    let TelegraphParams { c0, lambda0, .. } = fp.base;
    let stiffness = c0 * c0 * k.abs().powf(2.0 * fp.alpha) * f0;
    let residual = second + 2.0 * lambda0 * first + stiffness;
    let scale = second.abs().max((2.0 * lambda0 * first).abs()).max(stiffness.abs());
    Ok(if scale == 0.0 { 0.0 } else { residual.abs() / scale })
}

/// Characteristic function on `k_j = (j − n/2)Δk`, `Δk = 2k_max/n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CharFunGrid {
    pub wavenumbers: Vec<f64>,
    pub values: Vec<Complex64>,
    pub t: f64,
    pub alpha: f64,
    /// Starting point `x₀`; the inverted density is centered on it.
    pub center: f64,
}

impl CharFunGrid {
    pub fn dk(&self) -> f64 {
        self.wavenumbers[1] - self.wavenumbers[0]
    }

    pub fn k_max(&self) -> f64 {
        -self.wavenumbers[0]
    }
}

/// Fills a symmetric wavenumber grid; values at `−k` are the exact conjugates
/// of those at `k`.
pub fn charfun_grid(
    fp: &FractionalParams,
    profile: &TimeProfile,
    t: f64,
    k_max: f64,
    n_k: usize,
) -> Result<CharFunGrid> {
    if n_k < 64 || !n_k.is_multiple_of(2) {
        return domain(format!("n_k must be even and at least 64, got {n_k}"));
    }
    if !(k_max > 0.0) || !k_max.is_finite() {
        return domain("k_max must be positive");
    }
    fp.validate()?;
    let half = n_k / 2;
    let dk = k_max / half as f64;
    let wavenumbers: Vec<f64> = (0..n_k).map(|j| (j as f64 - half as f64) * dk).collect();
    let mut values = vec![Complex64::new(0.0, 0.0); n_k];
    for j in half..n_k {
        values[j] = charfun(fp, profile, wavenumbers[j], t)?;
    }
    for j in 1..half {
        values[j] = values[n_k - j].conj();
    }
    values[0] = charfun(fp, profile, k_max, t)?.conj();
    Ok(CharFunGrid {
        wavenumbers,
        values,
        t,
        alpha: fp.alpha,
        center: fp.base.x0,
    })
}

/// Tail level below which the transform counts as resolved.
pub const TAIL_THRESHOLD: f64 = 1e-8;
/// Largest tolerated mass or negativity defect of an inversion.
pub const DEFECT_THRESHOLD: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InversionOptions {
    /// Standard deviation of a Gaussian mollifier, in spatial cells.
    pub mollifier_cells: Option<f64>,
}

impl Default for InversionOptions {
    fn default() -> Self {
        Self {
            mollifier_cells: Some(2.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Inversion {
    pub density: DensityGrid,
    /// Largest negative excursion of the density.
    pub negativity_defect: f64,
    /// `|1 − Σ p Δx|`.
    pub mass_defect: f64,
    /// Largest `|p̂|` (after mollification) on the outer 1% of the grid.
    pub tail: f64,
    /// Largest imaginary part left by the transform.
    pub imaginary_residual: f64,
    /// Mollifier standard deviation in length units, if one was applied.
    pub mollifier_sigma: Option<f64>,
}

/// Inverts a characteristic-function grid to a density on the conjugate grid
/// `x_m = x₀ + (m − n/2)Δx`, `Δx = 2π/(nΔk)`, by one FFT.
pub fn invert_charfun(grid: &CharFunGrid, options: &InversionOptions) -> Result<Inversion> {
    let n = grid.values.len();
    if n < 64 || !n.is_multiple_of(2) || grid.wavenumbers.len() != n {
        return domain("characteristic-function grid must hold an even number (≥ 64) of points");
    }
    let half = n / 2;
    if (grid.values[half] - Complex64::new(1.0, 0.0)).norm() > 1e-12 {
        return domain("characteristic function must equal 1 at k = 0");
    }
    let dk = grid.dk();
    let dx = 2.0 * PI / (n as f64 * dk);
    let sigma = options.mollifier_cells.map(|cells| cells * dx);

    let mut tail: f64 = 0.0;
    let outer = (n as f64 * 0.005).ceil() as usize;
    let mut buffer: Vec<Complex64> = grid
        .wavenumbers
        .iter()
        .zip(&grid.values)
        .enumerate()
        .map(|(j, (&k, &v))| {
            let damp = sigma.map_or(1.0, |s| (-0.5 * (k * s).powi(2)).exp());
            let centered = v * Complex64::from_polar(damp, -k * grid.center);
            if j < outer || j >= n - outer {
                tail = tail.max(centered.norm());
            }
            // (−1)^j shifts the FFT output so x = x₀ sits at index n/2.
            if j % 2 == 1 {
                -centered
            } else {
                centered
            }
        })
        .collect();
    if tail >= TAIL_THRESHOLD {
        return Err(Error::Quality(format!(
            "characteristic function has not decayed at k_max = {} (|p̂| = {tail:.3e}); \
             increase k_max or apply a mollifier",
            grid.k_max()
        )));
    }

    FftPlanner::new().plan_fft_forward(n).process(&mut buffer);

    let scale = dk / (2.0 * PI);
    let sign_half = if half.is_multiple_of(2) { 1.0 } else { -1.0 };
    let mut density = DensityGrid::zeros(
        grid.center - (half as f64 + 0.5) * dx,
        grid.center + (half as f64 - 0.5) * dx,
        n,
        grid.t,
    )?;
    let mut imaginary_residual: f64 = 0.0;
    for (m, value) in buffer.iter().enumerate() {
        let sign = if m % 2 == 1 { -sign_half } else { sign_half };
        let p = value * (sign * scale);
        density.values[m] = p.re;
        imaginary_residual = imaginary_residual.max(p.im.abs());
    }
    // Cell centers computed from the edges; pin them to the exact lattice.
    for (m, c) in density.centers.iter_mut().enumerate() {
        *c = grid.center + (m as f64 - half as f64) * dx;
    }
    let negativity_defect = density
        .values
        .iter()
        .fold(0.0f64, |acc, &p| acc.max(-p));
    let mass_defect = (1.0 - density.cell_mass()).abs();
    if mass_defect > DEFECT_THRESHOLD || negativity_defect > DEFECT_THRESHOLD {
        return Err(Error::Quality(format!(
            "inversion is not a probability density (mass defect {mass_defect:.3e}, negativity {negativity_defect:.3e}); \
             increase k_max or n_k, or widen the mollifier"
        )));
    }
    Ok(Inversion {
        density,
        negativity_defect,
        mass_defect,
        tail,
        imaginary_residual,
        mollifier_sigma: sigma,
    })
}

/// Picks `k_max` for an `n_k`-point grid: the smallest doubling of `1/L`
/// (`L = c₀τ`) at which `|p̂|` drops below [`TAIL_THRESHOLD`], kept between
/// the values giving a spatial window of `16L` and of `4L`. The flag reports
/// whether the tail criterion holds at the returned value.
pub fn auto_k_max(fp: &FractionalParams, profile: &TimeProfile, t: f64, n_k: usize) -> Result<(f64, bool)> {
    let tau = profile.tau(t)?;
    let spread = (fp.base.c0 * tau).max(f64::MIN_POSITIVE);
    let n = n_k as f64;
    let k_floor = n * PI / (16.0 * spread);
    let k_cap = n * PI / (4.0 * spread);
    let envelope = |k: f64| -> Result<f64> {
        let mut m: f64 = 0.0;
        for i in 0..16 {
            let kk = k * (0.5 + 0.5 * i as f64 / 15.0);
            m = m.max(charfun_centered(fp, kk, tau)?.abs());
        }
        Ok(m)
    };
    let mut k = 1.0 / spread;
    while k < k_cap && envelope(k)? >= TAIL_THRESHOLD {
        k *= 2.0;
    }
    let k = k.clamp(k_floor, k_cap);
    Ok((k, envelope(k)? < TAIL_THRESHOLD))
}

/// Second moment about `x₀` of inversions on successively larger `n_k` at
/// fixed `k_max` (each doubling doubles the spatial window).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentStudy {
    pub n_k: Vec<usize>,
    pub second_moments: Vec<f64>,
    /// Set when the moment keeps growing with the window (ratio of the last
    /// two moments above 1.2): the law has no finite variance.
    pub heavy_tailed: bool,
}

pub fn second_moment_study(
    fp: &FractionalParams,
    profile: &TimeProfile,
    t: f64,
    k_max: f64,
    n_k: &[usize],
    options: &InversionOptions,
) -> Result<MomentStudy> {
    if n_k.len() < 2 {
        return domain("a moment study needs at least two grid sizes");
    }
    let mut second_moments = Vec::with_capacity(n_k.len());
    for &n in n_k {
        let grid = charfun_grid(fp, profile, t, k_max, n)?;
        let inv = invert_charfun(&grid, options)?;
        second_moments.push(inv.density.second_moment(fp.base.x0));
    }
    let last = second_moments[second_moments.len() - 1];
    let prev = second_moments[second_moments.len() - 2];
    Ok(MomentStudy {
        n_k: n_k.to_vec(),
        heavy_tailed: last > 1.2 * prev,
        second_moments,
    })
}

/// Exact `α = 1` law convolved with a centered Gaussian of standard deviation
/// `sigma`, evaluated at `x`.
pub fn mollified_analytic_density(
    params: &TelegraphParams,
    profile: &TimeProfile,
    t: f64,
    sigma: f64,
    x: f64,
) -> Result<f64> {
    if !(sigma > 0.0) {
        return domain("mollifier width must be positive");
    }
    let law = law_at_time(params, profile, t)?;
    let kernel = |d: f64| (-0.5 * (d / sigma).powi(2)).exp() / (sigma * (2.0 * PI).sqrt());
    let (lo_sup, hi_sup) = (params.x0 - law.front, params.x0 + law.front);
    let mut value = law.atom_mass * (kernel(x - lo_sup) + kernel(x - hi_sup));
    if params.lambda0 > 0.0 {
        let a = (x - 8.0 * sigma).max(lo_sup);
        let b = (x + 8.0 * sigma).min(hi_sup);
        if b > a {
            let panels = 16;
            let h = (b - a) / panels as f64;
            for i in 0..panels {
                let (pa, pb) = (a + i as f64 * h, a + (i + 1) as f64 * h);
                value += numeric::gauss_legendre8(
                    |y| density_ac_at_tau(params, law.tau, y).unwrap_or(0.0) * kernel(x - y),
                    pa,
                    pb,
                );
            }
        }
    }
    Ok(value)
}
