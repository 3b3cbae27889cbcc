//! Exact law of the process when the tumbling rate follows the speed,
//! `λ(t) = λ₀ w(t)`.
//!
//! Under the clock `τ = ∫₀ᵗ w` the process is the classical telegraph process
//! with speed `c₀` and rate `λ₀`, so everything here depends on `t` only
//! through `τ(t)`. With `L = c₀τ`, `y = x − x₀` and
//! `z = (λ₀/c₀)·sqrt(L² − y²)`, the absolutely continuous part is
//!
//! ```text
//! p(y) = ½ e^{−λ₀τ} (λ₀/c₀) [ I₀(z) + λ₀τ · I₁(z)/z ]      |y| < L
//! ```
//!
//! and each front `±L` carries an atom of mass `½ e^{−λ₀τ}`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::grid::{Atom, DensityGrid};
use crate::numeric;
use crate::profiles::{RateProfile, TimeProfile};
use crate::special::{bessel_i0_scaled, bessel_i1_over_z_scaled};
use crate::stats::Law;

/// Base speed, base tumbling rate and starting point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TelegraphParams {
    pub c0: f64,
    pub lambda0: f64,
    #[serde(default)]
    pub x0: f64,
}

impl TelegraphParams {
    pub fn new(c0: f64, lambda0: f64, x0: f64) -> Result<Self> {
        let p = Self { c0, lambda0, x0 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c0 > 0.0) || !self.c0.is_finite() {
            return domain(format!("speed c0 must be positive, got {}", self.c0));
        }
        if !(self.lambda0 >= 0.0) || !self.lambda0.is_finite() {
            return domain(format!("rate lambda0 must be nonnegative, got {}", self.lambda0));
        }
        if !self.x0.is_finite() {
            return domain("initial position must be finite");
        }
        Ok(())
    }
}

/// Summary of the law at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LawAtTime {
    pub t: f64,
    pub tau: f64,
    /// Support half-width `c₀τ`.
    pub front: f64,
    /// Mass of each boundary atom.
    pub atom_mass: f64,
    /// Mass of the absolutely continuous part.
    pub ac_mass: f64,
}

pub fn law_at_time(params: &TelegraphParams, profile: &TimeProfile, t: f64) -> Result<LawAtTime> {
    params.validate()?;
    let tau = profile.tau(t)?;
    let u = params.lambda0 * tau;
    Ok(LawAtTime {
        t,
        tau,
        front: params.c0 * tau,
        atom_mass: 0.5 * (-u).exp(),
        ac_mass: -(-u).exp_m1(),
    })
}

/// Points this close to the front (relative to its distance) belong to the atoms.
const FRONT_TOLERANCE: f64 = 1e-12;

/// Absolutely continuous density at clock value `tau`.
pub fn density_ac_at_tau(params: &TelegraphParams, tau: f64, x: f64) -> Result<f64> {
    params.validate()?;
    if params.lambda0 == 0.0 {
        return Err(Error::Degenerate(
            "with zero tumbling rate the law is two atoms only".into(),
        ));
    }
    if !(tau >= 0.0) || !tau.is_finite() || !x.is_finite() {
        return domain("clock value and position must be finite, clock nonnegative");
    }
    let TelegraphParams { c0, lambda0, x0 } = *params;
    let front = c0 * tau;
    let y = (x - x0).abs();
    if y >= front * (1.0 - FRONT_TOLERANCE) {
        return Ok(0.0);
    }
    let s = ((front - y) * (front + y)).sqrt();
    let ratio = lambda0 / c0;
    let z = ratio * s;
    let u = lambda0 * tau;
    let bracket = bessel_i0_scaled(z)? + u * bessel_i1_over_z_scaled(z)?;
    Ok(0.5 * ratio * (z - u).exp() * bracket)
}

/// One-sided limit of the absolutely continuous density at either front,
/// `½e^{−λ₀τ}(λ₀/c₀)(1 + λ₀τ/2)`.
pub fn density_ac_front_limit(params: &TelegraphParams, tau: f64) -> Result<f64> {
    params.validate()?;
    if !(tau >= 0.0) || !tau.is_finite() {
        return domain("clock value must be finite and nonnegative");
    }
    let u = params.lambda0 * tau;
    Ok(0.5 * (-u).exp() * params.lambda0 / params.c0 * (1.0 + 0.5 * u))
}

/// Absolutely continuous part of the law of `X(t)` at `x`.
pub fn density_ac(params: &TelegraphParams, profile: &TimeProfile, x: f64, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return domain(format!("density requires t > 0, got {t}"));
    }
    density_ac_at_tau(params, profile.tau(t)?, x)
}

/// The two boundary atoms `x₀ ∓ c₀τ(t)`, left first.
pub fn boundary_atoms(params: &TelegraphParams, profile: &TimeProfile, t: f64) -> Result<[Atom; 2]> {
    let law = law_at_time(params, profile, t)?;
    Ok([
        Atom {
            position: params.x0 - law.front,
            mass: law.atom_mass,
        },
        Atom {
            position: params.x0 + law.front,
            mass: law.atom_mass,
        },
    ])
}

/// `∫₀^d p(x₀ + y) dy` for `0 ≤ d ≤ L`.
fn half_integral(params: &TelegraphParams, tau: f64, d: f64, abs_tol: f64) -> f64 {
    let x0 = params.x0;
    numeric::integrate(
        |y| density_ac_at_tau(params, tau, x0 + y).unwrap_or(0.0),
        0.0,
        d,
        abs_tol,
        16,
    )
}

/// Exact law of `X(t)` at one time, usable as a [`Law`].
#[derive(Debug, Clone, Copy)]
pub struct AnalyticLaw {
    params: TelegraphParams,
    law: LawAtTime,
}

impl AnalyticLaw {
    pub fn new(params: &TelegraphParams, profile: &TimeProfile, t: f64) -> Result<Self> {
        if !(t > 0.0) {
            return domain(format!("distribution function requires t > 0, got {t}"));
        }
        if params.lambda0 == 0.0 {
            // Two atoms only; the formulas below still apply with zero ac mass.
            params.validate()?;
        }
        Ok(Self {
            params: *params,
            law: law_at_time(params, profile, t)?,
        })
    }

    pub fn summary(&self) -> LawAtTime {
        self.law
    }

    fn ac_below(&self, y: f64) -> f64 {
        let half = 0.5 * self.law.ac_mass;
        if self.law.ac_mass == 0.0 {
            return half;
        }
        let inner = half_integral(&self.params, self.law.tau, y.abs(), 1e-11);
        if y >= 0.0 {
            half + inner
        } else {
            half - inner
        }
    }
}

impl Law for AnalyticLaw {
    fn cdf(&self, x: f64) -> f64 {
        let y = x - self.params.x0;
        let (front, m) = (self.law.front, self.law.atom_mass);
        if y < -front {
            0.0
        } else if y >= front {
            1.0
        } else {
            (m + self.ac_below(y)).clamp(0.0, 1.0)
        }
    }

    fn cdf_left(&self, x: f64) -> f64 {
        let y = x - self.params.x0;
        let (front, m) = (self.law.front, self.law.atom_mass);
        if y <= -front {
            0.0
        } else if y > front {
            1.0
        } else if y == front {
            1.0 - m
        } else {
            (m + self.ac_below(y)).clamp(0.0, 1.0)
        }
    }
}

/// `P{X(t) ≤ x}`.
pub fn cdf(params: &TelegraphParams, profile: &TimeProfile, x: f64, t: f64) -> Result<f64> {
    Ok(AnalyticLaw::new(params, profile, t)?.cdf(x))
}

/// Numerical mass of the absolutely continuous part, for normalization checks.
pub fn ac_mass_by_quadrature(params: &TelegraphParams, profile: &TimeProfile, t: f64) -> Result<f64> {
    let law = law_at_time(params, profile, t)?;
    density_ac(params, profile, params.x0, t)?;
    Ok(2.0 * half_integral(params, law.tau, law.front, 1e-12))
}

/// `2u − 1 + e^{−2u}`, series below `u = 1e-4`.
fn msd_bracket(u: f64) -> f64 {
    if u < 1e-4 {
        let u2 = u * u;
        u2 * (2.0 - u * (4.0 / 3.0 - u * (2.0 / 3.0 - u * 4.0 / 15.0)))
    } else {
        2.0 * u + (-2.0 * u).exp_m1()
    }
}

/// Mean square displacement at clock value `tau`.
pub fn msd_at_tau(params: &TelegraphParams, tau: f64) -> Result<f64> {
    params.validate()?;
    if !(tau >= 0.0) {
        return domain("clock value must be nonnegative");
    }
    let TelegraphParams { c0, lambda0, .. } = *params;
    if lambda0 == 0.0 {
        return Ok((c0 * tau).powi(2));
    }
    Ok(c0 * c0 / (2.0 * lambda0 * lambda0) * msd_bracket(lambda0 * tau))
}

/// `E[(X(t) − x₀)²] = (c₀²/2λ₀²)[2λ₀τ − 1 + e^{−2λ₀τ}]`; ballistic `(c₀τ)²`
/// when `λ₀ = 0`.
pub fn msd(params: &TelegraphParams, profile: &TimeProfile, t: f64) -> Result<f64> {
    msd_at_tau(params, profile.tau(t)?)
}

/// `lim msd(t)` when the clock saturates, `None` otherwise.
pub fn msd_limit(params: &TelegraphParams, profile: &TimeProfile) -> Result<Option<f64>> {
    let tau_inf = profile.tau_infinity();
    if matches!(profile, TimeProfile::Tabulated(_)) || !tau_inf.is_finite() {
        return Ok(None);
    }
    Ok(Some(msd_at_tau(params, tau_inf)?))
}

/// Mean square displacement with constant rate `λ₀` and speed `c₀e^{−γt}`
/// (the light-switch scenario). Follows from `d/dt E[X²] = 2c E[Xσ]` and
/// `d/dt E[Xσ] = c − 2λ E[Xσ]`.
pub fn msd_constant_rate_decay(c0: f64, lambda0: f64, gamma: f64, t: f64) -> f64 {
    let k = 2.0 * lambda0 - gamma;
    let first = -(-2.0 * gamma * t).exp_m1() / (2.0 * gamma);
    if k.abs() < 1e-9 * gamma {
        // γ = 2λ₀: inner integral is c₀ s e^{−γs}.
        let g2 = 2.0 * gamma;
        return 2.0 * c0 * c0 * (1.0 - (-g2 * t).exp() * (1.0 + g2 * t)) / (g2 * g2);
    }
    let second = -(-(gamma + 2.0 * lambda0) * t).exp_m1() / (gamma + 2.0 * lambda0);
    2.0 * c0 * c0 / k * (first - second)
}

/// `lim_{t→∞}` of [`msd_constant_rate_decay`]: `c₀² / (γ(γ + 2λ₀))`.
pub fn msd_limit_constant_rate_decay(c0: f64, lambda0: f64, gamma: f64) -> f64 {
    c0 * c0 / (gamma * (gamma + 2.0 * lambda0))
}

/// Mean square displacement for any speed and rate, from the moment
/// equations `M' = 2cJ`, `J' = c − 2λJ` integrated by classical RK4.
pub fn msd_moment_equations(
    params: &TelegraphParams,
    profile: &TimeProfile,
    rate: &RateProfile,
    t: f64,
    steps: usize,
) -> Result<f64> {
    params.validate()?;
    if !(t >= 0.0) {
        return domain("time must be nonnegative");
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let steps = steps.max(1);
    let h = t / steps as f64;
    let c0 = params.c0;
    let rhs = |s: f64, j: f64| -> Result<(f64, f64)> {
        let c = c0 * profile.w(s)?;
        Ok((2.0 * c * j, c - 2.0 * rate.lambda(profile, s)? * j))
    };
    let (mut m, mut j) = (0.0, 0.0);
    for i in 0..steps {
        let s = i as f64 * h;
        let (m1, j1) = rhs(s, j)?;
        let (m2, j2) = rhs(s + 0.5 * h, j + 0.5 * h * j1)?;
        let (m3, j3) = rhs(s + 0.5 * h, j + 0.5 * h * j2)?;
        let (m4, j4) = rhs((s + h).min(t), j + h * j3)?;
        m += h / 6.0 * (m1 + 2.0 * m2 + 2.0 * m3 + m4);
        j += h / 6.0 * (j1 + 2.0 * j2 + 2.0 * j3 + j4);
    }
    Ok(m)
}

/// Cell averages of the exact law on `n_cells` uniform cells of
/// `[x_min, x_max]`, atoms kept as atoms.
pub fn analytic_grid(
    params: &TelegraphParams,
    profile: &TimeProfile,
    t: f64,
    x_min: f64,
    x_max: f64,
    n_cells: usize,
) -> Result<DensityGrid> {
    let law = law_at_time(params, profile, t)?;
    let mut grid = DensityGrid::zeros(x_min, x_max, n_cells, t)?;
    grid.atoms = boundary_atoms(params, profile, t)?.to_vec();
    if params.lambda0 == 0.0 || law.tau == 0.0 {
        return Ok(grid);
    }
    let dx = grid.dx();
    let (lo_sup, hi_sup) = (params.x0 - law.front, params.x0 + law.front);
    for (center, value) in grid.centers.iter().zip(grid.values.iter_mut()) {
        let a = (center - 0.5 * dx).max(lo_sup);
        let b = (center + 0.5 * dx).min(hi_sup);
        if b <= a {
            continue;
        }
        let mid = 0.5 * (a + b);
        let f = |x: f64| density_ac_at_tau(params, law.tau, x).unwrap_or(0.0);
        let mass = numeric::gauss_legendre8(f, a, mid) + numeric::gauss_legendre8(f, mid, b);
        *value = mass / dx;
    }
    Ok(grid)
}

/// Long-time diffusion regime for `w(t) ~ t^{−β}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Regime {
    Confined,
    Logarithmic,
    Subdiffusive,
    Normal,
    Superdiffusive,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Self::Confined => "Confined",
            Self::Logarithmic => "Logarithmic",
            Self::Subdiffusive => "Subdiffusive",
            Self::Normal => "Normal",
            Self::Superdiffusive => "Superdiffusive",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegimeReport {
    pub beta: f64,
    pub regime: Regime,
    /// Growth exponent of the MSD, `1 − β`, for power-law regimes.
    pub msd_exponent: Option<f64>,
}

impl fmt::Display for RegimeReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.msd_exponent {
            Some(e) => write!(f, "{}, exponent {}", self.regime, e),
            None => write!(f, "{}", self.regime),
        }
    }
}

/// Regime of the MSD for a speed decaying as `t^{−β}`. The boundaries
/// `β = 1` and `β = 0` are matched exactly.
pub fn classify_regime(beta: f64) -> Result<RegimeReport> {
    if !beta.is_finite() {
        return domain("beta must be finite");
    }
    let (regime, msd_exponent) = if beta > 1.0 {
        (Regime::Confined, None)
    } else if beta == 1.0 {
        (Regime::Logarithmic, None)
    } else if beta > 0.0 {
        (Regime::Subdiffusive, Some(1.0 - beta))
    } else if beta == 0.0 {
        (Regime::Normal, Some(1.0))
    } else {
        (Regime::Superdiffusive, Some(1.0 - beta))
    };
    Ok(RegimeReport {
        beta,
        regime,
        msd_exponent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn front_limit_matches_interior_values() {
        let p = TelegraphParams::new(1.3, 0.9, 0.2).unwrap();
        let tau = 1.7;
        let front = p.c0 * tau;
        let near = density_ac_at_tau(&p, tau, p.x0 + front * (1.0 - 1e-9)).unwrap();
        let limit = density_ac_front_limit(&p, tau).unwrap();
        assert!((near - limit).abs() < 1e-8 * limit);
        assert_eq!(density_ac_at_tau(&p, tau, p.x0 + front).unwrap(), 0.0);
    }

    fn unit() -> TelegraphParams {
        TelegraphParams::new(1.0, 1.0, 0.0).unwrap()
    }

    #[test]
    fn density_vanishes_outside_support() {
        assert_eq!(density_ac(&unit(), &TimeProfile::Constant, 2.0, 1.0).unwrap(), 0.0);
        assert_eq!(density_ac(&unit(), &TimeProfile::Constant, 1.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn density_errors() {
        assert!(matches!(
            density_ac(&unit(), &TimeProfile::Constant, 0.0, 0.0),
            Err(Error::Domain(_))
        ));
        let still = TelegraphParams::new(1.0, 0.0, 0.0).unwrap();
        assert!(matches!(
            density_ac(&still, &TimeProfile::Constant, 0.0, 1.0),
            Err(Error::Degenerate(_))
        ));
        assert!(TelegraphParams::new(0.0, 1.0, 0.0).is_err());
        assert!(TelegraphParams::new(1.0, -1.0, 0.0).is_err());
    }

    #[test]
    fn density_is_finite_at_the_front() {
        // I₁(z)/z → ½, so p → ½e^{−u}(λ₀/c₀)(1 + u/2) just inside the front.
        let p = density_ac(&unit(), &TimeProfile::Constant, 1.0 - 1e-9, 1.0).unwrap();
        let edge = 0.5 * (-1.0f64).exp() * 1.5;
        assert!((p - edge).abs() < 1e-8);
    }

    #[test]
    fn atoms_examples() {
        let atoms = boundary_atoms(&unit(), &TimeProfile::Constant, 1.0).unwrap();
        assert_eq!(atoms[0].position, -1.0);
        assert_eq!(atoms[1].position, 1.0);
        assert!((atoms[0].mass - 0.183_939_720_585_721_2).abs() < 1e-15);

        let still = TelegraphParams::new(1.0, 0.0, 0.0).unwrap();
        let atoms = boundary_atoms(&still, &TimeProfile::Constant, 3.0).unwrap();
        assert_eq!((atoms[1].position, atoms[1].mass), (3.0, 0.5));

        let p = TelegraphParams::new(2.0, 1.0, 0.0).unwrap();
        let exp = TimeProfile::exponential_decay(1.0).unwrap();
        let atoms = boundary_atoms(&p, &exp, 10.0).unwrap();
        let tau = 1.0 - (-10.0f64).exp();
        assert!((atoms[1].position - 2.0 * tau).abs() < 1e-14);
        assert!((atoms[1].mass - 0.5 * (-tau).exp()).abs() < 1e-15);
    }

    #[test]
    fn cdf_examples() {
        let exp = TimeProfile::exponential_decay(0.3).unwrap();
        let p = TelegraphParams::new(2.0, 0.7, 1.5).unwrap();
        let front = 2.0 * exp.tau(2.0).unwrap();
        assert_eq!(cdf(&p, &exp, 1.5 - front - 1e-9, 2.0).unwrap(), 0.0);
        assert_eq!(cdf(&p, &exp, 1.5 + front, 2.0).unwrap(), 1.0);
        assert!((cdf(&unit(), &TimeProfile::Constant, 0.0, 1.0).unwrap() - 0.5).abs() < 1e-15);
        let law = AnalyticLaw::new(&unit(), &TimeProfile::Constant, 1.0).unwrap();
        let m = 0.5 * (-1.0f64).exp();
        assert_eq!(law.cdf_left(-1.0), 0.0);
        assert!((law.cdf(-1.0) - m).abs() < 1e-15);
        assert!((law.cdf_left(1.0) - (1.0 - m)).abs() < 1e-15);
    }

    #[test]
    fn msd_examples() {
        let v = msd(&unit(), &TimeProfile::Constant, 1.0).unwrap();
        assert!((v - 0.5 * (1.0 + (-2.0f64).exp())).abs() < 1e-15);
        assert_eq!(msd(&unit(), &TimeProfile::Constant, 0.0).unwrap(), 0.0);
        let small = msd(&unit(), &TimeProfile::Constant, 1e-3).unwrap();
        assert!((small / 1e-6 - 1.0).abs() < 1e-3);
        let still = TelegraphParams::new(2.0, 0.0, 0.0).unwrap();
        assert_eq!(msd(&still, &TimeProfile::Constant, 3.0).unwrap(), 36.0);
    }

    #[test]
    fn msd_series_switch_is_smooth() {
        let below = msd_bracket(1e-4 * (1.0 - 1e-12));
        let above = msd_bracket(1e-4);
        assert!(((below - above) / above).abs() < 1e-8);
    }

    #[test]
    fn regimes() {
        assert_eq!(classify_regime(2.0).unwrap().regime, Regime::Confined);
        assert_eq!(classify_regime(1.0).unwrap().regime, Regime::Logarithmic);
        let sub = classify_regime(0.5).unwrap();
        assert_eq!((sub.regime, sub.msd_exponent), (Regime::Subdiffusive, Some(0.5)));
        assert_eq!(classify_regime(0.0).unwrap().to_string(), "Normal, exponent 1");
        assert_eq!(
            classify_regime(-0.5).unwrap().to_string(),
            "Superdiffusive, exponent 1.5"
        );
        assert!(classify_regime(f64::NAN).is_err());
    }

    #[test]
    fn light_switch_msd_matches_moment_equations() {
        let p = TelegraphParams::new(1.3, 0.8, 0.0).unwrap();
        for gamma in [1.0, 1.6, 2.5] {
            let exp = TimeProfile::exponential_decay(gamma).unwrap();
            let rate = RateProfile::constant(0.8).unwrap();
            let ode = msd_moment_equations(&p, &exp, &rate, 3.0, 4000).unwrap();
            let closed = msd_constant_rate_decay(1.3, 0.8, gamma, 3.0);
            assert!(((ode - closed) / closed).abs() < 1e-10, "{gamma}: {ode} vs {closed}");
        }
        let limit = msd_limit_constant_rate_decay(1.0, 1.0, 1.0);
        assert!((limit - 1.0 / 3.0).abs() < 1e-15);
        assert!((msd_constant_rate_decay(1.0, 1.0, 1.0, 60.0) - limit).abs() < 1e-15);
    }

    #[test]
    fn moment_equations_reproduce_proportional_msd() {
        let p = unit();
        let pl = TimeProfile::power_law(0.5, 1.0).unwrap();
        let rate = RateProfile::proportional(1.0).unwrap();
        let ode = msd_moment_equations(&p, &pl, &rate, 5.0, 4000).unwrap();
        let closed = msd(&p, &pl, 5.0).unwrap();
        assert!(((ode - closed) / closed).abs() < 1e-9);
    }
}
