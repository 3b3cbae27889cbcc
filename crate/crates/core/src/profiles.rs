//! Speed shape `w(t)`, tumbling rate `λ(t)` and the internal clock
//! `τ(t) = ∫₀ᵗ w(s) ds`.
//!
//! The particle speed is `c(t) = c₀·w(t)`. Under the clock `τ` the process
//! moves at the constant speed `c₀` and tumbles at the effective rate
//! `λ(t(τ)) / w(t(τ))`.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::numeric;

/// A nonnegative function sampled at ascending times and linearly
/// interpolated between samples. The first sample sits at `t = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinear {
    times: Vec<f64>,
    values: Vec<f64>,
    /// Trapezoidal integral from 0 up to each sample time.
    cumulative: Vec<f64>,
}

impl PiecewiseLinear {
    pub fn new(samples: &[(f64, f64)]) -> Result<Self> {
        if samples.len() < 2 {
            return domain("a tabulated function needs at least two samples");
        }
        if samples[0].0 != 0.0 {
            return domain("the first tabulated sample must be at t = 0");
        }
        for pair in samples.windows(2) {
            if !(pair[1].0 > pair[0].0) || !pair[1].0.is_finite() {
                return domain("tabulated sample times must be finite and strictly ascending");
            }
        }
        if samples.iter().any(|s| !(s.1 >= 0.0) || !s.1.is_finite()) {
            return domain("tabulated values must be finite and nonnegative");
        }
        let times: Vec<f64> = samples.iter().map(|s| s.0).collect();
        let values: Vec<f64> = samples.iter().map(|s| s.1).collect();
        let mut cumulative = Vec::with_capacity(times.len());
        cumulative.push(0.0);
        for i in 1..times.len() {
            let area = 0.5 * (values[i] + values[i - 1]) * (times[i] - times[i - 1]);
            cumulative.push(cumulative[i - 1] + area);
        }
        Ok(Self {
            times,
            values,
            cumulative,
        })
    }

    pub fn samples(&self) -> Vec<(f64, f64)> {
        self.times.iter().copied().zip(self.values.iter().copied()).collect()
    }

    pub fn t_max(&self) -> f64 {
        *self.times.last().expect("at least two samples")
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    fn check(&self, t: f64) -> Result<()> {
        check_time(t)?;
        if t > self.t_max() {
            return Err(Error::Extrapolation {
                t,
                t_max: self.t_max(),
            });
        }
        Ok(())
    }

    /// Index `i` of the segment `[times[i], times[i+1]]` containing `t`.
    fn segment(&self, t: f64) -> usize {
        let idx = self.times.partition_point(|&s| s <= t);
        idx.saturating_sub(1).min(self.times.len() - 2)
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        self.check(t)?;
        let i = self.segment(t);
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let frac = (t - t0) / (t1 - t0);
        Ok(self.values[i] + frac * (self.values[i + 1] - self.values[i]))
    }

    pub fn integral(&self, t: f64) -> Result<f64> {
        self.check(t)?;
        let i = self.segment(t);
        let v0 = self.values[i];
        let v = self.eval(t)?;
        Ok(self.cumulative[i] + 0.5 * (v0 + v) * (t - self.times[i]))
    }

    pub fn sup(&self, a: f64, b: f64) -> Result<f64> {
        let mut m = self.eval(a)?.max(self.eval(b)?);
        for (&s, &v) in self.times.iter().zip(&self.values) {
            if s > a && s < b {
                m = m.max(v);
            }
        }
        Ok(m)
    }

    /// Smallest `t` with `integral(t) = target`.
    fn inverse_integral(&self, target: f64) -> Result<f64> {
        let total = *self.cumulative.last().expect("non-empty");
        if target > total {
            return domain(format!(
                "clock value {target} is beyond the tabulated range (maximum {total})"
            ));
        }
        // First segment whose end reaches the target.
        let i = self
            .cumulative
            .partition_point(|&c| c < target)
            .saturating_sub(1)
            .min(self.times.len() - 2);
        let (lo, hi) = (self.times[i], self.times[i + 1]);
        if target <= self.cumulative[i] {
            return Ok(lo);
        }
        numeric::bisect(|t| self.integral(t).unwrap_or(f64::INFINITY) - target, lo, hi, 1e-15)
    }
}

/// Speed shape `w(t) ≥ 0`, with `c(t) = c₀·w(t)`.
#[derive(Debug, Clone, PartialEq)]
pub enum TimeProfile {
    /// `w ≡ 1`.
    Constant,
    /// `w(t) = (1 + t/t_ref)^(-β)`, so `w(0) = 1` and `w(t) ~ t^(-β)`.
    PowerLaw { beta: f64, t_ref: f64 },
    /// `w(t) = exp(-γ t)`.
    ExponentialDecay { gamma: f64 },
    /// Constant pieces. `values[0]` holds on `[0, breakpoints[0])`,
    /// `values[i]` on `[breakpoints[i-1], breakpoints[i])` and the last value
    /// from the last breakpoint on.
    PiecewiseConstant(PiecewiseConstant),
    /// Linear interpolation of `(t, w)` samples starting at `t = 0`.
    Tabulated(PiecewiseLinear),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseConstant {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
    /// `τ` at the start of each piece.
    starts_tau: Vec<f64>,
}

impl PiecewiseConstant {
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn start(&self, i: usize) -> f64 {
        if i == 0 {
            0.0
        } else {
            self.breakpoints[i - 1]
        }
    }

    fn piece(&self, t: f64) -> usize {
        self.breakpoints.partition_point(|&b| b <= t)
    }
}

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0) || !t.is_finite() {
        return domain(format!("time must be finite and nonnegative, got {t}"));
    }
    Ok(())
}

impl TimeProfile {
    pub fn power_law(beta: f64, t_ref: f64) -> Result<Self> {
        if !beta.is_finite() {
            return domain("power-law exponent must be finite");
        }
        if !(t_ref > 0.0) || !t_ref.is_finite() {
            return domain("power-law t_ref must be positive");
        }
        Ok(Self::PowerLaw { beta, t_ref })
    }

    pub fn exponential_decay(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return domain("decay rate gamma must be positive");
        }
        Ok(Self::ExponentialDecay { gamma })
    }

    pub fn piecewise_constant(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.len() != breakpoints.len() + 1 {
            return domain("piecewise profile needs exactly one more value than breakpoints");
        }
        if breakpoints.iter().any(|b| !(*b > 0.0) || !b.is_finite()) {
            return domain("breakpoints must be positive and finite");
        }
        if breakpoints.windows(2).any(|p| !(p[1] > p[0])) {
            return domain("breakpoints must be strictly ascending");
        }
        if values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return domain("piecewise values must be finite and nonnegative");
        }
        let mut starts_tau = vec![0.0];
        for i in 0..breakpoints.len() {
            let start = if i == 0 { 0.0 } else { breakpoints[i - 1] };
            starts_tau.push(starts_tau[i] + values[i] * (breakpoints[i] - start));
        }
        Ok(Self::PiecewiseConstant(PiecewiseConstant {
            breakpoints,
            values,
            starts_tau,
        }))
    }

    pub fn tabulated(samples: &[(f64, f64)]) -> Result<Self> {
        Ok(Self::Tabulated(PiecewiseLinear::new(samples)?))
    }

    /// Speed shape `w(t)`.
    pub fn w(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        Ok(match self {
            Self::Constant => 1.0,
            Self::PowerLaw { beta, t_ref } => (-beta * (t / t_ref).ln_1p()).exp(),
            Self::ExponentialDecay { gamma } => (-gamma * t).exp(),
            Self::PiecewiseConstant(p) => p.values[p.piece(t)],
            Self::Tabulated(table) => return table.eval(t),
        })
    }

    /// Internal clock `τ(t) = ∫₀ᵗ w(s) ds`.
    pub fn tau(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        Ok(match self {
            Self::Constant => t,
            Self::PowerLaw { beta, t_ref } => {
                let log_growth = (t / t_ref).ln_1p();
                let one_minus_beta = 1.0 - beta;
                if one_minus_beta == 0.0 {
                    t_ref * log_growth
                } else {
                    t_ref * (one_minus_beta * log_growth).exp_m1() / one_minus_beta
                }
            }
            Self::ExponentialDecay { gamma } => -(-gamma * t).exp_m1() / gamma,
            Self::PiecewiseConstant(p) => {
                let i = p.piece(t);
                p.starts_tau[i] + p.values[i] * (t - p.start(i))
            }
            Self::Tabulated(table) => return table.integral(t),
        })
    }

    /// `lim τ(t)` as `t → ∞`; infinite when the clock never saturates.
    /// For tabulated profiles this is the clock at the last sample.
    pub fn tau_infinity(&self) -> f64 {
        match self {
            Self::Constant => f64::INFINITY,
            Self::PowerLaw { beta, t_ref } => {
                if *beta > 1.0 {
                    t_ref / (beta - 1.0)
                } else {
                    f64::INFINITY
                }
            }
            Self::ExponentialDecay { gamma } => 1.0 / gamma,
            Self::PiecewiseConstant(p) => {
                if *p.values.last().expect("non-empty") > 0.0 {
                    f64::INFINITY
                } else {
                    *p.starts_tau.last().expect("non-empty")
                }
            }
            Self::Tabulated(table) => *table.cumulative.last().expect("non-empty"),
        }
    }

    /// The smallest `t` with `τ(t) = tau`.
    pub fn t_of_tau(&self, tau: f64) -> Result<f64> {
        if !(tau >= 0.0) || !tau.is_finite() {
            return domain(format!("clock value must be finite and nonnegative, got {tau}"));
        }
        if let Self::Tabulated(table) = self {
            return table.inverse_integral(tau);
        }
        let tau_inf = self.tau_infinity();
        if tau >= tau_inf {
            return Err(Error::Saturation { tau, tau_inf });
        }
        Ok(match self {
            Self::Constant => tau,
            Self::PowerLaw { beta, t_ref } => {
                let one_minus_beta = 1.0 - beta;
                if one_minus_beta == 0.0 {
                    t_ref * (tau / t_ref).exp_m1()
                } else {
                    let log_growth = (tau * one_minus_beta / t_ref).ln_1p() / one_minus_beta;
                    t_ref * log_growth.exp_m1()
                }
            }
            Self::ExponentialDecay { gamma } => -(-gamma * tau).ln_1p() / gamma,
            Self::PiecewiseConstant(p) => {
                let n = p.values.len();
                let i = (0..n)
                    .find(|&i| i + 1 == n || p.starts_tau[i + 1] >= tau)
                    .expect("last piece always matches");
                if tau <= p.starts_tau[i] {
                    p.start(i)
                } else {
                    p.start(i) + (tau - p.starts_tau[i]) / p.values[i]
                }
            }
            Self::Tabulated(_) => unreachable!("handled above"),
        })
    }

    /// Upper bound of `w` on `[a, b]` (attained for every kind).
    pub fn sup_w(&self, a: f64, b: f64) -> Result<f64> {
        check_time(a)?;
        check_time(b)?;
        if b < a {
            return domain("interval end precedes its start");
        }
        match self {
            Self::Constant => Ok(1.0),
            Self::PowerLaw { beta, .. } => {
                if *beta >= 0.0 {
                    self.w(a)
                } else {
                    self.w(b)
                }
            }
            Self::ExponentialDecay { .. } => self.w(a),
            Self::PiecewiseConstant(p) => {
                let (i, j) = (p.piece(a), p.piece(b));
                Ok(p.values[i..=j].iter().copied().fold(0.0, f64::max))
            }
            Self::Tabulated(table) => table.sup(a, b),
        }
    }

    /// Times in `(0, ∞)` where `w` has a kink or jump.
    pub fn nodes(&self) -> Vec<f64> {
        match self {
            Self::PiecewiseConstant(p) => p.breakpoints.clone(),
            Self::Tabulated(table) => table.times[1..].to_vec(),
            _ => Vec::new(),
        }
    }

    /// `τ(t)` by adaptive quadrature of `w`, independent of the closed forms.
    pub fn tau_by_quadrature(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        self.w(t)?;
        let mut cuts = vec![0.0];
        cuts.extend(self.nodes().into_iter().filter(|&s| s < t));
        cuts.push(t);
        let mut total = 0.0;
        for pair in cuts.windows(2) {
            total += numeric::integrate(|s| self.w(s).unwrap_or(0.0), pair[0], pair[1], 1e-12, 8);
        }
        Ok(total)
    }
}

/// Tumbling rate `λ(t) ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub enum RateProfile {
    /// `λ(t) = λ₀·w(t)`: the rate follows the speed.
    ProportionalToSpeed { lambda0: f64 },
    /// `λ(t) = λ₀`.
    ConstantRate { lambda0: f64 },
    /// Tabulated `λ(t)`, linearly interpolated.
    Explicit(PiecewiseLinear),
}

impl RateProfile {
    pub fn proportional(lambda0: f64) -> Result<Self> {
        check_rate(lambda0)?;
        Ok(Self::ProportionalToSpeed { lambda0 })
    }

    pub fn constant(lambda0: f64) -> Result<Self> {
        check_rate(lambda0)?;
        Ok(Self::ConstantRate { lambda0 })
    }

    pub fn explicit(samples: &[(f64, f64)]) -> Result<Self> {
        Ok(Self::Explicit(PiecewiseLinear::new(samples)?))
    }

    pub fn is_proportional(&self) -> bool {
        matches!(self, Self::ProportionalToSpeed { .. })
    }

    /// `λ(t)`.
    pub fn lambda(&self, profile: &TimeProfile, t: f64) -> Result<f64> {
        match self {
            Self::ProportionalToSpeed { lambda0 } => Ok(lambda0 * profile.w(t)?),
            Self::ConstantRate { lambda0 } => {
                check_time(t)?;
                Ok(*lambda0)
            }
            Self::Explicit(table) => table.eval(t),
        }
    }

    /// Integrated rate `Λ(t) = ∫₀ᵗ λ(s) ds`.
    pub fn integrated(&self, profile: &TimeProfile, t: f64) -> Result<f64> {
        match self {
            Self::ProportionalToSpeed { lambda0 } => Ok(lambda0 * profile.tau(t)?),
            Self::ConstantRate { lambda0 } => {
                check_time(t)?;
                Ok(lambda0 * t)
            }
            Self::Explicit(table) => table.integral(t),
        }
    }

    /// Upper bound of `λ` on `[a, b]`.
    pub fn sup(&self, profile: &TimeProfile, a: f64, b: f64) -> Result<f64> {
        match self {
            Self::ProportionalToSpeed { lambda0 } => Ok(lambda0 * profile.sup_w(a, b)?),
            Self::ConstantRate { lambda0 } => Ok(*lambda0),
            Self::Explicit(table) => table.sup(a, b),
        }
    }

    /// Times where `λ` has a kink, for partitioning thinning intervals.
    pub fn nodes(&self, profile: &TimeProfile) -> Vec<f64> {
        match self {
            Self::ProportionalToSpeed { .. } => profile.nodes(),
            Self::ConstantRate { .. } => Vec::new(),
            Self::Explicit(table) => table.times[1..].to_vec(),
        }
    }

    /// Effective rate seen by the clock `τ`: `λ(t(τ)) / w(t(τ))`.
    pub fn lambda_eff(&self, profile: &TimeProfile, tau: f64) -> Result<f64> {
        if let Self::ProportionalToSpeed { lambda0 } = self {
            if !(tau >= 0.0) {
                return domain("clock value must be nonnegative");
            }
            return Ok(*lambda0);
        }
        let t = profile.t_of_tau(tau)?;
        let w = profile.w(t)?;
        if w == 0.0 {
            return Err(Error::Singularity(format!(
                "speed shape vanishes at t = {t} (tau = {tau})"
            )));
        }
        Ok(self.lambda(profile, t)? / w)
    }
}

fn check_rate(lambda0: f64) -> Result<()> {
    if !(lambda0 >= 0.0) || !lambda0.is_finite() {
        return domain(format!("tumbling rate must be finite and nonnegative, got {lambda0}"));
    }
    Ok(())
}

/// JSON form of a [`TimeProfile`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSpec {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_ref: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub breakpoints: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<Vec<(f64, f64)>>,
}

fn required<T: Clone>(field: &Option<T>, name: &str, kind: &str) -> Result<T> {
    field
        .clone()
        .ok_or_else(|| Error::Domain(format!("profile kind '{kind}' requires field '{name}'")))
}

impl TryFrom<&ProfileSpec> for TimeProfile {
    type Error = Error;

    fn try_from(spec: &ProfileSpec) -> Result<Self> {
        let kind = spec.kind.as_str();
        match kind {
            "constant" => Ok(Self::Constant),
            "power_law" => Self::power_law(
                required(&spec.beta, "beta", kind)?,
                spec.t_ref.unwrap_or(1.0),
            ),
            "exponential_decay" => Self::exponential_decay(required(&spec.gamma, "gamma", kind)?),
            "piecewise_constant" => Self::piecewise_constant(
                required(&spec.breakpoints, "breakpoints", kind)?,
                required(&spec.values, "values", kind)?,
            ),
            "tabulated" => Self::tabulated(&required(&spec.samples, "samples", kind)?),
            other => domain(format!(
                "unknown profile kind '{other}' (expected constant, power_law, \
                 exponential_decay, piecewise_constant or tabulated)"
            )),
        }
    }
}

impl From<&TimeProfile> for ProfileSpec {
    fn from(profile: &TimeProfile) -> Self {
        match profile {
            TimeProfile::Constant => Self {
                kind: "constant".into(),
                ..Self::default()
            },
            TimeProfile::PowerLaw { beta, t_ref } => Self {
                kind: "power_law".into(),
                beta: Some(*beta),
                t_ref: Some(*t_ref),
                ..Self::default()
            },
            TimeProfile::ExponentialDecay { gamma } => Self {
                kind: "exponential_decay".into(),
                gamma: Some(*gamma),
                ..Self::default()
            },
            TimeProfile::PiecewiseConstant(p) => Self {
                kind: "piecewise_constant".into(),
                breakpoints: Some(p.breakpoints.clone()),
                values: Some(p.values.clone()),
                ..Self::default()
            },
            TimeProfile::Tabulated(table) => Self {
                kind: "tabulated".into(),
                samples: Some(table.samples()),
                ..Self::default()
            },
        }
    }
}

/// JSON form of the rate coupling. `λ₀` comes from the process parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateSpec {
    /// `proportional`, `constant` or `explicit`.
    pub mode: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<Vec<(f64, f64)>>,
}

impl Default for RateSpec {
    fn default() -> Self {
        Self {
            mode: "proportional".into(),
            samples: None,
        }
    }
}

impl RateSpec {
    pub fn build(&self, lambda0: f64) -> Result<RateProfile> {
        match self.mode.as_str() {
            "proportional" => RateProfile::proportional(lambda0),
            "constant" => RateProfile::constant(lambda0),
            "explicit" => RateProfile::explicit(self.samples.as_deref().ok_or_else(|| {
                Error::Domain("rate mode 'explicit' requires field 'samples'".into())
            })?),
            other => domain(format!(
                "unknown rate mode '{other}' (expected proportional, constant or explicit)"
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn w_examples() {
        assert_eq!(TimeProfile::Constant.w(5.0).unwrap(), 1.0);
        let exp = TimeProfile::exponential_decay(1.0).unwrap();
        assert!(close(exp.w(1.0).unwrap(), 0.367_879_441_171_442_3, 1e-15));
        let pl = TimeProfile::power_law(0.5, 1.0).unwrap();
        assert!(close(pl.w(3.0).unwrap(), 0.5, 1e-15));
    }

    #[test]
    fn tau_examples() {
        assert_eq!(TimeProfile::Constant.tau(2.0).unwrap(), 2.0);
        let exp = TimeProfile::exponential_decay(1.0).unwrap();
        assert!(close(exp.tau(1.0).unwrap(), 0.632_120_558_828_557_7, 1e-15));
        let pl = TimeProfile::power_law(0.5, 1.0).unwrap();
        assert!(close(pl.tau(3.0).unwrap(), 2.0, 1e-15));
    }

    #[test]
    fn t_of_tau_examples() {
        assert_eq!(TimeProfile::Constant.t_of_tau(2.0).unwrap(), 2.0);
        let exp = TimeProfile::exponential_decay(1.0).unwrap();
        assert!((exp.t_of_tau(0.632_121).unwrap() - 1.0).abs() < 1e-5);
        assert!((exp.t_of_tau(1.0 - (-1.0f64).exp()).unwrap() - 1.0).abs() < 1e-9);
        let fast = TimeProfile::exponential_decay(2.0).unwrap();
        match fast.t_of_tau(0.6) {
            Err(Error::Saturation { tau_inf, .. }) => assert_eq!(tau_inf, 0.5),
            other => panic!("expected saturation, got {other:?}"),
        }
    }

    #[test]
    fn lambda_eff_examples() {
        let exp = TimeProfile::exponential_decay(1.0).unwrap();
        let prop = RateProfile::proportional(1.0).unwrap();
        assert_eq!(prop.lambda_eff(&exp, 0.3).unwrap(), 1.0);
        let constant = RateProfile::constant(1.0).unwrap();
        assert!(close(constant.lambda_eff(&exp, 0.5).unwrap(), 2.0, 1e-12));
        let two = RateProfile::constant(2.0).unwrap();
        assert_eq!(two.lambda_eff(&TimeProfile::Constant, 7.0).unwrap(), 2.0);
    }

    #[test]
    fn lambda_eff_singular_where_speed_vanishes() {
        let stop = TimeProfile::piecewise_constant(vec![1.0, 2.0], vec![1.0, 0.0, 1.0]).unwrap();
        let constant = RateProfile::constant(1.0).unwrap();
        // The clock reaches 1 at t = 1, where the speed drops to zero.
        assert!(matches!(
            constant.lambda_eff(&stop, 1.0),
            Err(Error::Singularity(_))
        ));
    }

    #[test]
    fn domain_and_extrapolation_errors() {
        assert!(matches!(TimeProfile::Constant.w(-1.0), Err(Error::Domain(_))));
        assert!(matches!(TimeProfile::Constant.tau(-0.1), Err(Error::Domain(_))));
        let table = TimeProfile::tabulated(&[(0.0, 1.0), (1.0, 2.0)]).unwrap();
        assert!(matches!(table.w(1.5), Err(Error::Extrapolation { .. })));
        assert!(TimeProfile::power_law(0.5, 0.0).is_err());
        assert!(TimeProfile::exponential_decay(-1.0).is_err());
        assert!(TimeProfile::piecewise_constant(vec![1.0], vec![1.0]).is_err());
        assert!(TimeProfile::tabulated(&[(0.5, 1.0), (1.0, 1.0)]).is_err());
    }

    #[test]
    fn tabulated_interpolates_and_integrates() {
        let table = TimeProfile::tabulated(&[(0.0, 1.0), (1.0, 3.0), (2.0, 0.0)]).unwrap();
        assert_eq!(table.w(0.5).unwrap(), 2.0);
        assert!(close(table.tau(1.0).unwrap(), 2.0, 1e-15));
        assert!(close(table.tau(2.0).unwrap(), 3.5, 1e-15));
        let t = table.t_of_tau(0.75).unwrap();
        assert!(close(t, 0.5, 1e-12));
        assert!(table.t_of_tau(4.0).is_err());
    }

    #[test]
    fn piecewise_inverse_skips_pauses() {
        let p = TimeProfile::piecewise_constant(vec![1.0, 3.0], vec![2.0, 0.0, 1.0]).unwrap();
        assert_eq!(p.tau(2.0).unwrap(), 2.0);
        assert_eq!(p.tau(4.0).unwrap(), 3.0);
        // The pause [1, 3] maps to a single clock value; the inverse takes its start.
        assert_eq!(p.t_of_tau(2.0).unwrap(), 1.0);
        assert_eq!(p.t_of_tau(2.5).unwrap(), 3.5);
        let stops = TimeProfile::piecewise_constant(vec![1.0], vec![1.0, 0.0]).unwrap();
        assert_eq!(stops.tau_infinity(), 1.0);
        assert!(matches!(stops.t_of_tau(1.0), Err(Error::Saturation { .. })));
    }

    #[test]
    fn power_law_near_unit_exponent_is_continuous() {
        let at_one = TimeProfile::power_law(1.0, 1.0).unwrap();
        let near = TimeProfile::power_law(1.0 + 1e-10, 1.0).unwrap();
        let a = at_one.tau(100.0).unwrap();
        let b = near.tau(100.0).unwrap();
        assert!(close(a, 101f64.ln(), 1e-14));
        assert!(close(a, b, 1e-8));
        assert!(close(near.t_of_tau(b).unwrap(), 100.0, 1e-9));
    }

    #[test]
    fn saturating_power_law() {
        let pl = TimeProfile::power_law(2.0, 1.0).unwrap();
        assert_eq!(pl.tau_infinity(), 1.0);
        assert!(close(pl.tau(1.0).unwrap(), 0.5, 1e-15));
        assert!(matches!(pl.t_of_tau(1.0), Err(Error::Saturation { .. })));
    }

    #[test]
    fn spec_round_trip() {
        let spec: ProfileSpec =
            serde_json::from_str(r#"{"kind":"power_law","beta":0.5}"#).unwrap();
        let profile = TimeProfile::try_from(&spec).unwrap();
        assert_eq!(profile, TimeProfile::PowerLaw { beta: 0.5, t_ref: 1.0 });
        let back = ProfileSpec::from(&profile);
        assert_eq!(TimeProfile::try_from(&back).unwrap(), profile);
        let bad: ProfileSpec = serde_json::from_str(r#"{"kind":"exponential_decay"}"#).unwrap();
        assert!(TimeProfile::try_from(&bad).is_err());
        assert!(serde_json::from_str::<ProfileSpec>(r#"{"kind":"constant","bogus":1}"#).is_err());
    }

    #[test]
    fn rate_integrated_and_bounds() {
        let exp = TimeProfile::exponential_decay(1.0).unwrap();
        let prop = RateProfile::proportional(2.0).unwrap();
        assert!(close(prop.integrated(&exp, 1.0).unwrap(), 2.0 * exp.tau(1.0).unwrap(), 1e-15));
        assert_eq!(prop.sup(&exp, 1.0, 2.0).unwrap(), 2.0 * (-1.0f64).exp());
        let explicit = RateProfile::explicit(&[(0.0, 0.0), (2.0, 2.0)]).unwrap();
        assert!(close(explicit.integrated(&exp, 2.0).unwrap(), 2.0, 1e-15));
        assert_eq!(explicit.sup(&exp, 0.0, 1.0).unwrap(), 1.0);
    }
}
