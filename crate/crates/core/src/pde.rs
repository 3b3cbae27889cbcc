//! Finite-volume solver for the two-velocity system
//!
//! ```text
//! ∂a/∂t = −c(t) ∂a/∂x + λ(t)(b − a)
//! ∂b/∂t =  c(t) ∂b/∂x + λ(t)(a − b)
//! ```
//!
//! with `a(x,0) = b(x,0) = ½δ(x − x₀)`.
//!
//! Transport is first-order upwind. Steps are taken in equal increments of
//! the clock `τ`, so the displacement `c₀Δτ` and hence the Courant number are
//! the same in every step regardless of how `c(t)` varies; at `cfl = 1` the
//! upwind update is an exact shift by one cell. The exchange term is
//! integrated exactly over each half step (Strang splitting) using the
//! integrated rate `Λ(t)`.
//!
//! The particles that have not tumbled yet are carried in separate arrays.
//! Their mass is reported as the two front atoms at `x₀ ± c₀τ`, and the cell
//! values hold only the scattered density.
//!
//! At `cfl = 1` the lattice splits into two sublattices that never exchange
//! mass, so raw cell values alternate with the parity of the step count. The
//! reported density is therefore smoothed by the binomial filter
//! `(¼, ½, ¼)`, the cell average of the uniform landing law of a particle
//! that tumbles once within a step. The filter conserves mass exactly.

use serde::{Deserialize, Serialize};

use crate::analytic::{analytic_grid, TelegraphParams};
use crate::error::{domain, Error, Result};
use crate::grid::{Atom, DensityGrid};
use crate::numeric::compensated_sum;
use crate::profiles::{RateProfile, TimeProfile};
use crate::stats::{fit_exponent, l1_distance, L1Report};

/// Uniform cells on `[x_min, x_max]` and the Courant number of each step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub n_cells: usize,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
}

fn default_cfl() -> f64 {
    1.0
}

impl GridSpec {
    pub fn new(x_min: f64, x_max: f64, n_cells: usize, cfl: f64) -> Result<Self> {
        let g = Self {
            x_min,
            x_max,
            n_cells,
            cfl,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x_min < self.x_max) || !self.x_min.is_finite() || !self.x_max.is_finite() {
            return domain("grid needs finite x_min < x_max");
        }
        if self.n_cells < 2 {
            return domain("grid needs at least two cells");
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return domain(format!("cfl must lie in (0, 1], got {}", self.cfl));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.n_cells as f64
    }

    pub fn with_cells(&self, n_cells: usize) -> Self {
        Self { n_cells, ..*self }
    }
}

/// Result of a solve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PdeSolution {
    /// Scattered density in the cells, unscattered mass as front atoms.
    pub density: DensityGrid,
    pub steps: usize,
    /// Largest change of total mass over a single step.
    pub max_step_mass_defect: f64,
    /// `|1 − total mass|` at the end.
    pub mass_defect: f64,
    /// Most negative cell mass met during the run (zero if none).
    pub min_cell_mass: f64,
}

pub const SCHEME: &str = "upwind-1st-order/tau-stepping/strang-exact-exchange/binomial-output-filter";

struct State {
    /// Right- and left-movers that have not tumbled (cell masses).
    a0: Vec<f64>,
    b0: Vec<f64>,
    /// Right- and left-movers that have tumbled at least once.
    a1: Vec<f64>,
    b1: Vec<f64>,
    min_cell_mass: f64,
}

impl State {
    fn new(n: usize, start: usize) -> Self {
        let mut a0 = vec![0.0; n];
        let mut b0 = vec![0.0; n];
        a0[start] = 0.5;
        b0[start] = 0.5;
        Self {
            a0,
            b0,
            a1: vec![0.0; n],
            b1: vec![0.0; n],
            min_cell_mass: 0.0,
        }
    }

    fn mass(&self) -> f64 {
        compensated_sum(&self.a0)
            + compensated_sum(&self.b0)
            + compensated_sum(&self.a1)
            + compensated_sum(&self.b1)
    }

    /// Exact solution of the exchange step for an integrated rate `lambda`.
    fn exchange(&mut self, lambda: f64) {
        if lambda <= 0.0 {
            return;
        }
        let keep = (-lambda).exp();
        let lost = -(-lambda).exp_m1();
        let keep2 = keep * keep;
        for i in 0..self.a0.len() {
            let (a0, b0) = (self.a0[i], self.b0[i]);
            if a0 == 0.0 && b0 == 0.0 && self.a1[i] == 0.0 && self.b1[i] == 0.0 {
                continue;
            }
            let p1 = self.a1[i] + self.b1[i] + (a0 + b0) * lost;
            let w1 = (self.a1[i] - self.b1[i]) * keep2 - (a0 - b0) * keep * lost;
            self.a0[i] = a0 * keep;
            self.b0[i] = b0 * keep;
            self.a1[i] = 0.5 * (p1 + w1);
            self.b1[i] = 0.5 * (p1 - w1);
            self.min_cell_mass = self.min_cell_mass.min(self.a1[i]).min(self.b1[i]);
        }
    }

    fn transport(&mut self, nu: f64) {
        for right in [&mut self.a0, &mut self.a1] {
            for i in (1..right.len()).rev() {
                right[i] += nu * (right[i - 1] - right[i]);
            }
            right[0] -= nu * right[0];
        }
        for left in [&mut self.b0, &mut self.b1] {
            let n = left.len();
            for i in 0..n - 1 {
                left[i] += nu * (left[i + 1] - left[i]);
            }
            left[n - 1] -= nu * left[n - 1];
        }
    }
}

/// Checks the grid and returns the cell holding `x₀`.
fn prepare(params: &TelegraphParams, grid: &GridSpec, front: f64) -> Result<usize> {
    params.validate()?;
    grid.validate()?;
    let dx = grid.dx();
    let (lo, hi) = (params.x0 - front, params.x0 + front);
    if !(lo > grid.x_min + dx && hi < grid.x_max - dx) {
        return domain(format!(
            "support [{lo}, {hi}] does not fit strictly inside the grid [{}, {}]",
            grid.x_min, grid.x_max
        ));
    }
    Ok((((params.x0 - grid.x_min) / dx).floor() as usize).min(grid.n_cells - 1))
}

/// Integrated rate over a clock interval, as seen by the driver.
trait ExchangeClock {
    /// `∫ λ dt` between clock values `tau_a ≤ tau_b`.
    fn integrated(&self, tau_a: f64, tau_b: f64) -> Result<f64>;
}

/// Original time: `Λ(t(τ_b)) − Λ(t(τ_a))` with the closed-form integrated rate.
struct TimeCoordinates<'a> {
    profile: &'a TimeProfile,
    rate: &'a RateProfile,
    tau_end: f64,
    t_last: f64,
}

impl TimeCoordinates<'_> {
    fn time(&self, tau: f64) -> Result<f64> {
        if tau >= self.tau_end {
            Ok(self.t_last)
        } else {
            self.profile.t_of_tau(tau)
        }
    }
}

impl ExchangeClock for TimeCoordinates<'_> {
    fn integrated(&self, tau_a: f64, tau_b: f64) -> Result<f64> {
        let (ta, tb) = (self.time(tau_a)?, self.time(tau_b)?);
        Ok(self.rate.integrated(self.profile, tb)? - self.rate.integrated(self.profile, ta)?)
    }
}

/// Clock coordinates: Simpson's rule on `λ_eff(τ)`.
struct ClockCoordinates<'a> {
    profile: &'a TimeProfile,
    rate: &'a RateProfile,
}

impl ExchangeClock for ClockCoordinates<'_> {
    fn integrated(&self, tau_a: f64, tau_b: f64) -> Result<f64> {
        let f = |tau: f64| self.rate.lambda_eff(self.profile, tau);
        let mid = 0.5 * (tau_a + tau_b);
        Ok((tau_b - tau_a) / 6.0 * (f(tau_a)? + 4.0 * f(mid)? + f(tau_b)?))
    }
}

fn run(
    params: &TelegraphParams,
    grid: &GridSpec,
    tau_end: f64,
    t_end: f64,
    clock: &dyn ExchangeClock,
    tail_exchange: f64,
) -> Result<PdeSolution> {
    let front = params.c0 * tau_end;
    let start = prepare(params, grid, front)?;
    let dx = grid.dx();
    let mut state = State::new(grid.n_cells, start);
    let full = grid.cfl * dx / params.c0;
    let mut tau = 0.0;
    let mut steps = 0;
    let mut max_step_defect: f64 = 0.0;
    let mut mass = state.mass();
    while tau < tau_end {
        let remaining = tau_end - tau;
        // Absorb a final sliver into the last step so no step is vanishingly short.
        let dtau = if remaining <= full * (1.0 + 1e-9) {
            remaining
        } else {
            full
        };
        let next = if dtau == remaining { tau_end } else { tau + dtau };
        let mid = tau + 0.5 * (next - tau);
        state.exchange(clock.integrated(tau, mid)?);
        state.transport(params.c0 * (next - tau) / dx);
        state.exchange(clock.integrated(mid, next)?);
        tau = next;
        steps += 1;
        let m = state.mass();
        max_step_defect = max_step_defect.max((m - mass).abs());
        mass = m;
    }
    state.exchange(tail_exchange);
    let m = state.mass();
    max_step_defect = max_step_defect.max((m - mass).abs());

    let mut density = DensityGrid::zeros(grid.x_min, grid.x_max, grid.n_cells, t_end)?;
    let n = grid.n_cells;
    for i in 0..n {
        let q = (state.a1[i] + state.b1[i]) / dx;
        density.values[i] += 0.5 * q;
        // Reflect at the ends so no mass leaves the grid.
        density.values[if i == 0 { 0 } else { i - 1 }] += 0.25 * q;
        density.values[if i + 1 == n { i } else { i + 1 }] += 0.25 * q;
    }
    let left = compensated_sum(&state.b0);
    let right = compensated_sum(&state.a0);
    if front == 0.0 {
        density.atoms.push(Atom {
            position: params.x0,
            mass: left + right,
        });
    } else {
        density.atoms.push(Atom {
            position: params.x0 - front,
            mass: left,
        });
        density.atoms.push(Atom {
            position: params.x0 + front,
            mass: right,
        });
    }
    Ok(PdeSolution {
        density,
        steps,
        max_step_mass_defect: max_step_defect,
        mass_defect: (1.0 - m).abs(),
        min_cell_mass: state.min_cell_mass,
    })
}

fn check_inputs(profile: &TimeProfile, rate: &RateProfile, t_end: f64) -> Result<(f64, f64)> {
    if !(t_end > 0.0) || !t_end.is_finite() {
        return domain(format!("end time must be positive, got {t_end}"));
    }
    let tau_end = profile.tau(t_end)?;
    rate.lambda(profile, t_end)?;
    let lambda_end = rate.integrated(profile, t_end)?;
    if !(lambda_end >= 0.0) {
        return domain("integrated rate must be nonnegative");
    }
    Ok((tau_end, lambda_end))
}

/// Solves the two-velocity system in original time up to `t_end`.
pub fn solve_ab_system(
    params: &TelegraphParams,
    profile: &TimeProfile,
    rate: &RateProfile,
    grid: &GridSpec,
    t_end: f64,
) -> Result<PdeSolution> {
    let (tau_end, _) = check_inputs(profile, rate, t_end)?;
    // Clock time reached by the last step; any later stretch with w = 0 still
    // exchanges mass.
    let t_last = if tau_end > 0.0 {
        profile.t_of_tau(tau_end).unwrap_or(t_end).min(t_end)
    } else {
        0.0
    };
    let tail = rate.integrated(profile, t_end)? - rate.integrated(profile, t_last)?;
    let clock = TimeCoordinates {
        profile,
        rate,
        tau_end,
        t_last,
    };
    run(params, grid, tau_end, t_end, &clock, tail.max(0.0))
}

/// Solves the reduced constant-speed system in the clock `τ` with the
/// effective rate `λ_eff(τ)`, up to the clock value reached at `t_end`.
/// Requires `λ_eff` bounded on `[0, τ(t_end)]`.
pub fn solve_in_clock(
    params: &TelegraphParams,
    profile: &TimeProfile,
    rate: &RateProfile,
    grid: &GridSpec,
    t_end: f64,
) -> Result<PdeSolution> {
    let (tau_end, _) = check_inputs(profile, rate, t_end)?;
    let clock = ClockCoordinates { profile, rate };
    run(params, grid, tau_end, t_end, &clock, 0.0)
}

/// What each grid in a convergence study is compared with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Reference {
    /// Cell averages of the exact law (proportional rate only).
    Analytic,
    /// The solution on the finest grid of the study, aggregated to each
    /// coarser grid.
    Finest,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub n_cells: usize,
    pub error: L1Report,
    /// Order measured against the previous row, when defined.
    pub order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub reference: Reference,
    pub rows: Vec<ConvergenceRow>,
    /// Least-squares slope of `−log error` against `log n_cells` over rows
    /// with nonzero error; `None` when fewer than three such rows exist.
    pub observed_order: Option<f64>,
}

/// Sums groups of `factor` consecutive fine cells into one coarse cell.
fn aggregate(fine: &DensityGrid, coarse: &GridSpec) -> Result<DensityGrid> {
    if !fine.len().is_multiple_of(coarse.n_cells) {
        return domain("finest grid is not a refinement of every grid in the study");
    }
    let factor = fine.len() / coarse.n_cells;
    let mut out = DensityGrid::zeros(coarse.x_min, coarse.x_max, coarse.n_cells, fine.time)?;
    for (i, v) in out.values.iter_mut().enumerate() {
        *v = fine.values[i * factor..(i + 1) * factor].iter().sum::<f64>() / factor as f64;
    }
    out.atoms = fine.atoms.clone();
    Ok(out)
}

/// Solves on each grid size and reports L¹ errors and observed orders.
pub fn convergence_study(
    params: &TelegraphParams,
    profile: &TimeProfile,
    rate: &RateProfile,
    t_end: f64,
    base: &GridSpec,
    n_cells: &[usize],
    reference: Reference,
) -> Result<ConvergenceReport> {
    if n_cells.len() < 3 {
        return domain("a convergence study needs at least three grids");
    }
    if n_cells.windows(2).any(|p| p[1] < p[0]) {
        return domain("grid sizes must be nondecreasing");
    }
    if reference == Reference::Analytic && !rate.is_proportional() {
        return Err(Error::Capability(
            "the exact law is only available when the rate is proportional to the speed".into(),
        ));
    }
    let finest = match reference {
        Reference::Finest => Some(
            solve_ab_system(
                params,
                profile,
                rate,
                &base.with_cells(*n_cells.last().expect("non-empty")),
                t_end,
            )?
            .density,
        ),
        Reference::Analytic => None,
    };
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(n_cells.len());
    for &n in n_cells {
        let grid = base.with_cells(n);
        let solution = solve_ab_system(params, profile, rate, &grid, t_end)?;
        let reference_grid = match &finest {
            Some(fine) => aggregate(fine, &grid)?,
            None => analytic_grid(params, profile, t_end, grid.x_min, grid.x_max, n)?,
        };
        let error = l1_distance(&solution.density, &reference_grid)?;
        let order = rows.last().and_then(|prev| {
            let ratio = n as f64 / prev.n_cells as f64;
            let (e0, e1) = (prev.error.total(), error.total());
            (ratio > 1.0 && e0 > 0.0 && e1 > 0.0).then(|| (e0 / e1).ln() / ratio.ln())
        });
        rows.push(ConvergenceRow {
            n_cells: n,
            error,
            order,
        });
    }
    let points: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.error.total() > 0.0)
        .map(|r| (r.n_cells as f64, r.error.total()))
        .collect();
    let observed_order = fit_exponent(&points).ok().map(|fit| -fit.exponent);
    Ok(ConvergenceReport {
        reference,
        rows,
        observed_order,
    })
}
