//! One function per subcommand. Each writes its files through a [`Sink`]
//! and returns the lines printed on stdout.

use serde::Serialize;
use serde_json::json;

use teleswim_core::analytic::{
    self, classify_regime, law_at_time, msd_limit_constant_rate_decay, msd_moment_equations,
    AnalyticLaw,
};
use teleswim_core::fractional::{
    auto_k_max, charfun_grid, invert_charfun, second_moment_study, FractionalParams,
    InversionOptions,
};
use teleswim_core::montecarlo::{empirical_histogram, empirical_msd, simulate_ensemble};
use teleswim_core::pde::{convergence_study, solve_ab_system, GridSpec, Reference};
use teleswim_core::stats::{fit_exponent, fit_semilog, ks_distance};
use teleswim_core::{RateProfile, TimeProfile};

use crate::config::Resolved;
use crate::output::{num, tag, Sink};
use crate::CliError;

fn require_positive_times(r: &Resolved, what: &str) -> Result<(), CliError> {
    if r.config.times.contains(&0.0) {
        return Err(CliError::Config(format!(
            "{what} is undefined at t = 0 (the law is a point mass at x0); use positive times"
        )));
    }
    Ok(())
}

fn require_proportional(r: &Resolved, what: &str, alternative: &str) -> Result<(), CliError> {
    if !r.rate.is_proportional() {
        return Err(CliError::Config(format!(
            "{what} holds only for rate mode 'proportional' (lambda = lambda0 * w); {alternative}"
        )));
    }
    Ok(())
}

/// MSD at `t`: closed form for a proportional rate, moment equations otherwise.
fn exact_msd(r: &Resolved, t: f64) -> Result<f64, CliError> {
    if r.rate.is_proportional() {
        return Ok(analytic::msd(&r.params, &r.profile, t)?);
    }
    let lambda_sup = r.rate.sup(&r.profile, 0.0, t)?.max(1.0);
    let steps = (40.0 * t * lambda_sup).ceil().clamp(10_000.0, 1e7) as usize;
    Ok(msd_moment_equations(&r.params, &r.profile, &r.rate, t, steps)?)
}

/// Long-time MSD when the clock saturates and a closed form is known.
fn msd_limit(r: &Resolved) -> Result<Option<f64>, CliError> {
    if r.rate.is_proportional() {
        return Ok(analytic::msd_limit(&r.params, &r.profile)?);
    }
    match (&r.rate, &r.profile) {
        (RateProfile::ConstantRate { lambda0 }, TimeProfile::ExponentialDecay { gamma }) => {
            Ok(Some(msd_limit_constant_rate_decay(r.params.c0, *lambda0, *gamma)))
        }
        _ => Ok(None),
    }
}

#[derive(Serialize)]
struct DensityResult {
    t: f64,
    tau: f64,
    front: f64,
    atoms: [teleswim_core::Atom; 2],
    ac_mass_exact: f64,
    ac_mass_trapezoid: f64,
    /// `ac_mass_trapezoid + 2·atom_mass`.
    normalization: f64,
    file: String,
}

pub fn density(r: &Resolved, sink: &mut Sink) -> Result<Vec<String>, CliError> {
    require_proportional(r, "the exact density", "use the 'pde' command for other rates")?;
    require_positive_times(r, "the density")?;
    if r.params.lambda0 == 0.0 {
        return Err(CliError::Config(
            "with lambda0 = 0 the law is two front atoms and has no density".into(),
        ));
    }
    let n = r.config.density_points;
    let x0 = r.params.x0;
    let mut results = Vec::new();
    let mut lines = Vec::new();
    for &t in &r.config.times {
        let law = law_at_time(&r.params, &r.profile, t)?;
        let h = 2.0 * law.front / (n - 1) as f64;
        // The end rows carry the one-sided limit at the fronts; the atoms
        // themselves are reported in the sidecar.
        let edge = analytic::density_ac_front_limit(&r.params, law.tau)?;
        let rows: Vec<(f64, f64)> = (0..n)
            .map(|i| {
                let x = x0 - law.front + i as f64 * h;
                let p = if i == 0 || i == n - 1 {
                    edge
                } else {
                    analytic::density_ac(&r.params, &r.profile, x, t)?
                };
                Ok((x, p))
            })
            .collect::<Result<_, CliError>>()?;
        let trapezoid = h * (rows.iter().map(|p| p.1).sum::<f64>() - 0.5 * (rows[0].1 + rows[n - 1].1));
        let file = format!("density_{}.csv", tag(t));
        sink.csv(&file, &["x", "density"], rows.iter().map(|&(x, p)| [num(x), num(p)]))?;
        let normalization = trapezoid + 2.0 * law.atom_mass;
        lines.push(format!("t = {t}: atoms {:.6e} each, mass {normalization:.9}", law.atom_mass));
        results.push(DensityResult {
            t,
            tau: law.tau,
            front: law.front,
            atoms: analytic::boundary_atoms(&r.params, &r.profile, t)?,
            ac_mass_exact: law.ac_mass,
            ac_mass_trapezoid: trapezoid,
            normalization,
            file,
        });
    }
    sink.json("density.json", &results)?;
    Ok(lines)
}

pub fn simulate(r: &Resolved, sink: &mut Sink) -> Result<Vec<String>, CliError> {
    let t = r.t_max();
    if t == 0.0 {
        return Err(CliError::Config("simulate needs a positive final time".into()));
    }
    let ens = simulate_ensemble(&r.params, &r.profile, &r.rate, t, r.config.n_paths, r.config.base_seed)?;
    let summary = ens.summary()?;
    sink.csv(
        "paths.csv",
        &["seed", "n_tumbles", "final_position"],
        ens.paths
            .iter()
            .map(|p| [p.seed.to_string(), p.n_tumbles.to_string(), num(p.final_position)]),
    )?;
    let hist = empirical_histogram(&ens, r.config.n_bins, true)?;
    sink.csv(
        "histogram.csv",
        &["x", "density"],
        hist.centers.iter().zip(&hist.values).map(|(&x, &p)| [num(x), num(p)]),
    )?;
    let ks = if r.rate.is_proportional() && r.params.lambda0 > 0.0 {
        Some(ks_distance(&ens.sorted_positions(), &AnalyticLaw::new(&r.params, &r.profile, t)?)?)
    } else {
        None
    };
    let tau_inf = r.profile.tau_infinity();
    let limit = msd_limit(r)?;
    let expected_atoms = (-r.rate.integrated(&r.profile, t)?).exp();
    let msd_exact = exact_msd(r, t)?;
    sink.json(
        "simulate.json",
        &json!({
            "t": t,
            "tau": r.profile.tau(t)?,
            "summary": summary,
            "atom_fraction_expected": expected_atoms,
            "histogram_atoms": hist.atoms,
            "ks_vs_exact": ks,
            "msd_exact": msd_exact,
            "confined": tau_inf.is_finite(),
            "tau_infinity": tau_inf.is_finite().then_some(tau_inf),
            "msd_limit": limit,
        }),
    )?;
    let mut lines = vec![format!(
        "{} paths to t = {t}: msd {:.6} ± {:.1e} (exact {msd_exact:.6}), atom fraction {:.5} (expected {expected_atoms:.5})",
        summary.n_paths, summary.msd, summary.msd_stderr, summary.atom_fraction
    )];
    if let Some(ks) = ks {
        lines.push(format!("KS distance to the exact law: {ks:.5}"));
    }
    if tau_inf.is_finite() {
        lines.push(match limit {
            Some(l) => format!("confined: MSD plateau {l:.6}"),
            None => "confined: clock saturates at a finite value".into(),
        });
    }
    Ok(lines)
}

#[derive(Serialize)]
struct Fit {
    window: [f64; 2],
    points: usize,
    exponent: f64,
    r_squared: f64,
    semilog_r_squared: f64,
}

pub fn msd(r: &Resolved, sink: &mut Sink) -> Result<Vec<String>, CliError> {
    let times = &r.config.times;
    let exact: Vec<(f64, f64)> = times
        .iter()
        .map(|&t| Ok((t, exact_msd(r, t)?)))
        .collect::<Result<_, CliError>>()?;
    sink.csv(
        "msd.csv",
        &["t", "msd", "stderr"],
        exact.iter().map(|&(t, m)| [num(t), num(m), num(0.0)]),
    )?;
    let mut lines = Vec::new();
    let mut empirical = None;
    if r.config.mc_overlay {
        let points = empirical_msd(&r.params, &r.profile, &r.rate, times, r.config.n_paths, r.config.base_seed)?;
        sink.csv(
            "msd_mc.csv",
            &["t", "msd", "stderr"],
            points.iter().map(|p| [num(p.t), num(p.msd), num(p.stderr)]),
        )?;
        empirical = Some(points);
    }
    let [lo, hi] = r.config.fit_window.unwrap_or([f64::MIN_POSITIVE, f64::INFINITY]);
    let window: Vec<(f64, f64)> = exact
        .iter()
        .copied()
        .filter(|&(t, m)| t >= lo && t <= hi && t > 0.0 && m > 0.0)
        .collect();
    let fit = if window.len() >= 2 {
        let power = fit_exponent(&window)?;
        let semilog = fit_semilog(&window)?;
        lines.push(format!(
            "fitted MSD exponent {:.4} (r² {:.6}; semilog r² {:.6}) over {} points",
            power.exponent,
            power.r_squared,
            semilog.r_squared,
            window.len()
        ));
        Some(Fit {
            window: [window[0].0, window[window.len() - 1].0],
            points: window.len(),
            exponent: power.exponent,
            r_squared: power.r_squared,
            semilog_r_squared: semilog.r_squared,
        })
    } else {
        None
    };
    let prediction = match r.profile {
        TimeProfile::PowerLaw { beta, .. } => Some(classify_regime(beta)?),
        TimeProfile::Constant => Some(classify_regime(0.0)?),
        _ => None,
    };
    if let Some(p) = &prediction {
        lines.push(format!("predicted regime: {p}"));
    }
    sink.json(
        "msd.json",
        &json!({
            "exact": exact.iter().map(|&(t, m)| json!({"t": t, "msd": m})).collect::<Vec<_>>(),
            "empirical": empirical,
            "fit": fit,
            "prediction": prediction.map(|p| json!({"report": p.to_string(), "regime": p.regime, "msd_exponent": p.msd_exponent})),
            "msd_limit": msd_limit(r)?,
            "method": if r.rate.is_proportional() { "closed form" } else { "moment equations (RK4)" },
        }),
    )?;
    Ok(lines)
}

fn default_grid(r: &Resolved) -> Result<GridSpec, CliError> {
    let front = r.params.c0 * r.profile.tau(r.t_max())?;
    let half = 1.25 * front.max(1e-12);
    Ok(GridSpec::new(r.params.x0 - half, r.params.x0 + half, 2000, 1.0)?)
}

pub fn pde(r: &Resolved, sink: &mut Sink) -> Result<Vec<String>, CliError> {
    require_positive_times(r, "the PDE solution")?;
    let grid = match r.config.grid {
        Some(g) => g,
        None => default_grid(r)?,
    };
    let mut results = Vec::new();
    let mut lines = Vec::new();
    for &t in &r.config.times {
        let sol = solve_ab_system(&r.params, &r.profile, &r.rate, &grid, t)?;
        let file = format!("pde_{}.csv", tag(t));
        let d = &sol.density;
        sink.csv(
            &file,
            &["x", "density"],
            d.centers.iter().zip(&d.values).map(|(&x, &p)| [num(x), num(p)]),
        )?;
        lines.push(format!(
            "t = {t}: {} steps, mass defect {:.1e}, atoms {:.6e}",
            sol.steps,
            sol.mass_defect,
            d.atom_mass()
        ));
        results.push(json!({
            "t": t,
            "file": file,
            "atoms": d.atoms,
            "steps": sol.steps,
            "mass_defect": sol.mass_defect,
            "max_step_mass_defect": sol.max_step_mass_defect,
            "min_cell_mass": sol.min_cell_mass,
            "second_moment": d.second_moment(r.params.x0),
        }));
    }
    let convergence = match &r.config.convergence {
        Some(cells) => {
            let reference = if r.rate.is_proportional() {
                Reference::Analytic
            } else {
                Reference::Finest
            };
            let report = convergence_study(&r.params, &r.profile, &r.rate, r.t_max(), &grid, cells, reference)?;
            if let Some(order) = report.observed_order {
                lines.push(format!("observed order {order:.3} against {reference:?} reference"));
            }
            Some(report)
        }
        None => None,
    };
    sink.json("pde.json", &json!({"grid": grid, "solutions": results, "convergence": convergence}))?;
    Ok(lines)
}

pub fn charfun(r: &Resolved, sink: &mut Sink) -> Result<Vec<String>, CliError> {
    require_proportional(
        r,
        "the fractional characteristic function",
        "the clock reduction needs lambda proportional to the speed",
    )?;
    require_positive_times(r, "the inversion")?;
    let fp = FractionalParams::new(r.config.alpha.unwrap_or(1.0), r.params)?;
    let options = InversionOptions {
        mollifier_cells: r.config.mollifier_cells,
    };
    let n_k = r.config.n_k;
    let mut results = Vec::new();
    let mut lines = Vec::new();
    for &t in &r.config.times {
        let (k_max, tail_ok) = match r.config.k_max {
            Some(k) => (k, None),
            None => {
                let (k, ok) = auto_k_max(&fp, &r.profile, t, n_k)?;
                (k, Some(ok))
            }
        };
        let grid = charfun_grid(&fp, &r.profile, t, k_max, n_k)?;
        let cf_file = format!("charfun_{}.csv", tag(t));
        sink.csv(
            &cf_file,
            &["k", "re", "im"],
            grid.wavenumbers
                .iter()
                .zip(&grid.values)
                .map(|(&k, v)| [num(k), num(v.re), num(v.im)]),
        )?;
        let inv = invert_charfun(&grid, &options)?;
        let inv_file = format!("inverse_{}.csv", tag(t));
        let d = &inv.density;
        sink.csv(
            &inv_file,
            &["x", "density"],
            d.centers.iter().zip(&d.values).map(|(&x, &p)| [num(x), num(p)]),
        )?;
        let study = if r.config.heavy_tail_study {
            let sizes = [n_k / 4, n_k / 2, n_k];
            if sizes[0] < 64 || !sizes[0].is_multiple_of(2) {
                return Err(CliError::Config("heavy_tail_study needs n_k divisible by 8 and at least 256".into()));
            }
            Some(second_moment_study(&fp, &r.profile, t, k_max, &sizes, &options)?)
        } else {
            None
        };
        lines.push(format!(
            "t = {t}: k_max {k_max:.4}, mass defect {:.1e}, second moment {:.6}{}",
            inv.mass_defect,
            d.second_moment(r.params.x0),
            match &study {
                Some(s) if s.heavy_tailed => ", heavy-tailed (second moment grows with the window)",
                Some(_) => ", second moment stable under refinement",
                None => "",
            }
        ));
        results.push(json!({
            "t": t,
            "alpha": fp.alpha,
            "k_max": k_max,
            "n_k": n_k,
            "tail_criterion_met_without_mollifier": tail_ok,
            "charfun_file": cf_file,
            "inverse_file": inv_file,
            "mollifier_sigma": inv.mollifier_sigma,
            "tail": inv.tail,
            "mass_defect": inv.mass_defect,
            "negativity_defect": inv.negativity_defect,
            "imaginary_residual": inv.imaginary_residual,
            "second_moment": d.second_moment(r.params.x0),
            "moment_study": study,
        }));
    }
    sink.json("charfun.json", &results)?;
    Ok(lines)
}
