//! Exact path simulation.
//!
//! Tumble epochs are drawn by thinning against a piecewise-constant bound of
//! `λ(t)`, so no time step is involved. Between epochs the particle moves in
//! a fixed direction `σ` and its displacement over `[t₁, t₂]` is
//! `σ c₀ (τ(t₂) − τ(t₁))`, evaluated with the closed-form clock.
//!
//! Path `i` of an ensemble is seeded with [`derive_seed`]`(base_seed, i)` and
//! owns its RNG, so results do not depend on the number of workers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::Serialize;

use crate::analytic::TelegraphParams;
use crate::error::{domain, Error, Result};
use crate::grid::{Atom, DensityGrid};
use crate::profiles::{RateProfile, TimeProfile};
use crate::stats::mean_and_stderr;

/// Identifies the random stream layout written into output metadata.
pub const RNG_VERSION: &str = "chacha8/rand_chacha-0.9/seed_from_u64;seeds=splitmix64-v1";

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of path `index`: the `(index + 1)`-th output of a SplitMix64 stream
/// started at `base_seed`.
pub fn derive_seed(base_seed: u64, index: u64) -> u64 {
    splitmix64(base_seed.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

/// One simulated trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Path {
    pub seed: u64,
    pub tumble_times: Vec<f64>,
    pub final_position: f64,
    pub n_tumbles: usize,
    /// `+1` or `−1`.
    pub initial_direction: i8,
}

/// Per-path record kept by ensembles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathSummary {
    pub seed: u64,
    pub n_tumbles: usize,
    pub final_position: f64,
    pub initial_direction: i8,
}

/// Thinning bounds of `λ` on a fixed partition of `[0, t_end]`.
struct Thinning<'a> {
    params: TelegraphParams,
    profile: &'a TimeProfile,
    rate: &'a RateProfile,
    /// `(start, end, bound)` per interval.
    intervals: Vec<(f64, f64, f64)>,
}

impl<'a> Thinning<'a> {
    fn new(
        params: &TelegraphParams,
        profile: &'a TimeProfile,
        rate: &'a RateProfile,
        t_end: f64,
    ) -> Result<Self> {
        params.validate()?;
        if !(t_end > 0.0) || !t_end.is_finite() {
            return domain(format!("simulation end time must be positive, got {t_end}"));
        }
        profile.tau(t_end)?;
        rate.lambda(profile, t_end)?;

        let mut cuts: Vec<f64> = (0..=32).map(|j| t_end * j as f64 / 32.0).collect();
        cuts.extend((1..=20).map(|k| t_end * 0.5f64.powi(k)));
        cuts.extend(
            rate.nodes(profile)
                .into_iter()
                .chain(profile.nodes())
                .filter(|&s| s > 0.0 && s < t_end),
        );
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        *cuts.last_mut().expect("non-empty") = t_end;

        let mut intervals = Vec::with_capacity(cuts.len());
        for pair in cuts.windows(2) {
            let bound = rate.sup(profile, pair[0], pair[1])?;
            if !bound.is_finite() {
                return Err(Error::Capability(format!(
                    "tumbling rate is unbounded on [{}, {}]",
                    pair[0], pair[1]
                )));
            }
            intervals.push((pair[0], pair[1], bound));
        }
        Ok(Self {
            params: *params,
            profile,
            rate,
            intervals,
        })
    }

    /// Draws the initial direction and all tumble epochs.
    fn draw(&self, rng: &mut ChaCha8Rng, events: &mut Vec<f64>) -> Result<i8> {
        events.clear();
        let direction = if rng.random::<bool>() { 1 } else { -1 };
        for &(start, end, bound) in &self.intervals {
            if bound == 0.0 {
                continue;
            }
            let mut s = start;
            loop {
                let gap: f64 = rng.sample(Exp1);
                s += gap / bound;
                if s > end {
                    break;
                }
                let lambda = self.rate.lambda(self.profile, s)?;
                if rng.random::<f64>() * bound < lambda {
                    events.push(s);
                }
            }
        }
        Ok(direction)
    }

    /// Positions at each of `tau_samples` (ascending clock values) given the
    /// epochs; returns them through `out`.
    fn positions(
        &self,
        direction: i8,
        events: &[f64],
        tau_samples: &[f64],
        out: &mut Vec<f64>,
    ) -> Result<()> {
        out.clear();
        let c0 = self.params.c0;
        let mut sigma = f64::from(direction);
        let mut pos = self.params.x0;
        let mut last_tau = 0.0;
        let mut next = 0;
        let event_taus: Vec<f64> = events
            .iter()
            .map(|&e| self.profile.tau(e))
            .collect::<Result<_>>()?;
        for &ts in tau_samples {
            while next < event_taus.len() && event_taus[next] <= ts {
                pos += sigma * c0 * (event_taus[next] - last_tau);
                last_tau = event_taus[next];
                sigma = -sigma;
                next += 1;
            }
            out.push(pos + sigma * c0 * (ts - last_tau));
        }
        Ok(())
    }
}

/// Simulates one path up to `t_end` with the given seed.
pub fn simulate_path(
    params: &TelegraphParams,
    profile: &TimeProfile,
    rate: &RateProfile,
    t_end: f64,
    seed: u64,
) -> Result<Path> {
    let thinning = Thinning::new(params, profile, rate, t_end)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut events = Vec::new();
    let direction = thinning.draw(&mut rng, &mut events)?;
    let mut pos = Vec::with_capacity(1);
    thinning.positions(direction, &events, &[profile.tau(t_end)?], &mut pos)?;
    Ok(Path {
        seed,
        n_tumbles: events.len(),
        tumble_times: events,
        final_position: pos[0],
        initial_direction: direction,
    })
}

/// Simulates one path of the proportional-rate process directly in the
/// clock `τ`, where tumbles form a homogeneous Poisson stream of rate `λ₀`,
/// and maps the epochs back through `t(τ)`.
pub fn simulate_path_in_clock(
    params: &TelegraphParams,
    profile: &TimeProfile,
    t_end: f64,
    seed: u64,
) -> Result<Path> {
    params.validate()?;
    if !(t_end > 0.0) {
        return domain("simulation end time must be positive");
    }
    let tau_end = profile.tau(t_end)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let direction: i8 = if rng.random::<bool>() { 1 } else { -1 };
    let mut sigma = f64::from(direction);
    let mut pos = params.x0;
    let mut last = 0.0;
    let mut tumble_times = Vec::new();
    if params.lambda0 > 0.0 {
        loop {
            let gap: f64 = rng.sample(Exp1);
            let next = last + gap / params.lambda0;
            if next > tau_end {
                break;
            }
            pos += sigma * params.c0 * (next - last);
            sigma = -sigma;
            last = next;
            tumble_times.push(profile.t_of_tau(next)?);
        }
    }
    pos += sigma * params.c0 * (tau_end - last);
    Ok(Path {
        seed,
        n_tumbles: tumble_times.len(),
        tumble_times,
        final_position: pos,
        initial_direction: direction,
    })
}

/// `n_paths` independent paths with reproducible per-path seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct PathEnsemble {
    pub params: TelegraphParams,
    pub profile: TimeProfile,
    pub rate: RateProfile,
    pub t_end: f64,
    pub base_seed: u64,
    pub paths: Vec<PathSummary>,
}

/// Moments and atom fraction of an ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnsembleSummary {
    pub n_paths: usize,
    pub mean: f64,
    pub mean_stderr: f64,
    /// Second moment about `x₀`.
    pub msd: f64,
    pub msd_stderr: f64,
    /// Fraction of paths without tumbles.
    pub atom_fraction: f64,
    pub mean_tumbles: f64,
}

impl PathEnsemble {
    pub fn n_paths(&self) -> usize {
        self.paths.len()
    }

    pub fn positions(&self) -> Vec<f64> {
        self.paths.iter().map(|p| p.final_position).collect()
    }

    pub fn sorted_positions(&self) -> Vec<f64> {
        let mut xs = self.positions();
        xs.sort_by(f64::total_cmp);
        xs
    }

    /// Half-width `c₀τ(t_end)` of the reachable interval.
    pub fn front(&self) -> Result<f64> {
        Ok(self.params.c0 * self.profile.tau(self.t_end)?)
    }

    /// Moments computed in path order with compensated sums, so they do not
    /// depend on how the paths were scheduled.
    pub fn summary(&self) -> Result<EnsembleSummary> {
        if self.paths.is_empty() {
            return domain("empty ensemble");
        }
        let xs = self.positions();
        let (mean, mean_stderr) = mean_and_stderr(&xs);
        let sq: Vec<f64> = xs.iter().map(|x| (x - self.params.x0).powi(2)).collect();
        let (msd, msd_stderr) = mean_and_stderr(&sq);
        let n = self.paths.len() as f64;
        let zero = self.paths.iter().filter(|p| p.n_tumbles == 0).count() as f64;
        let tumbles: Vec<f64> = self.paths.iter().map(|p| p.n_tumbles as f64).collect();
        Ok(EnsembleSummary {
            n_paths: self.paths.len(),
            mean,
            mean_stderr,
            msd,
            msd_stderr,
            atom_fraction: zero / n,
            mean_tumbles: crate::numeric::compensated_sum(&tumbles) / n,
        })
    }
}

/// Simulates `n_paths` paths in parallel; path `i` uses
/// `derive_seed(base_seed, i)`.
pub fn simulate_ensemble(
    params: &TelegraphParams,
    profile: &TimeProfile,
    rate: &RateProfile,
    t_end: f64,
    n_paths: usize,
    base_seed: u64,
) -> Result<PathEnsemble> {
    if n_paths == 0 {
        return domain("an ensemble needs at least one path");
    }
    let thinning = Thinning::new(params, profile, rate, t_end)?;
    let tau_end = [profile.tau(t_end)?];
    let paths = (0..n_paths as u64)
        .into_par_iter()
        .map_init(
            || (Vec::new(), Vec::with_capacity(1)),
            |(events, pos), i| {
                let seed = derive_seed(base_seed, i);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let direction = thinning.draw(&mut rng, events)?;
                thinning.positions(direction, events, &tau_end, pos)?;
                Ok(PathSummary {
                    seed,
                    n_tumbles: events.len(),
                    final_position: pos[0],
                    initial_direction: direction,
                })
            },
        )
        .collect::<Result<Vec<_>>>()?;
    Ok(PathEnsemble {
        params: *params,
        profile: profile.clone(),
        rate: rate.clone(),
        t_end,
        base_seed,
        paths,
    })
}

/// Histogram of final positions over `[x₀ − c₀τ, x₀ + c₀τ]`.
///
/// With `include_atoms`, paths that never tumbled are reported as atoms at
/// the fronts instead of being binned.
pub fn empirical_histogram(
    ensemble: &PathEnsemble,
    n_bins: usize,
    include_atoms: bool,
) -> Result<DensityGrid> {
    if ensemble.paths.is_empty() {
        return domain("empty ensemble");
    }
    if n_bins < 2 {
        return domain("a histogram needs at least two bins");
    }
    let front = ensemble.front()?;
    if !(front > 0.0) {
        return domain("the reachable interval is empty at this time");
    }
    let x0 = ensemble.params.x0;
    let mut grid = DensityGrid::zeros(x0 - front, x0 + front, n_bins, ensemble.t_end)?;
    let n = ensemble.paths.len() as f64;
    let weight = 1.0 / (n * grid.dx());
    let (mut left, mut right) = (0usize, 0usize);
    for p in &ensemble.paths {
        if include_atoms && p.n_tumbles == 0 {
            if p.initial_direction > 0 {
                right += 1;
            } else {
                left += 1;
            }
            continue;
        }
        let i = grid.cell_of(p.final_position);
        grid.values[i] += weight;
    }
    if include_atoms {
        for (count, position) in [(left, x0 - front), (right, x0 + front)] {
            if count > 0 {
                grid.atoms.push(Atom {
                    position,
                    mass: count as f64 / n,
                });
            }
        }
    }
    Ok(grid)
}

/// Empirical second moment about `x₀` and its standard error at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MsdPoint {
    pub t: f64,
    pub msd: f64,
    pub stderr: f64,
}

/// Positions of `n_paths` paths at every sample time, one vector per time.
pub fn simulate_positions(
    params: &TelegraphParams,
    profile: &TimeProfile,
    rate: &RateProfile,
    sample_times: &[f64],
    n_paths: usize,
    base_seed: u64,
) -> Result<Vec<Vec<f64>>> {
    if n_paths == 0 {
        return domain("an ensemble needs at least one path");
    }
    if sample_times.is_empty() {
        return domain("no sample times given");
    }
    if sample_times.iter().any(|t| !(*t >= 0.0) || !t.is_finite())
        || sample_times.windows(2).any(|p| p[1] < p[0])
    {
        return domain("sample times must be nonnegative and ascending");
    }
    let t_max = *sample_times.last().expect("non-empty");
    if t_max == 0.0 {
        return Ok(vec![vec![params.x0; n_paths]; sample_times.len()]);
    }
    let thinning = Thinning::new(params, profile, rate, t_max)?;
    let taus: Vec<f64> = sample_times
        .iter()
        .map(|&t| profile.tau(t))
        .collect::<Result<_>>()?;
    let rows = (0..n_paths as u64)
        .into_par_iter()
        .map_init(
            Vec::new,
            |events, i| {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(base_seed, i));
                let direction = thinning.draw(&mut rng, events)?;
                let mut row = Vec::with_capacity(taus.len());
                thinning.positions(direction, events, &taus, &mut row)?;
                Ok(row)
            },
        )
        .collect::<Result<Vec<Vec<f64>>>>()?;
    Ok((0..sample_times.len())
        .map(|k| rows.iter().map(|row| row[k]).collect())
        .collect())
}

/// Sample MSD at each time; every path is simulated once to the last time.
pub fn empirical_msd(
    params: &TelegraphParams,
    profile: &TimeProfile,
    rate: &RateProfile,
    sample_times: &[f64],
    n_paths: usize,
    base_seed: u64,
) -> Result<Vec<MsdPoint>> {
    let columns = simulate_positions(params, profile, rate, sample_times, n_paths, base_seed)?;
    Ok(sample_times
        .iter()
        .zip(columns)
        .map(|(&t, xs)| {
            if t == 0.0 {
                return MsdPoint {
                    t,
                    msd: 0.0,
                    stderr: 0.0,
                };
            }
            let sq: Vec<f64> = xs.iter().map(|x| (x - params.x0).powi(2)).collect();
            let (msd, stderr) = mean_and_stderr(&sq);
            MsdPoint { t, msd, stderr }
        })
        .collect())
}
