//! Simulated ensembles against the exact law.

use teleswim_core::analytic::{law_at_time, msd, AnalyticLaw};
use teleswim_core::montecarlo::{
    derive_seed, empirical_histogram, empirical_msd, simulate_ensemble, simulate_path,
    simulate_path_in_clock,
};
use teleswim_core::stats::{ks_distance, ks_two_sample};
use teleswim_core::{RateProfile, TelegraphParams, TimeProfile};

fn params() -> TelegraphParams {
    TelegraphParams::new(1.5, 0.8, -0.5).unwrap()
}

#[test]
fn ensemble_matches_exact_cdf() {
    let rate = RateProfile::proportional(0.8).unwrap();
    for profile in [
        TimeProfile::Constant,
        TimeProfile::exponential_decay(0.7).unwrap(),
        TimeProfile::power_law(-0.5, 2.0).unwrap(),
        TimeProfile::piecewise_constant(vec![0.5, 1.0], vec![1.0, 0.0, 2.0]).unwrap(),
    ] {
        let ens = simulate_ensemble(&params(), &profile, &rate, 1.7, 20_000, 11).unwrap();
        let law = AnalyticLaw::new(&params(), &profile, 1.7).unwrap();
        let ks = ks_distance(&ens.sorted_positions(), &law).unwrap();
        // 1.63/√n is the 1% critical value.
        assert!(ks < 1.63 / (20_000f64).sqrt(), "{profile:?}: KS {ks}");
    }
}

#[test]
fn clock_sampler_agrees_with_thinning() {
    let profile = TimeProfile::power_law(0.5, 1.0).unwrap();
    let rate = RateProfile::proportional(0.8).unwrap();
    let n = 10_000;
    let mut thinned: Vec<f64> = (0..n)
        .map(|i| simulate_path(&params(), &profile, &rate, 3.0, derive_seed(1, i)).unwrap().final_position)
        .collect();
    let mut clocked: Vec<f64> = (0..n)
        .map(|i| simulate_path_in_clock(&params(), &profile, 3.0, derive_seed(2, i)).unwrap().final_position)
        .collect();
    thinned.sort_by(f64::total_cmp);
    clocked.sort_by(f64::total_cmp);
    let ks = ks_two_sample(&thinned, &clocked).unwrap();
    // Two-sample 1% critical value for equal sizes.
    assert!(ks < 1.63 * (2.0 / n as f64).sqrt(), "KS {ks}");
}

#[test]
fn no_tumbles_where_rate_vanishes() {
    let rate = RateProfile::explicit(&[(0.0, 2.0), (1.0, 2.0), (1.0001, 0.0), (2.0, 0.0), (2.0001, 1.0), (3.0, 1.0)]).unwrap();
    let profile = TimeProfile::Constant;
    let n = 20_000u64;
    let mut untouched = 0;
    for i in 0..n {
        let path = simulate_path(&params(), &profile, &rate, 3.0, derive_seed(5, i)).unwrap();
        assert!(path.tumble_times.iter().all(|&s| !(1.0001 < s && s < 2.0)));
        assert!(path.tumble_times.windows(2).all(|w| w[0] <= w[1]));
        if path.n_tumbles == 0 {
            untouched += 1;
        }
    }
    let lambda = rate.integrated(&profile, 3.0).unwrap();
    let p = (-lambda).exp();
    let sigma = (p * (1.0 - p) / n as f64).sqrt();
    let frac = untouched as f64 / n as f64;
    assert!((frac - p).abs() < 4.0 * sigma, "{frac} vs {p}");
}

#[test]
fn atoms_are_recovered() {
    let profile = TimeProfile::exponential_decay(0.4).unwrap();
    let rate = RateProfile::proportional(0.8).unwrap();
    let ens = simulate_ensemble(&params(), &profile, &rate, 2.0, 40_000, 3).unwrap();
    let hist = empirical_histogram(&ens, 64, true).unwrap();
    let law = law_at_time(&params(), &profile, 2.0).unwrap();
    assert_eq!(hist.atoms.len(), 2);
    let sigma = (law.atom_mass * (1.0 - law.atom_mass) / 40_000.0).sqrt();
    for atom in &hist.atoms {
        assert!((atom.mass - law.atom_mass).abs() < 4.0 * sigma);
        assert!((atom.position - params().x0).abs() == law.front);
    }
    assert!((hist.total_mass() - 1.0).abs() < 1e-12);
}

#[test]
fn msd_within_standard_errors() {
    let profile = TimeProfile::power_law(0.3, 1.0).unwrap();
    let rate = RateProfile::proportional(0.8).unwrap();
    let points = empirical_msd(&params(), &profile, &rate, &[0.0, 0.5, 2.0, 6.0], 50_000, 8).unwrap();
    assert_eq!(points[0].msd, 0.0);
    for p in &points[1..] {
        let exact = msd(&params(), &profile, p.t).unwrap();
        assert!((p.msd - exact).abs() < 4.0 * p.stderr, "t = {}: {} vs {exact}", p.t, p.msd);
    }
}
