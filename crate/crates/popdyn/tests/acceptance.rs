//! End-to-end acceptance checks. Each test prints a single
//! `criterion N (...): PASS|FAIL` line so the suite output doubles as a
//! scorecard. Tolerances are pinned in the assertions.

use popdyn::calib::{
    dispersion_index, grid_search_system_params, PostDataset, PostRecord, DEFAULT_FAMILIES,
};
use popdyn::harness::{run_scenario, sweep, table3_experiment, validate};
use popdyn::model::{InfluencerParams, JumpFamily, SystemParams};
use popdyn::scenario::{reference_scenario, RunSection, Scenario};
use popdyn::sim::{
    derive_seed, inter_jump_survival, occupation_histogram, sample_inter_jump,
    simulate_population, simulate_trajectory, EventKind,
};
use popdyn::solver::{
    default_grid, distribution_moments, ks_distance, solve_stationary, Grid,
};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use statrs::distribution::{ContinuousCDF, Gamma};

fn report(idx: usize, name: &str, pass: bool) -> bool {
    println!("criterion {idx} ({name}): {}", if pass { "PASS" } else { "FAIL" });
    pass
}

/// Monotone trend with at most one adjacent inversion; the endpoints
/// must still order in the expected direction.
fn trend_ok(vals: &[f64], increasing: bool) -> bool {
    let sign = if increasing { 1.0 } else { -1.0 };
    let inversions = vals
        .windows(2)
        .filter(|w| sign * (w[1] - w[0]) < 0.0)
        .count();
    inversions <= 1 && sign * (vals[vals.len() - 1] - vals[0]) > 0.0
}

#[test]
fn criterion_1_rate_matched_competition() {
    let mut base = reference_scenario();
    for inf in &mut base.influencers {
        inf.lambda0 = 1.0;
    }
    let phis = [0.0, 0.1, 0.2, 0.3];
    let result = table3_experiment(&base, &phis, 4.0, None).unwrap();

    let expected_phi0 = [0.738, 0.208, 0.045, 0.008, 0.002];
    let col_ok = result.pi1[0]
        .iter()
        .zip(expected_phi0)
        .all(|(&got, want)| (got - want).abs() <= 0.03);

    let expected_row1 = [0.738, 0.701, 0.651, 0.597];
    let row1: Vec<f64> = result.pi1.iter().map(|col| col[0]).collect();
    let row_ok = row1
        .iter()
        .zip(expected_row1)
        .all(|(&got, want)| (got - want).abs() <= 0.03);

    eprintln!("phi=0 column: {:?}", result.pi1[0]);
    eprintln!("top-influencer row: {row1:?}");
    assert!(report(1, "rate-matched competition table", col_ok && row_ok));
}

#[test]
fn criterion_2_mc_vs_solver_cross_validation() {
    let rows = validate(&reference_scenario(), None).unwrap();
    for r in &rows {
        eprintln!("influencer {}: ks = {:.4}", r.influencer, r.ks);
    }
    let pass = rows.iter().all(|r| r.ks <= 0.03);
    assert!(report(2, "MC vs solver cross-validation, KS <= 0.03", pass));
}

#[test]
fn criterion_3_shot_noise_oracle() {
    // theta = phi = mu = 0 with exponential unit-mean jumps: the
    // stationary law is Gamma(lambda0/gamma, epsilon + beta).
    let sys = SystemParams::new(1.0 / 64.0, 0.0, 0.01, 0.0).unwrap();
    let inf = InfluencerParams {
        beta: 1.0,
        lambda0: 4.0,
        lambda1: 0.0,
        phi: 0.0,
        cv: 1.0,
        v_family: JumpFamily::Exponential,
    };
    let oracle = Gamma::new(256.0, 1.0 / 1.01).unwrap(); // rate = 1/scale
    let oracle_mean = 256.0 * 1.01;

    let grid = Grid::log_spaced(120.0, 500.0, 4096).unwrap();
    let nodes = grid.nodes().to_vec();
    let oracle_cdf: Vec<f64> = nodes.iter().map(|&y| oracle.cdf(y)).collect();

    let sol = solve_stationary(&sys, &inf, &grid, 1e-8, 1).unwrap();
    let solver_ks = ks_distance(&nodes, &sol.density.cdf(), &nodes, &oracle_cdf);
    let (solver_mean, _) = distribution_moments(&sol.density);

    let horizon = 8e5;
    let burnin = 0.1 * horizon;
    let mut occ = vec![0.0; nodes.len() - 1];
    let (mut under, mut over, mut window) = (0.0, 0.0, 0.0);
    let mut mean_acc = 0.0;
    for r in 0..8u64 {
        let log = simulate_trajectory(&sys, &inf, horizon, derive_seed(11, r, 0)).unwrap();
        let h = occupation_histogram(&log, &nodes, sys.gamma, burnin);
        for (o, v) in occ.iter_mut().zip(&h.occupation) {
            *o += v;
        }
        under += h.underflow;
        over += h.overflow;
        window += h.window;
        mean_acc += popdyn::harness::time_average_state(&log, sys.gamma, burnin);
    }
    let mut mc_cdf = Vec::with_capacity(nodes.len());
    let mut acc = under / window;
    mc_cdf.push(acc);
    for o in &occ {
        acc += o / window;
        mc_cdf.push(acc);
    }
    let _ = over;
    let mc_ks = ks_distance(&nodes, &mc_cdf, &nodes, &oracle_cdf);
    let mc_mean = mean_acc / 8.0;

    eprintln!("solver: ks = {solver_ks:.4}, mean = {solver_mean:.2}");
    eprintln!("mc:     ks = {mc_ks:.4}, mean = {mc_mean:.2}");
    let pass = solver_ks <= 0.01
        && mc_ks <= 0.01
        && (solver_mean - oracle_mean).abs() <= 0.02 * oracle_mean
        && (mc_mean - oracle_mean).abs() <= 0.02 * oracle_mean;
    assert!(report(3, "Gamma shot-noise oracle", pass));
}

#[test]
fn criterion_4_inter_jump_sampler_exactness() {
    // (gamma, theta, mu, lambda0, lambda1, phi, z)
    let cases = [
        (1.0 / 64.0, 0.0, 0.0, 4.0, 0.0, 0.0, 10.0),
        (1.0 / 32.0, 0.5, 0.0, 1.0, 0.5, 0.5, 5.0),
        (1.0 / 64.0, 0.6, 0.2, 0.5, 1.0, 0.8, 20.0),
        (1.0 / 16.0, 0.3, 0.3, 0.0, 2.0, 0.4, 2.0),
        (1.0 / 128.0, 0.7, 0.0, 2.0, 0.3, 0.9, 50.0),
    ];
    let n = 100_000usize;
    let mut pass = true;
    for (k, &(gamma, theta, mu, lambda0, lambda1, phi, z)) in cases.iter().enumerate() {
        let sys = SystemParams::new(gamma, theta, 0.01, mu).unwrap();
        let inf = InfluencerParams {
            beta: 1.0,
            lambda0,
            lambda1,
            phi,
            cv: 1.0,
            v_family: JumpFamily::Exponential,
        };
        let mut rng = ChaCha12Rng::seed_from_u64(5000 + k as u64);
        let mut draws: Vec<f64> = (0..n)
            .map(|_| sample_inter_jump(z, &sys, &inf, &mut rng))
            .collect();
        draws.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut sup: f64 = 0.0;
        for (i, &t) in draws.iter().enumerate() {
            let s = inter_jump_survival(t, z, &sys, &inf);
            let hi = 1.0 - i as f64 / n as f64;
            let lo = 1.0 - (i + 1) as f64 / n as f64;
            sup = sup.max((s - hi).abs()).max((s - lo).abs());
        }
        eprintln!("case {k}: sup deviation = {sup:.4}");
        pass &= sup <= 0.01;
    }
    assert!(report(4, "inter-jump sampler vs closed-form survival", pass));
}

#[test]
fn criterion_5_calibration_round_trip() {
    let gamma = 1.0 / 128.0;
    let theta = 0.7;
    let cv = 0.3;
    let sys = SystemParams::new(gamma, theta, 0.01, 0.0).unwrap();
    let n_inf = 10;
    let betas: Vec<f64> = (0..n_inf).map(|i| 0.8 + 0.05 * i as f64).collect();

    let datasets: Vec<PostDataset> = betas
        .iter()
        .enumerate()
        .map(|(i, &beta)| {
            // Sparse posting (a few shots per decay time) keeps the
            // reconstructed state fluctuating, which is what makes a
            // mis-specified (gamma, theta) distort the residual shape.
            let inf = InfluencerParams {
                beta,
                lambda0: 0.025,
                lambda1: 0.0,
                phi: 0.0,
                cv,
                v_family: JumpFamily::Lognormal,
            };
            let log = simulate_trajectory(&sys, &inf, 200_000.0, 4200 + i as u64).unwrap();
            let posts = log
                .events
                .iter()
                .filter(|e| e.kind == EventKind::Internal)
                .map(|e| PostRecord {
                    timestamp: e.time,
                    likes: e.jump,
                })
                .collect();
            PostDataset::new(format!("inf{i}"), posts).unwrap()
        })
        .collect();

    let gamma_grid = [1.0 / 256.0, 1.0 / 128.0, 1.0 / 64.0, 1.0 / 32.0];
    let theta_grid = [0.3, 0.5, 0.7, 0.9];
    let result =
        grid_search_system_params(&datasets, &gamma_grid, &theta_grid, &DEFAULT_FAMILIES)
            .unwrap();
    for c in &result.surface {
        eprintln!("surface gamma={:.5} theta={} kappa_sum={:.4}", c.gamma, c.theta, c.kappa_sum);
    }
    eprintln!(
        "argmin: gamma = {:.5} (true {gamma:.5}), theta = {} (true {theta})",
        result.best_gamma, result.best_theta
    );
    let grid_ok = result.best_gamma == gamma && result.best_theta == theta;

    let mut params_ok = true;
    let mut lognormal_wins = 0usize;
    for (i, (name, fit)) in result.best_fits.iter().enumerate() {
        eprintln!(
            "{name}: family {:?}, beta_hat = {:.3} (true {:.3}), cv_hat = {:.3}",
            fit.family, fit.beta_hat, betas[i], fit.cv_hat
        );
        params_ok &= (fit.beta_hat - betas[i]).abs() <= 0.10 * betas[i];
        params_ok &= (fit.cv_hat - cv).abs() <= 0.15 * cv;
        if fit.family == JumpFamily::Lognormal {
            lognormal_wins += 1;
        }
    }
    let family_ok = lognormal_wins as f64 >= 0.98 * n_inf as f64;
    assert!(report(
        5,
        "calibration round-trip: grid argmin, beta/CV recovery, family selection",
        grid_ok && params_ok && family_ok
    ));
}

#[test]
fn criterion_6_invariant_suite() {
    let mut pass = true;

    // First-place probabilities partition time.
    let mut sc = reference_scenario();
    sc.run = RunSection {
        horizon_days: 2e4,
        burnin_frac: 0.2,
        replicas: 4,
        seed: 123,
    };
    let report_run = run_scenario(&sc, false, None).unwrap();
    let pi1_sum: f64 = report_run.influencers.iter().map(|m| m.pi1).sum();
    eprintln!("sum pi1 = {pi1_sum:.9}");
    pass &= (pi1_sum - 1.0).abs() <= 1e-6;

    // Positivity and finiteness over >= 1e6 events, plus exact
    // occupation-time accounting on the same trajectory.
    let sys = SystemParams::new(1.0 / 64.0, 0.6, 0.01, 0.25).unwrap();
    // Small lambda1: with theta + phi = 0.9 the posting-rate feedback
    // is strong, and a large coefficient sends the stationary rate
    // orders of magnitude above lambda0.
    let inf = InfluencerParams {
        beta: 1.0,
        lambda0: 4.0,
        lambda1: 0.01,
        phi: 0.3,
        cv: 4.0,
        v_family: JumpFamily::Lognormal,
    };
    let log = simulate_trajectory(&sys, &inf, 2.4e5, 31).unwrap();
    eprintln!("events = {}", log.events.len());
    pass &= log.events.len() >= 1_000_000;
    pass &= log.events.iter().all(|e| {
        e.x_before >= 0.0
            && e.jump > 0.0
            && e.x_after > e.x_before
            && e.x_after.is_finite()
    });
    let edges = popdyn::sim::log_edges(1e-4, 1e8, 256);
    let hist = occupation_histogram(&log, &edges, sys.gamma, 0.1 * log.horizon);
    let rel = (hist.total() - hist.window).abs() / hist.window;
    eprintln!("occupation mass error = {rel:.2e}");
    pass &= rel <= 1e-9;

    // Byte-exact seed reproducibility of a joint run.
    let a = simulate_population(&sys, &sc.influencers, 500.0, 0.1, 99, 0).unwrap();
    let b = simulate_population(&sys, &sc.influencers, 500.0, 0.1, 99, 0).unwrap();
    pass &= serde_json::to_vec(&a).unwrap() == serde_json::to_vec(&b).unwrap();

    // Solver output is a probability density.
    let ref_sys = sc.system_params().unwrap();
    let ref_inf = &sc.influencers[0];
    let grid = default_grid(&ref_sys, ref_inf);
    let sol = solve_stationary(&ref_sys, ref_inf, &grid, 1e-8, 1).unwrap();
    pass &= sol.density.f.iter().all(|&f| f >= 0.0);
    pass &= (sol.density.mass() - 1.0).abs() <= 1e-9;

    // Constant-intensity posting is Poisson: dispersion index near 1.
    let hom = InfluencerParams {
        lambda1: 0.0,
        phi: 0.0,
        ..inf.clone()
    };
    let hom_sys = SystemParams::new(1.0 / 64.0, 0.6, 0.01, 0.0).unwrap();
    let log = simulate_trajectory(&hom_sys, &hom, 2e4, 77).unwrap();
    let posts: Vec<PostRecord> = log
        .events
        .iter()
        .map(|e| PostRecord {
            timestamp: e.time,
            likes: e.jump,
        })
        .collect();
    let ds = PostDataset::new("hom", posts).unwrap();
    let d = dispersion_index(&ds, 1.0).unwrap();
    eprintln!("dispersion index = {d:.3}");
    pass &= (d - 1.0).abs() <= 0.1;

    assert!(report(6, "invariant suite", pass));
}

#[test]
fn criterion_7_sensitivity_trends() {
    let mut base = reference_scenario();
    base.run = RunSection {
        horizon_days: 5e4,
        burnin_frac: 0.2,
        replicas: 4,
        seed: 777,
    };

    let top_pi1 = |base: &Scenario, param: &str, values: &[f64]| -> Vec<f64> {
        let (rows, failures) = sweep(base, param, values, None).unwrap();
        assert!(failures.is_empty(), "{failures:?}");
        values
            .iter()
            .map(|&v| {
                rows.iter()
                    .find(|r| r.value == v && r.influencer == 0)
                    .unwrap()
                    .pi1
            })
            .collect()
    };

    // Slower decay concentrates leadership.
    let by_gamma = top_pi1(&base, "system.gamma", &[1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0]);
    // Heavier jump tails level the field.
    let by_cv = top_pi1(&base, "shared.cv", &[1.0, 2.0, 4.0, 8.0]);
    // Stronger popularity feedback favours the front-runner.
    let by_theta = top_pi1(&base, "shared.theta", &[0.2, 0.4, 0.6, 0.8]);

    eprintln!("pi1 vs 1/gamma: {by_gamma:?}");
    eprintln!("pi1 vs cv:      {by_cv:?}");
    eprintln!("pi1 vs theta:   {by_theta:?}");
    let pass = trend_ok(&by_gamma, true) && trend_ok(&by_cv, false) && trend_ok(&by_theta, true);
    assert!(report(7, "sensitivity trends in gamma, CV, theta", pass));
}
