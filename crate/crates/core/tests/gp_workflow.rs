use besselk::covariance::{matern, LocationSet, MaternParams};
use besselk::gp::optim::SimplexOptions;
use besselk::gp::{
    default_start, fit_mle, log_likelihood, mspe, predict, simulate, synthetic_locations, Observations, ParamBounds,
};
use besselk::special::QuadratureConfig;

fn cfg() -> QuadratureConfig {
    QuadratureConfig::default()
}

#[test]
fn likelihood_prefers_the_truth() {
    let locs = synthetic_locations(100, 1).unwrap();
    let truth = MaternParams::new(1.0, 0.1, 0.5).unwrap();
    let wide = MaternParams::new(1.0, 0.15, 0.5).unwrap();
    let wins = (0..100)
        .filter(|&seed| {
            let obs = simulate(&locs, &truth, seed, &cfg(), 32).unwrap();
            log_likelihood(&obs, &truth, &cfg(), 32).unwrap() > log_likelihood(&obs, &wide, &cfg(), 32).unwrap()
        })
        .count();
    assert!(wins >= 90, "truth won {wins} of 100");
}

#[test]
fn empirical_covariance_matches_kernel() {
    // Three points at distances 0.05, 0.1 and 0.15 from the first.
    let locs = LocationSet::new(vec![[0.0, 0.0], [0.05, 0.0], [0.0, 0.1], [0.15, 0.0]]).unwrap();
    let theta = MaternParams::new(2.0, 0.1, 1.2).unwrap();
    let reps = 4000;
    let mut sums = [0.0; 4];
    for seed in 0..reps {
        let z = simulate(&locs, &theta, seed, &cfg(), 4).unwrap().z;
        for k in 0..4 {
            sums[k] += z[0] * z[k];
        }
    }
    for (k, r) in [0.0, 0.05, 0.1, 0.15].into_iter().enumerate() {
        let emp = sums[k] / reps as f64;
        let c = matern(r, &theta, &cfg()).unwrap();
        // Var(z0 zk) <= σ⁴ (1 + ρ²) <= 2σ⁴; allow five standard errors.
        let se = (2.0 * 4.0 / reps as f64).sqrt();
        assert!((emp - c).abs() < 5.0 * se, "r={r}: {emp} vs {c}");
    }
}

#[test]
fn scaled_data_scales_the_variance() {
    let locs = synthetic_locations(144, 3).unwrap();
    let theta = MaternParams::new(1.0, 0.1, 0.8).unwrap();
    let obs = simulate(&locs, &theta, 4, &cfg(), 64).unwrap();
    let k = 3.0;
    let scaled = Observations::new(obs.locs.clone(), obs.z.iter().map(|v| v * k).collect()).unwrap();
    let opts = SimplexOptions::default();
    let a = fit_mle(&obs, &default_start(), &ParamBounds::default(), &cfg(), 64, &opts).unwrap();
    let b = fit_mle(&scaled, &default_start(), &ParamBounds::default(), &cfg(), 64, &opts).unwrap();
    let ratio = b.theta_hat.sigma_sq / (k * k * a.theta_hat.sigma_sq);
    assert!((ratio - 1.0).abs() < 0.05, "sigma_sq ratio {ratio}");
    assert!((b.theta_hat.beta / a.theta_hat.beta - 1.0).abs() < 0.05);
    assert!((b.theta_hat.nu / a.theta_hat.nu - 1.0).abs() < 0.05);
}

#[test]
fn fitting_is_reproducible() {
    let locs = synthetic_locations(64, 8).unwrap();
    let obs = simulate(&locs, &MaternParams::new(1.0, 0.2, 0.5).unwrap(), 2, &cfg(), 16).unwrap();
    let run = || fit_mle(&obs, &default_start(), &ParamBounds::default(), &cfg(), 16, &SimplexOptions::default()).unwrap();
    let (a, b) = (run(), run());
    assert_eq!(a, b);
    assert!(a.converged && a.iterations >= 1 && a.llh.is_finite());
}

#[test]
fn kriging_beats_the_zero_predictor() {
    let all = synthetic_locations(500, 6).unwrap();
    let theta = MaternParams::new(1.0, 0.1, 0.5).unwrap();
    let field = simulate(&all, &theta, 12, &cfg(), 64).unwrap();
    let test_idx: Vec<usize> = (0..500).filter(|i| i % 5 == 0).collect();
    let train_idx: Vec<usize> = (0..500).filter(|i| i % 5 != 0).collect();
    let train = Observations::new(all.select(&train_idx), train_idx.iter().map(|&i| field.z[i]).collect()).unwrap();
    let truth: Vec<f64> = test_idx.iter().map(|&i| field.z[i]).collect();
    let fit = fit_mle(&train, &default_start(), &ParamBounds::default(), &cfg(), 64, &SimplexOptions::default()).unwrap();
    let pred = predict(&train, &fit.theta_hat, &all.select(&test_idx), &cfg(), 64).unwrap();
    let zero = mspe(&vec![0.0; truth.len()], &truth).unwrap();
    let krig = mspe(&pred, &truth).unwrap();
    assert!(krig < zero, "kriging {krig} vs zero predictor {zero}");
}
