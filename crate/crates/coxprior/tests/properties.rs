//! Cross-module properties on seeded synthetic data: serialization
//! round trips, likelihood symmetries, tie-policy agreement, prior
//! domination, and sampler/quadrature consistency.

use coxprior::cox::{self, PartialLikelihood, TiesPolicy};
use coxprior::dataset::{self, Dataset, Group, SimulationConfig, SurvivalRecord};
use coxprior::inference::{self, QuadratureConfig, SamplerConfig};
use coxprior::priors::{self, LogHrPrior};

fn sim(seed: u64, n_crt: usize, n_hfrt: usize, log_hr: f64, censor: f64) -> Dataset {
    dataset::simulate(&SimulationConfig {
        n_crt,
        n_hfrt,
        true_log_hr: log_hr,
        baseline_shape: 1.3,
        baseline_scale: 14.0,
        censor_rate: censor,
        seed,
    })
    .expect("valid simulation config")
}

#[test]
fn csv_round_trip_preserves_every_record() {
    for seed in 0..20 {
        let data = sim(seed, 5 + (seed as usize % 9), 6 + (seed as usize % 17), -0.8 + 0.09 * seed as f64, 0.03 * (seed % 10) as f64);
        let text = dataset::write_csv(&data);
        let back = dataset::parse_csv(&text).expect("own output parses");
        assert!(back.warnings.is_empty());
        assert_eq!(back.dataset.records(), data.records(), "seed {seed}");
    }
}

#[test]
fn risk_sets_shrink_along_event_times_and_contain_self() {
    let data = sim(3, 10, 12, 0.4, 0.2);
    let records = data.records();
    let mut event_indices: Vec<usize> = (0..records.len()).filter(|&i| records[i].event).collect();
    event_indices.sort_by(|&a, &b| records[a].time.total_cmp(&records[b].time));
    let mut previous_len = usize::MAX;
    for &i in &event_indices {
        let set = dataset::risk_set(&data, i).expect("event index");
        assert!(set.contains(&i));
        for &j in &set {
            assert!(records[j].time >= records[i].time);
        }
        assert!(set.len() <= previous_len, "risk sets must not grow over time");
        previous_len = set.len();
    }
}

#[test]
fn tie_policies_agree_on_tie_free_data() {
    for seed in 0..10 {
        let data = sim(100 + seed, 8, 11, 0.3, 0.15);
        let breslow = PartialLikelihood::new(&data, TiesPolicy::Breslow);
        let efron = PartialLikelihood::new(&data, TiesPolicy::Efron);
        for i in -5..=5 {
            let beta = 0.37 * i as f64;
            assert!(
                (breslow.log_likelihood(beta) - efron.log_likelihood(beta)).abs() <= 1e-12,
                "seed {seed}, beta {beta}"
            );
            assert!((breslow.score(beta) - efron.score(beta)).abs() <= 1e-12);
            assert!(
                (breslow.observed_information(beta) - efron.observed_information(beta)).abs()
                    <= 1e-12
            );
        }
    }
}

#[test]
fn relabeling_negates_the_log_likelihood_argument() {
    for seed in 0..10 {
        let data = sim(200 + seed, 7, 13, -0.4, 0.1);
        let swapped = data.swap_groups();
        for ties in [TiesPolicy::Breslow, TiesPolicy::Efron] {
            let pl = PartialLikelihood::new(&data, ties);
            let pl_swapped = PartialLikelihood::new(&swapped, ties);
            for i in -4..=4 {
                let beta = 0.5 * i as f64;
                assert!(
                    (pl.log_likelihood(beta) - pl_swapped.log_likelihood(-beta)).abs() <= 1e-11,
                    "seed {seed}, ties {ties:?}, beta {beta}"
                );
            }
        }
    }
}

#[test]
fn mle_is_a_stationary_point() {
    for seed in 0..12 {
        let data = sim(300 + seed, 9, 14, 0.25 * (seed % 5) as f64 - 0.5, 0.2);
        let pl = PartialLikelihood::new(&data, TiesPolicy::Breslow);
        let m = match pl.mle() {
            Ok(m) => m,
            Err(cox::CoxError::Separation) => continue,
        };
        assert!(m.converged, "seed {seed}");
        assert!(pl.score(m.beta_hat).abs() <= 1e-8, "seed {seed}");
        assert!(m.standard_error > 0.0);
    }
}

#[test]
fn monotone_likelihood_is_reported_as_separation() {
    // Every HFRT subject dies before any CRT subject leaves the risk
    // set, so the likelihood increases in beta without bound.
    let records = vec![
        SurvivalRecord::new(Group::Hfrt, 1.0, true).unwrap(),
        SurvivalRecord::new(Group::Hfrt, 2.0, true).unwrap(),
        SurvivalRecord::new(Group::Hfrt, 3.0, true).unwrap(),
        SurvivalRecord::new(Group::Crt, 9.0, true).unwrap(),
        SurvivalRecord::new(Group::Crt, 10.0, false).unwrap(),
    ];
    let data = Dataset::new(records, "constructed").unwrap();
    assert!(matches!(
        cox::mle(&data, TiesPolicy::Breslow),
        Err(cox::CoxError::Separation)
    ));
    // The mirrored dataset separates in the other direction.
    assert!(matches!(
        cox::mle(&data.swap_groups(), TiesPolicy::Efron),
        Err(cox::CoxError::Separation)
    ));
}

#[test]
fn quadrature_respects_relabel_antisymmetry_for_symmetric_priors() {
    let config = QuadratureConfig::default();
    for seed in 0..6 {
        let data = sim(400 + seed, 8, 10, 0.6, 0.15);
        let swapped = data.swap_groups();
        for sigma in [0.5, 1.0, 2.0] {
            let prior = LogHrPrior::custom(0.0, sigma).unwrap();
            let s = inference::quadrature_posterior(&data, &prior, TiesPolicy::Breslow, &config)
                .unwrap();
            let s_swapped =
                inference::quadrature_posterior(&swapped, &prior, TiesPolicy::Breslow, &config)
                    .unwrap();
            assert!(
                (s.pr_hr_gt_1 + s_swapped.pr_hr_gt_1 - 1.0).abs() <= 1e-6,
                "seed {seed}, sigma {sigma}"
            );
            assert!(
                (s.median_hr * s_swapped.median_hr - 1.0).abs() <= 1e-4,
                "medians should be reciprocal, got {} and {}",
                s.median_hr,
                s_swapped.median_hr
            );
        }
    }
}

#[test]
fn asymmetric_priors_reflect_under_joint_relabel() {
    // Swapping the arms and negating the prior mean must mirror the
    // posterior exactly.
    let config = QuadratureConfig::default();
    let data = sim(77, 9, 16, 0.8, 0.1);
    let swapped = data.swap_groups();
    for (mu, sigma) in [(0.431, 0.30), (0.095, 0.18), (0.068, 0.093)] {
        let prior = LogHrPrior::custom(mu, sigma).unwrap();
        let mirrored = LogHrPrior::custom(-mu, sigma).unwrap();
        let s = inference::quadrature_posterior(&data, &prior, TiesPolicy::Breslow, &config)
            .unwrap();
        let s_mirrored =
            inference::quadrature_posterior(&swapped, &mirrored, TiesPolicy::Breslow, &config)
                .unwrap();
        assert!((s.pr_hr_gt_1 + s_mirrored.pr_hr_gt_1 - 1.0).abs() <= 1e-6);
        assert!((s.median_hr * s_mirrored.median_hr - 1.0).abs() <= 1e-4);
        assert!((s.hr_2_5 * s_mirrored.hr_97_5 - 1.0).abs() <= 1e-3);
    }
}

#[test]
fn tighter_priors_pull_the_posterior_median_monotonically() {
    // The data push the hazard ratio below one while every prior in
    // the ladder centers on the same harmful median, so each drop in
    // sigma must move the posterior median toward the prior median.
    let data = sim(55, 12, 14, -0.6, 0.1);
    let prior_median = 0.431f64.exp();
    let mut last_distance = f64::INFINITY;
    for sigma in [1.0, 0.3, 0.1, 0.03] {
        let prior = LogHrPrior::custom(0.431, sigma).unwrap();
        let s = inference::quadrature_posterior(
            &data,
            &prior,
            TiesPolicy::Breslow,
            &QuadratureConfig::default(),
        )
        .unwrap();
        let distance = (s.median_hr - prior_median).abs();
        assert!(
            distance < last_distance,
            "sigma {sigma}: median {} did not move toward {prior_median}",
            s.median_hr
        );
        last_distance = distance;
    }
}

#[test]
fn sampler_tracks_quadrature_across_priors() {
    let data = sim(66, 10, 18, 0.5, 0.2);
    let sampler = SamplerConfig {
        chains: 4,
        iterations: 2500,
        warmup: 1500,
        seed: 9,
        ..SamplerConfig::default()
    };
    for label in ["chatgpt-informative", "gemini-noninformative", "grok-informative"] {
        let prior = priors::preset(label).unwrap();
        let q = inference::quadrature_posterior(
            &data,
            &prior,
            TiesPolicy::Efron,
            &QuadratureConfig::default(),
        )
        .unwrap();
        let run = inference::sample_posterior(&data, &prior, TiesPolicy::Efron, &sampler).unwrap();
        let m = run.summary().unwrap();
        let d = m.diagnostics.expect("mcmc carries diagnostics");
        assert!(d.rhat < 1.01, "{label}: rhat {}", d.rhat);
        assert!((q.pr_hr_gt_1 - m.pr_hr_gt_1).abs() <= 0.02, "{label}");
        assert!((q.median_hr / m.median_hr - 1.0).abs() <= 0.03, "{label}");
    }
}

#[test]
fn preset_quantiles_are_reciprocal_for_centered_priors() {
    for label in [
        "chatgpt-noninformative",
        "gemini-noninformative",
        "grok-noninformative",
    ] {
        let prior = priors::preset(label).unwrap();
        for p in [0.025, 0.1, 0.25, 0.4] {
            let lo = priors::hr_quantile(&prior, p).unwrap();
            let hi = priors::hr_quantile(&prior, 1.0 - p).unwrap();
            let product = lo * hi;
            assert!(
                (product - 1.0).abs() <= 1e-9 * hi.max(1.0),
                "{label} at {p}: {lo} * {hi} = {product}"
            );
        }
    }
}
