mod common;

use common::rel_diff;
use tcomp::completion::gog_run;
use tcomp::experiments::{
    generate_odeco, perturbed_init_trial, run_trial, sample_size, summarize, sweep, trial_seed,
    Mu0, SweepSpec, TrialConfig, TrialSpec, SUCCESS_TOL,
};
use tcomp::linalg::singular_values;
use tcomp::observations::ObservationSet;
use tcomp::rng::mix;
use tcomp::spectral::spectral_frames;
use tcomp::tensor::{multilinear_product, Mode};

#[test]
fn odeco_structure() {
    for (d, r, seed) in [(6, 1, 1), (8, 3, 2), (12, 2, 3), (5, 5, 4)] {
        let g = generate_odeco(d, r, seed).unwrap();
        assert_eq!(g.tensor.multilinear_ranks(1e-10).unwrap(), [r, r, r]);
        let rebuilt = multilinear_product(
            &g.core,
            g.factors.x.matrix(),
            g.factors.y.matrix(),
            g.factors.z.matrix(),
        )
        .unwrap();
        assert!(rebuilt.sub(&g.tensor).unwrap().max_norm() <= 1e-12);
        for mode in [Mode::One, Mode::Two, Mode::Three] {
            let s = singular_values(&g.tensor.unfold(mode).matrix).unwrap();
            for k in 0..r {
                assert!(rel_diff(s[k], d as f64) <= 1e-12, "d={d} r={r} {mode:?}");
            }
            assert!(s[r..].iter().all(|&v| v <= 1e-10 * d as f64));
        }
        assert!(rel_diff(g.tensor.spectral_lower_bound(50, seed), d as f64) <= 1e-6);
    }
    assert!(generate_odeco(4, 5, 0).is_err());
    assert!(generate_odeco(4, 0, 0).is_err());
}

#[test]
fn odeco_is_deterministic_per_seed() {
    let a = generate_odeco(10, 2, 77).unwrap();
    let b = generate_odeco(10, 2, 77).unwrap();
    let c = generate_odeco(10, 2, 78).unwrap();
    assert_eq!(a.tensor, b.tensor);
    assert_ne!(a.tensor, c.tensor);
}

#[test]
fn truth_coherence_is_small() {
    let small = (0..100)
        .filter(|&s| {
            let mu = generate_odeco(30, 2, s).unwrap().coherence();
            assert!(mu.is_finite() && mu >= 1.0);
            mu < 10.0
        })
        .count();
    assert!(small >= 95, "{small}/100");
}

#[test]
fn large_alpha_recovers() {
    let config = TrialConfig::default();
    let wins = (0..10)
        .filter(|&s| run_trial(20, 1, 20.0, s, &config).unwrap().success)
        .count();
    assert!(wins >= 9, "{wins}/10");
}

#[test]
fn tiny_alpha_fails() {
    let config = TrialConfig::default();
    for seed in 0..3 {
        let rec = run_trial(20, 2, 0.1, seed, &config).unwrap();
        assert_eq!(rec.n, sample_size(20, 2, 0.1));
        assert!(rec.n < 2 * 20);
        assert!(!rec.success);
        assert!(
            rec.rel_error > 0.9 && rec.rel_error < 1.1,
            "{}",
            rec.rel_error
        );
    }
}

#[test]
fn record_bookkeeping() {
    let config = TrialConfig::default();
    let (d, r, alpha, seed) = (12, 2, 6.0, 5);
    let rec = run_trial(d, r, alpha, seed, &config).unwrap();
    assert_eq!(rec.n, sample_size(d, r, alpha));
    assert_eq!(rec.success, rec.rel_error <= SUCCESS_TOL);
    assert_eq!(rec.runtime_ms, 0.0);

    // Rebuild the initialization independently.
    let truth = generate_odeco(d, r, mix(&[seed, 0x7E57_0001])).unwrap();
    let obs =
        ObservationSet::sample_uniform(&truth.tensor, rec.n, mix(&[seed, 0x7E57_0002])).unwrap();
    let init = spectral_frames(&obs, [r; 3])
        .unwrap()
        .trim(truth.coherence())
        .unwrap();
    assert_eq!(rec.dp_init, init.distance(&truth.factors).unwrap());

    let mut solver = config.solver;
    solver.mu0 = truth.coherence();
    let report = gog_run(&obs, [r; 3], &solver, &init).unwrap();
    assert_eq!(rec.iterations, report.iterations());
    let err = report
        .reconstruction()
        .unwrap()
        .sub(&truth.tensor)
        .unwrap()
        .frobenius_norm()
        / truth.tensor.frobenius_norm();
    assert_eq!(rec.rel_error, err);
}

#[test]
fn init_only_spends_no_iterations() {
    let out = TrialSpec::with_alpha(15, 2, 8.0, 3)
        .unwrap()
        .init_only()
        .run(&TrialConfig::default())
        .unwrap();
    assert_eq!(out.record.iterations, 0);
    assert!(out.record.rel_error > 0.0 && out.record.rel_error < 1.0);
    let full = run_trial(15, 2, 8.0, 3, &TrialConfig::default()).unwrap();
    assert_eq!(full.dp_init, out.record.dp_init);
}

#[test]
fn rejects_bad_arguments() {
    let c = TrialConfig::default();
    assert!(run_trial(10, 1, 0.0, 0, &c).is_err());
    assert!(run_trial(10, 1, -1.0, 0, &c).is_err());
    assert!(run_trial(10, 11, 5.0, 0, &c).is_err());
    assert!(perturbed_init_trial(10, 1, 5.0, -0.5, 0, &c).is_err());
    let fixed = TrialConfig {
        mu0: Mu0::Fixed(0.5),
        ..c
    };
    assert!(run_trial(10, 1, 5.0, 0, &fixed).is_err());
}

#[test]
fn trials_are_reproducible() {
    let c = TrialConfig::default();
    let a = run_trial(12, 2, 5.0, 9, &c).unwrap();
    let b = run_trial(12, 2, 5.0, 9, &c).unwrap();
    assert_eq!(a.rel_error.to_bits(), b.rel_error.to_bits());
    assert_eq!(a, b);
}

#[test]
fn zero_sigma_is_a_plain_trial() {
    let c = TrialConfig::default();
    for seed in 0..3 {
        assert_eq!(
            perturbed_init_trial(12, 2, 6.0, 0.0, seed, &c).unwrap(),
            run_trial(12, 2, 6.0, seed, &c).unwrap()
        );
    }
}

#[test]
fn init_distance_grows_with_sigma() {
    let c = TrialConfig::default();
    let mean_dp = |sigma: f64| -> f64 {
        (0..10)
            .map(|s| {
                TrialSpec::with_alpha(30, 2, 8.0, s)
                    .unwrap()
                    .sigma(sigma)
                    .init_only()
                    .run(&c)
                    .unwrap()
                    .record
                    .dp_init
            })
            .sum::<f64>()
            / 10.0
    };
    let levels: Vec<f64> = [0.0, 0.05, 0.2, 10.0].iter().map(|&s| mean_dp(s)).collect();
    for w in levels.windows(2) {
        assert!(w[1] > w[0], "{levels:?}");
    }
}

#[test]
fn huge_sigma_lowers_success() {
    let c = TrialConfig::default();
    let rate = |sigma: f64| {
        (0..10)
            .filter(|&s| {
                perturbed_init_trial(30, 2, 8.0, sigma, s, &c)
                    .unwrap()
                    .success
            })
            .count()
    };
    let (clean, noisy) = (rate(0.0), rate(10.0));
    assert!(noisy < clean, "σ=0: {clean}/10, σ=10: {noisy}/10");
}

#[test]
fn single_trial_cells_reduce_to_run_trial() {
    let spec = SweepSpec {
        d: 10,
        ranks: vec![1, 2],
        alphas: vec![3.0, 6.0],
        trials: 1,
        seed: 4,
        sigma: 0.0,
        threads: Some(1),
    };
    let c = TrialConfig::default();
    let result = sweep(&spec, &c).unwrap();
    assert_eq!(result.records.len(), 4);
    assert_eq!(result.cells.len(), 4);
    let mut k = 0;
    for &r in &spec.ranks {
        for (j, &alpha) in spec.alphas.iter().enumerate() {
            let expect = run_trial(10, r, alpha, trial_seed(4, 10, r, j, 0), &c).unwrap();
            assert_eq!(result.records[k], expect);
            assert_eq!(
                result.cells[k].success_rate,
                if expect.success { 1.0 } else { 0.0 }
            );
            k += 1;
        }
    }
}

#[test]
fn sweep_is_independent_of_thread_count() {
    let mut spec = SweepSpec {
        d: 10,
        ranks: vec![1],
        alphas: vec![2.0, 5.0],
        trials: 3,
        seed: 11,
        sigma: 0.0,
        threads: Some(1),
    };
    let c = TrialConfig::default();
    let serial = sweep(&spec, &c).unwrap();
    spec.threads = None;
    let pooled = sweep(&spec, &c).unwrap();
    spec.threads = Some(3);
    let three = sweep(&spec, &c).unwrap();
    assert_eq!(serial, pooled);
    assert_eq!(serial, three);
    for (i, rec) in serial.records.iter().enumerate() {
        assert_eq!(rec.trial, i % 3);
    }
}

#[test]
fn sweep_rejects_empty_grids() {
    let c = TrialConfig::default();
    let base = SweepSpec {
        d: 8,
        ranks: vec![1],
        alphas: vec![2.0],
        trials: 1,
        seed: 0,
        sigma: 0.0,
        threads: Some(1),
    };
    assert!(sweep(
        &SweepSpec {
            ranks: vec![],
            ..base.clone()
        },
        &c
    )
    .is_err());
    assert!(sweep(
        &SweepSpec {
            alphas: vec![],
            ..base.clone()
        },
        &c
    )
    .is_err());
    assert!(sweep(
        &SweepSpec {
            trials: 0,
            ..base.clone()
        },
        &c
    )
    .is_err());
    assert!(sweep(
        &SweepSpec {
            threads: Some(0),
            ..base
        },
        &c
    )
    .is_err());
}

#[test]
fn success_rate_rises_with_alpha() {
    let spec = SweepSpec {
        d: 30,
        ranks: vec![2],
        alphas: vec![1.0, 2.0, 4.0, 8.0],
        trials: 10,
        seed: 2024,
        sigma: 0.0,
        threads: None,
    };
    let result = sweep(&spec, &TrialConfig::default()).unwrap();
    let rates: Vec<f64> = result.cells.iter().map(|c| c.success_rate).collect();
    let inversions = rates.windows(2).filter(|w| w[1] < w[0]).count();
    assert!(inversions <= 1, "{rates:?}");
    assert!(rates[3] > rates[0], "{rates:?}");
    for cell in &result.cells {
        assert!((0.0..=1.0).contains(&cell.success_rate));
    }
    let first = summarize(&result.records[..10]);
    assert_eq!(first, result.cells[0]);
}
