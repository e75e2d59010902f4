mod common;

use common::{gaussian_matrix, random_core, random_tensor};
use proptest::prelude::*;
use tcomp::observations::{Observation, ObservationSet};
use tcomp::rng::Stream;
use tcomp::tensor::{multilinear_product, CoreTensor, Tensor3};

#[test]
fn singleton_tensor_repeats_its_entry() {
    let t = Tensor3::new([1, 1, 1], vec![4.25]).unwrap();
    let obs = ObservationSet::sample_uniform(&t, 7, 3).unwrap();
    assert_eq!(obs.len(), 7);
    assert!(obs
        .samples()
        .iter()
        .all(|s| s.index == [0, 0, 0] && s.value == 4.25));
}

#[test]
fn zero_samples_rejected() {
    let t = Tensor3::zeros([2, 2, 2]);
    assert!(ObservationSet::sample_uniform(&t, 0, 1).is_err());
    assert!(ObservationSet::new([2, 2, 2], vec![]).is_err());
}

#[test]
fn out_of_range_index_rejected() {
    let s = Observation {
        index: [0, 2, 0],
        value: 1.0,
    };
    assert!(ObservationSet::new([2, 2, 2], vec![s]).is_err());
}

#[test]
fn seeded_sampling_is_bitwise_reproducible() {
    let t = random_tensor([4, 5, 3], 1);
    let a = ObservationSet::sample_uniform(&t, 200, 99).unwrap();
    let b = ObservationSet::sample_uniform(&t, 200, 99).unwrap();
    assert_eq!(a, b);
    let c = ObservationSet::sample_uniform(&t, 200, 100).unwrap();
    assert_ne!(a, c);
}

#[test]
fn index_frequencies_are_uniform() {
    // Multinomial with 27 equiprobable cells: each count has mean n/27 and
    // standard deviation sqrt(n p (1-p)).
    let n = 1_000_000;
    let t = Tensor3::zeros([3, 3, 3]);
    let obs = ObservationSet::sample_uniform(&t, n, 2024).unwrap();
    let mut counts = [0usize; 27];
    for s in obs.samples() {
        counts[(s.index[0] * 3 + s.index[1]) * 3 + s.index[2]] += 1;
    }
    let p = 1.0 / 27.0;
    let mean = n as f64 * p;
    let sd = (n as f64 * p * (1.0 - p)).sqrt();
    for (cell, &c) in counts.iter().enumerate() {
        assert!(
            (c as f64 - mean).abs() <= 3.0 * sd,
            "cell {cell}: {c} vs {mean}"
        );
    }
}

#[test]
fn projection_reads_stored_values() {
    let t = random_tensor([3, 4, 2], 5);
    let obs = ObservationSet::sample_uniform(&t, 50, 6).unwrap();
    let got = obs.project(&t).unwrap();
    let stored: Vec<f64> = obs.values().collect();
    assert_eq!(got, stored);
    assert!(obs
        .project(&Tensor3::zeros([3, 4, 2]))
        .unwrap()
        .iter()
        .all(|&v| v == 0.0));
    assert!(obs.project(&Tensor3::zeros([3, 4, 3])).is_err());
}

#[test]
fn projection_energy_matches_materialized_sum() {
    let a = random_tensor([2, 2, 2], 7);
    let obs = ObservationSet::sample_uniform(&a, 10, 8).unwrap();
    // P_Ω A = Σ_i P_{ω_i} A as a dense tensor; duplicates accumulate.
    let mut dense = Tensor3::zeros([2, 2, 2]);
    for s in obs.samples() {
        let [i, j, k] = s.index;
        dense.add_at(i, j, k, a.get(i, j, k));
    }
    // With multiplicity m at a cell, ⟨P_Ω A, A⟩ = Σ_ω m A(ω)² = Σ_i A(ω_i)².
    let materialized = dense.inner(&a).unwrap();
    let via_project: f64 = obs.project(&a).unwrap().iter().map(|v| v * v).sum();
    assert!((materialized - via_project).abs() <= 1e-12 * via_project);
}

#[test]
fn tucker_evaluation_matches_dense_path() {
    let dims = [4, 5, 3];
    let core = random_core([2, 3, 2], 1);
    let mut s = Stream::new(2);
    let (x, y, z) = (
        gaussian_matrix(&mut s, 4, 2),
        gaussian_matrix(&mut s, 5, 3),
        gaussian_matrix(&mut s, 3, 2),
    );
    let dense = multilinear_product(&core, &x, &y, &z).unwrap();
    let obs = ObservationSet::sample_uniform(&Tensor3::zeros(dims), 60, 3).unwrap();
    let fast = obs.evaluate_tucker_at(&x, &y, &z, &core).unwrap();
    let slow = obs.project(&dense).unwrap();
    for (a, b) in fast.iter().zip(&slow) {
        assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
    }
}

#[test]
fn tucker_evaluation_zero_core_and_identity_factors() {
    let dims = [3, 3, 3];
    let obs = ObservationSet::sample_uniform(&Tensor3::zeros(dims), 20, 4).unwrap();
    let id = nalgebra::DMatrix::identity(3, 3);
    let zero = CoreTensor::zeros([3, 3, 3]);
    assert!(obs
        .evaluate_tucker_at(&id, &id, &id, &zero)
        .unwrap()
        .iter()
        .all(|&v| v == 0.0));
    let core = random_core([3, 3, 3], 5);
    let got = obs.evaluate_tucker_at(&id, &id, &id, &core).unwrap();
    for (v, s) in got.iter().zip(obs.samples()) {
        let [i, j, k] = s.index;
        assert!((v - core.get(i, j, k)).abs() < 1e-15);
    }
    assert!(obs
        .evaluate_tucker_at(&nalgebra::DMatrix::identity(2, 2), &id, &id, &core)
        .is_err());
}

#[test]
fn text_format_is_one_based() {
    let obs = ObservationSet::new(
        [2, 3, 4],
        vec![
            Observation {
                index: [0, 0, 0],
                value: 1.5,
            },
            Observation {
                index: [1, 2, 3],
                value: -2.0,
            },
        ],
    )
    .unwrap();
    let mut buf = Vec::new();
    obs.write_text(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "2 3 4 2");
    assert!(lines[1].starts_with("1 1 1 "));
    assert!(lines[2].starts_with("2 3 4 "));
    assert_eq!(ObservationSet::read_text(text.as_bytes()).unwrap(), obs);
}

#[test]
fn text_rejects_count_mismatch_and_zero_index() {
    assert!(ObservationSet::read_text("2 2 2 2\n1 1 1 0.5\n".as_bytes()).is_err());
    assert!(ObservationSet::read_text("2 2 2 1\n0 1 1 0.5\n".as_bytes()).is_err());
}

proptest! {
    #[test]
    fn projection_is_linear(seed in any::<u64>(), s in -4.0f64..4.0) {
        let a = random_tensor([3, 2, 3], seed);
        let b = random_tensor([3, 2, 3], seed ^ 0xFF);
        let obs = ObservationSet::sample_uniform(&a, 25, seed).unwrap();
        let lhs = obs.project(&a.scaled(s).add(&b).unwrap()).unwrap();
        let pa = obs.project(&a).unwrap();
        let pb = obs.project(&b).unwrap();
        for i in 0..lhs.len() {
            prop_assert!((lhs[i] - (s * pa[i] + pb[i])).abs() <= 1e-12 * (1.0 + lhs[i].abs()));
        }
    }

    #[test]
    fn samples_stay_in_range(d1 in 1usize..6, d2 in 1usize..6, d3 in 1usize..6, n in 1usize..200, seed in any::<u64>()) {
        let obs = ObservationSet::sample_uniform(&Tensor3::zeros([d1, d2, d3]), n, seed).unwrap();
        prop_assert_eq!(obs.len(), n);
        for s in obs.samples() {
            prop_assert!(s.index[0] < d1 && s.index[1] < d2 && s.index[2] < d3);
        }
    }

    #[test]
    fn text_roundtrip(seed in any::<u64>(), n in 1usize..40) {
        let t = random_tensor([3, 4, 2], seed);
        let obs = ObservationSet::sample_uniform(&t, n, seed).unwrap();
        let mut buf = Vec::new();
        obs.write_text(&mut buf).unwrap();
        prop_assert_eq!(ObservationSet::read_text(buf.as_slice()).unwrap(), obs);
    }
}
