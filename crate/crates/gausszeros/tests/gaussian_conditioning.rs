use gausszeros::correlation_models::tail_norm;
use gausszeros::gaussian_conditioning::{assemble_context, pi_k};
use gausszeros::{CorrelationModel, Error, IndexPartition, MonteCarloSpec};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn two_over_pi() -> f64 {
    2.0 / std::f64::consts::PI
}

#[test]
fn single_point_context() {
    for m in CorrelationModel::presets() {
        let c = assemble_context(&m, &[3.7], &IndexPartition::singletons(1)).unwrap();
        assert!((c.theta[(0, 0)] - 1.0).abs() < 1e-14);
        assert!((c.omega[(0, 0)] - 1.0).abs() < 1e-14);
        assert!(c.xi[(0, 0)].abs() < 1e-14);
        assert!((c.lambda.unwrap()[(0, 0)] - 1.0).abs() < 1e-14);
    }
}

#[test]
fn two_point_determinant() {
    let m = CorrelationModel::cauchy();
    for z in [0.1, 0.7, 2.0, 9.0] {
        let c = assemble_context(&m, &[0.0, z], &IndexPartition::singletons(2)).unwrap();
        let k = m.kappa(z);
        assert!((c.d_value - (1.0 - k * k)).abs() < 1e-13, "z={z}");
    }
}

#[test]
fn merged_block_tends_to_identity() {
    let m = CorrelationModel::bargmann_fock();
    let one = IndexPartition::one_block(2);
    for z in [1e-3, 1e-5, 1e-7] {
        let c = assemble_context(&m, &[0.0, z], &one).unwrap();
        let err = (&c.theta - DMatrix::identity(2, 2)).abs().max();
        assert!(err < 2.0 * z, "z={z}: {}", c.theta);
    }
    let c = assemble_context(&m, &[0.0, 0.0], &one).unwrap();
    assert!((&c.theta - DMatrix::identity(2, 2)).abs().max() < 1e-15);
    assert!(!c.is_degenerate());
}

#[test]
fn coincident_singletons_are_degenerate() {
    let c = assemble_context(&CorrelationModel::bargmann_fock(), &[1.0, 1.0], &IndexPartition::singletons(2)).unwrap();
    assert!(c.is_degenerate());
}

#[test]
fn pi_k_examples() {
    let mc = MonteCarloSpec::default();
    let (v, e) = pi_k(&DMatrix::identity(1, 1), &mc).unwrap();
    assert!((v - two_over_pi().sqrt()).abs() < 1e-15 && e == 0.0);
    let (v, _) = pi_k(&DMatrix::identity(2, 2), &mc).unwrap();
    assert!((v - two_over_pi()).abs() < 1e-15);
    let (v, _) = pi_k(&DMatrix::from_element(2, 2, 1.0), &mc).unwrap();
    assert!((v - 1.0).abs() < 1e-14);
    for k in 3..=4 {
        let (v, e) = pi_k(&DMatrix::identity(k, k), &mc).unwrap();
        let want = two_over_pi().powf(k as f64 / 2.0);
        assert!((v - want).abs() <= 4.0 * e.max(1e-12), "k={k}: {v} ± {e} vs {want}");
    }
}

#[test]
fn pi_k_rejects_indefinite_input() {
    let u = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
    assert!(matches!(pi_k(&u, &MonteCarloSpec::default()), Err(Error::NotPsd { .. })));
}

#[test]
fn pi_k_independent_of_thread_count() {
    let u = DMatrix::from_row_slice(3, 3, &[1.0, 0.3, -0.2, 0.3, 2.0, 0.5, -0.2, 0.5, 1.5]);
    let mc = MonteCarloSpec::with_samples(200_000, 17);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(|| pi_k(&u, &mc).unwrap())
    };
    let a = run(1);
    assert_eq!(a, run(3));
    assert_eq!(a, run(8));
}

#[test]
fn off_diagonal_blocks_decay_with_separation() {
    let p = IndexPartition::parse("{0,1},{2,3,4}", 5).unwrap();
    for m in CorrelationModel::presets() {
        for eta in [2.0, 4.0, 8.0] {
            let pts = vec![0.0, 0.4, 0.7 + eta, 1.0 + eta, 1.3 + eta];
            let c = assemble_context(&m, &pts, &p).unwrap();
            let bound = tail_norm(&m, 2 * pts.len(), pts[2] - pts[1]).unwrap();
            for mat in [&c.theta, &c.xi, &c.omega] {
                for i in 0..2 {
                    for j in 2..5 {
                        assert!(mat[(i, j)].abs() <= bound * (1.0 + 1e-9), "{} eta={eta}", m.name());
                        assert!(mat[(j, i)].abs() <= bound * (1.0 + 1e-9), "{} eta={eta}", m.name());
                    }
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn translation_invariance(idx in 0usize..3, pts in prop::collection::vec(-3.0f64..3.0, 1..5), t in -50.0f64..50.0) {
        let m = &CorrelationModel::presets()[idx];
        let p = IndexPartition::one_block(pts.len());
        let shifted: Vec<f64> = pts.iter().map(|v| v + t).collect();
        let a = assemble_context(m, &pts, &p).unwrap();
        let b = assemble_context(m, &shifted, &p).unwrap();
        for (u, v) in [(&a.theta, &b.theta), (&a.xi, &b.xi), (&a.omega, &b.omega)] {
            for (s, r) in u.iter().zip(v.iter()) {
                prop_assert!((s - r).abs() <= 1e-10 * (1.0 + s.abs()), "{s} vs {r}");
            }
        }
    }

    #[test]
    fn schur_complement_is_psd(idx in 0usize..3, pts in prop::collection::vec(-3.0f64..3.0, 1..5)) {
        let m = &CorrelationModel::presets()[idx];
        let p = gausszeros::partitions_combinatorics::cluster_partition(&pts, 1.0);
        let c = assemble_context(m, &pts, &p).unwrap();
        if let Some(l) = &c.lambda {
            let min = l.clone().symmetric_eigen().eigenvalues.min();
            prop_assert!(min >= -1e-10 * c.omega.trace(), "min eigenvalue {min}");
        }
    }
}
