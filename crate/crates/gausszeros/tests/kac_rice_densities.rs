use std::f64::consts::PI;

use gausszeros::kac_rice_densities::{
    clustering_ratio, rho_k, rho_k_with, rho_with_partition, rho_with_partition_mc, vanishing_constant,
};
use gausszeros::pair_correlation_variance::two_point_F;
use gausszeros::partitions_combinatorics::enumerate_partitions;
use gausszeros::{CorrelationModel, Error, IndexPartition, MonteCarloSpec};
use proptest::prelude::*;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

#[test]
fn one_point_intensity() {
    for m in CorrelationModel::presets() {
        for x in [-3.0, 0.0, 12.5] {
            assert!(rel(rho_k(&m, &[x]).unwrap().rho, 1.0 / PI) < 1e-14);
        }
    }
}

#[test]
fn two_point_density_examples() {
    let bf = CorrelationModel::bargmann_fock();
    let far = rho_k(&bf, &[0.0, 10.0]).unwrap().rho;
    assert!((far - 1.0 / (PI * PI) - two_point_F(&bf, 10.0).unwrap()).abs() < 1e-14);
    assert_eq!(rho_k(&bf, &[0.0, 0.0]).unwrap().rho, 0.0);
    for m in CorrelationModel::presets() {
        for z in [0.05, 0.5, 2.0, 7.0] {
            let r = rho_k(&m, &[0.0, z]).unwrap().rho;
            let f = two_point_F(&m, z).unwrap();
            assert!(rel(r - 1.0 / (PI * PI), f) < 1e-8 || (r - 1.0 / (PI * PI) - f).abs() < 1e-14, "{} z={z}", m.name());
        }
    }
}

#[test]
fn partition_routes_agree() {
    let m = CorrelationModel::bargmann_fock();
    let (a, b) = (IndexPartition::singletons(2), IndexPartition::one_block(2));
    for z in [1e-3, 0.01, 0.3, 1.0, 5.0] {
        let u = rho_with_partition(&m, &[0.0, z], &a).unwrap().rho;
        let v = rho_with_partition(&m, &[0.0, z], &b).unwrap().rho;
        assert!(rel(u, v) < 1e-8, "z={z}: {u} vs {v}");
    }
}

#[test]
fn coincident_points() {
    let m = CorrelationModel::sinc_sqrt3();
    let err = rho_with_partition(&m, &[0.0, 0.0], &IndexPartition::singletons(2)).unwrap_err();
    assert!(matches!(err, Error::DegenerateConfiguration(_)));
    let r = rho_with_partition(&m, &[0.0, 0.0], &IndexPartition::one_block(2)).unwrap();
    assert_eq!(r.rho, 0.0);
    assert!(r.d_value > 0.0 && r.n_value > 0.0);
}

#[test]
fn size_cap() {
    let x: Vec<f64> = (0..7).map(f64::from).collect();
    assert!(matches!(rho_k(&CorrelationModel::cauchy(), &x), Err(Error::SizeCap { .. })));
}

#[test]
fn vanishing_constant_examples() {
    // Conditional variance of f'' given (f, f') at a point is κ''''(0) − 1.
    let cases = [("bargmann-fock", 2.0), ("sinc-sqrt3", 4.0 / 5.0), ("cauchy", 5.0)];
    for (name, cond_var) in cases {
        let m = CorrelationModel::from_name(name).unwrap();
        let l = vanishing_constant(&m, &[0.0, 0.0]).unwrap();
        let want = 0.25 * cond_var / (2.0 * PI);
        assert!(rel(l.value, want) < 1e-10, "{name}: {} vs {want}", l.value);
    }
    let m = CorrelationModel::bargmann_fock();
    for y in [vec![0.0, 1.5], vec![-1.0, 0.3, 2.0]] {
        let l = vanishing_constant(&m, &y).unwrap();
        let r = rho_k(&m, &y).unwrap();
        let tol = 4.0 * (l.std_error + r.rho_std_error()) + 1e-10 * r.rho;
        assert!((l.value - r.rho).abs() <= tol, "{y:?}: {} vs {}", l.value, r.rho);
    }
}

#[test]
fn vanishing_order_of_two_point_density() {
    let m = CorrelationModel::bargmann_fock();
    let l = vanishing_constant(&m, &[0.0, 0.0]).unwrap().value;
    let errs: Vec<f64> = [1e-1, 1e-2, 1e-3].iter().map(|&e| (rho_k(&m, &[0.0, e]).unwrap().rho / e - l).abs()).collect();
    assert!(errs[1] <= 0.1 * errs[0] * 1.5, "{errs:?}");
    assert!(errs[2] <= (0.1 * errs[1] * 1.5).max(1e-12), "{errs:?}");
}

#[test]
fn clustering_examples() {
    let m = CorrelationModel::bargmann_fock();
    let (ratio, bound) = clustering_ratio(&m, &[0.0, 8.0], &IndexPartition::singletons(2)).unwrap();
    assert!((ratio - 1.0).abs() < 1e-6 && bound < 1e-6);
    let (ratio, bound) = clustering_ratio(&m, &[0.0, 0.3, 0.5], &IndexPartition::one_block(3)).unwrap();
    assert_eq!((ratio, bound), (1.0, 0.0));
    let err = clustering_ratio(&m, &[0.0, 0.5], &IndexPartition::singletons(2)).unwrap_err();
    assert!(matches!(err, Error::SeparationTooSmall { .. }));
}

#[test]
fn factorization_identity() {
    let mc = MonteCarloSpec::with_samples(400_000, 5);
    let configs = [vec![0.0, 0.35], vec![0.0, 0.4, 0.9], vec![-0.5, 0.1, 0.6, 1.2]];
    for m in CorrelationModel::presets() {
        for x in &configs {
            let fine = rho_with_partition_mc(&m, x, &IndexPartition::singletons(x.len()), &mc).unwrap();
            for p in enumerate_partitions(x.len()).unwrap() {
                let r = rho_with_partition_mc(&m, x, &p, &mc).unwrap();
                let v = r.vandermonde_factor;
                assert!(rel(fine.d_value, v * v * r.d_value) < 1e-8, "{} {p}: D", m.name());
                let n_tol = 4.0 * (fine.n_std_error + v * v * r.n_std_error) + 1e-8 * fine.n_value;
                assert!((fine.n_value - v * v * r.n_value).abs() <= n_tol, "{} {p}: N", m.name());
            }
        }
    }
}

#[test]
fn bounded_near_diagonal() {
    let m = CorrelationModel::bargmann_fock();
    let mc = MonteCarloSpec::with_samples(50_000, 3);
    let ratio = |x: &[f64]| {
        let mut g = 1.0;
        for i in 0..x.len() {
            for j in i + 1..x.len() {
                g *= (x[i] - x[j]).abs().min(1.0);
            }
        }
        rho_k_with(&m, x, &mc).unwrap().rho / g.sqrt()
    };
    let grid = [0.05, 0.2, 0.5, 1.0, 2.0];
    let calib = grid.iter().flat_map(|&a| grid.iter().map(move |&b| [0.0, a, a + b])).map(|x| ratio(&x)).fold(0.0, f64::max);
    for (a, b) in [(0.01, 0.03), (0.13, 0.07), (0.7, 0.02), (1.4, 3.1), (0.003, 0.6)] {
        let r = ratio(&[0.0, a, a + b]);
        assert!(r <= 3.0 * calib, "({a},{b}): {r} vs calibration {calib}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn determinant_factorization_random(idx in 0usize..3, gaps in prop::collection::vec(0.05f64..1.5, 1..4), pick in any::<prop::sample::Index>()) {
        let m = &CorrelationModel::presets()[idx];
        let mut x = vec![0.0];
        for g in &gaps {
            x.push(x.last().unwrap() + g);
        }
        let parts = enumerate_partitions(x.len()).unwrap();
        let p = pick.get(&parts);
        let mc = MonteCarloSpec::with_samples(2_000, 1);
        let fine = rho_with_partition_mc(m, &x, &IndexPartition::singletons(x.len()), &mc).unwrap();
        let r = rho_with_partition_mc(m, &x, p, &mc).unwrap();
        let v = r.vandermonde_factor;
        prop_assert!(rel(fine.d_value, v * v * r.d_value) < 1e-8);
    }

    #[test]
    fn permutation_symmetry(idx in 0usize..3, a in -3.0f64..3.0, b in -3.0f64..3.0, c in -3.0f64..3.0) {
        let m = &CorrelationModel::presets()[idx];
        let u = rho_k(m, &[a, b]).unwrap().rho;
        let v = rho_k(m, &[b, a]).unwrap().rho;
        prop_assert!((u - v).abs() <= 1e-8 * u.max(1e-300) || (u - v).abs() < 1e-14);
        let mc = MonteCarloSpec::with_samples(20_000, 9);
        let p = rho_k_with(m, &[a, b, c], &mc).unwrap();
        let q = rho_k_with(m, &[c, a, b], &mc).unwrap();
        prop_assert!(rel(p.d_value, q.d_value) < 1e-8 || (p.d_value - q.d_value).abs() < 1e-14);
        prop_assert!((p.rho - q.rho).abs() <= 5.0 * (p.rho_std_error() + q.rho_std_error()) + 1e-12);
    }
}
