use std::f64::consts::PI;

use gausszeros::kac_rice_densities::rho_k;
use gausszeros::pair_correlation_variance::predicted_covariance;
use gausszeros::process_simulation::{
    empirical_k_point, empirical_moments, linear_statistic, sample_paths, zero_counts, zeros_from_grid, PathSampler,
};
use gausszeros::{CorrelationModel, Error, QuadratureSpec, SimulationSpec, TestFunction, ZeroSample};

fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

#[test]
fn path_covariances() {
    let m = CorrelationModel::sinc_sqrt3();
    let spec = SimulationSpec { grid_step: 0.05, ..SimulationSpec::window(0.0, 2.0, 10_000, 3) };
    let paths: Vec<_> = sample_paths(&m, &spec).unwrap().collect();
    let one = (1.0 / paths[0].step).round() as usize;
    let f0: Vec<f64> = paths.iter().map(|p| p.f[0]).collect();
    let f1: Vec<f64> = paths.iter().map(|p| p.f[one]).collect();
    let d0: Vec<f64> = paths.iter().map(|p| p.df[0]).collect();
    let sq: Vec<f64> = f0.iter().map(|v| v * v).collect();
    let (var, se) = mean_se(&sq);
    assert!((var - 1.0).abs() < 3.0 * se, "{var} ± {se}");
    let prod: Vec<f64> = f0.iter().zip(&f1).map(|(a, b)| a * b).collect();
    let (c, se) = mean_se(&prod);
    assert!((c - m.kappa(1.0)).abs() < 3.0 * se, "{c} ± {se} vs {}", m.kappa(1.0));
    let cross: Vec<f64> = f0.iter().zip(&d0).map(|(a, b)| a * b).collect();
    let (c, se) = mean_se(&cross);
    assert!(c.abs() < 3.0 * se, "{c} ± {se}");
    let dsq: Vec<f64> = d0.iter().map(|v| v * v).collect();
    let (v, se) = mean_se(&dsq);
    assert!((v - 1.0).abs() < 3.0 * se, "{v} ± {se}");
}

#[test]
fn zeros_of_a_known_path() {
    let h = 0.02;
    let xs: Vec<f64> = (0..=1000).map(|i| i as f64 * h).collect();
    let f: Vec<f64> = xs.iter().map(|x| x.sin()).collect();
    let df: Vec<f64> = xs.iter().map(|x| x.cos()).collect();
    let z = zeros_from_grid(0.0, h, &f, &df, 0.1, 20.0);
    assert_eq!(z.len(), 6);
    for (i, v) in z.iter().enumerate() {
        assert!((v - (i + 1) as f64 * PI).abs() < 1e-8, "{v}");
    }
}

#[test]
fn grid_refinement_moves_zeros_by_little() {
    let g = |x: f64| (x.sin() + 0.4 * (2.7 * x + 0.3).sin(), x.cos() + 1.08 * (2.7 * x + 0.3).cos());
    let zeros = |h: f64| {
        let n = (30.0 / h).round() as usize;
        let (f, df): (Vec<f64>, Vec<f64>) = (0..=n).map(|i| g(i as f64 * h)).unzip();
        zeros_from_grid(0.0, h, &f, &df, 0.0, 30.0)
    };
    let h = 0.05;
    let (a, b) = (zeros(h), zeros(h / 2.0));
    assert_eq!(a.len(), b.len());
    for (u, v) in a.iter().zip(&b) {
        assert!((u - v).abs() < 10.0 * h * h, "{u} vs {v}");
    }
}

#[test]
fn independent_of_thread_count() {
    let m = CorrelationModel::cauchy();
    let spec = SimulationSpec::window(0.0, 30.0, 64, 99);
    let run = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| PathSampler::new(&m, &spec).unwrap().all_zeros())
    };
    let a = run(1);
    assert_eq!(a, run(2));
    assert_eq!(a, run(7));
    let b = PathSampler::new(&m, &SimulationSpec { master_seed: 100, ..spec }).unwrap().all_zeros();
    assert_ne!(a, b);
    for s in &a {
        assert!(s.zeros.windows(2).all(|w| w[0] < w[1]));
        assert!(s.zeros.iter().all(|&z| (0.0..=30.0).contains(&z)));
    }
}

#[test]
fn invalid_specs_are_rejected() {
    let m = CorrelationModel::bargmann_fock();
    let coarse = SimulationSpec { grid_step: 0.1, ..SimulationSpec::default() };
    assert!(PathSampler::new(&m, &coarse).is_err());
    let thin = SimulationSpec { padding_factor: 1.5, ..SimulationSpec::default() };
    assert!(PathSampler::new(&m, &thin).is_err());
    let empty = SimulationSpec { num_samples: 0, ..SimulationSpec::default() };
    assert!(PathSampler::new(&m, &empty).is_err());
}

#[test]
fn linear_statistic_examples() {
    let s = ZeroSample { zeros: vec![0.4, 1.3, 2.2, 4.9], replicate_seed: 0, window: (0.0, 5.0) };
    let full = TestFunction::indicator(0.0, 1.0).unwrap();
    assert_eq!(linear_statistic(&s, &full, 5.0).unwrap(), 4.0);
    let zero = TestFunction::table(vec![0.0, 1.0], vec![0.0, 0.0]).unwrap();
    assert_eq!(linear_statistic(&s, &zero, 5.0).unwrap(), 0.0);
    let left = TestFunction::indicator(0.0, 0.5).unwrap();
    let right = TestFunction::indicator(0.5001, 1.0).unwrap();
    let split = linear_statistic(&s, &left, 5.0).unwrap() + linear_statistic(&s, &right, 5.0).unwrap();
    assert_eq!(split, 4.0);
    assert!(matches!(linear_statistic(&s, &full, 6.0), Err(Error::WindowTooSmall(_))));
}

#[test]
fn mean_zero_count() {
    for m in CorrelationModel::presets() {
        for r in [20.0, 50.0] {
            let counts: Vec<f64> = zero_counts(&m, &SimulationSpec::window(0.0, r, 2000, 5))
                .unwrap()
                .into_iter()
                .map(|c| c as f64)
                .collect();
            let (mean, se) = mean_se(&counts);
            assert!((mean * PI / r - 1.0).abs() < 3.0 * se * PI / r, "{} R={r}: {mean} ± {se}", m.name());
        }
    }
}

#[test]
fn law_of_large_numbers_trend() {
    let m = CorrelationModel::bargmann_fock();
    let devs: Vec<f64> = [25.0, 50.0, 100.0, 200.0]
        .iter()
        .map(|&r| {
            let c = zero_counts(&m, &SimulationSpec::window(0.0, r, 600, 8)).unwrap();
            c.iter().map(|&n| (n as f64 / r - 1.0 / PI).abs()).sum::<f64>() / c.len() as f64
        })
        .collect();
    assert!(devs.windows(2).all(|w| w[1] < w[0]), "{devs:?}");
}

#[test]
fn moments_against_predictions() {
    let m = CorrelationModel::bargmann_fock();
    let phi = TestFunction::indicator(0.0, 1.0).unwrap();
    let r = 50.0;
    let est = empirical_moments(&m, &SimulationSpec::window(0.0, r, 2000, 21), &phi, r, &[1, 2]).unwrap();
    assert!(est[0].ci_lo <= 0.0 && 0.0 <= est[0].ci_hi, "{:?}", est[0]);
    let m2 = predicted_covariance(&m, &phi, &phi, r, &QuadratureSpec::default()).unwrap();
    assert!(est[1].ci_lo <= m2 && m2 <= est[1].ci_hi, "{:?} vs {m2}", est[1]);
    assert!(empirical_moments(&m, &SimulationSpec::window(0.0, r, 10, 1), &phi, r, &[7]).is_err());
}

#[test]
fn k_point_estimates() {
    let m = CorrelationModel::bargmann_fock();
    let spec = SimulationSpec::window(-1.0, 8.0, 40_000, 4);
    let (v, se) = empirical_k_point(&m, &spec, &[2.0], 0.05).unwrap();
    assert!((v - 1.0 / PI).abs() < 3.0 * se, "{v} ± {se}");
    let (v, se) = empirical_k_point(&m, &spec, &[0.0, 6.0], 0.1).unwrap();
    let want = rho_k(&m, &[0.0, 6.0]).unwrap().rho;
    assert!((v - want).abs() < 3.0 * se, "{v} ± {se} vs {want}");
    let (v, se) = empirical_k_point(&m, &spec, &[0.0, 0.3], 0.05).unwrap();
    assert!(v + 3.0 * se < 1.0 / (PI * PI), "{v} ± {se}");
    assert!(matches!(empirical_k_point(&m, &spec, &[0.0, 0.05], 0.05), Err(Error::IntervalsOverlap(_))));
    assert!(matches!(empirical_k_point(&m, &spec, &[6.99], 0.05), Err(Error::WindowTooSmall(_))));
}

#[test]
fn long_sinc_windows_use_spectral_synthesis() {
    let m = CorrelationModel::sinc_sqrt3();
    let spec = SimulationSpec::window(0.0, 120.0, 4000, 12);
    let sampler = PathSampler::new(&m, &spec).unwrap();
    assert!(sampler.uses_spectral_synthesis());
    let paths: Vec<_> = (0..spec.num_samples as u64).map(|i| sampler.sample(i)).collect();
    let lag = (2.5 / sampler.step()).round() as usize;
    let x = lag as f64 * sampler.step();
    for (name, a, b, want) in [
        ("f f", 0usize, 0usize, 1.0),
        ("f(0) f(x)", 0, lag, m.kappa(x)),
    ] {
        let prod: Vec<f64> = paths.iter().map(|p| p.f[a] * p.f[b]).collect();
        let (c, se) = mean_se(&prod);
        assert!((c - want).abs() < 3.0 * se, "{name}: {c} ± {se} vs {want}");
    }
    let cross: Vec<f64> = paths.iter().map(|p| p.f[7] * p.df[7]).collect();
    let (c, se) = mean_se(&cross);
    assert!(c.abs() < 3.0 * se);
}
