mod common;

use rand::Rng;

use common::{expected_tv, max_log_ratio, total_variation, unbiasedness_error};
use sqsgd::privquant::{
    exact_pmf, outcome_index, reconstruction_protection, solve_budget, PrivQuant, PrivacyParams, RatioCurve,
};
use sqsgd::quantizer::{quantize, QuantGrid, QuantizedVector};
use sqsgd::rng::seeded;
use sqsgd::scalardp::{levels_for_budget, ScalarDp};
use sqsgd::Error;

fn histogram(mech: &PrivQuant, x: &[u32], draws: usize, seed: u64) -> Vec<u64> {
    let p = mech.params();
    let mut counts = vec![0u64; p.levels().pow(p.dim() as u32)];
    let mut out = vec![0u32; x.len()];
    let mut rng = seeded(seed);
    for _ in 0..draws {
        mech.sample_into(x, &mut out, &mut rng).unwrap();
        counts[outcome_index(p.levels(), &out)] += 1;
    }
    counts
}

#[test]
fn three_bit_mechanism_matches_exact_table() {
    let params = PrivacyParams::from_parts(3, 2, 0, 0.8).unwrap();
    let x = [1, 0, 1];
    let pmf = exact_pmf(&x, &params).unwrap();
    // tau = 2: four outputs agree in >= 2 coordinates
    let high: Vec<f64> = pmf.iter().copied().filter(|&p| (p - 0.2).abs() < 1e-12).collect();
    assert_eq!(high.len(), 4);
    let counts = histogram(&PrivQuant::new(params).unwrap(), &x, 1_000_000, 3);
    assert!(total_variation(&counts, &pmf) < 0.01);
}

#[test]
fn four_dim_three_level_estimate_is_unbiased() {
    let params = PrivacyParams::from_parts(4, 3, 1, 0.9).unwrap();
    let mech = PrivQuant::new(params).unwrap();
    let grid = QuantGrid::new(3, 1.0).unwrap();
    let xhat = QuantizedVector::new(vec![0, 1, 2, 2], grid).unwrap();
    let target = xhat.decode();
    let n = 1_000_000;
    let mut rng = seeded(8);
    let mut sum = [0.0; 4];
    let mut sq = [0.0; 4];
    for _ in 0..n {
        let z = mech.privatize(&xhat, &mut rng).unwrap().estimate;
        for j in 0..4 {
            sum[j] += z[j];
            sq[j] += z[j] * z[j];
        }
    }
    for j in 0..4 {
        let mean = sum[j] / n as f64;
        let sd = ((sq[j] / n as f64 - mean * mean) / n as f64).sqrt();
        assert!((mean - target[j]).abs() < 3.0 * sd, "coord {j}: {mean} vs {}", target[j]);
    }
}

#[test]
fn binary_one_dimensional_mechanism_is_randomized_response() {
    let p = 0.75;
    let params = PrivacyParams::from_parts(1, 2, 0, p).unwrap();
    assert!((params.m() - 0.5).abs() < 1e-12);
    let pmf = exact_pmf(&[1], &params).unwrap();
    assert!((pmf[1] - p).abs() < 1e-12 && (pmf[0] - (1.0 - p)).abs() < 1e-12);
    let mech = PrivQuant::new(params).unwrap();
    let grid = QuantGrid::new(2, 1.0).unwrap();
    let z = mech.privatize(&QuantizedVector::new(vec![1], grid).unwrap(), &mut seeded(1)).unwrap();
    assert!((z.estimate[0].abs() - 2.0).abs() < 1e-12);
}

#[test]
fn exact_tables_sum_to_one_and_respect_the_budget() {
    for (d, k) in [(3usize, 3usize), (2, 5), (4, 2), (5, 3)] {
        for eps1 in [1.0, 2.0, 8.0] {
            let params = PrivacyParams::solve(d, k, eps1, 0.0).unwrap();
            let pmf = exact_pmf(&vec![0; d], &params).unwrap();
            assert!((pmf.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            let ratio = max_log_ratio(&params);
            assert!(ratio <= eps1 + 1e-9, "d={d} K={k} eps1={eps1}: {ratio}");
        }
    }
}

#[test]
fn budget_below_the_most_permissive_threshold_is_rejected() {
    // kappa = -d keeps only the all-mismatch outputs in the low set: 16 vs 9
    let ratio = RatioCurve::new(2, 5).unwrap().log_ratio(-2);
    assert!((ratio - (16.0f64 / 9.0).ln()).abs() < 1e-12);
    assert!(matches!(PrivacyParams::solve(2, 5, 0.5, 0.0), Err(Error::InfeasibleBudget { .. })));
    assert!(PrivacyParams::solve(2, 5, 0.6, 0.0).is_ok());
}

#[test]
fn exact_law_is_algebraically_unbiased() {
    let mut rng = seeded(2);
    for (d, k) in [(1usize, 2usize), (2, 2), (3, 3), (4, 4), (6, 3), (8, 2), (3, 10)] {
        for kappa in 0..d as i64 {
            for p in [0.6, 0.8, 0.95] {
                let params = PrivacyParams::from_parts(d, k, kappa, p).unwrap();
                let x: Vec<u32> = (0..d).map(|_| rng.random_range(0..k as u32)).collect();
                let err = unbiasedness_error(&params, &x);
                assert!(err < 1e-10, "d={d} K={k} kappa={kappa} p={p}: {err}");
            }
        }
    }
}

#[test]
fn sampler_tv_stays_near_its_noise_floor() {
    for (d, k, kappa) in [(5usize, 4usize, 2i64), (2, 40, 0), (9, 2, 3)] {
        let params = PrivacyParams::from_parts(d, k, kappa, 0.8).unwrap();
        let x: Vec<u32> = (0..d).map(|j| (j % k) as u32).collect();
        let pmf = exact_pmf(&x, &params).unwrap();
        let n = 200_000;
        let counts = histogram(&PrivQuant::new(params).unwrap(), &x, n, 17);
        let tv = total_variation(&counts, &pmf);
        let floor = expected_tv(&pmf, n as u64);
        // McDiarmid: P(TV > E[TV] + t) <= exp(-2 n t^2)
        assert!(tv < floor + 0.01, "d={d} K={k}: tv {tv} floor {floor}");
    }
}

#[test]
fn kappa_grows_with_the_budget() {
    for (d, k) in [(8usize, 2usize), (64, 4), (1024, 16), (4096, 8)] {
        let mut last = i64::MIN;
        for eps1 in [0.5, 1.0, 2.0, 5.0, 10.0, 50.0, 100.0, 390.0, 1000.0] {
            let kappa = solve_budget(d, k, eps1).unwrap().kappa;
            assert!(kappa >= last, "d={d} K={k} eps1={eps1}: {kappa} < {last}");
            last = kappa;
        }
    }
}

#[test]
fn solved_parameters_split_the_total_budget() {
    let params = PrivacyParams::solve(1024, 16, 400.0, 10.0).unwrap();
    assert_eq!(params.epsilon1(), 390.0);
    assert_eq!(params.epsilon2(), 10.0);
    assert!(params.slack() >= -1e-9);
    assert!(params.m() > 0.0);
    assert!(params.flip_prob() >= 0.5 && params.flip_prob() <= 1.0);
}

#[test]
fn reconstruction_bound_examples() {
    let eps = 400.0;
    let at_zero = reconstruction_protection(eps, 0.0, 100_000, 0.0).unwrap();
    assert!((at_zero.log_omega - (8f64.sqrt().ln() + eps)).abs() < 1e-12);
    let b = reconstruction_protection(eps, 0.0, 100_000, 0.1).unwrap();
    // sqrt(8) exp(-(1e5 - 1) 0.01 / 2) exp(400)
    let direct = 8f64.sqrt().ln() - 99_999.0 * 0.01 / 2.0 + 400.0;
    assert!((b.log_omega - direct).abs() < 1e-9);
    assert!((b.breach_radius - (2f64.sqrt() - 0.2)).abs() < 1e-15);
    let mut last = f64::INFINITY;
    for i in 0..=20 {
        let w = reconstruction_protection(3.0, 0.5, 50, i as f64 / 20.0).unwrap().log_omega;
        assert!(w < last || i == 0);
        last = w;
    }
}

#[test]
fn quantizer_mean_and_variance() {
    let grid = QuantGrid::new(5, 1.0).unwrap();
    let n = 100_000;
    let mut rng = seeded(6);
    let draws: Vec<f64> = (0..n).map(|_| quantize(&[0.3], &grid, &mut rng).unwrap().decode()[0]).collect();
    let mean = draws.iter().sum::<f64>() / n as f64;
    let var = draws.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
    assert!((mean - 0.3).abs() < 3.0 * (var / n as f64).sqrt());
    // 0.3 sits 0.3 into a bin of width 0.5: variance (0.5)^2 * 0.6 * 0.4
    assert!((var - 0.06).abs() < 0.002, "{var}");
    assert!(var <= grid.spacing().powi(2) / 4.0);
}

#[test]
fn scalar_report_levels_and_zero_bias() {
    assert_eq!(levels_for_budget(10.0), 29);
    let dp = ScalarDp::new(50.0).unwrap();
    assert!(dp.stay_prob() > 1.0 - 1e-13);
    let n = 100_000;
    let mut rng = seeded(9);
    let est: Vec<f64> = (0..n).map(|_| dp.estimate_raw(0.0, 10.0, &mut rng).unwrap()).collect();
    let mean = est.iter().sum::<f64>() / n as f64;
    let sd = (est.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64 / n as f64).sqrt();
    assert!(mean.abs() <= 3.0 * sd + 1e-12, "{mean}");
    let dp = ScalarDp::new(10.0).unwrap();
    let est: Vec<f64> = (0..n).map(|_| dp.estimate_raw(3.7, 10.0, &mut rng).unwrap()).collect();
    let mean = est.iter().sum::<f64>() / n as f64;
    let sd = (est.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64 / n as f64).sqrt();
    assert!((mean - 3.7).abs() < 3.0 * sd, "{mean} +- {sd}");
}

#[test]
fn large_budget_scalar_report_is_plain_rounding() {
    let dp = ScalarDp::with_levels(200.0, 11).unwrap();
    let mut rng = seeded(4);
    for _ in 0..1000 {
        let x = rng.random_range(0.0..=10.0);
        let e = dp.estimate(x, 10.0, &mut rng).unwrap();
        assert!((e - x).abs() <= 1.0 + 1e-9, "{x} -> {e}");
        assert!((e - e.round()).abs() < 1e-9);
    }
}
