//! Independent numerical oracles for the closed-form engines and the
//! density module: dense-grid integration and large Monte Carlo draws,
//! kept free of the code paths they check.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use varprop::propagation::{quadrature_step, LayerMoments, NetworkConfig};
use varprop::density::{saturation_fraction, tanh_pdf};
use varprop::ActivationSpec;

/// Trapezoid integration of h(x) phi(x) over [-10, 10] at step 1e-4.
fn dense_gaussian_expectation<F: Fn(f64) -> f64>(h: F) -> f64 {
    let step = 1e-4f64;
    let n = (20.0 / step).round() as usize;
    let norm = 0.3989422804014327;
    let mut sum = 0.0;
    for i in 0..=n {
        let x = -10.0 + i as f64 * step;
        let value = h(x) * norm * (-0.5 * x * x).exp();
        sum += if i == 0 || i == n { 0.5 * value } else { value };
    }
    sum * step
}

fn forged_state(u_sq: f64) -> LayerMoments {
    LayerMoments {
        layer_index: 1,
        mean: 0.0,
        variance: 1.0,
        preact_mean: 0.0,
        preact_variance: u_sq,
    }
}

#[test]
fn quadrature_tanh_matches_dense_integration() {
    let activation = ActivationSpec::from_name("tanh").unwrap();
    for u in [0.5f64, 1.0, 2.0] {
        let mean_oracle = dense_gaussian_expectation(|x| (u * x).tanh());
        let sq_oracle = dense_gaussian_expectation(|x| (u * x).tanh().powi(2));
        let var_oracle = sq_oracle - mean_oracle * mean_oracle;

        let config = NetworkConfig::new(100, 2, 0.01, activation.clone()).unwrap();
        let next = quadrature_step(&forged_state(u * u), &config, 200).unwrap();
        assert!(
            (next.variance - var_oracle).abs() < 1e-8,
            "u = {u}: quadrature {} vs dense {}",
            next.variance,
            var_oracle
        );
        assert!(next.mean.abs() < 1e-12);
    }
}

#[test]
fn quadrature_sigmoid_matches_dense_integration() {
    let activation = ActivationSpec::from_name("sigmoid").unwrap();
    let sigmoid = |x: f64| 1.0 / (1.0 + (-x).exp());
    for u in [0.5f64, 3.5777] {
        let mean_oracle = dense_gaussian_expectation(|x| sigmoid(u * x));
        let sq_oracle = dense_gaussian_expectation(|x| sigmoid(u * x).powi(2));
        let var_oracle = sq_oracle - mean_oracle * mean_oracle;

        let config = NetworkConfig::new(100, 2, 0.01, activation.clone()).unwrap();
        let next = quadrature_step(&forged_state(u * u), &config, 200).unwrap();
        assert!((next.mean - mean_oracle).abs() < 1e-8);
        assert!((next.variance - var_oracle).abs() < 1e-8);
    }
}

#[test]
fn tanh_density_matches_monte_carlo_histogram() {
    // 1e7 draws of tanh(Z), counted in a narrow window around y = 0.5
    let mut rng = ChaCha8Rng::seed_from_u64(20240901);
    let samples = 10_000_000usize;
    let center = 0.5;
    let half_window = 0.01;
    let mut hits = 0u64;
    for _ in 0..samples {
        let z: f64 = rng.sample(StandardNormal);
        if (z.tanh() - center).abs() <= half_window {
            hits += 1;
        }
    }
    let empirical = hits as f64 / (samples as f64 * 2.0 * half_window);
    let analytic = tanh_pdf(center, 1.0).unwrap();
    let rel = (empirical - analytic).abs() / analytic;
    assert!(
        rel < 0.01,
        "histogram {empirical} vs density {analytic} (rel {rel})"
    );
}

#[test]
fn saturation_fraction_matches_monte_carlo() {
    let mut rng = ChaCha8Rng::seed_from_u64(31337);
    let samples = 10_000_000usize;
    let threshold = 0.9f64;
    let mut saturated = 0u64;
    for _ in 0..samples {
        let z: f64 = rng.sample(StandardNormal);
        if z.tanh().abs() > threshold {
            saturated += 1;
        }
    }
    let empirical = saturated as f64 / samples as f64;
    let analytic = saturation_fraction(1.0, threshold).unwrap();
    assert!(
        (empirical - analytic).abs() < 1e-3,
        "monte carlo {empirical} vs closed form {analytic}"
    );
}
