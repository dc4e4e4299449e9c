//! Monte Carlo validation of the moment recursions at simulation scale.

use varprop::propagation::{propagate, recommend_init, Engine, LayerMoments, NetworkConfig};
use varprop::simulator::{run, InputDistribution, SimConfig, WeightDistribution};
use varprop::ActivationSpec;

fn config(
    name: &str,
    width: usize,
    depth: usize,
    trials: usize,
    weights: WeightDistribution,
    seed: u64,
) -> SimConfig {
    SimConfig {
        width,
        depth,
        weights,
        activation: ActivationSpec::from_name(name).unwrap(),
        trials,
        seed,
        inputs: InputDistribution::StandardNormal,
    }
}

#[test]
fn preact_variance_follows_fan_in_law() {
    // u_m^2 = N v^2 (s_m^2 + mu_m^2), tested at >= 1e5 pooled samples
    let width = 512;
    let trials = 196;
    assert!(width * trials >= 100_000);
    let weight_variance = recommend_init(&ActivationSpec::from_name("relu").unwrap(), width)
        .unwrap()
        .weight_variance;
    let sim = config(
        "relu",
        width,
        4,
        trials,
        WeightDistribution::Gaussian {
            stddev: weight_variance.sqrt(),
        },
        71,
    );
    let report = run(&sim).unwrap();
    for layer in &report.per_layer {
        let predicted =
            width as f64 * weight_variance * (layer.act_variance + layer.act_mean * layer.act_mean);
        let rel = (layer.preact_variance - predicted).abs() / predicted;
        assert!(
            rel < 0.05,
            "layer {}: preact {} vs fan-in law {} (rel {rel})",
            layer.layer_index,
            layer.preact_variance,
            predicted
        );
    }
}

#[test]
fn preact_mean_is_zero_within_three_standard_errors() {
    let sim = config(
        "tanh",
        256,
        6,
        150,
        WeightDistribution::Gaussian { stddev: 1.0 / 16.0 },
        5,
    );
    let report = run(&sim).unwrap();
    for layer in &report.per_layer {
        let se = (layer.preact_variance / layer.samples as f64).sqrt();
        assert!(
            layer.preact_mean.abs() <= 3.0 * se,
            "layer {}: mean {} exceeds 3 se = {}",
            layer.layer_index,
            layer.preact_mean,
            3.0 * se
        );
    }
}

#[test]
fn uniform_and_gaussian_weights_agree_through_variance() {
    // the theory sees weights only through v^2
    let width = 256;
    let v_sq = 1.0 / width as f64;
    let gaussian = config(
        "tanh",
        width,
        6,
        150,
        WeightDistribution::Gaussian { stddev: v_sq.sqrt() },
        9,
    );
    let uniform = config(
        "tanh",
        width,
        6,
        150,
        WeightDistribution::Uniform {
            half_width: (3.0 * v_sq).sqrt(),
        },
        10,
    );
    assert!((uniform.weights.variance() - v_sq).abs() < 1e-15);
    let g = run(&gaussian).unwrap();
    let u = run(&uniform).unwrap();
    for (lg, lu) in g.per_layer.iter().zip(&u.per_layer) {
        let rel = (lg.act_variance - lu.act_variance).abs() / lg.act_variance;
        assert!(
            rel < 0.05,
            "layer {}: gaussian {} vs uniform {} (rel {rel})",
            lg.layer_index,
            lg.act_variance,
            lu.act_variance
        );
    }
}

#[test]
fn tanh_monte_carlo_tracks_quadrature_not_linearized() {
    let width = 256;
    let depth = 6;
    let v_sq = 1.0 / width as f64;
    let sim = config(
        "tanh",
        width,
        depth,
        150,
        WeightDistribution::Gaussian { stddev: v_sq.sqrt() },
        13,
    );
    let report = run(&sim).unwrap();

    let activation = ActivationSpec::from_name("tanh").unwrap();
    let net = NetworkConfig::new(width, depth, v_sq, activation).unwrap();
    let initial = LayerMoments::standard(&net);
    let quad = propagate(initial, &net, Engine::quadrature()).unwrap();
    let lin = propagate(initial, &net, Engine::Linearized).unwrap();

    for (stats, predicted) in report.per_layer.iter().zip(&quad) {
        let rel_quad = (stats.act_variance - predicted.variance).abs() / predicted.variance;
        assert!(
            rel_quad < 0.05,
            "layer {}: MC {} vs quadrature {} (rel {rel_quad})",
            stats.layer_index,
            stats.act_variance,
            predicted.variance
        );
    }
    // the linearized iterate visibly overestimates by the last layer
    let last = depth - 1;
    let rel_lin = (report.per_layer[last].act_variance - lin[last].variance).abs()
        / lin[last].variance;
    assert!(rel_lin > 0.05, "linearized should disagree, rel {rel_lin}");
}

#[test]
fn narrow_layers_have_heavier_preact_tails() {
    // CLT degradation at width 2 versus width 512, same depth and scaling
    let narrow = config(
        "identity",
        2,
        2,
        20_000,
        WeightDistribution::Gaussian {
            stddev: (1.0f64 / 2.0).sqrt(),
        },
        17,
    );
    let wide = config(
        "identity",
        512,
        2,
        60,
        WeightDistribution::Gaussian {
            stddev: (1.0f64 / 512.0).sqrt(),
        },
        17,
    );
    let narrow_kurt = run(&narrow).unwrap().per_layer[1].preact_excess_kurtosis;
    let wide_kurt = run(&wide).unwrap().per_layer[1].preact_excess_kurtosis;
    assert!(
        narrow_kurt.abs() > wide_kurt.abs(),
        "narrow {narrow_kurt} vs wide {wide_kurt}"
    );
    assert!(narrow_kurt > 1.0);
}
