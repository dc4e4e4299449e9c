//! Browser bindings for the initialization and propagation toolkit.
//!
//! Three operations back the demo page in `www/`: the initialization
//! calculator, the depth-profile explorer and the tanh density explorer.
//! Each returns a JSON payload string; plotting stays on the JS side.

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use varprop::density;
use varprop::propagation::{propagate, recommend_init, Engine, LayerMoments, NetworkConfig};
use varprop::ActivationSpec;

fn parse_weight_variance(
    init: &str,
    activation: &ActivationSpec,
    width: usize,
) -> Result<f64, String> {
    match init {
        "xavier" => Ok(1.0 / width as f64),
        "he" => {
            let relu = ActivationSpec::from_name("relu").map_err(|e| e.to_string())?;
            Ok(recommend_init(&relu, width)
                .map_err(|e| e.to_string())?
                .weight_variance)
        }
        "recommended" => Ok(recommend_init(activation, width)
            .map_err(|e| e.to_string())?
            .weight_variance),
        number => number
            .parse::<f64>()
            .ok()
            .filter(|v| *v > 0.0 && v.is_finite())
            .ok_or_else(|| format!("weight variance must be positive, got `{number}`")),
    }
}

fn recommendation_payload(activation: &str, width: usize) -> Result<Value, String> {
    let spec = ActivationSpec::from_name(activation).map_err(|e| e.to_string())?;
    let rec = recommend_init(&spec, width).map_err(|e| e.to_string())?;
    Ok(json!({
        "activation": activation,
        "width": width,
        "weight_variance": rec.weight_variance,
        "weight_stddev": rec.weight_stddev,
        "engine": rec.engine.as_str(),
    }))
}

fn variance_profile_payload(
    activation: &str,
    width: usize,
    depth: usize,
    init: &str,
) -> Result<Value, String> {
    let spec = ActivationSpec::from_name(activation).map_err(|e| e.to_string())?;
    let weight_variance = parse_weight_variance(init, &spec, width)?;
    let config = NetworkConfig::new(width, depth, weight_variance, spec.clone())
        .map_err(|e| e.to_string())?;
    let engine = if spec.is_relu() {
        Engine::ReluExact
    } else {
        Engine::quadrature()
    };
    let sequence =
        propagate(LayerMoments::standard(&config), &config, engine).map_err(|e| e.to_string())?;
    let layers: Vec<Value> = sequence
        .iter()
        .map(|state| {
            json!({
                "layer": state.layer_index,
                "mean": state.mean,
                "variance": state.variance,
                "preact_stddev": state.preact_variance.sqrt(),
            })
        })
        .collect();
    Ok(json!({
        "activation": activation,
        "weight_variance": weight_variance,
        "engine": engine.name(),
        "layers": layers,
    }))
}

fn density_profile_payload(u: f64, grid_points: usize, threshold: f64) -> Result<Value, String> {
    let curve = density::curve(u, grid_points).map_err(|e| e.to_string())?;
    let saturation = density::saturation_fraction(u, threshold).map_err(|e| e.to_string())?;
    let integral = curve.integral();
    let (ys, densities): (Vec<f64>, Vec<f64>) = curve.points.iter().copied().unzip();
    Ok(json!({
        "u": u,
        "y": ys,
        "density": densities,
        "saturation_fraction": saturation,
        "threshold": threshold,
        "integral": integral,
        "modality": match curve.modality() {
            density::Modality::Unimodal => "unimodal",
            density::Modality::Bimodal => "bimodal",
        },
    }))
}

fn to_js(result: Result<Value, String>) -> Result<String, JsValue> {
    match result {
        Ok(value) => Ok(value.to_string()),
        Err(message) => Err(JsValue::from_str(&message)),
    }
}

/// Recommended weight scale for an activation and width.
#[wasm_bindgen]
pub fn recommendation(activation: &str, width: u32) -> Result<String, JsValue> {
    to_js(recommendation_payload(activation, width as usize))
}

/// Per-layer moment profile under the chosen init
/// (`xavier`, `he`, `recommended` or a number).
#[wasm_bindgen]
pub fn variance_profile(
    activation: &str,
    width: u32,
    depth: u32,
    init: &str,
) -> Result<String, JsValue> {
    to_js(variance_profile_payload(
        activation,
        width as usize,
        depth as usize,
        init,
    ))
}

/// Density of tanh(uZ) on a grid, with saturation and normalization
/// metadata.
#[wasm_bindgen]
pub fn density_profile(u: f64, grid_points: u32, threshold: f64) -> Result<String, JsValue> {
    to_js(density_profile_payload(u, grid_points as usize, threshold))
}
