//! Monte Carlo ground truth.
//!
//! Instantiates random weight matrices, runs the forward recursion
//! `y_m(i) = sum_j W_m(i,j) x_m(j)`, `x_{m+1}(i) = g(y_m(i))` and pools
//! empirical statistics per layer across node positions and trials.
//!
//! Trial `t` draws from a ChaCha stream derived from `(seed, t)`, so trials
//! are independent and may run in parallel while the report stays
//! bit-identical: per-trial sufficient statistics are reduced in trial
//! order regardless of scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use rayon::prelude::*;

use crate::activations::ActivationSpec;
use crate::error::{Error, Result};

/// Minimum pooled sample count per layer for stable skewness and kurtosis.
pub const MIN_DIAGNOSTIC_SAMPLES: u64 = 10_000;

/// Weight family; the propagation theory sees it only through its variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightDistribution {
    /// Zero-mean normal with the given standard deviation.
    Gaussian { stddev: f64 },
    /// `U[-half_width, half_width]`, variance `half_width^2 / 3`.
    Uniform { half_width: f64 },
}

impl WeightDistribution {
    pub fn variance(&self) -> f64 {
        match self {
            WeightDistribution::Gaussian { stddev } => stddev * stddev,
            WeightDistribution::Uniform { half_width } => half_width * half_width / 3.0,
        }
    }

    fn parameter(&self) -> f64 {
        match self {
            WeightDistribution::Gaussian { stddev } => *stddev,
            WeightDistribution::Uniform { half_width } => *half_width,
        }
    }
}

/// First-layer input family. The theory only assumes mean 0 and variance 1;
/// the rademacher option exists to probe that robustness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InputDistribution {
    #[default]
    StandardNormal,
    /// Fair +/-1 draws.
    Rademacher,
}

/// A Monte Carlo experiment description. Identical configs produce
/// bit-identical reports.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub width: usize,
    pub depth: usize,
    pub weights: WeightDistribution,
    pub activation: ActivationSpec,
    pub trials: usize,
    pub seed: u64,
    pub inputs: InputDistribution,
}

/// Pooled per-layer statistics. `act_*` describe the layer inputs `x_m`,
/// `preact_*` the pre-activations `y_m` computed from them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerStats {
    pub layer_index: usize,
    pub samples: u64,
    pub act_mean: f64,
    pub act_variance: f64,
    pub preact_mean: f64,
    pub preact_variance: f64,
    pub preact_skewness: f64,
    pub preact_excess_kurtosis: f64,
    /// False from the first overflowed layer onward.
    pub valid: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    pub per_layer: Vec<LayerStats>,
    pub trials_used: usize,
    /// Earliest layer where any trial produced a non-finite value.
    pub overflow_layer: Option<usize>,
}

/// Per-layer pre-activation normality diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalityRow {
    pub layer_index: usize,
    pub skewness: f64,
    pub excess_kurtosis: f64,
}

/// Streaming central-moment accumulator up to fourth order, with an exact
/// merge so per-trial accumulators reduce to the pooled statistics.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    n: u64,
    m1: f64,
    m2: f64,
    m3: f64,
    m4: f64,
}

impl Moments {
    pub fn new() -> Moments {
        Moments::default()
    }

    pub fn push(&mut self, x: f64) {
        let n_prev = self.n as f64;
        self.n += 1;
        let n = self.n as f64;
        let delta = x - self.m1;
        let delta_n = delta / n;
        let delta_n2 = delta_n * delta_n;
        let term = delta * delta_n * n_prev;
        self.m4 += term * delta_n2 * (n * n - 3.0 * n + 3.0) + 6.0 * delta_n2 * self.m2
            - 4.0 * delta_n * self.m3;
        self.m3 += term * delta_n * (n - 2.0) - 3.0 * delta_n * self.m2;
        self.m2 += term;
        self.m1 += delta_n;
    }

    pub fn merge(a: &Moments, b: &Moments) -> Moments {
        if a.n == 0 {
            return *b;
        }
        if b.n == 0 {
            return *a;
        }
        let na = a.n as f64;
        let nb = b.n as f64;
        let n = na + nb;
        let delta = b.m1 - a.m1;
        let delta2 = delta * delta;
        let m1 = a.m1 + delta * nb / n;
        let m2 = a.m2 + b.m2 + delta2 * na * nb / n;
        let m3 = a.m3
            + b.m3
            + delta2 * delta * na * nb * (na - nb) / (n * n)
            + 3.0 * delta * (na * b.m2 - nb * a.m2) / n;
        let m4 = a.m4
            + b.m4
            + delta2 * delta2 * na * nb * (na * na - na * nb + nb * nb) / (n * n * n)
            + 6.0 * delta2 * (na * na * b.m2 + nb * nb * a.m2) / (n * n)
            + 4.0 * delta * (na * b.m3 - nb * a.m3) / n;
        Moments {
            n: a.n + b.n,
            m1,
            m2,
            m3,
            m4,
        }
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.m1
    }

    /// Population variance.
    pub fn variance(&self) -> f64 {
        self.m2 / self.n as f64
    }

    pub fn skewness(&self) -> f64 {
        (self.n as f64).sqrt() * self.m3 / self.m2.powf(1.5)
    }

    pub fn excess_kurtosis(&self) -> f64 {
        self.n as f64 * self.m4 / (self.m2 * self.m2) - 3.0
    }
}

fn validate(config: &SimConfig) -> Result<()> {
    if config.width < 1 {
        return Err(Error::Domain("width must be at least 1".into()));
    }
    if config.depth < 1 {
        return Err(Error::Domain("depth must be at least 1".into()));
    }
    if config.trials < 1 {
        return Err(Error::Domain("trials must be at least 1".into()));
    }
    let parameter = config.weights.parameter();
    if parameter <= 0.0 || !parameter.is_finite() {
        return Err(Error::Domain(format!(
            "weight distribution parameter must be positive and finite, got {parameter}"
        )));
    }
    Ok(())
}

struct TrialLayer {
    act: Moments,
    preact: Option<Moments>,
}

struct TrialOutcome {
    layers: Vec<TrialLayer>,
    overflow: Option<usize>,
}

fn sample_inputs<R: Rng>(rng: &mut R, inputs: InputDistribution, x: &mut [f64]) {
    match inputs {
        InputDistribution::StandardNormal => {
            for v in x {
                *v = rng.sample(StandardNormal);
            }
        }
        InputDistribution::Rademacher => {
            for v in x {
                *v = if rng.random::<bool>() { 1.0 } else { -1.0 };
            }
        }
    }
}

/// One forward matvec with weights drawn on the fly, row by row.
fn forward<R: Rng>(rng: &mut R, weights: &WeightDistribution, x: &[f64], y: &mut [f64]) {
    match weights {
        WeightDistribution::Gaussian { stddev } => {
            for yi in y.iter_mut() {
                let mut acc = 0.0;
                for &xj in x {
                    let z: f64 = rng.sample(StandardNormal);
                    acc += z * xj;
                }
                *yi = stddev * acc;
            }
        }
        WeightDistribution::Uniform { half_width } => {
            let dist = Uniform::new_inclusive(-half_width, *half_width)
                .expect("half-width validated as positive");
            for yi in y.iter_mut() {
                let mut acc = 0.0;
                for &xj in x {
                    acc += dist.sample(rng) * xj;
                }
                *yi = acc;
            }
        }
    }
}

fn collect_moments(values: &[f64]) -> Moments {
    let mut moments = Moments::new();
    for &v in values {
        moments.push(v);
    }
    moments
}

fn run_trial(config: &SimConfig, trial: u64) -> TrialOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(trial);
    let n = config.width;
    let mut x = vec![0.0; n];
    let mut y = vec![0.0; n];
    sample_inputs(&mut rng, config.inputs, &mut x);

    let mut layers = Vec::with_capacity(config.depth);
    let mut overflow = None;
    for layer in 1..=config.depth {
        let act = collect_moments(&x);
        forward(&mut rng, &config.weights, &x, &mut y);
        if y.iter().any(|v| !v.is_finite()) {
            layers.push(TrialLayer { act, preact: None });
            overflow = Some(layer);
            break;
        }
        layers.push(TrialLayer {
            act,
            preact: Some(collect_moments(&y)),
        });
        if layer == config.depth {
            break;
        }
        for (xi, &yi) in x.iter_mut().zip(y.iter()) {
            *xi = config.activation.eval(yi);
        }
        if x.iter().any(|v| !v.is_finite()) {
            overflow = Some(layer + 1);
            break;
        }
    }
    TrialOutcome { layers, overflow }
}

/// Run the experiment and pool statistics per layer.
///
/// Entry 1 of `per_layer` reports the sampled inputs together with the
/// first layer's pre-activations. Non-finite values (possible only with
/// unstable custom activations) set `overflow_layer` and invalidate that
/// layer and everything deeper.
pub fn run(config: &SimConfig) -> Result<SimReport> {
    validate(config)?;
    let outcomes: Vec<TrialOutcome> = (0..config.trials as u64)
        .into_par_iter()
        .map(|trial| run_trial(config, trial))
        .collect();

    let mut act = vec![Moments::new(); config.depth];
    let mut preact = vec![Moments::new(); config.depth];
    let mut overflow_layer: Option<usize> = None;
    // fixed trial order keeps the floating-point reduction deterministic
    for outcome in &outcomes {
        if let Some(layer) = outcome.overflow {
            overflow_layer = Some(overflow_layer.map_or(layer, |l| l.min(layer)));
        }
        for (index, layer) in outcome.layers.iter().enumerate() {
            act[index] = Moments::merge(&act[index], &layer.act);
            if let Some(p) = &layer.preact {
                preact[index] = Moments::merge(&preact[index], p);
            }
        }
    }

    let per_layer = (0..config.depth)
        .map(|index| {
            let layer_index = index + 1;
            let a = &act[index];
            let p = &preact[index];
            LayerStats {
                layer_index,
                samples: p.count(),
                act_mean: a.mean(),
                act_variance: a.variance(),
                preact_mean: p.mean(),
                preact_variance: p.variance(),
                preact_skewness: p.skewness(),
                preact_excess_kurtosis: p.excess_kurtosis(),
                valid: overflow_layer.is_none_or(|l| layer_index < l),
            }
        })
        .collect();

    Ok(SimReport {
        per_layer,
        trials_used: config.trials,
        overflow_layer,
    })
}

/// Pooled pre-activation skewness and excess kurtosis per layer.
///
/// Requires at least [`MIN_DIAGNOSTIC_SAMPLES`] pooled samples in every
/// layer; fourth moments are noisy below that.
pub fn normality_diagnostics(report: &SimReport) -> Result<Vec<NormalityRow>> {
    for stats in &report.per_layer {
        if stats.samples < MIN_DIAGNOSTIC_SAMPLES {
            return Err(Error::InsufficientData {
                required: MIN_DIAGNOSTIC_SAMPLES,
                actual: stats.samples,
            });
        }
    }
    Ok(report
        .per_layer
        .iter()
        .map(|stats| NormalityRow {
            layer_index: stats.layer_index,
            skewness: stats.preact_skewness,
            excess_kurtosis: stats.preact_excess_kurtosis,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn base_config(name: &str, width: usize, depth: usize, trials: usize) -> SimConfig {
        SimConfig {
            width,
            depth,
            weights: WeightDistribution::Gaussian {
                stddev: (1.0 / width as f64).sqrt(),
            },
            activation: ActivationSpec::from_name(name).unwrap(),
            trials,
            seed: 42,
            inputs: InputDistribution::StandardNormal,
        }
    }

    #[test]
    fn moments_match_direct_computation() {
        let data = [2.5, -1.0, 0.25, 4.0, -3.5, 1.5, 0.0, 2.0];
        let mut acc = Moments::new();
        for &v in &data {
            acc.push(v);
        }
        let n = data.len() as f64;
        let mean = data.iter().sum::<f64>() / n;
        let central = |k: i32| data.iter().map(|v| (v - mean).powi(k)).sum::<f64>() / n;
        assert_relative_eq!(acc.mean(), mean, max_relative = 1e-12);
        assert_relative_eq!(acc.variance(), central(2), max_relative = 1e-12);
        assert_relative_eq!(
            acc.skewness(),
            central(3) / central(2).powf(1.5),
            max_relative = 1e-12
        );
        assert_relative_eq!(
            acc.excess_kurtosis(),
            central(4) / (central(2) * central(2)) - 3.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn moments_merge_equals_sequential_push() {
        let data: Vec<f64> = (0..40).map(|i| ((i * 37) % 19) as f64 * 0.3 - 2.0).collect();
        let mut whole = Moments::new();
        for &v in &data {
            whole.push(v);
        }
        let (left, right) = data.split_at(13);
        let merged = Moments::merge(&collect_moments(left), &collect_moments(right));
        assert_eq!(merged.count(), whole.count());
        assert_relative_eq!(merged.mean(), whole.mean(), max_relative = 1e-12);
        assert_relative_eq!(merged.variance(), whole.variance(), max_relative = 1e-12);
        assert_relative_eq!(merged.skewness(), whole.skewness(), max_relative = 1e-10);
        assert_relative_eq!(
            merged.excess_kurtosis(),
            whole.excess_kurtosis(),
            max_relative = 1e-10
        );
    }

    #[test]
    fn identical_configs_give_bit_identical_reports() {
        let config = base_config("tanh", 32, 3, 10);
        let a = run(&config).unwrap();
        let b = run(&config).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn different_seeds_differ() {
        let mut config = base_config("tanh", 32, 3, 10);
        let a = run(&config).unwrap();
        config.seed = 43;
        let b = run(&config).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn depth_one_identity_reports_the_inputs() {
        let config = base_config("identity", 256, 1, 50);
        let report = run(&config).unwrap();
        assert_eq!(report.per_layer.len(), 1);
        let layer = &report.per_layer[0];
        assert_eq!(layer.samples, 256 * 50);
        assert!((layer.act_variance - 1.0).abs() < 0.05);
        assert!(layer.act_mean.abs() < 0.05);
        assert!(layer.valid);
    }

    #[test]
    fn rademacher_inputs_have_unit_variance() {
        let mut config = base_config("tanh", 128, 2, 40);
        config.inputs = InputDistribution::Rademacher;
        let report = run(&config).unwrap();
        let layer = &report.per_layer[0];
        assert!((layer.act_variance - 1.0).abs() < 0.02);
        // pre-activations are still CLT-normal sums
        assert!(report.per_layer[1].preact_excess_kurtosis.abs() < 0.5);
    }

    #[test]
    fn unstable_custom_activation_sets_overflow_flag() {
        let mut config = base_config("tanh", 16, 4, 5);
        config.activation = ActivationSpec::custom(|x| (x * 5000.0).exp(), 1e-5).unwrap();
        let report = run(&config).unwrap();
        assert_eq!(report.overflow_layer, Some(2));
        assert!(report.per_layer[0].valid);
        assert!(report.per_layer[1..].iter().all(|l| !l.valid));
    }

    #[test]
    fn diagnostics_require_enough_samples() {
        let config = base_config("tanh", 16, 2, 4);
        let report = run(&config).unwrap();
        match normality_diagnostics(&report) {
            Err(Error::InsufficientData { required, actual }) => {
                assert_eq!(required, MIN_DIAGNOSTIC_SAMPLES);
                assert_eq!(actual, 64);
            }
            other => panic!("expected insufficient data, got {other:?}"),
        }
    }

    #[test]
    fn diagnostics_on_gaussian_preacts_are_near_zero() {
        let config = base_config("identity", 128, 1, 100);
        let report = run(&config).unwrap();
        let rows = normality_diagnostics(&report).unwrap();
        assert_eq!(rows.len(), 1);
        assert!(rows[0].skewness.abs() < 0.1);
        assert!(rows[0].excess_kurtosis.abs() < 0.3);
    }

    #[test]
    fn config_validation() {
        let mut config = base_config("tanh", 0, 2, 4);
        assert!(run(&config).is_err());
        config.width = 4;
        config.trials = 0;
        assert!(run(&config).is_err());
        config.trials = 1;
        config.weights = WeightDistribution::Gaussian { stddev: 0.0 };
        assert!(run(&config).is_err());
    }

    #[test]
    fn uniform_weight_variance_is_third_of_squared_half_width() {
        let dist = WeightDistribution::Uniform { half_width: 0.3 };
        assert_abs_diff_eq!(dist.variance(), 0.03, epsilon = 1e-15);
        let dist = WeightDistribution::Gaussian { stddev: 0.2 };
        assert_abs_diff_eq!(dist.variance(), 0.04, epsilon = 1e-15);
    }
}
