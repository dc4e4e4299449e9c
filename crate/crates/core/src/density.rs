//! Probability density of tanh-transformed Gaussian pre-activations and
//! saturation metrics.
//!
//! For `Y ~ N(0, u^2)`, `tanh(Y)` has density
//! `f(y) = 1/(1 - y^2) * phi_u(t_y)` on (-1, 1), where
//! `t_y = 1/2 ln((1 + y)/(1 - y))` and `phi_u` is the normal density with
//! standard deviation `u`. Small `u` keeps the mass near 0; large `u`
//! pushes it against the saturation boundaries at -1 and +1.

use crate::error::{Error, Result};

/// Curve grids stop this far short of the boundaries, where the density
/// diverges for large `u`.
pub const GRID_CLIP: f64 = 1e-6;

const FRAC_1_SQRT_2PI: f64 = 0.3989422804014327;
const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// `atanh` written as `1/2 ln((1+y)/(1-y))`, the exact form used in the
/// density.
fn atanh_half_log(y: f64) -> f64 {
    0.5 * ((1.0 + y) / (1.0 - y)).ln()
}

fn check_scale(u: f64) -> Result<()> {
    if u <= 0.0 || !u.is_finite() {
        return Err(Error::Domain(format!(
            "pre-activation standard deviation must be positive and finite, got {u}"
        )));
    }
    Ok(())
}

/// Density of `tanh(Y)` at `y` for `Y ~ N(0, u^2)`; `|y| < 1`, `u > 0`.
pub fn tanh_pdf(y: f64, u: f64) -> Result<f64> {
    check_scale(u)?;
    if y.is_nan() || y.abs() >= 1.0 {
        return Err(Error::Domain(format!(
            "tanh-transformed values live in (-1, 1), got {y}"
        )));
    }
    let t = atanh_half_log(y);
    let gauss = FRAC_1_SQRT_2PI / u * (-t * t / (2.0 * u * u)).exp();
    Ok(gauss / (1.0 - y * y))
}

fn check_threshold(threshold: f64) -> Result<()> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::Domain(format!(
            "saturation threshold must lie in (0, 1), got {threshold}"
        )));
    }
    Ok(())
}

/// `P(|tanh(uZ)| > threshold) = 2 (1 - Phi(atanh(threshold) / u))` for
/// standard normal `Z`; `threshold` in (0, 1).
///
/// Evaluated as a single upper-tail `erfc` so the far tail keeps full
/// precision instead of cancelling against Phi ~ 1.
pub fn saturation_fraction(u: f64, threshold: f64) -> Result<f64> {
    check_scale(u)?;
    check_threshold(threshold)?;
    Ok(libm::erfc(atanh_half_log(threshold) / (u * SQRT_2)))
}

/// Natural log of [`saturation_fraction`], finite far past the point where
/// the fraction itself underflows to 0. Deep tanh layers under shrinking
/// init drive the fraction below 1e-308 within a handful of layers, so
/// monotonicity checks along such chains need the log scale.
pub fn log_saturation_fraction(u: f64, threshold: f64) -> Result<f64> {
    check_scale(u)?;
    check_threshold(threshold)?;
    let x = atanh_half_log(threshold) / (u * SQRT_2);
    if x < 20.0 {
        return Ok(libm::erfc(x).ln());
    }
    // ln erfc(x) from the asymptotic series
    // erfc(x) = exp(-x^2)/(x sqrt(pi)) (1 - 1/(2x^2) + 3/(4x^4) - ...),
    // relative error below 1e-7 for x >= 20
    let inv_sq = 1.0 / (x * x);
    let series = 1.0 - 0.5 * inv_sq + 0.75 * inv_sq * inv_sq;
    Ok(-x * x - (x * std::f64::consts::PI.sqrt()).ln() + series.ln())
}

/// Shape classification of a density curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Modality {
    /// Single maximum at 0.
    Unimodal,
    /// Local minimum at 0 with the mass piled towards -1 and +1.
    Bimodal,
}

/// Sampled density of `tanh(uZ)` on a uniform grid over
/// `[-1 + GRID_CLIP, 1 - GRID_CLIP]`.
#[derive(Debug, Clone)]
pub struct DensityCurve {
    pub preact_stddev: f64,
    /// `(y, f(y))` pairs, strictly increasing in y.
    pub points: Vec<(f64, f64)>,
}

/// Evaluate the density on `grid_points >= 3` uniformly spaced points.
pub fn curve(u: f64, grid_points: usize) -> Result<DensityCurve> {
    check_scale(u)?;
    if grid_points < 3 {
        return Err(Error::Domain(format!(
            "density grid needs at least 3 points, got {grid_points}"
        )));
    }
    let lo = -1.0 + GRID_CLIP;
    let hi = 1.0 - GRID_CLIP;
    let step = (hi - lo) / (grid_points - 1) as f64;
    let points = (0..grid_points)
        .map(|i| {
            let y = if i + 1 == grid_points { hi } else { lo + i as f64 * step };
            Ok((y, tanh_pdf(y, u)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DensityCurve {
        preact_stddev: u,
        points,
    })
}

impl DensityCurve {
    /// Numerical integral of the density over (-1, 1).
    ///
    /// The density grows like `1/(1 - y^2)` towards the clip for u around 1
    /// or larger, so the clipped region is integrated by trapezoid on an
    /// atanh-spaced grid (uniform in `t = atanh y`, where the integrand is
    /// the plain normal density) and the mass beyond the clip is added
    /// analytically via [`saturation_fraction`].
    pub fn integral(&self) -> f64 {
        let u = self.preact_stddev;
        let t_max = atanh_half_log(1.0 - GRID_CLIP);
        let n = 20_000usize;
        let h = 2.0 * t_max / n as f64;
        let mut sum = 0.0;
        for i in 0..=n {
            let t = -t_max + i as f64 * h;
            let y = t.tanh();
            let sech_sq = 1.0 - y * y;
            let f = tanh_pdf(y, u).expect("grid stays inside (-1, 1)") * sech_sq;
            sum += if i == 0 || i == n { 0.5 * f } else { f };
        }
        sum * h + saturation_fraction(u, 1.0 - GRID_CLIP).expect("clip threshold is in (0, 1)")
    }

    /// Classify the curve from its sampled points: bimodal when the maximum
    /// sits away from 0 (interior or against the clip), unimodal otherwise.
    pub fn modality(&self) -> Modality {
        let (argmax_y, _) = self
            .points
            .iter()
            .copied()
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("curve has at least 3 points");
        let step = self.points[1].0 - self.points[0].0;
        if argmax_y.abs() > step {
            Modality::Bimodal
        } else {
            Modality::Unimodal
        }
    }
}
