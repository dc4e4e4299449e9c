//! Custom activations from sample-table files.
//!
//! The file is a single JSON object `{"name": ..., "samples": [[x, g(x)],
//! ...]}`. The evaluator interpolates linearly between samples and clamps to
//! the end values outside the table; g'(0) comes from a central difference
//! at half the gap between the samples bracketing 0.

use std::path::Path;

use serde::Deserialize;
use varprop::ActivationSpec;

use crate::CliError;

#[derive(Deserialize)]
struct TableFile {
    name: String,
    samples: Vec<[f64; 2]>,
}

pub struct CustomActivation {
    pub spec: ActivationSpec,
    pub name: String,
}

pub fn load(path: &Path) -> Result<CustomActivation, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
    let table: TableFile = serde_json::from_str(&text)
        .map_err(|e| CliError::usage(format!("{} is not a valid activation table: {e}", path.display())))?;

    let mut samples = table.samples;
    if samples.len() < 2 {
        return Err(CliError::usage(
            "activation table needs at least two samples".to_string(),
        ));
    }
    if samples.iter().flatten().any(|v| !v.is_finite()) {
        return Err(CliError::usage(
            "activation table contains non-finite samples".to_string(),
        ));
    }
    samples.sort_by(|a, b| a[0].total_cmp(&b[0]));
    if samples.windows(2).any(|pair| pair[0][0] == pair[1][0]) {
        return Err(CliError::usage(
            "activation table has duplicate x values".to_string(),
        ));
    }
    let first = samples[0][0];
    let last = samples[samples.len() - 1][0];
    if !(first < 0.0 && last > 0.0) {
        return Err(CliError::usage(format!(
            "activation table must bracket 0, spans [{first}, {last}]"
        )));
    }

    // half the distance to the nearest sample on each side of 0 keeps the
    // central difference inside the two adjacent segments
    let right = samples.iter().map(|s| s[0]).find(|&x| x > 0.0).unwrap();
    let left = samples.iter().map(|s| s[0]).rev().find(|&x| x < 0.0).unwrap();
    let step = 0.5 * right.min(-left);

    let spec = ActivationSpec::custom(move |x: f64| interpolate(&samples, x), step)
        .map_err(CliError::from)?;
    Ok(CustomActivation {
        spec,
        name: table.name,
    })
}

fn interpolate(samples: &[[f64; 2]], x: f64) -> f64 {
    let n = samples.len();
    if x <= samples[0][0] {
        return samples[0][1];
    }
    if x >= samples[n - 1][0] {
        return samples[n - 1][1];
    }
    let hi = samples.partition_point(|s| s[0] < x);
    let (x0, y0) = (samples[hi - 1][0], samples[hi - 1][1]);
    let (x1, y1) = (samples[hi][0], samples[hi][1]);
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;
    use tempfile::NamedTempFile;

    fn write_table(json: &str) -> NamedTempFile {
        let mut file = NamedTempFile::new().unwrap();
        file.write_all(json.as_bytes()).unwrap();
        file
    }

    #[test]
    fn loads_and_interpolates_a_ramp() {
        let path = write_table(
            r#"{"name": "ramp", "samples": [[-2.0, -2.0], [0.0, 0.0], [2.0, 2.0]]}"#,
        );
        let custom = load(path.path()).unwrap();
        assert_eq!(custom.name, "ramp");
        assert_eq!(custom.spec.eval(0.5), 0.5);
        assert_eq!(custom.spec.eval(5.0), 2.0); // clamped
        assert_eq!(custom.spec.eval(-5.0), -2.0);
        assert!((custom.spec.deriv_at_zero().unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tanh_table_recovers_slope_one() {
        let samples: Vec<String> = (-40..=40)
            .map(|i| {
                let x = i as f64 * 0.05;
                format!("[{x}, {}]", x.tanh())
            })
            .collect();
        let json = format!(r#"{{"name": "tanh-table", "samples": [{}]}}"#, samples.join(","));
        let path = write_table(&json);
        let custom = load(path.path()).unwrap();
        // linear interpolation through tanh samples: slope near 1 at 0
        assert!((custom.spec.deriv_at_zero().unwrap() - 1.0).abs() < 1e-3);
        assert_eq!(custom.spec.value_at_zero(), 0.0);
    }

    #[test]
    fn rejects_tables_that_miss_zero() {
        let path = write_table(r#"{"name": "off", "samples": [[1.0, 1.0], [2.0, 2.0]]}"#);
        assert!(load(path.path()).is_err());
    }

    #[test]
    fn rejects_duplicate_x() {
        let path =
            write_table(r#"{"name": "dup", "samples": [[-1.0, 0.0], [-1.0, 1.0], [1.0, 1.0]]}"#);
        assert!(load(path.path()).is_err());
    }

    #[test]
    fn rejects_malformed_json() {
        let path = write_table("{not json");
        assert!(load(path.path()).is_err());
    }
}
