//! Agreement statistics between two hourly count series: the reference
//! camera counter versus the vision pipeline.
//!
//! Conventions are fixed by the bundled reference tables: differences are
//! camera minus model, spread is the Bessel-corrected sample standard
//! deviation, and correlation significance is the two-sided p of
//! t = r*sqrt((n-2)/(1-r^2)) against Student's t with n-2 degrees of
//! freedom.

use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::types::StatsReport;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("series lengths differ: {a} vs {b}")]
    LengthMismatch { a: usize, b: usize },
    #[error("need at least {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("a series is constant, correlation is undefined")]
    ZeroVariance,
    #[error("correlation is exactly +/-1, the t statistic diverges")]
    PerfectCorrelation,
    #[error("table parse error on line {line}: {msg}")]
    TableParse { line: usize, msg: String },
    #[error("table read error: {0}")]
    Io(String),
}

/// One labeled row of hourly counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountSeries {
    pub labels: Vec<String>,
    pub values: Vec<u64>,
}

impl CountSeries {
    pub fn new(labels: Vec<String>, values: Vec<u64>) -> Result<Self, EvalError> {
        if labels.len() != values.len() {
            return Err(EvalError::LengthMismatch {
                a: labels.len(),
                b: values.len(),
            });
        }
        Ok(CountSeries { labels, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.values.iter().sum()
    }

    fn as_f64(&self) -> Vec<f64> {
        self.values.iter().map(|&v| v as f64).collect()
    }
}

fn check_lengths(a: &CountSeries, b: &CountSeries) -> Result<usize, EvalError> {
    if a.len() != b.len() {
        return Err(EvalError::LengthMismatch {
            a: a.len(),
            b: b.len(),
        });
    }
    Ok(a.len())
}

/// Per-bucket differences `b - a`, with `a` the model counts and `b` the
/// camera counts.
pub fn diffs(a: &CountSeries, b: &CountSeries) -> Result<Vec<i64>, EvalError> {
    let n = check_lengths(a, b)?;
    if n == 0 {
        return Err(EvalError::InsufficientData { needed: 1, got: 0 });
    }
    Ok(a.values
        .iter()
        .zip(&b.values)
        .map(|(&a, &b)| b as i64 - a as i64)
        .collect())
}

/// Mean of `b - a`. With `a` the model and `b` the camera this is the
/// average camera-minus-model error.
pub fn mean_diff(a: &CountSeries, b: &CountSeries) -> Result<f64, EvalError> {
    let d = diffs(a, b)?;
    Ok(d.iter().sum::<i64>() as f64 / d.len() as f64)
}

/// Bessel-corrected sample standard deviation.
pub fn sample_std(values: &[f64]) -> Result<f64, EvalError> {
    if values.len() < 2 {
        return Err(EvalError::InsufficientData {
            needed: 2,
            got: values.len(),
        });
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>();
    Ok((ss / (n - 1.0)).sqrt())
}

/// Product-moment correlation of two equal-length real series.
pub fn pearson_slices(a: &[f64], b: &[f64]) -> Result<f64, EvalError> {
    if a.len() != b.len() {
        return Err(EvalError::LengthMismatch {
            a: a.len(),
            b: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(EvalError::InsufficientData {
            needed: 2,
            got: a.len(),
        });
    }
    let n = a.len() as f64;
    let mean_a = a.iter().sum::<f64>() / n;
    let mean_b = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_a = 0.0;
    let mut var_b = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        let dx = x - mean_a;
        let dy = y - mean_b;
        cov += dx * dy;
        var_a += dx * dx;
        var_b += dy * dy;
    }
    if var_a == 0.0 || var_b == 0.0 {
        return Err(EvalError::ZeroVariance);
    }
    Ok((cov / (var_a * var_b).sqrt()).clamp(-1.0, 1.0))
}

pub fn pearson(a: &CountSeries, b: &CountSeries) -> Result<f64, EvalError> {
    check_lengths(a, b)?;
    pearson_slices(&a.as_f64(), &b.as_f64())
}

/// Two-sided significance of a correlation coefficient observed on `n`
/// paired samples.
pub fn pearson_p_value(r: f64, n: usize) -> Result<f64, EvalError> {
    if n < 3 {
        return Err(EvalError::InsufficientData { needed: 3, got: n });
    }
    if !(-1.0..=1.0).contains(&r) {
        return Err(EvalError::PerfectCorrelation);
    }
    if (1.0 - r * r) < 1e-12 {
        return Err(EvalError::PerfectCorrelation);
    }
    let df = (n - 2) as f64;
    let t = r * (df / (1.0 - r * r)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("degrees of freedom are positive");
    Ok(2.0 * (1.0 - dist.cdf(t.abs())))
}

/// One table of hourly counts for a single day: camera and model rows
/// plus the transcribed difference rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DayTable {
    pub labels: Vec<String>,
    pub camera_in: CountSeries,
    pub camera_out: CountSeries,
    pub model_in: CountSeries,
    pub model_out: CountSeries,
    pub diff_in: Vec<i64>,
    pub diff_out: Vec<i64>,
}

const TABLE_ROWS: [&str; 6] = [
    "camera_in",
    "camera_out",
    "model_in",
    "model_out",
    "diff_in",
    "diff_out",
];

impl DayTable {
    /// Parses the packaged table layout: a `hour` header listing the
    /// buckets plus a trailing `total` column, then the six rows named
    /// camera_in, camera_out, model_in, model_out, diff_in, diff_out.
    /// Every row's total column must equal the sum of its buckets.
    pub fn from_reader(reader: impl BufRead) -> Result<Self, EvalError> {
        let parse = |line: usize, msg: &str| EvalError::TableParse {
            line,
            msg: msg.to_owned(),
        };
        let mut lines = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|err| EvalError::Io(err.to_string()))?;
            if !line.trim().is_empty() {
                lines.push((i + 1, line));
            }
        }
        if lines.len() != 7 {
            return Err(parse(
                lines.len(),
                &format!("expected header plus 6 rows, found {} lines", lines.len()),
            ));
        }

        let (header_no, header) = &lines[0];
        let header_fields: Vec<&str> = header.split(',').map(str::trim).collect();
        if header_fields.first() != Some(&"hour") || header_fields.last() != Some(&"total") {
            return Err(parse(*header_no, "header must be hour,<buckets...>,total"));
        }
        let labels: Vec<String> = header_fields[1..header_fields.len() - 1]
            .iter()
            .map(|s| (*s).to_owned())
            .collect();
        if labels.is_empty() {
            return Err(parse(*header_no, "no hour buckets in header"));
        }

        let mut rows: Vec<Vec<i64>> = Vec::new();
        for (row_index, expected_name) in TABLE_ROWS.iter().enumerate() {
            let (line_no, line) = &lines[row_index + 1];
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != labels.len() + 2 {
                return Err(parse(
                    *line_no,
                    &format!(
                        "row '{expected_name}' must have {} fields, found {}",
                        labels.len() + 2,
                        fields.len()
                    ),
                ));
            }
            if fields[0] != *expected_name {
                return Err(parse(
                    *line_no,
                    &format!("expected row '{expected_name}', found '{}'", fields[0]),
                ));
            }
            let mut values = Vec::with_capacity(labels.len() + 1);
            for field in &fields[1..] {
                let value: i64 = field
                    .parse()
                    .map_err(|_| parse(*line_no, &format!("bad integer '{field}'")))?;
                values.push(value);
            }
            let total = values.pop().expect("row has a total column");
            if values.iter().sum::<i64>() != total {
                return Err(parse(
                    *line_no,
                    &format!("total {total} does not match the row sum"),
                ));
            }
            if row_index < 4 && values.iter().any(|&v| v < 0) {
                return Err(parse(*line_no, "count rows must be non-negative"));
            }
            rows.push(values);
        }

        let diff_out = rows.pop().expect("six rows were parsed");
        let diff_in = rows.pop().expect("six rows were parsed");
        let mut counts: Vec<CountSeries> = rows
            .into_iter()
            .map(|row| {
                CountSeries::new(labels.clone(), row.into_iter().map(|v| v as u64).collect())
                    .expect("labels and values have equal length")
            })
            .collect();
        let model_out = counts.pop().unwrap();
        let model_in = counts.pop().unwrap();
        let camera_out = counts.pop().unwrap();
        let camera_in = counts.pop().unwrap();
        Ok(DayTable {
            labels,
            camera_in,
            camera_out,
            model_in,
            model_out,
            diff_in,
            diff_out,
        })
    }

    pub fn from_path(path: &Path) -> Result<Self, EvalError> {
        let file = std::fs::File::open(path).map_err(|err| EvalError::Io(err.to_string()))?;
        DayTable::from_reader(std::io::BufReader::new(file))
    }
}

/// Agreement statistics for one aligned pair, `model` against the
/// `camera` reference; differences are camera minus model. Degenerate
/// correlations (a constant series, or |r| exactly 1) surface as absent
/// r and p rather than an error.
pub fn compare(model: &CountSeries, camera: &CountSeries) -> Result<StatsReport, EvalError> {
    let d = diffs(model, camera)?;
    let d_f64: Vec<f64> = d.iter().map(|&v| v as f64).collect();
    let mean = mean_diff(model, camera)?;
    let std = sample_std(&d_f64)?;
    let (pearson_r, p_value) = match pearson(camera, model) {
        Ok(r) => match pearson_p_value(r, camera.len()) {
            Ok(p) => (Some(r), Some(p)),
            Err(EvalError::PerfectCorrelation) => (None, None),
            Err(err) => return Err(err),
        },
        Err(EvalError::ZeroVariance) => (None, None),
        Err(err) => return Err(err),
    };
    Ok(StatsReport {
        n: camera.len(),
        mean_diff: mean,
        sample_std: std,
        pearson_r,
        p_value,
    })
}

/// In and Out agreement statistics for one day table.
pub fn report(table: &DayTable) -> Result<(StatsReport, StatsReport), EvalError> {
    Ok((
        compare(&table.model_in, &table.camera_in)?,
        compare(&table.model_out, &table.camera_out)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn series(values: &[u64]) -> CountSeries {
        let labels = (0..values.len()).map(|i| format!("{i:02}:00")).collect();
        CountSeries::new(labels, values.to_vec()).unwrap()
    }

    const DAY1_CAMERA_IN: [u64; 14] = [12, 65, 84, 47, 26, 84, 50, 51, 28, 70, 28, 8, 9, 0];
    const DAY1_CAMERA_OUT: [u64; 14] = [2, 15, 21, 35, 81, 44, 61, 31, 63, 32, 59, 66, 26, 8];
    const DAY1_MODEL_IN: [u64; 14] = [11, 78, 87, 52, 28, 96, 60, 58, 43, 75, 33, 18, 10, 0];
    const DAY1_MODEL_OUT: [u64; 14] = [2, 13, 23, 33, 73, 44, 63, 31, 58, 31, 59, 62, 25, 8];
    const DAY2_CAMERA_IN: [u64; 14] = [4, 57, 113, 62, 34, 73, 75, 65, 56, 93, 27, 10, 9, 0];
    const DAY2_CAMERA_OUT: [u64; 14] = [0, 10, 29, 57, 80, 53, 74, 41, 82, 52, 49, 84, 20, 8];
    const DAY2_MODEL_IN: [u64; 14] = [3, 61, 113, 68, 43, 76, 79, 73, 69, 98, 33, 21, 10, 0];
    const DAY2_MODEL_OUT: [u64; 14] = [0, 11, 26, 46, 64, 48, 72, 38, 73, 49, 47, 82, 22, 6];

    #[test]
    fn mean_diffs_match_the_reference_days() {
        let m = |model: &[u64], camera: &[u64]| mean_diff(&series(model), &series(camera)).unwrap();
        assert_abs_diff_eq!(
            m(&DAY1_MODEL_IN, &DAY1_CAMERA_IN),
            -87.0 / 14.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            m(&DAY1_MODEL_OUT, &DAY1_CAMERA_OUT),
            19.0 / 14.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            m(&DAY2_MODEL_IN, &DAY2_CAMERA_IN),
            -69.0 / 14.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            m(&DAY2_MODEL_OUT, &DAY2_CAMERA_OUT),
            55.0 / 14.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn sample_stds_match_the_reference_days() {
        let s = |model: &[u64], camera: &[u64]| {
            let d: Vec<f64> = diffs(&series(model), &series(camera))
                .unwrap()
                .iter()
                .map(|&v| v as f64)
                .collect();
            sample_std(&d).unwrap()
        };
        assert_abs_diff_eq!(s(&DAY1_MODEL_IN, &DAY1_CAMERA_IN), 5.086612, epsilon = 1e-6);
        assert_abs_diff_eq!(s(&DAY1_MODEL_OUT, &DAY1_CAMERA_OUT), 2.734597, epsilon = 1e-6);
        assert_abs_diff_eq!(s(&DAY2_MODEL_IN, &DAY2_CAMERA_IN), 4.251050, epsilon = 1e-6);
        assert_abs_diff_eq!(s(&DAY2_MODEL_OUT, &DAY2_CAMERA_OUT), 4.921918, epsilon = 1e-6);
    }

    #[test]
    fn pearson_matches_the_reference_days() {
        let r = |a: &[u64], b: &[u64]| pearson(&series(a), &series(b)).unwrap();
        assert_abs_diff_eq!(r(&DAY1_CAMERA_IN, &DAY1_MODEL_IN), 0.988437, epsilon = 1e-6);
        assert_abs_diff_eq!(r(&DAY1_CAMERA_OUT, &DAY1_MODEL_OUT), 0.995003, epsilon = 1e-6);
        assert_abs_diff_eq!(r(&DAY2_CAMERA_IN, &DAY2_MODEL_IN), 0.992846, epsilon = 1e-6);
        assert_abs_diff_eq!(r(&DAY2_CAMERA_OUT, &DAY2_MODEL_OUT), 0.988943, epsilon = 1e-6);
    }

    #[test]
    fn reference_correlations_are_significant() {
        for (a, b) in [
            (&DAY1_CAMERA_IN, &DAY1_MODEL_IN),
            (&DAY1_CAMERA_OUT, &DAY1_MODEL_OUT),
            (&DAY2_CAMERA_IN, &DAY2_MODEL_IN),
            (&DAY2_CAMERA_OUT, &DAY2_MODEL_OUT),
        ] {
            let r = pearson(&series(a), &series(b)).unwrap();
            let p = pearson_p_value(r, 14).unwrap();
            assert!(p <= 0.05, "r {r} gave p {p}");
            assert!(p < 1e-8, "reference correlations are far beyond 0.05: {p}");
        }
    }

    #[test]
    fn mean_diff_is_antisymmetric() {
        let a = series(&DAY1_MODEL_IN);
        let b = series(&DAY1_CAMERA_IN);
        assert_abs_diff_eq!(
            mean_diff(&a, &b).unwrap(),
            -mean_diff(&b, &a).unwrap(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn zero_variance_and_identical_series_are_degenerate() {
        let constant = series(&[5; 14]);
        let varied = series(&DAY1_CAMERA_IN);
        assert_eq!(
            pearson(&constant, &varied).unwrap_err(),
            EvalError::ZeroVariance
        );
        assert_abs_diff_eq!(pearson(&varied, &varied).unwrap(), 1.0, epsilon = 1e-12);
        assert_eq!(
            pearson_p_value(1.0, 14).unwrap_err(),
            EvalError::PerfectCorrelation
        );
        assert_eq!(mean_diff(&varied, &varied).unwrap(), 0.0);
    }

    #[test]
    fn p_value_limits() {
        assert_abs_diff_eq!(pearson_p_value(0.0, 14).unwrap(), 1.0, epsilon = 1e-12);
        assert_eq!(
            pearson_p_value(0.5, 2).unwrap_err(),
            EvalError::InsufficientData { needed: 3, got: 2 }
        );
    }

    #[test]
    fn p_value_agrees_with_a_permutation_test() {
        // Null reference: shuffle one series, recording how often the
        // shuffled |r| reaches the observed |r|. For n=14 and a mid-range
        // r this estimates the same tail mass as the t distribution.
        let a: Vec<f64> = DAY1_CAMERA_IN.iter().map(|&v| v as f64).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let noisy: Vec<f64> = a
            .iter()
            .map(|&v| 0.35 * v + rng.gen_range(-40.0..40.0))
            .collect();
        let observed = pearson_slices(&a, &noisy).unwrap();
        assert!(
            observed.abs() > 0.3 && observed.abs() < 0.8,
            "want a mid-range correlation, got {observed}"
        );

        let analytic = pearson_p_value(observed, a.len()).unwrap();
        let mut shuffled = noisy.clone();
        let trials = 100_000;
        let mut hits = 0usize;
        for _ in 0..trials {
            shuffled.shuffle(&mut rng);
            if pearson_slices(&a, &shuffled).unwrap().abs() >= observed.abs() {
                hits += 1;
            }
        }
        let empirical = hits as f64 / trials as f64;
        assert!(
            (analytic - empirical).abs() < 0.01,
            "analytic {analytic} vs permutation {empirical}"
        );
    }

    #[test]
    fn pearson_is_symmetric_and_affine_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let a: Vec<f64> = (0..14).map(|_| rng.gen_range(0.0..100.0)).collect();
            let b: Vec<f64> = (0..14).map(|_| rng.gen_range(0.0..100.0)).collect();
            let r = pearson_slices(&a, &b).unwrap();
            assert_abs_diff_eq!(r, pearson_slices(&b, &a).unwrap(), epsilon = 1e-12);
            let alpha = rng.gen_range(0.1..10.0);
            let beta = rng.gen_range(-50.0..50.0);
            let scaled: Vec<f64> = a.iter().map(|&v| alpha * v + beta).collect();
            assert!((pearson_slices(&scaled, &b).unwrap() - r).abs() < 1e-12);
        }
    }

    fn day1_csv() -> String {
        let rows: [(&str, Vec<i64>); 6] = [
            ("camera_in", DAY1_CAMERA_IN.iter().map(|&v| v as i64).collect()),
            ("camera_out", DAY1_CAMERA_OUT.iter().map(|&v| v as i64).collect()),
            ("model_in", DAY1_MODEL_IN.iter().map(|&v| v as i64).collect()),
            ("model_out", DAY1_MODEL_OUT.iter().map(|&v| v as i64).collect()),
            (
                "diff_in",
                DAY1_CAMERA_IN
                    .iter()
                    .zip(&DAY1_MODEL_IN)
                    .map(|(&c, &m)| c as i64 - m as i64)
                    .collect(),
            ),
            (
                "diff_out",
                DAY1_CAMERA_OUT
                    .iter()
                    .zip(&DAY1_MODEL_OUT)
                    .map(|(&c, &m)| c as i64 - m as i64)
                    .collect(),
            ),
        ];
        let mut csv = String::from("hour");
        for hour in 5..=18 {
            csv.push_str(&format!(",{hour:02}:00"));
        }
        csv.push_str(",total\n");
        for (name, values) in rows {
            csv.push_str(name);
            let total: i64 = values.iter().sum();
            for v in values {
                csv.push_str(&format!(",{v}"));
            }
            csv.push_str(&format!(",{total}\n"));
        }
        csv
    }

    #[test]
    fn table_loader_round_trips_day_one() {
        let table = DayTable::from_reader(day1_csv().as_bytes()).unwrap();
        assert_eq!(table.labels.len(), 14);
        assert_eq!(table.camera_in.total(), 562);
        assert_eq!(table.model_in.total(), 649);
        assert_eq!(table.diff_in.iter().sum::<i64>(), -87);
        assert_eq!(table.diff_out.iter().sum::<i64>(), 19);
        assert_eq!(
            diffs(&table.model_in, &table.camera_in).unwrap(),
            table.diff_in
        );
        assert_eq!(
            diffs(&table.model_out, &table.camera_out).unwrap(),
            table.diff_out
        );
    }

    #[test]
    fn table_loader_rejects_broken_totals() {
        let mut csv = day1_csv();
        csv = csv.replace(",562\n", ",563\n");
        let err = DayTable::from_reader(csv.as_bytes()).unwrap_err();
        assert!(matches!(err, EvalError::TableParse { line: 2, .. }), "{err}");
    }

    #[test]
    fn table_loader_rejects_misnamed_rows() {
        let csv = day1_csv().replace("model_in", "ai_in");
        let err = DayTable::from_reader(csv.as_bytes()).unwrap_err();
        assert!(matches!(err, EvalError::TableParse { line: 4, .. }), "{err}");
    }

    #[test]
    fn report_reproduces_day_one_statistics() {
        let table = DayTable::from_reader(day1_csv().as_bytes()).unwrap();
        let (stats_in, stats_out) = report(&table).unwrap();
        assert_eq!(stats_in.n, 14);
        assert_abs_diff_eq!(stats_in.mean_diff, -87.0 / 14.0, epsilon = 1e-9);
        assert_abs_diff_eq!(stats_in.sample_std, 5.086612, epsilon = 1e-6);
        assert_abs_diff_eq!(stats_in.pearson_r.unwrap(), 0.988437, epsilon = 1e-6);
        assert!(stats_in.p_value.unwrap() <= 0.05);
        assert_abs_diff_eq!(stats_out.mean_diff, 19.0 / 14.0, epsilon = 1e-9);
        assert_abs_diff_eq!(stats_out.sample_std, 2.734597, epsilon = 1e-6);
        assert_abs_diff_eq!(stats_out.pearson_r.unwrap(), 0.995003, epsilon = 1e-6);
        assert!(stats_out.p_value.unwrap() <= 0.05);
    }

    #[test]
    fn report_flags_degenerate_correlation() {
        let mut csv = String::from("hour,05:00,06:00,07:00,total\n");
        csv.push_str("camera_in,3,3,3,9\n");
        csv.push_str("camera_out,1,2,3,6\n");
        csv.push_str("model_in,3,3,3,9\n");
        csv.push_str("model_out,1,2,3,6\n");
        csv.push_str("diff_in,0,0,0,0\n");
        csv.push_str("diff_out,0,0,0,0\n");
        let table = DayTable::from_reader(csv.as_bytes()).unwrap();
        let (stats_in, stats_out) = report(&table).unwrap();
        assert_eq!(stats_in.mean_diff, 0.0);
        assert_eq!(stats_in.sample_std, 0.0);
        assert!(stats_in.pearson_r.is_none(), "constant series has no r");
        assert!(stats_in.p_value.is_none());
        // Identical non-constant series: r is exactly 1, p undefined.
        assert!(stats_out.pearson_r.is_none());
        assert!(stats_out.p_value.is_none());
    }
}
