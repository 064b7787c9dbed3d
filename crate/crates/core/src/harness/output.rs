use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::config::{Method, SweepVariable};
use super::run::TrialResult;
use crate::{Error, Result};

/// 12 significant digits in scientific notation; identical on every platform.
pub fn format_float(x: f64) -> String {
    format!("{x:.11e}")
}

/// Writes the header and one row per result with LF line endings.
pub fn write_csv_to<W: Write>(results: &[TrialResult], sweep: SweepVariable, out: W) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(["trial", "method", sweep.as_str(), "sum_se", "psi", "wall_time_s"])?;
    for r in results {
        w.write_record([
            r.trial_index.to_string(),
            r.method.as_str().to_string(),
            format_float(r.sweep_value),
            format_float(r.sum_se),
            r.psi.to_string(),
            format_float(r.wall_time_s),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv(results: &[TrialResult], sweep: SweepVariable, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    write_csv_to(results, sweep, BufWriter::new(file)).map_err(|source| Error::Csv {
        path: path.to_path_buf(),
        source,
    })
}

pub fn csv_string(results: &[TrialResult], sweep: SweepVariable) -> String {
    let mut buf = Vec::new();
    write_csv_to(results, sweep, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("csv output is ascii")
}

/// Mean and standard error of the sum-SE of one method at one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub sweep_value: f64,
    pub method: Method,
    pub trials: usize,
    pub mean: f64,
    pub std_err: f64,
}

/// Groups by (sweep point, method) in first-appearance order.
pub fn summarize(results: &[TrialResult]) -> Vec<SummaryRow> {
    let mut keys: Vec<(usize, Method, f64)> = Vec::new();
    let mut samples: Vec<Vec<f64>> = Vec::new();
    for r in results {
        let idx = match keys.iter().position(|&(p, m, _)| p == r.point && m == r.method) {
            Some(i) => i,
            None => {
                keys.push((r.point, r.method, r.sweep_value));
                samples.push(Vec::new());
                keys.len() - 1
            }
        };
        samples[idx].push(r.sum_se);
    }
    keys.into_iter()
        .zip(samples)
        .map(|((_, method, sweep_value), xs)| {
            let (mean, std_err) = mean_and_std_err(&xs);
            SummaryRow {
                sweep_value,
                method,
                trials: xs.len(),
                mean,
                std_err,
            }
        })
        .collect()
}

/// Sample mean and `s / sqrt(n)`; the error is 0 for a single sample.
pub fn mean_and_std_err(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
