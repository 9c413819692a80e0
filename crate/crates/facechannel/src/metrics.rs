//! Concordance correlation coefficient and report shaping.

use ndarray::Array4;
use serde::{Deserialize, Serialize};

use crate::dataset::{load_batch, DatasetManifest, PreprocessConfig};
use crate::error::{Error, Result};

/// Agreement between two vectors: `2*cov / (var_x + var_y + (mean_x - mean_y)^2)`,
/// with population (1/n) moments.
///
/// When both vectors are constant the formula degenerates to 0/0; by
/// convention this returns 1.0 if the constants agree within 1e-12 and 0.0
/// otherwise.
pub fn ccc(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Shape {
            expected: format!("two vectors of equal length ({})", x.len()),
            got: format!("{} vs {}", x.len(), y.len()),
        });
    }
    if x.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: x.len(),
        });
    }
    let n = x.len() as f64;
    let mean_x = x.iter().sum::<f64>() / n;
    let mean_y = y.iter().sum::<f64>() / n;
    let mut var_x = 0.0;
    let mut var_y = 0.0;
    let mut cov = 0.0;
    for (&xi, &yi) in x.iter().zip(y.iter()) {
        let dx = xi - mean_x;
        let dy = yi - mean_y;
        var_x += dx * dx;
        var_y += dy * dy;
        cov += dx * dy;
    }
    var_x /= n;
    var_y /= n;
    cov /= n;

    if var_x == 0.0 && var_y == 0.0 {
        return Ok(if (mean_x - mean_y).abs() <= 1e-12 {
            1.0
        } else {
            0.0
        });
    }
    let value = 2.0 * cov / (var_x + var_y + (mean_x - mean_y) * (mean_x - mean_y));
    Ok(value.clamp(-1.0, 1.0))
}

/// Mean of the two per-head coefficients, the scalar used for early stopping
/// and experiment comparisons.
pub fn mean_ccc(report: &CccReport) -> f64 {
    0.5 * (report.ccc_arousal + report.ccc_valence)
}

/// One evaluation cell: an experiment scored on one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CccReport {
    pub experiment: String,
    pub dataset: String,
    pub ccc_arousal: f64,
    pub ccc_valence: f64,
    pub n: usize,
}

/// Anything that can map a preprocessed image batch `(N, C, H, W)` to
/// per-sample arousal and valence predictions.
pub trait Predictor {
    fn predict_batch(&self, batch: &Array4<f32>) -> (Vec<f64>, Vec<f64>);
}

/// Runs the predictor over every sample in manifest order (no shuffling) and
/// computes the per-head coefficients on the raw, unclipped predictions.
pub fn evaluate<P: Predictor>(
    predictor: &P,
    manifest: &DatasetManifest,
    preproc: &PreprocessConfig,
    batch_size: usize,
    experiment: &str,
    dataset: &str,
) -> Result<CccReport> {
    let n = manifest.samples.len();
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    let batch_size = batch_size.max(1);
    let mut pred_a = Vec::with_capacity(n);
    let mut pred_v = Vec::with_capacity(n);
    let mut true_a = Vec::with_capacity(n);
    let mut true_v = Vec::with_capacity(n);
    let indices: Vec<usize> = (0..n).collect();
    for chunk in indices.chunks(batch_size) {
        let batch = load_batch(manifest, chunk, preproc)?;
        let (pa, pv) = predictor.predict_batch(&batch.images);
        pred_a.extend(pa);
        pred_v.extend(pv);
        true_a.extend_from_slice(&batch.arousal);
        true_v.extend_from_slice(&batch.valence);
    }
    Ok(CccReport {
        experiment: experiment.to_string(),
        dataset: dataset.to_string(),
        ccc_arousal: ccc(&pred_a, &true_a)?,
        ccc_valence: ccc(&pred_v, &true_v)?,
        n,
    })
}

/// Renders reports as a fixed-width table: one row per experiment, one
/// (Arousal, Valence) column pair per dataset, two decimals per cell.
pub fn render_report(reports: &[CccReport]) -> String {
    let mut experiments: Vec<&str> = Vec::new();
    let mut datasets: Vec<&str> = Vec::new();
    for r in reports {
        if !experiments.contains(&r.experiment.as_str()) {
            experiments.push(&r.experiment);
        }
        if !datasets.contains(&r.dataset.as_str()) {
            datasets.push(&r.dataset);
        }
    }
    let name_w = experiments
        .iter()
        .map(|e| e.len())
        .chain(["Experiment".len()])
        .max()
        .unwrap_or(10)
        + 2;
    let col_w = datasets
        .iter()
        .map(|d| d.len().max("Arousal  Valence".len()))
        .max()
        .unwrap_or(16)
        + 2;

    let mut out = String::new();
    out.push_str(&format!("{:<name_w$}", "Experiment"));
    for d in &datasets {
        out.push_str(&format!("{d:<col_w$}"));
    }
    out.push('\n');
    out.push_str(&format!("{:<name_w$}", ""));
    for _ in &datasets {
        out.push_str(&format!("{:<col_w$}", "Arousal  Valence"));
    }
    out.push('\n');
    for e in &experiments {
        out.push_str(&format!("{e:<name_w$}"));
        for d in &datasets {
            match reports
                .iter()
                .find(|r| r.experiment == *e && r.dataset == *d)
            {
                Some(r) => {
                    let cell = format!("{:.2}     {:.2}", r.ccc_arousal, r.ccc_valence);
                    out.push_str(&format!("{cell:<col_w$}"));
                }
                None => out.push_str(&format!("{:<col_w$}", "-")),
            }
        }
        out.push('\n');
    }
    out
}
