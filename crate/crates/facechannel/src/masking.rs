//! Masked-dataset generation: fit an affine transform from template anchors
//! to per-image facial keypoints, warp the mask, and alpha-composite it over
//! the face. Labels are copied unchanged.

use std::path::{Path, PathBuf};

use ndarray::Array3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{DatasetManifest, Keypoints, Sample};
use crate::error::{Error, Result};
use crate::imgops;

/// Anchor names every template must define.
pub const REQUIRED_ANCHORS: [&str; 4] = ["mouth_left", "mouth_right", "chin", "nose_bridge"];

/// RGBA mask image plus named anchor points in template coordinates.
#[derive(Debug, Clone)]
pub struct MaskTemplate {
    /// `(H, W, 4)`, alpha in `[0, 1]`.
    pub rgba: Array3<f32>,
    pub anchors: Keypoints,
}

impl MaskTemplate {
    pub fn new(rgba: Array3<f32>, anchors: Keypoints) -> Result<Self> {
        let (h, w, c) = rgba.dim();
        if c != 4 {
            return Err(Error::InvalidTemplate(format!(
                "expected RGBA (4 channels), got {c}"
            )));
        }
        for name in REQUIRED_ANCHORS {
            match anchors.get(name) {
                None => {
                    return Err(Error::InvalidTemplate(format!("missing anchor `{name}`")));
                }
                Some(p) => {
                    if p[0] < 0.0 || p[1] < 0.0 || p[0] > w as f64 || p[1] > h as f64 {
                        return Err(Error::InvalidTemplate(format!(
                            "anchor `{name}` = [{}, {}] outside template bounds {w}x{h}",
                            p[0], p[1]
                        )));
                    }
                }
            }
        }
        if !rgba
            .slice(ndarray::s![.., .., 3])
            .iter()
            .any(|&a| a > 0.0)
        {
            return Err(Error::InvalidTemplate(
                "alpha channel is zero everywhere".into(),
            ));
        }
        Ok(Self { rgba, anchors })
    }

    /// Loads the RGBA PNG and its anchors JSON
    /// (`{"mouth_left": [x, y], ...}`).
    pub fn load(png: &Path, anchors_json: &Path) -> Result<Self> {
        let rgba = imgops::load_rgba(png)?;
        let text = std::fs::read_to_string(anchors_json).map_err(|e| Error::io(anchors_json, e))?;
        let anchors: Keypoints = serde_json::from_str(&text)?;
        Self::new(rgba, anchors)
    }
}

/// 2x3 affine map `p -> A p + t` in pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineTransform {
    /// Row-major `[[a, b, tx], [c, d, ty]]`.
    pub m: [[f64; 3]; 2],
}

impl AffineTransform {
    pub fn identity() -> Self {
        Self {
            m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
        }
    }

    pub fn apply(&self, p: [f64; 2]) -> [f64; 2] {
        [
            self.m[0][0] * p[0] + self.m[0][1] * p[1] + self.m[0][2],
            self.m[1][0] * p[0] + self.m[1][1] * p[1] + self.m[1][2],
        ]
    }

    pub fn linear_det(&self) -> f64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    /// Inverse map; the linear part is invertible by construction.
    pub fn invert(&self) -> Self {
        let det = self.linear_det();
        let (a, b, tx) = (self.m[0][0], self.m[0][1], self.m[0][2]);
        let (c, d, ty) = (self.m[1][0], self.m[1][1], self.m[1][2]);
        let ia = d / det;
        let ib = -b / det;
        let ic = -c / det;
        let id = a / det;
        Self {
            m: [
                [ia, ib, -(ia * tx + ib * ty)],
                [ic, id, -(ic * tx + id * ty)],
            ],
        }
    }
}

/// Solves a 3x3 linear system by Gaussian elimination with partial pivoting.
fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    let scale = a
        .iter()
        .flatten()
        .fold(0.0f64, |acc, v| acc.max(v.abs()))
        .max(1e-300);
    for col in 0..3 {
        let pivot_row = (col..3)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        if a[pivot_row][col].abs() < 1e-12 * scale {
            return None;
        }
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);
        for row in (col + 1)..3 {
            let f = a[row][col] / a[col][col];
            for k in col..3 {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let mut s = b[row];
        for k in (row + 1)..3 {
            s -= a[row][k] * x[k];
        }
        x[row] = s / a[row][row];
    }
    Some(x)
}

/// Least-squares fit of the affine map sending each named anchor to the
/// keypoint of the same name. Requires at least three matched,
/// non-collinear correspondences; with exactly three the fit is exact.
pub fn estimate_affine(anchors: &Keypoints, keypoints: &Keypoints) -> Result<AffineTransform> {
    let pairs: Vec<([f64; 2], [f64; 2])> = anchors
        .iter()
        .filter_map(|(name, a)| keypoints.get(name).map(|k| (*a, *k)))
        .collect();
    if pairs.len() < 3 {
        return Err(Error::InsufficientCorrespondences { found: pairs.len() });
    }

    // Normal equations of min sum ||A p + t - q||^2; x and y rows decouple.
    let mut g = [[0.0f64; 3]; 3];
    let mut bx = [0.0f64; 3];
    let mut by = [0.0f64; 3];
    for (p, q) in &pairs {
        let row = [p[0], p[1], 1.0];
        for i in 0..3 {
            for j in 0..3 {
                g[i][j] += row[i] * row[j];
            }
            bx[i] += row[i] * q[0];
            by[i] += row[i] * q[1];
        }
    }
    let rx = solve3(g, bx).ok_or(Error::DegenerateGeometry)?;
    let ry = solve3(g, by).ok_or(Error::DegenerateGeometry)?;
    let transform = AffineTransform { m: [rx, ry] };
    if transform.linear_det().abs() < 1e-12 {
        return Err(Error::DegenerateGeometry);
    }
    Ok(transform)
}

/// Warps the template by the anchor-to-keypoint transform (bilinear sampling,
/// transparent out-of-bounds) and alpha-composites it over the image:
/// `out = alpha * mask + (1 - alpha) * image`. Pixels the warped alpha never
/// touches are bit-identical to the input.
pub fn overlay_mask(
    image: &Array3<f32>,
    keypoints: &Keypoints,
    template: &MaskTemplate,
) -> Result<Array3<f32>> {
    let missing: Vec<String> = REQUIRED_ANCHORS
        .iter()
        .filter(|name| !keypoints.contains_key(**name))
        .map(|s| s.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingKeypoints {
            path: PathBuf::new(),
            missing,
        });
    }
    let transform = estimate_affine(&template.anchors, keypoints)?;
    let inverse = transform.invert();

    let (h, w, c) = image.dim();
    let mut out = image.clone();
    for y in 0..h {
        for x in 0..w {
            let src = inverse.apply([x as f64, y as f64]);
            let rgba = imgops::sample_rgba_bilinear(&template.rgba, src[0] as f32, src[1] as f32);
            let alpha = rgba[3];
            if alpha == 0.0 {
                continue;
            }
            for ch in 0..c.min(3) {
                let mask_v = if c == 1 {
                    // Composite grayscale against the template's luma.
                    imgops::LUMA_WEIGHTS[0] * rgba[0]
                        + imgops::LUMA_WEIGHTS[1] * rgba[1]
                        + imgops::LUMA_WEIGHTS[2] * rgba[2]
                } else {
                    rgba[ch]
                };
                out[(y, x, ch)] = alpha * mask_v + (1.0 - alpha) * image[(y, x, ch)];
            }
        }
    }
    Ok(out)
}

/// Counts of what [`generate_masked_dataset`] did.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationReport {
    pub processed: usize,
    pub skipped: usize,
    pub skipped_paths: Vec<PathBuf>,
}

/// Applies the mask to every sample that has keypoints, writing one PNG per
/// processable input into `out_dir`. Samples without keypoints are recorded
/// in the report, not dropped silently. Labels are copied unchanged.
pub fn generate_masked_dataset(
    manifest: &DatasetManifest,
    template: &MaskTemplate,
    out_dir: &Path,
) -> Result<(DatasetManifest, GenerationReport)> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let probe = out_dir.join(".write_probe");
    std::fs::write(&probe, b"ok").map_err(|e| Error::io(out_dir, e))?;
    std::fs::remove_file(&probe).map_err(|e| Error::io(out_dir, e))?;

    enum Outcome {
        Done(Sample),
        Skipped(PathBuf),
    }

    let outcomes: Vec<Result<Outcome>> = manifest
        .samples
        .par_iter()
        .enumerate()
        .map(|(idx, sample)| {
            let Some(keypoints) = &sample.keypoints else {
                return Ok(Outcome::Skipped(sample.image_path.clone()));
            };
            if REQUIRED_ANCHORS
                .iter()
                .any(|name| !keypoints.contains_key(*name))
            {
                return Ok(Outcome::Skipped(sample.image_path.clone()));
            }
            let rgb = imgops::load_rgb(&sample.image_path)?;
            let composited = overlay_mask(&rgb, keypoints, template)?;
            let stem = sample
                .image_path
                .file_stem()
                .map(|s| s.to_string_lossy().to_string())
                .unwrap_or_else(|| "image".to_string());
            let out_path = out_dir.join(format!("{idx:06}_{stem}.png"));
            imgops::save_png(&out_path, &composited)?;
            Ok(Outcome::Done(Sample {
                image_path: out_path,
                arousal: sample.arousal,
                valence: sample.valence,
                keypoints: Some(keypoints.clone()),
            }))
        })
        .collect();

    let mut samples = Vec::new();
    let mut skipped_paths = Vec::new();
    for outcome in outcomes {
        match outcome? {
            Outcome::Done(s) => samples.push(s),
            Outcome::Skipped(p) => skipped_paths.push(p),
        }
    }
    let report = GenerationReport {
        processed: samples.len(),
        skipped: skipped_paths.len(),
        skipped_paths,
    };
    let out_manifest = DatasetManifest {
        samples,
        split_tag: manifest.split_tag,
    };
    Ok((out_manifest, report))
}
