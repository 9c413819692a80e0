//! Manifest-described datasets: CSV parsing, image preprocessing, and
//! deterministic batch streams.
//!
//! A manifest is a UTF-8 CSV with required columns `image_path`, `arousal`,
//! `valence` and optional keypoint column pairs `kp_<name>_x` / `kp_<name>_y`.
//! Sample order is exactly file order; that order is the dataset's identity
//! for seeding purposes.

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use ndarray::Array4;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::imgops;

pub const ENV_CACHE_DIR: &str = "FACECHANNEL_CACHE";

/// Named 2-D points in pixel coordinates, keyed by landmark name.
pub type Keypoints = BTreeMap<String, [f64; 2]>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitTag {
    Train,
    Validation,
}

/// One labeled face image.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub image_path: PathBuf,
    pub arousal: f64,
    pub valence: f64,
    pub keypoints: Option<Keypoints>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub samples: Vec<Sample>,
    pub split_tag: SplitTag,
}

impl DatasetManifest {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

fn check_label(path: &Path, row: usize, column: &str, value: f64) -> Result<f64> {
    if !(value.is_finite() && (-1.0..=1.0).contains(&value)) {
        return Err(Error::LabelRange {
            path: path.to_path_buf(),
            row,
            column: column.to_string(),
            value,
        });
    }
    Ok(value)
}

fn parse_cell_f64(path: &Path, row: usize, column: &str, cell: &str) -> Result<f64> {
    cell.trim().parse::<f64>().map_err(|_| Error::ManifestRow {
        path: path.to_path_buf(),
        row,
        message: format!("cannot parse `{cell}` in column {column} as a number"),
    })
}

/// Parses a manifest CSV. Every row becomes one [`Sample`], in file order;
/// labels outside `[-1, 1]` and duplicate image paths are rejected.
pub fn parse_manifest(path: impl AsRef<Path>, split_tag: SplitTag) -> Result<DatasetManifest> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => Error::io(
                path,
                std::io::Error::new(std::io::ErrorKind::Other, e.to_string()),
            ),
            _ => Error::ManifestRow {
                path: path.to_path_buf(),
                row: 0,
                message: e.to_string(),
            },
        })?;

    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::ManifestRow {
            path: path.to_path_buf(),
            row: 0,
            message: e.to_string(),
        })?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();

    let col_index = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn {
                path: path.to_path_buf(),
                column: name.to_string(),
            })
    };
    let path_col = col_index("image_path")?;
    let arousal_col = col_index("arousal")?;
    let valence_col = col_index("valence")?;

    // Keypoint columns come in kp_<name>_x / kp_<name>_y pairs.
    let mut kp_cols: BTreeMap<String, (Option<usize>, Option<usize>)> = BTreeMap::new();
    for (i, h) in headers.iter().enumerate() {
        if let Some(rest) = h.strip_prefix("kp_") {
            if let Some(name) = rest.strip_suffix("_x") {
                kp_cols.entry(name.to_string()).or_default().0 = Some(i);
            } else if let Some(name) = rest.strip_suffix("_y") {
                kp_cols.entry(name.to_string()).or_default().1 = Some(i);
            }
        }
    }
    for (name, (x, y)) in &kp_cols {
        if x.is_none() || y.is_none() {
            return Err(Error::MissingColumn {
                path: path.to_path_buf(),
                column: format!("kp_{name}_{}", if x.is_none() { "x" } else { "y" }),
            });
        }
    }

    let mut samples = Vec::new();
    let mut seen = HashSet::new();
    for (idx, record) in reader.records().enumerate() {
        let row = idx + 1;
        let record = record.map_err(|e| Error::ManifestRow {
            path: path.to_path_buf(),
            row,
            message: e.to_string(),
        })?;
        let cell = |col: usize| record.get(col).unwrap_or("").to_string();

        let image_path = PathBuf::from(cell(path_col));
        if image_path.as_os_str().is_empty() {
            return Err(Error::ManifestRow {
                path: path.to_path_buf(),
                row,
                message: "empty image_path".into(),
            });
        }
        if !seen.insert(image_path.clone()) {
            return Err(Error::DuplicateImagePath {
                path: path.to_path_buf(),
                image: image_path,
            });
        }

        let arousal = check_label(
            path,
            row,
            "arousal",
            parse_cell_f64(path, row, "arousal", &cell(arousal_col))?,
        )?;
        let valence = check_label(
            path,
            row,
            "valence",
            parse_cell_f64(path, row, "valence", &cell(valence_col))?,
        )?;

        let mut keypoints = Keypoints::new();
        for (name, (xc, yc)) in &kp_cols {
            let (xs, ys) = (cell(xc.unwrap()), cell(yc.unwrap()));
            if xs.trim().is_empty() && ys.trim().is_empty() {
                continue;
            }
            if xs.trim().is_empty() || ys.trim().is_empty() {
                return Err(Error::ManifestRow {
                    path: path.to_path_buf(),
                    row,
                    message: format!("keypoint {name} has only one coordinate"),
                });
            }
            let x = parse_cell_f64(path, row, &format!("kp_{name}_x"), &xs)?;
            let y = parse_cell_f64(path, row, &format!("kp_{name}_y"), &ys)?;
            validate_point(path, row, name, [x, y])?;
            keypoints.insert(name.clone(), [x, y]);
        }

        samples.push(Sample {
            image_path,
            arousal,
            valence,
            keypoints: if keypoints.is_empty() {
                None
            } else {
                Some(keypoints)
            },
        });
    }

    Ok(DatasetManifest { samples, split_tag })
}

fn validate_point(path: &Path, row: usize, name: &str, p: [f64; 2]) -> Result<()> {
    if !(p[0].is_finite() && p[1].is_finite() && p[0] >= 0.0 && p[1] >= 0.0) {
        return Err(Error::ManifestRow {
            path: path.to_path_buf(),
            row,
            message: format!("keypoint {name} = [{}, {}] must be finite and non-negative", p[0], p[1]),
        });
    }
    Ok(())
}

/// Serializes a manifest back to CSV; [`parse_manifest`] on the output yields
/// a structurally equal manifest.
pub fn write_manifest(manifest: &DatasetManifest, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut kp_names: Vec<String> = Vec::new();
    for s in &manifest.samples {
        if let Some(kps) = &s.keypoints {
            for name in kps.keys() {
                if !kp_names.contains(name) {
                    kp_names.push(name.clone());
                }
            }
        }
    }
    kp_names.sort();

    let mut writer = csv::Writer::from_path(path).map_err(|e| {
        Error::io(
            path,
            std::io::Error::new(std::io::ErrorKind::Other, e.to_string()),
        )
    })?;
    let mut header = vec![
        "image_path".to_string(),
        "arousal".to_string(),
        "valence".to_string(),
    ];
    for name in &kp_names {
        header.push(format!("kp_{name}_x"));
        header.push(format!("kp_{name}_y"));
    }
    let io_err = |e: csv::Error| {
        Error::io(
            path,
            std::io::Error::new(std::io::ErrorKind::Other, e.to_string()),
        )
    };
    writer.write_record(&header).map_err(io_err)?;
    for s in &manifest.samples {
        let mut record = vec![
            s.image_path.to_string_lossy().to_string(),
            s.arousal.to_string(),
            s.valence.to_string(),
        ];
        for name in &kp_names {
            match s.keypoints.as_ref().and_then(|k| k.get(name)) {
                Some(p) => {
                    record.push(p[0].to_string());
                    record.push(p[1].to_string());
                }
                None => {
                    record.push(String::new());
                    record.push(String::new());
                }
            }
        }
        writer.write_record(&record).map_err(io_err)?;
    }
    writer.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// One entry of the keypoint sidecar file (a JSON array of these).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SidecarEntry {
    pub image: PathBuf,
    pub points: Keypoints,
}

pub fn load_keypoint_sidecar(path: impl AsRef<Path>) -> Result<Vec<SidecarEntry>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let entries: Vec<SidecarEntry> = serde_json::from_str(&text)?;
    for e in &entries {
        for (name, p) in &e.points {
            validate_point(path, 0, name, *p)?;
        }
    }
    Ok(entries)
}

/// Fills in missing per-sample keypoints from sidecar entries, matched by
/// image path. Existing keypoints win over sidecar ones.
pub fn apply_sidecar(manifest: &mut DatasetManifest, entries: &[SidecarEntry]) {
    let by_path: BTreeMap<&Path, &Keypoints> = entries
        .iter()
        .map(|e| (e.image.as_path(), &e.points))
        .collect();
    for sample in &mut manifest.samples {
        if sample.keypoints.is_none() {
            if let Some(points) = by_path.get(sample.image_path.as_path()) {
                sample.keypoints = Some((*points).clone());
            }
        }
    }
}

/// How raw images are turned into network inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreprocessConfig {
    pub target_size: usize,
    pub channels: usize,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            target_size: 96,
            channels: 1,
        }
    }
}

/// A preprocessed image: `(H, W, C)` values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageTensor {
    pub data: ndarray::Array3<f32>,
}

impl ImageTensor {
    pub fn shape(&self) -> (usize, usize, usize) {
        self.data.dim()
    }
}

/// Decodes, converts to the configured channel count (grayscale via Rec.601
/// luma), resizes to `target_size`², and scales into `[0, 1]`.
pub fn load_image(sample: &Sample, config: &PreprocessConfig) -> Result<ImageTensor> {
    if config.target_size == 0 {
        return Err(Error::Config("target_size must be positive".into()));
    }
    let rgb = imgops::load_rgb(&sample.image_path)?;
    let converted = match config.channels {
        1 => imgops::to_grayscale(&rgb),
        3 => rgb,
        other => {
            return Err(Error::Config(format!(
                "unsupported channel count {other} (expected 1 or 3)"
            )))
        }
    };
    let mut resized = imgops::resize_bilinear(&converted, config.target_size, config.target_size);
    resized.mapv_inplace(|v| v.clamp(0.0, 1.0));
    Ok(ImageTensor { data: resized })
}

fn cache_dir_from_env() -> Option<PathBuf> {
    std::env::var_os(ENV_CACHE_DIR).map(PathBuf::from)
}

fn cache_key(sample: &Sample, config: &PreprocessConfig) -> String {
    let mut hasher = Sha256::new();
    hasher.update(sample.image_path.to_string_lossy().as_bytes());
    hasher.update([0u8]);
    hasher.update(config.target_size.to_le_bytes());
    hasher.update(config.channels.to_le_bytes());
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn load_image_cached(sample: &Sample, config: &PreprocessConfig) -> Result<ImageTensor> {
    let Some(dir) = cache_dir_from_env() else {
        return load_image(sample, config);
    };
    let entry = dir.join(format!("{}.bin", cache_key(sample, config)));
    let len = config.target_size * config.target_size * config.channels;
    if let Ok(bytes) = std::fs::read(&entry) {
        if bytes.len() == len * 4 {
            let data: Vec<f32> = bytes
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect();
            let arr = ndarray::Array3::from_shape_vec(
                (config.target_size, config.target_size, config.channels),
                data,
            )
            .expect("cache entry length already checked");
            return Ok(ImageTensor { data: arr });
        }
    }
    let tensor = load_image(sample, config)?;
    if std::fs::create_dir_all(&dir).is_ok() {
        let mut bytes = Vec::with_capacity(len * 4);
        for v in tensor.data.iter() {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        let _ = std::fs::write(&entry, bytes);
    }
    Ok(tensor)
}

/// Seeded pseudo-random permutation of sample indices, chunked into batches.
/// The last incomplete batch is kept. The same seed yields the same batches
/// on every run and platform.
pub fn batch_stream(
    manifest: &DatasetManifest,
    batch_size: usize,
    seed: u64,
) -> Result<Vec<Vec<usize>>> {
    if manifest.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if batch_size == 0 {
        return Err(Error::Config("batch_size must be >= 1".into()));
    }
    let mut indices: Vec<usize> = (0..manifest.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    indices.shuffle(&mut rng);
    Ok(indices.chunks(batch_size).map(|c| c.to_vec()).collect())
}

/// Images plus labels for one batch, in the requested index order.
pub struct LabeledBatch {
    /// `(N, C, H, W)`
    pub images: Array4<f32>,
    pub arousal: Vec<f64>,
    pub valence: Vec<f64>,
}

/// Materializes the given sample indices into a model-ready batch. Decoding
/// runs in parallel; output order is the index order.
pub fn load_batch(
    manifest: &DatasetManifest,
    indices: &[usize],
    config: &PreprocessConfig,
) -> Result<LabeledBatch> {
    let tensors: Vec<Result<ImageTensor>> = indices
        .par_iter()
        .map(|&i| load_image_cached(&manifest.samples[i], config))
        .collect();
    let n = indices.len();
    let (s, c) = (config.target_size, config.channels);
    let mut images = Array4::zeros((n, c, s, s));
    let mut arousal = Vec::with_capacity(n);
    let mut valence = Vec::with_capacity(n);
    for (slot, (tensor, &idx)) in tensors.into_iter().zip(indices.iter()).enumerate() {
        let tensor = tensor?;
        let (h, w, ch) = tensor.shape();
        if (h, w, ch) != (s, s, c) {
            return Err(Error::Shape {
                expected: format!("({s}, {s}, {c})"),
                got: format!("({h}, {w}, {ch})"),
            });
        }
        for y in 0..s {
            for x in 0..s {
                for cc in 0..c {
                    images[(slot, cc, y, x)] = tensor.data[(y, x, cc)];
                }
            }
        }
        arousal.push(manifest.samples[idx].arousal);
        valence.push(manifest.samples[idx].valence);
    }
    Ok(LabeledBatch {
        images,
        arousal,
        valence,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array3;
    use proptest::prelude::*;
    use std::io::Write;

    fn write_csv(dir: &Path, name: &str, content: &str) -> PathBuf {
        let path = dir.join(name);
        let mut f = std::fs::File::create(&path).unwrap();
        f.write_all(content.as_bytes()).unwrap();
        path
    }

    #[test]
    fn two_row_manifest_parses_in_file_order() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_csv(
            dir.path(),
            "m.csv",
            "image_path,arousal,valence\na.png,0.5,-0.25\nb.png,-1,1\n",
        );
        let m = parse_manifest(&path, SplitTag::Train).unwrap();
        assert_eq!(m.samples.len(), 2);
        assert_eq!(m.samples[0].image_path, PathBuf::from("a.png"));
        assert_eq!(m.samples[0].arousal, 0.5);
        assert_eq!(m.samples[1].image_path, PathBuf::from("b.png"));
        assert_eq!(m.samples[1].valence, 1.0);
    }

    #[test]
    fn out_of_range_label_cites_row() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_csv(
            dir.path(),
            "m.csv",
            "image_path,arousal,valence\na.png,0.5,0.0\nb.png,1.5,0.0\n",
        );
        match parse_manifest(&path, SplitTag::Train) {
            Err(Error::LabelRange { row, column, value, .. }) => {
                assert_eq!(row, 2);
                assert_eq!(column, "arousal");
                assert_eq!(value, 1.5);
            }
            other => panic!("expected LabelRange, got {other:?}"),
        }
    }

    #[test]
    fn missing_column_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_csv(dir.path(), "m.csv", "image_path,arousal\na.png,0.5\n");
        match parse_manifest(&path, SplitTag::Train) {
            Err(Error::MissingColumn { column, .. }) => assert_eq!(column, "valence"),
            other => panic!("expected MissingColumn, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_image_path_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_csv(
            dir.path(),
            "m.csv",
            "image_path,arousal,valence\na.png,0.5,0.0\na.png,0.1,0.0\n",
        );
        assert!(matches!(
            parse_manifest(&path, SplitTag::Train),
            Err(Error::DuplicateImagePath { .. })
        ));
    }

    #[test]
    fn unreadable_file_is_io_error() {
        assert!(matches!(
            parse_manifest("/nonexistent/m.csv", SplitTag::Train),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn keypoint_columns_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_csv(
            dir.path(),
            "m.csv",
            "image_path,arousal,valence,kp_mouth_left_x,kp_mouth_left_y\na.png,0.5,0.0,10.5,20.25\nb.png,0.1,0.0,,\n",
        );
        let m = parse_manifest(&path, SplitTag::Train).unwrap();
        let kps = m.samples[0].keypoints.as_ref().unwrap();
        assert_eq!(kps["mouth_left"], [10.5, 20.25]);
        assert!(m.samples[1].keypoints.is_none());
    }

    #[test]
    fn write_then_parse_is_structurally_equal() {
        let manifest = DatasetManifest {
            samples: vec![
                Sample {
                    image_path: "imgs/a.png".into(),
                    arousal: 0.123456789,
                    valence: -0.987654321,
                    keypoints: Some(
                        [
                            ("mouth_left".to_string(), [3.25, 4.5]),
                            ("chin".to_string(), [7.0, 11.125]),
                        ]
                        .into_iter()
                        .collect(),
                    ),
                },
                Sample {
                    image_path: "imgs/b.png".into(),
                    arousal: -1.0,
                    valence: 1.0,
                    keypoints: None,
                },
            ],
            split_tag: SplitTag::Validation,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        write_manifest(&manifest, &path).unwrap();
        let back = parse_manifest(&path, SplitTag::Validation).unwrap();
        assert_eq!(manifest, back);
    }

    #[test]
    fn negative_keypoint_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_csv(
            dir.path(),
            "m.csv",
            "image_path,arousal,valence,kp_chin_x,kp_chin_y\na.png,0.0,0.0,-3.0,2.0\n",
        );
        assert!(matches!(
            parse_manifest(&path, SplitTag::Train),
            Err(Error::ManifestRow { .. })
        ));
    }

    fn png_sample(dir: &Path, name: &str, img: &Array3<f32>) -> Sample {
        let path = dir.join(name);
        imgops::save_png(&path, img).unwrap();
        Sample {
            image_path: path,
            arousal: 0.0,
            valence: 0.0,
            keypoints: None,
        }
    }

    #[test]
    fn load_image_resizes_and_grayscales() {
        let dir = tempfile::tempdir().unwrap();
        let img = Array3::from_elem((128, 128, 3), 0.5f32);
        let sample = png_sample(dir.path(), "x.png", &img);
        let config = PreprocessConfig {
            target_size: 96,
            channels: 1,
        };
        let t = load_image(&sample, &config).unwrap();
        assert_eq!(t.shape(), (96, 96, 1));
    }

    #[test]
    fn pure_white_maps_to_one() {
        let dir = tempfile::tempdir().unwrap();
        let img = Array3::from_elem((32, 32, 3), 1.0f32);
        let sample = png_sample(dir.path(), "w.png", &img);
        let config = PreprocessConfig {
            target_size: 16,
            channels: 1,
        };
        let t = load_image(&sample, &config).unwrap();
        for v in t.data.iter() {
            assert_eq!(*v, 1.0);
        }
    }

    #[test]
    fn pure_red_maps_to_luma_weight() {
        let dir = tempfile::tempdir().unwrap();
        let mut img = Array3::zeros((8, 8, 3));
        for y in 0..8 {
            for x in 0..8 {
                img[(y, x, 0)] = 1.0;
            }
        }
        let sample = png_sample(dir.path(), "r.png", &img);
        let config = PreprocessConfig {
            target_size: 8,
            channels: 1,
        };
        let t = load_image(&sample, &config).unwrap();
        // Hand-applied luma: 0.299*1 + 0.587*0 + 0.114*0.
        for v in t.data.iter() {
            assert!((v - 0.299).abs() < 1e-6);
        }
    }

    #[test]
    fn preprocessing_is_idempotent_on_conforming_images() {
        let dir = tempfile::tempdir().unwrap();
        let mut img = Array3::zeros((16, 16, 1));
        for (i, v) in img.iter_mut().enumerate() {
            *v = ((i % 256) as f32) / 255.0;
        }
        let sample = png_sample(dir.path(), "g.png", &img);
        let config = PreprocessConfig {
            target_size: 16,
            channels: 1,
        };
        let once = load_image(&sample, &config).unwrap();
        for (a, b) in once.data.iter().zip(img.iter()) {
            // within 1 ulp: the luma collapse of equal RGB channels rounds once
            let ulp = b.abs().max(f32::MIN_POSITIVE) * f32::EPSILON;
            assert!((a - b).abs() <= ulp, "{a} vs {b}");
        }
    }

    #[test]
    fn undecodable_image_carries_path() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("broken.png");
        std::fs::write(&path, b"not a png").unwrap();
        let sample = Sample {
            image_path: path.clone(),
            arousal: 0.0,
            valence: 0.0,
            keypoints: None,
        };
        match load_image(&sample, &PreprocessConfig::default()) {
            Err(Error::ImageDecode { path: p, .. }) => assert_eq!(p, path),
            other => panic!("expected ImageDecode, got {other:?}"),
        }
    }

    fn dummy_manifest(n: usize) -> DatasetManifest {
        DatasetManifest {
            samples: (0..n)
                .map(|i| Sample {
                    image_path: format!("img_{i}.png").into(),
                    arousal: 0.0,
                    valence: 0.0,
                    keypoints: None,
                })
                .collect(),
            split_tag: SplitTag::Train,
        }
    }

    #[test]
    fn batches_chunk_with_remainder() {
        let m = dummy_manifest(10);
        let batches = batch_stream(&m, 4, 7).unwrap();
        let sizes: Vec<usize> = batches.iter().map(|b| b.len()).collect();
        assert_eq!(sizes, vec![4, 4, 2]);
    }

    #[test]
    fn same_seed_same_order() {
        let m = dummy_manifest(33);
        assert_eq!(
            batch_stream(&m, 5, 99).unwrap(),
            batch_stream(&m, 5, 99).unwrap()
        );
    }

    #[test]
    fn different_seeds_differ() {
        let m = dummy_manifest(100);
        let a: Vec<usize> = batch_stream(&m, 100, 1).unwrap().remove(0);
        let b: Vec<usize> = batch_stream(&m, 100, 2).unwrap().remove(0);
        assert_ne!(a, b);
    }

    #[test]
    fn empty_manifest_is_an_error() {
        let m = dummy_manifest(0);
        assert!(matches!(batch_stream(&m, 4, 0), Err(Error::EmptyDataset)));
    }

    proptest! {
        #[test]
        fn batches_partition_the_index_set(n in 1usize..200, batch in 1usize..32, seed in 0u64..1000) {
            let m = dummy_manifest(n);
            let batches = batch_stream(&m, batch, seed).unwrap();
            let mut all: Vec<usize> = batches.into_iter().flatten().collect();
            all.sort_unstable();
            let expect: Vec<usize> = (0..n).collect();
            prop_assert_eq!(all, expect);
        }
    }
}
