// SPDX-License-Identifier: Apache-2.0

//! Machine-learning samples: a 256×256 orthophoto crop, the matching DSM
//! crop, the ground-truth WSE and descriptive metadata.
//!
//! On disk a sample is a directory holding
//!
//! * `meta.json` – scalar fields,
//! * `dsm.f32` – 65536 little-endian `f32`, row-major, north row first,
//! * `ortho.pgm` – binary 8-bit PGM.
//!
//! A dataset root additionally carries `manifest.json` listing the sample
//! directories and subset identifiers.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{decode_pgm, encode_pgm};

/// Side length of sample arrays, pixels.
pub const PATCH_SIDE: usize = 256;
pub const PATCH_LEN: usize = PATCH_SIDE * PATCH_SIDE;

/// Largest tolerated difference between stored and recomputed DSM statistics.
pub const INTEGRITY_TOL: f64 = 1e-4;

pub const DEFAULT_RANGE_THRESHOLD_M: f64 = 4.5;

/// Per-array DSM statistics. `std` is the population standard deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DsmStats {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

impl DsmStats {
    pub fn of(dsm: &[f32]) -> Self {
        let n = dsm.len() as f64;
        let mean = dsm.iter().map(|&v| f64::from(v)).sum::<f64>() / n;
        let var = dsm.iter().map(|&v| (f64::from(v) - mean).powi(2)).sum::<f64>() / n;
        let (min, max) = dsm.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(f64::from(v)), hi.max(f64::from(v)))
        });
        DsmStats {
            mean,
            std: var.sqrt(),
            min,
            max,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    pub ortho: Vec<u8>,
    pub dsm: Vec<f32>,
    pub wse: f64,
    pub dsm_stats: DsmStats,
    /// WGS-84 centroid; absent when the source rasters carry no geodetic
    /// reference.
    pub centroid_lat: Option<f64>,
    pub centroid_lon: Option<f64>,
    pub chainage: f64,
    pub subset_id: String,
}

impl SampleRecord {
    /// Builds a sample, deriving the DSM statistics from the array.
    pub fn new(
        ortho: Vec<u8>,
        dsm: Vec<f32>,
        wse: f64,
        centroid: Option<(f64, f64)>,
        chainage: f64,
        subset_id: impl Into<String>,
    ) -> Result<Self> {
        if ortho.len() != PATCH_LEN || dsm.len() != PATCH_LEN {
            return Err(Error::Structure(format!(
                "sample arrays must be {PATCH_SIDE}x{PATCH_SIDE}, got {} ortho and {} dsm values",
                ortho.len(),
                dsm.len()
            )));
        }
        if dsm.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("DSM patch contains non-finite values".into()));
        }
        let dsm_stats = DsmStats::of(&dsm);
        Ok(SampleRecord {
            ortho,
            dsm,
            wse,
            dsm_stats,
            centroid_lat: centroid.map(|c| c.0),
            centroid_lon: centroid.map(|c| c.1),
            chainage,
            subset_id: subset_id.into(),
        })
    }

    /// The DSM as `f64` for numerical work.
    pub fn dsm_f64(&self) -> Vec<f64> {
        self.dsm.iter().map(|&v| f64::from(v)).collect()
    }
}

// ---------------------------------------------------------------------------
// Standardization

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StandardizationParams {
    /// Standard deviation of DSM pixels over the whole dataset, meters.
    pub sigma_dsm: f64,
    pub dsm_denominator_factor: f64,
    pub mu_ort: f64,
    pub sigma_ort: f64,
}

impl Default for StandardizationParams {
    fn default() -> Self {
        StandardizationParams {
            sigma_dsm: 1.197,
            dsm_denominator_factor: 2.0,
            mu_ort: 0.449,
            sigma_ort: 0.226,
        }
    }
}

impl StandardizationParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("sigma_dsm", self.sigma_dsm),
            ("dsm_denominator_factor", self.dsm_denominator_factor),
            ("mu_ort", self.mu_ort),
            ("sigma_ort", self.sigma_ort),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    fn dsm_scale(&self) -> f64 {
        self.dsm_denominator_factor * self.sigma_dsm
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// `(dsm - mean(dsm)) / (factor · sigma_dsm)`. Returns the array and the
/// subtracted mean.
pub fn standardize_dsm(dsm: &[f64], params: &StandardizationParams) -> (Vec<f64>, f64) {
    let m = mean(dsm);
    let scale = params.dsm_scale();
    (dsm.iter().map(|v| (v - m) / scale).collect(), m)
}

pub fn destandardize_dsm(std_dsm: &[f64], original_mean: f64, params: &StandardizationParams) -> Vec<f64> {
    let scale = params.dsm_scale();
    std_dsm.iter().map(|v| v * scale + original_mean).collect()
}

/// Inverse standardization of a single standardized value.
pub fn destandardize_value(v: f64, original_mean: f64, params: &StandardizationParams) -> f64 {
    v * params.dsm_scale() + original_mean
}

/// `(ortho / 255 - mu_ort) / sigma_ort`.
pub fn standardize_ortho(ortho: &[u8], params: &StandardizationParams) -> Vec<f64> {
    ortho
        .iter()
        .map(|&p| (f64::from(p) / 255.0 - params.mu_ort) / params.sigma_ort)
        .collect()
}

/// Keeps samples whose DSM range is strictly below `threshold`.
pub fn range_filter(sample: &SampleRecord, threshold: f64) -> bool {
    sample.dsm_stats.max - sample.dsm_stats.min < threshold
}

/// Population standard deviation of every DSM pixel of every sample.
pub fn compute_global_sigma(samples: &[SampleRecord]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InsufficientData("no samples".into()));
    }
    let n = (samples.len() * PATCH_LEN) as f64;
    let mean = samples
        .iter()
        .flat_map(|s| s.dsm.iter())
        .map(|&v| f64::from(v))
        .sum::<f64>()
        / n;
    let var = samples
        .iter()
        .flat_map(|s| s.dsm.iter())
        .map(|&v| (f64::from(v) - mean).powi(2))
        .sum::<f64>()
        / n;
    Ok(var.sqrt())
}

// ---------------------------------------------------------------------------
// Augmentation

/// Counter-clockwise rotation in quarter turns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rotation {
    R0,
    R90,
    R180,
    R270,
}

/// Mirror applied after the rotation. `X` reverses each row (mirror along
/// the x axis), `Y` reverses the row order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Flip {
    None,
    X,
    Y,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Augmentation {
    pub rotation: Rotation,
    pub flip: Flip,
}

impl Augmentation {
    pub const IDENTITY: Augmentation = Augmentation {
        rotation: Rotation::R0,
        flip: Flip::None,
    };

    /// All 16 rotation × flip combinations, rotation-major.
    pub fn all() -> [Augmentation; 16] {
        let rots = [Rotation::R0, Rotation::R90, Rotation::R180, Rotation::R270];
        let flips = [Flip::None, Flip::X, Flip::Y, Flip::Both];
        std::array::from_fn(|i| Augmentation {
            rotation: rots[i / 4],
            flip: flips[i % 4],
        })
    }

    /// Applies the transform to a square row-major array of side `side`.
    pub fn apply<T: Copy>(&self, side: usize, data: &[T]) -> Vec<T> {
        assert_eq!(data.len(), side * side, "array is not {side}x{side}");
        let n = side - 1;
        let mut out = Vec::with_capacity(data.len());
        for r in 0..side {
            for c in 0..side {
                // undo the flip, then the rotation, to find the source pixel
                let (r1, c1) = match self.flip {
                    Flip::None => (r, c),
                    Flip::X => (r, n - c),
                    Flip::Y => (n - r, c),
                    Flip::Both => (n - r, n - c),
                };
                let (sr, sc) = match self.rotation {
                    Rotation::R0 => (r1, c1),
                    Rotation::R90 => (c1, n - r1),
                    Rotation::R180 => (n - r1, n - c1),
                    Rotation::R270 => (n - c1, r1),
                };
                out.push(data[sr * side + sc]);
            }
        }
        out
    }
}

/// The 16 augmented variants of a sample, in [`Augmentation::all`] order.
/// Ortho and DSM arrays are transformed identically; scalars are unchanged.
pub fn augment(sample: &SampleRecord) -> Vec<SampleRecord> {
    Augmentation::all()
        .iter()
        .map(|a| SampleRecord {
            ortho: a.apply(PATCH_SIDE, &sample.ortho),
            dsm: a.apply(PATCH_SIDE, &sample.dsm),
            ..sample.clone()
        })
        .collect()
}

/// Like [`augment`] but keeps only the 8 geometrically distinct variants
/// (first occurrence of each).
pub fn augment_distinct(sample: &SampleRecord) -> Vec<SampleRecord> {
    // a 2x2 marker with four distinct labels identifies each group element
    let marker = [0u8, 1, 2, 3];
    let mut seen: Vec<Vec<u8>> = Vec::new();
    let mut out = Vec::new();
    for a in Augmentation::all() {
        let sig = a.apply(2, &marker);
        if seen.contains(&sig) {
            continue;
        }
        seen.push(sig);
        out.push(SampleRecord {
            ortho: a.apply(PATCH_SIDE, &sample.ortho),
            dsm: a.apply(PATCH_SIDE, &sample.dsm),
            ..sample.clone()
        });
    }
    out
}

// ---------------------------------------------------------------------------
// Persistence

pub const META_FILE: &str = "meta.json";
pub const DSM_FILE: &str = "dsm.f32";
pub const ORTHO_FILE: &str = "ortho.pgm";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SampleMeta {
    wse_m: f64,
    dsm_mean_m: f64,
    dsm_std_m: f64,
    dsm_min_m: f64,
    dsm_max_m: f64,
    centroid_lat: Option<f64>,
    centroid_lon: Option<f64>,
    chainage_m: f64,
    subset_id: String,
}

pub fn write_sample(sample: &SampleRecord, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let meta = SampleMeta {
        wse_m: sample.wse,
        dsm_mean_m: sample.dsm_stats.mean,
        dsm_std_m: sample.dsm_stats.std,
        dsm_min_m: sample.dsm_stats.min,
        dsm_max_m: sample.dsm_stats.max,
        centroid_lat: sample.centroid_lat,
        centroid_lon: sample.centroid_lon,
        chainage_m: sample.chainage,
        subset_id: sample.subset_id.clone(),
    };
    let meta_path = dir.join(META_FILE);
    let json = serde_json::to_string_pretty(&meta)?;
    fs::write(&meta_path, json + "\n").map_err(|e| Error::io(&meta_path, e))?;

    let dsm_path = dir.join(DSM_FILE);
    let bytes: Vec<u8> = sample.dsm.iter().flat_map(|v| v.to_le_bytes()).collect();
    fs::write(&dsm_path, bytes).map_err(|e| Error::io(&dsm_path, e))?;

    let ortho_path = dir.join(ORTHO_FILE);
    fs::write(&ortho_path, encode_pgm(PATCH_SIDE, PATCH_SIDE, &sample.ortho))
        .map_err(|e| Error::io(&ortho_path, e))
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::Format {
        file: path.to_path_buf(),
        reason: e.to_string(),
    })
}

/// Reads a sample directory and checks the stored statistics against the
/// arrays.
pub fn read_sample(dir: impl AsRef<Path>) -> Result<SampleRecord> {
    let dir = dir.as_ref();
    let meta_path = dir.join(META_FILE);
    let meta: SampleMeta =
        serde_json::from_slice(&read_file(&meta_path)?).map_err(|e| Error::Format {
            file: meta_path.clone(),
            reason: e.to_string(),
        })?;

    let dsm_path = dir.join(DSM_FILE);
    let raw = read_file(&dsm_path)?;
    if raw.len() != PATCH_LEN * 4 {
        return Err(Error::Format {
            file: dsm_path,
            reason: format!("expected {} bytes, found {}", PATCH_LEN * 4, raw.len()),
        });
    }
    let dsm: Vec<f32> = raw
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect();

    let ortho_path = dir.join(ORTHO_FILE);
    let (w, h, ortho) = decode_pgm(&read_file(&ortho_path)?).map_err(|e| Error::Format {
        file: ortho_path.clone(),
        reason: e.to_string(),
    })?;
    if (w, h) != (PATCH_SIDE, PATCH_SIDE) {
        return Err(Error::Format {
            file: ortho_path,
            reason: format!("expected {PATCH_SIDE}x{PATCH_SIDE}, found {w}x{h}"),
        });
    }
    if dsm.iter().any(|v| !v.is_finite()) {
        return Err(Error::Format {
            file: dir.join(DSM_FILE),
            reason: "non-finite elevation".into(),
        });
    }

    let stats = DsmStats::of(&dsm);
    check_meta(&meta, &stats)?;
    Ok(SampleRecord {
        ortho,
        dsm,
        wse: meta.wse_m,
        dsm_stats: DsmStats {
            mean: meta.dsm_mean_m,
            std: meta.dsm_std_m,
            min: meta.dsm_min_m,
            max: meta.dsm_max_m,
        },
        centroid_lat: meta.centroid_lat,
        centroid_lon: meta.centroid_lon,
        chainage: meta.chainage_m,
        subset_id: meta.subset_id,
    })
}

fn check_meta(meta: &SampleMeta, actual: &DsmStats) -> Result<()> {
    let integrity = |field: &str, reason: String| Error::Integrity {
        field: field.to_string(),
        reason,
    };
    for (field, stored, recomputed) in [
        ("dsm_mean_m", meta.dsm_mean_m, actual.mean),
        ("dsm_std_m", meta.dsm_std_m, actual.std),
        ("dsm_min_m", meta.dsm_min_m, actual.min),
        ("dsm_max_m", meta.dsm_max_m, actual.max),
    ] {
        if !((stored - recomputed).abs() <= INTEGRITY_TOL) {
            return Err(integrity(
                field,
                format!("is {stored} but the array gives {recomputed}"),
            ));
        }
    }
    if !(meta.dsm_min_m <= meta.dsm_mean_m && meta.dsm_mean_m <= meta.dsm_max_m) {
        return Err(integrity("dsm_mean_m", "lies outside [dsm_min_m, dsm_max_m]".into()));
    }
    if !meta.wse_m.is_finite() {
        return Err(integrity("wse_m", "is not finite".into()));
    }
    if !meta.chainage_m.is_finite() {
        return Err(integrity("chainage_m", "is not finite".into()));
    }
    if let Some(lat) = meta.centroid_lat {
        if !(-90.0..=90.0).contains(&lat) {
            return Err(integrity("centroid_lat", format!("{lat} is not a latitude")));
        }
    }
    if let Some(lon) = meta.centroid_lon {
        if !(-180.0..=180.0).contains(&lon) {
            return Err(integrity("centroid_lon", format!("{lon} is not a longitude")));
        }
    }
    if meta.subset_id.trim().is_empty() {
        return Err(integrity("subset_id", "is empty".into()));
    }
    Ok(())
}

/// Dataset index: sample directories relative to the manifest, and the
/// subset identifiers they belong to.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Manifest {
    pub samples: Vec<String>,
    pub subsets: Vec<String>,
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<Manifest> {
    let path = path.as_ref();
    serde_json::from_slice(&read_file(path)?).map_err(|e| Error::Format {
        file: path.to_path_buf(),
        reason: e.to_string(),
    })
}

pub fn write_manifest(manifest: &Manifest, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let json = serde_json::to_string_pretty(manifest)?;
    fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_with(dsm: Vec<f32>) -> SampleRecord {
        SampleRecord::new(vec![128; PATCH_LEN], dsm, 200.0, Some((50.0, 19.9)), 12.5, "GRO21").unwrap()
    }

    #[test]
    fn stats_are_population() {
        let mut dsm = vec![0.0f32; PATCH_LEN];
        for v in dsm.iter_mut().skip(PATCH_LEN / 2) {
            *v = 2.0;
        }
        let s = DsmStats::of(&dsm);
        assert_eq!((s.mean, s.std, s.min, s.max), (1.0, 1.0, 0.0, 2.0));
    }

    #[test]
    fn wrong_size_rejected() {
        assert!(SampleRecord::new(vec![0; 10], vec![0.0; PATCH_LEN], 0.0, None, 0.0, "A").is_err());
    }

    #[test]
    fn standardize_examples() {
        let p = StandardizationParams::default();
        let (z, m) = standardize_dsm(&[7.5; 16], &p);
        assert_eq!(m, 7.5);
        assert!(z.iter().all(|&v| v == 0.0));

        // mean 200 with one pixel at 201.197 balanced by one at 198.803
        let (z, m) = standardize_dsm(&[201.197, 198.803, 200.0, 200.0], &p);
        assert!((m - 200.0).abs() < 1e-12);
        assert!((z[0] - 0.5).abs() < 1e-9);

        let back = destandardize_dsm(&[0.5], 200.0, &p);
        assert!((back[0] - 201.197).abs() < 1e-9);
        assert_eq!(destandardize_dsm(&[0.0; 3], 250.0, &p), vec![250.0; 3]);
    }

    #[test]
    fn standardize_ortho_anchors() {
        let p = StandardizationParams::default();
        let z = standardize_ortho(&[0, 114, 255], &p);
        assert!((z[0] - (-0.449 / 0.226)).abs() < 1e-12);
        assert!((z[0] + 1.98672).abs() < 1e-5);
        assert!((z[1] - (114.0 / 255.0 - 0.449) / 0.226).abs() < 1e-12);
        assert!((z[1] + 0.0085893).abs() < 1e-6);
        assert!((z[2] - 2.43805).abs() < 1e-5);
    }

    #[test]
    fn range_filter_is_strict() {
        let mk = |top: f32| {
            let mut d = vec![100.0f32; PATCH_LEN];
            d[0] = 100.0 + top;
            sample_with(d)
        };
        assert!(range_filter(&mk(4.49), 4.5));
        assert!(!range_filter(&mk(4.5), 4.5));
        assert!(!range_filter(&mk(10.0), 4.5));
    }

    #[test]
    fn global_sigma_examples() {
        assert_eq!(compute_global_sigma(&[sample_with(vec![3.0; PATCH_LEN])]).unwrap(), 0.0);
        let s = compute_global_sigma(&[sample_with(vec![0.0; PATCH_LEN]), sample_with(vec![2.0; PATCH_LEN])])
            .unwrap();
        assert!((s - 1.0).abs() < 1e-12);
        assert!(matches!(compute_global_sigma(&[]), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn rotation_direction() {
        // 1 2      2 4
        // 3 4  ->  1 3   (quarter turn counter-clockwise)
        let a = Augmentation {
            rotation: Rotation::R90,
            flip: Flip::None,
        };
        assert_eq!(a.apply(2, &[1, 2, 3, 4]), vec![2, 4, 1, 3]);
        let fx = Augmentation {
            rotation: Rotation::R0,
            flip: Flip::X,
        };
        assert_eq!(fx.apply(2, &[1, 2, 3, 4]), vec![2, 1, 4, 3]);
    }

    #[test]
    fn identity_and_redundant_pair() {
        let marker: Vec<u8> = (0..9).collect();
        assert_eq!(Augmentation::IDENTITY.apply(3, &marker), marker);
        let r180_both = Augmentation {
            rotation: Rotation::R180,
            flip: Flip::Both,
        };
        assert_eq!(r180_both.apply(3, &marker), marker);
    }

    #[test]
    fn augment_counts() {
        let mut d = vec![0.0f32; PATCH_LEN];
        d.iter_mut().enumerate().for_each(|(i, v)| *v = i as f32 * 1e-4);
        let s = sample_with(d);
        let all = augment(&s);
        assert_eq!(all.len(), 16);
        assert_eq!(all[0], s);
        assert!(all.iter().all(|v| v.wse == s.wse && v.subset_id == s.subset_id));
        assert_eq!(augment_distinct(&s).len(), 8);
    }

    #[test]
    fn read_missing_dsm_is_format_error() {
        let dir = tempfile::tempdir().unwrap();
        write_sample(&sample_with(vec![1.0; PATCH_LEN]), dir.path()).unwrap();
        fs::remove_file(dir.path().join(DSM_FILE)).unwrap();
        match read_sample(dir.path()).unwrap_err() {
            Error::Format { file, .. } => assert!(file.ends_with(DSM_FILE)),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn read_detects_low_max() {
        let dir = tempfile::tempdir().unwrap();
        let mut d = vec![1.0f32; PATCH_LEN];
        d[5] = 3.0;
        write_sample(&sample_with(d), dir.path()).unwrap();
        let p = dir.path().join(META_FILE);
        let mut v: serde_json::Value = serde_json::from_slice(&fs::read(&p).unwrap()).unwrap();
        v["dsm_max_m"] = serde_json::json!(2.0);
        fs::write(&p, v.to_string()).unwrap();
        match read_sample(dir.path()).unwrap_err() {
            Error::Integrity { field, .. } => assert_eq!(field, "dsm_max_m"),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let m = Manifest {
            samples: vec!["GRO21_0000".into()],
            subsets: vec!["GRO21".into()],
        };
        let p = dir.path().join(MANIFEST_FILE);
        write_manifest(&m, &p).unwrap();
        assert_eq!(read_manifest(&p).unwrap(), m);
    }
}
