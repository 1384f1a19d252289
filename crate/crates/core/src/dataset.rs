//! Dataset generation and the on-disk manifest.
//!
//! Generation is a pure function of the [`RunConfig`]: a clip plan is drawn
//! from a ChaCha stream seeded with the config seed, and every clip draws its
//! noise from its own stream, so clips can be computed in parallel and in any
//! order with identical results.
//!
//! Bistatic clip `i` of a class at elevation `e` uses the `i mod L`-th
//! transmitter at that elevation and targets the `(i / L) mod B`-th angle
//! bin. The target bistatic angle is drawn uniformly inside the bin (3° clear
//! of its edges), the receiver is placed on a random side of the transmitter
//! at the same elevation with the azimuth offset that produces that angle,
//! and it sweeps `aperture_deg` in `poses_per_clip` steps. Monostatic clips
//! reuse the same draw but look along the bisector the bistatic pair would
//! have, sweeping half the aperture so the k-space rotation matches.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::clipio::{self, ClipFile};
use crate::config::RunConfig;
use crate::echo::{add_noise_power, collect_patch_geometries, equalize_support, Channel, KSpacePatch};
use crate::error::{Error, Result};
use crate::imaging::{form_clip, theoretical_resolution, ImageClip};
use crate::polarimetry::{feature_cube_from_clips, FeatureCube};
use crate::scene::{builtin_target, load_target, CollectionGeometry, SensorPose, TargetModel};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const CLIP_DIR: &str = "clips";

/// Clearance kept between drawn bistatic angles and the bin edges, degrees.
const BIN_MARGIN_DEG: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Train,
    Test,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CollectionMode {
    Monostatic,
    Bistatic,
}

/// Everything needed to reproduce one clip.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClipSpec {
    pub index: usize,
    pub class_id: u8,
    pub role: Role,
    pub mode: CollectionMode,
    pub elevation: f64,
    /// Transmitter azimuth after jitter, degrees.
    pub tx_azimuth: f64,
    pub beta_target: f64,
    /// +1 places the receiver counter-clockwise of the transmitter.
    pub side: i8,
}

/// Receiver-to-transmitter azimuth offset giving bistatic angle `beta` when
/// both sit at elevation `elevation`.
pub fn azimuth_offset_for_angle(beta: f64, elevation: f64) -> f64 {
    let (se, ce) = elevation.to_radians().sin_cos();
    let c = (beta.to_radians().cos() - se * se) / (ce * ce);
    c.clamp(-1.0, 1.0).acos().to_degrees()
}

fn sweep_azimuths(center: f64, span: f64, count: usize) -> impl Iterator<Item = f64> {
    (0..count).map(move |k| center - 0.5 * span + span * k as f64 / (count - 1) as f64)
}

/// Draws the full clip plan: train then test, class-major, bistatic then
/// monostatic.
pub fn plan_clips(cfg: &RunConfig) -> Vec<ClipSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let max_beta = cfg.receiver.max_bistatic_angle;
    let mut bins: Vec<[f64; 2]> = cfg
        .angle_bins
        .iter()
        .filter(|b| b[0] < max_beta)
        .map(|b| [b[0], b[1].min(max_beta)])
        .collect();
    if bins.is_empty() {
        bins.push([0.0, max_beta]);
    }
    let mut specs = Vec::new();
    for (role, elevation) in [(Role::Train, cfg.train_elevation), (Role::Test, cfg.test_elevation)] {
        let tx: Vec<f64> = cfg
            .transmitters
            .iter()
            .filter(|t| t.elevation == elevation)
            .map(|t| t.azimuth)
            .collect();
        for class_id in 0..cfg.targets.len() {
            for (mode, count) in [
                (CollectionMode::Bistatic, cfg.clips_per_class),
                (CollectionMode::Monostatic, cfg.monostatic_clips_per_class),
            ] {
                for i in 0..count {
                    let bin = bins[(i / tx.len()) % bins.len()];
                    let lo = bin[0] + BIN_MARGIN_DEG;
                    let hi = (bin[1] - BIN_MARGIN_DEG).max(lo);
                    let jitter = cfg.receiver.azimuth_jitter_deg;
                    let dj = if jitter > 0.0 { rng.random_range(-jitter..=jitter) } else { 0.0 };
                    let beta_target = if hi > lo { rng.random_range(lo..hi) } else { lo };
                    let side = if rng.random::<bool>() { 1 } else { -1 };
                    specs.push(ClipSpec {
                        index: specs.len(),
                        class_id: class_id as u8,
                        role,
                        mode,
                        elevation,
                        tx_azimuth: (tx[i % tx.len()] + dj).rem_euclid(360.0),
                        beta_target,
                        side,
                    });
                }
            }
        }
    }
    specs
}

/// Transmitter/receiver pairs along the clip's synthetic aperture.
pub fn clip_geometries(cfg: &RunConfig, spec: &ClipSpec) -> Result<Vec<CollectionGeometry>> {
    let r = &cfg.receiver;
    let offset = spec.side as f64 * azimuth_offset_for_angle(spec.beta_target, spec.elevation);
    match spec.mode {
        CollectionMode::Bistatic => {
            let tx = SensorPose::new(spec.elevation, spec.tx_azimuth, cfg.range_m)?;
            sweep_azimuths(spec.tx_azimuth + offset, r.aperture_deg, r.poses_per_clip)
                .map(|az| Ok(CollectionGeometry::new(tx, SensorPose::new(spec.elevation, az, cfg.range_m)?)))
                .collect()
        }
        CollectionMode::Monostatic => {
            sweep_azimuths(spec.tx_azimuth + 0.5 * offset, 0.5 * r.aperture_deg, r.poses_per_clip)
                .map(|az| Ok(CollectionGeometry::monostatic(SensorPose::new(spec.elevation, az, cfg.range_m)?)))
                .collect()
        }
    }
}

/// Target models named by the config, symmetrized when requested.
pub fn resolve_targets(cfg: &RunConfig) -> Result<Vec<TargetModel>> {
    cfg.targets
        .iter()
        .map(|name| {
            let t = match builtin_target(name) {
                Some(t) => t,
                None => load_target(name)?,
            };
            Ok(if cfg.polarimetry.symmetrize_targets { t.symmetrized() } else { t })
        })
        .collect()
}

fn channels(cfg: &RunConfig) -> &'static [Channel] {
    if cfg.polarimetry.enabled {
        &Channel::ALL
    } else {
        &[Channel::HH]
    }
}

/// Noise-free or noisy patches for every channel of a clip.
pub fn simulate_patches(cfg: &RunConfig, targets: &[TargetModel], spec: &ClipSpec) -> Result<Vec<KSpacePatch>> {
    let target = targets
        .get(spec.class_id as usize)
        .ok_or_else(|| Error::Validation(format!("class id {} has no target", spec.class_id)))?;
    let geometries = clip_geometries(cfg, spec)?;
    let sweep = cfg.frequency_sweep()?;
    let mut patches = channels(cfg)
        .iter()
        .map(|&ch| collect_patch_geometries(target, &geometries, &sweep, ch))
        .collect::<Result<Vec<_>>>()?;
    if let Some(snr) = cfg.noise_snr_db {
        // One noise level for all channels, set by the mean co- and
        // cross-polar power together.
        let total: usize = patches.iter().map(|p| p.len()).sum();
        let power = patches
            .iter()
            .flat_map(|p| p.samples.iter())
            .map(|s| s.value.norm_sqr())
            .sum::<f64>()
            / total as f64;
        let noise = power / 10f64.powf(snr / 10.0);
        for p in &mut patches {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(1 + spec.index as u64 * 4 + p.channel().code() as u64);
            add_noise_power(p, noise, &mut rng);
        }
    }
    Ok(patches)
}

/// One generated clip: a clip per simulated channel and, for polarimetric
/// runs, the feature cube.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetClip {
    pub spec: ClipSpec,
    pub clips: Vec<ImageClip>,
    pub cube: Option<FeatureCube>,
}

impl DatasetClip {
    /// The HH clip.
    pub fn clip(&self) -> &ImageClip {
        &self.clips[0]
    }

    pub fn mean_bistatic_angle(&self) -> f64 {
        self.clips[0].meta.mean_bistatic_angle
    }

    pub fn rx_elevation(&self) -> f64 {
        self.clips[0].meta.rx_elevation
    }
}

/// Images one clip, optionally trimming every channel's k-support to a
/// square of side `support` first.
pub fn simulate_clip(
    cfg: &RunConfig,
    targets: &[TargetModel],
    spec: &ClipSpec,
    support: Option<f64>,
) -> Result<DatasetClip> {
    let params = cfg.imaging_params();
    let mut clips = Vec::new();
    for patch in simulate_patches(cfg, targets, spec)? {
        let patch = match support {
            Some(extent) => equalize_support(&patch, extent)?,
            None => patch,
        };
        clips.push(form_clip(&patch, &params)?);
    }
    let cube = if cfg.polarimetry.enabled {
        Some(feature_cube_from_clips(
            &clips[0],
            &clips[1],
            &clips[2],
            &clips[3],
            &cfg.polarimetry.selected,
            cfg.polarimetry.alignment,
        )?)
    } else {
        None
    };
    Ok(DatasetClip { spec: *spec, clips, cube })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub config: RunConfig,
    pub classes: Vec<String>,
    pub clips: Vec<DatasetClip>,
}

impl Dataset {
    pub fn config_hash(&self) -> String {
        self.config.hash()
    }

    pub fn filter(&self, keep: impl Fn(&DatasetClip) -> bool) -> Vec<&DatasetClip> {
        self.clips.iter().filter(|c| keep(c)).collect()
    }
}

fn generate_with(cfg: &RunConfig, specs: &[ClipSpec], support: Option<f64>) -> Result<Dataset> {
    cfg.validate()?;
    let targets = resolve_targets(cfg)?;
    let clips = specs
        .par_iter()
        .map(|s| simulate_clip(cfg, &targets, s, support))
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset {
        config: cfg.clone(),
        classes: targets.iter().map(|t| t.name.clone()).collect(),
        clips,
    })
}

pub fn generate(cfg: &RunConfig) -> Result<Dataset> {
    generate_with(cfg, &plan_clips(cfg), None)
}

/// Smallest range extent among the bistatic patches falling in the
/// largest-angle bin.
pub fn equal_support_extent(cfg: &RunConfig) -> Result<f64> {
    let targets = resolve_targets(cfg)?;
    let last = *cfg
        .angle_bins
        .last()
        .ok_or_else(|| Error::EmptyBin("no angle bins".into()))?;
    let specs: Vec<ClipSpec> = plan_clips(cfg)
        .into_iter()
        .filter(|s| s.mode == CollectionMode::Bistatic)
        .collect();
    let extents = specs
        .par_iter()
        .map(|s| {
            let sweep = cfg.frequency_sweep()?;
            let target = &targets[s.class_id as usize];
            let patch = collect_patch_geometries(target, &clip_geometries(cfg, s)?, &sweep, Channel::HH)?;
            let beta = patch.mean_bistatic_angle;
            Ok(in_bin(beta, last, true).then(|| patch.frame().range_extent))
        })
        .collect::<Result<Vec<_>>>()?;
    extents
        .into_iter()
        .flatten()
        .reduce(f64::min)
        .ok_or_else(|| Error::EmptyBin(format!("no bistatic clip in [{}, {}]", last[0], last[1])))
}

/// Half-open bin membership, closed at the top for the last bin.
pub fn in_bin(beta: f64, bin: [f64; 2], last: bool) -> bool {
    beta >= bin[0] && (beta < bin[1] || (last && beta == bin[1]))
}

/// Regenerates `dataset` with every channel trimmed to the common k-support
/// of the largest-angle bin.
pub fn regenerate_equal_support(dataset: &Dataset) -> Result<Dataset> {
    let extent = equal_support_extent(&dataset.config)?;
    let specs: Vec<ClipSpec> = dataset.clips.iter().map(|c| c.spec).collect();
    generate_with(&dataset.config, &specs, Some(extent))
}

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassEntry {
    pub id: u8,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileEntry {
    /// Path relative to the dataset directory.
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestClip {
    #[serde(flatten)]
    pub spec: ClipSpec,
    pub mean_bistatic_angle: f64,
    pub rx_elevation: f64,
    pub rx_azimuth_center: f64,
    /// One file per channel, in HH, HV, VH, VV order.
    pub files: Vec<FileEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cube: Option<FileEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub tool_version: String,
    pub config_hash: String,
    pub seed: u64,
    pub config: RunConfig,
    /// Monostatic `c / 2B`, meters.
    pub theoretical_resolution_m: f64,
    pub classes: Vec<ClassEntry>,
    pub clips: Vec<ManifestClip>,
}

fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn clip_file_name(index: usize, suffix: &str) -> String {
    format!("{CLIP_DIR}/{index:05}_{suffix}.bsar")
}

/// Writes every clip and the manifest under `dir`.
pub fn write_dataset(dataset: &Dataset, dir: impl AsRef<Path>) -> Result<Manifest> {
    let dir = dir.as_ref();
    let clip_dir = dir.join(CLIP_DIR);
    std::fs::create_dir_all(&clip_dir).map_err(|e| Error::io(&clip_dir, e))?;
    let entries = dataset
        .clips
        .par_iter()
        .map(|c| {
            let id = c.spec.class_id;
            let mut files = Vec::new();
            for clip in &c.clips {
                let channel = clip.meta.channel.map(|ch| ch.to_string()).unwrap_or_default();
                let name = clip_file_name(c.spec.index, &channel);
                let bytes = clipio::encode_clip(clip, id)?;
                clipio::write_file(dir.join(&name), &bytes)?;
                files.push(FileEntry { file: name, sha256: digest(&bytes) });
            }
            let cube = match &c.cube {
                Some(cube) => {
                    let name = clip_file_name(c.spec.index, "cube");
                    let bytes = clipio::encode_cube(cube, c.clip().pixel_spacing, id);
                    clipio::write_file(dir.join(&name), &bytes)?;
                    Some(FileEntry { file: name, sha256: digest(&bytes) })
                }
                None => None,
            };
            let meta = &c.clip().meta;
            Ok(ManifestClip {
                spec: c.spec,
                mean_bistatic_angle: meta.mean_bistatic_angle,
                rx_elevation: meta.rx_elevation,
                rx_azimuth_center: meta.rx_azimuth_center,
                files,
                cube,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let manifest = Manifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash: dataset.config_hash(),
        seed: dataset.config.seed,
        config: dataset.config.clone(),
        theoretical_resolution_m: theoretical_resolution(dataset.config.sweep.bandwidth_hz, 0.0)?,
        classes: dataset
            .classes
            .iter()
            .enumerate()
            .map(|(id, name)| ClassEntry { id: id as u8, name: name.clone() })
            .collect(),
        clips: entries,
    };
    let path = dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

pub fn read_manifest(dir: impl AsRef<Path>) -> Result<Manifest> {
    let path = dir.as_ref().join(MANIFEST_FILE);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| Error::Config {
        field: format!("{} line {} column {}", path.display(), e.line(), e.column()),
        message: e.to_string(),
    })?;
    let found = manifest.config.hash();
    if found != manifest.config_hash {
        return Err(Error::HashMismatch {
            expected: manifest.config_hash.clone(),
            found,
        });
    }
    manifest.config.validate()?;
    Ok(manifest)
}

fn read_verified(dir: &Path, entry: &FileEntry) -> Result<ClipFile> {
    let path: PathBuf = dir.join(&entry.file);
    let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
    let found = digest(&bytes);
    if found != entry.sha256 {
        return Err(Error::Validation(format!(
            "{} has digest {found}, manifest lists {}",
            entry.file, entry.sha256
        )));
    }
    clipio::decode(&bytes)
}

/// Reads and verifies a dataset written by [`write_dataset`].
pub fn load_dataset(dir: impl AsRef<Path>) -> Result<Dataset> {
    let dir = dir.as_ref();
    let manifest = read_manifest(dir)?;
    let names: BTreeMap<u8, String> = manifest.classes.iter().map(|c| (c.id, c.name.clone())).collect();
    let clips = manifest
        .clips
        .par_iter()
        .map(|entry| {
            let name = names.get(&entry.spec.class_id).ok_or_else(|| {
                Error::Validation(format!("clip {} has unknown class id {}", entry.spec.index, entry.spec.class_id))
            })?;
            let mut clips = Vec::new();
            for f in &entry.files {
                match read_verified(dir, f)? {
                    ClipFile::Clip { mut clip, .. } => {
                        clip.meta.class_label = name.clone();
                        clips.push(clip);
                    }
                    ClipFile::Cube { .. } => {
                        return Err(Error::Validation(format!("{} is a cube, expected a clip", f.file)))
                    }
                }
            }
            if clips.is_empty() {
                return Err(Error::Validation(format!("clip {} lists no files", entry.spec.index)));
            }
            let cube = match &entry.cube {
                Some(f) => match read_verified(dir, f)? {
                    ClipFile::Cube { mut cube, .. } => {
                        cube.meta.class_label = name.clone();
                        Some(cube)
                    }
                    ClipFile::Clip { .. } => {
                        return Err(Error::Validation(format!("{} is a clip, expected a cube", f.file)))
                    }
                },
                None => None,
            };
            Ok(DatasetClip { spec: entry.spec, clips, cube })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset {
        config: manifest.config,
        classes: manifest.classes.into_iter().map(|c| c.name).collect(),
        clips,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::bistatic_angle;

    fn small() -> RunConfig {
        let mut cfg = RunConfig::with_seed(11);
        cfg.clips_per_class = 6;
        cfg.monostatic_clips_per_class = 2;
        cfg.sweep.count = 16;
        cfg.receiver.poses_per_clip = 16;
        cfg.imaging.size = 32;
        cfg.imaging.pixel_spacing = 0.3;
        cfg
    }

    #[test]
    fn offset_reproduces_the_angle() {
        for el in [0.0, 10.0, 15.0, 40.0] {
            for beta in [0.0, 20.0, 65.0, 100.0] {
                let dphi = azimuth_offset_for_angle(beta, el);
                let g = CollectionGeometry::new(
                    SensorPose::new(el, 30.0, 1e9).unwrap(),
                    SensorPose::new(el, 30.0 + dphi, 1e9).unwrap(),
                );
                assert!((bistatic_angle(&g) - beta).abs() < 1e-6, "{el} {beta}");
            }
        }
    }

    #[test]
    fn plan_counts_and_bins() {
        let cfg = small();
        let plan = plan_clips(&cfg);
        assert_eq!(plan.len(), 2 * 4 * (6 + 2));
        assert!(plan.iter().enumerate().all(|(i, s)| s.index == i));
        let train = plan.iter().filter(|s| s.role == Role::Train).count();
        assert_eq!(train, plan.len() / 2);
        for s in &plan {
            assert!(s.beta_target >= 3.0 && s.beta_target <= 97.0);
        }
        assert_eq!(plan, plan_clips(&cfg));
        assert_ne!(plan, plan_clips(&RunConfig { seed: 12, ..cfg.clone() }));
    }

    #[test]
    fn generated_clips_are_deterministic_and_tagged() {
        let mut cfg = small();
        cfg.noise_snr_db = Some(20.0);
        cfg.clips_per_class = 2;
        cfg.monostatic_clips_per_class = 1;
        let a = generate(&cfg).unwrap();
        let b = generate(&cfg).unwrap();
        assert_eq!(a, b);
        for c in &a.clips {
            assert_eq!(c.clip().meta.class_label, a.classes[c.spec.class_id as usize]);
            assert!((c.rx_elevation() - c.spec.elevation).abs() < 1e-9);
            if c.spec.mode == CollectionMode::Monostatic {
                assert!(c.mean_bistatic_angle().abs() < 1e-9);
            }
        }
    }

    #[test]
    fn manifest_roundtrip_and_tamper_detection() {
        let mut cfg = small();
        cfg.clips_per_class = 1;
        cfg.monostatic_clips_per_class = 1;
        cfg.polarimetry.enabled = true;
        let ds = generate(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let manifest = write_dataset(&ds, dir.path()).unwrap();
        assert_eq!(manifest.clips.len(), 16);
        assert_eq!(manifest.clips[0].files.len(), 4);
        assert!((manifest.theoretical_resolution_m - 0.333).abs() < 1e-3);
        let back = load_dataset(dir.path()).unwrap();
        assert_eq!(back.classes, ds.classes);
        assert_eq!(back.clips.len(), ds.clips.len());
        for (x, y) in back.clips.iter().zip(&ds.clips) {
            assert_eq!(x.spec, y.spec);
            assert_eq!(x.clip().meta, y.clip().meta);
            assert_eq!(x.cube.as_ref().unwrap().selected.len(), 16);
        }

        let path = dir.path().join(&manifest.clips[3].files[1].file);
        let mut bytes = std::fs::read(&path).unwrap();
        let last = bytes.len() - 1;
        bytes[last] ^= 1;
        std::fs::write(&path, bytes).unwrap();
        assert!(matches!(load_dataset(dir.path()), Err(Error::Validation(_))));

        let mpath = dir.path().join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&mpath).unwrap().replace("\"seed\": 11", "\"seed\": 12");
        std::fs::write(&mpath, text).unwrap();
        assert!(matches!(read_manifest(dir.path()), Err(Error::HashMismatch { .. })));
    }

    #[test]
    fn equal_support_trims_low_angle_clips() {
        let mut cfg = small();
        cfg.clips_per_class = 18;
        cfg.monostatic_clips_per_class = 0;
        cfg.targets = vec!["APC".into(), "STR".into()];
        let ds = generate(&cfg).unwrap();
        let extent = equal_support_extent(&cfg).unwrap();
        let eq = regenerate_equal_support(&ds).unwrap();
        assert_eq!(eq.clips.len(), ds.clips.len());
        let targets = resolve_targets(&cfg).unwrap();
        for c in &ds.clips {
            let p = &simulate_patches(&cfg, &targets, &c.spec).unwrap()[0];
            let trimmed = equalize_support(p, extent).unwrap();
            assert!(trimmed.frame().range_extent <= extent * (1.0 + 1e-9));
        }
    }
}
