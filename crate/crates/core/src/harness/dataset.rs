//! Frame enumeration, identity splits, rig variants, and on-disk datasets.

use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::camera::{Camera, CameraPose, Vec3};
use crate::error::{Error, Result};
use crate::harness::config::{Axis, AxisValue, DatasetSpec, SPEC_VERSION};
use crate::harness::seeds;
use crate::image::{LinearImage, QuantizedImage};
use crate::metrics::GazeSample;
use crate::optics::Pipeline;
use crate::par::{self, Exec};
use crate::scene::{
    apply_gaze, gaze_targets, generate_identity, render_with, sample_slippage, EyeModel, RigConfig,
    SlippageTransform,
};

/// Crate version recorded in every artifact.
pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Deterministic partition into train and test identities: shuffle with the
/// trial seed, then the first `ceil(n * a / (a + b))` ids train.
pub fn split_identities(ids: &[u64], ratio: [usize; 2], trial_seed: u64) -> Result<(Vec<u64>, Vec<u64>)> {
    if ids.len() < 5 {
        return Err(Error::invalid(format!("splitting needs at least 5 identities, got {}", ids.len())));
    }
    let [a, b] = ratio;
    if a == 0 || b == 0 {
        return Err(Error::invalid("split ratio parts must be positive"));
    }
    let mut shuffled = ids.to_vec();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(trial_seed));
    // Keep at least one test identity for ratios heavily skewed to training.
    let n_train = (ids.len() * a).div_ceil(a + b).min(ids.len() - 1);
    let test = shuffled.split_off(n_train);
    Ok((shuffled, test))
}

/// Rig variants along a camera axis; the swept camera is always re-aimed
/// at the rig's aim point in front of the nominal eye center.
///
/// * vertical: the nominal camera moved by `value` mm along device y.
/// * line: `value` in [0, 1] interpolates from the nominal position to the
///   on-axis position straight in front of the eye at the same standoff.
/// * focal: `fx = fy = value` with the nominal pose.
pub fn camera_axis_values(axis: Axis, rig: &RigConfig, camera_id: usize, values: &[AxisValue]) -> Result<Vec<RigConfig>> {
    if !axis.is_camera() {
        return Err(Error::invalid(format!("{} is not a camera axis", axis.name())));
    }
    let nominal = *rig.camera(camera_id)?;
    let eye = rig.nominal_eye_center;
    let p0 = nominal.pose.center();
    let standoff = (p0 - eye).norm();
    let on_axis = eye + Vec3::new(0.0, 0.0, standoff);
    let aim = rig.aim_point();
    values
        .iter()
        .map(|v| {
            let camera = match axis {
                Axis::FocalLength => Camera::new(nominal.intrinsics.with_focal(v.0)?, nominal.pose),
                Axis::CameraOffsetVertical => {
                    let p = p0 + Vec3::new(0.0, v.0, 0.0);
                    Camera::new(nominal.intrinsics, CameraPose::look_at(p, aim, Vec3::y())?)
                }
                Axis::CameraLineToOnaxis => {
                    let s = v.0;
                    let p = p0 * (1.0 - s) + on_axis * s;
                    Camera::new(nominal.intrinsics, CameraPose::look_at(p, aim, Vec3::y())?)
                }
                _ => unreachable!("checked above"),
            };
            let mut out = rig.clone();
            out.cameras[camera_id] = camera;
            Ok(out)
        })
        .collect()
}

/// One frame of a dataset and the seeds that reproduce it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameInfo {
    pub sample: GazeSample,
    pub slip_index: usize,
    pub slippage: SlippageTransform,
    pub slippage_seed: u64,
    pub noise_seed: u64,
}

/// Frames of `ids` in identity, target, slippage order.
pub fn frame_plan(spec: &DatasetSpec, ids: &[u64]) -> Result<Vec<FrameInfo>> {
    let targets = gaze_targets(spec.targets.count, spec.targets.half_fov_deg)?;
    let mut out = Vec::with_capacity(ids.len() * spec.frames_per_identity());
    for &id in ids {
        for (t, g) in targets.iter().enumerate() {
            for s in 0..spec.slippage_per_gaze {
                let slippage_seed = seeds::slippage_seed(spec.master_seed, id, t, s);
                out.push(FrameInfo {
                    sample: GazeSample::new(*g, t, id)?,
                    slip_index: s,
                    slippage: sample_slippage(slippage_seed, &spec.slippage_ranges)?,
                    slippage_seed,
                    noise_seed: seeds::noise_seed(spec.master_seed, id, t, s),
                });
            }
        }
    }
    Ok(out)
}

/// Eye model of identity `id`, placed at the rig's nominal eye center.
pub fn identity_model(spec: &DatasetSpec, id: u64) -> EyeModel {
    generate_identity(seeds::identity_seed(spec.identity_seed_base, id)).with_center(spec.rig.nominal_eye_center)
}

/// Clean linear render of one frame.
pub fn render_frame(model: &EyeModel, frame: &FrameInfo, rig: &RigConfig, camera_id: usize, exec: Exec) -> Result<LinearImage> {
    let eye = apply_gaze(model, &frame.sample.gaze_vec())?;
    render_with(&eye, rig.camera(camera_id)?, &rig.leds, &frame.slippage, exec)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Per-frame sidecar label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameLabel {
    pub identity_id: u64,
    pub target_index: usize,
    pub gaze: [f64; 3],
    pub slippage: [f64; 3],
    pub camera_id: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestFrame {
    pub image: String,
    pub label: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub clean: Option<String>,
    pub frame: FrameInfo,
    pub sha256: String,
}

/// Index of a dataset written by [`build_dataset`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub spec_version: String,
    pub artifact_version: String,
    pub spec: DatasetSpec,
    pub identity_ids: Vec<u64>,
    pub frame_count: usize,
    pub frames: Vec<ManifestFrame>,
}

impl DatasetManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct DatasetOptions {
    /// Also write the clean linear render of every frame as ETLF.
    pub write_clean: bool,
    pub exec: Exec,
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Renders, degrades, and writes every frame of `ids` under `out_dir`,
/// plus `manifest.json`.
pub fn build_dataset(spec: &DatasetSpec, ids: &[u64], out_dir: &Path, opts: DatasetOptions) -> Result<DatasetManifest> {
    spec.validate()?;
    let frames_dir = out_dir.join("frames");
    std::fs::create_dir_all(&frames_dir).map_err(|e| Error::io(&frames_dir, e))?;
    let plan = frame_plan(spec, ids)?;
    let models: Vec<(u64, EyeModel)> = ids.iter().map(|&id| (id, identity_model(spec, id))).collect();
    let camera = spec.rig.camera(spec.camera_id)?;
    let pipeline = Pipeline::new(spec.optics, camera.intrinsics.width, camera.intrinsics.height)?;
    let entries = par::try_map_range(plan.len(), opts.exec, |k| {
        let f = &plan[k];
        let s = &f.sample;
        let model = &models.iter().find(|(id, _)| *id == s.identity_id).expect("planned id").1;
        let clean = render_frame(model, f, &spec.rig, spec.camera_id, Exec::Sequential)?;
        let q: QuantizedImage = pipeline.run(&clean, f.noise_seed)?;
        let stem = format!("i{:04}_t{:03}_s{:02}", s.identity_id, s.target_index, f.slip_index);
        let pgm = q.to_pgm_bytes();
        let image: PathBuf = frames_dir.join(format!("{stem}.pgm"));
        write_file(&image, &pgm)?;
        let label = FrameLabel {
            identity_id: s.identity_id,
            target_index: s.target_index,
            gaze: s.gaze,
            slippage: [f.slippage.dx, f.slippage.dy, f.slippage.dz],
            camera_id: spec.camera_id,
        };
        let label_path = frames_dir.join(format!("{stem}.json"));
        write_file(&label_path, serde_json::to_string(&label).expect("label serializes").as_bytes())?;
        let clean_name = if opts.write_clean {
            let p = frames_dir.join(format!("{stem}.etlf"));
            clean.save_etlf(&p)?;
            Some(format!("frames/{stem}.etlf"))
        } else {
            None
        };
        Ok::<_, Error>(ManifestFrame {
            image: format!("frames/{stem}.pgm"),
            label: format!("frames/{stem}.json"),
            clean: clean_name,
            frame: *f,
            sha256: sha256_hex(&pgm),
        })
    })?;
    let manifest = DatasetManifest {
        spec_version: SPEC_VERSION.to_string(),
        artifact_version: ARTIFACT_VERSION.to_string(),
        spec: spec.clone(),
        identity_ids: ids.to_vec(),
        frame_count: entries.len(),
        frames: entries,
    };
    let path = out_dir.join("manifest.json");
    write_file(&path, serde_json::to_string_pretty(&manifest).expect("manifest serializes").as_bytes())?;
    Ok(manifest)
}
