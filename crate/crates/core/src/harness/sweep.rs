//! Sweep orchestration: render once, degrade per configuration, train and
//! score both estimators per trial.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::camera::Vec3;
use crate::error::{Error, Result};
use crate::estimator::{
    block_means, evaluate_predictions, fit_geometric, pupil_glint_features, EvalResult, PupilGlint, RidgeStats,
};
use crate::harness::config::{AxisValue, DatasetSpec, SweepSpec, SPEC_VERSION};
use crate::harness::dataset::{camera_axis_values, frame_plan, identity_model, render_frame, split_identities, FrameInfo, ARTIFACT_VERSION};
use crate::harness::seeds;
use crate::metrics::{mean_std, pearson_r};
use crate::optics::{OpticsConfig, Pipeline};
use crate::par::{self, Exec};
use crate::scene::RigConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    Ridge,
    Geometric,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 2] = [EstimatorKind::Ridge, EstimatorKind::Geometric];

    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::Ridge => "ridge",
            EstimatorKind::Geometric => "geometric",
        }
    }
}

/// Which percentile a trend is read from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Percentile {
    P50,
    P75,
    P95,
}

impl Percentile {
    pub const ALL: [Percentile; 3] = [Percentile::P50, Percentile::P75, Percentile::P95];

    fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        ["p50", "p75", "p95"][self.index()]
    }
}

/// One (axis value, trial, estimator) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub axis_value: AxisValue,
    pub trial: usize,
    pub estimator: EstimatorKind,
    pub p50: f64,
    pub p75: f64,
    pub p95: f64,
    pub n_frames: usize,
    pub n_failures: usize,
}

impl CellResult {
    fn from_eval(axis_value: AxisValue, estimator: EstimatorKind, e: &EvalResult) -> Self {
        Self {
            axis_value,
            trial: e.trial_id,
            estimator,
            p50: e.p50,
            p75: e.p75,
            p95: e.p95,
            n_frames: e.errors_deg.len(),
            n_failures: e.n_failures,
        }
    }

    pub fn get(&self, p: Percentile) -> f64 {
        [self.p50, self.p75, self.p95][p.index()]
    }
}

/// Mean and sample standard deviation across trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisSummary {
    pub axis_value: AxisValue,
    pub estimator: EstimatorKind,
    /// p50, p75, p95
    pub mean: [f64; 3],
    pub std: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub spec_version: String,
    pub artifact_version: String,
    pub spec: SweepSpec,
    pub trial_seeds: Vec<u64>,
    pub cells: Vec<CellResult>,
    pub summary: Vec<AxisSummary>,
    /// SHA-256 over the per-frame PGM digests of each axis value.
    pub frame_digests: Vec<String>,
    /// Training-set median error of the ridge fit, per axis value and trial.
    pub ridge_train_p50: Vec<Vec<f64>>,
}

impl SweepReport {
    pub fn axis_values(&self) -> Vec<AxisValue> {
        self.spec.axis_values.clone()
    }

    /// Per-axis-value means of one percentile for one estimator.
    pub fn trend(&self, estimator: EstimatorKind, p: Percentile) -> Vec<f64> {
        self.summary
            .iter()
            .filter(|s| s.estimator == estimator)
            .map(|s| s.mean[p.index()])
            .collect()
    }

    pub fn trend_std(&self, estimator: EstimatorKind, p: Percentile) -> Vec<f64> {
        self.summary
            .iter()
            .filter(|s| s.estimator == estimator)
            .map(|s| s.std[p.index()])
            .collect()
    }
}

/// Pearson correlation between two trend curves over identical axes.
pub fn correlate_trends(
    a: &SweepReport,
    est_a: EstimatorKind,
    b: &SweepReport,
    est_b: EstimatorKind,
    p: Percentile,
) -> Result<f64> {
    if a.spec.axis != b.spec.axis || a.spec.axis_values != b.spec.axis_values {
        return Err(Error::AxisMismatch(format!(
            "{} {:?} vs {} {:?}",
            a.spec.axis.name(),
            a.spec.axis_values.iter().map(|v| v.to_string()).collect::<Vec<_>>(),
            b.spec.axis.name(),
            b.spec.axis_values.iter().map(|v| v.to_string()).collect::<Vec<_>>()
        )));
    }
    pearson_r(&a.trend(est_a, p), &b.trend(est_b, p))
}

/// A sweep configuration to realize: which rig and which optics.
struct Variant {
    sweep: usize,
    value: usize,
    rig: RigConfig,
    optics: OpticsConfig,
    dark_threshold: f64,
}

/// Per-frame outputs kept for one variant.
struct FrameFeatures {
    means: Vec<f32>,
    geometric: Option<PupilGlint>,
    digest: [u8; 32],
}

pub fn run_sweep(spec: &SweepSpec, exec: Exec) -> Result<SweepReport> {
    Ok(run_sweeps(std::slice::from_ref(spec), exec)?.remove(0))
}

/// Key under which frames can share a clean render: the dataset minus its
/// optics, plus the realized rig.
fn render_key(base: &DatasetSpec, rig: &RigConfig) -> String {
    let mut b = base.clone();
    b.optics = OpticsConfig::default();
    b.rig = rig.clone();
    serde_json::to_string(&b).expect("spec serializes")
}

/// Runs several sweeps, rendering each distinct scene configuration once
/// and applying every optical variant to that render.
pub fn run_sweeps(specs: &[SweepSpec], exec: Exec) -> Result<Vec<SweepReport>> {
    let specs: Vec<SweepSpec> = specs.iter().cloned().map(SweepSpec::resolved).collect();
    for s in &specs {
        s.validate()?;
    }
    let mut groups: BTreeMap<String, Vec<Variant>> = BTreeMap::new();
    for (si, s) in specs.iter().enumerate() {
        let rigs = if s.axis.is_camera() {
            camera_axis_values(s.axis, &s.base.rig, s.base.camera_id, &s.axis_values)?
        } else {
            vec![s.base.rig.clone(); s.axis_values.len()]
        };
        for (vi, (v, rig)) in s.axis_values.iter().zip(rigs).enumerate() {
            let optics = s.axis.apply_optics(&s.base.optics, *v);
            groups.entry(render_key(&s.base, &rig)).or_default().push(Variant {
                sweep: si,
                value: vi,
                rig,
                optics,
                dark_threshold: s.dark_threshold,
            });
        }
    }
    let mut results: Vec<Vec<Option<ValueOutcome>>> =
        specs.iter().map(|s| (0..s.axis_values.len()).map(|_| None).collect()).collect();
    for variants in groups.values() {
        let s0 = &specs[variants[0].sweep];
        let base = &s0.base;
        let ids = base.identity_ids();
        let plan = frame_plan(base, &ids)?;
        let features = extract_features(base, &variants[0].rig, variants, &plan, exec)?;
        for (variant, feats) in variants.iter().zip(features) {
            let spec = &specs[variant.sweep];
            let value = spec.axis_values[variant.value];
            let outcome = evaluate_variant(spec, value, &ids, &plan, &feats, exec)?;
            results[variant.sweep][variant.value] = Some(outcome);
        }
    }
    Ok(specs
        .into_iter()
        .zip(results)
        .map(|(spec, outcomes)| assemble(spec, outcomes.into_iter().map(|o| o.expect("every value evaluated")).collect()))
        .collect())
}

fn extract_features(
    base: &DatasetSpec,
    rig: &RigConfig,
    variants: &[Variant],
    plan: &[FrameInfo],
    exec: Exec,
) -> Result<Vec<Vec<FrameFeatures>>> {
    let camera = rig.camera(base.camera_id)?;
    let (w, h) = (camera.intrinsics.width, camera.intrinsics.height);
    let pipelines = variants
        .iter()
        .map(|v| Pipeline::new(v.optics, w, h))
        .collect::<Result<Vec<_>>>()?;
    let models: Vec<_> = base.identity_ids().iter().map(|&id| identity_model(base, id)).collect();
    let grid = crate::estimator::Grid::default();
    let per_frame = par::try_map_range(plan.len(), exec, |k| {
        let f = &plan[k];
        let model = &models[f.sample.identity_id as usize];
        let clean = render_frame(model, f, rig, base.camera_id, Exec::Sequential)?;
        pipelines
            .iter()
            .zip(variants)
            .map(|(p, v)| {
                let q = p.run(&clean, f.noise_seed)?;
                Ok(FrameFeatures {
                    means: block_means(&q, grid)?,
                    geometric: pupil_glint_features(&q, v.dark_threshold).ok(),
                    digest: Sha256::digest(q.to_pgm_bytes()).into(),
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let mut out: Vec<Vec<FrameFeatures>> = variants.iter().map(|_| Vec::with_capacity(plan.len())).collect();
    for frame in per_frame {
        for (slot, f) in out.iter_mut().zip(frame) {
            slot.push(f);
        }
    }
    Ok(out)
}

struct ValueOutcome {
    ridge: Vec<EvalResult>,
    geometric: Vec<EvalResult>,
    ridge_train_p50: Vec<f64>,
    digest: String,
}

fn evaluate_variant(
    spec: &SweepSpec,
    axis_value: AxisValue,
    ids: &[u64],
    plan: &[FrameInfo],
    feats: &[FrameFeatures],
    exec: Exec,
) -> Result<ValueOutcome> {
    let grid = crate::estimator::Grid::default();
    let fpi = spec.base.frames_per_identity();
    let frames_of = |id_pos: usize| id_pos * fpi..(id_pos + 1) * fpi;
    let stats = par::try_map_range(ids.len(), exec, |pos| {
        let range = frames_of(pos);
        let rows: Vec<&[f32]> = feats[range.clone()].iter().map(|f| f.means.as_slice()).collect();
        let gazes: Vec<Vec3> = plan[range].iter().map(|f| f.sample.gaze_vec()).collect();
        let mut s = RidgeStats::new(grid);
        s.push_rows(&rows, &gazes)?;
        s.tag_identity(ids[pos]);
        Ok::<_, Error>(s)
    })?;
    let mut hasher = Sha256::new();
    for f in feats {
        hasher.update(f.digest);
    }
    let digest: String = hasher.finalize().iter().map(|b| format!("{b:02x}")).collect();

    let value = |t: usize, e: Error| Error::Cell { value: axis_value.0, trial: t, source: Box::new(e) };
    let mut out = ValueOutcome { ridge: vec![], geometric: vec![], ridge_train_p50: vec![], digest };
    for trial in 0..spec.trials {
        let seed = seeds::trial_seed(spec.base.master_seed, trial);
        let (train, test) = split_identities(ids, spec.split_ratio, seed).map_err(|e| value(trial, e))?;
        let pos_of = |id: u64| ids.iter().position(|&x| x == id).expect("id from the same list");
        let mut merged = RidgeStats::new(grid);
        for &id in &train {
            merged.merge(&stats[pos_of(id)]).map_err(|e| value(trial, e))?;
        }
        let ridge = merged.fit(spec.ridge_lambda).map_err(|e| value(trial, e))?;

        let train_frames: Vec<usize> = train.iter().flat_map(|&id| frames_of(pos_of(id))).collect();
        let test_frames: Vec<usize> = test.iter().flat_map(|&id| frames_of(pos_of(id))).collect();
        let samples: Vec<_> = test_frames.iter().map(|&k| plan[k].sample).collect();

        let preds: Vec<Result<Vec3>> = test_frames.iter().map(|&k| ridge.predict_block_means(&feats[k].means)).collect();
        out.ridge.push(evaluate_predictions(&preds, &samples, &ridge.train_identities, trial).map_err(|e| value(trial, e))?);

        let train_preds: Vec<Result<Vec3>> =
            train_frames.iter().map(|&k| ridge.predict_block_means(&feats[k].means)).collect();
        let train_samples: Vec<_> = train_frames.iter().map(|&k| plan[k].sample).collect();
        let fit_quality = evaluate_predictions(&train_preds, &train_samples, &[], trial).map_err(|e| value(trial, e))?;
        out.ridge_train_p50.push(fit_quality.p50);

        let (gx, gy): (Vec<PupilGlint>, Vec<Vec3>) = train_frames
            .iter()
            .filter_map(|&k| feats[k].geometric.map(|g| (g, plan[k].sample.gaze_vec())))
            .unzip();
        // An estimator that cannot be trained on this configuration's images
        // fails every test frame instead of aborting the sweep.
        let geo = fit_geometric(&gx, &gy, spec.geometric_glints, spec.dark_threshold).ok().map(|mut g| {
            g.train_identities = ridge.train_identities.clone();
            g
        });
        let preds: Vec<Result<Vec3>> = test_frames
            .iter()
            .map(|&k| match (&geo, feats[k].geometric) {
                (Some(m), Some(g)) => Ok(m.predict_features(&g)),
                _ => Err(Error::NoPupil),
            })
            .collect();
        out.geometric.push(evaluate_predictions(&preds, &samples, &ridge.train_identities, trial).map_err(|e| value(trial, e))?);
    }
    Ok(out)
}

fn assemble(spec: SweepSpec, outcomes: Vec<ValueOutcome>) -> SweepReport {
    let trial_seeds = (0..spec.trials).map(|t| seeds::trial_seed(spec.base.master_seed, t)).collect();
    let mut cells = Vec::new();
    let mut summary = Vec::new();
    let mut frame_digests = Vec::new();
    let mut ridge_train_p50 = Vec::new();
    for (v, o) in spec.axis_values.iter().zip(outcomes) {
        for (kind, evals) in [(EstimatorKind::Ridge, &o.ridge), (EstimatorKind::Geometric, &o.geometric)] {
            let rows: Vec<CellResult> = evals.iter().map(|e| CellResult::from_eval(*v, kind, e)).collect();
            let mut mean = [0.0; 3];
            let mut std = [0.0; 3];
            for p in Percentile::ALL {
                let xs: Vec<f64> = rows.iter().map(|c| c.get(p)).collect();
                let (m, s) = mean_std(&xs).expect("at least one trial");
                mean[p.index()] = m;
                std[p.index()] = s;
            }
            summary.push(AxisSummary { axis_value: *v, estimator: kind, mean, std });
            cells.extend(rows);
        }
        frame_digests.push(o.digest);
        ridge_train_p50.push(o.ridge_train_p50);
    }
    SweepReport {
        spec_version: SPEC_VERSION.to_string(),
        artifact_version: ARTIFACT_VERSION.to_string(),
        spec,
        trial_seeds,
        cells,
        summary,
        frame_digests,
        ridge_train_p50,
    }
}
