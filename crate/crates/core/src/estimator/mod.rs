//! Per-configuration gaze estimators and their evaluation.
//!
//! Two cheap families cross-check each other: a ridge regression on the
//! downsampled image and a polynomial on pupil and glint positions.

mod features;
mod geometric;
mod ridge;

use serde::{Deserialize, Serialize};

use crate::camera::Vec3;
use crate::error::{Error, Result};
use crate::image::QuantizedImage;
use crate::metrics::{angular_error, percentiles, GazeSample};

pub use features::{block_means, featurize, Grid};
pub use geometric::{
    fit_geometric, pupil_centroid, pupil_glint_features, GeometricGazeModel, PupilGlint, DEFAULT_DARK_THRESHOLD,
    GLINT_CODE,
};
pub use ridge::{fit_ridge, RidgeGazeModel, RidgeStats, DEFAULT_LAMBDA};

/// Error charged to a frame the estimator could not process.
pub const FAILURE_PENALTY_DEG: f64 = 180.0;

/// Anything that maps an image to a gaze direction.
pub trait GazeEstimator {
    fn predict(&self, img: &QuantizedImage) -> Result<Vec3>;
    /// Identities seen in training, for split-hygiene checks.
    fn train_identities(&self) -> &[u64];
}

impl GazeEstimator for RidgeGazeModel {
    fn predict(&self, img: &QuantizedImage) -> Result<Vec3> {
        RidgeGazeModel::predict(self, img)
    }
    fn train_identities(&self) -> &[u64] {
        &self.train_identities
    }
}

impl GazeEstimator for GeometricGazeModel {
    fn predict(&self, img: &QuantizedImage) -> Result<Vec3> {
        GeometricGazeModel::predict(self, img)
    }
    fn train_identities(&self) -> &[u64] {
        &self.train_identities
    }
}

/// Test-set error summary for one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub errors_deg: Vec<f64>,
    pub p50: f64,
    pub p75: f64,
    pub p95: f64,
    pub trial_id: usize,
    /// Frames charged the failure penalty.
    pub n_failures: usize,
}

/// Fails if any test identity was used for training.
pub fn check_split(train_ids: &[u64], samples: &[GazeSample]) -> Result<()> {
    match samples.iter().find(|s| train_ids.contains(&s.identity_id)) {
        Some(s) => Err(Error::ContaminatedSplit(s.identity_id)),
        None => Ok(()),
    }
}

/// Scores precomputed predictions. Failed predictions cost
/// [`FAILURE_PENALTY_DEG`] and are counted rather than dropped.
pub fn evaluate_predictions(
    predictions: &[Result<Vec3>],
    samples: &[GazeSample],
    train_ids: &[u64],
    trial_id: usize,
) -> Result<EvalResult> {
    if samples.is_empty() {
        return Err(Error::Empty("test set"));
    }
    if predictions.len() != samples.len() {
        return Err(Error::invalid("prediction and label counts differ"));
    }
    check_split(train_ids, samples)?;
    let mut n_failures = 0;
    let mut errors_deg = Vec::with_capacity(samples.len());
    for (p, s) in predictions.iter().zip(samples) {
        match p {
            Ok(g) => errors_deg.push(angular_error(g, &s.gaze_vec())?),
            Err(_) => {
                n_failures += 1;
                errors_deg.push(FAILURE_PENALTY_DEG);
            }
        }
    }
    let [p50, p75, p95] = percentiles(&errors_deg, [50.0, 75.0, 95.0])?;
    Ok(EvalResult { errors_deg, p50, p75, p95, trial_id, n_failures })
}

/// Predicts every test frame and scores the result.
pub fn evaluate<M: GazeEstimator + ?Sized>(
    model: &M,
    frames: &[(QuantizedImage, GazeSample)],
    trial_id: usize,
) -> Result<EvalResult> {
    let samples: Vec<GazeSample> = frames.iter().map(|(_, s)| *s).collect();
    check_split(model.train_identities(), &samples)?;
    let preds: Vec<Result<Vec3>> = frames.iter().map(|(img, _)| model.predict(img)).collect();
    evaluate_predictions(&preds, &samples, model.train_identities(), trial_id)
}
