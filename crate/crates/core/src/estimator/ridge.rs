//! Ridge regression from block-mean features to a gaze vector.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::camera::Vec3;
use crate::error::{Error, Result};
use crate::estimator::features::{block_means, Grid};
use crate::image::QuantizedImage;

/// Chosen by identity-grouped 5-fold cross-validation on the default
/// configuration (see `examples/lambda_cv.rs`) and frozen across sweeps.
pub const DEFAULT_LAMBDA: f64 = 1000.0;
/// Features with a smaller training spread are left unscaled.
const MIN_FEATURE_STD: f64 = 1e-6;
/// Smallest acceptable ratio of Cholesky pivots.
const MIN_PIVOT_RATIO: f64 = 1e-13;

/// Sufficient statistics for a ridge fit. Statistics of disjoint frame
/// sets merge by addition, so per-identity accumulators can be combined
/// into any training split without revisiting images.
#[derive(Debug, Clone)]
pub struct RidgeStats {
    grid: Grid,
    n: usize,
    sum_x: DVector<f64>,
    gram: DMatrix<f64>,
    xty: DMatrix<f64>,
    sum_y: Vec3,
    identities: Vec<u64>,
}

impl RidgeStats {
    pub fn new(grid: Grid) -> Self {
        let d = grid.len();
        Self {
            grid,
            n: 0,
            sum_x: DVector::zeros(d),
            gram: DMatrix::zeros(d, d),
            xty: DMatrix::zeros(d, 3),
            sum_y: Vec3::zeros(),
            identities: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// Adds a batch of frames given as rows of raw block means.
    pub fn push_rows(&mut self, rows: &[&[f32]], gazes: &[Vec3]) -> Result<()> {
        let d = self.grid.len();
        if rows.len() != gazes.len() {
            return Err(Error::invalid("feature and label counts differ"));
        }
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::invalid(format!("expected {d} features per frame")));
        }
        if rows.is_empty() {
            return Ok(());
        }
        let x = DMatrix::from_fn(rows.len(), d, |i, j| rows[i][j] as f64);
        let y = DMatrix::from_fn(rows.len(), 3, |i, k| gazes[i][k]);
        self.gram.gemm_tr(1.0, &x, &x, 1.0);
        self.xty.gemm_tr(1.0, &x, &y, 1.0);
        for i in 0..rows.len() {
            self.sum_x += x.row(i).transpose();
            self.sum_y += gazes[i];
        }
        self.n += rows.len();
        Ok(())
    }

    /// Records which identity the pushed frames belong to.
    pub fn tag_identity(&mut self, id: u64) {
        if !self.identities.contains(&id) {
            self.identities.push(id);
        }
    }

    pub fn merge(&mut self, other: &RidgeStats) -> Result<()> {
        if other.grid != self.grid {
            return Err(Error::invalid("cannot merge statistics over different grids"));
        }
        self.n += other.n;
        self.sum_x += &other.sum_x;
        self.gram += &other.gram;
        self.xty += &other.xty;
        self.sum_y += other.sum_y;
        for &id in &other.identities {
            self.tag_identity(id);
        }
        Ok(())
    }

    /// Solves the standardized ridge problem with an unpenalized bias.
    pub fn fit(&self, lambda: f64) -> Result<RidgeGazeModel> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::invalid(format!("lambda must be finite and >= 0, got {lambda}")));
        }
        if self.n < 2 {
            return Err(Error::invalid(format!("ridge fit needs at least 2 frames, got {}", self.n)));
        }
        let d = self.grid.len();
        let n = self.n as f64;
        let mean = &self.sum_x / n;
        let ybar = self.sum_y / n;
        let std: Vec<f64> = (0..d)
            .map(|j| {
                let var = self.gram[(j, j)] / n - mean[j] * mean[j];
                let s = var.max(0.0).sqrt();
                if s > MIN_FEATURE_STD {
                    s
                } else {
                    1.0
                }
            })
            .collect();
        // Centered, scaled normal equations: with centered features the
        // bias decouples and equals the label mean.
        let mut a = DMatrix::from_fn(d, d, |j, k| (self.gram[(j, k)] - n * mean[j] * mean[k]) / (std[j] * std[k]));
        for j in 0..d {
            a[(j, j)] += lambda;
        }
        let b = DMatrix::from_fn(d, 3, |j, c| (self.xty[(j, c)] - n * mean[j] * ybar[c]) / std[j]);
        let chol = nalgebra::linalg::Cholesky::new(a).ok_or_else(|| {
            Error::IllConditioned(format!("normal matrix is not positive definite at lambda = {lambda}; use lambda > 0"))
        })?;
        let l = chol.l_dirty();
        let (lo, hi) = (0..d).map(|j| l[(j, j)] * l[(j, j)]).fold((f64::INFINITY, 0.0f64), |(lo, hi), p| {
            (lo.min(p), hi.max(p))
        });
        if !(lo > MIN_PIVOT_RATIO * hi) {
            return Err(Error::IllConditioned(format!(
                "normal matrix is numerically singular at lambda = {lambda}; use lambda > 0"
            )));
        }
        let w = chol.solve(&b);
        let mut weights: Vec<[f64; 3]> = (0..d).map(|j| [w[(j, 0)], w[(j, 1)], w[(j, 2)]]).collect();
        weights.push(ybar.into());
        let mut identities = self.identities.clone();
        identities.sort_unstable();
        Ok(RidgeGazeModel {
            feature_height: self.grid.height,
            feature_width: self.grid.width,
            lambda,
            train_feature_mean: mean.iter().copied().collect(),
            train_feature_std: std,
            weights,
            train_identities: identities,
        })
    }
}

/// Linear map from standardized block means to an (unnormalized) gaze.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeGazeModel {
    pub feature_height: usize,
    pub feature_width: usize,
    pub lambda: f64,
    pub train_feature_mean: Vec<f64>,
    pub train_feature_std: Vec<f64>,
    /// One row per feature, then the bias row.
    pub weights: Vec<[f64; 3]>,
    #[serde(default)]
    pub train_identities: Vec<u64>,
}

impl RidgeGazeModel {
    pub fn grid(&self) -> Grid {
        Grid { height: self.feature_height, width: self.feature_width }
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.grid().len();
        if self.train_feature_mean.len() != d || self.train_feature_std.len() != d || self.weights.len() != d + 1 {
            return Err(Error::invalid("ridge model dimensions do not match its grid"));
        }
        if self.train_feature_std.iter().any(|&s| !(s > 0.0)) {
            return Err(Error::invalid("feature standard deviations must be positive"));
        }
        Ok(())
    }

    /// Raw linear output for precomputed block means.
    pub fn raw_output(&self, means: &[f32]) -> Vec3 {
        let mut acc = Vec3::from(self.weights[means.len()]);
        for (j, &v) in means.iter().enumerate() {
            let z = (v as f64 - self.train_feature_mean[j]) / self.train_feature_std[j];
            let w = &self.weights[j];
            acc.x += z * w[0];
            acc.y += z * w[1];
            acc.z += z * w[2];
        }
        acc
    }

    pub fn predict_block_means(&self, means: &[f32]) -> Result<Vec3> {
        if means.len() != self.grid().len() {
            return Err(Error::invalid("feature length does not match the model grid"));
        }
        let raw = self.raw_output(means);
        let norm = raw.norm();
        if !(norm >= 1e-9) {
            return Err(Error::DegeneratePrediction { norm });
        }
        Ok(raw / norm)
    }

    pub fn predict(&self, img: &QuantizedImage) -> Result<Vec3> {
        self.predict_block_means(&block_means(img, self.grid())?)
    }

    /// Euclidean norm of the non-bias weights.
    pub fn weight_norm(&self) -> f64 {
        let d = self.weights.len() - 1;
        self.weights[..d].iter().flatten().map(|w| w * w).sum::<f64>().sqrt()
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        let s = serde_json::to_string(self).expect("model serializes");
        std::fs::write(path, s).map_err(|e| Error::io(path, e))
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let m: Self = serde_json::from_str(&s).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
        m.validate()?;
        Ok(m)
    }
}

/// Fits a ridge model to features whose last column is the bias (all ones).
pub fn fit_ridge(features: &DMatrix<f64>, gazes: &[Vec3], lambda: f64, grid: Grid) -> Result<RidgeGazeModel> {
    let d = grid.len();
    if features.ncols() != d + 1 {
        return Err(Error::invalid(format!("expected {} columns (features + bias), got {}", d + 1, features.ncols())));
    }
    if features.column(d).iter().any(|&v| v != 1.0) {
        return Err(Error::invalid("last feature column must be the constant bias 1"));
    }
    if features.nrows() != gazes.len() {
        return Err(Error::invalid("feature and label counts differ"));
    }
    // Accumulate in f64 directly; push_rows would round to f32.
    let mut stats = RidgeStats::new(grid);
    let x = features.columns(0, d).into_owned();
    let y = DMatrix::from_fn(gazes.len(), 3, |i, k| gazes[i][k]);
    stats.gram.gemm_tr(1.0, &x, &x, 1.0);
    stats.xty.gemm_tr(1.0, &x, &y, 1.0);
    for i in 0..x.nrows() {
        stats.sum_x += x.row(i).transpose();
        stats.sum_y += gazes[i];
    }
    stats.n = x.nrows();
    stats.fit(lambda)
}
