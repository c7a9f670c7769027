//! Counter-based Gaussian sensor noise.

use crate::image::LinearImage;
use crate::scene::splitmix64;

/// Standard normal deviate for `(seed, index)`; independent of evaluation
/// order, so noisy images never depend on scheduling.
#[inline]
pub(crate) fn normal_at(seed: u64, index: u64) -> f64 {
    let h1 = splitmix64(seed ^ splitmix64(index));
    let h2 = splitmix64(h1);
    // u1 in (0, 1], u2 in [0, 1)
    let u1 = ((h1 >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
    let u2 = (h2 >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// How the per-pixel standard deviation is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseModel {
    /// sigma(v) = sqrt(read^2 + gain * max(v, 0))
    SignalDependent { read_sigma: f64, shot_gain: f64 },
    Flat { sigma: f64 },
}

impl NoiseModel {
    pub fn is_zero(&self) -> bool {
        match *self {
            NoiseModel::SignalDependent { read_sigma, shot_gain } => read_sigma == 0.0 && shot_gain == 0.0,
            NoiseModel::Flat { sigma } => sigma == 0.0,
        }
    }

    #[inline]
    pub fn sigma(&self, v: f64) -> f64 {
        match *self {
            NoiseModel::SignalDependent { read_sigma, shot_gain } => {
                (read_sigma * read_sigma + shot_gain * v.max(0.0)).sqrt()
            }
            NoiseModel::Flat { sigma } => sigma,
        }
    }

    pub fn apply(&self, img: &LinearImage, seed: u64) -> LinearImage {
        if self.is_zero() {
            return img.clone();
        }
        let data = img
            .values()
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let v = v as f64;
                (v + self.sigma(v) * normal_at(seed, i as u64)) as f32
            })
            .collect();
        LinearImage::from_raw(img.width(), img.height(), data)
    }
}

/// Noise standard deviation giving `psnr` dB against signal `peak`.
pub fn sigma_for_target_psnr(peak: f64, psnr: f64) -> f64 {
    peak * 10f64.powf(-psnr / 20.0)
}
