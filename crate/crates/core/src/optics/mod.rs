//! Image formation: brightness, aperture blur, sensor noise, quantization.
//!
//! Stages always run in that order. Blurring before the sensor clamps is
//! what lets bright glints bloom into wide saturated spots.

mod blur;
mod noise;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{LinearImage, QuantizedImage};

pub use blur::{convolve, disk_psf, Convolver, Kernel};
pub use noise::{sigma_for_target_psnr, NoiseModel};

/// Peak of the unit-range signal the sensor digitizes.
pub const SIGNAL_PEAK: f64 = 1.0;

fn default_brightness() -> f64 {
    1.0
}
fn default_read_sigma() -> f64 {
    0.01
}
fn default_shot_gain() -> f64 {
    0.0018
}
fn default_quant_bits() -> u32 {
    8
}

/// Parameters of the optical pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpticsConfig {
    /// Folds exposure time and illumination scaling into one gain.
    #[serde(default = "default_brightness")]
    pub brightness: f64,
    /// Aperture disk radius, pixels.
    #[serde(default)]
    pub blur_radius: f64,
    #[serde(default = "default_read_sigma")]
    pub read_sigma: f64,
    /// Shot-noise variance per unit signal.
    #[serde(default = "default_shot_gain")]
    pub shot_gain: f64,
    /// When set, replaces the sensor model with flat Gaussian noise tuned
    /// to this PSNR.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_psnr: Option<f64>,
    #[serde(default = "default_quant_bits")]
    pub quant_bits: u32,
}

impl Default for OpticsConfig {
    fn default() -> Self {
        Self {
            brightness: default_brightness(),
            blur_radius: 0.0,
            read_sigma: default_read_sigma(),
            shot_gain: default_shot_gain(),
            target_psnr: None,
            quant_bits: default_quant_bits(),
        }
    }
}

impl OpticsConfig {
    /// Unit brightness, no blur, no noise.
    pub fn ideal() -> Self {
        Self { read_sigma: 0.0, shot_gain: 0.0, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str, v: f64| Err(Error::invalid(format!("{what} out of range: {v}")));
        if !(self.brightness > 0.0 && self.brightness.is_finite()) {
            return bad("brightness", self.brightness);
        }
        if !(self.blur_radius >= 0.0 && self.blur_radius.is_finite()) {
            return bad("blur_radius", self.blur_radius);
        }
        if !(self.read_sigma >= 0.0 && self.read_sigma.is_finite()) {
            return bad("read_sigma", self.read_sigma);
        }
        if !(self.shot_gain >= 0.0 && self.shot_gain.is_finite()) {
            return bad("shot_gain", self.shot_gain);
        }
        if let Some(p) = self.target_psnr {
            if !(p > 0.0 && p.is_finite()) {
                return bad("target_psnr", p);
            }
        }
        if self.quant_bits != 8 {
            return Err(Error::invalid(format!("only 8-bit quantization is supported, got {}", self.quant_bits)));
        }
        Ok(())
    }

    pub fn noise_model(&self) -> NoiseModel {
        match self.target_psnr {
            Some(p) => NoiseModel::Flat { sigma: sigma_for_target_psnr(SIGNAL_PEAK, p) },
            None => NoiseModel::SignalDependent { read_sigma: self.read_sigma, shot_gain: self.shot_gain },
        }
    }
}

pub fn adjust_brightness(img: &LinearImage, b: f64) -> Result<LinearImage> {
    if !(b > 0.0 && b.is_finite()) {
        return Err(Error::invalid(format!("brightness must be positive, got {b}")));
    }
    if b == 1.0 {
        return Ok(img.clone());
    }
    let data = img.values().iter().map(|&v| (v as f64 * b) as f32).collect();
    Ok(LinearImage::from_raw(img.width(), img.height(), data))
}

/// Adds sensor noise; the image may go negative.
pub fn add_noise(img: &LinearImage, cfg: &OpticsConfig, rng_seed: u64) -> Result<LinearImage> {
    cfg.validate()?;
    Ok(cfg.noise_model().apply(img, rng_seed))
}

/// Single-sample 8-bit code: clamp to [0, 1], scale, round half up.
#[inline]
pub fn quantize_value(v: f32) -> u8 {
    (v.clamp(0.0, 1.0) as f64 * 255.0 + 0.5).floor() as u8
}

pub fn quantize(img: &LinearImage) -> QuantizedImage {
    let data = img.values().iter().map(|&v| quantize_value(v)).collect();
    QuantizedImage::new(img.width(), img.height(), data).expect("dimensions come from a valid image")
}

/// Maps codes back to the center of their linear interval.
pub fn dequantize(q: &QuantizedImage) -> LinearImage {
    let data = q.codes().iter().map(|&c| c as f32 / 255.0).collect();
    LinearImage::from_raw(q.width(), q.height(), data)
}

/// Peak signal-to-noise ratio; identical inputs have no finite value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Psnr {
    Finite(f64),
    Infinite,
}

impl Psnr {
    pub fn db(self) -> Option<f64> {
        match self {
            Psnr::Finite(v) => Some(v),
            Psnr::Infinite => None,
        }
    }
}

pub fn psnr(reference: &LinearImage, test: &LinearImage, peak: f64) -> Result<Psnr> {
    if reference.width() != test.width() || reference.height() != test.height() {
        return Err(Error::invalid("psnr needs images of equal size"));
    }
    if !(peak > 0.0) {
        return Err(Error::invalid(format!("peak must be positive, got {peak}")));
    }
    let sse: f64 = reference
        .values()
        .iter()
        .zip(test.values())
        .map(|(&a, &b)| {
            let d = a as f64 - b as f64;
            d * d
        })
        .sum();
    if sse == 0.0 {
        return Ok(Psnr::Infinite);
    }
    let mse = sse / reference.values().len() as f64;
    Ok(Psnr::Finite(10.0 * (peak * peak / mse).log10()))
}

/// Every intermediate of one pipeline run.
#[derive(Debug, Clone)]
pub struct Stages {
    pub brightened: LinearImage,
    pub blurred: LinearImage,
    pub noisy: LinearImage,
    pub quantized: QuantizedImage,
}

impl Stages {
    /// Writes the linear stages as ETLF files for golden-image checks.
    pub fn save_etlf(&self, dir: &Path, stem: &str) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        self.brightened.save_etlf(&dir.join(format!("{stem}.1_brightness.etlf")))?;
        self.blurred.save_etlf(&dir.join(format!("{stem}.2_blur.etlf")))?;
        self.noisy.save_etlf(&dir.join(format!("{stem}.3_noise.etlf")))?;
        Ok(())
    }
}

/// Reusable pipeline for one configuration and image size.
#[derive(Debug)]
pub struct Pipeline {
    cfg: OpticsConfig,
    convolver: Convolver,
}

impl Pipeline {
    pub fn new(cfg: OpticsConfig, width: usize, height: usize) -> Result<Self> {
        cfg.validate()?;
        let convolver = Convolver::new(&disk_psf(cfg.blur_radius)?, width, height)?;
        Ok(Self { cfg, convolver })
    }

    pub fn config(&self) -> &OpticsConfig {
        &self.cfg
    }

    pub fn stages(&self, img: &LinearImage, rng_seed: u64) -> Result<Stages> {
        let brightened = adjust_brightness(img, self.cfg.brightness)?;
        let blurred = self.convolver.apply(&brightened)?;
        let noisy = self.cfg.noise_model().apply(&blurred, rng_seed);
        let quantized = quantize(&noisy);
        Ok(Stages { brightened, blurred, noisy, quantized })
    }

    pub fn run(&self, img: &LinearImage, rng_seed: u64) -> Result<QuantizedImage> {
        let b = adjust_brightness(img, self.cfg.brightness)?;
        let blurred = self.convolver.apply(&b)?;
        Ok(quantize(&self.cfg.noise_model().apply(&blurred, rng_seed)))
    }
}

/// Brightness, blur, noise, then quantization.
pub fn apply_pipeline(img: &LinearImage, cfg: &OpticsConfig, rng_seed: u64) -> Result<QuantizedImage> {
    Pipeline::new(*cfg, img.width(), img.height())?.run(img, rng_seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brightness_examples() {
        let img = LinearImage::filled(4, 3, 0.25);
        assert!(adjust_brightness(&img, 2.0).unwrap().values().iter().all(|&v| v == 0.5));
        assert_eq!(adjust_brightness(&img, 1.0).unwrap(), img);
        let ramp = LinearImage::from_fn(10, 1, |x, _| x as f32 * 0.1);
        assert_eq!(adjust_brightness(&ramp, 100.0).unwrap().max(), 90.0);
        assert!(adjust_brightness(&img, 0.0).is_err());
    }

    #[test]
    fn quantize_examples() {
        assert_eq!(quantize_value(0.5), 128);
        assert_eq!(quantize_value(90.0), 255);
        assert_eq!(quantize_value(-0.02), 0);
        let all = QuantizedImage::from_fn(16, 16, |x, y| (y * 16 + x) as u8);
        assert_eq!(quantize(&dequantize(&all)), all);
    }

    #[test]
    fn psnr_examples() {
        let zero = LinearImage::zeros(8, 8);
        let one = LinearImage::filled(8, 8, 1.0);
        assert_eq!(psnr(&zero, &one, 1.0).unwrap(), Psnr::Finite(0.0));
        assert_eq!(psnr(&one, &one, 1.0).unwrap(), Psnr::Infinite);
        let tenth = LinearImage::filled(8, 8, 0.1);
        let db = psnr(&zero, &tenth, 1.0).unwrap().db().unwrap();
        assert!((db - 20.0).abs() < 1e-5);
        assert!(psnr(&zero, &LinearImage::zeros(4, 4), 1.0).is_err());
    }

    #[test]
    fn zero_noise_is_identity() {
        let img = LinearImage::from_fn(9, 7, |x, y| (x * y) as f32 * 0.01);
        let cfg = OpticsConfig::ideal();
        assert_eq!(add_noise(&img, &cfg, 5).unwrap(), img);
        assert_eq!(apply_pipeline(&img, &cfg, 5).unwrap(), quantize(&img));
    }

    #[test]
    fn config_validation_and_json() {
        assert!(OpticsConfig::default().validate().is_ok());
        for bad in [
            OpticsConfig { brightness: 0.0, ..Default::default() },
            OpticsConfig { blur_radius: -1.0, ..Default::default() },
            OpticsConfig { read_sigma: -0.1, ..Default::default() },
            OpticsConfig { target_psnr: Some(0.0), ..Default::default() },
            OpticsConfig { quant_bits: 10, ..Default::default() },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
        let cfg: OpticsConfig = serde_json::from_str(r#"{"blur_radius": 4, "target_psnr": 24}"#).unwrap();
        assert_eq!(cfg.brightness, 1.0);
        assert_eq!(cfg.target_psnr, Some(24.0));
        assert!(serde_json::from_str::<OpticsConfig>(r#"{"blur": 4}"#).is_err());
    }
}
