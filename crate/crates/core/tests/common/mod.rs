//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use eyetwin::optics::Kernel;
use eyetwin::{LinearImage, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_image(width: usize, height: usize, seed: u64) -> LinearImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..width * height).map(|_| rng.gen_range(0.0f32..1.0)).collect();
    LinearImage::new(width, height, data).unwrap()
}

/// Number of integer offsets within `radius` of the origin.
pub fn disk_count(radius: f64) -> usize {
    let r = radius.ceil() as i64;
    let mut n = 0;
    for dy in -r..=r {
        for dx in -r..=r {
            if ((dx * dx + dy * dy) as f64) <= radius * radius {
                n += 1;
            }
        }
    }
    n
}

/// Direct zero-padded linear convolution cropped to the input size.
pub fn spatial_convolve(img: &LinearImage, k: &Kernel) -> Vec<f64> {
    let (w, h) = (img.width() as i64, img.height() as i64);
    let r = k.radius() as i64;
    let mut out = vec![0.0; (w * h) as usize];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for ky in -r..=r {
                for kx in -r..=r {
                    let (sx, sy) = (x - kx, y - ky);
                    if sx >= 0 && sx < w && sy >= 0 && sy < h {
                        acc += k.get((kx + r) as usize, (ky + r) as usize) * img.get(sx as usize, sy as usize) as f64;
                    }
                }
            }
            out[(y * w + x) as usize] = acc;
        }
    }
    out
}

/// Dense search for the mirror point on a sphere: samples `n` points on a
/// Fibonacci lattice and keeps the one whose normal best bisects the
/// directions to the eye and the light.
pub fn brute_force_reflection(center: &Vec3, radius: f64, eye: &Vec3, light: &Vec3, n: usize) -> Vec3 {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    let mut best = (f64::INFINITY, Vec3::zeros());
    for i in 0..n {
        let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
        let rho = (1.0 - z * z).sqrt();
        let (s, c) = (golden * i as f64).sin_cos();
        let normal = Vec3::new(rho * c, rho * s, z);
        let p = center + normal * radius;
        let to_eye = eye - p;
        let to_light = light - p;
        if normal.dot(&to_eye) <= 0.0 || normal.dot(&to_light) <= 0.0 {
            continue;
        }
        let half = to_eye.normalize() + to_light.normalize();
        let residual = (half.normalize() - normal).norm();
        if residual < best.0 {
            best = (residual, p);
        }
    }
    best.1
}

/// Mid-gray background with a Gaussian spot (sigma 0.7 px) of the given
/// peak in the middle, shaped like a rendered glint.
pub fn glint_image(width: usize, height: usize, peak: f32) -> LinearImage {
    let (cx, cy) = (width as f32 / 2.0, height as f32 / 2.0);
    LinearImage::from_fn(width, height, |x, y| {
        let (dx, dy) = (x as f32 + 0.5 - cx, y as f32 + 0.5 - cy);
        0.5 + peak * (-(dx * dx + dy * dy) / (2.0 * 0.49)).exp()
    })
}

/// The pipeline with quantization moved ahead of the blur: brightness,
/// quantize, blur the dequantized codes, quantize again. Noise is omitted.
pub fn quantize_then_blur(img: &LinearImage, brightness: f64, blur_radius: f64) -> eyetwin::QuantizedImage {
    use eyetwin::optics::{adjust_brightness, convolve, dequantize, disk_psf, quantize};
    let q = quantize(&adjust_brightness(img, brightness).unwrap());
    quantize(&convolve(&dequantize(&q), &disk_psf(blur_radius).unwrap()).unwrap())
}
