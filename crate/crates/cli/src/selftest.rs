//! End-to-end checks of the sensor model and glint geometry. Each check
//! compares library output with a direct computation written here.

use eyetwin::optics::{add_noise, convolve, disk_psf, psnr, quantize_value, OpticsConfig, Psnr};
use eyetwin::scene::reflection_point;
use eyetwin::{Camera, CameraIntrinsics, CameraPose, LinearImage, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::Failure;

type Check = fn() -> Result<String, String>;

const CHECKS: [(&str, Check); 4] =
    [("kernel", kernel), ("quantization", quantization), ("psnr_calibration", psnr_calibration), ("glint_oracle", glint_oracle)];

pub fn run() -> Result<(), Failure> {
    let mut failed = Vec::new();
    for (name, check) in CHECKS {
        match check() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                println!("FAIL {name}: {detail}");
                failed.push(name.to_string());
            }
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Selftest(failed))
    }
}

fn random_image(width: usize, height: usize, seed: u64) -> LinearImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..width * height).map(|_| rng.gen_range(0.0f32..1.0)).collect();
    LinearImage::new(width, height, data).expect("valid dimensions")
}

/// Disk kernels sum to one over exactly the lattice points inside the
/// radius, and FFT convolution matches a direct sum.
fn kernel() -> Result<String, String> {
    for i in 0..=128 {
        let r = i as f64 * 0.5;
        let k = disk_psf(r).map_err(|e| e.to_string())?;
        if (k.sum() - 1.0).abs() > 1e-12 {
            return Err(format!("radius {r}: weights sum to {}", k.sum()));
        }
        let c = k.radius() as i64;
        for y in 0..k.side() {
            for x in 0..k.side() {
                let (dx, dy) = (x as i64 - c, y as i64 - c);
                let inside = ((dx * dx + dy * dy) as f64) <= r * r;
                if inside != (k.get(x, y) > 0.0) {
                    return Err(format!("radius {r}: support differs at offset ({dx}, {dy})"));
                }
            }
        }
    }
    let mut worst = 0.0f64;
    for (seed, r) in [(1, 1.0), (2, 2.5), (3, 4.0)] {
        let img = random_image(48, 40, seed);
        let k = disk_psf(r).map_err(|e| e.to_string())?;
        let fast = convolve(&img, &k).map_err(|e| e.to_string())?;
        let rk = k.radius() as i64;
        for y in 0..40i64 {
            for x in 0..48i64 {
                let mut acc = 0.0;
                for ky in -rk..=rk {
                    for kx in -rk..=rk {
                        let (sx, sy) = (x - kx, y - ky);
                        if (0..48).contains(&sx) && (0..40).contains(&sy) {
                            acc += k.get((kx + rk) as usize, (ky + rk) as usize)
                                * img.get(sx as usize, sy as usize) as f64;
                        }
                    }
                }
                worst = worst.max((fast.get(x as usize, y as usize) as f64 - acc).abs());
            }
        }
    }
    if worst > 1e-5 {
        return Err(format!("FFT and direct convolution differ by {worst:.2e}"));
    }
    Ok(format!("129 radii normalized, convolution within {worst:.1e}"))
}

/// Clamp to the unit range, scale by 255, round half up.
fn quantization() -> Result<String, String> {
    let mut cases = vec![(-0.5f32, 0u8), (-1e-6, 0), (1.0 + 1e-6, 255), (7.0, 255)];
    for c in 0..=255u8 {
        let v = c as f64 / 255.0;
        cases.push((v as f32, c));
        cases.push(((v + 0.4 / 255.0) as f32, c));
        if c < 255 {
            cases.push(((v + 0.6 / 255.0) as f32, c + 1));
        }
    }
    for &(v, want) in &cases {
        let got = quantize_value(v);
        if got != want {
            return Err(format!("{v} quantized to {got}, expected {want}"));
        }
    }
    Ok(format!("{} cases", cases.len()))
}

/// Flat noise tuned to a target PSNR measures within 0.2 dB of it.
fn psnr_calibration() -> Result<String, String> {
    let clean = random_image(320, 240, 5);
    let mut worst = 0.0f64;
    for target in [40.0, 32.0, 28.0, 24.0, 20.0] {
        let cfg = OpticsConfig { target_psnr: Some(target), ..OpticsConfig::default() };
        for seed in 0..10 {
            let noisy = add_noise(&clean, &cfg, seed).map_err(|e| e.to_string())?;
            let db = match psnr(&clean, &noisy, 1.0).map_err(|e| e.to_string())? {
                Psnr::Finite(db) => db,
                Psnr::Infinite => return Err(format!("target {target} dB, seed {seed}: no noise added")),
            };
            worst = worst.max((db - target).abs());
        }
    }
    if worst > 0.2 {
        return Err(format!("deviation {worst:.3} dB exceeds 0.2 dB"));
    }
    Ok(format!("50 images within {worst:.3} dB"))
}

/// Sphere point whose normal best bisects the directions to camera and
/// light, over a Fibonacci lattice restricted to the cap facing both.
fn brute_force_glint(center: &Vec3, radius: f64, eye: &Vec3, light: &Vec3, n: usize) -> Vec3 {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    let mut best = (f64::INFINITY, Vec3::zeros());
    for i in 0..n {
        let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
        let rho = (1.0 - z * z).sqrt();
        let (s, c) = (golden * i as f64).sin_cos();
        let normal = Vec3::new(rho * c, rho * s, z);
        let p = center + normal * radius;
        let (to_eye, to_light) = (eye - p, light - p);
        if normal.dot(&to_eye) <= 0.0 || normal.dot(&to_light) <= 0.0 {
            continue;
        }
        let residual = ((to_eye.normalize() + to_light.normalize()).normalize() - normal).norm();
        if residual < best.0 {
            best = (residual, p);
        }
    }
    best.1
}

/// Mirror points of 100 random corneas, cameras and LEDs agree with a dense
/// search to half a pixel.
fn glint_oracle() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let intr = CameraIntrinsics::centered(270.0, 320, 240).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for rig in 0..100 {
        let center = Vec3::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
        let radius = rng.gen_range(7.0..8.5);
        let cam_at = center + Vec3::new(rng.gen_range(-20.0..20.0), rng.gen_range(-15.0..15.0), rng.gen_range(28.0..40.0));
        let light = center + Vec3::new(rng.gen_range(-20.0..20.0), rng.gen_range(-15.0..15.0), rng.gen_range(15.0..30.0));
        let pose = CameraPose::look_at(cam_at, center, Vec3::y()).map_err(|e| e.to_string())?;
        let camera = Camera::new(intr, pose);
        let exact = reflection_point(&center, radius, &cam_at, &light).ok_or(format!("rig {rig}: no reflection"))?;
        let dense = brute_force_glint(&center, radius, &cam_at, &light, 1_000_000);
        let a = camera.project(&exact).map_err(|e| e.to_string())?;
        let b = camera.project(&dense).map_err(|e| e.to_string())?;
        worst = worst.max((a - b).norm());
    }
    if worst > 0.5 {
        return Err(format!("worst disagreement {worst:.3} px exceeds 0.5 px"));
    }
    Ok(format!("100 rigs within {worst:.3} px"))
}
