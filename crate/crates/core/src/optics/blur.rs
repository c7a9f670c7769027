//! Aperture disk PSF and zero-padded FFT convolution.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::image::LinearImage;

/// Square, odd-sided convolution kernel stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    radius: usize,
    weights: Vec<f64>,
}

impl Kernel {
    /// Half-width; the side length is `2 * radius + 1`.
    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn side(&self) -> usize {
        2 * self.radius + 1
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weight at row `y`, column `x` of the kernel.
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.weights[y * self.side() + x]
    }

    pub fn sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn is_identity(&self) -> bool {
        self.radius == 0
    }
}

/// Uniform disk of the given radius in pixels, normalized to unit sum.
pub fn disk_psf(radius: f64) -> Result<Kernel> {
    if !(radius >= 0.0 && radius.is_finite()) {
        return Err(Error::invalid(format!("blur radius must be finite and >= 0, got {radius}")));
    }
    let r = radius.ceil() as usize;
    let side = 2 * r + 1;
    let mut mask = vec![false; side * side];
    let mut count = 0usize;
    for y in 0..side {
        for x in 0..side {
            let (dx, dy) = (x as f64 - r as f64, y as f64 - r as f64);
            if dx * dx + dy * dy <= radius * radius {
                mask[y * side + x] = true;
                count += 1;
            }
        }
    }
    // Every nonzero tap shares one value, so normalizing by the count keeps
    // the sum as close to 1 as f64 allows.
    let w = 1.0 / count as f64;
    let weights = mask.iter().map(|&m| if m { w } else { 0.0 }).collect();
    Ok(Kernel { radius: r, weights })
}

/// Smallest size >= n whose only prime factors are 2, 3 and 5.
fn fast_len(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut k = m;
        for p in [2, 3, 5] {
            while k.is_multiple_of(p) {
                k /= p;
            }
        }
        if k == 1 {
            return m;
        }
        m += 1;
    }
}

/// Convolution with a fixed kernel for images of a fixed size. Planning
/// and the kernel spectrum are computed once and reused.
pub struct Convolver {
    width: usize,
    height: usize,
    pw: usize,
    ph: usize,
    identity: bool,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
    /// Kernel spectrum in column-major (transposed) layout, pre-scaled by
    /// the inverse transform normalization.
    spectrum: Vec<Complex<f64>>,
}

impl std::fmt::Debug for Convolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Convolver")
            .field("width", &self.width)
            .field("height", &self.height)
            .field("padded", &(self.pw, self.ph))
            .finish()
    }
}

impl Convolver {
    pub fn new(kernel: &Kernel, width: usize, height: usize) -> Result<Self> {
        let side = kernel.side();
        if side > width || side > height {
            return Err(Error::KernelTooLarge { side, width, height });
        }
        let sum = kernel.sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("kernel must sum to 1, sums to {sum}")));
        }
        let r = kernel.radius();
        // Circular convolution on (n + r) samples equals linear convolution
        // on the cropped window.
        let (pw, ph) = (fast_len(width + r), fast_len(height + r));
        let mut planner = FftPlanner::new();
        let mut conv = Self {
            width,
            height,
            pw,
            ph,
            identity: kernel.is_identity(),
            row_fwd: planner.plan_fft_forward(pw),
            row_inv: planner.plan_fft_inverse(pw),
            col_fwd: planner.plan_fft_forward(ph),
            col_inv: planner.plan_fft_inverse(ph),
            spectrum: Vec::new(),
        };
        if conv.identity {
            return Ok(conv);
        }
        let mut buf = vec![Complex::new(0.0, 0.0); pw * ph];
        for ky in 0..side {
            for kx in 0..side {
                let w = kernel.get(kx, ky);
                if w != 0.0 {
                    let x = (kx + pw - r) % pw;
                    let y = (ky + ph - r) % ph;
                    buf[y * pw + x] = Complex::new(w, 0.0);
                }
            }
        }
        let mut spectrum = conv.forward(buf, ph);
        let scale = 1.0 / (pw * ph) as f64;
        spectrum.iter_mut().for_each(|c| *c *= scale);
        conv.spectrum = spectrum;
        Ok(conv)
    }

    /// 2-D forward transform of a row-major padded buffer whose first
    /// `rows` rows may be nonzero; returns the spectrum transposed.
    fn forward(&self, mut buf: Vec<Complex<f64>>, rows: usize) -> Vec<Complex<f64>> {
        let (pw, ph) = (self.pw, self.ph);
        self.row_fwd.process(&mut buf[..rows * pw]);
        let mut t = transpose(&buf, pw, ph);
        self.col_fwd.process(&mut t);
        t
    }

    pub fn apply(&self, img: &LinearImage) -> Result<LinearImage> {
        if img.width() != self.width || img.height() != self.height {
            return Err(Error::invalid(format!(
                "convolver built for {}x{}, got {}x{}",
                self.width,
                self.height,
                img.width(),
                img.height()
            )));
        }
        if self.identity {
            return Ok(img.clone());
        }
        let (w, h, pw, ph) = (self.width, self.height, self.pw, self.ph);
        let mut buf = vec![Complex::new(0.0, 0.0); pw * ph];
        for (y, row) in img.values().chunks_exact(w).enumerate() {
            for (dst, &v) in buf[y * pw..y * pw + w].iter_mut().zip(row) {
                dst.re = v as f64;
            }
        }
        let mut t = self.forward(buf, h);
        for (a, k) in t.iter_mut().zip(&self.spectrum) {
            *a *= k;
        }
        self.col_inv.process(&mut t);
        let mut back = transpose(&t, ph, pw);
        self.row_inv.process(&mut back[..h * pw]);
        let mut out = Vec::with_capacity(w * h);
        for y in 0..h {
            out.extend(back[y * pw..y * pw + w].iter().map(|c| c.re as f32));
        }
        Ok(LinearImage::from_raw(w, h, out))
    }
}

/// Transposes a row-major `cols`-wide, `rows`-tall buffer.
fn transpose(src: &[Complex<f64>], cols: usize, rows: usize) -> Vec<Complex<f64>> {
    const B: usize = 32;
    let mut dst = vec![Complex::new(0.0, 0.0); src.len()];
    for y0 in (0..rows).step_by(B) {
        for x0 in (0..cols).step_by(B) {
            for y in y0..(y0 + B).min(rows) {
                for x in x0..(x0 + B).min(cols) {
                    dst[x * rows + y] = src[y * cols + x];
                }
            }
        }
    }
    dst
}

/// Linear convolution with zero padding, cropped to the input size.
pub fn convolve(img: &LinearImage, psf: &Kernel) -> Result<LinearImage> {
    Convolver::new(psf, img.width(), img.height())?.apply(img)
}
