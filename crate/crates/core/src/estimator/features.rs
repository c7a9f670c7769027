//! Appearance features: block means of the 8-bit image.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::QuantizedImage;

/// Downsample grid, rows by columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid {
    pub height: usize,
    pub width: usize,
}

impl Default for Grid {
    fn default() -> Self {
        Self { height: 30, width: 40 }
    }
}

impl Grid {
    pub fn len(&self) -> usize {
        self.height * self.width
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Block means of `img` on `grid`, scaled to [0, 1]. Block edges fall at
/// `floor(k * size / cells)`, which tiles exactly when sizes divide.
pub fn block_means(img: &QuantizedImage, grid: Grid) -> Result<Vec<f32>> {
    let (w, h) = (img.width(), img.height());
    if grid.is_empty() || grid.width > w || grid.height > h {
        return Err(Error::invalid(format!(
            "a {}x{} image cannot be reduced to a {}x{} grid",
            w, h, grid.width, grid.height
        )));
    }
    let xs: Vec<usize> = (0..=grid.width).map(|k| k * w / grid.width).collect();
    let ys: Vec<usize> = (0..=grid.height).map(|k| k * h / grid.height).collect();
    let codes = img.codes();
    // Column sums within each block row, then fold columns into cells.
    let mut out = Vec::with_capacity(grid.len());
    let mut col = vec![0u32; w];
    for gy in 0..grid.height {
        col.iter_mut().for_each(|c| *c = 0);
        for y in ys[gy]..ys[gy + 1] {
            for (c, &v) in col.iter_mut().zip(&codes[y * w..(y + 1) * w]) {
                *c += v as u32;
            }
        }
        let rows = (ys[gy + 1] - ys[gy]) as f64;
        for gx in 0..grid.width {
            let s: u32 = col[xs[gx]..xs[gx + 1]].iter().sum();
            let n = rows * (xs[gx + 1] - xs[gx]) as f64;
            out.push((s as f64 / (n * 255.0)) as f32);
        }
    }
    Ok(out)
}

/// Feature vector with a trailing bias entry. With `stats`, each block mean
/// is standardized by the training `(mean, std)`; without, it is returned
/// as is.
pub fn featurize(img: &QuantizedImage, grid: Grid, stats: Option<(&[f64], &[f64])>) -> Result<Vec<f64>> {
    let raw = block_means(img, grid)?;
    let mut f: Vec<f64> = match stats {
        Some((mean, std)) => {
            if mean.len() != raw.len() || std.len() != raw.len() {
                return Err(Error::invalid("normalization statistics do not match the grid"));
            }
            raw.iter()
                .zip(mean.iter().zip(std))
                .map(|(&v, (m, s))| (v as f64 - m) / s)
                .collect()
        }
        None => raw.iter().map(|&v| v as f64).collect(),
    };
    f.push(1.0);
    Ok(f)
}
