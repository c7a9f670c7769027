//! Pupil-centroid and glint-offset polynomial regression.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::camera::{Vec2, Vec3};
use crate::error::{Error, Result};
use crate::image::QuantizedImage;
use crate::metrics::{gaze_from_pitch_yaw, pitch_yaw};

pub const DEFAULT_DARK_THRESHOLD: f64 = 0.05;
/// Codes at or above this count as specular highlights.
pub const GLINT_CODE: u8 = 250;
/// Pixel scale applied to centroid coordinates before the polynomial.
const COORD_SCALE: f64 = 100.0;
const MIN_SINGULAR_RATIO: f64 = 1e-10;

/// Centroid of the dark pupil blob, in pixels (pixel centers at +0.5).
///
/// Pixels darker than the `dark_threshold` intensity quantile form the
/// mask. Among its 8-connected components, those clear of the image border
/// are preferred, since the unlit periphery of the face reaches the frame
/// edge. Within that, components are ranked by how many of their pixels
/// fall in the darker of the two modes inside the mask, so a small but
/// deep pupil beats a wide, shallow shadow of skin; area breaks ties.
pub fn pupil_centroid(img: &QuantizedImage, dark_threshold: f64) -> Result<Vec2> {
    Ok(pupil_blob(img, dark_threshold)?.centroid)
}

struct Blob {
    centroid: Vec2,
    area: usize,
}

fn quantile_code(img: &QuantizedImage, q: f64) -> u8 {
    let mut hist = [0usize; 256];
    for &c in img.codes() {
        hist[c as usize] += 1;
    }
    let n = img.codes().len();
    let rank = ((q * n as f64).ceil() as usize).clamp(1, n);
    let mut acc = 0;
    for (code, &h) in hist.iter().enumerate() {
        acc += h;
        if acc >= rank {
            return code as u8;
        }
    }
    255
}

/// Iterative intermeans split of the codes at or below `cut`: the midpoint
/// between the means of the two classes it separates.
fn intermeans(codes: &[u8], cut: u8) -> u8 {
    let mut hist = [0u64; 256];
    for &c in codes.iter().filter(|&&c| c <= cut) {
        hist[c as usize] += 1;
    }
    let mean = |r: std::ops::RangeInclusive<usize>| {
        let (n, s) = r.fold((0u64, 0u64), |(n, s), c| (n + hist[c], s + hist[c] * c as u64));
        (n > 0).then(|| s as f64 / n as f64)
    };
    let mut t = mean(0..=cut as usize).unwrap_or(0.0).floor() as usize;
    for _ in 0..256 {
        let lo = mean(0..=t).unwrap_or(0.0);
        let hi = mean(t + 1..=cut as usize).unwrap_or(cut as f64);
        let next = ((lo + hi) / 2.0).floor() as usize;
        if next == t {
            break;
        }
        t = next;
    }
    t as u8
}

fn pupil_blob(img: &QuantizedImage, dark_threshold: f64) -> Result<Blob> {
    if !(dark_threshold > 0.0 && dark_threshold < 1.0) {
        return Err(Error::invalid(format!("dark threshold must be in (0, 1), got {dark_threshold}")));
    }
    let codes = img.codes();
    let (lo, hi) = codes.iter().fold((255u8, 0u8), |(lo, hi), &c| (lo.min(c), hi.max(c)));
    if lo == hi {
        return Err(Error::NoPupil);
    }
    let t = quantile_code(img, dark_threshold);
    if t == 255 {
        return Err(Error::NoPupil);
    }
    // Strictly darker than the quantile code, unless that leaves nothing.
    let cut = if t > lo { t - 1 } else { t };
    let (w, h) = (img.width(), img.height());
    let mut label = vec![u32::MAX; w * h];
    let mut stack = Vec::new();
    let core_cut = intermeans(codes, cut);
    let mut best: Option<((bool, usize, usize), f64, f64)> = None;
    for start in 0..w * h {
        if codes[start] > cut || label[start] != u32::MAX {
            continue;
        }
        label[start] = start as u32;
        stack.push(start);
        let (mut area, mut core, mut sx, mut sy, mut border) = (0usize, 0usize, 0.0f64, 0.0f64, false);
        while let Some(p) = stack.pop() {
            let (x, y) = (p % w, p / w);
            area += 1;
            core += usize::from(codes[p] <= core_cut);
            border |= x == 0 || y == 0 || x + 1 == w || y + 1 == h;
            sx += x as f64 + 0.5;
            sy += y as f64 + 0.5;
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                    if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                        continue;
                    }
                    let q = ny as usize * w + nx as usize;
                    if codes[q] <= cut && label[q] == u32::MAX {
                        label[q] = start as u32;
                        stack.push(q);
                    }
                }
            }
        }
        let rank = (!border, core, area);
        if best.is_none_or(|(b_rank, _, _)| rank > b_rank) {
            best = Some((rank, sx, sy));
        }
    }
    let ((_, _, area), sx, sy) = best.ok_or(Error::NoPupil)?;
    Ok(Blob { centroid: Vec2::new(sx / area as f64, sy / area as f64), area })
}

/// Centroid of near-saturated pixels within reach of the pupil, if any.
fn glint_centroid(img: &QuantizedImage, pupil: &Blob) -> Option<Vec2> {
    let r = 2.0 * (pupil.area as f64 / std::f64::consts::PI).sqrt() + 10.0;
    let (w, h) = (img.width() as f64, img.height() as f64);
    let c = pupil.centroid;
    let x0 = (c.x - r).floor().max(0.0) as usize;
    let x1 = (c.x + r).ceil().min(w) as usize;
    let y0 = (c.y - r).floor().max(0.0) as usize;
    let y1 = (c.y + r).ceil().min(h) as usize;
    let (mut n, mut sx, mut sy) = (0usize, 0.0, 0.0);
    for y in y0..y1 {
        for x in x0..x1 {
            let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
            if img.get(x, y) >= GLINT_CODE && (px - c.x).powi(2) + (py - c.y).powi(2) <= r * r {
                n += 1;
                sx += px;
                sy += py;
            }
        }
    }
    (n > 0).then(|| Vec2::new(sx / n as f64, sy / n as f64))
}

/// Image measurements the geometric model regresses on: pupil centroid
/// relative to the image center and glint-constellation offset from the
/// pupil, both in units of 100 px. A missing glint gives a zero offset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PupilGlint {
    pub u: f64,
    pub v: f64,
    pub ox: f64,
    pub oy: f64,
}

pub fn pupil_glint_features(img: &QuantizedImage, dark_threshold: f64) -> Result<PupilGlint> {
    let blob = pupil_blob(img, dark_threshold)?;
    let c = blob.centroid;
    let off = glint_centroid(img, &blob).map(|g| g - c).unwrap_or_else(Vec2::zeros);
    Ok(PupilGlint {
        u: (c.x - img.width() as f64 / 2.0) / COORD_SCALE,
        v: (c.y - img.height() as f64 / 2.0) / COORD_SCALE,
        ox: off.x / COORD_SCALE,
        oy: off.y / COORD_SCALE,
    })
}

impl PupilGlint {
    /// Degree-2 design row: six centroid monomials, then six glint terms.
    fn terms(&self, glints: bool) -> Vec<f64> {
        let (u, v, ox, oy) = (self.u, self.v, self.ox, self.oy);
        let mut t = vec![1.0, u, v, u * u, u * v, v * v];
        if glints {
            t.extend([ox, oy, ox * ox, ox * oy, oy * oy, u * ox + v * oy]);
        }
        t
    }
}

/// Polynomial map from pupil/glint measurements to (pitch, yaw) degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometricGazeModel {
    pub degree: u32,
    pub use_glints: bool,
    pub dark_threshold: f64,
    /// One (pitch, yaw) coefficient pair per design term.
    pub coefficients: Vec<[f64; 2]>,
    #[serde(default)]
    pub train_identities: Vec<u64>,
}

impl GeometricGazeModel {
    pub fn coefficient_count(use_glints: bool) -> usize {
        if use_glints {
            12
        } else {
            6
        }
    }

    pub fn predict_features(&self, f: &PupilGlint) -> Vec3 {
        let (mut pitch, mut yaw) = (0.0, 0.0);
        for (t, c) in f.terms(self.use_glints).iter().zip(&self.coefficients) {
            pitch += t * c[0];
            yaw += t * c[1];
        }
        gaze_from_pitch_yaw(pitch, yaw)
    }

    pub fn predict(&self, img: &QuantizedImage) -> Result<Vec3> {
        Ok(self.predict_features(&pupil_glint_features(img, self.dark_threshold)?))
    }
}

/// Least-squares fit of each output angle on the degree-2 design.
///
/// When no training frame shows a glint (for example in very dark
/// images), the glint terms carry no information and are dropped. They are
/// also dropped when too few frames show one for the glint columns to be
/// independent, as happens under heavy blur.
pub fn fit_geometric(
    features: &[PupilGlint],
    gazes: &[Vec3],
    use_glints: bool,
    dark_threshold: f64,
) -> Result<GeometricGazeModel> {
    let with_glints = use_glints && features.iter().any(|f| f.ox != 0.0 || f.oy != 0.0);
    match fit_terms(features, gazes, with_glints, dark_threshold) {
        Err(Error::IllConditioned(_)) if with_glints => fit_terms(features, gazes, false, dark_threshold),
        other => other,
    }
}

fn fit_terms(
    features: &[PupilGlint],
    gazes: &[Vec3],
    use_glints: bool,
    dark_threshold: f64,
) -> Result<GeometricGazeModel> {
    let k = GeometricGazeModel::coefficient_count(use_glints);
    if features.len() != gazes.len() {
        return Err(Error::invalid("feature and label counts differ"));
    }
    if features.len() < k {
        return Err(Error::invalid(format!("geometric fit needs at least {k} frames, got {}", features.len())));
    }
    let rows: Vec<Vec<f64>> = features.iter().map(|f| f.terms(use_glints)).collect();
    let x = DMatrix::from_fn(rows.len(), k, |i, j| rows[i][j]);
    let y = DMatrix::from_fn(gazes.len(), 2, |i, c| {
        let (p, yw) = pitch_yaw(&gazes[i]);
        if c == 0 {
            p
        } else {
            yw
        }
    });
    let svd = x.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > MIN_SINGULAR_RATIO * smax) {
        return Err(Error::IllConditioned(format!(
            "geometric design matrix is rank deficient (singular values {smin:e} / {smax:e})"
        )));
    }
    let coef = svd.solve(&y, 0.0).map_err(|e| Error::IllConditioned(e.to_string()))?;
    Ok(GeometricGazeModel {
        degree: 2,
        use_glints,
        dark_threshold,
        coefficients: (0..k).map(|j| [coef[(j, 0)], coef[(j, 1)]]).collect(),
        train_identities: Vec::new(),
    })
}
